"""State transition samplers and the birth model.

All samplers are vectorised: a leading particle axis is carried through
unchanged, so the same function moves one state or ``P`` of them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signal import SPEED_OF_LIGHT, SignalSpec


@dataclass(frozen=True)
class ModelConfig:
    """Inference model parameters. Defaults are the synthetic-data setup."""

    sigma_x2: float = 1e-4  # agent acceleration noise, m^2/s^2
    dt: float = 1.0
    sigma_p_pa2: float = 1e-8
    sigma_p_va2: float = 9e-6
    sigma_gamma2: float = 1e-4
    p_s: float = 0.999
    p_b: float = 1e-4
    c_eta: float = 10.0
    T_dec: float = 0.5
    T_pru: float = 1e-2
    gamma_init_factor: float = 10.0
    pa_exclusion_margin: float = 0.5  # delay cells added on both sides of the PA distance band
    noise_skips_new_pfs: bool = True  # PFs proposed this step stay out of the noise update

    def __post_init__(self):
        for name in ("sigma_x2", "sigma_p_pa2", "sigma_p_va2", "sigma_gamma2", "dt", "c_eta",
                     "gamma_init_factor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("p_s", "p_b", "T_dec", "T_pru"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1)")
        if self.pa_exclusion_margin < 0:
            raise ValueError("pa_exclusion_margin must be >= 0")


def agent_transition_sample(x: np.ndarray, sigma_x2: float, dt: float, rng) -> np.ndarray:
    """Constant-velocity step for states ``[px, py, vx, vy]`` (shape ``(..., 4)``).

    The white acceleration ``w ~ N(0, sigma_x2 I)`` enters the position as
    ``dt^2 / 2 * w`` and the velocity as ``dt * w``.
    """
    x = np.asarray(x, dtype=float)
    out = x.copy()
    out[..., :2] += dt * x[..., 2:]
    if sigma_x2 > 0:
        w = np.sqrt(sigma_x2) * rng.standard_normal(x.shape[:-1] + (2,))
        out[..., :2] += 0.5 * dt**2 * w
        out[..., 2:] += dt * w
    return out


def pf_position_sample(p: np.ndarray, sigma_p2: float, rng) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if sigma_p2 <= 0:
        return p.copy()
    return p + np.sqrt(sigma_p2) * rng.standard_normal(p.shape)


def intensity_sample(gamma: np.ndarray, sigma_gamma2: float, rng) -> np.ndarray:
    """Gaussian random walk truncated at zero (negative draws are redrawn)."""
    gamma = np.asarray(gamma, dtype=float)
    if sigma_gamma2 <= 0:
        return gamma.copy()
    sd = np.sqrt(sigma_gamma2)
    out = gamma + sd * rng.standard_normal(gamma.shape)
    bad = out < 0
    while np.any(bad):
        out[bad] = gamma[bad] + sd * rng.standard_normal(int(bad.sum()))
        bad = out < 0
    return out


def pf_transition_sample(position, gamma, is_pa: bool, cfg: ModelConfig, rng):
    sigma_p2 = cfg.sigma_p_pa2 if is_pa else cfg.sigma_p_va2
    return (
        pf_position_sample(position, sigma_p2, rng),
        intensity_sample(gamma, cfg.sigma_gamma2, rng),
    )


def noise_var_transition_sample(eta, c_eta: float, rng) -> np.ndarray:
    """Gamma step with shape ``c_eta`` and scale ``eta / c_eta`` (mean ``eta``)."""
    eta = np.asarray(eta, dtype=float)
    out = rng.gamma(c_eta, eta / c_eta)
    # a Gamma draw can underflow to exactly 0 for tiny eta
    return np.maximum(out, np.finfo(float).tiny)


def birth_cell_bounds(m: int, spec: SignalSpec) -> tuple:
    """Inner and outer radius (m) of birth cell ``m`` (1-based)."""
    if not 1 <= m <= spec.M:
        raise ValueError(f"cell index {m} outside 1..{spec.M}")
    w = SPEED_OF_LIGHT * spec.T_s
    return (m - 1) * w, m * w


def birth_cell_contains(m: int, agent_p, p, spec: SignalSpec):
    if not 1 <= m <= spec.M:
        raise ValueError(f"cell index {m} outside 1..{spec.M}")
    tau = np.linalg.norm(np.asarray(p, float) - np.asarray(agent_p, float), axis=-1) / SPEED_OF_LIGHT
    return ((m - 1) * spec.T_s <= tau) & (tau <= m * spec.T_s)


def birth_existence_prob(mu_b_n: float) -> float:
    if mu_b_n < 0:
        raise ValueError("expected number of new features must be >= 0")
    return mu_b_n / (mu_b_n + 1.0)


def sample_annulus(agent_p, r_in: float, r_out: float, rng) -> np.ndarray:
    """Uniform points in the annulus ``r_in <= r <= r_out`` around each agent position."""
    agent_p = np.atleast_2d(np.asarray(agent_p, dtype=float))
    n = agent_p.shape[0]
    # radius density proportional to r on [r_in, r_out]
    u = rng.uniform(size=n)
    r = np.sqrt(r_in**2 + u * (r_out**2 - r_in**2))
    r = np.clip(r, r_in, r_out)
    theta = rng.uniform(0.0, 2 * np.pi, size=n)
    return agent_p + r[:, None] * np.column_stack((np.cos(theta), np.sin(theta)))


def birth_sample(m: int, agent_p, spec: SignalSpec, rng, gamma_max: float = 2.0):
    """Positions uniform over birth cell ``m`` and intensities uniform on ``[0, gamma_max]``.

    One sample is drawn per row of ``agent_p``.
    """
    r_in, r_out = birth_cell_bounds(m, spec)
    pos = sample_annulus(agent_p, r_in, r_out, rng)
    gamma = rng.uniform(0.0, gamma_max, size=pos.shape[0])
    return pos, gamma
