"""Particle-based belief propagation for SLAM on raw radio snapshots.

One call to :func:`step` runs the full per-time-step schedule: prediction,
proposal of new potential features (PFs), moment-matched covariance
assembly, the agent / PF / noise-variance weight updates, resampling,
declaration, estimation and pruning. Messages flow forward in time only and
are computed once per step.

Per-PA quantities are independent given the predicted agent particles, so
the PA loop could be run concurrently; it is run sequentially here.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .likelihood import NumericalError, cn_logpdf_batch, cn_logpdf_rank1, normalize_log_weights
from .models import (
    ModelConfig,
    agent_transition_sample,
    birth_sample,
    noise_var_transition_sample,
    pf_transition_sample,
)
from .signal import SPEED_OF_LIGHT, SignalSpec, contribution_vector, matched_filter_spectrum

log = logging.getLogger(__name__)

#: Agent particles per chunk when stacking ``M x M`` covariances.
CHUNK = 2048


class DegeneracyError(RuntimeError):
    """Every particle of a normalised belief received zero weight."""


@dataclass
class AgentBelief:
    states: np.ndarray  # (P, 4): px, py, vx, vy
    weights: np.ndarray  # (P,)

    @property
    def positions(self) -> np.ndarray:
        return self.states[:, :2]

    def copy(self) -> "AgentBelief":
        return AgentBelief(self.states.copy(), self.weights.copy())


@dataclass
class PFBelief:
    """Weighted particles of one potential feature.

    The weights do not sum to one; their sum is the existence probability.
    Particle ``p`` is paired with agent particle ``p`` (stacking).
    """

    pa_index: int
    label: int
    positions: np.ndarray  # (P, 2)
    gamma: np.ndarray  # (P,)
    weights: np.ndarray  # (P,)
    is_pa: bool = False
    born: int = 0

    @property
    def existence(self) -> float:
        return float(np.sum(self.weights))

    def copy(self) -> "PFBelief":
        return replace(
            self, positions=self.positions.copy(), gamma=self.gamma.copy(), weights=self.weights.copy()
        )


@dataclass
class NoiseBelief:
    values: np.ndarray  # (P',) noise variances
    weights: np.ndarray

    @property
    def mean(self) -> float:
        return float(np.dot(self.weights, self.values))

    def copy(self) -> "NoiseBelief":
        return NoiseBelief(self.values.copy(), self.weights.copy())


@dataclass
class Beliefs:
    agent: AgentBelief
    pfs: List[List[PFBelief]]
    noise: List[NoiseBelief]
    step: int = 0
    next_label: List[int] = field(default_factory=list)

    @property
    def num_pas(self) -> int:
        return len(self.pfs)

    def eta_hat(self) -> List[float]:
        return [nb.mean for nb in self.noise]

    def copy(self) -> "Beliefs":
        return Beliefs(
            self.agent.copy(),
            [[pf.copy() for pf in pfs] for pfs in self.pfs],
            [nb.copy() for nb in self.noise],
            self.step,
            list(self.next_label),
        )


@dataclass(frozen=True)
class PriorConfig:
    """Initial beliefs: disk around the start, small velocities, known PAs."""

    agent_radius: float = 0.5
    velocity_halfwidth: float = 0.01
    intensity_max: float = 2.0
    noise_max: float = 0.1

    def __post_init__(self):
        for name in ("agent_radius", "velocity_halfwidth", "intensity_max", "noise_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")


@dataclass
class CovTerms:
    """Preparatory moment-matching quantities for one PA.

    The rank-one terms ``gamma h(tau) h(tau)^H`` of every stacked particle
    pair are kept implicitly through ``gamma`` and ``tau``.
    """

    eta_bar: float
    alpha_mass: np.ndarray  # (N,)
    gamma: np.ndarray  # (N, P)
    tau: np.ndarray  # (N, P)
    C3: np.ndarray  # (N, M, M)

    @property
    def num_pfs(self) -> int:
        return self.alpha_mass.shape[0]

    @property
    def S(self) -> np.ndarray:
        """Sum of all ``C3`` terms."""
        return self.C3.sum(axis=0)


@dataclass
class DeclaredFeature:
    pa_index: int
    label: int
    position: np.ndarray
    gamma: float
    existence: float
    is_pa: bool


@dataclass
class StepEstimates:
    step: int
    agent_state: np.ndarray
    features: List[DeclaredFeature]
    eta_hat: List[float]
    existence: List[dict]  # per PA: label -> existence probability after update
    agent_weights: Optional[np.ndarray] = None  # normalised weights before resampling
    num_pfs: List[int] = field(default_factory=list)


# ---------------------------------------------------------------------------
# initialisation


def initialize_beliefs(
    start_position,
    pa_positions: Sequence,
    num_particles: int,
    num_noise_particles: int,
    cfg: ModelConfig,
    prior: PriorConfig,
    rng: np.random.Generator,
) -> Beliefs:
    P = int(num_particles)
    start = np.asarray(start_position, dtype=float)
    r = prior.agent_radius * np.sqrt(rng.uniform(size=P))
    th = rng.uniform(0, 2 * np.pi, size=P)
    pos = start + r[:, None] * np.column_stack((np.cos(th), np.sin(th)))
    vel = rng.uniform(-prior.velocity_halfwidth, prior.velocity_halfwidth, size=(P, 2))
    agent = AgentBelief(np.hstack((pos, vel)), np.full(P, 1.0 / P))
    pfs, noise = [], []
    for j, pa in enumerate(pa_positions):
        p = np.asarray(pa, float) + np.sqrt(cfg.sigma_p_pa2) * rng.standard_normal((P, 2))
        g = rng.uniform(0.0, prior.intensity_max, size=P)
        pfs.append([PFBelief(j, 0, p, g, np.full(P, 1.0 / P), is_pa=True, born=0)])
        eta = prior.noise_max * (1.0 - rng.uniform(size=num_noise_particles))  # (0, max]
        noise.append(NoiseBelief(eta, np.full(num_noise_particles, 1.0 / num_noise_particles)))
    return Beliefs(agent, pfs, noise, 0, [1] * len(pfs))


# ---------------------------------------------------------------------------
# prediction and birth


def predict_step(beliefs: Beliefs, cfg: ModelConfig, rng: np.random.Generator) -> Beliefs:
    """Draw one predicted particle per previous particle; scale PF weights by ``p_s``."""
    agent = AgentBelief(
        agent_transition_sample(beliefs.agent.states, cfg.sigma_x2, cfg.dt, rng),
        beliefs.agent.weights.copy(),
    )
    pfs = []
    for plist in beliefs.pfs:
        out = []
        for pf in plist:
            pos, gam = pf_transition_sample(pf.positions, pf.gamma, pf.is_pa, cfg, rng)
            out.append(replace(pf, positions=pos, gamma=gam, weights=cfg.p_s * pf.weights))
        pfs.append(out)
    noise = [
        NoiseBelief(noise_var_transition_sample(nb.values, cfg.c_eta, rng), nb.weights.copy())
        for nb in beliefs.noise
    ]
    return Beliefs(agent, pfs, noise, beliefs.step + 1, list(beliefs.next_label))


def strict_local_maxima(x: np.ndarray) -> np.ndarray:
    """Boolean mask of strict local maxima; end bins compare to their single neighbour."""
    x = np.asarray(x, dtype=float)
    mask = np.ones(x.shape, dtype=bool)
    if x.size > 1:
        mask[:-1] &= x[:-1] > x[1:]
        mask[1:] &= x[1:] > x[:-1]
    return mask


def proposal_cells(z, agent_positions, pa_positions, eta_hat_prev: float, spec: SignalSpec,
                   cfg: ModelConfig) -> List[int]:
    """Delay cells (1-based) that qualify for a new PF.

    A cell qualifies if its whitened matched-filter output
    ``|h(tau_m)^H z| / ||h||`` is a strict local maximum above
    ``sqrt(gamma_init_factor * eta_hat_prev)``, i.e. that many times the
    noise power, and its lower range edge lies outside the spread of agent-PA
    particle distances widened by ``pa_exclusion_margin`` cells on each side.
    """
    if eta_hat_prev <= 0:
        raise ValueError("eta_hat_prev must be > 0")
    amp = matched_filter_spectrum(z, spec) / spec.energy ** 0.5
    threshold = np.sqrt(eta_hat_prev * cfg.gamma_init_factor)
    peaks = np.flatnonzero(strict_local_maxima(amp) & (amp > threshold))
    d = np.linalg.norm(agent_positions - pa_positions, axis=1)
    margin = cfg.pa_exclusion_margin * spec.cell_width
    dmin, dmax = d.min() - margin, d.max() + margin
    cells = []
    for idx in peaks:
        r0 = idx * spec.cell_width  # (m - 1) * T_s * c with m = idx + 1
        if r0 < dmin or r0 > dmax:
            cells.append(int(idx) + 1)
    return cells


def propose_new_pfs(z, agent: AgentBelief, pa_belief: PFBelief, eta_hat_prev: float,
                    spec: SignalSpec, cfg: ModelConfig, rng: np.random.Generator,
                    first_label: int = 1, step: int = 0, gamma_max: float = 2.0) -> List[PFBelief]:
    """New PF beliefs for every qualifying cell, one particle per agent particle."""
    cells = proposal_cells(z, agent.positions, pa_belief.positions, eta_hat_prev, spec, cfg)
    P = agent.states.shape[0]
    out = []
    for i, m in enumerate(cells):
        pos, gam = birth_sample(m, agent.positions, spec, rng, gamma_max)
        out.append(
            PFBelief(pa_belief.pa_index, first_label + i, pos, gam, np.full(P, cfg.p_b / P),
                     is_pa=False, born=step)
        )
    return out


# ---------------------------------------------------------------------------
# measurement update


def compute_cov_terms(agent: AgentBelief, pfs: Sequence[PFBelief], noise: NoiseBelief,
                      spec: SignalSpec) -> CovTerms:
    """Monte Carlo moment-matching terms for one PA.

    ``C3_n = sum_p w_beta^(p) (sum_p' w_alpha^(p')) gamma^(p) h(tau^(p)) h(tau^(p))^H``,
    as printed; the total alpha mass multiplies the agent-weighted sum rather
    than each ``w_alpha^(p)`` individually. Both agree once weights are
    uniform after resampling.
    """
    N, P, M = len(pfs), agent.states.shape[0], spec.M
    gamma = np.empty((N, P))
    tau = np.empty((N, P))
    mass = np.empty(N)
    C3 = np.zeros((N, M, M), dtype=complex)
    for n, pf in enumerate(pfs):
        if pf.positions.shape[0] != P:
            raise ValueError("PF and agent particle counts differ")
        gamma[n] = pf.gamma
        tau[n] = np.linalg.norm(agent.positions - pf.positions, axis=1) / SPEED_OF_LIGHT
        mass[n] = pf.existence
    if not (np.all(np.isfinite(gamma)) and np.all(np.isfinite(tau))):
        raise NumericalError("non-finite PF intensity or delay")
    for n in range(N):
        if mass[n] == 0.0:
            continue
        h = contribution_vector(tau[n], spec)  # (P, M)
        wg = agent.weights * gamma[n]
        C3[n] = mass[n] * (h.T * wg) @ h.conj()
    eta_bar = noise.mean
    if not eta_bar > 0:
        raise NumericalError("mean noise variance must be positive")
    return CovTerms(float(eta_bar), mass, gamma, tau, C3)


def agent_covariances(cov: CovTerms, spec: SignalSpec, sl: slice = slice(None)) -> np.ndarray:
    """``eta_bar I + sum_n alpha_mass_n gamma_n^(p) h_n^(p) h_n^(p)^H`` for particles ``sl``."""
    M = spec.M
    g = cov.gamma[:, sl]  # (N, p)
    t = cov.tau[:, sl]
    p = g.shape[1]
    C = np.zeros((p, M, M), dtype=complex)
    C[:, np.arange(M), np.arange(M)] = cov.eta_bar
    active = cov.alpha_mass > 0
    if np.any(active):
        A = contribution_vector(t[active].T, spec)  # (p, N_active, M)
        A *= np.sqrt(cov.alpha_mass[active] * g[active].T)[:, :, None]
        C += np.matmul(A.transpose(0, 2, 1), A.conj())
    return C


def agent_log_likelihood(z, cov: CovTerms, spec: SignalSpec) -> np.ndarray:
    """``log CN(z; 0, C_iota(x^(p)))`` for every agent particle."""
    P = cov.tau.shape[1]
    out = np.empty(P)
    for start in range(0, P, CHUNK):
        sl = slice(start, min(P, start + CHUNK))
        out[sl] = cn_logpdf_batch(np.asarray(z), agent_covariances(cov, spec, sl))
    return out


def agent_weight_update(signals: Sequence, agent: AgentBelief, covs: Sequence[CovTerms],
                        spec: SignalSpec) -> AgentBelief:
    log_w = np.log(agent.weights)
    for z, cov in zip(signals, covs):
        log_w = log_w + agent_log_likelihood(z, cov, spec)
    try:
        w = normalize_log_weights(log_w)
    except NumericalError as exc:
        raise DegeneracyError("agent weights degenerate") from exc
    return AgentBelief(agent.states, w)


def pf_rest_covariance(cov: CovTerms, n: int, spec: SignalSpec) -> np.ndarray:
    """``C_kappa`` of PF ``n`` when it is absent: ``eta_bar I + sum_{n' != n} C3_n'``."""
    C = cov.S - cov.C3[n] + cov.eta_bar * np.eye(spec.M)
    return 0.5 * (C + C.conj().T)


def pf_covariances(cov: CovTerms, n: int, spec: SignalSpec) -> np.ndarray:
    """Dense ``C_kappa`` of PF ``n`` for every particle, given it exists (tests, diagnostics)."""
    h = contribution_vector(cov.tau[n], spec)
    outer = cov.gamma[n][:, None, None] * h[:, :, None] * h.conj()[:, None, :]
    return pf_rest_covariance(cov, n, spec) + outer


def pf_log_likelihood_ratio(z, n: int, cov: CovTerms, spec: SignalSpec):
    """Log-likelihoods of PF ``n`` relative to its absence.

    Returns ``(log_const, delta)`` where ``log_const = log CN(z; 0, C_kappa(r=0))``
    and ``delta[p] = log CN(z; 0, C_kappa(phi^(p), r=1)) - log_const``. The
    two covariances differ by the rank-one term ``gamma^(p) h h^H``.
    """
    H = contribution_vector(cov.tau[n], spec)
    return cn_logpdf_rank1(np.asarray(z), pf_rest_covariance(cov, n, spec), cov.gamma[n], H)


def pf_weight_update(z, pf: PFBelief, n: int, cov: CovTerms, spec: SignalSpec) -> PFBelief:
    """Posterior PF weights; their sum is the posterior existence probability."""
    q = pf.existence
    if q == 0.0:
        return pf.copy()
    _, delta = pf_log_likelihood_ratio(z, n, cov, spec)
    with np.errstate(divide="ignore"):
        log_num = np.log(pf.weights) + delta
        log_absent = np.log(max(0.0, 1.0 - q))
    log_den = logsumexp(np.append(log_num, log_absent))
    w = np.exp(log_num - log_den)
    # normalise against the explicit total so that rounding cannot push q above 1
    w /= w.sum() + np.exp(log_absent - log_den)
    if w.sum() > 1.0:
        w /= w.sum()
    return replace(pf, positions=pf.positions, gamma=pf.gamma, weights=w)


def noise_covariances(cov: CovTerms, values: np.ndarray, spec: SignalSpec,
                      include: Optional[np.ndarray] = None) -> np.ndarray:
    """``eta I + sum_n C3_n`` for every noise particle ``eta``.

    ``include`` masks the PFs whose ``C3`` terms enter the sum (default: all).
    """
    M = spec.M
    S = cov.S if include is None else cov.C3[np.asarray(include, bool)].sum(axis=0)
    S = 0.5 * (S + S.conj().T)
    C = np.broadcast_to(S, (values.shape[0], M, M)).copy()
    C[:, np.arange(M), np.arange(M)] += values[:, None]
    return C


def noise_weight_update(z, noise: NoiseBelief, cov: CovTerms, spec: SignalSpec,
                        include: Optional[np.ndarray] = None) -> NoiseBelief:
    ll = np.empty(noise.values.shape[0])
    for start in range(0, ll.size, CHUNK):
        sl = slice(start, min(ll.size, start + CHUNK))
        ll[sl] = cn_logpdf_batch(np.asarray(z), noise_covariances(cov, noise.values[sl], spec, include))
    try:
        w = normalize_log_weights(np.log(noise.weights) + ll)
    except NumericalError as exc:
        raise DegeneracyError("noise-variance weights degenerate") from exc
    return NoiseBelief(noise.values, w)


# ---------------------------------------------------------------------------
# resampling, declaration, pruning


def systematic_resample(weights: np.ndarray, rng: np.random.Generator, n: Optional[int] = None) -> np.ndarray:
    """Indices drawn by systematic resampling of (possibly unnormalised) weights."""
    w = np.asarray(weights, dtype=float)
    total = w.sum()
    if not total > 0 or not np.isfinite(total):
        raise DegeneracyError("cannot resample: total weight is zero or non-finite")
    n = w.size if n is None else n
    cdf = np.cumsum(w / total)
    cdf[-1] = 1.0
    u = (rng.uniform() + np.arange(n)) / n
    return np.searchsorted(cdf, u, side="right").clip(max=w.size - 1)


def effective_sample_size(weights: np.ndarray) -> float:
    w = np.asarray(weights, dtype=float)
    w = w / w.sum()
    return float(1.0 / np.sum(w**2))


def resample_agent(agent: AgentBelief, rng) -> AgentBelief:
    idx = systematic_resample(agent.weights, rng)
    P = agent.weights.size
    return AgentBelief(agent.states[idx], np.full(P, 1.0 / P))


def resample_pf(pf: PFBelief, rng) -> PFBelief:
    """Resample by the PF's own weights; the existence mass is kept."""
    q = pf.existence
    if q == 0.0:
        return pf.copy()
    idx = systematic_resample(pf.weights, rng)
    P = pf.weights.size
    return replace(pf, positions=pf.positions[idx], gamma=pf.gamma[idx], weights=np.full(P, q / P))


def resample_noise(noise: NoiseBelief, rng, min_ess_fraction: float = 0.5) -> NoiseBelief:
    P = noise.weights.size
    if effective_sample_size(noise.weights) >= min_ess_fraction * P:
        return noise.copy()
    idx = systematic_resample(noise.weights, rng)
    return NoiseBelief(noise.values[idx], np.full(P, 1.0 / P))


def declare_estimate_prune(beliefs: Beliefs, cfg: ModelConfig):
    """MMSE estimates, declared PFs (existence > ``T_dec``) and pruning.

    PFs other than the PA with existence below ``T_pru`` are removed.
    """
    a = beliefs.agent
    agent_state = a.weights @ a.states
    features, existence, kept = [], [], []
    for j, plist in enumerate(beliefs.pfs):
        ex, keep = {}, []
        for pf in plist:
            q = pf.existence
            ex[pf.label] = q
            if q > cfg.T_dec:
                pos = pf.weights @ pf.positions / q
                gam = float(pf.weights @ pf.gamma / q)
                features.append(DeclaredFeature(j, pf.label, pos, gam, q, pf.is_pa))
            if pf.is_pa or q >= cfg.T_pru:
                keep.append(pf)
        existence.append(ex)
        kept.append(keep)
    est = StepEstimates(
        step=beliefs.step,
        agent_state=agent_state,
        features=features,
        eta_hat=beliefs.eta_hat(),
        existence=existence,
        num_pfs=[len(k) for k in kept],
    )
    pruned = Beliefs(beliefs.agent, kept, beliefs.noise, beliefs.step, list(beliefs.next_label))
    return est, pruned


# ---------------------------------------------------------------------------
# full step


def measurement_update(pred: Beliefs, signals: Sequence, spec: SignalSpec, skip_new: bool = False):
    """Weight updates for the agent, every PF and every noise belief.

    With ``skip_new`` the PFs born at this step (other than the PA) are left
    out of the noise-variance covariance. They sit on the strongest
    unexplained peaks, so counting them biases the noise estimate low.
    """
    covs = [compute_cov_terms(pred.agent, pred.pfs[j], pred.noise[j], spec) for j in range(pred.num_pas)]
    agent = agent_weight_update(signals, pred.agent, covs, spec)
    pfs = [
        [pf_weight_update(signals[j], pf, n, covs[j], spec) for n, pf in enumerate(pred.pfs[j])]
        for j in range(pred.num_pas)
    ]
    if skip_new:
        inc = [np.array([pf.is_pa or pf.born < pred.step for pf in pred.pfs[j]]) for j in range(pred.num_pas)]
    else:
        inc = [None] * pred.num_pas
    noise = [noise_weight_update(signals[j], pred.noise[j], covs[j], spec, inc[j]) for j in range(pred.num_pas)]
    return Beliefs(agent, pfs, noise, pred.step, list(pred.next_label)), covs


def step(beliefs: Beliefs, signals: Sequence, cfg: ModelConfig, spec: SignalSpec,
         rng: np.random.Generator, gamma_max: float = 2.0, propose: bool = True):
    """Advance all beliefs by one time step.

    Returns the new beliefs and the step's estimates. ``propose=False``
    disables new-PF creation (used by oracle tests).
    """
    if len(signals) != beliefs.num_pas:
        raise ValueError("need one signal vector per PA")
    eta_prev = beliefs.eta_hat()
    pred = predict_step(beliefs, cfg, rng)
    if propose:
        for j in range(pred.num_pas):
            new = propose_new_pfs(signals[j], pred.agent, pred.pfs[j][0], eta_prev[j], spec, cfg, rng,
                                  first_label=pred.next_label[j], step=pred.step, gamma_max=gamma_max)
            pred.pfs[j].extend(new)
            pred.next_label[j] += len(new)
    upd, _ = measurement_update(pred, signals, spec, cfg.noise_skips_new_pfs)
    agent_weights = upd.agent.weights.copy()
    resampled = Beliefs(
        resample_agent(upd.agent, rng),
        [[resample_pf(pf, rng) for pf in plist] for plist in upd.pfs],
        [resample_noise(nb, rng) for nb in upd.noise],
        upd.step,
        upd.next_label,
    )
    est, out = declare_estimate_prune(resampled, cfg)
    est.agent_weights = agent_weights
    log.debug("step %d: PFs per PA %s, eta_hat %s", est.step, est.num_pfs, est.eta_hat)
    return out, est
