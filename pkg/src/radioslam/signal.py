"""Frequency-domain signal model: pulse grid, contribution vectors,
synthetic received signals and the matched-filter delay spectrum."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


class AliasingError(ValueError):
    """A path is longer than the unambiguous observation distance."""


@dataclass(frozen=True)
class SignalSpec:
    """Sampling grid of the baseband spectrum.

    ``M = B/delta + 1`` frequency samples spaced ``delta`` apart and centred
    on zero. The delay grid step is ``T_s = 1/(M delta)``, so the ``M`` delay
    cells of width ``c T_s`` tile ``[0, d_max]`` with ``d_max = c/delta``.
    """

    f_c: float
    bandwidth: float
    delta: float
    pulse_spectrum: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.f_c <= 0 or self.delta <= 0:
            raise ValueError("f_c and delta must be positive")
        if self.bandwidth < 0:
            raise ValueError("bandwidth must be >= 0 (0 gives a single frequency bin)")
        ratio = self.bandwidth / self.delta
        n = round(ratio)
        if abs(ratio - n) > 1e-9 * max(1.0, ratio):
            raise ValueError(f"bandwidth/delta = {ratio} is not an integer")
        if n % 2:
            raise ValueError(f"bandwidth/delta = {n} must be even so that M is odd")
        if self.pulse_spectrum is None:
            spectrum = np.ones(n + 1)
        else:
            spectrum = np.asarray(self.pulse_spectrum, dtype=float)
            if spectrum.shape != (n + 1,):
                raise ValueError(f"pulse_spectrum must have length M = {n + 1}")
            if np.any(spectrum < 0):
                raise ValueError("pulse_spectrum entries must be >= 0")
        object.__setattr__(self, "pulse_spectrum", spectrum)

    @property
    def M(self) -> int:
        return self.pulse_spectrum.shape[0]

    @property
    def frequencies(self) -> np.ndarray:
        M = self.M
        return (np.arange(M) - (M - 1) / 2) * self.delta

    @property
    def T_s(self) -> float:
        return 1.0 / (self.M * self.delta)

    @property
    def d_max(self) -> float:
        return SPEED_OF_LIGHT / self.delta

    @property
    def cell_width(self) -> float:
        """Range extent (m) of one delay cell."""
        return SPEED_OF_LIGHT * self.T_s

    @property
    def delay_grid(self) -> np.ndarray:
        return np.arange(self.M) * self.T_s

    @property
    def energy(self) -> float:
        """``||h(t)||^2``, identical for every delay."""
        return float(np.sum(self.pulse_spectrum**2))


def contribution_vector(t, spec: SignalSpec) -> np.ndarray:
    """Delayed pulse spectrum ``h(t)``.

    ``t`` may be a scalar or an array of delays; the frequency axis is
    appended as the last dimension.
    """
    t = np.asarray(t, dtype=float)
    phase = np.multiply.outer(t, -2j * np.pi * spec.frequencies)
    return spec.pulse_spectrum * np.exp(phase)


@dataclass(frozen=True)
class AmplitudeModel:
    """Deterministic part of the complex path gain.

    The magnitude of path ``l`` is ``a_l * c / (4 pi f_c d_l)``. With
    ``normalize_at_1m`` the free-space factor is divided by its value at
    1 m, which gives unit path power at 1 m; the receiver noise variance is
    then directly the inverse of the 1 m SNR.
    """

    f_c: float
    normalize_at_1m: bool = True
    phase_per_step: bool = True

    def free_space(self, d) -> np.ndarray:
        d = np.asarray(d, dtype=float)
        g = SPEED_OF_LIGHT / (4 * np.pi * self.f_c * d)
        if self.normalize_at_1m:
            g = g / (SPEED_OF_LIGHT / (4 * np.pi * self.f_c))
        return g

    def amplitudes(self, path_lengths, magnitudes, random_phases) -> np.ndarray:
        d = np.asarray(path_lengths, dtype=float)
        a = np.asarray(magnitudes, dtype=float)
        if np.any(a <= 0) or np.any(a > 1):
            raise ValueError("reflection magnitudes must lie in (0, 1]")
        t = d / SPEED_OF_LIGHT
        return (
            a
            * np.exp(1j * np.asarray(random_phases))
            * np.exp(-2j * np.pi * self.f_c * t)
            * self.free_space(d)
        )


def synthesize_received(
    path_lengths,
    magnitudes,
    spec: SignalSpec,
    amp: AmplitudeModel,
    eta: float,
    rng: np.random.Generator,
    phases=None,
) -> np.ndarray:
    """Sum of delayed pulses with complex gains plus circular white noise.

    ``phases`` are the random phases of the reflection coefficients; they are
    drawn uniformly from ``[0, 2 pi)`` when omitted. ``eta = 0`` yields the
    noiseless signal.
    """
    d = np.atleast_1d(np.asarray(path_lengths, dtype=float))
    mags = np.atleast_1d(np.asarray(magnitudes, dtype=float))
    if eta < 0:
        raise ValueError("eta must be non-negative")
    if np.any(d >= spec.d_max):
        raise AliasingError(f"path length {d.max():.3f} m >= d_max = {spec.d_max:.3f} m")
    if np.any(d <= 0):
        raise ValueError("path lengths must be positive")
    if phases is None:
        phases = rng.uniform(0.0, 2 * np.pi, size=d.shape)
    z = np.zeros(spec.M, dtype=complex)
    if d.size:
        rho = amp.amplitudes(d, mags, phases)
        z += rho @ contribution_vector(d / SPEED_OF_LIGHT, spec)
    if eta > 0:
        noise = rng.standard_normal((2, spec.M))
        z += np.sqrt(eta / 2) * (noise[0] + 1j * noise[1])
    return z


def matched_filter_spectrum(z, spec: SignalSpec) -> np.ndarray:
    """``|h(tau_m)^H z|`` on the delay grid ``tau_m = (m-1) T_s``."""
    H = contribution_vector(spec.delay_grid, spec)
    return np.abs(H.conj() @ np.asarray(z))
