"""Zero-mean circular complex Gaussian log-densities.

``log CN(z; 0, C) = -z^H C^{-1} z - M log(pi) - log det C``, evaluated through
a Cholesky factor of ``C``.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular


class NumericalError(RuntimeError):
    pass


def _cholesky(C: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(C)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("covariance is not positive definite") from exc


def forward_substitution(L: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``L y = b`` for a stack of lower-triangular ``L`` (shape ``(P, M, M)``).

    ``b`` has shape ``(M,)`` or ``(P, M)``.
    """
    P, M, _ = L.shape
    b = np.broadcast_to(b, (P, M))
    y = np.empty((P, M), dtype=np.result_type(L, b))
    for i in range(M):
        acc = b[:, i]
        if i:
            acc = acc - np.einsum("pk,pk->p", L[:, i, :i], y[:, :i])
        y[:, i] = acc / L[:, i, i]
    return y


def cn_logpdf(z: np.ndarray, C: np.ndarray) -> float:
    """Log-density of ``z`` under ``CN(0, C)`` for a single covariance."""
    L = _cholesky(C)
    v = solve_triangular(L, z, lower=True)
    M = z.shape[-1]
    logdet = 2.0 * np.sum(np.log(np.real(np.diag(L))))
    return float(-np.vdot(v, v).real - M * np.log(np.pi) - logdet)


def cn_logpdf_batch(z: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Log-density of one ``z`` under each covariance in the stack ``C`` (``(P, M, M)``)."""
    L = _cholesky(C)
    y = forward_substitution(L, z)
    M = z.shape[-1]
    diag = np.real(np.diagonal(L, axis1=1, axis2=2))
    logdet = 2.0 * np.sum(np.log(diag), axis=1)
    return -np.sum(np.abs(y) ** 2, axis=1) - M * np.log(np.pi) - logdet


def cn_logpdf_rank1(z: np.ndarray, C_base: np.ndarray, gamma: np.ndarray, H: np.ndarray):
    """Log-densities under ``C_base + gamma_p h_p h_p^H`` for many ``(gamma_p, h_p)``.

    Uses the matrix determinant lemma and Sherman-Morrison on a single
    Cholesky factor of ``C_base``; exact, ``O(M^2)`` per particle.

    Returns
    -------
    base : float
        ``log CN(z; 0, C_base)``.
    delta : ndarray, shape (P,)
        ``log CN(z; 0, C_base + gamma_p h_p h_p^H) - base``.
    """
    L = _cholesky(C_base)
    v = solve_triangular(L, z, lower=True)
    M = z.shape[-1]
    logdet = 2.0 * np.sum(np.log(np.real(np.diag(L))))
    base = float(-np.vdot(v, v).real - M * np.log(np.pi) - logdet)
    if H.shape[0] == 0:
        return base, np.zeros(0)
    U = solve_triangular(L, H.T, lower=True)  # (M, P)
    a = np.sum(np.abs(U) ** 2, axis=0)
    b = U.conj().T @ v
    denom = 1.0 + gamma * a
    delta = -np.log(denom) + gamma * np.abs(b) ** 2 / denom
    return base, delta


def normalize_log_weights(log_w: np.ndarray) -> np.ndarray:
    """Normalised weights from log-weights by max subtraction."""
    log_w = np.asarray(log_w, dtype=float)
    m = np.max(log_w)
    if not np.isfinite(m):
        raise NumericalError("all log-weights are -inf or non-finite")
    w = np.exp(log_w - m)
    return w / w.sum()
