"""Asymptotic covariance of the estimator and Wald tests on ``d``.

Notation: ``E = diag(exp(i*pi*d_k/2))``, ``Gc = Re[E G0 E^H]`` and
``g = Im[E G0 E^H]``. With ``A = Gc o inv(Gc) + I`` (``o`` is the
entrywise product of ``Gc`` with its matrix inverse, *not* an entrywise
reciprocal) the limiting covariance of ``sqrt(m) (d_hat - d0)`` is

    Omega = 0.5 * inv(A) Sigma inv(A)
    Sigma = A + (inv(Gc) g inv(Gc)) o g - (inv(Gc) g) o (inv(Gc) g)^T
"""

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import NumericalError

PSD_FLOOR = 1e-9


@dataclass(frozen=True)
class AsymptoticCov:
    G0_hat: np.ndarray
    script_G: np.ndarray
    little_g: np.ndarray
    Sigma: np.ndarray
    Omega: np.ndarray
    d_used: np.ndarray


@dataclass(frozen=True)
class WaldTest:
    R: np.ndarray
    nu: np.ndarray
    T: float
    dof: int
    p_value: float


def corrected_g(d_hat, g_hat) -> np.ndarray:
    """Rescale ``G(d_hat)`` entrywise by ``1/cos(pi*(d_r - d_s)/2)``."""
    d = np.atleast_1d(np.asarray(d_hat, dtype=float))
    G = np.atleast_2d(np.asarray(g_hat, dtype=float))
    diff = d[:, None] - d[None, :]
    if np.any(np.abs(diff) >= 1 - 1e-9):
        raise NumericalError("correction is singular: |d_r - d_s| too close to 1")
    return G / np.cos(np.pi * diff / 2.0)


def omega(d, G0) -> AsymptoticCov:
    d = np.atleast_1d(np.asarray(d, dtype=float))
    G0 = np.atleast_2d(np.asarray(G0, dtype=float))
    if G0.shape != (d.size, d.size):
        raise ValueError(f"G0 has shape {G0.shape}, expected {(d.size, d.size)}")
    phase = np.exp(1j * np.pi * d / 2.0)
    rotated = phase[:, None] * G0 * np.conj(phase)[None, :]
    Gc = rotated.real
    g = rotated.imag
    try:
        Gc_inv = np.linalg.inv(Gc)
    except np.linalg.LinAlgError:
        raise np.linalg.LinAlgError("Re[E G0 E^H] is singular") from None
    q = d.size
    A = Gc * Gc_inv + np.eye(q)
    B = Gc_inv @ g
    Sigma = A + (B @ Gc_inv) * g - B * B.T
    A_inv = np.linalg.inv(A)
    Om = 0.5 * A_inv @ Sigma @ A_inv
    Om = 0.5 * (Om + Om.T)
    return AsymptoticCov(G0_hat=G0, script_G=Gc, little_g=g, Sigma=Sigma, Omega=Om, d_used=d)


def floor_psd(M, tol: float = PSD_FLOOR) -> np.ndarray:
    """Clip slightly negative eigenvalues of a symmetric matrix to zero."""
    M = 0.5 * (M + M.T)
    vals, vecs = np.linalg.eigh(M)
    if vals.min() >= 0:
        return M
    if vals.min() < -tol:
        raise NumericalError(f"covariance has eigenvalue {vals.min():.3g} below -{tol}")
    vals = np.clip(vals, 0.0, None)
    return (vecs * vals) @ vecs.T


def chi2_sf(x: float, s: int) -> float:
    """Upper tail ``P(chi2_s > x)`` as the regularized incomplete gamma ``Q(s/2, x/2)``."""
    if s < 1:
        raise ValueError("degrees of freedom must be >= 1")
    if x <= 0:
        return 1.0
    return float(special.gammaincc(s / 2.0, x / 2.0))


def wald_test(R, nu, d_hat, Omega_hat, m: int) -> WaldTest:
    """``T = m (R d - nu)' inv(R Omega R') (R d - nu)`` against ``chi2_s``."""
    R = np.atleast_2d(np.asarray(R, dtype=float))
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    d = np.atleast_1d(np.asarray(d_hat, dtype=float))
    s, q = R.shape
    if q != d.size or nu.size != s:
        raise ValueError(f"R is {s}x{q}, nu has {nu.size} entries, d has {d.size}")
    if s > q or np.linalg.matrix_rank(R) < s:
        raise ValueError("R must have full row rank")
    Om = floor_psd(np.asarray(Omega_hat, dtype=float))
    V = R @ Om @ R.T
    if np.linalg.cond(V) > 1e12:
        raise ValueError("R Omega R' is singular")
    r = R @ d - nu
    T = float(m * r @ np.linalg.solve(V, r))
    T = max(T, 0.0)
    return WaldTest(R=R, nu=nu, T=T, dof=s, p_value=chi2_sf(T, s))


def common_d_restriction(q: int):
    """``R = [I_{q-1} 0] - [0 I_{q-1}]``, ``nu = 0``: all memory parameters equal."""
    if q < 2:
        raise ValueError("common-d test needs q >= 2")
    R = np.eye(q - 1, q) - np.eye(q - 1, q, k=1)
    return R, np.zeros(q - 1)


def i0_restriction(q: int):
    """``R = I_q``, ``nu = 0``: every component is I(0)."""
    return np.eye(q), np.zeros(q)


def fit_inference(fit) -> dict:
    """Corrected G, Omega-hat and standard errors for a :class:`GseFit`."""
    Gc = corrected_g(fit.d_hat, fit.g_hat)
    cov = omega(fit.d_hat, Gc)
    Om = floor_psd(cov.Omega)
    se = np.sqrt(np.diag(Om) / fit.m)
    return {"g_corrected": Gc, "cov": cov, "omega": Om, "std_err": se}
