"""Gaussian VARFIMA(0, d, 0) simulation by truncated moving average.

Component ``i`` is ``X_{t,i} = sum_{k=0..K} psi_k(d_i) eps_{t-k,i}`` where
``psi_k`` are the coefficients of ``(1 - B)**(-d_i)`` and the innovation
vectors are i.i.d. Gaussian with a given correlation matrix. ``K``
presample innovations precede ``t = 1`` so every output sees a full window.

Random numbers come from numpy's counter-based Philox generator keyed by
the seed; distinct seeds give non-overlapping streams.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import signal

from .spectral import MultiSeries

DEFAULT_TRUNCATION = 50_000


@dataclass(frozen=True)
class VarfimaSpec:
    d: np.ndarray
    innovation_corr: Optional[np.ndarray] = None
    truncation: int = DEFAULT_TRUNCATION
    seed: int = 0
    n: int = 1000
    corr_factor: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        d = np.atleast_1d(np.asarray(self.d, dtype=float))
        if np.any(np.abs(d) >= 0.5):
            raise ValueError("every d_k must lie in (-0.5, 0.5)")
        q = d.size
        C = np.eye(q) if self.innovation_corr is None else np.atleast_2d(
            np.asarray(self.innovation_corr, dtype=float))
        if C.shape != (q, q):
            raise ValueError(f"innovation_corr must be {q}x{q}")
        if not np.allclose(C, C.T, atol=1e-12, rtol=0):
            raise ValueError("innovation_corr must be symmetric")
        if not np.allclose(np.diag(C), 1.0, atol=1e-12, rtol=0):
            raise ValueError("innovation_corr must have unit diagonal")
        try:
            L = np.linalg.cholesky(C)
        except np.linalg.LinAlgError:
            raise ValueError("innovation_corr is not positive definite") from None
        if self.truncation < 0 or self.n < 2:
            raise ValueError("need truncation >= 0 and n >= 2")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "innovation_corr", C)
        object.__setattr__(self, "corr_factor", L)

    @classmethod
    def bivariate(cls, d1: float, d2: float, rho: float, **kw) -> "VarfimaSpec":
        return cls(np.array([d1, d2]), np.array([[1.0, rho], [rho, 1.0]]), **kw)

    @property
    def q(self) -> int:
        return self.d.size

    def with_seed(self, seed: int) -> "VarfimaSpec":
        return VarfimaSpec(self.d, self.innovation_corr, self.truncation, seed, self.n)


def frac_ma_coeffs(d: float, K: int) -> np.ndarray:
    """``psi_0..psi_K`` of ``(1 - B)**(-d)`` by ``psi_k = psi_{k-1} (k - 1 + d) / k``."""
    if K < 0:
        raise ValueError("K must be nonnegative")
    k = np.arange(1, K + 1, dtype=float)
    return np.concatenate([[1.0], np.cumprod((k - 1.0 + d) / k)])


def truncated_variance(d: float, K: int) -> float:
    return float(np.sum(frac_ma_coeffs(d, K) ** 2))


def gaussian_stream(seed: int, count: int, corr_factor) -> np.ndarray:
    """``count`` correlated Gaussian vectors, shape ``(count, q)``.

    Standard normals ``Z`` are drawn row by row and mapped to ``Z @ L.T``.
    """
    L = np.atleast_2d(np.asarray(corr_factor, dtype=float))
    rng = np.random.Generator(np.random.Philox(seed))
    z = rng.standard_normal((count, L.shape[0]))
    return z @ L.T


def simulate(spec: VarfimaSpec, method: str = "fft") -> MultiSeries:
    """One sample path of length ``spec.n``.

    ``method="direct"`` evaluates each window sum explicitly; ``"fft"``
    uses transform convolution and agrees to rounding error.
    """
    K, n = spec.truncation, spec.n
    eps = gaussian_stream(spec.seed, n + K, spec.corr_factor)
    cols = []
    for i, di in enumerate(spec.d):
        psi = frac_ma_coeffs(di, K)
        e = eps[:, i]
        if di == 0.0:
            cols.append(e[K:].copy())
        elif method == "fft":
            cols.append(signal.fftconvolve(e, psi, mode="valid"))
        elif method == "direct":
            rev = psi[::-1]
            cols.append(np.array([rev @ e[t:t + K + 1] for t in range(n)]))
        else:
            raise ValueError(f"unknown method {method!r}")
    return MultiSeries(np.column_stack(cols))
