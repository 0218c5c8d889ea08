"""Discrete Fourier transform and spectral density matrix estimators.

Three estimators of the q x q spectral density matrix are provided, all
evaluated on Fourier frequencies ``lambda_j = 2*pi*j/n``:

* ``periodogram``          raw outer product of the DFT
* ``smoothed_periodogram`` weighted local average of periodogram ordinates
* ``tapered_periodogram``  periodogram of taper-weighted data

The DFT convention is ``w(lambda) = (2*pi*n)**-0.5 * sum_t X_t exp(i*lambda*t)``
with ``t = 1..n``, used by every estimator in this module.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-8


@dataclass(frozen=True)
class MultiSeries:
    """An ``n x q`` real observation matrix (row t is X_t)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise ValueError(f"series must be 1-D or 2-D, got shape {v.shape}")
        if v.shape[0] < 2 or v.shape[1] < 1:
            raise ValueError(f"series needs n >= 2 and q >= 1, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("series contains NaN or Inf")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def q(self) -> int:
        return self.values.shape[1]

    def centered(self) -> "MultiSeries":
        return MultiSeries(self.values - self.values.mean(axis=0))


def as_series(x) -> MultiSeries:
    if isinstance(x, MultiSeries):
        return x
    return MultiSeries(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class FrequencyGrid:
    """Fourier frequencies ``2*pi*j/n`` for a strictly increasing index set."""

    n: int
    indices: np.ndarray
    lambdas: np.ndarray = field(init=False)

    def __post_init__(self):
        idx = np.array(self.indices, dtype=np.int64).reshape(-1)
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if idx.size == 0:
            raise ValueError("grid must contain at least one frequency")
        if np.any(np.diff(idx) <= 0):
            raise ValueError("grid indices must be strictly increasing")
        if idx[0] < 0:
            raise ValueError("grid indices must be nonnegative")
        lam = (2.0 * np.pi * idx) / self.n
        idx.setflags(write=False)
        lam.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "lambdas", lam)

    def __len__(self):
        return self.indices.size


def fourier_grid(n: int, m: int) -> FrequencyGrid:
    """Grid of the first ``m`` nonzero Fourier frequencies of a length-``n`` sample."""
    if not 1 <= m <= n / 2:
        raise ValueError(f"m must satisfy 1 <= m <= n/2, got m={m}, n={n}")
    return FrequencyGrid(n, np.arange(1, m + 1))


@dataclass(frozen=True)
class SpectralEstimate:
    """Complex Hermitian ``q x q`` matrices, one per grid frequency."""

    grid: FrequencyGrid
    matrices: np.ndarray
    kind: str

    def __post_init__(self):
        mats = np.asarray(self.matrices, dtype=complex)
        if mats.ndim != 3 or mats.shape[0] != len(self.grid) or mats.shape[1] != mats.shape[2]:
            raise ValueError(f"matrices shape {mats.shape} does not match grid of {len(self.grid)}")
        mats.setflags(write=False)
        object.__setattr__(self, "matrices", mats)

    @property
    def q(self) -> int:
        return self.matrices.shape[1]

    def scaled(self, c: float) -> "SpectralEstimate":
        return SpectralEstimate(self.grid, c * self.matrices, self.kind)

    def hermitian_error(self) -> float:
        m = self.matrices
        return float(np.max(np.abs(m - np.conj(np.swapaxes(m, 1, 2)))))

    def min_eigenvalue(self) -> float:
        m = self.matrices
        herm = 0.5 * (m + np.conj(np.swapaxes(m, 1, 2)))
        return float(np.min(np.linalg.eigvalsh(herm)))

    def check(self, psd_tol: float = PSD_TOL) -> None:
        """Raise ``ValueError`` if the Hermitian or PSD invariant is violated."""
        err = self.hermitian_error()
        if err >= HERMITIAN_TOL:
            raise ValueError(f"{self.kind} estimate not Hermitian (max deviation {err:.3g})")
        lo = self.min_eigenvalue()
        if lo < -psd_tol:
            raise ValueError(f"{self.kind} estimate not PSD (min eigenvalue {lo:.3g})")


def _dft_all(x: np.ndarray) -> np.ndarray:
    """DFT at every index j = 0..n-1, shape (n, q)."""
    n = x.shape[0]
    j = np.arange(n)
    # ifft sums over s = 0..n-1; the phase shifts the time origin to t = 1
    w = np.fft.ifft(x, axis=0) * n
    w *= np.exp(2j * np.pi * j / n)[:, None]
    return w / np.sqrt(2.0 * np.pi * n)


def dft(series, lam: float) -> np.ndarray:
    """Direct-sum DFT ``w_n(lam)`` of the (uncentered) series, a complex q-vector."""
    x = as_series(series).values
    t = np.arange(1, x.shape[0] + 1)
    return (np.exp(1j * lam * t) @ x) / np.sqrt(2.0 * np.pi * x.shape[0])


def _prepare(series, demean: bool) -> np.ndarray:
    s = as_series(series)
    x = np.array(s.values)
    if demean:
        x -= x.mean(axis=0)
    return x


def _outer(w: np.ndarray) -> np.ndarray:
    M = w[:, :, None] * np.conj(w[:, None, :])
    # exact Hermitian symmetry regardless of FMA rounding
    return 0.5 * (M + np.conj(np.swapaxes(M, 1, 2)))


def periodogram(series, grid: FrequencyGrid, demean: bool = True) -> SpectralEstimate:
    """Raw periodogram ``I_n(lambda_j) = w w^H`` on ``grid``.

    Indices beyond ``n/2`` are resolved by periodicity of the DFT, which
    allows full-period sums such as Parseval checks.
    """
    x = _prepare(series, demean)
    if x.shape[0] != grid.n:
        raise ValueError(f"grid built for n={grid.n} but series has n={x.shape[0]}")
    w = _dft_all(x)[grid.indices % grid.n]
    return SpectralEstimate(grid, _outer(w), "raw")


@dataclass(frozen=True)
class WeightScheme:
    """Smoothing weights ``W(k)`` for ``|k| <= ell``.

    ``weights`` has shape ``(2*ell+1,)`` for a scalar weight shared by all
    matrix entries, or ``(2*ell+1, q, q)`` for entrywise weights; row ``i``
    holds ``W(i - ell)``. ``n`` pins the scheme to a sample size when the
    weights were built for one.
    """

    ell: int
    weights: np.ndarray
    skip_pole: bool = False
    n: Optional[int] = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if self.ell < 1:
            raise ValueError("ell must be a positive integer")
        if w.shape[0] != 2 * self.ell + 1 or w.ndim not in (1, 3):
            raise ValueError(f"weights shape {w.shape} incompatible with ell={self.ell}")
        if w.ndim == 3 and w.shape[1] != w.shape[2]:
            raise ValueError("entrywise weights must be square")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        self.validate()

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(-self.ell, self.ell + 1)

    def validate(self) -> None:
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative")
        if not np.array_equal(self.weights, self.weights[::-1]):
            raise ValueError("weights must satisfy W(k) == W(-k)")

    def sum_deviation(self) -> float:
        """Largest ``|sum_k W(k) - 1|`` over matrix entries."""
        return float(np.max(np.abs(self.weights.sum(axis=0) - 1.0)))

    def normalized(self) -> "WeightScheme":
        return WeightScheme(self.ell, self.weights / self.weights.sum(axis=0), self.skip_pole, self.n)

    def with_skip_pole(self, skip_pole: bool) -> "WeightScheme":
        return WeightScheme(self.ell, self.weights, skip_pole, self.n)


def bartlett_weights(n: int, ell: int, normalize: bool = True, skip_pole: bool = False) -> WeightScheme:
    """Bartlett (Fejer-kernel) smoothing weights.

    ``W(k) = sin(ell*lam_k/2)**2 / (n*ell*sin(lam_k/2)**2)`` with
    ``lam_k = 2*pi*k/n`` and the limit ``ell/n`` at ``k = 0``. The raw
    weights do not sum to one over ``|k| <= ell``; ``normalize`` rescales
    them so they do.

    ``ell`` may reach ``n - 1``; windows wider than the half-period wrap
    around the circle by periodicity of the DFT.
    """
    if not 1 <= ell < n:
        raise ValueError(f"ell must satisfy 1 <= ell < n, got ell={ell}, n={n}")
    k = np.arange(1, ell + 1)
    lam = 2.0 * np.pi * k / n
    half = np.sin(ell * lam / 2.0) ** 2 / (n * ell * np.sin(lam / 2.0) ** 2)
    w = np.concatenate([half[::-1], [ell / n], half])
    if normalize:
        w = w / w.sum()
    return WeightScheme(ell, w, skip_pole, n)


def smoothed_periodogram(series, grid: FrequencyGrid, scheme: WeightScheme,
                         demean: bool = True) -> SpectralEstimate:
    """Smoothed periodogram ``f(lam_j) = sum_k W(k) * I(lam_{j+k})``.

    ``*`` is the entrywise product. Indices ``j+k`` outside ``1..n`` wrap
    modulo ``n``. With ``scheme.skip_pole`` the ``k = -j`` term is dropped.
    A grid index of 0 uses the real one-sided zero-frequency form
    ``Re[W(0) I(lam_1) + 2 sum_{k>=1} W(k) I(lam_{k+1})]``.
    """
    x = _prepare(series, demean)
    n, q = x.shape
    if n != grid.n:
        raise ValueError(f"grid built for n={grid.n} but series has n={n}")
    if scheme.n is not None and scheme.n != n:
        raise ValueError(f"weight scheme built for n={scheme.n} but series has n={n}")
    W = scheme.weights
    if W.ndim == 3 and W.shape[1] != q:
        raise ValueError(f"entrywise weights are {W.shape[1]}x{W.shape[1]} but q={q}")
    if W.ndim == 1:
        W = W[:, None, None]
    I_all = _outer(_dft_all(x))
    k = scheme.offsets
    out = np.empty((len(grid), q, q), dtype=complex)
    for pos, j in enumerate(grid.indices):
        if j % n == 0:
            ones = 1 + (k[scheme.ell:] > 0)  # weights 1, 2, 2, ...
            terms = I_all[(k[scheme.ell:] + 1) % n]
            out[pos] = np.sum(ones[:, None, None] * W[scheme.ell:] * terms, axis=0).real
            continue
        Wj = W
        if scheme.skip_pole and -scheme.ell <= -j:
            Wj = np.array(np.broadcast_to(W, (k.size, q, q)))
            Wj[scheme.ell - j] = 0.0
        out[pos] = np.sum(Wj * I_all[(j + k) % n], axis=0)
    return SpectralEstimate(grid, out, "smoothed")


def cosine_bell(u):
    """Cosine-bell taper ``0.5*(1 - cos(2*pi*u))`` on ``[0, 1/2]``, mirrored about 1/2."""
    arr = np.asarray(u, dtype=float)
    if np.any((arr < 0.0) | (arr > 1.0)) or not np.all(np.isfinite(arr)):
        raise ValueError("cosine_bell argument must lie in [0, 1]")
    v = np.where(arr <= 0.5, arr, 1.0 - arr)
    out = 0.5 * (1.0 - np.cos(2.0 * np.pi * v))
    return float(out) if np.ndim(u) == 0 else out


def _constant(u):
    return np.ones_like(np.asarray(u, dtype=float))


@dataclass(frozen=True)
class Taper:
    """Data taper functions ``h_i: [0, 1] -> R``.

    A single function is shared by all components; otherwise supply one per
    component. ``H`` caches ``integral_0^1 h_i(x)**2 dx``, which must be
    positive.
    """

    functions: Sequence[Callable]
    name: str = "custom"
    H: np.ndarray = field(init=False)

    def __post_init__(self):
        funcs = tuple(self.functions) if not callable(self.functions) else (self.functions,)
        if not funcs:
            raise ValueError("taper needs at least one function")
        H = np.array([integrate.quad(lambda u, f=f: float(f(u)) ** 2, 0.0, 1.0, limit=200)[0]
                      for f in funcs])
        if np.any(H <= 0):
            raise ValueError("taper must satisfy integral of h**2 > 0 for every component")
        object.__setattr__(self, "functions", funcs)
        object.__setattr__(self, "H", H)

    @classmethod
    def cosine_bell(cls) -> "Taper":
        return cls((cosine_bell,), "cosine-bell")

    @classmethod
    def constant(cls) -> "Taper":
        return cls((_constant,), "constant")

    def values(self, n: int, q: int) -> np.ndarray:
        """``L_n(t) = h_i(t/n)`` for ``t = 1..n``, shape ``(n, q)``."""
        if len(self.functions) not in (1, q):
            raise ValueError(f"taper has {len(self.functions)} functions for q={q}")
        u = np.arange(1, n + 1) / n
        cols = [np.asarray(f(u), dtype=float) * np.ones(n) for f in self.functions]
        L = np.column_stack(cols)
        return np.repeat(L, q, axis=1) if L.shape[1] == 1 else L


def taper_by_name(name: str) -> Taper:
    if name in ("cosine-bell", "cosine_bell"):
        return Taper.cosine_bell()
    if name in ("none", "constant"):
        return Taper.constant()
    raise ValueError(f"unknown taper {name!r}")


def tapered_periodogram(series, grid: FrequencyGrid, taper: Optional[Taper] = None,
                        demean: bool = True) -> SpectralEstimate:
    """Tapered periodogram ``I_T = w_T w_T^H``.

    ``w_T(lam) = (2*pi)**-0.5 * sum_t S(t) * X_t * exp(i*lam*t)`` where
    ``S(t) = L(t) / sqrt(sum_s L(s)**2)`` componentwise. The exponent sign
    matches the raw DFT; flipping it would only conjugate the result.
    """
    taper = taper or Taper.cosine_bell()
    x = _prepare(series, demean)
    n, q = x.shape
    if n != grid.n:
        raise ValueError(f"grid built for n={grid.n} but series has n={n}")
    L = taper.values(n, q)
    norm = np.sqrt(np.sum(L ** 2, axis=0))
    if np.any(norm == 0):
        raise ValueError("degenerate taper: sum of squared taper values is zero")
    # rescale by sqrt(n) so _dft_all's 1/sqrt(2*pi*n) becomes 1/sqrt(2*pi)
    w = _dft_all(x * (L / norm) * np.sqrt(n))[grid.indices % n]
    return SpectralEstimate(grid, _outer(w), "tapered")
