"""Gaussian semiparametric estimation of the memory vector ``d``.

The objective over the first ``m`` Fourier frequencies is

    S(d) = log det G(d) - 2 * sum_k d_k * mean_j log(lam_j)
    G(d) = mean_j Re[ diag(lam_j**d) f(lam_j) diag(lam_j**d) ]

where ``f`` is any spectral density matrix estimate (raw, smoothed or
tapered periodogram). For ``q = 1`` with the raw periodogram this is the
univariate local Whittle estimator.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize

from . import spectral
from .errors import EstimationError, NumericalError

BOUND = 0.499
ESTIMATORS = ("raw", "smoothed", "tapered")


def bandwidth(n: int, exponent: float) -> int:
    """``floor(n**exponent)``; used for both ``m`` and the smoothing span ``ell``."""
    if not 0 < exponent < 1:
        raise ValueError(f"exponent must lie in (0, 1), got {exponent}")
    return int(math.floor(n ** exponent))


@dataclass(frozen=True)
class ParamSpace:
    """Box of admissible ``d`` values."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lower and upper must be vectors of equal length")
        if np.any(lo >= hi):
            raise ValueError("lower must be strictly below upper")
        if np.any(lo <= -0.5) or np.any(hi >= 0.5):
            raise ValueError("parameter box must lie inside (-0.5, 0.5)^q")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def q(self) -> int:
        return self.lower.size

    @classmethod
    def default(cls, q: int) -> "ParamSpace":
        return cls(np.full(q, -BOUND), np.full(q, BOUND))

    @classmethod
    def consistency_box(cls, q: int, beta: float) -> "ParamSpace":
        """``[-beta/2, 0]^q`` intersected with ``(-1/2, 0]^q``.

        The open end at -1/2 is replaced by ``-0.499``.
        """
        if not 0 < beta <= 1:
            raise ValueError("beta must lie in (0, 1]")
        return cls(np.full(q, max(-beta / 2.0, -BOUND)), np.zeros(q))

    def contains(self, d, tol: float = 0.0) -> bool:
        d = np.asarray(d)
        return bool(np.all(d >= self.lower - tol) and np.all(d <= self.upper + tol))

    def start_points(self) -> list:
        """Coarse grid of ``5**min(q, 3)`` interior points plus the zero vector."""
        q = self.q
        k = min(q, 3)
        axes = [np.linspace(self.lower[i], self.upper[i], 7)[1:-1] for i in range(k)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.column_stack([g.ravel() for g in mesh])
        if q > k:
            centre = 0.5 * (self.lower[k:] + self.upper[k:])
            pts = np.column_stack([pts, np.tile(centre, (pts.shape[0], 1))])
        zero = np.clip(np.zeros(q), self.lower, self.upper)
        if not any(np.array_equal(p, zero) for p in pts):
            pts = np.vstack([pts, zero])
        return [p.copy() for p in pts]


PIVOT_RTOL = 1e-13


def logdet_pd(G: np.ndarray) -> Optional[float]:
    """``log det G`` via Cholesky, or ``None`` if ``G`` is not positive definite.

    A pivot below ``PIVOT_RTOL`` times its diagonal entry counts as singular,
    so rank-deficient matrices are rejected despite rounding.
    """
    q = G.shape[0]
    if q > 4:
        try:
            L = np.linalg.cholesky(G)
        except np.linalg.LinAlgError:
            return None
        piv = np.diag(L) ** 2
        if not np.all(piv > PIVOT_RTOL * np.diag(G)):
            return None
        return float(np.sum(np.log(piv)))
    # small q: a scalar loop beats the LAPACK call overhead
    a = G.tolist()
    L = [[0.0] * q for _ in range(q)]
    total = 0.0
    for i in range(q):
        for j in range(i + 1):
            acc = a[i][j] - sum(L[i][k] * L[j][k] for k in range(j))
            if i == j:
                if not acc > PIVOT_RTOL * a[i][i] or not math.isfinite(acc):
                    return None
                L[i][i] = math.sqrt(acc)
                total += math.log(acc)
            else:
                L[i][j] = acc / L[j][j]
    return total


class LocalObjective:
    """Precomputed ingredients of ``S(d)`` for one spectral estimate and ``m``."""

    def __init__(self, estimate: spectral.SpectralEstimate, m: int):
        if m < 1 or m > len(estimate.grid):
            raise ValueError(f"m={m} exceeds the {len(estimate.grid)} available grid points")
        lam = estimate.grid.lambdas[:m]
        if np.any(lam <= 0):
            raise ValueError("objective needs strictly positive frequencies")
        self.m = m
        self.q = estimate.q
        self.log_lam = np.log(lam)
        self.mean_log = float(self.log_lam.mean())
        # Re[D f D] = D Re[f] D for real diagonal D
        self.re_f = np.ascontiguousarray(estimate.matrices[:m].real.transpose(1, 2, 0))
        self._iu = np.triu_indices(self.q)
        self._re_pairs = self.re_f[self._iu]

    def _weights(self, d, power: int = 0):
        d = np.asarray(d, dtype=float)
        expo = (d[:, None] + d[None, :])[self._iu]
        w = np.exp(expo[:, None] * self.log_lam[None, :])
        if power:
            w = w * self.log_lam ** power
        return w

    def J(self, d, power: int = 0) -> np.ndarray:
        """``mean_j log(lam_j)**power * Re[diag(lam**d) f diag(lam**d)]``."""
        vals = np.einsum("pm,pm->p", self._weights(d, power), self._re_pairs) / self.m
        out = np.empty((self.q, self.q))
        out[self._iu] = vals
        out.T[self._iu] = vals
        return out

    def G(self, d) -> np.ndarray:
        return self.J(d, 0)

    def linear_term(self, d) -> float:
        return 2.0 * float(np.sum(d)) * self.mean_log

    def __call__(self, d) -> float:
        """``S(d)``, or ``inf`` where ``G(d)`` is not positive definite."""
        logdet = logdet_pd(self.G(d))
        if logdet is None:
            return math.inf
        return logdet - self.linear_term(d)

    def _inverse(self, d):
        G = self.G(d)
        if logdet_pd(G) is None:
            raise NumericalError(f"G(d) is not positive definite at d={np.asarray(d)}")
        return np.linalg.inv(G)

    def score(self, d) -> np.ndarray:
        # dG/dd_r = E_r J1 + J1 E_r, so tr[Ginv dG/dd_r] = 2 (Ginv J1)_rr
        Ginv = self._inverse(d)
        J1 = self.J(d, 1)
        return -2.0 * self.mean_log + 2.0 * np.diag(Ginv @ J1)

    def hessian(self, d) -> np.ndarray:
        Ginv = self._inverse(d)
        J1 = self.J(d, 1)
        J2 = self.J(d, 2)
        q = self.q
        dG = []
        for r in range(q):
            E = np.zeros((q, q))
            E[r, r] = 1.0
            dG.append(E @ J1 + J1 @ E)
        H = np.empty((q, q))
        for r in range(q):
            Er = np.zeros((q, q))
            Er[r, r] = 1.0
            for s in range(r, q):
                Es = np.zeros((q, q))
                Es[s, s] = 1.0
                d2G = Er @ Es @ J2 + Er @ J2 @ Es + Es @ J2 @ Er + J2 @ Er @ Es
                val = np.trace(-Ginv @ dG[r] @ Ginv @ dG[s] + Ginv @ d2G)
                H[r, s] = H[s, r] = val
        return H


def g_hat(d, estimate: spectral.SpectralEstimate, m: int) -> np.ndarray:
    return LocalObjective(estimate, m).G(np.atleast_1d(d))


def objective(d, estimate: spectral.SpectralEstimate, m: int) -> float:
    return LocalObjective(estimate, m)(np.atleast_1d(d))


def score(d, estimate: spectral.SpectralEstimate, m: int) -> np.ndarray:
    return LocalObjective(estimate, m).score(np.atleast_1d(d))


def hessian(d, estimate: spectral.SpectralEstimate, m: int) -> np.ndarray:
    return LocalObjective(estimate, m).hessian(np.atleast_1d(d))


def model_spectrum(d, G, lam: float) -> np.ndarray:
    """Local model ``Lambda(d) G Lambda(d)^H`` with
    ``Lambda_kk = lam**(-d_k) * exp(i*(pi - lam)*d_k/2)``."""
    d = np.atleast_1d(np.asarray(d, dtype=float))
    G = np.atleast_2d(np.asarray(G, dtype=float))
    if lam < 0 or lam > np.pi:
        raise ValueError("lam must lie in [0, pi]")
    if lam == 0 and np.any(d > 0):
        raise NumericalError("model spectrum has a pole at frequency 0 for d > 0")
    diag = np.power(lam, -d) * np.exp(1j * (np.pi - lam) * d / 2.0)
    return diag[:, None] * G * np.conj(diag)[None, :]


@dataclass
class OptimizerOptions:
    xatol: float = 1e-7
    fatol: float = 1e-10
    max_iter_per_dim: int = 500
    initial_step: float = 0.05
    tie_tol: float = 1e-12


@dataclass
class GseFit:
    d_hat: np.ndarray
    g_hat: np.ndarray
    objective: float
    iterations: int
    converged: bool
    m: int
    estimator_kind: str
    at_boundary: bool = False
    n_starts: int = 0
    space: Optional[ParamSpace] = field(default=None, repr=False)


def _simplex(x0, space: ParamSpace, step: float):
    width = space.upper - space.lower
    pts = [x0.copy()]
    for i in range(x0.size):
        p = x0.copy()
        h = step * width[i]
        p[i] = x0[i] + h if x0[i] + h <= space.upper[i] else x0[i] - h
        pts.append(p)
    return np.array(pts)


def minimize(obj: LocalObjective, space: Optional[ParamSpace] = None,
             options: Optional[OptimizerOptions] = None, kind: str = "custom") -> GseFit:
    """Multi-start bounded Nelder-Mead minimisation of ``S(d)``.

    Every start runs to convergence; the lowest objective among converged
    starts wins, ties within ``tie_tol`` going to the lexicographically
    smallest ``d``.
    """
    space = space or ParamSpace.default(obj.q)
    if space.q != obj.q:
        raise ValueError(f"parameter space has dimension {space.q}, data has q={obj.q}")
    opts = options or OptimizerOptions()
    bounds = list(zip(space.lower, space.upper))
    runs = []
    for x0 in space.start_points():
        if not math.isfinite(obj(x0)):
            runs.append((x0, math.inf, 0, False))
            continue
        res = optimize.minimize(
            obj, x0, method="Nelder-Mead", bounds=bounds,
            options=dict(xatol=opts.xatol, fatol=opts.fatol,
                         maxiter=opts.max_iter_per_dim * obj.q,
                         initial_simplex=_simplex(x0, space, opts.initial_step)),
        )
        runs.append((np.clip(res.x, space.lower, space.upper), float(res.fun), int(res.nit),
                     bool(res.status == 0)))
    finite = [r for r in runs if math.isfinite(r[1])]
    if not finite:
        raise EstimationError(
            "objective is infinite at every start: G(d) is not positive definite",
            diagnostics={"starts": [r[0].tolist() for r in runs]},
        )
    pool = [r for r in finite if r[3]] or finite
    best_val = min(r[1] for r in pool)
    ties = [r for r in pool if r[1] - best_val <= opts.tie_tol]
    x, val, nit, conv = min(ties, key=lambda r: tuple(r[0]))
    edge = bool(np.any(np.isclose(x, space.lower, atol=1e-6)) or
                np.any(np.isclose(x, space.upper, atol=1e-6)))
    return GseFit(
        d_hat=x, g_hat=obj.G(x), objective=val, iterations=nit, converged=conv,
        m=obj.m, estimator_kind=kind, at_boundary=edge, n_starts=len(runs), space=space,
    )


def spectral_estimate(series, m: int, kind: str = "raw", *, beta: float = 0.9,
                      ell: Optional[int] = None, skip_pole: bool = False,
                      taper: Optional[spectral.Taper] = None,
                      demean: bool = True) -> spectral.SpectralEstimate:
    """Build the requested spectral estimate on the first ``m`` Fourier frequencies."""
    s = spectral.as_series(series)
    grid = spectral.fourier_grid(s.n, m)
    if kind == "raw":
        return spectral.periodogram(s, grid, demean=demean)
    if kind == "smoothed":
        ell = ell if ell is not None else bandwidth(s.n, beta)
        scheme = spectral.bartlett_weights(s.n, ell, normalize=True, skip_pole=skip_pole)
        return spectral.smoothed_periodogram(s, grid, scheme, demean=demean)
    if kind == "tapered":
        return spectral.tapered_periodogram(s, grid, taper, demean=demean)
    raise ValueError(f"unknown estimator kind {kind!r}; expected one of {ESTIMATORS}")


def estimate(series, kind: str = "raw", m: Optional[int] = None, *, alpha: float = 0.85,
             beta: float = 0.9, ell: Optional[int] = None, skip_pole: bool = False,
             taper: Optional[spectral.Taper] = None, space: Optional[ParamSpace] = None,
             demean: bool = True, options: Optional[OptimizerOptions] = None) -> GseFit:
    """Estimate ``d`` from a series.

    ``m`` defaults to ``floor(n**alpha)``; for the smoothed estimator the
    Bartlett span defaults to ``floor(n**beta)``.
    """
    s = spectral.as_series(series)
    m = m if m is not None else bandwidth(s.n, alpha)
    if not 1 <= m < s.n / 2:
        raise ValueError(f"m must satisfy 1 <= m < n/2, got m={m}, n={s.n}")
    est = spectral_estimate(s, m, kind, beta=beta, ell=ell, skip_pole=skip_pole,
                            taper=taper, demean=demean)
    return minimize(LocalObjective(est, m), space, options, kind)
