"""Replicated simulate-then-estimate experiments.

Replication ``r`` of a design draws its sample path from seed
``replication_seed(base_seed, r)``: the first 64-bit word produced by
``numpy.random.SeedSequence([base_seed, r])``, whose hash mixing
decorrelates neighbouring ``(base_seed, r)`` pairs. Results are gathered by
replication index, so tables are identical for any worker count.
"""

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from . import gse, varfima
from .errors import EstimationError, MonteCarloError, NumericalError

MAX_FAILURE_RATE = 0.05


@dataclass(frozen=True)
class EstimatorConfig:
    kind: str = "raw"
    alpha: float = 0.85
    beta: Optional[float] = None
    skip_pole: bool = False
    demean: bool = True

    def __post_init__(self):
        if self.kind not in gse.ESTIMATORS:
            raise ValueError(f"unknown estimator kind {self.kind!r}")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.kind == "smoothed":
            if self.beta is None:
                object.__setattr__(self, "beta", 0.9)
            if not 0 < self.beta < 1:
                raise ValueError("beta must lie in (0, 1)")

    @property
    def tag(self) -> str:
        # SLOB keeps the k = -j ordinate, SLOB* drops it
        if self.kind == "smoothed":
            return "SLOB*" if self.skip_pole else "SLOB"
        return {"raw": "LOB", "tapered": "TLOB"}[self.kind]

    def fit(self, series) -> gse.GseFit:
        return gse.estimate(series, self.kind, alpha=self.alpha, beta=self.beta or 0.9,
                            skip_pole=self.skip_pole, demean=self.demean)


@dataclass(frozen=True)
class McDesign:
    spec: varfima.VarfimaSpec
    estimators: tuple
    replications: int = 200
    base_seed: int = 0

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not self.estimators:
            raise ValueError("design needs at least one estimator")
        object.__setattr__(self, "estimators", tuple(self.estimators))


@dataclass(frozen=True)
class Summary:
    mean: float
    st_d: float
    mse: float


def summarize(values, d_true: float) -> Summary:
    """Mean, standard deviation (divisor R-1) and mse about ``d_true`` (divisor R)."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise ValueError("summarize needs at least 2 values")
    return Summary(float(v.mean()), float(v.std(ddof=1)), float(np.mean((v - d_true) ** 2)))


@dataclass(frozen=True)
class McRow:
    estimator: str
    kind: str
    alpha: float
    beta: Optional[float]
    component: int
    d_true: float
    mean: float
    st_d: float
    mse: float
    replications: int
    failures: int


@dataclass
class McTable:
    rows: List[McRow]
    estimates: dict = field(default_factory=dict, repr=False)
    config: dict = field(default_factory=dict, repr=False)

    def row(self, tag: str, component: int) -> McRow:
        for r in self.rows:
            if r.estimator == tag and r.component == component:
                return r
        raise KeyError((tag, component))

    def to_csv(self) -> str:
        buf = io.StringIO()
        for k, v in self.config.items():
            buf.write(f"# {k}={v}\n")
        names = [f.name for f in McRow.__dataclass_fields__.values()]
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(names)
        for r in self.rows:
            w.writerow([_fmt(getattr(r, k)) for k in names])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {"schema": "longmem/1", "config": self.config,
               "rows": [asdict(r) for r in self.rows]}
        return json.dumps(doc, indent=2)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    return "" if v is None else v


def replication_seed(base_seed: int, r: int) -> int:
    ss = np.random.SeedSequence([int(base_seed), int(r)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _replicate(args):
    design, r = args
    series = varfima.simulate(design.spec.with_seed(replication_seed(design.base_seed, r)))
    out = []
    for est in design.estimators:
        try:
            out.append(est.fit(series).d_hat)
        except (EstimationError, NumericalError):
            out.append(None)
    return out


def worker_count(workers: Optional[int] = None) -> int:
    if workers is None:
        env = os.environ.get("LONGMEM_THREADS")
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(workers))


def run(design: McDesign, workers: Optional[int] = None) -> McTable:
    """Run every replication and summarise each estimator per component."""
    workers = worker_count(workers)
    tasks = [(design, r) for r in range(design.replications)]
    if workers == 1:
        results = [_replicate(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_replicate, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    R = design.replications
    rows, estimates = [], {}
    for e_idx, est in enumerate(design.estimators):
        good = [res[e_idx] for res in results if res[e_idx] is not None]
        failures = R - len(good)
        if failures > MAX_FAILURE_RATE * R:
            raise MonteCarloError(f"{est.tag}: {failures} of {R} replications failed")
        vals = np.array(good)
        estimates[est.tag] = vals
        for i, d_true in enumerate(design.spec.d):
            if vals.shape[0] >= 2:
                s = summarize(vals[:, i], d_true)
            else:
                s = Summary(float(vals[0, i]) if len(vals) else math.nan, math.nan, math.nan)
            rows.append(McRow(est.tag, est.kind, est.alpha, est.beta, i + 1, float(d_true),
                              s.mean, s.st_d, s.mse, len(good), failures))
    config = {
        "d": design.spec.d.tolist(),
        "innovation_corr": design.spec.innovation_corr.tolist(),
        "n": design.spec.n,
        "truncation": design.spec.truncation,
        "replications": R,
        "base_seed": design.base_seed,
        "estimators": [asdict(e) for e in design.estimators],
    }
    return McTable(rows, estimates, config)
