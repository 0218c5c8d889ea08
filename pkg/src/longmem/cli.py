"""Command-line front end.

Subcommands: estimate, transform, test, simulate, montecarlo, plotdata.
Every subcommand accepts ``--config PATH`` pointing at a flat ``key=value``
file (``#`` starts a comment); keys are flag names without the leading
dashes. Explicit flags override config-file values.

Exit codes: 0 success, 2 input error, 3 numerical failure, 4 estimation failure.
"""

import argparse
import csv
import io
import json
import math
import sys
from typing import List, Optional

import numpy as np

from . import gse, inference, montecarlo, spectral, varfima
from .errors import EstimationError, InputError, MonteCarloError, NumericalError

SCHEMA = "longmem/1"

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_ESTIMATION = 0, 2, 3, 4


# ---------------------------------------------------------------- file formats

def read_csv(path_or_text, *, text: bool = False, with_lines: bool = False):
    """Parse a numeric CSV into ``(names, matrix)``.

    Lines starting with ``#`` are skipped. The first remaining row is a
    header when any cell is non-numeric; otherwise columns are named
    ``x1..xq``. With ``with_lines`` the file line number of every data row
    is returned as a third element.
    """
    if text:
        lines = path_or_text.splitlines()
    else:
        with open(path_or_text, newline="", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    rows = [(lineno, row) for lineno, row in enumerate(csv.reader(lines), start=1)
            if row and not row[0].lstrip().startswith("#")]
    if not rows:
        raise InputError("input CSV contains no data")
    names = None
    if any(not _is_number(c) for c in rows[0][1]):
        names = [c.strip() for c in rows[0][1]]
        rows = rows[1:]
    if not rows:
        raise InputError("input CSV contains a header but no rows")
    width = len(names) if names else len(rows[0][1])
    data = []
    for lineno, row in rows:
        if len(row) != width:
            raise InputError(f"expected {width} fields, found {len(row)}", line=lineno)
        vals = []
        for col, cell in enumerate(row, start=1):
            try:
                v = float(cell)
            except ValueError:
                raise InputError(f"non-numeric value {cell.strip()!r}", line=lineno, column=col) from None
            if not math.isfinite(v):
                raise InputError(f"non-finite value {cell.strip()!r}", line=lineno, column=col)
            vals.append(v)
        data.append(vals)
    names = names or [f"x{i + 1}" for i in range(width)]
    X = np.array(data, dtype=float)
    if with_lines:
        return names, X, [lineno for lineno, _ in rows]
    return names, X


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def format_csv(names, matrix, config: Optional[dict] = None) -> str:
    buf = io.StringIO()
    for k, v in (config or {}).items():
        buf.write(f"# {k}={json.dumps(v)}\n")
    buf.write(",".join(names) + "\n")
    for row in np.atleast_2d(matrix):
        buf.write(",".join(f"{x:.17g}" for x in row) + "\n")
    return buf.getvalue()


def read_config_header(path) -> dict:
    """Recover the ``# key=value`` config echo written by :func:`format_csv`."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("# "):
                break
            k, _, v = line[2:].rstrip("\n").partition("=")
            out[k] = json.loads(v)
    return out


def parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in str(text).split(",") if x.strip()], dtype=float)
    except ValueError:
        raise InputError(f"cannot parse vector {text!r}") from None


def parse_matrix(text: str) -> np.ndarray:
    """Row-major literal: rows separated by ``;``, entries by ``,``."""
    rows = [parse_vector(r) for r in str(text).split(";") if r.strip()]
    if not rows or len({r.size for r in rows}) != 1:
        raise InputError(f"cannot parse matrix {text!r}")
    return np.vstack(rows)


def _write(text: str, path: Optional[str]):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def _dump(doc: dict) -> str:
    return json.dumps(doc, indent=2, default=_jsonable) + "\n"


# ----------------------------------------------------------------- config

def read_config_file(path) -> List[str]:
    """Turn ``key=value`` lines into argv tokens."""
    argv = []
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read config file: {exc}") from None
    for i, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise InputError("config lines must be key=value", line=i)
        flag = "--" + key.strip().replace("_", "-")
        value = value.strip()
        if value.lower() in ("true", "yes", "on"):
            argv.append(flag)
        elif value.lower() in ("false", "no", "off"):
            continue
        else:
            argv.extend([flag, value])
    return argv


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


DEFAULTS = {
    "estimate": dict(input=None, output=None, estimator="raw", alpha=0.85, beta=0.9, ell=None,
                     m=None, skip_pole=False, taper="cosine-bell", theta_min=None, theta_max=None,
                     no_demean=False),
    "transform": dict(input=None, output=None, mode="squared_log_return"),
    "test": dict(input=None, output=None, common_d=False, i0=False, R=None, nu=None),
    "simulate": dict(output=None, d="0.2,0.3", rho=None, corr=None, n=1000, seed=0,
                     truncation=varfima.DEFAULT_TRUNCATION),
    "montecarlo": dict(output=None, estimates_output=None, d="0.2,0.3", rho=None, corr=None, n=1000,
                       seed=0, replications=200, truncation=10_000, estimator="raw,smoothed,tapered",
                       alpha=0.85, beta=0.9, skip_pole=False, no_demean=False, workers=None,
                       format=None, full_scale=False),
    "plotdata": dict(input=None, output=None),
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="longmem", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    S = argparse.SUPPRESS

    def common(sp):
        sp.add_argument("--config", default=S, help="key=value configuration file")
        sp.add_argument("--output", default=S, help="output path (default stdout)")

    e = sub.add_parser("estimate", help="estimate d from a CSV of observations")
    common(e)
    e.add_argument("--input", default=S)
    e.add_argument("--estimator", choices=gse.ESTIMATORS, default=S)
    e.add_argument("--alpha", type=float, default=S)
    e.add_argument("--beta", type=float, default=S)
    e.add_argument("--ell", type=int, default=S)
    e.add_argument("--m", type=int, default=S)
    e.add_argument("--skip-pole", action="store_true", default=S)
    e.add_argument("--taper", choices=["cosine-bell"], default=S)
    e.add_argument("--theta-min", default=S, help="comma list of lower bounds")
    e.add_argument("--theta-max", default=S, help="comma list of upper bounds")
    e.add_argument("--no-demean", action="store_true", default=S)

    t = sub.add_parser("transform", help="log-return transforms of a price CSV")
    common(t)
    t.add_argument("--input", default=S)
    t.add_argument("--mode", choices=["log_return", "squared_log_return"], default=S)

    w = sub.add_parser("test", help="Wald test on an estimate report")
    common(w)
    w.add_argument("--input", default=S, help="JSON report from 'estimate'")
    w.add_argument("--common-d", action="store_true", default=S)
    w.add_argument("--i0", action="store_true", default=S)
    w.add_argument("--R", default=S, help="matrix literal, e.g. '1,-1' or '1,0;0,1'")
    w.add_argument("--nu", default=S)

    s = sub.add_parser("simulate", help="simulate a Gaussian VARFIMA(0,d,0) path")
    common(s)
    _sim_flags(s)

    mc = sub.add_parser("montecarlo", help="replicated simulate/estimate experiment")
    common(mc)
    _sim_flags(mc)
    mc.add_argument("--replications", type=int, default=S)
    mc.add_argument("--estimator", default=S, help="comma list of raw,smoothed,tapered")
    mc.add_argument("--alpha", type=float, default=S)
    mc.add_argument("--beta", type=float, default=S)
    mc.add_argument("--skip-pole", action="store_true", default=S)
    mc.add_argument("--no-demean", action="store_true", default=S)
    mc.add_argument("--workers", type=int, default=S)
    mc.add_argument("--format", choices=["csv", "json"], default=S)
    mc.add_argument("--estimates-output", default=S, help="per-replication estimates CSV")
    mc.add_argument("--full-scale", action="store_true", default=S,
                    help="1000 replications and truncation 50000")

    pd_ = sub.add_parser("plotdata", help="histogram/density/scatter data from estimates")
    common(pd_)
    pd_.add_argument("--input", default=S)
    return p


def _sim_flags(sp):
    S = argparse.SUPPRESS
    sp.add_argument("--d", default=S, help="comma list of memory parameters")
    sp.add_argument("--rho", type=float, default=S, help="innovation correlation (q=2)")
    sp.add_argument("--corr", default=S, help="innovation correlation matrix literal")
    sp.add_argument("--n", type=int, default=S)
    sp.add_argument("--seed", type=int, default=S)
    sp.add_argument("--truncation", type=int, default=S)


def resolve(argv: List[str]):
    """Parse ``argv`` into ``(command, config)`` with config-file values merged in."""
    parser = build_parser()
    ns = vars(parser.parse_args(argv))
    cmd = ns.pop("command")
    cfg = dict(DEFAULTS[cmd])
    path = ns.pop("config", None)
    if path is not None:
        file_ns = vars(parser.parse_args([cmd] + read_config_file(path)))
        file_ns.pop("command")
        file_ns.pop("config", None)
        cfg.update(file_ns)
    cfg.update(ns)
    return cmd, cfg


# --------------------------------------------------------------- commands

def _innovation_corr(cfg, q):
    if cfg.get("corr") is not None:
        return parse_matrix(cfg["corr"])
    rho = cfg.get("rho")
    if rho is None:
        return np.eye(q)
    if q != 2:
        raise InputError("--rho applies to bivariate designs; use --corr for q != 2")
    return np.array([[1.0, rho], [rho, 1.0]])


def _spec(cfg, seed=None):
    d = parse_vector(cfg["d"])
    try:
        return varfima.VarfimaSpec(d, _innovation_corr(cfg, d.size), truncation=cfg["truncation"],
                                   seed=cfg["seed"] if seed is None else seed, n=cfg["n"])
    except ValueError as exc:
        raise InputError(str(exc)) from None


def cmd_estimate(cfg) -> dict:
    if cfg["input"] is None:
        raise InputError("--input is required")
    names, X = read_csv(cfg["input"])
    n, q = X.shape
    m = cfg["m"] if cfg["m"] is not None else gse.bandwidth(n, cfg["alpha"])
    if n < 2 * m or m < 1:
        raise InputError(f"need n >= 2m, got n={n}, m={m}")
    space = None
    if cfg["theta_min"] is not None or cfg["theta_max"] is not None:
        lo = parse_vector(cfg["theta_min"]) if cfg["theta_min"] is not None else np.full(q, -gse.BOUND)
        hi = parse_vector(cfg["theta_max"]) if cfg["theta_max"] is not None else np.full(q, gse.BOUND)
        lo = np.broadcast_to(lo, (q,)) if lo.size == 1 else lo
        hi = np.broadcast_to(hi, (q,)) if hi.size == 1 else hi
        try:
            space = gse.ParamSpace(lo, hi)
        except ValueError as exc:
            raise InputError(str(exc)) from None
    taper = spectral.taper_by_name(cfg["taper"])
    try:
        series = spectral.MultiSeries(X)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    fit = gse.estimate(series, cfg["estimator"], m, beta=cfg["beta"], ell=cfg["ell"],
                       skip_pole=cfg["skip_pole"], taper=taper, space=space,
                       demean=not cfg["no_demean"])
    inf = inference.fit_inference(fit)
    resolved = dict(cfg)
    resolved["m"] = m
    if cfg["estimator"] == "smoothed" and cfg["ell"] is None:
        resolved["ell"] = gse.bandwidth(n, cfg["beta"])
    return {
        "schema": SCHEMA,
        "command": "estimate",
        "config": resolved,
        "components": names,
        "n": n,
        "q": q,
        "m": m,
        "estimator": cfg["estimator"],
        "d_hat": fit.d_hat,
        "g_hat": fit.g_hat,
        "g_corrected": inf["g_corrected"],
        "omega": inf["omega"],
        "std_err": inf["std_err"],
        "objective": fit.objective,
        "converged": fit.converged,
        "at_boundary": fit.at_boundary,
        "iterations": fit.iterations,
    }


def transform(X: np.ndarray, mode: str, lines=None) -> np.ndarray:
    """Log returns ``log x_{t+1} - log x_t`` or their squares, ``n - 1`` rows."""
    if mode not in ("log_return", "squared_log_return"):
        raise InputError(f"unknown transform mode {mode!r}")
    bad = np.argwhere(X <= 0)
    if bad.size:
        r, c = bad[0]
        raise InputError(f"log transform needs positive values, found {X[r, c]!r}",
                         line=lines[r] if lines else int(r) + 1, column=int(c) + 1)
    if X.shape[0] < 2:
        raise InputError("transform needs at least two rows")
    lr = np.diff(np.log(X), axis=0)
    return lr if mode == "log_return" else lr ** 2


def cmd_transform(cfg) -> str:
    if cfg["input"] is None:
        raise InputError("--input is required")
    names, X, lines = read_csv(cfg["input"], with_lines=True)
    return format_csv(names, transform(X, cfg["mode"], lines), cfg)


def cmd_test(cfg) -> dict:
    if cfg["input"] is None:
        raise InputError("--input is required")
    try:
        with open(cfg["input"], encoding="utf-8") as fh:
            report = json.load(fh)
        d = np.asarray(report["d_hat"], dtype=float)
        Om = np.asarray(report["omega"], dtype=float)
        m = int(report["m"])
    except (OSError, ValueError, KeyError) as exc:
        raise InputError(f"invalid fit report: {exc}") from None
    q = d.size
    chosen = sum(bool(x) for x in (cfg["common_d"], cfg["i0"], cfg["R"] is not None))
    if chosen != 1:
        raise InputError("choose exactly one of --common-d, --i0, --R")
    if cfg["common_d"]:
        R, nu = inference.common_d_restriction(q)
        name = "common-d"
    elif cfg["i0"]:
        R, nu = inference.i0_restriction(q)
        name = "I(0)"
    else:
        R = parse_matrix(cfg["R"])
        nu = parse_vector(cfg["nu"]) if cfg["nu"] is not None else np.zeros(R.shape[0])
        name = "custom"
    if cfg["nu"] is not None and name != "custom":
        nu = parse_vector(cfg["nu"])
    try:
        res = inference.wald_test(R, nu, d, Om, m)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return {"schema": SCHEMA, "command": "test", "config": cfg, "hypothesis": name,
            "R": res.R, "nu": res.nu, "d_hat": d, "m": m,
            "T": res.T, "dof": res.dof, "p_value": res.p_value}


def cmd_simulate(cfg) -> str:
    spec = _spec(cfg)
    X = varfima.simulate(spec).values
    names = [f"x{i + 1}" for i in range(X.shape[1])]
    return format_csv(names, X, cfg)


def _mc_design(cfg) -> montecarlo.McDesign:
    if cfg["full_scale"]:
        cfg = dict(cfg, replications=1000, truncation=varfima.DEFAULT_TRUNCATION)
    spec = _spec(cfg)
    kinds = [k.strip() for k in str(cfg["estimator"]).split(",") if k.strip()]
    try:
        ests = [montecarlo.EstimatorConfig(k, cfg["alpha"], cfg["beta"] if k == "smoothed" else None,
                                           cfg["skip_pole"] and k == "smoothed", not cfg["no_demean"])
                for k in kinds]
        return montecarlo.McDesign(spec, ests, cfg["replications"], cfg["seed"])
    except ValueError as exc:
        raise InputError(str(exc)) from None


def cmd_montecarlo(cfg):
    design = _mc_design(cfg)
    table = montecarlo.run(design, cfg["workers"])
    table.config = dict(cfg, resolved_design=table.config)
    fmt = cfg["format"] or ("json" if str(cfg["output"]).endswith(".json") else "csv")
    estimates_csv = None
    if table.estimates:
        cols, names = [], []
        for tag, vals in table.estimates.items():
            for i in range(design.spec.q):
                names.append(f"{tag}_d{i + 1}")
                cols.append(vals[:, i] if len(vals) else np.array([]))
        if all(len(c) == len(cols[0]) for c in cols):
            estimates_csv = format_csv(names, np.column_stack(cols), cfg)
    return (table.to_json() + "\n" if fmt == "json" else table.to_csv()), estimates_csv


def kde(values, grid_points: int = 201) -> dict:
    """Gaussian kernel density with Silverman bandwidth ``1.06 * sd * R**(-1/5)``."""
    v = np.asarray(values, dtype=float)
    R = v.size
    # identical values: the rounding residue of std is not an honest bandwidth
    sd = float(v.std(ddof=1)) if np.ptp(v) > 0 else 0.0
    h = 1.06 * sd * R ** (-0.2)
    if h == 0:
        grid = np.linspace(v[0] - 0.5, v[0] + 0.5, grid_points)
        dens = np.zeros(grid_points)
        dens[grid_points // 2] = 1.0 / (grid[1] - grid[0])
        return {"grid": grid, "density": dens, "bandwidth": 0.0}
    grid = np.linspace(v.min() - 3 * h, v.max() + 3 * h, grid_points)
    z = (grid[:, None] - v[None, :]) / h
    dens = np.exp(-0.5 * z ** 2).sum(axis=1) / (R * h * np.sqrt(2 * np.pi))
    return {"grid": grid, "density": dens, "bandwidth": h}


def plot_data(names, X) -> dict:
    if X.shape[0] < 10:
        raise InputError(f"plotdata needs at least 10 rows, got {X.shape[0]}")
    comps = {}
    for name, col in zip(names, X.T):
        edges = np.histogram_bin_edges(col, bins="fd")
        counts, edges = np.histogram(col, bins=edges)
        comps[name] = {"histogram": {"edges": edges, "counts": counts}, "kde": kde(col)}
    scatter = [{"x": a, "y": b, "x_values": X[:, i], "y_values": X[:, j]}
               for i, a in enumerate(names) for j, b in enumerate(names) if i < j]
    return {"schema": SCHEMA, "command": "plotdata", "rows": X.shape[0],
            "components": comps, "scatter": scatter}


def cmd_plotdata(cfg) -> dict:
    if cfg["input"] is None:
        raise InputError("--input is required")
    names, X = read_csv(cfg["input"])
    doc = plot_data(names, X)
    doc["config"] = cfg
    return doc


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cmd, cfg = resolve(argv)
        if cmd == "estimate":
            _write(_dump(cmd_estimate(cfg)), cfg["output"])
        elif cmd == "transform":
            _write(cmd_transform(cfg), cfg["output"])
        elif cmd == "test":
            _write(_dump(cmd_test(cfg)), cfg["output"])
        elif cmd == "simulate":
            _write(cmd_simulate(cfg), cfg["output"])
        elif cmd == "montecarlo":
            table, estimates = cmd_montecarlo(cfg)
            _write(table, cfg["output"])
            if cfg["estimates_output"] and estimates is not None:
                _write(estimates, cfg["estimates_output"])
        elif cmd == "plotdata":
            _write(_dump(cmd_plotdata(cfg)), cfg["output"])
    except InputError as exc:
        print(f"longmem: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (EstimationError, MonteCarloError) as exc:
        print(f"longmem: estimation failed: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"longmem: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"longmem: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
