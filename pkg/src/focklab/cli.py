"""Command-line front end.

Every subcommand emits a JSON report (sorted keys, resolved config and
tolerances embedded) and, where a table makes sense, a CSV with a header row.
Computed numbers appear as ``{"value": x, "rel_error": e}``.

Exit codes: 0 success, 1 domain error (error name on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from typing import Sequence

import numpy as np

from . import __version__
from .errors import FocklabError, OutOfCaseRange
from .functions import builtin_function
from .weights import RadialWeight, class_I_report

SUBCOMMANDS = ("lp", "cover", "carleson", "tg-check", "schatten", "shift", "density", "weight-info")
# pointwise closed-form evaluations; quadrature results carry their own estimate
EVAL_REL = 1e-12


@dataclass
class RunConfig:
    """Resolved parameters of one run; round-trips through the key = value format."""

    subcommand: str = ""
    weight: str = "power:3"
    functions: list = field(default_factory=list)
    symbol: str = ""
    measure: str = ""
    p: float = 2.0
    q: float | None = None
    delta: float | None = None
    grid_step: float | None = None
    t_const: float | None = None
    r_min: float | None = None
    r_max: float | None = None
    n: int | None = None
    grid_n: int = 200
    grid_r: float | None = None
    sizes: list = field(default_factory=lambda: [50, 100, 200])
    n_max: int = 200
    tol: float = 1e-9
    format: str = "json"
    output: str = ""
    csv: str = ""
    seed: int = 0

    _LISTS = {"functions": str, "sizes": int}

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in self._LISTS:
                v = ";".join(str(x) for x in v)
            elif v is None:
                v = ""
            else:
                v = repr(v) if isinstance(v, float) else str(v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse_text(cls, text: str) -> dict:
        """key = value pairs with ``#`` comments, typed by the field defaults."""
        types = {f.name: f for f in fields(cls)}
        out: dict = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            key, val = key.strip().replace("-", "_"), val.strip()
            if not sep or key not in types:
                raise ValueError(f"config line {lineno}: unknown entry {raw.strip()!r}")
            out[key] = cls._coerce(key, val)
        return out

    @classmethod
    def _coerce(cls, key: str, val: str):
        if key in cls._LISTS:
            conv = cls._LISTS[key]
            return [conv(x.strip()) for x in val.split(";") if x.strip()]
        if isinstance(getattr(cls, key, None), str):
            return val
        if val == "":
            return None
        if key in ("p", "q", "delta", "grid_step", "t_const", "r_min", "r_max", "grid_r", "tol"):
            return float(val)
        if key in ("n", "grid_n", "n_max", "seed"):
            return int(val)
        return val

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        return cls(**cls.parse_text(text))


def measured(value, rel_error) -> dict:
    v = float(value)
    return {"value": v if math.isfinite(v) else str(v), "rel_error": float(rel_error)}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for row in rows:
        wr.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _grid(cfg: RunConfig, lo: float, hi: float, n: int) -> np.ndarray:
    lo = cfg.r_min if cfg.r_min is not None else lo
    hi = cfg.r_max if cfg.r_max is not None else hi
    return np.geomspace(lo, hi, cfg.n or n) if lo > 0 else np.linspace(lo, hi, cfg.n or n)


# -- subcommands ---------------------------------------------------------


def cmd_weight_info(cfg: RunConfig, w: RadialWeight):
    grid = _grid(cfg, 1.0, 6.0 if w.family == "doubleexp" else 50.0, 200)
    rep = class_I_report(w, grid).to_dict()
    rows = [(r, float(w.laplacian(r)), float(np.exp(w.log_tau(r)))) for r in grid]
    return rep, _csv_text(["r", "laplacian", "tau"], rows)


def cmd_lp(cfg: RunConfig, w: RadialWeight):
    from .littlewood_paley import DistortionTable, lp_sides

    if not cfg.functions:
        raise ValueError("lp needs at least one --fn")
    q = cfg.p if cfg.q is None else cfg.q
    fns = [builtin_function(s) for s in cfg.functions]
    table = DistortionTable(w, cfg.p, cfg.tol)
    comps = [lp_sides(f, w, cfg.p, q, tol=cfg.tol, table=table) for f in fns]
    ratios = [c.ratio for c in comps if c.ratio is not None]
    grid = _grid(cfg, 0.5, 10.0, 40)
    logpsi = table.log_psi(grid)
    psi = np.exp(logpsi)
    psi_dphi = np.exp(logpsi + w.log_dphi(grid))
    rep = {
        "p": cfg.p,
        "q": q,
        "weight": w.spec,
        "functions": [
            {"spec": s, **c.to_dict(), "ratio": None if c.ratio is None else measured(c.ratio, c.rel_error)}
            for s, c in zip(cfg.functions, comps)
        ],
        "ratios": [measured(c.ratio, c.rel_error) for c in comps if c.ratio is not None],
        "min_ratio": min(ratios) if ratios else None,
        "max_ratio": max(ratios) if ratios else None,
        "psi_profile": [
            {"r": r, "psi": measured(a, cfg.tol), "psi_dphi": measured(b, cfg.tol)}
            for r, a, b in zip(grid, psi, psi_dphi)
        ],
    }
    return rep, _csv_text(["r", "psi", "psi_dphi"], zip(grid, psi, psi_dphi))


def cmd_cover(cfg: RunConfig, w: RadialWeight):
    from .covering import build_covering, make_config, verify_covering

    R = cfg.r_max if cfg.r_max is not None else 15.0
    ccfg = make_config(w, R, delta=cfg.delta, grid_step=cfg.grid_step, t_const=cfg.t_const)
    cov = build_covering(w, ccfg)
    ver = verify_covering(cov, w, ccfg, seed=cfg.seed)
    rep = {"covering_config": ccfg.to_dict(), "verification": ver.to_dict()}
    rows = zip(cov.centers.real, cov.centers.imag, cov.radii)
    return rep, _csv_text(["x", "y", "radius"], rows)


def cmd_carleson(cfg: RunConfig, w: RadialWeight):
    from .embedding import DiscreteMeasure, carleson_qlp, carleson_sup

    if not cfg.measure:
        raise ValueError("carleson needs --measure FILE")
    mu = DiscreteMeasure.from_csv(cfg.measure)
    q = cfg.p if cfg.q is None else cfg.q
    coarse = max(2, cfg.grid_n // 2)
    if cfg.p <= q:
        fine = carleson_sup(mu, w, cfg.p, q, cfg.delta, cfg.grid_n, cfg.grid_r)
        half = carleson_sup(mu, w, cfg.p, q, cfg.delta, coarse, cfg.grid_r)
        err = abs(fine.K_value - half.K_value) / fine.K_value if fine.K_value else 0.0
        rep = fine.to_dict()
        rep["K_value"] = measured(fine.K_value, err)
    else:
        fine = carleson_qlp(mu, w, cfg.p, q, cfg.delta, cfg.grid_n, cfg.grid_r)
        half = carleson_qlp(mu, w, cfg.p, q, cfg.delta, coarse, cfg.grid_r)
        err = abs(fine - half) / fine if fine else 0.0
        rep = {"Lr_norm": measured(fine, err), "r": cfg.p / (cfg.p - q), "n_atoms": mu.size}
    return rep, None


def _threshold(w: RadialWeight, p: float, q: float, g):
    from .operators import degree_threshold

    try:
        return degree_threshold(w, p, q, g.degree).to_dict()
    except OutOfCaseRange:
        return None


def cmd_tg_check(cfg: RunConfig, w: RadialWeight):
    from .operators import tg_bounded_criterion, tg_qlp_criterion

    g = builtin_function(cfg.symbol)
    q = cfg.p if cfg.q is None else cfg.q
    grid = None if cfg.r_max is None and cfg.n is None else _grid(cfg, 1.0, cfg.r_max or 1e6, 400)
    if cfg.p <= q:
        rep = tg_bounded_criterion(g, w, cfg.p, q, grid)
        out = rep.to_dict()
        out["sup_estimate"] = measured(rep.sup_estimate, EVAL_REL)
        rows = zip(rep.r_grid, rep.values)
        table = _csv_text(["r", "log_value"], rows)
    else:
        rep = tg_qlp_criterion(g, w, cfg.p, q, grid)
        out = rep.to_dict()
        out["log_integral"] = measured(rep.log_integral, cfg.tol)
        table = None
    out["closed_form"] = _threshold(w, cfg.p, q, g)
    return out, table


def cmd_schatten(cfg: RunConfig, w: RadialWeight):
    from .operators import schatten_integral_criterion, schatten_tail

    g = builtin_function(cfg.symbol)
    st = schatten_tail(g, w, cfg.p, cfg.sizes)
    crit = schatten_integral_criterion(g, w, cfg.p)
    rep = {
        "p": cfg.p,
        "sizes": st.sizes,
        "partial_sums": [measured(s, EVAL_REL) for s in st.partial_sums],
        "convergent": st.convergent,
        "last_change": st.last_change,
        "integral_criterion": crit.to_dict(),
    }
    return rep, _csv_text(["N", "partial_sum"], zip(st.sizes, st.partial_sums))


def cmd_shift(cfg: RunConfig, w: RadialWeight):
    from .operators import shift_monotonicity, volterra_weights

    om = volterra_weights(w, cfg.n_max)
    dec, n0 = shift_monotonicity(om)
    rep = {
        "N_max": cfg.n_max,
        "eventually_decreasing": dec,
        "n_0": n0,
        "omega_last": measured(om[-1], 1e-10),
    }
    return rep, _csv_text(["n", "omega"], enumerate(om))


def cmd_density(cfg: RunConfig, w: RadialWeight):
    from .operators import taylor_tail_norm

    if len(cfg.functions) != 1:
        raise ValueError("density needs exactly one --fn")
    f = builtin_function(cfg.functions[0])
    Ms = list(range(0, max(f.degree, 1)))
    norms = [taylor_tail_norm(f, w, cfg.p, M) for M in Ms]
    rep = {
        "function": cfg.functions[0],
        "tail_norms": [{"M": M, "norm": measured(v, cfg.tol)} for M, v in zip(Ms, norms)],
        "strictly_decreasing": bool(np.all(np.diff(norms) < 0)),
    }
    return rep, _csv_text(["M", "tail_norm"], zip(Ms, norms))


COMMANDS = {
    "lp": cmd_lp,
    "cover": cmd_cover,
    "carleson": cmd_carleson,
    "tg-check": cmd_tg_check,
    "schatten": cmd_schatten,
    "shift": cmd_shift,
    "density": cmd_density,
    "weight-info": cmd_weight_info,
}


# -- argument handling -----------------------------------------------------


def _int_list(text: str) -> list:
    return [int(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file; flags override it")
    common.add_argument("--weight", help="weight spec, e.g. power:3, exp:1.5, gauss")
    common.add_argument("--p", type=float)
    common.add_argument("--q", type=float)
    common.add_argument("--fn", dest="functions", action="append", help="function spec (repeatable)")
    common.add_argument("--symbol", help="symbol g of T_g, e.g. poly:0,0,1")
    common.add_argument("--measure", help="CSV file with columns x,y,mass")
    common.add_argument("--delta", type=float)
    common.add_argument("--grid-step", type=float)
    common.add_argument("--t-const", type=float)
    common.add_argument("--r-min", type=float)
    common.add_argument("--r-max", type=float)
    common.add_argument("--n", type=int, help="radial grid size")
    common.add_argument("--grid-n", type=int)
    common.add_argument("--grid-r", type=float)
    common.add_argument("--sizes", type=_int_list, help="comma-separated truncation sizes")
    common.add_argument("--n-max", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--output", help="report path (default stdout)")
    common.add_argument("--csv", help="also write the CSV table here")
    common.add_argument("--seed", type=int)
    parser = argparse.ArgumentParser(prog="focklab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"focklab {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if ns.config:
        with open(ns.config) as fh:
            values.update(RunConfig.parse_text(fh.read()))
    for f in fields(RunConfig):
        v = getattr(ns, f.name, None)
        if v is not None:
            values[f.name] = v
    values["subcommand"] = ns.subcommand
    return RunConfig(**values)


def _emit(text: str, path: str) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(ns)
    except (OSError, ValueError, TypeError) as exc:
        parser.print_usage(sys.stderr)
        print(f"focklab: error: {exc}", file=sys.stderr)
        return 2
    try:
        w = RadialWeight.parse(cfg.weight)
        report, table = COMMANDS[cfg.subcommand](cfg, w)
    except FocklabError as exc:
        print(f"{exc.name}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        parser.print_usage(sys.stderr)
        print(f"focklab: error: {exc}", file=sys.stderr)
        return 2
    doc = {
        "version": __version__,
        "subcommand": cfg.subcommand,
        "config": asdict(cfg),
        "tolerances": {"quadrature": cfg.tol, "pointwise": EVAL_REL},
        "report": report,
    }
    body = json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n"
    if cfg.format == "csv":
        if table is None:
            print(f"focklab: error: {cfg.subcommand} has no CSV table", file=sys.stderr)
            return 2
        _emit(table, cfg.output)
    else:
        _emit(body, cfg.output)
    if cfg.csv and table is not None:
        _emit(table, cfg.csv)
    return 0


def main() -> int:
    return run(sys.argv[1:])
