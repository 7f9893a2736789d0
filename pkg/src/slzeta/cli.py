"""Command-line front end.

Jobs are described in YAML::

    problem:
      interval: [0, 1]
      p: 1                                     # number or {kind: ..., ...}
      q: {kind: polynomial, coefficients: [0, 1]}
      r: 1
    bc: dirichlet                              # name, {type: separated, alpha, beta}
                                               # or {type: coupled, phi, R}
    tasks: [zeta, trace, determinant]
    n_max: 4
    eig_count: 50
    numerics:                                  # every key optional
      grid: 2048            # initial Volterra panel count
      max_grid: 16384       # refinement ceiling
      series_order: 12      # K, raised automatically to n_max + 2
      tol: 1.0e-8           # grid-refinement stability tolerance
      zero_threshold: 1.0e-9
      ivp_rtol: 1.0e-12
      ivp_atol: 1.0e-14
      weyl_slack: 0.2
      crosscheck_tol: 1.0e-6

Exit codes: 0 success, 1 configuration error, 2 hypothesis violation,
3 numerical degeneracy, 4 crosscheck disagreement.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import charseries, liouville, oracle, volterra, zeta
from .errors import ConfigurationError, PreconditionError, SLZetaError
from .problem import (Interval, SLProblem, Separated, bc_from_dict, coefficient_from_dict,
                      validate_basic, validate_liouville)

SCHEMA_VERSION = 1
TASKS = ("validate", "zeta", "trace", "determinant", "eigenvalues", "crosscheck")

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION, EXIT_DEGENERATE, EXIT_CROSSCHECK = 0, 1, 2, 3, 4

NUMERICS_DEFAULTS = {
    "grid": volterra.GRID_SIZE,
    "max_grid": 16384,
    "series_order": volterra.DEFAULT_K,
    "tol": volterra.STABILITY_TOL,
    "zero_threshold": charseries.ZERO_THRESHOLD,
    "ivp_rtol": 1e-12,
    "ivp_atol": 1e-14,
    "weyl_slack": oracle.WEYL_SLACK,
    "crosscheck_tol": 1e-6,
}

log = logging.getLogger("slzeta")


class SchemaError(ConfigurationError):
    def __init__(self, message, path=(), line=None):
        where = ".".join(str(p) for p in path) or "<root>"
        loc = f"line {line}: " if line is not None else ""
        super().__init__(f"{loc}{where}: {message}")
        self.path, self.line = tuple(path), line


@dataclass
class JobConfig:
    problem: SLProblem
    bc: object
    tasks: tuple
    n_max: int = 4
    eig_count: int = 50
    numerics: dict = field(default_factory=lambda: dict(NUMERICS_DEFAULTS))
    raw: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.tasks:
            raise SchemaError("at least one task is required", ("tasks",))
        if self.n_max < 1:
            raise SchemaError("must be >= 1", ("n_max",))
        if self.eig_count < 1:
            raise SchemaError("must be >= 1", ("eig_count",))


# --------------------------------------------------------------------------
# config parsing


def _line_of(node, path):
    """1-based source line of the YAML node at ``path`` (or its nearest ancestor)."""
    line = node.start_mark.line + 1 if node is not None else None
    for key in path:
        if isinstance(node, yaml.MappingNode):
            nxt = next((v for k, v in node.value if k.value == key), None)
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            nxt = node.value[key]
        else:
            nxt = None
        if nxt is None:
            break
        node, line = nxt, nxt.start_mark.line + 1
    return line


def _number(value, path, node, *, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"expected a number, got {value!r}", path, _line_of(node, path))
    if integer and value != int(value):
        raise SchemaError(f"expected an integer, got {value!r}", path, _line_of(node, path))
    return int(value) if integer else float(value)


def parse_config(text: str, source: str = "<config>") -> JobConfig:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise SchemaError(f"YAML syntax error: {exc}", (), mark.line + 1 if mark else None) from None
    if not isinstance(data, dict):
        raise SchemaError("top level must be a mapping", (), 1)
    known = {"problem", "bc", "tasks", "n_max", "eig_count", "numerics"}
    for key in data:
        if key not in known:
            raise SchemaError(f"unknown key (expected one of {sorted(known)})", (key,), _line_of(node, (key,)))

    prob = data.get("problem")
    if not isinstance(prob, dict):
        raise SchemaError("required mapping is missing", ("problem",), _line_of(node, ("problem",)))
    iv = prob.get("interval")
    if not isinstance(iv, (list, tuple)) or len(iv) != 2:
        raise SchemaError("expected [a, b]", ("problem", "interval"), _line_of(node, ("problem", "interval")))
    a, b = (_number(v, ("problem", "interval", i), node) for i, v in enumerate(iv))
    coefs = {}
    for name, default in (("p", 1.0), ("q", 0.0), ("r", 1.0)):
        path = ("problem", name)
        try:
            coefs[name] = coefficient_from_dict(prob.get(name, default))
        except (ConfigurationError, TypeError, ValueError) as exc:
            raise SchemaError(str(exc), path, _line_of(node, path)) from None
    smooth = prob.get("smoothness_class", "basic")
    try:
        problem = SLProblem(Interval(a, b), coefs["p"], coefs["q"], coefs["r"], smoothness_class=smooth)
    except ConfigurationError as exc:
        raise SchemaError(str(exc), ("problem",), _line_of(node, ("problem",))) from None

    bc = data.get("bc")
    if bc is None:
        raise SchemaError("required key is missing", ("bc",), None)
    if not isinstance(bc, (str, dict)):
        raise SchemaError("expected a name or a mapping", ("bc",), _line_of(node, ("bc",)))

    tasks = data.get("tasks", ["zeta"])
    if isinstance(tasks, str):
        tasks = [tasks]
    if not isinstance(tasks, list):
        raise SchemaError("expected a list of task names", ("tasks",), _line_of(node, ("tasks",)))
    for i, t in enumerate(tasks):
        if t not in TASKS:
            raise SchemaError(f"unknown task {t!r}; expected one of {TASKS}", ("tasks", i),
                              _line_of(node, ("tasks", i)))

    numerics = dict(NUMERICS_DEFAULTS)
    for key, value in (data.get("numerics") or {}).items():
        path = ("numerics", key)
        if key not in NUMERICS_DEFAULTS:
            raise SchemaError(f"unknown numerics key; expected one of {sorted(NUMERICS_DEFAULTS)}",
                              path, _line_of(node, path))
        numerics[key] = _number(value, path, node, integer=isinstance(NUMERICS_DEFAULTS[key], int))

    n_max = _number(data.get("n_max", 4), ("n_max",), node, integer=True)
    eig_count = _number(data.get("eig_count", 50), ("eig_count",), node, integer=True)
    try:
        return JobConfig(problem, bc, tuple(dict.fromkeys(tasks)), n_max, eig_count, numerics, raw=data)
    except SchemaError as exc:
        raise SchemaError(str(exc).split(": ", 1)[-1], exc.path, _line_of(node, exc.path)) from None


def load_config(path) -> JobConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from None
    return parse_config(text, str(path))


# --------------------------------------------------------------------------
# execution


def _bc_record(bc):
    if isinstance(bc, Separated):
        return {"type": "separated", "alpha": bc.alpha, "beta": bc.beta}
    return {"type": "coupled", "phi": bc.phi, "R": [list(row) for row in bc.R]}


def _cplx(z):
    z = complex(z)
    return {"real": z.real, "imag": z.imag}


class _Job:
    """Lazily computed intermediate results shared between tasks."""

    def __init__(self, cfg: JobConfig):
        self.cfg = cfg
        self.num = cfg.numerics
        self._series = self._bc = self._cs = self._spectrum = None

    @property
    def series(self):
        if self._series is None:
            K = max(self.num["series_order"], self.cfg.n_max + 2)
            self._series = volterra.compute_series(self.cfg.problem, K=K, grid_size=self.num["grid"],
                                                   max_grid=self.num["max_grid"], tol=self.num["tol"])
        return self._series

    @property
    def bc(self):
        if self._bc is None:
            raw = self.cfg.bc
            name = raw if isinstance(raw, str) else raw.get("name", "") if isinstance(raw, dict) else ""
            needs_base = "krein" in str(name).lower()
            try:
                self._bc = bc_from_dict(raw, self.cfg.problem, self.series if needs_base else None)
            except (KeyError, TypeError, ValueError) as exc:
                raise SchemaError(f"malformed boundary condition ({exc})", ("bc",)) from None
        return self._bc

    @property
    def char_series(self):
        if self._cs is None:
            self._cs = charseries.assemble(self.series, self.bc, self.num["zero_threshold"])
        return self._cs

    @property
    def spectrum(self):
        if self._spectrum is None:
            self._spectrum = oracle.find_eigenvalues(self.cfg.problem, self.bc, self.cfg.eig_count,
                                                     rtol=self.num["ivp_rtol"], atol=self.num["ivp_atol"])
        return self._spectrum

    def weyl_c(self):
        return oracle._weyl_c(self.cfg.problem)


def run_job(cfg: JobConfig) -> tuple[int, dict]:
    """Execute the tasks of one job; returns the exit code and the report."""
    report = {
        "schema_version": SCHEMA_VERSION,
        "config": _jsonable(cfg.raw),
        "results": {},
        "status": "ok",
    }
    res = report["results"]
    job = _Job(cfg)
    tasks = cfg.tasks
    code = EXIT_OK
    try:
        basic = validate_basic(cfg.problem)
        lv = validate_liouville(cfg.problem)
        res["validate"] = {"basic": list(basic.violations), "liouville": list(lv.violations)}
        if not basic.ok:
            raise PreconditionError("; ".join(basic.violations))
        if "determinant" in tasks and not lv.ok:
            raise PreconditionError("determinant needs the Liouville hypotheses: " + "; ".join(lv.violations))
        if tasks == ("validate",):
            return code, report
        res["bc"] = _bc_record(job.bc)

        if {"zeta", "trace", "crosscheck", "determinant"} & set(tasks):
            cs = job.char_series
            res["series"] = {"K": cs.K, "m0": cs.m0, "grid_size": job.series.grid_size,
                             "warnings": list(job.series.warnings)}
        if "zeta" in tasks or "crosscheck" in tasks:
            zr = zeta.zeta_integers(job.char_series, cfg.n_max)
            res["zeta"] = {str(n): v for n, v in zr.values.items()}
        if "trace" in tasks:
            res["trace"] = zeta.trace_inverse(job.char_series) if job.char_series.m0 == 0 else None
        if "determinant" in tasks:
            ld = liouville.liouville_transform(cfg.problem)
            gd = liouville.gamma_data(ld, job.bc, threshold=cfg.numerics["zero_threshold"])
            n_neg = oracle.count_negative(cfg.problem, job.bc, rtol=job.num["ivp_rtol"],
                                          atol=job.num["ivp_atol"])
            det = liouville.zeta_prime_zero(job.char_series, gd, ld.c, n_neg)
            res["determinant"] = {"zeta_prime_0": _cplx(det.zeta_prime_0), "determinant": det.determinant,
                                  "n_neg": det.n_neg, "m0": det.m0, "k0": det.k0, "c": ld.c}
        if "eigenvalues" in tasks or "crosscheck" in tasks:
            sp = job.spectrum
            res["eigenvalues"] = {"values": sp.eigenvalues.tolist(),
                                  "multiplicities": sp.multiplicities.tolist(),
                                  "search_floor": sp.search_floor, "count": sp.count}
        if "crosscheck" in tasks:
            rows, ok = [], True
            c = job.weyl_c()
            for n in range(1, cfg.n_max + 1):
                est, tail = oracle.zeta_partial(job.spectrum, n, c, slack=job.num["weyl_slack"])
                series_value = res["zeta"][str(n)]
                diff = abs(series_value - est)
                agree = diff <= tail + job.num["crosscheck_tol"]
                ok &= agree
                rows.append({"n": n, "series": series_value, "oracle": est, "tail_bound": tail,
                             "difference": diff, "agree": bool(agree)})
            res["crosscheck"] = rows
            if not ok:
                code = EXIT_CROSSCHECK
                report["status"] = "crosscheck disagreement"
    except SchemaError as exc:
        code, report["status"] = EXIT_CONFIG, f"configuration error: {exc}"
    except PreconditionError as exc:
        code, report["status"] = EXIT_VALIDATION, f"validation failed: {exc}"
    except ConfigurationError as exc:
        code, report["status"] = EXIT_CONFIG, f"configuration error: {exc}"
    except SLZetaError as exc:
        code, report["status"] = EXIT_DEGENERATE, f"{type(exc).__name__}: {exc}"
    return code, report


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def dumps_report(report) -> str:
    return json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"


def summary_table(report) -> str:
    res = report.get("results", {})
    lines = [f"status: {report['status']}"]
    if "series" in res:
        lines.append(f"m0 = {res['series']['m0']}   K = {res['series']['K']}")
    for n, v in res.get("zeta", {}).items():
        lines.append(f"zeta({n}) = {v:.15g}")
    if res.get("trace") is not None:
        lines.append(f"trace of inverse = {res['trace']:.15g}")
    if "determinant" in res:
        d = res["determinant"]
        zp = d["zeta_prime_0"]
        lines.append(f"zeta'(0) = {zp['real']:.15g} {'+' if zp['imag'] >= 0 else '-'} {abs(zp['imag']):.15g}i")
        lines.append(f"determinant = {d['determinant']:.15g}   (n_neg = {d['n_neg']}, k0 = {d['k0']})")
    if "eigenvalues" in res:
        ev = res["eigenvalues"]
        head = ", ".join(f"{v:.10g}" + (" (x2)" if m == 2 else "")
                         for v, m in zip(ev["values"][:6], ev["multiplicities"][:6]))
        lines.append(f"eigenvalues [{ev['count']}]: {head}{', ...' if len(ev['values']) > 6 else ''}")
    if "crosscheck" in res:
        lines.append(f"{'n':>3} {'series':>22} {'oracle':>22} {'diff':>10} {'tail':>10}  ok")
        for row in res["crosscheck"]:
            lines.append(f"{row['n']:>3} {row['series']:>22.15g} {row['oracle']:>22.15g} "
                         f"{row['difference']:>10.2e} {row['tail_bound']:>10.2e}  {'yes' if row['agree'] else 'NO'}")
    if "validate" in res:
        v = res["validate"]
        lines.append("validation: basic " + ("ok" if not v["basic"] else "; ".join(v["basic"]))
                     + ", liouville " + ("ok" if not v["liouville"] else "; ".join(v["liouville"])))
    return "\n".join(lines)


# --------------------------------------------------------------------------
# entry point


VERB_TASKS = {
    "validate": ("validate",),
    "eigs": ("eigenvalues",),
    "crosscheck": ("zeta", "crosscheck"),
}


def _build_parser():
    parser = argparse.ArgumentParser(prog="slzeta",
                                     description="Spectral zeta values and determinants of Sturm-Liouville problems.")
    sub = parser.add_subparsers(dest="verb", required=True)
    helps = {
        "validate": "check the coefficient hypotheses only",
        "compute": "run the tasks listed in the config",
        "eigs": "compute eigenvalues with the oracle",
        "crosscheck": "compare series zeta values with oracle partial sums",
    }
    for verb, text in helps.items():
        p = sub.add_parser(verb, help=text)
        p.add_argument("--config", required=True, action="append", metavar="PATH",
                       help="YAML job file (repeat for a batch)")
        p.add_argument("--out", metavar="PATH",
                       help="report file; a directory when several configs are given")
        p.add_argument("--n-max", type=int, help="highest zeta index")
        p.add_argument("--eig-count", type=int, help="number of eigenvalues for the oracle")
        p.add_argument("--grid", type=int, help="initial Volterra panel count")
        p.add_argument("--tol", type=float, help="grid-refinement stability tolerance")
        p.add_argument("--jobs", type=int, default=1, help="parallel jobs in batch mode")
        p.add_argument("-q", "--quiet", action="store_true", help="suppress the console table")
    return parser


def _apply_flags(cfg: JobConfig, args) -> JobConfig:
    if args.verb in VERB_TASKS:
        cfg.tasks = VERB_TASKS[args.verb]
    if args.n_max is not None:
        cfg.n_max = args.n_max
    if args.eig_count is not None:
        cfg.eig_count = args.eig_count
    if args.grid is not None:
        cfg.numerics["grid"] = args.grid
    if args.tol is not None:
        cfg.numerics["tol"] = args.tol
    cfg.__post_init__()
    return cfg


def _run_one(path, args):
    try:
        cfg = _apply_flags(load_config(path), args)
    except ConfigurationError as exc:
        return EXIT_CONFIG, {"schema_version": SCHEMA_VERSION, "config": None, "results": {},
                             "status": f"configuration error: {path}: {exc}"}
    return run_job(cfg)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    paths = args.config
    if len(paths) > 1 and args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            outcomes = list(pool.map(_run_one, paths, [args] * len(paths)))
    else:
        outcomes = [_run_one(p, args) for p in paths]

    for path, (code, report) in zip(paths, outcomes):
        text = dumps_report(report)
        if args.out:
            out = Path(args.out)
            if len(paths) > 1:
                out = out / (Path(path).stem + ".json")
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(text, encoding="utf-8")
        elif args.quiet:
            sys.stdout.write(text)
        if not args.quiet:
            if len(paths) > 1:
                print(f"== {path}")
            print(summary_table(report))
        if code:
            print(f"{path}: {report['status']}", file=sys.stderr)
    return max(code for code, _ in outcomes)


if __name__ == "__main__":
    sys.exit(main())
