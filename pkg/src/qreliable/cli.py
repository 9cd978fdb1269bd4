"""Command-line entry point.

Exit codes: 0 success, 1 a verification failed, 2 usage or argument error,
3 a resource budget would be exceeded.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import dynamics, gates, montecarlo, propagation, selftest
from .coeffs import coeffs
from .errors import ArgumentError, ConfigurationError, ResourceError
from .simplex import Dist, as_exact, float_tol, set_float_tol
from .thresholds import scalar_fixed_points, threshold_report

SCHEMA_VERSION = 1

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3


# ------------------------------------------------------------------ output

def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def fmt_rational(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _encode(obj, indent: int = 0) -> str:
    pad, inner = "  " * indent, "  " * (indent + 1)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, Fraction):
        return json.dumps(fmt_rational(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_encode(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(_encode(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + _encode(v, indent + 1) for v in obj) + "\n" + pad + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps_json(doc: dict) -> str:
    """JSON with a schema version, rationals as 'num/den' and 17-digit floats."""
    return _encode({"schema_version": SCHEMA_VERSION, **doc}) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _csv(header: Sequence[str], rows) -> str:
    lines = [f"# schema_version={SCHEMA_VERSION}", ",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, Fraction):
        return fmt_float(v)
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    return str(v)


def _number(text: str):
    """Exact Fraction for integer or 'p/q' text, float for decimal text."""
    try:
        if "." in text or "e" in text.lower():
            return float(text)
        return as_exact(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}") from None


DEFAULT_ENAND_GRID = "1/1000:1/6:1/1000"


def _grid(text: str) -> list[float]:
    """'lo:hi:step' as the points lo + i*step < hi (rationals allowed)."""
    try:
        lo, hi, step = (Fraction(t) for t in text.split(":"))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected LO:HI:STEP, got {text!r}") from None
    if step <= 0 or hi < lo:
        raise argparse.ArgumentTypeError(f"empty or reversed grid {text!r}")
    n = math.ceil((hi - lo) / step)
    return [float(lo + i * step) for i in range(n)]


def _floats(text: str) -> list[float]:
    try:
        return [float(Fraction(t)) for t in text.split(",") if t.strip()]
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}") from None


# ---------------------------------------------------------------- commands

def cmd_coeffs(args) -> int:
    t = coeffs(args.q, args.k, args.method)
    _emit(dumps_json({"q": t.q, "k": t.k, "method": args.method, "c": list(t.c)}), args.out)
    return EXIT_OK


def _threshold_doc(q: int, k: int) -> dict:
    r = threshold_report(coeffs(q, k))
    return {"q": q, "k": k, "C": r.C, "eps_transcritical": r.eps_transcritical,
            "eps_saddle": r.eps_saddle, "eps_saddle_bisection": r.eps_saddle_bisection}


def cmd_threshold(args) -> int:
    _emit(dumps_json(_threshold_doc(args.q, args.k)), args.out)
    return EXIT_OK


def fig1_rows(q_list: Sequence[int], k_list: Sequence[int]) -> list[tuple]:
    rows = []
    for q in q_list:
        for k in k_list:
            d = _threshold_doc(q, k)
            rows.append((q, k, d["eps_transcritical"], d["eps_saddle"]))
    return rows


def cmd_scan(args) -> int:
    _emit(_csv(("q", "k", "eps_transcritical", "eps_saddle"), fig1_rows(args.q_list, args.k_list)), args.out)
    return EXIT_OK


def fig2_rows(q: int, k: int, grid: Sequence[float]) -> list[tuple]:
    t = coeffs(q, k)
    return [(e, fp.a, fp.stability) for e in grid for fp in scalar_fixed_points(e, t)]


def cmd_fixed_points(args) -> int:
    if (args.eps is None) == (args.eps_grid is None):
        raise ArgumentError("fixed-points needs exactly one of --eps and --eps-grid")
    if args.eps_grid is not None:
        _emit(_csv(("eps", "a", "stability"), fig2_rows(args.q, args.k, args.eps_grid)), args.out)
        return EXIT_OK
    pts = scalar_fixed_points(args.eps, coeffs(args.q, args.k))
    doc = {"q": args.q, "k": args.k, "eps": args.eps,
           "fixed_points": [{"a": p.exact if p.exact is not None else p.a,
                             "stability": p.stability, "slope": p.slope} for p in pts]}
    _emit(dumps_json(doc), args.out)
    return EXIT_OK


def _spec(args) -> dynamics.MapSpec:
    partner = Dist.of(args.partner) if args.partner else None
    return dynamics.MapSpec(args.map, float(args.eps), args.q, args.k, partner)


def cmd_field(args) -> int:
    rows = dynamics.field_grid(_spec(args), args.resolution)
    _emit(_csv(("x", "y", "dx", "dy"), rows.tolist()), args.out)
    return EXIT_OK


def _fp_doc(fp: dynamics.SimplexFixedPoint) -> dict:
    return {"p": list(fp.dist), "region": fp.region, "stability": fp.stability,
            "spectral_radius": fp.spectral_radius}


def cmd_den_fixed_points(args) -> int:
    pts = dynamics.den_fixed_points(float(args.eps))
    _emit(dumps_json({"eps": args.eps, "fixed_points": [_fp_doc(p) for p in pts]}), args.out)
    return EXIT_OK


def cmd_sinks(args) -> int:
    pts = dynamics.sink_census(_spec(args), args.resolution)
    _emit(dumps_json({"map": args.map, "eps": args.eps, "sinks": [_fp_doc(p) for p in pts]}), args.out)
    return EXIT_OK


def cmd_verify_enand(args) -> int:
    results = []
    worst = 0.0
    for e in args.eps_grid:
        c = dynamics.enand_check(e)
        results.append({"eps": e, "passed": c.passed, "reason": c.reason})
        if not c.passed:
            continue
        for u in (0, 1):
            for v in (0, 1):
                out = dynamics.enand_map(dynamics.logical_dist(u, e), dynamics.logical_dist(v, e), e)
                g = dynamics.enand_closed_form(u, v, e)
                worst = max(worst, abs(g[0] - out[0]), abs(g[1] - out[1]))
    failures = [r for r in results if not r["passed"]]
    ok = not failures and worst < 1e-12
    doc = {"grid_points": len(results), "passed": ok, "closed_form_max_error": worst,
           "first_failure": failures[0]["eps"] if failures else None, "results": results}
    _emit(dumps_json(doc), args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify_pa(args) -> int:
    r = propagation.verify_pa(args.q, args.grid, args.eps_grid)
    lines = [f"verify-pa q={r.q} grid={args.grid}x{args.grid}x{args.eps_grid} points={r.points}"]
    for name, ok in (("prop_perm == pushforward", r.perm_ok), ("prop_add == pushforward", r.add_ok),
                     ("closure below (q-1)/q", r.closure_ok), ("prop_add monotone", r.monotone_ok)):
        lines.append(f"{'PASS' if ok else 'FAIL'}  {name}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if r.passed else EXIT_FAIL


def cmd_mul(args) -> int:
    r = propagation.mul_distinguishability(args.q, args.a)
    doc = {"q": args.q, "a": args.a, "p_correct": r.p_correct, "p_0": r.p_0, "margin": r.margin,
           "threshold": propagation.mul_margin_root(args.q)}
    _emit(dumps_json(doc), args.out)
    return EXIT_OK


def report_doc(cfg: montecarlo.ExperimentConfig, r: montecarlo.TrialReport) -> dict:
    # wall-clock time and thread count are left out so reports are byte-stable
    echo = montecarlo.config_to_dict(cfg)
    del echo["threads"]
    return {
        "config": echo,
        "sampling": r.sampling,
        "trials": r.trials,
        "seed": r.seed,
        "target": r.target,
        "histogram": list(r.histogram),
        "error_rate": r.error_rate,
        "ci95_half_width": r.half_width,
        "decoded_correctly": r.decoded_correctly,
        "bundle_reference": r.bundle_reference,
        "cases": [{"inputs": list(c.inputs), "target": c.target, "histogram": list(c.histogram),
                   "error_rate": c.error_rate, "ci95_half_width": c.half_width,
                   "bundle_errors": [list(b) for b in c.bundle_errors]} for c in r.cases],
    }


def cmd_simulate(args) -> int:
    try:
        doc = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigurationError("config must be a JSON object")
    cfg = montecarlo.config_from_dict(doc, seed=args.seed, trials=args.trials,
                                      threads=args.threads if args.threads > 1 else None)
    r = montecarlo.vn_experiment(cfg)
    _emit(dumps_json(report_doc(cfg, r)), args.out)
    return EXIT_OK


def cmd_gate_dump(args) -> int:
    g = gates.builtin_gate(args.kind, args.q, args.k, sigma=args.sigma, c=args.c)
    _emit(gates.dumps_gate(g), args.out)
    return EXIT_OK


def cmd_gate_load(args) -> int:
    try:
        text = Path(args.file).read_text()
    except OSError as exc:
        raise ArgumentError(f"cannot read {args.file}: {exc}") from None
    g = gates.loads_gate(text)
    dec = gates.pa_decompose(g)
    doc = {"name": g.name, "q": g.q, "k": g.k, "balanced": gates.is_balanced(g),
           "snp_restriction": gates.snp_restriction_check(g), "pseudo_additive": dec is not None}
    _emit(dumps_json(doc), args.out)
    return EXIT_OK


def cmd_selftest(args) -> int:
    results = selftest.run()
    for name, ok in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    return EXIT_OK if all(ok for _, ok in results) else EXIT_FAIL


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qreliable", description=__doc__.splitlines()[0])
    p.add_argument("--tol", type=float, default=None, help="floating sum-to-one tolerance")
    p.add_argument("--threads", type=int, default=1, help="worker threads for simulations")
    sub = p.add_subparsers(dest="command", required=True)

    def cmd(name, fn, help_text, out=True):
        s = sub.add_parser(name, help=help_text)
        s.set_defaults(func=fn)
        if out:
            s.add_argument("--out", help="output file (default stdout)")
        return s

    s = cmd("coeffs", cmd_coeffs, "majority error coefficients")
    s.add_argument("--q", type=int, required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--method", choices=("cv", "enum", "both"), default="cv")

    s = cmd("threshold", cmd_threshold, "transcritical and saddle-node noise levels")
    s.add_argument("--q", type=int, required=True)
    s.add_argument("--k", type=int, required=True)

    s = cmd("scan", cmd_scan, "threshold table over alphabet sizes and fan-ins (CSV)")
    s.add_argument("--q-list", type=_ints, default=list(range(2, 9)))
    s.add_argument("--k-list", type=_ints, default=[3, 5, 7, 9])

    s = cmd("fixed-points", cmd_fixed_points, "fixed points of the scalar map at one eps (JSON) or a grid (CSV)")
    s.add_argument("--q", type=int, default=3)
    s.add_argument("--k", type=int, default=3)
    s.add_argument("--eps", type=_number)
    s.add_argument("--eps-grid", type=_grid, metavar="LO:HI:STEP")

    for name, fn, text in (("field", cmd_field, "one-step displacement field on the simplex (CSV)"),
                           ("sinks", cmd_sinks, "attracting fixed points found by iterating a lattice")):
        s = cmd(name, fn, text)
        s.add_argument("--map", choices=("maj", "den", "enand"), default="den")
        s.add_argument("--eps", type=_number, required=True)
        s.add_argument("--q", type=int, default=3)
        s.add_argument("--k", type=int, default=3)
        s.add_argument("--res", "--resolution", dest="resolution", type=int, default=40)
        s.add_argument("--partner", type=_floats, help="ENAND partner distribution p0,p1,p2")

    s = cmd("den-fixed-points", cmd_den_fixed_points, "fixed points of the DEN map")
    s.add_argument("--eps", type=_number, required=True)

    s = cmd("verify-enand", cmd_verify_enand, "check the ENAND inequalities on an eps grid")
    s.add_argument("--eps-grid", type=_grid, default=_grid(DEFAULT_ENAND_GRID), metavar="LO:HI:STEP",
                   help=f"half-open grid [LO, HI) (default {DEFAULT_ENAND_GRID})")

    s = cmd("verify-pa", cmd_verify_pa, "check propagation formulas against exact push-forward")
    s.add_argument("--q", type=int, required=True)
    s.add_argument("--grid", type=int, default=20)
    s.add_argument("--eps-grid", type=int, default=5)

    s = cmd("mul", cmd_mul, "MUL distinguishability margin")
    s.add_argument("--q", type=int, required=True)
    s.add_argument("--a", type=_number, required=True)

    s = cmd("simulate", cmd_simulate, "run a Monte Carlo experiment from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int, help="overrides the config seed")
    s.add_argument("--trials", type=int, help="overrides the config trial count")

    g = sub.add_parser("gate", help="dump or load gate truth tables")
    gsub = g.add_subparsers(dest="gate_command", required=True)
    s = gsub.add_parser("dump", help="write a built-in gate table")
    s.set_defaults(func=cmd_gate_dump)
    s.add_argument("--kind", required=True, choices=("MAJ", "DEN", "ENAND", "ADD", "MUL", "PERM", "CONST"))
    s.add_argument("--q", type=int, required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--sigma", type=_ints)
    s.add_argument("--c", type=int)
    s.add_argument("--out")
    s = gsub.add_parser("load", help="validate a gate table file and report its properties")
    s.set_defaults(func=cmd_gate_load)
    s.add_argument("--file", required=True)
    s.add_argument("--out")

    cmd("selftest", cmd_selftest, "run the built-in invariant checks", out=False)
    return p


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    saved_tol = float_tol()
    try:
        if args.tol is not None:
            set_float_tol(args.tol)
        if args.threads < 1:
            raise ArgumentError("--threads must be >= 1")
        return args.func(args)
    except ResourceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ArgumentError, ConfigurationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        set_float_tol(saved_tol)


def main(argv: Sequence[str] | None = None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
