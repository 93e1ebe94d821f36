"""Command line: ``stressflex {analyze,sweep,slide,project}``.

Exit codes: 0 success, 1 analysis-state failure (an applicable Izmestiev
certificate failed), 2 input error.  Errors are printed as JSON on stdout.
"""
from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .analysis import (
    FAIL_THRESHOLD,
    HOLD_THRESHOLD,
    GeneratorSpec,
    analyze_framework,
    expand_apex_strategy,
    projection_check,
    sweep_strong_conjecture,
)
from .errors import InputError, OffParseError, StressFlexError
from .polytope import NAMED_POLYTOPES, TOL_GEOM, choose_apex, cone, make_named, random_simple_polytope, read_off, slide
from .report import (
    SCHEMA_VERSION,
    analysis_dict,
    dumps,
    flat_csv,
    format_float,
    projection_dict,
    table_csv,
)
from .rigidity import TOL_RANK
from .stress import TOL_EIG

SWEEP_COLUMNS = [
    "seed", "apex", "n", "edges", "rank", "stress_dim", "nontrivial_flex_dim", "rank_gap_ratio",
    "pairs", "max_relative_residual", "trivial_max_relative", "izmestiev", "verdict", "error",
]


class UsageError(InputError):
    pass


def _apex_arg(text):
    if "," in text:
        try:
            return tuple(float(x) for x in text.split(","))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad apex coordinates {text!r}") from None
    return text


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_argument_group("model")
    src.add_argument("--model", choices=NAMED_POLYTOPES)
    src.add_argument("--off", metavar="PATH")
    src.add_argument("--random-simple", action="store_true",
                     help="random simple polytope from --planes halfspaces")
    src.add_argument("--planes", type=int, default=10)
    common.add_argument("--apex", type=_apex_arg, default="centroid",
                        help="centroid | interior-random | exterior-random | x,y,z[,w]")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol-rank", type=_positive_float, default=TOL_RANK)
    common.add_argument("--tol-residual", type=_positive_float, default=HOLD_THRESHOLD)
    common.add_argument("--tol-fail", type=_positive_float, default=FAIL_THRESHOLD)
    common.add_argument("--labeling", choices=("tensegrity", "bars"), default="tensegrity")
    common.add_argument("--out", metavar="PATH")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--timing", action="store_true",
                        help="add wall-clock seconds (breaks byte-identical output)")

    parser = argparse.ArgumentParser(prog="stressflex", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="full report for one coned polytope")
    sw = sub.add_parser("sweep", parents=[common], help="stress-flex residuals over many instances")
    sw.add_argument("--count", type=int, default=10)
    sw.add_argument("--workers", type=int, default=1)
    sl = sub.add_parser("slide", parents=[common], help="compare before/after sliding to the apex")
    sl.add_argument("--t", metavar="T[,T...]",
                    help="slide factors (one value is broadcast); default seeded U(0.5, 1.5)")
    sub.add_parser("project", parents=[common], help="projected-framework reformulation")
    return parser


def canonical_command(args) -> list:
    """Argument list that regenerates the report (``--out`` excluded)."""
    cmd = [args.command]
    if args.model:
        cmd += ["--model", args.model]
    if args.off:
        cmd += ["--off", args.off]
    if args.random_simple:
        cmd += ["--random-simple", "--planes", str(args.planes)]
    apex = args.apex if isinstance(args.apex, str) else ",".join(format_float(x) for x in args.apex)
    cmd += ["--apex", apex, "--seed", str(args.seed),
            "--tol-rank", format_float(args.tol_rank),
            "--tol-residual", format_float(args.tol_residual),
            "--tol-fail", format_float(args.tol_fail),
            "--labeling", args.labeling, "--format", args.format]
    if args.command == "sweep":
        cmd += ["--count", str(args.count)]
    if args.command == "slide" and args.t:
        cmd += ["--t", args.t]
    return cmd


def _model_descriptor(args):
    chosen = [bool(args.model), bool(args.off), bool(args.random_simple)]
    if sum(chosen) != 1:
        raise UsageError("choose exactly one of --model, --off, --random-simple")
    if args.model:
        return {"model": args.model}
    if args.off:
        return {"off": args.off}
    return {"random_simple": {"planes": args.planes, "seed": args.seed}}


def _load_polytope(args, seed=None):
    if args.model:
        return make_named(args.model)
    if args.off:
        try:
            return read_off(args.off)
        except OSError as exc:
            raise InputError(f"cannot read {args.off}: {exc.strerror}") from None
    return random_simple_polytope(args.seed if seed is None else seed, args.planes)


def _tolerances(args):
    return {
        "rank_relative": args.tol_rank,
        "residual_holds": args.tol_residual,
        "residual_fails": args.tol_fail,
        "eigenvalue_relative": TOL_EIG,
        "geometry_relative": TOL_GEOM,
    }


def _header(args):
    return {
        "schema": SCHEMA_VERSION,
        "command": args.command,
        "command_line": canonical_command(args),
        "input": _model_descriptor(args),
        "seed": args.seed,
        "labeling": args.labeling,
        "tolerances": _tolerances(args),
    }


def _apex_descriptor(args, point):
    strategy = args.apex if isinstance(args.apex, str) else "explicit"
    return {"strategy": strategy, "point": point}


def _single_apex(args):
    if isinstance(args.apex, str) and args.apex in ("interior", "exterior"):
        return expand_apex_strategy(args.apex)[0]
    if args.apex == "both":
        raise UsageError("--apex both is only valid for sweep")
    return args.apex


def _analyze_one(args, poly, apex=None):
    apex = choose_apex(poly, _single_apex(args) if apex is None else apex, args.seed)
    fw = cone(poly, apex, args.labeling)
    return fw, analyze_framework(fw, args.tol_rank, args.tol_residual, args.tol_fail)


def cmd_analyze(args):
    poly = _load_polytope(args)
    fw, res = _analyze_one(args, poly)
    report = _header(args)
    report["apex"] = _apex_descriptor(args, fw.apex)
    report["polytope"] = {"n": poly.n, "dim": poly.dim, "facets": len(poly.facets),
                          "convex": poly.is_convex(), "closed": poly.is_closed()}
    report.update(analysis_dict(res))
    proj = projection_check(poly, args.seed, args.tol_rank, hold=args.tol_residual, fail=args.tol_fail)
    report["projection"] = projection_dict(proj)
    code = 1 if res.izmestiev_status == "failed" else 0
    return report, code


def cmd_sweep(args):
    if args.count < 1:
        raise UsageError("--count must be at least 1")
    descriptor = _model_descriptor(args)
    if args.random_simple:
        gen = GeneratorSpec("random_simple", planes=args.planes)
    else:
        gen = GeneratorSpec(polytope=_load_polytope(args))
    apex = args.apex if isinstance(args.apex, str) else None
    if apex is None:
        raise UsageError("sweep needs an apex strategy, not explicit coordinates")
    expand_apex_strategy(apex)
    seeds = range(args.seed, args.seed + args.count)
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            result = sweep_strong_conjecture(gen, seeds, apex, args.tol_rank, args.tol_residual,
                                             args.tol_fail, args.labeling, runner=pool.map)
    else:
        result = sweep_strong_conjecture(gen, seeds, apex, args.tol_rank, args.tol_residual,
                                         args.tol_fail, args.labeling)
    report = _header(args)
    report["input"] = descriptor
    report["apex"] = {"strategy": apex}
    report["summary"] = result["summary"]
    report["rows"] = result["rows"]
    return report, 0


def _slide_summary(res):
    d = analysis_dict(res)
    return {"dimensions": d["dimensions"], "stress_flex": d["stress_flex"],
            "stability": d["stability"], "izmestiev_status": res.izmestiev_status}


def cmd_slide(args):
    poly = _load_polytope(args)
    fw, before = _analyze_one(args, poly)
    if args.t:
        try:
            t = np.array([float(x) for x in args.t.split(",")])
        except ValueError:
            raise UsageError(f"bad slide factors {args.t!r}") from None
        if t.size == 1:
            t = np.full(poly.n, t[0])
    else:
        t = np.random.default_rng(args.seed).uniform(0.5, 1.5, poly.n)
    slid = slide(fw, t)
    after = analyze_framework(slid, args.tol_rank, args.tol_residual, args.tol_fail)
    keys = ("edges", "rank", "nontrivial_flex", "stress")
    db, da = before.dimensions(), after.dimensions()
    report = _header(args)
    report["apex"] = _apex_descriptor(args, fw.apex)
    report["t"] = t
    report["dims_preserved"] = all(db[k] == da[k] for k in keys)
    report["residual_before"] = before.max_relative
    report["residual_after"] = after.max_relative
    report["verdict_before"] = before.verdict
    report["verdict_after"] = after.verdict
    report["before"] = _slide_summary(before)
    report["after"] = _slide_summary(after)
    return report, 0


def cmd_project(args):
    poly = _load_polytope(args)
    proj = projection_check(poly, args.seed, args.tol_rank, hold=args.tol_residual, fail=args.tol_fail)
    fw, coned = _analyze_one(args, poly)
    report = _header(args)
    report["projection"] = projection_dict(proj)
    report["coned"] = {
        "apex": _apex_descriptor(args, fw.apex),
        "verdict": coned.verdict,
        "max_relative_residual": coned.max_relative,
    }
    report["agrees"] = (proj.verdict == coned.verdict
                        or "vacuous" in (proj.verdict, coned.verdict))
    return report, 0


COMMANDS = {"analyze": cmd_analyze, "sweep": cmd_sweep, "slide": cmd_slide, "project": cmd_project}


def _render(report, args):
    if args.format == "json":
        return dumps(report)
    if args.command == "sweep":
        return table_csv(report["rows"], SWEEP_COLUMNS)
    return flat_csv(report)


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _error_report(exc, code):
    err = {"type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, OffParseError) and exc.line is not None:
        err["line"] = exc.line
    return dumps({"schema": SCHEMA_VERSION, "error": err, "exit_code": code})


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        report, code = COMMANDS[args.command](args)
    except InputError as exc:
        sys.stdout.write(_error_report(exc, 2))
        return 2
    except StressFlexError as exc:
        sys.stdout.write(_error_report(exc, 1))
        return 1
    if args.timing:
        report["wall_clock_seconds"] = time.perf_counter() - start
    _emit(_render(report, args), args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
