"""Command-line front end.

Subcommands: ``check`` (matrix engine), ``region-check``, ``simulate``,
``integrate`` (exact integration debug tool), and ``validate``.  Reports are
JSON by default (``--format text`` for humans) with every rational carried
both exactly (as ``p/q`` strings) and as a decimal approximation.

Exit codes: 0 pass/true, 1 fail/false, 3 undecided, 2 for usage, parse, or
precondition errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from fractions import Fraction

from . import adversary as adversary_mod
from . import logic, polyint
from .automaton import DeadClock, InvalidModel, ModelParseError, load_model, validate_automaton
from .matrix_checker import DeltaNotDividingBound, DeltaTooLarge, run_matrix_check
from .rational import format_rational, parse_rational
from .region_checker import run_region_check
from .simulate import estimate_until, sample_path

_EXIT = {"pass": 0, "true": 0, "fail": 1, "false": 1, "undecided": 3}
_USAGE_ERROR = 2


def _rational_fields(name: str, value: Fraction) -> dict:
    return {name: format_rational(value), f"{name}_approx": float(value)}


def _model_hash(*paths: str) -> str:
    digest = hashlib.sha256()
    for path in paths:
        if not path:
            continue
        with open(path, "rb") as fh:
            digest.update(fh.read())
        digest.update(b"\x00")
    return digest.hexdigest()


def _load_adversary(spec: str):
    if spec == "first-edge":
        return adversary_mod.builtin_adversary(spec)
    with open(spec, "r", encoding="utf-8") as fh:
        return adversary_mod.load_policy(fh.read())


def _single_until(formula):
    leaves = logic.until_leaves(formula)
    if isinstance(formula, logic.Until) and len(leaves) == 1:
        return formula
    return None


def _emit(report: dict, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(report, sort_keys=True, indent=2))
        return
    for key in sorted(report):
        print(f"{key}: {report[key]}")


def _cmd_validate(args) -> int:
    sa = load_model(args.model)
    result = validate_automaton(sa)
    if result.ok:
        _emit({"verdict": "ok", "model_hash": _model_hash(args.model)}, args.format)
        return 0
    for violation in result.violations:
        print(f"{violation.code}: {violation.subject}: {violation.message}", file=sys.stderr)
    return _USAGE_ERROR


def _cmd_check(args) -> int:
    sa = load_model(args.model)
    adv = _load_adversary(args.adversary)
    formula = logic.parse_formula(args.formula)
    delta = parse_rational(args.delta)
    started = time.perf_counter()
    single = _single_until(formula)
    report: dict = {
        "engine": "matrix",
        "formula": args.formula,
        "model_hash": _model_hash(args.model, None if args.adversary == "first-edge" else args.adversary),
    }
    report.update(_rational_fields("delta", delta))
    if single is not None:
        result = run_matrix_check(sa, adv, single, delta)
        report["verdict"] = result.verdict
        report["iterations"] = result.iterations
        report.update(_rational_fields("total_pass", result.total_pass))
        report.update(_rational_fields("total_fail", result.total_fail))
        report.update(_rational_fields("error", result.error))
    else:
        options = logic.EngineOptions(engine="matrix", delta=delta, jobs=args.jobs)
        result = logic.check(sa, adv, formula, options)
        report["verdict"] = result.verdict
        report["until_verdicts"] = [leaf.verdict for leaf in result.leaves]
    report["wall_time_ms"] = int((time.perf_counter() - started) * 1000)
    _emit(report, args.format)
    return _EXIT[report["verdict"]]


def _cmd_region_check(args) -> int:
    sa = load_model(args.model)
    adv = _load_adversary(args.adversary)
    formula = logic.parse_formula(args.formula)
    started = time.perf_counter()
    single = _single_until(formula)
    report: dict = {
        "engine": "region",
        "formula": args.formula,
        "max_depth": args.max_depth,
        "model_hash": _model_hash(args.model, None if args.adversary == "first-edge" else args.adversary),
    }
    if single is not None:
        result = run_region_check(sa, adv, single, max_depth=args.max_depth)
        report["verdict"] = result.verdict
        report["depth"] = result.depth
        report.update(_rational_fields("sigma_p", result.sigma_p))
        report.update(_rational_fields("sigma_f", result.sigma_f))
        report["interval"] = [format_rational(result.interval[0]), format_rational(result.interval[1])]
    else:
        options = logic.EngineOptions(engine="region", max_depth=args.max_depth, jobs=args.jobs)
        result = logic.check(sa, adv, formula, options)
        report["verdict"] = result.verdict
        report["until_verdicts"] = [leaf.verdict for leaf in result.leaves]
    report["wall_time_ms"] = int((time.perf_counter() - started) * 1000)
    _emit(report, args.format)
    return _EXIT[report["verdict"]]


def _cmd_simulate(args) -> int:
    sa = load_model(args.model)
    adv = _load_adversary(args.adversary)
    formula = logic.parse_formula(args.formula)
    single = _single_until(formula)
    if single is None:
        print("simulate requires a single until formula", file=sys.stderr)
        return _USAGE_ERROR
    started = time.perf_counter()
    est = estimate_until(sa, adv, single, args.samples, args.seed)
    lo = max(0.0, est.mean - est.half_width)
    hi = min(1.0, est.mean + est.half_width)
    bound = float(single.prob_bound)
    if logic.interval_passes(lo, hi, single.prob_cmp, bound):
        verdict = "true"
    elif logic.interval_refutes(lo, hi, single.prob_cmp, bound):
        verdict = "false"
    else:
        verdict = "undecided"
    report = {
        "engine": "montecarlo",
        "formula": args.formula,
        "verdict": verdict,
        "mean": est.mean,
        "half_width": est.half_width,
        "samples": est.samples,
        "seed": est.seed,
        "model_hash": _model_hash(args.model, None if args.adversary == "first-edge" else args.adversary),
        "wall_time_ms": int((time.perf_counter() - started) * 1000),
    }
    if args.trace:
        path = sample_path(sa, adv, float(single.time_bound), args.seed)
        with open(args.trace, "w", encoding="utf-8") as fh:
            for step in path:
                fh.write(f"{step.entry_time:.12g} {step.location} {step.action or '-'}\n")
        report["trace"] = args.trace
    _emit(report, args.format)
    return _EXIT[verdict]


def _cmd_integrate(args) -> int:
    with open(args.constraints, "r", encoding="utf-8") as fh:
        text = fh.read()
    densities, constraints, order = polyint.parse_integration_problem(text)
    started = time.perf_counter()
    mass = polyint.polytope_probability(densities, constraints, elimination_order=order)
    report = {
        "engine": "integrate",
        "wall_time_ms": int((time.perf_counter() - started) * 1000),
    }
    report.update(_rational_fields("probability", mass))
    _emit(report, args.format)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="samc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, formula=True):
        p.add_argument("--model", required=True, help="automaton file")
        if formula:
            p.add_argument("--formula", required=True, help="formula text")
        p.add_argument(
            "--adversary",
            default="first-edge",
            help="policy file or the built-in name 'first-edge'",
        )
        p.add_argument("--format", choices=("json", "text"), default="json")
        p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("check", help="matrix engine")
    common(p)
    p.add_argument("--delta", required=True, help="time step as p/q")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("region-check", help="region-tree engine")
    common(p)
    p.add_argument("--max-depth", type=int, default=12)
    p.set_defaults(func=_cmd_region_check)

    p = sub.add_parser("simulate", help="Monte Carlo estimator")
    common(p)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", help="write one sampled path to this file")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("integrate", help="exact constrained integration")
    p.add_argument("--constraints", required=True, help="integration problem file")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.set_defaults(func=_cmd_integrate)

    p = sub.add_parser("validate", help="model well-formedness check")
    p.add_argument("--model", required=True)
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return _USAGE_ERROR if exc.code else 0
    try:
        return args.func(args)
    except (
        ModelParseError,
        InvalidModel,
        DeadClock,
        DeltaTooLarge,
        DeltaNotDividingBound,
        logic.ParseError,
        logic.NestedUntil,
        logic.UnknownProposition,
        logic.UnsupportedTimeBound,
        polyint.PolyIntError,
        adversary_mod.MissingPolicy,
        adversary_mod.ConflictingPolicy,
        adversary_mod.PolicyParseError,
        FileNotFoundError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _USAGE_ERROR


def run() -> None:
    sys.exit(main())
