"""Command-line front end over ``.opm`` model files.

Exit status: 0 when all requested checks pass, 1 when a semantic check
fails, 2 for usage, parse or model errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from .dsl import DslError, Model, parse
from .modes import check_mode_functor
from .portgraph import PortGraphError, ValidationError
from .presentation import TermSyntaxError, compile_presentation, elaborate, parse_term, resolve_leaf
from .prob import check_prob_functor, format_probability, leaf_probability
from .stoch import check_lifting, diagnose, format_posterior

TOLERANCE_ENV = "OPMODEL_TOLERANCE"

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_ERROR = 2


class CliError(Exception):
    """A usage or model error (exit status 2)."""


def _load_model(path: str) -> Model:
    p = Path(path)
    if not p.exists():
        raise CliError(f"model file not found: {path}")
    try:
        return parse(p.read_text(encoding="utf-8"))
    except DslError as exc:
        raise CliError(f"{path}: {exc}") from exc


def _tolerance(args: argparse.Namespace) -> Fraction:
    raw = args.tolerance if args.tolerance is not None \
        else os.environ.get(TOLERANCE_ENV, "0")
    try:
        return Fraction(raw)
    except (ValueError, ZeroDivisionError) as exc:
        raise CliError(f"bad tolerance {raw!r}") from exc


def _frac(x: Fraction) -> str:
    return str(x)


def _pct(x: Fraction) -> float:
    return float(round(x * 100, 1))


def _emit(args: argparse.Namespace, text: str, payload: dict) -> None:
    if args.format == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


def cmd_validate(args: argparse.Namespace) -> int:
    model = _load_model(args.model)
    report = compile_presentation(model.presentation)
    payload = {
        "command": "validate",
        "success": report.success,
        "boundaries": report.boundary_count,
        "generators": report.generator_count,
        "equations": report.equation_count,
        "errors": list(report.errors),
        "equation_results": [
            {"equation": str(r.equation), "passed": r.passed,
             "error": r.error}
            for r in report.equation_reports],
    }
    _emit(args, str(report), payload)
    return EXIT_OK if report.success else EXIT_CHECK_FAILED


def cmd_compose(args: argparse.Namespace) -> int:
    model = _load_model(args.model)
    term = parse_term(args.term)
    arch = elaborate(model.presentation, term)
    payload = {
        "command": "compose",
        "term": str(term),
        "inputs": [{"slot": s, "boundary": b.name} for s, b in arch.inputs],
        "output": arch.output.name,
        "wires": [{"ports": [str(r) for r in w.sorted_ports()],
                   "type": w.type} for w in arch.wires],
    }
    _emit(args, arch.describe(), payload)
    return EXIT_OK


def _functor_checks(model: Model, names: list[str], tolerance: Fraction):
    """Dispatch named functors by kind; returns (reports, lifting trio)."""
    reports = []
    prob_name = modes_name = stoch_name = None
    for name in names:
        if name in model.prob_functors:
            prob_name = name
            reports.append((name, "prob", check_prob_functor(
                model.presentation, model.prob_functors[name], tolerance)))
        elif name in model.mode_functors:
            modes_name = name
            reports.append((name, "modes", check_mode_functor(
                model.presentation, model.mode_functors[name])))
        elif name in model.stoch_functors:
            stoch_name = name
        else:
            raise CliError(f"no functor named {name!r} in the model")
    if stoch_name is not None:
        if prob_name is None or modes_name is None:
            raise CliError(
                "checking a stochastic functor requires naming a "
                "probability functor and a mode functor as well")
        reports.append((stoch_name, "stoch", check_lifting(
            model.presentation, model.stoch_functors[stoch_name],
            model.prob_functors[prob_name], model.mode_functors[modes_name],
            tolerance)))
    return reports


def cmd_check(args: argparse.Namespace) -> int:
    model = _load_model(args.model)
    tolerance = _tolerance(args)
    arch_report = compile_presentation(model.presentation)
    functor_reports = _functor_checks(model, args.functor or [], tolerance)

    passed = arch_report.success and all(r.passed for _, _, r in functor_reports)
    text_parts = [str(arch_report)]
    payload_functors = []
    for name, kind, report in functor_reports:
        text_parts.append(f"[{kind} {name}]")
        text_parts.append(str(report))
        rows: list[dict] = []
        if kind == "prob":
            rows = [{"lhs": r.lhs_path, "rhs": r.rhs_path,
                     "lhs_value": _frac(r.lhs_value),
                     "rhs_value": _frac(r.rhs_value),
                     "passed": r.passed} for r in report.rows]
        elif kind == "modes":
            rows = [{"lhs": r.lhs_path, "rhs": r.rhs_path,
                     "passed": r.passed} for r in report.rows]
        else:
            rows = [{"subject": r.subject, "passed": r.passed,
                     "detail": r.detail} for r in report.rows]
        payload_functors.append({
            "name": name, "kind": kind, "passed": report.passed,
            "errors": list(report.errors), "rows": rows})
    payload = {
        "command": "check",
        "passed": passed,
        "tolerance": _frac(tolerance),
        "architecture": {
            "success": arch_report.success,
            "errors": list(arch_report.errors),
            "equation_results": [
                {"equation": str(r.equation), "passed": r.passed}
                for r in arch_report.equation_reports],
        },
        "functors": payload_functors,
    }
    _emit(args, "\n".join(text_parts), payload)
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def cmd_query(args: argparse.Namespace) -> int:
    model = _load_model(args.model)
    if args.functor not in model.prob_functors:
        raise CliError(f"no probability functor named {args.functor!r}")
    F = model.prob_functors[args.functor]
    term = parse_term(args.term)
    value = leaf_probability(model.presentation, F, term, args.leaf)
    path = resolve_leaf(model.presentation, term, args.leaf) \
        if args.leaf else ""
    payload = {
        "command": "query",
        "term": str(term),
        "leaf": args.leaf,
        "path": path,
        "value": _frac(value),
        "percent": _pct(value),
    }
    _emit(args, format_probability(value), payload)
    return EXIT_OK


def cmd_diagnose(args: argparse.Namespace) -> int:
    model = _load_model(args.model)
    if args.functor not in model.stoch_functors:
        raise CliError(f"no stochastic functor named {args.functor!r}")
    S = model.stoch_functors[args.functor]
    term = parse_term(args.term)
    posterior = diagnose(model.presentation, S, term, args.mode)
    payload = {
        "command": "diagnose",
        "term": str(term),
        "mode": args.mode,
        "posterior": [
            {"leaf": label, "value": _frac(p), "percent": _pct(p)}
            for label, p in posterior.entries],
    }
    _emit(args, format_posterior(posterior), payload)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opmodel",
        description="Validate, compose and check compositional system models")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.add_argument("model", help="path to a .opm model file")
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.set_defaults(func=func)
        return p

    add("validate", cmd_validate, help="compile and validate a model")

    p = add("compose", cmd_compose, help="print the canonical composite of a term")
    p.add_argument("--term", required=True, help='e.g. "tau(ba->beta)"')

    p = add("check", cmd_check,
            help="check architecture equations and functor coherence")
    p.add_argument("--functor", action="append",
                   help="functor name; repeatable (stoch requires prob+modes)")
    p.add_argument("--tolerance",
                   help=f"absolute tolerance (default ${TOLERANCE_ENV} or 0)")

    p = add("query", cmd_query, help="leaf failure probability along a term")
    p.add_argument("--functor", required=True)
    p.add_argument("--term", required=True)
    p.add_argument("--leaf", required=True)

    p = add("diagnose", cmd_diagnose,
            help="posterior over leaf modes given an observed root mode")
    p.add_argument("--functor", required=True)
    p.add_argument("--term", required=True)
    p.add_argument("--mode", required=True)

    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (CliError, DslError, PortGraphError, ValidationError,
            TermSyntaxError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
