"""The operad of finite probability distributions and functors into it.

A failure model assigns to each generator a distribution over its input
slots: the relative probability that a failure of the whole lies in each
part.  Composites multiply conditionally, so a coherence equation between
architectures induces equations between products of probabilities.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .portgraph import ValidationError
from .presentation import (
    CoherenceEquation,
    OperadPresentation,
    Term,
    equation_correspondence,
    leaf_paths,
    resolve_leaf,
)

ZERO = Fraction(0)
ONE = Fraction(1)


def format_probability(p: Fraction) -> str:
    """Render as an exact fraction with a one-decimal percentage, e.g. ``12/25 (48%)``."""
    pct = round(p * 100, 1)
    pct_str = f"{float(pct):g}"
    return f"{p} ({pct_str}%)"


@dataclass(frozen=True)
class Distribution:
    """An ordered finite probability distribution with unique labels."""

    entries: tuple[tuple[str, Fraction], ...]

    def __post_init__(self) -> None:
        labels = [l for l, _ in self.entries]
        if len(set(labels)) != len(labels):
            raise ValidationError("distribution labels must be unique")
        for l, p in self.entries:
            if not (ZERO <= p <= ONE):
                raise ValidationError(f"probability {l}: {p} outside [0, 1]")
        if sum(p for _, p in self.entries) != ONE:
            raise ValidationError("distribution does not sum to 1")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(l for l, _ in self.entries)

    def __getitem__(self, label: str) -> Fraction:
        for l, p in self.entries:
            if l == label:
                return p
        raise ValidationError(f"unknown label {label!r}")

    def as_dict(self) -> dict[str, Fraction]:
        return dict(self.entries)

    def __str__(self) -> str:
        return "(" + ", ".join(f"{l}: {format_probability(p)}"
                               for l, p in self.entries) + ")"


def distribution(**entries: Fraction | int | str) -> Distribution:
    return Distribution(tuple((l, Fraction(p)) for l, p in entries.items()))


def compose_dist(p: Distribution,
                 qs: Mapping[str, Distribution]) -> Distribution:
    """Operadic composition: entries multiply, labels become dotted paths.

    Labels of ``p`` absent from ``qs`` behave as arity-1 identities and
    keep their label.
    """
    for label in qs:
        if label not in p.labels:
            raise ValidationError(f"unknown label {label!r} in composition")
    out: list[tuple[str, Fraction]] = []
    for label, pi in p.entries:
        q = qs.get(label)
        if q is None:
            out.append((label, pi))
        else:
            out.extend((f"{label}.{sub}", pi * qij) for sub, qij in q.entries)
    return Distribution(tuple(out))


@dataclass(frozen=True)
class ProbFunctor:
    """Generator-wise failure distributions, labeled by the generators' slots."""

    dists: Mapping[str, Distribution]
    name: str = ""

    def __getitem__(self, generator: str) -> Distribution:
        try:
            return self.dists[generator]
        except KeyError:
            raise ValidationError(
                f"probability functor has no value for {generator!r}") from None


def check_arity(pres: OperadPresentation, F: ProbFunctor) -> list[str]:
    """Mismatches between a functor's labels and its generators' slots."""
    problems = []
    for name, arch in pres.generators.items():
        if name not in F.dists:
            problems.append(f"no distribution for generator {name}")
            continue
        if set(F.dists[name].labels) != set(arch.slots):
            problems.append(
                f"distribution for {name} is labeled "
                f"{F.dists[name].labels}, expected slots {arch.slots}")
    return problems


def term_distribution(pres: OperadPresentation, F: ProbFunctor,
                      t: Term) -> Distribution:
    """The composite distribution of a term, labeled by leaf paths."""
    top = F[t.generator]
    if not t.children:
        return top
    return compose_dist(
        top, {slot: term_distribution(pres, F, sub) for slot, sub in t.children})


def leaf_probability(pres: OperadPresentation, F: ProbFunctor, t: Term,
                     leaf: str) -> Fraction:
    """Product of the functor's entries along the root-to-leaf path.

    The empty selector names the root itself and yields 1.
    """
    if leaf == "":
        return ONE
    path = resolve_leaf(pres, t, leaf)
    return term_distribution(pres, F, t)[path]


@dataclass(frozen=True)
class ProbCheckRow:
    equation: CoherenceEquation
    lhs_path: str
    rhs_path: str
    lhs_value: Fraction
    rhs_value: Fraction
    passed: bool

    def __str__(self) -> str:
        verdict = "pass" if self.passed else "FAIL"
        return (f"{self.lhs_path} ~ {self.rhs_path}: "
                f"{format_probability(self.lhs_value)} vs "
                f"{format_probability(self.rhs_value)} [{verdict}]")


@dataclass(frozen=True)
class ProbCheckReport:
    rows: tuple[ProbCheckRow, ...]
    errors: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return not self.errors and all(r.passed for r in self.rows)

    def __str__(self) -> str:
        lines = [f"probability coherence: "
                 f"{'pass' if self.passed else 'FAIL'} "
                 f"({len(self.rows)} leaf equations)"]
        lines += [f"  error: {e}" for e in self.errors]
        lines += ["  " + str(r) for r in self.rows]
        return "\n".join(lines)


def check_prob_functor(pres: OperadPresentation, F: ProbFunctor,
                       tolerance: Fraction = ZERO) -> ProbCheckReport:
    """Compare composed probabilities across every coherence equation.

    Entries aligned via the equation correspondence must agree within the
    absolute tolerance (exactly, when the tolerance is zero).
    """
    errors = check_arity(pres, F)
    if errors:
        return ProbCheckReport((), tuple(errors))
    rows: list[ProbCheckRow] = []
    for eq in pres.equations:
        corr = equation_correspondence(pres, eq)
        lhs = term_distribution(pres, F, eq.lhs)
        rhs = term_distribution(pres, F, eq.rhs).as_dict()
        for path, pl in lhs.entries:
            rhs_path = corr.mapping[path]
            pr = rhs[rhs_path]
            rows.append(ProbCheckRow(
                eq, path, rhs_path, pl, pr, abs(pl - pr) <= tolerance))
    return ProbCheckReport(tuple(rows))


def _path_factors(pres: OperadPresentation, t: Term, path: str) -> list[str]:
    factors = []
    for segment in path.split("."):
        factors.append(f"{t.generator}({segment})")
        sub = t.child(segment)
        if sub is None:
            break
        t = sub
    return factors


def symbolic_constraints(pres: OperadPresentation) -> tuple[str, ...]:
    """The product-path identity induced by each matched leaf pair.

    For the standard two-level equation this yields strings such as
    ``phi(ls)·lambda(in) = kappa(sn)·sigma(in)``.
    """
    out: list[str] = []
    for eq in pres.equations:
        corr = equation_correspondence(pres, eq)
        for path, _ in leaf_paths(pres, eq.lhs):
            lhs = "·".join(_path_factors(pres, eq.lhs, path))
            rhs = "·".join(_path_factors(pres, eq.rhs, corr.mapping[path]))
            out.append(f"{lhs} = {rhs}")
    return tuple(out)
