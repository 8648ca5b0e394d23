"""Finite presentations of sub-operads: named generators plus coherence equations.

A presentation lists the boundaries and generator architectures of a modeled
system; its coherence equations assert that two composite hierarchies
elaborate to the same architecture (up to a component correspondence).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .portgraph import (
    Architecture,
    Boundary,
    ComponentCorrespondence,
    EqualityReport,
    PortGraphError,
    TypeTable,
    ValidationError,
    compose,
    derive_correspondence,
    equal,
    validate,
)


@dataclass(frozen=True)
class Term:
    """A composite of generators: children substitute into the parent's slots.

    Unfilled slots are the leaves of the term.
    """

    generator: str
    children: tuple[tuple[str, "Term"], ...] = ()

    def child(self, slot: str) -> "Term | None":
        for s, t in self.children:
            if s == slot:
                return t
        return None

    def __str__(self) -> str:
        if not self.children:
            return self.generator
        args = ", ".join(f"{s}->{t}" for s, t in self.children)
        return f"{self.generator}({args})"


class TermSyntaxError(ValueError):
    """Raised for malformed term expressions."""


def parse_term(text: str) -> Term:
    """Parse the ``gen(slot->gen, ...)`` micro-syntax."""
    pos = 0
    s = text

    def skip_ws() -> None:
        nonlocal pos
        while pos < len(s) and s[pos].isspace():
            pos += 1

    def ident() -> str:
        nonlocal pos
        skip_ws()
        start = pos
        while pos < len(s) and (s[pos].isalnum() or s[pos] == "_"):
            pos += 1
        if start == pos:
            raise TermSyntaxError(f"expected identifier at position {pos} in {text!r}")
        return s[start:pos]

    def expect(ch: str) -> None:
        nonlocal pos
        skip_ws()
        if pos >= len(s) or s[pos] != ch:
            raise TermSyntaxError(f"expected {ch!r} at position {pos} in {text!r}")
        pos += 1

    def peek() -> str:
        skip_ws()
        return s[pos] if pos < len(s) else ""

    def term() -> Term:
        nonlocal pos
        gen = ident()
        children: list[tuple[str, Term]] = []
        if peek() == "(":
            expect("(")
            while True:
                slot = ident()
                skip_ws()
                if not s.startswith("->", pos):
                    raise TermSyntaxError(
                        f"expected '->' at position {pos} in {text!r}")
                pos += 2
                children.append((slot, term()))
                if peek() == ",":
                    expect(",")
                    continue
                expect(")")
                break
        return Term(gen, tuple(children))

    t = term()
    skip_ws()
    if pos != len(s):
        raise TermSyntaxError(f"trailing input at position {pos} in {text!r}")
    return t


@dataclass(frozen=True)
class CoherenceEquation:
    """An asserted identity between two composite terms.

    ``corr`` pairs the leaf slots of the two sides; when None it is derived
    by matching leaf boundary names.
    """

    lhs: Term
    rhs: Term
    corr: ComponentCorrespondence | None = None

    def __str__(self) -> str:
        return f"{self.lhs} = {self.rhs}"


@dataclass(frozen=True)
class OperadPresentation:
    """Boundaries, generator architectures and coherence equations of a model."""

    type_table: TypeTable
    boundaries: Mapping[str, Boundary]
    generators: Mapping[str, Architecture]
    equations: tuple[CoherenceEquation, ...] = ()

    def generator(self, name: str) -> Architecture:
        try:
            return self.generators[name]
        except KeyError:
            raise ValidationError(f"unknown generator {name!r}") from None


def elaborate(pres: OperadPresentation, t: Term) -> Architecture:
    """Fold operadic composition over a term tree.

    Leaves of the term become the input slots of the result; a leaf reached
    through slots ``a`` then ``b`` is labeled ``a.b``.
    """
    arch = pres.generator(t.generator)
    if not t.children:
        return arch
    inner = {slot: elaborate(pres, sub) for slot, sub in t.children}
    for slot in inner:
        if slot not in arch.slots:
            raise ValidationError(
                f"generator {t.generator} has no slot {slot!r}")
    return compose(arch, inner)


def leaf_paths(pres: OperadPresentation, t: Term) -> tuple[tuple[str, str], ...]:
    """The (dotted path, boundary name) of every leaf slot, in slot order."""
    arch = pres.generator(t.generator)
    out: list[tuple[str, str]] = []
    for slot, b in arch.inputs:
        sub = t.child(slot)
        if sub is None:
            out.append((slot, b.name))
        else:
            out.extend((f"{slot}.{p}", bn) for p, bn in leaf_paths(pres, sub))
    return tuple(out)


def resolve_leaf(pres: OperadPresentation, t: Term, leaf: str) -> str:
    """Resolve a leaf selector to a full dotted path.

    Accepts an exact path, a unique trailing segment of one, or a unique
    boundary name (case-insensitive).
    """
    paths = leaf_paths(pres, t)
    exact = [p for p, _ in paths if p == leaf]
    if exact:
        return exact[0]
    by_suffix = [p for p, _ in paths
                 if p.split(".")[-1] == leaf]
    if len(by_suffix) == 1:
        return by_suffix[0]
    by_boundary = [p for p, bn in paths if bn.lower() == leaf.lower()]
    if len(by_boundary) == 1:
        return by_boundary[0]
    if by_suffix or by_boundary:
        raise ValidationError(f"leaf selector {leaf!r} is ambiguous in {t}")
    raise ValidationError(f"no leaf {leaf!r} in {t}")


@dataclass(frozen=True)
class EquationReport:
    """Verdict of checking one coherence equation."""

    equation: CoherenceEquation
    passed: bool
    corr: ComponentCorrespondence | None = None
    diff: EqualityReport | None = None
    error: str = ""

    def __str__(self) -> str:
        head = f"{self.equation}: {'pass' if self.passed else 'FAIL'}"
        if self.error:
            return f"{head}\n  error: {self.error}"
        if self.diff is not None and not self.diff.equal:
            return head + "\n" + str(self.diff)
        return head


def equation_correspondence(pres: OperadPresentation,
                            eq: CoherenceEquation) -> ComponentCorrespondence:
    """The explicit correspondence, or one derived by leaf boundary names."""
    if eq.corr is not None:
        return eq.corr
    return derive_correspondence(elaborate(pres, eq.lhs), elaborate(pres, eq.rhs))


def check_equation(pres: OperadPresentation,
                   eq: CoherenceEquation) -> EquationReport:
    """Elaborate both sides and compare them under the equation's correspondence."""
    try:
        lhs = elaborate(pres, eq.lhs)
        rhs = elaborate(pres, eq.rhs)
        corr = equation_correspondence(pres, eq)
        diff = equal(lhs, rhs, corr)
    except PortGraphError as exc:
        return EquationReport(eq, False, error=str(exc))
    return EquationReport(eq, diff.equal, corr, diff)


@dataclass(frozen=True)
class CompileReport:
    """Outcome of validating a whole presentation."""

    boundary_count: int
    generator_count: int
    equation_count: int
    errors: tuple[str, ...]
    equation_reports: tuple[EquationReport, ...]

    @property
    def success(self) -> bool:
        return not self.errors and all(r.passed for r in self.equation_reports)

    @property
    def failure_count(self) -> int:
        return len(self.errors) + sum(1 for r in self.equation_reports
                                      if not r.passed)

    def __str__(self) -> str:
        status = "ok" if self.success else "FAILED"
        lines = [f"compile {status}: {self.boundary_count} boundaries, "
                 f"{self.generator_count} generators, "
                 f"{self.equation_count} equations"]
        lines += [f"  error: {e}" for e in self.errors]
        lines += ["  " + line for r in self.equation_reports
                  for line in str(r).splitlines()]
        return "\n".join(lines)


def compile_presentation(pres: OperadPresentation) -> CompileReport:
    """Validate boundaries and generators, then check every equation."""
    errors: list[str] = []
    for name, b in pres.boundaries.items():
        for p in b.ports:
            t = b.port_type[p]
            if t not in pres.type_table:
                errors.append(
                    f"boundary {name}: port {p} has undeclared type {t!r}")
    for name, arch in pres.generators.items():
        for slot, b in arch.inputs:
            declared = pres.boundaries.get(b.name)
            if declared is None or declared != b:
                errors.append(
                    f"generator {name}: slot {slot} uses undeclared "
                    f"boundary {b.name}")
        if pres.boundaries.get(arch.output.name) != arch.output:
            errors.append(
                f"generator {name}: undeclared output boundary "
                f"{arch.output.name}")
        try:
            validate(arch)
        except ValidationError as exc:
            errors.append(f"generator {name}: {exc}")
    eq_reports = tuple(check_equation(pres, eq) for eq in pres.equations)
    return CompileReport(
        boundary_count=len(pres.boundaries),
        generator_count=len(pres.generators),
        equation_count=len(pres.equations),
        errors=tuple(errors),
        equation_reports=eq_reports,
    )
