"""Failure-mode sets and the "can cause" relation between them.

Each boundary carries a finite set of failure modes.  A generator maps to a
family of relations, one per input slot, pairing a mode of the slot's
boundary with a mode of the output boundary it can cause.  Relations compose
by existential chaining, so functoriality is the transitivity of causation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .portgraph import ValidationError
from .presentation import (
    CoherenceEquation,
    OperadPresentation,
    Term,
    equation_correspondence,
    resolve_leaf,
)


@dataclass(frozen=True)
class ModeSet:
    """The failure modes of one boundary, with optional predicate text."""

    boundary: str
    modes: tuple[str, ...]
    text: Mapping[str, str] | None = None

    def __post_init__(self) -> None:
        if len(set(self.modes)) != len(self.modes):
            raise ValidationError(
                f"duplicate failure modes on {self.boundary}")

    def __contains__(self, mode: str) -> bool:
        return mode in self.modes


@dataclass(frozen=True)
class ModeRelation:
    """Per-slot sets of (input mode, output mode) causation pairs."""

    pairs: Mapping[str, frozenset[tuple[str, str]]]

    def slot(self, label: str) -> frozenset[tuple[str, str]]:
        return self.pairs.get(label, frozenset())


def relation(**pairs) -> ModeRelation:
    return ModeRelation({s: frozenset(v) for s, v in pairs.items()})


def identity_relation(modes: ModeSet, slot: str) -> ModeRelation:
    return ModeRelation({slot: frozenset((m, m) for m in modes.modes)})


def total_relation(slot_modes: Mapping[str, ModeSet],
                   out_modes: ModeSet) -> ModeRelation:
    return ModeRelation({
        s: frozenset((m, x) for m in ms.modes for x in out_modes.modes)
        for s, ms in slot_modes.items()})


def compose_rel(outer: ModeRelation,
                inners: Mapping[str, ModeRelation]) -> ModeRelation:
    """Relation composition along a substitution.

    A pair (leaf mode, root mode) survives iff some intermediate mode
    witnesses both legs.  Composite slots are labeled ``outerslot.innerslot``.
    """
    out: dict[str, frozenset[tuple[str, str]]] = {}
    for slot, rel in outer.pairs.items():
        inner = inners.get(slot)
        if inner is None:
            out[slot] = rel
            continue
        for sub, sub_rel in inner.pairs.items():
            out[f"{slot}.{sub}"] = frozenset(
                (z, x)
                for z, y in sub_rel
                for y2, x in rel
                if y == y2)
    return ModeRelation(out)


@dataclass(frozen=True)
class ModeFunctor:
    """Mode sets per boundary and a causation relation per generator."""

    mode_sets: Mapping[str, ModeSet]
    relations: Mapping[str, ModeRelation]
    name: str = ""

    def modes_of(self, boundary: str) -> ModeSet:
        try:
            return self.mode_sets[boundary]
        except KeyError:
            raise ValidationError(
                f"no failure modes declared for boundary {boundary!r}") from None

    def relation_of(self, generator: str) -> ModeRelation:
        try:
            return self.relations[generator]
        except KeyError:
            raise ValidationError(
                f"no causation relation for generator {generator!r}") from None


def check_totality(pres: OperadPresentation, M: ModeFunctor) -> list[str]:
    problems = []
    for name in pres.boundaries:
        if name not in M.mode_sets:
            problems.append(f"no mode set for boundary {name}")
    for name, arch in pres.generators.items():
        if name not in M.relations:
            problems.append(f"no relation for generator {name}")
            continue
        rel = M.relations[name]
        out_modes = M.mode_sets.get(arch.output.name)
        for slot, b in arch.inputs:
            slot_modes = M.mode_sets.get(b.name)
            for (m_in, m_out) in rel.slot(slot):
                if slot_modes is not None and m_in not in slot_modes:
                    problems.append(
                        f"relation {name}: unknown mode {m_in!r} on {b.name}")
                if out_modes is not None and m_out not in out_modes:
                    problems.append(
                        f"relation {name}: unknown mode {m_out!r} "
                        f"on {arch.output.name}")
        for slot in rel.pairs:
            if slot not in arch.slots:
                problems.append(
                    f"relation {name}: unknown slot {slot!r}")
    return problems


def term_relation(pres: OperadPresentation, M: ModeFunctor,
                  t: Term) -> ModeRelation:
    """Compose the functor's relations along a term; slots become leaf paths."""
    top = M.relation_of(t.generator)
    if not t.children:
        return top
    return compose_rel(
        top, {slot: term_relation(pres, M, sub) for slot, sub in t.children})


def can_cause(pres: OperadPresentation, M: ModeFunctor, t: Term,
              leaf: str, leaf_mode: str, root_mode: str) -> bool:
    """Whether a leaf mode can cause the root mode along the term.

    The empty leaf selector names the root itself (depth-0 query), where a
    mode trivially causes itself.
    """
    root_modes = M.modes_of(pres.generator(t.generator).output.name)
    if root_mode not in root_modes:
        raise ValidationError(
            f"unknown mode {root_mode!r} on {root_modes.boundary}")
    if leaf == "":
        return leaf_mode == root_mode
    path = resolve_leaf(pres, t, leaf)
    composed = term_relation(pres, M, t)
    return (leaf_mode, root_mode) in composed.slot(path)


@dataclass(frozen=True)
class ModeCheckRow:
    equation: CoherenceEquation
    lhs_path: str
    rhs_path: str
    missing_rhs: frozenset[tuple[str, str]]
    missing_lhs: frozenset[tuple[str, str]]

    @property
    def passed(self) -> bool:
        return not self.missing_rhs and not self.missing_lhs

    def __str__(self) -> str:
        if self.passed:
            return f"{self.lhs_path} ~ {self.rhs_path}: pass"
        parts = [f"{self.lhs_path} ~ {self.rhs_path}: FAIL"]
        for m, x in sorted(self.missing_rhs):
            parts.append(f"    only lhs: ({m} -> {x})")
        for m, x in sorted(self.missing_lhs):
            parts.append(f"    only rhs: ({m} -> {x})")
        return "\n".join(parts)


@dataclass(frozen=True)
class ModeCheckReport:
    rows: tuple[ModeCheckRow, ...]
    errors: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return not self.errors and all(r.passed for r in self.rows)

    def __str__(self) -> str:
        lines = [f"mode coherence: {'pass' if self.passed else 'FAIL'} "
                 f"({len(self.rows)} leaf relations)"]
        lines += [f"  error: {e}" for e in self.errors]
        lines += ["  " + str(r) for r in self.rows]
        return "\n".join(lines)


def check_mode_functor(pres: OperadPresentation,
                       M: ModeFunctor) -> ModeCheckReport:
    """Composed relations on both sides of every equation must agree."""
    errors = check_totality(pres, M)
    if errors:
        return ModeCheckReport((), tuple(errors))
    rows: list[ModeCheckRow] = []
    for eq in pres.equations:
        corr = equation_correspondence(pres, eq)
        lhs = term_relation(pres, M, eq.lhs)
        rhs = term_relation(pres, M, eq.rhs)
        for path in lhs.pairs:
            rhs_path = corr.mapping[path]
            l, r = lhs.slot(path), rhs.slot(rhs_path)
            rows.append(ModeCheckRow(eq, path, rhs_path, l - r, r - l))
    return ModeCheckReport(tuple(rows))
