"""Typed port-graph architectures and their operadic composition.

An architecture is a box with named input slots (each carrying a boundary,
i.e. a typed port list), an output boundary, and a set of typed hyperwires
partitioning the ports.  Substituting architectures into slots glues wires
along the shared intermediate ports; the result is again an architecture.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

PHYSICAL = "physical"
DIGITAL = "digital"


class PortGraphError(Exception):
    """Raised for malformed port-graph data."""


class ValidationError(PortGraphError):
    """Raised when a value violates a structural invariant."""


class CompositionError(PortGraphError):
    """Raised when a substitution is ill-typed."""


@dataclass(frozen=True)
class TypeTable:
    """Interface types together with their physical/digital kind."""

    kinds: Mapping[str, str]

    def __post_init__(self) -> None:
        for name, kind in self.kinds.items():
            if kind not in (PHYSICAL, DIGITAL):
                raise ValidationError(
                    f"interface {name!r} has unknown kind {kind!r}")

    def __contains__(self, name: str) -> bool:
        return name in self.kinds


@dataclass(frozen=True)
class PortRef:
    """A reference to a slot port (``slot.port``) or an outer port.

    Outer ports have ``slot is None`` and sort before all slot ports.
    """

    slot: str | None
    port: str

    def __str__(self) -> str:
        return self.port if self.slot is None else f"{self.slot}.{self.port}"

    def _key(self) -> tuple[str, str]:
        return ("" if self.slot is None else self.slot, self.port)

    def __lt__(self, other: "PortRef") -> bool:  # type: ignore[override]
        return self._key() < other._key()


def outer(port: str) -> PortRef:
    return PortRef(None, port)


def at(slot: str, port: str) -> PortRef:
    return PortRef(slot, port)


@dataclass(frozen=True)
class Boundary:
    """A named, ordered set of typed ports."""

    name: str
    ports: tuple[str, ...]
    port_type: Mapping[str, str]

    def __post_init__(self) -> None:
        if len(set(self.ports)) != len(self.ports):
            raise ValidationError(f"boundary {self.name}: duplicate ports")
        for p in self.ports:
            if p not in self.port_type:
                raise ValidationError(
                    f"boundary {self.name}: port {p!r} has no type")

    def type_of(self, port: str) -> str:
        try:
            return self.port_type[port]
        except KeyError:
            raise ValidationError(
                f"unknown port {port!r} on {self.name}") from None


def boundary(name: str, **ports: str) -> Boundary:
    """Shorthand constructor: ``boundary("Bath", heat="heat", setPt="setPt")``."""
    return Boundary(name, tuple(ports), dict(ports))


@dataclass(frozen=True)
class Wire:
    """A typed hyperwire: a set of port references sharing one type."""

    ports: frozenset[PortRef]
    type: str

    def sorted_ports(self) -> tuple[PortRef, ...]:
        return tuple(sorted(self.ports))

    def __str__(self) -> str:
        return "{" + ", ".join(str(p) for p in self.sorted_ports()) + "}:" + self.type


def wire(refs: Iterable[PortRef], type: str) -> Wire:
    return Wire(frozenset(refs), type)


@dataclass(frozen=True)
class Architecture:
    """A port-graph operation: input slots, output boundary, hyperwires."""

    inputs: tuple[tuple[str, Boundary], ...]
    output: Boundary
    wires: tuple[Wire, ...]

    def __post_init__(self) -> None:
        labels = [s for s, _ in self.inputs]
        if len(set(labels)) != len(labels):
            raise ValidationError("duplicate slot labels")

    @property
    def slots(self) -> tuple[str, ...]:
        return tuple(s for s, _ in self.inputs)

    def slot_boundary(self, slot: str) -> Boundary:
        for s, b in self.inputs:
            if s == slot:
                return b
        raise ValidationError(f"unknown slot {slot!r}")

    def all_port_refs(self) -> tuple[PortRef, ...]:
        refs = [PortRef(s, p) for s, b in self.inputs for p in b.ports]
        refs += [PortRef(None, p) for p in self.output.ports]
        return tuple(refs)

    def ref_type(self, ref: PortRef) -> str:
        if ref.slot is None:
            return self.output.type_of(ref.port)
        return self.slot_boundary(ref.slot).type_of(ref.port)

    def describe(self) -> str:
        """Deterministic textual rendering of a canonical architecture."""
        ins = ", ".join(f"{s}: {b.name}" for s, b in self.inputs)
        lines = [f"({ins}) -> {self.output.name}"]
        for w in self.wires:
            lines.append("  " + str(w))
        return "\n".join(lines)


class UnionFind:
    """Disjoint-set forest over arbitrary hashable keys."""

    def __init__(self) -> None:
        self._parent: dict = {}

    def find(self, x):
        parent = self._parent
        if x not in parent:
            parent[x] = x
            return x
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, x, y) -> None:
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            self._parent[ry] = rx

    def groups(self) -> dict:
        out: dict = {}
        for x in self._parent:
            out.setdefault(self.find(x), []).append(x)
        return out


def canonicalize(arch: Architecture) -> Architecture:
    """Normal form: wires sorted by least port reference, empty wires dropped.

    Raises if a port is attached to two wires, a wire mentions an unknown
    port, or a wire mixes interface types.  Ports attached to no wire are
    permitted here; use :func:`validate` to insist on total wiring.
    """
    known = set(arch.all_port_refs())
    seen: set[PortRef] = set()
    blocks: list[Wire] = []
    for w in arch.wires:
        if not w.ports:
            continue
        for ref in w.ports:
            if ref not in known:
                raise ValidationError(f"unknown port reference {ref}")
            if ref in seen:
                raise ValidationError(f"port {ref} attached to two wires")
            seen.add(ref)
            t = arch.ref_type(ref)
            if t != w.type:
                raise ValidationError(
                    f"wire {w} contains port {ref} of type {t!r}")
        blocks.append(Wire(w.ports, w.type))
    blocks.sort(key=lambda w: min(w.ports))
    return Architecture(arch.inputs, arch.output, tuple(blocks))


def validate(arch: Architecture) -> Architecture:
    """Canonicalize and additionally require every port to be wired."""
    canon = canonicalize(arch)
    wired = {ref for w in canon.wires for ref in w.ports}
    missing = [ref for ref in canon.all_port_refs() if ref not in wired]
    if missing:
        names = ", ".join(str(r) for r in missing)
        raise ValidationError(f"unwired ports: {names}")
    return canon


def identity(b: Boundary) -> Architecture:
    """The identity architecture on a boundary: inner ports wired straight through."""
    slot = b.name.lower()
    wires = tuple(
        Wire(frozenset({PortRef(slot, p), PortRef(None, p)}), b.port_type[p])
        for p in b.ports)
    return canonicalize(Architecture(((slot, b),), b, wires))


def is_identity(arch: Architecture) -> bool:
    if len(arch.inputs) != 1:
        return False
    slot, b = arch.inputs[0]
    if b != arch.output:
        return False
    expected = {frozenset({PortRef(slot, p), PortRef(None, p)}) for p in b.ports}
    return {w.ports for w in arch.wires} == expected


def compose(outer_arch: Architecture,
            inner: Mapping[str, Architecture]) -> Architecture:
    """Substitute inner architectures into slots of the outer one.

    Slots absent from ``inner`` (or filled with an identity) are left alone.
    Wires of the result are the connected components of inner and outer
    wires glued along the shared intermediate ports, which are deleted.
    Composite slots are labeled ``outerslot.innerslot``.
    """
    subst: dict[str, Architecture] = {}
    for slot, g in inner.items():
        b = outer_arch.slot_boundary(slot)
        if g.output != b:
            raise CompositionError(
                f"slot {slot!r} expects boundary {b.name}, "
                f"got {g.output.name}")
        if not is_identity(g):
            subst[slot] = g

    new_inputs: list[tuple[str, Boundary]] = []
    for slot, b in outer_arch.inputs:
        if slot in subst:
            for t, tb in subst[slot].inputs:
                new_inputs.append((f"{slot}.{t}", tb))
        else:
            new_inputs.append((slot, b))

    uf = UnionFind()
    # (wire nodes are PortRefs of the composite, or ("mid", slot, port)
    # placeholders for the deleted intermediate ports)
    comp_type: dict = {}

    def add_wire(nodes: list, wtype: str) -> None:
        for n in nodes:
            uf.find(n)
        for a, b in zip(nodes, nodes[1:]):
            uf.union(a, b)
        root = uf.find(nodes[0])
        comp_type.setdefault(root, wtype)

    for w in outer_arch.wires:
        nodes = []
        for ref in w.ports:
            if ref.slot in subst:
                nodes.append(("mid", ref.slot, ref.port))
            else:
                nodes.append(ref)
        add_wire(nodes, w.type)
    for slot, g in subst.items():
        for w in g.wires:
            nodes = []
            for ref in w.ports:
                if ref.slot is None:
                    nodes.append(("mid", slot, ref.port))
                else:
                    nodes.append(PortRef(f"{slot}.{ref.slot}", ref.port))
            add_wire(nodes, w.type)

    # merging may have united components whose declared types differ
    types: dict = {}
    for root in list(comp_type):
        real = uf.find(root)
        t = comp_type[root]
        if real in types and types[real] != t:
            raise CompositionError(
                f"type conflict among glued wires: {types[real]!r} vs {t!r}")
        types.setdefault(real, t)

    wires = []
    for root, members in uf.groups().items():
        refs = frozenset(m for m in members if isinstance(m, PortRef))
        if refs:
            wires.append(Wire(refs, types[root]))

    return canonicalize(
        Architecture(tuple(new_inputs), outer_arch.output, tuple(wires)))


@dataclass(frozen=True)
class ComponentCorrespondence:
    """A boundary-preserving bijection between the slots of two architectures."""

    mapping: Mapping[str, str]

    def inverse(self) -> "ComponentCorrespondence":
        return ComponentCorrespondence({v: k for k, v in self.mapping.items()})


@dataclass(frozen=True)
class EqualityReport:
    """Outcome of comparing two canonical architectures."""

    equal: bool
    only_left: tuple[Wire, ...] = ()
    only_right: tuple[Wire, ...] = ()
    reason: str = ""

    def __str__(self) -> str:
        if self.equal:
            return "equal"
        lines = ["not equal"]
        if self.reason:
            lines.append("  " + self.reason)
        for w in self.only_left:
            lines.append(f"  only left:  {w}")
        for w in self.only_right:
            lines.append(f"  only right: {w}")
        return "\n".join(lines)


def _check_correspondence(a: Architecture, b: Architecture,
                          corr: ComponentCorrespondence) -> None:
    a_slots = dict(a.inputs)
    b_slots = dict(b.inputs)
    if set(corr.mapping) != set(a_slots):
        raise ValidationError("correspondence is not total on left slots")
    if set(corr.mapping.values()) != set(b_slots) or \
            len(set(corr.mapping.values())) != len(corr.mapping):
        raise ValidationError("correspondence is not a bijection onto right slots")
    for sa, sb in corr.mapping.items():
        if a_slots[sa] != b_slots[sb]:
            raise ValidationError(
                f"correspondence {sa} ~ {sb} does not preserve boundaries")


def equal(a: Architecture, b: Architecture,
          corr: ComponentCorrespondence) -> EqualityReport:
    """Compare canonical architectures up to the given slot relabeling."""
    _check_correspondence(a, b, corr)
    if a.output != b.output:
        return EqualityReport(False, reason=(
            f"output boundaries differ: {a.output.name} vs {b.output.name}"))

    def relabel(ref: PortRef) -> PortRef:
        if ref.slot is None:
            return ref
        return PortRef(corr.mapping[ref.slot], ref.port)

    left = {(frozenset(relabel(r) for r in w.ports), w.type) for w in a.wires}
    right = {(w.ports, w.type) for w in b.wires}
    if left == right:
        return EqualityReport(True)
    only_l = tuple(sorted((Wire(p, t) for p, t in left - right),
                          key=lambda w: min(w.ports)))
    only_r = tuple(sorted((Wire(p, t) for p, t in right - left),
                          key=lambda w: min(w.ports)))
    return EqualityReport(False, only_l, only_r)


def derive_correspondence(a: Architecture,
                          b: Architecture) -> ComponentCorrespondence:
    """Match slots by boundary name, when each boundary occurs at most once per side."""
    by_name_a: dict[str, list[str]] = {}
    by_name_b: dict[str, list[str]] = {}
    for s, bd in a.inputs:
        by_name_a.setdefault(bd.name, []).append(s)
    for s, bd in b.inputs:
        by_name_b.setdefault(bd.name, []).append(s)
    if set(by_name_a) != set(by_name_b):
        raise ValidationError(
            "cannot auto-match components: boundary sets differ "
            f"({sorted(by_name_a)} vs {sorted(by_name_b)})")
    mapping = {}
    for name, slots_a in by_name_a.items():
        slots_b = by_name_b[name]
        if len(slots_a) != 1 or len(slots_b) != 1:
            raise ValidationError(
                f"cannot auto-match components: boundary {name} is ambiguous")
        mapping[slots_a[0]] = slots_b[0]
    return ComponentCorrespondence(mapping)
