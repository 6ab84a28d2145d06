"""CSP templates: finite structures and two omega-categorical oracles.

Template values are handled through assignment classes.  For a finite
template a class is just a tuple of elements.  For ``(Q,<)`` it is a weak
linear order on the positions, and for the universal triangle-free graph
it is an equality partition plus a triangle-free graph on the blocks.  In
both infinite cases these are exactly the orbits of tuples under the
automorphism group, so every class is realised by some real tuple.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from graphlib import CycleError, TopologicalSorter
from typing import Optional

from .structure import Signature, Structure, StructureError, find_homomorphism, load_structure

FINITE = "finite"
QORDER = "qorder"
HENSON = "henson"

DEFAULT_CAP = 4


class CapExceeded(ValueError):
    """Class enumeration was asked for more positions than the cap allows."""


@dataclass(frozen=True)
class AssignmentClass:
    kind: str
    arity: int
    payload: tuple

    def __repr__(self):
        return f"{self.kind}{self.payload}"


@dataclass(frozen=True)
class TemplateHandle:
    kind: str
    signature: Signature
    structure: Optional[Structure] = None
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        if self.kind == FINITE:
            if self.structure is None or not self.structure.domain:
                raise ValueError("a finite template needs a nonempty structure")
        elif self.kind in (QORDER, HENSON):
            if len(self.signature) != 1 or self.signature.symbols[0][1] != 2:
                raise ValueError(f"{self.kind} templates have one binary symbol")
        else:
            raise ValueError(f"unknown template kind {self.kind!r}")
        if self.cap < 0:
            raise ValueError("cap must be nonnegative")

    @classmethod
    def finite(cls, structure: Structure, cap: int = DEFAULT_CAP) -> "TemplateHandle":
        return cls(FINITE, structure.signature, structure, cap)

    @classmethod
    def qorder(cls, symbol: str = "<", cap: int = DEFAULT_CAP) -> "TemplateHandle":
        return cls(QORDER, Signature(((symbol, 2),)), None, cap)

    @classmethod
    def henson(cls, symbol: str = "E", cap: int = DEFAULT_CAP) -> "TemplateHandle":
        return cls(HENSON, Signature(((symbol, 2),)), None, cap)

    @property
    def symbol(self) -> str:
        return self.signature.symbols[0][0]

    @property
    def is_finite(self) -> bool:
        return self.kind == FINITE

    def with_cap(self, cap: int) -> "TemplateHandle":
        return TemplateHandle(self.kind, self.signature, self.structure, cap)

    def __str__(self):
        if self.kind == FINITE:
            return f"finite({len(self.structure.domain)} elements)"
        return self.kind


def parse_template_selector(selector: str, instance: Optional[Structure] = None,
                            cap: int = DEFAULT_CAP) -> TemplateHandle:
    """``finite:<path>``, ``qorder`` or ``henson``.

    For the oracle kinds the relation symbol is taken from ``instance`` when
    it has exactly one binary symbol; otherwise ``<`` and ``E`` are used.
    """
    if selector.startswith("finite:"):
        return TemplateHandle.finite(load_structure(selector[len("finite:"):]), cap)
    if selector in (QORDER, HENSON):
        default = "<" if selector == QORDER else "E"
        symbol = default
        if instance is not None:
            binary = [n for n, a in instance.signature if a == 2]
            if len(instance.signature) == 1 and len(binary) == 1:
                symbol = binary[0]
        if selector == QORDER:
            return TemplateHandle.qorder(symbol, cap)
        return TemplateHandle.henson(symbol, cap)
    raise ValueError(f"unknown template selector {selector!r}")


# ---------------------------------------------------------------------------
# class enumeration


def _ranks(blocks, arity):
    ranks = [0] * arity
    for i, block in enumerate(blocks):
        for p in block:
            ranks[p] = i
    return ranks


def _qorder_extensions(c: AssignmentClass) -> list:
    m = c.arity
    blocks = c.payload
    out = []
    for i in range(len(blocks) + 1):
        out.append(AssignmentClass(QORDER, m + 1, blocks[:i] + ((m,),) + blocks[i:]))
        if i < len(blocks):
            grown = blocks[:i] + (blocks[i] + (m,),) + blocks[i + 1:]
            out.append(AssignmentClass(QORDER, m + 1, grown))
    return out


def _henson_extensions(c: AssignmentClass) -> list:
    m = c.arity
    blocks, edges = c.payload
    out = []
    for i in range(len(blocks)):
        grown = blocks[:i] + (blocks[i] + (m,),) + blocks[i + 1:]
        out.append(AssignmentClass(HENSON, m + 1, (grown, edges)))
    new = len(blocks)
    adjacent = set(edges)
    for size in range(new + 1):
        for nbrs in itertools.combinations(range(new), size):
            if any((a, b) in adjacent for a, b in itertools.combinations(nbrs, 2)):
                continue  # would close a triangle
            out.append(AssignmentClass(
                HENSON, m + 1,
                (blocks + ((m,),), tuple(sorted(edges + tuple((a, new) for a in nbrs))))))
    return out


def empty_class(t: TemplateHandle) -> AssignmentClass:
    if t.kind == HENSON:
        return AssignmentClass(HENSON, 0, ((), ()))
    return AssignmentClass(t.kind, 0, ())


def extend_class(t: TemplateHandle, c: AssignmentClass) -> list:
    """All classes on ``arity + 1`` positions that restrict to ``c`` on the first ``arity``."""
    if t.kind == FINITE:
        return [AssignmentClass(FINITE, c.arity + 1, c.payload + (v,)) for v in t.structure.domain]
    if t.kind == QORDER:
        return _qorder_extensions(c)
    return _henson_extensions(c)


@lru_cache(maxsize=None)
def _classes(t: TemplateHandle, m: int) -> tuple:
    if t.kind == FINITE:
        return tuple(AssignmentClass(FINITE, m, tup)
                     for tup in itertools.product(t.structure.domain, repeat=m))
    level = [empty_class(t)]
    for _ in range(m):
        level = [d for c in level for d in extend_class(t, c)]
    return tuple(level)


def classes(t: TemplateHandle, m: int) -> tuple:
    """Every assignment class on ``m`` positions, in a fixed order."""
    if m < 0:
        raise ValueError("arity must be nonnegative")
    if m > t.cap:
        raise CapExceeded(f"{t.kind}: {m} positions exceeds the class cap {t.cap}")
    return _classes(t, m)


@lru_cache(maxsize=1 << 18)
def restrict_class(c: AssignmentClass, positions: tuple) -> AssignmentClass:
    """The class of the sub-tuple at ``positions`` (repeats allowed)."""
    positions = tuple(positions)
    if c.kind == FINITE:
        return AssignmentClass(FINITE, len(positions), tuple(c.payload[p] for p in positions))
    if c.kind == QORDER:
        ranks = _ranks(c.payload, c.arity)
        picked = [ranks[p] for p in positions]
        blocks = tuple(tuple(j for j, r in enumerate(picked) if r == value)
                       for value in sorted(set(picked)))
        return AssignmentClass(QORDER, len(positions), blocks)
    blocks, edges = c.payload
    owner = _ranks(blocks, c.arity)
    groups = {}
    for j, p in enumerate(positions):
        groups.setdefault(owner[p], []).append(j)
    old_ids = list(groups)  # insertion order = order of least new position
    new_blocks = tuple(tuple(groups[b]) for b in old_ids)
    adjacent = set(edges)
    new_edges = tuple((i, j) for i, j in itertools.combinations(range(len(old_ids)), 2)
                      if (min(old_ids[i], old_ids[j]), max(old_ids[i], old_ids[j])) in adjacent)
    return AssignmentClass(HENSON, len(positions), (new_blocks, new_edges))


def class_holds(t: TemplateHandle, symbol: str, c: AssignmentClass) -> bool:
    arity = t.signature.arity(symbol)
    if c.arity != arity:
        raise ValueError(f"{symbol} has arity {arity}, class has {c.arity}")
    if t.kind == FINITE:
        return t.structure.holds(symbol, c.payload)
    if t.kind == QORDER:
        ranks = _ranks(c.payload, 2)
        return ranks[0] < ranks[1]
    blocks, edges = c.payload
    owner = _ranks(blocks, 2)
    a, b = owner
    return a != b and (min(a, b), max(a, b)) in set(edges)


def class_of_assignment(t: TemplateHandle, tup) -> AssignmentClass:
    if t.kind != FINITE:
        raise TypeError("concrete assignments only exist for finite templates")
    tup = tuple(tup)
    for v in tup:
        if v not in t.structure:
            raise ValueError(f"{v!r} is not a template element")
    return AssignmentClass(FINITE, len(tup), tup)


def class_of_assignment_checked(t: TemplateHandle, tup, arity: int) -> AssignmentClass:
    if len(tuple(tup)) != arity:
        raise ValueError(f"expected a {arity}-tuple, got {tup!r}")
    return class_of_assignment(t, tup)


def satisfies(t: TemplateHandle, c: AssignmentClass, constraints) -> bool:
    """Check ``(symbol, positions)`` constraints against a class."""
    for symbol, positions in constraints:
        if not class_holds(t, symbol, restrict_class(c, positions)):
            return False
    return True


def local_constraints(instance: Structure, variables: tuple) -> list:
    """Facts of ``instance`` inside ``variables``, as (symbol, positions)."""
    where = {v: i for i, v in enumerate(variables)}
    out = []
    for name, tup in instance.facts():
        if all(x in where for x in tup):
            out.append((name, tuple(where[x] for x in tup)))
    return out


def class_to_json(c: AssignmentClass):
    if c.kind == FINITE:
        return [str(v) for v in c.payload]
    if c.kind == QORDER:
        return [list(b) for b in c.payload]
    blocks, edges = c.payload
    return {"blocks": [list(b) for b in blocks], "edges": [list(e) for e in edges]}


def describe_class(c: AssignmentClass, names=None) -> str:
    names = list(names) if names is not None else [f"x{i}" for i in range(c.arity)]
    if c.kind == FINITE:
        return ", ".join(f"{n}={v}" for n, v in zip(names, c.payload))
    if c.kind == QORDER:
        return " < ".join("=".join(names[p] for p in b) for b in c.payload)
    blocks, edges = c.payload
    parts = ["=".join(names[p] for p in b) for b in blocks]
    links = [f"{parts[i]}~{parts[j]}" for i, j in edges]
    return "{" + ", ".join(parts) + "}" + (" " + " ".join(links) if links else "")


# ---------------------------------------------------------------------------
# ground-truth decisions


@dataclass(frozen=True)
class OracleDecision:
    satisfiable: bool
    witness: object = None


def _check_instance(t: TemplateHandle, instance: Structure):
    for name, arity in instance.signature:
        if name not in t.signature or t.signature.arity(name) != arity:
            raise StructureError(f"instance symbol {name}/{arity} not in the template signature")


def decide_csp(t: TemplateHandle, instance: Structure) -> OracleDecision:
    _check_instance(t, instance)
    if t.kind == FINITE:
        inst = instance
        if instance.signature != t.signature:
            inst = Structure(t.signature, instance.domain,
                             {n: instance.tuples(n) for n, _ in instance.signature})
        h = find_homomorphism(inst, t.structure)
        return OracleDecision(h is not None, h)
    arcs = instance.tuples(t.symbol) if t.symbol in instance.signature else ()
    if t.kind == QORDER:
        sorter = TopologicalSorter({x: set() for x in instance.domain})
        for x, y in arcs:
            if x == y:
                return OracleDecision(False, ("cycle", (x, x)))
            sorter.add(y, x)
        try:
            order = list(sorter.static_order())
        except CycleError as exc:
            return OracleDecision(False, ("cycle", tuple(exc.args[1])))
        return OracleDecision(True, ("order", tuple(order)))
    adj = {x: set() for x in instance.domain}
    for x, y in arcs:
        if x == y:
            return OracleDecision(False, ("loop", x))
        adj[x].add(y)
        adj[y].add(x)
    for x in instance.domain:
        for y in adj[x]:
            common = adj[x] & adj[y]
            if common:
                z = min(common, key=instance.index)
                return OracleDecision(False, ("triangle", (x, y, z)))
    return OracleDecision(True, None)
