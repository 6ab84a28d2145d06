"""Powers of a template, polymorphisms, near-unanimity search, and a
bounded probe for strict width."""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from typing import Optional

from .consistency import ConstraintStore, establish_lk_consistency
from .structure import BudgetExceeded, Structure, find_homomorphism
from .templates import (FINITE, TemplateHandle, empty_class, extend_class,
                        local_constraints, restrict_class, satisfies)

DEFAULT_BUDGET = 2_000_000


def _need_finite(t: TemplateHandle):
    if t.kind != FINITE:
        raise TypeError("operation tables need a finite template")


def power_structure_alg(t: TemplateHandle, m: int, budget: int = DEFAULT_BUDGET) -> Structure:
    """The m-th categorical power: relations hold coordinatewise."""
    _need_finite(t)
    if m < 1:
        raise ValueError("m must be positive")
    base = t.structure
    if len(base.domain) ** m > budget:
        raise BudgetExceeded(f"|D|^{m} exceeds the budget {budget}")
    dom = list(itertools.product(base.domain, repeat=m))
    rels = {}
    for name, arity in base.signature:
        rows = base.tuples(name)
        if len(rows) ** m > budget:
            raise BudgetExceeded(f"relation {name} has too many {m}-fold products")
        # pick one row per coordinate, then read the result column-wise
        rels[name] = [tuple(zip(*pick)) if arity else () for pick in itertools.product(rows, repeat=m)]
    return Structure(base.signature, dom, rels)


@dataclass(frozen=True)
class OperationTable:
    arity: int
    table: dict  # m-tuple -> element

    def __call__(self, *args):
        return self.table[tuple(args)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for args, value in self.table.items():
            w.writerow([*args, value])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, domain=None) -> "OperationTable":
        lookup = {str(v): v for v in domain} if domain is not None else None
        table = {}
        arity = None
        for row in csv.reader(io.StringIO(text)):
            if not row:
                continue
            if lookup is not None:
                try:
                    row = [lookup[x] for x in row]
                except KeyError as exc:
                    raise ValueError(f"unknown element {exc.args[0]!r}") from None
            if arity is None:
                arity = len(row) - 1
            elif len(row) - 1 != arity:
                raise ValueError("rows of different lengths")
            table[tuple(row[:-1])] = row[-1]
        if arity is None:
            raise ValueError("empty operation table")
        return cls(arity, table)


def projection(t: TemplateHandle, m: int, i: int = 0) -> OperationTable:
    _need_finite(t)
    return OperationTable(m, {args: args[i] for args in itertools.product(t.structure.domain, repeat=m)})


def nu_forced_entries(m: int, subset) -> dict:
    """Arguments fixed by the near-unanimity identities on ``subset``."""
    forced = {}
    for x, y in itertools.product(subset, repeat=2):
        for i in range(m):
            args = tuple(y if j == i else x for j in range(m))
            if forced.setdefault(args, x) != x:
                raise ValueError("contradictory near-unanimity identities")
    return forced


def find_nu_polymorphism(t: TemplateHandle, m: int, subset=None,
                         budget: Optional[int] = DEFAULT_BUDGET) -> Optional[OperationTable]:
    """Search for a polymorphism of arity m that is near-unanimous on ``subset``.

    ``subset`` defaults to the whole domain.  The forced entries are fixed
    before the homomorphism search Γ^m -> Γ starts.  None means no such
    operation exists.
    """
    _need_finite(t)
    if m < 3:
        raise ValueError("near-unanimity needs arity at least 3")
    subset = list(t.structure.domain) if subset is None else list(subset)
    for x in subset:
        if x not in t.structure:
            raise ValueError(f"{x!r} is not a template element")
    power = power_structure_alg(t, m)
    h = find_homomorphism(power, t.structure, fixed=nu_forced_entries(m, subset), budget=budget)
    if h is None:
        return None
    return OperationTable(m, {args: h[args] for args in power.domain})


def verify_polymorphism(f: OperationTable, t: TemplateHandle) -> bool:
    _need_finite(t)
    base = t.structure
    for args in itertools.product(base.domain, repeat=f.arity):
        if args not in f.table or f.table[args] not in base:
            return False
    for name, arity in base.signature:
        rows = base.tuples(name)
        for pick in itertools.product(rows, repeat=f.arity):
            image = tuple(f.table[col] for col in zip(*pick)) if arity else ()
            if not base.holds(name, image):
                return False
    return True


def is_near_unanimity(f: OperationTable, subset) -> bool:
    for x, y in itertools.product(subset, repeat=2):
        for i in range(f.arity):
            args = tuple(y if j == i else x for j in range(f.arity))
            if f.table.get(args) != x:
                return False
    return True


# ---------------------------------------------------------------------------
# strict width probe


@dataclass
class GlobalConsistencyReport:
    instance_id: object
    store: ConstraintStore
    counterexample: Optional[dict]   # variable -> class on that variable tuple
    checked: int = 0
    label: str = "bounded evidence, not a proof of strict width"
    details: dict = field(default_factory=dict)

    @property
    def globally_consistent(self) -> bool:
        return self.counterexample is None


def _allowed(store: ConstraintStore, variables: tuple, c) -> bool:
    order = {v: i for i, v in enumerate(store.variables)}
    for size in range(1, min(store.l, len(variables)) + 1):
        for pos in itertools.combinations(range(len(variables)), size):
            pos = tuple(sorted(pos, key=lambda p: order[variables[p]]))
            key = tuple(variables[p] for p in pos)
            if restrict_class(c, pos) not in store.entries[key]:
                return False
    return True


def _extends(instance, t, store, variables, c, rest, budget) -> bool:
    """Depth-first extension of class ``c`` on ``variables`` by ``rest``, in order."""
    if not rest:
        return True
    v = rest[0]
    vs = variables + (v,)
    cons = local_constraints(instance, vs)
    for d in extend_class(t, c):
        budget[0] -= 1
        if budget[0] < 0:
            raise BudgetExceeded("extension search ran out of budget")
        if satisfies(t, d, cons) and _allowed(store, vs, d):
            if _extends(instance, t, store, vs, d, rest[1:], budget):
                return True
    return False


def _partial_assignments(instance, t, store, variables, budget):
    """All store-consistent classes on ``variables``, built position by position."""
    level = [empty_class(t)]
    for i in range(len(variables)):
        vs = variables[:i + 1]
        cons = local_constraints(instance, vs)
        nxt = []
        for c in level:
            for d in extend_class(t, c):
                budget[0] -= 1
                if budget[0] < 0:
                    raise BudgetExceeded("partial assignment enumeration ran out of budget")
                if satisfies(t, d, cons) and _allowed(store, vs, d):
                    nxt.append(d)
        level = nxt
    return level


def global_consistency_probe(instance: Structure, t: TemplateHandle, l: int, k: int,
                             instance_id=None, cap: int = 7,
                             budget: int = DEFAULT_BUDGET) -> GlobalConsistencyReport:
    """After (l,k)-consistency, does every store-consistent partial assignment extend?

    Partial assignments are classes on proper subsets of the variables that
    satisfy the facts inside the subset and restrict into the store.
    """
    if len(instance.domain) > cap:
        raise ValueError(f"instance has {len(instance.domain)} variables, probe cap is {cap}")
    store = establish_lk_consistency(instance, t, l, k)
    if store.failed:
        raise ValueError("(l,k)-consistency refutes the instance; nothing to probe")
    variables = tuple(instance.domain)
    left = [budget]
    checked = 0
    for size in range(1, len(variables)):
        for chosen in itertools.combinations(variables, size):
            rest = tuple(v for v in variables if v not in chosen)
            for c in _partial_assignments(instance, t, store, chosen, left):
                checked += 1
                if not _extends(instance, t, store, chosen, c, rest, left):
                    cex = {v: restrict_class(c, (i,)) for i, v in enumerate(chosen)}
                    return GlobalConsistencyReport(instance_id, store, cex, checked,
                                                   details={"variables": chosen, "class": c})
    return GlobalConsistencyReport(instance_id, store, None, checked)


def verify_counterexample(report: GlobalConsistencyReport, instance: Structure,
                          t: TemplateHandle) -> bool:
    """Exhaustively confirm that the reported partial assignment has no total extension."""
    if report.counterexample is None:
        return False
    chosen = report.details["variables"]
    c = report.details["class"]
    variables = tuple(instance.domain)
    cons = local_constraints(instance, variables)
    pos = tuple(variables.index(v) for v in chosen)
    level = [empty_class(t)]
    for _ in variables:
        level = [d for e in level for d in extend_class(t, e)]
    return not any(restrict_class(full, pos) == c and satisfies(t, full, cons) for full in level)
