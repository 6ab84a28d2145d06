"""(l,k)-consistency, arc-consistency and the power structure test.

The canonical (l,k)-Datalog program is run extensionally: for every set of
at most ``l`` instance variables the store keeps the classes that have not
been refuted yet, which is exactly the strongest IDB the canonical program
has derived on that tuple.  A refinement step takes a frame of ``min(k, n)``
variables, keeps the classes on the frame that satisfy the instance facts
inside it and restrict into the current entries, and projects them back
onto the small sets.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .datalog import FALSE, Atom, DatalogProgram, Rule
from .structure import BudgetExceeded, Signature, Structure, hom_exists
from .templates import (FINITE, AssignmentClass, TemplateHandle, class_holds, class_to_json,
                        classes, local_constraints, restrict_class, satisfies)


def check_parameters(t: TemplateHandle, l: int, k: int):
    if not (1 <= l < k):
        raise ValueError(f"need 1 <= l < k, got l={l}, k={k}")
    if k < t.signature.max_arity():
        raise ValueError(f"k={k} is smaller than the template's maximal arity")
    if k > t.cap:
        raise ValueError(f"k={k} exceeds the class cap {t.cap} of the template")


def _subsets(frame, l):
    return [s for size in range(min(l, len(frame)) + 1)
            for s in itertools.combinations(frame, size)]


@dataclass
class ConstraintStore:
    variables: tuple
    l: int
    k: int
    entries: dict
    failed: bool
    iterations: int = 0
    template: Optional[TemplateHandle] = field(default=None, repr=False)

    @property
    def accepted(self) -> bool:
        return not self.failed

    def key(self, variables) -> tuple:
        order = {v: i for i, v in enumerate(self.variables)}
        return tuple(sorted(set(variables), key=order.__getitem__))

    def classes_on(self, variables) -> set:
        """Surviving classes on an arbitrary tuple of (possibly repeated) variables."""
        variables = tuple(variables)
        key = self.key(variables)
        if len(key) > self.l:
            raise KeyError(f"{variables} has more than l={self.l} distinct variables")
        positions = tuple(key.index(v) for v in variables)
        return {restrict_class(c, positions) for c in self.entries[key]}

    def allows(self, variables, c: AssignmentClass) -> bool:
        """Does a class on ``variables`` (sorted store order) restrict into every entry?"""
        variables = tuple(variables)
        for s in _subsets(variables, self.l):
            pos = tuple(variables.index(v) for v in s)
            if restrict_class(c, pos) not in self.entries[s]:
                return False
        return True

    def to_json(self) -> dict:
        return {
            "accepted": self.accepted,
            "entries": [{"vars": [str(v) for v in key],
                         "classes": [class_to_json(c) for c in sorted(cls, key=repr)]}
                        for key, cls in self.entries.items()],
            "iterations": self.iterations,
        }


def establish_lk_consistency(instance: Structure, t: TemplateHandle, l: int, k: int,
                             schedule: str = "fifo") -> ConstraintStore:
    """Greatest (l,k)-consistent store for ``instance`` against ``t``.

    ``schedule`` picks the worklist discipline (``fifo`` or ``lifo``); the
    fixpoint does not depend on it.
    """
    check_parameters(t, l, k)
    if schedule not in ("fifo", "lifo"):
        raise ValueError(f"unknown schedule {schedule!r}")
    variables = tuple(instance.domain)
    m = min(k, len(variables))
    frames = list(itertools.combinations(variables, m))
    entries = {s: set(classes(t, len(s))) for s in _subsets(variables, l)}

    # candidates per frame: classes satisfying the facts inside the frame,
    # each with its restrictions to the small subsets of the frame
    candidates = {}
    watchers = {s: [] for s in entries}
    for w in frames:
        subs = _subsets(w, l)
        positions = [tuple(w.index(v) for v in s) for s in subs]
        cons = local_constraints(instance, w)
        cands = []
        for c in classes(t, m):
            if satisfies(t, c, cons):
                cands.append((c, tuple(restrict_class(c, p) for p in positions)))
        candidates[w] = (subs, cands)
        for s in subs:
            watchers[s].append(w)

    queue = deque(frames)
    queued = set(frames)
    iterations = 0
    failed = False
    while queue and not failed:
        w = queue.popleft() if schedule == "fifo" else queue.pop()
        queued.discard(w)
        iterations += 1
        subs, cands = candidates[w]
        alive = [(c, rs) for c, rs in cands
                 if all(r in entries[s] for r, s in zip(rs, subs))]
        candidates[w] = (subs, alive)
        for i, s in enumerate(subs):
            projected = {rs[i] for _, rs in alive}
            current = entries[s]
            if current <= projected:
                continue
            entries[s] = current & projected
            if not entries[s]:
                failed = True
                break
            for other in watchers[s]:
                if other != w and other not in queued:
                    queued.add(other)
                    queue.append(other)
    if failed:
        # an empty 0-ary entry empties everything above it
        entries = {s: set() for s in entries}
    return ConstraintStore(variables, l, k, {s: frozenset(c) for s, c in entries.items()},
                           failed, iterations, t)


def store_violations(store: ConstraintStore, instance: Structure) -> list:
    """Check the store's invariants directly; return a list of problems."""
    t = store.template
    problems = []
    for key, cls in store.entries.items():
        cons = local_constraints(instance, key)
        for c in cls:
            if not satisfies(t, c, cons):
                problems.append(("fact", key, c))
            for size in range(len(key)):
                for sub in itertools.combinations(range(len(key)), size):
                    sub_key = tuple(key[i] for i in sub)
                    if restrict_class(c, sub) not in store.entries[sub_key]:
                        problems.append(("closure", key, c, sub_key))
    empty = any(not cls for cls in store.entries.values())
    if empty != store.failed:
        problems.append(("failed-flag", store.failed))
    return problems


def solves_on(instance: Structure, t: TemplateHandle, l: int, k: int) -> tuple:
    """(accepted, agrees_with_oracle) for one instance."""
    from .templates import decide_csp

    accepted = establish_lk_consistency(instance, t, l, k).accepted
    return accepted, accepted == decide_csp(t, instance).satisfiable


# ---------------------------------------------------------------------------
# explicit canonical program for small finite templates


def _relation_name(domain, j, rel) -> str:
    if j == 0:
        return FALSE
    index = {tup: i for i, tup in enumerate(itertools.product(domain, repeat=j))}
    mask = 0
    for tup in rel:
        mask |= 1 << index[tup]
    return f"r{j}_{mask:x}"


def materialize_canonical_program(t: TemplateHandle, l: int, k: int,
                                  budget: int = 200_000) -> DatalogProgram:
    """Emit a width-(l,k) program whose IDBs are the reachable <=l-ary relations.

    Starting from nothing, bodies over up to ``k`` variables are enumerated:
    any set of EDB atoms plus at most one known IDB per increasing subset of
    at most ``l`` variables.  Each body yields rules for every projection
    that is strictly stronger than what the body already states; new
    relations join the pool and the enumeration is repeated until nothing
    new appears.  Intersection rules keep the pool closed under meets.
    """
    if t.kind != FINITE:
        raise TypeError("canonical programs are only materialised for finite templates")
    if not (1 <= l < k):
        raise ValueError(f"need 1 <= l < k, got l={l}, k={k}")
    if k < t.signature.max_arity():
        raise ValueError("k is smaller than the template's maximal arity")
    dom = t.structure.domain
    known = {j: set() for j in range(1, l + 1)}
    rules = {}
    meaning = {}
    spent = 0

    def full(j):
        return frozenset(itertools.product(dom, repeat=j))

    def name_of(j, rel):
        name = _relation_name(dom, j, rel)
        meaning.setdefault(name, rel)
        return name

    def emit(head, body):
        rule = Rule(head, tuple(body))
        rules.setdefault(rule, None)

    seen_bodies = set()
    while True:
        grew = False
        snapshot = {j: sorted(known[j], key=sorted) for j in known}
        for j, rels in snapshot.items():
            for a, b in itertools.combinations(rels, 2):
                meet = a & b
                if meet in (a, b):
                    continue
                xs = tuple(f"x{i}" for i in range(1, j + 1))
                emit(Atom(name_of(j, meet), xs),
                     [Atom(name_of(j, a), xs), Atom(name_of(j, b), xs)])
                if meet not in known[j]:
                    known[j].add(meet)
                    grew = True
        for kp in range(1, k + 1):
            xs = tuple(f"x{i}" for i in range(1, kp + 1))
            edb_atoms = [(name, args) for name, arity in t.signature
                         for args in itertools.product(xs, repeat=arity)]
            small = [s for size in range(1, min(l, kp) + 1)
                     for s in itertools.combinations(range(kp), size)]
            idb_options = [[None] + snapshot[len(s)] for s in small]
            points = list(itertools.product(dom, repeat=kp))
            for edb_mask in range(1 << len(edb_atoms)):
                edb_body = [edb_atoms[i] for i in range(len(edb_atoms)) if edb_mask >> i & 1]
                for choice in itertools.product(*idb_options):
                    spent += 1
                    if spent > budget:
                        raise BudgetExceeded(f"canonical program exceeded {budget} candidate bodies")
                    used = {v for _, args in edb_body for v in args}
                    for s, rel in zip(small, choice):
                        if rel is not None:
                            used.update(xs[i] for i in s)
                    if len(used) != kp:
                        continue  # covered by a body over fewer variables
                    body_key = (kp, edb_mask, tuple(None if r is None else tuple(sorted(r))
                                                    for r in choice))
                    if body_key in seen_bodies:
                        continue
                    seen_bodies.add(body_key)
                    sat = [p for p in points
                           if all(t.structure.holds(name, tuple(p[xs.index(v)] for v in args))
                                  for name, args in edb_body)
                           and all(rel is None or tuple(p[i] for i in s) in rel
                                   for s, rel in zip(small, choice))]
                    body = [Atom(name, args) for name, args in edb_body]
                    body += [Atom(name_of(len(s), rel), tuple(xs[i] for i in s))
                             for s, rel in zip(small, choice) if rel is not None]
                    if not sat:
                        emit(Atom(FALSE, ()), body)
                    for s, rel in zip(small, choice):
                        proj = frozenset(tuple(p[i] for i in s) for p in sat)
                        bound = rel if rel is not None else full(len(s))
                        if proj >= bound:
                            continue
                        emit(Atom(name_of(len(s), proj), tuple(xs[i] for i in s)), body)
                        if proj not in known[len(s)]:
                            known[len(s)].add(proj)
                            grew = True
        if not grew:
            break
    idbs = [(name, len(next(iter(rel))) if rel else int(name[1:name.index("_")]))
            for name, rel in meaning.items() if name != FALSE]
    return DatalogProgram(t.signature, Signature(tuple(idbs)), tuple(rules),
                          meaning={n: r for n, r in meaning.items() if n != FALSE})


# ---------------------------------------------------------------------------
# arc-consistency


@dataclass
class ArcConsistencyResult:
    domains: dict
    failed: bool

    @property
    def accepted(self) -> bool:
        return not self.failed


def arc_consistency(instance: Structure, t: TemplateHandle, joint: bool = False) -> ArcConsistencyResult:
    """Generalised arc-consistency: prune values lacking support in some fact.

    Support is checked position by position: a value of ``x`` survives a
    fact if, at every position holding ``x``, some tuple of the relation has
    that value there and draws its other entries from the current domains.
    With ``joint`` a repeated variable must take one value in the supporting
    tuple, which is stronger on facts such as ``E(x,x)``.
    """
    if t.kind != FINITE:
        raise TypeError("value-based arc-consistency needs a finite template")
    tmpl = t.structure
    domains = {x: set(tmpl.domain) for x in instance.domain}
    facts = list(instance.facts())
    for name, tup in facts:
        if not tup and not tmpl.holds(name, ()):
            return ArcConsistencyResult({x: () for x in instance.domain}, True)
    facts_of = {x: [] for x in instance.domain}
    for fact in facts:
        for x in set(fact[1]):
            facts_of[x].append(fact)
    queue = deque(f for f in facts if f[1])
    queued = set(queue)
    failed = False
    while queue and not failed:
        name, tup = queue.popleft()
        queued.discard((name, tup))
        per_position = [set() for _ in tup]
        for row in tmpl.tuples(name):
            if not all(v in domains[x] for x, v in zip(tup, row)):
                continue
            if joint and any(row[i] != row[tup.index(x)] for i, x in enumerate(tup)):
                continue
            for i, v in enumerate(row):
                per_position[i].add(v)
        support = {}
        for i, x in enumerate(tup):
            support[x] = support.get(x, domains[x]) & per_position[i]
        for x, vals in support.items():
            if vals != domains[x]:
                domains[x] = vals
                if not vals:
                    failed = True
                    break
                for other in facts_of[x]:
                    if other not in queued:
                        queued.add(other)
                        queue.append(other)
    order = {v: i for i, v in enumerate(tmpl.domain)}
    out = {x: tuple(sorted(vals, key=order.__getitem__)) for x, vals in domains.items()}
    return ArcConsistencyResult(out, failed or any(not v for v in out.values()))


def arc_consistency_classes(instance: Structure, t: TemplateHandle, joint: bool = False) -> ArcConsistencyResult:
    """Arc-consistency over unary classes, one fact per inference.

    Works for every template kind; for finite templates it agrees with
    ``arc_consistency`` under the same ``joint`` setting.
    """
    unary = classes(t, 1)
    entries = {x: set(unary) for x in instance.domain}
    facts = list(instance.facts())
    changed = True
    while changed:
        changed = False
        for name, tup in facts:
            # position-wise: every position is its own variable
            frame = tuple(dict.fromkeys(tup)) if joint else tup
            if len(frame) > t.cap:
                raise ValueError("fact arity exceeds the class cap")
            cons = [(name, tuple(frame.index(x) for x in tup) if joint else tuple(range(len(tup))))]
            alive = [c for c in classes(t, len(frame))
                     if satisfies(t, c, cons)
                     and all(restrict_class(c, (i,)) in entries[x] for i, x in enumerate(frame))]
            if not frame:
                if not alive:
                    return ArcConsistencyResult({x: () for x in instance.domain}, True)
                continue
            for i, x in enumerate(frame):
                proj = {restrict_class(c, (i,)) for c in alive}
                if not entries[x] <= proj:
                    entries[x] &= proj
                    changed = True
                    if not entries[x]:
                        return ArcConsistencyResult({y: tuple(v) for y, v in entries.items()}, True)
    return ArcConsistencyResult({y: tuple(v) for y, v in entries.items()}, False)


def power_structure(t: TemplateHandle, cap: int = 5) -> Structure:
    """Structure on nonempty subsets (finite) or unary classes (oracles).

    ``R(S_1..S_r)`` holds when every element of every ``S_j`` is supported
    by an ``R``-tuple drawing its other entries from the other sets.
    """
    if t.kind == FINITE:
        dom = t.structure.domain
        if len(dom) > cap:
            raise ValueError(f"template has {len(dom)} elements, power structure cap is {cap}")
        subsets = [frozenset(dom[i] for i in range(len(dom)) if mask >> i & 1)
                   for mask in range(1, 1 << len(dom))]
        subsets.sort(key=lambda s: (len(s), sorted(dom.index(x) for x in s)))
        rels = {}
        for name, arity in t.signature:
            rows = t.structure.tuples(name)
            holding = []
            for combo in itertools.product(subsets, repeat=arity):
                usable = [r for r in rows if all(v in s for v, s in zip(r, combo))]
                if all(any(r[j] == a for r in usable) for j, s in enumerate(combo) for a in s):
                    if arity or rows:
                        holding.append(combo)
            rels[name] = holding
        return Structure(t.signature, subsets, rels)
    unary = classes(t, 1)
    rels = {}
    for name, arity in t.signature:
        holding = []
        for combo in itertools.product(unary, repeat=arity):
            if any(class_holds(t, name, c)
                   and all(restrict_class(c, (i,)) == o for i, o in enumerate(combo))
                   for c in classes(t, arity)):
                holding.append(combo)
        rels[name] = holding
    return Structure(t.signature, unary, rels)


def ac_solves(t: TemplateHandle, cap: int = 5) -> bool:
    """Does arc-consistency decide CSP(t)?  True iff the power structure maps to t."""
    ps = power_structure(t, cap)
    if t.kind == FINITE:
        return hom_exists(ps, t.structure)
    # a single orbit: its vertex can only go to a constant tuple
    unary = classes(t, 1)
    if len(unary) != 1:
        raise NotImplementedError("oracle templates with several unary orbits")
    (orbit,) = unary
    for name, arity in t.signature:
        if ps.tuples(name) and not class_holds(t, name, restrict_class(orbit, (0,) * arity)):
            return False
    return True
