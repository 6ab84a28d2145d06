"""Tree decompositions of width (l,k), the L^{l,k} canonical query, and
obstructions unfolded from Datalog derivations."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

from .datalog import FALSE, DatalogProgram, DerivationTrace, evaluate
from .structure import Structure, gaifman_edges

DEFAULT_CAP = 10


class CapExceeded(ValueError):
    pass


@dataclass(frozen=True)
class TreeDecomposition:
    """Bags indexed 0..n-1; ``parent[i]`` is the parent bag or None for the root."""
    bags: tuple
    parent: tuple
    l: int
    k: int

    def children(self, i) -> list:
        return [j for j, p in enumerate(self.parent) if p == i]

    @property
    def root(self) -> int:
        return self.parent.index(None)

    def to_json(self) -> dict:
        return {"l": self.l, "k": self.k,
                "bags": [[str(x) for x in b] for b in self.bags],
                "parent": list(self.parent)}

    def to_text(self) -> str:
        lines = []

        def walk(i, depth):
            lines.append("  " * depth + "{" + ", ".join(str(x) for x in self.bags[i]) + "}")
            for j in self.children(i):
                walk(j, depth + 1)

        if self.bags:
            walk(self.root, 0)
        return "\n".join(lines)


def _adjacency(s: Structure):
    adj = {x: set() for x in s.domain}
    for a, b in gaifman_edges(s):
        adj[a].add(b)
        adj[b].add(a)
    return adj


def _components(vertices, adj):
    left = set(vertices)
    out = []
    for v in [x for x in vertices]:
        if v not in left:
            continue
        comp = {v}
        stack = [v]
        left.discard(v)
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w in left:
                    left.discard(w)
                    comp.add(w)
                    stack.append(w)
        out.append(frozenset(comp))
    return out


def find_decomposition(s: Structure, l: int, k: int, cap: int = DEFAULT_CAP) -> Optional[TreeDecomposition]:
    """Exact search for a decomposition with bags <= k and adjacent overlaps <= l.

    Works on pairs (S, C) where C is a connected vertex set whose
    neighbourhood is exactly the separator S.  A bag B with S < B <= S u C is
    chosen; every component C' of C - B then hangs below B with separator
    N(C'), which must have at most l elements.
    """
    if len(s.domain) > cap:
        raise CapExceeded(f"{len(s.domain)} elements exceed the decomposition cap {cap}")
    if k < 1 or l < 0 or l >= k:
        raise ValueError(f"need 0 <= l < k, got l={l}, k={k}")
    adj = _adjacency(s)
    order = {x: i for i, x in enumerate(s.domain)}

    def ordered(xs):
        return tuple(sorted(xs, key=order.__getitem__))

    def neighbours(c):
        return frozenset(w for u in c for w in adj[u]) - c

    @lru_cache(maxsize=None)
    def solve(sep: frozenset, comp: frozenset):
        # returns a nested (bag, [children]) tree or None
        inner = ordered(comp)
        room = k - len(sep)
        for size in range(min(room, len(inner)), 0, -1):
            for extra in itertools.combinations(inner, size):
                bag = sep | frozenset(extra)
                rest = [x for x in inner if x not in bag]
                subs = []
                for c2 in _components(rest, {x: adj[x] & comp for x in rest}):
                    sep2 = neighbours(c2)
                    if len(sep2) > l:
                        break
                    sub = solve(sep2, c2)
                    if sub is None:
                        break
                    subs.append(sub)
                else:
                    return (bag, tuple(subs))
        return None

    bags, parent = [], []

    def emit(node, par):
        bag, subs = node
        i = len(bags)
        bags.append(ordered(bag))
        parent.append(par)
        for sub in subs:
            emit(sub, i)
        return i

    prev = None
    for comp in _components(list(s.domain), adj):
        node = solve(frozenset(), comp)
        if node is None:
            return None
        prev = emit(node, prev)
    if not bags:
        bags.append(())
        parent.append(None)
    return TreeDecomposition(tuple(bags), tuple(parent), l, k)


def verify_decomposition(d: TreeDecomposition, s: Structure) -> bool:
    n = len(d.bags)
    if n == 0 or len(d.parent) != n:
        return False
    roots = [i for i, p in enumerate(d.parent) if p is None]
    if len(roots) != 1:
        return False
    for i in range(n):
        seen = set()
        j = i
        while j is not None:
            if j in seen or not (isinstance(j, int) and 0 <= j < n):
                return False
            seen.add(j)
            j = d.parent[j]
    bagsets = [set(b) for b in d.bags]
    if any(len(b) > d.k for b in bagsets):
        return False
    for i, p in enumerate(d.parent):
        if p is not None and len(bagsets[i] & bagsets[p]) > d.l:
            return False
    if any(x not in s for b in bagsets for x in b):
        return False
    for x in s.domain:
        holders = {i for i, b in enumerate(bagsets) if x in b}
        if not holders:
            return False
        # the holders form a subtree iff exactly one of them has its parent outside
        tops = [i for i in holders if d.parent[i] not in holders]
        if len(tops) != 1:
            return False
    for a, b in gaifman_edges(s):
        if not any(a in bag and b in bag for bag in bagsets):
            return False
    return True


# ---------------------------------------------------------------------------
# formulas of L^{l,k}


@dataclass(frozen=True)
class FAtom:
    symbol: str
    args: tuple


@dataclass(frozen=True)
class FAnd:
    parts: tuple


@dataclass(frozen=True)
class FExists:
    variables: tuple
    body: object


@dataclass(frozen=True)
class FTop:
    pass


def free_variables(f) -> frozenset:
    if isinstance(f, FAtom):
        return frozenset(f.args)
    if isinstance(f, FAnd):
        return frozenset().union(*(free_variables(p) for p in f.parts))
    if isinstance(f, FExists):
        return free_variables(f.body) - set(f.variables)
    return frozenset()


def variable_names(f) -> set:
    if isinstance(f, FAtom):
        return set(f.args)
    if isinstance(f, FAnd):
        return set().union(*(variable_names(p) for p in f.parts))
    if isinstance(f, FExists):
        return set(f.variables) | variable_names(f.body)
    return set()


def _quantifier_free(f) -> bool:
    if isinstance(f, FExists):
        return False
    if isinstance(f, FAnd):
        return all(_quantifier_free(p) for p in f.parts)
    return True


def in_lk(f, l: int, k: int) -> bool:
    """At most k variable names, and every conjunction l-bounded."""
    if len(variable_names(f)) > k:
        return False

    def ok(g):
        if isinstance(g, FAnd):
            return all((_quantifier_free(p) or len(free_variables(p)) <= l) and ok(p)
                       for p in g.parts)
        if isinstance(g, FExists):
            return ok(g.body)
        return True

    return ok(f)


def evaluate_formula(f, b: Structure, env: Optional[dict] = None) -> bool:
    env = {} if env is None else env
    if isinstance(f, FTop):
        return True
    if isinstance(f, FAtom):
        return b.holds(f.symbol, tuple(env[v] for v in f.args))
    if isinstance(f, FAnd):
        return all(evaluate_formula(p, b, env) for p in f.parts)
    if isinstance(f, FExists):
        for values in itertools.product(b.domain, repeat=len(f.variables)):
            inner = dict(env)
            inner.update(zip(f.variables, values))
            if evaluate_formula(f.body, b, inner):
                return True
        return False
    raise TypeError(f"not a formula: {f!r}")


def _conj(parts):
    parts = tuple(p for p in parts if not isinstance(p, FTop))
    if not parts:
        return FTop()
    return parts[0] if len(parts) == 1 else FAnd(parts)


def canonical_query_lk(s: Structure, d: TreeDecomposition):
    """Closed L^{l,k} sentence true in B iff s maps to B.

    Each bag binds its new elements under one existential block; child
    bags appear as conjuncts whose free variables are the shared elements.
    Variables come from the pool x1..xk.
    """
    pool = [f"x{i}" for i in range(1, d.k + 1)]
    bagsets = [set(b) for b in d.bags]
    # every fact goes to the first bag (preorder) that contains it
    owner = {}
    preorder = []

    def walk(i):
        preorder.append(i)
        for j in d.children(i):
            walk(j)

    walk(d.root)
    facts = list(s.facts())
    for fact in facts:
        for i in preorder:
            if set(fact[1]) <= bagsets[i]:
                owner.setdefault(i, []).append(fact)
                break
        else:
            raise ValueError(f"fact {fact} lies in no bag")

    def build(i, names):
        bound = {x: v for x, v in names.items() if x in bagsets[i]}
        fresh = [x for x in d.bags[i] if x not in bound]
        free = [v for v in pool if v not in bound.values()]
        local = dict(bound)
        local.update(zip(fresh, free))
        parts = [FAtom(sym, tuple(local[x] for x in args)) for sym, args in owner.get(i, [])]
        parts += [build(j, local) for j in d.children(i)]
        body = _conj(parts)
        if fresh:
            return FExists(tuple(local[x] for x in fresh), body)
        return body

    return build(d.root, {})


def formula_to_text(f, indent=0) -> str:
    pad = "  " * indent
    if isinstance(f, FTop):
        return pad + "true"
    if isinstance(f, FAtom):
        return pad + f"{f.symbol}({','.join(f.args)})"
    if isinstance(f, FExists):
        return pad + f"exists {' '.join(f.variables)}.\n" + formula_to_text(f.body, indent + 1)
    if isinstance(f, FAnd):
        return pad + "and\n" + "\n".join(formula_to_text(p, indent + 1) for p in f.parts)
    raise TypeError(f"not a formula: {f!r}")


def formula_to_json(f):
    if isinstance(f, FTop):
        return {"op": "true"}
    if isinstance(f, FAtom):
        return {"op": "atom", "symbol": f.symbol, "args": list(f.args)}
    if isinstance(f, FExists):
        return {"op": "exists", "vars": list(f.variables), "body": formula_to_json(f.body)}
    if isinstance(f, FAnd):
        return {"op": "and", "parts": [formula_to_json(p) for p in f.parts]}
    raise TypeError(f"not a formula: {f!r}")


def formula_from_json(data):
    if isinstance(data, str):
        data = json.loads(data)
    op = data["op"]
    if op == "true":
        return FTop()
    if op == "atom":
        return FAtom(data["symbol"], tuple(data["args"]))
    if op == "exists":
        return FExists(tuple(data["vars"]), formula_from_json(data["body"]))
    if op == "and":
        return FAnd(tuple(formula_from_json(p) for p in data["parts"]))
    raise ValueError(f"unknown formula op {op!r}")


# ---------------------------------------------------------------------------
# obstructions from derivations


@dataclass
class Obstruction:
    structure: Structure
    hom: dict                  # element of the obstruction -> instance element
    decomposition: TreeDecomposition
    notes: list = field(default_factory=list)


def unfold_derivation(trace: DerivationTrace, program: DatalogProgram,
                      instance: Structure) -> Obstruction:
    """Unfold the derivation of ``false`` into a tree of rule instances.

    Every rule instance gets fresh elements for its variables, except the
    head variables, which are identified with the arguments of the body
    atom they were derived for.  Rule instances become bags, so the result
    comes with a decomposition of the program's width.
    """
    step_of = {}
    for st in trace.steps:
        step_of.setdefault(st.fact, st)
    goal = (FALSE, ())
    if goal not in step_of:
        raise ValueError("the trace does not derive false")
    from .datalog import program_width

    l, k = program_width(program)
    parent_uf = {}

    def find(x):
        while parent_uf[x] != x:
            parent_uf[x] = parent_uf[parent_uf[x]]
            x = parent_uf[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent_uf[max(ra, rb)] = min(ra, rb)

    counter = itertools.count()
    value = {}
    facts = []
    bags, bag_parent = [], []
    notes = []

    def fresh(v):
        e = next(counter)
        parent_uf[e] = e
        value[e] = v
        return e

    def build(fact, head_elems, par):
        st = step_of[fact]
        rule = program.rules[st.rule]
        env = dict(st.assignment)
        names = {}
        for var, elem in zip(rule.head.args, head_elems):
            if var in names:
                if find(names[var]) != find(elem):
                    notes.append(f"identified elements for repeated head variable {var}")
                    union(names[var], elem)
            else:
                names[var] = elem
        for var in rule.variables():
            if var not in names:
                names[var] = fresh(env[var])
        me = len(bags)
        bags.append([names[v] for v in rule.variables()])
        bag_parent.append(par)
        for atom, body_fact in zip(rule.body, st.body):
            args = [names[v] for v in atom.args]
            if atom.symbol in program.edbs:
                facts.append((atom.symbol, args))
            else:
                build(body_fact, args, me)

    build(goal, [], None)
    dom = sorted({find(e) for e in parent_uf})
    rels = {}
    for sym, args in facts:
        rels.setdefault(sym, set()).add(tuple(find(a) for a in args))
    s = Structure(program.edbs, dom, {sym: sorted(ts) for sym, ts in rels.items()})
    hom = {e: value[e] for e in dom}
    dec = TreeDecomposition(tuple(tuple(sorted({find(e) for e in b})) for b in bags),
                            tuple(bag_parent), l, k)
    return Obstruction(s, hom, dec, notes)


def obstruction_from_trace(trace: DerivationTrace, program: DatalogProgram,
                           instance: Structure) -> Structure:
    return unfold_derivation(trace, program, instance).structure


def check_obstruction(ob: Obstruction, program: DatalogProgram, instance: Structure) -> dict:
    """The three properties: maps to the instance, decomposes, re-derives false."""
    from .structure import is_homomorphism

    s = ob.structure
    maps = is_homomorphism(ob.hom, s, instance.reduct(program.edbs)
                           if set(instance.signature.names) != set(program.edbs.names) else instance)
    decomposes = verify_decomposition(ob.decomposition, s)
    if not decomposes and len(s.domain) <= DEFAULT_CAP:
        decomposes = find_decomposition(s, ob.decomposition.l, ob.decomposition.k) is not None
    facts, _ = evaluate(program, s)
    return {"maps": maps, "decomposes": decomposes, "derives_false": facts.holds(FALSE, ())}
