"""Relational signatures, finite structures and homomorphisms.

Elements are arbitrary hashable values (the text parser produces strings).
Every structure carries an explicit domain order; all enumerations follow
it, so results are reproducible across runs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Iterator, Mapping, Optional, Sequence


class StructureError(ValueError):
    """Raised for malformed signatures, structures or structure files."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class Signature:
    symbols: tuple = ()

    def __post_init__(self):
        symbols = tuple((str(name), int(arity)) for name, arity in self.symbols)
        names = [name for name, _ in symbols]
        if len(set(names)) != len(names):
            raise StructureError(f"duplicate relation symbol in {names}")
        for name, arity in symbols:
            if arity < 0:
                raise StructureError(f"negative arity for {name}")
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "_arity", dict(symbols))

    @classmethod
    def of(cls, **arities) -> "Signature":
        return cls(tuple(arities.items()))

    @property
    def names(self) -> tuple:
        return tuple(name for name, _ in self.symbols)

    def arity(self, name: str) -> int:
        try:
            return self._arity[name]
        except KeyError:
            raise StructureError(f"undeclared symbol {name!r}") from None

    def max_arity(self) -> int:
        return max((a for _, a in self.symbols), default=0)

    def __contains__(self, name) -> bool:
        return name in self._arity

    def __iter__(self):
        return iter(self.symbols)

    def __len__(self):
        return len(self.symbols)

    def union(self, other: "Signature") -> "Signature":
        merged = list(self.symbols)
        for name, arity in other.symbols:
            if name in self:
                if self.arity(name) != arity:
                    raise StructureError(f"conflicting arity for {name}")
                continue
            merged.append((name, arity))
        return Signature(tuple(merged))


class Structure:
    """A finite relational structure.

    ``relations`` maps each symbol of the signature to a set of tuples;
    missing symbols are taken as empty.  Tuples are kept sorted by the domain
    order, which fixes the iteration order of ``tuples`` and ``facts``.
    """

    __slots__ = ("signature", "domain", "_index", "_rels", "_sets", "_hash")

    def __init__(self, signature: Signature, domain: Iterable[Hashable],
                 relations: Optional[Mapping[str, Iterable[tuple]]] = None):
        self.signature = signature
        domain = tuple(domain)
        index = {}
        for pos, elem in enumerate(domain):
            if elem in index:
                raise StructureError(f"duplicate domain element {elem!r}")
            index[elem] = pos
        self.domain = domain
        self._index = index
        relations = dict(relations or {})
        for name in relations:
            if name not in signature:
                raise StructureError(f"undeclared symbol {name!r}")
        rels = {}
        sets = {}
        for name, arity in signature:
            tuples = set()
            for tup in relations.get(name, ()):
                tup = tuple(tup)
                if len(tup) != arity:
                    raise StructureError(
                        f"arity mismatch for {name}: expected {arity}, got {len(tup)}")
                for elem in tup:
                    if elem not in index:
                        raise StructureError(f"{elem!r} in {name}{tup} is not a domain element")
                tuples.add(tup)
            sets[name] = frozenset(tuples)
            rels[name] = tuple(sorted(tuples, key=self._key))
        self._rels = rels
        self._sets = sets
        self._hash = None

    def _key(self, tup):
        return tuple(self._index[e] for e in tup)

    # construction helpers

    @classmethod
    def from_facts(cls, signature: Signature, facts: Iterable[tuple],
                   domain: Optional[Iterable[Hashable]] = None) -> "Structure":
        """Build a structure from ``(symbol, tuple)`` facts.

        Elements not listed in ``domain`` are appended in order of first
        appearance.
        """
        elems = list(domain or ())
        seen = set(elems)
        relations: dict = {}
        for name, tup in facts:
            tup = tuple(tup)
            relations.setdefault(name, []).append(tup)
            for elem in tup:
                if elem not in seen:
                    seen.add(elem)
                    elems.append(elem)
        return cls(signature, elems, relations)

    # queries

    def __len__(self):
        return len(self.domain)

    def index(self, elem) -> int:
        return self._index[elem]

    def __contains__(self, elem) -> bool:
        return elem in self._index

    def tuples(self, name: str) -> tuple:
        return self._rels[name]

    def holds(self, name: str, tup) -> bool:
        return tuple(tup) in self._sets[name]

    def relation(self, name: str) -> frozenset:
        return self._sets[name]

    def facts(self) -> Iterator[tuple]:
        for name, _ in self.signature:
            for tup in self._rels[name]:
                yield name, tup

    def num_facts(self) -> int:
        return sum(len(r) for r in self._rels.values())

    # derived structures

    def induced(self, subset: Iterable[Hashable]) -> "Structure":
        keep = set(subset)
        domain = [e for e in self.domain if e in keep]
        rels = {name: [t for t in self._rels[name] if all(e in keep for e in t)]
                for name, _ in self.signature}
        return Structure(self.signature, domain, rels)

    def rename(self, mapping: Mapping) -> "Structure":
        """Apply an injective renaming of elements."""
        domain = [mapping[e] for e in self.domain]
        rels = {name: [tuple(mapping[e] for e in t) for t in self._rels[name]]
                for name, _ in self.signature}
        return Structure(self.signature, domain, rels)

    def with_facts(self, facts: Iterable[tuple]) -> "Structure":
        rels = {name: list(self._rels[name]) for name, _ in self.signature}
        domain = list(self.domain)
        seen = set(domain)
        for name, tup in facts:
            rels.setdefault(name, []).append(tuple(tup))
            for elem in tup:
                if elem not in seen:
                    seen.add(elem)
                    domain.append(elem)
        return Structure(self.signature, domain, rels)

    def reduct(self, signature: Signature) -> "Structure":
        return Structure(signature, self.domain,
                         {name: self._rels[name] for name, _ in signature if name in self.signature})

    def expand(self, signature: Signature, relations: Mapping[str, Iterable[tuple]]) -> "Structure":
        rels = {name: self._rels[name] for name, _ in self.signature}
        rels.update(relations)
        return Structure(self.signature.union(signature), self.domain, rels)

    # equality is structural, including the domain order

    def __eq__(self, other):
        if not isinstance(other, Structure):
            return NotImplemented
        return (self.signature == other.signature and self.domain == other.domain
                and self._sets == other._sets)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.signature, self.domain,
                               tuple(self._sets[n] for n, _ in self.signature)))
        return self._hash

    def __repr__(self):
        facts = ", ".join(f"{n}{t}" for n, t in self.facts())
        return f"Structure(domain={list(self.domain)}, facts=[{facts}])"


# ---------------------------------------------------------------------------
# text format


def parse_structure(text: str) -> Structure:
    """Parse the line-based structure format.

    ``rel NAME ARITY`` declares a symbol, ``domain e1 e2 ...`` lists
    elements, and ``NAME e1 ... eN`` is a fact.  ``#`` starts a comment.
    """
    symbols = []
    declared = {}
    domain = []
    seen = set()
    facts = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        head = tokens[0]
        if head == "rel":
            if len(tokens) != 3:
                raise StructureError("expected 'rel NAME ARITY'", lineno)
            name = tokens[1]
            try:
                arity = int(tokens[2])
            except ValueError:
                raise StructureError(f"bad arity {tokens[2]!r}", lineno) from None
            if arity < 0:
                raise StructureError(f"negative arity {arity}", lineno)
            if name in declared:
                raise StructureError(f"symbol {name!r} declared twice", lineno)
            declared[name] = arity
            symbols.append((name, arity))
        elif head == "domain":
            for elem in tokens[1:]:
                if elem not in seen:
                    seen.add(elem)
                    domain.append(elem)
        else:
            if head not in declared:
                raise StructureError(f"undeclared symbol {head!r}", lineno)
            args = tuple(tokens[1:])
            if len(args) != declared[head]:
                raise StructureError(
                    f"arity mismatch for {head}: expected {declared[head]}, got {len(args)}",
                    lineno)
            for elem in args:
                if elem not in seen:
                    seen.add(elem)
                    domain.append(elem)
            facts.append((head, args))
    return Structure.from_facts(Signature(tuple(symbols)), facts, domain)


def format_structure(s: Structure) -> str:
    lines = [f"rel {name} {arity}" for name, arity in s.signature]
    if s.domain:
        lines.append("domain " + " ".join(str(e) for e in s.domain))
    for name, tup in s.facts():
        lines.append(" ".join([name, *(str(e) for e in tup)]))
    return "\n".join(lines) + "\n"


def load_structure(path) -> Structure:
    with open(path, encoding="utf-8") as fh:
        return parse_structure(fh.read())


# ---------------------------------------------------------------------------
# constructions


def _check_same_signature(a: Structure, b: Structure):
    if a.signature != b.signature:
        raise StructureError(f"signature mismatch: {a.signature.symbols} vs {b.signature.symbols}")


def disjoint_union(a: Structure, b: Structure) -> Structure:
    """Disjoint union; elements are tagged ``(0, x)`` and ``(1, y)``."""
    _check_same_signature(a, b)
    domain = [(0, x) for x in a.domain] + [(1, y) for y in b.domain]
    rels = {}
    for name, _ in a.signature:
        rels[name] = ([tuple((0, e) for e in t) for t in a.tuples(name)]
                      + [tuple((1, e) for e in t) for t in b.tuples(name)])
    return Structure(a.signature, domain, rels)


GAIFMAN = Signature((("E", 2),))


def gaifman_edges(s: Structure) -> set:
    edges = set()
    for _, tup in s.facts():
        for x, y in itertools.combinations(tup, 2):
            if x != y:
                edges.add((x, y))
                edges.add((y, x))
    return edges


def gaifman_graph(s: Structure) -> Structure:
    """Loop-free symmetric graph joining elements that share a tuple."""
    return Structure(GAIFMAN, s.domain, {"E": gaifman_edges(s)})


def is_connected(s: Structure) -> bool:
    if not s.domain:
        return True
    adj = {e: set() for e in s.domain}
    for x, y in gaifman_edges(s):
        adj[x].add(y)
    start = s.domain[0]
    seen = {start}
    stack = [start]
    while stack:
        for nxt in adj[stack.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return len(seen) == len(s.domain)


# ---------------------------------------------------------------------------
# homomorphisms


def is_homomorphism(f: Mapping, a: Structure, b: Structure, partial: bool = False) -> bool:
    """Check that ``f`` preserves every fact of ``a`` it is defined on.

    With ``partial=False`` the map must be total on ``a``.
    """
    if not partial and any(x not in f for x in a.domain):
        return False
    for name, tup in a.facts():
        if partial and any(x not in f for x in tup):
            continue
        if not b.holds(name, tuple(f[x] for x in tup)):
            return False
    return True


class _HomSearch:
    """Backtracking over ``a``'s elements in domain order with forward checking."""

    def __init__(self, a: Structure, b: Structure, fixed: Optional[Mapping] = None,
                 budget: Optional[int] = None):
        _check_same_signature(a, b)
        self.a, self.b = a, b
        self.order = list(a.domain)
        self.pos = {x: i for i, x in enumerate(self.order)}
        self.facts = list(a.facts())
        self.budget = budget
        self.steps = 0
        self.facts_of = {x: [] for x in self.order}
        for fact in self.facts:
            for x in set(fact[1]):
                self.facts_of[x].append(fact)
        domains = {x: list(b.domain) for x in self.order}
        if fixed:
            for x, v in fixed.items():
                domains[x] = [v] if v in b else []
        # node consistency for facts over a single element
        for name, tup in self.facts:
            if len(set(tup)) == 1:
                x = tup[0]
                domains[x] = [v for v in domains[x] if b.holds(name, (v,) * len(tup))]
        for name, tup in self.facts:
            if not tup and not b.holds(name, ()):
                domains = {x: [] for x in self.order}
                self.dead = True
                break
        else:
            self.dead = False
        self.domains = domains

    def _prune(self, domains, assignment, x):
        """Forward-check facts touching ``x``; return new domains or None."""
        changed = dict(domains)
        for name, tup in self.facts_of[x]:
            open_ = {y for y in tup if y not in assignment}
            if len(open_) != 1:
                continue
            (y,) = open_
            rel = self.b.relation(name)
            keep = []
            for v in changed[y]:
                img = tuple(v if z == y else assignment[z] for z in tup)
                if img in rel:
                    keep.append(v)
            if not keep:
                return None
            changed[y] = keep
        return changed

    def _consistent(self, assignment, x):
        for name, tup in self.facts_of[x]:
            if all(y in assignment for y in tup):
                if not self.b.holds(name, tuple(assignment[y] for y in tup)):
                    return False
        return True

    def run(self) -> Iterator[dict]:
        if self.dead:
            return
        if not self.order:
            yield {}
            return
        yield from self._search(0, {}, self.domains)

    def _search(self, i, assignment, domains):
        x = self.order[i]
        for v in domains[x]:
            self.steps += 1
            if self.budget is not None and self.steps > self.budget:
                raise BudgetExceeded(f"homomorphism search exceeded {self.budget} steps")
            assignment[x] = v
            if self._consistent(assignment, x):
                pruned = self._prune(domains, assignment, x)
                if pruned is not None:
                    if i + 1 == len(self.order):
                        yield dict(assignment)
                    else:
                        yield from self._search(i + 1, assignment, pruned)
            del assignment[x]


class BudgetExceeded(RuntimeError):
    """A search ran past its configured step budget."""


def enumerate_homomorphisms(a: Structure, b: Structure, limit: Optional[int] = None,
                            fixed: Optional[Mapping] = None) -> list:
    """All homomorphisms ``a -> b`` (up to ``limit``), lexicographic in domain order."""
    out = []
    if limit is not None and limit <= 0:
        return out
    for h in _HomSearch(a, b, fixed).run():
        out.append(h)
        if limit is not None and len(out) >= limit:
            break
    return out


def find_homomorphism(a: Structure, b: Structure, fixed: Optional[Mapping] = None,
                      budget: Optional[int] = None) -> Optional[dict]:
    for h in _HomSearch(a, b, fixed, budget).run():
        return h
    return None


def hom_exists(a: Structure, b: Structure) -> bool:
    return find_homomorphism(a, b) is not None


def hom_equivalent(a: Structure, b: Structure) -> bool:
    return hom_exists(a, b) and hom_exists(b, a)


def compute_core(s: Structure) -> Structure:
    """Smallest induced substructure that ``s`` retracts onto.

    Subsets are tried by increasing size in lexicographic (domain) order,
    so the first hit is a minimal retract, which is a core.
    """
    n = len(s.domain)
    for size in range(0 if n == 0 else 1, n + 1):
        for subset in itertools.combinations(s.domain, size):
            sub = s.induced(subset)
            if hom_exists(s, sub):
                return sub
    return s


def is_core(s: Structure) -> bool:
    n = len(s.domain)
    for h in enumerate_homomorphisms(s, s):
        if len(set(h.values())) != n:
            return False
    return True


# ---------------------------------------------------------------------------
# canonical conjunctive queries


@dataclass(frozen=True)
class TaggedQuery:
    """A primitive positive formula: existential variables and atoms."""

    variables: tuple
    atoms: tuple
    free: tuple = ()

    def __post_init__(self):
        declared = set(self.variables)
        for _, args in self.atoms:
            for v in args:
                if v not in declared:
                    raise StructureError(f"atom uses undeclared variable {v!r}")
        if not set(self.free) <= declared:
            raise StructureError("free variables must be declared")

    def __str__(self):
        bound = [v for v in self.variables if v not in self.free]
        body = " ∧ ".join(f"{n}({','.join(args)})" for n, args in self.atoms) or "true"
        return f"∃{','.join(bound)}. {body}" if bound else body


def canonical_query(s: Structure) -> TaggedQuery:
    name = {e: f"v_{e}" for e in s.domain}
    if len(set(name.values())) != len(name):
        name = {e: f"v{i}" for i, e in enumerate(s.domain)}
    atoms = tuple((rel, tuple(name[e] for e in tup)) for rel, tup in s.facts())
    return TaggedQuery(tuple(name[e] for e in s.domain), atoms, ())


def query_holds(q: TaggedQuery, b: Structure, env: Optional[Mapping] = None) -> bool:
    """Evaluate a query by trying every assignment of its bound variables."""
    env = dict(env or {})
    bound = [v for v in q.variables if v not in env]
    for values in itertools.product(b.domain, repeat=len(bound)):
        env.update(zip(bound, values))
        if all(b.holds(rel, tuple(env[v] for v in args)) for rel, args in q.atoms):
            return True
    return False


# ---------------------------------------------------------------------------
# small standard structures


def digraph(edges: Iterable[tuple], symbol: str = "E", domain: Sequence = ()) -> Structure:
    return Structure.from_facts(Signature(((symbol, 2),)),
                                ((symbol, e) for e in edges), domain)


def graph(edges: Iterable[tuple], symbol: str = "E", domain: Sequence = ()) -> Structure:
    """Undirected graph stored with both orientations of every edge."""
    both = []
    for x, y in edges:
        both.append((x, y))
        both.append((y, x))
    return digraph(both, symbol, domain)


def clique(n: int, symbol: str = "E") -> Structure:
    nodes = [str(i) for i in range(n)]
    return graph(itertools.combinations(nodes, 2), symbol, nodes)


def directed_cycle(n: int, symbol: str = "E") -> Structure:
    nodes = [str(i) for i in range(n)]
    return digraph(((nodes[i], nodes[(i + 1) % n]) for i in range(n)), symbol, nodes)


def directed_path(n_edges: int, symbol: str = "E", prefix: str = "") -> Structure:
    nodes = [f"{prefix}{i}" for i in range(n_edges + 1)]
    return digraph(((nodes[i], nodes[i + 1]) for i in range(n_edges)), symbol, nodes)
