"""Instance corpora and the standard small templates used across the package."""

from __future__ import annotations

import itertools
import random
from functools import lru_cache

import networkx as nx
import numpy as np

from .structure import Signature, Structure, digraph, directed_path, graph
from .templates import TemplateHandle


def _bit_maps(n: int, loops: bool):
    cells = [(i, j) for i in range(n) for j in range(n) if loops or i != j]
    index = {c: b for b, c in enumerate(cells)}
    maps = []
    for perm in itertools.permutations(range(n)):
        maps.append(np.array([index[(perm[i], perm[j])] for i, j in cells], dtype=np.int64))
    return cells, maps


def canonical_codes(codes: np.ndarray, n: int, loops: bool) -> np.ndarray:
    """Least relabelled bitmask of each digraph code (cells in row-major order)."""
    cells, maps = _bit_maps(n, loops)
    codes = codes.astype(np.int64)
    bits = [(codes >> b) & 1 for b in range(len(cells))]
    best = None
    for target in maps:
        code = np.zeros_like(codes)
        for b, nb in enumerate(target):
            code |= bits[b] << nb
        best = code if best is None else np.minimum(best, code)
    return best


@lru_cache(maxsize=None)
def digraph_codes(n: int, loops: bool) -> tuple:
    """Canonical codes of all digraphs on n vertices up to isomorphism.

    Built by adding a vertex to every class on n-1 vertices in every way.
    """
    if n == 0:
        return (0,)
    cells, _ = _bit_maps(n, loops)
    index = {c: b for b, c in enumerate(cells)}
    prev_cells, _ = _bit_maps(n - 1, loops)
    new_cells = [c for c in cells if n - 1 in c]
    candidates = []
    for code in digraph_codes(n - 1, loops):
        base = 0
        for b, c in enumerate(prev_cells):
            if code >> b & 1:
                base |= 1 << index[c]
        for mask in range(1 << len(new_cells)):
            extra = 0
            for j, c in enumerate(new_cells):
                if mask >> j & 1:
                    extra |= 1 << index[c]
            candidates.append(base | extra)
    canon = canonical_codes(np.array(candidates, dtype=np.int64), n, loops)
    return tuple(sorted(set(int(c) for c in canon)))


def code_to_digraph(code: int, n: int, loops: bool, symbol: str = "E") -> Structure:
    cells, _ = _bit_maps(n, loops)
    return digraph([c for b, c in enumerate(cells) if code >> b & 1], symbol, domain=range(n))


def digraphs_up_to_iso(n: int, loops: bool = True, symbol: str = "E") -> list:
    return [code_to_digraph(c, n, loops, symbol) for c in digraph_codes(n, loops)]


def all_digraphs_up_to(max_n: int, loops: bool = True, symbol: str = "E") -> list:
    return [s for n in range(1, max_n + 1) for s in digraphs_up_to_iso(n, loops, symbol)]


def labelled_digraphs(n: int, loops: bool = True, symbol: str = "E"):
    """Every labelled digraph on n vertices (2^(n^2) of them with loops)."""
    cells = [(i, j) for i in range(n) for j in range(n) if loops or i != j]
    for mask in range(1 << len(cells)):
        yield digraph([c for b, c in enumerate(cells) if mask >> b & 1], symbol, domain=range(n))


def graphs_up_to(max_n: int, symbol: str = "E", min_n: int = 1) -> list:
    """Undirected loopless graphs up to isomorphism (max_n <= 7), as symmetric structures."""
    if max_n > 7:
        raise ValueError("the graph atlas stops at 7 vertices")
    out = []
    for g in nx.graph_atlas_g():
        if min_n <= g.number_of_nodes() <= max_n:
            out.append(graph(g.edges(), symbol, domain=sorted(g.nodes())))
    return out


def is_acyclic(s: Structure, symbol: str = "E") -> bool:
    return nx.is_directed_acyclic_graph(nx.DiGraph(list(s.tuples(symbol))))


def random_digraph(rng: random.Random, n: int, p: float, loops: bool = False, symbol: str = "E") -> Structure:
    edges = [(i, j) for i in range(n) for j in range(n)
             if (loops or i != j) and rng.random() < p]
    return digraph(edges, symbol, domain=range(n))


def random_partial_23_tree(rng: random.Random, n: int, keep: float = 0.7,
                           symbol: str = "E", orient: bool = True) -> Structure:
    """Triangles glued along edges, then a random subset of the edges.

    With ``orient`` each kept edge gets a random direction.
    """
    if n < 1:
        raise ValueError("need at least one vertex")
    edges = set()
    if n >= 2:
        edges.add((0, 1))
    for v in range(2, n):
        a, b = rng.choice(sorted(edges))
        edges.update({(a, v), (b, v)})
    kept = [e for e in sorted(edges) if rng.random() < keep]
    if orient:
        kept = [(a, b) if rng.random() < 0.5 else (b, a) for a, b in kept]
        return digraph(kept, symbol, domain=range(n))
    return graph(kept, symbol, domain=range(n))


# ---------------------------------------------------------------------------
# templates


def clique_template(n: int, symbol: str = "E") -> TemplateHandle:
    from .structure import clique

    return TemplateHandle.finite(clique(n, symbol))


def implication_structure() -> Structure:
    sig = Signature.of(impl=2, one=1, zero=1)
    return Structure(sig, [0, 1], {"impl": [(0, 0), (0, 1), (1, 1)], "one": [(1,)], "zero": [(0,)]})


def lin3_structure() -> Structure:
    rows = [t for t in itertools.product((0, 1), repeat=3) if sum(t) % 2 == 0]
    return Structure(Signature.of(R=3), [0, 1], {"R": rows})


def path_union(lengths, symbol: str = "E") -> Structure:
    """Disjoint union of directed paths with the given numbers of edges."""
    facts = []
    domain = []
    for n in lengths:
        p = directed_path(n, symbol, prefix=f"p{n}_")
        domain += list(p.domain)
        facts += list(p.facts())
    return Structure.from_facts(Signature.of(**{symbol: 2}), facts, domain=domain)
