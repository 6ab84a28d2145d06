"""Brute-force reference implementations, kept independent of the package internals."""

import itertools

import networkx as nx


def brute_hom(a, b):
    """Some homomorphism a -> b by trying every map, or None."""
    dom = list(a.domain)
    facts = list(a.facts())
    for values in itertools.product(list(b.domain), repeat=len(dom)):
        f = dict(zip(dom, values))
        if all(b.holds(name, tuple(f[x] for x in tup)) for name, tup in facts):
            return f
    return None


def count_homs(a, b):
    dom = list(a.domain)
    facts = list(a.facts())
    n = 0
    for values in itertools.product(list(b.domain), repeat=len(dom)):
        f = dict(zip(dom, values))
        n += all(b.holds(name, tuple(f[x] for x in tup)) for name, tup in facts)
    return n


def acyclic(s, symbol="E"):
    edges = list(s.tuples(symbol))
    if any(x == y for x, y in edges):
        return False
    g = nx.DiGraph()
    g.add_nodes_from(s.domain)
    g.add_edges_from(edges)
    return nx.is_directed_acyclic_graph(g)


def henson_ok(s, symbol="E"):
    """No loop and no triangle in the underlying undirected graph."""
    edges = list(s.tuples(symbol))
    if any(x == y for x, y in edges):
        return False
    g = nx.Graph()
    g.add_nodes_from(s.domain)
    g.add_edges_from(edges)
    return sum(nx.triangles(g).values()) == 0


def weak_order_count(m):
    """Distinct order patterns of m-tuples of integers."""
    patterns = set()
    for tup in itertools.product(range(m), repeat=m):
        ranks = sorted(set(tup))
        patterns.add(tuple(ranks.index(v) for v in tup))
    return len(patterns)


def henson_type_count(m):
    """Equality patterns times triangle-free loopless graphs on the blocks."""
    total = 0
    seen = set()
    for labels in itertools.product(range(m), repeat=m):
        first = {}
        canon = tuple(first.setdefault(v, len(first)) for v in labels)
        if canon in seen:
            continue
        seen.add(canon)
        b = len(first)
        pairs = list(itertools.combinations(range(b), 2))
        for mask in range(1 << len(pairs)):
            edges = {pairs[i] for i in range(len(pairs)) if mask >> i & 1}
            if not any({(x, y), (y, z), (x, z)} <= edges
                       for x, y, z in itertools.combinations(range(b), 3)):
                total += 1
    return total


def two_partition_triangle_free(s, symbol="E"):
    """Direct search: split the vertices into two parts with no triangle inside either."""
    g = nx.Graph()
    g.add_nodes_from(s.domain)
    g.add_edges_from((x, y) for x, y in s.tuples(symbol) if x != y)
    loops = {x for x, y in s.tuples(symbol) if x == y}
    tris = [t for t in itertools.combinations(s.domain, 3)
            if all(g.has_edge(u, v) for u, v in itertools.combinations(t, 2))]
    # with loops a triangle clause can match x=y=z on a loop vertex
    nodes = list(s.domain)
    for mask in range(1 << len(nodes)):
        part = {x for i, x in enumerate(nodes) if mask >> i & 1}
        if loops:
            # a loop vertex forms a degenerate triangle with itself in either part
            return False
        if all(not (set(t) <= part) and not (set(t).isdisjoint(part)) for t in tris):
            return True
    return False
