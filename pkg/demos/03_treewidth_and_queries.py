# Bounded treewidth structures have canonical queries with few variables.

import random

from csplab.datalog import TC_PROGRAM, evaluate, parse_program
from csplab.generators import random_partial_23_tree
from csplab.structure import digraph, directed_cycle, hom_exists
from csplab.treewidth import (canonical_query_lk, check_obstruction, evaluate_formula,
                              find_decomposition, formula_to_text, in_lk, unfold_derivation)

p = digraph([("a", "b"), ("b", "c")])
d = find_decomposition(p, 1, 2)
print(d.to_text())
f = canonical_query_lk(p, d)
print(formula_to_text(f))
print("in L^{1,2}:", in_lk(f, 1, 2))

rng = random.Random(7)
s = random_partial_23_tree(rng, 7)
d = find_decomposition(s, 2, 3)
print("\nrandom partial (2,3)-tree with", len(s.domain), "vertices and",
      len(s.tuples("E")), "edges;", len(d.bags), "bags")
f = canonical_query_lk(s, d)
for target in (directed_cycle(3), digraph([(0, 1)]), digraph([(0, 0)])):
    print("  query true:", evaluate_formula(f, target), " hom exists:", hom_exists(s, target))

# obstructions: unfold the TC derivation on a 4-cycle
tc = parse_program(TC_PROGRAM)
c4 = directed_cycle(4, "edge")
_, trace = evaluate(tc, c4)
ob = unfold_derivation(trace, tc, c4)
print("\nobstruction with", len(ob.structure.domain), "elements and",
      len(ob.decomposition.bags), "bags:", check_obstruction(ob, tc, c4))
