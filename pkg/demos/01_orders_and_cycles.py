# The rationals with < as a template, and why no finite piece of it will do.
#
# Run with:  python3 demos/01_orders_and_cycles.py

from csplab.consistency import establish_lk_consistency
from csplab.datalog import TC_PROGRAM, evaluate, parse_program
from csplab.generators import path_union
from csplab.pebble import duplicator_wins, replay_spoiler_line
from csplab.structure import digraph, directed_cycle
from csplab.templates import TemplateHandle, decide_csp

q = TemplateHandle.qorder("E")
c3 = directed_cycle(3)

# an instance maps into (Q,<) exactly when it has no directed cycle
print("C3 -> (Q,<)?", decide_csp(q, c3).satisfiable)
print("path a->b->c -> (Q,<)?", decide_csp(q, digraph([("a", "b"), ("b", "c")])).satisfiable)

# two pebbles are not enough for Spoiler to notice the cycle
wins, strategy, _ = duplicator_wins(c3, q, 1, 2)
print("\n(1,2) game on C3 vs (Q,<): Duplicator wins =", wins, "| family size", len(strategy))

# against a disjoint union of finite paths Duplicator runs out of path
paths = TemplateHandle.finite(path_union(range(1, 6)))
wins, _, line = duplicator_wins(c3, paths, 1, 2)
print("(1,2) game on C3 vs paths 1..5: Duplicator wins =", wins)
print("Spoiler needs", len(line), "rounds,", len(line.moves), "positions; replay ok:",
      replay_spoiler_line(line, c3, paths, 1, 2))
print(line.transcript().splitlines()[0])

# one more pebble and the consistency algorithm catches the cycle
store = establish_lk_consistency(c3, q, 2, 3)
print("\n(2,3)-consistency on C3:", "accepted" if store.accepted else "refuted",
      "after", store.iterations, "updates")

# the same refutation as a Datalog program
tc = parse_program(TC_PROGRAM)
facts, trace = evaluate(tc, directed_cycle(3, "edge"))
print("TC derives false:", facts.holds("false", ()), "in", len(trace), "steps")
