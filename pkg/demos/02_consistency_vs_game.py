# Local consistency and the existential pebble game give the same verdicts.
# We sweep small digraphs and count how often each template is fooled.

import time
from collections import Counter

from csplab.consistency import establish_lk_consistency
from csplab.generators import all_digraphs_up_to, clique_template
from csplab.pebble import duplicator_wins
from csplab.templates import TemplateHandle, decide_csp

templates = {
    "qorder": TemplateHandle.qorder("E"),
    "henson": TemplateHandle.henson("E"),
    "K2": clique_template(2),
    "K3": clique_template(3),
}
corpus = all_digraphs_up_to(3, loops=True)
print(len(corpus), "digraphs up to isomorphism on at most 3 vertices\n")

for name, t in templates.items():
    tally = Counter()
    start = time.time()
    for s in corpus:
        accepted = establish_lk_consistency(s, t, 2, 3).accepted
        wins = duplicator_wins(s, t, 2, 3, certify=False)[0]
        assert accepted == wins
        sat = decide_csp(t, s).satisfiable
        tally["accepted" if accepted else "refuted"] += 1
        tally["fooled"] += accepted and not sat
    print(f"{name:7s} {dict(tally)}  ({time.time() - start:.1f}s)")

# K3 is fooled by K4 at width (2,3): three-colouring needs more pebbles
from csplab.structure import clique  # noqa: E402

k4 = clique(4)
print("\nK4 vs K3 at (2,3): consistency accepts =",
      establish_lk_consistency(k4, templates["K3"], 2, 3).accepted,
      "| actually colourable =", decide_csp(templates["K3"], k4).satisfiable)
