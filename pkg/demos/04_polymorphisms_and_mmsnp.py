# Near-unanimity operations, strict width, and a monadic SNP sentence.

import os

from csplab.algebra import (find_nu_polymorphism, global_consistency_probe,
                            verify_counterexample)
from csplab.generators import clique_template, lin3_structure
from csplab.mmsnp import connectivity_report, load_mmsnp, model_check, obstruction_structures
from csplab.structure import Signature, Structure, clique
from csplab.templates import TemplateHandle

k2 = clique_template(2)
maj = find_nu_polymorphism(k2, 3)
print("majority on K2:")
print(maj.to_csv())

lin3 = TemplateHandle.finite(lin3_structure())
print("3-LIN has a 3-ary NU:", find_nu_polymorphism(lin3, 3) is not None)
print("3-LIN has a 4-ary NU:", find_nu_polymorphism(lin3, 4) is not None)

# two equations sharing x,y force z = w, which (2,3)-consistency does not see
eqs = Structure(Signature.of(R=3), ["x", "y", "z", "w"],
                {"R": [("x", "y", "z"), ("x", "y", "w")]})
report = global_consistency_probe(eqs, lin3, 2, 3)
print("\ncounterexample:", report.counterexample,
      "| verified:", verify_counterexample(report, eqs, lin3))
print(report.label)

here = os.path.dirname(os.path.abspath(__file__))
phi = load_mmsnp(os.path.join(here, "data", "tri2part.mmsnp"))
print("\n" + str(phi))
for n in range(3, 7):
    print(f"K{n}: two triangle-free parts? {model_check(phi, clique(n))}")
print("obstructions connected:", connectivity_report(obstruction_structures(phi)))
