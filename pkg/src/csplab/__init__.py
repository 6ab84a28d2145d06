"""Constraint satisfaction with Datalog, local consistency and pebble games.

Templates are finite structures or one of two orbit-type oracles, the
rationals with their order and the universal triangle-free graph.
"""

from .structure import (BudgetExceeded, Signature, Structure, StructureError, clique,
                        compute_core, digraph, directed_cycle, directed_path,
                        enumerate_homomorphisms, find_homomorphism, format_structure, graph,
                        hom_exists, load_structure, parse_structure)
from .datalog import (DatalogProgram, TC_PROGRAM, derives_false, evaluate, parse_program,
                      program_width)
from .templates import (AssignmentClass, TemplateHandle, classes, decide_csp,
                        parse_template_selector)
from .consistency import (ConstraintStore, ac_solves, arc_consistency, arc_consistency_classes,
                          establish_lk_consistency, materialize_canonical_program,
                          power_structure, solves_on)
from .pebble import (SpoilerLine, StrategyFamily, duplicator_wins, replay_spoiler_line,
                     verify_strategy)
from .treewidth import (TreeDecomposition, canonical_query_lk, evaluate_formula,
                        find_decomposition, obstruction_from_trace, verify_decomposition)
from .algebra import (OperationTable, find_nu_polymorphism, global_consistency_probe,
                      power_structure_alg, verify_polymorphism)
from .mmsnp import (MmsnpSentence, decide_by_obstructions, model_check, obstruction_structures,
                    parse_mmsnp)

__version__ = "0.1.0"
