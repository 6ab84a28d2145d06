"""Command-line front end.

Exit status: 0 when the answer is yes/accepted, 1 when it is no/rejected,
2 on usage, input or budget errors.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from . import algebra, consistency, datalog, mmsnp, pebble, treewidth
from .structure import BudgetExceeded, Signature, StructureError, load_structure
from .templates import (FINITE, CapExceeded, DEFAULT_CAP, TemplateHandle, decide_csp,
                        parse_template_selector)

SCHEMA_VERSION = 1
EXIT_TRUE, EXIT_FALSE, EXIT_ERROR = 0, 1, 2


def schema_id(command: str) -> str:
    return f"csplab/{command}/v{SCHEMA_VERSION}"


def _obj(props: dict, required=None) -> dict:
    return {"type": "object", "properties": props,
            "required": list(required if required is not None else props)}


_CLASS = {"anyOf": [{"type": "array"}, {"type": "object"}]}
_HEAD = {"schema": {"type": "string"}, "command": {"type": "string"}}

SCHEMAS = {
    "solve": _obj({**_HEAD, "satisfiable": {"type": "boolean"}, "witness": {}}),
    "consistency": _obj({**_HEAD, "accepted": {"type": "boolean"},
                         "entries": {"type": "array", "items": _obj(
                             {"vars": {"type": "array", "items": {"type": "string"}},
                              "classes": {"type": "array", "items": _CLASS}})},
                         "iterations": {"type": "integer", "minimum": 0}}),
    "pebble": {"type": "object", "required": ["schema", "command", "wins"],
               "properties": {**_HEAD, "wins": {"type": "boolean"},
                              "strategy_size": {"type": "integer"},
                              "line_length": {"type": "integer"},
                              "line": {"type": "object"}},
               "oneOf": [{"required": ["strategy_size"]}, {"required": ["line_length"]}]},
    "ac": {"type": "object", "required": ["schema", "command"],
           "properties": {**_HEAD, "accepted": {"type": "boolean"},
                          "domains": {"type": "object"},
                          "ac_solves": {"type": "boolean"},
                          "power_structure_size": {"type": "integer"}}},
    "treewidth": {"type": "object", "required": ["schema", "command", "decomposable"],
                  "properties": {**_HEAD, "decomposable": {"type": "boolean"},
                                 "decomposition": {"type": ["object", "null"]},
                                 "formula": {"type": "object"},
                                 "formula_text": {"type": "string"}}},
    "nu": _obj({**_HEAD, "found": {"type": "boolean"}, "arity": {"type": "integer"},
                "table": {"type": ["array", "null"],
                          "items": {"type": "array", "items": {"type": "string"}}}}),
    "mmsnp": _obj({**_HEAD, "satisfied": {"type": "boolean"},
                   "colouring": {"type": ["object", "null"]},
                   "obstructions_connected": {"type": "array", "items": {"type": "boolean"}}}),
    "datalog": _obj({**_HEAD, "derives_false": {"type": "boolean"},
                     "facts": {"type": "array"}, "steps": {"type": "integer"}}),
    "xcheck-record": _obj({"schema": {"type": "string"}, "index": {"type": "integer"},
                           "name": {"type": "string"}, "accepted": {"type": "boolean"},
                           "duplicator_wins": {"type": "boolean"},
                           "oracle_satisfiable": {"type": "boolean"},
                           "obstruction": {"type": ["object", "null"]},
                           "violations": {"type": "array", "items": {"type": "string"}}}),
    "xcheck-summary": _obj({"schema": {"type": "string"}, "command": {"type": "string"},
                            "instances": {"type": "integer"}, "violations": {"type": "integer"}}),
}


def jsonable(x):
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set, frozenset)):
        items = [jsonable(v) for v in x]
        return sorted(items, key=str) if isinstance(x, (set, frozenset)) else items
    if x is None or isinstance(x, (bool, int, float, str)):
        return x
    return str(x)


def default_budget() -> Optional[int]:
    raw = os.environ.get("CSPLAB_BUDGET")
    if not raw:
        return None
    try:
        value = int(raw)
    except ValueError:
        raise SystemExit(f"CSPLAB_BUDGET must be an integer, got {raw!r}")
    return value if value > 0 else None


@dataclass
class RunConfig:
    command: str
    template: Optional[str] = None
    instances: list = field(default_factory=list)
    l: int = 2
    k: int = 3
    cap_classes: int = DEFAULT_CAP
    budget: Optional[int] = None
    format: str = "text"
    seed: int = 0

    def __post_init__(self):
        if self.l >= self.k:
            raise ValueError(f"need l < k, got l={self.l}, k={self.k}")
        if self.cap_classes < 1 or (self.budget is not None and self.budget < 1):
            raise ValueError("caps and budgets must be positive")


def _emit(args, report: dict, text: str):
    if args.format == "json":
        print(json.dumps(report, sort_keys=True))
    else:
        print(text)


def _template(args, instance=None) -> TemplateHandle:
    return parse_template_selector(args.template, instance, cap=args.cap_classes)


def _instance(args):
    if not args.instance:
        raise ValueError("--instance is required")
    return load_structure(args.instance[0])


def cmd_solve(args) -> int:
    inst = _instance(args)
    t = _template(args, inst)
    res = decide_csp(t, inst)
    report = {"schema": schema_id("solve"), "command": "solve",
              "satisfiable": res.satisfiable, "witness": jsonable(res.witness)}
    _emit(args, report, f"{'satisfiable' if res.satisfiable else 'unsatisfiable'}: {res.witness}")
    return EXIT_TRUE if res.satisfiable else EXIT_FALSE


def cmd_consistency(args) -> int:
    inst = _instance(args)
    t = _template(args, inst)
    store = consistency.establish_lk_consistency(inst, t, args.l, args.k)
    report = {"schema": schema_id("consistency"), "command": "consistency", **store.to_json()}
    text = f"({args.l},{args.k})-consistency {'accepts' if store.accepted else 'fails'} " \
           f"after {store.iterations} frame updates"
    if args.check_solves:
        agrees = store.accepted == decide_csp(t, inst).satisfiable
        report["agrees_with_oracle"] = agrees
        text += f"; oracle {'agrees' if agrees else 'disagrees'}"
    _emit(args, report, text)
    return EXIT_TRUE if store.accepted else EXIT_FALSE


def cmd_pebble(args) -> int:
    inst = _instance(args)
    t = _template(args, inst)
    wins, strat, line = pebble.duplicator_wins(inst, t, args.l, args.k)
    report = {"schema": schema_id("pebble"), "command": "pebble", "wins": wins}
    if wins:
        report["strategy_size"] = len(strat)
        text = f"Duplicator wins the ({args.l},{args.k}) game; strategy has {len(strat)} members"
    else:
        report["line_length"] = len(line)
        text = f"Spoiler wins the ({args.l},{args.k}) game in {len(line)} rounds"
        if args.emit_line:
            report["line"] = line.to_json()
            text += "\n" + line.transcript()
    _emit(args, report, text)
    return EXIT_TRUE if wins else EXIT_FALSE


def cmd_ac(args) -> int:
    report = {"schema": schema_id("ac"), "command": "ac"}
    texts = []
    status = EXIT_TRUE
    if args.check_solves:
        inst = load_structure(args.instance[0]) if args.instance else None
        t = _template(args, inst)
        ps = consistency.power_structure(t)
        solves = consistency.ac_solves(t)
        report.update(ac_solves=solves, power_structure_size=len(ps.domain))
        texts.append("AC solves this template" if solves else "AC does not solve this template")
        status = EXIT_TRUE if solves else EXIT_FALSE
    if args.instance:
        inst = _instance(args)
        t = _template(args, inst)
        if t.kind == FINITE:
            res = consistency.arc_consistency(inst, t)
        else:
            res = consistency.arc_consistency_classes(inst, t)
        report.update(accepted=res.accepted, domains=jsonable(res.domains))
        texts.append(f"arc-consistency {'accepts' if res.accepted else 'fails'}")
        if not args.check_solves:
            status = EXIT_TRUE if res.accepted else EXIT_FALSE
    if not texts:
        raise ValueError("ac needs --instance or --check-solves")
    _emit(args, report, "\n".join(texts))
    return status


def cmd_treewidth(args) -> int:
    inst = _instance(args)
    d = treewidth.find_decomposition(inst, args.l, args.k, cap=args.cap)
    report = {"schema": schema_id("treewidth"), "command": "treewidth",
              "decomposable": d is not None, "decomposition": d.to_json() if d else None}
    if d is None:
        text = f"no ({args.l},{args.k}) tree decomposition"
    else:
        text = d.to_text()
        if args.emit_formula:
            f = treewidth.canonical_query_lk(inst, d)
            report["formula"] = treewidth.formula_to_json(f)
            report["formula_text"] = treewidth.formula_to_text(f)
            text += "\n" + report["formula_text"]
    _emit(args, report, text)
    return EXIT_TRUE if d is not None else EXIT_FALSE


def cmd_nu(args) -> int:
    t = parse_template_selector(args.template, cap=args.cap_classes)
    subset = None
    if args.subset is not None:
        lookup = {str(v): v for v in t.structure.domain}
        subset = [lookup[x] for x in args.subset.split(",") if x]
    f = algebra.find_nu_polymorphism(t, args.arity, subset, budget=args.budget)
    rows = None if f is None else [row.split(",") for row in f.to_csv().splitlines()]
    report = {"schema": schema_id("nu"), "command": "nu", "found": f is not None,
              "arity": args.arity, "table": rows}
    _emit(args, report, f.to_csv().rstrip() if f else f"no {args.arity}-ary near-unanimity polymorphism")
    return EXIT_TRUE if f is not None else EXIT_FALSE


def cmd_mmsnp(args) -> int:
    phi = mmsnp.load_mmsnp(args.sentence)
    inst = _instance(args)
    budget = args.budget or mmsnp.DEFAULT_BUDGET
    colouring = mmsnp.find_colouring(phi, inst, budget)
    report = {"schema": schema_id("mmsnp"), "command": "mmsnp",
              "satisfied": colouring is not None, "colouring": jsonable(colouring),
              "obstructions_connected": mmsnp.connectivity_report(mmsnp.obstruction_structures(phi))}
    _emit(args, report, "true" if colouring is not None else "false")
    return EXIT_TRUE if colouring is not None else EXIT_FALSE


def cmd_datalog(args) -> int:
    prog = datalog.load_program(args.program)
    inst = _instance(args)
    facts, trace = datalog.evaluate(prog, inst)
    derived = [[s, *map(str, tup)] for s, tup in facts.facts() if s in prog.idbs]
    fails = facts.holds(datalog.FALSE, ())
    report = {"schema": schema_id("datalog"), "command": "datalog",
              "derives_false": fails, "facts": derived, "steps": len(trace)}
    _emit(args, report, "\n".join(" ".join(f) for f in derived) or "(nothing derived)")
    return EXIT_FALSE if fails else EXIT_TRUE


# ---------------------------------------------------------------------------
# cross-validation


def _henson_program(symbol: str) -> datalog.DatalogProgram:
    sig = Signature(((symbol, 2),))
    rules = [datalog.Rule(datalog.Atom(datalog.FALSE), (datalog.Atom(symbol, ("x", "x")),))]
    pairs = [("x", "y"), ("y", "z"), ("x", "z")]
    for flips in range(8):
        body = tuple(datalog.Atom(symbol, (b, a) if flips >> i & 1 else (a, b))
                     for i, (a, b) in enumerate(pairs))
        rules.append(datalog.Rule(datalog.Atom(datalog.FALSE), body))
    return datalog.DatalogProgram(sig, Signature(()), tuple(rules))


def _qorder_program(symbol: str) -> datalog.DatalogProgram:
    text = datalog.TC_PROGRAM.replace("edge", "e_")
    p = datalog.parse_program(text)
    rules = tuple(datalog.Rule(r.head, tuple(datalog.Atom(symbol if a.symbol == "e_" else a.symbol, a.args)
                                             for a in r.body)) for r in p.rules)
    return datalog.DatalogProgram(Signature(((symbol, 2),)), p.idbs, rules)


def sound_program(t: TemplateHandle, l: int, k: int, budget: int = 10_000):
    """A Datalog program of width at most (l,k) that is sound for t, or None."""
    try:
        if t.kind == "qorder" and (l, k) >= (2, 3) and l >= 2:
            return _qorder_program(t.symbol)
        if t.kind == "henson" and k >= 3:
            return _henson_program(t.symbol)
        if t.kind == FINITE:
            return consistency.materialize_canonical_program(t, l, k, budget)
    except BudgetExceeded:
        return None
    return None


def xcheck_instance(payload) -> dict:
    index, name, inst, t, l, k, program = payload
    store = consistency.establish_lk_consistency(inst, t, l, k)
    wins = pebble.duplicator_wins(inst, t, l, k, certify=False)[0]
    sat = decide_csp(t, inst).satisfiable
    violations = []
    if store.accepted != wins:
        violations.append("consistency and pebble game disagree")
    if store.failed and sat:
        violations.append("consistency refutes a satisfiable instance")
    obstruction = None
    if program is not None:
        facts, trace = datalog.evaluate(program, inst)
        if facts.holds(datalog.FALSE, ()):
            if sat:
                violations.append("sound program derives false on a satisfiable instance")
            ob = treewidth.unfold_derivation(trace, program, inst)
            checks = treewidth.check_obstruction(ob, program, inst)
            obstruction = {"size": len(ob.structure.domain), **checks}
            if not all(checks.values()):
                violations.append("obstruction fails a check")
            if decide_csp(t, ob.structure).satisfiable:
                violations.append("obstruction is satisfiable")
    return {"schema": schema_id("xcheck-record"), "index": index, "name": name,
            "accepted": store.accepted, "duplicator_wins": wins,
            "oracle_satisfiable": sat, "obstruction": obstruction, "violations": violations}


@dataclass
class XCheckReport:
    records: list
    violations: list

    def summary(self) -> dict:
        return {"schema": schema_id("xcheck-summary"), "command": "xcheck",
                "instances": len(self.records), "violations": len(self.violations)}


def run_xcheck(instances, t: TemplateHandle, l: int, k: int, jobs: int = 1,
               program=None, use_program: bool = True):
    """Yield one record per (name, structure), in input order."""
    if use_program and program is None:
        program = sound_program(t, l, k)
    payloads = ((i, name, inst, t, l, k, program) for i, (name, inst) in enumerate(instances))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            yield from pool.map(xcheck_instance, payloads, chunksize=8)
    else:
        for p in payloads:
            yield xcheck_instance(p)


def cmd_xcheck(args) -> int:
    from . import generators

    instances = [(path, load_structure(path)) for path in args.instance or []]
    if args.generate:
        kind, _, rest = args.generate.partition(":")
        sym = args.symbol
        if kind == "digraphs":
            instances += [(f"digraph{i}", s) for i, s in
                          enumerate(generators.all_digraphs_up_to(int(rest), True, sym))]
        elif kind == "graphs":
            instances += [(f"graph{i}", s) for i, s in enumerate(generators.graphs_up_to(int(rest), sym))]
        elif kind == "random":
            count, n = (int(x) for x in rest.split(":"))
            rng = random.Random(args.seed)
            instances += [(f"random{i}", generators.random_digraph(rng, rng.randint(1, n), 0.3, True, sym))
                          for i in range(count)]
        else:
            raise ValueError(f"unknown generator {kind!r}")
    if not instances:
        raise ValueError("xcheck needs --instance files or --generate")
    t = _template(args, instances[0][1])
    report = XCheckReport([], [])
    for rec in run_xcheck(instances, t, args.l, args.k, args.jobs):
        report.records.append(rec)
        report.violations += [(rec["index"], v) for v in rec["violations"]]
        if args.format == "json":
            print(json.dumps(rec, sort_keys=True), flush=True)
        elif rec["violations"]:
            print(f"{rec['name']}: {'; '.join(rec['violations'])}")
    summary = report.summary()
    if args.format == "json":
        print(json.dumps(summary, sort_keys=True))
    else:
        print(f"{summary['instances']} instances, {summary['violations']} violations")
    return EXIT_TRUE if not report.violations else EXIT_FALSE


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--template", help="finite:<path>, qorder or henson")
    common.add_argument("--instance", action="append", help="structure file (repeatable for xcheck)")
    common.add_argument("--l", type=int, default=2)
    common.add_argument("--k", type=int, default=3)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--cap-classes", type=int, default=DEFAULT_CAP)
    common.add_argument("--budget", type=int, default=None)

    parser = argparse.ArgumentParser(prog="csplab", description="CSP, Datalog and pebble-game laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common]).set_defaults(func=cmd_solve)
    p = sub.add_parser("consistency", parents=[common])
    p.add_argument("--check-solves", action="store_true")
    p.set_defaults(func=cmd_consistency)
    p = sub.add_parser("pebble", parents=[common])
    p.add_argument("--emit-line", action="store_true")
    p.set_defaults(func=cmd_pebble)
    p = sub.add_parser("ac", parents=[common])
    p.add_argument("--check-solves", action="store_true")
    p.set_defaults(func=cmd_ac)
    p = sub.add_parser("treewidth", parents=[common])
    p.add_argument("--emit-formula", action="store_true")
    p.add_argument("--cap", type=int, default=treewidth.DEFAULT_CAP)
    p.set_defaults(func=cmd_treewidth)
    p = sub.add_parser("nu", parents=[common])
    p.add_argument("--arity", type=int, default=3)
    p.add_argument("--subset", help="comma-separated elements; default all")
    p.set_defaults(func=cmd_nu)
    p = sub.add_parser("mmsnp", parents=[common])
    p.add_argument("--sentence", required=True)
    p.set_defaults(func=cmd_mmsnp)
    p = sub.add_parser("datalog", parents=[common])
    p.add_argument("--program", required=True)
    p.set_defaults(func=cmd_datalog)
    p = sub.add_parser("xcheck", parents=[common])
    p.add_argument("--generate", help="digraphs:N, graphs:N or random:COUNT:N")
    p.add_argument("--symbol", default="E")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_xcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.budget is None:
        args.budget = default_budget()
    try:
        RunConfig(args.command, args.template, args.instance or [], args.l, args.k,
                  args.cap_classes, args.budget, args.format, args.seed)
        if args.command not in ("treewidth", "mmsnp", "datalog") and not args.template:
            raise ValueError("--template is required")
        return args.func(args)
    except (ValueError, TypeError, StructureError, datalog.ProgramError, mmsnp.MmsnpError,
            BudgetExceeded, CapExceeded, treewidth.CapExceeded, OSError, KeyError) as exc:
        print(f"csplab: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
