"""Positive Datalog: programs, parsing, width, and bottom-up evaluation.

Evaluation is semi-naive by default.  Every derived fact is recorded once,
with the rule instance that first produced it, so a run can be replayed
and unfolded into an obstruction (see ``treewidth.obstruction_from_trace``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .structure import Signature, Structure

FALSE = "false"


class ProgramError(ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class Atom:
    symbol: str
    args: tuple = ()

    def __str__(self):
        if not self.args:
            return self.symbol
        return f"{self.symbol}({','.join(self.args)})"


@dataclass(frozen=True)
class Rule:
    head: Atom
    body: tuple

    def variables(self) -> list:
        seen = []
        for atom in (self.head, *self.body):
            for v in atom.args:
                if v not in seen:
                    seen.append(v)
        return seen

    def __str__(self):
        return f"{self.head} :- {', '.join(str(a) for a in self.body)}."


@dataclass(frozen=True)
class DatalogProgram:
    edbs: Signature
    idbs: Signature
    rules: tuple
    # optional name -> relation map for generated IDBs (canonical programs)
    meaning: Optional[dict] = field(default=None, compare=False, hash=False)

    def __post_init__(self):
        if FALSE not in self.idbs:
            object.__setattr__(self, "idbs", self.idbs.union(Signature(((FALSE, 0),))))
        overlap = set(self.edbs.names) & set(self.idbs.names)
        if overlap:
            raise ProgramError(f"symbols declared both EDB and IDB: {sorted(overlap)}")
        for i, rule in enumerate(self.rules):
            _check_rule(rule, self.edbs, self.idbs, i)

    @property
    def signature(self) -> Signature:
        return self.edbs.union(self.idbs)

    def __str__(self):
        return format_program(self)


def _check_rule(rule: Rule, edbs: Signature, idbs: Signature, where=None):
    head = rule.head
    if head.symbol in edbs:
        raise ProgramError(f"EDB {head.symbol!r} used in a rule head", where)
    if head.symbol not in idbs:
        raise ProgramError(f"undeclared symbol {head.symbol!r}", where)
    for atom in (head, *rule.body):
        if atom.symbol in edbs:
            arity = edbs.arity(atom.symbol)
        elif atom.symbol in idbs:
            arity = idbs.arity(atom.symbol)
        else:
            raise ProgramError(f"undeclared symbol {atom.symbol!r}", where)
        if len(atom.args) != arity:
            raise ProgramError(
                f"arity mismatch for {atom.symbol}: expected {arity}, got {len(atom.args)}", where)
    body_vars = {v for atom in rule.body for v in atom.args}
    missing = [v for v in head.args if v not in body_vars]
    if missing:
        raise ProgramError(f"head variables {missing} do not occur in the body", where)


# ---------------------------------------------------------------------------
# text format

_IDENT = r"[A-Za-z_][A-Za-z0-9_']*"
_ATOM_RE = re.compile(rf"\s*({_IDENT})\s*(?:\(([^()]*)\))?\s*")


def _parse_atom(text: str, lineno) -> Atom:
    m = _ATOM_RE.fullmatch(text)
    if not m:
        raise ProgramError(f"cannot parse atom {text.strip()!r}", lineno)
    name, args = m.group(1), m.group(2)
    if args is None or not args.strip():
        return Atom(name, ())
    parts = [a.strip() for a in args.split(",")]
    for a in parts:
        if not re.fullmatch(_IDENT, a):
            raise ProgramError(f"bad variable {a!r} in {name}", lineno)
    return Atom(name, tuple(parts))


def _split_atoms(body: str) -> list:
    parts, depth, cur = [], 0, []
    for ch in body:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if "".join(cur).strip():
        parts.append("".join(cur))
    return parts


def parse_program(text: str) -> DatalogProgram:
    """Parse ``edb``/``idb`` declarations and ``head :- body.`` rules.

    Rules may span lines; each ends with a period.  ``false`` is implicitly
    a 0-ary IDB.  ``%`` and ``#`` start comments.
    """
    edbs, idbs = [], []
    rules = []
    pending, start = [], None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = re.split(r"[%#]", raw, maxsplit=1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if not pending and tokens[0] in ("edb", "idb") and ":-" not in line:
            if len(tokens) != 3:
                raise ProgramError(f"expected '{tokens[0]} NAME ARITY'", lineno)
            try:
                arity = int(tokens[2])
            except ValueError:
                raise ProgramError(f"bad arity {tokens[2]!r}", lineno) from None
            (edbs if tokens[0] == "edb" else idbs).append((tokens[1], arity))
            continue
        if not pending:
            start = lineno
        pending.append(line)
        joined = " ".join(pending)
        while "." in joined:
            stmt, joined = joined.split(".", 1)
            rules.append((_parse_rule(stmt, start), start))
            start = lineno
        pending = [joined] if joined.strip() else []
    if pending:
        raise ProgramError("unterminated rule (missing '.')", start)
    try:
        edb_sig = Signature(tuple(edbs))
        idb_sig = Signature(tuple(idbs))
    except ValueError as exc:
        raise ProgramError(str(exc)) from None
    if FALSE not in idb_sig:
        idb_sig = idb_sig.union(Signature(((FALSE, 0),)))
    for rule, where in rules:
        _check_rule(rule, edb_sig, idb_sig, where)
    return DatalogProgram(edb_sig, idb_sig, tuple(r for r, _ in rules))


def _parse_rule(stmt: str, lineno) -> Rule:
    if ":-" not in stmt:
        raise ProgramError(f"expected ':-' in {stmt.strip()!r}", lineno)
    head_txt, body_txt = stmt.split(":-", 1)
    head = _parse_atom(head_txt, lineno)
    body = tuple(_parse_atom(a, lineno) for a in _split_atoms(body_txt))
    return Rule(head, body)


def format_program(p: DatalogProgram) -> str:
    lines = [f"edb {n} {a}" for n, a in p.edbs]
    lines += [f"idb {n} {a}" for n, a in p.idbs if n != FALSE]
    lines += [str(r) for r in p.rules]
    return "\n".join(lines) + "\n"


def load_program(path) -> DatalogProgram:
    with open(path, encoding="utf-8") as fh:
        return parse_program(fh.read())


def program_width(p: DatalogProgram) -> tuple:
    """(max distinct head variables, max distinct variables per rule)."""
    l = max((len(set(r.head.args)) for r in p.rules), default=0)
    k = max((len(r.variables()) for r in p.rules), default=0)
    return l, k


# ---------------------------------------------------------------------------
# evaluation


@dataclass(frozen=True)
class Step:
    fact: tuple          # (symbol, args)
    rule: int            # index into program.rules
    body: tuple          # facts matched by the body atoms, in body order
    assignment: tuple    # (variable, element) pairs in rule-variable order


@dataclass(frozen=True)
class DerivationTrace:
    steps: tuple

    def __len__(self):
        return len(self.steps)

    def derived(self) -> list:
        return [s.fact for s in self.steps]

    def step_for(self, fact) -> Optional[Step]:
        for s in self.steps:
            if s.fact == fact:
                return s
        return None


class _FactStore:
    """Facts per symbol with their derivation round and lazily built indexes."""

    def __init__(self):
        self.rounds = {}         # (symbol, args) -> round
        self.by_symbol = {}      # symbol -> list of args
        self.indexes = {}        # (symbol, positions) -> {key: [args]}

    def add(self, symbol, args, rnd):
        fact = (symbol, args)
        if fact in self.rounds:
            return False
        self.rounds[fact] = rnd
        self.by_symbol.setdefault(symbol, []).append(args)
        for (sym, positions), index in self.indexes.items():
            if sym == symbol:
                index.setdefault(tuple(args[i] for i in positions), []).append(args)
        return True

    def lookup(self, symbol, positions, key):
        if not positions:
            return self.by_symbol.get(symbol, ())
        idx = self.indexes.get((symbol, positions))
        if idx is None:
            idx = {}
            for args in self.by_symbol.get(symbol, ()):
                idx.setdefault(tuple(args[i] for i in positions), []).append(args)
            self.indexes[(symbol, positions)] = idx
        return idx.get(key, ())


def _match_atom(atom: Atom, args: tuple, binding: dict) -> Optional[dict]:
    new = None
    for var, val in zip(atom.args, args):
        cur = binding.get(var) if new is None else new.get(var)
        if cur is None:
            if new is None:
                new = dict(binding)
            new[var] = val
        elif cur != val:
            return None
    return binding if new is None else new


def _join(rule: Rule, store: _FactStore, allowed):
    """Yield (binding, body facts) for the rule body.

    ``allowed[i]`` is a predicate on the round of the fact matched at body
    position ``i``.
    """
    body = rule.body

    def go(i, binding, used):
        if i == len(body):
            yield binding, tuple(used)
            return
        atom = body[i]
        bound = tuple(j for j, v in enumerate(atom.args) if v in binding)
        key = tuple(binding[atom.args[j]] for j in bound)
        for args in store.lookup(atom.symbol, bound, key):
            if not allowed[i](store.rounds[(atom.symbol, args)]):
                continue
            nb = _match_atom(atom, args, binding)
            if nb is None:
                continue
            used.append((atom.symbol, args))
            yield from go(i + 1, nb, used)
            used.pop()

    yield from go(0, {}, [])


def evaluate(p: DatalogProgram, instance: Structure, method: str = "seminaive"):
    """Least fixpoint of ``p`` on ``instance``.

    Returns ``(facts, trace)``: ``facts`` is a structure over the EDB and IDB
    symbols on the instance's domain, ``trace`` lists one step per derived
    fact in derivation order.
    """
    if method not in ("seminaive", "naive"):
        raise ValueError(f"unknown evaluation method {method!r}")
    for name, arity in p.edbs:
        if name not in instance.signature or instance.signature.arity(name) != arity:
            raise ProgramError(f"instance lacks EDB {name}/{arity}")
    store = _FactStore()
    for name, _ in p.edbs:
        for tup in instance.tuples(name):
            store.add(name, tup, -1)
    idb_names = set(p.idbs.names)
    order = {e: i for i, e in enumerate(instance.domain)}
    steps = []
    rnd = 0
    while True:
        new_steps = []
        pending = set()
        for ri, rule in enumerate(p.rules):
            idb_pos = [i for i, a in enumerate(rule.body) if a.symbol in idb_names]
            last = rnd - 1
            if method == "naive":
                variants = [[lambda r: True] * len(rule.body)]
            elif not idb_pos:
                # EDB-only rules can only fire in the first round
                variants = [[lambda r: True] * len(rule.body)] if rnd == 0 else []
            else:
                # at least one IDB atom must match a fact from the previous round
                variants = []
                for j in idb_pos:
                    allowed = []
                    for i in range(len(rule.body)):
                        if i == j:
                            allowed.append(lambda r, t=last: r == t)
                        elif i in idb_pos and i < j:
                            allowed.append(lambda r, t=last: r < t)
                        else:
                            allowed.append(lambda r, t=last: r <= t)
                    variants.append(allowed)
            found = []
            for allowed in variants:
                for binding, used in _join(rule, store, allowed):
                    head = (rule.head.symbol, tuple(binding[v] for v in rule.head.args))
                    if head in store.rounds or head in pending:
                        continue
                    found.append((binding, used, head))
            variables = rule.variables()
            found.sort(key=lambda item: tuple(order[item[0][v]] for v in variables))
            for binding, used, head in found:
                if head in pending:
                    continue
                pending.add(head)
                new_steps.append(Step(head, ri, used,
                                      tuple((v, binding[v]) for v in variables)))
        if not new_steps:
            break
        for step in new_steps:
            store.add(step.fact[0], step.fact[1], rnd)
        steps.extend(new_steps)
        rnd += 1
    relations = {}
    for (symbol, args) in store.rounds:
        relations.setdefault(symbol, []).append(args)
    sig = p.edbs.union(p.idbs)
    return Structure(sig, instance.domain, relations), DerivationTrace(tuple(steps))


def derives_false(p: DatalogProgram, instance: Structure) -> bool:
    facts, _ = evaluate(p, instance)
    return facts.holds(FALSE, ())


def replay_trace(trace: DerivationTrace, p: DatalogProgram, instance: Structure) -> Optional[set]:
    """Re-apply every recorded step; return the derived facts or None if invalid."""
    known = {(name, tup) for name, tup in instance.facts() if name in p.edbs}
    derived = set()
    for step in trace.steps:
        if not 0 <= step.rule < len(p.rules):
            return None
        rule = p.rules[step.rule]
        env = dict(step.assignment)
        try:
            body = tuple((a.symbol, tuple(env[v] for v in a.args)) for a in rule.body)
            head = (rule.head.symbol, tuple(env[v] for v in rule.head.args))
        except KeyError:
            return None
        if body != tuple(step.body) or head != step.fact:
            return None
        if any(f not in known for f in body):
            return None
        known.add(head)
        derived.add(head)
    return derived


TC_PROGRAM = """\
edb edge 2
idb tc 2
tc(x,y) :- edge(x,y).
tc(x,y) :- tc(x,u), tc(u,y).
false :- tc(x,x).
"""
