"""Monotone monadic SNP without inequality.

A sentence file looks like::

    input E 2
    monadic P
    deny E(x,y), E(y,z), E(x,z), P(x), P(y), P(z)
    deny E(x,y), E(y,z), E(x,z), !P(x), !P(y), !P(z)

Each ``deny`` line forbids its conjunction; ``!`` negates a monadic atom.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .structure import (BudgetExceeded, Signature, Structure, disjoint_union, hom_exists,
                        is_connected)

DEFAULT_BUDGET = 1 << 24

SYNTAX = "syntax"
NON_MONADIC = "non-monadic existential"
NEGATED_INPUT = "negated input atom"
INEQUALITY = "inequality atom"


class MmsnpError(ValueError):
    def __init__(self, message, rule=SYNTAX, line=None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{rule}: {message}")
        self.rule = rule
        self.line = line


@dataclass(frozen=True)
class Literal:
    symbol: str
    args: tuple
    positive: bool = True

    def __str__(self):
        return ("" if self.positive else "!") + f"{self.symbol}({','.join(self.args)})"


@dataclass(frozen=True)
class Clause:
    literals: tuple

    def variables(self) -> list:
        return list(dict.fromkeys(v for lit in self.literals for v in lit.args))

    def __str__(self):
        return "deny " + ", ".join(str(l) for l in self.literals)


@dataclass(frozen=True)
class MmsnpSentence:
    input_signature: Signature
    monadic: tuple
    clauses: tuple

    def __str__(self):
        lines = [f"input {name} {arity}" for name, arity in self.input_signature]
        lines += [f"monadic {p}" for p in self.monadic]
        lines += [str(c) for c in self.clauses]
        return "\n".join(lines) + "\n"


_LIT = re.compile(r"^(!?)\s*([A-Za-z_][\w']*)\s*\(\s*([^()]*)\)$")
_VAR = re.compile(r"^[A-Za-z_]\w*$")


def _split(body: str) -> list:
    parts, depth, cur = [], 0, []
    for ch in body:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur).strip())
    return parts


def parse_mmsnp(text: str) -> MmsnpSentence:
    inputs = []
    monadic = []
    raw = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        if head == "input":
            parts = rest.split()
            if len(parts) != 2 or not parts[1].isdigit():
                raise MmsnpError("expected 'input NAME ARITY'", SYNTAX, lineno)
            inputs.append((parts[0], int(parts[1])))
        elif head == "monadic":
            parts = rest.split()
            if len(parts) == 2 and parts[1].isdigit():
                if int(parts[1]) != 1:
                    raise MmsnpError(f"{parts[0]} has arity {parts[1]}", NON_MONADIC, lineno)
                parts = parts[:1]
            if len(parts) != 1:
                raise MmsnpError("expected 'monadic NAME'", SYNTAX, lineno)
            monadic.append(parts[0])
        elif head == "deny":
            raw.append((lineno, rest))
        else:
            raise MmsnpError(f"unknown directive {head!r}", SYNTAX, lineno)
    try:
        sig = Signature(tuple(inputs))
    except ValueError as exc:
        raise MmsnpError(str(exc), SYNTAX) from None
    if set(monadic) & set(sig.names):
        raise MmsnpError("a symbol is declared both input and monadic", SYNTAX)
    if len(set(monadic)) != len(monadic):
        raise MmsnpError("monadic predicate declared twice", SYNTAX)
    clauses = []
    for lineno, body in raw:
        if not body:
            raise MmsnpError("empty clause", SYNTAX, lineno)
        lits = []
        for part in _split(body):
            if re.search(r"!=|(?<![!<>])=", part):
                raise MmsnpError(f"'{part}' compares variables", INEQUALITY, lineno)
            m = _LIT.match(part)
            if not m:
                raise MmsnpError(f"cannot read literal {part!r}", SYNTAX, lineno)
            neg, name, args = m.groups()
            args = tuple(a.strip() for a in args.split(",")) if args.strip() else ()
            if any(not _VAR.match(a) for a in args):
                raise MmsnpError(f"bad variable list in {part!r}", SYNTAX, lineno)
            if name in sig:
                if neg:
                    raise MmsnpError(f"input atom {name} appears negated", NEGATED_INPUT, lineno)
                if len(args) != sig.arity(name):
                    raise MmsnpError(f"{name} expects {sig.arity(name)} arguments", SYNTAX, lineno)
            elif name in monadic:
                if len(args) != 1:
                    raise MmsnpError(f"{name} used with {len(args)} arguments", NON_MONADIC, lineno)
            else:
                raise MmsnpError(f"undeclared predicate {name}", SYNTAX, lineno)
            lits.append(Literal(name, args, not neg))
        clauses.append(Clause(tuple(lits)))
    return MmsnpSentence(sig, tuple(monadic), tuple(clauses))


def load_mmsnp(path) -> MmsnpSentence:
    with open(path, encoding="utf-8") as fh:
        return parse_mmsnp(fh.read())


# ---------------------------------------------------------------------------
# model checking


def _matches(clause: Clause, s: Structure):
    """Assignments of the clause variables that satisfy its input atoms."""
    variables = clause.variables()
    inputs = [l for l in clause.literals if l.symbol in s.signature]
    dom = s.domain
    env = {}

    def go(i):
        if i == len(variables):
            yield dict(env)
            return
        v = variables[i]
        for x in dom:
            env[v] = x
            ok = True
            for lit in inputs:
                if v in lit.args and all(a in env for a in lit.args):
                    if not s.holds(lit.symbol, tuple(env[a] for a in lit.args)):
                        ok = False
                        break
            if ok:
                yield from go(i + 1)
        env.pop(v, None)

    yield from go(0)


def _nogoods(phi: MmsnpSentence, s: Structure):
    """Each nogood: frozenset of (element, predicate, truth) that a colouring must avoid."""
    out = set()
    for clause in phi.clauses:
        monadic = [l for l in clause.literals if l.symbol in phi.monadic]
        for env in _matches(clause, s):
            need = {}
            ok = True
            for lit in monadic:
                key = (env[lit.args[0]], lit.symbol)
                if need.setdefault(key, lit.positive) != lit.positive:
                    ok = False  # asks for P(a) and not P(a): never matched
                    break
            if ok:
                out.add(frozenset((a, p, val) for (a, p), val in need.items()))
    return out


def _check_signature(phi: MmsnpSentence, s: Structure):
    for name, arity in phi.input_signature:
        if name not in s.signature or s.signature.arity(name) != arity:
            raise ValueError(f"structure lacks input relation {name}/{arity}")


def find_colouring(phi: MmsnpSentence, s: Structure, budget: int = DEFAULT_BUDGET) -> Optional[dict]:
    """A monadic expansion avoiding every clause, or None.

    Elements are coloured in domain order with bit-vectors in ascending
    order; a nogood is checked as soon as its last element is coloured.
    """
    _check_signature(phi, s)
    p = len(phi.monadic)
    n = len(s.domain)
    if (1 << (n * p)) > budget and n * p > 0:
        # the search is pruned, but the worst case is still the full space
        raise BudgetExceeded(f"2^{n * p} expansions exceed the budget {budget}")
    nogoods = _nogoods(phi, s)
    if frozenset() in nogoods:
        return None
    pos = {x: i for i, x in enumerate(s.domain)}
    due = [[] for _ in range(n)]
    for ng in nogoods:
        due[max(pos[a] for a, _, _ in ng)].append(ng)
    colour = {}
    bit = {name: j for j, name in enumerate(phi.monadic)}

    def violated(ng):
        return all(((colour[a] >> bit[pname]) & 1) == val for a, pname, val in ng)

    def go(i):
        if i == n:
            return True
        x = s.domain[i]
        for c in range(1 << p):
            colour[x] = c
            if not any(violated(ng) for ng in due[i]) and go(i + 1):
                return True
        del colour[x]
        return False

    if not go(0):
        return None
    return {x: {name for name in phi.monadic if colour[x] >> bit[name] & 1} for x in s.domain}


def model_check(phi: MmsnpSentence, s: Structure, budget: int = DEFAULT_BUDGET) -> bool:
    return find_colouring(phi, s, budget) is not None


# ---------------------------------------------------------------------------
# obstructions


def primed(name: str) -> str:
    return name + "'"


@dataclass(frozen=True)
class ObstructionSet:
    signature: Signature
    structures: tuple
    clauses: tuple = field(default=(), compare=False)

    def __len__(self):
        return len(self.structures)

    def __iter__(self):
        return iter(self.structures)


def expanded_signature(phi: MmsnpSentence) -> Signature:
    extra = [(p, 1) for p in phi.monadic] + [(primed(p), 1) for p in phi.monadic]
    return phi.input_signature.union(Signature(tuple(extra)))


def clause_database(phi: MmsnpSentence, clause: Clause) -> Structure:
    sig = expanded_signature(phi)
    facts = [(l.symbol if l.positive else primed(l.symbol), l.args) for l in clause.literals]
    return Structure.from_facts(sig, facts, domain=clause.variables())


def obstruction_structures(phi: MmsnpSentence) -> ObstructionSet:
    return ObstructionSet(expanded_signature(phi),
                          tuple(clause_database(phi, c) for c in phi.clauses), phi.clauses)


def connectivity_report(obs) -> list:
    return [is_connected(s) for s in obs]


def decide_by_obstructions(n: Iterable[Structure], instance: Structure) -> bool:
    """True iff no obstruction maps homomorphically into ``instance``."""
    n = list(n)
    for o in n:
        if dict(o.signature) != dict(instance.signature):
            raise ValueError("obstruction and instance signatures differ")
    return not any(hom_exists(o, instance) for o in n)


def expansion(phi: MmsnpSentence, s: Structure, colouring: dict) -> Structure:
    """The τ'-structure for a colouring: P where chosen, P' elsewhere."""
    rels = {name: s.tuples(name) for name in phi.input_signature.names}
    for p in phi.monadic:
        rels[p] = [(x,) for x in s.domain if p in colouring[x]]
        rels[primed(p)] = [(x,) for x in s.domain if p not in colouring[x]]
    return Structure(expanded_signature(phi), s.domain, rels)


def model_check_by_obstructions(phi: MmsnpSentence, s: Structure, budget: int = DEFAULT_BUDGET) -> bool:
    """Independent check: some expansion admits no obstruction (plain enumeration)."""
    _check_signature(phi, s)
    obs = obstruction_structures(phi)
    if len(s.domain) * len(phi.monadic) > budget.bit_length():
        raise BudgetExceeded("too many expansions")
    base = s.reduct(phi.input_signature)
    for choice in itertools.product(range(1 << len(phi.monadic)), repeat=len(s.domain)):
        colouring = {x: {p for j, p in enumerate(phi.monadic) if c >> j & 1}
                     for x, c in zip(s.domain, choice)}
        if decide_by_obstructions(obs, expansion(phi, base, colouring)):
            return True
    return False


@dataclass
class ClosureReport:
    checked: int
    violations: list  # (index, left, right)

    @property
    def closed(self) -> bool:
        return not self.violations


def disjoint_union_closure_probe(phi: MmsnpSentence, samples, budget: int = DEFAULT_BUDGET) -> ClosureReport:
    """Flag pairs satisfying the sentence separately whose disjoint union does not."""
    violations = []
    checked = 0
    for i, (a, b) in enumerate(samples):
        checked += 1
        if model_check(phi, a, budget) and model_check(phi, b, budget):
            if not model_check(phi, disjoint_union(a, b), budget):
                violations.append((i, a, b))
    return ClosureReport(checked, violations)
