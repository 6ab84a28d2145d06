"""Existential (l,k)-pebble game between a finite instance and a template.

Positions are pairs (variable set, class).  A class stands for every partial
map with that orbit type, so the game is finite even for the infinite
oracle templates.  Spoiler's winning positions are ranked by how many
rounds Spoiler needs; rank 0 means the placed pebbles already violate a fact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from .consistency import check_parameters
from .structure import Structure
from .templates import (AssignmentClass, TemplateHandle, class_to_json, classes,
                        local_constraints, restrict_class, satisfies)


def _subsets(frame, l):
    return [s for size in range(min(l, len(frame)) + 1)
            for s in itertools.combinations(frame, size)]


def _sorted_vars(instance, variables):
    return tuple(sorted(set(variables), key=instance.index))


@dataclass(frozen=True)
class StrategyFamily:
    members: frozenset  # of (variables tuple, AssignmentClass)
    l: int
    k: int

    def __len__(self):
        return len(self.members)

    def without(self, member) -> "StrategyFamily":
        return StrategyFamily(self.members - {member}, self.l, self.k)

    def with_member(self, member) -> "StrategyFamily":
        return StrategyFamily(self.members | {member}, self.l, self.k)

    def to_json(self) -> dict:
        return {"l": self.l, "k": self.k, "size": len(self.members),
                "members": [{"vars": [str(v) for v in d], "class": class_to_json(c)}
                            for d, c in sorted(self.members, key=repr)]}


@dataclass(frozen=True)
class SpoilerMove:
    """Spoiler stands on ``position`` and places pebbles to cover ``frame``.

    ``responses`` lists every Duplicator answer on the frame; each outcome is
    either ``None`` (the answer violates a fact) or ``(kept, index)``: Spoiler
    keeps the pebbles on ``kept`` and continues with move ``index``.
    """
    position: tuple
    frame: tuple
    responses: tuple


@dataclass(frozen=True)
class SpoilerLine:
    """Spoiler's winning plan as a move graph rooted at move 0.

    ``len(line)`` is the number of rounds Spoiler needs in the worst case;
    ``len(line.moves)`` is the number of distinct positions in the plan.
    """
    moves: tuple

    def __len__(self):
        return self.rounds

    @property
    def rounds(self) -> int:
        depth = [0] * len(self.moves)
        for i in range(len(self.moves) - 1, -1, -1):
            nxt = [depth[o[1]] for _, o in self.moves[i].responses
                   if o is not None and i < o[1] < len(self.moves)]
            depth[i] = 1 + max(nxt, default=0)
        return depth[0] if depth else 0

    def to_json(self) -> dict:
        out = []
        for i, mv in enumerate(self.moves):
            d, c = mv.position
            out.append({
                "move": i,
                "pebbles": [str(v) for v in d],
                "class": class_to_json(c),
                "place": [str(v) for v in mv.frame if v not in d],
                "responses": [{"class": class_to_json(e),
                               "outcome": "violation" if o is None else
                               {"keep": [str(v) for v in o[0]], "next": o[1]}}
                              for e, o in mv.responses],
            })
        return {"length": self.rounds, "positions": len(self.moves), "moves": out}

    def transcript(self) -> str:
        lines = []
        for i, mv in enumerate(self.moves):
            d, c = mv.position
            placed = [v for v in mv.frame if v not in d]
            lines.append(f"move {i}: pebbles {list(d)} as {c!r}; place {placed}")
            for e, o in mv.responses:
                if o is None:
                    lines.append(f"  answer {e!r}: violates a fact")
                else:
                    lines.append(f"  answer {e!r}: keep {list(o[0])}, go to move {o[1]}")
        return "\n".join(lines)


@dataclass
class _Game:
    instance: Structure
    t: TemplateHandle
    l: int
    k: int
    frames: list = field(default_factory=list)
    rank: dict = field(default_factory=dict)
    killer: dict = field(default_factory=dict)


def _frame_table(instance, t, frame, l):
    """Per frame: small subsets and, per class, (ok, restrictions)."""
    subs = _subsets(frame, l)
    positions = [tuple(frame.index(v) for v in s) for s in subs]
    cons = local_constraints(instance, frame)
    rows = []
    for e in classes(t, len(frame)):
        rows.append((e, satisfies(t, e, cons), tuple(restrict_class(e, p) for p in positions)))
    return subs, rows


def _solve(instance, t, l, k) -> _Game:
    variables = tuple(instance.domain)
    m = min(k, len(variables))
    frames = list(itertools.combinations(variables, m))
    tables = {w: _frame_table(instance, t, w, l) for w in frames}
    small = _subsets(variables, l)
    rank = {}
    for d in small:
        cons = local_constraints(instance, d)
        for c in classes(t, len(d)):
            if not satisfies(t, c, cons):
                rank[(d, c)] = 0
    killer = {}
    frames_of = {d: [w for w in frames if set(d) <= set(w)] for d in small}
    r = 0
    while True:
        r += 1
        fresh = {}
        for d in small:
            for c in classes(t, len(d)):
                if (d, c) in rank:
                    continue
                for w in frames_of[d]:
                    subs, rows = tables[w]
                    i = subs.index(d)
                    if all(not ok or any((s, rs[j]) in rank for j, s in enumerate(subs))
                           for e, ok, rs in rows if rs[i] == c):
                        fresh[(d, c)] = r
                        killer[(d, c)] = w
                        break
        if not fresh:
            break
        rank.update(fresh)
    return _Game(instance, t, l, k, frames, rank, killer)


def _strategy(game: _Game) -> StrategyFamily:
    instance, t, l, k = game.instance, game.t, game.l, game.k
    variables = tuple(instance.domain)
    members = set()
    for size in range(min(k, len(variables)) + 1):
        for d in itertools.combinations(variables, size):
            cons = local_constraints(instance, d)
            subs = _subsets(d, l)
            positions = [tuple(d.index(v) for v in s) for s in subs]
            for c in classes(t, size):
                if not satisfies(t, c, cons):
                    continue
                if any((s, restrict_class(c, p)) in game.rank for s, p in zip(subs, positions)):
                    continue
                members.add((d, c))
    return StrategyFamily(frozenset(members), l, k)


def _line(game: _Game) -> SpoilerLine:
    rank, killer = game.rank, game.killer
    start = ((), classes(game.t, 0)[0])
    order = [start]
    seen = {start}
    plans = {}
    i = 0
    while i < len(order):
        pos = order[i]
        i += 1
        d, c = pos
        w = killer[pos]
        subs, rows = _frame_table(game.instance, game.t, w, game.l)
        di = subs.index(d)
        plan = []
        for e, ok, rs in rows:
            if rs[di] != c:
                continue
            if not ok:
                plan.append((e, None))
                continue
            best = min((rank[(s, rs[j])], j) for j, s in enumerate(subs) if (s, rs[j]) in rank)
            nxt = (subs[best[1]], rs[best[1]])
            if rank[nxt] == 0:
                # the kept pebbles already violate a fact; answer is refuted on the spot
                plan.append((e, None))
                continue
            plan.append((e, nxt))
            if nxt not in seen:
                seen.add(nxt)
                order.append(nxt)
        plans[pos] = (w, plan)
    order.sort(key=lambda p: -rank[p])
    index = {p: j for j, p in enumerate(order)}
    moves = []
    for p in order:
        w, plan = plans[p]
        responses = tuple((e, None if nxt is None else (nxt[0], index[nxt])) for e, nxt in plan)
        moves.append(SpoilerMove(p, w, responses))
    return SpoilerLine(tuple(moves))


def duplicator_wins(instance: Structure, t: TemplateHandle, l: int, k: int,
                    certify: bool = True) -> tuple:
    """Decide the existential (l,k)-pebble game.

    Returns ``(wins, strategy, line)``; with ``certify`` exactly one of the
    last two is set, otherwise both are ``None``.
    """
    check_parameters(t, l, k)
    game = _solve(instance, t, l, k)
    start = ((), classes(t, 0)[0])
    wins = start not in game.rank
    if not certify:
        return wins, None, None
    if wins:
        return True, _strategy(game), None
    return False, None, _line(game)


def verify_strategy(f: StrategyFamily, instance: Structure, t: TemplateHandle) -> bool:
    """Re-check the winning-strategy conditions by plain enumeration."""
    members = set()
    for d, c in f.members:
        d = tuple(d)
        if len(set(d)) != len(d) or any(v not in instance for v in d) or c.arity != len(d):
            return False
        if len(d) > f.k:
            return False
        members.add((_sorted_vars(instance, d), c if d == _sorted_vars(instance, d) else
                     restrict_class(c, tuple(d.index(v) for v in _sorted_vars(instance, d)))))
    empty = ((), classes(t, 0)[0])
    if empty not in members:
        return False
    for d, c in members:
        if not satisfies(t, c, local_constraints(instance, d)):
            return False
        for size in range(len(d)):
            for pos in itertools.combinations(range(len(d)), size):
                if (tuple(d[i] for i in pos), restrict_class(c, pos)) not in members:
                    return False
    variables = tuple(instance.domain)
    by_domain = {}
    for d, c in members:
        by_domain.setdefault(d, []).append(c)
    for d, c in members:
        if len(d) > f.l:
            continue
        rest = [v for v in variables if v not in d]
        for extra in range(1, f.k - len(d) + 1):
            for added in itertools.combinations(rest, extra):
                w = _sorted_vars(instance, d + added)
                pos = tuple(w.index(v) for v in d)
                if not any(restrict_class(e, pos) == c for e in by_domain.get(w, ())):
                    return False
    return True


def replay_spoiler_line(line: SpoilerLine, instance: Structure, t: TemplateHandle,
                        l: int, k: int) -> bool:
    """Check that every Duplicator answer along the line is refuted."""
    try:
        moves = list(line.moves)
        if not moves or moves[0].position != ((), classes(t, 0)[0]):
            return False
        for i, mv in enumerate(moves):
            d, c = mv.position
            w = tuple(mv.frame)
            if len(set(w)) != len(w) or len(w) > k or not set(d) <= set(w):
                return False
            if any(v not in instance for v in w) or len(d) > l:
                return False
            if c.arity != len(d):
                return False
            pos = tuple(w.index(v) for v in d)
            expected = {e for e in classes(t, len(w)) if restrict_class(e, pos) == c}
            given = dict(mv.responses)
            if set(given) != expected:
                return False
            cons = local_constraints(instance, w)
            for e, outcome in given.items():
                if outcome is None:
                    if satisfies(t, e, cons):
                        return False
                    continue
                kept, j = outcome
                kept = tuple(kept)
                if not (i < j < len(moves)) or not set(kept) <= set(w) or len(kept) > l:
                    return False
                target = moves[j].position
                sub = tuple(w.index(v) for v in kept)
                if target != (kept, restrict_class(e, sub)):
                    return False
        return True
    except (TypeError, ValueError, KeyError, IndexError, AttributeError):
        return False
