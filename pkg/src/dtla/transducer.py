"""Deterministic top-down tree transducers with regular look-ahead.

A rule ``q(a(x1:p1,...,xk:pk)) -> zeta`` is stored under the key
``(q, a, (p1, ..., pk))``.  Right-hand sides are trees over the output
alphabet whose leaves may be ``Call(q', i)`` labels; axioms use ``Call(q, 0)``.

Evaluation follows the recursive semantics: ``q(a(s1..sk))`` is the rhs of the
rule selected by the look-ahead states of ``s1..sk`` with every ``q'(xi)``
replaced by the translation of ``si`` in state ``q'``.  Input trees may contain
look-ahead state names as leaves; in state ``q`` such a leaf ``p`` is
translated into the output leaf ``<q,p>`` if ``q`` can translate some tree of
``p`` at all, and is undefined otherwise.  ``None`` stands for undefined.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Iterator

from .errors import SemanticError
from .trees import BOTTOM_LABEL, Call, Pair, RankedAlphabet, Tree, height

RuleKey = tuple[str, str, tuple[str, ...]]


@dataclass(frozen=True, eq=False)
class LookaheadAutomaton:
    states: tuple[str, ...]
    delta: dict[tuple[str, tuple[str, ...]], str]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, LookaheadAutomaton)
            and self.states == other.states
            and self.delta == other.delta
        )

    def index(self, p: str) -> int:
        return self.states.index(p)


@dataclass(eq=False)
class Dtla:
    input: RankedAlphabet
    output: RankedAlphabet
    la: LookaheadAutomaton
    states: tuple[str, ...]
    rules: dict[RuleKey, Tree]
    axioms: dict[str, Tree]
    la_map: dict[str, str] | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Dtla)
            and self.input == other.input
            and list(self.input) == list(other.input)
            and self.output == other.output
            and list(self.output) == list(other.output)
            and self.la == other.la
            and self.states == other.states
            and self.rules == other.rules
            and self.axioms == other.axioms
            and (self.la_map or None) == (other.la_map or None)
        )

    def copy(self, **changes) -> "Dtla":
        changes.setdefault("_cache", {})
        return replace(self, **changes)

    # -- convenience accessors --------------------------------------------

    @property
    def P(self) -> tuple[str, ...]:
        return self.la.states

    def delta(self, a: str, ps: Iterable[str]) -> str:
        return self.la.delta[(a, tuple(ps))]

    def keys_for(self, a: str) -> Iterator[tuple[str, ...]]:
        return itertools.product(self.P, repeat=self.input[a])

    def input_keys(self) -> Iterator[tuple[str, tuple[str, ...]]]:
        for a in self.input:
            for ps in self.keys_for(a):
                yield a, ps

    def rhs(self, q: str, a: str, ps: Iterable[str]) -> Tree | None:
        return self.rules.get((q, a, tuple(ps)))

    def rules_of(self, q: str) -> list[tuple[RuleKey, Tree]]:
        return [(k, r) for k, r in self.rules.items() if k[0] == q]

    def evaluator(self) -> "Evaluator":
        ev = self._cache.get("evaluator")
        if ev is None:
            ev = self._cache["evaluator"] = Evaluator(self)
        return ev


def rule_id(key: RuleKey) -> str:
    q, a, ps = key
    return f"{q}/{a}({','.join(ps)})" if ps else f"{q}/{a}"


# ---------------------------------------------------------------------------
# rhs helpers


def calls(t: Tree) -> list[Call]:
    out: list[Call] = []
    stack = [t]
    while stack:
        s = stack.pop()
        if isinstance(s.label, Call):
            out.append(s.label)
        stack.extend(reversed(s.children))
    return out


def subst_calls(t: Tree, fn: Callable[[Call], Tree | None]) -> Tree | None:
    """Replace each ``Call`` leaf via ``fn``; undefined if any image is None."""
    if isinstance(t.label, Call):
        return fn(t.label)
    if not t.children:
        return t
    kids = []
    for c in t.children:
        r = subst_calls(c, fn)
        if r is None:
            return None
        kids.append(r)
    return Tree(t.label, tuple(kids))


def subst_pairs(t: Tree, fn: Callable[[Pair], Tree | None]) -> Tree | None:
    if isinstance(t.label, Pair):
        return fn(t.label)
    if not t.children:
        return t
    kids = []
    for c in t.children:
        r = subst_pairs(c, fn)
        if r is None:
            return None
        kids.append(r)
    return Tree(t.label, tuple(kids))


def rhs_height(t: Tree) -> int:
    """Height with a call q(xi) counted as a node above the leaf xi."""
    if isinstance(t.label, Call):
        return 1
    if not t.children:
        return 0
    return 1 + max(rhs_height(c) for c in t.children)


def maxrhs(M: Dtla) -> int:
    hs = [rhs_height(t) for t in M.axioms.values()] + [rhs_height(t) for t in M.rules.values()]
    return max(hs, default=0)


# ---------------------------------------------------------------------------
# evaluation


class Evaluator:
    """Memoizing evaluator.  Trees are values, so results are cached by tree."""

    def __init__(self, M: Dtla):
        self.M = M
        self._la = set(M.P)
        self._delta: dict[Tree, str] = {}
        self._state: dict[tuple[str, Tree], Tree | None] = {}
        self.productive = productive_pairs(M)

    def clear(self) -> None:
        self._delta.clear()
        self._state.clear()

    def delta_star(self, s: Tree) -> str:
        r = self._delta.get(s)
        if r is not None:
            return r
        if not s.children and s.label in self._la and s.label not in self.M.input:
            r = s.label
        else:
            r = self.M.la.delta[(s.label, tuple(self.delta_star(c) for c in s.children))]
        self._delta[s] = r
        return r

    def state(self, q: str, s: Tree) -> Tree | None:
        key = (q, s)
        if key in self._state:
            return self._state[key]
        M = self.M
        if not s.children and s.label in self._la and s.label not in M.input:
            r = Tree(Pair(q, s.label)) if (q, s.label) in self.productive else None
        else:
            ps = tuple(self.delta_star(c) for c in s.children)
            rhs = M.rules.get((q, s.label, ps))
            if rhs is None:
                r = None
            else:
                kids = s.children
                r = subst_calls(rhs, lambda c: self.state(c.state, kids[c.var - 1]))
        self._state[key] = r
        return r

    def run(self, s: Tree) -> Tree | None:
        p = self.delta_star(s)
        ax = self.M.axioms.get(p)
        if ax is None:
            return None
        return subst_calls(ax, lambda c: self.state(c.state, s))


def check_input_tree(M: Dtla, s: Tree, extended: bool = True) -> None:
    stack = [s]
    while stack:
        t = stack.pop()
        if not t.children and extended and t.label in M.P and t.label not in M.input:
            continue
        if t.label not in M.input:
            raise SemanticError(f"unknown input symbol {t.label!r}")
        if M.input[t.label] != len(t.children):
            raise SemanticError(f"symbol {t.label!r} has rank {M.input[t.label]}, got {len(t.children)} children")
        stack.extend(t.children)


def delta_star(M: Dtla, s: Tree) -> str:
    return M.evaluator().delta_star(s)


def eval_tree(M: Dtla, s: Tree) -> Tree | None:
    return M.evaluator().run(s)


def eval_state(M: Dtla, q: str, s: Tree) -> Tree | None:
    return M.evaluator().state(q, s)


def nonempty_la_states(M: Dtla) -> set[str]:
    """Look-ahead states p with a nonempty tree language."""
    ne: set[str] = set()
    changed = True
    while changed:
        changed = False
        for (a, ps), p in M.la.delta.items():
            if p not in ne and all(x in ne for x in ps):
                ne.add(p)
                changed = True
    return ne


def productive_pairs(M: Dtla) -> set[tuple[str, str]]:
    """Pairs (q, p) such that q translates at least one input tree of p."""
    ne = nonempty_la_states(M)
    prod: set[tuple[str, str]] = set()
    rules = [(k, r, calls(r)) for k, r in M.rules.items()]
    changed = True
    while changed:
        changed = False
        for (q, a, ps), _, cs in rules:
            key = (a, ps)
            if key not in M.la.delta:
                continue
            p = M.la.delta[key]
            if (q, p) in prod or not all(x in ne for x in ps):
                continue
            if all((c.state, ps[c.var - 1]) in prod for c in cs):
                prod.add((q, p))
                changed = True
    return prod


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    findings: list[str]

    @property
    def ok(self) -> bool:
        return not self.findings

    def __bool__(self) -> bool:
        return self.ok


def _check_rhs(M: Dtla, t: Tree, k: int, where: str, out: list[str]) -> None:
    stack = [t]
    while stack:
        s = stack.pop()
        lab = s.label
        if isinstance(lab, Call):
            if lab.state not in M.states:
                out.append(f"{where}: unknown state {lab.state!r}")
            if k == 0 and lab.var != 0:
                out.append(f"{where}: axioms may only use x0, found x{lab.var}")
            if k > 0 and not 1 <= lab.var <= k:
                out.append(f"{where}: variable x{lab.var} out of range 1..{k}")
            if k < 0:
                out.append(f"{where}: variable x{lab.var} in a rule for a constant")
            continue
        if isinstance(lab, Pair) or lab == BOTTOM_LABEL:
            out.append(f"{where}: unexpected leaf {lab}")
            continue
        if lab not in M.output:
            out.append(f"{where}: unknown output symbol {lab!r}")
        elif M.output[lab] != len(s.children):
            out.append(f"{where}: output symbol {lab!r} has rank {M.output[lab]}, got {len(s.children)}")
        stack.extend(s.children)


def validate(M: Dtla) -> ValidationReport:
    out: list[str] = []
    if not M.input.constants:
        out.append("input alphabet has no constant")
    if not M.P:
        out.append("look-ahead automaton has no states")
    if len(set(M.P)) != len(M.P):
        out.append("duplicate look-ahead state")
    if len(set(M.states)) != len(M.states):
        out.append("duplicate state")
    for p in M.P:
        if p in M.input:
            out.append(f"look-ahead state {p!r} clashes with an input symbol")
    for q in M.states:
        if q in M.output:
            out.append(f"state {q!r} clashes with an output symbol")
    for (a, ps), p in M.la.delta.items():
        if a not in M.input:
            out.append(f"delta: unknown input symbol {a!r}")
        elif M.input[a] != len(ps):
            out.append(f"delta: {a!r} has rank {M.input[a]}, got {len(ps)} arguments")
        if p not in M.P or any(x not in M.P for x in ps):
            out.append(f"delta: unknown look-ahead state in {a}({','.join(ps)})->{p}")
    for a in M.input:
        for ps in M.keys_for(a):
            if (a, ps) not in M.la.delta:
                out.append(f"delta undefined for {a}({','.join(ps)})")
    for key, rhs in M.rules.items():
        q, a, ps = key
        where = f"rule {rule_id(key)}"
        if q not in M.states:
            out.append(f"{where}: unknown state {q!r}")
        if a not in M.input:
            out.append(f"{where}: unknown input symbol {a!r}")
            continue
        if M.input[a] != len(ps):
            out.append(f"{where}: {a!r} has rank {M.input[a]}")
        if any(x not in M.P for x in ps):
            out.append(f"{where}: unknown look-ahead state")
        _check_rhs(M, rhs, len(ps) if ps else -1, where, out)
    for p, ax in M.axioms.items():
        if p not in M.P:
            out.append(f"axiom for unknown look-ahead state {p!r}")
        _check_rhs(M, ax, 0, f"axiom {p}", out)
    if M.la_map is not None:
        from .classify import la_uniform_violations

        out.extend(la_uniform_violations(M, M.la_map))
    return ValidationReport(out)


# ---------------------------------------------------------------------------
# trimming, totality, completeness


def trim(M: Dtla) -> Dtla:
    ne = nonempty_la_states(M)
    P = tuple(p for p in M.P if p in ne)
    delta = {k: v for k, v in M.la.delta.items() if v in ne and all(x in ne for x in k[1])}
    rules = {k: r for k, r in M.rules.items() if all(x in ne for x in k[2])}
    axioms = {p: t for p, t in M.axioms.items() if p in ne}
    reach: set[str] = set()
    todo = [c.state for t in axioms.values() for c in calls(t)]
    by_state: dict[str, list[Tree]] = {}
    for (q, _, _), r in rules.items():
        by_state.setdefault(q, []).append(r)
    while todo:
        q = todo.pop()
        if q in reach:
            continue
        reach.add(q)
        for r in by_state.get(q, ()):
            todo.extend(c.state for c in calls(r))
    states = tuple(q for q in M.states if q in reach)
    rules = {k: r for k, r in rules.items() if k[0] in reach}
    la_map = None if M.la_map is None else {q: p for q, p in M.la_map.items() if q in reach}
    return M.copy(
        la=LookaheadAutomaton(P, delta),
        states=states,
        rules=rules,
        axioms=axioms,
        la_map=la_map,
    )


def undefinedness_classes(M: Dtla) -> set[tuple[str, frozenset[str]]]:
    """Reachable pairs (p, U): U is the set of states undefined on some tree of p."""
    reached: set[tuple[str, frozenset[str]]] = set()
    rules = {k: (r, calls(r)) for k, r in M.rules.items()}
    changed = True
    while changed:
        changed = False
        pool = sorted(reached, key=repr)
        for a, k in M.input.items():
            for combo in itertools.product(pool, repeat=k):
                ps = tuple(c[0] for c in combo)
                p = M.la.delta[(a, ps)]
                undef = set()
                for q in M.states:
                    entry = rules.get((q, a, ps))
                    if entry is None or any(c.state in combo[c.var - 1][1] for c in entry[1]):
                        undef.add(q)
                item = (p, frozenset(undef))
                if item not in reached:
                    reached.add(item)
                    changed = True
    return reached


def is_total(M: Dtla) -> bool:
    for p, U in undefinedness_classes(M):
        ax = M.axioms.get(p)
        if ax is None or any(c.state in U for c in calls(ax)):
            return False
    return True


def is_complete(M: Dtla) -> bool:
    return all((q, a, ps) in M.rules for q in M.states for a, ps in M.input_keys())


def is_initialized(M: Dtla) -> bool:
    return all(
        p in M.axioms and isinstance(M.axioms[p].label, Call) for p in M.P
    )


def initial_states(M: Dtla) -> dict[str, str]:
    return {p: M.axioms[p].label.state for p in M.P}


def is_dtop(M: Dtla) -> bool:
    return len(M.P) == 1
