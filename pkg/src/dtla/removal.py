"""Deciding whether a dtla is equivalent to a transducer without look-ahead.

The input is brought into canonical form.  Then a candidate dtop is built
state by state.  Each state of the candidate is a tuple of trees indexed by
the look-ahead states.  The trees are over the output alphabet with leaves
``<q,p>``, and they hold the output that the dtla still owes for each
possible look-ahead state of the remaining input.  A candidate that is
completed is accepted only if it passes an all-vector purity and aheadness
check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .bounds import auto_bound
from .classify import require_la_map
from .errors import MalformedTuple, MissingRho, NotTotal
from .normalize import NormalizationTrace, normalize, representatives, transport_bound
from .transducer import Dtla, LookaheadAutomaton, calls, eval_state, is_total, subst_calls, subst_pairs, trim
from .trees import (
    BOTTOM,
    BOTTOM_LABEL,
    Call,
    Pair,
    RankedAlphabet,
    Tree,
    bottom_nodes,
    format_address,
    height,
    lcp,
    subtree,
    to_text,
)

DiffTuple = tuple[Tree, ...]
Bound = Union[int, str]  # an integer, "auto" or "unbounded"

DTOP_LA = "any"


def omega(t: Tree, rho: dict[str, str]) -> Tree:
    def sub(c: Call) -> Tree:
        if c.state not in rho:
            raise MissingRho(f"no look-ahead state for {c.state}")
        return Tree(Pair(c.state, rho[c.state]))

    return subst_calls(t, sub)


def phi(t: Tree) -> Tree:
    return subst_pairs(t, lambda _: BOTTOM)


def rhs_m_phi(M: Dtla, tup: DiffTuple, a: str, ps: tuple[str, ...]) -> Tree:
    p = M.delta(a, ps)
    comp = tup[M.P.index(p)]

    def sub(pair: Pair) -> Tree:
        rhs = M.rules.get((pair.state, a, ps)) if pair.la == p else None
        if rhs is None:
            raise MalformedTuple(f"component for {p} has leaf {pair} with no rule on {a}({','.join(ps)})")
        return rhs

    return subst_pairs(comp, sub)


def _fill_slots(pattern: Tree, slots: list[Tree]) -> Tree:
    it = iter(slots)

    def go(s: Tree) -> Tree:
        if s.label == BOTTOM_LABEL:
            return next(it)
        if not s.children:
            return s
        return Tree(s.label, tuple(go(c) for c in s.children))

    return go(pattern)


@dataclass
class Refusal(Exception):
    reason: str
    detail: dict

    def __str__(self) -> str:
        return f"{self.reason}: {self.detail}"


@dataclass
class Synthesis:
    """Candidate dtop under construction: tuples in creation order."""

    M: Dtla
    rho: dict[str, str]
    bound: int | None
    cap: int
    fixed: Tree
    node_cap: int | None = None
    tuples: list[DiffTuple] = field(default_factory=list)
    index: dict[DiffTuple, int] = field(default_factory=dict)
    axiom: Tree | None = None
    rules: dict[tuple[int, str], Tree] = field(default_factory=dict)
    slots: dict[tuple[int, str], list[tuple[tuple[int, ...], int, int]]] = field(default_factory=dict)

    def state_of(self, tup: DiffTuple, where: dict) -> int:
        if tup in self.index:
            return self.index[tup]
        if self.bound is not None:
            for i, comp in enumerate(tup):
                if height(comp) > self.bound:
                    raise Refusal(
                        "height-exceeded",
                        {
                            **where,
                            "attempted": f"s{len(self.tuples)}",
                            "tuple": [to_text(c) for c in tup],
                            "component": i + 1,
                            "height": height(comp),
                            "bound": self.bound,
                        },
                    )
        if len(self.tuples) >= self.cap:
            raise Refusal("cap-exceeded", {**where, "cap": self.cap})
        if self.node_cap is not None:
            nodes = sum(_size(c) for c in tup)
            if nodes > self.node_cap:
                raise Refusal("cap-exceeded", {**where, "tupleNodes": nodes, "nodeCap": self.node_cap})
        self.index[tup] = len(self.tuples)
        self.tuples.append(tup)
        return self.index[tup]


def construct_axiom(S: Synthesis) -> None:
    M = S.M
    outs = [omega(M.axioms[p], S.rho) for p in M.P]
    pattern = lcp(outs)
    slots = []
    for v in bottom_nodes(pattern):
        tup = tuple(subtree(t, v) for t in outs)
        n = S.state_of(tup, {"at": "axiom", "node": format_address(v)})
        slots.append(Tree(Call(f"s{n}", 0)))
    S.axiom = _fill_slots(pattern, slots)


def construct_rule(S: Synthesis, n: int, a: str) -> None:
    M, rho = S.M, S.rho
    tup = S.tuples[n]
    k = M.input[a]
    if k == 0:
        S.rules[(n, a)] = rhs_m_phi(M, tup, a, ())
        S.slots[(n, a)] = []
        return
    vectors = list(M.keys_for(a))
    full = {ps: rhs_m_phi(M, tup, a, ps) for ps in vectors}
    pattern = lcp(omega(full[ps], rho) for ps in vectors)
    fixed_la = M.evaluator().delta_star(S.fixed)

    def psi_tree(i: int, p: str) -> Tree:
        ps = tuple(p if j == i else fixed_la for j in range(k))
        t = full[ps]

        def sub(c: Call) -> Tree:
            if c.var - 1 == i:
                return Tree(Pair(c.state, rho[c.state]))
            out = eval_state(M, c.state, S.fixed)
            if out is None:
                raise MalformedTuple(f"state {c.state} undefined on {to_text(S.fixed)}")
            return out

        return subst_calls(t, sub)

    psi = {}
    slots = []
    record = []
    for v in bottom_nodes(pattern):
        where = {"state": f"s{n}", "symbol": a, "node": format_address(v)}
        if k == 1:
            choice = 0
            if 0 not in psi:
                psi[0] = [psi_tree(0, p) for p in M.P]
        else:
            passing = []
            for i in range(k):
                if i not in psi:
                    psi[i] = [psi_tree(i, p) for p in M.P]
                if v in bottom_nodes(lcp(psi[i])):
                    passing.append(i)
            if not passing:
                raise Refusal("no-child-index", where)
            if len(passing) > 1:
                raise Refusal("ambiguous-child-index", {**where, "indices": [i + 1 for i in passing]})
            choice = passing[0]
        new = tuple(subtree(t, v) for t in psi[choice])
        m = S.state_of(new, where)
        slots.append(Tree(Call(f"s{m}", choice + 1)))
        record.append((v, m, choice + 1))
    S.rules[(n, a)] = _fill_slots(pattern, slots)
    S.slots[(n, a)] = record


def verify_property_A(S: Synthesis) -> dict | None:
    """First violation of the all-vector check, or None when it holds."""
    M, rho = S.M, S.rho
    for (n, a), record in S.slots.items():
        tup = S.tuples[n]
        for ps in M.keys_for(a):
            full = rhs_m_phi(M, tup, a, ps)
            for v, m, i in record:
                part = subtree(full, v)
                bad = [c for c in calls(part) if c.var != i]
                if bad:
                    return {
                        "state": f"s{n}",
                        "symbol": a,
                        "vector": list(ps),
                        "node": format_address(v),
                        "clause": "purity",
                        "subtree": to_text(part),
                        "variable": f"x{i}",
                    }
                got = omega(part, rho)
                want = S.tuples[m][M.P.index(ps[i - 1])]
                if got != want:
                    return {
                        "state": f"s{n}",
                        "symbol": a,
                        "vector": list(ps),
                        "node": format_address(v),
                        "clause": "aheadness",
                        "expected": to_text(want),
                        "found": to_text(got),
                    }
    return None


def to_dtop(S: Synthesis) -> Dtla:
    M = S.M
    names = [f"s{i}" for i in range(len(S.tuples))]
    rules = {}
    for (n, a), rhs in S.rules.items():
        rules[(names[n], a, (DTOP_LA,) * M.input[a])] = rhs
    delta = {(a, (DTOP_LA,) * k): DTOP_LA for a, k in M.input.items()}
    return Dtla(
        input=RankedAlphabet(M.input),
        output=RankedAlphabet(M.output),
        la=LookaheadAutomaton((DTOP_LA,), delta),
        states=tuple(names),
        rules=rules,
        axioms={DTOP_LA: S.axiom},
    )


@dataclass
class RemovalOutcome:
    answer: str  # "yes", "no" or "unknown"
    reason: str | None = None
    witness: dict | None = None
    dtop: Dtla | None = None
    tuples: dict[str, list[str]] | None = None
    bound: int | None = None
    trace: NormalizationTrace | None = None
    canonical: Dtla | None = None

    def to_json(self) -> dict:
        out = {"answer": self.answer, "reason": self.reason, "bound": self.bound}
        if self.witness is not None:
            out["witness"] = self.witness
        if self.tuples is not None:
            out["states"] = self.tuples
        if self.trace is not None:
            out["normalization"] = self.trace.to_json()
        return out


def remove_lookahead(
    M: Dtla, bound: Bound = "auto", cap: int = 100_000, node_cap: int | None = 200_000
) -> RemovalOutcome:
    """Decide whether M has an equivalent dtop, building it when it does.

    ``cap`` limits the number of synthesized states and ``node_cap`` the
    size of a single tuple.  Hitting either gives the answer "unknown",
    never "no".
    """
    M = trim(M)
    if not is_total(M):
        raise NotTotal("transducer is not total")
    if len(M.P) == 1:
        return RemovalOutcome("yes", "already-dtop-bypass", dtop=M)
    if bound == "auto":
        h = auto_bound(M)
    elif bound == "unbounded":
        h = None
    else:
        h = int(bound)
    trace = normalize(M, "canonical")
    C = trace.result
    if h is not None:
        h = transport_bound(h, trace)
    rho = require_la_map(C)
    if len(C.P) == 1:
        return RemovalOutcome("yes", "already-dtop-bypass", dtop=C, bound=h, trace=trace)
    reps = representatives(C)
    fixed = min(reps.values(), key=lambda t: (_size(t), _preorder(C, t)))
    S = Synthesis(C, rho, h, cap, fixed, node_cap)
    try:
        construct_axiom(S)
        n = 0
        while n < len(S.tuples):
            for a in C.input:
                construct_rule(S, n, a)
            n += 1
    except Refusal as r:
        answer = "unknown" if r.reason == "cap-exceeded" else "no"
        return RemovalOutcome(answer, r.reason, r.detail, tuples=_table(S), bound=h, trace=trace, canonical=C)
    table = _table(S)
    bad = verify_property_A(S)
    if bad is not None:
        return RemovalOutcome(
            "no", "property-A-violation", bad, dtop=to_dtop(S), tuples=table, bound=h, trace=trace, canonical=C
        )
    return RemovalOutcome("yes", None, None, dtop=to_dtop(S), tuples=table, bound=h, trace=trace, canonical=C)


def _table(S: Synthesis) -> dict[str, list[str]]:
    return {f"s{i}": [to_text(c) for c in tup] for i, tup in enumerate(S.tuples)}


def _size(t: Tree) -> int:
    n, stack = 0, [t]
    while stack:
        s = stack.pop()
        n += 1
        stack.extend(s.children)
    return n


def _preorder(M: Dtla, t: Tree) -> tuple:
    order = {a: i for i, a in enumerate(M.input)}
    out = []
    stack = [t]
    while stack:
        s = stack.pop()
        out.append(order[s.label])
        stack.extend(reversed(s.children))
    return tuple(out)
