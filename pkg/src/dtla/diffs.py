"""Difference trees, difference tuples and origins, by bounded exploration.

``enumerate_diffs`` explores every input context with at most a given number
of non-hole nodes.  It does not enumerate contexts one by one: a context ``C``
only matters through its *behaviour*, the tuple ``(M(C[p]))_p`` over all
look-ahead states, and the behaviour of ``C[D]`` for a one-level context ``D``
is a function of the behaviour of ``C`` and of what ``M`` does on the
off-spine subtrees of ``D``.  Keeping the cheapest context per behaviour (and
the smallest tree per off-spine signature) therefore visits exactly the set of
behaviours of contexts within the budget.  ``naive_contexts`` is the plain
enumeration used to cross-check this in the tests.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

from .classify import require_la_map
from .errors import DtlaError, NodeNotInOutput, PreconditionViolation
from .transducer import Dtla, eval_state, eval_tree, is_initialized, productive_pairs, subst_calls, subst_pairs
from .trees import (
    BOTTOM,
    Call,
    Pair,
    RankedAlphabet,
    Tree,
    bottom_nodes,
    format_address,
    has_node,
    height,
    labelled_nodes,
    lcp,
    meet,
    plug,
    subtree,
    to_text,
)


class BudgetZero(DtlaError):
    pass


def at_la(C: Tree, p: str) -> Tree:
    return plug(C, Tree(p))


def pref(M: Dtla, C: Tree) -> Tree | None:
    outs = [eval_tree(M, at_la(C, p)) for p in M.P]
    if any(t is None for t in outs):
        return None
    return lcp(outs)


def difference_nodes(M: Dtla, C: Tree, p: str, p2: str) -> list[tuple[int, ...]]:
    if p == p2:
        return []
    t1, t2 = eval_tree(M, at_la(C, p)), eval_tree(M, at_la(C, p2))
    if t1 is None or t2 is None:
        return []
    return bottom_nodes(meet(t1, t2))


# ---------------------------------------------------------------------------
# naive enumeration


def ground_trees(alpha: RankedAlphabet, max_size: int) -> list[list[Tree]]:
    """by_size[n] = all trees with exactly n nodes (canonical order)."""
    by_size: list[list[Tree]] = [[] for _ in range(max_size + 1)]
    for n in range(1, max_size + 1):
        for a, k in alpha.items():
            if k == 0:
                if n == 1:
                    by_size[1].append(Tree(a))
                continue
            for parts in _compositions(n - 1, k):
                for kids in itertools.product(*(by_size[m] for m in parts)):
                    by_size[n].append(Tree(a, kids))
    return by_size


def _compositions(total: int, k: int, minimum: int = 1) -> Iterator[tuple[int, ...]]:
    if k == 0:
        if total == 0:
            yield ()
        return
    for first in range(minimum, total - minimum * (k - 1) + 1):
        for rest in _compositions(total - first, k - 1, minimum):
            yield (first,) + rest


def all_trees(alpha: RankedAlphabet, max_size: int) -> Iterator[Tree]:
    for group in ground_trees(alpha, max_size):
        yield from group


def naive_contexts(alpha: RankedAlphabet, max_nodes: int) -> Iterator[Tree]:
    """All contexts with at most ``max_nodes`` non-hole nodes, by size."""
    ground = ground_trees(alpha, max_nodes)
    ctx: list[list[Tree]] = [[BOTTOM]]
    for n in range(1, max_nodes + 1):
        level = []
        for a, k in alpha.items():
            if k == 0:
                continue
            for j in range(k):
                # child j is the context, the others are ground trees (size >= 1)
                for parts in _compositions_mixed(n - 1, k, j):
                    pools = [ctx[m] if i == j else ground[m] for i, m in enumerate(parts)]
                    for kids in itertools.product(*pools):
                        level.append(Tree(a, kids))
        ctx.append(level)
    for level in ctx:
        yield from level


def _compositions_mixed(total: int, k: int, j: int) -> Iterator[tuple[int, ...]]:
    for ctx_size in range(0, total + 1):
        rest = total - ctx_size
        for parts in _compositions(rest, k - 1):
            yield parts[:j] + (ctx_size,) + parts[j:]


# ---------------------------------------------------------------------------
# report


@dataclass
class DiffReport:
    budget: int
    trees: dict[Tree, tuple] = field(default_factory=dict)
    tuples: dict[tuple[Tree, ...], tuple] = field(default_factory=dict)
    contexts: int = 0
    exhausted: bool = True

    @property
    def max_height(self) -> int:
        """Largest observed difference-tree height (-1 when none was seen)."""
        return max((height(t) for t in self.trees), default=-1)

    @property
    def max_tuple_height(self) -> int:
        return max((height(c) for tup in self.tuples for c in tup), default=-1)

    def to_json(self) -> dict:
        key = lambda t: (height(t), to_text(t))
        return {
            "budget": self.budget,
            "tuples": sorted(
                (list(map(to_text, tup)) for tup in self.tuples),
                key=lambda xs: (max(len(x) for x in xs), xs),
            ),
            "trees": [to_text(t) for t in sorted(self.trees, key=key)],
            "maxHeight": self.max_height,
            "contextsExplored": self.contexts,
            "exhausted": self.exhausted,
        }


def _record(M: Dtla, C: Tree, outs: tuple, report: DiffReport) -> None:
    P = M.P
    if any(t is None for t in outs) or len(P) < 2:
        return
    for i, j in itertools.combinations(range(len(P)), 2):
        for v in bottom_nodes(meet(outs[i], outs[j])):
            for a, b in ((i, j), (j, i)):
                d = subtree(outs[a], v)
                if d not in report.trees:
                    report.trees[d] = (C, P[a], P[b], v)
    for v in bottom_nodes(lcp(outs)):
        tup = tuple(subtree(t, v) for t in outs)
        if tup not in report.tuples:
            report.tuples[tup] = (C, v)


def enumerate_diffs_naive(M: Dtla, max_context_nodes: int) -> DiffReport:
    if max_context_nodes <= 0:
        raise BudgetZero("budget must be positive")
    report = DiffReport(max_context_nodes)
    for C in naive_contexts(M.input, max_context_nodes):
        outs = tuple(eval_tree(M, at_la(C, p)) for p in M.P)
        report.contexts += 1
        _record(M, C, outs, report)
    return report


def enumerate_diffs(M: Dtla, max_context_nodes: int, max_behaviours: int | None = 200_000) -> DiffReport:
    if max_context_nodes <= 0:
        raise BudgetZero("budget must be positive")
    B = max_context_nodes
    report = DiffReport(B)
    P, Q = M.P, M.states
    qidx = {q: i for i, q in enumerate(Q)}
    prod = productive_pairs(M)

    # off-spine signatures: (la state, outputs per state) -> (size, tree)
    sigs: dict[tuple, tuple[int, Tree]] = {}
    by_size: list[list[tuple]] = [[] for _ in range(B)]
    for n in range(1, B):
        for a, k in M.input.items():
            for parts in _compositions(n - 1, k):
                for kids in itertools.product(*(by_size[m] for m in parts)):
                    ps = tuple(s[0] for s in kids)
                    outs = []
                    for q in Q:
                        rhs = M.rules.get((q, a, ps))
                        outs.append(
                            None
                            if rhs is None
                            else subst_calls(rhs, lambda c: kids[c.var - 1][1][qidx[c.state]])
                        )
                    sig = (M.delta(a, ps), tuple(outs))
                    if sig not in sigs:
                        sigs[sig] = (n, Tree(a, tuple(sigs[s][1] for s in kids)))
                        by_size[n].append(sig)
                        if max_behaviours is not None and len(sigs) > max_behaviours:
                            report.exhausted = False
                            return report

    def extend(outs: tuple, a: str, j: int, kids: tuple) -> tuple:
        new = []
        for p in P:
            ps = tuple(p if i == j else kids[i][0] for i in range(len(kids)))
            p2 = M.delta(a, ps)
            base = outs[P.index(p2)]
            if base is None:
                new.append(None)
                continue

            def here(c: Call, ps=ps) -> Tree | None:
                if c.var - 1 == j:
                    return Tree(Pair(c.state, p)) if (c.state, p) in prod else None
                return kids[c.var - 1][1][qidx[c.state]]

            def fill(pair: Pair, a=a, ps=ps) -> Tree | None:
                rhs = M.rules.get((pair.state, a, ps))
                return None if rhs is None else subst_calls(rhs, here)

            new.append(subst_pairs(base, fill))
        return tuple(new)

    start = tuple(eval_tree(M, Tree(p)) for p in P)
    best: dict[tuple, int] = {start: 0}
    ctx_of: dict[tuple, Tree] = {start: BOTTOM}
    heap = [(0, 0, start)]
    tick = itertools.count(1)
    while heap:
        cost, _, outs = heapq.heappop(heap)
        if best[outs] < cost:
            continue
        C = ctx_of[outs]
        report.contexts += 1
        _record(M, C, outs, report)
        room = B - cost - 1
        if room < 0:
            continue
        for a, k in M.input.items():
            if k == 0:
                continue
            for j in range(k):
                for parts in _compositions_upto(room, k - 1):
                    pools = [by_size[m] for m in parts]
                    extra = sum(parts)
                    for others in itertools.product(*pools):
                        kids = list(others)
                        kids.insert(j, None)
                        kids = tuple(kids)
                        new = extend(outs, a, j, kids)
                        nc = cost + 1 + extra
                        if new not in best or nc < best[new]:
                            best[new] = nc
                            sub = tuple(BOTTOM if s is None else sigs[s][1] for s in kids)
                            ctx_of[new] = plug(C, Tree(a, sub))
                            heapq.heappush(heap, (nc, next(tick), new))
                            if max_behaviours is not None and len(best) > max_behaviours:
                                report.exhausted = False
                                return report
    return report


def _compositions_upto(limit: int, k: int) -> Iterator[tuple[int, ...]]:
    for total in range(k, limit + 1):
        yield from _compositions(total, k)


# ---------------------------------------------------------------------------
# links and origins


class Link(NamedTuple):
    state: str
    node: tuple[int, ...]
    tag: tuple[int, ...] | str


class Origin(NamedTuple):
    state: str
    node: tuple[int, ...]
    rhs_node: tuple[int, ...]

    @property
    def orignode(self) -> tuple[int, ...]:
        return self.node


def _require_init_uniform(M: Dtla) -> None:
    if not is_initialized(M):
        raise PreconditionViolation("links need an initialized dtla")
    require_la_map(M)


def links(M: Dtla, s: Tree) -> dict[tuple[int, ...], set[Link]]:
    _require_init_uniform(M)
    ev = M.evaluator()
    la = set(M.P) - set(M.input)
    p0 = ev.delta_star(s)
    q0 = M.axioms[p0].label.state
    lk: dict[tuple[int, ...], set[Link]] = {}
    todo = [((), q0, ())]
    while todo:
        v, q, u = todo.pop()
        lk.setdefault(v, set()).add(Link(q, u, "#"))
        su = subtree(s, u)
        if not su.children and su.label in la:
            if (q, su.label) in ev.productive:
                lk[v].add(Link(q, u, ()))
            continue
        ps = tuple(ev.delta_star(c) for c in su.children)
        rhs = M.rules.get((q, su.label, ps))
        if rhs is None:
            continue
        for z, node in labelled_nodes(rhs):
            if isinstance(node.label, Call):
                todo.append((v + z, node.label.state, u + (node.label.var,)))
            else:
                lk.setdefault(v + z, set()).add(Link(q, u, z))
    return lk


def origin(M: Dtla, s: Tree, v: tuple[int, ...]) -> Origin:
    out = eval_tree(M, s)
    if out is None or not has_node(out, v):
        raise NodeNotInOutput(f"node {format_address(v)} is not in the output")
    numeric = [l for l in links(M, s).get(v, ()) if l.tag != "#"]
    if len(numeric) != 1:
        raise AssertionError(f"expected one origin link at {format_address(v)}, got {numeric}")
    l = numeric[0]
    return Origin(l.state, l.node, l.tag)


def origin_rhs_view(M: Dtla, s: Tree, o: Origin) -> Tree | None:
    """zeta/z with every call q'(xi) replaced by q'_M(s/u.i)."""
    su = subtree(s, o.node)
    ev = M.evaluator()
    if not su.children and su.label in M.P and su.label not in M.input:
        return Tree(Pair(o.state, su.label))
    ps = tuple(ev.delta_star(c) for c in su.children)
    rhs = M.rules[(o.state, su.label, ps)]
    return subst_calls(subtree(rhs, o.rhs_node), lambda c: eval_state(M, c.state, su.children[c.var - 1]))
