"""Difference bounds and the dependency graph of pairs of runs."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple

from .classify import (
    depth_profile,
    is_b_erasing,
    is_output_monadic,
    is_ultralinear,
    require_la_map,
    sccs,
)
from .errors import NotApplicable, PreconditionViolation
from .normalize import bound_from_initialized, make_initialized, make_la_uniform
from .transducer import Dtla, RuleKey, initial_states, is_initialized, maxrhs, rule_id, trim
from .trees import Branch, Call, Tree, format_branch, labelled_nodes, branch_to


def _require_init_uniform(M: Dtla) -> None:
    if not is_initialized(M):
        raise PreconditionViolation("an initialized dtla is required")
    require_la_map(M)


def output_bound(M: Dtla) -> int:
    _require_init_uniform(M)
    return maxrhs(M) * len(M.states) * (len(M.P) + 2)


def difference_bound_from_parts(mr: int, h_o: int, h_a: int) -> int:
    return 2 * mr + h_o + h_a + 1


def class_difference_bound(M: Dtla) -> int:
    M = trim(M)
    ul = is_ultralinear(M)
    if not ul:
        raise NotApplicable(f"not ultralinear: rule {ul.violation[0]} copies {ul.violation[1]}")
    be = is_b_erasing(M)
    if not be:
        raise NotApplicable(f"not bounded erasing: cycle {' -> '.join(be.cycle)}")
    q, p = len(M.states), len(M.P)
    return 1 + 4 * maxrhs(M) * (q + 2) ** 2 * p**2


# ---------------------------------------------------------------------------
# dependency graph

GNode = tuple[str, str, int]


class Edge(NamedTuple):
    src: GNode
    dst: GNode
    r1: RuleKey
    r2: RuleKey
    j: int
    z1: Branch
    z2: Branch

    @property
    def weight(self) -> int:
        return len(self.z1) - len(self.z2)

    def label_text(self) -> str:
        return ";".join(
            [rule_id(self.r1), rule_id(self.r2), str(self.j), format_branch(self.z1), format_branch(self.z2)]
        )


@dataclass
class DependencyGraph:
    nodes: list[GNode]
    entries: list[GNode]
    edges: list[Edge]
    succ: dict[GNode, list[Edge]] = field(default_factory=dict)

    def __post_init__(self):
        self.succ = {n: [] for n in self.nodes}
        for e in self.edges:
            self.succ[e.src].append(e)

    def reachable(self) -> set[GNode]:
        seen = set(self.entries)
        todo = list(self.entries)
        while todo:
            n = todo.pop()
            for e in self.succ[n]:
                if e.dst not in seen:
                    seen.add(e.dst)
                    todo.append(e.dst)
        return seen

    def to_dot(self) -> str:
        ident = lambda n: f'"{n[0]}|{n[1]}|{n[2]}"'
        lines = ["digraph G {"]
        for n in self.nodes:
            shape = "doublecircle" if n in self.entries else "ellipse"
            lines.append(f"  {ident(n)} [shape={shape}];")
        for e in self.edges:
            lines.append(f'  {ident(e.src)} -> {ident(e.dst)} [label="{e.label_text()}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _call_branches(rhs: Tree) -> list[tuple[Call, Branch]]:
    return [(s.label, branch_to(rhs, v)) for v, s in labelled_nodes(rhs) if isinstance(s.label, Call)]


def build_depgraph(M: Dtla) -> DependencyGraph:
    _require_init_uniform(M)
    Q = M.states
    nodes = [(q1, q2, b) for b in (1, 0) for q1 in Q for q2 in Q]
    init = initial_states(M)
    entries = []
    for p1 in M.P:
        for p2 in M.P:
            n = (init[p1], init[p2], 1)
            if n not in entries:
                entries.append(n)
    by_state_sym: dict[tuple[str, str], list[tuple[RuleKey, list]]] = {}
    for key, rhs in M.rules.items():
        by_state_sym.setdefault((key[0], key[1]), []).append((key, _call_branches(rhs)))
    edges: list[Edge] = []
    seen: set[Edge] = set()

    def add(e: Edge) -> None:
        if e not in seen:
            seen.add(e)
            edges.append(e)

    for q1, q2, b in nodes:
        for a, k in M.input.items():
            if k == 0:
                continue
            for r1, cs1 in by_state_sym.get((q1, a), ()):
                for r2, cs2 in by_state_sym.get((q2, a), ()):
                    differ = [i for i in range(k) if r1[2][i] != r2[2][i]]
                    if b == 0:
                        if differ:
                            continue
                        ells = None
                    else:
                        if len(differ) > 1:
                            continue
                        ells = [differ[0] + 1] if differ else list(range(1, k + 1))
                    for c1, z1 in cs1:
                        for c2, z2 in cs2:
                            if c1.var != c2.var:
                                continue
                            j = c1.var
                            if b == 0:
                                add(Edge((q1, q2, 0), (c1.state, c2.state, 0), r1, r2, j, z1, z2))
                                continue
                            for ell in ells:
                                nb = 1 if ell == j else 0
                                add(Edge((q1, q2, 1), (c1.state, c2.state, nb), r1, r2, j, z1, z2))
    return DependencyGraph(nodes, entries, edges)


# ---------------------------------------------------------------------------
# weak depth-uniformity


@dataclass
class CycleWitness:
    edges: list[Edge]

    @property
    def weight(self) -> int:
        return sum(e.weight for e in self.edges)

    @property
    def nodes(self) -> list[GNode]:
        return [e.src for e in self.edges]

    def to_json(self) -> dict:
        return {
            "nodes": ["|".join(map(str, n)) for n in self.nodes],
            "edges": [e.label_text() for e in self.edges],
            "weight": self.weight,
        }


@dataclass
class WeakDepthResult:
    ok: bool
    h_prime: int | None
    violations: list[CycleWitness]

    def __bool__(self) -> bool:
        return self.ok


def _path_in_scc(G: DependencyGraph, comp: set, a: GNode, b: GNode) -> list[Edge]:
    if a == b:
        return []
    prev: dict[GNode, Edge] = {}
    todo = deque([a])
    seen = {a}
    while todo:
        n = todo.popleft()
        for e in G.succ[n]:
            if e.dst in comp and e.dst not in seen:
                seen.add(e.dst)
                prev[e.dst] = e
                if e.dst == b:
                    path = []
                    x = b
                    while x != a:
                        path.append(prev[x])
                        x = prev[x].src
                    return path[::-1]
                todo.append(e.dst)
    raise AssertionError("nodes of one component must be connected")


def weak_depth_uniform(M: Dtla, G: DependencyGraph | None = None) -> WeakDepthResult:
    G = G or build_depgraph(M)
    live = G.reachable()
    order = [n for n in G.nodes if n in live]
    succ = {n: [e.dst for e in G.succ[n] if e.dst in live] for n in order}
    comps = sccs(order, succ)
    comps.reverse()  # topological order
    comp_of = {n: i for i, c in enumerate(comps) for n in c}
    pot: dict[GNode, int] = {}
    tree_edge: dict[GNode, Edge] = {}
    violations: list[CycleWitness] = []
    for ci, comp in enumerate(comps):
        cset = set(comp)
        root = comp[0]
        pot[root] = 0
        todo = deque([root])
        bad: Edge | None = None
        while todo:
            n = todo.popleft()
            for e in G.succ[n]:
                if e.dst not in cset:
                    continue
                if e.dst not in pot:
                    pot[e.dst] = pot[n] + e.weight
                    tree_edge[e.dst] = e
                    todo.append(e.dst)
                elif pot[e.dst] != pot[n] + e.weight and bad is None:
                    bad = e
        if bad is None:
            continue

        def tree_path(x: GNode) -> list[Edge]:
            out = []
            while x != root:
                out.append(tree_edge[x])
                x = tree_edge[x].src
            return out[::-1]

        back = _path_in_scc(G, cset, bad.dst, root)
        w1 = CycleWitness(tree_path(bad.src) + [bad] + back)
        if w1.weight == 0:
            w1 = CycleWitness(tree_path(bad.dst) + back)
        violations.append(w1)
    if violations:
        return WeakDepthResult(False, None, violations)

    hi: dict[GNode, int] = {}
    lo: dict[GNode, int] = {}
    entries = set(G.entries)
    for comp in comps:
        in_hi: dict[GNode, int] = {}
        in_lo: dict[GNode, int] = {}
        for x in comp:
            if x in entries:
                in_hi[x] = in_lo[x] = 0
        for n in order:
            if comp_of[n] >= comp_of[comp[0]]:
                continue
            for e in G.succ[n]:
                if e.dst in comp and n in hi:
                    in_hi[e.dst] = max(in_hi.get(e.dst, hi[n] + e.weight), hi[n] + e.weight)
                    in_lo[e.dst] = min(in_lo.get(e.dst, lo[n] + e.weight), lo[n] + e.weight)
        top = max(v - pot[x] for x, v in in_hi.items())
        bot = min(v - pot[x] for x, v in in_lo.items())
        for y in comp:
            hi[y] = pot[y] + top
            lo[y] = pot[y] + bot
    h = max((max(abs(hi[n]), abs(lo[n])) for n in order), default=0)
    return WeakDepthResult(True, h, [])


# ---------------------------------------------------------------------------
# ancestral bound and the assembled report


@dataclass
class AncestralBound:
    value: int | None
    justification: str

    @property
    def applicable(self) -> bool:
        return self.value is not None


def ancestral_bound(M: Dtla) -> AncestralBound:
    _require_init_uniform(M)
    found: list[tuple[int, str]] = []
    if depth_profile(M):
        found.append((0, "depth-uniform"))
    wd = weak_depth_uniform(M)
    if wd:
        found.append((wd.h_prime, "weak depth-uniform"))
    formula = max(0, (2 * len(M.states) ** 2 - 1) * maxrhs(M))
    if is_ultralinear(M) and is_b_erasing(M):
        found.append((formula, "ultralinear and bounded erasing"))
    elif is_output_monadic(M):
        found.append((formula, "output-monadic"))
    if not found:
        return AncestralBound(None, "not applicable: no supported class")
    value, why = min(found, key=lambda x: x[0])
    return AncestralBound(value, why)


@dataclass
class BoundReport:
    maxrhs: int
    states: int
    la_states: int
    class_bound: int | None
    class_reason: str
    h_o: int
    h_a: AncestralBound
    h_parts: int | None
    prepared_states: int
    prepared_maxrhs: int

    @property
    def auto(self) -> int | None:
        if self.class_bound is not None:
            return self.class_bound
        return self.h_parts

    @property
    def auto_source(self) -> str:
        if self.class_bound is not None:
            return "class formula (ultralinear, bounded erasing)"
        if self.h_parts is not None:
            return f"parts (ancestral bound via {self.h_a.justification})"
        return "not applicable"

    def to_json(self) -> dict:
        return {
            "maxrhs": self.maxrhs,
            "states": self.states,
            "lookaheadStates": self.la_states,
            "classBound": self.class_bound,
            "classBoundNote": self.class_reason,
            "prepared": {"states": self.prepared_states, "maxrhs": self.prepared_maxrhs},
            "outputBound": self.h_o,
            "ancestralBound": self.h_a.value,
            "ancestralJustification": self.h_a.justification,
            "differenceBoundFromParts": self.h_parts,
            "auto": self.auto,
            "autoSource": self.auto_source,
        }


def prepare(M: Dtla) -> Dtla:
    """The initialized la-uniform dtla the part bounds are computed on."""
    return make_la_uniform(make_initialized(trim(M)))


def bound_report(M: Dtla) -> BoundReport:
    T = trim(M)
    try:
        cb, why = class_difference_bound(T), "1 + 4*maxrhs*(|Q|+2)^2*|P|^2"
    except NotApplicable as exc:
        cb, why = None, str(exc)
    W = prepare(T)
    h_o = output_bound(W)
    h_a = ancestral_bound(W)
    parts = None
    if h_a.applicable:
        parts = bound_from_initialized(difference_bound_from_parts(maxrhs(W), h_o, h_a.value), T)
    return BoundReport(
        maxrhs=maxrhs(T),
        states=len(T.states),
        la_states=len(T.P),
        class_bound=cb,
        class_reason=why,
        h_o=h_o,
        h_a=h_a,
        h_parts=parts,
        prepared_states=len(W.states),
        prepared_maxrhs=maxrhs(W),
    )


def auto_bound(M: Dtla) -> int:
    rep = bound_report(M)
    if rep.auto is None:
        raise NotApplicable(f"no difference bound available: {rep.class_reason}; {rep.h_a.justification}")
    return rep.auto
