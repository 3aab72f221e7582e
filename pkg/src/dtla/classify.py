"""Structural classes of dtlas and their witnesses."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .errors import PreconditionViolation
from .transducer import Dtla, calls, is_complete, is_initialized, is_total, rule_id
from .trees import Call, Tree, labelled_nodes

# ---------------------------------------------------------------------------
# graph utilities


def sccs(nodes: list, succ: dict) -> list[list]:
    """Tarjan's algorithm; components come out in reverse topological order."""
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    out: list[list] = []
    counter = 0

    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(succ.get(root, ())))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ.get(w, ()))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def find_cycle(nodes: list, succ: dict) -> list | None:
    """Some directed cycle as a node list (first node repeated at the end)."""
    color: dict = {}
    for root in nodes:
        if root in color:
            continue
        path = [root]
        color[root] = 1
        iters = [iter(succ.get(root, ()))]
        while iters:
            for w in iters[-1]:
                if color.get(w) == 1:
                    i = path.index(w)
                    return path[i:] + [w]
                if w not in color:
                    color[w] = 1
                    path.append(w)
                    iters.append(iter(succ.get(w, ())))
                    break
            else:
                color[path.pop()] = 2
                iters.pop()
    return None


# ---------------------------------------------------------------------------
# syntactic classes


def is_linear(M: Dtla) -> bool:
    for rhs in M.rules.values():
        counts = Counter(c.var for c in calls(rhs))
        if any(n > 1 for n in counts.values()):
            return False
    return True


def call_graph(M: Dtla) -> dict[str, list[str]]:
    succ: dict[str, list[str]] = {q: [] for q in M.states}
    for (q, _, _), rhs in M.rules.items():
        for c in calls(rhs):
            if c.state not in succ[q]:
                succ[q].append(c.state)
    return succ


@dataclass
class UltralinearResult:
    ok: bool
    mu: dict[str, int] | None = None
    violation: tuple | None = None

    def __bool__(self) -> bool:
        return self.ok


def is_ultralinear(M: Dtla) -> UltralinearResult:
    succ = call_graph(M)
    comps = sccs(list(M.states), succ)
    comps.reverse()  # callers before callees
    mu: dict[str, int] = {}
    for rank, comp in enumerate(comps):
        for q in comp:
            mu[q] = rank
    for key, rhs in M.rules.items():
        q = key[0]
        cs = calls(rhs)
        counts = Counter(c.var for c in cs)
        for c in cs:
            if mu[c.state] == mu[q] and counts[c.var] != 1:
                return UltralinearResult(False, violation=(rule_id(key), f"x{c.var}"))
    return UltralinearResult(True, mu=mu)


def check_ultralinear_witness(M: Dtla, mu: dict[str, int]) -> bool:
    for (q, _, _), rhs in M.rules.items():
        cs = calls(rhs)
        counts = Counter(c.var for c in cs)
        for c in cs:
            if mu[c.state] < mu[q]:
                return False
            if mu[c.state] == mu[q] and counts[c.var] != 1:
                return False
    return True


def erasing_graph(M: Dtla) -> dict[str, list[str]]:
    succ: dict[str, list[str]] = {q: [] for q in M.states}
    for (q, _, _), rhs in M.rules.items():
        if isinstance(rhs.label, Call) and rhs.label.state not in succ[q]:
            succ[q].append(rhs.label.state)
    return succ


@dataclass
class ErasingResult:
    ok: bool
    cycle: list[str] | None = None

    def __bool__(self) -> bool:
        return self.ok


def is_b_erasing(M: Dtla) -> ErasingResult:
    cyc = find_cycle(list(M.states), erasing_graph(M))
    return ErasingResult(cyc is None, cyc)


def is_output_monadic(M: Dtla) -> bool:
    return all(r <= 1 for r in M.output.values())


@dataclass
class DepthProfile:
    ok: bool
    depths: dict[tuple[str, int], int] = field(default_factory=dict)
    conflict: tuple | None = None

    def __bool__(self) -> bool:
        return self.ok


def depth_profile(M: Dtla) -> DepthProfile:
    depths: dict[tuple[str, int], int] = {}
    seen: dict[tuple[str, int], str] = {}
    for key, rhs in M.rules.items():
        a = key[1]
        for v, s in labelled_nodes(rhs):
            if isinstance(s.label, Call):
                k = (a, s.label.var)
                if k in depths and depths[k] != len(v):
                    return DepthProfile(False, conflict=(seen[k], rule_id(key), a, s.label.var))
                depths[k] = len(v)
                seen.setdefault(k, rule_id(key))
    return DepthProfile(True, depths)


# ---------------------------------------------------------------------------
# la-uniformity


def la_uniform_violations(M: Dtla, rho: dict[str, str]) -> list[str]:
    out = []
    for q in M.states:
        if q not in rho:
            out.append(f"la-map undefined for state {q!r}")
        elif rho[q] not in M.P:
            out.append(f"la-map sends {q!r} to unknown look-ahead state {rho[q]!r}")
    if out:
        return out
    for p, ax in M.axioms.items():
        for c in calls(ax):
            if rho[c.state] != p:
                out.append(f"axiom {p}: state {c.state} has la-map {rho[c.state]}")
    for key, rhs in M.rules.items():
        q, a, ps = key
        if M.la.delta.get((a, ps)) != rho[q]:
            out.append(f"rule {rule_id(key)}: look-ahead {M.la.delta.get((a, ps))} differs from la-map {rho[q]}")
        for c in calls(rhs):
            if rho[c.state] != ps[c.var - 1]:
                out.append(f"rule {rule_id(key)}: call {c} on look-ahead {ps[c.var - 1]}, la-map {rho[c.state]}")
    for q in M.states:
        for a, ps in M.input_keys():
            if M.la.delta[(a, ps)] == rho[q] and (q, a, ps) not in M.rules:
                out.append(f"missing rule {rule_id((q, a, ps))}")
    return out


@dataclass
class LaMapResult:
    ok: bool
    rho: dict[str, str] | None = None
    violation: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def infer_la_map(M: Dtla) -> LaMapResult:
    if M.la_map is not None:
        bad = la_uniform_violations(M, M.la_map)
        return LaMapResult(not bad, dict(M.la_map), bad[0] if bad else None)
    rho: dict[str, str] = {}

    def claim(q: str, p: str, why: str) -> str | None:
        if q in rho and rho[q] != p:
            return f"state {q} needs {rho[q]} and {p} ({why})"
        rho[q] = p
        return None

    for p, ax in M.axioms.items():
        for c in calls(ax):
            err = claim(c.state, p, f"axiom {p}")
            if err:
                return LaMapResult(False, violation=err)
    for key, rhs in M.rules.items():
        q, a, ps = key
        err = claim(q, M.la.delta[(a, ps)], f"rule {rule_id(key)}")
        if err:
            return LaMapResult(False, violation=err)
        for c in calls(rhs):
            err = claim(c.state, ps[c.var - 1], f"rule {rule_id(key)}")
            if err:
                return LaMapResult(False, violation=err)
    for q in M.states:
        rho.setdefault(q, M.P[0])
    bad = la_uniform_violations(M, rho)
    if bad:
        return LaMapResult(False, violation=bad[0])
    return LaMapResult(True, rho)


def require_la_map(M: Dtla) -> dict[str, str]:
    res = infer_la_map(M)
    if not res:
        raise PreconditionViolation(f"not la-uniform: {res.violation}")
    return res.rho


def is_la_uniform(M: Dtla) -> bool:
    return bool(infer_la_map(M))


def with_la_map(M: Dtla) -> Dtla:
    """Copy of M carrying its la-map (raises if M is not la-uniform)."""
    rho = require_la_map(M)
    return M.copy(la_map=rho)


# ---------------------------------------------------------------------------
# earliest / canonical


def rlabs(M: Dtla) -> dict[str, set[str]]:
    require_la_map(M)
    direct: dict[str, set[str]] = {q: set() for q in M.states}
    for (q, _, _), rhs in M.rules.items():
        if not isinstance(rhs.label, Call):
            direct[q].add(rhs.label)
    erase = erasing_graph(M)
    out = {}
    for q in M.states:
        seen = {q}
        todo = [q]
        labs: set[str] = set()
        while todo:
            r = todo.pop()
            labs |= direct[r]
            for r2 in erase[r]:
                if r2 not in seen:
                    seen.add(r2)
                    todo.append(r2)
        out[q] = labs
    return out


def singleton_rlabs(M: Dtla) -> list[str]:
    rl = rlabs(M)
    return [q for q in M.states if len(rl[q]) == 1]


def is_earliest(M: Dtla) -> bool:
    return not singleton_rlabs(M)


def equivalence_classes(M: Dtla) -> list[list[str]]:
    """The largest rule-compatible equivalence on states (valid for earliest M)."""
    rho = require_la_map(M)
    cls = {q: rho[q] for q in M.states}
    keys_by_la: dict[str, list] = {p: [] for p in M.P}
    for a, ps in M.input_keys():
        keys_by_la[M.la.delta[(a, ps)]].append((a, ps))

    def abstract(t: Tree, ids: dict[str, int]) -> Tree:
        if isinstance(t.label, Call):
            return Tree(("call", ids[t.label.state], t.label.var))
        if not t.children:
            return t
        return Tree(t.label, tuple(abstract(c, ids) for c in t.children))

    while True:
        names = sorted(set(cls.values()), key=repr)
        ids = {q: names.index(cls[q]) for q in M.states}
        sig = {}
        for q in M.states:
            parts = [ids[q]]
            for a, ps in keys_by_la[rho[q]]:
                rhs = M.rules.get((q, a, ps))
                parts.append(None if rhs is None else abstract(rhs, ids))
            sig[q] = tuple(parts)
        if len(set(sig.values())) == len(set(cls.values())):
            break
        cls = sig
    groups: dict = {}
    for q in M.states:
        groups.setdefault(cls[q], []).append(q)
    return list(groups.values())


def is_canonical(M: Dtla) -> bool:
    if not is_earliest(M):
        return False
    return all(len(g) == 1 for g in equivalence_classes(M))


# ---------------------------------------------------------------------------
# report


@dataclass
class ClassReport:
    linear: bool
    ultralinear: UltralinearResult
    b_erasing: ErasingResult
    output_monadic: bool
    depth: DepthProfile
    la_uniform: LaMapResult
    initialized: bool
    complete: bool
    total: bool
    earliest: bool | None
    canonical: bool | None
    singleton_rlabs: list[str]

    def to_json(self) -> dict:
        return {
            "linear": self.linear,
            "ultralinear": self.ultralinear.ok,
            "ultralinearWitness": self.ultralinear.mu if self.ultralinear.ok else list(self.ultralinear.violation),
            "bErasing": self.b_erasing.ok,
            "erasingCycle": self.b_erasing.cycle,
            "outputMonadic": self.output_monadic,
            "depthUniform": self.depth.ok,
            "depthProfile": (
                {f"{a},{j}": d for (a, j), d in sorted(self.depth.depths.items())}
                if self.depth.ok
                else list(self.depth.conflict)
            ),
            "laUniform": self.la_uniform.ok,
            "laMap": self.la_uniform.rho if self.la_uniform.ok else self.la_uniform.violation,
            "initialized": self.initialized,
            "complete": self.complete,
            "total": self.total,
            "earliest": "not applicable" if self.earliest is None else self.earliest,
            "canonical": "not applicable" if self.canonical is None else self.canonical,
            "singletonRlabs": self.singleton_rlabs,
        }


def classify(M: Dtla) -> ClassReport:
    la = infer_la_map(M)
    earliest = canonical = None
    singles: list[str] = []
    if la.ok:
        singles = singleton_rlabs(M)
        earliest = not singles
        if earliest:
            canonical = all(len(g) == 1 for g in equivalence_classes(M))
    return ClassReport(
        linear=is_linear(M),
        ultralinear=is_ultralinear(M),
        b_erasing=is_b_erasing(M),
        output_monadic=is_output_monadic(M),
        depth=depth_profile(M),
        la_uniform=la,
        initialized=is_initialized(M),
        complete=is_complete(M),
        total=is_total(M),
        earliest=earliest,
        canonical=canonical,
        singleton_rlabs=singles,
    )
