"""Normal forms: initialized, la-uniform, earliest and canonical dtlas.

Generated state names: ``q@p`` for the pair of ``q`` and look-ahead state
``p``, ``q.i`` for the i-th child state split off an earliest step, and
``__q0`` for the fresh initial state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .classify import equivalence_classes, is_earliest, require_la_map, rlabs
from .errors import NotTotal, PreconditionViolation
from .transducer import Dtla, eval_state, is_total, subst_calls, trim
from .trees import Call, Tree, height, size


def _fresh(name: str, taken: set[str]) -> str:
    while name in taken:
        name += "'"
    taken.add(name)
    return name


def _require_total(M: Dtla) -> None:
    if not is_total(M):
        raise NotTotal("transducer is not total")


def make_initialized(M: Dtla) -> Dtla:
    _require_total(M)
    taken = set(M.states) | set(M.output)
    q0 = _fresh("__q0", taken)
    rules = dict(M.rules)
    for a, ps in M.input_keys():
        p = M.delta(a, ps)
        ax = M.axioms.get(p)
        if ax is None:
            continue
        rhs = subst_calls(ax, lambda c: M.rules.get((c.state, a, ps)))
        if rhs is None:
            raise NotTotal(f"no rule for an axiom state on {a}({','.join(ps)})")
        rules[(q0, a, ps)] = rhs
    axioms = {p: Tree(Call(q0, 0)) for p in M.axioms}
    return M.copy(states=(q0,) + M.states, rules=rules, axioms=axioms, la_map=None)


def complete(M: Dtla) -> Dtla:
    """Add a dummy rule with a constant rhs for every missing rule key."""
    missing = [(q, a, ps) for q in M.states for a, ps in M.input_keys() if (q, a, ps) not in M.rules]
    if not missing:
        return M
    if not M.output.constants:
        raise PreconditionViolation("output alphabet has no constant for dummy rules")
    dummy = Tree(M.output.constants[0])
    rules = dict(M.rules)
    for key in missing:
        rules[key] = dummy
    return M.copy(rules=rules)


def make_la_uniform(M: Dtla) -> Dtla:
    _require_total(M)
    M = complete(trim(M))
    taken = set(M.output)
    name = {(q, p): _fresh(f"{q}@{p}", taken) for q in M.states for p in M.P}
    axioms = {
        p: subst_calls(ax, lambda c, p=p: Tree(Call(name[(c.state, p)], 0)))
        for p, ax in M.axioms.items()
    }
    rules = {}
    for (q, a, ps), rhs in M.rules.items():
        p = M.delta(a, ps)
        rules[(name[(q, p)], a, ps)] = subst_calls(
            rhs, lambda c, ps=ps: Tree(Call(name[(c.state, ps[c.var - 1])], c.var))
        )
    states = tuple(name[(q, p)] for q in M.states for p in M.P)
    la_map = {name[(q, p)]: p for q in M.states for p in M.P}
    return trim(M.copy(states=states, rules=rules, axioms=axioms, la_map=la_map))


def representatives(M: Dtla) -> dict[str, Tree]:
    """Per look-ahead state the smallest tree reaching it (ties: preorder symbol order)."""
    order = {a: i for i, a in enumerate(M.input)}
    best: dict[str, tuple[int, tuple, Tree]] = {}
    changed = True
    while changed:
        changed = False
        for (a, ps), p in M.la.delta.items():
            if not all(x in best for x in ps):
                continue
            kids = tuple(best[x][2] for x in ps)
            sz = 1 + sum(best[x][0] for x in ps)
            key = (order[a],) + tuple(k for x in ps for k in best[x][1])
            cand = (sz, key, Tree(a, kids))
            if p not in best or cand[:2] < best[p][:2]:
                best[p] = cand
                changed = True
    return {p: best[p][2] for p in M.P if p in best}


def _fix_outputs(M: Dtla) -> list[Tree]:
    rho = require_la_map(M)
    reps = representatives(M)
    out = []
    for q in M.states:
        t = eval_state(M, q, reps[rho[q]])
        if t is None:
            raise PreconditionViolation(f"state {q} undefined on its representative")
        out.append(t)
    return out


def sumfix(M: Dtla) -> int:
    return sum(size(t) for t in _fix_outputs(M))


def maxfix(M: Dtla) -> int:
    return max((height(t) for t in _fix_outputs(M)), default=0)


def _earliest_step(M: Dtla) -> Dtla | None:
    rho = require_la_map(M)
    rl = rlabs(M)
    d = {q: next(iter(rl[q])) for q in M.states if len(rl[q]) == 1}
    if not d:
        return None
    taken = set(M.states) | set(M.output)
    split = {q: [_fresh(f"{q}.{i}", taken) for i in range(1, M.output[d[q]] + 1)] for q in d}

    def phi(t: Tree) -> Tree:
        def sub(c: Call) -> Tree:
            if c.state in d:
                return Tree(d[c.state], tuple(Tree(Call(n, c.var)) for n in split[c.state]))
            return Tree(c)

        return subst_calls(t, sub)

    axioms = {p: phi(t) for p, t in M.axioms.items()}
    rules = {}
    for (q, a, ps), rhs in M.rules.items():
        new = phi(rhs)
        if q in d:
            if new.label != d[q]:
                raise AssertionError(f"rule of {q} does not start with {d[q]}")
            for n, child in zip(split[q], new.children):
                rules[(n, a, ps)] = child
        else:
            rules[(q, a, ps)] = new
    states = []
    la_map = {}
    for q in M.states:
        for n in split.get(q, [q]):
            states.append(n)
            la_map[n] = rho[q]
    return trim(M.copy(states=tuple(states), rules=rules, axioms=axioms, la_map=la_map))


def earliest_with_steps(M: Dtla) -> tuple[Dtla, int]:
    M = M.copy(la_map=require_la_map(M))
    budget = sumfix(M)
    current = budget
    steps = 0
    while True:
        N = _earliest_step(M)
        if N is None:
            return M, steps
        steps += 1
        nxt = sumfix(N)
        if nxt >= current or steps > budget:
            raise AssertionError("earliest transformation failed to decrease sumfix")
        current = nxt
        M = N


def make_earliest(M: Dtla) -> Dtla:
    return earliest_with_steps(M)[0]


def canonicalize(M: Dtla) -> Dtla:
    if not is_earliest(M):
        raise PreconditionViolation("canonicalize needs an earliest dtla")
    rho = require_la_map(M)
    rep = {}
    for group in equivalence_classes(M):
        for q in group:
            rep[q] = group[0]
    keep = [q for q in M.states if rep[q] == q]

    def rename(t: Tree) -> Tree:
        return subst_calls(t, lambda c: Tree(Call(rep[c.state], c.var)))

    rules = {k: rename(r) for k, r in M.rules.items() if rep[k[0]] == k[0]}
    axioms = {p: rename(t) for p, t in M.axioms.items()}
    return trim(
        M.copy(
            states=tuple(keep),
            rules=rules,
            axioms=axioms,
            la_map={q: rho[q] for q in keep},
        )
    )


# ---------------------------------------------------------------------------
# pipeline

STAGES = ("initialized", "uniform", "earliest", "canonical")


@dataclass
class NormalizationTrace:
    stages: list[tuple[str, Dtla]] = field(default_factory=list)
    sumfix: int | None = None
    maxfix: int | None = None
    earliest_steps: int = 0

    @property
    def result(self) -> Dtla:
        return self.stages[-1][1]

    def to_json(self) -> dict:
        return {
            "stages": [
                {"stage": name, "states": len(M.states), "rules": len(M.rules)} for name, M in self.stages
            ],
            "sumfix": self.sumfix,
            "maxfix": self.maxfix,
            "earliestSteps": self.earliest_steps,
            "boundTransport": f"h + {self.earliest_steps}",
        }


def normalize(M: Dtla, to: str = "canonical") -> NormalizationTrace:
    if to not in STAGES:
        raise ValueError(f"unknown stage {to!r}")
    M = trim(M)
    _require_total(M)
    trace = NormalizationTrace([("input", M)])
    if to == "initialized":
        trace.stages.append(("initialized", make_initialized(M)))
        return trace
    U = make_la_uniform(M)
    trace.stages.append(("uniform", U))
    trace.sumfix = sumfix(U)
    trace.maxfix = maxfix(U)
    if to == "uniform":
        return trace
    E, steps = earliest_with_steps(U)
    trace.earliest_steps = steps
    trace.stages.append(("earliest", E))
    if to == "earliest":
        return trace
    trace.stages.append(("canonical", canonicalize(E)))
    return trace


def transport_bound(h: int, trace: NormalizationTrace) -> int:
    """Difference bound for the last stage given one for the input.

    Uniformization and merging equivalent states keep the set of difference
    trees' heights; each earliest step can raise it by at most one.
    """
    return h + trace.earliest_steps


def bound_from_initialized(h_init: int, M: Dtla) -> int:
    from .transducer import maxrhs

    return max(h_init, maxrhs(M))
