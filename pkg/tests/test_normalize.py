import itertools
import random

import pytest

from dtla import Call, Tree, parse, parse_tree
from dtla.classify import (
    equivalence_classes,
    is_b_erasing,
    is_canonical,
    is_earliest,
    is_la_uniform,
    is_ultralinear,
    rlabs,
)
from dtla.diffs import all_trees
from dtla.errors import NotTotal, PreconditionViolation
from dtla.normalize import (
    canonicalize,
    complete,
    earliest_with_steps,
    make_earliest,
    make_initialized,
    make_la_uniform,
    maxfix,
    normalize,
    representatives,
    sumfix,
    transport_bound,
)
from dtla.transducer import delta_star, eval_tree, is_complete, maxrhs
from dtla.trees import to_text

from gen import corpus, random_dtla, random_tree, random_ultralinear

T = parse_tree


def test_make_initialized_adds_one_state():
    for name in ["m_ex", "m_leaves", "m_three", "abc"]:
        M = corpus(name)
        N = make_initialized(M)
        assert len(N.states) == len(M.states) + 1
        assert N.states[0] == "__q0"
        assert all(ax == Tree(Call("__q0", 0)) for ax in N.axioms.values())
        assert maxrhs(N) <= 2 * maxrhs(M)


def test_make_initialized_counter():
    N = make_initialized(corpus("m_counter"))
    assert N.states == ("__q0",)
    assert N.rules[("__q0", "a", ())] == T("o")
    assert N.rules[("__q0", "sigma", ("p_o", "p_o"))] == T("e")
    assert N.rules[("__q0", "sigma", ("p_e", "p_o"))] == T("o")


def test_make_initialized_twice_adds_again():
    N = make_initialized(make_initialized(corpus("m_ex")))
    assert len(N.states) == 3


def test_not_total_rejected():
    M = corpus("m_ex")
    rules = dict(M.rules)
    del rules[("q", "b", ())]
    with pytest.raises(NotTotal):
        make_initialized(M.copy(rules=rules))
    with pytest.raises(NotTotal):
        make_la_uniform(M.copy(rules=rules))


def test_complete_uses_first_constant():
    M = complete(corpus("m_ex"))
    assert is_complete(M)
    assert M.rules[("q", "a", ())] == Tree(M.output.constants[0])


def test_make_la_uniform_m_leaves():
    U = make_la_uniform(corpus("m_leaves"))
    assert U.states == ("q@p_aa", "q@p_ab", "q@p_ba", "q@p_bb")
    assert U.la_map == {f"q@p_{yz}": f"p_{yz}" for yz in ["aa", "ab", "ba", "bb"]}
    assert U.axioms["p_ab"] == Tree(Call("q@p_ab", 0))
    assert U.rules[("q@p_ab", "sigma", ("p_aa", "p_bb"))] == Tree(
        "sigma",
        (Tree(Call("q@p_aa", 1)), Tree(Call("q@p_bb", 2)), T("hash(a,b)")),
    )
    assert is_la_uniform(U)


def test_make_la_uniform_m_ex_isomorphic():
    M = corpus("m_ex")
    U = make_la_uniform(M)
    assert U.states == ("q@p_b",)
    assert len(U.rules) == len(M.rules)
    assert maxrhs(U) == maxrhs(M)


def test_representatives():
    assert representatives(corpus("m_ex")) == {"p_a": T("a"), "p_b": T("b")}
    assert representatives(corpus("depgraph")) == {"p_a": T("a"), "p_b": T("b")}
    assert representatives(corpus("m_counter")) == {"p_o": T("a"), "p_e": T("sigma(a,a)")}


def test_representatives_reach_their_state():
    rng = random.Random(31)
    for _ in range(40):
        M = random_dtla(rng)
        for p, s in representatives(M).items():
            assert delta_star(M, s) == p
            n = len(list(_nodes(s)))
            smaller = [t for t in all_trees(M.input, n - 1) if delta_star(M, t) == p]
            assert not smaller


def _nodes(t):
    yield t
    for c in t.children:
        yield from _nodes(c)


def test_sumfix():
    assert sumfix(corpus("m_ex")) == 1
    assert sumfix(make_la_uniform(corpus("m_leaves"))) == 4
    assert sumfix(corpus("m_counter").copy(la_map={})) == 0
    assert maxfix(corpus("m_ex")) == 0


def test_leafsets_earliest():
    E, steps = earliest_with_steps(corpus("leafsets"))
    assert steps == 1
    assert E.states == ("q_a", "q_b", "q_ab.1", "q_ab.2")
    assert to_text(E.axioms["p_ab"]) == "sigma_ab(q_ab.1(x0),q_ab.2(x0))"
    assert to_text(E.axioms["p_a"]) == "q_a(x0)"
    R = E.rules
    for z in ["p_a", "p_b", "p_ab"]:
        assert to_text(R[("q_ab.1", "sigma", ("p_ab", z))]) == "sigma_ab(q_ab.1(x1),q_ab.2(x1))"
        assert to_text(R[("q_ab.2", "sigma", (z, "p_ab"))]) == "sigma_ab(q_ab.1(x2),q_ab.2(x2))"
    assert to_text(R[("q_ab.1", "sigma", ("p_a", "p_b"))]) == "q_a(x1)"
    assert to_text(R[("q_ab.1", "sigma", ("p_b", "p_ab"))]) == "q_b(x1)"
    assert to_text(R[("q_ab.2", "sigma", ("p_ab", "p_a"))]) == "q_a(x2)"
    assert to_text(R[("q_a", "sigma", ("p_a", "p_a"))]) == "sigma_a(q_a(x1),q_a(x2))"
    rl = rlabs(E)
    full = set(E.output)
    assert rl["q_ab.1"] == rl["q_ab.2"] == full
    assert rl["q_a"] == {"sigma_a", "a"}
    assert is_earliest(E) and is_canonical(E)


def test_earliest_is_noop_when_earliest():
    M = corpus("m_ex")
    assert make_earliest(M) == M.copy(la_map={"q": "p_b"})


def test_erasing_chain_rules():
    M = parse(
        """
        input { s:1 a:0 } output { f:1 e:0 }
        lookahead { states p ; delta { a -> p ; s(p) -> p ; } }
        states q r ;
        axiom p = q(x0) ;
        rule q(a) -> f(e) ;
        rule q(s(x1:p)) -> r(x1) ;
        rule r(a) -> f(e) ;
        rule r(s(x1:p)) -> f(r(x1)) ;
        """
    )
    E = make_earliest(M)
    assert to_text(E.rules[("q.1", "s", ("p",))]) == "r.1(x1)"
    assert is_earliest(E)


def test_canonicalize_merges_duplicates():
    M = parse(
        """
        input { s:1 a:0 } output { f:1 e:0 c:0 }
        lookahead { states p ; delta { a -> p ; s(p) -> p ; } }
        states q r ;
        axiom p = f(q(x0)) ;
        rule q(a) -> e ;
        rule q(s(x1:p)) -> f(r(x1)) ;
        rule r(a) -> e ;
        rule r(s(x1:p)) -> f(q(x1)) ;
        """
    )
    C = canonicalize(M)
    assert C.states == ("q",)
    assert to_text(C.rules[("q", "s", ("p",))]) == "f(q(x1))"
    assert is_canonical(C)


def test_canonicalize_needs_earliest():
    with pytest.raises(PreconditionViolation):
        canonicalize(corpus("leafsets"))


def test_canonical_m_leaves_unchanged():
    U = make_la_uniform(corpus("m_leaves"))
    assert canonicalize(U) == U


def test_trace_and_transport():
    tr = normalize(corpus("m_ex"))
    assert [n for n, _ in tr.stages] == ["input", "uniform", "earliest", "canonical"]
    assert tr.sumfix == 1 and tr.earliest_steps == 0
    assert transport_bound(289, tr) == 289
    tr = normalize(corpus("leafsets"))
    assert tr.sumfix == 5 and tr.earliest_steps == 1
    assert transport_bound(10, tr) == 11
    assert tr.to_json()["stages"][-1]["states"] == 4
    assert normalize(corpus("m_ex"), "initialized").result.states[0] == "__q0"
    with pytest.raises(ValueError):
        normalize(corpus("m_ex"), "bogus")


# ---------------------------------------------------------------------------
# properties


def _same_semantics(M, N, rng, exhaustive=7, randoms=100):
    for s in all_trees(M.input, exhaustive):
        assert eval_tree(M, s) == eval_tree(N, s), s
    for _ in range(randoms):
        s = random_tree(rng, M.input, 25)
        assert eval_tree(M, s) == eval_tree(N, s), s


def test_stages_preserve_semantics():
    rng = random.Random(41)
    for _ in range(40):
        M = random_dtla(rng)
        tr = normalize(M)
        for name, N in tr.stages[1:]:
            _same_semantics(M, N, rng, randoms=30)
        _same_semantics(M, make_initialized(M), rng, randoms=30)
        C = tr.result
        assert is_canonical(C)
        assert all(len(g) == 1 for g in equivalence_classes(C))
        assert all(len(v) != 1 for v in rlabs(C).values())


def test_la_uniform_preserves_classes():
    rng = random.Random(43)
    for _ in range(25):
        M = random_ultralinear(rng)
        U = make_la_uniform(M)
        assert is_ultralinear(U).ok and is_b_erasing(U).ok
        I = make_initialized(M)
        assert is_ultralinear(I).ok and is_b_erasing(I).ok


def test_sumfix_decreases_per_step():
    rng = random.Random(47)
    for _ in range(30):
        U = make_la_uniform(random_dtla(rng))
        E, steps = earliest_with_steps(U)
        assert steps <= sumfix(U)
        assert sumfix(E) <= sumfix(U)


def test_canonical_idempotent():
    rng = random.Random(53)
    for M in itertools.islice((random_dtla(rng) for _ in itertools.count()), 20):
        C = normalize(M).result
        assert canonicalize(C) == C
