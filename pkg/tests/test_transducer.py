import itertools
import random

import pytest

from dtla import Call, Tree, parse, parse_tree
from dtla.diffs import all_trees, at_la
from dtla.errors import UndefinedImage
from dtla.normalize import make_la_uniform
from dtla.transducer import (
    Pair,
    delta_star,
    eval_state,
    eval_tree,
    is_complete,
    is_total,
    maxrhs,
    productive_pairs,
    trim,
    validate,
)
from dtla.trees import BOTTOM, nodes, plug, replace_at, replace_subtrees

from gen import corpus, random_dtla, random_tree

T = parse_tree


@pytest.fixture(scope="module")
def m_ex():
    return corpus("m_ex")


def test_m_ex_valid(m_ex):
    assert validate(m_ex).ok
    assert is_total(m_ex)
    assert not is_complete(m_ex)


def test_delta_star(m_ex):
    assert delta_star(m_ex, T("sigma(sigma(b))")) == "p_b"
    assert delta_star(m_ex, T("p_a")) == "p_a"
    mc = corpus("m_counter")
    assert delta_star(mc, T("sigma(a,a)")) == "p_e"
    assert delta_star(mc, T("a")) == "p_o"


def test_eval(m_ex):
    assert eval_tree(m_ex, T("sigma(sigma(b))")) == T("sigma(sigma(b))")
    assert eval_tree(m_ex, T("sigma(a)")) == T("a")
    assert eval_tree(m_ex, T("sigma(sigma(p_b))")) == T("sigma(sigma(<q,p_b>))")
    assert eval_tree(m_ex, T("sigma(p_a)")) == T("a")


def test_eval_state(m_ex):
    assert eval_state(m_ex, "q", T("b")) == T("b")
    assert eval_state(m_ex, "q", T("sigma(b)")) == T("sigma(b)")
    assert eval_state(m_ex, "q", T("a")) is None
    # q translates nothing in p_a, so no pair leaf either
    assert eval_state(m_ex, "q", T("p_a")) is None


def test_la_uniform_domain():
    M = make_la_uniform(corpus("m_leaves"))
    rho = M.la_map
    for s in all_trees(M.input, 5):
        p = delta_star(M, s)
        for q in M.states:
            assert (eval_state(M, q, s) is not None) == (rho[q] == p)


def test_validate_findings():
    base = corpus("m_ex")
    bad_var = base.copy(rules={**base.rules, ("q", "sigma", ("p_b",)): Tree("sigma", (Tree(Call("q", 3)),))})
    assert any("out of range" in f for f in validate(bad_var).findings)
    bad_axiom = base.copy(axioms={**base.axioms, "p_a": Tree(Call("nope", 0))})
    assert any("unknown state" in f for f in validate(bad_axiom).findings)


def test_not_total_after_deleting_rule(m_ex):
    rules = dict(m_ex.rules)
    del rules[("q", "b", ())]
    assert not is_total(m_ex.copy(rules=rules))


def test_complete_implies_total():
    M = parse(
        """
        input { s:1 a:0 } output { f:1 e:0 }
        lookahead { states p ; delta { a -> p ; s(p) -> p ; } }
        states q ;
        axiom p = q(x0) ;
        rule q(a) -> e ;
        rule q(s(x1:p)) -> f(q(x1)) ;
        """
    )
    assert is_complete(M) and is_total(M)


def test_maxrhs():
    assert maxrhs(corpus("m_ex")) == 2
    assert maxrhs(corpus("m_counter")) == 0
    assert maxrhs(corpus("m_leaves")) == 2


def test_trim_removes_unused_and_empty():
    M = parse(
        """
        input { s:1 a:0 } output { f:1 e:0 }
        lookahead { states p pz ; delta { a -> p ; s(p) -> p ; s(pz) -> pz ; } }
        states q unused ;
        axiom p = q(x0) ;
        axiom pz = e ;
        rule q(a) -> e ;
        rule q(s(x1:p)) -> f(q(x1)) ;
        rule unused(a) -> e ;
        """,
        check=False,
    )
    N = trim(M)
    assert N.states == ("q",)
    assert N.P == ("p",)
    assert trim(N) == N
    for s in all_trees(M.input, 6):
        assert eval_tree(M, s) == eval_tree(N, s)


def test_productive_pairs(m_ex):
    assert productive_pairs(m_ex) == {("q", "p_b")}


# ---------------------------------------------------------------------------
# properties


def _contexts(M, rng, n):
    out = []
    for _ in range(n):
        t = random_tree(rng, M.input, 7)
        v = rng.choice(list(nodes(t)))
        out.append(replace_at(t, v, BOTTOM))
    return out


def test_substitution_law():
    rng = random.Random(3)
    for _ in range(40):
        M = random_dtla(rng, min_la=2)
        for C in _contexts(M, rng, 10):
            s = random_tree(rng, M.input, 5)
            p = delta_star(M, s)
            lhs = eval_tree(M, plug(C, s))
            base = eval_tree(M, at_la(C, p))
            mapping = {Tree(Pair(q, p)): eval_state(M, q, s) for q in M.states}
            try:
                rhs = None if base is None else replace_subtrees(base, mapping)
            except UndefinedImage:
                rhs = None
            assert lhs == rhs


def test_is_total_agrees_with_enumeration():
    rng = random.Random(5)
    checked = 0
    while checked < 40:
        M = random_dtla(rng, drop=0.0)
        rules = dict(M.rules)
        for key in list(rules):
            if rng.random() < 0.3:
                del rules[key]
        N = trim(M.copy(rules=rules))
        expect = all(eval_tree(N, s) is not None for s in all_trees(N.input, 8))
        got = is_total(N)
        assert got == expect
        checked += 1


def test_trim_preserves_eval():
    rng = random.Random(9)
    for _ in range(30):
        M = random_dtla(rng)
        N = trim(M)
        for s in itertools.islice(all_trees(M.input, 7), 200):
            assert eval_tree(M, s) == eval_tree(N, s)
