import random

import pytest

from dtla import Call, Pair, Tree, parse, unparse
from dtla import parse_tree as T
from dtla.diffs import all_trees
from dtla.errors import NotApplicable, NotTotal
from dtla.normalize import normalize
from dtla.removal import (
    MalformedTuple,
    MissingRho,
    omega,
    phi,
    remove_lookahead,
    rhs_m_phi,
)
from dtla.transducer import eval_tree
from dtla.trees import height, to_text

from gen import corpus, random_dtla, random_tree


# copies in one state and erases unevenly: no class bound applies
OUT_OF_CLASS = """
input { a:0 b:0 s:1 }
output { e:0 c:0 f:1 g:2 }
lookahead { states p0 p1 ; delta { a -> p0 ; b -> p1 ; s(p0) -> p0 ; s(p1) -> p1 ; } }
states q0 q1 ;
axiom p0 = g(q1(x0),q0(x0)) ;
axiom p1 = q0(x0) ;
rule q0(a) -> c ;
rule q0(b) -> g(e,c) ;
rule q0(s(x1:p0)) -> f(q0(x1)) ;
rule q0(s(x1:p1)) -> g(q0(x1),q1(x1)) ;
rule q1(a) -> g(e,c) ;
rule q1(b) -> c ;
rule q1(s(x1:p0)) -> q0(x1) ;
rule q1(s(x1:p1)) -> q0(x1) ;
"""


def _pair(q, p):
    return Tree(Pair(q, p))


def test_omega_phi():
    t = Tree("sigma", (Tree(Call("q", 1)),))
    assert omega(t, {"q": "p_b"}) == Tree("sigma", (_pair("q", "p_b"),))
    assert phi(omega(t, {"q": "p_b"})) == T("sigma(_)")
    with pytest.raises(MissingRho):
        omega(t, {})
    assert phi(T("sigma(a)")) == T("sigma(a)")


def test_rhs_m_phi_m_ex():
    C = normalize(corpus("m_ex")).result
    n = 3
    comp = _pair("q@p_b", "p_b")
    for _ in range(n):
        comp = Tree("sigma", (comp,))
    tup = (T("a"), comp)
    got = rhs_m_phi(C, tup, "sigma", ("p_b",))
    assert to_text(got) == "sigma(" * (n + 1) + "q@p_b(x1)" + ")" * (n + 1)
    assert rhs_m_phi(C, tup, "sigma", ("p_a",)) == T("a")
    assert rhs_m_phi(C, tup, "b", ()) == T("sigma(sigma(sigma(b)))")


def test_rhs_m_phi_m_leaves():
    C = normalize(corpus("m_leaves")).result
    tup = tuple(_pair(f"q@{p}", p) for p in C.P)
    got = rhs_m_phi(C, tup, "sigma", ("p_ab", "p_ba"))
    assert to_text(got) == "sigma(q@p_ab(x1),q@p_ba(x2),hash(a,a))"


def test_rhs_m_phi_malformed():
    C = normalize(corpus("m_ex")).result
    with pytest.raises(MalformedTuple):
        rhs_m_phi(C, (T("a"), _pair("q@p_b", "p_a")), "b", ())


def test_m_leaves_auto():
    out = remove_lookahead(corpus("m_leaves"))
    assert out.answer == "yes" and out.bound == 1153
    N = out.dtop
    assert N.states == ("s0", "s1", "s2")
    assert N.P == ("any",)
    assert out.tuples["s0"] == ["<q@p_aa,p_aa>", "<q@p_ab,p_ab>", "<q@p_ba,p_ba>", "<q@p_bb,p_bb>"]
    assert out.tuples["s1"] == ["a", "a", "b", "b"]
    assert out.tuples["s2"] == ["a", "b", "a", "b"]
    R = {(q, a): to_text(r) for (q, a, _), r in N.rules.items()}
    assert R[("s0", "sigma")] == "sigma(s0(x1),s0(x2),hash(s1(x1),s2(x2)))"
    assert R[("s1", "sigma")] == "s1(x1)"
    assert R[("s2", "sigma")] == "s2(x2)"
    for yz in ["aa", "ab", "ba", "bb"]:
        assert R[("s0", yz)] == yz
        assert R[("s1", yz)] == yz[0]
        assert R[("s2", yz)] == yz[1]


def test_m_ex_height_exceeded():
    out = remove_lookahead(corpus("m_ex"), bound=289)
    assert out.answer == "no" and out.reason == "height-exceeded"
    w = out.witness
    assert w["attempted"] == "s290" and w["component"] == 2 and w["height"] == 290
    assert w["tuple"][0] == "a"
    assert height(T(w["tuple"][1].replace("<q@p_b,p_b>", "b"))) == 290
    assert len(out.tuples) == 290


def test_m_ex_small_bound_scales():
    for h in (0, 3, 10):
        w = remove_lookahead(corpus("m_ex"), bound=h).witness
        assert w["height"] == h + 1


def test_m_ex_unbounded_hits_cap():
    out = remove_lookahead(corpus("m_ex"), bound="unbounded", cap=50)
    assert out.answer == "unknown" and out.reason == "cap-exceeded"


def test_counter_ambiguous():
    for b in (1, 5, "auto"):
        out = remove_lookahead(corpus("m_counter"), bound=b)
        assert out.answer == "no" and out.reason == "ambiguous-child-index"
        assert out.witness["state"] == "s0" and out.witness["symbol"] == "sigma"


def test_eqtest_property_a():
    out = remove_lookahead(corpus("eqtest"))
    assert out.answer == "no" and out.reason == "property-A-violation"
    w = out.witness
    assert (w["state"], w["symbol"], w["vector"]) == ("s0", "sigma", ["p_a", "p_sigma"])
    assert w["clause"] == "purity" and w["subtree"] == "a(q@p_sigma(x2))"
    assert out.dtop is not None


def test_eqtest_variants():
    out = remove_lookahead(corpus("eqtest_last_a"))
    assert out.reason == "no-child-index"
    out = remove_lookahead(corpus("eqtest_first_sigma"))
    assert out.reason == "ambiguous-child-index" and out.witness["indices"] == [1, 2]


def test_abc_and_three():
    out = remove_lookahead(corpus("abc"))
    assert out.answer == "yes"
    R = {(q, a): to_text(r) for (q, a, _), r in out.dtop.rules.items()}
    assert R == {("s0", "sigma"): "s0(x1)", ("s0", "a"): "a", ("s0", "b"): "sigma(b)", ("s0", "c"): "sigma(sigma(c))"}
    assert remove_lookahead(corpus("m_three")).answer == "yes"


def test_bypass_for_single_lookahead():
    M = random_dtla(random.Random(5), max_la=1)
    out = remove_lookahead(M)
    assert out.answer == "yes" and out.reason == "already-dtop-bypass"


def test_errors():
    M = corpus("m_ex")
    rules = dict(M.rules)
    del rules[("q", "b", ())]
    with pytest.raises(NotTotal):
        remove_lookahead(M.copy(rules=rules))
    with pytest.raises(NotApplicable):
        remove_lookahead(parse(OUT_OF_CLASS), bound="auto")


def test_bincopy_node_cap():
    out = remove_lookahead(corpus("bincopy"), bound="unbounded", node_cap=2000)
    assert out.answer == "unknown" and out.witness["nodeCap"] == 2000


def test_json_shape():
    data = remove_lookahead(corpus("m_ex"), bound=3).to_json()
    assert data["answer"] == "no" and data["bound"] == 3
    assert set(data) >= {"answer", "reason", "bound", "witness", "states", "normalization"}


# ---------------------------------------------------------------------------
# properties


def _agree(M, N, rng, size=7, randoms=200):
    for s in all_trees(M.input, size):
        assert eval_tree(N, s) == eval_tree(M, s), to_text(s)
    for _ in range(randoms):
        s = random_tree(rng, M.input, 30)
        assert eval_tree(N, s) == eval_tree(M, s), to_text(s)


def test_returned_dtops_are_equivalent():
    rng = random.Random(81)
    yes = 0
    for _ in range(80):
        M = random_dtla(rng, min_la=2)
        out = remove_lookahead(M, bound=8, node_cap=5000)
        if out.answer == "yes":
            yes += 1
            _agree(M, out.dtop, rng)
            # every component i only carries pair leaves over the i-th look-ahead state
            C = out.canonical
            for row in out.tuples.values():
                for p, comp in zip(C.P, row):
                    for tok in comp.split("<")[1:]:
                        assert tok.split(">")[0].endswith("," + p)
    assert yes >= 10


def test_deterministic_output():
    for name in ["m_leaves", "m_three", "abc"]:
        a = unparse(remove_lookahead(corpus(name)).dtop)
        b = unparse(remove_lookahead(corpus(name)).dtop)
        assert a == b


def test_refusal_monotone_in_bound():
    rng = random.Random(83)
    for _ in range(40):
        M = random_dtla(rng, min_la=2)
        small = remove_lookahead(M, bound=2, node_cap=5000)
        if small.answer != "no" or small.reason == "height-exceeded":
            continue
        big = remove_lookahead(M, bound=12, node_cap=5000)
        assert big.reason == small.reason


def test_height_witness_reverifies():
    rng = random.Random(85)
    for _ in range(40):
        M = random_dtla(rng, min_la=2)
        out = remove_lookahead(M, bound=1, node_cap=5000)
        if out.reason == "height-exceeded":
            w = out.witness
            comp = w["tuple"][w["component"] - 1]
            assert w["height"] == _text_height(comp) > w["bound"]


def _text_height(text):
    # pair leaves <q,p> contain a comma, so count parentheses depth instead
    depth = best = 0
    for ch in text:
        if ch == "(":
            depth += 1
            best = max(best, depth)
        elif ch == ")":
            depth -= 1
    return best
