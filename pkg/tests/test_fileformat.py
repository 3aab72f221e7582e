import pytest

from dtla import parse, unparse
from dtla.classify import is_la_uniform
from dtla.errors import ParseError, SemanticError

from gen import CORPUS, corpus

HEAD = """
input { s:1 a:0 }
output { f:1 e:0 }
lookahead { states p ; delta { a -> p ; s(p) -> p ; } }
states q ;
axiom p = q(x0) ;
"""


def test_m_ex_parses_and_is_la_uniform():
    M = corpus("m_ex")
    assert M.P == ("p_a", "p_b")
    assert M.states == ("q",)
    assert is_la_uniform(M)


@pytest.mark.parametrize("path", sorted(CORPUS.glob("*.dtla")), ids=lambda p: p.stem)
def test_round_trip(path):
    M = parse(path.read_text())
    text = unparse(M)
    assert parse(text) == M
    assert unparse(parse(text)) == text


def test_duplicate_rule():
    with pytest.raises(SemanticError):
        parse(HEAD + "rule q(a) -> e ; rule q(a) -> f(e) ; rule q(s(x1:p)) -> e ;")


def test_syntax_error_position():
    with pytest.raises(ParseError) as exc:
        parse("input { a:0 }\noutput { e:0 \nstates ;")
    assert exc.value.line == 3


def test_unknown_symbol_and_rank():
    with pytest.raises(SemanticError):
        parse(HEAD + "rule q(a) -> g ; rule q(s(x1:p)) -> e ;")
    with pytest.raises(SemanticError):
        parse(HEAD + "rule q(a) -> f ; rule q(s(x1:p)) -> e ;")


def test_non_total_delta():
    with pytest.raises(SemanticError):
        parse(
            """
            input { s:1 a:0 } output { e:0 }
            lookahead { states p ; delta { a -> p ; } }
            states ; axiom p = e ;
            """
        )


def test_variable_out_of_range():
    with pytest.raises(SemanticError):
        parse(HEAD + "rule q(a) -> e ; rule q(s(x1:p)) -> f(q(x2)) ;")


def test_comments_and_lamap():
    M = parse(HEAD + "# a comment\nrule q(a) -> e ; rule q(s(x1:p)) -> f(q(x1)) ;\nlamap { q -> p ; }")
    assert M.la_map == {"q": "p"}
    assert "lamap" in unparse(M)
