"""Text format for transducers.

::

    input { sigma:1 a:0 b:0 }
    output { sigma:1 a:0 b:0 }
    lookahead {
      states p_a p_b ;
      delta { a->p_a ; b->p_b ; sigma(p_a)->p_a ; sigma(p_b)->p_b ; }
    }
    states q ;
    axiom p_a = a ;
    axiom p_b = q(x0) ;
    rule q(sigma(x1:p_b)) -> sigma(q(x1)) ;
    rule q(b) -> b ;

An optional ``lamap { q -> p ; }`` section certifies la-uniformity.
``#`` starts a comment that runs to the end of the line.
"""

from __future__ import annotations

import re

from .errors import ParseError, SemanticError
from .transducer import Dtla, LookaheadAutomaton, validate
from .trees import BOTTOM_LABEL, Call, Pair, RankedAlphabet, Tree, to_text

_TOKENS = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)|
    (?P<comment>\#[^\n]*)|
    (?P<arrow>->)|
    (?P<num>\d+(?![A-Za-z_]))|
    (?P<ident>[A-Za-z_][A-Za-z0-9_'@.]*)|
    (?P<punct>[{}(),;:=<>])
    """,
    re.VERBOSE,
)

_VAR = re.compile(r"x(\d+)$")


class _Tokens:
    def __init__(self, text: str):
        self.toks: list[tuple[str, str, int, int]] = []
        line, col, pos = 1, 1, 0
        while pos < len(text):
            m = _TOKENS.match(text, pos)
            if not m:
                raise ParseError(f"unexpected character {text[pos]!r}", line, col)
            kind, val = m.lastgroup, m.group()
            if kind not in ("ws", "comment"):
                if kind == "punct":
                    kind = val
                self.toks.append((kind, val, line, col))
            nl = val.count("\n")
            if nl:
                line += nl
                col = len(val) - val.rfind("\n")
            else:
                col += len(val)
            pos = m.end()
        self.i = 0
        self.eof = (line, col)

    def peek(self, kind: str | None = None, value: str | None = None) -> bool:
        if self.i >= len(self.toks):
            return False
        k, v, _, _ = self.toks[self.i]
        return (kind is None or k == kind) and (value is None or v == value)

    def where(self) -> tuple[int, int]:
        if self.i < len(self.toks):
            return self.toks[self.i][2], self.toks[self.i][3]
        return self.eof

    def take(self, kind: str, value: str | None = None) -> str:
        if not self.peek(kind, value):
            got = self.toks[self.i][1] if self.i < len(self.toks) else "end of input"
            want = value or kind
            raise ParseError(f"expected {want!r}, got {got!r}", *self.where())
        self.i += 1
        return self.toks[self.i - 1][1]

    def done(self) -> bool:
        return self.i >= len(self.toks)


def _term(tk: _Tokens) -> Tree:
    if tk.peek("<"):
        tk.take("<")
        q = tk.take("ident")
        tk.take(",")
        p = tk.take("ident")
        tk.take(">")
        return Tree(Pair(q, p))
    name = tk.take("ident")
    if name == BOTTOM_LABEL:
        return Tree(BOTTOM_LABEL)
    if not tk.peek("("):
        return Tree(name)
    tk.take("(")
    kids = [_term(tk)]
    while tk.peek(","):
        tk.take(",")
        kids.append(_term(tk))
    tk.take(")")
    return Tree(name, tuple(kids))


def _alphabet(tk: _Tokens) -> RankedAlphabet:
    tk.take("{")
    items: dict[str, int] = {}
    while not tk.peek("}"):
        line, col = tk.where()
        name = tk.take("ident")
        tk.take(":")
        rank = int(tk.take("num"))
        if name in items:
            raise ParseError(f"duplicate symbol {name!r}", line, col)
        if name == BOTTOM_LABEL or _VAR.match(name):
            raise ParseError(f"reserved name {name!r}", line, col)
        items[name] = rank
        if tk.peek(","):
            tk.take(",")
    tk.take("}")
    return RankedAlphabet(items)


def _names_until_semicolon(tk: _Tokens) -> list[str]:
    out = []
    while not tk.peek(";"):
        out.append(tk.take("ident"))
    tk.take(";")
    return out


def parse(text: str, check: bool = True) -> Dtla:
    tk = _Tokens(text)
    sigma = delta_ = None
    out_alpha = None
    la_states: list[str] | None = None
    delta: dict = {}
    states: list[str] | None = None
    raw_axioms: list[tuple[str, Tree, int, int]] = []
    raw_rules: list[tuple[str, str, tuple, Tree, int, int]] = []
    la_map: dict[str, str] | None = None

    while not tk.done():
        line, col = tk.where()
        kw = tk.take("ident")
        if kw == "input":
            if sigma is not None:
                raise ParseError("duplicate input section", line, col)
            sigma = _alphabet(tk)
        elif kw == "output":
            if out_alpha is not None:
                raise ParseError("duplicate output section", line, col)
            out_alpha = _alphabet(tk)
        elif kw == "lookahead":
            if la_states is not None:
                raise ParseError("duplicate lookahead section", line, col)
            tk.take("{")
            tk.take("ident", "states")
            la_states = _names_until_semicolon(tk)
            tk.take("ident", "delta")
            tk.take("{")
            while not tk.peek("}"):
                dl, dc = tk.where()
                a = tk.take("ident")
                args: list[str] = []
                if tk.peek("("):
                    tk.take("(")
                    args.append(tk.take("ident"))
                    while tk.peek(","):
                        tk.take(",")
                        args.append(tk.take("ident"))
                    tk.take(")")
                tk.take("arrow")
                p = tk.take("ident")
                tk.take(";")
                if (a, tuple(args)) in delta:
                    raise ParseError(f"duplicate transition for {a}({','.join(args)})", dl, dc)
                delta[(a, tuple(args))] = p
            tk.take("}")
            tk.take("}")
            delta_ = delta
        elif kw == "states":
            if states is not None:
                raise ParseError("duplicate states section", line, col)
            states = _names_until_semicolon(tk)
        elif kw == "axiom":
            p = tk.take("ident")
            tk.take("=")
            t = _term(tk)
            tk.take(";")
            raw_axioms.append((p, t, line, col))
        elif kw == "rule":
            q = tk.take("ident")
            tk.take("(")
            a = tk.take("ident")
            ps: list[str] = []
            if tk.peek("("):
                tk.take("(")
                while True:
                    vl, vc = tk.where()
                    var = tk.take("ident")
                    tk.take(":")
                    if var != f"x{len(ps) + 1}":
                        raise ParseError(f"expected variable x{len(ps) + 1}, got {var!r}", vl, vc)
                    ps.append(tk.take("ident"))
                    if tk.peek(","):
                        tk.take(",")
                        continue
                    break
                tk.take(")")
            tk.take(")")
            tk.take("arrow")
            t = _term(tk)
            tk.take(";")
            raw_rules.append((q, a, tuple(ps), t, line, col))
        elif kw == "lamap":
            if la_map is not None:
                raise ParseError("duplicate lamap section", line, col)
            la_map = {}
            tk.take("{")
            while not tk.peek("}"):
                q = tk.take("ident")
                tk.take("arrow")
                la_map[q] = tk.take("ident")
                tk.take(";")
            tk.take("}")
        else:
            raise ParseError(f"unknown section {kw!r}", line, col)

    for name, val in (("input", sigma), ("output", out_alpha), ("lookahead", la_states)):
        if val is None:
            raise ParseError(f"missing {name} section", *tk.eof)
    states = states or []
    state_set = set(states)

    def convert(t: Tree) -> Tree:
        if isinstance(t.label, str) and t.label in state_set and len(t.children) == 1:
            c = t.children[0]
            m = _VAR.match(c.label) if isinstance(c.label, str) and not c.children else None
            if m:
                return Tree(Call(t.label, int(m.group(1))))
        if not t.children:
            return t
        return Tree(t.label, tuple(convert(c) for c in t.children))

    axioms: dict[str, Tree] = {}
    for p, t, line, col in raw_axioms:
        if p in axioms:
            raise SemanticError(f"duplicate axiom for {p!r} (line {line}, column {col})")
        axioms[p] = convert(t)
    rules: dict = {}
    for q, a, ps, t, line, col in raw_rules:
        key = (q, a, ps)
        if key in rules:
            raise SemanticError(f"duplicate rule for {q}({a}({','.join(ps)})) (line {line}, column {col})")
        rules[key] = convert(t)

    M = Dtla(
        input=sigma,
        output=out_alpha,
        la=LookaheadAutomaton(tuple(la_states), delta_ or {}),
        states=tuple(states),
        rules=rules,
        axioms=axioms,
        la_map=la_map,
    )
    if check:
        report = validate(M)
        if not report.ok:
            raise SemanticError("; ".join(report.findings))
    return M


def _alpha_text(A: RankedAlphabet) -> str:
    return "{ " + " ".join(f"{s}:{r}" for s, r in A.items()) + " }"


def unparse(M: Dtla) -> str:
    lines = [
        f"input {_alpha_text(M.input)}",
        f"output {_alpha_text(M.output)}",
        "lookahead {",
        "  states " + " ".join(M.P) + (" ;" if M.P else ";"),
        "  delta {",
    ]
    for a in M.input:
        for ps in M.keys_for(a):
            if (a, ps) in M.la.delta:
                lhs = f"{a}({','.join(ps)})" if ps else a
                lines.append(f"    {lhs} -> {M.la.delta[(a, ps)]} ;")
    lines += ["  }", "}"]
    lines.append("states " + " ".join(M.states) + (" ;" if M.states else ";"))
    for p in M.P:
        if p in M.axioms:
            lines.append(f"axiom {p} = {to_text(M.axioms[p])} ;")
    qi = {q: i for i, q in enumerate(M.states)}
    ai = {a: i for i, a in enumerate(M.input)}
    pi = {p: i for i, p in enumerate(M.P)}

    def order(key):
        q, a, ps = key
        return (qi.get(q, len(qi)), ai.get(a, len(ai)), tuple(pi.get(p, len(pi)) for p in ps))

    for key in sorted(M.rules, key=order):
        q, a, ps = key
        lhs = f"{a}({', '.join(f'x{i}:{p}' for i, p in enumerate(ps, 1))})" if ps else a
        lines.append(f"rule {q}({lhs}) -> {to_text(M.rules[key])} ;")
    if M.la_map is not None:
        lines.append("lamap {")
        for q in M.states:
            if q in M.la_map:
                lines.append(f"  {q} -> {M.la_map[q]} ;")
        lines.append("}")
    return "\n".join(lines) + "\n"


def load(path) -> Dtla:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def dump(M: Dtla, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(unparse(M))
