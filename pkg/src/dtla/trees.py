"""Ranked trees, patterns, Dewey addresses and the prefix lattice.

Trees are immutable ``Tree(label, children)`` tuples.  A label is normally a
symbol name, but two structured leaf labels are used throughout the package:

* ``Pair(state, la)`` is the output leaf written ``<q,p>``;
* ``Call(state, var)`` is a state call ``q(x_i)`` in a rule right-hand side.

The reserved leaf ``BOTTOM`` (written ``_``) marks holes of patterns and
contexts.
"""

from __future__ import annotations

import re
from collections.abc import Iterable, Iterator, Mapping, Sequence
from typing import NamedTuple, Union

from .errors import (
    ArityMismatch,
    EmptyInput,
    InvalidAddress,
    OverlappingKeys,
    TermSyntaxError,
    UndefinedImage,
)


class Pair(NamedTuple):
    state: str
    la: str

    def __str__(self) -> str:
        return f"<{self.state},{self.la}>"


class Call(NamedTuple):
    state: str
    var: int

    def __str__(self) -> str:
        return f"{self.state}(x{self.var})"


Label = Union[str, Pair, Call]
Address = tuple[int, ...]
Branch = tuple[tuple[Label, int], ...]

BOTTOM_LABEL = "_"


class Tree(NamedTuple):
    label: Label
    children: tuple["Tree", ...] = ()

    def __str__(self) -> str:
        return to_text(self)

    def __repr__(self) -> str:
        return f"Tree({to_text(self)!r})"

    @property
    def is_leaf(self) -> bool:
        return not self.children


BOTTOM = Tree(BOTTOM_LABEL)


def leaf(label: Label) -> Tree:
    return Tree(label, ())


def node(label: Label, *children: Tree) -> Tree:
    return Tree(label, tuple(children))


class RankedAlphabet(dict):
    """Ordered mapping symbol -> rank.  Declaration order is significant."""

    def __init__(self, items: Mapping[str, int] | Iterable[tuple[str, int]] = ()):
        super().__init__(items)
        for sym, rank in self.items():
            if not isinstance(rank, int) or rank < 0:
                raise ValueError(f"bad rank {rank!r} for symbol {sym!r}")

    def symbols_of_rank(self, k: int) -> list[str]:
        return [s for s, r in self.items() if r == k]

    @property
    def constants(self) -> list[str]:
        return self.symbols_of_rank(0)

    @property
    def max_rank(self) -> int:
        return max(self.values(), default=0)

    def index(self, sym: str) -> int:
        for i, s in enumerate(self):
            if s == sym:
                return i
        raise KeyError(sym)


# ---------------------------------------------------------------------------
# basic measures


def size(t: Tree) -> int:
    return 1 + sum(size(c) for c in t.children)


def height(t: Tree) -> int:
    if not t.children:
        return 0
    return 1 + max(height(c) for c in t.children)


def nodes(t: Tree) -> Iterator[Address]:
    """Dewey addresses in pre-order."""
    stack: list[tuple[Address, Tree]] = [((), t)]
    while stack:
        v, s = stack.pop()
        yield v
        for i in range(len(s.children), 0, -1):
            stack.append((v + (i,), s.children[i - 1]))


def labelled_nodes(t: Tree) -> Iterator[tuple[Address, Tree]]:
    stack: list[tuple[Address, Tree]] = [((), t)]
    while stack:
        v, s = stack.pop()
        yield v, s
        for i in range(len(s.children), 0, -1):
            stack.append((v + (i,), s.children[i - 1]))


def bottom_nodes(t: Tree) -> list[Address]:
    """V_bot(t): addresses of bottom leaves, left to right."""
    return [v for v, s in labelled_nodes(t) if s.label == BOTTOM_LABEL]


def leaves_with(t: Tree, pred) -> list[tuple[Address, Tree]]:
    return [(v, s) for v, s in labelled_nodes(t) if pred(s.label)]


def labels(t: Tree) -> set:
    return {s.label for _, s in labelled_nodes(t)}


# ---------------------------------------------------------------------------
# addressing


def subtree(t: Tree, v: Sequence[int]) -> Tree:
    s = t
    for i in v:
        if not 1 <= i <= len(s.children):
            raise InvalidAddress(f"address {format_address(v)} not in tree")
        s = s.children[i - 1]
    return s


def has_node(t: Tree, v: Sequence[int]) -> bool:
    try:
        subtree(t, v)
    except InvalidAddress:
        return False
    return True


def label_at(t: Tree, v: Sequence[int]) -> Label:
    return subtree(t, v).label


def replace_at(t: Tree, v: Sequence[int], t2: Tree) -> Tree:
    if not v:
        return t2
    i = v[0]
    if not 1 <= i <= len(t.children):
        raise InvalidAddress(f"address {format_address(v)} not in tree")
    kids = list(t.children)
    kids[i - 1] = replace_at(kids[i - 1], v[1:], t2)
    return Tree(t.label, tuple(kids))


def format_address(v: Sequence[int]) -> str:
    return ".".join(str(i) for i in v) if v else "eps"


def parse_address(text: str) -> Address:
    text = text.strip()
    if text in ("eps", ""):
        return ()
    try:
        v = tuple(int(x) for x in text.split("."))
    except ValueError:
        raise InvalidAddress(f"malformed address {text!r}") from None
    if any(i < 1 for i in v):
        raise InvalidAddress(f"malformed address {text!r}")
    return v


# ---------------------------------------------------------------------------
# patterns


def fill_pattern(t0: Tree, parts: Sequence[Tree]) -> Tree:
    it = iter(parts)
    count = len(bottom_nodes(t0))
    if count != len(parts):
        raise ArityMismatch(f"pattern has {count} holes, got {len(parts)} parts")

    def go(s: Tree) -> Tree:
        if s.label == BOTTOM_LABEL:
            return next(it)
        if not s.children:
            return s
        return Tree(s.label, tuple(go(c) for c in s.children))

    return go(t0)


def is_prefix(t1: Tree, t2: Tree) -> bool:
    if t1.label == BOTTOM_LABEL:
        return True
    if t1.label != t2.label or len(t1.children) != len(t2.children):
        return False
    return all(is_prefix(a, b) for a, b in zip(t1.children, t2.children))


def meet(t1: Tree, t2: Tree) -> Tree:
    """Binary largest common prefix."""
    if t1 is t2:
        return t1
    if t1.label != t2.label or len(t1.children) != len(t2.children):
        return BOTTOM
    if not t1.children:
        return t1
    return Tree(t1.label, tuple(meet(a, b) for a, b in zip(t1.children, t2.children)))


def lcp(trees: Iterable[Tree]) -> Tree:
    it = iter(trees)
    try:
        acc = next(it)
    except StopIteration:
        raise EmptyInput("lcp of an empty set") from None
    for t in it:
        acc = meet(acc, t)
    return acc


def decompose(prefix: Tree, t: Tree) -> list[Tree]:
    """Parts such that fill_pattern(prefix, parts) == t."""
    out: list[Tree] = []

    def go(p: Tree, s: Tree) -> None:
        if p.label == BOTTOM_LABEL:
            out.append(s)
            return
        if p.label != s.label or len(p.children) != len(s.children):
            raise ValueError("not a prefix")
        for a, b in zip(p.children, s.children):
            go(a, b)

    go(prefix, t)
    return out


def replace_subtrees(t: Tree, mapping: Mapping[Tree, Tree | None]) -> Tree:
    if not mapping:
        return t
    keys = list(mapping)
    for k in keys:
        for k2 in keys:
            if k is not k2 and k != k2 and _occurs_properly(k, k2):
                raise OverlappingKeys(f"{k} is a proper subtree of {k2}")

    def go(s: Tree) -> Tree:
        if s in mapping:
            img = mapping[s]
            if img is None:
                raise UndefinedImage(f"no image for {s}")
            return img
        if not s.children:
            return s
        return Tree(s.label, tuple(go(c) for c in s.children))

    return go(t)


def _occurs_properly(small: Tree, big: Tree) -> bool:
    return any(c == small or _occurs_properly(small, c) for c in big.children)


def map_leaves(t: Tree, fn) -> Tree:
    """Replace every leaf ``s`` by ``fn(s)`` (``fn`` returns a Tree)."""
    if not t.children:
        return fn(t)
    return Tree(t.label, tuple(map_leaves(c, fn) for c in t.children))


# ---------------------------------------------------------------------------
# branches


def branches(t: Tree) -> set[Branch]:
    out: set[Branch] = set()

    def go(s: Tree, acc: Branch) -> None:
        out.add(acc)
        for i, c in enumerate(s.children, 1):
            go(c, acc + ((s.label, i),))

    go(t, ())
    return out


def branch_to(t: Tree, v: Sequence[int]) -> Branch:
    out = []
    s = t
    for i in v:
        out.append((s.label, i))
        s = subtree(s, (i,))
    return tuple(out)


def nod(b: Branch) -> Address:
    return tuple(j for _, j in b)


def format_branch(b: Branch) -> str:
    return "".join(f"({_label_text(d)},{j})" for d, j in b) if b else "eps"


# ---------------------------------------------------------------------------
# contexts


def is_context(t: Tree) -> bool:
    return len(bottom_nodes(t)) == 1


def plug(context: Tree, t: Tree) -> Tree:
    """C[t]: replace the unique hole of ``context`` by ``t``."""
    return fill_pattern(context, [t])


# ---------------------------------------------------------------------------
# text form

_TOKEN = re.compile(
    r"""\s*(?:
        (?P<lt><)|(?P<gt>>)|(?P<lp>\()|(?P<rp>\))|(?P<comma>,)|
        (?P<ident>[A-Za-z_][A-Za-z0-9_'@.]*)
    )""",
    re.VERBOSE,
)


def _label_text(label: Label) -> str:
    return str(label)


def to_text(t: Tree) -> str:
    lab = _label_text(t.label)
    if isinstance(t.label, Call) or not t.children:
        return lab
    return lab + "(" + ",".join(to_text(c) for c in t.children) + ")"


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks = []
    pos = 0
    text = re.sub(r"#[^\n]*", lambda m: " " * len(m.group()), text)
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            ws = len(text[pos:]) - len(text[pos:].lstrip())
            raise TermSyntaxError(f"unexpected character {text[pos + ws]!r} at offset {pos + ws}")
        kind = m.lastgroup
        toks.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    return toks


def parse_tree(text: str) -> Tree:
    """Parse ``sym(t1,...,tk)``, ``_`` and ``<q,p>`` terms.

    Pair leaves become ``Pair`` labels; everything else keeps a string label.
    Calls ``q(x1)`` stay as ordinary nodes here (see ``calls_to_labels``).
    """
    toks = _tokenize(text)
    pos = 0

    def peek(kind: str) -> bool:
        return pos < len(toks) and toks[pos][0] == kind

    def expect(kind: str) -> str:
        nonlocal pos
        if not peek(kind):
            where = toks[pos][2] if pos < len(toks) else len(text)
            raise TermSyntaxError(f"expected {kind} at offset {where} in {text!r}")
        pos += 1
        return toks[pos - 1][1]

    def term() -> Tree:
        nonlocal pos
        if peek("lt"):
            pos += 1
            q = expect("ident")
            expect("comma")
            p = expect("ident")
            expect("gt")
            return Tree(Pair(q, p))
        name = expect("ident")
        if name == BOTTOM_LABEL:
            return BOTTOM
        if not peek("lp"):
            return Tree(name)
        pos += 1
        kids = [term()]
        while peek("comma"):
            pos += 1
            kids.append(term())
        expect("rp")
        return Tree(name, tuple(kids))

    t = term()
    if pos != len(toks):
        raise TermSyntaxError(f"trailing input at offset {toks[pos][2]} in {text!r}")
    return t


_VAR = re.compile(r"x(\d+)$")


def calls_to_labels(t: Tree, states: Iterable[str]) -> Tree:
    """Turn nodes ``q(xi)`` with ``q`` a state into ``Call`` leaves."""
    states = set(states)

    def go(s: Tree) -> Tree:
        if isinstance(s.label, str) and s.label in states and len(s.children) == 1:
            c = s.children[0]
            m = _VAR.match(c.label) if isinstance(c.label, str) and not c.children else None
            if m:
                return Tree(Call(s.label, int(m.group(1))))
        if not s.children:
            return s
        return Tree(s.label, tuple(go(c) for c in s.children))

    return go(t)
