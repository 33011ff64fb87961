"""Position signs, line classes, line signs, order relations and line variables."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .forms import LinearForm, Symbol, sym
from .ribbon_graph import PSI, OrderedGraph, PreconditionError

TREE = "T"
LOOP = "L0"
LOOP_PLUS = "L+"
LOOP_MINUS = "L-"

# relation names; the second element of each pair is the converse
PREC, SUCC = "prec", "succ"
SUB, SUP = "sub", "sup"
LTIMES, RTIMES = "ltimes", "rtimes"
CONVERSE = {PREC: SUCC, SUCC: PREC, SUB: SUP, SUP: SUB, LTIMES: RTIMES, RTIMES: LTIMES}
GLYPH = {PREC: "≺", SUCC: "≻", SUB: "⊂", SUP: "⊃", LTIMES: "⋉", RTIMES: "⋊"}


class ClashingLineError(PreconditionError):
    pass


@dataclass(frozen=True)
class OrientationData:
    sign_at_position: Mapping[int, int]  # position number -> +1 / -1
    classes: Mapping[str, str]  # line id -> T, L0, L+, L-
    eps: Mapping[str, int]  # ε(l)
    epsilon: Mapping[str, int]  # ϵ(l)
    eta: Mapping[str, int]  # external id -> η(e)

    def lines_in(self, *classes: str) -> list[str]:
        return [l for l, c in self.classes.items() if c in classes]

    @property
    def orientable(self) -> bool:
        return all(c in (TREE, LOOP) for c in self.classes.values())


def orient(ordered: OrderedGraph, relaxed: bool | None = None) -> OrientationData:
    """Signs from the root (odd numbers are +), line classes and line signs."""
    g = ordered.graph
    if relaxed is None:
        relaxed = g.relaxed
    sign = {k: (1 if k % 2 else -1) for k in range(1, 4 * g.n + 1)}
    classes, eps, epsilon = {}, {}, {}
    for l in g.lines:
        i, j = ordered.ends(l.id)
        if l.id in ordered.tree:
            cls = TREE
        elif (i + j) % 2 == 1:
            cls = LOOP
        elif i % 2 == 1:
            cls = LOOP_PLUS
        else:
            cls = LOOP_MINUS
        if cls in (LOOP_PLUS, LOOP_MINUS) and not relaxed:
            raise ClashingLineError(f"line {l.id} joins two {'+' if cls == LOOP_PLUS else '-'} positions")
        classes[l.id] = cls
        if cls in (TREE, LOOP):
            eps[l.id] = 1 if i % 2 == 0 else -1
        else:
            eps[l.id] = 1 if cls == LOOP_MINUS else -1
        pi = g.polarity(ordered.position_of[i])
        pj = g.polarity(ordered.position_of[j])
        # a line joining equal polarities only exists in relaxed mode; +1 by convention
        epsilon[l.id] = 1 if pi == pj or pi == PSI else -1
    eta = {x.id: (1 if ordered.numbering[x.position] % 2 else -1) for x in g.externals}
    return OrientationData(sign, classes, eps, epsilon, eta)


def interval_relation(a: tuple[int, int], b: tuple[int, int]) -> str:
    """Relation of the chord ``a=(i,j)`` to the chord ``b=(p,q)`` (both sorted)."""
    i, j = a
    p, q = b
    if j < p:
        return PREC
    if q < i:
        return SUCC
    if p < i and j < q:
        return SUB
    if i < p and q < j:
        return SUP
    if i < p < j < q:
        return LTIMES
    if p < i < q < j:
        return RTIMES
    raise ValueError(f"chords {a} and {b} share an end")


def point_relation(a: tuple[int, int], k: int) -> str:
    """Relation of the chord ``a`` to the position ``k``: ≺, ≻ or ⊃ (contracts above)."""
    i, j = a
    if j < k:
        return PREC
    if k < i:
        return SUCC
    if i < k < j:
        return SUP
    raise ValueError(f"position {k} is an end of chord {a}")


@dataclass(frozen=True)
class LineRelations:
    lines: Mapping[tuple[str, str], str]  # (l, l') -> relation of l to l'
    externals: Mapping[tuple[str, str], str]  # (l, x) -> relation of l to x

    def of(self, a: str, b: str) -> str:
        return self.lines[(a, b)]

    def to_external(self, l: str, x: str) -> str:
        return self.externals[(l, x)]


def relations(ordered: OrderedGraph) -> LineRelations:
    g = ordered.graph
    ends = {l.id: ordered.ends(l.id) for l in g.lines}
    rel = {}
    ids = [l.id for l in g.lines]
    for a in ids:
        for b in ids:
            if a != b:
                rel[(a, b)] = interval_relation(ends[a], ends[b])
    ext = {}
    for a in ids:
        for x in g.externals:
            ext[(a, x.id)] = point_relation(ends[a], ordered.numbering[x.position])
    return LineRelations(rel, ext)


# --------------------------------------------------------------------------
# line variables


def long_kind(o: OrientationData, line_id: str) -> str:
    return "v" if o.classes[line_id] == TREE else "w"


def line_variables(ordered: OrderedGraph, o: OrientationData) -> dict[Symbol, LinearForm]:
    """Map every position symbol ``s[k]`` to line/external variables.

    For a line (i, j), i < j, the short variable u and the long variable
    (v for tree lines, w for loops) are inverted: ``s = (long ± u)/2``.
    External positions map to ``x[id]``.
    """
    g = ordered.graph
    half = Fraction(1, 2)
    out: dict[Symbol, LinearForm] = {}
    for l in g.lines:
        i, j = ordered.ends(l.id)
        u, w = sym("u", l.id), sym(long_kind(o, l.id), l.id)
        cls = o.classes[l.id]
        if cls in (TREE, LOOP):
            # u = (-1)^{i+1}s_i + (-1)^{j+1}s_j, i.e. odd end minus even end
            si = 1 if i % 2 else -1
            sj = -si
        elif cls == LOOP_PLUS:  # u = s_i - s_j
            si, sj = 1, -1
        else:  # u = s_j - s_i
            si, sj = -1, 1
        out[sym("s", i)] = LinearForm({w: half, u: half * si})
        out[sym("s", j)] = LinearForm({w: half, u: half * sj})
    for x in g.externals:
        out[sym("s", ordered.numbering[x.position])] = LinearForm({sym("x", x.id): Fraction(1)})
    return out


def inverse_line_variables(ordered: OrderedGraph, o: OrientationData) -> dict[Symbol, LinearForm]:
    """Map line/external variables back to position symbols."""
    g = ordered.graph
    out: dict[Symbol, LinearForm] = {}
    for l in g.lines:
        i, j = ordered.ends(l.id)
        cls = o.classes[l.id]
        si = sym("s", i)
        sj = sym("s", j)
        if cls in (TREE, LOOP):
            a = 1 if i % 2 else -1
            out[sym("u", l.id)] = LinearForm({si: Fraction(a), sj: Fraction(-a)})
        elif cls == LOOP_PLUS:
            out[sym("u", l.id)] = LinearForm({si: Fraction(1), sj: Fraction(-1)})
        else:
            out[sym("u", l.id)] = LinearForm({si: Fraction(-1), sj: Fraction(1)})
        out[sym(long_kind(o, l.id), l.id)] = LinearForm({si: Fraction(1), sj: Fraction(1)})
    for x in g.externals:
        out[sym("x", x.id)] = LinearForm({sym("s", ordered.numbering[x.position]): Fraction(1)})
    return out
