"""Exact oscillation phases of a ribbon graph.

Everything here is symbolic: vertex phases in position variables ``s[k]``,
their rewriting in line variables (short ``u``, long ``v``/``w``, externals
``x``), branch delta functions, the closed-form rosette factors (general,
orientable and planar regular), and the brute-force oracle that expands the
raw vertex phases and reduces them modulo the delta functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .forms import LinearForm, OmegaPoly, PhaseForm, Symbol, rref_substitution, sym, sym_kind, var
from .orientation import (
    LOOP,
    LOOP_MINUS,
    LOOP_PLUS,
    LTIMES,
    PREC,
    RTIMES,
    SUB,
    SUCC,
    SUP,
    TREE,
    LineRelations,
    OrientationData,
    line_variables,
    long_kind,
)
from .ribbon_graph import OrderedGraph, PreconditionError
from .topology import TopologyReport

HALF = Fraction(1, 2)
ELIMINABLE_KINDS = ("x", "s", "u", "v", "w")


def _sign(k: int) -> int:
    """(-1)^{k+1}: +1 on odd positions."""
    return 1 if k % 2 else -1


# --------------------------------------------------------------------------
# delta systems


@dataclass(frozen=True)
class DeltaSystem:
    """A list of labelled delta-function arguments (linear forms set to zero)."""

    labels: tuple[str, ...]
    forms: tuple[LinearForm, ...]

    def __len__(self) -> int:
        return len(self.forms)

    def __getitem__(self, label: str) -> LinearForm:
        return self.forms[self.labels.index(label)]

    @property
    def root(self) -> LinearForm:
        return self["root"]

    def as_dict(self) -> dict[str, str]:
        return {lab: str(f) for lab, f in zip(self.labels, self.forms)}

    def substitute(self, subst: Mapping[Symbol, LinearForm]) -> "DeltaSystem":
        return DeltaSystem(self.labels, tuple(f.substitute(subst) for f in self.forms))

    def solution(self, eligible=None) -> dict[Symbol, LinearForm]:
        """Pivot map solving the system; each pivot is the largest eligible symbol."""
        if eligible is None:
            eligible = lambda s: sym_kind(s) in ELIMINABLE_KINDS  # noqa: E731
        return rref_substitution(self.forms, eligible)

    def rank(self) -> int:
        return len(rref_substitution(self.forms))

    def equivalent(self, other: "DeltaSystem") -> bool:
        """Same solution set, i.e. the two lists of forms span the same space."""
        r = self.rank()
        return r == other.rank() == len(rref_substitution(self.forms + other.forms))

    def reduce(self, phase: PhaseForm) -> PhaseForm:
        return phase.substitute(self.solution())


def reduce_modulo(phase: PhaseForm, deltas: DeltaSystem) -> PhaseForm:
    """Canonical representative of ``phase`` on the support of the deltas."""
    return deltas.reduce(phase)


# --------------------------------------------------------------------------
# raw vertex phases


def _vertex_numbers(ordered: OrderedGraph) -> dict[str, list[int]]:
    out: dict[str, list[int]] = {v.id: [] for v in ordered.graph.vertices}
    for (vid, _), k in ordered.numbering.items():
        out[vid].append(k)
    for ks in out.values():
        ks.sort()
    return out


def vertex_phases(ordered: OrderedGraph) -> tuple[PhaseForm, DeltaSystem]:
    """Sum of the alternating vertex wedges, plus one delta per vertex.

    Positions of a vertex are met in cyclic order by the tour, so sorting them
    by global number gives the cyclic order starting at the arrival position;
    parities of global and local indices agree, hence the signs
    ``(-1)^{i+j+1}`` can be read on the global numbers.
    """
    phase = PhaseForm()
    labels, forms = [], []
    for vid, ks in _vertex_numbers(ordered).items():
        for a in range(len(ks)):
            for b in range(a + 1, len(ks)):
                i, j = ks[a], ks[b]
                phase._add_wedge(sym("s", i), sym("s", j), Fraction(-_sign(i) * _sign(j)))
        labels.append(f"vertex:{vid}")
        forms.append(LinearForm({sym("s", k): Fraction(_sign(k)) for k in ks}))
    phase._clean()
    return phase, DeltaSystem(tuple(labels), tuple(forms))


def brute_force_phase(ordered: OrderedGraph, o: OrientationData) -> PhaseForm:
    """Oracle: expand the raw vertex phases in line variables, reduce modulo the vertex deltas."""
    raw, deltas = vertex_phases(ordered)
    lv = line_variables(ordered, o)
    return deltas.substitute(lv).reduce(raw.substitute(lv))


def vertex_deltas(ordered: OrderedGraph, o: OrientationData) -> DeltaSystem:
    """The per-vertex delta functions written in line variables."""
    _, deltas = vertex_phases(ordered)
    return deltas.substitute(line_variables(ordered, o))


def agrees_with_oracle(ordered: OrderedGraph, o: OrientationData, phase: PhaseForm) -> bool:
    """Does ``phase`` equal the brute-force phase on the support of the vertex deltas?"""
    deltas = vertex_deltas(ordered, o)
    return deltas.reduce(phase) == brute_force_phase(ordered, o)


# --------------------------------------------------------------------------
# branches and branch deltas


def _children(ordered: OrderedGraph) -> dict[str, str]:
    """Tree line -> the vertex just above it (the end visited second)."""
    out = {}
    for lid in ordered.tree:
        _, j = ordered.ends(lid)
        out[lid] = ordered.position_of[j][0]
    return out


def branch(ordered: OrderedGraph, line_id: str) -> frozenset[str]:
    """Vertices above the tree line: those whose path to the root uses it."""
    g = ordered.graph
    start = _children(ordered)[line_id]
    adj: dict[str, list[str]] = {v.id: [] for v in g.vertices}
    for lid in ordered.tree:
        if lid == line_id:
            continue
        a, b = g.line[lid].end_a[0], g.line[lid].end_b[0]
        adj[a].append(b)
        adj[b].append(a)
    seen, todo = {start}, [start]
    while todo:
        v = todo.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                todo.append(w)
    return frozenset(seen)


def branch_lines(ordered: OrderedGraph, line_id: str) -> list[str]:
    """Lines with both ends inside the branch of a tree line."""
    b = branch(ordered, line_id)
    return [l.id for l in ordered.graph.lines if l.end_a[0] in b and l.end_b[0] in b]


def _class_variable(o: OrientationData, lid: str) -> LinearForm:
    """What the two signed ends of a line add up to: u, w or -w."""
    cls = o.classes[lid]
    if cls in (TREE, LOOP):
        return var("u", lid)
    return var("w", lid) if cls == LOOP_PLUS else -var("w", lid)


def _collapsed_sum(ordered: OrderedGraph, o: OrientationData, vertices: Iterable[str]) -> LinearForm:
    g = ordered.graph
    vs = set(vertices)
    out = LinearForm()
    for l in g.lines:
        ina, inb = l.end_a[0] in vs, l.end_b[0] in vs
        if ina and inb:
            out = out + _class_variable(o, l.id)
        elif ina or inb:
            k = ordered.numbering[l.end_a if ina else l.end_b]
            out = out + LinearForm({sym("s", k): Fraction(_sign(k))})
    for x in g.externals:
        if x.position[0] in vs:
            out = out + LinearForm({sym("x", x.id): Fraction(o.eta[x.id])})
    return out


def branch_deltas(ordered: OrderedGraph, o: OrientationData) -> DeltaSystem:
    """One delta per tree line (its branch) plus the root delta.

    Lines inside a branch collapse to their class variable; ends of lines
    leaving the branch are kept as the position symbols ``s[k]`` with sign
    ``η``.  Use :meth:`DeltaSystem.substitute` with :func:`line_variables` to
    expand them.
    """
    labels, forms = [], []
    for lid in sorted(ordered.tree, key=lambda l: ordered.ends(l)):
        labels.append(f"branch:{lid}")
        forms.append(_collapsed_sum(ordered, o, branch(ordered, lid)))
    labels.append("root")
    forms.append(_collapsed_sum(ordered, o, [v.id for v in ordered.graph.vertices]))
    return DeltaSystem(tuple(labels), tuple(forms))


def expanded_deltas(ordered: OrderedGraph, o: OrientationData) -> DeltaSystem:
    return branch_deltas(ordered, o).substitute(line_variables(ordered, o))


# --------------------------------------------------------------------------
# rosette factors


@dataclass(frozen=True)
class Rosette:
    """A phase split in named term groups, plus the root delta argument."""

    groups: Mapping[str, PhaseForm]
    delta: LinearForm
    terms: Mapping[str, PhaseForm] = field(default_factory=dict, repr=False)

    @property
    def phase(self) -> PhaseForm:
        out = PhaseForm()
        for p in self.groups.values():
            out = out + p
        return out


class _Builder:
    """Accumulates term groups; each named sub-term is kept for inspection."""

    def __init__(self) -> None:
        self.terms: dict[str, PhaseForm] = {}

    def add(self, name: str, p: PhaseForm) -> None:
        self.terms[name] = self.terms.get(name, PhaseForm()) + p

    def group(self, prefix: str) -> PhaseForm:
        out = PhaseForm()
        for k, p in self.terms.items():
            if k.split(".")[0] == prefix:
                out = out + p
        return out

    def rosette(self, delta: LinearForm) -> Rosette:
        groups = {g: self.group(g) for g in ("E", "X", "U", "W")}
        return Rosette(groups, delta, dict(self.terms))


class _Ctx:
    def __init__(self, ordered: OrderedGraph, o: OrientationData, rel: LineRelations):
        self.ordered, self.o, self.rel = ordered, o, rel
        by_end = sorted((l.id for l in ordered.graph.lines), key=lambda l: ordered.ends(l))
        self.T = [l for l in by_end if o.classes[l] == TREE]
        self.L0 = [l for l in by_end if o.classes[l] == LOOP]
        self.Lp = [l for l in by_end if o.classes[l] == LOOP_PLUS]
        self.Lm = [l for l in by_end if o.classes[l] == LOOP_MINUS]
        self.Lbar = self.Lp + self.Lm
        self.TL0 = self.T + self.L0
        self.L = self.L0 + self.Lbar
        self.ext = [(x, ordered.external_number(x)) for x in ordered.externals_in_order]

    def u(self, l: str) -> LinearForm:
        return var("u", l)

    def ew(self, l: str) -> LinearForm:
        """ε(l) times the long variable of a line."""
        return var(long_kind(self.o, l), l) * self.o.eps[l]

    def sx(self, x: str, k: int) -> LinearForm:
        return var("x", x) * _sign(k)

    def pairs(self, left: list[str], relation, right: list[str]):
        rels = {relation} if isinstance(relation, str) else set(relation)
        for a in left:
            for b in right:
                if a != b and self.rel.of(a, b) in rels:
                    yield a, b

    def to_ext(self, lines: list[str], relation: str, x: str):
        return [l for l in lines if self.rel.to_external(l, x) == relation]


W = PhaseForm.wedge_of


def _phi_E(c: _Ctx, b: _Builder, external_index: bool = False) -> None:
    p = PhaseForm()
    for a in range(len(c.ext)):
        for d in range(a + 1, len(c.ext)):
            (xa, ja), (xb, jb) = c.ext[a], c.ext[d]
            if external_index:
                ja, jb = a + 1, d + 1
            p = p + W(var("x", xa), var("x", xb), Fraction(-_sign(ja) * _sign(jb)))
    b.add("E", p)


def _root_delta(c: _Ctx, external_index: bool = False) -> LinearForm:
    out = LinearForm()
    for k, (x, j) in enumerate(c.ext, start=1):
        out = out + var("x", x) * _sign(k if external_index else j)
    for l in c.TL0:
        out = out + c.u(l)
    for l in c.Lp:
        out = out + var("w", l)
    for l in c.Lm:
        out = out - var("w", l)
    return out


def rosette_general(ordered: OrderedGraph, o: OrientationData, rel: LineRelations) -> Rosette:
    """Closed-form phase of a general (possibly clashing) graph, term group by term group.

    Pairs ``(a, b)`` run over ``a`` in the left set and ``b`` in the right set
    with ``a R b``.
    """
    c = _Ctx(ordered, o, rel)
    b = _Builder()
    _phi_E(c, b)

    # external / short-variable terms
    for x, j in c.ext:
        s = c.sx(x, j)
        for l in c.to_ext(c.TL0, PREC, x) + c.to_ext(c.Lbar, SUP, x):
            b.add("X.before", W(s, c.u(l)))
        for l in c.to_ext(c.TL0, SUCC, x):
            b.add("X.after", W(c.u(l), s))

    u, ew = c.u, c.ew
    for l in c.T:
        b.add("U.tree_diag", W(ew(l), u(l), HALF))
    for l in c.L:
        b.add("U.loop_diag", W(ew(l), u(l), HALF))
    for p, q in c.pairs(c.L0, LTIMES, c.L0):
        b.add("U.cross0", W(ew(p), u(q), HALF) + W(ew(q), u(p), HALF))
    for p, q in c.pairs(c.L0, LTIMES, c.Lbar):
        b.add("U.cross0bar_l", W(ew(p), u(q), HALF) - W(ew(q), u(p), HALF))
    for p, q in c.pairs(c.L0, RTIMES, c.Lbar):
        b.add("U.cross0bar_r", W(ew(q), u(p), HALF) - W(ew(p), u(q), HALF))
    for p, q in (
        list(c.pairs(c.Lp, (LTIMES, RTIMES), c.Lm))
        + list(c.pairs(c.Lp, LTIMES, c.Lp))
        + list(c.pairs(c.Lm, LTIMES, c.Lm))
    ):
        b.add("U.crossbar", W(u(p), ew(q), HALF) + W(u(q), ew(p), HALF))
    for p, q in list(c.pairs(c.TL0, SUB, c.L0)) + list(c.pairs(c.TL0, SUCC, c.Lbar)):
        b.add("U.nested0", W(ew(q), u(p)))
    for p, q in list(c.pairs(c.Lbar, SUB, c.Lbar)) + list(c.pairs(c.TL0, PREC, c.Lbar)):
        b.add("U.nestedbar", W(u(p), ew(q)))
    for p, q in c.pairs(c.TL0, PREC, c.TL0):
        b.add("U.prec", W(u(q), u(p)))
    for p, q in c.pairs(c.TL0, SUB, c.Lbar):
        b.add("U.sub_bar", W(u(p), u(q)))
    for p, q in list(c.pairs(c.L0, LTIMES, c.L0)) + list(c.pairs(c.Lp, LTIMES, c.Lp)) + list(c.pairs(c.Lm, LTIMES, c.Lm)):
        b.add("U.uu_cross", W(u(q), u(p), HALF))
    for p, q in (
        list(c.pairs(c.L0, (LTIMES, RTIMES), c.Lbar))
        + list(c.pairs(c.Lp, RTIMES, c.Lm))
        + list(c.pairs(c.Lm, RTIMES, c.Lp))
    ):
        b.add("U.uu_crossbar", W(u(p), u(q), HALF))

    # long loop variables
    for x, j in c.ext:
        s = c.sx(x, j)
        for l in c.to_ext(c.Lbar, PREC, x) + c.to_ext(c.L0, SUP, x):
            b.add("W.ext_before", W(ew(l), s))
        for l in c.to_ext(c.Lbar, SUCC, x):
            b.add("W.ext_after", W(s, ew(l)))
    for p, q in (
        list(c.pairs(c.L0, LTIMES, c.L0))
        + list(c.pairs(c.Lbar, LTIMES, c.Lbar))
        + list(c.pairs(c.L0, (LTIMES, RTIMES), c.Lbar))
    ):
        b.add("W.cross", W(ew(q), ew(p), HALF))
    for p, q in list(c.pairs(c.L0, SUP, c.Lbar)) + list(c.pairs(c.Lbar, PREC, c.Lbar)):
        b.add("W.nested", W(ew(q), ew(p)))
    return b.rosette(_root_delta(c))


def rosette_orientable(ordered: OrderedGraph, o: OrientationData, rel: LineRelations) -> Rosette:
    """Closed-form phase of an orientable graph."""
    if not o.orientable:
        raise PreconditionError("graph is not orientable")
    c = _Ctx(ordered, o, rel)
    b = _Builder()
    _phi_E(c, b)
    TL = c.T + c.L
    u, ew = c.u, c.ew
    for x, j in c.ext:
        s = c.sx(x, j)
        for l in c.to_ext(TL, PREC, x):
            b.add("X.before", W(s, u(l)))
        for l in c.to_ext(TL, SUCC, x):
            b.add("X.after", W(u(l), s))
    for l in c.T:
        b.add("U.tree_diag", W(ew(l), u(l), HALF))
    for l in c.L:
        b.add("U.loop_diag", W(ew(l), u(l), HALF))
    for p, q in c.pairs(c.L, LTIMES, c.L):
        b.add("U.cross0", W(ew(p), u(q), HALF) + W(ew(q), u(p), HALF))
        b.add("U.uu_cross", W(u(q), u(p), HALF))
    for p, q in c.pairs(TL, SUB, c.L):
        b.add("U.nested0", W(ew(q), u(p)))
    for p, q in c.pairs(TL, PREC, TL):
        b.add("U.prec", W(u(q), u(p)))
    for x, j in c.ext:
        for l in c.to_ext(c.L, SUP, x):
            b.add("W.ext_before", W(var("x", x) * -_sign(j), ew(l)))
    for p, q in c.pairs(c.L, LTIMES, c.L):
        b.add("W.cross", W(ew(q), ew(p), HALF))
    return b.rosette(_root_delta(c))


def rosette_planar_regular(
    ordered: OrderedGraph, o: OrientationData, rel: LineRelations, topo: TopologyReport
) -> Rosette:
    """Closed-form phase of a planar regular graph (genus 0, one broken face).

    The external signs use the rank of each external among the externals
    (``k``) instead of its position number; both have the same parity.
    """
    if topo.g != 0 or topo.B != 1:
        raise PreconditionError(f"planar regular graphs need g=0 and B=1 (got g={topo.g}, B={topo.B})")
    if not o.orientable:
        raise PreconditionError("graph is not orientable")
    c = _Ctx(ordered, o, rel)
    b = _Builder()
    _phi_E(c, b, external_index=True)
    TL = c.T + c.L
    u, ew = c.u, c.ew
    for k, (x, _) in enumerate(c.ext, start=1):
        s = c.sx(x, k)
        for l in c.to_ext(TL, PREC, x):
            b.add("X.before", W(s, u(l)))
        for l in c.to_ext(TL, SUCC, x):
            b.add("X.after", W(u(l), s))
    for l in c.T:
        b.add("U.tree_diag", W(ew(l), u(l), HALF))
    for l in c.L:
        b.add("U.loop_diag", W(ew(l), u(l), HALF))
    for p, q in c.pairs(TL, SUB, c.L):
        b.add("U.nested0", W(ew(q), u(p)))
    for p, q in c.pairs(TL, PREC, TL):
        b.add("U.prec", W(u(q), u(p)))
    return b.rosette(_root_delta(c, external_index=True))


# --------------------------------------------------------------------------
# first Filk move


def filk_reduce(ordered: OrderedGraph, o: OrientationData) -> tuple[PhaseForm, LinearForm]:
    """Phase after rewriting only the tree positions in (u, v).

    Loop and external positions stay as ``s[k]`` symbols, with their global
    numbers (tree lines join consecutive numbers, so parities are kept).
    """
    if not o.orientable:
        raise PreconditionError("graph is not orientable")
    g = ordered.graph
    tree_pos = {k for lid in ordered.tree for k in ordered.ends(lid)}
    S = [k for k in range(1, 4 * g.n + 1) if k not in tree_pos]
    T = sorted(ordered.tree, key=lambda l: ordered.ends(l))
    s = lambda k: var("s", k)  # noqa: E731
    p = PhaseForm()
    for a in range(len(S)):
        for b in range(a + 1, len(S)):
            p = p + W(s(S[a]), s(S[b]), Fraction(-_sign(S[a]) * _sign(S[b])))
    for l in T:
        p = p + W(var("v", l) * o.eps[l], var("u", l), HALF)
    for a in T:
        for b in T:
            if a != b and ordered.ends(a)[1] < ordered.ends(b)[0]:
                p = p + W(var("u", b), var("u", a))
    for l in T:
        i, j = ordered.ends(l)
        for k in S:
            if k < i:
                p = p + W(var("u", l), s(k) * _sign(k))
            elif k > j:
                p = p + W(s(k) * _sign(k), var("u", l))
    delta = LinearForm({sym("s", k): Fraction(_sign(k)) for k in S})
    for l in T:
        delta = delta + var("u", l)
    return p, delta


# --------------------------------------------------------------------------
# Ω dressing and masslet variables


def omega_dress(
    phase: PhaseForm, o: OrientationData, deltas: DeltaSystem | None = None, ordered: OrderedGraph | None = None
) -> PhaseForm:
    """Add the propagator oscillations ``½ϵ(l)Ω ε(l) long_l∧u_l`` to a phase.

    This turns each diagonal term ``½ε(l) long_l∧u_l`` into
    ``½(1+ϵ(l)Ω) ε(l) long_l∧u_l``.  When branch ``deltas`` (and the ordered
    graph) are given, every branch delta is also written as an oscillating
    integral, adding ``p_l·(argument)`` with the argument expanded in line
    variables.
    """
    om = OmegaPoly.omega()
    out = phase.map_coeffs(OmegaPoly.lift)
    for l, cls in o.classes.items():
        kind = "v" if cls == TREE else "w"
        out = out + W(var(kind, l), var("u", l), om * Fraction(o.epsilon[l] * o.eps[l], 2))
    if deltas is not None:
        if ordered is None:
            raise ValueError("ordered graph needed to expand the branch deltas")
        lv = line_variables(ordered, o)
        for lab, f in zip(deltas.labels, deltas.forms):
            if lab.startswith("branch:"):
                lid = lab.split(":", 1)[1]
                out = out + PhaseForm.dot_of(var("p", lid), f.substitute(lv))
    return out


@dataclass(frozen=True)
class MassletForms:
    """Masslet variables ε𝒱_l (tree) and ε𝒲_ℓ (loops) and their Jacobian."""

    order: tuple[str, ...]  # lines by first end
    forms: Mapping[str, LinearForm]  # line -> ε(l)𝒱_l or ε(ℓ)𝒲_ℓ
    matrix: tuple[tuple[OmegaPoly, ...], ...]  # rows: ε𝒱/ε𝒲, columns: εv/εw, both in `order`

    @property
    def lower_triangular(self) -> bool:
        n = len(self.order)
        return all(not self.matrix[r][c] for r in range(n) for c in range(r + 1, n))

    @property
    def diagonal_product(self) -> OmegaPoly:
        out = OmegaPoly((1,))
        for k in range(len(self.order)):
            out = out * self.matrix[k][k]
        return out

    def determinant(self) -> OmegaPoly:
        """Exact determinant by cofactor-free elimination over polynomials (fraction-free Bareiss)."""
        return _poly_det([list(r) for r in self.matrix])


def _poly_det(m: list[list[OmegaPoly]]) -> OmegaPoly:
    n = len(m)
    if n == 0:
        return OmegaPoly((1,))
    sign = 1
    prev = OmegaPoly((1,))
    for k in range(n - 1):
        if not m[k][k]:
            sel = next((r for r in range(k + 1, n) if m[r][k]), None)
            if sel is None:
                return OmegaPoly()
            m[k], m[sel] = m[sel], m[k]
            sign = -sign
        for r in range(k + 1, n):
            for col in range(k + 1, n):
                m[r][col] = _poly_exact_div(m[r][col] * m[k][k] - m[r][k] * m[k][col], prev)
        prev = m[k][k]
    return m[n - 1][n - 1] * sign


def _poly_exact_div(a: OmegaPoly, b: OmegaPoly) -> OmegaPoly:
    """Exact polynomial division (the Bareiss quotients are exact)."""
    if b.degree <= 0:
        return a / b
    num = list(a.c)
    q = [Fraction(0)] * max(len(num) - b.degree, 1)
    for k in range(len(num) - 1 - b.degree, -1, -1):
        q[k] = num[k + b.degree] / b.c[-1]
        for t, y in enumerate(b.c):
            num[k + t] -= q[k] * y
    if any(num):
        raise ArithmeticError("inexact polynomial division")
    return OmegaPoly(q)


def _path_to_root(ordered: OrderedGraph, vertex: str) -> list[str]:
    """Tree lines from a vertex down to the root vertex."""
    parent_line = {v: l for l, v in _children(ordered).items()}
    out = []
    while vertex in parent_line:
        l = parent_line[vertex]
        out.append(l)
        i, _ = ordered.ends(l)
        vertex = ordered.position_of[i][0]
    return out


def masslet_forms(ordered: OrderedGraph, o: OrientationData, rel: LineRelations) -> MassletForms:
    """Masslet linear forms and the matrix taking (εv, εw) to (ε𝒱, ε𝒲).

    ``ε𝒱_l = ½(1+ϵΩ)εv_l + Σ_{ℓ'⊃l} εw_ℓ' − ½p̃_l − Σ p̃_l'`` where the last
    sum runs over the tree lines below ``l`` on its path to the root, and
    ``ε𝒲_ℓ = ½(1+ϵΩ)εw_ℓ + Σ_{ℓ'⊃ℓ} εw_ℓ' + Σ_{ℓ'⋉ℓ} εw_ℓ'``.
    """
    if not o.orientable:
        raise PreconditionError("graph is not orientable")
    om = OmegaPoly.omega()
    order = tuple(sorted((l.id for l in ordered.graph.lines), key=lambda l: ordered.ends(l)))
    loops = [l for l in order if o.classes[l] != TREE]
    children = _children(ordered)
    col = {l: var(long_kind(o, l), l) * o.eps[l] for l in order}
    forms: dict[str, LinearForm] = {}
    for l in order:
        f = col[l] * ((1 + om * o.epsilon[l]) / 2)
        for lp in loops:
            if lp != l and rel.of(lp, l) == SUP:
                f = f + col[lp]
            if o.classes[l] != TREE and lp != l and rel.of(lp, l) == LTIMES:
                f = f + col[lp]
        if o.classes[l] == TREE:
            f = f - var("pt", l) * HALF
            for lq in _path_to_root(ordered, children[l])[1:]:
                f = f - var("pt", lq)
        forms[l] = f
    matrix = []
    for l in order:
        row = []
        for m in order:
            s = sym(long_kind(o, m), m)
            row.append(OmegaPoly.lift(forms[l].coeff(s)) * o.eps[m])
        matrix.append(tuple(row))
    return MassletForms(order, forms, tuple(matrix))


def expected_masslet_determinant(o: OrientationData) -> OmegaPoly:
    """``2^{-I} Π_l (1+ϵ(l)Ω)``."""
    om = OmegaPoly.omega()
    out = OmegaPoly((1,))
    for l in sorted(o.classes):
        out = out * ((1 + om * o.epsilon[l]) / 2)
    return out
