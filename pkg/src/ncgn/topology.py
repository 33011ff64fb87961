"""Faces, genus and broken faces of ribbon graphs; intersection matrices."""

from __future__ import annotations

from dataclasses import dataclass

from .forms import exact_rank
from .orientation import LTIMES, RTIMES, SUP, TREE, LineRelations, OrientationData, orient
from .ribbon_graph import OrderedGraph, Position, RibbonGraph


@dataclass(frozen=True)
class Face:
    corners: tuple[Position, ...]  # darts met along the face boundary
    externals: tuple[str, ...]  # external ids lying on this face

    @property
    def broken(self) -> bool:
        return bool(self.externals)


@dataclass(frozen=True)
class TopologyReport:
    L: int
    B: int
    I: int
    n: int
    N: int
    chi: int
    g: int
    faces: tuple[Face, ...]

    def as_dict(self) -> dict:
        return {
            "L": self.L, "B": self.B, "I": self.I, "n": self.n, "N": self.N, "chi": self.chi, "g": self.g,
            "faces": [
                {"corners": [f"{v}.{p}" for v, p in f.corners], "broken": f.broken, "externals": list(f.externals)}
                for f in self.faces
            ],
        }


def trace_faces(graph: RibbonGraph) -> TopologyReport:
    """Faces as orbits of (rotate to next position) ∘ (cross the line).

    An external leg is a fixed point of the crossing map: the face runs up
    one side of the leg and back down the other, staying in the same face.
    """
    partner: dict[Position, Position] = {}
    for l in graph.lines:
        partner[l.end_a] = l.end_b
        partner[l.end_b] = l.end_a
    ext_at = {x.position: x.id for x in graph.externals}

    def step(p: Position) -> Position:
        q = partner.get(p, p)
        return (q[0], q[1] % 4 + 1)

    seen: set[Position] = set()
    faces = []
    for start in graph.positions():
        if start in seen:
            continue
        corners = []
        p = start
        while p not in seen:
            seen.add(p)
            corners.append(p)
            p = step(p)
        faces.append(Face(tuple(corners), tuple(ext_at[c] for c in corners if c in ext_at)))
    L = len(faces)
    chi = L - graph.I + graph.n
    if graph.n and chi % 2:
        raise AssertionError("odd Euler characteristic for a connected ribbon graph")
    g = (2 - chi) // 2 if graph.n else 0
    B = sum(f.broken for f in faces)
    return TopologyReport(L, B, graph.I, graph.n, graph.N, chi, g, tuple(faces))


@dataclass(frozen=True)
class IntersectionMatrices:
    loops: tuple[str, ...]  # row/column labels of Q_W, sorted by first end
    externals: tuple[str, ...]  # row labels of Q_XW, sorted by position number
    Q_W: tuple[tuple[int, ...], ...]
    Q_XW: tuple[tuple[int, ...], ...]

    @property
    def rank_W(self) -> int:
        return exact_rank([list(r) for r in self.Q_W])

    @property
    def rank_XW(self) -> int:
        return exact_rank([list(r) for r in self.Q_XW])


def intersection_matrices(ordered: OrderedGraph, rel: LineRelations, o: OrientationData | None = None) -> IntersectionMatrices:
    """``Q_W[a][b] = +1`` if loop a crosses b from the left (a ⋉ b), −1 if a ⋊ b.

    ``Q_XW[k][ℓ] = (−1)^{j_k} ε(ℓ)`` when the loop ℓ contracts above the
    external at position j_k: the coefficient of ``x_k ∧ w_ℓ`` in the
    external/long-variable part of the orientable rosette phase.
    """
    o = o or orient(ordered)
    loops = tuple(sorted(ordered.loop_lines, key=lambda l: ordered.ends(l)))
    exts = ordered.externals_in_order
    qw = []
    for a in loops:
        row = []
        for b in loops:
            r = rel.of(a, b) if a != b else None
            row.append(1 if r == LTIMES else -1 if r == RTIMES else 0)
        qw.append(tuple(row))
    qxw = []
    for x in exts:
        j = ordered.external_number(x)
        sign = 1 if j % 2 == 0 else -1
        qxw.append(tuple(sign * o.eps[l] if rel.to_external(l, x) == SUP else 0 for l in loops))
    return IntersectionMatrices(loops, exts, tuple(qw), tuple(qxw))
