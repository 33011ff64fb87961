"""Ribbon graphs of a quartic fermionic interaction.

A graph has 4-valent vertices whose four positions carry a cyclic order and a
field polarity (``psibar`` or ``psi``).  Each position is occupied either by
one end of a propagator line or by an external leg.  This module holds the
data model, the text-format parser, spanning-tree selection and the total
ordering of positions obtained by touring around a spanning tree.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping

Position = tuple[str, int]

PSIBAR = "psibar"
PSI = "psi"

# polarity at positions 1..4 for each interaction kind
POLARITY_PATTERNS: dict[str, tuple[str, str, str, str]] = {
    "o1": (PSIBAR, PSI, PSIBAR, PSI),
    "o2": (PSI, PSIBAR, PSI, PSIBAR),
    "o3": (PSIBAR, PSI, PSIBAR, PSI),
    # non-orientable kinds, admitted only in relaxed mode
    "no1": (PSIBAR, PSIBAR, PSI, PSI),
    "no2": (PSIBAR, PSIBAR, PSI, PSI),
    "no3": (PSIBAR, PSIBAR, PSI, PSI),
}
ORIENTABLE_KINDS = ("o1", "o2", "o3")


class GraphError(ValueError):
    """Invalid graph description or structure."""


class GraphSyntaxError(GraphError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class PreconditionError(ValueError):
    """An analysis was asked for on an input outside its domain."""


def natural_key(s: str) -> tuple:
    """Sort key that orders ``l2`` before ``l10``."""
    return tuple((0, int(t)) if t.isdigit() else (1, t) for t in re.findall(r"\d+|\D+", s))


def position_str(p: Position) -> str:
    return f"{p[0]}.{p[1]}"


@dataclass(frozen=True)
class Vertex:
    id: str
    kind: str

    def polarity(self, pos: int) -> str:
        return POLARITY_PATTERNS[self.kind][pos - 1]


@dataclass(frozen=True)
class Line:
    id: str
    end_a: Position
    end_b: Position
    scale: int | None = None

    @property
    def ends(self) -> tuple[Position, Position]:
        return (self.end_a, self.end_b)

    @property
    def is_tadpole(self) -> bool:
        return self.end_a[0] == self.end_b[0]

    def other_end(self, p: Position) -> Position:
        return self.end_b if p == self.end_a else self.end_a


@dataclass(frozen=True)
class External:
    id: str
    position: Position


@dataclass(frozen=True)
class RibbonGraph:
    """A validated, connected ribbon graph.  Build with :func:`make_graph`."""

    name: str
    vertices: tuple[Vertex, ...]
    lines: tuple[Line, ...]
    externals: tuple[External, ...]
    relaxed: bool = False

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def I(self) -> int:  # noqa: E743 - conventional name
        return len(self.lines)

    @property
    def N(self) -> int:
        return len(self.externals)

    @property
    def is_vacuum(self) -> bool:
        return not self.externals

    @cached_property
    def vertex(self) -> dict[str, Vertex]:
        return {v.id: v for v in self.vertices}

    @cached_property
    def line(self) -> dict[str, Line]:
        return {l.id: l for l in self.lines}

    @cached_property
    def external(self) -> dict[str, External]:
        return {x.id: x for x in self.externals}

    @cached_property
    def occupant(self) -> dict[Position, tuple[str, str]]:
        """Map position -> ("line", line id) or ("external", external id)."""
        occ: dict[Position, tuple[str, str]] = {}
        for l in self.lines:
            for e in l.ends:
                occ[e] = ("line", l.id)
        for x in self.externals:
            occ[x.position] = ("external", x.id)
        return occ

    def positions(self) -> Iterator[Position]:
        for v in self.vertices:
            for p in range(1, 5):
                yield (v.id, p)

    def polarity(self, p: Position) -> str:
        return self.vertex[p[0]].polarity(p[1])

    def line_at(self, p: Position) -> Line | None:
        kind, ident = self.occupant[p]
        return self.line[ident] if kind == "line" else None

    def scales(self) -> dict[str, int]:
        return {l.id: l.scale for l in self.lines if l.scale is not None}

    def with_scales(self, mu: Mapping[str, int]) -> "RibbonGraph":
        lines = tuple(Line(l.id, l.end_a, l.end_b, mu.get(l.id, l.scale)) for l in self.lines)
        return RibbonGraph(self.name, self.vertices, lines, self.externals, self.relaxed)

    def to_text(self) -> str:
        out = [f"graph {self.name}"]
        out += [f"vertex {v.id} kind={v.kind}" for v in self.vertices]
        for l in self.lines:
            s = f"line {l.id} {position_str(l.end_a)} {position_str(l.end_b)}"
            out.append(s + (f" scale={l.scale}" if l.scale is not None else ""))
        out += [f"external {x.id} {position_str(x.position)}" for x in self.externals]
        return "\n".join(out) + "\n"


def _connected(vertex_ids: list[str], lines: Iterable[Line]) -> bool:
    if not vertex_ids:
        return True
    parent = {v: v for v in vertex_ids}

    def find(a: str) -> str:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for l in lines:
        parent[find(l.end_a[0])] = find(l.end_b[0])
    return len({find(v) for v in vertex_ids}) == 1


def make_graph(
    vertices: Iterable[Vertex | tuple[str, str]],
    lines: Iterable[Line | tuple],
    externals: Iterable[External | tuple[str, Position]] = (),
    name: str = "G",
    relaxed: bool = False,
) -> RibbonGraph:
    """Validate and build a :class:`RibbonGraph`.

    ``relaxed`` admits the non-orientable kinds and lines joining equal
    polarities; it exists only for the vacuum-invariance counter-example.
    """
    vs = tuple(v if isinstance(v, Vertex) else Vertex(*v) for v in vertices)
    ls = tuple(l if isinstance(l, Line) else Line(*l) for l in lines)
    xs = tuple(x if isinstance(x, External) else External(*x) for x in externals)

    ids = [v.id for v in vs]
    if len(set(ids)) != len(ids):
        raise GraphError("duplicate vertex id")
    for v in vs:
        if v.kind not in POLARITY_PATTERNS:
            raise GraphError(f"vertex {v.id}: unknown kind {v.kind!r}")
        if v.kind not in ORIENTABLE_KINDS and not relaxed:
            raise GraphError(f"vertex {v.id}: non-orientable kind {v.kind} needs relaxed mode")
    if len({l.id for l in ls}) != len(ls) or len({x.id for x in xs}) != len(xs):
        raise GraphError("duplicate line or external id")

    known = set(ids)
    used: dict[Position, str] = {}

    def claim(p: Position, who: str) -> None:
        if p[0] not in known:
            raise GraphError(f"{who}: unknown vertex {p[0]!r}")
        if not 1 <= p[1] <= 4:
            raise GraphError(f"{who}: position {p[1]} outside 1..4")
        if p in used:
            raise GraphError(f"position {position_str(p)} used twice ({used[p]}, {who})")
        used[p] = who

    vmap = {v.id: v for v in vs}
    for l in ls:
        if l.end_a == l.end_b:
            raise GraphError(f"line {l.id}: both ends at {position_str(l.end_a)}")
        claim(l.end_a, f"line {l.id}")
        claim(l.end_b, f"line {l.id}")
        if l.scale is not None and l.scale < 0:
            raise GraphError(f"line {l.id}: negative scale")
        pa = vmap[l.end_a[0]].polarity(l.end_a[1])
        pb = vmap[l.end_b[0]].polarity(l.end_b[1])
        if pa == pb and not relaxed:
            raise GraphError(f"line {l.id}: non-orientable line ({pa}-{pb})")
    for x in xs:
        claim(x.position, f"external {x.id}")
    for v in vs:
        for p in range(1, 5):
            if (v.id, p) not in used:
                raise GraphError(f"position {v.id}.{p} unused")
    if not _connected(ids, ls):
        raise GraphError("graph is disconnected")
    g = RibbonGraph(name, vs, ls, xs, relaxed)
    assert 4 * g.n == 2 * g.I + g.N
    return g


_POS_RE = re.compile(r"^([A-Za-z0-9_]+)\.([0-9]+)$")


def parse_graph(text: str, relaxed: bool = False) -> RibbonGraph:
    """Parse the line-oriented graph format.

    ::

        graph <name>
        vertex <vid> kind=<o1|o2|o3>
        line <lid> <vid>.<pos> <vid>.<pos> [scale=<int>]
        external <xid> <vid>.<pos>
    """
    name = None
    vertices: list[Vertex] = []
    lines: list[Line] = []
    externals: list[External] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        toks = [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", body)]
        if not toks:
            continue

        def err(msg: str, col: int) -> GraphSyntaxError:
            return GraphSyntaxError(msg, lineno, col)

        def pos(tok: tuple[str, int]) -> Position:
            m = _POS_RE.match(tok[0])
            if not m:
                raise err(f"expected <vertex>.<position>, got {tok[0]!r}", tok[1])
            return (m.group(1), int(m.group(2)))

        head, col = toks[0]
        if head == "graph":
            if len(toks) != 2:
                raise err("expected: graph <name>", col)
            if name is not None:
                raise err("second graph header", col)
            name = toks[1][0]
        elif head == "vertex":
            if len(toks) != 3 or not toks[2][0].startswith("kind="):
                raise err("expected: vertex <id> kind=<kind>", col)
            kind = toks[2][0][5:]
            if kind not in POLARITY_PATTERNS:
                raise err(f"unknown kind {kind!r}", toks[2][1])
            vertices.append(Vertex(toks[1][0], kind))
        elif head == "line":
            if len(toks) not in (4, 5):
                raise err("expected: line <id> <v>.<p> <v>.<p> [scale=<int>]", col)
            scale = None
            if len(toks) == 5:
                m = re.match(r"^scale=([0-9]+)$", toks[4][0])
                if not m:
                    raise err(f"bad scale {toks[4][0]!r}", toks[4][1])
                scale = int(m.group(1))
            lines.append(Line(toks[1][0], pos(toks[2]), pos(toks[3]), scale))
        elif head == "external":
            if len(toks) != 3:
                raise err("expected: external <id> <v>.<p>", col)
            externals.append(External(toks[1][0], pos(toks[2])))
        else:
            raise err(f"unknown directive {head!r}", col)

    if name is None:
        raise GraphSyntaxError("missing 'graph <name>' header", 1, 1)
    return make_graph(vertices, lines, externals, name=name, relaxed=relaxed)


# --------------------------------------------------------------------------
# spanning trees and total ordering


def spanning_tree(graph: RibbonGraph, attribution: Mapping[str, int] | None = None) -> frozenset[str]:
    """Greedy maximal-scale spanning tree (Kruskal on descending scale).

    Ties are broken by ascending line id.  Without an attribution the scales
    stored on the lines are used, missing ones counting as 0.
    """
    scales = dict(attribution) if attribution is not None else {l.id: (l.scale or 0) for l in graph.lines}
    order = sorted(graph.lines, key=lambda l: (-scales.get(l.id, 0), natural_key(l.id)))
    parent = {v.id: v.id for v in graph.vertices}

    def find(a: str) -> str:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    tree = []
    for l in order:
        ra, rb = find(l.end_a[0]), find(l.end_b[0])
        if ra != rb:
            parent[ra] = rb
            tree.append(l.id)
    return frozenset(tree)


def all_spanning_trees(graph: RibbonGraph) -> list[frozenset[str]]:
    """Every spanning tree (as line-id sets) of the underlying multigraph."""
    candidates = [l for l in graph.lines if not l.is_tadpole]
    out = []
    for combo in itertools.combinations(candidates, graph.n - 1):
        if _connected([v.id for v in graph.vertices], combo):
            out.append(frozenset(l.id for l in combo))
    return out


def default_root(graph: RibbonGraph) -> Position:
    if graph.externals:
        return graph.externals[0].position
    if not graph.vertices:
        raise PreconditionError("empty graph has no root")
    v = min(graph.vertices, key=lambda v: natural_key(v.id))
    return (v.id, 1)


def admissible_roots(graph: RibbonGraph, tree: frozenset[str]) -> list[Position]:
    if graph.externals:
        return [x.position for x in graph.externals]
    tree_ends = {e for lid in tree for e in graph.line[lid].ends}
    return [p for p in graph.positions() if p not in tree_ends]


@dataclass(frozen=True)
class OrderedGraph:
    """A graph with a spanning tree, a root and the induced position numbering."""

    graph: RibbonGraph
    tree: frozenset[str]
    root: Position
    numbering: Mapping[Position, int] = field(repr=False)

    @cached_property
    def position_of(self) -> dict[int, Position]:
        return {k: p for p, k in self.numbering.items()}

    def ends(self, line_id: str) -> tuple[int, int]:
        """Position numbers (i, j) of a line's ends, with i < j."""
        l = self.graph.line[line_id]
        a, b = self.numbering[l.end_a], self.numbering[l.end_b]
        return (a, b) if a < b else (b, a)

    def external_number(self, ext_id: str) -> int:
        return self.numbering[self.graph.external[ext_id].position]

    @cached_property
    def loop_lines(self) -> tuple[str, ...]:
        return tuple(l.id for l in self.graph.lines if l.id not in self.tree)

    @cached_property
    def externals_in_order(self) -> tuple[str, ...]:
        """External ids sorted by their position number."""
        return tuple(sorted((x.id for x in self.graph.externals), key=self.external_number))


def _check_tree(graph: RibbonGraph, tree: frozenset[str]) -> None:
    if len(tree) != max(graph.n - 1, 0):
        raise PreconditionError(f"tree must have {graph.n - 1} lines, got {len(tree)}")
    for lid in tree:
        if lid not in graph.line:
            raise PreconditionError(f"unknown tree line {lid!r}")
        if graph.line[lid].is_tadpole:
            raise PreconditionError(f"tree line {lid} is a tadpole")
    if not _connected([v.id for v in graph.vertices], [graph.line[l] for l in tree]):
        raise PreconditionError("tree does not span the graph")


def total_order(graph: RibbonGraph, tree: Iterable[str] | None = None, root: Position | None = None) -> OrderedGraph:
    """Number all 4n positions by touring counterclockwise around the tree.

    Starting at the root, positions of a vertex are visited in cyclic order;
    whenever a position is the end of a tree line leading to an unvisited
    vertex, the tour crosses the line, numbers the arrival position and goes
    around the child vertex before coming back.
    """
    tree = frozenset(spanning_tree(graph) if tree is None else tree)
    _check_tree(graph, tree)
    if root is None:
        root = default_root(graph) if graph.externals or not tree else admissible_roots(graph, tree)[0]
    root = (root[0], int(root[1]))
    if root[0] not in graph.vertex or not 1 <= root[1] <= 4:
        raise PreconditionError(f"root {position_str(root)} is not a position of the graph")
    lid = graph.line_at(root)
    if lid is not None and lid.id in tree:
        raise PreconditionError(f"root {position_str(root)} is occupied by tree line {lid.id}")
    if not graph.is_vacuum and graph.occupant[root][0] != "external":
        raise PreconditionError("root of a non-vacuum graph must be an external position")

    numbering: dict[Position, int] = {}
    visited = {root[0]}
    # explicit stack of (vertex, start position, offset already done)
    stack = [(root[0], root[1], 0)]
    while stack:
        v, start, k = stack.pop()
        while k < 4:
            p = (v, (start - 1 + k) % 4 + 1)
            numbering[p] = len(numbering) + 1
            k += 1
            l = graph.line_at(p)
            if l is not None and l.id in tree:
                q = l.other_end(p)
                if q[0] not in visited:
                    visited.add(q[0])
                    stack.append((v, start, k))
                    stack.append((q[0], q[1], 0))
                    break
    assert len(numbering) == 4 * graph.n
    return OrderedGraph(graph, tree, root, numbering)


# --------------------------------------------------------------------------
# exhaustive enumeration of small graphs


def _canonical_key(lines: list[tuple[Position, Position]], n: int) -> tuple:
    best = None
    for perm in itertools.permutations(range(n)):
        for rots in itertools.product((0, 2), repeat=n):
            def img(p: Position) -> tuple[int, int]:
                v = int(p[0]) - 1
                return (perm[v], (p[1] - 1 + rots[v]) % 4 + 1)

            key = tuple(sorted(tuple(sorted((img(a), img(b)))) for a, b in lines))
            if best is None or key < best:
                best = key
    return best


def enumerate_graphs(n: int, relaxed: bool = False, canonical: bool = True) -> list[RibbonGraph]:
    """All connected graphs on ``n`` vertices of kind o1 (or no1 when relaxed).

    Lines are every partial matching of positions compatible with polarity
    (any matching when relaxed); unmatched positions become externals.  With
    ``canonical`` one representative per orbit of vertex relabelling and
    polarity-preserving rotation is kept.  Every orientable graph is, up to
    relabelling positions, a graph of this family, since o2 is o1 rotated by
    one step.
    """
    kind = "no1" if relaxed else "o1"
    vids = [str(k + 1) for k in range(n)]
    verts = [Vertex(v, kind) for v in vids]
    positions = [(v, p) for v in vids for p in range(1, 5)]
    pol = {p: POLARITY_PATTERNS[kind][p[1] - 1] for p in positions}

    found: list[RibbonGraph] = []
    seen: set = set()

    def rec(i: int, free: list[Position], matched: list[tuple[Position, Position]]) -> Iterator[list]:
        if i == len(free):
            yield list(matched)
            return
        p = free[i]
        if p in used:
            yield from rec(i + 1, free, matched)
            return
        # leave p external
        yield from rec(i + 1, free, matched)
        used.add(p)
        for q in free[i + 1:]:
            if q in used or (pol[p] == pol[q] and not relaxed):
                continue
            used.add(q)
            matched.append((p, q))
            yield from rec(i + 1, free, matched)
            matched.pop()
            used.discard(q)
        used.discard(p)

    used: set[Position] = set()
    for matching in rec(0, positions, []):
        if n > 1 and not _connected(vids, [Line("_", a, b) for a, b in matching]):
            continue
        if canonical:
            key = _canonical_key(matching, n) if not relaxed else tuple(sorted(matching))
            if key in seen:
                continue
            seen.add(key)
        lines = [Line(f"l{k + 1}", a, b) for k, (a, b) in enumerate(matching)]
        occupied = {e for a, b in matching for e in (a, b)}
        exts = [External(f"x{k + 1}", p) for k, p in enumerate(p for p in positions if p not in occupied)]
        found.append(make_graph(verts, lines, exts, name=f"n{n}_{len(found)}", relaxed=relaxed))
    return found


def subgraph(graph: RibbonGraph, line_ids: Iterable[str], vertex_ids: Iterable[str] | None = None) -> RibbonGraph:
    """The ribbon graph made of the given lines and the vertices they touch.

    Positions not joined by a kept line become external legs; their ids record
    what occupied them in the ambient graph (``x:<id>`` or ``l:<id>``).
    """
    keep = [graph.line[l] for l in sorted(set(line_ids), key=natural_key)]
    vids = set(vertex_ids or ()) | {e[0] for l in keep for e in l.ends}
    verts = [v for v in graph.vertices if v.id in vids]
    covered = {e for l in keep for e in l.ends}
    exts = []
    for v in verts:
        for p in range(1, 5):
            pos = (v.id, p)
            if pos not in covered:
                kind, ident = graph.occupant[pos]
                tag = "x" if kind == "external" else "l"
                exts.append(External(f"{tag}:{ident}@{v.id}.{p}", pos))
    return make_graph(verts, keep, exts, name=f"{graph.name}|sub", relaxed=graph.relaxed)
