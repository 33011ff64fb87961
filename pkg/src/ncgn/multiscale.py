"""Scale attributions, Gallavotti-Nicolò trees and power counting.

For an attribution μ of integer scales in ``[0, ρ]`` to the lines, ``G^i``
is the subgraph of lines with scale ≥ i.  Its connected components, taken
for all i, form a laminar family ordered by inclusion: the Gallavotti-Nicolò
(GN) tree.  A line set that stays a component over several consecutive
scales is a single node, alive on the interval ``e_g < i ≤ i_g``.

Each node gets a superficial degree ω from its number of external legs N,
genus g and broken faces B; the amplitude bound is the product of
``M^{−ω/2}`` over the nodes, counting every scale i ≥ 1 at which the node is
alive.
"""

from __future__ import annotations

import math
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .ribbon_graph import GraphError, PreconditionError, RibbonGraph, natural_key, subgraph
from .topology import TopologyReport, trace_faces

CONVERGENT = "convergent"
LOG_DIVERGENT_2PT = "log-divergent-2pt"
DIVERGENT_2PT = "divergent-2pt"
LOG_DIVERGENT_4PT_B1 = "log-divergent-4pt-B1"
CRITICAL_4PT = "critical-4pt"
IMPROVED_4PT_B2 = "improved-4pt-B2"
NONPLANAR_SUPPRESSED = "nonplanar-suppressed"

DEFAULT_M = 2
DEFAULT_RHO = 8
DEFAULT_BUDGET = 16.0  # bound on I·log(ρ+1), i.e. about 9·10⁶ attributions


@dataclass(frozen=True)
class ScaleAttribution:
    mu: Mapping[str, int]
    rho: int

    def check(self, graph: RibbonGraph) -> None:
        missing = [l.id for l in graph.lines if l.id not in self.mu]
        if missing:
            raise PreconditionError(f"no scale for lines {', '.join(missing)}")
        extra = [l for l in self.mu if l not in graph.line]
        if extra:
            raise PreconditionError(f"scales given for unknown lines {', '.join(sorted(extra))}")
        for l, i in self.mu.items():
            if not 0 <= i <= self.rho:
                raise PreconditionError(f"scale {i} of line {l} outside [0, {self.rho}]")

    @classmethod
    def from_graph(cls, graph: RibbonGraph, rho: int | None = None) -> "ScaleAttribution":
        """Use the scales stored on the graph's lines."""
        mu = graph.scales()
        if rho is None:
            rho = max(mu.values(), default=0)
        return cls(dict(mu), rho)


@dataclass
class GNNode:
    index: tuple[int, int]  # (i_g, k)
    lines: frozenset[str]
    vertices: frozenset[str]
    i_g: int  # lowest line scale inside: the node is a component of G^i for e_g < i ≤ i_g
    e_g: int  # highest scale of an outside line touching the node; −1 for the root
    topology: TopologyReport
    parent: int | None = None
    children: list[int] = field(default_factory=list)
    critical: bool = False
    insertion: str | None = None  # the single line closing a critical node
    omega: int | None = None
    div_class: str | None = None
    forms: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def N(self) -> int:
        return self.topology.N

    @property
    def g(self) -> int:
        return self.topology.g

    @property
    def B(self) -> int:
        return self.topology.B

    @property
    def multiplicity(self) -> int:
        """Number of scales i ≥ 1 at which the node is a component."""
        return max(0, self.i_g - max(self.e_g, 0))

    @property
    def divergent(self) -> bool:
        return self.omega is not None and self.omega <= 0 and self.g == 0

    def as_dict(self) -> dict:
        return {
            "i": self.index[0], "k": self.index[1],
            "lines": sorted(self.lines, key=natural_key),
            "vertices": sorted(self.vertices, key=natural_key),
            "i_g": self.i_g, "e_g": self.e_g, "multiplicity": self.multiplicity,
            "N": self.N, "g": self.g, "B": self.B,
            "omega": self.omega, "div_class": self.div_class,
            "critical": self.critical, "insertion": self.insertion,
            "divergent": self.divergent,
            "forms": self.forms, "notes": list(self.notes),
            "parent": self.parent, "children": list(self.children),
        }


@dataclass
class GNTree:
    graph: RibbonGraph
    attribution: ScaleAttribution
    nodes: list[GNNode]  # nodes[0] is the root; parents precede children

    @property
    def root(self) -> GNNode:
        return self.nodes[0]

    def path_to_root(self, k: int) -> list[int]:
        """Strict ancestors of node k, nearest first."""
        out = []
        p = self.nodes[k].parent
        while p is not None:
            out.append(p)
            p = self.nodes[p].parent
        return out

    def as_dict(self) -> dict:
        return {"rho": self.attribution.rho, "nodes": [n.as_dict() for n in self.nodes]}


# --------------------------------------------------------------------------
# tree construction


def _components(graph: RibbonGraph, line_ids: Iterable[str]) -> list[tuple[frozenset[str], frozenset[str]]]:
    """Connected components (lines, vertices) of the given lines."""
    parent: dict[str, str] = {}

    def find(a: str) -> str:
        parent.setdefault(a, a)
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    lines = [graph.line[l] for l in line_ids]
    for l in lines:
        ra, rb = find(l.end_a[0]), find(l.end_b[0])
        if ra != rb:
            parent[ra] = rb
    groups: dict[str, tuple[set, set]] = {}
    for l in lines:
        r = find(l.end_a[0])
        ls, vs = groups.setdefault(r, (set(), set()))
        ls.add(l.id)
        vs.update((l.end_a[0], l.end_b[0]))
    return [(frozenset(a), frozenset(b)) for a, b in groups.values()]


class _TopologyCache:
    def __init__(self, graph: RibbonGraph):
        self.graph = graph
        self.cache: dict[frozenset[str], TopologyReport] = {}

    def __call__(self, lines: frozenset[str], vertices: frozenset[str]) -> TopologyReport:
        if lines not in self.cache:
            self.cache[lines] = trace_faces(subgraph(self.graph, lines, vertices))
        return self.cache[lines]


def gn_tree(graph: RibbonGraph, mu: ScaleAttribution | Mapping[str, int] | None = None, _topo=None) -> GNTree:
    """Build the GN tree of ``graph`` under the attribution ``mu``.

    Without ``mu`` the scales stored on the lines are used.
    """
    if mu is None:
        mu = ScaleAttribution.from_graph(graph)
    elif not isinstance(mu, ScaleAttribution):
        mu = ScaleAttribution(dict(mu), max(mu.values(), default=0))
    mu.check(graph)
    topo = _topo or _TopologyCache(graph)
    scale = mu.mu

    # distinct components over all i, with the scales where they exist
    found: dict[frozenset[str], frozenset[str]] = {}
    levels = sorted(set(scale.values()))
    for i in levels:
        for ls, vs in _components(graph, [l for l, s in scale.items() if s >= i]):
            found.setdefault(ls, vs)
    all_lines = frozenset(l.id for l in graph.lines)
    all_vertices = frozenset(v.id for v in graph.vertices)
    found.pop(all_lines, None)

    def touching_max(ls: frozenset[str], vs: frozenset[str]) -> int:
        out = -1
        for l in graph.lines:
            if l.id not in ls and (l.end_a[0] in vs or l.end_b[0] in vs):
                out = max(out, scale[l.id])
        return out

    root_ig = min(scale.values(), default=0)
    nodes = [GNNode((root_ig, 0), all_lines, all_vertices, root_ig, -1, topo(all_lines, all_vertices))]
    # larger sets first, so a parent always precedes its children
    order = sorted(found.items(), key=lambda kv: (-len(kv[0]), sorted(natural_key(l) for l in kv[0])))
    for ls, vs in order:
        ig = min(scale[l] for l in ls)
        nodes.append(GNNode((ig, 0), ls, vs, ig, touching_max(ls, vs), topo(ls, vs)))
    # parent = smallest strict superset
    for k in range(1, len(nodes)):
        best = 0
        for p in range(1, k):
            if nodes[k].lines < nodes[p].lines and len(nodes[p].lines) < len(nodes[best].lines):
                best = p
        nodes[k].parent = best
        nodes[best].children.append(k)
    # k-index among nodes sharing i_g
    counters: dict[int, int] = {}
    for node in sorted(nodes[1:], key=lambda n: (n.i_g, sorted(natural_key(l) for l in n.lines))):
        k = counters.get(node.i_g, 0) + (1 if node.i_g == root_ig else 0)
        counters[node.i_g] = counters.get(node.i_g, 0) + 1
        node.index = (node.i_g, k)
    return GNTree(graph, mu, nodes)


def is_laminar(tree: GNTree) -> bool:
    sets = [n.lines for n in tree.nodes]
    return all(a <= b or b <= a or not (a & b) for a, b in itertools.combinations(sets, 2))


# --------------------------------------------------------------------------
# power counting


def _leg_line(ext_id: str) -> str | None:
    """Ambient line id of a component leg named ``l:<id>@v.p``."""
    if ext_id.startswith("l:"):
        return ext_id[2:].rsplit("@", 1)[0]
    return None


def detect_critical(tree: GNTree, k: int) -> bool:
    """A four-point planar node with two broken faces closed by a single line.

    The highest-scale two-point ancestor P is located on the path to the
    root.  The node is critical when one of its broken faces carries exactly
    two legs and both are the ends of the same line of P (the insertion I
    reduced to one line).
    """
    node = tree.nodes[k]
    if not (node.N == 4 and node.g == 0 and node.B == 2):
        raise PreconditionError(f"critical detection needs N=4, g=0, B=2 (got N={node.N}, g={node.g}, B={node.B})")
    parent2 = next((p for p in tree.path_to_root(k) if tree.nodes[p].N == 2), None)
    if parent2 is None:
        node.insertion = None
        return False
    P = tree.nodes[parent2]
    for face in node.topology.faces:
        if len(face.externals) != 2:
            continue
        a, b = (_leg_line(x) for x in face.externals)
        if a is not None and a == b and a in P.lines:
            node.insertion = a
            return True
    node.insertion = None
    return False


def omega_case(N: int, g: int, B: int, critical: bool) -> int:
    """The superficial degree of convergence from (N, g, B, critical)."""
    if g >= 1:
        return N + 4
    if N == 4:
        if B == 1 or critical:
            return 0
        return 4
    return N - 4


def omega(tree: GNTree, k: int) -> int:
    node = tree.nodes[k]
    if node.N == 0:
        raise PreconditionError("power counting of vacuum graphs is not defined")
    critical = False
    if node.N == 4 and node.g == 0 and node.B >= 2:
        critical = node.B == 2 and detect_critical(tree, k)
    node.critical = critical
    node.omega = omega_case(node.N, node.g, node.B, critical)
    return node.omega


def annotate(tree: GNTree, massless: bool = False) -> GNTree:
    """Compute ω, the divergence class and counterterm data for every node."""
    from .clifford import parity_counterterm_class  # local import: clifford is optional here

    for k in range(len(tree.nodes)):
        omega(tree, k)
    # two-point nodes closing a critical node use the γ⁰γ¹ term of that line
    picks: dict[int, str] = {}
    for k, node in enumerate(tree.nodes):
        if node.critical:
            p = next(p for p in tree.path_to_root(k) if tree.nodes[p].N == 2)
            picks[p] = node.insertion
    for k, node in enumerate(tree.nodes):
        node.notes = []
        node.forms = {}
        if node.g >= 1:
            node.div_class = NONPLANAR_SUPPRESSED
        elif node.N == 2:
            node.div_class = LOG_DIVERGENT_2PT if massless else DIVERGENT_2PT
            comp = subgraph(tree.graph, node.lines, node.vertices).with_scales(tree.attribution.mu)
            cls = parity_counterterm_class(comp, k in picks, lowest_line=picks.get(k), massless=massless)
            node.forms = cls.as_dict()
            if k in picks:
                node.notes.append("lowest line uses its γ⁰γ¹ term in the counterterm")
        elif node.N == 4 and node.B == 1:
            node.div_class = LOG_DIVERGENT_4PT_B1
            node.forms = {"counterterm": "vertex-form"}
        elif node.N == 4 and node.critical:
            node.div_class = CRITICAL_4PT
            node.notes.append("renormalized by enclosing 2-point function")
        elif node.N == 4:
            node.div_class = IMPROVED_4PT_B2
        else:
            node.div_class = CONVERGENT
            if node.B >= 2:
                node.notes.append("several broken faces: no improvement rule applied")
    return tree


def classify_divergences(graph: RibbonGraph, mu=None, massless: bool = False) -> list[tuple[GNNode, str, dict]]:
    tree = annotate(gn_tree(graph, mu), massless=massless)
    return [(n, n.div_class, n.forms) for n in tree.nodes]


def bound_exponent(tree: GNTree) -> int:
    """The exponent e with bound = M^e, i.e. −Σ ω·multiplicity/2 (ω is even)."""
    total = 0
    for k, node in enumerate(tree.nodes):
        w = node.omega if node.omega is not None else omega(tree, k)
        total += w * node.multiplicity
    assert total % 2 == 0
    return -total // 2


def _power(M, e: int):
    if isinstance(M, (int, Fraction)):
        return Fraction(M) ** e
    return float(M) ** e


def bound_estimate(graph: RibbonGraph, mu=None, M=DEFAULT_M):
    """Π over GN nodes of ``M^{−ω/2}`` per scale of existence (the K^n factor omitted)."""
    if not M > 1:
        raise PreconditionError("M must exceed 1")
    tree = gn_tree(graph, mu)
    return _power(M, bound_exponent(tree))


# --------------------------------------------------------------------------
# attribution sums


@dataclass(frozen=True)
class AttributionSum:
    rho: int
    M: object
    totals: tuple  # totals[r] = Σ over attributions with all scales ≤ r
    count: int  # number of attributions enumerated
    exponent_counts: Mapping[tuple[int, int], int]  # (max scale, exponent) -> multiplicity

    def as_dict(self) -> dict:
        return {
            "rho": self.rho,
            "M": str(self.M),
            "totals": [float(t) for t in self.totals],
            "totals_exact": [str(t) for t in self.totals],
            "attributions": self.count,
        }


def _exponents_chunk(args) -> dict[tuple[int, int], int]:
    graph, rho, first_scales = args
    lids = [l.id for l in graph.lines]
    topo = _TopologyCache(graph)
    out: dict[tuple[int, int], int] = {}
    rest = len(lids) - 1
    for tail in itertools.product(range(rho + 1), repeat=rest):
        scales = (first_scales,) + tail
        mu = ScaleAttribution(dict(zip(lids, scales)), rho)
        tree = gn_tree(graph, mu, _topo=topo)
        key = (max(scales), bound_exponent(tree))
        out[key] = out.get(key, 0) + 1
    return out


def sum_attributions(graph: RibbonGraph, rho: int = DEFAULT_RHO, M=DEFAULT_M,
                     budget: float = DEFAULT_BUDGET, jobs: int = 1) -> AttributionSum:
    """Exact sum of the bound over all (ρ+1)^I attributions, for every cutoff 0..ρ.

    Each attribution only contributes ``M^e`` for an integer ``e``, so the
    enumeration collects the exponents and the totals are accumulated in a
    fixed order (exactly for rational M); the result does not depend on
    ``jobs``.
    """
    if rho < 0:
        raise PreconditionError("rho must be ≥ 0")
    if not M > 1:
        raise PreconditionError("M must exceed 1")
    if graph.is_vacuum:
        raise PreconditionError("power counting of vacuum graphs is not defined")
    I = graph.I
    if I * math.log(rho + 1) > budget:
        raise PreconditionError(f"attribution budget exceeded: I·log(ρ+1) = {I * math.log(rho + 1):.2f} > {budget}")
    counts: dict[tuple[int, int], int] = {}
    if I == 0:
        tree = gn_tree(graph, ScaleAttribution({}, rho))
        counts[(0, bound_exponent(tree))] = 1
    else:
        tasks = [(graph, rho, s) for s in range(rho + 1)]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as ex:
                parts = list(ex.map(_exponents_chunk, tasks))
        else:
            parts = [_exponents_chunk(t) for t in tasks]
        for part in parts:
            for key, c in part.items():
                counts[key] = counts.get(key, 0) + c
    by_max = [0] * (rho + 1)
    for (m, e) in sorted(counts):
        by_max[m] += counts[(m, e)] * _power(M, e)
    totals = list(itertools.accumulate(by_max))
    return AttributionSum(rho, M, tuple(totals), sum(counts.values()), dict(sorted(counts.items())))


def growth_profile(result: AttributionSum) -> list:
    """Increments ``totals[r] − totals[r−1]`` for r = 1..ρ."""
    t = result.totals
    return [t[r] - t[r - 1] for r in range(1, len(t))]


def tadpole_series(rho: int, M) -> list:
    """Σ_{i=0}^{r} M^i for r = 0..ρ: a single two-point node with ω = −2."""
    return list(itertools.accumulate(_power(M, i) for i in range(rho + 1)))


def bubble_series(rho: int, M) -> list:
    """Two lines in a B=1 bubble: (r+1) + 2 Σ_{d=1}^{r} (r+1−d) M^{−d}."""
    return [(r + 1) + 2 * sum((r + 1 - d) * _power(M, -d) for d in range(1, r + 1)) for r in range(rho + 1)]


def per_scale_bound_exponent(graph: RibbonGraph, mu: Mapping[str, int], critical_lines: Sequence[frozenset] = ()) -> int:
    """Reference evaluation of the bound: scan every i = 1..max μ separately.

    At each scale the components of ``G^i`` are recomputed from scratch and
    their degree is looked up from (N, g, B); ``critical_lines`` lists the
    line sets that are to be treated as critical components.
    """
    total = 0
    top = max(mu.values(), default=0)
    crit = set(critical_lines)
    for i in range(1, top + 1):
        for ls, vs in _components(graph, [l for l, s in mu.items() if s >= i]):
            t = trace_faces(subgraph(graph, ls, vs))
            total += omega_case(t.N, t.g, t.B, ls in crit)
    return -total // 2
