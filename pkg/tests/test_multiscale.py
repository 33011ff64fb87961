import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import all_small_graphs, load, small_graphs
from ncgn.multiscale import (
    CONVERGENT,
    CRITICAL_4PT,
    DIVERGENT_2PT,
    IMPROVED_4PT_B2,
    LOG_DIVERGENT_2PT,
    LOG_DIVERGENT_4PT_B1,
    NONPLANAR_SUPPRESSED,
    ScaleAttribution,
    _TopologyCache,
    annotate,
    bound_estimate,
    bound_exponent,
    bubble_series,
    classify_divergences,
    detect_critical,
    gn_tree,
    growth_profile,
    is_laminar,
    omega,
    per_scale_bound_exponent,
    sum_attributions,
    tadpole_series,
)
from ncgn.ribbon_graph import PreconditionError, make_graph, spanning_tree, subgraph

# the five degree cases as a lookup table: (N, g, B, critical) -> ω
def table_omega(N, g, B, critical):
    if g >= 1:
        return {2: 6, 4: 8, 6: 10, 8: 12}[N]
    if N == 4:
        return {(1, False): 0, (2, True): 0, (2, False): 4}.get((B, critical), 4)
    return {2: -2, 6: 2, 8: 4}[N]


def non_vacuum(max_n):
    return [g for g in all_small_graphs(max_n) if not g.is_vacuum]


def attributions(g, rho):
    lids = [l.id for l in g.lines]
    for sc in itertools.product(range(rho + 1), repeat=len(lids)):
        yield ScaleAttribution(dict(zip(lids, sc)), rho)


# ---------------------------------------------------------------------------
# GN tree construction


def test_single_scale_gives_single_node():
    t = gn_tree(load("bubble"))
    assert len(t.nodes) == 1
    assert t.root.lines == {"l1", "l2"} and t.root.i_g == 2 and t.root.multiplicity == 2


def test_two_scales_nest():
    g = load("bubble").with_scales({"l1": 7, "l2": 3})
    t = gn_tree(g)
    assert [sorted(n.lines) for n in t.nodes] == [["l1", "l2"], ["l1"]]
    child = t.nodes[1]
    assert child.parent == 0 and t.nodes[0].children == [1]
    assert (child.i_g, child.e_g, child.multiplicity) == (7, 3, 4)


def test_graph_without_lines_has_bare_root():
    g = make_graph([("1", "o1")], [], [(f"x{p}", ("1", p)) for p in range(1, 5)])
    t = gn_tree(g, {})
    assert len(t.nodes) == 1 and not t.root.lines


def test_attribution_checks():
    g = load("bubble")
    with pytest.raises(PreconditionError, match="no scale"):
        gn_tree(g, {"l1": 1})
    with pytest.raises(PreconditionError, match="outside"):
        gn_tree(g, ScaleAttribution({"l1": 1, "l2": 5}, 4))
    with pytest.raises(PreconditionError, match="unknown"):
        gn_tree(g, {"l1": 1, "l2": 1, "l9": 1})


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(non_vacuum(3)), st.data())
def test_laminar_and_tree_compatible(g, data):
    mu = {l.id: data.draw(st.integers(0, 4), label=l.id) for l in g.lines}
    t = gn_tree(g, mu)
    assert is_laminar(t)
    tree = spanning_tree(g, mu)
    for k, node in enumerate(t.nodes):
        # node lines all sit at scale ≥ i_g > e_g, and the node is connected
        assert min((mu[l] for l in node.lines), default=node.i_g) == node.i_g
        assert node.i_g > node.e_g
        for c in node.children:
            assert t.nodes[c].lines < node.lines
        kids = [t.nodes[c].lines for c in node.children]
        assert all(not (a & b) for a, b in itertools.combinations(kids, 2))
        # the scale-maximal spanning tree restricts to a spanning tree of the node
        inner = [l for l in tree if l in node.lines]
        assert len(inner) == len(node.vertices) - 1


# ---------------------------------------------------------------------------
# power counting on the curated suite


def top(name, mu=None):
    g = load(name) if mu is None else load(name).with_scales(mu)
    return annotate(gn_tree(g))


SUITE = [
    # name, scales override, {lines of node: (ω, class)}
    ("tadpole", None, {("l1",): (-2, DIVERGENT_2PT)}),
    ("bubble", None, {("l1", "l2"): (0, LOG_DIVERGENT_4PT_B1)}),
    ("bubble", {"l1": 3, "l2": 1}, {("l1", "l2"): (0, LOG_DIVERGENT_4PT_B1), ("l1",): (2, CONVERGENT)}),
    ("nonplanar2", None, {("l1", "l2", "l3"): (6, NONPLANAR_SUPPRESSED)}),
    ("critical", None, {("l1", "l2", "l3", "l4"): (0, CRITICAL_4PT), ("l1", "l2", "l3", "l4", "l5"): (-2, DIVERGENT_2PT)}),
    ("card_insertion2", None, {("l1", "l2"): (4, IMPROVED_4PT_B2)}),
    ("critical_small", None, {("l1", "l2"): (0, CRITICAL_4PT)}),
    ("triangle", None, {("l1", "l2", "l3"): (2, CONVERGENT)}),
    ("fourpoint_b2", None, {("l1", "l2"): (4, IMPROVED_4PT_B2)}),
    ("nonplanar4", None, {("l1", "l2", "l3", "l4"): (8, NONPLANAR_SUPPRESSED)}),
    ("eightpoint", None, {("l1", "l2"): (4, CONVERGENT)}),
    ("sunset", None, {("l1", "l2", "l3"): (-2, DIVERGENT_2PT)}),
]


@pytest.mark.parametrize("name, mu, want", SUITE, ids=[f"{s[0]}-{k}" for k, s in enumerate(SUITE)])
def test_power_counting_suite(name, mu, want):
    t = top(name, mu)
    got = {tuple(sorted(n.lines)): (n.omega, n.div_class) for n in t.nodes}
    for lines, value in want.items():
        assert got[lines] == value


def test_critical_node_is_annotated():
    t = top("critical")
    node = next(n for n in t.nodes if n.critical)
    assert node.insertion == "l5"
    assert "renormalized by enclosing 2-point function" in node.notes
    root = t.root
    assert root.forms["case"] == "1(b)" and root.forms["lowest_line"] == "l5"
    assert node.omega == 0 and node.divergent


def test_triangle_carries_informational_note():
    t = top("triangle")
    assert t.root.notes == ["several broken faces: no improvement rule applied"]


def test_detect_critical_precondition_and_missing_parent():
    t = annotate(gn_tree(load("bubble")))
    with pytest.raises(PreconditionError):
        detect_critical(t, 0)
    t = gn_tree(load("fourpoint_b2"))
    assert detect_critical(t, 0) is False


def test_same_shape_closed_by_two_lines_is_not_critical():
    # l3 and l4 both close the {l1, l2} component: the insertion has two lines
    t = top("card_insertion2")
    assert not any(n.critical for n in t.nodes)


def test_massless_two_point_class():
    nodes = classify_divergences(load("sunset"), massless=True)
    node, cls, forms = nodes[0]
    assert cls == LOG_DIVERGENT_2PT
    assert "mass" not in forms["divergent"]


def test_vacuum_power_counting_is_rejected():
    with pytest.raises(PreconditionError):
        annotate(gn_tree(load("vacuum_orientable").with_scales({"l1": 1, "l2": 1})))
    with pytest.raises(PreconditionError):
        sum_attributions(load("vacuum_orientable"), rho=2)


def test_bound_estimate_examples():
    assert bound_estimate(load("bubble").with_scales({"l1": 1, "l2": 1}), M=2) == 1
    assert bound_estimate(load("tadpole"), M=2) == 2
    # nested: two-point root with ω = −2 around a B=1 four-point node with ω = 0
    t = top("case_1a")
    assert sorted(n.omega for n in t.nodes) == [-2, 0]
    assert bound_estimate(load("case_1a"), M=2) == 2
    assert bound_estimate(load("tadpole"), M=2.0) == pytest.approx(2.0)
    with pytest.raises(PreconditionError):
        bound_estimate(load("tadpole"), M=1)


def _shifted(g, lines, vertices, mu, e):
    sub = subgraph(g, lines, vertices)
    return sub, {l: mu[l] - max(e, 0) for l in lines}


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(non_vacuum(3)), st.data())
def test_bound_is_multiplicative_over_disjoint_subtrees(g, data):
    mu = {l.id: data.draw(st.integers(0, 4), label=l.id) for l in g.lines}
    t = annotate(gn_tree(g, mu))
    # keep away from critical detection, which looks at ancestors outside a subtree
    if any(n.N == 4 and n.g == 0 and n.B == 2 for n in t.nodes):
        return
    M = Fraction(3)
    root = t.root
    want = M ** Fraction(-root.omega * root.multiplicity, 2)
    for c in root.children:
        child = t.nodes[c]
        sub, smu = _shifted(g, child.lines, child.vertices, mu, root.i_g)
        want *= bound_estimate(sub, smu, M)
    assert bound_estimate(g, mu, M) == want


def test_omega_table_exhaustive_small():
    """ω against the lookup table on every graph n ≤ 3 and every μ with ρ = 3."""
    for g in non_vacuum(3):
        rho = 3
        topo = _TopologyCache(g)
        for mu in attributions(g, rho):
            t = gn_tree(g, mu, _topo=topo)
            for k, node in enumerate(t.nodes):
                w = omega(t, k)
                assert w == table_omega(node.N, node.g, node.B, node.critical)


def test_bound_against_per_scale_oracle():
    for g in non_vacuum(2):
        for mu in attributions(g, 3):
            t = annotate(gn_tree(g, mu))
            crit = [n.lines for n in t.nodes if n.critical]
            assert bound_exponent(t) == per_scale_bound_exponent(g, mu.mu, crit)


@settings(max_examples=150, deadline=None)
@given(st.sampled_from(non_vacuum(3)), st.data())
def test_bound_against_per_scale_oracle_sampled(g, data):
    mu = {l.id: data.draw(st.integers(0, 5), label=l.id) for l in g.lines}
    t = annotate(gn_tree(g, mu))
    crit = [n.lines for n in t.nodes if n.critical]
    assert bound_exponent(t) == per_scale_bound_exponent(g, mu, crit)


# ---------------------------------------------------------------------------
# attribution sums


def test_tadpole_sum_is_geometric():
    res = sum_attributions(load("tadpole"), rho=8, M=2)
    assert list(res.totals) == tadpole_series(8, 2)
    assert growth_profile(res) == [Fraction(2) ** r for r in range(1, 9)]
    assert res.count == 9


def test_bubble_sum_grows_linearly():
    res = sum_attributions(load("bubble"), rho=8, M=2)
    assert list(res.totals) == bubble_series(8, 2)
    inc = growth_profile(res)
    # increments approach 1 + 2/(M−1) = 3 from below
    assert all(a < b for a, b in zip(inc, inc[1:]))
    assert abs(inc[-1] - 3) < Fraction(1, 50)


def test_nonplanar_sum_saturates():
    res = sum_attributions(load("nonplanar2"), rho=8, M=2)
    want = [sum(Fraction(1, 2 ** i) for i in range(r + 1)) ** 3 for r in range(9)]
    assert list(res.totals) == want


def test_sum_is_independent_of_jobs():
    g = load("sunset")
    assert sum_attributions(g, rho=4, M=2, jobs=1) == sum_attributions(g, rho=4, M=2, jobs=2)


def test_budget_guard():
    with pytest.raises(PreconditionError, match="budget"):
        sum_attributions(load("critical"), rho=8, budget=5.0)
