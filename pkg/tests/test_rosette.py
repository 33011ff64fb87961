from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import all_small_graphs, load
from ncgn.forms import OmegaPoly, PhaseForm, rref_substitution, sym, sym_str
from ncgn.orientation import orient, relations
from ncgn.ribbon_graph import PreconditionError, admissible_roots, all_spanning_trees, total_order
from ncgn.rosette import (
    agrees_with_oracle,
    branch,
    brute_force_phase,
    expanded_deltas,
    expected_masslet_determinant,
    filk_reduce,
    masslet_forms,
    omega_dress,
    rosette_general,
    rosette_orientable,
    rosette_planar_regular,
    vertex_deltas,
    vertex_phases,
)
from ncgn.orientation import line_variables
from ncgn.topology import trace_faces


def _draw_ordered(g, data):
    trees = all_spanning_trees(g) or [frozenset()]
    tree = data.draw(st.sampled_from(trees))
    return total_order(g, tree, data.draw(st.sampled_from(admissible_roots(g, tree))))


def test_vertex_phase_of_single_vertex():
    od = total_order(load("tadpole_middle"))
    phase, deltas = vertex_phases(od)
    s = lambda k: sym("s", k)  # noqa: E731
    # Σ_{i<j} (-1)^{i+j+1} s_i ∧ s_j
    for i in range(1, 5):
        for j in range(i + 1, 5):
            assert phase.wedge_coeff(s(i), s(j)) == (-1) ** (i + j + 1)
    assert str(deltas["vertex:1"]) == "s[1] - s[2] + s[3] - s[4]"


def test_tadpole_phase_in_line_variables():
    od = total_order(load("tadpole_middle"))
    o = orient(od)
    bf = brute_force_phase(od, o)
    assert bf
    ros = rosette_general(od, o, relations(od))
    assert agrees_with_oracle(od, o, ros.phase)


@settings(max_examples=120, deadline=None)
@given(st.sampled_from(all_small_graphs(3)), st.data())
def test_general_form_matches_oracle(g, data):
    od = _draw_ordered(g, data)
    o = orient(od)
    rel = relations(od)
    gen = rosette_general(od, o, rel).phase
    assert agrees_with_oracle(od, o, gen)
    assert agrees_with_oracle(od, o, rosette_orientable(od, o, rel).phase)
    t = trace_faces(g)
    if t.g == 0 and t.B == 1:
        assert agrees_with_oracle(od, o, rosette_planar_regular(od, o, rel, t).phase)


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(all_small_graphs(3)), st.data())
def test_branch_deltas_span_vertex_deltas(g, data):
    od = _draw_ordered(g, data)
    o = orient(od)
    assert expanded_deltas(od, o).equivalent(vertex_deltas(od, o))


def test_branch_of_tree_line():
    g = load("eightpoint")
    od = total_order(g)
    assert branch(od, "l1") == {"2", "3"}
    assert branch(od, "l2") == {"3"}


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(all_small_graphs(3)), st.data())
def test_first_filk_move_is_exact_modulo_deltas(g, data):
    od = _draw_ordered(g, data)
    o = orient(od)
    phase, delta = filk_reduce(od, o)
    lv = line_variables(od, o)
    assert agrees_with_oracle(od, o, phase.substitute(lv))
    vd = vertex_deltas(od, o)
    assert len(rref_substitution(list(vd.forms) + [delta.substitute(lv)])) == vd.rank()


def test_planar_regular_domain():
    g = load("nonplanar2")
    od = total_order(g)
    o = orient(od)
    with pytest.raises(PreconditionError, match="planar regular"):
        rosette_planar_regular(od, o, relations(od), trace_faces(g))


def test_general_form_on_clashing_lines_disagrees():
    # The closed form is only established for orientable graphs; on the
    # crossed non-orientable vacuum vertex it is kept literal and differs.
    g = load("vacuum_nonorientable", relaxed=True)
    od = total_order(g)
    o = orient(od)
    assert str(brute_force_phase(od, o)) == "(-1/2) u[l1]^u[l2]"
    assert not agrees_with_oracle(od, o, rosette_general(od, o, relations(od)).phase)
    with pytest.raises(PreconditionError):
        rosette_orientable(od, o, relations(od))


def test_omega_dressing_of_diagonal_terms():
    od = total_order(load("tadpole_middle"))
    o = orient(od)
    ros = rosette_orientable(od, o, relations(od))
    dressed = omega_dress(ros.phase, o)
    c = dressed.wedge_coeff(sym("w", "l1"), sym("u", "l1"))
    base = OmegaPoly.lift(ros.phase.wedge_coeff(sym("w", "l1"), sym("u", "l1")))
    assert c - base == OmegaPoly.omega() * Fraction(o.epsilon["l1"] * o.eps["l1"], 2)


def test_omega_dressing_with_branch_deltas_adds_momenta():
    od = total_order(load("eightpoint"))
    o = orient(od)
    from ncgn.rosette import branch_deltas

    dressed = omega_dress(PhaseForm(), o, branch_deltas(od, o), od)
    assert {sym_str(s) for s in dressed.symbols()} >= {"p[l1]", "p[l2]"}
    with pytest.raises(ValueError):
        omega_dress(PhaseForm(), o, branch_deltas(od, o))


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(all_small_graphs(3)), st.data())
def test_masslet_jacobian(g, data):
    od = _draw_ordered(g, data)
    o = orient(od)
    mf = masslet_forms(od, o, relations(od))
    assert mf.lower_triangular
    assert mf.determinant() == mf.diagonal_product == expected_masslet_determinant(o)
    # 2^{-(2n - N/2)} Π(1 + ϵΩ), evaluated at a few rational Ω
    for om in (Fraction(0), Fraction(1, 3), Fraction(-2, 7)):
        want = Fraction(1, 2 ** (2 * g.n - g.N // 2))
        for l in g.lines:
            want *= 1 + o.epsilon[l.id] * om
        assert mf.determinant()(om) == want
