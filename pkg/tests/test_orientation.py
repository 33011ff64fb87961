from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import all_small_graphs, load
from ncgn.forms import LinearForm, sym
from ncgn.orientation import (
    CONVERSE,
    LOOP,
    LOOP_MINUS,
    LOOP_PLUS,
    PREC,
    SUB,
    SUCC,
    SUP,
    TREE,
    ClashingLineError,
    interval_relation,
    inverse_line_variables,
    line_variables,
    orient,
    point_relation,
    relations,
)
from ncgn.ribbon_graph import admissible_roots, all_spanning_trees, total_order


def _ordered_draw(g, data):
    trees = all_spanning_trees(g) or [frozenset()]
    tree = data.draw(st.sampled_from(trees))
    return total_order(g, tree, data.draw(st.sampled_from(admissible_roots(g, tree))))


def test_single_vertex_by_hand():
    od = total_order(load("tadpole_middle"))
    o = orient(od)
    assert od.ends("l1") == (2, 3)
    assert o.classes == {"l1": LOOP}
    assert o.eps["l1"] == 1  # smaller end even
    assert o.epsilon["l1"] == 1  # position 2 carries psi
    assert o.eta == {"x1": 1, "x2": -1}
    assert o.orientable


def test_tadpole_on_first_positions():
    od = total_order(load("tadpole"), root=("1", 3))
    o = orient(od)
    # numbering starts at 1.3, so l1 sits on 3 and 4 with its psibar end first
    assert od.ends("l1") == (3, 4)
    assert o.eps["l1"] == -1
    assert o.epsilon["l1"] == -1


def test_interval_relations():
    assert interval_relation((1, 2), (3, 4)) == PREC
    assert interval_relation((3, 4), (1, 2)) == SUCC
    assert interval_relation((2, 3), (1, 4)) == SUB
    assert interval_relation((1, 4), (2, 3)) == SUP
    assert interval_relation((1, 3), (2, 4)) == "ltimes"
    assert interval_relation((2, 4), (1, 3)) == "rtimes"
    with pytest.raises(ValueError):
        interval_relation((1, 2), (2, 3))
    assert point_relation((2, 5), 3) == SUP
    assert point_relation((2, 5), 1) == SUCC
    assert point_relation((2, 5), 7) == PREC


def test_clashing_lines_only_in_relaxed_mode():
    g = load("vacuum_nonorientable", relaxed=True)
    od = total_order(g)
    o = orient(od)
    assert sorted(o.classes.values()) == sorted([LOOP_PLUS, LOOP_MINUS])
    assert o.eps == {"l1": -1, "l2": 1}
    assert not o.orientable
    with pytest.raises(ClashingLineError):
        orient(od, relaxed=False)


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(all_small_graphs(3)), st.data())
def test_orientable_graphs_have_no_clashes(g, data):
    od = _ordered_draw(g, data)
    o = orient(od)
    assert o.orientable
    assert set(o.lines_in(TREE)) == set(od.tree)
    for k, s in o.sign_at_position.items():
        assert s == (1 if k % 2 else -1)
    for l in g.lines:
        i, j = od.ends(l.id)
        assert (i + j) % 2 == 1
        assert o.eps[l.id] == (1 if i % 2 == 0 else -1)


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(all_small_graphs(3)), st.data())
def test_relations_are_converse_symmetric(g, data):
    rel = relations(_ordered_draw(g, data))
    for (a, b), r in rel.lines.items():
        assert rel.of(b, a) == CONVERSE[r]


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(all_small_graphs(3) + [load("vacuum_nonorientable", relaxed=True)]), st.data())
def test_line_variables_invert(g, data):
    od = _ordered_draw(g, data)
    o = orient(od)
    fwd = line_variables(od, o)
    back = inverse_line_variables(od, o)
    for k in range(1, 4 * g.n + 1):
        s = sym("s", k)
        assert fwd[s].substitute(back) == LinearForm({s: Fraction(1)})
    for v, form in back.items():
        assert form.substitute(fwd) == LinearForm({v: Fraction(1)})
