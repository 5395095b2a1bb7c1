import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpapprox.branch_check import (
    BudgetExceeded,
    brute_force_check,
    canonical_cycle,
    cycle_table,
    is_branch_structure,
    verify_branch_structure,
)
from cpapprox.complex import OFFSETS, BranchAssignment, hex_patch


def at(cx, *coords):
    return BranchAssignment.simple([cx.vertex_at(k, l) for k, l in coords])


FLOWER = [(0, 0)] + list(OFFSETS)


@pytest.fixture(scope="module")
def p2_table(patches):
    return cycle_table(patches[2], 12)


def test_empty_assignment_ok(patches):
    assert verify_branch_structure(patches[3], BranchAssignment()) is None


@pytest.mark.parametrize(
    "coords",
    [[(0, 0)], [(0, 0), (1, 0)], [(0, 0), (1, 0), (0, 1)], [(-1, 0), (0, 0), (1, 0)]],
    ids=["single", "adjacent-pair", "face", "line"],
)
def test_accepted(patches, coords):
    for g in (2, 3):
        br = at(patches[g], *coords)
        assert is_branch_structure(patches[g], br)
        assert is_branch_structure(patches[g], br, ambient=True)


def test_flower_rejected(patches):
    for g in (2, 3):
        for ambient in (False, True):
            w = verify_branch_structure(patches[g], at(patches[g], *FLOWER), ambient=ambient)
            assert w is not None
            assert (w.length, w.enclosed_weight) == (12, 7)
            assert w.margin == 5
            assert len(set(w.cycle)) == 12
            assert all(max(abs(k), abs(l), abs(k + l)) == 2 for k, l in w.cycle)


def test_flower_witness_matches_brute_force(patches, p2_table):
    cx = patches[2]
    br = at(cx, *FLOWER)
    assert brute_force_check(cx, br, 12, table=p2_table) == verify_branch_structure(cx, br)


def test_rhombus_of_four_rejected(patches):
    cx = patches[3]
    br = at(cx, (0, 0), (1, 0), (0, 1), (-1, 1))
    w = verify_branch_structure(cx, br)
    assert (w.length, w.enclosed_weight) == (10, 4)
    assert w == brute_force_check(cx, br, 10)


def test_witness_is_a_cycle_of_the_complex(patches):
    cx = patches[3]
    w = verify_branch_structure(cx, at(cx, (0, 0), (1, 0), (0, 1), (-1, 1)))
    idx = [cx.vertex_at(*c) for c in w.cycle]
    for a, b in zip(idx, idx[1:] + idx[:1]):
        assert b in cx.neighbors[a]


def test_brute_force_triangles_enclose_nothing(patches):
    cx = patches[2]
    for br in (at(cx, (0, 0)), at(cx, *FLOWER)):
        assert brute_force_check(cx, br, 3) is None


def test_brute_force_adjacent_pair(patches):
    cx = patches[3]
    assert brute_force_check(cx, at(cx, (0, 0), (1, 0)), 6) is None


def test_budget(patches):
    with pytest.raises(BudgetExceeded):
        cycle_table(patches[3], 12, budget=1000)


def test_boundary_branch_vertex_rejected(patches):
    cx = patches[1]
    with pytest.raises(ValueError):
        verify_branch_structure(cx, at(cx, (1, 0)))


def test_canonical_cycle():
    assert canonical_cycle([(1, 0), (0, 1), (0, 0)]) == ((0, 0), (0, 1), (1, 0))
    assert canonical_cycle([(0, 1), (0, 0), (1, 0)]) == ((0, 0), (0, 1), (1, 0))


def test_accepted_assignments_are_simple(patches):
    cx = patches[3]
    br = at(cx, (0, 0), (2, 0))
    assert is_branch_structure(cx, br)
    assert all(k == 1 for _, k in br.entries)


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_rejection_is_monotone(patches, data):
    cx = patches[3]
    interior = cx.interior_vertices.tolist()
    base = data.draw(st.lists(st.sampled_from(interior), min_size=1, max_size=5, unique=True))
    extra = data.draw(st.lists(st.sampled_from([v for v in interior if v not in base]), max_size=2, unique=True))
    small = BranchAssignment.simple(base)
    big = BranchAssignment.simple(base + extra)
    if not is_branch_structure(cx, small):
        assert not is_branch_structure(cx, big)
