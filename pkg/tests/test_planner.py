import pytest

from cubeflip.canon import canonicalize
from cubeflip.errors import BoundaryMismatch, NoPath, NotClosedSphere, OddParity, ParamOutOfRange
from cubeflip.flips import find_sites, apply_flip, parity_change, parity_sites, replay
from cubeflip.meshes import cube_boundary, quad_grid, quad_torus
from cubeflip.planner import SearchBudget, component_census, disk_seeds, find_path, plan_reduction

from conftest import sphere_corpus

CUBE = canonicalize(cube_boundary())


def test_budget_validation():
    with pytest.raises(ParamOutOfRange):
        SearchBudget(max_cells=0)


def test_reduce_small_even_spheres():
    done = 0
    for c in sphere_corpus():
        if len(c.cells) % 2 or len(c.cells) > 14:
            continue
        plan = plan_reduction(c)
        assert canonicalize(replay(c, plan.sequence)[-1]) == CUBE
        done += 1
    assert done > 40


def test_reduce_rejects_odd():
    c = cube_boundary()
    odd = parity_change(c, *parity_sites(c)[0])[0]
    with pytest.raises(OddParity):
        plan_reduction(odd)


def test_reduce_rejects_torus():
    with pytest.raises(NotClosedSphere):
        plan_reduction(quad_torus())


def test_path_between_flip_neighbours():
    c = cube_boundary()
    d = apply_flip(c, find_sites(c, (1, 0))[0])
    seq = find_path(c, d, SearchBudget(max_cells=10))
    assert canonicalize(replay(c, seq)[-1]) == canonicalize(d)


def test_path_identity_is_empty():
    c = cube_boundary()
    assert len(find_path(c, c)) == 0


def test_cross_parity_has_no_path():
    c = cube_boundary()
    odd = parity_change(c, *parity_sites(c)[0])[0]
    with pytest.raises(NoPath) as info:
        find_path(c, odd, SearchBudget(max_cells=12))
    assert info.value.details["reason"] == "parity"


def test_cross_parity_exhaustive_search_agrees():
    c = cube_boundary()
    odd = parity_change(c, *parity_sites(c)[0])[0]
    with pytest.raises(NoPath) as info:
        find_path(c, odd, SearchBudget(max_cells=9), exhaustive=True)
    assert info.value.details["reason"] == "parity"
    assert info.value.details["states"] > 2


def test_parity_moves_bridge_the_gap():
    c = cube_boundary()
    odd = parity_change(c, *parity_sites(c)[0])[0]
    seq = find_path(c, odd, SearchBudget(max_cells=8), allow_parity=True)
    assert canonicalize(replay(c, seq)[-1]) == canonicalize(odd)


def test_path_needs_same_boundary():
    with pytest.raises(BoundaryMismatch):
        find_path(quad_grid(1, 2), quad_grid(2, 2))


def test_disk_seeds_differ_in_parity():
    a, b = disk_seeds(4)
    assert len(a.cells) % 2 != len(b.cells) % 2


@pytest.mark.parametrize("cap", [6, 7])
def test_small_census_splits_by_parity(cap):
    res = component_census(budget=SearchBudget(max_cells=cap))
    assert res.components == 2
    comp_parity = {(comp, par) for _, comp, par in res.entries}
    assert len(comp_parity) == 2 and {p for _, p in comp_parity} == {0, 1}
    joined = component_census(budget=SearchBudget(max_cells=cap), allow_parity=True)
    assert joined.components == 1


def test_census_is_deterministic():
    a = component_census(budget=SearchBudget(max_cells=6)).to_dict()
    b = component_census(budget=SearchBudget(max_cells=6)).to_dict()
    assert a == b
