import pytest

from cubeflip.canon import boundary_key, canonicalize
from cubeflip.catalog import FlipClass
from cubeflip.complex import euler_and_homology, validate
from cubeflip.errors import DimensionMismatch, NotAdjacent, SiteStale
from cubeflip.flips import (
    FlipSequence,
    apply_flip,
    find_sites,
    flip_step,
    grid_refine,
    moves,
    parity_change,
    parity_inverse,
    parity_inverse_sites,
    parity_sites,
    parity_step,
    pillow,
    replay,
)
from cubeflip.meshes import bicuboid, cube_boundary, quad_grid, single_hex

from conftest import full_corpus, sphere_corpus


def test_cube_has_twelve_push_sites():
    assert len(find_sites(cube_boundary(), (1, 0))) == 12


def test_single_quad_splits_into_five():
    g = quad_grid(1, 1)
    (site,) = find_sites(g, (2, 0))
    res = apply_flip(g, site)
    assert len(res.cells) == 5 and validate(res).ok
    assert res.vertex_count == 8


def test_pillow_gives_seven_hexes():
    r = pillow(single_hex(), 0)
    assert len(r.cells) == 7
    assert euler_and_homology(r) == (1, (1, 0, 0, 0))


def test_pillow_needs_hexes():
    with pytest.raises(DimensionMismatch):
        pillow(cube_boundary(), 0)


def test_bicuboid_two_to_six():
    (site,) = find_sites(bicuboid(), (2, 0))
    assert len(apply_flip(bicuboid(), site).cells) == 6


def _invariants(c):
    return (validate(c).ok, boundary_key(c), euler_and_homology(c), len(c.cells) % 2)


def test_flips_preserve_invariants():
    """Every applicable flip on every corpus mesh keeps validity, boundary,
    homology and cell-count parity."""
    total = 0
    for c in full_corpus():
        before = _invariants(c)
        for step, res in moves(c):
            assert _invariants(res) == before, step
            total += 1
    assert total > 1000


def test_parity_change_toggles_parity():
    for c in sphere_corpus()[:60]:
        for a, b in parity_sites(c)[:4]:
            try:
                res, _, _ = parity_change(c, a, b)
            except Exception:
                continue
            assert len(res.cells) % 2 != len(c.cells) % 2
            assert euler_and_homology(res) == euler_and_homology(c)
            assert validate(res).ok


def test_parity_change_needs_shared_edge():
    c = cube_boundary()
    opposite = next((i, j) for i in range(6) for j in range(i + 1, 6)
                    if not set(c.cells[i]) & set(c.cells[j]))
    with pytest.raises(NotAdjacent):
        parity_change(c, *opposite)


def test_parity_inverse_round_trip():
    c = cube_boundary()
    res, hexa, x = parity_change(c, *parity_sites(c)[0])
    assert x in parity_inverse_sites(res)
    back = [parity_inverse(res, x, s)[0] for s in range(3)]
    assert any(canonicalize(b) == canonicalize(c) for b in back)


def test_flip_then_inverse_restores():
    for c in (cube_boundary(), quad_grid(2, 2), bicuboid(), grid_refine(cube_boundary(), 2)):
        for step, res in moves(c)[:15]:
            cl = FlipClass(*step.flip_class, c.dim + 1).inverse
            keys = {canonicalize(apply_flip(res, s)) for s in find_sites(res, (cl.X, cl.Y))}
            assert canonicalize(c) in keys


def test_grid_refine_counts():
    assert len(grid_refine(cube_boundary(), 3).cells) == 54
    r = grid_refine(single_hex(), 2)
    assert len(r.cells) == 8 and validate(r).ok
    assert r.coords is not None


def test_sequence_json_round_trip():
    c = cube_boundary()
    steps = []
    cur = c
    for cls in ((1, 0), (0, 1), (1, 1)):
        sites = find_sites(cur, cls)
        if not sites:
            continue
        cur, st = flip_step(cur, sites[0])
        steps.append(st)
    cur, st = parity_step(cur, *parity_sites(cur)[0])
    steps.append(st)
    seq = FlipSequence(canonicalize(c).hex(), steps)
    back = FlipSequence.from_json(seq.to_json())
    out = replay(c, back)
    assert canonicalize(out[-1]) == canonicalize(cur)


def test_replay_checks_initial_key():
    seq = FlipSequence(canonicalize(quad_grid(1, 1)).hex(), [])
    with pytest.raises(SiteStale):
        replay(cube_boundary(), seq)


def test_find_sites_deterministic():
    c = grid_refine(cube_boundary(), 2).without_coords()
    assert find_sites(c, (1, 1)) == find_sites(c, (1, 1))
