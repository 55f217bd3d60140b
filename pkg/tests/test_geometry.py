import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from cubeflip.complex import boundary_faces, validate
from cubeflip.errors import ClassNotAutomatic, ParamOutOfRange, PatternMismatch
from cubeflip.geometry import (
    Realization,
    ToleranceConfig,
    by_orientation,
    check_flippability,
    check_realization,
    four_squares,
    generate,
    hex_torus,
    middle_warp,
    ngwbc,
    planarity_defect,
    random_before,
    realize_flip,
    rhombic_dodecahedron,
    shifted_core,
    shrunken_01,
    stacked_cubes,
    trapezoid_prism,
    unit_cube,
    warped_bicuboid,
)


def hand_defect(points, cloud):
    p = np.array(points, float)
    L = max(np.linalg.norm(np.subtract(a, b)) for a, b in itertools.combinations(cloud, 2))
    m = np.array([p[1] - p[0], p[2] - p[0], p[3] - p[0]])
    det = (m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
           - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
           + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0]))
    return abs(det) / L ** 3


# -- classification ------------------------------------------------------------------------


def test_unit_cube_geometric_generic():
    chk = check_realization(unit_cube())
    assert chk.classification == "geometric" and chk.generic


def test_lifted_corner_is_invalid():
    r = unit_cube()
    pts = np.array(r.coords)
    pts[7] += [0.0, 0.0, 0.2]
    chk = check_realization(r.with_coords(pts))
    assert chk.classification == "invalid"
    assert chk.issues[0]["kind"] == "warped_quad" and chk.issues[0]["defect"] > 1e-3


def test_inverted_cell_detected():
    r = stacked_cubes()
    pts = np.array(r.coords)
    pts[8:12, 2] = 0.5  # top face pushed through the shared face
    chk = check_realization(r.with_coords(pts))
    assert chk.classification != "geometric"
    assert any(i["kind"] in ("inverted", "overlap") for i in chk.issues)


def test_overlapping_cells_detected():
    from cubeflip.complex import CubicalComplex

    corners = [(i & 1, i >> 1 & 1, i >> 2 & 1) for i in range(8)]
    pts = corners + [(x + 0.5, y, z) for x, y, z in corners]
    c = CubicalComplex(3, 16, [tuple(range(8)), tuple(range(8, 16))])
    chk = check_realization(Realization(c, pts))
    assert chk.classification == "self_intersecting"
    assert {"kind": "overlap", "cells": [0, 1]} in chk.issues


def test_bowtie_quad_invalid():
    from cubeflip.complex import CubicalComplex

    c = CubicalComplex(2, 4, [(0, 1, 2, 3)])
    r = Realization(c, [(0, 0, 0), (2, 0, 0), (0, 1, 0), (1, 1, 0)])
    assert check_realization(r).issues[0]["kind"] == "nonconvex_quad"
    # the symmetric bow tie has no area at all
    r = Realization(c, [(0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 0)])
    assert check_realization(r).issues[0]["kind"] == "flat_quad"


def test_ngwbc_self_intersecting_nongeneric():
    r = ngwbc()
    chk = check_realization(r)
    assert validate(r.complex).ok and len(r.complex.cells) == 6
    assert chk.classification == "self_intersecting" and not chk.generic
    # every vertex lies on the unit cube's surface
    p = r.coords
    on_face = np.isclose(p, 0).any(axis=1) | np.isclose(p, 1).any(axis=1)
    assert on_face.all()
    ring = sorted((p[v] for v in range(len(p)) if 0 < p[v][2] < 1), key=lambda q: math.atan2(q[1] - 0.5, q[0] - 0.5))
    assert len(ring) == 4
    assert hand_defect(ring, p) > 1e-3


def test_warped_bicuboid_surface():
    r = warped_bicuboid(warp=0.1)
    assert check_realization(r).classification == "geometric"
    assert middle_warp(r) > 1e-3
    assert middle_warp(warped_bicuboid(warp=0.0)) < 1e-12


def test_hex_torus_counts_and_validity():
    for k, n in ((2, 6), (3, 9)):
        r = hex_torus(3, k)
        assert len(r.complex.cells) == n
        assert validate(r.complex).ok
        assert check_realization(r).classification == "geometric"


# -- automatic flips -----------------------------------------------------------------------


def test_pillow_homothety_values():
    v = realize_flip(unit_cube(), (3, 0), apex=(0.5, 0.5, 0.5), t=0.5)
    assert v.flippable and v.check.classification == "geometric"
    inner = v.realization.coords[8:]
    assert sorted(set(np.round(inner.ravel(), 12))) == [0.25, 0.75]


def test_apex_outside_rejected():
    with pytest.raises(ParamOutOfRange):
        realize_flip(unit_cube(), (3, 0), apex=(2.0, 0.5, 0.5))
    with pytest.raises(ParamOutOfRange):
        realize_flip(unit_cube(), (3, 0), t=1.0)


def test_stacked_cubes_ring_residual_zero():
    v = realize_flip(stacked_cubes(), (2, 0))
    assert v.residual < 1e-12
    # the ring cells pick up flat dihedrals, so only the weak reading accepts
    assert not v.flippable and v.strictly_convex is False
    weak = realize_flip(stacked_cubes(), (2, 0), strict=False)
    assert weak.flippable and len(weak.realization.complex.cells) == 6


def test_symmetric_dodecahedron_zenith_at_centre():
    v = realize_flip(rhombic_dodecahedron(), (0, 0))
    assert v.flippable
    assert np.allclose(v.witness["zenith"], [0, 0, 0], atol=1e-12)


def test_not_automatic():
    with pytest.raises(ClassNotAutomatic):
        realize_flip(unit_cube(), (1, 0))


def test_pattern_mismatch():
    with pytest.raises(PatternMismatch):
        realize_flip(unit_cube(), (2, 0))


@pytest.mark.parametrize("cl", [(3, 0), (2, 0), (0, 0)])
def test_random_instances_flip_and_keep_boundary(cl):
    for seed in range(8):
        r = random_before(cl, seed=seed)
        assert check_realization(r).classification == "geometric"
        v = realize_flip(r, cl)
        assert v.flippable, v.reason
        assert check_realization(v.realization).classification == "geometric"
        before = {tuple(np.round(r.coords[list(f)], 9).ravel()) for f in boundary_faces(r.complex)}
        after = {tuple(np.round(v.realization.coords[list(f)], 9).ravel())
                 for f in boundary_faces(v.realization.complex)}
        key = lambda s: {frozenset(map(tuple, np.reshape(x, (4, 3)))) for x in s}  # noqa: E731
        assert key(before) == key(after)
        if cl == (2, 0):
            assert v.residual <= 1e-9


def test_collapse_flips_realized():
    for cl, inv in (((3, 0), (0, 3)), ((2, 0), (0, 2))):
        up = realize_flip(random_before(cl, seed=3), cl)
        down = realize_flip(up.realization, inv)
        assert down.flippable
        assert len(down.realization.complex.cells) == len(random_before(cl, seed=3).complex.cells)


def test_zenith_strictly_inside_on_random_instances():
    for seed in range(10):
        v = realize_flip(random_before((0, 0), seed=seed), (0, 0))
        assert v.flippable and "face" not in v.witness


# -- non-automatic classes -----------------------------------------------------------------


def test_four_squares_translated_unflippable():
    r = four_squares(translate=(0.3, 0.0, 0.0))
    v = check_flippability(r, (2, 1))
    assert not v.flippable
    w = v.witness
    assert w["defect"] > 1e-6
    assert math.isclose(w["defect"], hand_defect(w["points"], r.coords), rel_tol=1e-9)
    # the witness is one of the diagonal columns: two small and two large corners
    radii = sorted(round(max(abs(p[0]), abs(p[1])), 6) for p in w["points"])
    assert radii[:2] != radii[2:]


def test_four_squares_untranslated_flippable():
    v = check_flippability(four_squares(), (2, 1))
    assert v.flippable and v.check.classification == "geometric"


def test_shifted_core_unflippable():
    v = check_flippability(shifted_core(0.25), (1, 2))
    assert not v.flippable and v.witness["defect"] > 1e-6
    assert check_flippability(shifted_core(0.0), (1, 2)).flippable


def _trapezoid_marked(r_, theta, inner, outer):
    p = lambda i, j, d: (r_ * math.cos(i * theta), r_ * math.sin(i * theta), j - d)  # noqa: E731
    return [p(-2, 1, inner), p(-3, 1, inner), p(3, 1, outer), p(2, 1, outer)]


def test_trapezoid_marked_copies_not_coplanar():
    r = trapezoid_prism(1.0, math.pi / 8, 0.2, 0.5)
    marked = [r.coords[r.labels[f"marked{k}"]] for k in range(4)]
    expect = _trapezoid_marked(1.0, math.pi / 8, 0.2, 0.5)
    assert np.allclose(marked, expect)
    d = hand_defect(expect, r.coords)
    assert d > 1e-6
    v = check_flippability(r, (1, 1))
    assert not v.flippable and v.witness["defect"] >= d - 1e-12


def test_trapezoid_monotone_in_shift_gap():
    base = trapezoid_prism(1.0, math.pi / 8, 0.5, 0.5)
    assert check_flippability(base, (1, 1)).flippable
    gaps = [0.0, 0.01, 0.02, 0.04, 0.08]
    defects = []
    for g in gaps:
        r = trapezoid_prism(1.0, math.pi / 8, 0.5 - g, 0.5)
        m = [r.coords[r.labels[f"marked{k}"]] for k in range(4)]
        defects.append(planarity_defect(m, r.scale))
    assert defects[0] < 1e-15
    assert all(a < b for a, b in zip(defects, defects[1:]))


def test_shrunken_orientation_closed_form():
    delta = 2 / math.sqrt(3)
    for s in (0.3, 0.5, 1.0, 2.0, 3.0):
        assert math.isclose(by_orientation(shrunken_01(s)), s - delta, abs_tol=1e-12)


def test_shrunken_large_and_small():
    big, small = shrunken_01(2.0), shrunken_01(0.5)
    assert check_realization(big).classification == "geometric"
    assert by_orientation(big) > 0 > by_orientation(small)
    assert check_flippability(shrunken_01(2.0, side="10"), (1, 0)).flippable
    v = check_flippability(shrunken_01(0.5, side="10"), (1, 0))
    assert not v.flippable and v.check.classification != "geometric"


def test_shrunken_parallel_edges():
    r = shrunken_01(1.5)
    d = r.coords[r.labels["z"]] - r.coords[r.labels["a"]]
    for k in range(1, 7):
        e = r.coords[r.labels[f"q{k}"]] - r.coords[r.labels[f"p{k}"]]
        assert np.linalg.norm(np.cross(d, e)) < 1e-12
    by = r.coords[r.labels["y"]] - r.coords[r.labels["b"]]
    assert np.linalg.norm(np.cross(d, by)) < 1e-12


# -- parameters and invariance -------------------------------------------------------------


@pytest.mark.parametrize("kind,params", [
    ("trapezoid_prism", {"theta": 1.0}),
    ("trapezoid_prism", {"r": -1.0}),
    ("shrunken_01", {"s": 0.0}),
    ("hex_torus", {"hexes_per_segment": 4}),
    ("four_squares", {"small": 2.0}),
    ("nope", {}),
    ("ngwbc", {"bogus": 1}),
])
def test_param_out_of_range(kind, params):
    with pytest.raises(ParamOutOfRange):
        generate(kind, **params)


def test_tolerance_must_be_positive():
    with pytest.raises(ParamOutOfRange):
        ToleranceConfig(0.0)


@settings(max_examples=25, deadline=None)
@given(
    st.sampled_from(["unit", "four", "four_shift", "trap", "ngwbc", "shrunk"]),
    st.integers(0, 2 ** 31 - 1),
    st.floats(0.01, 100.0),
)
def test_predicates_invariant_under_similarity(kind, seed, factor):
    r = {
        "unit": unit_cube,
        "four": four_squares,
        "four_shift": lambda: four_squares((0.3, 0, 0)),
        "trap": trapezoid_prism,
        "ngwbc": ngwbc,
        "shrunk": lambda: shrunken_01(0.5),
    }[kind]()
    rot = Rotation.random(random_state=seed).as_matrix()
    moved = r.transformed(rot, offset=np.random.default_rng(seed).normal(size=3) * 10, factor=factor)
    a, b = check_realization(r), check_realization(moved)
    assert (a.classification, a.generic, a.degenerate) == (b.classification, b.generic, b.degenerate)
    assert math.isclose(a.max_defect, b.max_defect, rel_tol=1e-6, abs_tol=1e-12)
