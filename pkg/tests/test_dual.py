import json

import networkx as nx
import pytest

from cubeflip.canon import canonicalize
from cubeflip.complex import validate
from cubeflip.dual import (
    CurveArrangement,
    RewriteOp,
    arrangement_key,
    bubble_wrap,
    cube_arrangement,
    dualize,
    figure_eight,
    flip_as_rewrite,
    is_three_connected,
    op_for_site,
    primalize,
    rewrite,
    three_connectivity,
    two_circles,
)
from cubeflip.errors import LocationInvalid, NoCrossings, NotClosedSphere
from cubeflip.flips import all_sites, apply_flip
from cubeflip.meshes import cube_boundary, quad_grid

from conftest import sphere_corpus


def nx_three_connected(a):
    g = nx.MultiGraph()
    g.add_nodes_from(range(a.crossings))
    g.add_edges_from((d >> 2, e >> 2) for d, e in a.edges())
    if a.crossings < 4 or nx.number_of_selfloops(g):
        return False
    if any(len(g.get_edge_data(u, v)) > 1 for u, v in g.edges()):
        return False
    return nx.node_connectivity(nx.Graph(g)) >= 3


def test_cube_dual_has_three_circles():
    a = cube_arrangement()
    assert a.crossings == 6
    assert len(a.curves()) == 3


def test_round_trip_identity(spheres):
    for c in spheres:
        assert canonicalize(primalize(dualize(c), strict=False)) == canonicalize(c)


def test_dualize_rejects_disks():
    with pytest.raises(NotClosedSphere):
        dualize(quad_grid(2, 2))


def test_json_round_trip():
    a = dualize(sphere_corpus()[5])
    b = CurveArrangement.from_json(a.to_json())
    assert arrangement_key(a) == arrangement_key(b)
    assert json.loads(a.to_json())["crossings"] == a.crossings


def test_flip_rewrite_commutation():
    """Dualizing after a flip equals rewriting the dual at the matching site."""
    checked = 0
    for c in sphere_corpus()[:50]:
        a = dualize(c)
        for site in all_sites(c):
            left = dualize(apply_flip(c, site))
            right = rewrite(a, op_for_site(c, site, a))
            assert arrangement_key(left) == arrangement_key(right)
            checked += 1
    assert checked > 500


def test_flip_kinds():
    assert flip_as_rewrite((2, 0)) == "add_circle"
    assert flip_as_rewrite((1, 1)) == "switch"


def test_three_connectivity_matches_networkx(spheres):
    for c in spheres:
        a = dualize(c)
        assert is_three_connected(a) == nx_three_connected(a)


def test_strict_validity_iff_three_connected(spheres):
    seen = set()
    for c in spheres:
        ok = is_three_connected(dualize(c))
        assert validate(c, strict=True).strict_ok == ok
        seen.add(ok)
    assert seen == {True, False}


def test_small_arrangements_not_three_connected():
    for a in (two_circles(), figure_eight()):
        ok, witness = three_connectivity(a)
        assert not ok and witness


@pytest.mark.parametrize("a", [cube_arrangement(), two_circles(), figure_eight()], ids=["cube", "two", "eight"])
def test_bubble_wrap_three_connected(a):
    b = bubble_wrap(a)
    assert b.crossings == 25 * a.crossings
    assert is_three_connected(b) and nx_three_connected(b)


def test_bubble_wrap_needs_crossings():
    with pytest.raises(NoCrossings):
        bubble_wrap(CurveArrangement(0, (), free_loops=1))


def test_add_circle_keeps_primal_valid():
    a = cube_arrangement()
    b = rewrite(a, RewriteOp("add_circle", (0,)))
    assert b.crossings == a.crossings + 4
    assert validate(primalize(b, strict=False)).ok


def test_bad_location():
    with pytest.raises(LocationInvalid):
        rewrite(cube_arrangement(), RewriteOp("push_together", (0, 0), "across"))
