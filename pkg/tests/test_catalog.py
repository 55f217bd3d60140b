import itertools

import networkx as nx
import pytest

from cubeflip.catalog import (
    FacetSubset,
    FlipClass,
    class_table,
    classify,
    enumerate_classes,
    generate_pattern,
    is_disk,
    reduced_betti,
)
from cubeflip.complex import euler_and_homology, validate
from cubeflip.errors import DimensionTooLarge, InvalidClass


@pytest.mark.parametrize("d,classes,pairs", [(1, 3, 2), (2, 6, 4), (3, 10, 6)])
def test_class_and_pair_counts(d, classes, pairs):
    cl, pr = enumerate_classes(d)
    assert len(cl) == classes == (d + 1) * (d + 2) // 2
    assert len(pr) == pairs == (d + 2) ** 2 // 4


def test_enumerate_rejects_large_dim():
    with pytest.raises(DimensionTooLarge):
        enumerate_classes(4)


def test_flip_class_validation():
    with pytest.raises(InvalidClass):
        FlipClass(3, 2, 4)
    assert FlipClass(1, 2, 4).inverse == FlipClass(2, 1, 4)
    assert FlipClass(0, 0, 4).cell_count == 4


def test_canonical_subset_classifies_back():
    for n in (2, 3, 4):
        for x in range(n + 1):
            for y in range(n + 1 - x):
                assert classify(FacetSubset.canonical(n, x, y)) == FlipClass(x, y, n)


def test_complement_swaps_class():
    s = FacetSubset.canonical(4, 1, 2)
    assert classify(s.complement()) == FlipClass(2, 1, 4)


def _facet_graph_oracle(n, facets):
    """Euler characteristic and connectivity of the facet union, from counting.

    Faces of the n-cube are strings over {0, 1, *}; a face lies in the union
    when some fixed coordinate matches an included facet.
    """
    faces = [f for f in itertools.product("01*", repeat=n)
             if f.count("*") < n and any(f[a] == str(s) for a, s in facets)]
    chi = sum((-1) ** f.count("*") for f in faces)
    g = nx.Graph()
    verts = [f for f in faces if "*" not in f]
    g.add_nodes_from(verts)
    for f in faces:
        if f.count("*") == 1:
            i = f.index("*")
            g.add_edge(f[:i] + ("0",) + f[i + 1:], f[:i] + ("1",) + f[i + 1:])
    return chi, nx.is_connected(g) if verts else False


@pytest.mark.parametrize("n", [2, 3, 4])
def test_disk_lemma_matches_counting_oracle(n):
    for mask in range(1, 2 ** (2 * n)):
        s = FacetSubset.from_mask(n, mask)
        cl = classify(s)
        expected = cl.X + cl.Y < n
        assert is_disk(s) == expected
        chi, connected = _facet_graph_oracle(n, s.included)
        # a ball is connected with chi = 1; the non-disks here are spheres or
        # have a nontrivial cycle, so counting already separates them
        assert (connected and chi == 1) == expected


def test_reduced_betti_of_full_boundary_is_sphere():
    full = FacetSubset.from_mask(3, 0b111111)
    assert reduced_betti(3, full.included) == (0, 0, 1)


def test_quad_flip_sizes():
    got = sorted(tuple(sorted((len(generate_pattern(2, x, y).before.cells),
                               len(generate_pattern(2, x, y).after.cells))))
                 for x in range(3) for y in range(3 - x) if x <= y)
    assert got == [(1, 5), (2, 4), (3, 3), (3, 3)]


def test_sizes_follow_class_formula():
    for d in (2, 3):
        for x in range(d + 1):
            for y in range(d + 1 - x):
                p = generate_pattern(d, x, y)
                assert len(p.before.cells) == FlipClass(x, y, d + 1).cell_count
                assert len(p.after.cells) == FlipClass(y, x, d + 1).cell_count


def test_hex_flip_sizes():
    got = sorted(tuple(sorted((len(generate_pattern(3, x, y).before.cells),
                               len(generate_pattern(3, x, y).after.cells))))
                 for x in range(4) for y in range(4 - x) if x <= y)
    assert got == [(1, 7), (2, 6), (3, 5), (3, 5), (4, 4), (4, 4)]


def test_patterns_are_valid_and_share_boundary():
    for d in (2, 3):
        for x in range(d + 1):
            for y in range(d + 1 - x):
                p = generate_pattern(d, x, y)
                for side in (p.before, p.after):
                    sub = side.compacted()
                    assert validate(sub).ok
                    chi, _ = euler_and_homology(sub)
                    assert chi == 1
                assert set(p.before_interior).isdisjoint(p.after_interior)


def test_class_table_rows():
    rows = class_table(3)
    by = {tuple(r["class"]): r for r in rows}
    assert by[(3, 0)]["new_vertices"] == 8
    assert by[(0, 3)]["removed_vertices"] == 8
    assert by[(2, 0)]["after_cells"] == 6
