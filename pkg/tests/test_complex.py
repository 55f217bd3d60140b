import random

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cubeflip.complex import (
    CubicalComplex,
    boundary_complex,
    boundary_faces,
    cell_edges,
    cell_faces,
    components,
    euler_and_homology,
    oriented,
    validate,
)
from cubeflip.errors import InvalidComplex
from cubeflip.meshes import bicuboid, cube_boundary, quad_grid, quad_torus, single_hex

from conftest import full_corpus


def relabel(c, perm):
    return CubicalComplex(c.dim, c.vertex_count, [tuple(perm[v] for v in cell) for cell in c.cells],
                          None if c.boundary_vertices is None else {perm[v] for v in c.boundary_vertices})


def counted_euler(c):
    verts = {v for cell in c.cells for v in cell}
    edges = {frozenset(e) for cell in c.cells for e in cell_edges(cell, c.dim)}
    if c.dim == 2:
        return len(verts) - len(edges) + len(c.cells)
    faces = {frozenset(f) for cell in c.cells for f in cell_faces(cell, 3)}
    return len(verts) - len(edges) + len(faces) - len(c.cells)


def test_reference_meshes_valid():
    for c in (single_hex(), bicuboid(), cube_boundary(), quad_grid(2, 3), quad_torus()):
        assert validate(c).ok


def test_cube_homology():
    assert euler_and_homology(cube_boundary()) == (2, (1, 0, 1))
    chi, betti = euler_and_homology(quad_torus())
    assert chi == 0 and tuple(betti) == (1, 2, 1)


def test_euler_matches_counting(corpus):
    for c in corpus:
        chi, betti = euler_and_homology(c)
        assert chi == counted_euler(c)
        assert chi == sum((-1) ** i * b for i, b in enumerate(betti))


def test_betti0_matches_networkx(corpus):
    for c in corpus:
        g = nx.Graph()
        for cell in c.cells:
            g.add_edges_from(cell_edges(cell, c.dim))
        assert euler_and_homology(c)[1][0] == nx.number_connected_components(g)


def test_repeated_vertex_rejected():
    c = CubicalComplex(2, 4, [(0, 1, 1, 2)])
    assert "distinct" in validate(c).rules()


def test_face_shared_three_times():
    c = CubicalComplex(2, 7, [(0, 1, 2, 3), (0, 1, 4, 5), (0, 1, 6, 5)])
    assert not validate(c).ok


def test_cells_sharing_all_vertices():
    c = CubicalComplex(2, 4, [(0, 1, 2, 3), (0, 2, 1, 3)])
    assert "intersection" in validate(c).rules()


def test_nonorientable_strip():
    # Moebius band: a ring of three quads with a half twist
    cells = [(0, 1, 4, 3), (3, 4, 5, 2), (2, 5, 0, 1)]
    c = CubicalComplex(2, 6, cells)
    rep = validate(c)
    assert "orientability" in rep.rules()


def test_bad_dim():
    with pytest.raises(InvalidComplex):
        CubicalComplex(4, 1, [])


def test_boundary_of_bicuboid():
    b = boundary_complex(bicuboid())
    assert len(b.cells) == 10
    assert euler_and_homology(b.compacted()) == (2, (1, 0, 1))


def test_quad_boundary_is_cycle():
    edges = boundary_complex(quad_grid(2, 2))
    g = nx.Graph(edges)
    assert len(edges) == 8 and nx.cycle_basis(g) and all(d == 2 for _, d in g.degree())


def test_oriented_is_consistent(corpus):
    for c in corpus:
        if c.dim != 2:
            continue
        o = oriented(c)
        seen = set()
        for q in o.cells:
            for k in range(4):
                e = (q[k], q[(k + 1) % 4])
                assert e not in seen
                seen.add(e)


def test_components():
    c = CubicalComplex(2, 8, [(0, 1, 2, 3), (4, 5, 6, 7)])
    assert len(components(c)) == 2


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_relabeling_preserves_validity(seed):
    rng = random.Random(seed)
    pool = full_corpus()
    c = pool[rng.randrange(len(pool))]
    perm = list(range(c.vertex_count))
    rng.shuffle(perm)
    r = relabel(c, perm)
    assert validate(r).ok == validate(c).ok
    assert euler_and_homology(r) == euler_and_homology(c)
    assert len(boundary_faces(r)) == len(boundary_faces(c))
