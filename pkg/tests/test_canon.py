import itertools
import random

import networkx as nx
from hypothesis import given, settings
from hypothesis import strategies as st

from cubeflip import _canon_py, canon
from cubeflip.canon import boundary_key, canonicalize
from cubeflip.complex import CubicalComplex, cell_edges, cell_faces
from cubeflip.geometry import hex_torus
from cubeflip.meshes import cube_boundary, quad_grid

from conftest import full_corpus, sphere_corpus


def relabel(c, perm):
    return CubicalComplex(c.dim, c.vertex_count, [tuple(perm[v] for v in cell) for cell in c.cells],
                          None if c.boundary_vertices is None else {perm[v] for v in c.boundary_vertices})


def reorder_cells(c, rng):
    cells = list(c.cells)
    rng.shuffle(cells)
    out = []
    for cell in cells:
        if c.dim == 2:
            k = rng.randrange(4)
            q = cell[k:] + cell[:k]
            out.append(q if rng.random() < 0.5 else q[::-1])
        else:
            sym = rng.choice(canon.cell_symmetries(3))
            out.append(tuple(cell[sym[i]] for i in range(8)))
    return CubicalComplex(c.dim, c.vertex_count, out, c.boundary_vertices)


def face_lattice_graph(c):
    """Hasse diagram of the face poset, nodes tagged by dimension and mark."""
    g = nx.Graph()
    marked = c.boundary_vertices or frozenset()
    for v in range(c.vertex_count):
        g.add_node(("v", v), kind=(0, v in marked))
    for i, cell in enumerate(c.cells):
        top = ("c", i)
        g.add_node(top, kind=(c.dim, False))
        subs = [frozenset(f) for f in cell_faces(cell, 3)] if c.dim == 3 else []
        for f in subs:
            g.add_node(("f", f), kind=(2, False))
            g.add_edge(top, ("f", f))
        for e in cell_edges(cell, c.dim):
            ek = ("e", frozenset(e))
            g.add_node(ek, kind=(1, False))
            g.add_edges_from((ek, ("v", v)) for v in e)
            if c.dim == 2:
                g.add_edge(top, ek)
            for f in subs:
                if set(e) <= f:
                    g.add_edge(("f", f), ek)
    return g


def same_by_oracle(a, b):
    if (a.dim, len(a.cells), a.vertex_count) != (b.dim, len(b.cells), b.vertex_count):
        return False
    return nx.is_isomorphic(face_lattice_graph(a), face_lattice_graph(b),
                            node_match=lambda x, y: x["kind"] == y["kind"])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000))
def test_key_invariant_under_relabeling(seed):
    rng = random.Random(seed)
    pool = full_corpus()
    c = pool[rng.randrange(len(pool))]
    perm = list(range(c.vertex_count))
    rng.shuffle(perm)
    r = reorder_cells(relabel(c, perm), rng)
    assert canonicalize(r) == canonicalize(c)


def test_keys_agree_with_lattice_isomorphism():
    pool = [c for c in sphere_corpus() if len(c.cells) <= 12]
    rng = random.Random(7)
    pairs = list(itertools.combinations(range(len(pool)), 2))
    rng.shuffle(pairs)
    checked = 0
    for i, j in pairs[:400]:
        a, b = pool[i], pool[j]
        if (len(a.cells), a.vertex_count) != (len(b.cells), b.vertex_count):
            continue
        checked += 1
        assert (canonicalize(a) == canonicalize(b)) == same_by_oracle(a, b)
    assert checked > 50


def test_mirror_images_share_key():
    c = cube_boundary()
    m = CubicalComplex(2, 8, [q[::-1] for q in c.cells])
    assert canonicalize(m) == canonicalize(c)


def test_boundary_marks_matter():
    g = quad_grid(1, 2)
    assert canonicalize(g) != canonicalize(g.replace(boundary_vertices=None))


def test_compiled_kernel_matches_python():
    if canon.BACKEND != "compiled":
        return
    for c in full_corpus()[:80]:
        assert canonicalize(c) == canonicalize(c, kernel=_canon_py.canonical_code)


def test_boundary_keys_of_tori():
    assert boundary_key(hex_torus(3, 2).complex) == boundary_key(hex_torus(3, 3).complex)
    assert boundary_key(hex_torus(4, 2).complex) != boundary_key(hex_torus(3, 2).complex)
