"""Reference meshes used throughout the library and its tests."""

from .complex import HEX_FACES, CubicalComplex


def _corner(i):
    return (float(i & 1), float((i >> 1) & 1), float((i >> 2) & 1))


def single_hex():
    return CubicalComplex(3, 8, [tuple(range(8))], coords=[_corner(i) for i in range(8)])


def cube_boundary():
    """The six faces of the unit cube as a closed quad mesh."""
    return CubicalComplex(2, 8, [tuple(f) for f in HEX_FACES], coords=[_corner(i) for i in range(8)])


def single_quad(marked=True):
    """One quad whose four vertices form a fixed 4-gon boundary."""
    bv = frozenset(range(4)) if marked else None
    return CubicalComplex(2, 4, [(0, 1, 2, 3)], bv,
                          coords=[(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (1.0, 1.0, 0.0), (0.0, 1.0, 0.0)])


def bicuboid():
    """Two unit hexes stacked along z."""
    coords = [_corner(i) for i in range(8)] + [(float(i & 1), float((i >> 1) & 1), 2.0) for i in range(4)]
    return CubicalComplex(3, 12, [tuple(range(8)), tuple(range(4, 12))], coords=coords)


def bicuboid_boundary():
    from .complex import boundary_faces

    b = bicuboid()
    faces = sorted(boundary_faces(b), key=sorted)
    return CubicalComplex(2, 12, faces, coords=b.coords)


def quad_torus(n=3, m=4):
    """An n-by-m periodic grid of quads on a torus (n, m >= 3)."""
    vid = lambda i, j: (i % n) * m + (j % m)
    cells = [(vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)) for i in range(n) for j in range(m)]
    return CubicalComplex(2, n * m, cells)


def quad_grid(n, m):
    """An n-by-m planar grid of quads with its outer cycle marked as boundary."""
    vid = lambda i, j: i * (m + 1) + j
    cells = [(vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)) for i in range(n) for j in range(m)]
    bv = {vid(i, j) for i in range(n + 1) for j in range(m + 1) if i in (0, n) or j in (0, m)}
    coords = [(float(i), float(j), 0.0) for i in range(n + 1) for j in range(m + 1)]
    return CubicalComplex(2, (n + 1) * (m + 1), cells, frozenset(bv), coords)
