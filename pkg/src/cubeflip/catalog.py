"""Flip catalog built from facet subsets of the hypercube.

A flip in a d-dimensional cubical mesh swaps a set S of facets of the
(d+1)-cube for the complementary set.  S is summarised by its class (X, Y):
X axes with neither facet in S, Y axes with both facets in S.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

from .complex import CubicalComplex, gf2_rank
from .errors import DimensionTooLarge, InvalidClass

LOW, HIGH = 0, 1


@dataclass(frozen=True, order=True)
class FlipClass:
    X: int
    Y: int
    n: int

    def __post_init__(self):
        if self.X < 0 or self.Y < 0 or self.X + self.Y > self.n:
            raise InvalidClass(f"invalid class ({self.X},{self.Y}) for n={self.n}")

    @property
    def mesh_dim(self):
        return self.n - 1

    @property
    def cell_count(self):
        return 2 * self.Y + (self.n - self.X - self.Y)

    @property
    def inverse(self):
        return FlipClass(self.Y, self.X, self.n)

    def pair(self):
        return tuple(sorted(((self.X, self.Y), (self.Y, self.X))))

    def __str__(self):
        return f"({self.X},{self.Y})"


@dataclass(frozen=True)
class FacetSubset:
    n: int
    included: tuple

    def __init__(self, n, included):
        if n < 1:
            raise ValueError("hypercube dimension must be at least 1")
        facets = set()
        for axis, side in included:
            if not 0 <= axis < n or side not in (LOW, HIGH):
                raise ValueError(f"bad facet ({axis}, {side}) for n={n}")
            facets.add((int(axis), int(side)))
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "included", tuple(sorted(facets)))

    def complement(self):
        inc = set(self.included)
        return FacetSubset(self.n, [(a, s) for a in range(self.n) for s in (LOW, HIGH) if (a, s) not in inc])

    @classmethod
    def from_mask(cls, n, mask):
        """Facet ``2*axis + side`` is included when that bit of ``mask`` is set."""
        return cls(n, [(b // 2, b % 2) for b in range(2 * n) if mask >> b & 1])

    @classmethod
    def canonical(cls, n, X, Y):
        """Exclude axes [0, X), include both facets of [X, X+Y), low facet of the rest."""
        FlipClass(X, Y, n)
        facets = [(a, s) for a in range(X, X + Y) for s in (LOW, HIGH)]
        facets += [(a, LOW) for a in range(X + Y, n)]
        return cls(n, facets)


def classify(subset):
    axes = [[s for a, s in subset.included if a == axis] for axis in range(subset.n)]
    X = sum(1 for s in axes if not s)
    Y = sum(1 for s in axes if len(s) == 2)
    return FlipClass(X, Y, subset.n)


# -- disk oracle --------------------------------------------------------------

FREE = 2


def _faces_in(n, facets):
    """All faces of the n-cube (as tuples over {0,1,FREE}) lying in some facet."""
    out = set()
    for face in product((0, 1, FREE), repeat=n):
        if all(x == FREE for x in face):
            continue
        if any(face[a] == s for a, s in facets):
            out.add(face)
    return out


def _face_boundary(face):
    for i, x in enumerate(face):
        if x == FREE:
            for s in (0, 1):
                yield face[:i] + (s,) + face[i + 1:]


def reduced_betti(n, facets):
    """Reduced GF(2) Betti numbers of the subcomplex spanned by the facets."""
    faces = _faces_in(n, facets)
    by_dim = {}
    for f in faces:
        by_dim.setdefault(sum(1 for x in f if x == FREE), []).append(f)
    top = max(by_dim) if by_dim else -1
    index = {k: {f: i for i, f in enumerate(sorted(v))} for k, v in by_dim.items()}
    ranks = {}
    for k in range(1, top + 1):
        rows = []
        for f in sorted(by_dim.get(k, [])):
            m = 0
            for g in _face_boundary(f):
                m |= 1 << index[k - 1][g]
            rows.append(m)
        ranks[k] = gf2_rank(rows)
    # augmentation: reduced chain complex has rank 1 in degree 0 when nonempty
    ranks[0] = 1 if by_dim else 0
    return tuple(len(by_dim.get(k, [])) - ranks.get(k, 0) - ranks.get(k + 1, 0) for k in range(top + 1))


def is_disk(subset):
    """Whether the facets form a topological disk (ball).

    Decided from the face lattice alone: nonempty, connected, and with
    vanishing reduced homology over GF(2).
    """
    if subset.n > 4:
        raise DimensionTooLarge(f"disk oracle supports n <= 4, got {subset.n}")
    if not subset.included:
        return False
    return all(b == 0 for b in reduced_betti(subset.n, subset.included))


# -- classes and patterns -----------------------------------------------------


def enumerate_classes(mesh_dim):
    """All flippable classes of a mesh dimension, and their flip pairs."""
    if mesh_dim not in (1, 2, 3):
        raise DimensionTooLarge(f"mesh dimension must be 1, 2 or 3, got {mesh_dim}")
    n = mesh_dim + 1
    classes = [FlipClass(x, y, n) for x in range(n) for y in range(n) if x + y <= mesh_dim]
    pairs = sorted({cl.pair() for cl in classes})
    return classes, pairs


@dataclass(frozen=True)
class FlipPattern:
    """Before and after sides of a flip over shared corner labels.

    Vertex ids in both complexes are hypercube corner codes (bit ``a`` is the
    coordinate on axis ``a``), so the boundary identification is the identity
    on ``boundary``.
    """

    flip_class: FlipClass
    before: CubicalComplex
    after: CubicalComplex
    boundary: tuple
    before_interior: tuple
    after_interior: tuple

    @property
    def mesh_dim(self):
        return self.flip_class.mesh_dim

    @property
    def boundary_map(self):
        return {v: v for v in self.boundary}

    @property
    def new_vertex_count(self):
        return len(self.after_interior)


# binary slot order of a square -> cyclic order
_QUAD_CYCLE = (0, 1, 3, 2)


def facet_cell(n, axis, side):
    """Corner codes of one facet of the n-cube in the mesh cell slot order."""
    free = [a for a in range(n) if a != axis]
    corners = []
    for i in range(2 ** len(free)):
        v = side << axis
        for k, a in enumerate(free):
            v |= ((i >> k) & 1) << a
        corners.append(v)
    if n == 3:
        return tuple(corners[s] for s in _QUAD_CYCLE)
    if n == 2:
        return tuple(corners)
    return tuple(corners)


@lru_cache(maxsize=None)
def generate_pattern(mesh_dim, X, Y):
    if mesh_dim not in (2, 3):
        raise InvalidClass(f"patterns exist for mesh dimension 2 or 3, got {mesh_dim}")
    n = mesh_dim + 1
    if X < 0 or Y < 0 or X + Y > mesh_dim:
        raise InvalidClass(f"class ({X},{Y}) is not a flip in dimension {mesh_dim}")
    s = FacetSubset.canonical(n, X, Y)
    comp = s.complement()
    before_cells = [facet_cell(n, a, side) for a, side in s.included]
    after_cells = [facet_cell(n, a, side) for a, side in comp.included]
    vb = {v for c in before_cells for v in c}
    va = {v for c in after_cells for v in c}
    nv = 2 ** n
    return FlipPattern(
        FlipClass(X, Y, n),
        CubicalComplex(mesh_dim, nv, before_cells),
        CubicalComplex(mesh_dim, nv, after_cells),
        tuple(sorted(vb & va)),
        tuple(sorted(vb - va)),
        tuple(sorted(va - vb)),
    )


def class_table(mesh_dim):
    """Rows of (class, inverse, before cells, after cells, new vertices)."""
    classes, _ = enumerate_classes(mesh_dim)
    rows = []
    for cl in classes:
        row = {"class": [cl.X, cl.Y], "inverse": [cl.Y, cl.X], "before_cells": cl.cell_count,
               "after_cells": cl.inverse.cell_count}
        if mesh_dim in (2, 3):
            p = generate_pattern(mesh_dim, cl.X, cl.Y)
            row["removed_vertices"] = len(p.before_interior)
            row["new_vertices"] = len(p.after_interior)
        rows.append(row)
    return rows
