"""Canonical keys for cubical complexes.

The key of a connected complex is the least BFS code over every start
``(cell, frame)``, where a frame is one of the symmetries of the reference
cell (8 for a quad, 48 for a hex; reflections included).  From a framed cell
the walk crosses each face into the neighbour whose frame is fixed by the
face's vertex order, so the code is intrinsic to the complex.  Vertices are
numbered on first visit and annotated with their degree and boundary mark.

Cost is ``O(cells^2 * |frames|)`` in the worst case; starts are filtered by
the first cell's token sequence, which usually leaves a handful.

The inner loop runs in a compiled kernel when available; set
``CUBEFLIP_PURE_PYTHON=1`` to force the Python fallback.
"""

import os
from functools import lru_cache
from itertools import permutations

from . import _canon_py
from .complex import HEX_FACES, QUAD_EDGES, cell_faces, components

try:
    if os.environ.get("CUBEFLIP_PURE_PYTHON"):
        raise ImportError
    from . import _canon_ext
    _KERNEL = _canon_ext.canonical_code
    BACKEND = "compiled"
except ImportError:  # pragma: no cover - depends on build
    _KERNEL = _canon_py.canonical_code
    BACKEND = "python"


@lru_cache(maxsize=None)
def cell_symmetries(dim):
    """Frame permutations: frame slot -> cell slot, identity first."""
    if dim == 2:
        out = [tuple((r + i) % 4 for i in range(4)) for r in range(4)]
        out += [tuple((r - i) % 4 for i in range(4)) for r in range(4)]
        return tuple(out)
    out = []
    for axes in permutations(range(3)):
        for mask in range(8):
            perm = []
            for i in range(8):
                j = 0
                for b in range(3):
                    if (i >> b) & 1:
                        j |= 1 << axes[b]
                perm.append(j ^ mask)
            out.append(tuple(perm))
    out.sort(key=lambda p: p != tuple(range(8)))
    return tuple(out)


def ref_faces(dim):
    return QUAD_EDGES if dim == 2 else HEX_FACES


def frame_lookup(dim, cell):
    """Map the ordered vertex tuple of the entry face to the frame index."""
    entry = ref_faces(dim)[0]
    out = {}
    for g, perm in enumerate(cell_symmetries(dim)):
        out[tuple(cell[perm[s]] for s in entry)] = g
    return out


def transition_tables(c, cell_ids=None):
    """Neighbour cell and neighbour frame for every (cell, frame, face)."""
    dim = c.dim
    perms = cell_symmetries(dim)
    faces = ref_faces(dim)
    ids = list(range(len(c.cells))) if cell_ids is None else list(cell_ids)
    cells = [c.cells[i] for i in ids]
    owners = {}
    for i, cell in enumerate(cells):
        for f in cell_faces(cell, dim):
            owners.setdefault(frozenset(f), []).append(i)
    lookups = [frame_lookup(dim, cell) for cell in cells]
    nb_cell = []
    nb_perm = []
    for i, cell in enumerate(cells):
        rc, rp = [], []
        for perm in perms:
            fc, fp = [], []
            for face in faces:
                verts = tuple(cell[perm[s]] for s in face)
                other = [j for j in owners[frozenset(verts)] if j != i]
                if other:
                    j = other[0]
                    fc.append(j)
                    fp.append(lookups[j][verts])
                else:
                    fc.append(-1)
                    fp.append(-1)
            rc.append(fc)
            rp.append(fp)
        nb_cell.append(rc)
        nb_perm.append(rp)
    return cells, nb_cell, nb_perm


def vertex_tokens(c):
    deg = [0] * c.vertex_count
    for cell in c.cells:
        for v in cell:
            deg[v] += 1
    marks = c.boundary_vertices or frozenset()
    return [2 * d + (1 if v in marks else 0) for v, d in enumerate(deg)]


def component_code(c, cell_ids, vtok=None, kernel=None):
    """Canonical integer code of one face-connected component."""
    kernel = kernel or _KERNEL
    if vtok is None:
        vtok = vertex_tokens(c)
    cells, nb_cell, nb_perm = transition_tables(c, cell_ids)
    perms = cell_symmetries(c.dim)
    best = None
    starts = []
    for i, cell in enumerate(cells):
        for g, perm in enumerate(perms):
            sig = tuple(vtok[cell[perm[s]]] for s in range(len(perm)))
            if best is None or sig < best:
                best = sig
                starts = [(i, g)]
            elif sig == best:
                starts.append((i, g))
    return kernel(cells, perms, nb_cell, nb_perm, vtok, starts, c.vertex_count)


def _pack(ints):
    return b"".join(int(x).to_bytes(4, "big", signed=True) for x in ints)


def canonicalize(c, kernel=None):
    """Canonical key (bytes) of a complex; equal iff combinatorially isomorphic.

    Disconnected complexes are keyed per face-connected component, with the
    component keys sorted.  Vertex ids not used by any cell count as isolated
    vertices.
    """
    vtok = vertex_tokens(c)
    comps = components(c)
    parts = []
    for comp in comps:
        code = component_code(c, comp, vtok, kernel)
        parts.append(_pack([len(code)] + list(code)))
    parts.sort()
    unused = c.vertex_count - len(c.used_vertices())
    isolated_marked = 0
    if c.boundary_vertices:
        used = set(c.used_vertices())
        isolated_marked = sum(1 for v in c.boundary_vertices if v not in used)
    head = _pack([c.dim, len(c.cells), len(comps), unused, isolated_marked])
    return head + b"".join(parts)


def key_hex(key):
    return key.hex()


def boundary_key(c):
    """Isomorphism key of the boundary: the compacted boundary quad surface of
    a hex mesh, or the sorted boundary cycle lengths of a quad mesh."""
    from .complex import boundary_complex

    if c.dim == 3:
        return canonicalize(boundary_complex(c).compacted())
    adj = {}
    for a, b in boundary_complex(c):
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    seen, lengths = set(), []
    for v in sorted(adj):
        if v in seen:
            continue
        stack, size = [v], 0
        seen.add(v)
        while stack:
            u = stack.pop()
            size += 1
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        lengths.append(size)
    return _pack([c.dim] + sorted(lengths))
