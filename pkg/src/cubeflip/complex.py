"""Combinatorial quad and hex meshes.

A :class:`CubicalComplex` is a list of cells over integer vertex ids.  Quads
list their four corners in cyclic order.  Hexes list eight corners in binary
corner order: slot ``i`` sits at reference corner
``(i & 1, (i >> 1) & 1, (i >> 2) & 1)``.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field
from itertools import combinations

from .errors import InvalidComplex

QUAD_EDGES = ((0, 1), (1, 2), (2, 3), (3, 0))

# cyclic corner walks; all six are oriented the same way relative to the cell
HEX_FACES = (
    (0, 2, 6, 4),
    (1, 5, 7, 3),
    (0, 4, 5, 1),
    (2, 3, 7, 6),
    (0, 1, 3, 2),
    (4, 6, 7, 5),
)
HEX_EDGES = tuple(
    (i, i | (1 << b)) for b in range(3) for i in range(8) if not i & (1 << b)
)

ARITY = {2: 4, 3: 8}


@dataclass(frozen=True)
class CubicalComplex:
    """A quad surface mesh (``dim=2``) or hex mesh (``dim=3``).

    ``boundary_vertices`` marks vertices that must stay on the domain boundary;
    it takes part in isomorphism.  ``coords`` optionally attaches a
    realization, one point per vertex id.
    """

    dim: int
    vertex_count: int
    cells: tuple
    boundary_vertices: frozenset | None = None
    coords: tuple | None = field(default=None, compare=True)

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(tuple(int(v) for v in c) for c in self.cells))
        if self.boundary_vertices is not None:
            object.__setattr__(self, "boundary_vertices", frozenset(int(v) for v in self.boundary_vertices))
        if self.coords is not None:
            object.__setattr__(self, "coords", tuple(tuple(float(x) for x in p) for p in self.coords))
        if self.dim not in ARITY:
            raise InvalidComplex(f"dim must be 2 or 3, got {self.dim}")

    @property
    def arity(self):
        return ARITY[self.dim]

    def __len__(self):
        return len(self.cells)

    def replace(self, **kw):
        data = dict(dim=self.dim, vertex_count=self.vertex_count, cells=self.cells,
                    boundary_vertices=self.boundary_vertices, coords=self.coords)
        data.update(kw)
        return CubicalComplex(**data)

    def without_coords(self):
        return self if self.coords is None else self.replace(coords=None)

    def used_vertices(self):
        return sorted({v for c in self.cells for v in c})

    def vertex_cells(self):
        inc = defaultdict(list)
        for i, c in enumerate(self.cells):
            for v in c:
                inc[v].append(i)
        return inc

    def is_closed(self):
        return not boundary_faces(self)

    def compacted(self):
        """Drop unused vertex ids, keeping the relative order of the rest."""
        used = self.used_vertices()
        if len(used) == self.vertex_count:
            return self
        remap = {v: i for i, v in enumerate(used)}
        bv = None
        if self.boundary_vertices is not None:
            bv = frozenset(remap[v] for v in self.boundary_vertices if v in remap)
        coords = None
        if self.coords is not None:
            coords = tuple(self.coords[v] for v in used)
        return CubicalComplex(self.dim, len(used), [tuple(remap[v] for v in c) for c in self.cells], bv, coords)


# -- faces ------------------------------------------------------------------


def cell_faces(cell, dim):
    """Ordered (d-1)-faces of one cell as vertex tuples."""
    if dim == 2:
        return [(cell[a], cell[b]) for a, b in QUAD_EDGES]
    return [tuple(cell[s] for s in f) for f in HEX_FACES]


def cell_edges(cell, dim):
    pairs = QUAD_EDGES if dim == 2 else HEX_EDGES
    return [(cell[a], cell[b]) for a, b in pairs]


def face_key(face):
    return frozenset(face)


def facet_incidence(c):
    """Map each (d-1)-face key to the list of (cell index, local face index)."""
    inc = defaultdict(list)
    for i, cell in enumerate(c.cells):
        for j, f in enumerate(cell_faces(cell, c.dim)):
            inc[face_key(f)].append((i, j))
    return inc


def boundary_faces(c):
    """(d-1)-faces incident to exactly one cell, as ordered tuples."""
    out = []
    for k, users in facet_incidence(c).items():
        if len(users) == 1:
            i, j = users[0]
            out.append(cell_faces(c.cells[i], c.dim)[j])
    return out


def boundary_complex(c):
    """The boundary of a hex mesh as a quad complex, or of a quad mesh as its
    edge cycles (returned as a sorted list of edges)."""
    faces = boundary_faces(c)
    if c.dim == 3:
        return CubicalComplex(2, c.vertex_count, sorted(faces, key=lambda f: sorted(f)))
    return sorted(tuple(sorted(f)) for f in faces)


def boundary_vertex_set(c):
    return {v for f in boundary_faces(c) for v in f}


def neighbours(c):
    """Cell adjacency through shared (d-1)-faces."""
    adj = [set() for _ in c.cells]
    for users in facet_incidence(c).values():
        for (a, _), (b, _) in combinations(users, 2):
            if a != b:
                adj[a].add(b)
                adj[b].add(a)
    return adj


def components(c):
    """Cell index lists of the face-connected components, in order of first cell."""
    adj = neighbours(c)
    seen = [False] * len(c.cells)
    comps = []
    for s in range(len(c.cells)):
        if seen[s]:
            continue
        seen[s] = True
        comp, dq = [], deque([s])
        while dq:
            x = dq.popleft()
            comp.append(x)
            for y in sorted(adj[x]):
                if not seen[y]:
                    seen[y] = True
                    dq.append(y)
        comps.append(sorted(comp))
    return comps


def subcomplex(c, cell_ids):
    return c.replace(cells=[c.cells[i] for i in cell_ids])


# -- face lattice and homology ----------------------------------------------


@dataclass
class FaceLattice:
    vertices: list
    edges: list
    quads: list
    hexes: list
    boundary: "FaceLattice | None" = None

    def counts(self):
        out = [len(self.vertices), len(self.edges), len(self.quads)]
        if self.hexes:
            out.append(len(self.hexes))
        return tuple(out)


def _lattice(dim, cells):
    edges = {}
    quads = {}
    for cell in cells:
        for a, b in cell_edges(cell, dim):
            edges.setdefault(frozenset((a, b)), (min(a, b), max(a, b)))
        if dim == 3:
            for f in cell_faces(cell, 3):
                quads.setdefault(frozenset(f), f)
        else:
            quads.setdefault(frozenset(cell), tuple(cell))
    verts = sorted({v for cell in cells for v in cell})
    hexes = [tuple(cell) for cell in cells] if dim == 3 else []
    return FaceLattice(verts, sorted(edges.values()), sorted(quads.values(), key=sorted), hexes)


def derived_faces(c, check=True):
    """Deduplicated vertices, edges, quads (and hexes) plus the boundary
    subcomplex made of faces incident to exactly one top cell."""
    if check:
        _require_valid(c)
    lat = _lattice(c.dim, c.cells)
    bfaces = boundary_faces(c)
    if c.dim == 3:
        lat.boundary = _lattice(2, bfaces)
    else:
        bverts = sorted({v for f in bfaces for v in f})
        bedges = sorted({(min(f), max(f)) for f in bfaces})
        lat.boundary = FaceLattice(bverts, bedges, [], [])
    return lat


def gf2_rank(rows):
    """Rank over GF(2) of a matrix given as a list of int bitmasks."""
    basis = {}
    rank = 0
    for r in rows:
        while r:
            hi = r.bit_length() - 1
            if hi in basis:
                r ^= basis[hi]
            else:
                basis[hi] = r
                rank += 1
                break
    return rank


def chain_boundaries(lat):
    """Boundary matrices over GF(2) as row bitmask lists, one per degree >= 1."""
    vidx = {v: i for i, v in enumerate(lat.vertices)}
    eidx = {frozenset(e): i for i, e in enumerate(lat.edges)}
    d1 = [(1 << vidx[a]) | (1 << vidx[b]) for a, b in lat.edges]
    d2 = []
    for q in lat.quads:
        m = 0
        for i in range(4):
            m |= 1 << eidx[frozenset((q[i], q[(i + 1) % 4]))]
        d2.append(m)
    mats = [d1, d2]
    if lat.hexes:
        qidx = {frozenset(q): i for i, q in enumerate(lat.quads)}
        d3 = []
        for h in lat.hexes:
            m = 0
            for f in cell_faces(h, 3):
                m |= 1 << qidx[frozenset(f)]
            d3.append(m)
        mats.append(d3)
    return mats


def lattice_homology(lat):
    counts = lat.counts()
    ranks = [gf2_rank(m) for m in chain_boundaries(lat)]
    ranks = [0] + ranks + [0]
    betti = tuple(counts[k] - ranks[k] - ranks[k + 1] for k in range(len(counts)))
    chi = sum((-1) ** k * n for k, n in enumerate(counts))
    return chi, betti


def euler_and_homology(c, check=True):
    """Euler characteristic and GF(2) Betti numbers of the complex.

    Only vertices that belong to some cell are counted.
    """
    if check:
        _require_valid(c)
    return lattice_homology(_lattice(c.dim, c.cells))


# -- validation -------------------------------------------------------------


@dataclass
class Violation:
    rule: str
    cells: tuple = ()
    vertices: tuple = ()
    detail: str = ""


@dataclass
class ValidityReport:
    """Violations make a complex invalid.

    ``degeneracies`` lists cell pairs meeting in more than one face (for
    example two quads sharing a path of two edges).  Such complexes are valid
    topological meshes but not strict cell complexes; ``strict_ok`` tells the
    two apart.
    """

    violations: list = field(default_factory=list)
    degeneracies: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    @property
    def strict_ok(self):
        return not self.violations and not self.degeneracies

    def add(self, rule, cells=(), vertices=(), detail=""):
        self.violations.append(Violation(rule, tuple(cells), tuple(vertices), detail))

    def rules(self):
        return sorted({v.rule for v in self.violations})

    def to_dict(self):
        conv = lambda vs: [
            {"rule": v.rule, "cells": list(v.cells), "vertices": list(v.vertices), "detail": v.detail} for v in vs
        ]
        return {"ok": self.ok, "strict_ok": self.strict_ok, "violations": conv(self.violations),
                "degeneracies": conv(self.degeneracies)}


def _sub_face_sets(cell, dim):
    """Vertex sets of every proper face of a cell with at least two vertices."""
    out = {frozenset(e) for e in cell_edges(cell, dim)}
    if dim == 3:
        out |= {frozenset(f) for f in cell_faces(cell, 3)}
    return out


def _link_ok_2d(c, v, cells_at_v, report):
    adj = defaultdict(list)
    for i in cells_at_v:
        cell = c.cells[i]
        k = cell.index(v)
        a, b = cell[(k - 1) % 4], cell[(k + 1) % 4]
        adj[a].append(b)
        adj[b].append(a)
    if any(len(n) > 2 for n in adj.values()):
        report.add("vertex_link", cells_at_v, (v,), "edge around vertex used by more than two quads")
        return
    start = next(iter(adj))
    seen = {start}
    dq = [start]
    while dq:
        x = dq.pop()
        for y in adj[x]:
            if y not in seen:
                seen.add(y)
                dq.append(y)
    if len(seen) != len(adj):
        report.add("vertex_link", cells_at_v, (v,), "quads around vertex do not form a single fan")


def _link_ok_3d(c, v, cells_at_v, report):
    tris = []
    for i in cells_at_v:
        cell = c.cells[i]
        s = cell.index(v)
        tris.append(frozenset(cell[s ^ (1 << b)] for b in range(3)))
    ecount = defaultdict(int)
    for t in tris:
        for e in combinations(sorted(t), 2):
            ecount[e] += 1
    if any(n > 2 for n in ecount.values()):
        report.add("vertex_link", cells_at_v, (v,), "non-manifold edge in vertex link")
        return
    verts = set().union(*tris)
    chi = len(verts) - len(ecount) + len(tris)
    bnd = [e for e, n in ecount.items() if n == 1]
    # connectivity of the link
    adj = defaultdict(set)
    for t in tris:
        for a in t:
            adj[a] |= t - {a}
    start = next(iter(verts))
    seen = {start}
    st = [start]
    while st:
        x = st.pop()
        for y in adj[x] - seen:
            seen.add(y)
            st.append(y)
    if len(seen) != len(verts):
        report.add("vertex_link", cells_at_v, (v,), "vertex link disconnected")
    elif (bnd and chi != 1) or (not bnd and chi != 2):
        report.add("vertex_link", cells_at_v, (v,), f"vertex link is not a disk or sphere (chi={chi})")


def _orientable(c):
    """Try to orient all cells consistently; returns True when possible."""
    sign = [0] * len(c.cells)
    inc = facet_incidence(c)
    links = defaultdict(list)
    for users in inc.values():
        if len(users) != 2:
            continue
        (a, fa), (b, fb) = users
        va = cell_faces(c.cells[a], c.dim)[fa]
        vb = cell_faces(c.cells[b], c.dim)[fb]
        same = _same_rotation(va, vb)
        # consistent iff induced orientations are opposite
        need = -1 if same else 1
        links[a].append((b, need))
        links[b].append((a, need))
    for s in range(len(c.cells)):
        if sign[s]:
            continue
        sign[s] = 1
        st = [s]
        while st:
            x = st.pop()
            for y, need in links[x]:
                want = sign[x] * need
                if sign[y] == 0:
                    sign[y] = want
                    st.append(y)
                elif sign[y] != want:
                    return False, None
    return True, sign


def _same_rotation(f, g):
    n = len(f)
    if n == 2:
        return tuple(f) == tuple(g)
    k = g.index(f[0])
    return all(g[(k + i) % n] == f[i] for i in range(n))


def validate(c, vertices=None, orientation=True, strict=False):
    """Check the combinatorial validity rules of a cubical complex.

    Two cells sharing all their vertices are always a violation.  Cells that
    meet in a union of several faces are recorded as degeneracies, or as
    violations when ``strict`` is set.

    When ``vertices`` is given, only cells touching those vertices are
    examined (used after local rewrites); global rules such as orientability
    are skipped in that mode.
    """
    report = ValidityReport()
    k = ARITY[c.dim]
    local = vertices is not None
    vset = set(vertices) if local else None
    if local:
        cell_ids = sorted({i for i, cell in enumerate(c.cells) if vset.intersection(cell)})
    else:
        cell_ids = range(len(c.cells))

    for i in cell_ids:
        cell = c.cells[i]
        if len(cell) != k:
            report.add("arity", (i,), cell, f"expected {k} vertex ids, got {len(cell)}")
            continue
        if len(set(cell)) != k:
            report.add("distinct", (i,), cell, "repeated vertex id in cell")
        bad = [v for v in cell if not 0 <= v < c.vertex_count]
        if bad:
            report.add("vertex_range", (i,), bad, "vertex id outside [0, vertex_count)")
    if not report.ok:
        return report

    inc = facet_incidence(c)
    checked = set()
    for i in cell_ids:
        for f in cell_faces(c.cells[i], c.dim):
            key = face_key(f)
            if key in checked:
                continue
            checked.add(key)
            users = inc[key]
            if len(users) > 2:
                report.add("face_multiplicity", [u for u, _ in users], sorted(key), "face shared by more than two cells")
            if c.dim == 3 and len(users) == 2:
                (a, fa), (b, fb) = users
                ea = {frozenset(e) for e in zip(f, f[1:] + f[:1])}
                g = cell_faces(c.cells[b], 3)[fb]
                eb = {frozenset(e) for e in zip(g, g[1:] + g[:1])}
                if ea != eb:
                    report.add("hex_faces", (a, b), sorted(key), "shared quad has inconsistent edges")

    vinc = c.vertex_cells()
    pairs = set()
    for i in cell_ids:
        for v in c.cells[i]:
            for j in vinc[v]:
                if j != i:
                    pairs.add((min(i, j), max(i, j)))
    for a, b in sorted(pairs):
        ca, cb = c.cells[a], c.cells[b]
        shared = frozenset(ca) & frozenset(cb)
        if len(shared) == 1:
            continue
        if shared in _sub_face_sets(ca, c.dim) and shared in _sub_face_sets(cb, c.dim):
            continue
        if shared == frozenset(ca) or shared == frozenset(cb):
            report.add("intersection", (a, b), sorted(shared), "cells share all their vertices")
        elif strict:
            report.add("intersection", (a, b), sorted(shared), "cells intersect in more than a single shared face")
        else:
            report.degeneracies.append(
                Violation("intersection", (a, b), tuple(sorted(shared)), "cells meet in more than one face"))

    check_verts = sorted(vset) if local else sorted(vinc)
    for v in check_verts:
        if v not in vinc:
            continue
        if c.dim == 2:
            _link_ok_2d(c, v, vinc[v], report)
        else:
            _link_ok_3d(c, v, vinc[v], report)
    if orientation and not local and report.ok:
        ok, _ = _orientable(c)
        if not ok:
            report.add("orientability", (), (), "no consistent orientation of the cells exists")
    return report


def _require_valid(c):
    rep = validate(c)
    if not rep.ok:
        v = rep.violations[0]
        raise InvalidComplex(f"invalid complex: {v.rule}: {v.detail}", rules=rep.rules())


def oriented(c):
    """A copy with cells reordered slot-wise so that orientations agree.

    Quads are reversed; hexes are mirrored along the first axis.
    """
    ok, sign = _orientable(c)
    if not ok:
        raise InvalidComplex("complex is not orientable")
    cells = []
    for cell, s in zip(c.cells, sign):
        if s > 0:
            cells.append(cell)
        elif c.dim == 2:
            cells.append((cell[0], cell[3], cell[2], cell[1]))
        else:
            cells.append(tuple(cell[i ^ 1] for i in range(8)))
    return c.replace(cells=cells)
