"""Finding and applying flips, the quad parity change, and refinement."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

from .canon import canonicalize, cell_symmetries
from .catalog import FlipClass, enumerate_classes, generate_pattern
from .complex import (
    CubicalComplex,
    cell_edges,
    cell_faces,
    facet_incidence,
    validate,
)
from .errors import (
    DegenerateUnion,
    DimensionMismatch,
    InvalidComplex,
    NotAdjacent,
    SiteStale,
)


@dataclass(frozen=True)
class MatchSite:
    """An embedding of a flip pattern's before-side into a mesh.

    ``vertex_map`` is a sorted tuple of ``(pattern vertex, mesh vertex)``
    pairs; ``cells`` are the matched mesh cell indices in ascending order.
    """

    flip_class: FlipClass
    vertex_map: tuple
    cells: tuple

    @property
    def mapping(self):
        return dict(self.vertex_map)

    def sort_key(self):
        return (self.cells, self.vertex_map)


# -- pattern preprocessing ----------------------------------------------------


@dataclass(frozen=True)
class _PatternPlan:
    flip_class: FlipClass
    cells: tuple
    order: tuple  # (cell index, parent cell index, shared face vertex set) in BFS order
    interior_faces: tuple  # pattern vertex sets whose mesh star must stay inside
    interior_vertices: frozenset
    after_cells: tuple
    after_interior: tuple
    boundary: tuple


def _sub_faces(cell, dim):
    out = {frozenset((v,)) for v in cell}
    out |= {frozenset(e) for e in cell_edges(cell, dim)}
    if dim == 3:
        out |= {frozenset(f) for f in cell_faces(cell, 3)}
    return out


@lru_cache(maxsize=None)
def _plan(dim, X, Y):
    pat = generate_pattern(dim, X, Y)
    cells = pat.before.cells
    inc = facet_incidence(pat.before)
    adj = {}
    for key, users in inc.items():
        if len(users) == 2:
            (a, _), (b, _) = users
            adj.setdefault(a, []).append((b, key))
            adj.setdefault(b, []).append((a, key))
    order = [(0, -1, frozenset())]
    seen = {0}
    head = 0
    while head < len(order):
        a = order[head][0]
        head += 1
        for b, key in sorted(adj.get(a, []), key=lambda t: t[0]):
            if b not in seen:
                seen.add(b)
                order.append((b, a, key))
    bnd = set()
    for key, users in inc.items():
        if len(users) == 1:
            i, j = users[0]
            f = cell_faces(cells[i], dim)[j]
            bnd |= {frozenset((v,)) for v in f}
            if dim == 2:
                bnd.add(frozenset(f))
            else:
                bnd |= {frozenset(e) for e in zip(f, f[1:] + f[:1])}
                bnd.add(frozenset(f))
    allf = set()
    for cell in cells:
        allf |= _sub_faces(cell, dim)
    interior = sorted(allf - bnd, key=lambda s: (len(s), sorted(s)))
    return _PatternPlan(
        pat.flip_class, cells, tuple(order), tuple(interior), frozenset(pat.before_interior),
        pat.after.cells, pat.after_interior, pat.boundary,
    )


def _as_class(dim, flip_class):
    if isinstance(flip_class, FlipClass):
        if flip_class.mesh_dim != dim:
            raise DimensionMismatch(f"class {flip_class} is for dimension {flip_class.mesh_dim}, mesh is {dim}")
        return flip_class
    X, Y = flip_class
    return FlipClass(X, Y, dim + 1)


# -- mesh context ---------------------------------------------------------------


class _MeshIndex:
    """Lookup tables for one mesh, shared across pattern searches."""

    def __init__(self, c):
        self.c = c
        self.facets = {}
        for i, cell in enumerate(c.cells):
            for f in cell_faces(cell, c.dim):
                self.facets.setdefault(frozenset(f), []).append(i)
        self.vcells = c.vertex_cells()
        self.by_vertices = {frozenset(cell): i for i, cell in enumerate(c.cells)}
        self.marked = c.boundary_vertices or frozenset()

    def star(self, verts):
        it = iter(verts)
        out = set(self.vcells.get(next(it), ()))
        for v in it:
            out &= set(self.vcells.get(v, ()))
        return out


def _extend(plan, idx, c0, g0):
    """Propagate a match from mesh cell ``c0`` in frame ``g0``; None on failure."""
    c = idx.c
    perms = cell_symmetries(c.dim)
    k = c.arity
    pmap = {}
    used = {}
    images = [None] * len(plan.cells)

    def bind(pcell, mcell, g):
        perm = perms[g]
        mc = c.cells[mcell]
        for s in range(k):
            pv = pcell[s]
            mv = mc[perm[s]]
            got = pmap.get(pv)
            if got is None:
                if mv in used:
                    return False
                pmap[pv] = mv
                used[mv] = pv
            elif got != mv:
                return False
        return True

    if not bind(plan.cells[0], c0, g0):
        return None
    images[0] = c0
    for pj, pi, face in plan.order[1:]:
        img = frozenset(pmap[v] for v in face)
        owners = idx.facets.get(img, ())
        other = [m for m in owners if m != images[pi]]
        if len(other) != 1:
            return None
        mj = other[0]
        if mj in images:
            return None
        pcell = plan.cells[pj]
        mc = c.cells[mj]
        found = None
        for g, perm in enumerate(perms):
            if all(mc[perm[s]] == pmap[pcell[s]] for s in range(k) if pcell[s] in face):
                found = g
                break
        if found is None or not bind(pcell, mj, found):
            return None
        images[pj] = mj
    matched = set(images)
    for fs in plan.interior_faces:
        if not idx.star([pmap[v] for v in fs]) <= matched:
            return None
    if any(pmap[v] in idx.marked for v in plan.interior_vertices):
        return None
    return pmap, tuple(sorted(matched))


def _after_build(c, plan, pmap, cells):
    """Apply a matched pattern; returns (new mesh, new vertex ids, touched ids)."""
    drop = {pmap[v] for v in plan.interior_vertices}
    keep = [v for v in range(c.vertex_count) if v not in drop]
    remap = {v: i for i, v in enumerate(keep)}
    nv = len(keep)
    new_ids = {}
    for pv in plan.after_interior:
        new_ids[pv] = nv
        nv += 1
    cellset = set(cells)
    out = [tuple(remap[v] for v in cell) for i, cell in enumerate(c.cells) if i not in cellset]
    for pcell in plan.after_cells:
        out.append(tuple(new_ids[v] if v in new_ids else remap[pmap[v]] for v in pcell))
    bv = None
    if c.boundary_vertices is not None:
        bv = frozenset(remap[v] for v in c.boundary_vertices if v in remap)
    res = CubicalComplex(c.dim, nv, out, bv)
    touched = [remap[pmap[v]] for v in plan.boundary] + list(new_ids.values())
    return res, [new_ids[v] for v in plan.after_interior], touched


def _dedup_key(plan, pmap, cells):
    after = frozenset(
        frozenset(pmap[v] for v in pcell if v in pmap and v not in plan.interior_vertices)
        for pcell in plan.after_cells
    )
    return cells, after


def find_sites(c, flip_class, check_result=True):
    """All sites where the class's before-pattern can be flipped.

    Sites are deduplicated by matched cell set and the boundary footprint of
    the after-cells; the lexicographically least vertex map is kept.  With
    ``check_result`` the flipped mesh is validated around the site and sites
    whose result would be invalid are dropped.
    """
    cl = _as_class(c.dim, flip_class)
    plan = _plan(c.dim, cl.X, cl.Y)
    idx = _MeshIndex(c)
    return _find(idx, plan, check_result)


def _find(idx, plan, check_result, with_results=False):
    c = idx.c
    nperm = len(cell_symmetries(c.dim))
    best = {}
    for m0 in range(len(c.cells)):
        for g in range(nperm):
            got = _extend(plan, idx, m0, g)
            if got is None:
                continue
            pmap, cells = got
            vm = tuple(sorted(pmap.items()))
            key = _dedup_key(plan, pmap, cells)
            prev = best.get(key)
            if prev is None or vm < prev:
                best[key] = vm
    sites = []
    for key, vm in best.items():
        site = MatchSite(plan.flip_class, vm, key[0])
        res = new = None
        if check_result or with_results:
            res, new, touched = _after_build(c, plan, dict(vm), key[0])
            if check_result and not validate(res, vertices=touched).ok:
                continue
        sites.append((site, res, new) if with_results else site)
    sites.sort(key=(lambda t: t[0].sort_key()) if with_results else MatchSite.sort_key)
    return sites


def all_sites(c, classes=None, check_result=True):
    """Sites for every flip class of the mesh dimension, in class order."""
    if classes is None:
        classes = enumerate_classes(c.dim)[0]
    idx = _MeshIndex(c)
    out = []
    for cl in classes:
        cl = _as_class(c.dim, cl)
        out.extend(_find(idx, _plan(c.dim, cl.X, cl.Y), check_result))
    return out


def check_site(c, site):
    """Raise SiteStale unless ``site`` is a flippable site of ``c``."""
    cl = _as_class(c.dim, site.flip_class)
    plan = _plan(c.dim, cl.X, cl.Y)
    pmap = site.mapping
    if set(pmap) != {v for cell in plan.cells for v in cell}:
        raise SiteStale("vertex map does not cover the pattern")
    idx = _MeshIndex(c)
    if any(not 0 <= v < c.vertex_count for v in pmap.values()):
        raise SiteStale("vertex map refers to missing vertices")
    m0 = idx.by_vertices.get(frozenset(pmap[v] for v in plan.cells[0]))
    if m0 is None:
        raise SiteStale("first pattern cell has no image")
    for g in range(len(cell_symmetries(c.dim))):
        got = _extend(plan, idx, m0, g)
        if got is not None and got[0] == pmap:
            return got[1]
    raise SiteStale("site does not match the mesh")


def apply_flip(c, site, check=True):
    """Replace the matched cells by the pattern's after-side.

    Vertices interior to the removed cells are deleted and the remaining ids
    compacted in order; after-side interior vertices get fresh ids appended in
    pattern order.  Returns the new mesh (coordinates are not carried).
    """
    cells = check_site(c, site) if check else site.cells
    cl = _as_class(c.dim, site.flip_class)
    plan = _plan(c.dim, cl.X, cl.Y)
    res, new, touched = _after_build(c, plan, site.mapping, cells)
    if check and not validate(res, vertices=touched).ok:
        raise SiteStale("flip at this site would produce an invalid mesh")
    return res


def apply_flip_ex(c, site, check=True):
    """Like :func:`apply_flip` but also returns the new vertex ids."""
    cells = check_site(c, site) if check else site.cells
    cl = _as_class(c.dim, site.flip_class)
    plan = _plan(c.dim, cl.X, cl.Y)
    res, new, touched = _after_build(c, plan, site.mapping, cells)
    if check and not validate(res, vertices=touched).ok:
        raise SiteStale("flip at this site would produce an invalid mesh")
    return res, new


def pillow(c, cell):
    """Split one hex into seven (the (3,0) flip at that cell)."""
    if c.dim != 3:
        raise DimensionMismatch("pillowing needs a hex mesh")
    for site in find_sites(c, (3, 0)):
        if site.cells == (cell,):
            return apply_flip(c, site)
    raise SiteStale(f"cell {cell} cannot be pillowed")


# -- parity change ----------------------------------------------------------------


def _hexagon(c, a, b):
    if c.dim != 2:
        raise DimensionMismatch("parity change is defined for quad meshes")
    if a == b or not (0 <= a < len(c.cells) and 0 <= b < len(c.cells)):
        raise NotAdjacent("need two distinct quads")
    qa, qb = c.cells[a], c.cells[b]
    shared = set(qa) & set(qb)
    ea = {frozenset(e) for e in cell_edges(qa, 2)}
    eb = {frozenset(e) for e in cell_edges(qb, 2)}
    common = ea & eb
    if len(common) != 1 or len(shared) != 2:
        raise NotAdjacent(f"quads {a} and {b} do not share exactly one edge")
    u, v = next(iter(common))
    # walk qa from u away from v, then qb
    i = qa.index(u)
    if qa[(i + 1) % 4] == v:
        walk_a = [qa[(i - s) % 4] for s in range(4)]
    else:
        walk_a = [qa[(i + s) % 4] for s in range(4)]
    # walk_a = u, x, y, v
    j = qb.index(v)
    if qb[(j + 1) % 4] == u:
        walk_b = [qb[(j - s) % 4] for s in range(4)]
    else:
        walk_b = [qb[(j + s) % 4] for s in range(4)]
    hexa = walk_a + walk_b[1:3]
    if len(set(hexa)) != 6:
        raise DegenerateUnion("union of the two quads is not a hexagon with six distinct vertices")
    return hexa


def parity_change(c, a, b, check=True):
    """Replace two quads sharing one edge by three quads around a new vertex.

    The hexagon ``h0..h5`` starts at an endpoint of the shared edge; the new
    quads are ``(x, h0, h1, h2)``, ``(x, h2, h3, h4)``, ``(x, h4, h5, h0)``.
    Returns ``(mesh, hexagon, new vertex id)``.
    """
    hexa = _hexagon(c, a, b)
    x = c.vertex_count
    keep = [q for i, q in enumerate(c.cells) if i not in (a, b)]
    h = hexa
    new = [(x, h[0], h[1], h[2]), (x, h[2], h[3], h[4]), (x, h[4], h[5], h[0])]
    res = c.replace(vertex_count=x + 1, cells=keep + new, coords=None)
    if check and not validate(res, vertices=h + [x]).ok:
        raise DegenerateUnion("parity change would produce an invalid mesh")
    return res, tuple(hexa), x


def parity_sites(c):
    """Quad pairs sharing an interior edge, as sorted index pairs."""
    inc = facet_incidence(c)
    out = set()
    for users in inc.values():
        if len(users) == 2:
            (a, _), (b, _) = users
            out.add((min(a, b), max(a, b)))
    return sorted(out)


def parity_inverse_sites(c):
    """Interior vertices of degree three whose quads form a hexagon."""
    out = []
    vc = c.vertex_cells()
    marked = c.boundary_vertices or frozenset()
    for v in sorted(vc):
        if len(vc[v]) == 3 and v not in marked:
            try:
                _degree3_hexagon(c, v)
            except DegenerateUnion:
                continue
            out.append(v)
    return out


def _degree3_hexagon(c, v):
    cells = c.vertex_cells().get(v, [])
    if len(cells) != 3:
        raise DegenerateUnion(f"vertex {v} is not shared by exactly three quads")
    nxt = {}
    for i in cells:
        q = c.cells[i]
        k = q.index(v)
        a, m, b = q[(k + 1) % 4], q[(k + 2) % 4], q[(k + 3) % 4]
        nxt.setdefault(a, []).append((m, b))
        nxt.setdefault(b, []).append((m, a))
    start = min(nxt)
    hexa = [start]
    prev = None
    cur = start
    for _ in range(3):
        opts = [(m, w) for m, w in nxt[cur] if w != prev] if prev is not None else [sorted(nxt[cur])[0]]
        if not opts:
            raise DegenerateUnion("quads around vertex do not close up")
        m, w = opts[0]
        hexa += [m, w]
        prev, cur = cur, w
    if hexa[-1] != start or len(set(hexa[:-1])) != 6:
        raise DegenerateUnion("quads around vertex do not form a hexagon")
    return cells, hexa[:-1]


def parity_inverse(c, v, split=0, check=True):
    """Merge the three quads around degree-3 vertex ``v`` into two.

    ``split`` in 0..2 picks the hexagon diagonal used for the new shared edge.
    Returns ``(mesh, hexagon)`` with the hexagon rotated so that the new
    shared edge is ``(h0, h3)``.
    """
    if c.dim != 2:
        raise DimensionMismatch("parity change is defined for quad meshes")
    if c.boundary_vertices and v in c.boundary_vertices:
        raise DegenerateUnion("vertex is marked as boundary")
    cells, h = _degree3_hexagon(c, v)
    # vertices adjacent to v sit at even positions; diagonal must join two odd ones
    s = 2 * split + 1
    h = h[s:] + h[:s]
    drop = set(cells)
    keep_v = [u for u in range(c.vertex_count) if u != v]
    remap = {u: i for i, u in enumerate(keep_v)}
    out = [tuple(remap[u] for u in q) for i, q in enumerate(c.cells) if i not in drop]
    hh = [remap[u] for u in h]
    out += [tuple(hh[0:4]), (hh[3], hh[4], hh[5], hh[0])]
    bv = None if c.boundary_vertices is None else frozenset(remap[u] for u in c.boundary_vertices if u in remap)
    res = CubicalComplex(2, c.vertex_count - 1, out, bv)
    if check and not validate(res, vertices=hh).ok:
        raise DegenerateUnion("merge would produce an invalid mesh")
    return res, tuple(h)


# -- refinement -------------------------------------------------------------------

_QUAD_BITS = ((0, 0), (1, 0), (1, 1), (0, 1))


def grid_refine(c, m):
    """Split every d-cell into an m^d grid; shared faces are split consistently.

    Each new point is identified by its multilinear weights on the smallest
    face containing it, so neighbouring cells agree.  Coordinates, when
    present, are interpolated the same way.
    """
    if m < 1:
        raise InvalidComplex("refinement factor must be at least 1")
    if m == 1:
        return c
    d = c.dim
    ids = {}
    coords = [] if c.coords is not None else None
    for v in range(c.vertex_count):
        ids[frozenset(((v, m ** d),))] = v
        if coords is not None:
            coords.append(c.coords[v])
    nv = c.vertex_count
    corner_bits = _QUAD_BITS if d == 2 else [((s & 1), (s >> 1) & 1, (s >> 2) & 1) for s in range(8)]

    def point(cell, loc):
        nonlocal nv
        w = []
        for slot, bits in enumerate(corner_bits):
            x = 1
            for ax in range(d):
                x *= loc[ax] if bits[ax] else m - loc[ax]
            if x:
                w.append((cell[slot], x))
        key = frozenset(w)
        got = ids.get(key)
        if got is None:
            got = ids[key] = nv
            nv += 1
            if coords is not None:
                tot = m ** d
                coords.append(tuple(sum(c.coords[v][a] * x for v, x in w) / tot for a in range(3)))
        return got

    out = []
    for cell in c.cells:
        for base in product(range(m), repeat=d):
            sub = []
            for bits in corner_bits:
                sub.append(point(cell, tuple(base[a] + bits[a] for a in range(d))))
            out.append(tuple(sub))
    bv = c.boundary_vertices
    if bv is not None:
        # refined boundary = points whose support lies in marked vertices on a boundary face
        from .complex import boundary_faces

        bfaces = [frozenset(f) for f in boundary_faces(c)]
        extra = set()
        for key, vid in ids.items():
            sup = {v for v, _ in key}
            if sup <= bv and any(sup <= f for f in bfaces):
                extra.add(vid)
        bv = frozenset(bv | extra)
    return CubicalComplex(d, nv, out, bv, coords)


# -- flip sequences ---------------------------------------------------------------


@dataclass
class FlipStep:
    kind: str  # "flip" or "parity"
    flip_class: tuple
    vertex_map: dict
    new_vertices: list = field(default_factory=list)
    phase: str | None = None

    def to_dict(self):
        d = {
            "kind": self.kind,
            "class": list(self.flip_class),
            "map": {str(k): v for k, v in sorted(self.vertex_map.items())},
            "new_vertices": list(self.new_vertices),
        }
        if self.phase:
            d["phase"] = self.phase
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], tuple(d["class"]), {int(k): int(v) for k, v in d["map"].items()},
                   list(d.get("new_vertices", [])), d.get("phase"))


@dataclass
class FlipSequence:
    initial_key: str
    steps: list = field(default_factory=list)

    def __len__(self):
        return len(self.steps)

    def to_json(self):
        return json.dumps({"initial_key": self.initial_key, "steps": [s.to_dict() for s in self.steps]},
                          sort_keys=True)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(d["initial_key"], [FlipStep.from_dict(s) for s in d["steps"]])


def flip_step(c, site):
    """Apply a flip site; returns (mesh, FlipStep)."""
    res, new = apply_flip_ex(c, site)
    cl = site.flip_class
    return res, FlipStep("flip", (cl.X, cl.Y), dict(site.vertex_map), new)


def parity_step(c, a, b):
    res, hexa, x = parity_change(c, a, b)
    return res, FlipStep("parity", (2, 3), {i: v for i, v in enumerate(hexa)}, [x])


def parity_inverse_step(c, v, split=0):
    res, hexa = parity_inverse(c, v, split)
    m = {i: u for i, u in enumerate(hexa)}
    m[6] = v
    return res, FlipStep("parity", (3, 2), m, [])


def apply_step(c, step):
    """Replay one recorded step on the mesh it was recorded against."""
    if step.kind == "flip":
        cl = FlipClass(step.flip_class[0], step.flip_class[1], c.dim + 1)
        site = MatchSite(cl, tuple(sorted(step.vertex_map.items())), ())
        res, new = apply_flip_ex(c, site)
        if step.new_vertices and list(new) != list(step.new_vertices):
            raise SiteStale("replayed flip produced different vertex ids")
        return res
    if step.kind == "parity":
        m = step.vertex_map
        if tuple(step.flip_class) == (2, 3):
            h = [m[i] for i in range(6)]
            a = _cell_with(c, {h[0], h[1], h[2], h[3]})
            b = _cell_with(c, {h[3], h[4], h[5], h[0]})
            res, hexa, _ = parity_change(c, a, b)
            if list(hexa) != h:
                raise SiteStale("replayed parity change walked a different hexagon")
            return res
        v = m[6]
        h = [m[i] for i in range(6)]
        for split in range(3):
            res, hexa = parity_inverse(c, v, split)
            if list(hexa) == h:
                return res
        raise SiteStale("replayed parity merge does not match")
    raise SiteStale(f"unknown step kind {step.kind!r}")


def _cell_with(c, verts):
    for i, q in enumerate(c.cells):
        if set(q) == verts:
            return i
    raise SiteStale(f"no cell with vertices {sorted(verts)}")


def replay(c, seq, check_key=True):
    """Replay a flip sequence, returning every intermediate mesh."""
    if check_key and seq.initial_key and canonicalize(c).hex() != seq.initial_key:
        raise SiteStale("sequence was recorded for a different initial mesh")
    out = [c]
    for step in seq.steps:
        c = apply_step(c, step)
        out.append(c)
    return out


def moves(c, classes=None, parity=False):
    """Every single move from ``c`` as ``(step, result)`` pairs, deterministic order."""
    if classes is None:
        classes = enumerate_classes(c.dim)[0]
    idx = _MeshIndex(c)
    out = []
    for cl in classes:
        cl = _as_class(c.dim, cl)
        for site, res, new in _find(idx, _plan(c.dim, cl.X, cl.Y), True, with_results=True):
            out.append((FlipStep("flip", (cl.X, cl.Y), dict(site.vertex_map), new), res))
    if parity and c.dim == 2:
        for a, b in parity_sites(c):
            try:
                res, step = parity_step(c, a, b)
            except (DegenerateUnion, NotAdjacent):
                continue
            out.append((step, res))
        for v in parity_inverse_sites(c):
            for split in range(3):
                try:
                    res, step = parity_inverse_step(c, v, split)
                except DegenerateUnion:
                    continue
                out.append((step, res))
    return out
