"""Coordinates for cubical complexes: shape predicates, flip constructions,
flippability verdicts and the instance generators.

All tests are scale-free.  With ``L`` the largest distance between two
vertices of a configuration, a quad ``p0..p3`` is planar when
``|det(p1-p0, p2-p0, p3-p0)| / L**3`` is at most the relative epsilon;
distances are compared against ``eps * L`` and areas against ``eps * L**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import least_squares
from scipy.spatial.distance import pdist

from .catalog import FlipClass, generate_pattern
from .complex import HEX_EDGES, HEX_FACES, CubicalComplex, _orientable, cell_faces, validate
from .errors import (
    ClassNotAutomatic,
    DimensionMismatch,
    InvalidComplex,
    NumericallyDegenerate,
    ParamOutOfRange,
    PatternMismatch,
    SiteStale,
)
from .flips import _plan, apply_flip_ex, check_site, find_sites

AUTOMATIC = ((3, 0), (0, 3), (2, 0), (0, 2), (0, 0))


@dataclass(frozen=True)
class ToleranceConfig:
    relative_epsilon: float = 1e-9

    def __post_init__(self):
        if not self.relative_epsilon > 0:
            raise ParamOutOfRange("tolerance must be positive", field="relative_epsilon")


@dataclass(frozen=True, eq=False)
class Realization:
    """A complex with one point per vertex id.

    ``labels`` names notable vertices (generators use it for the points a
    construction refers to); it does not take part in any predicate.
    """

    complex: CubicalComplex
    coords: np.ndarray
    tolerance: ToleranceConfig = field(default_factory=ToleranceConfig)
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.array(self.coords, dtype=float).reshape(-1, 3)
        if len(pts) != self.complex.vertex_count:
            raise InvalidComplex(
                f"{len(pts)} points for {self.complex.vertex_count} vertices")
        pts.setflags(write=False)
        object.__setattr__(self, "coords", pts)
        object.__setattr__(self, "complex", self.complex.without_coords())

    @classmethod
    def from_complex(cls, c, tolerance=None, labels=None):
        if c.coords is None:
            raise InvalidComplex("mesh has no coordinates")
        return cls(c, np.array(c.coords), tolerance or ToleranceConfig(), dict(labels or {}))

    def to_complex(self):
        return self.complex.replace(coords=[tuple(float(x) for x in p) for p in self.coords])

    @property
    def eps(self):
        return self.tolerance.relative_epsilon

    @property
    def scale(self):
        used = self.complex.used_vertices() or range(len(self.coords))
        return config_scale(self.coords[list(used)])

    def with_coords(self, coords, complex=None, labels=None):
        return Realization(complex or self.complex, coords, self.tolerance,
                           self.labels if labels is None else labels)

    def transformed(self, matrix=None, offset=None, factor=1.0):
        """Image under ``x -> factor * matrix @ x + offset``."""
        m = np.eye(3) if matrix is None else np.asarray(matrix, float)
        b = np.zeros(3) if offset is None else np.asarray(offset, float)
        return self.with_coords(factor * self.coords @ m.T + b)


def config_scale(points):
    pts = np.asarray(points, float)
    if len(pts) < 2:
        return 1.0
    d = pdist(pts).max()
    return float(d) if d > 0 else 1.0


def planarity_defect(points, scale):
    p = np.asarray(points, float)
    return abs(float(np.linalg.det(p[1:4] - p[0]))) / scale ** 3


def _newell(p):
    p = np.asarray(p, float)
    q = np.roll(p, -1, axis=0)
    return np.array([
        (p[:, 1] * q[:, 2] - p[:, 2] * q[:, 1]).sum(),
        (p[:, 2] * q[:, 0] - p[:, 0] * q[:, 2]).sum(),
        (p[:, 0] * q[:, 1] - p[:, 1] * q[:, 0]).sum(),
    ])


_FACE_IDX = np.array(HEX_FACES)
_EDGE_IDX = np.array(HEX_EDGES)


def _face_normals(p):
    q = p[_FACE_IDX]  # (6, 4, 3)
    return np.cross(q, np.roll(q, -1, axis=1)).sum(axis=1)


# -- shape predicates -------------------------------------------------------------


def quad_shape(p, scale, eps):
    """Classify four points: ``warped``, ``flat`` (no area), ``nonconvex``,
    ``degenerate`` (a straight angle) or ``convex``; also returns the defect."""
    p = np.asarray(p, float)
    defect = planarity_defect(p, scale)
    if defect > eps:
        return "warped", defect
    n = _newell(p)
    area = np.linalg.norm(n) / 2
    if area / scale ** 2 <= eps:
        return "flat", defect
    n = n / np.linalg.norm(n)
    turns = [float(np.cross(p[k] - p[k - 1], p[(k + 1) % 4] - p[k]) @ n) / scale ** 2 for k in range(4)]
    if min(turns) < -eps:
        return "nonconvex", defect
    if min(turns) <= eps:
        return "degenerate", defect
    return "convex", defect


def signed_volume(p):
    """Signed volume of a hex in binary corner order (positive for the unit cube)."""
    p = np.asarray(p, float)
    v = 0.0
    for f in HEX_FACES:
        a, b, c, d = (p[s] for s in f)
        v += np.linalg.det(np.array([a, b, c])) + np.linalg.det(np.array([a, c, d]))
    return -v / 6.0


def hex_shape(p, scale, eps):
    """``cuboid`` when strictly convex with the cube's face structure,
    ``weak`` when convex with straight angles or flat dihedrals, else ``bad``."""
    p = np.asarray(p, float)
    if abs(signed_volume(p)) / scale ** 3 <= eps:
        return "bad"
    cen = p.mean(axis=0)
    weak = False
    for f in HEX_FACES:
        q = p[list(f)]
        n = _newell(q)
        nn = np.linalg.norm(n)
        if nn / scale ** 2 <= eps:
            return "bad"
        n = n / nn
        if (cen - q.mean(axis=0)) @ n > 0:
            n = -n
        others = [s for s in range(8) if s not in f]
        d = (p[others] - q[0]) @ n / scale
        if d.max() > eps:
            return "bad"
        if d.max() > -eps:
            weak = True
    return "weak" if weak else "cuboid"


def _hex_axes(p):
    return _face_normals(p), p[_EDGE_IDX[:, 1]] - p[_EDGE_IDX[:, 0]]


def interiors_overlap(pa, pb, scale, eps):
    """Separating-axis test for two convex hexes; touching counts as disjoint."""
    pa, pb = np.asarray(pa, float), np.asarray(pb, float)
    tol = eps * scale
    if (pa.max(0) <= pb.min(0) + tol).any() or (pb.max(0) <= pa.min(0) + tol).any():
        return False
    fa, ea = _hex_axes(pa)
    fb, eb = _hex_axes(pb)
    ax = np.concatenate([fa, fb, np.cross(ea[:, None, :], eb[None, :, :]).reshape(-1, 3)])
    norms = np.linalg.norm(ax, axis=1)
    ax = ax[norms > 1e-12 * scale ** 2] / norms[norms > 1e-12 * scale ** 2, None]
    sa, sb = pa @ ax.T, pb @ ax.T
    sep = (sa.max(0) <= sb.min(0) + tol) | (sb.max(0) <= sa.min(0) + tol)
    return not sep.any()


def _unique_quads(c):
    if c.dim == 2:
        return [tuple(cell) for cell in c.cells]
    seen = {}
    for cell in c.cells:
        for f in cell_faces(cell, 3):
            seen.setdefault(frozenset(f), tuple(f))
    return list(seen.values())


def _collinear_triples(pts, scale, eps, limit=1):
    n = len(pts)
    if n < 3:
        return []
    idx = np.array(list(combinations(range(n), 3)))
    a, b, c = pts[idx[:, 0]], pts[idx[:, 1]], pts[idx[:, 2]]
    cr = np.linalg.norm(np.cross(b - a, c - a), axis=1) / scale ** 2
    hits = np.nonzero(cr <= eps)[0]
    return [tuple(int(x) for x in idx[h]) for h in hits[:limit]]


def _coplanar_pairs(quads, pts, scale, eps, limit=1):
    if len(quads) < 2:
        return []
    P = pts[np.array(quads)]  # (q, 4, 3)
    normals = np.array([_newell(q) for q in P])
    nn = np.linalg.norm(normals, axis=1)
    nn[nn == 0] = 1.0
    normals /= nn[:, None]
    out = []
    for i in range(len(quads)):
        d = np.abs(np.einsum("qkj,j->qk", P - P[i][0], normals[i])).max(axis=1) / scale
        for j in np.nonzero(d <= eps)[0]:
            if j > i:
                out.append((i, int(j)))
                if len(out) >= limit:
                    return out
    return out


@dataclass
class RealizationCheck:
    classification: str  # geometric | self_intersecting | invalid
    generic: bool
    issues: list = field(default_factory=list)
    max_defect: float = 0.0
    degenerate: bool = False

    def to_dict(self):
        return {
            "classification": self.classification,
            "generic": self.generic,
            "degenerate": self.degenerate,
            "max_defect": self.max_defect,
            "issues": self.issues,
        }


def check_realization(r):
    """Classify a realization as geometric, self-intersecting or invalid.

    Every quad must be planar and convex for anything better than invalid.
    Hex meshes are geometric when each cell is a strictly convex cuboid, cell
    orientations agree, and no two cell interiors meet.  Quad surfaces are
    judged by their faces alone.
    """
    c, pts, eps = r.complex, r.coords, r.eps
    L = r.scale
    issues = []
    rep = validate(c)
    if not rep.ok:
        v = rep.violations[0]
        issues.append({"kind": "combinatorial", "rule": v.rule, "cells": list(v.cells)})
        return RealizationCheck("invalid", False, issues)
    quads = _unique_quads(c)
    worst = 0.0
    bad = False
    degenerate = False
    for q in quads:
        kind, d = quad_shape(pts[list(q)], L, eps)
        worst = max(worst, d)
        if kind in ("warped", "flat", "nonconvex"):
            bad = True
            issues.append({"kind": f"{kind}_quad", "vertices": list(q),
                           "points": pts[list(q)].tolist(), "defect": d})
        elif kind == "degenerate":
            degenerate = True
            issues.append({"kind": "degenerate_quad", "vertices": list(q)})
    used = c.used_vertices()
    upts = pts[used]
    generic = not _collinear_triples(upts, L, eps) and not _coplanar_pairs(
        [[used.index(v) for v in q] for q in quads], upts, L, eps)
    if bad:
        return RealizationCheck("invalid", generic, issues, worst, degenerate)
    proper = not degenerate
    if c.dim == 3:
        shapes = [hex_shape(pts[list(cell)], L, eps) for cell in c.cells]
        for i, s in enumerate(shapes):
            if s != "cuboid":
                proper = False
                issues.append({"kind": "not_cuboid" if s == "bad" else "degenerate_cell", "cell": i})
        ok, comb = _orientable(c)
        geo = [np.sign(signed_volume(pts[list(cell)])) for cell in c.cells]
        prod = [int(g * s) for g, s in zip(geo, comb or [1] * len(geo))]
        major = 1 if prod.count(1) >= prod.count(-1) else -1
        for i, p in enumerate(prod):
            if p != major:
                proper = False
                issues.append({"kind": "inverted", "cell": i})
        for i, j in combinations(range(len(c.cells)), 2):
            if shapes[i] == "bad" or shapes[j] == "bad":
                continue
            if interiors_overlap(pts[list(c.cells[i])], pts[list(c.cells[j])], L, eps):
                proper = False
                issues.append({"kind": "overlap", "cells": [i, j]})
    cls = "geometric" if proper else "self_intersecting"
    return RealizationCheck(cls, generic, issues, worst, degenerate)


# -- flip constructions ---------------------------------------------------------------


@dataclass
class FlippabilityVerdict:
    flippable: bool
    flip_class: tuple
    reason: str = ""
    witness: dict = field(default_factory=dict)
    realization: Realization | None = None
    check: RealizationCheck | None = None
    residual: float | None = None
    strictly_convex: bool | None = None

    def to_dict(self):
        out = {
            "flippable": self.flippable,
            "class": list(self.flip_class),
            "reason": self.reason,
            "witness": self.witness,
            "residual": self.residual,
            "strictly_convex": self.strictly_convex,
        }
        if self.check is not None:
            out["after"] = {"classification": self.check.classification, "generic": self.check.generic}
        return out


def _norm_class(flip_class):
    cl = tuple(int(x) for x in flip_class)
    if len(cl) != 2:
        raise PatternMismatch("flip class must be a pair (X, Y)")
    FlipClass(cl[0], cl[1], 4)
    return cl


def _locate(r, cl, site):
    c = r.complex
    if c.dim != 3:
        raise DimensionMismatch("geometric flips act on hex meshes")
    if site is None:
        sites = find_sites(c, cl)
        if not sites:
            raise PatternMismatch(f"no ({cl[0]},{cl[1]}) configuration in the mesh")
        site = sites[0]
    else:
        try:
            check_site(c, site)
        except SiteStale as exc:
            raise PatternMismatch(str(exc)) from None
    return site, _plan(3, *cl)


def _after(r, site, plan, newpos):
    """Realization of the flipped mesh, carrying coordinates through."""
    res, _ = apply_flip_ex(r.complex, site)
    pmap = site.mapping
    drop = {pmap[v] for v in plan.interior_vertices}
    keep = [v for v in range(r.complex.vertex_count) if v not in drop]
    pts = [r.coords[v] for v in keep] + [np.asarray(newpos[pv], float) for pv in plan.after_interior]
    remap = {v: i for i, v in enumerate(keep)}
    labels = {k: remap[v] for k, v in r.labels.items() if v in remap}
    for i, pv in enumerate(plan.after_interior):
        labels.setdefault(f"new{i}", len(keep) + i)
    return Realization(res, np.array(pts), r.tolerance, labels)


def _region_strictly_convex(r, cells):
    """Whether the union of the given cells is a strictly convex polytope."""
    c, L, eps = r.complex, r.scale, r.eps
    count = {}
    for i in cells:
        for f in cell_faces(c.cells[i], 3):
            key = frozenset(f)
            count[key] = (count.get(key, (0, f))[0] + 1, f)
    verts = sorted({v for i in cells for v in c.cells[i]})
    P = r.coords[verts]
    cen = P.mean(axis=0)
    for key, (k, f) in count.items():
        if k != 1:
            continue
        q = r.coords[list(f)]
        n = _newell(q)
        n /= np.linalg.norm(n)
        if (cen - q.mean(axis=0)) @ n > 0:
            n = -n
        others = [v for v in verts if v not in key]
        if ((r.coords[others] - q[0]) @ n / L).max() >= -eps:
            return False, sorted(key)
    return True, None


def _corner_points(r, site):
    return {pv: r.coords[mv] for pv, mv in site.mapping.items()}


_DEGENERATE = {"degenerate_quad", "degenerate_cell"}


def _rank(chk, strict):
    if chk.classification == "self_intersecting" and not strict and all(
            i["kind"] in _DEGENERATE for i in chk.issues):
        return 2
    return {"invalid": 0, "self_intersecting": 1, "geometric": 2}[chk.classification]


def _verdict(r, cl, site, plan, newpos, residual=None, extra=None, strict=True):
    after = _after(r, site, plan, newpos)
    chk = check_realization(after)
    before = check_realization(r)
    convex, face = _region_strictly_convex(r, site.cells)
    need = 2 if _rank(before, strict) == 2 else 1
    ok = _rank(chk, strict) >= need
    witness = dict(extra or {})
    reason = ""
    if need == 2 and strict and not convex:
        ok = False
        reason = "region is not strictly convex"
        witness["face"] = face
    elif not ok:
        reason = f"flipped mesh is {chk.classification}"
        if chk.issues:
            witness["issue"] = chk.issues[0]
    return FlippabilityVerdict(ok, cl, reason, witness, after, chk, residual, convex)


def realize_flip(r, flip_class, site=None, apex=None, t=0.5, point=None, inset=0.25, strict=True):
    """Carry out an automatically flippable flip on a realization.

    ``apex`` and ``t`` parametrize the (3,0) homothety; ``point`` (or
    ``inset``) chooses the free middle-face vertex of the (2,0) ring.
    With ``strict=False`` cells with straight angles or flat dihedrals
    count as cuboids, and the region need only be weakly convex.
    """
    cl = _norm_class(flip_class)
    if cl not in AUTOMATIC:
        raise ClassNotAutomatic(f"({cl[0]},{cl[1]}) is not automatically flippable; use check_flippability")
    site, plan = _locate(r, cl, site)
    P = _corner_points(r, site)
    if cl == (3, 0):
        return _realize_30(r, cl, site, plan, P, apex, t, strict)
    if cl == (2, 0):
        return _realize_20(r, cl, site, plan, P, point, inset, strict)
    if cl == (0, 0):
        return _realize_00(r, cl, site, plan, P, strict)
    return _verdict(r, cl, site, plan, {}, strict=strict)


def _realize_30(r, cl, site, plan, P, apex, t, strict):
    if not 0 < t < 1:
        raise ParamOutOfRange("homothety factor must lie in (0, 1)", field="t")
    corners = np.array([P[c] for c in range(8)])
    a = corners.mean(axis=0) if apex is None else np.asarray(apex, float)
    L, eps = r.scale, r.eps
    cen = corners.mean(axis=0)
    for f in HEX_FACES:
        q = corners[list(f)]
        n = _newell(q)
        n /= np.linalg.norm(n)
        if (cen - q.mean(axis=0)) @ n > 0:
            n = -n
        if (a - q[0]) @ n / L >= -eps:
            raise ParamOutOfRange("apex must lie strictly inside the hex", field="apex")
    newpos = {c | 8: a + t * (P[c] - a) for c in range(8)}
    return _verdict(r, cl, site, plan, newpos, extra={"apex": a.tolist(), "t": t}, strict=strict)


def _plane(a, b, c):
    n = np.cross(b - a, c - a)
    return n, float(n @ a)


def _code(s, t, top, bot):
    return s | t << 1 | top << 2 | bot << 3


# ring order of the four (bit0, bit1) columns
_RING = ((0, 0), (0, 1), (1, 1), (1, 0))


def _ring_planes(P, L, eps):
    region = np.array(list(P.values()))
    g = region.mean(axis=0)
    planes = {}
    for s, t in _RING:
        o, p, q = P[_code(s, t, 0, 0)], P[_code(s, t, 1, 0)], P[_code(s, t, 0, 1)]
        n = np.cross(p - o, q - o)
        if np.linalg.norm(n) / L ** 2 <= eps:
            # collinear column: use the plane through it and the region centre
            n = np.cross(p - q, g - o)
            if np.linalg.norm(n) / L ** 2 <= eps:
                raise NumericallyDegenerate("ring plane is undetermined")
        n = n / np.linalg.norm(n)
        planes[(s, t)] = (n, float(n @ o))
    return planes


def _ring_map(P, planes, c1, c2, v, L, eps):
    """Move a point of the plane at column c1 to the plane at column c2."""
    n2, d2 = planes[c2]
    na, da = _plane(P[_code(*c1, 1, 0)], P[_code(*c2, 1, 0)], v)
    nb, db = _plane(P[_code(*c1, 0, 1)], P[_code(*c2, 0, 1)], v)
    A = np.array([n2, na, nb])
    scale = np.linalg.norm(na) * np.linalg.norm(nb)
    if scale == 0 or abs(np.linalg.det(A)) / scale <= eps:
        raise NumericallyDegenerate("ring map pivot vanishes")
    return np.linalg.solve(A, np.array([d2, da, db]))


def _ring_cycle(P, planes, v, L, eps):
    out = [v]
    for c1, c2 in zip(_RING, _RING[1:] + _RING[:1]):
        out.append(_ring_map(P, planes, c1, c2, out[-1], L, eps))
    return out


def _realize_20(r, cl, site, plan, P, point, inset, strict):
    L, eps = r.scale, r.eps
    planes = _ring_planes(P, L, eps)
    n0, d0 = planes[_RING[0]]
    o, p, q = P[_code(0, 0, 0, 0)], P[_code(0, 0, 1, 0)], P[_code(0, 0, 0, 1)]
    proj = lambda x: x - ((x @ n0) - d0) * n0  # noqa: E731
    if point is not None:
        x = proj(np.asarray(point, float))
    else:
        if not 0 < inset < 1:
            raise ParamOutOfRange("inset must lie in (0, 1)", field="inset")
        m = (p + q) / 2
        g = proj(np.array(list(P.values())).mean(axis=0))
        x = m + inset * (g - m)
    # residual of the composed ring map on sample points of the first plane
    u = p - o
    w = np.cross(n0, u)
    if np.linalg.norm(u) / L <= eps:
        raise NumericallyDegenerate("degenerate ring column")
    samples = [x, o + 0.3 * u + 0.2 * L * w / np.linalg.norm(w), o + 0.6 * u - 0.1 * L * w / np.linalg.norm(w)]
    residual = max(np.linalg.norm(_ring_cycle(P, planes, y, L, eps)[-1] - y) / L for y in samples)
    ring = _ring_cycle(P, planes, x, L, eps)
    newpos = {_code(s, t, 1, 1): ring[i] for i, (s, t) in enumerate(_RING)}
    verdict = _verdict(r, cl, site, plan, newpos, residual, {"point": x.tolist()}, strict)
    if residual > eps:
        verdict.flippable = False
        verdict.reason = "composed ring map is not the identity"
    return verdict


def _realize_00(r, cl, site, plan, P, strict):
    L, eps = r.scale, r.eps
    corners = sorted(P)  # 0..14
    pos = {c: i for i, c in enumerate(corners)}
    cells = [c for c in plan.cells]
    nv = len(corners)
    rows = []
    for k, cell in enumerate(cells):
        for v in cell:
            row = np.zeros(nv + 4 * len(cells))
            row[pos[v]] = 1.0
            row[nv + 4 * k: nv + 4 * k + 3] = -P[v] / L
            row[nv + 4 * k + 3] = -1.0
            rows.append(row)
    M = np.array(rows)
    N = null_space(M)
    # drop the trivial lifts (one affine function for every cell)
    T = []
    for j in range(4):
        vec = np.zeros(M.shape[1])
        for v in corners:
            vec[pos[v]] = P[v][j] / L if j < 3 else 1.0
        for k in range(len(cells)):
            if j < 3:
                vec[nv + 4 * k + j] = 1.0
            else:
                vec[nv + 4 * k + 3] = 1.0
        T.append(vec)
    T = np.linalg.qr(np.array(T).T)[0]
    R = N - T @ (T.T @ N)
    U, S, _ = np.linalg.svd(R, full_matrices=False)
    if S.size == 0 or S[0] <= 1e-8:
        raise NumericallyDegenerate("configuration has no lift to a hypercube")
    lift = U[:, 0][:nv]
    grays = [c for c in corners if bin(c).count("1") == 2]
    G = np.array([[*(P[g] / L), 1.0] for g in grays])
    coef = np.linalg.lstsq(G, lift[[pos[g] for g in grays]], rcond=None)[0]
    w = {c: lift[pos[c]] - np.array([*(P[c] / L), 1.0]) @ coef for c in corners}
    if abs(w[0]) <= 1e-12:
        raise NumericallyDegenerate("apex has no height in the lift")
    w = {c: val / w[0] for c, val in w.items()}
    # upper hyperplanes through each black vertex and its grey neighbours
    H = []
    for a in range(4):
        pts = [1 << a] + [(1 << a) | (1 << b) for b in range(4) if b != a]
        A = np.array([[*(P[v] / L), 1.0] for v in pts])
        if abs(np.linalg.det(A)) <= eps:
            raise NumericallyDegenerate("black and grey vertices are coplanar")
        H.append(np.linalg.solve(A, np.array([w[v] for v in pts])))
    A = np.array([[h[0], h[1], h[2], -1.0] for h in H])
    if abs(np.linalg.det(A)) <= eps:
        raise NumericallyDegenerate("zenith hyperplanes are dependent")
    sol = np.linalg.solve(A, np.array([-h[3] for h in H]))
    z = sol[:3] * L
    extra = {"zenith": z.tolist(), "zenith_w": float(sol[3]),
             "lift": {str(c): float(w[c]) for c in corners}}
    verdict = _verdict(r, cl, site, plan, {15: z}, None, extra, strict)
    inside, face = _point_inside(r, site.cells, z)
    if not inside:
        verdict.flippable = False
        verdict.reason = "zenith projects outside the region"
        verdict.witness["face"] = face
    return verdict


def _point_inside(r, cells, x):
    c, L, eps = r.complex, r.scale, r.eps
    count = {}
    for i in cells:
        for f in cell_faces(c.cells[i], 3):
            key = frozenset(f)
            count[key] = (count.get(key, (0, f))[0] + 1, f)
    verts = sorted({v for i in cells for v in c.cells[i]})
    cen = r.coords[verts].mean(axis=0)
    for key, (k, f) in count.items():
        if k != 1:
            continue
        q = r.coords[list(f)]
        n = _newell(q)
        n /= np.linalg.norm(n)
        if (cen - q.mean(axis=0)) @ n > 0:
            n = -n
        if (x - q[0]) @ n / L >= -eps:
            return False, sorted(key)
    return True, None


# -- general flippability ------------------------------------------------------------


def _after_quads(plan):
    seen = {}
    for cell in plan.after_cells:
        for f in cell_faces(cell, 3):
            seen.setdefault(frozenset(f), tuple(f))
    return sorted(seen.values(), key=sorted)


def check_flippability(r, flip_class, site=None, allow_self_intersecting=False, restarts=6, seed=0):
    """Decide whether a configuration can be flipped with planar faces.

    Automatic classes use :func:`realize_flip`.  For the others, after-side
    quads whose corners all exist already must be planar as given; the new
    vertices are then solved for by least squares over the remaining
    planarity constraints, and each planar solution is classified.
    """
    cl = _norm_class(flip_class)
    if cl in AUTOMATIC:
        return realize_flip(r, cl, site)
    site, plan = _locate(r, cl, site)
    P = _corner_points(r, site)
    L, eps = r.scale, r.eps
    quads = _after_quads(plan)
    new = list(plan.after_interior)
    fixed = [q for q in quads if not set(q) & set(new)]
    worst = None
    for q in fixed:
        d = planarity_defect([P[v] for v in q], L)
        if worst is None or d > worst[0]:
            worst = (d, q)
    if worst is not None and worst[0] > eps:
        d, q = worst
        wit = {"kind": "warped_quad", "vertices": [site.mapping[v] for v in q],
               "points": [P[v].tolist() for v in q], "defect": d}
        return FlippabilityVerdict(False, cl, "an after-side quad with fixed corners is warped", wit)
    if not new:
        return _verdict_general(r, cl, site, plan, {}, allow_self_intersecting)
    free = [q for q in quads if set(q) & set(new)]
    idx = {v: i for i, v in enumerate(new)}

    def point(x, v):
        return x[3 * idx[v]: 3 * idx[v] + 3] if v in idx else P[v] / L

    def resid(x):
        return np.array([np.linalg.det(np.array([point(x, q[k]) - point(x, q[0]) for k in (1, 2, 3)]))
                         for q in free])

    x0 = []
    for v in new:
        nb = [P[v ^ (1 << b)] for b in range(4) if (v ^ (1 << b)) in P]
        x0.append(np.mean(nb, axis=0) / L if nb else np.array(list(P.values())).mean(axis=0) / L)
    x0 = np.concatenate(x0)
    rng = np.random.default_rng(seed)
    best = None
    for k in range(restarts):
        start = x0 if k == 0 else x0 + rng.normal(scale=0.1, size=x0.shape)
        sol = least_squares(resid, start, xtol=1e-15, ftol=1e-15, gtol=1e-15)
        res = float(np.abs(resid(sol.x)).max())
        newpos = {v: sol.x[3 * i: 3 * i + 3] * L for i, v in enumerate(new)}
        if res <= eps:
            verdict = _verdict_general(r, cl, site, plan, newpos, allow_self_intersecting)
            verdict.residual = res
            if verdict.flippable:
                return verdict
            if best is None or best[0] > 0:
                best = (0, verdict)
        elif best is None or (best[0] > 0 and res < best[0]):
            best = (res, None, newpos)
    if best[1] is not None:
        return best[1]
    res, _, newpos = best
    return FlippabilityVerdict(False, cl, "no planar placement of the new vertices was found",
                               {"kind": "residual", "defect": res,
                                "points": {str(v): p.tolist() for v, p in newpos.items()}},
                               residual=res)


def _verdict_general(r, cl, site, plan, newpos, allow_self_intersecting):
    after = _after(r, site, plan, newpos)
    chk = check_realization(after)
    ok = chk.classification == "geometric" or (
        allow_self_intersecting and chk.classification == "self_intersecting")
    reason = "" if ok else f"flipped mesh is {chk.classification}"
    wit = chk.issues[0] if (chk.issues and not ok) else {}
    return FlippabilityVerdict(ok, cl, reason, wit, after, chk)


# -- generators ---------------------------------------------------------------------------


def _from_pattern(X, Y, side, points, labels=None):
    pat = generate_pattern(3, X, Y)
    cx = pat.before if side == "before" else pat.after
    c = CubicalComplex(3, 16, cx.cells).compacted()
    used = sorted({v for cell in cx.cells for v in cell})
    coords = np.array([points[v] for v in used])
    remap = {v: i for i, v in enumerate(used)}
    return Realization(c, coords, ToleranceConfig(), {k: remap[v] for k, v in (labels or {}).items()})


def unit_cube():
    pts = [(float(i & 1), float(i >> 1 & 1), float(i >> 2 & 1)) for i in range(8)]
    return Realization(CubicalComplex(3, 8, [tuple(range(8))]), np.array(pts))


def stacked_cubes():
    from .meshes import bicuboid

    return Realization.from_complex(bicuboid())


def rhombic_dodecahedron():
    """Four rhombohedra around the centre of a rhombic dodecahedron."""
    D = np.array([[1, 1, -1], [1, -1, 1], [-1, 1, 1], [-1, -1, -1]], float)
    pts = {c: sum((D[k] for k in range(4) if c >> k & 1), np.zeros(3)) for c in range(15)}
    return _from_pattern(0, 0, "before", pts, {"apex": 0})


def four_squares(translate=(0.0, 0.0, 0.0), small=0.5, large=1.0):
    """Three stacked hexes over squares in the planes z = 0, 1, 2, 3.

    The outer squares are small and the inner ones large; ``translate`` moves
    the top small square.  Label ``marked`` lists one diagonal column, whose
    four points form an interior quad of the five-hex side.
    """
    if not 0 < small < large:
        raise ParamOutOfRange("need 0 < small < large", field="small")
    shift = np.asarray(translate, float)
    pts = {}
    for c in range(16):
        sx, sy, top, sm = (c >> 0) & 1, (c >> 1) & 1, (c >> 2) & 1, (c >> 3) & 1
        h = (small if sm else large)
        z = (3.0 if top else 0.0) if sm else (2.0 if top else 1.0)
        p = np.array([(2 * sx - 1) * h, (2 * sy - 1) * h, z])
        if sm and top:
            p = p + shift
        pts[c] = p
    r = _from_pattern(2, 1, "before", pts)
    return _labelled(r, pts, {f"column{k}": c for k, c in enumerate((11, 3, 7, 15))})


def _labelled(r, pts, names):
    """Attach labels by matching corner points to realization vertices."""
    labels = dict(r.labels)
    for name, corner in names.items():
        d = np.linalg.norm(r.coords - pts[corner], axis=1)
        labels[name] = int(np.argmin(d))
    return Realization(r.complex, r.coords, r.tolerance, labels)


def shifted_core(shift=0.25, small=0.5, large=1.0):
    """The five-hex side over four centred squares, with one column of the
    two large squares slid towards the small squares along its edges."""
    if not 0 <= shift < 1:
        raise ParamOutOfRange("shift must lie in [0, 1)", field="shift")
    if not 0 < small < large:
        raise ParamOutOfRange("need 0 < small < large", field="small")
    pts = {}
    for c in range(16):
        top, sx, sy, big = c & 1, (c >> 1) & 1, (c >> 2) & 1, (c >> 3) & 1
        h = large if big else small
        z = (2.0 if top else 1.0) if big else (3.0 if top else 0.0)
        pts[c] = np.array([(2 * sx - 1) * h, (2 * sy - 1) * h, z])
    for top in (0, 1):
        c = top | 1 << 1 | 1 << 2 | 1 << 3
        outer = pts[c & ~8]
        pts[c] = pts[c] + shift * (outer - pts[c])
    return _from_pattern(1, 2, "before", pts)


def trapezoid_prism(r=1.0, theta=math.pi / 8, inner_shift=0.2, outer_shift=0.5):
    """Four hexes from the trapezoid-faced cuboid on ``p(i, j)`` and a
    lowered copy of its points.

    ``p(i, j) = (r cos(i theta), r sin(i theta), j)``.  The copies of
    ``p(-2, 1)`` and ``p(-3, 1)`` drop by ``inner_shift``; every other copy
    drops by ``outer_shift``.  Label ``marked`` holds the copies of
    ``p(+-2, 1)`` and ``p(+-3, 1)``.
    """
    if not r > 0:
        raise ParamOutOfRange("r must be positive", field="r")
    if not 0 < theta < math.pi / 4:
        raise ParamOutOfRange("theta must lie in (0, pi/4)", field="theta")
    if not (inner_shift > 0 and outer_shift > 0):
        raise ParamOutOfRange("shifts must be positive", field="inner_shift")

    def p(i, j):
        return np.array([r * math.cos(i * theta), r * math.sin(i * theta), float(j)])

    base = {0: p(-1, 0), 1: p(-4, 0), 2: p(1, 0), 3: p(4, 0),
            4: p(-2, 1), 5: p(-3, 1), 6: p(2, 1), 7: p(3, 1)}
    pts = dict(base)
    down = np.array([0.0, 0.0, 1.0])
    for c in range(4):
        pts[c | 8] = base[c] - outer_shift * down
    pts[12] = base[4] - inner_shift * down
    pts[13] = base[5] - inner_shift * down
    pts[14] = base[6] - outer_shift * down
    pts[15] = base[7] - outer_shift * down
    res = _from_pattern(1, 1, "before", pts)
    return _labelled(res, pts, {f"marked{k}": c for k, c in enumerate((12, 13, 15, 14))})


def shrunken_01(s=2.0, delta=2 / math.sqrt(3), side="01"):
    """The (0,1) configuration around a vertical axis, with its two cubes
    joined by parallel vertical edges.

    The upper cube is the unit cube standing on a corner (``b`` at the
    bottom, ``a`` at the top).  Its hexagon vertices ``p_i`` are joined to
    ``q_i`` below by edges of length ``s`` (``p_2, p_4, p_6``) and
    ``s + delta`` (``p_1, p_3, p_5``).  ``b`` and ``y`` are the triple-plane
    intersections of the ``p`` and ``q`` hexagons.  The segment ``b -> y``
    points down for ``s > delta`` and up for ``s < delta``.  With
    ``side="10"`` the three-hex side is returned instead.
    """
    if not s > 0:
        raise ParamOutOfRange("shrink parameter must be positive", field="s")
    if not delta > 1 / math.sqrt(3):
        raise ParamOutOfRange("delta must exceed 1/sqrt(3)", field="delta")
    if side not in ("01", "10"):
        raise ParamOutOfRange("side must be '01' or '10'", field="side")
    R = math.sqrt(2 / 3)
    hex_ring = [6, 4, 12, 8, 10, 2]  # p1..p6 as corner codes (bit 0 clear)
    pts = {}
    for k, c in enumerate(hex_ring):
        ang = math.pi / 3 * k
        high = bin(c).count("1") == 2
        z = 2 / math.sqrt(3) if high else 1 / math.sqrt(3)
        pts[c] = np.array([R * math.cos(ang), R * math.sin(ang), z])
        pts[c | 1] = pts[c] - np.array([0, 0, s + (delta if high else 0.0)])
    b = _triple_point(pts, hex_ring, high_centre=True, bit=0)
    a = _triple_point(pts, hex_ring, high_centre=False, bit=0)
    y = _triple_point(pts, hex_ring, high_centre=True, bit=1)
    z = _triple_point(pts, hex_ring, high_centre=False, bit=1)
    pts[0], pts[14], pts[1], pts[15] = b, a, y, z
    names = {"b": 0, "y": 1, "a": 14, "z": 15}
    names.update({f"p{k + 1}": c for k, c in enumerate(hex_ring)})
    names.update({f"q{k + 1}": c | 1 for k, c in enumerate(hex_ring)})
    if side == "01":
        r = _from_pattern(0, 1, "before", pts)
    else:
        r = _from_pattern(0, 1, "after", pts)
        names = {k: v for k, v in names.items() if k not in ("b", "y")}
    return _labelled(r, pts, names)


def _triple_point(pts, ring, high_centre, bit):
    """Meet of the three planes through consecutive hexagon triples."""
    rows, rhs = [], []
    for k in range(6):
        c = ring[k]
        if (bin(c).count("1") == 2) != high_centre:
            continue
        trip = [ring[k - 1] | bit, c | bit, ring[(k + 1) % 6] | bit]
        n, d = _plane(*(pts[v] for v in trip))
        rows.append(n)
        rhs.append(d)
    return np.linalg.solve(np.array(rows), np.array(rhs))


def by_orientation(r):
    """Signed length of ``b -> y`` along the direction of the ``p -> q`` edges."""
    d = r.coords[r.labels["q1"]] - r.coords[r.labels["p1"]]
    d = d / np.linalg.norm(d)
    return float((r.coords[r.labels["y"]] - r.coords[r.labels["b"]]) @ d)


def warped_bicuboid(warp=0.1, tilt=0.4, height=1.0):
    """Ten planar quads around two cubes' worth of space whose four central
    vertices are not coplanar (a quad surface mesh)."""
    if not 0 <= warp < 0.5:
        raise ParamOutOfRange("warp must lie in [0, 0.5)", field="warp")
    if not 0 < tilt < 1:
        raise ParamOutOfRange("tilt must lie in (0, 1)", field="tilt")
    from .meshes import bicuboid_boundary

    ring = [(0, 0), (1, 0), (1, 1), (0, 1)]
    mid = {}
    for k, (sx, sy) in enumerate(ring):
        mid[(sx, sy)] = np.array([2 * sx - 1.0, 2 * sy - 1.0, warp * (1 if k % 2 == 0 else -1)])
    pts = {}
    for sx, sy in ring:
        pts[sx | sy << 1 | 1 << 2] = mid[(sx, sy)]
    for side, level in ((1, height), (-1, -height)):
        planes = []
        for k in range(4):
            m0, m1 = mid[ring[k]], mid[ring[(k + 1) % 4]]
            e = m1 - m0
            out = np.cross(e, [0, 0, 1.0])
            out /= np.linalg.norm(out)
            n = out + side * tilt * np.array([0, 0, 1.0])
            n -= (n @ e) / (e @ e) * e
            planes.append((n, n @ m0))
        for k, (sx, sy) in enumerate(ring):
            (n1, d1), (n2, d2) = planes[k - 1], planes[k]
            p = np.linalg.solve(np.array([n1, n2, [0, 0, 1.0]]), np.array([d1, d2, level]))
            code = sx | sy << 1 | (3 << 2 if side > 0 else 0)
            pts[code if side < 0 else (sx | sy << 1) + 8] = p
    c = bicuboid_boundary().without_coords()
    coords = np.array([pts[v] for v in range(12)])
    return Realization(c, coords, ToleranceConfig(), {"middle": 4})


def middle_warp(r):
    """Normalized planarity defect of a bicuboid surface's central ring."""
    return planarity_defect(r.coords[[4, 5, 7, 6]], r.scale)


def ngwbc(warp=0.15, inner=0.5):
    """Six hexes filling a cube whose equator carries a warped quad.

    The central ring sits on the cube's vertical edges at heights
    ``0.5 +- warp``; the inner quad is an axis-aligned square of side
    ``inner`` on the bottom face, so all vertices lie on the cube's surface.
    """
    if not 0 < warp < 0.5:
        raise ParamOutOfRange("warp must lie in (0, 0.5)", field="warp")
    if not 0 < inner < 1:
        raise ParamOutOfRange("inner must lie in (0, 1)", field="inner")
    lo = (1 - inner) / 2
    pts = {}
    for c in range(16):
        sx, sy, top, bot = c & 1, c >> 1 & 1, c >> 2 & 1, c >> 3 & 1
        if top and bot:
            pts[c] = np.array([lo + inner * sx, lo + inner * sy, 0.0])
        elif top:
            pts[c] = np.array([sx, sy, 1.0])
        elif bot:
            pts[c] = np.array([sx, sy, 0.0])
        else:
            pts[c] = np.array([sx, sy, 0.5 + (warp if sx == sy else -warp)])
    return _from_pattern(2, 0, "after", pts)


def hex_torus(segments=3, hexes_per_segment=2, major=3.0, minor=1.0):
    """A solid torus with hexagonal cross-sections, two or three hexes per
    segment."""
    if segments < 3:
        raise ParamOutOfRange("need at least three segments", field="segments")
    if hexes_per_segment not in (2, 3):
        raise ParamOutOfRange("hexes per segment must be 2 or 3", field="hexes_per_segment")
    if not 0 < minor < major:
        raise ParamOutOfRange("need 0 < minor < major", field="minor")
    centre = hexes_per_segment == 3
    per = 7 if centre else 6
    coords = []
    for k in range(segments):
        ang = 2 * math.pi * k / segments
        ca, sa = math.cos(ang), math.sin(ang)
        ring = [(major + minor * math.cos(math.pi / 3 * j), minor * math.sin(math.pi / 3 * j)) for j in range(6)]
        if centre:
            ring.append((major, 0.0))
        coords += [(rr * ca, rr * sa, zz) for rr, zz in ring]
    vid = lambda k, j: (k % segments) * per + j  # noqa: E731
    if centre:
        quads = [(6, 0, 1, 2), (6, 2, 3, 4), (6, 4, 5, 0)]
    else:
        quads = [(0, 1, 2, 3), (3, 4, 5, 0)]
    cells = []
    for k in range(segments):
        for q in quads:
            a, b, c, d = (vid(k, j) for j in q)
            e, f, g, h = (vid(k + 1, j) for j in q)
            cells.append((a, b, d, c, e, f, h, g))
    cx = CubicalComplex(3, segments * per, cells)
    return Realization(cx, np.array(coords))


# -- random instances for the automatic classes --------------------------------------------


def _projective(rng, strength):
    M = np.eye(4)
    M[:3, :3] += rng.normal(scale=strength, size=(3, 3))
    M[:3, 3] = rng.normal(scale=strength, size=3)
    M[3, :3] = rng.normal(scale=strength * 0.3, size=3)
    return M


def _apply_projective(M, pts):
    h = np.c_[pts, np.ones(len(pts))] @ M.T
    return h[:, :3] / h[:, 3:4]


def planarize(r, jitter=0.0, seed=0):
    """Nudge coordinates so every quad of the complex is planar.

    With ``jitter`` the points are first perturbed by that fraction of the
    configuration scale; the least-squares repair keeps the result close.
    """
    rng = np.random.default_rng(seed)
    quads = _unique_quads(r.complex)
    L = r.scale
    x0 = (r.coords / L).ravel()
    start = x0 + rng.normal(scale=jitter, size=x0.shape) if jitter else x0

    def dets(x):
        p = x.reshape(-1, 3)
        q = p[np.array(quads)]
        return np.linalg.det(q[:, 1:] - q[:, :1])

    anchor = start.copy()
    sol = least_squares(lambda x: np.concatenate([dets(x) * 10, 0.05 * (x - anchor)]), start)
    sol = least_squares(dets, sol.x, xtol=1e-15, ftol=1e-15, gtol=1e-15)
    return r.with_coords(sol.x.reshape(-1, 3) * L)


def random_before(flip_class, seed=0, strength=0.08):
    """A random geometric before-configuration of an automatic class.

    Reference shapes (cube, a convex double frustum, the rhombic
    dodecahedron) are perturbed: the first two by a random projective map,
    the last by random vertex jitter followed by planarity repair.
    """
    cl = _norm_class(flip_class)
    rng = np.random.default_rng(seed)
    if cl == (3, 0):
        base = unit_cube()
        return base.with_coords(_apply_projective(_projective(rng, strength), base.coords))
    if cl == (2, 0):
        from .meshes import bicuboid

        c = bicuboid().without_coords()
        quad = np.array([[-1.5, -1.5], [1.5, -1.5], [-1.5, 1.5], [1.5, 1.5]])
        quad = quad + rng.normal(scale=strength * 2, size=quad.shape)
        pts = np.zeros((12, 3))
        for v in range(4):
            pts[4 + v] = [*quad[v], 0.0]
        for lo, hi, sign in ((0, 4, -1), (8, 12, 1)):
            apex = np.array([*rng.normal(scale=0.2, size=2), sign * rng.uniform(2.5, 3.5)])
            t = rng.uniform(0.45, 0.7)
            for k, v in enumerate(range(lo, hi)):
                pts[v] = apex + t * (pts[4 + k] - apex)
        r = Realization(c, pts)
        return r.with_coords(_apply_projective(_projective(rng, strength), r.coords))
    if cl == (0, 0):
        base = rhombic_dodecahedron()
        return planarize(base, jitter=strength * 0.5, seed=seed)
    raise ClassNotAutomatic(f"({cl[0]},{cl[1]}) has no random generator")


GENERATORS = {
    "four_squares": four_squares,
    "shifted_core": shifted_core,
    "trapezoid_prism": trapezoid_prism,
    "shrunken_01": shrunken_01,
    "warped_bicuboid": warped_bicuboid,
    "ngwbc": ngwbc,
    "hex_torus": hex_torus,
    "unit_cube": unit_cube,
    "stacked_cubes": stacked_cubes,
    "rhombic_dodecahedron": rhombic_dodecahedron,
}


def generate(kind, **params):
    try:
        fn = GENERATORS[kind]
    except KeyError:
        raise ParamOutOfRange(f"unknown generator {kind!r}", field="kind") from None
    try:
        return fn(**params)
    except TypeError as exc:
        raise ParamOutOfRange(str(exc), field="params") from None
