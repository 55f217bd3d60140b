"""Curve arrangements dual to closed quad surface meshes.

An arrangement is a 4-regular rotation system: crossing ``c`` owns darts
``4c..4c+3`` in rotation order, and ``mate`` pairs darts into edges.  Ports 0/2
and 1/3 are the transversal pairs, so a curve enters a crossing at port ``p``
and leaves at ``p + 2``.  Faces are orbits of ``d -> rot(mate(d))``.

Dualizing a consistently oriented quad ``(v0, v1, v2, v3)`` puts edge
``(v_k, v_k+1)`` on port ``k``; the face through dart ``(c, k)`` is then the
vertex ``v_k``, which makes :func:`primalize` a direct read-off.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

from .catalog import FlipClass, generate_pattern
from .complex import CubicalComplex, euler_and_homology, oriented, validate
from .errors import (
    Disconnected,
    InvalidClass,
    LocationInvalid,
    NoCrossings,
    NotClosedSphere,
    NotThreeConnected,
    ParseError,
)


def _rot(d, k=1):
    return (d & ~3) | ((d + k) & 3)


@dataclass(frozen=True)
class CurveArrangement:
    crossings: int
    mate: tuple
    free_loops: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mate", tuple(self.mate))
        m = self.mate
        if len(m) != 4 * self.crossings:
            raise LocationInvalid("mate table must have four darts per crossing")
        for d, e in enumerate(m):
            if not 0 <= e < len(m) or e == d or m[e] != d:
                raise LocationInvalid(f"dart {d} is not paired with a partner")
            if e == _rot(d, 2):
                raise LocationInvalid(f"dart {d} is joined to its own transversal partner")

    # -- derived structure ------------------------------------------------------

    def edges(self):
        return [(d, e) for d, e in enumerate(self.mate) if d < e]

    def faces(self):
        """Dart orbits of ``rot . mate``; each face lists its darts in order."""
        seen = [False] * len(self.mate)
        out = []
        for d in range(len(self.mate)):
            if seen[d]:
                continue
            face = []
            x = d
            while not seen[x]:
                seen[x] = True
                face.append(x)
                x = _rot(self.mate[x])
            out.append(face)
        return out

    def face_of(self):
        fid = [0] * len(self.mate)
        for i, f in enumerate(self.faces()):
            for d in f:
                fid[d] = i
        return fid

    def curves(self):
        """Closed strands as lists of darts (entering darts, in travel order)."""
        seen = [False] * len(self.mate)
        out = []
        for d in range(len(self.mate)):
            if seen[d]:
                continue
            walk = []
            x = d
            while not seen[x]:
                seen[x] = True
                seen[_rot(x, 2)] = True
                walk.append(x)
                x = self.mate[_rot(x, 2)]
            out.append(walk)
        return out

    def curve_count(self):
        return len(self.curves()) + self.free_loops

    def neighbours(self):
        adj = [[] for _ in range(self.crossings)]
        for d, e in enumerate(self.mate):
            adj[d >> 2].append(e >> 2)
        return adj

    def components(self):
        adj = self.neighbours()
        comp = [-1] * self.crossings
        out = []
        for s in range(self.crossings):
            if comp[s] >= 0:
                continue
            comp[s] = len(out)
            stack, members = [s], [s]
            while stack:
                x = stack.pop()
                for y in adj[x]:
                    if comp[y] < 0:
                        comp[y] = comp[s]
                        stack.append(y)
                        members.append(y)
            out.append(sorted(members))
        return out

    def is_connected(self):
        return self.free_loops == 0 and len(self.components()) <= 1

    def euler_ok(self):
        """Every component is a sphere map: V - E + F == 2 with E == 2V."""
        comps = self.components()
        which = [0] * self.crossings
        for i, cs in enumerate(comps):
            for c in cs:
                which[c] = i
        faces = [0] * len(comps)
        for f in self.faces():
            faces[which[f[0] >> 2]] += 1
        return all(len(cs) - 2 * len(cs) + faces[i] == 2 for i, cs in enumerate(comps))

    # -- serialization ----------------------------------------------------------

    def to_json(self):
        edges = [[[d >> 2, d & 3], [e >> 2, e & 3]] for d, e in self.edges()]
        doc = {"crossings": self.crossings, "edges": edges}
        if self.free_loops:
            doc["free_loops"] = self.free_loops
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed JSON: {exc.msg}") from None
        if not isinstance(doc, dict) or "crossings" not in doc or "edges" not in doc:
            raise ParseError("arrangement needs 'crossings' and 'edges'")
        n = doc["crossings"]
        if not isinstance(n, int) or n < 0:
            raise ParseError("crossings must be a non-negative integer", field="crossings")
        mate = [-1] * (4 * n)
        for i, e in enumerate(doc["edges"]):
            try:
                (c1, p1), (c2, p2) = e
            except (TypeError, ValueError):
                raise ParseError("edge must be two [crossing, port] pairs", field=f"edges[{i}]") from None
            for c, p in ((c1, p1), (c2, p2)):
                if not (isinstance(c, int) and isinstance(p, int) and 0 <= c < n and 0 <= p < 4):
                    raise ParseError("port out of range", field=f"edges[{i}]")
            a, b = 4 * c1 + p1, 4 * c2 + p2
            if mate[a] >= 0 or mate[b] >= 0 or a == b:
                raise ParseError("port used twice", field=f"edges[{i}]")
            if b == _rot(a, 2):
                raise ParseError("edge joins a port to its transversal partner", field=f"edges[{i}]")
            mate[a], mate[b] = b, a
        if any(x < 0 for x in mate):
            raise ParseError("every port must be used exactly once", field="edges")
        arr = cls(n, mate, int(doc.get("free_loops", 0)))
        if not arr.euler_ok():
            raise ParseError("rotation system is not a sphere embedding")
        return arr


# -- isomorphism key ---------------------------------------------------------------


def _component_code(a, comp):
    best = None
    for start in (4 * c + p for c in comp for p in range(4)):
        for eps in (1, -1):
            code = _code_from(a, start, eps, best)
            if code is not None and (best is None or code < best):
                best = code
    return best


def _code_from(a, start, eps, best):
    label = {start >> 2: 0}
    base = {start >> 2: start & 3}
    order = [start >> 2]
    code = []
    tight = best is not None
    i = 0
    while i < len(order):
        c = order[i]
        i += 1
        for k in range(4):
            d = 4 * c + (base[c] + eps * k) % 4
            e = a.mate[d]
            ce = e >> 2
            if ce not in label:
                label[ce] = len(order)
                base[ce] = e & 3
                order.append(ce)
            x = label[ce] * 4 + (eps * ((e & 3) - base[ce])) % 4
            if tight:
                y = best[len(code)]
                if x > y:
                    return None
                if x < y:
                    tight = False
            code.append(x)
    return tuple(code)


def arrangement_key(a):
    """Isomorphism key of an arrangement; mirror images compare equal."""
    parts = sorted((len(cs),) + _component_code(a, cs) for cs in a.components())
    return (a.free_loops, tuple(parts))


# -- duality ------------------------------------------------------------------------


def dualize(c):
    """The curve arrangement of a closed sphere quad mesh, one crossing per quad."""
    if c.dim != 2:
        raise NotClosedSphere("dualization needs a quad surface mesh")
    rep = validate(c)
    if not rep.ok:
        raise NotClosedSphere(f"mesh is invalid: {rep.rules()}")
    if not c.is_closed():
        raise NotClosedSphere("mesh has boundary edges")
    chi, betti = euler_and_homology(c)
    if chi != 2 or tuple(betti) != (1, 0, 1):
        raise NotClosedSphere(f"mesh is not a sphere (chi={chi})")
    o = oriented(c)
    where = {}
    for i, q in enumerate(o.cells):
        for k in range(4):
            where.setdefault(frozenset((q[k], q[(k + 1) % 4])), []).append(4 * i + k)
    mate = [0] * (4 * len(o.cells))
    for a, b in where.values():
        mate[a], mate[b] = b, a
    return CurveArrangement(len(o.cells), mate)


def three_connectivity(a):
    """``(ok, witness)``; the witness names the obstruction when not ok.

    A crossing graph counts as 3-connected when it is simple, has at least
    four crossings, and stays connected after removing any two crossings.
    """
    n = a.crossings
    if a.free_loops or not a.is_connected():
        return False, {"reason": "disconnected"}
    if n < 4:
        return False, {"reason": "fewer than four crossings", "crossings": n}
    seen = set()
    for d, e in a.edges():
        x, y = d >> 2, e >> 2
        if x == y:
            return False, {"reason": "loop", "separator": [x]}
        key = (min(x, y), max(x, y))
        if key in seen:
            return False, {"reason": "parallel edges", "separator": list(key)}
        seen.add(key)
    adj = [sorted(set(nb)) for nb in a.neighbours()]
    for v in range(n):
        cut = _articulation(adj, n, v)
        if cut is not None:
            return False, {"reason": "separating pair", "separator": sorted((v, cut))}
    return True, None


def _articulation(adj, n, removed):
    """An articulation vertex of the graph minus ``removed``, if any."""
    start = 0 if removed != 0 else 1
    disc = [-1] * n
    low = [0] * n
    disc[removed] = -2
    t = 0
    disc[start] = low[start] = t
    stack = [(start, -1, iter(adj[start]))]
    root_children = 0
    found = None
    while stack:
        v, parent, it = stack[-1]
        advanced = False
        for w in it:
            if disc[w] == -2 or w == parent:
                continue
            if disc[w] == -1:
                t += 1
                disc[w] = low[w] = t
                stack.append((w, v, iter(adj[w])))
                if v == start:
                    root_children += 1
                advanced = True
                break
            low[v] = min(low[v], disc[w])
        if advanced:
            continue
        stack.pop()
        if stack:
            p = stack[-1][0]
            low[p] = min(low[p], low[v])
            if p != start and low[v] >= disc[p] and found is None:
                found = p
    if any(disc[v] == -1 for v in range(n)):
        return start
    if root_children > 1:
        return start
    return found


def is_three_connected(a):
    return three_connectivity(a)[0]


def primalize(a, strict=True):
    """Rebuild the quad mesh of an arrangement.

    With ``strict`` the crossing graph must be 3-connected; otherwise any
    arrangement whose primal is a valid (possibly degenerate) mesh is
    accepted.
    """
    if strict:
        ok, wit = three_connectivity(a)
        if not ok:
            raise NotThreeConnected("crossing graph is not 3-connected", witness=wit)
    if a.free_loops or not a.is_connected():
        raise NotThreeConnected("arrangement is disconnected", witness={"reason": "disconnected"})
    fid = a.face_of()
    cells = [tuple(fid[4 * c + k] for k in range(4)) for c in range(a.crossings)]
    c = CubicalComplex(2, max(fid) + 1 if fid else 0, cells)
    rep = validate(c)
    if not rep.ok:
        raise NotThreeConnected(f"primal is not a mesh: {rep.rules()}", witness={"reason": rep.rules()})
    return c


# -- tangles -------------------------------------------------------------------------


@dataclass(frozen=True)
class Tangle:
    """A disk piece of an arrangement: internal edges plus labelled boundary darts."""

    n: int
    internal: tuple  # local dart pairs
    boundary: tuple  # (local dart, label) sorted by dart

    @property
    def label_of(self):
        return dict(self.boundary)


def _tangle_of_disk(cells):
    where = {}
    for i, q in enumerate(cells):
        for k in range(4):
            where.setdefault(frozenset((q[k], q[(k + 1) % 4])), []).append(4 * i + k)
    internal, boundary = [], []
    for lab, ds in where.items():
        if len(ds) == 2:
            internal.append(tuple(ds))
        else:
            boundary.append((ds[0], tuple(sorted(lab))))
    return Tangle(len(cells), tuple(sorted(internal)), tuple(sorted(boundary)))


@lru_cache(maxsize=None)
def flip_tangles(X, Y):
    """Before/after tangles of a quad flip with matching boundary labels."""
    pat = generate_pattern(2, X, Y)
    nb = len(pat.before.cells)
    sphere = CubicalComplex(2, 8, list(pat.before.cells) + list(pat.after.cells))
    o = oriented(sphere).cells
    before = o[:nb]
    # reverse the after side so both disks induce the same boundary orientation
    after = [tuple(reversed(q)) for q in o[nb:]]
    return _tangle_of_disk(before), _tangle_of_disk(after), before, after


def _match(a, tangle, location, ports=None):
    """All embeddings of a tangle sending local crossing ``j`` to ``location[j]``.

    An embedding is ``(eps, rots)`` with local port ``k`` of crossing ``j``
    landing on port ``rots[j] + eps * k``.
    """
    if len(location) != tangle.n or len(set(location)) != tangle.n:
        return []
    if any(not 0 <= c < a.crossings for c in location):
        return []
    out = []
    cands = [ports] if ports is not None else [(e, r) for e in (1, -1) for r in range(4)]
    for cand in cands:
        if ports is not None:
            eps, rots = cand
            rots = list(rots)
        else:
            eps, r0 = cand
            rots = [None] * tangle.n
            rots[0] = r0
        ok = True
        changed = True
        while changed and ok:
            changed = False
            for x, y in tangle.internal:
                for s, t in ((x, y), (y, x)):
                    js, jt = s >> 2, t >> 2
                    if rots[js] is None:
                        continue
                    ad = 4 * location[js] + (rots[js] + eps * (s & 3)) % 4
                    md = a.mate[ad]
                    if md >> 2 != location[jt]:
                        ok = False
                        break
                    want = ((md & 3) - eps * (t & 3)) % 4
                    if rots[jt] is None:
                        rots[jt] = want
                        changed = True
                    elif rots[jt] != want:
                        ok = False
                        break
                if not ok:
                    break
        if ok and all(r is not None for r in rots):
            m = (eps, tuple(rots))
            if m not in out:
                out.append(m)
    return out


def _replace(a, location, emb, before, after):
    """Swap the embedded ``before`` tangle for ``after``.

    Returns ``(arrangement, old->new crossing ids, new crossing ids, attach)``
    where ``attach`` maps each boundary dart of the removed region to the dart
    of the inserted tangle sitting at the same boundary position.
    """
    eps, rots = emb
    region = set(location)
    img = lambda ld: 4 * location[ld >> 2] + (rots[ld >> 2] + eps * (ld & 3)) % 4
    keep = [c for c in range(a.crossings) if c not in region]
    remap = {c: i for i, c in enumerate(keep)}
    base = len(keep)
    new_ids = [base + j for j in range(after.n)]
    nd = lambda ld: 4 * (base + (ld >> 2)) + (eps * (ld & 3)) % 4
    old_dart = lambda d: 4 * remap[d >> 2] + (d & 3)

    label_to_img = {lab: img(ld) for ld, lab in before.boundary}
    img_to_label = {d: lab for lab, d in label_to_img.items()}
    after_by_label = {lab: ld for ld, lab in after.boundary}
    if set(after_by_label) != set(label_to_img):
        raise LocationInvalid("tangle boundaries differ")
    mate = [-1] * (4 * (base + after.n))
    for c in keep:
        for p in range(4):
            d = 4 * c + p
            e = a.mate[d]
            if e >> 2 not in region:
                mate[old_dart(d)] = old_dart(e)
    for x, y in after.internal:
        mate[nd(x)], mate[nd(y)] = nd(y), nd(x)
    attach = {}
    for lab, d in label_to_img.items():
        here = nd(after_by_label[lab])
        attach[d] = here
        e = a.mate[d]
        if e >> 2 in region:
            if e not in img_to_label:
                raise LocationInvalid("region is joined to itself through an unexpected edge")
            mate[here] = nd(after_by_label[img_to_label[e]])
        else:
            o = old_dart(e)
            mate[here], mate[o] = o, here
    res = CurveArrangement(base + after.n, mate, a.free_loops)
    return res, remap, new_ids, attach


# -- rewrite operations ---------------------------------------------------------------

KINDS = ("add_circle", "remove_circle", "push_together", "pull_apart", "invert_triangle", "switch")

# template-backed modes: kind -> flip class whose dual tangles define the move
_TEMPLATE = {
    ("add_circle", "pure"): (2, 0),
    ("push_together", "across"): (1, 0),
    ("pull_apart", "across"): (0, 1),
    ("invert_triangle", "pure"): (0, 0),
    ("switch", "strand"): (1, 1),
    ("remove_circle", "center"): (0, 2),
}


@dataclass(frozen=True)
class RewriteOp:
    """One arrangement rewrite.

    ``location`` holds crossing ids for tangle moves and circle removal, or two
    darts on a common face for pure push and pure switch.  ``mode`` picks the
    variant: ``pure`` moves act on free segments; ``across`` push/pull carry a
    third strand through the bigon; ``strand`` switch reconnects around a
    crossing strand.  ``ports`` optionally pins the tangle embedding.
    """

    kind: str
    location: tuple
    mode: str = "pure"
    variant: int = 0
    ports: tuple | None = None

    def to_dict(self):
        d = {"kind": self.kind, "location": list(self.location), "mode": self.mode, "variant": self.variant}
        if self.ports is not None:
            d["ports"] = [self.ports[0], list(self.ports[1])]
        return d

    @classmethod
    def from_dict(cls, d):
        ports = d.get("ports")
        if ports is not None:
            ports = (int(ports[0]), tuple(int(x) for x in ports[1]))
        return cls(d["kind"], tuple(d["location"]), d.get("mode", "pure"), int(d.get("variant", 0)), ports)


_FLIP_KIND = {
    (2, 0): ("add_circle", "pure"),
    (0, 2): ("remove_circle", "pure"),
    (1, 0): ("push_together", "across"),
    (0, 1): ("pull_apart", "across"),
    (0, 0): ("invert_triangle", "pure"),
    (1, 1): ("switch", "strand"),
}


def flip_as_rewrite(flip_class):
    """Rewrite kind matching a quad flip class."""
    if isinstance(flip_class, FlipClass):
        if flip_class.mesh_dim != 2:
            raise InvalidClass("only quad flips have arrangement counterparts")
        key = (flip_class.X, flip_class.Y)
    else:
        key = tuple(flip_class)
    if key not in _FLIP_KIND:
        raise InvalidClass(f"({key[0]},{key[1]}) is not a quad flip class")
    return _FLIP_KIND[key][0]


def _checked(res):
    if not res.euler_ok():
        raise LocationInvalid("rewrite would break the sphere embedding")
    return res


def rewrite(a, op):
    return rewrite_ex(a, op)[0]


def rewrite_ex(a, op):
    """Apply a rewrite; also returns crossing renumbering and new crossing ids.

    The third element maps old crossing ids to new ones, the fourth lists the
    inserted crossings and the fifth maps boundary darts of a replaced region
    to the corresponding new darts (empty for surgery moves).
    """
    if op.kind not in KINDS:
        raise LocationInvalid(f"unknown rewrite kind {op.kind!r}")
    key = (op.kind, op.mode)
    if key in _TEMPLATE:
        before, after, _, _ = flip_tangles(*_TEMPLATE[key])
        embs = _match(a, before, tuple(op.location), op.ports)
        if not embs or op.variant >= len(embs):
            raise LocationInvalid(f"no {op.kind} ({op.mode}) configuration at {list(op.location)}")
        res, remap, new, attach = _replace(a, tuple(op.location), embs[op.variant], before, after)
        return _checked(res), remap, new, attach
    if op.kind == "push_together" and op.mode == "pure":
        return _push(a, *op.location, variant=op.variant)
    if op.kind == "pull_apart" and op.mode == "pure":
        return _pull(a, tuple(op.location))
    if op.kind == "switch" and op.mode == "pure":
        return _switch(a, *op.location, variant=op.variant)
    if op.kind == "remove_circle" and op.mode == "pure":
        return _remove_circle(a, tuple(op.location))
    raise LocationInvalid(f"unsupported mode {op.mode!r} for {op.kind}")


def _same_face(a, d1, d2):
    n = 4 * a.crossings
    if not (0 <= d1 < n and 0 <= d2 < n) or d1 == d2 or a.mate[d1] == d2:
        return False
    x = _rot(a.mate[d1])
    while x != d1:
        if x == d2:
            return True
        x = _rot(a.mate[x])
    return False


def _push(a, d1, d2, variant=0):
    if not _same_face(a, d1, d2):
        raise LocationInvalid("push needs two distinct edges on one face")
    m1, m2 = a.mate[d1], a.mate[d2]
    n = a.crossings
    x, y = n, n + 1
    found = []
    # strand through d1 crosses x then y; strand through d2 crosses the pair too
    for ax in range(4):
        for ay in range(4):
            for b_first in (0, 1):
                for bx in ((ax + 1) % 4, (ax + 3) % 4):
                    by_opts = ((ay + 1) % 4, (ay + 3) % 4)
                    for by in by_opts:
                        mate = list(a.mate) + [-1] * 8

                        def link(p, q):
                            mate[p], mate[q] = q, p

                        X = lambda p: 4 * x + p % 4
                        Y = lambda p: 4 * y + p % 4
                        link(d1, X(ax))
                        link(X(ax + 2), Y(ay))
                        link(Y(ay + 2), m1)
                        if b_first == 0:
                            link(d2, X(bx))
                            link(X(bx + 2), Y(by))
                            link(Y(by + 2), m2)
                        else:
                            link(d2, Y(by))
                            link(Y(by + 2), X(bx))
                            link(X(bx + 2), m2)
                        if -1 in mate:
                            continue
                        try:
                            res = CurveArrangement(n + 2, mate, a.free_loops)
                        except LocationInvalid:
                            continue
                        if not res.euler_ok():
                            continue
                        if not any(len(f) == 2 and {f[0] >> 2, f[1] >> 2} == {x, y} for f in res.faces()):
                            continue
                        k = arrangement_key(res)
                        if k not in [kk for kk, _ in found]:
                            found.append((k, res))
    if variant >= len(found):
        raise LocationInvalid("no planar push at these edges")
    return found[variant][1], {c: c for c in range(n)}, [x, y], {}


def _pass_through(a, region, drop_internal_loops=True):
    """Delete crossings, letting every other strand run straight through them."""
    region = set(region)
    keep = [c for c in range(a.crossings) if c not in region]
    remap = {c: i for i, c in enumerate(keep)}
    nd = lambda d: 4 * remap[d >> 2] + (d & 3)
    mate = [-1] * (4 * len(keep))
    for c in keep:
        for p in range(4):
            d = 4 * c + p
            if mate[nd(d)] >= 0:
                continue
            e = a.mate[d]
            guard = 0
            while e >> 2 in region:
                e = a.mate[_rot(e, 2)]
                guard += 1
                if guard > 4 * a.crossings:
                    raise LocationInvalid("strand does not leave the region")
            if e == d:
                raise LocationInvalid("strand would close on itself at one crossing")
            mate[nd(d)], mate[nd(e)] = nd(e), nd(d)
    # strands living entirely inside the region
    loops = 0
    inside = [4 * c + p for c in region for p in range(4)]
    seen = set()
    for d in inside:
        if d in seen or a.mate[d] >> 2 not in region:
            continue
        x = d
        ok = True
        walk = []
        while x not in seen:
            seen.add(x)
            seen.add(_rot(x, 2))
            walk.append(x)
            y = a.mate[_rot(x, 2)]
            if y >> 2 not in region:
                ok = False
                break
            x = y
        if ok and x == d:
            loops += 1
    extra = 0 if drop_internal_loops else loops
    res = CurveArrangement(len(keep), mate, a.free_loops + extra)
    return res, remap, loops


def _pull(a, loc):
    if len(loc) != 2 or loc[0] == loc[1]:
        raise LocationInvalid("pull needs two crossings")
    x, y = loc
    ok = any(len(f) == 2 and {f[0] >> 2, f[1] >> 2} == {x, y} for f in a.faces())
    if not ok:
        raise LocationInvalid("crossings do not bound a bigon face")
    res, remap, _ = _pass_through(a, (x, y), drop_internal_loops=False)
    return _checked(res), remap, [], {}


def _switch(a, d1, d2, variant=0):
    if not _same_face(a, d1, d2):
        raise LocationInvalid("switch needs two distinct edges on one face")
    m1, m2 = a.mate[d1], a.mate[d2]
    found = []
    for pairs in (((d1, d2), (m1, m2)), ((d1, m2), (m1, d2))):
        mate = list(a.mate)
        for p, q in pairs:
            mate[p], mate[q] = q, p
        try:
            res = CurveArrangement(a.crossings, mate, a.free_loops)
        except LocationInvalid:
            continue
        if res.euler_ok() and len(res.faces()) == len(a.faces()):
            found.append(res)
    if variant >= len(found):
        raise LocationInvalid("no planar reconnection of these edges")
    return found[variant], {c: c for c in range(a.crossings)}, [], {}


def _remove_circle(a, loc):
    loc = tuple(loc)
    region = set(loc)
    if len(region) != 4:
        raise LocationInvalid("a removable circle has four crossings")
    for walk in a.curves():
        cs = [d >> 2 for d in walk]
        if set(cs) == region and len(cs) == 4:
            break
    else:
        raise LocationInvalid("crossings do not form one closed curve of length four")
    res, remap, _ = _pass_through(a, region)
    return _checked(res), remap, [], {}


# -- flip correspondence ---------------------------------------------------------------


def op_for_site(c, site, arrangement=None):
    """The rewrite of ``dualize(c)`` that matches a flip site of ``c``.

    Crossing ids of :func:`dualize` are quad indices, so the location is the
    image of each pattern quad and the embedding is read off the vertex map.
    """
    cl = site.flip_class
    key = (cl.X, cl.Y)
    kind, mode = _FLIP_KIND[key]
    pat = generate_pattern(2, cl.X, cl.Y)
    m = site.mapping
    by_set = {frozenset(q): i for i, q in enumerate(c.cells)}
    loc = tuple(by_set[frozenset(m[v] for v in q)] for q in pat.before.cells)
    if kind == "remove_circle":
        ring = tuple(i for j, i in enumerate(loc) if j != _center_index(pat))
        return RewriteOp(kind, ring, "pure")
    _, _, before_cells, _ = flip_tangles(cl.X, cl.Y)
    o = oriented(c).cells
    eps = None
    rots = []
    for j, tq in enumerate(before_cells):
        mq = o[loc[j]]
        edges = {frozenset((mq[k], mq[(k + 1) % 4])): k for k in range(4)}
        p = [edges[frozenset((m[tq[k]], m[tq[(k + 1) % 4]]))] for k in range(4)]
        e = 1 if (p[1] - p[0]) % 4 == 1 else -1
        if eps is None:
            eps = e
        elif e != eps:
            raise LocationInvalid("site is not consistently oriented")
        rots.append(p[0])
    return RewriteOp(kind, loc, mode, 0, (eps, tuple(rots)))


def _center_index(pat):
    interior = set(pat.before_interior)
    for j, q in enumerate(pat.before.cells):
        if interior.issuperset(q):
            return j
    raise LocationInvalid("pattern has no central quad")


# -- bubble wrapping ----------------------------------------------------------------


def bubble_wrap(a):
    """Wrap every crossing and every edge of a connected arrangement in circles.

    A circle is added around each crossing.  Each original edge then crosses
    two of those circles; a circle is added around each of these two points
    and the pair is pushed across the edge so the circles overlap with the
    edge running through their lens.  Uses ``25 * crossings`` crossings.
    """
    if a.crossings == 0:
        raise NoCrossings("bubble wrapping is defined around crossings")
    if not a.is_connected():
        raise Disconnected("arrangement is not connected")
    cur = a
    # track every original dart through the renumbering
    track = {d: d for d in range(4 * a.crossings)}

    def follow(remap, attach):
        for k, d in list(track.items()):
            if d is None:
                continue
            if d in attach:
                track[k] = attach[d]
            elif d >> 2 in remap:
                track[k] = 4 * remap[d >> 2] + (d & 3)
            else:  # consumed inside a replaced region
                track[k] = None

    for c in range(a.crossings):
        at = track[4 * c] >> 2
        cur, remap, _, attach = rewrite_ex(cur, RewriteOp("add_circle", (at,)))
        follow(remap, attach)
    edges = [(d, e) for d, e in a.edges()]
    # second layer: circle around both ends of every edge segment
    for d, e in edges:
        for end in (d, e):
            at = track[end] >> 2
            cur, remap, _, attach = rewrite_ex(cur, RewriteOp("add_circle", (at,)))
            follow(remap, attach)
    for d, e in edges:
        x, y = track[d], track[e]
        if cur.mate[x] != y:
            raise LocationInvalid("lost track of an edge while wrapping")
        cur, remap, _, attach = rewrite_ex(cur, RewriteOp("push_together", (x >> 2, y >> 2), "across"))
        follow(remap, attach)
    return cur


def cube_arrangement():
    from .meshes import cube_boundary

    return dualize(cube_boundary())


def two_circles():
    """Two circles crossing twice."""
    # crossing 0 ports: A in 0 -> 2, B in 1 -> 3; crossing 1 likewise
    mate = [0] * 8
    for p, q in ((2, 4), (0, 6), (3, 7), (1, 5)):
        mate[p], mate[q] = q, p
    return CurveArrangement(2, mate)


def figure_eight():
    """One curve with a single self-crossing."""
    return CurveArrangement(1, (1, 0, 3, 2))


__all__ = [
    "CurveArrangement", "RewriteOp", "Tangle", "arrangement_key", "bubble_wrap", "cube_arrangement",
    "dualize", "figure_eight", "flip_as_rewrite", "flip_tangles", "is_three_connected", "op_for_site",
    "primalize", "rewrite", "rewrite_ex", "three_connectivity", "two_circles",
]
