"""Flip planning: reduction to the cube, path search, and flip-graph census.

All searches dedupe states by canonical key and keep the first concrete mesh
found for each key, so recorded steps replay exactly from the input mesh.
Expansion order is fixed (move order from :func:`cubeflip.flips.moves`,
insertion counters as tie-breaks), which makes every result deterministic.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .canon import canonicalize
from .catalog import FlipClass
from .complex import boundary_faces, euler_and_homology, validate
from .errors import (
    BoundaryMismatch,
    BudgetExhausted,
    DimensionMismatch,
    InvalidComplex,
    NoPath,
    NotClosedSphere,
    NotSimplyConnected,
    OddParity,
    ParamOutOfRange,
    PlannerStuck,
)
from .flips import FlipSequence, apply_flip, find_sites, moves, parity_change, parity_sites
from .meshes import cube_boundary, quad_grid


@dataclass(frozen=True)
class SearchBudget:
    max_cells: int | None = None
    max_states: int = 200_000
    max_depth: int | None = None

    def __post_init__(self):
        for name in ("max_cells", "max_states", "max_depth"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ParamOutOfRange(f"{name} must be positive", field=name)


def _energy(c):
    """Squared deviation of vertex degrees from four; zero only on regular grids."""
    return sum((len(cs) - 4) ** 2 for cs in c.vertex_cells().values())


# -- reduction ----------------------------------------------------------------------

# moves that never add cells, tried first
_DESCENT = ((0, 2), (0, 1), (0, 0), (1, 1))
_ALL = _DESCENT + ((1, 0), (2, 0))


@dataclass
class ReductionPlan:
    """A flip sequence ending at the cube boundary.

    Each step carries a phase label: ``reduce`` (removes cells), ``shift``
    (keeps the count) or ``expand`` (adds cells).
    """

    sequence: FlipSequence
    expanded: int = 0
    phases: dict = field(default_factory=dict)

    def to_json(self):
        return self.sequence.to_json()


def _check_sphere(c):
    if c.dim != 2:
        raise DimensionMismatch("reduction works on quad surface meshes")
    rep = validate(c)
    if not rep.ok:
        v = rep.violations[0]
        raise InvalidComplex(f"invalid complex: {v.rule}: {v.detail}")
    if not c.is_closed():
        raise NotClosedSphere("mesh has boundary edges")
    chi, betti = euler_and_homology(c)
    if chi != 2 or tuple(betti) != (1, 0, 1):
        raise NotClosedSphere(f"mesh is not a sphere (chi={chi}, betti={list(betti)})")


def plan_reduction(c, budget=None, weight=1.0):
    """Flip an even sphere quad mesh down to the cube boundary.

    Best-first search ordered by cell count plus degree energy.  The first
    round uses only moves that never add cells; if that stalls, a second round
    also allows growing moves up to a few cells above the input size.
    """
    _check_sphere(c)
    if len(c.cells) % 2:
        raise OddParity(f"mesh has {len(c.cells)} quads; flips preserve parity and the cube has 6")
    budget = budget or SearchBudget()
    target = canonicalize(cube_boundary())
    rounds = [(_DESCENT, len(c.cells)), (_ALL, max(len(c.cells), 6) + 8)]
    explored = 0
    for classes, cap in rounds:
        if budget.max_cells is not None:
            cap = min(cap, budget.max_cells)
        got, n = _best_first(c, classes, cap, budget.max_states, weight, target)
        explored += n
        if got is not None:
            seq = FlipSequence(canonicalize(c).hex(), got)
            counts = {"reduce": 0, "shift": 0, "expand": 0}
            for st in got:
                cl = FlipClass(st.flip_class[0], st.flip_class[1], 3)
                delta = cl.inverse.cell_count - cl.cell_count
                st.phase = "reduce" if delta < 0 else "shift" if delta == 0 else "expand"
                counts[st.phase] += 1
            return ReductionPlan(seq, explored, counts)
    raise PlannerStuck("search budget exhausted before reaching the cube", explored=explored,
                       cells=len(c.cells))


def _best_first(c0, classes, cap, limit, weight, target):
    k0 = canonicalize(c0)
    store = {k0: (c0, None, None)}
    pq = [(len(c0.cells) + weight * _energy(c0), 0, k0)]
    tick = 0
    n = 0
    while pq:
        _, _, k = heapq.heappop(pq)
        if k == target:
            steps = []
            while store[k][1] is not None:
                steps.append(store[k][2])
                k = store[k][1]
            return steps[::-1], n
        n += 1
        if n > limit:
            break
        c = store[k][0]
        for step, r in moves(c, classes):
            if len(r.cells) > cap:
                continue
            kr = canonicalize(r)
            if kr in store:
                continue
            store[kr] = (r, k, step)
            tick += 1
            heapq.heappush(pq, (len(r.cells) + weight * _energy(r), tick, kr))
    return None, n


# -- path search ---------------------------------------------------------------------


def _boundary_signature(c):
    return (frozenset(frozenset(f) for f in boundary_faces(c)), c.boundary_vertices or frozenset())


def find_path(m1, m2, budget=None, allow_parity=False, exhaustive=False):
    """Bidirectional BFS between two meshes with the same boundary.

    Returns a FlipSequence that replays from ``m1`` to a mesh isomorphic to
    ``m2``.  Raises NoPath when one side's reachable set (within
    ``max_cells``) is exhausted, with ``reason="parity"`` when flips alone
    cannot change the cell-count parity; raises BudgetExhausted when the
    state or depth limit is hit first.

    Every flip changes the cell count by an even number, so meshes of
    different parity are rejected up front unless ``exhaustive`` asks for
    the search to run anyway.
    """
    budget = budget or SearchBudget()
    if m1.dim != m2.dim:
        raise DimensionMismatch("meshes have different dimensions")
    if _boundary_signature(m1) != _boundary_signature(m2):
        raise BoundaryMismatch("meshes do not share the same boundary complex")
    for m in (m1, m2):
        if not validate(m).ok:
            raise InvalidComplex("input mesh is invalid")
    if not allow_parity and not exhaustive and (len(m1.cells) - len(m2.cells)) % 2:
        raise NoPath("flips preserve cell-count parity", reason="parity", states=0)
    k1, k2 = canonicalize(m1), canonicalize(m2)
    if k1 == k2:
        return FlipSequence(k1.hex(), [])
    sides = [
        {"store": {k1: (m1, None, None)}, "frontier": [k1], "depth": 0},
        {"store": {k2: (m2, None, None)}, "frontier": [k2], "depth": 0},
    ]
    truncated = False
    meet = None
    while meet is None:
        live = [i for i in (0, 1) if sides[i]["frontier"]]
        if len(live) < 2:
            break
        i = min(live, key=lambda j: (len(sides[j]["frontier"]), j))
        side, other = sides[i], sides[1 - i]
        if budget.max_depth is not None and sides[0]["depth"] + sides[1]["depth"] >= budget.max_depth:
            truncated = True
            break
        nxt = []
        for k in side["frontier"]:
            c = side["store"][k][0]
            for step, r in moves(c, parity=allow_parity):
                if budget.max_cells is not None and len(r.cells) > budget.max_cells:
                    continue
                kr = canonicalize(r)
                if kr in side["store"]:
                    continue
                side["store"][kr] = (r, k, step)
                nxt.append(kr)
                if kr in other["store"]:
                    meet = kr
                    break
            if meet is not None:
                break
            if len(sides[0]["store"]) + len(sides[1]["store"]) > budget.max_states:
                raise BudgetExhausted("state budget exhausted", states=budget.max_states)
        side["frontier"] = nxt
        side["depth"] += 1
    if meet is None:
        if truncated:
            raise BudgetExhausted("depth budget exhausted", max_depth=budget.max_depth)
        reason = "parity" if not allow_parity and (len(m1.cells) - len(m2.cells)) % 2 else "exhausted"
        states = len(sides[0]["store"]) + len(sides[1]["store"])
        raise NoPath("no path within the cell budget", reason=reason, states=states)
    return FlipSequence(k1.hex(), _join(sides, meet, allow_parity))


def _chain(store, k):
    keys = [k]
    while store[k][1] is not None:
        k = store[k][1]
        keys.append(k)
    return keys


def _join(sides, meet, allow_parity):
    fwd, bwd = sides[0]["store"], sides[1]["store"]
    keys = _chain(fwd, meet)[::-1]
    steps = [fwd[k][2] for k in keys[1:]]
    cur = fwd[meet][0]
    for k in _chain(bwd, meet)[1:]:
        for step, r in moves(cur, parity=allow_parity):
            if canonicalize(r) == k:
                steps.append(step)
                cur = r
                break
        else:  # pragma: no cover - moves are closed under inversion
            raise PlannerStuck("could not invert a backward step")
    return steps


# -- census ---------------------------------------------------------------------------


def disk_seeds(boundary_length=4):
    """An odd and an even seed mesh spanning a fixed ``boundary_length``-gon.

    The first seed is a 1-by-j strip of quads; the second is that strip after
    a (2,0) flip and one parity change, so the two differ in parity.
    """
    if boundary_length < 4 or boundary_length % 2:
        raise ParamOutOfRange("boundary length must be even and at least 4", field="boundary")
    j = (boundary_length - 2) // 2
    a = quad_grid(1, j).without_coords()
    b = apply_flip(a, find_sites(a, (2, 0))[0])
    for p, q in parity_sites(b):
        try:
            b = parity_change(b, p, q)[0]
            break
        except Exception:  # noqa: BLE001 - try the next pair
            continue
    return [a, b]


@dataclass
class CensusResult:
    entries: list  # (key hex, component id, parity)
    components: int
    truncated: bool
    states: int
    bridged: int = 0
    slack: int = 0

    def to_dict(self):
        return {
            "components": self.components,
            "states": self.states,
            "truncated": self.truncated,
            "bridged": self.bridged,
            "slack": self.slack,
            "entries": [{"key": k, "component": c, "parity": p} for k, c, p in self.entries],
        }


class _UF:
    def __init__(self, keys):
        self.p = {k: k for k in keys}

    def find(self, x):
        p = self.p
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.p[max(ra, rb)] = min(ra, rb)
            return True
        return False


def _check_disk(c):
    chi, betti = euler_and_homology(c)
    if chi != 1 or tuple(betti)[:2] != (1, 0) or any(betti[2:]):
        raise NotSimplyConnected(f"seed is not a disk (chi={chi}, betti={list(betti)})")


def _enumerate(seeds, budget, allow_parity):
    store = {}
    edges = []
    frontier = []
    for c in seeds:
        k = canonicalize(c)
        if k not in store:
            store[k] = c
            frontier.append(k)
    truncated = False
    depth = 0
    while frontier:
        if budget.max_depth is not None and depth >= budget.max_depth:
            truncated = True
            break
        nxt = []
        for k in frontier:
            for step, r in moves(store[k], parity=allow_parity):
                if budget.max_cells is not None and len(r.cells) > budget.max_cells:
                    continue
                kr = canonicalize(r)
                edges.append((k, kr, step.kind))
                if kr not in store:
                    if len(store) >= budget.max_states:
                        truncated = True
                        continue
                    store[kr] = r
                    nxt.append(kr)
        frontier = nxt
        depth += 1
    return store, edges, truncated


def _label(store, uf):
    order = sorted(store, key=lambda k: (len(store[k].cells), k))
    ids = {}
    entries = []
    for k in order:
        r = uf.find(k)
        if r not in ids:
            ids[r] = len(ids)
        entries.append((k.hex(), ids[r], len(store[k].cells) % 2))
    return entries, len(ids)


def component_census(seeds=None, budget=None, allow_parity=False):
    """Enumerate meshes reachable from the seeds and group them into components.

    Moves are flips, plus the parity change and its inverse when
    ``allow_parity`` is set; components are taken over the same move set.
    """
    budget = budget or SearchBudget(max_cells=9)
    seeds = disk_seeds(4) if seeds is None else list(seeds)
    for c in seeds:
        if c.dim != 2:
            raise DimensionMismatch("census works on quad meshes")
        _check_disk(c)
    store, edges, truncated = _enumerate(seeds, budget, allow_parity)
    uf = _UF(store)
    for a, b, _ in edges:
        uf.union(a, b)
    entries, n = _label(store, uf)
    return CensusResult(entries, n, truncated, len(store))


def flip_classes_of_reachable(seeds=None, budget=None, slack=4, search_limit=400):
    """Group every mesh reachable with flips and parity ops into flip components.

    Meshes are enumerated with both move kinds inside ``max_cells``; only
    flip edges are unioned.  Because the cell cap cuts flip paths that must
    pass through larger meshes, each remaining fragment is then joined to a
    different one when a best-first flip search staying within
    ``max_cells + slack`` reaches it.
    """
    budget = budget or SearchBudget(max_cells=9)
    seeds = disk_seeds(4) if seeds is None else list(seeds)
    for c in seeds:
        _check_disk(c)
    store, edges, truncated = _enumerate(seeds, budget, True)
    uf = _UF(store)
    for a, b, kind in edges:
        if kind == "flip":
            uf.union(a, b)
    cap = (budget.max_cells or max(len(c.cells) for c in store.values())) + slack
    bridged = 0
    changed = True
    while changed:
        changed = False
        roots = sorted({uf.find(k) for k in store}, key=lambda r: (len(store[r].cells), r))
        for r in roots:
            if uf.find(r) != r:
                continue
            members = [k for k in store if uf.find(k) == r]
            start = min(members, key=lambda k: (len(store[k].cells), k))
            hit = _bridge(store[start], store, uf, r, cap, search_limit)
            if hit is not None:
                uf.union(r, hit)
                bridged += 1
                changed = True
    entries, n = _label(store, uf)
    return CensusResult(entries, n, truncated, len(store), bridged, slack)


def _bridge(c0, census, uf, root, cap, limit):
    """Best-first flip search from ``c0`` for a census mesh outside ``root``'s component."""
    k0 = canonicalize(c0)
    seen = {k0}
    pq = [(len(c0.cells), _energy(c0), 0, k0, c0)]
    tick = 0
    n = 0
    while pq and n < limit:
        _, _, _, k, c = heapq.heappop(pq)
        n += 1
        for _, r in moves(c):
            if len(r.cells) > cap:
                continue
            kr = canonicalize(r)
            if kr in seen:
                continue
            seen.add(kr)
            if kr in census and uf.find(kr) != root:
                return kr
            tick += 1
            heapq.heappush(pq, (len(r.cells), _energy(r), tick, kr, r))
    return None
