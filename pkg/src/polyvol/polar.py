"""The spherical cone metric dual to a compact convex hyperbolic polyhedron.

The dual graph has one node per face and one edge per edge of the polyhedron;
a dual edge carries the exterior dihedral angle pi - theta_e as its length.
Each face F is a cone point of the dual metric with cone angle

    sum over the vertices v of F of (pi - interior angle of F at v)
        = 2 pi + area(F)  >  2 pi,

and closed curves confined to the dual 1-skeleton are measured by their
summed edge weights.  Cycles that cut the vertex set into two connected
halves are the degeneration detectors: a loop around a single vertex (a
vertex link) is never a geodesic of the cone metric and is excluded, while
every two-sided cut of a genuinely compact polyhedron stays strictly longer
than 2 pi and approaches 2 pi only along degenerating families.
"""
from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field

import numpy as np

from .polyhedra import Polyhedron, face_interior_angles

MAX_EXHAUSTIVE_VERTICES = 18


@dataclass(frozen=True)
class DualEdge:
    faces: tuple[int, int]      # dual nodes joined (faces of the polyhedron)
    weight: float               # exterior dihedral angle pi - theta_e
    vertices: tuple[int, int]   # the crossed primal edge


@dataclass
class DualMetric:
    n_faces: int
    n_vertices: int
    edges: list[DualEdge]
    cone_angles: np.ndarray          # per dual node (face of P)
    corner_angles: list[list[tuple[int, float]]]  # per face: (vertex, pi - interior angle)

    def adjacency(self) -> list[list[tuple[int, float, int]]]:
        """Per node: list of (neighbor, weight, edge index)."""
        adj: list[list[tuple[int, float, int]]] = [[] for _ in range(self.n_faces)]
        for ei, e in enumerate(self.edges):
            f, g = e.faces
            adj[f].append((g, e.weight, ei))
            adj[g].append((f, e.weight, ei))
        for lst in adj:
            lst.sort()
        return adj

    def to_json_dict(self) -> dict:
        return {
            "nodes": list(range(self.n_faces)),
            "edges": [
                {"faces": list(e.faces), "weight": float(e.weight)} for e in self.edges
            ],
            "cone_angles": [float(a) for a in self.cone_angles],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)


def dual_metric(poly: Polyhedron) -> DualMetric:
    """Build the polar cone metric data of a compact convex polyhedron."""
    edges = []
    for e in poly.edges:
        w = np.pi - e.angle
        if not (0.0 < w < np.pi):
            raise ValueError(
                f"edge ({e.u},{e.v}) is not strictly convex: exterior angle {w}"
            )
        edges.append(DualEdge(e.faces, float(w), (e.u, e.v)))
    corner_angles: list[list[tuple[int, float]]] = []
    cone = np.empty(len(poly.faces))
    for fi, face in enumerate(poly.faces):
        interior = face_interior_angles(poly, fi)
        corners = [(v, float(np.pi - a)) for v, a in zip(face.vertices, interior)]
        corner_angles.append(corners)
        cone[fi] = sum(c for _, c in corners)
    if np.any(cone <= 2 * np.pi):
        bad = int(np.argmin(cone))
        raise ValueError(f"cone angle at face {bad} is {cone[bad]} <= 2 pi")
    return DualMetric(len(poly.faces), poly.n_vertices, edges, cone, corner_angles)


@dataclass(frozen=True)
class DualCycle:
    faces: tuple[int, ...]           # dual nodes in cyclic order
    edge_ids: tuple[int, ...]        # dual edges traversed (same length)
    weight: float
    sides: tuple[frozenset, frozenset]  # the two primal vertex classes

    @property
    def separating(self) -> bool:
        return bool(self.sides[0]) and bool(self.sides[1])

    @property
    def min_side(self) -> int:
        return min(len(self.sides[0]), len(self.sides[1]))


def _cut_sides(dm: DualMetric, cut_edges: set[tuple[int, int]]) -> tuple[frozenset, frozenset]:
    """Connected classes of the primal vertex graph with the crossed edges removed."""
    parent = list(range(dm.n_vertices))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in dm.edges:
        u, v = e.vertices
        if (min(u, v), max(u, v)) in cut_edges:
            continue
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    roots = sorted({find(i) for i in range(dm.n_vertices)})
    if len(roots) != 2:
        raise ValueError(f"cycle does not cut the vertex graph in two (got {len(roots)} parts)")
    side_a = frozenset(i for i in range(dm.n_vertices) if find(i) == roots[0])
    side_b = frozenset(range(dm.n_vertices)) - side_a
    return side_a, side_b


def _cycle_through_edge(dm: DualMetric, adj, ei: int) -> DualCycle | None:
    """Minimum-weight simple dual cycle through edge ei: Dijkstra between its
    endpoints with the edge itself removed, ties broken by node index."""
    f0, g0 = dm.edges[ei].faces
    dist = [np.inf] * dm.n_faces
    prev_node = [-1] * dm.n_faces
    prev_edge = [-1] * dm.n_faces
    dist[f0] = 0.0
    heap = [(0.0, f0)]
    while heap:
        d, node = heapq.heappop(heap)
        if d > dist[node]:
            continue
        if node == g0:
            break
        for nb, w, eidx in adj[node]:
            if eidx == ei:
                continue
            nd = d + w
            if nd < dist[nb] - 1e-15:
                dist[nb] = nd
                prev_node[nb] = node
                prev_edge[nb] = eidx
                heapq.heappush(heap, (nd, nb))
    if not np.isfinite(dist[g0]):
        return None
    path = [g0]
    eids = []
    while path[-1] != f0:
        eids.append(prev_edge[path[-1]])
        path.append(prev_node[path[-1]])
    faces = tuple(reversed(path))
    edge_ids = tuple(reversed(eids)) + (ei,)
    weight = dist[g0] + dm.edges[ei].weight
    cut = {tuple(sorted(dm.edges[e].vertices)) for e in edge_ids}
    try:
        sides = _cut_sides(dm, cut)
    except ValueError:
        return None
    return DualCycle(faces, edge_ids, float(weight), sides)


def _cycle_from_cut(dm: DualMetric, mask: int, weight: float) -> DualCycle:
    """Dual cycle data for a vertex cut given as a bitmask of one side."""
    eids = []
    for ei, e in enumerate(dm.edges):
        u, v = e.vertices
        if ((mask >> u) & 1) != ((mask >> v) & 1):
            eids.append(ei)
    face_edges: dict[int, list[int]] = {}
    for ei in eids:
        for f in dm.edges[ei].faces:
            face_edges.setdefault(f, []).append(ei)
    faces: tuple[int, ...]
    if all(len(v) == 2 for v in face_edges.values()):
        # clean band: walk edge -> face -> edge into a simple cyclic order
        start = eids[0]
        cyc_faces = [min(dm.edges[start].faces)]
        cyc_eids = [start]
        while True:
            f = cyc_faces[-1]
            nxt = [e for e in face_edges[f] if e != cyc_eids[-1]][0]
            if nxt == start:
                break
            cyc_eids.append(nxt)
            g = [g for g in dm.edges[nxt].faces if g != f][0]
            if g == cyc_faces[0]:
                break
            cyc_faces.append(g)
        if len(cyc_eids) == len(eids):
            faces = tuple(cyc_faces)
            eids = cyc_eids
        else:
            faces = tuple(sorted(face_edges))
    else:
        faces = tuple(sorted(face_edges))
    side_a = frozenset(i for i in range(dm.n_vertices) if (mask >> i) & 1)
    side_b = frozenset(range(dm.n_vertices)) - side_a
    return DualCycle(faces, tuple(eids), float(weight), (side_a, side_b))


def min_separating_cycle(dm: DualMetric, min_side: int = 2) -> DualCycle:
    """Lightest separating dual cycle leaving at least min_side primal vertices
    on each side (min_side=2 excludes vertex links, which undercut 2 pi
    without being geodesics of the cone metric).

    Computed exactly by enumerating connected two-sided vertex cuts whenever
    the vertex count permits; per-edge shortest-path cycles (which can only
    miss constrained optima, never undercut them) serve as the fallback for
    larger polyhedra.
    """
    if dm.n_vertices <= MAX_EXHAUSTIVE_VERTICES:
        cuts = enumerate_separating_cuts(dm, min_side)
        if not cuts:
            raise ValueError(f"no separating cut with {min_side} vertices per side exists")
        w, mask = cuts[0]
        return _cycle_from_cut(dm, mask, w)
    adj = dm.adjacency()
    best: DualCycle | None = None
    for ei in range(len(dm.edges)):
        cyc = _cycle_through_edge(dm, adj, ei)
        if cyc is None or cyc.min_side < min_side:
            continue
        if best is None or (cyc.weight, cyc.faces) < (best.weight, best.faces):
            best = cyc
    if best is None:
        raise ValueError(f"no separating cycle with {min_side} vertices per side exists")
    return best


def enumerate_separating_cuts(dm: DualMetric, min_side: int = 2):
    """All connected two-sided vertex cuts with their dual-cycle weights.

    Exhaustive over vertex subsets (superset of the simple separating dual
    cycles, so lower bounds verified here imply the cycle bounds); capped at
    MAX_EXHAUSTIVE_VERTICES vertices.
    """
    n = dm.n_vertices
    if n > MAX_EXHAUSTIVE_VERTICES:
        raise ValueError(f"exhaustive enumeration capped at {MAX_EXHAUSTIVE_VERTICES} vertices")
    vertex_adj: list[set[int]] = [set() for _ in range(n)]
    for e in dm.edges:
        u, v = e.vertices
        vertex_adj[u].add(v)
        vertex_adj[v].add(u)

    def connected(mask: int) -> bool:
        first = (mask & -mask).bit_length() - 1
        seen = 1 << first
        stack = [first]
        while stack:
            x = stack.pop()
            for y in vertex_adj[x]:
                if (mask >> y) & 1 and not (seen >> y) & 1:
                    seen |= 1 << y
                    stack.append(y)
        return seen == mask

    full = (1 << n) - 1
    out = []
    for mask in range(1, full):
        size = mask.bit_count()
        if size < min_side or n - size < min_side:
            continue
        if not (mask & 1):
            continue  # complement-symmetric: keep the side containing vertex 0
        if not connected(mask) or not connected(full ^ mask):
            continue
        w = 0.0
        for e in dm.edges:
            u, v = e.vertices
            if ((mask >> u) & 1) != ((mask >> v) & 1):
                w += e.weight
        out.append((w, mask))
    out.sort()
    return out


@dataclass(frozen=True)
class AdmissibilityReport:
    cone_margins: np.ndarray      # cone angle - 2 pi per dual node
    cone_ok: bool
    cycle: DualCycle
    cycle_margin: float           # lightest two-sided cycle weight - 2 pi
    cycle_ok: bool

    @property
    def passed(self) -> bool:
        return self.cone_ok and self.cycle_ok

    def as_dict(self) -> dict:
        return {
            "cone_ok": bool(self.cone_ok),
            "min_cone_margin": float(self.cone_margins.min()),
            "cone_margins": [float(m) for m in self.cone_margins],
            "cycle_ok": bool(self.cycle_ok),
            "cycle_margin": float(self.cycle_margin),
            "cycle_faces": list(self.cycle.faces),
            "cycle_weight": float(self.cycle.weight),
            "passed": bool(self.passed),
        }


def admissibility_report(dm: DualMetric) -> AdmissibilityReport:
    """Check the polar-metric admissibility conditions with margins.

    Constant curvature 1 away from the cone points holds by construction
    (the dual is assembled from spherical polygons); the checked conditions
    are (b) every cone angle exceeds 2 pi and (c, combinatorial surrogate)
    every separating non-vertex-link cycle weighs more than 2 pi, witnessed
    by the minimum such cycle.
    """
    margins = dm.cone_angles - 2 * np.pi
    cyc = min_separating_cycle(dm, min_side=2)
    return AdmissibilityReport(
        cone_margins=margins,
        cone_ok=bool(np.all(margins > 0)),
        cycle=cyc,
        cycle_margin=float(cyc.weight - 2 * np.pi),
        cycle_ok=bool(cyc.weight > 2 * np.pi),
    )


def boundary_proximity(dm: DualMetric) -> float:
    """Margin-style distance proxy to the boundary of the admissible metrics:
    min(cone-angle margin, two-sided cycle weight - 2 pi)."""
    rep = admissibility_report(dm)
    return float(min(rep.cone_margins.min(), rep.cycle_margin))
