"""Compact convex polyhedra in hyperbolic 3-space.

A polyhedron is built from points on the hyperboloid by taking the Euclidean
convex hull of their Klein images (hyperbolic convexity equals chord
convexity in that chart).  The hull supplies combinatorics only: face planes,
outward normals and dihedral angles are recomputed in Minkowski coordinates
from the vertex vectors themselves, which stays accurate for strongly
elongated bodies whose Klein images crowd against the unit sphere.

Conventions: face normals point outward, so every vertex v satisfies
<v, n_F> <= 0; the interior dihedral angle at an edge shared by faces F, G is
theta_e = pi - arccos(<n_F, n_G>), which recovers the Euclidean angles in the
small-polyhedron limit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .lorentz import (
    geodesic_tangent,
    segment_foot_parameter,
    hyperbolic_distance,
    klein_embed,
    klein_lift,
    minkowski_dot,
    minkowski_signs,
)

COPLANAR_TOL = 1e-9    # normalized 4x4 determinant below this merges faces
CONVEXITY_TOL = 1e-9   # relative slack for vertex/face-plane sign certificates
GRAZE_TOL = 1e-9       # cross-section planes this close to a vertex are rejected

_SIGNS4 = minkowski_signs(4)


@dataclass(frozen=True)
class Face:
    vertices: tuple[int, ...]   # cyclic order, counterclockwise seen from outside
    normal: np.ndarray          # outward unit spacelike normal


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    faces: tuple[int, int]
    angle: float                # interior dihedral angle, in (0, pi)


@dataclass
class Polyhedron:
    vertices: np.ndarray        # (V, 4) hyperboloid points
    faces: list[Face]
    edges: list[Edge]

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def validate(self) -> None:
        """Convexity certificate, Euler relation, and strict edge angles."""
        v, e, f = self.n_vertices, self.n_edges, self.n_faces
        if v - e + f != 2:
            raise ValueError(f"Euler relation fails: V-E+F = {v}-{e}+{f} = {v - e + f}")
        scale = np.maximum(1.0, np.abs(self.vertices[:, 0]))
        for fi, face in enumerate(self.faces):
            side = minkowski_dot(self.vertices, face.normal[None, :])
            if np.any(side > CONVEXITY_TOL * scale):
                w = int(np.argmax(side / scale))
                raise ValueError(
                    f"vertex {w} lies outside face {fi}: <v,n> = {side[w]:.3e}"
                )
            on = np.abs(side[list(face.vertices)])
            if np.any(on > CONVEXITY_TOL * scale[list(face.vertices)]):
                raise ValueError(f"face {fi} is not planar within tolerance")
        for ed in self.edges:
            if not (0.0 < ed.angle < np.pi):
                raise ValueError(f"edge ({ed.u},{ed.v}) has non-convex angle {ed.angle}")

    def to_json_dict(self) -> dict:
        return {
            "vertices": [[float(x) for x in row] for row in self.vertices],
            "faces": [list(face.vertices) for face in self.faces],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Polyhedron":
        """Rebuild from the wire format; normals and angles are recomputed and
        every invariant is revalidated (bad input is rejected with a witness)."""
        verts = np.asarray(data["vertices"], dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 4:
            raise ValueError("vertices must be a list of 4-vectors")
        norms = -minkowski_dot(verts, verts)
        if np.any(np.abs(norms - 1.0) > 1e-8 * np.maximum(1.0, np.abs(verts[:, 0]) ** 2)):
            w = int(np.argmax(np.abs(norms - 1.0)))
            raise ValueError(f"vertex {w} is not on the hyperboloid: <v,v> = {-norms[w]:.6e}")
        verts = verts / np.sqrt(norms)[:, None]
        if np.any(verts[:, 0] <= 0):
            raise ValueError("vertex on the lower sheet")
        face_lists = [tuple(int(i) for i in f) for f in data["faces"]]
        return _assemble(verts, face_lists)


def _face_plane(verts: np.ndarray, idx: tuple[int, ...], interior: np.ndarray) -> np.ndarray:
    """Outward unit normal of the plane through the listed vertices.

    Least-squares nullspace over all the face's vertices (rows normalized to
    unit Euclidean length first, so huge hyperboloid coordinates do not skew
    the fit); oriented so the interior point sits on the negative side.
    """
    rows = verts[list(idx)] * _SIGNS4[None, :]
    rows = rows / np.linalg.norm(rows, axis=1, keepdims=True)
    _, sing, vt = np.linalg.svd(rows, full_matrices=True)
    n = vt[-1]
    q = float(np.einsum("i,i,i->", n, _SIGNS4, n))
    if q <= 0:
        raise ValueError("face plane normal is not spacelike")
    n = n / np.sqrt(q)
    if minkowski_dot(interior, n) > 0:
        n = -n
    return n


def _dihedral(n1: np.ndarray, n2: np.ndarray) -> float:
    d = float(minkowski_dot(n1, n2))
    if abs(d) >= 1.0:
        raise ValueError(f"adjacent face planes do not intersect: <n,n> = {d}")
    return float(np.pi - np.arccos(d))


def _assemble(verts: np.ndarray, face_lists: list[tuple[int, ...]]) -> Polyhedron:
    interior = klein_lift(klein_embed(verts).mean(axis=0))
    faces = [Face(idx, _face_plane(verts, idx, interior)) for idx in face_lists]
    edge_faces: dict[tuple[int, int], list[int]] = {}
    for fi, face in enumerate(faces):
        k = len(face.vertices)
        for a in range(k):
            u, v = face.vertices[a], face.vertices[(a + 1) % k]
            edge_faces.setdefault((min(u, v), max(u, v)), []).append(fi)
    edges = []
    for (u, v), fs in sorted(edge_faces.items()):
        if len(fs) != 2:
            raise ValueError(f"edge ({u},{v}) belongs to {len(fs)} faces, expected 2")
        angle = _dihedral(faces[fs[0]].normal, faces[fs[1]].normal)
        edges.append(Edge(u, v, (fs[0], fs[1]), angle))
    poly = Polyhedron(verts, faces, edges)
    poly.validate()
    return poly


def hull_klein(points) -> Polyhedron:
    """Convex hull of hyperboloid points via the Klein chart.

    Points interior to the hull are dropped; adjacent hull triangles are
    merged into a single face when the four involved vertices are coplanar
    within COPLANAR_TOL on the normalized Minkowski determinant.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 4:
        raise ValueError("expected an array of hyperboloid 4-vectors")
    if pts.shape[0] < 4:
        raise ValueError(f"need at least 4 points, got {pts.shape[0]}")
    u = klein_embed(pts)
    try:
        hull = ConvexHull(u)
    except QhullError as exc:
        raise ValueError(f"degenerate input (coplanar or lower-dimensional): {exc}") from exc
    keep = np.sort(hull.vertices)
    if keep.size < 4:
        raise ValueError(f"only {keep.size} effective vertices")
    remap = {int(old): new for new, old in enumerate(keep)}
    verts = pts[keep]
    u = u[keep]

    tris = [[remap[int(i)] for i in simplex] for simplex in hull.simplices]
    eqs = hull.equations
    # orient every triangle counterclockwise as seen from outside
    for t, eq in zip(tris, eqs):
        a, b, c = t
        if np.cross(u[b] - u[a], u[c] - u[a]) @ eq[:3] < 0:
            t[1], t[2] = t[2], t[1]

    interior = klein_lift(u.mean(axis=0))
    tri_normals = [_face_plane(verts, tuple(t), interior) for t in tris]
    parent = list(range(len(tris)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    # coplanarity is tested on the Minkowski normals of adjacent triangles
    # (scale-free), not on chart coordinates: Klein images of an elongated
    # body crowd against the unit sphere and chart determinants go blind there
    for ti, nbrs in enumerate(hull.neighbors):
        for tj in nbrs:
            tj = int(tj)
            if tj <= ti:
                continue
            if minkowski_dot(tri_normals[ti], tri_normals[tj]) > 1.0 - COPLANAR_TOL:
                ra, rb = find(ti), find(tj)
                if ra != rb:
                    parent[rb] = ra

    groups: dict[int, list[int]] = {}
    for ti in range(len(tris)):
        groups.setdefault(find(ti), []).append(ti)

    face_lists = []
    for members in groups.values():
        directed: set[tuple[int, int]] = set()
        for ti in members:
            a, b, c = tris[ti]
            for u0, v0 in ((a, b), (b, c), (c, a)):
                if (v0, u0) in directed:
                    directed.discard((v0, u0))
                else:
                    directed.add((u0, v0))
        boundary = dict(sorted(directed))
        if len(boundary) != len(directed):
            raise ValueError("face boundary revisits a vertex; merge produced a non-disk")
        start = min(boundary)
        cyc = [start]
        while True:
            nxt = boundary[cyc[-1]]
            if nxt == start:
                break
            cyc.append(nxt)
            if len(cyc) > len(boundary):
                raise ValueError("face boundary is not a single cycle")
        face_lists.append(tuple(cyc))
    face_lists.sort(key=lambda f: (min(f), f))
    return _assemble(verts, face_lists)


def dihedral_angles(poly: Polyhedron) -> np.ndarray:
    """Interior dihedral angle per edge, recomputed from the face normals."""
    return np.array([
        _dihedral(poly.faces[e.faces[0]].normal, poly.faces[e.faces[1]].normal)
        for e in poly.edges
    ])


def diameter(poly: Polyhedron) -> tuple[float, tuple[int, int]]:
    """Largest pairwise vertex distance together with the realizing pair."""
    v = poly.vertices
    dots = -np.einsum("id,d,jd->ij", v, _SIGNS4, v)
    np.fill_diagonal(dots, 1.0)
    i, j = np.unravel_index(np.argmax(dots), dots.shape)
    return float(np.arccosh(max(dots[i, j], 1.0))), (int(min(i, j)), int(max(i, j)))


def face_interior_angles(poly: Polyhedron, f: int) -> np.ndarray:
    """Interior angle of face f's polygon at each of its vertices (cyclic order)."""
    idx = poly.faces[f].vertices
    k = len(idx)
    out = np.empty(k)
    for a in range(k):
        v = poly.vertices[idx[a]]
        prv = poly.vertices[idx[(a - 1) % k]]
        nxt = poly.vertices[idx[(a + 1) % k]]
        t1 = geodesic_tangent(v, prv)
        t2 = geodesic_tangent(v, nxt)
        out[a] = np.arccos(np.clip(minkowski_dot(t1, t2), -1.0, 1.0))
    return out


def face_area(poly: Polyhedron, f: int) -> float:
    """Hyperbolic area of face f by the angle deficit: (k-2) pi - sum(angles)."""
    ang = face_interior_angles(poly, f)
    return float((len(ang) - 2) * np.pi - ang.sum())


def vertex_face_angle(poly: Polyhedron, v: int, f: int) -> float:
    """Interior angle of face f at vertex v."""
    idx = poly.faces[f].vertices
    pos = idx.index(v)
    return float(face_interior_angles(poly, f)[pos])


@dataclass(frozen=True)
class CrossSection:
    plane: np.ndarray            # unit normal of the cutting plane
    polygon: np.ndarray          # (k, 4) hyperboloid points, cyclic order
    face_cycle: tuple[int, ...]  # crossing faces, one per polygon side
    edge_cycle: tuple[int, ...]  # crossed edge index per polygon vertex

    def interior_angles(self) -> np.ndarray:
        k = self.polygon.shape[0]
        out = np.empty(k)
        for a in range(k):
            t1 = geodesic_tangent(self.polygon[a], self.polygon[(a - 1) % k])
            t2 = geodesic_tangent(self.polygon[a], self.polygon[(a + 1) % k])
            out[a] = np.arccos(np.clip(minkowski_dot(t1, t2), -1.0, 1.0))
        return out

    def exterior_angle_sum(self) -> float:
        ang = self.interior_angles()
        return float(len(ang) * np.pi - ang.sum())


def cross_section(poly: Polyhedron, plane) -> CrossSection:
    """Convex polygon cut by a plane, with the crossing faces in cyclic order.

    The plane must separate at least one vertex from another and may not pass
    through a vertex (within GRAZE_TOL, relative): grazing planes are rejected
    so callers can reposition deterministically.
    """
    q = np.asarray(plane, dtype=float)
    side = minkowski_dot(poly.vertices, q[None, :])
    scale = np.maximum(1.0, np.abs(poly.vertices[:, 0]))
    grazing = np.abs(side) <= GRAZE_TOL * scale
    if np.any(grazing):
        raise ValueError(
            f"plane passes through vertex {int(np.nonzero(grazing)[0][0])}: reposition it"
        )
    if np.all(side > 0) or np.all(side < 0):
        raise ValueError("plane misses the polyhedron: all vertices on one side")

    crossing: dict[int, int] = {}
    for ei, e in enumerate(poly.edges):
        if side[e.u] * side[e.v] < 0:
            crossing[ei] = 1
    face_to_edges: dict[int, list[int]] = {}
    for ei in crossing:
        for f in poly.edges[ei].faces:
            face_to_edges.setdefault(f, []).append(ei)
    for f, eids in face_to_edges.items():
        if len(eids) != 2:
            raise ValueError(f"face {f} crossed {len(eids)} times; inconsistent section")

    start_edge = min(crossing)
    e_cycle = [start_edge]
    f_cycle = [min(poly.edges[start_edge].faces)]
    while True:
        f = f_cycle[-1]
        e_next = [e for e in face_to_edges[f] if e != e_cycle[-1]][0]
        if e_next == start_edge:
            break
        e_cycle.append(e_next)
        g = [g for g in poly.edges[e_next].faces if g != f][0]
        if g == f_cycle[0]:
            break
        f_cycle.append(g)
    if len(e_cycle) != len(f_cycle):
        raise ValueError("cross-section walk failed to close")

    pts = []
    for ei in e_cycle:
        e = poly.edges[ei]
        a, b = poly.vertices[e.u], poly.vertices[e.v]
        z = side[e.v] * a - side[e.u] * b
        nz = -minkowski_dot(z, z)
        if nz <= 0:
            raise ValueError("edge-plane intersection left the hyperboloid")
        z = z / np.sqrt(nz)
        if z[0] < 0:
            z = -z
        pts.append(z)
    return CrossSection(q, np.stack(pts), tuple(f_cycle), tuple(e_cycle))


@dataclass(frozen=True)
class GapPlan:
    """A vertex-free slab orthogonal to a diameter: endpoints of the diameter,
    its length, the slab's midpoint parameter and half-width, and how many
    vertices project to either side."""

    a: np.ndarray
    b: np.ndarray
    rho: float
    mid: float
    half_width: float
    sides: tuple[int, int]

    def plane_normal(self, s: float) -> np.ndarray:
        """Unit normal of the plane orthogonal to the diameter axis at
        parameter s, grouped around the endpoint difference so that no
        exponentially large terms cancel."""
        ch_s = np.cosh(s)
        scalar = ch_s - np.cosh(self.rho - s)
        return (ch_s * (self.b - self.a) + scalar * self.a) / np.sinh(self.rho)


def diameter_gap(poly: Polyhedron, n_segments: int, min_side: int = 2) -> GapPlan | None:
    """Vertex-free slab orthogonal to a diameter, with balanced sides.

    Splits the diameter into n_segments equal pieces, projects every vertex
    onto the diameter axis, and looks for an empty segment with at least
    min_side vertices projecting to each side; the most balanced such gap is
    returned, or None when none exists.
    """
    rho, (i, j) = diameter(poly)
    a = poly.vertices[i]
    b = poly.vertices[j]
    params = np.asarray(segment_foot_parameter(a, b, poly.vertices))
    params[i] = 0.0
    params[j] = rho
    step = rho / n_segments
    best = None
    for k in range(n_segments):
        lo, hi = k * step, (k + 1) * step
        inside = np.sum((params > lo + 1e-12) & (params < hi - 1e-12))
        if inside:
            continue
        below = int(np.sum(params <= lo + 1e-12))
        above = int(np.sum(params >= hi - 1e-12))
        if min(below, above) < min_side:
            continue
        score = min(below, above)
        if best is None or score > best[0]:
            best = (score, 0.5 * (lo + hi), below, above)
    if best is None:
        return None
    _, mid, below, above = best
    return GapPlan(a, b, rho, mid, 0.5 * step, (below, above))


def stretch_generator(
    n_vertices: int, rho: float, seed: int, max_retries: int = 400
) -> Polyhedron:
    """Random elongated polyhedron: two anchors at distance rho on an axis plus
    n_vertices - 2 points within distance 1 of the axis segment.

    Axis positions of the interior points are uniform with an exponential tilt
    toward the anchors (capped one unit short of them, where the Klein chart
    still resolves the hull combinatorics in double precision).  Regenerates
    until the hull keeps all n_vertices, the diameter lands in [0.9 rho,
    1.1 rho], and a vertex-free diameter gap with two vertices on each side
    exists, so degeneration scans always see two-sided cuts.
    """
    if n_vertices < 4:
        raise ValueError("need at least 4 vertices")
    if rho <= 0:
        raise ValueError("rho must be positive")
    rng = np.random.Generator(np.random.Philox(key=[np.uint64(seed), np.uint64(0)]))
    half = rho / 2.0
    tilt = 2.0
    for _ in range(max_retries):
        anchors = np.array([
            [np.cosh(half), -np.sinh(half), 0.0, 0.0],
            [np.cosh(half), np.sinh(half), 0.0, 0.0],
        ])
        m = n_vertices - 2
        u = rng.uniform(0.0, 1.0, m)
        sign = np.where(rng.uniform(size=m) < 0.5, -1.0, 1.0)
        span = max(half - 1.0, 0.1 * half)
        t = sign * span * np.log1p(u * (np.exp(tilt) - 1.0)) / tilt
        r = rng.uniform(0.05, 1.0, m)
        psi = rng.uniform(0.0, 2.0 * np.pi, m)
        pts = np.stack([
            np.cosh(r) * np.cosh(t),
            np.cosh(r) * np.sinh(t),
            np.sinh(r) * np.cos(psi),
            np.sinh(r) * np.sin(psi),
        ], axis=1)
        cloud = np.concatenate([anchors, pts], axis=0)
        try:
            poly = hull_klein(cloud)
        except ValueError:
            continue
        if poly.n_vertices != n_vertices:
            continue
        d, _ = diameter(poly)
        if not (0.9 * rho <= d <= 1.1 * rho):
            continue
        if diameter_gap(poly, n_vertices, min_side=2) is None:
            continue
        return poly
    raise RuntimeError(
        f"stretch generator exhausted {max_retries} retries for N={n_vertices}, rho={rho}"
    )
