"""Quantitative degeneration estimates as executable checks.

The common stage is a three-plane frame: a geodesic axis L, a plane P
orthogonal to L at the basepoint x0, and planes P-, P+ orthogonal to L at
signed distances -t, +t.  Anything (plane or line) that crosses both outer
planes must cross the middle one nearly orthogonally / near the axis, with
explicit exponential error bounds in t; chaining these bounds along a
vertex-free slab of an elongated polyhedron produces a face cycle whose
exterior dihedral angles sum to barely more than 2 pi, and whose dual curve
is nearly geodesic.  Each estimate is exposed both as a checking primitive
(given one plane / line / triangle) and as a seeded harness that replays
thousands of random trials.

The frame parameter must satisfy t >= T_MIN = 1: the angle estimate uses
min(cosh t, sinh t) > e^t / 3, which holds from log(3)/2 onward.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .lorentz import (
    geodesic_point,
    geodesic_tangent,
    hyperbolic_distance,
    minkowski_dot,
    minkowski_signs,
    restrict_to_plane,
    segment_foot_parameter,
)
from .polyhedra import CrossSection, Polyhedron, cross_section, diameter, diameter_gap

T_MIN = 1.0
_SIGNS4 = minkowski_signs(4)
X0 = np.array([1.0, 0.0, 0.0, 0.0])
P_NORMAL = np.array([0.0, 1.0, 0.0, 0.0])


@dataclass(frozen=True)
class ThreePlaneFrame:
    """Planes orthogonal to the standard axis at positions 0, -t, +t."""

    t: float

    def __post_init__(self):
        if self.t <= 0:
            raise ValueError("frame parameter t must be positive")

    @property
    def x0(self) -> np.ndarray:
        return X0

    @property
    def normal_mid(self) -> np.ndarray:
        return P_NORMAL

    @property
    def normal_plus(self) -> np.ndarray:
        return np.array([np.sinh(self.t), np.cosh(self.t), 0.0, 0.0])

    @property
    def normal_minus(self) -> np.ndarray:
        return np.array([-np.sinh(self.t), np.cosh(self.t), 0.0, 0.0])


class AngleLemmaResult(NamedTuple):
    intersects: bool
    cos_angle: float
    bound: float
    ab_norm2: float      # a^2 + b^2, the quantity the squared-sum argument controls


def check_angle_lemma(t: float, plane_normal) -> AngleLemmaResult:
    """Angle between the middle plane and a plane crossing both outer planes.

    Preconditions: t >= T_MIN and |<Q, P+->| < 1 for both outer planes.  The
    returned check passes iff |cos(angle)| < 3 e^{-t}; the intermediate
    quantity a^2 + b^2 obeys the same bound.
    """
    if t < T_MIN:
        raise ValueError(f"frame parameter t = {t} is below the valid threshold {T_MIN}")
    frame = ThreePlaneFrame(t)
    q = np.asarray(plane_normal, dtype=float)
    dp = float(minkowski_dot(q, frame.normal_plus))
    dm = float(minkowski_dot(q, frame.normal_minus))
    if abs(dp) >= 1.0 or abs(dm) >= 1.0:
        raise ValueError("plane misses one of the outer planes (precondition)")
    a, b = float(q[0]), float(q[1])
    return AngleLemmaResult(
        intersects=abs(b) < 1.0,
        cos_angle=abs(b),
        bound=3.0 * np.exp(-t),
        ab_norm2=a * a + b * b,
    )


def sample_crossing_planes(t: float, count: int, seed: int) -> np.ndarray:
    """Random unit normals of planes crossing both outer frame planes.

    The (x3, x4) part is rotation-invariant about the axis; the constrained
    (a, b) part is sampled uniformly on the crossing region by rejection from
    its bounding box |a| < 1/sinh t, |b| < 1/cosh t.
    """
    frame = ThreePlaneFrame(t)
    rng = np.random.Generator(np.random.Philox(key=[np.uint64(seed), np.uint64(0)]))
    out = np.empty((count, 4))
    got = 0
    amax, bmax = 1.0 / np.sinh(t), 1.0 / np.cosh(t)
    while got < count:
        m = 4 * (count - got) + 64
        a = rng.uniform(-amax, amax, m)
        b = rng.uniform(-bmax, bmax, m)
        ok = (np.abs(b * np.cosh(t) + a * np.sinh(t)) < 1.0) & (
            np.abs(b * np.cosh(t) - a * np.sinh(t)) < 1.0
        )
        a, b = a[ok], b[ok]
        take = min(len(a), count - got)
        psi = rng.uniform(0.0, 2.0 * np.pi, take)
        rad = np.sqrt(1.0 + a[:take] ** 2 - b[:take] ** 2)
        out[got : got + take] = np.stack(
            [a[:take], b[:take], rad * np.cos(psi), rad * np.sin(psi)], axis=1
        )
        got += take
    # exact de Sitter normalization check (the radius formula enforces it)
    q = -out[:, 0] ** 2 + np.sum(out[:, 1:] ** 2, axis=1)
    assert np.allclose(q, 1.0, atol=1e-12)
    _ = frame
    return out


class DistanceLemmaResult(NamedTuple):
    point: np.ndarray
    cosh_distance: float
    bound: float
    intermediate_bound: float   # 1 / sqrt(1 - 2 / cosh^2 t)


def check_distance_lemma(t: float, line: tuple) -> DistanceLemmaResult:
    """Distance from the basepoint to where a line crossing both outer planes
    meets the middle plane; passes iff cosh(d) < 4 e^{-2t} + 1."""
    if t < T_MIN:
        raise ValueError(f"frame parameter t = {t} is below the valid threshold {T_MIN}")
    frame = ThreePlaneFrame(t)
    y1, y2 = (np.asarray(p, dtype=float) for p in line)
    for n in (frame.normal_minus, frame.normal_plus):
        s1, s2 = float(minkowski_dot(y1, n)), float(minkowski_dot(y2, n))
        z = s2 * y1 - s1 * y2
        if minkowski_dot(z, z) >= 0:
            raise ValueError("line does not cross one of the outer planes")
    s1 = float(minkowski_dot(y1, frame.normal_mid))
    s2 = float(minkowski_dot(y2, frame.normal_mid))
    z = s2 * y1 - s1 * y2
    n2 = -float(minkowski_dot(z, z))
    if n2 <= 0:
        raise ValueError("line does not cross the middle plane")
    z = z / np.sqrt(n2)
    if z[0] < 0:
        z = -z
    cosh_d = float(z[0])
    return DistanceLemmaResult(
        point=z,
        cosh_distance=cosh_d,
        bound=4.0 * np.exp(-2.0 * t) + 1.0,
        intermediate_bound=1.0 / np.sqrt(1.0 - 2.0 / np.cosh(t) ** 2),
    )


def sample_crossing_lines(t: float, count: int, seed: int, spread: float = 4.0):
    """Random lines crossing both outer planes, built from endpoint pairs
    phi(+t) p1, phi(-t) p2 with p1, p2 on the middle plane.

    Heavy-tailed offsets stress the extremal regime where the intersection
    point drifts farthest from the basepoint.
    """
    rng = np.random.Generator(np.random.Philox(key=[np.uint64(seed), np.uint64(0)]))
    ch, sh = np.cosh(t), np.sinh(t)
    lines = []
    for _ in range(count):
        cd = spread * rng.standard_cauchy(4)
        cd = np.clip(cd, -1e6, 1e6)
        p1 = np.array([np.sqrt(1 + cd[0] ** 2 + cd[1] ** 2), 0.0, cd[0], cd[1]])
        p2 = np.array([np.sqrt(1 + cd[2] ** 2 + cd[3] ** 2), 0.0, cd[2], cd[3]])
        y1 = np.array([ch * p1[0], sh * p1[0], p1[2], p1[3]])
        y2 = np.array([ch * p2[0], -sh * p2[0], p2[2], p2[3]])
        lines.append((y1, y2))
    return lines


def spherical_angle_transfer(beta: float, gamma: float, side_a: float) -> float:
    """Angle alpha of a spherical triangle from its opposite side A and the
    other two angles, via cos A = (cos alpha + cos beta cos gamma)/(sin beta sin gamma).

    When |cos beta| and |cos gamma| are below eps, the returned alpha differs
    from A by less than 2 eps.
    """
    cos_alpha = np.cos(side_a) * np.sin(beta) * np.sin(gamma) - np.cos(beta) * np.cos(gamma)
    if not -1.0 <= cos_alpha <= 1.0:
        raise ValueError(f"non-realizable triangle data: cos(alpha) = {cos_alpha}")
    return float(np.arccos(cos_alpha))


def sample_spherical_triangles(count: int, seed: int, eps: float):
    """Random spherical triangles with |cos beta|, |cos gamma| < eps.

    Vertices are drawn uniformly on the 2-sphere; sides are arc lengths and
    angles are read at the vertices, so every returned tuple
    (A, alpha, beta, gamma) is exactly realizable.  Rejection keeps the two
    constrained angles near pi/2.
    """
    rng = np.random.Generator(np.random.Philox(key=[np.uint64(seed), np.uint64(0)]))
    out = []
    while len(out) < count:
        v = rng.standard_normal((3, 3))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        cos_sides = np.array([v[1] @ v[2], v[0] @ v[2], v[0] @ v[1]])
        if np.any(np.abs(cos_sides) > 1 - 1e-10):
            continue
        sides = np.arccos(cos_sides)
        angles = np.empty(3)
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            tj = v[j] - (v[j] @ v[i]) * v[i]
            tk = v[k] - (v[k] @ v[i]) * v[i]
            angles[i] = np.arccos(
                np.clip(tj @ tk / (np.linalg.norm(tj) * np.linalg.norm(tk)), -1, 1)
            )
        if abs(np.cos(angles[1])) < eps and abs(np.cos(angles[2])) < eps:
            out.append((sides[0], angles[0], angles[1], angles[2]))
    return out


def exterior_angle_bound(polygon, center, radius: float) -> tuple[float, float]:
    """Exterior-angle sum of a convex hyperbolic polygon against 2 pi cosh(r).

    All polygon vertices must lie within distance radius of center; the area
    comparison with the enclosing disk forces the sum below the bound.
    """
    pts = np.asarray(polygon, dtype=float)
    k = pts.shape[0]
    dists = np.array([hyperbolic_distance(p, center) for p in pts])
    if np.any(dists > radius + 1e-9):
        raise ValueError(
            f"vertex {int(np.argmax(dists))} lies {dists.max():.6f} > r = {radius} from the center"
        )
    total = 0.0
    for i in range(k):
        t1 = geodesic_tangent(pts[i], pts[(i - 1) % k])
        t2 = geodesic_tangent(pts[i], pts[(i + 1) % k])
        total += np.pi - np.arccos(np.clip(float(minkowski_dot(t1, t2)), -1.0, 1.0))
    return float(total), float(2.0 * np.pi * np.cosh(radius))


def random_convex_polygon(radius: float, max_points: int, rng: np.random.Generator) -> np.ndarray:
    """Convex hyperbolic polygon from random points in a disk (planar slice x4 = 0)."""
    from scipy.spatial import ConvexHull

    m = max(3, max_points)
    r = np.arccosh(1 + rng.uniform(0, 1, m) * (np.cosh(radius) - 1))
    psi = rng.uniform(0, 2 * np.pi, m)
    klein = np.tanh(r)[:, None] * np.stack([np.cos(psi), np.sin(psi)], axis=1)
    hull = ConvexHull(klein)
    pts2 = klein[hull.vertices]
    x0 = 1.0 / np.sqrt(1.0 - np.sum(pts2**2, axis=1))
    return np.stack([x0, x0 * pts2[:, 0], x0 * pts2[:, 1], np.zeros(len(pts2))], axis=1)


# ---------------------------------------------------------------------------
# face cycles of elongated polyhedra
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CyclePath:
    faces: tuple[int, ...]
    edge_ids: tuple[int, ...]            # crossed edge per consecutive face pair
    exterior_angles: tuple[float, ...]   # pi - theta_e along the cycle
    total: float
    bound: float                         # 2 pi + 12 N exp(-rho / 2N)
    t: float                             # slab half-width actually used
    section: CrossSection

    @property
    def k(self) -> int:
        return len(self.faces)


def find_short_face_cycle(poly: Polyhedron) -> CyclePath:
    """Face cycle around a vertex-free slab of an elongated polyhedron.

    Realizes the diameter, finds an empty projection segment by pigeonhole
    (preferring the most balanced two-sided split), erects the orthogonal
    plane at its midpoint, and reads the crossing faces off the cross
    section.  Requires diameter >= 2 N t_min so the slab half-width
    t = rho / 2N clears the frame threshold; the returned total obeys
    2 pi < total < 2 pi + 12 N exp(-rho / 2N).
    """
    n = poly.n_vertices
    rho, (i, j) = diameter(poly)
    if rho < 2 * n * T_MIN:
        raise ValueError(
            f"polyhedron not elongated enough: diameter {rho:.3f} < 2 N t_min = {2 * n * T_MIN}"
        )
    plan = diameter_gap(poly, n, min_side=2)
    if plan is None:
        raise ValueError(
            "no vertex-free diameter gap with two vertices on each side; "
            "the cycle detector needs a two-sided slab"
        )
    bound = 2.0 * np.pi + 12.0 * n * np.exp(-rho / (2.0 * n))
    offsets = [0.0, -0.25, 0.25, -0.5, 0.5]
    last_err: Exception | None = None
    for off in offsets:
        normal = plan.plane_normal(plan.mid + off * plan.half_width)
        try:
            section = cross_section(poly, normal)
        except ValueError as exc:
            last_err = exc
            continue
        ext = []
        for ei in section.edge_cycle:
            ext.append(float(np.pi - poly.edges[ei].angle))
        total = float(sum(ext))
        return CyclePath(
            faces=section.face_cycle,
            edge_ids=section.edge_cycle,
            exterior_angles=tuple(ext),
            total=total,
            bound=float(bound),
            t=float(plan.half_width),
            section=section,
        )
    raise ValueError(f"could not place a cutting plane inside the gap: {last_err}")


class CurvatureResult(NamedTuple):
    per_face: tuple[float, ...]
    total: float
    bound: float                 # 3 k exp(-rho / N)
    cos_gamma: tuple[float, ...]  # per intersecting pair
    cos_bound: float             # 1 - 8 exp(-rho / 2N)


def quasigeodesic_curvature(poly: Polyhedron, cycle: CyclePath) -> CurvatureResult:
    """Turning of the dual curve of a short face cycle.

    A face contributes zero when its two cycle edges (as full geodesics) do
    not meet; otherwise it contributes the intersection angle gamma of the
    edge lines, computed through the hyperbolic law of cosines on the
    triangle formed by the two crossing points on the cutting plane and the
    intersection point.
    """
    rho, _ = diameter(poly)
    n = poly.n_vertices
    k = cycle.k
    per_face = []
    cos_gammas = []
    for idx in range(k):
        e_in = cycle.edge_ids[(idx - 1) % k]
        e_out = cycle.edge_ids[idx]
        c = _line_intersection(poly, e_in, e_out)
        if c is None:
            per_face.append(0.0)
            continue
        pa = cycle.section.polygon[(idx - 1) % k]
        pb = cycle.section.polygon[idx]
        ab = hyperbolic_distance(pa, pb)
        ac = hyperbolic_distance(pa, c)
        bc = hyperbolic_distance(pb, c)
        cos_gamma = (-np.cosh(ab) + np.cosh(ac) * np.cosh(bc)) / (
            np.sinh(ac) * np.sinh(bc)
        )
        cos_gamma = float(np.clip(cos_gamma, -1.0, 1.0))
        cos_gammas.append(cos_gamma)
        per_face.append(float(np.arccos(cos_gamma)))
    return CurvatureResult(
        per_face=tuple(per_face),
        total=float(sum(per_face)),
        bound=float(3.0 * k * np.exp(-rho / n)),
        cos_gamma=tuple(cos_gammas),
        cos_bound=float(1.0 - 8.0 * np.exp(-rho / (2.0 * n))),
    )


def _line_intersection(poly: Polyhedron, ei: int, ej: int) -> np.ndarray | None:
    """Meeting point in hyperbolic space of the lines through two edges, or None."""
    e1, e2 = poly.edges[ei], poly.edges[ej]
    m = np.stack([
        poly.vertices[e1.u], poly.vertices[e1.v],
        -poly.vertices[e2.u], -poly.vertices[e2.v],
    ], axis=1)
    m = m / np.linalg.norm(m, axis=0, keepdims=True)
    _, sing, vt = np.linalg.svd(m)
    if sing[-1] > 1e-9 * sing[0]:
        return None   # the two 2-planes meet only at the origin
    coef = vt[-1]
    z = coef[0] * m[:, 0] + coef[1] * m[:, 1]
    q = float(minkowski_dot(z, z))
    if q >= -1e-12:
        return None   # meeting direction is not timelike: parallel or ultraparallel
    z = z / np.sqrt(-q)
    return z if z[0] > 0 else -z


class LogGrowthResult(NamedTuple):
    max_edge: float
    proximity: float
    bound: float
    passed: bool


def loggrowth_check(poly: Polyhedron, l0: float = 1.0) -> LogGrowthResult:
    """Edge-length bound from polar boundary proximity:
    max edge length <= max(L0, -2N log(proximity / 12N))."""
    from .polar import boundary_proximity, dual_metric

    n = poly.n_vertices
    lengths = [
        hyperbolic_distance(poly.vertices[e.u], poly.vertices[e.v]) for e in poly.edges
    ]
    max_edge = float(max(lengths))
    prox = boundary_proximity(dual_metric(poly))
    if prox <= 0:
        raise ValueError("polyhedron is not strictly admissible (non-positive proximity)")
    bound = float(max(l0, -2.0 * n * np.log(prox / (12.0 * n))))
    return LogGrowthResult(max_edge, prox, bound, max_edge <= bound)


def meeting_ball(simplex_points) -> tuple[np.ndarray, float]:
    """Center and radius of the inscribed ball of a hyperbolic simplex.

    Accepts a triangle lying in a plane (intrinsic dimension 2) or a
    3-simplex in the full space; the inscribed ball touches every facet, so
    in particular it meets all of them.  Reference constants: log(2)/2 ~
    0.3466 suffices for a disk *meeting* all sides of any triangle, while the
    inradius itself is capped by the ideal-triangle value log(3)/2 ~ 0.5493.
    """
    pts = np.asarray(simplex_points, dtype=float)
    k = pts.shape[0]
    if k == 3:
        coords, basis = restrict_to_plane(pts)
        center3, radius = _simplex_inball(coords.T)
        center = basis @ center3
        return center, radius
    if k == pts.shape[1]:
        return _simplex_inball(pts.T)
    raise ValueError("expected a planar triangle or a full-dimensional simplex")


IDEAL_TRIANGLE_INRADIUS = float(np.log(3.0) / 2.0)
MEETING_DISK_RADIUS = float(np.log(2.0) / 2.0)


def _simplex_inball(w: np.ndarray) -> tuple[np.ndarray, float]:
    """Inscribed ball of the simplex with vertex columns w in R^{1,d}."""
    d = w.shape[0]
    signs = minkowski_signs(d)
    normals = signs[:, None] * np.linalg.inv(w).T
    norms2 = np.einsum("ij,i,ij->j", normals, signs, normals)
    if np.any(norms2 <= 0):
        raise ValueError("degenerate simplex")
    normals = normals / np.sqrt(norms2)
    x = np.linalg.solve(normals.T * signs[None, :], np.ones(d))
    q = float(np.einsum("i,i,i->", x, signs, x))
    if q >= 0:
        raise ValueError("incenter is not a finite point (degenerate simplex)")
    x = x / np.sqrt(-q)
    if x[0] < 0:
        x = -x
    sinh_r = np.einsum("ij,i,i->j", normals, signs, x)
    if np.any(sinh_r <= 0) or np.ptp(sinh_r) > 1e-8 * (1 + np.max(np.abs(sinh_r))):
        raise ValueError("incenter construction failed to equalize facet distances")
    return x, float(np.arcsinh(np.mean(sinh_r)))
