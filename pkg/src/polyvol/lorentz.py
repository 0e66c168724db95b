"""Minkowski-space linear algebra for the hyperboloid model of hyperbolic space.

Hyperbolic n-space is realized as the upper sheet of the unit hyperboloid
<x, x> = -1, x_1 > 0 inside R^{1,n} with the bilinear form

    <x, y> = -x_1 y_1 + x_2 y_2 + ... + x_{n+1} y_{n+1}.

Planes correspond to unit spacelike normals (<n, n> = +1, the de Sitter
sphere); the Klein chart x -> (x_2, ..., x_{n+1}) / x_1 maps the sheet onto
the open unit ball and sends geodesics to straight chords.

Everything here is a pure function of numpy arrays; most routines accept a
trailing-axis batch (shape (..., d)).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ALGEBRA_TOL = 1e-12        # tolerance for single algebraic identities
CONSTRUCTION_TOL = 1e-10   # tolerance for composed constructions
NORM_DRIFT_TOL = 1e-8      # constructors renormalize drift below this, reject above


def minkowski_signs(dim: int) -> np.ndarray:
    """Diagonal of the Minkowski form in R^{1,dim-1} (first slot timelike)."""
    s = np.ones(dim)
    s[0] = -1.0
    return s


def minkowski_dot(x, y) -> np.ndarray | float:
    """<x, y> = -x1*y1 + sum_{i>=2} xi*yi, broadcasting over leading axes."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    prod = x * y
    return -prod[..., 0] + prod[..., 1:].sum(axis=-1)


def minkowski_norm2(x) -> np.ndarray | float:
    return minkowski_dot(x, x)


def hpoint(coords) -> np.ndarray:
    """Validate (and gently renormalize) a point of the hyperboloid sheet.

    Accepts a vector with <x, x> close to -1 and positive first coordinate.
    Norm drift below NORM_DRIFT_TOL is absorbed by rescaling; anything larger
    is rejected as a logic error rather than masked.
    """
    x = np.asarray(coords, dtype=float)
    q = minkowski_norm2(x)
    if not np.all(q < 0):
        raise ValueError(f"not a timelike vector: <x,x> = {q}")
    scale = np.sqrt(-q)
    if np.any(np.abs(scale - 1.0) > NORM_DRIFT_TOL):
        raise ValueError(f"hyperboloid norm drift too large: |<x,x>+1| = {np.max(np.abs(q + 1.0))}")
    x = x / scale[..., None] if np.ndim(scale) else x / scale
    if not np.all(x[..., 0] > 0):
        raise ValueError("point lies on the lower sheet (x1 <= 0)")
    return x


def hplane(coords) -> np.ndarray:
    """Validate (and gently renormalize) a unit spacelike plane normal."""
    n = np.asarray(coords, dtype=float)
    q = minkowski_norm2(n)
    if not np.all(q > 0):
        raise ValueError(f"not a spacelike vector: <n,n> = {q}")
    scale = np.sqrt(q)
    if np.any(np.abs(scale - 1.0) > NORM_DRIFT_TOL):
        raise ValueError(f"normal norm drift too large: |<n,n>-1| = {np.max(np.abs(q - 1.0))}")
    return n / scale[..., None] if np.ndim(scale) else n / scale


def hyperbolic_distance(p, q) -> np.ndarray | float:
    """Distance on the hyperboloid sheet: arccosh(-<p, q>)."""
    c = -minkowski_dot(p, q)
    c = np.asarray(c, dtype=float)
    if np.any(c < 1.0 - 1e-9):
        raise ValueError(f"cosh(distance) = {np.min(c)} < 1: inputs are not valid points")
    out = np.arccosh(np.maximum(c, 1.0))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class AxisTranslation:
    """Hyperbolic translation by a signed length r along the coordinate axis.

    The axis is the geodesic through (1,0,0,0) with tangent (0,1,0,0); the
    matrix acts on the first two coordinates by a boost and fixes the rest.
    """

    r: float

    @property
    def matrix(self) -> np.ndarray:
        c, s = np.cosh(self.r), np.sinh(self.r)
        m = np.eye(4)
        m[0, 0] = m[1, 1] = c
        m[0, 1] = m[1, 0] = s
        return m

    def compose(self, other: "AxisTranslation") -> "AxisTranslation":
        return AxisTranslation(self.r + other.r)

    def inverse(self) -> "AxisTranslation":
        return AxisTranslation(-self.r)

    def apply(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return v @ self.matrix.T


def apply_translation(phi: AxisTranslation, v) -> np.ndarray:
    return phi.apply(v)


def random_isometry(rng: np.random.Generator, max_shift: float = 2.0) -> np.ndarray:
    """Random orientation-preserving isometry of H^3 (boost conjugated by rotations)."""
    def rot4() -> np.ndarray:
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        if np.linalg.det(q) < 0:
            q[:, 0] = -q[:, 0]
        m = np.eye(4)
        m[1:, 1:] = q
        return m

    boost = AxisTranslation(rng.uniform(-max_shift, max_shift)).matrix
    return rot4() @ boost @ rot4()


def klein_embed(p) -> np.ndarray:
    """Chart onto the open unit ball: x -> (x2, ..., xd)/x1."""
    p = np.asarray(p, dtype=float)
    return p[..., 1:] / p[..., :1]


def klein_lift(u) -> np.ndarray:
    """Inverse Klein chart; rejects |u| >= 1 (ideal or invalid points)."""
    u = np.asarray(u, dtype=float)
    r2 = np.sum(u * u, axis=-1)
    if np.any(r2 >= 1.0):
        raise ValueError(f"Klein point with |u|^2 = {np.max(r2)} >= 1 is ideal or invalid")
    x0 = 1.0 / np.sqrt(1.0 - r2)
    return np.concatenate([x0[..., None], u * x0[..., None]], axis=-1)


def plane_through(p1, p2, p3) -> np.ndarray:
    """Unit spacelike normal of the plane containing three points.

    The inputs need not be normalized: any three Minkowski vectors spanning a
    3-space whose orthogonal complement is spacelike work, so null (ideal)
    rays are accepted too.
    """
    rows = np.stack([np.asarray(p, dtype=float) for p in (p1, p2, p3)])
    rows = rows / np.linalg.norm(rows, axis=1, keepdims=True)
    rows = rows * minkowski_signs(rows.shape[1])
    _, sing, vt = np.linalg.svd(rows)
    if sing[2] < 1e-10 * sing[0]:
        raise ValueError("degenerate (collinear) point triple")
    n = vt[-1]
    q = minkowski_norm2(n)
    if q <= 0:
        raise ValueError("triple does not span a geodesic plane (normal not spacelike)")
    return n / np.sqrt(q)


def planes_intersect(n1, n2) -> bool:
    """Two planes meet inside hyperbolic space iff |<n1, n2>| < 1."""
    return bool(abs(minkowski_dot(n1, n2)) < 1.0)


def plane_angle(n1, n2) -> float:
    """Intersection angle alpha with cos(alpha) = <n1, n2> (orientation-dependent)."""
    c = float(minkowski_dot(n1, n2))
    if abs(c) >= 1.0:
        raise ValueError(f"planes do not intersect: <n1,n2> = {c}")
    return float(np.arccos(c))


def point_plane_sinh_distance(p, n) -> np.ndarray | float:
    """sinh of the signed distance from a point to a plane with unit normal n."""
    return minkowski_dot(p, n)


def geodesic_tangent(p, q) -> np.ndarray:
    """Unit tangent vector at point p pointing along the geodesic toward q."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    c = minkowski_dot(p, q)
    t = q + np.asarray(c)[..., None] * p
    n2 = minkowski_norm2(t)
    if np.any(n2 <= 0):
        raise ValueError("coincident points have no geodesic tangent")
    return t / np.sqrt(n2)[..., None]


def geodesic_point(a, tangent, s) -> np.ndarray:
    """Point at arclength s along the geodesic through a with unit tangent."""
    a = np.asarray(a, dtype=float)
    tangent = np.asarray(tangent, dtype=float)
    s = np.asarray(s, dtype=float)
    return np.cosh(s)[..., None] * a + np.sinh(s)[..., None] * tangent


def axis_parameter(a, tangent, x) -> np.ndarray | float:
    """Arclength position of the foot of the perpendicular from x to the axis.

    The axis is the geodesic s -> cosh(s) a + sinh(s) tangent; the foot solves
    tanh(s) = -<x, tangent>/<x, a>.  Evaluated as half the log-ratio of the
    pairings with the axis's two null endpoint vectors a -+ tangent, which
    keeps full precision at parameters far beyond where arctanh saturates.
    """
    a = np.asarray(a, dtype=float)
    tangent = np.asarray(tangent, dtype=float)
    plus = minkowski_dot(x, tangent - a)     # ~ e^{+s}
    minus = -minkowski_dot(x, a + tangent)   # ~ e^{-s}
    # the pairing on the receding side cancels catastrophically once s exceeds
    # ~log(1/eps)/2; floor both at the roundoff level of the dot products, which
    # caps |s| conservatively instead of returning noise or a spurious sign
    scale = np.maximum(np.abs(minkowski_dot(x, a)), 1.0)
    floor = 1e-15 * scale
    plus = np.maximum(plus, floor)
    minus = np.maximum(minus, floor)
    return 0.5 * np.log(plus / minus)


def segment_foot_parameter(a, b, x) -> np.ndarray | float:
    """Arclength position along the geodesic from a to b of the foot of x.

    Uses only the pairings alpha = cosh d(x, a) and beta = cosh d(x, b):
    the foot solves cosh(rho - s) alpha = cosh(s) beta, i.e.

        s = (1/2) log( (e^rho alpha - beta) / (beta - e^{-rho} alpha) ),

    which is stable for any separation rho (no cancellation on [0, rho],
    unlike formulas built from a tangent vector at one end).  Feet beyond
    the segment are clamped to [0, rho].
    """
    rho = hyperbolic_distance(a, b)
    alpha = -minkowski_dot(x, a)
    beta = -minkowski_dot(x, b)
    num = np.exp(rho) * alpha - beta
    den = beta - np.exp(-rho) * alpha
    num = np.maximum(num, 1e-300)
    den = np.maximum(den, 1e-300)
    s = 0.5 * np.log(num / den)
    return np.clip(s, 0.0, rho)


def tangent_frame(p) -> np.ndarray:
    """Orthonormal spacelike frame of the tangent space at p (columns).

    Deterministic Minkowski Gram-Schmidt of the coordinate directions against
    the (timelike) base point.
    """
    p = np.asarray(p, dtype=float)
    d = p.shape[-1]
    basis = [p / np.sqrt(-minkowski_norm2(p))]
    cols = []
    for i in range(d):
        v = np.zeros(d)
        v[i] = 1.0
        for b in basis:
            v = v - (minkowski_dot(v, b) / minkowski_norm2(b)) * b
        q = minkowski_norm2(v)
        if q > 1e-12:
            v = v / np.sqrt(q)
            basis.append(v)
            cols.append(v)
        if len(cols) == d - 1:
            break
    return np.stack(cols, axis=1)


def exponential_map(p, direction, s) -> np.ndarray:
    """Geodesic flow from p in a unit tangent direction for arclength s."""
    return geodesic_point(p, direction, s)


def restrict_to_plane(points) -> tuple[np.ndarray, np.ndarray]:
    """Coordinates of coplanar hyperboloid points in an intrinsic R^{1,2} basis.

    Returns (coords, basis) with basis columns b0 (timelike), b1, b2 spanning
    the Minkowski 3-space of the input points; coords satisfy
    x = b0*c0 + b1*c1 + b2*c2 with <x,x> preserved.
    """
    pts = np.asarray(points, dtype=float)
    b0 = pts[0] / np.sqrt(-minkowski_norm2(pts[0]))
    basis = [b0]
    for cand in pts[1:]:
        v = np.asarray(cand, dtype=float)
        for b in basis:
            v = v - (minkowski_dot(v, b) / minkowski_norm2(b)) * b
        q = minkowski_norm2(v)
        if q > 1e-10:
            basis.append(v / np.sqrt(q))
        if len(basis) == 3:
            break
    if len(basis) < 3:
        raise ValueError("points do not span a plane")
    b = np.stack(basis, axis=1)
    signs = np.array([-1.0, 1.0, 1.0])
    coords = (pts * minkowski_signs(pts.shape[1])) @ b * signs
    return coords, b
