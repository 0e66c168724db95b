"""Tetrahedron volume as a function of dihedral angles.

In a space of constant curvature K the volume of a smoothly varying
tetrahedron obeys

    K dV = (1/2) * sum_over_edges  length(e) d(theta_e),

so the partial derivative of V with respect to the dihedral angle at an edge
is that edge's length over 2K.  Volume itself is obtained by integrating the
differential along a concrete geometric path: the target simplex is shrunk
toward a chart barycenter (Klein chart for K = -1, gnomonic chart for K = +1),
which stays inside the admissible class for every scale and starts from a
point of zero volume.  An independent Monte Carlo oracle estimates the same
volumes by rejection sampling, so the two routes check each other.

Angle-slot bookkeeping: the flat angle vector is ordered by facet pairs
(0,1), (0,2), (0,3), (1,2), (1,3), (2,3); the edge shared by facets (i, j)
joins the complementary vertex pair, so slot k carries the length of the
edge between the vertices *not* in the k-th facet pair.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from . import gram
from .gram import SimplexKind, angle_pairs, opposite_pairs
from .lorentz import minkowski_signs

MC_BLOCK = 1 << 20          # samples per counter-seeded block
FD_PATH_STEP = 1e-6         # central-difference step for d(theta)/ds along the path
TRUNCATION_RADIUS = 10.0    # hyperbolic clip radius for near-ideal Monte Carlo


@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    error_bound: float
    method: str              # "schlafli_path" or "monte_carlo"
    curvature: int

    def agrees_with(self, other: "VolumeEstimate") -> bool:
        return abs(self.value - other.value) <= self.error_bound + other.error_bound


class ProbeRow(NamedTuple):
    margin: float
    volume: float
    grad_norm: float


def area_2d(angles: Sequence[float], curvature: int) -> float:
    """Triangle area from the angle sum (Gauss): K * area = sum(alpha) - pi."""
    a = np.asarray(angles, dtype=float)
    if a.shape != (3,):
        raise ValueError("a triangle has exactly three angles")
    if np.any(a <= 0) or np.any(a >= np.pi):
        raise ValueError("triangle angles must lie in (0, pi)")
    excess = float(a.sum() - np.pi)
    if curvature * excess <= 0:
        raise ValueError(f"angle sum {a.sum():.6f} is not realizable at curvature {curvature:+d}")
    return curvature * excess


def _slot_lengths_from_matrix(lengths: np.ndarray) -> np.ndarray:
    """Edge lengths per angle slot: slot (i,j) maps to vertex pair complement."""
    return np.array([lengths[k, l] for k, l in opposite_pairs(3)])


def schlafli_gradient(theta, curvature: int) -> np.ndarray:
    """dV/dtheta per angle slot: edge length of the complementary vertex pair over 2K."""
    g = gram.gram_from_angles(theta)
    cls = gram.classify(g)
    _require_compact(cls, curvature)
    lengths = gram.edge_lengths(g)
    return _slot_lengths_from_matrix(lengths) / (2.0 * curvature)


def _require_compact(cls: gram.SimplexClass, curvature: int) -> None:
    want = SimplexKind.SPHERICAL if curvature > 0 else SimplexKind.HYPERBOLIC_COMPACT
    if cls.kind != want:
        raise ValueError(
            f"need a compact simplex of curvature {curvature:+d}, got {cls.kind.value}"
        )


# ---------------------------------------------------------------------------
# scaling path and quadrature
# ---------------------------------------------------------------------------

class _ScalingPath:
    """Shrink a tetrahedron toward its chart barycenter.

    For K = -1 the chart is the Klein ball; for K = +1 the gnomonic chart at
    an interior direction q (the normalized sum of the inward facet normals,
    which sees every vertex in its open hemisphere).  The chart image of the
    simplex is scaled by s about the barycenter of the vertex images, so the
    family is a genuine simplex for every s in (0, 1] and collapses to a
    point as s -> 0.
    """

    def __init__(self, w: np.ndarray, curvature: int):
        self.curvature = curvature
        if curvature < 0:
            pts = (w[1:] / w[0]).T           # Klein images, rows
            self.frame = None
        else:
            normals = gram.simplex_normals(w, +1)
            q = normals.sum(axis=1)
            q = q / np.linalg.norm(q)
            basis = _orthonormal_complement(q)
            y = (basis.T @ w) / (q @ w)      # gnomonic coordinates, columns
            pts = y.T
            self.frame = (q, basis)
        self.chart_pts = pts                 # (4, 3) rows = vertices
        self.center = pts.mean(axis=0)

    def vertex_matrices(self, s: np.ndarray) -> np.ndarray:
        """Batched 4x4 vertex-column matrices at scales s (shape (m, 4, 4))."""
        s = np.asarray(s, dtype=float)
        u = self.center[None, None, :] + s[:, None, None] * (
            self.chart_pts[None, :, :] - self.center[None, None, :]
        )
        if self.curvature < 0:
            r2 = np.sum(u * u, axis=-1)
            if np.any(r2 >= 1.0):
                raise RuntimeError("scaling path left the Klein ball (internal error)")
            x0 = 1.0 / np.sqrt(1.0 - r2)
            verts = np.concatenate([x0[..., None], u * x0[..., None]], axis=-1)
        else:
            q, basis = self.frame
            raw = q[None, None, :] + u @ basis.T
            verts = raw / np.linalg.norm(raw, axis=-1, keepdims=True)
        return verts.transpose(0, 2, 1)      # columns are vertices


def _orthonormal_complement(q: np.ndarray) -> np.ndarray:
    full = np.concatenate([q[:, None], np.eye(len(q))], axis=1)
    qr, _ = np.linalg.qr(full)
    return qr[:, 1:]


def _batch_slot_angles(mats: np.ndarray, curvature: int) -> np.ndarray:
    signs = np.ones(4) if curvature > 0 else minkowski_signs(4)
    inv = np.linalg.inv(mats)
    normals = signs[None, :, None] * inv.transpose(0, 2, 1)
    g = np.einsum("mif,i,mig->mfg", normals, signs, normals)
    d = np.sqrt(np.einsum("mff->mf", g))
    g = g / (d[:, :, None] * d[:, None, :])
    pairs = angle_pairs(3)
    cos_t = np.stack([-g[:, i, j] for i, j in pairs], axis=1)
    if np.any(np.abs(cos_t) >= 1.0 + 1e-9):
        raise RuntimeError("scaling path produced a non-geometric dihedral angle")
    return np.arccos(np.clip(cos_t, -1.0, 1.0))


def _batch_slot_lengths(mats: np.ndarray, curvature: int) -> np.ndarray:
    signs = np.ones(4) if curvature > 0 else minkowski_signs(4)
    g = np.einsum("mif,i,mig->mfg", mats, signs, mats)
    pairs = opposite_pairs(3)
    dots = np.stack([g[:, k, l] for k, l in pairs], axis=1)
    if curvature > 0:
        return np.arccos(np.clip(dots, -1.0, 1.0))
    return np.arccosh(np.maximum(-dots, 1.0))


def _path_integrand(path: _ScalingPath, h: float = FD_PATH_STEP) -> Callable[[np.ndarray], np.ndarray]:
    def f(svals: np.ndarray) -> np.ndarray:
        svals = np.asarray(svals, dtype=float)
        out = np.zeros_like(svals)
        live = svals > 0.0
        if np.any(live):
            s = svals[live]
            th_plus = _batch_slot_angles(path.vertex_matrices(s + h), path.curvature)
            th_minus = _batch_slot_angles(path.vertex_matrices(s - h), path.curvature)
            ell = _batch_slot_lengths(path.vertex_matrices(s), path.curvature)
            dth = (th_plus - th_minus) / (2.0 * h)
            out[live] = (ell * dth).sum(axis=1) / (2.0 * path.curvature)
        return out

    return f


def adaptive_simpson(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float,
    min_interval: float = 1e-5,
) -> tuple[float, float]:
    """Adaptive Simpson quadrature with batched evaluations.

    Pending intervals are refined in waves; every wave evaluates all quarter
    points in one call to f.  Returns (integral, error_estimate) where the
    error estimate accumulates the per-interval Richardson residuals.
    """
    span = b - a
    xs = np.array([a, 0.5 * (a + b), b])
    fa, fm, fb = f(xs)
    stack = [(a, b, fa, fm, fb, span / 6.0 * (fa + 4.0 * fm + fb))]
    total = 0.0
    err = 0.0
    while stack:
        mids = []
        for (ia, ib, *_rest) in stack:
            mids.append(0.25 * (3 * ia + ib))
            mids.append(0.25 * (ia + 3 * ib))
        fmids = f(np.array(mids))
        nxt = []
        for idx, (ia, ib, va, vm, vb, s_whole) in enumerate(stack):
            flm = fmids[2 * idx]
            frm = fmids[2 * idx + 1]
            im = 0.5 * (ia + ib)
            s_left = (im - ia) / 6.0 * (va + 4.0 * flm + vm)
            s_right = (ib - im) / 6.0 * (vm + 4.0 * frm + vb)
            delta = s_left + s_right - s_whole
            if abs(delta) <= 15.0 * tol * (ib - ia) / span or (ib - ia) <= min_interval:
                total += s_left + s_right + delta / 15.0
                err += abs(delta) / 15.0
            else:
                nxt.append((ia, im, va, flm, vm, s_left))
                nxt.append((im, ib, vm, frm, vb, s_right))
        stack = nxt
    return total, err


def volume_tetra(theta, curvature: int, quadrature_tol: float = 1e-8) -> VolumeEstimate:
    """Volume of the compact tetrahedron with the given dihedral angles.

    Reconstructs vertices from the angle Gram matrix, forms the scaling path
    s in [0, 1], and integrates (1/2K) sum_e length_e(s) * dtheta_e/ds with
    adaptive Simpson quadrature; the path starts at a point, so V(0) = 0
    anchors the constant of integration.
    """
    g = gram.gram_from_angles(theta)
    cls = gram.classify(g)
    _require_compact(cls, curvature)
    w = gram.vertices_from_gram(g)
    path = _ScalingPath(w, curvature)
    value, err = adaptive_simpson(_path_integrand(path), 0.0, 1.0, quadrature_tol)
    return VolumeEstimate(
        value=value,
        error_bound=max(err, quadrature_tol),
        method="schlafli_path",
        curvature=curvature,
    )


# ---------------------------------------------------------------------------
# Monte Carlo oracle
# ---------------------------------------------------------------------------

def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[np.uint64(seed), np.uint64(block)]))


def mc_spherical_region_volume(normals: np.ndarray, samples: int, seed: int) -> VolumeEstimate:
    """Volume of {x in S^3 : <x, n_i> >= 0 for all i} by uniform sphere sampling.

    With an empty constraint list this returns the full sphere volume 2 pi^2
    exactly (normalization sanity check).
    """
    if samples <= 0:
        raise ValueError("sample count must be positive")
    normals = np.asarray(normals, dtype=float).reshape(-1, 4)
    full = 2.0 * np.pi**2
    hits = 0
    done = 0
    block = 0
    while done < samples:
        m = min(MC_BLOCK, samples - done)
        x = _block_rng(seed, block).standard_normal((m, 4))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        if normals.size:
            inside = np.all(x @ normals.T >= 0.0, axis=1)
            hits += int(inside.sum())
        else:
            hits += m
        done += m
        block += 1
    p = hits / samples
    sigma = full * np.sqrt(max(p * (1.0 - p), 0.0) / samples)
    return VolumeEstimate(full * p, 3.0 * sigma, "monte_carlo", +1)


def _klein_columns(w: np.ndarray) -> np.ndarray:
    cols = np.asarray(w, dtype=float)
    if np.any(np.abs(cols[0]) < 1e-300):
        raise ValueError("vertex with vanishing first coordinate cannot be charted")
    return (cols[1:] / cols[0]).T


def _klein_face_normals(u: np.ndarray, interior: np.ndarray) -> np.ndarray:
    """Inward hyperboloid-side facet normals of the chord tetrahedron.

    Works from homogeneous lifts (1, u), so ideal vertices (|u| = 1) are fine.
    """
    lifts = np.concatenate([np.ones((4, 1)), u], axis=1)
    signs = minkowski_signs(4)
    normals = []
    for i in range(4):
        rows = np.delete(lifts, i, axis=0) * signs[None, :]
        rows = rows / np.linalg.norm(rows, axis=1, keepdims=True)
        _, sing, vt = np.linalg.svd(rows)
        if sing[-1] > 1e-9 * sing[0]:
            n = vt[-1]
        else:
            raise ValueError("degenerate face in Monte Carlo target")
        q = float(np.einsum("i,i,i->", n, signs, n))
        if q <= 0:
            raise ValueError("face normal is not spacelike")
        n = n / np.sqrt(q)
        if float(np.einsum("i,i,i->", interior, signs, n)) < 0:
            n = -n
        normals.append(n)
    return np.stack(normals)


def mc_volume_hyperbolic_box(w: np.ndarray, samples: int, seed: int) -> VolumeEstimate:
    """Klein-chart rejection estimator for a compact hyperbolic tetrahedron.

    Uniform samples in the bounding box of the Klein images are accepted
    inside the chord tetrahedron and weighted by the hyperbolic volume
    density (1 - |u|^2)^{-2}.
    """
    if samples <= 0:
        raise ValueError("sample count must be positive")
    u = _klein_columns(w)
    if np.any(np.sum(u * u, axis=1) >= 1.0 - 1e-12):
        raise ValueError("vertex on or outside the Klein ball: use the truncated oracle")
    lo = u.min(axis=0)
    hi = u.max(axis=0)
    vol_box = float(np.prod(hi - lo))
    t_inv = np.linalg.inv((u[:3] - u[3]).T)
    sum_w = 0.0
    sum_w2 = 0.0
    done = 0
    block = 0
    while done < samples:
        m = min(MC_BLOCK, samples - done)
        pts = _block_rng(seed, block).uniform(lo, hi, (m, 3))
        lam = (pts - u[3]) @ t_inv.T
        inside = np.all(lam >= 0.0, axis=1) & (lam.sum(axis=1) <= 1.0)
        r2 = np.sum(pts * pts, axis=1)
        wgt = np.where(inside, (1.0 - r2) ** -2, 0.0)
        sum_w += float(wgt.sum())
        sum_w2 += float((wgt * wgt).sum())
        done += m
        block += 1
    mean = sum_w / samples
    var = max(sum_w2 / samples - mean * mean, 0.0)
    sigma = vol_box * np.sqrt(var / samples)
    return VolumeEstimate(vol_box * mean, 3.0 * sigma, "monte_carlo", -1)


def _shell_radius_from_volume(y: np.ndarray) -> np.ndarray:
    """Invert the hyperbolic ball volume V(r) = pi (sinh(2r) - 2r) (vectorized Newton)."""
    r = np.cbrt(np.maximum(y, 1e-300) * 3.0 / (4.0 * np.pi))
    r = np.maximum(r, 1e-8)
    for _ in range(80):
        val = np.pi * (np.sinh(2.0 * r) - 2.0 * r) - y
        der = 4.0 * np.pi * np.sinh(r) ** 2
        step = val / np.maximum(der, 1e-300)
        r = np.maximum(r - step, 1e-12)
        if np.max(np.abs(step)) < 1e-14:
            break
    return r


def mc_volume_hyperbolic_truncated(
    w: np.ndarray,
    samples: int,
    seed: int,
    radius: float = TRUNCATION_RADIUS,
) -> VolumeEstimate:
    """Truncated oracle for (near-)ideal tetrahedra.

    Estimates vol(simplex intersect B(barycenter, radius)) by stratified
    shells: each unit-width shell is sampled uniformly in the hyperbolic
    measure (uniform direction, radius from the sinh^2 density), so weights
    stay bounded where the plain Klein-density estimator has divergent
    second moment.  The clipped cusp tail is estimated from the outermost
    shell mass via the exp(-2r) decay of cusp cross-sections and reported
    inside the error bound.
    """
    if samples <= 0:
        raise ValueError("sample count must be positive")
    u = _klein_columns(w)
    if np.any(np.sum(u * u, axis=1) > 1.0 + 1e-12):
        raise ValueError("vertex strictly outside the closed Klein ball")
    center_u = u.mean(axis=0)
    center = np.concatenate([[1.0], center_u]) / np.sqrt(1.0 - center_u @ center_u)
    normals = _klein_face_normals(u, center)
    frame = _tangent_frame4(center)
    signs = minkowski_signs(4)

    n_shells = int(np.ceil(radius))
    edges = np.linspace(0.0, radius, n_shells + 1)
    vols = np.pi * (np.sinh(2.0 * edges) - 2.0 * edges)
    per_shell = samples // n_shells
    if per_shell == 0:
        raise ValueError(f"need at least {n_shells} samples for {n_shells} shells")
    value = 0.0
    var = 0.0
    masses = []
    for k in range(n_shells):
        shell_vol = vols[k + 1] - vols[k]
        hits = 0
        done = 0
        block = 0
        while done < per_shell:
            m = min(MC_BLOCK, per_shell - done)
            rng = _block_rng(seed, (k << 32) | block)
            direction = rng.standard_normal((m, 3))
            direction /= np.linalg.norm(direction, axis=1, keepdims=True)
            y = rng.uniform(vols[k], vols[k + 1], m)
            r = _shell_radius_from_volume(y)
            tangent = direction @ frame.T
            pts = np.cosh(r)[:, None] * center[None, :] + np.sinh(r)[:, None] * tangent
            side = np.einsum("mi,i,ni->mn", pts, signs, normals)
            hits += int(np.all(side >= 0.0, axis=1).sum())
            done += m
            block += 1
        p = hits / per_shell
        masses.append(shell_vol * p)
        value += shell_vol * p
        var += shell_vol**2 * p * (1.0 - p) / per_shell
    decay = np.exp(-2.0)
    tail = masses[-1] * decay / (1.0 - decay)
    return VolumeEstimate(value, 3.0 * np.sqrt(var) + tail, "monte_carlo", -1)


def _tangent_frame4(p: np.ndarray) -> np.ndarray:
    """Columns: orthonormal spacelike tangent basis at a hyperboloid point."""
    signs = minkowski_signs(4)
    basis = [p / np.sqrt(-float(np.einsum("i,i,i->", p, signs, p)))]
    cols = []
    for i in range(4):
        v = np.zeros(4)
        v[i] = 1.0
        for b in basis:
            bb = float(np.einsum("i,i,i->", b, signs, b))
            v = v - (float(np.einsum("i,i,i->", v, signs, b)) / bb) * b
        q = float(np.einsum("i,i,i->", v, signs, v))
        if q > 1e-12:
            v = v / np.sqrt(q)
            basis.append(v)
            cols.append(v)
        if len(cols) == 3:
            break
    return np.stack(cols, axis=1)


def mc_volume_oracle(
    w,
    curvature: int,
    samples: int,
    seed: int,
    truncate: bool = False,
) -> VolumeEstimate:
    """Monte Carlo volume of the simplex with vertex columns w.

    K = +1: uniform samples on S^3 accepted inside all facet half-spaces.
    K = -1: Klein bounding-box rejection with the (1-|u|^2)^{-2} density;
    with truncate=True the domain is clipped at hyperbolic distance 10 from
    the barycenter (stratified shells), which admits ideal vertices.
    Deterministic for a fixed seed: samples are drawn in fixed-size blocks
    with per-block counter-based keys and reduced in index order.
    """
    w = np.asarray(w, dtype=float)
    if curvature > 0:
        normals = gram.simplex_normals(w, +1)
        return mc_spherical_region_volume(normals.T, samples, seed)
    if truncate:
        return mc_volume_hyperbolic_truncated(w, samples, seed)
    return mc_volume_hyperbolic_box(w, samples, seed)


# ---------------------------------------------------------------------------
# regularity probe and ideal-limit extrapolation
# ---------------------------------------------------------------------------

def holder_probe(thetas: Iterable, curvature: int, quadrature_tol: float = 1e-8) -> list[ProbeRow]:
    """Boundary margin, volume, and gradient norm along a family of angles.

    Every sample must classify as compact; the failing step index is reported
    otherwise.  The emitted rows feed the regularity fits (gradient growth
    against the logarithm of the boundary margin).
    """
    rows = []
    for k, theta in enumerate(thetas):
        g = gram.gram_from_angles(theta)
        cls = gram.classify(g)
        try:
            _require_compact(cls, curvature)
        except ValueError as exc:
            raise ValueError(f"family left the compact class at step {k}: {exc}") from exc
        margin = gram.boundary_margin(theta)
        vol = volume_tetra(theta, curvature, quadrature_tol).value
        grad = schlafli_gradient(theta, curvature)
        rows.append(ProbeRow(margin, vol, float(np.linalg.norm(grad))))
    return rows


def regular_ideal_nodes(count: int = 8, base: float = 0.05) -> np.ndarray:
    """Angles pi/3 + base * 2^{-k}, k = 1..count, marching toward the ideal corner."""
    k = np.arange(1, count + 1)
    return np.pi / 3.0 + base * 0.5**k


def extrapolate_ideal_limit(deltas, volumes) -> float:
    """Limit of V(pi/3 + delta) as delta -> 0.

    The gradient grows like |log(margin)| near the ideal corner, so the
    volume deficit behaves like a*delta + b*delta*log(delta); fitting that
    model linearly and reading off the constant term extrapolates the limit.
    """
    d = np.asarray(deltas, dtype=float)
    v = np.asarray(volumes, dtype=float)
    basis = np.stack([np.ones_like(d), d, d * np.log(d)], axis=1)
    coef, *_ = np.linalg.lstsq(basis, v, rcond=None)
    return float(coef[0])


def ideal_regular_vertex_matrix() -> np.ndarray:
    """Homogeneous vertex columns of the regular ideal tetrahedron.

    Klein images sit at the four vertices of a regular tetrahedron inscribed
    in the unit sphere; the columns are null rays (1, u_i).
    """
    dirs = np.array(
        [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]]
    ) / np.sqrt(3.0)
    return np.concatenate([np.ones((4, 1)), dirs], axis=1).T
