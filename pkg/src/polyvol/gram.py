"""Angle Gram matrices of constant-curvature simplices.

An n-simplex in S^n or H^n is encoded by its dihedral angles theta_ij
(between the i-th and j-th facets) through the symmetric matrix

    G_ii = 1,    G_ij = -cos(theta_ij).

The spectrum and the cofactors of G decide which geometry (if any) realizes
the angles: positive definite means spherical, signature (n, 1) with positive
cofactors means a compact hyperbolic simplex, vanishing diagonal cofactors
mark ideal vertices, and a single zero eigenvalue with positive diagonal
cofactors is the Euclidean wall of the angle domain.  Vertices are recovered
from a factorization G = S^t J S (J the ambient form) via the dual relation
S^t J W = I, and edge lengths come from cosh d(v_i, v_j) = c_ij / sqrt(c_ii c_jj)
with c_ij the cofactors of G.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations

import numpy as np

from .lorentz import minkowski_signs

EIGEN_ZERO_TOL = 1e-10     # |lambda| below this counts as a zero eigenvalue
EIGEN_RANK_TOL = 1e-8      # second-smallest eigenvalue must clear this at the Euclidean wall
IDEAL_COFACTOR_RTOL = 1e-9  # |c_ii| < rtol * max_j |c_jj| marks an ideal vertex


class SimplexKind(Enum):
    SPHERICAL = "spherical"
    HYPERBOLIC_COMPACT = "hyperbolic_compact"
    HYPERBOLIC_IDEAL = "hyperbolic_ideal"
    EUCLIDEAN_BOUNDARY = "euclidean_boundary"
    INADMISSIBLE = "inadmissible"


@dataclass(frozen=True)
class SimplexClass:
    kind: SimplexKind
    ideal_vertices: tuple[int, ...] = field(default=())

    @property
    def is_compact(self) -> bool:
        return self.kind in (SimplexKind.SPHERICAL, SimplexKind.HYPERBOLIC_COMPACT)

    @property
    def curvature(self) -> int | None:
        if self.kind == SimplexKind.SPHERICAL:
            return +1
        if self.kind in (SimplexKind.HYPERBOLIC_COMPACT, SimplexKind.HYPERBOLIC_IDEAL):
            return -1
        return None


def angle_pairs(n: int) -> list[tuple[int, int]]:
    """Facet-pair order of the flat angle vector: (0,1), (0,2), ..., (n-1,n)."""
    return list(combinations(range(n + 1), 2))


def opposite_pairs(n: int) -> list[tuple[int, int]]:
    """For each facet pair (i, j), the complementary vertex pair carrying the
    shared codimension-2 face.  Only defined for n = 3 (edges of a tetrahedron).
    """
    if n != 3:
        raise ValueError("opposite_pairs is specific to tetrahedra (n = 3)")
    out = []
    for i, j in angle_pairs(3):
        k, l = sorted(set(range(4)) - {i, j})
        out.append((k, l))
    return out


def dimension_from_angles(theta) -> int:
    m = len(np.atleast_1d(theta))
    n = int(round((np.sqrt(8 * m + 1) - 1) / 2))
    if n * (n + 1) // 2 != m:
        raise ValueError(f"{m} angles do not fill the upper triangle of any simplex")
    return n

def gram_from_angles(theta) -> np.ndarray:
    """Build G with unit diagonal and G_ij = -cos(theta_ij)."""
    theta = np.asarray(theta, dtype=float).ravel()
    if np.any(theta <= 0.0) or np.any(theta >= np.pi):
        raise ValueError("dihedral angles must lie strictly inside (0, pi)")
    n = dimension_from_angles(theta)
    g = np.eye(n + 1)
    for a, (i, j) in zip(theta, angle_pairs(n)):
        g[i, j] = g[j, i] = -np.cos(a)
    return g


def angles_from_gram(g) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    n = g.shape[0] - 1
    return np.array([np.arccos(np.clip(-g[i, j], -1.0, 1.0)) for i, j in angle_pairs(n)])


def cofactor_matrix(g) -> np.ndarray:
    """Matrix of cofactors c_ij of G (equal to the adjugate for symmetric G).

    Computed entry-by-entry from minors so that it stays meaningful when G is
    singular; satisfies G @ adj(G) = det(G) I.
    """
    g = np.asarray(g, dtype=float)
    m = g.shape[0]
    cof = np.empty((m, m))
    rows = np.arange(m)
    for i in range(m):
        ri = rows[rows != i]
        for j in range(i, m):
            rj = rows[rows != j]
            minor = g[np.ix_(ri, rj)]
            cof[i, j] = cof[j, i] = (-1.0) ** (i + j) * np.linalg.det(minor)
    return cof


def classify(g) -> SimplexClass:
    """Decide the geometry realized by an angle Gram matrix.

    Spherical         : G positive definite.
    HyperbolicCompact : signature (n, 1) and every cofactor positive.
    HyperbolicIdeal   : signature (n, 1), off-diagonal cofactors positive,
                        some diagonal cofactors zero (those vertices are ideal).
    EuclideanBoundary : one zero eigenvalue, rank n, positive diagonal cofactors.
    Inadmissible      : everything else.
    """
    g = np.asarray(g, dtype=float)
    lam = np.linalg.eigvalsh(g)
    if lam[0] >= EIGEN_ZERO_TOL:
        return SimplexClass(SimplexKind.SPHERICAL)
    cof = cofactor_matrix(g)
    diag = np.diag(cof)
    if abs(lam[0]) < EIGEN_ZERO_TOL:
        if lam[1] > EIGEN_RANK_TOL and np.all(diag > 0):
            return SimplexClass(SimplexKind.EUCLIDEAN_BOUNDARY)
        return SimplexClass(SimplexKind.INADMISSIBLE)
    # lam[0] < 0 from here on
    if lam[1] <= EIGEN_ZERO_TOL:
        return SimplexClass(SimplexKind.INADMISSIBLE)
    off = cof[~np.eye(g.shape[0], dtype=bool)]
    if np.any(off <= 0):
        return SimplexClass(SimplexKind.INADMISSIBLE)
    # scale over the whole cofactor matrix: a fully ideal simplex has every
    # diagonal cofactor near zero, so the diagonal alone cannot set the scale
    scale = np.max(np.abs(cof))
    ideal = np.abs(diag) < IDEAL_COFACTOR_RTOL * scale
    if np.any(diag < -IDEAL_COFACTOR_RTOL * scale):
        return SimplexClass(SimplexKind.INADMISSIBLE)
    if np.any(ideal):
        return SimplexClass(SimplexKind.HYPERBOLIC_IDEAL, tuple(np.nonzero(ideal)[0].tolist()))
    return SimplexClass(SimplexKind.HYPERBOLIC_COMPACT)


def _ambient_form(curvature: int, dim: int) -> np.ndarray:
    return np.ones(dim) if curvature > 0 else minkowski_signs(dim)


def vertices_from_gram(g) -> np.ndarray:
    """Reconstruct vertex columns W_s realizing the angle Gram matrix.

    Eigendecompose G, place the negative eigenvalue (if any) in the timelike
    slot so that S = |Lambda|^{1/2} Q^t satisfies S^t J S = G, then solve
    S^t J W = I and rescale columns to squared norm +1 (spherical) or -1 with
    positive first coordinates (hyperbolic).
    """
    g = np.asarray(g, dtype=float)
    cls = classify(g)
    if not cls.is_compact:
        raise ValueError(f"no compact realization: classification is {cls.kind.value}")
    lam, q = np.linalg.eigh(g)
    s = np.sqrt(np.abs(lam))[:, None] * q.T
    signs = _ambient_form(cls.curvature, g.shape[0])
    w = np.linalg.inv(s.T * signs[None, :])
    norms2 = np.einsum("ij,i,ij->j", w, signs, w)
    if cls.curvature > 0:
        if np.any(norms2 <= 0):
            raise ValueError("spherical reconstruction produced non-positive vertex norms")
        w = w / np.sqrt(norms2)
    else:
        if np.any(norms2 >= 0):
            raise ValueError("hyperbolic reconstruction produced non-timelike vertices")
        w = w / np.sqrt(-norms2)
        first = w[0, :]
        if np.all(first < 0):
            w = -w
        if np.any(w[0, :] <= 0):
            raise ValueError("reconstructed vertices do not lie on a single sheet")
    return w


def simplex_normals(w, curvature: int) -> np.ndarray:
    """Inward unit facet normals of a vertex matrix (normal i opposite vertex i)."""
    w = np.asarray(w, dtype=float)
    signs = _ambient_form(curvature, w.shape[0])
    n = signs[:, None] * np.linalg.inv(w).T
    norms2 = np.einsum("ij,i,ij->j", n, signs, n)
    if np.any(norms2 <= 0):
        raise ValueError("degenerate simplex: facet normals are not spacelike")
    return n / np.sqrt(norms2)


def angles_from_vertices(w, curvature: int | None = None) -> np.ndarray:
    """Dihedral angles of the simplex with vertex columns w.

    theta_ij = arccos(-<n_i, n_j>) with n_i the unit normal of the facet
    opposite vertex i.  The ambient form is inferred from the vertex norms
    when curvature is not given.
    """
    w = np.asarray(w, dtype=float)
    if curvature is None:
        mink = np.einsum("ij,i,ij->j", w, minkowski_signs(w.shape[0]), w)
        eucl = np.einsum("ij,ij->j", w, w)
        if np.all(np.abs(mink + 1.0) < 1e-6):
            curvature = -1
        elif np.all(np.abs(eucl - 1.0) < 1e-6):
            curvature = +1
        else:
            raise ValueError("cannot infer the ambient geometry from vertex norms")
    signs = _ambient_form(curvature, w.shape[0])
    n = simplex_normals(w, curvature)
    gram = n.T @ (signs[:, None] * n)
    m = w.shape[0] - 1
    return np.array([np.arccos(np.clip(-gram[i, j], -1.0, 1.0)) for i, j in angle_pairs(m)])


def edge_lengths(g) -> np.ndarray:
    """Pairwise vertex distances of the simplex realizing G.

    Hyperbolic compact case: cosh d_ij = c_ij / sqrt(c_ii c_jj) from the
    cofactors of G.  Spherical case: lengths are read off the reconstructed
    vertices, cos d_ij = <v_i, v_j>.
    """
    g = np.asarray(g, dtype=float)
    cls = classify(g)
    if cls.kind == SimplexKind.SPHERICAL:
        w = vertices_from_gram(g)
        dots = np.clip(w.T @ w, -1.0, 1.0)
        out = np.arccos(dots)
        np.fill_diagonal(out, 0.0)
        return out
    if cls.kind != SimplexKind.HYPERBOLIC_COMPACT:
        if cls.kind == SimplexKind.HYPERBOLIC_IDEAL:
            raise ValueError(f"ideal vertices {cls.ideal_vertices} have infinite incident edges")
        raise ValueError(f"no compact simplex to measure: classification is {cls.kind.value}")
    cof = cofactor_matrix(g)
    diag = np.diag(cof)
    bad = np.nonzero(diag <= 0)[0]
    if bad.size:
        raise ValueError(f"non-compact vertex (c_ii <= 0) at index {int(bad[0])}")
    ratio = cof / np.sqrt(np.outer(diag, diag))
    out = np.arccosh(np.maximum(ratio, 1.0))
    np.fill_diagonal(out, 0.0)
    return out


def boundary_margin(theta) -> float:
    """Distance proxy to the wall of the admissible angle domain.

    Spherical: smallest eigenvalue of G.  Hyperbolic: min(min_i c_ii, -det G).
    Positive inside the domain, decays to zero at its boundary.
    """
    g = gram_from_angles(theta)
    cls = classify(g)
    if cls.kind == SimplexKind.INADMISSIBLE:
        raise ValueError("inadmissible angles have no boundary margin")
    if cls.kind == SimplexKind.SPHERICAL:
        return float(np.linalg.eigvalsh(g)[0])
    cof = cofactor_matrix(g)
    return float(min(np.min(np.diag(cof)), -np.linalg.det(g)))


def regular_angles(theta: float, n: int = 3) -> np.ndarray:
    """Angle vector of the regular simplex family (all dihedral angles equal)."""
    return np.full(n * (n + 1) // 2, float(theta))


def regular_family_theta_at_margin(target: float, side: str = "euclidean") -> float:
    """Regular-tetrahedron angle whose boundary margin equals ``target``.

    side="euclidean" approaches arccos(1/3) from below, side="ideal"
    approaches pi/3 from above; bisection on the monotone margin.
    """
    lo = np.pi / 3 + 1e-12
    hi = np.arccos(1.0 / 3.0) - 1e-12
    mid_ref = 1.2
    if side == "euclidean":
        a, b = mid_ref, hi
    elif side == "ideal":
        a, b = mid_ref, lo
    else:
        raise ValueError("side must be 'euclidean' or 'ideal'")
    fa = boundary_margin(regular_angles(a)) - target
    for _ in range(200):
        m = 0.5 * (a + b)
        fm = boundary_margin(regular_angles(m)) - target
        if fa * fm <= 0:
            b = m
        else:
            a, fa = m, fm
        if abs(b - a) < 1e-15:
            break
    return 0.5 * (a + b)
