"""PCA-guided ordering of a point cloud and its interleaved decomposition.

The cloud is centred, its 3x3 covariance (``1/(N-1)`` normalisation) is
diagonalised, points are sorted lexicographically by their projections on
the principal axes (largest eigenvalue first) and the sorted sequence is
dealt out round-robin into ``U`` subsets.

Indexing is 0-based: subset ``u`` holds the sorted positions
``u, u + U, u + 2U, ...``. With 1-based positions ``j`` this is the set
``{j : (j - 1) mod U == u}``, so subsets come out in the order a reader
interleaving the sorted list by hand would write them.

Eigenvector signs are not determined by the eigen-problem, yet the sort
order depends on them. Each axis is oriented by, in turn:

1. positive skewness ``sum(q**3)`` of the projections on it;
2. if ``|sum(q**3)| < 1e-12 * scale**3`` (scale = largest distance of a
   point from the centroid): ``max(q) >= |min(q)|``;
3. otherwise the solver's own output is kept (the solver normalises each
   eigenvector so its largest-magnitude component is positive).

All three rules look only at projections, so a rigid motion of the cloud
leaves the projections, and hence the order, unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from pointfill.geometry import as_cloud
from pointfill.rng import Xoshiro256

DEGENERATE_RTOL = 1e-9
SKEW_RTOL = 1e-12

STRATEGIES = ("pca_uniform", "random")


@dataclass(frozen=True)
class PcaFrame:
    centroid: np.ndarray  # (3,)
    eigvecs: np.ndarray  # (3, 3), columns are axes, descending eigenvalue
    eigvals: np.ndarray  # (3,), descending, clipped at 0
    sign_rule_applied: tuple[str, str, str]  # "skew" | "extent" | "solver" per axis
    degenerate: bool = False


@dataclass(frozen=True)
class Decomposition:
    sorted_perm: np.ndarray
    subsets: list[np.ndarray]
    subset_indices: list[np.ndarray] = field(repr=False)
    strategy: str = "pca_uniform"


def _char_poly(a: np.ndarray, lam: float) -> tuple[float, float]:
    """det(A - lam I) and its derivative in lam."""
    b00, b11, b22 = a[0, 0] - lam, a[1, 1] - lam, a[2, 2] - lam
    a01, a02, a12 = a[0, 1], a[0, 2], a[1, 2]
    det = b00 * (b11 * b22 - a12 * a12) - a01 * (a01 * b22 - a12 * a02) + a02 * (a01 * a12 - b11 * a02)
    # d/dlam det = -(sum of principal 2x2 minors)
    deriv = -((b11 * b22 - a12 * a12) + (b00 * b22 - a02 * a02) + (b00 * b11 - a01 * a01))
    return det, deriv


def _eigvals_sym3(a: np.ndarray) -> np.ndarray:
    """Eigenvalues of a symmetric 3x3 matrix, descending.

    Trigonometric solution of the characteristic cubic followed by one
    Newton step per root.
    """
    q = np.trace(a) / 3.0
    p1 = a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2
    p2 = (a[0, 0] - q) ** 2 + (a[1, 1] - q) ** 2 + (a[2, 2] - q) ** 2 + 2.0 * p1
    if p2 <= 0.0:
        return np.array([q, q, q])
    p = math.sqrt(p2 / 6.0)
    b = (a - q * np.eye(3)) / p
    r = float(np.linalg.det(b)) / 2.0
    r = min(1.0, max(-1.0, r))
    phi = math.acos(r) / 3.0
    l1 = q + 2.0 * p * math.cos(phi)
    l3 = q + 2.0 * p * math.cos(phi + 2.0 * math.pi / 3.0)
    l2 = 3.0 * q - l1 - l3
    roots = []
    for lam in (l1, l2, l3):
        f, df = _char_poly(a, lam)
        if df != 0.0:
            step = f / df
            # Newton near a double root can overshoot; accept only small steps
            if abs(step) <= 1e-6 * (abs(lam) + p):
                lam -= step
        roots.append(lam)
    return np.sort(np.array(roots))[::-1]


def _null_vector(m: np.ndarray) -> np.ndarray | None:
    """Unit vector spanning the null space of a rank-2 symmetric 3x3 matrix,
    taken as the largest cross product of two rows."""
    c = [np.cross(m[0], m[1]), np.cross(m[0], m[2]), np.cross(m[1], m[2])]
    norms = [float(np.dot(v, v)) for v in c]
    best = int(np.argmax(norms))
    if norms[best] <= 0.0:
        return None
    return c[best] / math.sqrt(norms[best])


def _any_orthonormal(v: np.ndarray) -> np.ndarray:
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(v)))] = 1.0
    w = np.cross(v, axis)
    return w / np.linalg.norm(w)


def _canon_sign(v: np.ndarray) -> np.ndarray:
    # Solver convention: largest-magnitude component positive.
    k = int(np.argmax(np.abs(v)))
    return -v if v[k] < 0 else v


def eigh_sym3(a) -> tuple[np.ndarray, np.ndarray, bool]:
    """Closed-form eigen-decomposition of a symmetric 3x3 matrix.

    Returns ``(eigvals desc, eigvecs as columns, degenerate)``.

    The cubic's roots are accurate only to ``sqrt(eps)`` near a double
    root, so they are used just to find the best isolated eigenvector.
    The orthogonal 2x2 block is then diagonalised with a single exact
    rotation and every eigenvalue is taken as a Rayleigh quotient. For
    repeated eigenvalues (within ``DEGENERATE_RTOL`` of the spectral
    scale) any orthonormal basis of the shared eigenspace is returned.
    """
    a = np.asarray(a, dtype=np.float64)
    a = 0.5 * (a + a.T)
    lam = _eigvals_sym3(a)
    scale = max(abs(lam[0]), abs(lam[2]), 1e-300)
    if lam[0] - lam[2] <= DEGENERATE_RTOL * scale:
        return np.array([np.trace(a) / 3.0] * 3), np.eye(3), True
    iso = 0 if lam[0] - lam[1] >= lam[1] - lam[2] else 2
    v = _null_vector(a - lam[iso] * np.eye(3))
    if v is None:
        return lam, np.eye(3), True
    w1 = _any_orthonormal(v)
    w2 = np.cross(v, w1)
    b00 = w1 @ a @ w1
    b11 = w2 @ a @ w2
    b01 = w1 @ a @ w2
    theta = 0.5 * math.atan2(2.0 * b01, b00 - b11)
    c, s = math.cos(theta), math.sin(theta)
    e1 = c * w1 + s * w2
    e2 = -s * w1 + c * w2
    vecs = [v, e1, e2]
    vals = np.array([u @ a @ u for u in vecs])
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    cols = np.column_stack([_canon_sign(vecs[i]) for i in order])
    scale = max(abs(vals[0]), abs(vals[2]), 1e-300)
    degenerate = bool(
        vals[0] - vals[1] <= DEGENERATE_RTOL * scale or vals[1] - vals[2] <= DEGENERATE_RTOL * scale
    )
    return vals, cols, degenerate


def orient_axes(centered: np.ndarray, vecs: np.ndarray) -> tuple[np.ndarray, tuple[str, str, str]]:
    """Apply the projection-based sign rule to each column of ``vecs``."""
    vecs = vecs.copy()
    radius = float(np.sqrt((centered * centered).sum(axis=1)).max()) if len(centered) else 0.0
    skew_tol = SKEW_RTOL * radius**3
    rules = []
    for j in range(3):
        q = centered @ vecs[:, j]
        skew = float(np.sum(q * q * q))
        if abs(skew) >= skew_tol and skew != 0.0:
            rule = "skew"
            flip = skew < 0
        else:
            hi, lo = float(q.max()), float(-q.min())
            if hi != lo:
                rule = "extent"
                flip = lo > hi
            else:
                rule = "solver"
                flip = False
        if flip:
            vecs[:, j] = -vecs[:, j]
        rules.append(rule)
    return vecs, (rules[0], rules[1], rules[2])


def pca_axes(cloud) -> PcaFrame:
    """Centroid, principal axes and variances of a cloud with a fixed sign rule."""
    pts = as_cloud(cloud)
    n = len(pts)
    mu = pts.mean(axis=0)
    centered = pts - mu
    if n == 1:
        return PcaFrame(mu, np.eye(3), np.zeros(3), ("solver", "solver", "solver"), True)
    cov = centered.T @ centered / (n - 1)
    lam, vecs, degenerate = eigh_sym3(cov)
    vecs, rules = orient_axes(centered, vecs)
    return PcaFrame(mu, vecs, np.clip(lam, 0.0, None), rules, degenerate)


def project(cloud, frame: PcaFrame | None = None) -> np.ndarray:
    """Coordinates of each point in the principal frame, shape (N, 3)."""
    pts = as_cloud(cloud)
    frame = frame or pca_axes(pts)
    return (pts - frame.centroid) @ frame.eigvecs


def pca_sort(cloud) -> np.ndarray:
    """Permutation sorting points by (q1, q2, q3), exact ties by index."""
    q = project(cloud)
    idx = np.arange(len(q))
    return np.lexsort((idx, q[:, 2], q[:, 1], q[:, 0]))


def interleave(n: int, U: int) -> list[np.ndarray]:
    """Sorted positions belonging to each of the ``U`` subsets."""
    return [np.arange(u, n, U, dtype=np.int64) for u in range(U)]


def decompose(cloud, U: int, strategy: str = "pca_uniform", seed: int = 0) -> Decomposition:
    """Split a cloud into ``U`` balanced subsets.

    ``pca_uniform`` interleaves the PCA-sorted order; ``random`` interleaves a
    seeded Fisher-Yates shuffle (xoshiro256**), the ablation baseline.
    """
    pts = as_cloud(cloud)
    U = int(U)
    if U <= 0:
        raise ValueError("U must be >= 1")
    if U > len(pts):
        raise ValueError(f"U={U} larger than cloud size {len(pts)}")
    if strategy in ("pca", "pca_uniform"):
        perm = pca_sort(pts)
        strategy = "pca_uniform"
    elif strategy == "random":
        perm = Xoshiro256(seed).permutation(len(pts))
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    positions = interleave(len(pts), U)
    indices = [perm[p] for p in positions]
    return Decomposition(
        sorted_perm=perm,
        subsets=[pts[i] for i in indices],
        subset_indices=indices,
        strategy=strategy,
    )
