"""Slow, independent reference implementations used only by the tests.

Nothing here imports the code under test; each oracle is the most literal
rendering of its definition (double loops, enumeration, Jacobi sweeps,
finite differences).
"""

from __future__ import annotations

import functools
import itertools
import math

import numpy as np


def sqdist(a, b) -> float:
    return sum((float(x) - float(y)) ** 2 for x, y in zip(a, b))


def sort_by_comparator(points) -> list[int]:
    def cmp(i, j):
        a, b = tuple(points[i]), tuple(points[j])
        if a != b:
            return -1 if a < b else 1
        return -1 if i < j else (1 if i > j else 0)

    return sorted(range(len(points)), key=functools.cmp_to_key(cmp))


def fps_bruteforce(points, count: int) -> list[int]:
    """Recompute min distances from scratch at every step; ties go to the
    point that is earliest in lexicographic (then index) order."""
    rank = {idx: r for r, idx in enumerate(sort_by_comparator(points))}
    chosen = [min(range(len(points)), key=lambda i: rank[i])]
    while len(chosen) < count:
        best, best_key = None, None
        for i in range(len(points)):
            if i in chosen:
                continue
            d = min(sqdist(points[i], points[j]) for j in chosen)
            key = (-d, rank[i])
            if best_key is None or key < best_key:
                best, best_key = i, key
        chosen.append(best)
    return chosen


def knn_bruteforce(cloud, queries, k: int) -> np.ndarray:
    out = []
    for q in queries:
        d = [(sqdist(q, p), i) for i, p in enumerate(cloud)]
        d.sort()
        out.append([i for _, i in d[:k]])
    return np.array(out, dtype=np.int64)


def nn_dists_bruteforce(a, b) -> np.ndarray:
    return np.array([math.sqrt(min(sqdist(p, q) for q in b)) for p in a])


def ball_bruteforce(cloud, seed, radius: float) -> list[int]:
    return [i for i, p in enumerate(cloud) if math.sqrt(sqdist(p, seed)) <= radius]


def jacobi_eigh(a, sweeps: int = 50) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigen-solver; eigenvalues descending, vectors as columns."""
    a = np.array(a, dtype=np.float64)
    n = len(a)
    v = np.eye(n)
    for _ in range(sweeps):
        off = sum(a[i, j] ** 2 for i in range(n) for j in range(n) if i != j)
        if off < 1e-30 * max(1.0, float(np.sum(a * a))):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p, q] == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                v = v @ rot
    vals = np.diag(a).copy()
    order = np.argsort(-vals)
    return vals[order], v[:, order]


def pca_sort_oracle(points) -> list[int]:
    """Jacobi eigenvectors, skewness-positive orientation, comparator sort."""
    pts = np.asarray(points, dtype=np.float64)
    c = pts - pts.mean(axis=0)
    cov = c.T @ c / (len(pts) - 1)
    _, vecs = jacobi_eigh(cov)
    q = c @ vecs
    for j in range(3):
        if np.sum(q[:, j] ** 3) < 0:
            q[:, j] = -q[:, j]
    keys = [(tuple(q[i]), i) for i in range(len(pts))]
    return [i for _, i in sorted(keys)]


def emd_enumerate(p, g) -> float:
    n = len(p)
    best = math.inf
    for perm in itertools.permutations(range(n)):
        cost = sum(math.sqrt(sqdist(p[i], g[perm[i]])) for i in range(n))
        best = min(best, cost)
    return best / n


def chamfer_double_loop(p, g) -> dict:
    d_pg = nn_dists_bruteforce(p, g)
    d_gp = nn_dists_bruteforce(g, p)
    return {
        "cd_l": float(np.mean(d_pg)),
        "cd_g": float(np.mean(d_gp)),
        "cd_l1": float((np.mean(d_pg) + np.mean(d_gp)) / 2),
        "cd_l2": float(np.mean(d_pg**2) + np.mean(d_gp**2)),
    }


def dcd_oracle(p, g, alpha: float) -> float:
    def one_way(a, b):
        nn = []
        for x in a:
            d = [(sqdist(x, y), j) for j, y in enumerate(b)]
            nn.append(min(d))
        counts = {}
        for _, j in nn:
            counts[j] = counts.get(j, 0) + 1
        return sum(1.0 - math.exp(-alpha * d) / counts[j] for d, j in nn) / len(a)

    return 0.5 * (one_way(p, g) + one_way(g, p))


def central_difference(f, x: np.ndarray, h: float = 1e-4) -> np.ndarray:
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        up = f()
        flat[i] = orig - h
        down = f()
        flat[i] = orig
        gflat[i] = (up - down) / (2.0 * h)
    return grad


def scan_unrolled(a_bar, bx, c, d_skip, x) -> list[float]:
    """Scalar recurrence h_t = a_t h_{t-1} + bx_t, y_t = c_t h_t + D x_t."""
    h = 0.0
    out = []
    for t in range(len(bx)):
        h = a_bar[t] * h + bx[t]
        out.append(c[t] * h + d_skip * x[t])
    return out
