"""Point-set primitives: canonical order, FPS, k-NN, grouping, ball queries.

Point clouds are ``(N, 3)`` float64 arrays. Every tie between equal
distances is resolved deterministically so results never depend on the
search structure used.

Squared distances are always evaluated as ``dx*dx + dy*dy + dz*dz`` in that
order, in both the brute-force and the kd-tree path. The kd-tree only
proposes candidates; final distances and orderings come from the same
expression, which is what lets the accelerated path match the exhaustive
search index for index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from pointfill import parallel

# Above this many query*reference pairs the kd-tree path is used.
KD_TREE_MIN_PAIRS = 1 << 18
# Relative distance gap under which kd-tree candidates are re-resolved exactly.
_NEAR_TIE = 1e-9
_CHUNK_ELEMS = 1 << 21


def as_cloud(points, name: str = "cloud", allow_empty: bool = False) -> np.ndarray:
    """Validate and convert to a contiguous ``(N, 3)`` float64 array."""
    arr = np.ascontiguousarray(points, dtype=np.float64)
    if arr.ndim == 1 and arr.size == 0:
        arr = arr.reshape(0, 3)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"{name}: expected shape (N, 3), got {arr.shape}")
    if arr.shape[0] == 0 and not allow_empty:
        raise ValueError(f"{name}: empty input")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name}: non-finite coordinate")
    return arr


def sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared distances between rows of ``a`` (Q, 3) and ``b`` (R, 3) -> (Q, R)."""
    dx = a[:, None, 0] - b[None, :, 0]
    dy = a[:, None, 1] - b[None, :, 1]
    dz = a[:, None, 2] - b[None, :, 2]
    return dx * dx + dy * dy + dz * dz


def _sq_to_point(cloud: np.ndarray, p: np.ndarray) -> np.ndarray:
    dx = cloud[:, 0] - p[0]
    dy = cloud[:, 1] - p[1]
    dz = cloud[:, 2] - p[2]
    return dx * dx + dy * dy + dz * dz


def _query_chunks(n_queries: int, n_ref: int) -> list[slice]:
    step = max(1, _CHUNK_ELEMS // max(1, n_ref))
    return [slice(s, min(s + step, n_queries)) for s in range(0, n_queries, step)]


def canonical_sort(cloud) -> np.ndarray:
    """Permutation ordering points lexicographically by (x, y, z), stable."""
    pts = as_cloud(cloud)
    idx = np.arange(len(pts))
    return np.lexsort((idx, pts[:, 2], pts[:, 1], pts[:, 0]))


def fps(cloud, count: int) -> np.ndarray:
    """Farthest point sampling.

    Starts from the canonical-sort minimum. Each later pick maximises the
    minimum distance to the points chosen so far. Distance ties go to the
    point that comes first in canonical order (lexicographic coordinates,
    then original index), so the selected point sequence does not depend
    on how the input was permuted.
    """
    pts = as_cloud(cloud)
    n = len(pts)
    count = int(count)
    if count > n:
        raise ValueError("sample larger than population")
    if count < 1:
        raise ValueError("fps count must be >= 1")
    order = canonical_sort(pts)
    work = pts[order]
    selected = np.empty(count, dtype=np.int64)
    selected[0] = 0
    min_d = _sq_to_point(work, work[0])
    for i in range(1, count):
        # argmax returns the first maximum, i.e. the smallest canonical rank
        nxt = int(np.argmax(min_d))
        selected[i] = nxt
        np.minimum(min_d, _sq_to_point(work, work[nxt]), out=min_d)
    return order[selected]


def _knn_brute(ref: np.ndarray, queries: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    def block(sl: slice):
        d = sq_dists(queries[sl], ref)
        # stable sort keeps equal distances in index order
        idx = np.argsort(d, axis=1, kind="stable")[:, :k]
        return idx, np.take_along_axis(d, idx, axis=1)

    parts = parallel.map_ordered(block, _query_chunks(len(queries), len(ref)))
    return (np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]))


def _knn_kdtree(ref: np.ndarray, queries: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    kq = min(k + 1, len(ref))
    tree = cKDTree(ref)
    _, cand = tree.query(queries, k=kq, workers=parallel.thread_count())
    cand = np.asarray(cand, dtype=np.int64).reshape(len(queries), kq)
    diff = ref[cand] - queries[:, None, :]
    d = diff[..., 0] * diff[..., 0] + diff[..., 1] * diff[..., 1] + diff[..., 2] * diff[..., 2]
    order = np.lexsort((cand, d), axis=1)
    cand = np.take_along_axis(cand, order, axis=1)
    d = np.take_along_axis(d, order, axis=1)
    # Any near-tie among the candidates (including the first excluded one)
    # could be ordered differently by the exhaustive rule: redo those rows.
    gaps = np.diff(d, axis=1)
    tol = _NEAR_TIE * np.maximum(d[:, 1:], 1e-300)
    redo = np.nonzero((gaps <= tol).any(axis=1))[0]
    idx = cand[:, :k].copy()
    dist = d[:, :k].copy()
    if len(redo):
        ridx, rd = _knn_brute(ref, queries[redo], k)
        idx[redo] = ridx
        dist[redo] = rd
    return idx, dist


def knn_with_dists(cloud, queries, k: int, method: str = "auto") -> tuple[np.ndarray, np.ndarray]:
    """k nearest cloud points per query: ``(indices, squared distances)``.

    Rows are sorted by distance, then by index. ``method`` is ``"brute"``,
    ``"kdtree"`` or ``"auto"``; all three return identical results.
    """
    ref = as_cloud(cloud)
    qs = as_cloud(queries, name="queries")
    k = int(k)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > len(ref):
        raise ValueError(f"k={k} larger than cloud size {len(ref)}")
    if method == "auto":
        method = "kdtree" if len(ref) * len(qs) >= KD_TREE_MIN_PAIRS and k < len(ref) else "brute"
    if method == "brute":
        return _knn_brute(ref, qs, k)
    if method == "kdtree":
        return _knn_kdtree(ref, qs, k)
    raise ValueError(f"unknown knn method {method!r}")


def knn(cloud, queries, k: int, method: str = "auto") -> np.ndarray:
    """Index matrix ``(Q, k)`` of nearest neighbours (see :func:`knn_with_dists`)."""
    return knn_with_dists(cloud, queries, k, method)[0]


def nearest(a, b, method: str = "auto") -> tuple[np.ndarray, np.ndarray]:
    """For each point of ``a``: index of its nearest point in ``b`` and the
    (non-squared) distance. Ties go to the lower index in ``b``."""
    b = as_cloud(b, name="B")
    a = as_cloud(a, name="A")
    idx, d2 = knn_with_dists(b, a, 1, method)
    return idx[:, 0], np.sqrt(d2[:, 0])


def directed_nn_dists(a, b) -> np.ndarray:
    """Distance from every point of ``a`` to its nearest neighbour in ``b``."""
    return nearest(a, b)[1]


@dataclass(frozen=True)
class GroupedPatches:
    centers: np.ndarray  # (G, 3)
    neighbor_indices: np.ndarray  # (G, K)
    local_offsets: np.ndarray  # (G, K, 3)


def group_normalize(cloud, center_idx, k: int) -> GroupedPatches:
    """Gather the k nearest neighbours of each center, expressed relative to it."""
    pts = as_cloud(cloud)
    center_idx = np.asarray(center_idx, dtype=np.int64)
    if center_idx.ndim != 1 or len(center_idx) == 0:
        raise ValueError("center_idx must be a non-empty index list")
    if center_idx.min() < 0 or center_idx.max() >= len(pts):
        raise ValueError("center index out of range")
    centers = pts[center_idx]
    nbr = knn(pts, centers, k)
    offsets = pts[nbr] - centers[:, None, :]
    return GroupedPatches(centers=centers, neighbor_indices=nbr, local_offsets=offsets)


def ball_query(cloud, seeds, radius: float) -> list[np.ndarray]:
    """All cloud indices within ``radius`` (inclusive) of each seed, ascending."""
    if not radius > 0:
        raise ValueError("radius must be > 0")
    pts = as_cloud(cloud)
    sds = as_cloud(seeds, name="seeds")
    r2 = float(radius) * float(radius)
    if len(pts) * len(sds) < KD_TREE_MIN_PAIRS:
        out = []
        for sl in _query_chunks(len(sds), len(pts)):
            d = sq_dists(sds[sl], pts)
            out.extend(np.nonzero(row <= r2)[0] for row in d)
        return out
    tree = cKDTree(pts)
    cands = tree.query_ball_point(sds, float(radius) * (1.0 + 1e-9), workers=parallel.thread_count())
    out = []
    for s, cand in zip(sds, cands):
        cand = np.asarray(sorted(cand), dtype=np.int64)
        if len(cand) == 0:
            out.append(cand)
            continue
        keep = _sq_to_point(pts[cand], s) <= r2
        out.append(cand[keep])
    return out
