"""Finite-difference harness for the completion loss."""

import numpy as np

from oracles import central_difference
from pointfill import loss
from pointfill.pca import decompose

SWITCH_MARGIN = 1e-3


def random_instance(rng, U: int = 4, max_points: int = 32):
    n_gt = int(rng.integers(U * 2, max_points + 1))
    G = rng.uniform(-1, 1, size=(n_gt, 3))
    G_parts = decompose(G, U).subsets
    P0 = rng.uniform(-1, 1, size=(int(rng.integers(2, max_points + 1)), 3))
    parts = [rng.uniform(-1, 1, size=(int(rng.integers(2, max_points // 2 + 1)), 3)) for _ in range(U)]
    Pout = rng.uniform(-1, 1, size=(int(rng.integers(2, max_points + 1)), 3))
    return P0, parts, Pout, G, G_parts


def _margins(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    d = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))
    order = np.argsort(d, axis=1)
    srt = np.take_along_axis(d, order, axis=1)
    gap = srt[:, 1] - srt[:, 0] if d.shape[1] > 1 else np.full(len(a), np.inf)
    return order, gap, srt[:, 0]


def unstable_points(pred: np.ndarray, gt: np.ndarray) -> np.ndarray:
    """Predicted points within SWITCH_MARGIN of an NN-assignment switch."""
    bad = np.zeros(len(pred), dtype=bool)
    _, gap, nearest = _margins(pred, gt)
    bad |= gap < SWITCH_MARGIN
    bad |= nearest < SWITCH_MARGIN  # the norm is not differentiable at 0
    order, gap_g, _ = _margins(gt, pred)
    for j in np.nonzero(gap_g < SWITCH_MARGIN)[0]:
        bad[order[j, :2]] = True
    return bad


def point_errors(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    num = np.linalg.norm(analytic - numeric, axis=1)
    den = np.maximum(np.linalg.norm(analytic, axis=1), np.linalg.norm(numeric, axis=1))
    return np.where(den < 1e-12, 0.0, num / np.where(den == 0, 1.0, den))


def max_relative_error(instance, h: float = 1e-4) -> tuple[float, int]:
    """Largest per-point relative error and the number of points checked."""
    P0, parts, Pout, G, G_parts = [np.array(x, copy=True) if not isinstance(x, list) else [np.array(y) for y in x]
                                   for x in instance]
    grads = loss.loss_grad(P0, parts, Pout, G, G_parts)

    def f():
        return loss.total_loss(P0, parts, Pout, G, G_parts).total

    checks = [(P0, grads.p0, [G]), (Pout, grads.out, [G])]
    checks += [(p, g, [gp]) for p, g, gp in zip(parts, grads.parts, G_parts)]
    worst, counted = 0.0, 0
    for cloud, analytic, refs in checks:
        numeric = central_difference(f, cloud, h)
        keep = np.ones(len(cloud), dtype=bool)
        for ref in refs:
            keep &= ~unstable_points(cloud, ref)
        if keep.any():
            worst = max(worst, float(point_errors(analytic[keep], numeric[keep]).max()))
            counted += int(keep.sum())
    return worst, counted
