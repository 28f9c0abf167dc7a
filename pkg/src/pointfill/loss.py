"""Flexible Chamfer training loss over seeds, per-head parts and the merged cloud.

    total = CD_g(P0, G) + (1/U) * sum_i [CD_l(Pi, Gi) + 2 CD_g(Pi, Gi)]
                        + CD_l(Pout, G) + 2 CD_g(Pout, G)

Gradients are taken with nearest-neighbour assignments held fixed. A pair
at zero distance contributes a zero subgradient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pointfill import geometry
from pointfill.geometry import as_cloud

GLOBAL_WEIGHT = 2.0


@dataclass(frozen=True)
class LossBreakdown:
    l_p0: float
    l_parts: tuple[float, ...]
    l_out: float
    total: float


@dataclass(frozen=True)
class LossGrad:
    p0: np.ndarray
    parts: list[np.ndarray]
    out: np.ndarray


def _check(P0, parts, Pout, G, G_parts):
    parts = [as_cloud(p, f"parts[{i}]") for i, p in enumerate(parts)]
    G_parts = [as_cloud(g, f"G_parts[{i}]") for i, g in enumerate(G_parts)]
    if len(parts) != len(G_parts):
        raise ValueError(f"U mismatch: {len(parts)} predicted parts vs {len(G_parts)} GT parts")
    if not parts:
        raise ValueError("U must be >= 1")
    return as_cloud(P0, "P0"), parts, as_cloud(Pout, "Pout"), as_cloud(G, "G"), G_parts


def cd_l(pred, gt) -> float:
    return float(geometry.directed_nn_dists(pred, gt).mean())


def cd_g(pred, gt) -> float:
    return float(geometry.directed_nn_dists(gt, pred).mean())


def _two_sided(pred, gt) -> float:
    return cd_l(pred, gt) + GLOBAL_WEIGHT * cd_g(pred, gt)


def total_loss(P0, parts, Pout, G, G_parts) -> LossBreakdown:
    P0, parts, Pout, G, G_parts = _check(P0, parts, Pout, G, G_parts)
    l_p0 = cd_g(P0, G)
    l_parts = tuple(_two_sided(p, g) for p, g in zip(parts, G_parts))
    l_out = _two_sided(Pout, G)
    total = l_p0 + sum(l_parts) / len(l_parts) + l_out
    return LossBreakdown(l_p0=l_p0, l_parts=l_parts, l_out=l_out, total=total)


def _unit(diff: np.ndarray) -> np.ndarray:
    norm = np.sqrt((diff * diff).sum(axis=1, keepdims=True))
    out = np.zeros_like(diff)
    nz = norm[:, 0] > 0
    out[nz] = diff[nz] / norm[nz]
    return out


def _grad_cd_l(pred: np.ndarray, gt: np.ndarray) -> np.ndarray:
    # d/dp of mean_p |p - nn(p)|
    idx, _ = geometry.nearest(pred, gt)
    return _unit(pred - gt[idx]) / len(pred)


def _grad_cd_g(pred: np.ndarray, gt: np.ndarray) -> np.ndarray:
    # d/dp of mean_g |g - nn(g)|: each g pushes on the prediction it picked
    idx, _ = geometry.nearest(gt, pred)
    grad = np.zeros_like(pred)
    np.add.at(grad, idx, _unit(pred[idx] - gt))
    return grad / len(gt)


def loss_grad(P0, parts, Pout, G, G_parts) -> LossGrad:
    """Gradient of ``total_loss(...).total`` w.r.t. every predicted coordinate."""
    P0, parts, Pout, G, G_parts = _check(P0, parts, Pout, G, G_parts)
    U = len(parts)
    g_p0 = _grad_cd_g(P0, G)
    g_parts = [
        (_grad_cd_l(p, g) + GLOBAL_WEIGHT * _grad_cd_g(p, g)) / U for p, g in zip(parts, G_parts)
    ]
    g_out = _grad_cd_l(Pout, G) + GLOBAL_WEIGHT * _grad_cd_g(Pout, G)
    return LossGrad(p0=g_p0, parts=g_parts, out=g_out)
