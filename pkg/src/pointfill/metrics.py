"""Evaluation metrics for completed point clouds.

Conventions (each value in a :class:`MetricReport` carries its own):

* ``cd_l`` / ``cd_g``: mean Euclidean NN distance prediction->GT and
  GT->prediction.
* ``cd_l1``: ``(cd_l + cd_g) / 2``, the halved form benchmark tables report.
  ``cd_l + cd_g`` (the plain sum) is available as ``ChamferBreakdown.cd_sum``.
* ``cd_l2``: sum of the two directed mean *squared* NN distances.
* ``dcd``: density-aware Chamfer distance with default ``alpha = 1000``.
* ``emd``: mean matched distance of the min-cost perfect matching.
* ``fscore``: F1 of precision/recall at threshold ``tau`` (strict ``<``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from pointfill import emd as _emd
from pointfill import geometry
from pointfill.geometry import as_cloud

DEFAULT_ALPHA = 1000.0
DEFAULT_TAU = 0.01


@dataclass(frozen=True)
class ChamferBreakdown:
    cd_l: float
    cd_g: float
    cd_l1: float
    cd_l2: float

    @property
    def cd_sum(self) -> float:
        return self.cd_l + self.cd_g


@dataclass(frozen=True)
class MetricValue:
    name: str
    value: float
    convention: str
    params: dict = field(default_factory=dict)


@dataclass
class MetricReport:
    values: list[MetricValue] = field(default_factory=list)

    def add(self, name: str, value: float, convention: str, **params) -> None:
        value = float(value)
        if not math.isfinite(value) or value < 0:
            raise ValueError(f"metric {name} produced invalid value {value}")
        self.values.append(MetricValue(name, value, convention, params))

    def __getitem__(self, name: str) -> float:
        for v in self.values:
            if v.name == name:
                return v.value
        raise KeyError(name)

    def as_dict(self) -> dict[str, float]:
        return {v.name: v.value for v in self.values}


def chamfer(pred, gt) -> ChamferBreakdown:
    p = as_cloud(pred, "P")
    g = as_cloud(gt, "G")
    d_pg = geometry.directed_nn_dists(p, g)
    d_gp = geometry.directed_nn_dists(g, p)
    cd_l = float(d_pg.mean())
    cd_g = float(d_gp.mean())
    cd_l2 = float((d_pg * d_pg).mean() + (d_gp * d_gp).mean())
    return ChamferBreakdown(cd_l=cd_l, cd_g=cd_g, cd_l1=0.5 * (cd_l + cd_g), cd_l2=cd_l2)


def _dcd_direction(a: np.ndarray, b: np.ndarray, alpha: float) -> float:
    idx, dist = geometry.nearest(a, b)
    counts = np.bincount(idx, minlength=len(b))
    weight = 1.0 / counts[idx]
    return float(np.mean(1.0 - weight * np.exp(-alpha * dist * dist)))


def dcd(pred, gt, alpha: float = DEFAULT_ALPHA) -> float:
    """Density-aware Chamfer distance, in [0, 1].

    Each point's match is discounted by ``exp(-alpha * d**2)`` and by how many
    points share the same nearest neighbour.
    """
    if not alpha > 0:
        raise ValueError("alpha must be > 0")
    p = as_cloud(pred, "P")
    g = as_cloud(gt, "G")
    return 0.5 * (_dcd_direction(p, g, alpha) + _dcd_direction(g, p, alpha))


def emd_assignment(pred, gt, exact_limit: int = _emd.EXACT_LIMIT) -> _emd.Assignment:
    p = as_cloud(pred, "P")
    g = as_cloud(gt, "G")
    if len(p) != len(g):
        raise ValueError("EMD requires equal sizes")
    cost = np.sqrt(geometry.sq_dists(p, g))
    return _emd.solve(cost, exact_limit)


def emd(pred, gt, exact_limit: int = _emd.EXACT_LIMIT) -> float:
    """Mean matched distance under the optimal bijection (auction above the limit)."""
    res = emd_assignment(pred, gt, exact_limit)
    return res.total / len(res.cols)


def fscore(pred, gt, tau: float = DEFAULT_TAU) -> float:
    if not tau > 0:
        raise ValueError("tau must be > 0")
    p = as_cloud(pred, "P")
    g = as_cloud(gt, "G")
    precision = float(np.mean(geometry.directed_nn_dists(p, g) < tau))
    recall = float(np.mean(geometry.directed_nn_dists(g, p) < tau))
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def fidelity(partial_input, output) -> float:
    """Mean distance from each input point to the completed output."""
    return float(geometry.directed_nn_dists(as_cloud(partial_input, "input"), as_cloud(output, "output")).mean())


def mmd(output, references) -> float:
    """Smallest ``cd_l1`` between the output and any reference cloud."""
    refs = list(references)
    if not refs:
        raise ValueError("empty reference set")
    out = as_cloud(output, "output")
    return min(chamfer(out, r).cd_l1 for r in refs)


def consistency(frames) -> float:
    """Mean ``cd_l1`` over consecutive frame pairs."""
    frames = list(frames)
    if len(frames) < 2:
        raise ValueError("consistency needs at least 2 frames")
    vals = [chamfer(frames[t], frames[t + 1]).cd_l1 for t in range(len(frames) - 1)]
    return float(np.mean(vals))


def _clutter(subset: np.ndarray, p: float) -> float:
    n = len(subset)
    pair = geometry.knn(subset, subset, 2)
    # with duplicates a lower-index twin can sort ahead of the point itself
    own = np.arange(n)
    idx = np.where(pair[:, 0] == own, pair[:, 1], pair[:, 0])
    d = np.sqrt(((subset - subset[idx]) ** 2).sum(axis=1))
    d_hat = math.sqrt(2.0 * math.pi * p / (n * math.sqrt(3.0)))
    return float(np.mean((d - d_hat) ** 2 / d_hat))


def uniformity(cloud, p: float, M: int) -> float:
    """Mean over M FPS seeds of imbalance * clutter in radius-sqrt(p) balls.

    The radius assumes the caller's scale convention; clouds are not
    normalised here. Balls with fewer than two points contribute 0.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    pts = as_cloud(cloud)
    M = int(M)
    if not 1 <= M <= len(pts):
        raise ValueError("M must satisfy 1 <= M <= |P|")
    seeds = pts[geometry.fps(pts, M)]
    balls = geometry.ball_query(pts, seeds, math.sqrt(p))
    n_hat = p * len(pts)
    total = 0.0
    for ball in balls:
        if len(ball) <= 1:
            continue
        imbalance = (len(ball) - n_hat) ** 2 / n_hat
        total += imbalance * _clutter(pts[ball], p)
    return total / M


def normalize_unit_sphere(cloud) -> np.ndarray:
    """Centre on the centroid and scale so the farthest point has radius 1."""
    pts = as_cloud(cloud)
    c = pts - pts.mean(axis=0)
    r = float(np.sqrt((c * c).sum(axis=1)).max())
    return c / r if r > 0 else c


METRIC_NAMES = ("cd", "dcd", "emd", "fscore")


def evaluate(pred, gt, which=METRIC_NAMES, tau: float = DEFAULT_TAU, alpha: float = DEFAULT_ALPHA) -> MetricReport:
    """Paired metrics between a prediction and its ground truth."""
    report = MetricReport()
    unknown = set(which) - set(METRIC_NAMES)
    if unknown:
        raise ValueError(f"unknown metric(s): {', '.join(sorted(unknown))}")
    if "cd" in which:
        cd = chamfer(pred, gt)
        report.add("cd_l", cd.cd_l, "mean pred->gt NN distance")
        report.add("cd_g", cd.cd_g, "mean gt->pred NN distance")
        report.add("cd_l1", cd.cd_l1, "(cd_l+cd_g)/2")
        report.add("cd_l2", cd.cd_l2, "mean sq pred->gt + mean sq gt->pred")
    if "dcd" in which:
        report.add("dcd", dcd(pred, gt, alpha), "density-aware CD, 1/n_hat weighting", alpha=alpha)
    if "emd" in which:
        res = emd_assignment(pred, gt)
        report.add("emd", res.total / len(res.cols), "mean matched distance", exact=res.exact, eps=res.eps)
    if "fscore" in which:
        report.add("fscore", fscore(pred, gt, tau), "F1 at distance < tau", tau=tau)
    return report
