"""Synthetic shapes with area-uniform surface samples, and viewpoint crops."""

from __future__ import annotations

import math

import numpy as np

from pointfill.geometry import as_cloud
from pointfill.rng import Xoshiro256

SHAPES = ("sphere", "cuboid", "cylinder", "torus")

CUBOID_HALF = np.array([1.0, 0.75, 0.5])
CYLINDER_RADIUS = 1.0
CYLINDER_HALF_HEIGHT = 1.0
TORUS_MAJOR = 1.0
TORUS_MINOR = 0.3


def _sphere(rng: Xoshiro256, n: int) -> np.ndarray:
    u = rng.random_array(2 * n).reshape(n, 2)
    z = 2.0 * u[:, 0] - 1.0
    phi = 2.0 * math.pi * u[:, 1]
    rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    pts = np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
    # remove the last bit of rounding so every point is on the unit sphere
    return pts / np.sqrt((pts * pts).sum(axis=1, keepdims=True))


def _cuboid(rng: Xoshiro256, n: int) -> np.ndarray:
    a, b, c = CUBOID_HALF
    areas = np.array([b * c, b * c, a * c, a * c, a * b, a * b])
    cdf = np.cumsum(areas) / areas.sum()
    u = rng.random_array(3 * n).reshape(n, 3)
    face = np.minimum(np.searchsorted(cdf, u[:, 0], side="right"), 5)
    pts = np.empty((n, 3))
    axis = face // 2
    sign = np.where(face % 2 == 0, 1.0, -1.0)
    for ax in range(3):
        sel = axis == ax
        others = [o for o in range(3) if o != ax]
        pts[sel, ax] = sign[sel] * CUBOID_HALF[ax]
        pts[sel, others[0]] = (2.0 * u[sel, 1] - 1.0) * CUBOID_HALF[others[0]]
        pts[sel, others[1]] = (2.0 * u[sel, 2] - 1.0) * CUBOID_HALF[others[1]]
    return pts


def _cylinder(rng: Xoshiro256, n: int) -> np.ndarray:
    R, H = CYLINDER_RADIUS, CYLINDER_HALF_HEIGHT
    side = 2.0 * math.pi * R * 2.0 * H
    cap = math.pi * R * R
    u = rng.random_array(3 * n).reshape(n, 3)
    which = u[:, 0] * (side + 2.0 * cap)
    phi = 2.0 * math.pi * u[:, 1]
    pts = np.empty((n, 3))
    lateral = which < side
    pts[lateral, 0] = R * np.cos(phi[lateral])
    pts[lateral, 1] = R * np.sin(phi[lateral])
    pts[lateral, 2] = (2.0 * u[lateral, 2] - 1.0) * H
    caps = ~lateral
    rad = R * np.sqrt(u[caps, 2])
    pts[caps, 0] = rad * np.cos(phi[caps])
    pts[caps, 1] = rad * np.sin(phi[caps])
    pts[caps, 2] = np.where(which[caps] < side + cap, H, -H)
    return pts


def _torus(rng: Xoshiro256, n: int) -> np.ndarray:
    # Area element is proportional to (R + r cos theta): rejection-sample theta.
    R, r = TORUS_MAJOR, TORUS_MINOR
    out = np.empty((n, 3))
    filled = 0
    while filled < n:
        want = n - filled
        u = rng.random_array(3 * want).reshape(want, 3)
        theta = 2.0 * math.pi * u[:, 0]
        keep = u[:, 1] * (R + r) <= R + r * np.cos(theta)
        theta = theta[keep]
        phi = 2.0 * math.pi * u[keep, 2]
        ring = R + r * np.cos(theta)
        block = np.column_stack([ring * np.cos(phi), ring * np.sin(phi), r * np.sin(theta)])
        out[filled : filled + len(block)] = block
        filled += len(block)
    return out


def synth_shape(kind: str, n: int, seed: int = 0) -> np.ndarray:
    """``n`` points sampled uniformly by area on a shape centred at the origin."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    makers = {"sphere": _sphere, "cuboid": _cuboid, "cylinder": _cylinder, "torus": _torus}
    if kind not in makers:
        raise ValueError(f"unknown shape {kind!r}; choose from {', '.join(SHAPES)}")
    return makers[kind](Xoshiro256.for_stream(seed, f"synth.{kind}"), n)


def fibonacci_sphere(n: int) -> np.ndarray:
    """Near-uniform deterministic unit-sphere points on a golden-angle spiral."""
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    rho = np.sqrt(1.0 - z * z)
    phi = math.pi * (3.0 - math.sqrt(5.0)) * i
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def random_viewpoint(seed: int) -> np.ndarray:
    return Xoshiro256.for_stream(seed, "crop.viewpoint").unit_vector()


def crop_viewpoint(cloud, fraction: float, seed: int = 0, viewpoint=None) -> tuple[np.ndarray, np.ndarray]:
    """Remove the ``floor(fraction * N)`` points nearest a viewpoint.

    The viewpoint is drawn uniformly on the unit sphere unless given.
    Returns ``(partial, missing)``, both in original point order.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie in (0, 1)")
    pts = as_cloud(cloud)
    vp = random_viewpoint(seed) if viewpoint is None else np.asarray(viewpoint, dtype=np.float64).reshape(3)
    n_remove = int(math.floor(fraction * len(pts)))
    d = ((pts - vp) ** 2).sum(axis=1)
    removed = np.zeros(len(pts), dtype=bool)
    removed[np.argsort(d, kind="stable")[:n_remove]] = True
    return pts[~removed], pts[removed]
