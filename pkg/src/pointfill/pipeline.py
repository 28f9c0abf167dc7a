"""End-to-end completion: extractor -> encoder -> seeds -> decoder -> heads."""

from __future__ import annotations

import contextlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from pointfill import geometry
from pointfill.config import ModelConfig
from pointfill.geometry import as_cloud
from pointfill.nn import stages
from pointfill.nn.weights import WeightStore


@dataclass
class CompletionResult:
    seeds: np.ndarray  # (I, 3)
    candidates: np.ndarray  # (I', 3)
    parts: list[np.ndarray]  # U x (I*r, 3)
    output: np.ndarray  # (N_c, 3)
    stages: dict[str, np.ndarray] = field(default_factory=dict)


def complete(cloud, config: ModelConfig, weights: WeightStore, keep_stages: bool = False) -> CompletionResult:
    """Run the full forward pass on a cloud of exactly ``config.N`` points.

    In deterministic mode BLAS is pinned to one thread so that reduction
    order, and therefore every output bit, is independent of the machine's
    thread settings.
    """
    config.validate()
    pts = as_cloud(cloud)
    if len(pts) != config.N:
        raise ValueError(f"input has {len(pts)} points, config expects N={config.N}")
    weights.validate(config)
    guard = threadpool_limits(limits=1) if config.deterministic else contextlib.nullcontext()
    with guard:
        center_idx = geometry.fps(pts, config.G)
        patches = geometry.group_normalize(pts, center_idx, config.K)
        F = stages.pointnet_lite(patches, weights)
        E = stages.mamba_encoder(F, weights, config.M, config.k_lnp)
        seed = stages.seed_generator(E, weights, config.I_prime, config.I, config.residual_count)
        D = stages.transformer_decoder(
            seed.features, E, weights, config.T, config.heads,
            seeds=seed.seeds, attention_bias=config.attention_bias, k_attn=config.k_attn,
        )
        parts, out = stages.multi_head_reconstruct(D, seed.seeds, weights, config.U, config.r)
    if len(out) != config.N_c or any(len(p) != config.I * config.r for p in parts):
        raise AssertionError("reconstructor produced the wrong number of points")
    snapshots = {}
    if keep_stages:
        snapshots = {
            "centers": patches.centers,
            "proxy_features": F.features,
            "encoder_features": E.features,
            "seed_scores": seed.scores,
            "seed_features": seed.features,
            "decoder_features": D,
        }
    return CompletionResult(seed.seeds, seed.candidates, parts, out, snapshots)


def dump_stages(result: CompletionResult, directory) -> list[Path]:
    """Write clouds as PCF files and feature tensors as ``.npy``."""
    from pointfill.io import write_cloud

    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    written = []
    clouds = {"seeds": result.seeds, "candidates": result.candidates, "output": result.output}
    clouds.update({f"part_{i + 1}": p for i, p in enumerate(result.parts)})
    for name, pts in clouds.items():
        path = d / f"{name}.pcf"
        write_cloud(path, pts)
        written.append(path)
    for name, arr in result.stages.items():
        path = d / f"{name}.npy"
        np.save(path, arr)
        written.append(path)
    return written
