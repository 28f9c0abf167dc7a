"""Forward pass stages: extractor, encoder, seed generator, decoder, reconstructor."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pointfill import geometry
from pointfill.geometry import GroupedPatches
from pointfill.nn.ops import layer_norm, linear, mlp, multi_head_attention, sigmoid, silu
from pointfill.nn.ssm import bi_ssm


@dataclass(frozen=True)
class ProxySet:
    centers: np.ndarray  # (G, 3)
    features: np.ndarray  # (G, D_h)

    def __post_init__(self):
        if len(self.centers) != len(self.features):
            raise ValueError(
                f"proxy set: {len(self.centers)} centers vs {len(self.features)} feature rows"
            )


def _require_width(arr: np.ndarray, weights, name: str) -> None:
    w = weights[name]
    if arr.shape[-1] != w.shape[0]:
        raise ValueError(f"tensor {name}: expects input width {w.shape[0]}, got {arr.shape[-1]}")


def pointnet_lite(patches: GroupedPatches, weights) -> ProxySet:
    """Shared per-point MLP on local offsets, max-pool over each group, second MLP."""
    offsets = patches.local_offsets
    _require_width(offsets, weights, "extractor.mlp1.0.w")
    per_point = mlp(offsets, weights, "extractor.mlp1", 2)  # (G, K, D)
    pooled = per_point.max(axis=1)
    _require_width(pooled, weights, "extractor.mlp2.0.w")
    return ProxySet(patches.centers, mlp(pooled, weights, "extractor.mlp2", 2))


def positional_encoding(centers: np.ndarray, weights, prefix: str) -> np.ndarray:
    return silu(linear(centers, weights[f"{prefix}.w"], weights[f"{prefix}.b"]))


def lnp(x: np.ndarray, centers: np.ndarray, weights, prefix: str, k: int) -> np.ndarray:
    """Local aggregation: max-pooled MLP of feature differences to the k nearest
    proxies (by center coordinates, self included)."""
    nbr = geometry.knn(centers, centers, k)
    diff = x[nbr] - x[:, None, :]
    return mlp(diff, weights, prefix, 2).max(axis=1)


def mamba_encoder(F: ProxySet, weights, M: int, k_lnp: int = 8, scan_mode: str = "parallel") -> ProxySet:
    """M blocks of ``z' = LNP(LN(z + pos)) + z`` then ``z = biSSM(LN(z')) + z'``."""
    if M < 1:
        raise ValueError("M must be >= 1")
    pos = positional_encoding(F.centers, weights, "encoder.pos")
    z = F.features + pos
    for blk in range(M):
        p = f"encoder.{blk}"
        h = layer_norm(z + pos, weights[f"{p}.ln1.g"], weights[f"{p}.ln1.b"])
        z = lnp(h, F.centers, weights, f"{p}.lnp", k_lnp) + z
        h = layer_norm(z, weights[f"{p}.ln2.g"], weights[f"{p}.ln2.b"])
        z = bi_ssm(h, weights, f"{p}.ssm", scan_mode) + z
    return ProxySet(F.centers, z)


def top_k(scores: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k highest scores, descending, ties to the lower index."""
    return np.argsort(-scores, kind="stable")[:k]


@dataclass(frozen=True)
class SeedOutput:
    candidates: np.ndarray  # (I', 3)
    scores: np.ndarray  # (I',)
    selected: np.ndarray  # (I,) candidate indices
    seeds: np.ndarray  # (I, 3)
    features: np.ndarray  # (I, D_h)


def seed_generator(E: ProxySet, weights, I_prime: int, I: int, residual_count: int | None = None) -> SeedOutput:
    """Over-generate I' candidates, score them and keep the best I.

    The first ``residual_count`` candidates (default ``round(I'/3)``) get the
    encoder center coordinates added back as a residual, cycling through the
    centers in FPS order.
    """
    if I > I_prime:
        raise ValueError(f"I={I} exceeds I'={I_prime}")
    pooled = E.features.max(axis=0)
    inp = np.concatenate([pooled, E.centers.reshape(-1)])
    _require_width(inp, weights, "seed.mlp.0.w")
    cand = mlp(inp, weights, "seed.mlp", 2).reshape(I_prime, 3)
    R = int(round(I_prime / 3)) if residual_count is None else int(residual_count)
    R = min(R, I_prime)
    cand[:R] += E.centers[np.arange(R) % len(E.centers)]
    score_in = np.concatenate([cand, np.broadcast_to(pooled, (I_prime, len(pooled)))], axis=1)
    scores = sigmoid(mlp(score_in, weights, "seed.score", 2))[:, 0]
    sel = top_k(scores, I)
    seeds = cand[sel]
    feat_in = np.concatenate(
        [np.broadcast_to(pooled, (I, len(pooled))), positional_encoding(seeds, weights, "seed.pos")], axis=1
    )
    feats = mlp(feat_in, weights, "seed.feat", 2)
    return SeedOutput(candidates=cand, scores=scores, selected=sel, seeds=seeds, features=feats)


def geometry_bias(q_xyz: np.ndarray, k_xyz: np.ndarray, weights, prefix: str, heads: int, k: int) -> np.ndarray:
    """Learned additive logit bias on each query's k nearest keys; 0 elsewhere."""
    nbr = geometry.knn(k_xyz, q_xyz, k)
    rel = q_xyz[:, None, :] - k_xyz[nbr]  # (Lq, k, 3)
    vals = mlp(rel, weights, prefix, 2)  # (Lq, k, heads)
    bias = np.zeros((heads, len(q_xyz), len(k_xyz)))
    rows = np.repeat(np.arange(len(q_xyz)), k)
    for h in range(heads):
        bias[h, rows, nbr.reshape(-1)] = vals[..., h].reshape(-1)
    return bias


def transformer_decoder(
    S: np.ndarray,
    E: ProxySet,
    weights,
    T: int,
    heads: int,
    seeds: np.ndarray | None = None,
    attention_bias: bool = False,
    k_attn: int = 8,
) -> np.ndarray:
    """T pre-norm layers of self-attention, cross-attention to LN(E), and FFN."""
    if T < 1:
        raise ValueError("T must be >= 1")
    d = S.shape[1]
    if d % heads:
        raise ValueError(f"D_h={d} not divisible by {heads} heads")
    if attention_bias and seeds is None:
        raise ValueError("geometry-aware attention needs seed coordinates")
    w = S
    for layer in range(T):
        p = f"decoder.{layer}"
        self_bias = cross_bias = None
        if attention_bias:
            self_bias = geometry_bias(seeds, seeds, weights, f"{p}.self.geo", heads, k_attn)
            cross_bias = geometry_bias(seeds, E.centers, weights, f"{p}.cross.geo", heads, k_attn)
        h = layer_norm(w, weights[f"{p}.ln_self.g"], weights[f"{p}.ln_self.b"])
        w = w + multi_head_attention(h, h, weights, f"{p}.self", heads, self_bias)
        h = layer_norm(w, weights[f"{p}.ln_q.g"], weights[f"{p}.ln_q.b"])
        mem = layer_norm(E.features, weights[f"{p}.ln_mem.g"], weights[f"{p}.ln_mem.b"])
        w = w + multi_head_attention(h, mem, weights, f"{p}.cross", heads, cross_bias)
        h = layer_norm(w, weights[f"{p}.ln_ffn.g"], weights[f"{p}.ln_ffn.b"])
        w = w + mlp(h, weights, f"{p}.ffn", 2)
    return w


def multi_head_reconstruct(D: np.ndarray, P0: np.ndarray, weights, U: int, r: int) -> tuple[list[np.ndarray], np.ndarray]:
    """Split decoder proxies into U sets and grow r offsets per seed in each.

    Part ``i`` lists seed-major points: row ``s * r + j`` is seed ``s`` plus
    its ``j``-th offset. The merged cloud concatenates parts in head order.
    """
    if U < 1 or r < 1:
        raise ValueError("U and r must be >= 1")
    n_seeds, d = D.shape
    g = mlp(D, weights, "recon.global", 2).max(axis=0)
    cat = np.concatenate([np.broadcast_to(g, (n_seeds, len(g))), D, P0], axis=1)
    _require_width(cat, weights, "recon.psi.0.w")
    O = mlp(cat, weights, "recon.psi", 2).reshape(n_seeds, U, -1).transpose(1, 0, 2)
    base = np.repeat(P0, r, axis=0)
    parts = []
    for i in range(U):
        off = mlp(O[i], weights, f"recon.head.{i}", 2).reshape(n_seeds * r, 3)
        parts.append(base + off)
    return parts, np.concatenate(parts, axis=0)
