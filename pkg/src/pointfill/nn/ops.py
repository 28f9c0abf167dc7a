"""Dense building blocks over float64 numpy arrays."""

from __future__ import annotations

import numpy as np

LN_EPS = 1e-5


def silu(x: np.ndarray) -> np.ndarray:
    return x / (1.0 + np.exp(-x))


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def linear(x: np.ndarray, w: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    """``x @ w + b`` with ``w`` stored as (in, out)."""
    # strided views take a different matmul kernel; keep bits layout-independent
    y = np.ascontiguousarray(x) @ w
    return y if b is None else y + b


def mlp(x: np.ndarray, weights, prefix: str, layers: int) -> np.ndarray:
    """``layers`` linear maps ``{prefix}.{i}.w/b`` with ReLU between them."""
    for i in range(layers):
        x = linear(x, weights[f"{prefix}.{i}.w"], weights[f"{prefix}.{i}.b"])
        if i < layers - 1:
            x = relu(x)
    return x


def layer_norm(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray) -> np.ndarray:
    mu = x.mean(axis=-1, keepdims=True)
    var = ((x - mu) ** 2).mean(axis=-1, keepdims=True)
    return (x - mu) / np.sqrt(var + LN_EPS) * gamma + beta


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    z = x - x.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def multi_head_attention(
    q_in: np.ndarray,
    kv_in: np.ndarray,
    weights,
    prefix: str,
    heads: int,
    bias: np.ndarray | None = None,
    return_probs: bool = False,
):
    """Scaled dot-product attention with ``heads`` heads.

    ``bias`` (heads, Lq, Lk), if given, is added to the logits.
    """
    d = q_in.shape[-1]
    if d % heads:
        raise ValueError(f"width {d} not divisible by {heads} heads")
    dh = d // heads
    q = linear(q_in, weights[f"{prefix}.q.w"], weights[f"{prefix}.q.b"])
    k = linear(kv_in, weights[f"{prefix}.k.w"], weights[f"{prefix}.k.b"])
    v = linear(kv_in, weights[f"{prefix}.v.w"], weights[f"{prefix}.v.b"])
    q = q.reshape(len(q), heads, dh).transpose(1, 0, 2)
    k = k.reshape(len(k), heads, dh).transpose(1, 0, 2)
    v = v.reshape(len(v), heads, dh).transpose(1, 0, 2)
    logits = q @ k.transpose(0, 2, 1) / np.sqrt(dh)
    if bias is not None:
        logits = logits + bias
    probs = softmax(logits, axis=-1)
    ctx = (probs @ v).transpose(1, 0, 2).reshape(len(q_in), d)
    out = linear(ctx, weights[f"{prefix}.o.w"], weights[f"{prefix}.o.b"])
    return (out, probs) if return_probs else out
