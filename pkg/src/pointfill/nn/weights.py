"""Named weight tensors: required shapes per config and seeded initialisation.

Linear weights are stored as ``(in, out)``. Initial values are drawn from
per-tensor xoshiro256** streams keyed by ``(seed, tensor name)`` and rounded
to float32, so a store survives a trip through the 32-bit PWT1 file format
bit for bit.
"""

from __future__ import annotations

import math
from collections.abc import Mapping

import numpy as np

from pointfill.config import ModelConfig
from pointfill.rng import Xoshiro256


class WeightError(ValueError):
    pass


def _linear(shapes: dict, prefix: str, n_in: int, n_out: int, bias: bool = True) -> None:
    shapes[f"{prefix}.w"] = (n_in, n_out)
    if bias:
        shapes[f"{prefix}.b"] = (n_out,)


def _mlp(shapes: dict, prefix: str, dims: list[int]) -> None:
    for i in range(len(dims) - 1):
        _linear(shapes, f"{prefix}.{i}", dims[i], dims[i + 1])


def _norm(shapes: dict, prefix: str, d: int) -> None:
    shapes[f"{prefix}.g"] = (d,)
    shapes[f"{prefix}.b"] = (d,)


def _attention(shapes: dict, prefix: str, cfg: ModelConfig) -> None:
    d = cfg.D_h
    for part in ("q", "k", "v", "o"):
        _linear(shapes, f"{prefix}.{part}", d, d)
    if cfg.attention_bias:
        _mlp(shapes, f"{prefix}.geo", [3, d, cfg.heads])


def weight_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Every tensor the forward pass reads, in a fixed order."""
    d, s = cfg.D_h, cfg.d_state
    shapes: dict[str, tuple[int, ...]] = {}
    _mlp(shapes, "extractor.mlp1", [3, d, d])
    _mlp(shapes, "extractor.mlp2", [d, d, d])
    _linear(shapes, "encoder.pos", 3, d)
    for blk in range(cfg.M):
        p = f"encoder.{blk}"
        _norm(shapes, f"{p}.ln1", d)
        _mlp(shapes, f"{p}.lnp", [d, d, d])
        _norm(shapes, f"{p}.ln2", d)
        for direction in ("fwd", "bwd"):
            q = f"{p}.ssm.{direction}"
            shapes[f"{q}.A_log"] = (d, s)
            _linear(shapes, f"{q}.B", d, s, bias=False)
            _linear(shapes, f"{q}.C", d, s, bias=False)
            _linear(shapes, f"{q}.dt", d, d)
            shapes[f"{q}.D"] = (d,)
    _mlp(shapes, "seed.mlp", [d + 3 * cfg.G, 2 * d, 3 * cfg.I_prime])
    _mlp(shapes, "seed.score", [d + 3, d, 1])
    _linear(shapes, "seed.pos", 3, d)
    _mlp(shapes, "seed.feat", [2 * d, d, d])
    for layer in range(cfg.T):
        p = f"decoder.{layer}"
        _norm(shapes, f"{p}.ln_self", d)
        _attention(shapes, f"{p}.self", cfg)
        _norm(shapes, f"{p}.ln_q", d)
        _norm(shapes, f"{p}.ln_mem", d)
        _attention(shapes, f"{p}.cross", cfg)
        _norm(shapes, f"{p}.ln_ffn", d)
        _mlp(shapes, f"{p}.ffn", [d, 2 * d, d])
    _mlp(shapes, "recon.global", [d, d, d])
    _mlp(shapes, "recon.psi", [2 * d + 3, 2 * d, cfg.U * d])
    for head in range(cfg.U):
        _mlp(shapes, f"recon.head.{head}", [d, d, 3 * cfg.r])
    return shapes


class WeightStore(Mapping):
    """Immutable name -> float64 array map."""

    def __init__(self, tensors: Mapping[str, np.ndarray]):
        self._t: dict[str, np.ndarray] = {}
        for name, arr in tensors.items():
            a = np.array(arr, dtype=np.float64, copy=True)
            if not np.isfinite(a).all():
                raise WeightError(f"tensor {name}: non-finite values")
            a.setflags(write=False)
            self._t[name] = a

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self._t[name]
        except KeyError:
            raise WeightError(f"missing tensor {name}") from None

    def __iter__(self):
        return iter(self._t)

    def __len__(self) -> int:
        return len(self._t)

    def with_values(self, updates: Mapping[str, np.ndarray]) -> "WeightStore":
        merged = dict(self._t)
        merged.update(updates)
        return WeightStore(merged)

    def validate(self, cfg: ModelConfig) -> "WeightStore":
        expected = weight_shapes(cfg)
        for name in self._t:
            if name not in expected:
                raise WeightError(f"unknown tensor {name}")
        for name, shape in expected.items():
            if name not in self._t:
                raise WeightError(f"missing tensor {name}")
            if self._t[name].shape != shape:
                raise WeightError(f"tensor {name}: shape {self._t[name].shape}, expected {shape}")
        return self

    def equals(self, other: "WeightStore") -> bool:
        if list(self) != list(other):
            return False
        return all(np.array_equal(self[n], other[n]) for n in self)


def _init_tensor(name: str, shape: tuple[int, ...], shapes: dict, seed: int) -> np.ndarray:
    leaf = name.rsplit(".", 1)[-1]
    size = int(np.prod(shape))
    if leaf == "g" and len(shape) == 1 and name.rsplit(".", 2)[-2].startswith("ln"):
        return np.ones(shape)
    if leaf == "b" and name.rsplit(".", 2)[-2].startswith("ln"):
        return np.zeros(shape)
    if leaf == "A_log":
        # S4D-real style: A[d, s] = -(s + 1)
        return np.log(np.broadcast_to(np.arange(1, shape[1] + 1, dtype=np.float64), shape)).copy()
    if leaf == "D":
        return np.ones(shape)
    rng = Xoshiro256.for_stream(seed, name)
    if name.endswith(".dt.b"):
        # inverse softplus of step sizes log-uniform in [1e-3, 1e-1]
        dt = np.exp(rng.uniform(math.log(1e-3), math.log(1e-1), size))
        return (dt + np.log(-np.expm1(-dt))).reshape(shape)
    if leaf == "w":
        fan_in = shape[0]
    else:
        fan_in = shapes[name[:-1] + "w"][0]
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size).reshape(shape)


def init_weights(cfg: ModelConfig, seed: int | None = None) -> WeightStore:
    """Deterministic initial weights; the same seed always gives identical bits."""
    seed = cfg.seed if seed is None else int(seed)
    shapes = weight_shapes(cfg)
    tensors = {}
    for name, shape in shapes.items():
        t = _init_tensor(name, shape, shapes, seed)
        tensors[name] = t.astype(np.float32).astype(np.float64)
    return WeightStore(tensors)


def zero_like(store: WeightStore, prefix: str) -> dict[str, np.ndarray]:
    """Zeroed copies of every tensor under ``prefix`` (for collapse tests)."""
    return {n: np.zeros_like(store[n]) for n in store if n.startswith(prefix)}
