"""Model hyperparameters and their consistency rules."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    N: int = 512  # input points
    G: int = 32  # groups / point proxies
    K: int = 16  # points per group
    D_h: int = 64  # hidden width
    M: int = 2  # encoder blocks
    T: int = 2  # decoder layers
    I_prime: int = 96  # seed candidates
    I: int = 64  # selected seeds
    U: int = 4  # reconstruction heads
    r: int = 2  # offsets per seed per head
    N_c: int = 512  # output points, must equal U * I * r
    k_lnp: int = 8
    k_attn: int = 8
    attention_bias: bool = False
    heads: int = 4  # attention heads
    d_state: int = 8  # SSM state size per channel
    seed: int = 0
    deterministic: bool = True

    @property
    def residual_count(self) -> int:
        """Candidates that receive the center-coordinate residual (256 of 768)."""
        return int(round(self.I_prime / 3))

    def validate(self) -> "ModelConfig":
        for f in fields(self):
            v = getattr(self, f.name)
            if f.type in ("int", int) and f.name != "seed" and (not isinstance(v, int) or v < 1):
                raise ConfigError(f"{f.name} must be a positive integer, got {v!r}")
        if self.U * self.I * self.r != self.N_c:
            raise ConfigError(f"N_c={self.N_c} != U*I*r = {self.U}*{self.I}*{self.r}")
        if self.I > self.I_prime:
            raise ConfigError(f"I={self.I} exceeds I'={self.I_prime}")
        if self.G > self.N:
            raise ConfigError(f"G={self.G} exceeds N={self.N}")
        if self.K > self.N:
            raise ConfigError(f"K={self.K} exceeds N={self.N}")
        if self.D_h % self.heads:
            raise ConfigError(f"D_h={self.D_h} not divisible by heads={self.heads}")
        if self.k_lnp > self.G:
            raise ConfigError(f"k_lnp={self.k_lnp} exceeds G={self.G}")
        if self.attention_bias and self.k_attn > min(self.G, self.I):
            raise ConfigError(f"k_attn={self.k_attn} exceeds min(G, I)")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 bits")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        data = dict(data)
        scale = data.pop("scale", None)
        base = default_config(scale) if scale else cls()
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        return replace(base, **data).validate()


def default_config(scale: str = "desk") -> ModelConfig:
    """``desk`` runs in well under a second; ``full`` uses the published sizes
    (N=2048, I'=768, I=512, U=4, r=8) with the unstated widths filled in."""
    if scale == "desk":
        return ModelConfig().validate()
    if scale == "full":
        return ModelConfig(
            N=2048, G=256, K=32, D_h=384, M=12, T=6, I_prime=768, I=512, U=4, r=8, N_c=16384,
            heads=6, d_state=16,
        ).validate()
    raise ConfigError(f"unknown scale {scale!r}")


def load_config(path) -> ModelConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return ModelConfig.from_dict(data)


def save_config(path, config: ModelConfig) -> None:
    Path(path).write_text(json.dumps(config.to_dict(), indent=2) + "\n")
