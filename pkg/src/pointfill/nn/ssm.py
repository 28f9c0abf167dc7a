"""Selective diagonal state-space scan, sequential and parallel.

Per channel ``d`` and state ``s``, with zero-order-hold discretisation::

    a_t = exp(delta[t, d] * A[d, s])
    b_t = delta[t, d] * B[t, s] * x[t, d]
    h_t = a_t * h_{t-1} + b_t,   h_0 = 0
    y[t, d] = sum_s C[t, s] * h_t + D_skip[d] * x[t, d]

The sequential loop is the definition. The parallel form is an inclusive
Hillis-Steele scan over pairs ``(a, b)`` under the associative operator
``(a1, b1) o (a2, b2) = (a1 * a2, a2 * b1 + b2)``, taking ``log2(L)`` passes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pointfill.nn.ops import linear, softplus


@dataclass(frozen=True)
class SsmParams:
    A: np.ndarray  # (D, S), strictly negative
    B: np.ndarray  # (L, S)
    C: np.ndarray  # (L, S)
    delta: np.ndarray  # (L, D), strictly positive
    D_skip: np.ndarray  # (D,)

    def check(self, x: np.ndarray) -> None:
        L, D = x.shape
        if L < 1:
            raise ValueError("sequence length must be >= 1")
        if self.A.shape[0] != D or self.delta.shape != (L, D) or self.D_skip.shape != (D,):
            raise ValueError("SSM parameter shapes do not match input")
        if self.B.shape != (L, self.A.shape[1]) or self.C.shape != self.B.shape:
            raise ValueError("B/C must be (L, S)")
        if not (self.delta > 0).all():
            raise ValueError("step sizes delta must be > 0")
        if not (self.A < 0).all():
            raise ValueError("A entries must be < 0")


def scan_sequential(params: SsmParams, x: np.ndarray) -> np.ndarray:
    params.check(x)
    L, D = x.shape
    h = np.zeros((D, params.A.shape[1]))
    y = np.empty_like(x)
    for t in range(L):
        a = np.exp(params.delta[t][:, None] * params.A)
        b = (params.delta[t][:, None] * params.B[t][None, :]) * x[t][:, None]
        h = a * h + b
        y[t] = (h * params.C[t][None, :]).sum(axis=1) + params.D_skip * x[t]
    return y


def scan_parallel(params: SsmParams, x: np.ndarray) -> np.ndarray:
    params.check(x)
    L = x.shape[0]
    a = np.exp(params.delta[:, :, None] * params.A[None, :, :])
    b = (params.delta[:, :, None] * params.B[:, None, :]) * x[:, :, None]
    offset = 1
    while offset < L:
        # combine element t with the prefix ending at t - offset; the
        # right-hand products are materialised before the in-place update
        b[offset:] += a[offset:] * b[:-offset]
        a[offset:] *= a[:-offset].copy()
        offset *= 2
    return (b * params.C[:, None, :]).sum(axis=2) + params.D_skip[None, :] * x


def ssm_scan(params: SsmParams, x, mode: str = "parallel") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if mode == "sequential":
        return scan_sequential(params, x)
    if mode == "parallel":
        return scan_parallel(params, x)
    raise ValueError(f"unknown scan mode {mode!r}")


def selective_params(x: np.ndarray, weights, prefix: str) -> SsmParams:
    """Per-step B, C and delta as linear functions of the input sequence."""
    return SsmParams(
        A=-np.exp(weights[f"{prefix}.A_log"]),
        B=linear(x, weights[f"{prefix}.B.w"]),
        C=linear(x, weights[f"{prefix}.C.w"]),
        delta=softplus(linear(x, weights[f"{prefix}.dt.w"], weights[f"{prefix}.dt.b"])),
        D_skip=weights[f"{prefix}.D"],
    )


def bi_scan(params_fwd: SsmParams, params_bwd: SsmParams, x: np.ndarray, mode: str = "parallel") -> np.ndarray:
    """Average of a forward scan and a re-reversed scan of the reversed sequence.

    ``params_bwd`` is indexed along the reversed sequence.
    """
    fwd = ssm_scan(params_fwd, x, mode)
    bwd = ssm_scan(params_bwd, x[::-1], mode)[::-1]
    return 0.5 * (fwd + bwd)


def bi_ssm(x: np.ndarray, weights, prefix: str, mode: str = "parallel") -> np.ndarray:
    rev = np.ascontiguousarray(x[::-1])
    return bi_scan(
        selective_params(x, weights, f"{prefix}.fwd"),
        selective_params(rev, weights, f"{prefix}.bwd"),
        x,
        mode,
    )


def random_params(L: int, D: int, S: int, rng: np.random.Generator) -> SsmParams:
    """Random but well-conditioned parameters, for benchmarks and tests."""
    return SsmParams(
        A=-np.exp(rng.uniform(-1.0, 1.5, size=(D, S))),
        B=rng.normal(size=(L, S)),
        C=rng.normal(size=(L, S)),
        delta=softplus(rng.normal(-1.0, 1.0, size=(L, D))),
        D_skip=rng.normal(size=D),
    )
