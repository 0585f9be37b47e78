"""Importance-graded bit-plane embedding of hidden SH coefficients.

Carrier slot ``j`` of every colour channel gives up its low ``k + order(j)``
bits to the top bits of hidden coefficient ``n - 1 - j``. The least important
carrier slots therefore hold the most important hidden coefficients with the
largest budgets.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fixedpoint import QuantParams, dequantize, quantize
from .scene import SH_COEFFS, GaussianScene


@dataclass(frozen=True)
class StegoParams:
    k: int = 17
    quant: QuantParams = field(default_factory=QuantParams)
    n: int = SH_COEFFS
    graded: bool = True

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.k + int((self.n - 1) ** 0.5) > self.quant.gamma:
            raise ValueError(
                f"bit budget k + floor(sqrt(n-1)) = {self.k + int((self.n - 1) ** 0.5)} "
                f"exceeds gamma = {self.quant.gamma}"
            )

    @property
    def gamma(self) -> int:
        return self.quant.gamma

    def budgets(self) -> np.ndarray:
        """Per-slot bit budgets; the uniform ablation gives every slot k + 1."""
        if self.graded:
            return np.array([bit_budget(j, self.k, self.n) for j in range(self.n)])
        return np.full(self.n, self.k + 1)


def bit_budget(j: int, k: int, n: int = SH_COEFFS) -> int:
    if not 0 <= j < n:
        raise ValueError(f"slot index {j} outside [0, {n - 1}]")
    return k + int(j ** 0.5)


def _low_mask(b):
    return (np.uint64(1) << np.asarray(b, dtype=np.uint64)) - np.uint64(1)


def nullify(code, b):
    out = np.asarray(code, dtype=np.uint64) & ~_low_mask(b)
    return int(out) if out.ndim == 0 else out


def embed_coeff(cover_code, hidden_code, b, gamma: int = 32):
    b = np.asarray(b, dtype=np.uint64)
    if np.any(b > gamma):
        raise ValueError("bit budget exceeds gamma")
    cover = np.asarray(cover_code, dtype=np.uint64)
    hidden = np.asarray(hidden_code, dtype=np.uint64)
    out = nullify(cover, b) ^ (hidden >> (np.uint64(gamma) - b))
    out = np.asarray(out, dtype=np.uint64)
    return int(out) if out.ndim == 0 else out


def extract_coeff(stego_code, b, gamma: int = 32):
    b = np.asarray(b, dtype=np.uint64)
    if np.any(b > gamma):
        raise ValueError("bit budget exceeds gamma")
    stego = np.asarray(stego_code, dtype=np.uint64)
    out = (stego & _low_mask(b)) << (np.uint64(gamma) - b)
    out &= np.uint64((1 << gamma) - 1)
    return int(out) if out.ndim == 0 else out


def embed_sh(cover_sh: np.ndarray, hidden_sh: np.ndarray, params: StegoParams = StegoParams()) -> np.ndarray:
    """Fuse (N, n, 3) hidden blocks into (N, n, 3) cover blocks; float32 result."""
    cover_sh = np.asarray(cover_sh, dtype=np.float32)
    hidden_sh = np.asarray(hidden_sh, dtype=np.float32)
    if cover_sh.shape != hidden_sh.shape:
        raise ValueError(f"hidden SH shape {hidden_sh.shape} does not match cover {cover_sh.shape}")
    b = params.budgets()[None, :, None]
    cover_codes = quantize(cover_sh, params.quant)
    hidden_codes = quantize(hidden_sh[:, ::-1, :], params.quant)
    return dequantize(embed_coeff(cover_codes, hidden_codes, b, params.gamma), params.quant)


def extract_sh(stego_sh: np.ndarray, params: StegoParams = StegoParams()) -> np.ndarray:
    stego_sh = np.asarray(stego_sh, dtype=np.float32)
    b = params.budgets()[None, :, None]
    codes = extract_coeff(quantize(stego_sh, params.quant), b, params.gamma)
    return np.ascontiguousarray(dequantize(codes, params.quant)[:, ::-1, :])


def embed_scene(cover: GaussianScene, hidden_sh: np.ndarray, params: StegoParams = StegoParams()) -> GaussianScene:
    if len(hidden_sh) != cover.count:
        raise ValueError(f"hidden SH has {len(hidden_sh)} blocks, cover has {cover.count} primitives")
    return cover.with_sh(embed_sh(cover.sh, hidden_sh, params))


def extract_scene(stego: GaussianScene, params: StegoParams = StegoParams()) -> np.ndarray:
    return extract_sh(stego.sh, params)


def filter_orders(sh: np.ndarray, keep) -> np.ndarray:
    """Zero every coefficient whose band index is not in ``keep``.

    Works on a single (n, 3) block or a stack of them (..., n, 3).
    """
    sh = np.asarray(sh)
    n = sh.shape[-2]
    orders = np.floor(np.sqrt(np.arange(n))).astype(int)
    mask = np.isin(orders, sorted(set(keep)))
    return np.where(mask[:, None], sh, np.zeros((), sh.dtype))


def max_cover_distortion(params: StegoParams, slot: int) -> float:
    """Analytic bound on |stego - cover| for one slot before float storage."""
    b = int(params.budgets()[slot])
    return 2.0 ** (b - params.gamma) * 2.0 * params.quant.c_max


def recovery_bound(params: StegoParams, hidden_index: int) -> float:
    """Per-coefficient recovery tolerance for hidden coefficient ``hidden_index``."""
    b = int(params.budgets()[params.n - 1 - hidden_index])
    g = params.gamma
    return 2.0 ** (g - b) * params.quant.step * (1.0 + 2.0 ** (g - 24))
