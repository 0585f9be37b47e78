"""Offset-binary fixed-point codec between float SH coefficients and gamma-bit codes."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QuantParams:
    gamma: int = 32
    c_max: float = 8.0

    def __post_init__(self):
        if not 8 <= self.gamma <= 32:
            raise ValueError(f"gamma must lie in [8, 32], got {self.gamma}")
        if not (np.isfinite(self.c_max) and self.c_max > 0):
            raise ValueError(f"c_max must be positive and finite, got {self.c_max}")

    @property
    def step(self) -> float:
        return 2.0 * self.c_max / 2.0 ** self.gamma

    @property
    def max_code(self) -> int:
        return (1 << self.gamma) - 1


def quantize(v, p: QuantParams = QuantParams()):
    """Clamp to [-c_max, c_max - step] and round half-to-even onto the code grid.

    Returns a uint64 array (or a Python int for scalar input).
    """
    arr = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("cannot quantize non-finite values")
    clamped = np.clip(arr, -p.c_max, p.c_max - p.step)
    codes = np.rint((clamped + p.c_max) / p.step)
    codes = np.clip(codes, 0, p.max_code).astype(np.uint64)
    return int(codes) if codes.ndim == 0 else codes


def dequantize(code, p: QuantParams = QuantParams()):
    """Nearest float32 to ``code * step - c_max``."""
    codes = np.asarray(code, dtype=np.uint64)
    if np.any(codes > p.max_code):
        raise ValueError(f"code exceeds {p.gamma} bits")
    values = (codes.astype(np.float64) * p.step - p.c_max).astype(np.float32)
    return values[()] if values.ndim == 0 else values
