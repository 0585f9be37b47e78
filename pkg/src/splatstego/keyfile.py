"""Binary codec for the owner's private key.

Layout (little-endian)::

    "SISK"  version:u16  gamma:u8  k:u8  n:u8  reserved:u8
    c_max:f64  tau:f64  count:u64
    count x (x, y, z):f32
    layers:u16  layers x (in, out, kernel, stride):u16
    per layer: weight f32[...], bias f32[out]
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .autoencoder import ARCHITECTURE, Autoencoder
from .fixedpoint import QuantParams
from .sh_stego import StegoParams

MAGIC = b"SISK"
VERSION = 1
_FIXED = struct.Struct("<4sHBBBBddQ")


class KeyFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class StegoKey:
    gamma: int
    k: int
    n: int
    c_max: float
    tau: float
    coords: np.ndarray
    model: Autoencoder
    version: int = VERSION

    def __post_init__(self):
        object.__setattr__(self, "coords", np.ascontiguousarray(np.asarray(self.coords, dtype=np.float32).reshape(-1, 3)))

    @property
    def stego_params(self) -> StegoParams:
        return StegoParams(k=self.k, quant=QuantParams(self.gamma, self.c_max), n=self.n)

    def __eq__(self, other):
        if not isinstance(other, StegoKey):
            return NotImplemented
        return (
            (self.version, self.gamma, self.k, self.n) == (other.version, other.gamma, other.k, other.n)
            and self.c_max == other.c_max
            and self.tau == other.tau
            and self.coords.tobytes() == other.coords.tobytes()
            and self.model == other.model
        )


def write_key(key: StegoKey) -> bytes:
    if len(key.coords) == 0:
        raise KeyFormatError("refusing to write a key with an empty index set")
    key.stego_params  # validates the bit budget
    parts = [
        _FIXED.pack(MAGIC, key.version, key.gamma, key.k, key.n, 0, key.c_max, key.tau, len(key.coords)),
        key.coords.astype("<f4").tobytes(),
        struct.pack("<H", len(ARCHITECTURE)),
    ]
    for spec in ARCHITECTURE:
        parts.append(struct.pack("<4H", spec.in_channels, spec.out_channels, spec.kernel, spec.stride))
    for p in key.model.params:
        parts.append(np.asarray(p, dtype="<f4").tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, size: int, what: str) -> bytes:
        if self.pos + size > len(self.data):
            raise KeyFormatError(f"truncated key file while reading {what} at byte {self.pos}")
        chunk = self.data[self.pos : self.pos + size]
        self.pos += size
        return chunk


def read_key(data: bytes) -> StegoKey:
    r = _Reader(bytes(data))
    if r.data[:4] != MAGIC:
        raise KeyFormatError("bad magic: not a stego key file")
    magic, version, gamma, k, n, _, c_max, tau, count = _FIXED.unpack(r.take(_FIXED.size, "header"))
    if version != VERSION:
        raise KeyFormatError(f"unsupported key version {version} (expected {VERSION})")
    coords = np.frombuffer(r.take(12 * count, "coordinates"), dtype="<f4").reshape(count, 3)
    (layers,) = struct.unpack("<H", r.take(2, "layer count"))
    if layers != len(ARCHITECTURE):
        raise KeyFormatError(f"key describes {layers} autoencoder layers, expected {len(ARCHITECTURE)}")
    for spec in ARCHITECTURE:
        desc = struct.unpack("<4H", r.take(8, "layer descriptor"))
        if desc != (spec.in_channels, spec.out_channels, spec.kernel, spec.stride):
            raise KeyFormatError(f"unsupported autoencoder layer {desc}")
    params = []
    for spec in ARCHITECTURE:
        for shape in (spec.weight_shape, (spec.out_channels,)):
            size = int(np.prod(shape))
            params.append(np.frombuffer(r.take(4 * size, "weights"), dtype="<f4").reshape(shape).astype(np.float64))
    if r.pos != len(r.data):
        raise KeyFormatError(f"{len(r.data) - r.pos} trailing bytes after key payload")
    return StegoKey(gamma=gamma, k=k, n=n, c_max=c_max, tau=tau, coords=coords.copy(), model=Autoencoder(params), version=version)
