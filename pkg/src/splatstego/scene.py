"""Gaussian scene containers and the binary point-cloud asset codec.

The asset layout is the one written by the reference 3DGS trainer: a text
header followed by 62 little-endian float32 properties per primitive.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

SH_COEFFS = 16
SH_REST = SH_COEFFS - 1

PROPERTY_NAMES: tuple[str, ...] = (
    ("x", "y", "z", "nx", "ny", "nz")
    + tuple(f"f_dc_{i}" for i in range(3))
    + tuple(f"f_rest_{i}" for i in range(3 * SH_REST))
    + ("opacity",)
    + tuple(f"scale_{i}" for i in range(3))
    + tuple(f"rot_{i}" for i in range(4))
)
_FLOAT_TYPES = ("float", "float32")
_RECORD_BYTES = 4 * len(PROPERTY_NAMES)


class AssetFormatError(ValueError):
    """Malformed asset; ``offset`` is the byte position where parsing failed."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


def sh_order(j):
    """Band index of flat SH slot ``j`` (works on ints and integer arrays)."""
    return np.floor(np.sqrt(j)).astype(int) if isinstance(j, np.ndarray) else int(j ** 0.5)


def _f32(a, shape):
    return np.ascontiguousarray(np.asarray(a, dtype=np.float32).reshape(shape))


@dataclass(frozen=True, eq=False)
class GaussianScene:
    """Structure-of-arrays scene. Values are kept exactly as stored in the asset.

    ``sh`` has shape (N, 16, 3): slot j of every colour channel, slot 0 is DC.
    """

    positions: np.ndarray
    rotations: np.ndarray
    log_scales: np.ndarray
    raw_opacities: np.ndarray
    sh: np.ndarray
    normals: np.ndarray = field(default=None)

    def __post_init__(self):
        n = len(self.positions)
        object.__setattr__(self, "positions", _f32(self.positions, (n, 3)))
        object.__setattr__(self, "rotations", _f32(self.rotations, (n, 4)))
        object.__setattr__(self, "log_scales", _f32(self.log_scales, (n, 3)))
        object.__setattr__(self, "raw_opacities", _f32(self.raw_opacities, (n,)))
        object.__setattr__(self, "sh", _f32(self.sh, (n, SH_COEFFS, 3)))
        normals = np.zeros((n, 3), np.float32) if self.normals is None else self.normals
        object.__setattr__(self, "normals", _f32(normals, (n, 3)))
        for arr in (self.positions, self.rotations, self.log_scales, self.raw_opacities, self.sh):
            arr.setflags(write=False)
        self.normals.setflags(write=False)

    @property
    def count(self) -> int:
        return len(self.positions)

    def __len__(self) -> int:
        return self.count

    def __eq__(self, other):
        if not isinstance(other, GaussianScene):
            return NotImplemented
        return all(
            a.shape == b.shape and a.tobytes() == b.tobytes()
            for a, b in zip(self._arrays(), other._arrays())
        )

    def _arrays(self):
        return (self.positions, self.normals, self.sh, self.raw_opacities, self.log_scales, self.rotations)

    def subset(self, keep) -> "GaussianScene":
        """Primitives selected by an index array or boolean mask, order preserved."""
        keep = np.asarray(keep)
        return GaussianScene(
            positions=self.positions[keep],
            rotations=self.rotations[keep],
            log_scales=self.log_scales[keep],
            raw_opacities=self.raw_opacities[keep],
            sh=self.sh[keep],
            normals=self.normals[keep],
        )

    def with_sh(self, sh) -> "GaussianScene":
        return replace(self, sh=sh)

    def with_opacities(self, raw_opacities) -> "GaussianScene":
        return replace(self, raw_opacities=raw_opacities)

    @classmethod
    def empty(cls) -> "GaussianScene":
        return cls(np.zeros((0, 3)), np.zeros((0, 4)), np.zeros((0, 3)), np.zeros(0), np.zeros((0, SH_COEFFS, 3)))


@dataclass(frozen=True)
class HiddenAttributes:
    """Secret SH blocks and activated opacities, aligned with a cover scene."""

    sh: np.ndarray
    opacity: np.ndarray

    def __post_init__(self):
        n = len(self.opacity)
        object.__setattr__(self, "sh", _f32(self.sh, (n, SH_COEFFS, 3)))
        object.__setattr__(self, "opacity", np.asarray(self.opacity, dtype=np.float64).reshape(n))

    @property
    def count(self) -> int:
        return len(self.opacity)


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def logit(p, eps: float = 1e-6):
    p = np.clip(np.asarray(p, dtype=np.float64), eps, 1.0 - eps)
    return np.log(p) - np.log1p(-p)


def activate(scene: GaussianScene) -> tuple[np.ndarray, np.ndarray]:
    """Activated (opacity, scale) arrays in float64; the scene is untouched."""
    return sigmoid(scene.raw_opacities), np.exp(scene.log_scales.astype(np.float64))


def hidden_scene(cover: GaussianScene, hidden: HiddenAttributes, min_opacity: float | None = None) -> GaussianScene:
    """Cover geometry combined with hidden colours and opacities.

    When ``min_opacity`` is given, primitives whose hidden opacity does not
    exceed it are dropped.
    """
    if hidden.count != cover.count:
        raise ValueError(f"hidden attributes have {hidden.count} entries, cover has {cover.count}")
    scene = replace(cover, sh=hidden.sh, raw_opacities=logit(hidden.opacity))
    if min_opacity is None:
        return scene
    return scene.subset(np.flatnonzero(hidden.opacity > min_opacity))


def hidden_from_scene(scene: GaussianScene) -> HiddenAttributes:
    return HiddenAttributes(sh=scene.sh, opacity=sigmoid(scene.raw_opacities))


# --- asset codec -------------------------------------------------------------

def _header(count: int) -> bytes:
    lines = ["ply", "format binary_little_endian 1.0", f"element vertex {count}"]
    lines += [f"property float {name}" for name in PROPERTY_NAMES]
    lines.append("end_header")
    return ("\n".join(lines) + "\n").encode("ascii")


def save_scene(scene: GaussianScene) -> bytes:
    n = scene.count
    body = np.empty((n, len(PROPERTY_NAMES)), dtype="<f4")
    body[:, 0:3] = scene.positions
    body[:, 3:6] = scene.normals
    body[:, 6:9] = scene.sh[:, 0, :]
    # f_rest is channel-major: all of R's 15 coefficients, then G, then B.
    body[:, 9:54] = scene.sh[:, 1:, :].transpose(0, 2, 1).reshape(n, 3 * SH_REST)
    body[:, 54] = scene.raw_opacities
    body[:, 55:58] = scene.log_scales
    body[:, 58:62] = scene.rotations
    return _header(n) + body.tobytes()


def _read_line(data: bytes, pos: int) -> tuple[str, int]:
    end = data.find(b"\n", pos)
    if end < 0:
        raise AssetFormatError("malformed header: missing end_header", pos)
    try:
        return data[pos:end].decode("ascii").rstrip("\r"), end + 1
    except UnicodeDecodeError:
        raise AssetFormatError("malformed header: non-ASCII bytes", pos) from None


def load_scene(data: bytes) -> GaussianScene:
    data = bytes(data)
    line, pos = _read_line(data, 0)
    if line != "ply":
        raise AssetFormatError("malformed header: missing 'ply' magic", 0)
    line_start = pos
    line, pos = _read_line(data, pos)
    if line != "format binary_little_endian 1.0":
        raise AssetFormatError(f"malformed header: unsupported format line {line!r}", line_start)

    count = None
    names: list[str] = []
    while True:
        line_start = pos
        line, pos = _read_line(data, pos)
        tokens = line.split()
        if not tokens or tokens[0] == "comment":
            continue
        if tokens[0] == "end_header":
            break
        if tokens[0] == "element":
            if count is not None or len(tokens) != 3 or tokens[1] != "vertex":
                raise AssetFormatError(f"malformed header: unexpected element line {line!r}", line_start)
            try:
                count = int(tokens[2])
            except ValueError:
                raise AssetFormatError(f"malformed header: bad vertex count {tokens[2]!r}", line_start) from None
            if count < 0:
                raise AssetFormatError("malformed header: negative vertex count", line_start)
        elif tokens[0] == "property":
            if count is None:
                raise AssetFormatError("malformed header: property before element", line_start)
            if len(tokens) != 3 or tokens[1] not in _FLOAT_TYPES:
                raise AssetFormatError(f"property list mismatch: {line!r}", line_start)
            names.append(tokens[2])
        else:
            raise AssetFormatError(f"malformed header: unexpected line {line!r}", line_start)

    if count is None:
        raise AssetFormatError("malformed header: no vertex element", pos)
    if tuple(names) != PROPERTY_NAMES:
        missing = [p for p in PROPERTY_NAMES if p not in names]
        detail = f"missing {missing[0]}" if missing else "unexpected order or extra properties"
        raise AssetFormatError(f"property list mismatch: {detail}", pos)

    need = count * _RECORD_BYTES
    if len(data) - pos < need:
        raise AssetFormatError(
            f"truncated body: expected {need} bytes for {count} primitives, found {len(data) - pos}",
            len(data),
        )
    body = np.frombuffer(data, dtype="<f4", count=count * len(PROPERTY_NAMES), offset=pos)
    body = body.reshape(count, len(PROPERTY_NAMES)).astype(np.float32)
    sh = np.empty((count, SH_COEFFS, 3), np.float32)
    sh[:, 0, :] = body[:, 6:9]
    sh[:, 1:, :] = body[:, 9:54].reshape(count, 3, SH_REST).transpose(0, 2, 1)
    return GaussianScene(
        positions=body[:, 0:3],
        normals=body[:, 3:6],
        sh=sh,
        raw_opacities=body[:, 54],
        log_scales=body[:, 55:58],
        rotations=body[:, 58:62],
    )


def header_bytes(data: bytes) -> bytes:
    """Everything up to and including the ``end_header`` line."""
    marker = b"end_header\n"
    end = data.find(marker)
    if end < 0:
        raise AssetFormatError("malformed header: missing end_header", 0)
    return data[: end + len(marker)]


def read_scene(path) -> GaussianScene:
    with open(path, "rb") as fh:
        return load_scene(fh.read())


def write_scene(path, scene: GaussianScene) -> None:
    with open(path, "wb") as fh:
        fh.write(save_scene(scene))
