"""Hidden-opacity selection, autoencoder mapping and key-side coordinate matching."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autoencoder import Autoencoder, TrainConfig, TrainResult, ae_forward, fit
from .scene import GaussianScene

# Value used for pruned entries in the (1 - opacity) input domain.
ABSENT_INPUT = 1.0


class EmptyIndexSet(ValueError):
    pass


class AmbiguousMatch(ValueError):
    pass


@dataclass(frozen=True)
class IndexSet:
    indices: np.ndarray
    coords: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)


def significant_indices(hidden_opacity, tau: float, positions=None) -> IndexSet:
    """Primitives whose hidden opacity is strictly above ``tau``."""
    alpha = np.asarray(hidden_opacity, dtype=np.float64)
    if not 0.0 <= tau < 1.0:
        raise ValueError(f"tau must lie in [0, 1), got {tau}")
    indices = np.flatnonzero(alpha > tau)
    if len(indices) == 0:
        raise EmptyIndexSet(f"no hidden opacity exceeds tau={tau}; nothing to embed")
    coords = np.zeros((len(indices), 3), np.float32)
    if positions is not None:
        coords = np.asarray(positions, dtype=np.float32)[indices].copy()
    return IndexSet(indices, coords)


def ae_train(cover_opacity, hidden_opacity, cfg: TrainConfig = TrainConfig()) -> TrainResult:
    """Fit the autoencoder that maps ``1 - cover_opacity`` onto ``hidden_opacity``."""
    cover = np.asarray(cover_opacity, dtype=np.float64)
    return fit(1.0 - cover, hidden_opacity, cfg)


def map_opacity(model: Autoencoder, cover_opacity) -> np.ndarray:
    cover = np.asarray(cover_opacity, dtype=np.float64)
    return ae_forward(model, 1.0 - cover)


def map_opacity_partial(model: Autoencoder, cover_opacity, present) -> np.ndarray:
    """Estimate hidden opacities when some key entries are missing from the scene.

    ``cover_opacity`` is aligned with the key; entries where ``present`` is
    False are ignored and fed as ABSENT_INPUT so the sequence stays aligned.
    """
    present = np.asarray(present, dtype=bool)
    inputs = np.where(present, 1.0 - np.asarray(cover_opacity, dtype=np.float64), ABSENT_INPUT)
    return ae_forward(model, inputs)


def match_coordinates(key_coords, scene: GaussianScene) -> np.ndarray:
    """Scene index for each key coordinate, -1 where the primitive is gone.

    Matching is bit-exact on the float32 position triplet.
    """
    key = np.ascontiguousarray(np.asarray(key_coords, dtype=np.float32).reshape(-1, 3))
    if len(key) == 0:
        return np.zeros(0, dtype=np.int64)
    pos = np.ascontiguousarray(scene.positions)
    # Compare raw bit patterns, so -0.0 and 0.0 stay distinct like in the file.
    row = np.dtype((np.void, 12))
    scene_rows = pos.view(row).ravel()
    key_rows = key.view(row).ravel()

    order = np.argsort(scene_rows, kind="stable")
    sorted_rows = scene_rows[order]
    lo = np.searchsorted(sorted_rows, key_rows, side="left")
    hi = np.searchsorted(sorted_rows, key_rows, side="right")
    hits = hi - lo
    if np.any(hits > 1):
        bad = key[np.flatnonzero(hits > 1)[0]]
        xyz = ", ".join(repr(float(c)) for c in bad)
        raise AmbiguousMatch(f"coordinate ({xyz}) matches several primitives")
    result = np.full(len(key), -1, dtype=np.int64)
    found = hits == 1
    result[found] = order[lo[found]]
    return result
