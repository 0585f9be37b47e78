"""Asset degradations used to probe robustness: pruning and SH noise."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scene import GaussianScene, activate

MODES = ("seq-prune", "random-prune", "sh-noise")


@dataclass(frozen=True)
class AttackConfig:
    mode: str
    ratio: float | None = None
    sigma: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown attack mode {self.mode!r}; choose from {', '.join(MODES)}")
        if self.mode == "sh-noise":
            if self.sigma is None or self.ratio is not None:
                raise ValueError("sh-noise takes --sigma only")
        elif self.ratio is None or self.sigma is not None:
            raise ValueError(f"{self.mode} takes --ratio only")


def _prune_count(n: int, ratio: float) -> int:
    if not 0.0 <= ratio < 1.0:
        raise ValueError(f"pruning ratio must lie in [0, 1), got {ratio}")
    return int(np.floor(ratio * n))


def prune_sequential(scene: GaussianScene, ratio: float) -> GaussianScene:
    """Drop the lowest-opacity fraction; survivors keep their relative order."""
    drop = _prune_count(scene.count, ratio)
    if drop == 0:
        return scene
    opacity, _ = activate(scene)
    victims = np.lexsort((np.arange(scene.count), opacity))[:drop]
    keep = np.ones(scene.count, dtype=bool)
    keep[victims] = False
    return scene.subset(keep)


def prune_random(scene: GaussianScene, ratio: float, seed: int = 0) -> GaussianScene:
    drop = _prune_count(scene.count, ratio)
    if drop == 0:
        return scene
    rng = np.random.default_rng(seed)
    keep = np.ones(scene.count, dtype=bool)
    keep[rng.choice(scene.count, size=drop, replace=False)] = False
    return scene.subset(keep)


def add_sh_noise(scene: GaussianScene, sigma: float, seed: int = 0) -> GaussianScene:
    """Gaussian noise on every stored SH float (DC and rest)."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    rng = np.random.default_rng(seed)
    noisy = scene.sh.astype(np.float64) + rng.normal(0.0, sigma, scene.sh.shape)
    return scene.with_sh(noisy.astype(np.float32))


def apply(scene: GaussianScene, cfg: AttackConfig) -> GaussianScene:
    if cfg.mode == "seq-prune":
        return prune_sequential(scene, cfg.ratio)
    if cfg.mode == "random-prune":
        return prune_random(scene, cfg.ratio, cfg.seed)
    return add_sh_noise(scene, cfg.sigma, cfg.seed)
