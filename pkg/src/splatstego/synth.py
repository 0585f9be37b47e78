"""Seeded generator of cover/hidden attribute pairs that share geometry.

Two populations are drawn. "Significant" primitives are opaque in the cover
and carry a hidden opacity that is a smooth, decreasing function of the cover
opacity (the complementary relationship the opacity autoencoder exploits).
The rest are faint in the cover and get a hidden opacity from a low noise
floor, the kind of residue a trained hidden scene leaves behind.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields

import numpy as np

from .scene import SH_COEFFS, GaussianScene, HiddenAttributes, hidden_scene, logit, sigmoid

SIG_COVER_RANGE = (0.55, 0.98)
FAINT_COVER_RANGE = (0.02, 0.5)
SIG_HIDDEN_RANGE = (0.3, 0.95)


@dataclass(frozen=True)
class SynthConfig:
    count: int = 20_000
    bounds: tuple[float, float] = (-0.5, 0.5)
    log_scale_range: tuple[float, float] = (-6.0, -2.0)
    sh_scale: float = 0.5
    decay: float = 0.5
    significant_fraction: float = 0.6
    noise_floor: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if not 0.0 < self.decay <= 1.0:
            raise ValueError("decay must lie in (0, 1]")
        if not 0.0 <= self.significant_fraction <= 1.0:
            raise ValueError("significant_fraction must lie in [0, 1]")
        if not 0.0 <= self.noise_floor < SIG_HIDDEN_RANGE[0]:
            raise ValueError(f"noise_floor must lie in [0, {SIG_HIDDEN_RANGE[0]})")
        if self.bounds[0] >= self.bounds[1]:
            raise ValueError("bounds must be (low, high) with low < high")

    @classmethod
    def from_json(cls, text: str, **overrides) -> "SynthConfig":
        raw = json.loads(text)
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown synth config keys: {', '.join(sorted(unknown))}")
        for key in ("bounds", "log_scale_range"):
            if key in raw:
                raw[key] = tuple(raw[key])
        raw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**raw)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def _sh_block(rng, n, scale, decay):
    orders = np.floor(np.sqrt(np.arange(SH_COEFFS)))
    std = scale * decay**orders
    return rng.normal(size=(n, SH_COEFFS, 3)) * std[None, :, None]


def gen_scene_pair(cfg: SynthConfig = SynthConfig()) -> tuple[GaussianScene, HiddenAttributes]:
    rng = np.random.default_rng(cfg.seed)
    n = cfg.count
    lo, hi = cfg.bounds
    positions = rng.uniform(lo, hi, (n, 3))
    quats = rng.normal(size=(n, 4))
    quats /= np.linalg.norm(quats, axis=1, keepdims=True)
    log_scales = rng.uniform(*cfg.log_scale_range, (n, 3))

    significant = rng.random(n) < cfg.significant_fraction
    u = rng.random(n)
    cover_op = np.where(
        significant,
        SIG_COVER_RANGE[0] + u * (SIG_COVER_RANGE[1] - SIG_COVER_RANGE[0]),
        FAINT_COVER_RANGE[0] + u * (FAINT_COVER_RANGE[1] - FAINT_COVER_RANGE[0]),
    )
    # Decreasing affine map of the cover opacity onto the hidden range.
    t = (SIG_COVER_RANGE[1] - cover_op) / (SIG_COVER_RANGE[1] - SIG_COVER_RANGE[0])
    sig_hidden = SIG_HIDDEN_RANGE[0] + t * (SIG_HIDDEN_RANGE[1] - SIG_HIDDEN_RANGE[0])
    floor_hidden = rng.uniform(0.0, cfg.noise_floor, n) if cfg.noise_floor > 0 else np.zeros(n)
    hidden_op = np.where(significant, sig_hidden, floor_hidden)

    cover_sh = _sh_block(rng, n, cfg.sh_scale, cfg.decay)
    hidden_sh = _sh_block(rng, n, cfg.sh_scale, cfg.decay)

    cover = GaussianScene(
        positions=positions,
        rotations=quats,
        log_scales=log_scales,
        raw_opacities=logit(cover_op),
        sh=cover_sh,
    )
    return cover, HiddenAttributes(sh=hidden_sh, opacity=hidden_op)


def hidden_for_cover(cover: GaussianScene, cfg: SynthConfig = SynthConfig()) -> HiddenAttributes:
    """Hidden attributes synthesized against an existing cover asset.

    Uses the same opacity law as ``gen_scene_pair``, with the cover's own
    opacities clipped into the significant cover range.
    """
    rng = np.random.default_rng(cfg.seed)
    n = cover.count
    cover_op = np.clip(sigmoid(cover.raw_opacities), *SIG_COVER_RANGE)
    significant = rng.random(n) < cfg.significant_fraction
    t = (SIG_COVER_RANGE[1] - cover_op) / (SIG_COVER_RANGE[1] - SIG_COVER_RANGE[0])
    sig_hidden = SIG_HIDDEN_RANGE[0] + t * (SIG_HIDDEN_RANGE[1] - SIG_HIDDEN_RANGE[0])
    floor_hidden = rng.uniform(0.0, cfg.noise_floor, n) if cfg.noise_floor > 0 else np.zeros(n)
    hidden_op = np.where(significant, sig_hidden, floor_hidden)
    return HiddenAttributes(sh=_sh_block(rng, n, cfg.sh_scale, cfg.decay), opacity=hidden_op)


def reference_hidden_scene(cover: GaussianScene, hidden: HiddenAttributes, cfg: SynthConfig) -> GaussianScene:
    """Ground-truth hidden scene: the significant primitives only.

    Primitives at or below the noise floor are generator residue and are not
    part of the hidden content.
    """
    return hidden_scene(cover, hidden, min_opacity=cfg.noise_floor)
