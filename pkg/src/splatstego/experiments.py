"""Experiment harness: fidelity runs, robustness probes and the k/tau sweep."""
from __future__ import annotations

import io
from dataclasses import dataclass, replace

from .autoencoder import TrainConfig
from .fixedpoint import QuantParams
from .metrics import psnr, ssim
from .pipeline import embed, extract
from .render import Camera, render
from .sh_stego import StegoParams, embed_sh
from .synth import SynthConfig, gen_scene_pair, reference_hidden_scene


@dataclass
class Trial:
    """A synthetic scene pair plus the renders every comparison needs."""

    cfg: SynthConfig
    cam: Camera
    background: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        self.cover, self.hidden = gen_scene_pair(self.cfg)
        self.cover_image = render(self.cover, self.cam, self.background)
        self.reference = reference_hidden_scene(self.cover, self.hidden, self.cfg)
        self.reference_image = render(self.reference, self.cam, self.background)

    def hidden_psnr(self, hidden_scene) -> float:
        return psnr(render(hidden_scene, self.cam, self.background), self.reference_image)


@dataclass
class SweepRow:
    k: int
    tau: float
    index_count: int
    ae_mse: float
    stego_psnr: float
    stego_ssim: float
    hidden_psnr: float
    hidden_ssim: float


COLUMNS = ("k", "tau", "index_count", "ae_mse", "stego_psnr", "stego_ssim", "hidden_psnr", "hidden_ssim")


def sweep(
    ks=(10, 13, 17, 20, 22),
    taus=(0.0, 0.1, 0.25, 0.3),
    cfg: SynthConfig = SynthConfig(count=5000),
    cam: Camera | None = None,
    quant: QuantParams = QuantParams(),
    train: TrainConfig = TrainConfig(),
) -> list[SweepRow]:
    """Embed/extract over a k x tau grid on one synthetic scene pair."""
    trial = Trial(cfg, cam or Camera.default(128, 128))
    rows = []
    for tau in taus:
        # The opacity model depends only on tau, so train it once per tau.
        base = embed(trial.cover, trial.hidden, StegoParams(k=ks[0], quant=quant), tau=tau, train=train)
        for k in ks:
            params = StegoParams(k=k, quant=quant)
            if k == ks[0]:
                stego, key = base.stego, base.key
            else:
                stego = base.stego.with_sh(embed_sh(trial.cover.sh, trial.hidden.sh, params))
                key = replace(base.key, k=k)
            stego_image = render(stego, trial.cam, trial.background)
            hidden_image = render(extract(stego, key), trial.cam, trial.background)
            rows.append(
                SweepRow(
                    k=k,
                    tau=tau,
                    index_count=len(base.index_set),
                    ae_mse=base.ae_mse,
                    stego_psnr=psnr(stego_image, trial.cover_image),
                    stego_ssim=ssim(stego_image, trial.cover_image),
                    hidden_psnr=psnr(hidden_image, trial.reference_image),
                    hidden_ssim=ssim(hidden_image, trial.reference_image),
                )
            )
    return rows


def format_report(rows: list[SweepRow]) -> str:
    out = io.StringIO()
    out.write("\t".join(COLUMNS) + "\n")
    for r in rows:
        out.write(
            f"{r.k}\t{r.tau:g}\t{r.index_count}\t{r.ae_mse:.6g}\t{r.stego_psnr:.4f}\t"
            f"{r.stego_ssim:.6f}\t{r.hidden_psnr:.4f}\t{r.hidden_ssim:.6f}\n"
        )
    return out.getvalue()


def parse_report(text: str) -> list[SweepRow]:
    lines = [line for line in text.splitlines() if line.strip()]
    if tuple(lines[0].split("\t")) != COLUMNS:
        raise ValueError("not a sweep report")
    rows = []
    for line in lines[1:]:
        f = line.split("\t")
        rows.append(SweepRow(int(f[0]), float(f[1]), int(f[2]), *(float(v) for v in f[3:])))
    return rows
