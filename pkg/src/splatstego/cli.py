"""Command-line interface: gen, embed, extract, render, attack, verify, sweep."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import attacks
from .autoencoder import TrainConfig
from .experiments import format_report, sweep
from .fixedpoint import QuantParams
from .keyfile import read_key, write_key
from .metrics import compare
from .pipeline import DEFAULT_TAU, check_shared_positions, embed, extract
from .render import Camera, decode_ppm, encode_ppm, render
from .scene import hidden_from_scene, hidden_scene, read_scene, save_scene, write_scene
from .sh_stego import StegoParams
from .synth import SynthConfig, gen_scene_pair, hidden_for_cover

def _write(path, data: bytes) -> None:
    Path(path).write_bytes(data)


def _synth_config(args) -> SynthConfig:
    overrides = {"count": args.count, "seed": args.seed, "decay": args.decay}
    if args.config:
        return SynthConfig.from_json(Path(args.config).read_text(), **overrides)
    return SynthConfig(**{k: v for k, v in overrides.items() if v is not None})


def _params(args) -> StegoParams:
    return StegoParams(k=args.k, quant=QuantParams(args.gamma, args.cmax))


def _camera(args) -> Camera:
    if args.camera:
        return Camera.from_text(Path(args.camera).read_text())
    return Camera.default(args.width, args.height)


def _background(text: str) -> tuple[float, float, float]:
    parts = [float(v) for v in text.split(",")]
    if len(parts) == 1:
        parts *= 3
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("background must be one value or r,g,b")
    return tuple(parts)


def cmd_gen(args) -> None:
    cfg = _synth_config(args)
    cover, hidden = gen_scene_pair(cfg)
    write_scene(args.cover, cover)
    write_scene(args.hidden, hidden_scene(cover, hidden))
    print(f"wrote {cover.count} primitives to {args.cover} and {args.hidden}")


def cmd_embed(args) -> None:
    cover = read_scene(args.cover)
    if args.hidden:
        other = read_scene(args.hidden)
        check_shared_positions(cover, other)
        hidden = hidden_from_scene(other)
    else:
        cfg = SynthConfig.from_json(Path(args.config).read_text()) if args.config else SynthConfig()
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        hidden = hidden_for_cover(cover, cfg)
    train = TrainConfig(max_epochs=args.epochs, target_mse=args.target_mse, seed=args.train_seed)
    result = embed(cover, hidden, _params(args), tau=args.tau, train=train)
    _write(args.out, save_scene(result.stego))
    _write(args.key, write_key(result.key))
    print(f"indices: {len(result.index_set)} of {cover.count}")
    print(f"max coefficient error: {result.max_coeff_error:.6g}")
    print(f"autoencoder mse: {result.ae_mse:.6g} after {result.ae_epochs} epochs")


def cmd_extract(args) -> None:
    stego = read_scene(args.stego)
    key = read_key(Path(args.key).read_bytes())
    hidden = extract(stego, key, max_order=args.max_order)
    write_scene(args.out, hidden)
    print(f"recovered {hidden.count} of {len(key.coords)} key primitives")


def cmd_render(args) -> None:
    scene = read_scene(args.scene)
    image = render(scene, _camera(args), args.background)
    _write(args.out, encode_ppm(image))


def cmd_attack(args) -> None:
    cfg = attacks.AttackConfig(mode=args.mode, ratio=args.ratio, sigma=args.sigma, seed=args.seed)
    scene = read_scene(args.scene)
    attacked = attacks.apply(scene, cfg)
    write_scene(args.out, attacked)
    print(f"{cfg.mode}: {scene.count} -> {attacked.count} primitives")


def cmd_verify(args) -> None:
    a = decode_ppm(Path(args.image_a).read_bytes())
    b = decode_ppm(Path(args.image_b).read_bytes())
    print(compare(a, b))


def cmd_sweep(args) -> None:
    ks = [int(v) for v in args.k.split(",")]
    taus = [float(v) for v in args.tau.split(",")]
    cfg = SynthConfig(count=args.count, seed=args.seed)
    quant = QuantParams(args.gamma, args.cmax)
    rows = sweep(ks, taus, cfg, _camera(args), quant, TrainConfig(max_epochs=args.epochs))
    report = format_report(rows)
    if args.out:
        Path(args.out).write_text(report)
    sys.stdout.write(report)


def _add_stego_flags(p):
    p.add_argument("--k", type=int, default=17, help="base bit budget of the DC carrier slot")
    p.add_argument("--gamma", type=int, default=32, help="fixed-point code width in bits")
    p.add_argument("--cmax", type=float, default=8.0, help="clamp bound of the fixed-point codec")


def _add_camera_flags(p):
    p.add_argument("--camera", help="camera description file")
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--background", type=_background, default=(0.0, 0.0, 0.0), help="r,g,b in [0, 1]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="splatstego", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic cover/hidden asset pair")
    p.add_argument("--cover", required=True)
    p.add_argument("--hidden", required=True)
    p.add_argument("--config", help="JSON synth config")
    p.add_argument("--count", type=int)
    p.add_argument("--decay", type=float)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("embed", help="hide a hidden asset inside a cover asset")
    p.add_argument("--cover", required=True)
    p.add_argument("--hidden", help="hidden asset sharing the cover's positions")
    p.add_argument("--config", help="JSON synth config used when --hidden is absent")
    p.add_argument("--out", required=True, help="stego asset path")
    p.add_argument("--key", required=True, help="key file path")
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.add_argument("--seed", type=int, help="seed for a synthesized hidden set")
    p.add_argument("--train-seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=2000)
    p.add_argument("--target-mse", type=float, default=1e-3)
    _add_stego_flags(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("extract", help="recover the hidden asset with a key")
    p.add_argument("--stego", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-order", type=int, choices=range(4), help="keep SH bands up to this order")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("render", help="render an asset to a binary PPM image")
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True)
    _add_camera_flags(p)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("attack", help="degrade an asset")
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", required=True, choices=attacks.MODES)
    p.add_argument("--ratio", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("verify", help="PSNR/SSIM between two PPM images")
    p.add_argument("image_a")
    p.add_argument("image_b")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="k x tau ablation on a synthetic scene")
    p.add_argument("--k", default="10,13,17,20,22")
    p.add_argument("--tau", default="0,0.1,0.25,0.3")
    p.add_argument("--count", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=2000)
    p.add_argument("--gamma", type=int, default=32)
    p.add_argument("--cmax", type=float, default=8.0)
    p.add_argument("--out", help="also write the report here")
    _add_camera_flags(p)
    p.set_defaults(func=cmd_sweep, width=128, height=128)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"splatstego {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
