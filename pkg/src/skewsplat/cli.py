"""Command-line entry points: skewsplat <subcommand>.

Subcommands: fit1d (1D mixture on a square wave), fit2d (single-image
overfit), fit (multi-view training on a dataset directory), render-traj
(offline trajectory to PNG frames), metrics (PSNR/SSIM of two images),
serve (interactive render service).  Every run with a fixed --seed is
bit-reproducible.  Exit code is 0 on success and 1 on any error, with the
message on stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from .optimize import TrainConfig

_CFG_HELP = {
    "lr_position": "position learning rate",
    "lr_position_final": "final position lr for exponential decay (default: no decay)",
    "lr_scale": "log-scale learning rate",
    "lr_rot": "rotation learning rate",
    "lr_opacity": "opacity-logit learning rate",
    "lr_sh": "color coefficient learning rate",
    "lr_beta": "skewness learning rate (0 freezes skew)",
    "tau_uv": "densify threshold on the mean screen-position gradient",
    "tau_z": "densify threshold on the max depth gradient (nan = calibrate from data, inf = off)",
    "densify_interval": "iterations between densification passes",
    "densify_start": "first iteration eligible for densification",
    "densify_end": "last iteration eligible for densification",
    "prune_alpha": "opacity floor below which primitives are pruned",
    "split_scale_threshold": "world-scale size above which dense primitives split instead of clone",
    "max_screen_radius": "prune primitives whose screen radius exceeds this (default: off)",
    "lambda_ssim": "SSIM weight in the 'L1 + SSIM' loss mix",
    "lambda_beta_reg": "L2 penalty weight on skewness magnitude",
    "lambda_opacity_reg": "L1 penalty weight on opacity",
    "iterations": "number of training iterations",
    "seed": "RNG seed; fixed seeds give bit-identical runs",
}


def add_config_flags(parser: argparse.ArgumentParser) -> None:
    """One flag per TrainConfig field, defaults taken from the dataclass."""
    defaults = TrainConfig()
    group = parser.add_argument_group("training configuration")
    for field in dataclasses.fields(TrainConfig):
        kind = int if field.type.startswith("int") else float
        group.add_argument("--" + field.name.replace("_", "-"), type=kind,
                           default=getattr(defaults, field.name),
                           help=_CFG_HELP[field.name])


def config_from_args(args: argparse.Namespace) -> TrainConfig:
    values = {f.name: getattr(args, f.name)
              for f in dataclasses.fields(TrainConfig)}
    return TrainConfig(**values)


def _write_json(path: str | None, payload: dict) -> None:
    text = json.dumps(payload, indent=1)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_fit1d(args) -> int:
    from .fit1d import fit1d, square_wave

    x = np.linspace(-args.half_span, args.half_span, args.samples)
    target = square_wave(x, period=args.period)
    res = fit1d(x, target, k=args.components, skew_enabled=not args.no_skew,
                steps=args.iters, lr=args.lr, seed=args.seed)
    payload = {
        "final_loss": res.mse,
        "components": [
            {"mu": float(m), "sigma": float(s), "beta": float(b),
             "weight": float(w)}
            for m, s, b, w in zip(res.mu, res.sigma, res.beta, res.weight)
        ],
        "history": [float(v) for v in res.history],
        "restarted": res.restarted,
        "skew_enabled": not args.no_skew,
    }
    _write_json(args.out, payload)
    print(f"fit1d: {args.components} components, {args.iters} iters, "
          f"final mse {res.mse:.3e}", file=sys.stderr)
    return 0


def cmd_fit2d(args) -> int:
    from .dataset import load_image, save_image
    from .fit2d import fit2d
    from .raster.forward import render_forward

    target = load_image(args.image)
    cfg = config_from_args(args)
    res = fit2d(target, args.primitives, cfg, skew_enabled=not args.no_skew,
                sh_degree=args.sh_degree)
    if args.out_scene:
        res.scene.save_ply(args.out_scene)
    if args.out_render:
        save_image(args.out_render, render_forward(res.scene, res.view).color)
    if args.out:
        _write_json(args.out, {
            "final_psnr": res.final_psnr,
            "psnr_curve": [[it, p] for it, p in res.psnr_curve],
            "diverged_at": res.diverged_at,
            "n_skipped": res.n_skipped,
        })
    print(f"fit2d: {args.primitives} primitives, final psnr "
          f"{res.final_psnr:.2f} dB", file=sys.stderr)
    return 0


def cmd_fit(args) -> int:
    import contextlib

    from .dataset import load_dataset
    from .trainer import fit_multiview

    dataset = load_dataset(args.dataset)
    cfg = config_from_args(args)
    if args.log and args.log != "-":
        stream_cm = open(args.log, "w")
    else:
        stream_cm = contextlib.nullcontext(sys.stderr if args.log else None)
    with stream_cm as stream:
        res = fit_multiview(dataset, cfg, n_init=args.n_init,
                            sh_degree=args.sh_degree,
                            skew_enabled=not args.no_skew,
                            densify=not args.no_densify,
                            log_every=args.log_every, log_stream=stream)
    if args.out_scene:
        res.scene.save_ply(args.out_scene)
    _write_json(args.out, {
        "test_psnr": res.test_psnr,
        "test_ssim": res.test_ssim,
        "n_primitives": len(res.scene),
        "diverged_at": res.diverged_at,
        "n_skipped": res.n_skipped,
    })
    return 0


def cmd_render_traj(args) -> int:
    from .trajectory import render_trajectory

    paths = render_trajectory(args.scene, args.trajectory, args.out)
    print(f"wrote {len(paths)} frames to {args.out}", file=sys.stderr)
    return 0


def cmd_metrics(args) -> int:
    from .dataset import load_image
    from .metrics import compare

    result = compare(load_image(args.image_a), load_image(args.image_b))
    _write_json(args.out, {"psnr": result.psnr, "ssim": result.ssim})
    return 0


def cmd_serve(args) -> int:
    from .service import run_service

    run_service(args.scene, host=args.host, port=args.port,
                max_pixels=args.max_pixels)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skewsplat",
        description="Fit and render scenes of 3D skew-normal primitives.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit1d",
                       help="fit a 1D skew-normal mixture to a square wave")
    p.add_argument("--components", type=int, default=5,
                   help="number of mixture components")
    p.add_argument("--iters", type=int, default=2000,
                   help="gradient descent steps")
    p.add_argument("--lr", type=float, default=0.05, help="learning rate")
    p.add_argument("--seed", type=int, default=0, help="RNG seed")
    p.add_argument("--samples", type=int, default=256,
                   help="number of grid samples")
    p.add_argument("--half-span", type=float, default=3.0,
                   help="grid covers [-half-span, half-span]")
    p.add_argument("--period", type=float, default=3.0,
                   help="square wave period")
    p.add_argument("--no-skew", action="store_true",
                   help="freeze all skewness at 0")
    p.add_argument("--out", help="write the result JSON here (default: stdout)")
    p.set_defaults(func=cmd_fit1d)

    p = sub.add_parser("fit2d", help="overfit primitives to a single image")
    p.add_argument("image", help="target PNG")
    p.add_argument("--primitives", type=int, default=64,
                   help="number of primitives")
    p.add_argument("--sh-degree", type=int, default=0,
                   help="spherical harmonics degree for color")
    p.add_argument("--no-skew", action="store_true",
                   help="freeze all skewness at 0")
    p.add_argument("--out-scene", help="write the fitted scene PLY here")
    p.add_argument("--out-render", help="write the final render PNG here")
    p.add_argument("--out", help="write the PSNR curve JSON here")
    add_config_flags(p)
    p.set_defaults(func=cmd_fit2d)

    p = sub.add_parser("fit", help="train on a multi-view dataset directory")
    p.add_argument("dataset", help="directory with cameras.json and images")
    p.add_argument("--n-init", type=int, default=100,
                   help="initial primitive count")
    p.add_argument("--sh-degree", type=int, default=0,
                   help="spherical harmonics degree for color")
    p.add_argument("--no-skew", action="store_true",
                   help="freeze all skewness at 0")
    p.add_argument("--no-densify", action="store_true",
                   help="hold the primitive count fixed")
    p.add_argument("--log-every", type=int, default=100,
                   help="iterations between progress log lines")
    p.add_argument("--log", help="write JSON-lines progress to this file "
                                 "('-' for stderr; default: no progress output)")
    p.add_argument("--out-scene", help="write the trained scene PLY here")
    p.add_argument("--out", help="write the summary JSON here (default: stdout)")
    add_config_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("render-traj",
                       help="render a camera trajectory to PNG frames")
    p.add_argument("scene", help="scene PLY")
    p.add_argument("trajectory", help="trajectory JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_render_traj)

    p = sub.add_parser("metrics", help="PSNR and SSIM between two images")
    p.add_argument("image_a")
    p.add_argument("image_b")
    p.add_argument("--out", help="write the metrics JSON here (default: stdout)")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("serve", help="serve interactive renders of a scene")
    p.add_argument("--scene", required=True, help="scene PLY")
    p.add_argument("--host", default="127.0.0.1", help="bind address")
    p.add_argument("--port", type=int, default=8000, help="bind port")
    p.add_argument("--max-pixels", type=int, default=4096 * 4096,
                   help="reject frames larger than this many pixels")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
