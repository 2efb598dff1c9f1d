"""Command-line front end: loss evaluation, gradient auditing, the
convergence simulator, and box-plot statistics recomputation.

Exit codes: 0 success; 1 gradcheck threshold failure; 2 invalid input
(bad box, unknown loss); 3 unwritable output directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, losses, report
from .focal import FocalEIOUParams, focal_eiou_star_weight
from .geometry import Box
from .sim import SimConfig, run_simulation
from .variants import UnknownLossError, make_loss

EXIT_OK = 0
EXIT_THRESHOLD = 1
EXIT_BAD_INPUT = 2
EXIT_UNWRITABLE = 3

GRADCHECK_KINDS = (
    "smoothl1",
    "iou",
    "giou",
    "diou",
    "ciou",
    "eiou",
    "focal-eiou",
    "focal-eiou-star",
    "focal-eiou-v1",
)


def _parse_box(text: str, corner_form: bool, label: str) -> Box:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 4:
        raise ValueError(f"{label} must have 4 comma-separated numbers, got {text!r}")
    if corner_form:
        return Box.from_corners(*parts)
    cx, cy, w, h = parts
    if w <= 0:
        raise ValueError(f"{label}: w must be > 0, got {w}")
    if h <= 0:
        raise ValueError(f"{label}: h must be > 0, got {h}")
    return Box(cx, cy, w, h)


def _load_config_file(path: str) -> dict:
    """Flat key = value lines mirroring CLI flags; '#' starts a comment."""
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad config line {raw!r}, expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def cmd_loss(args) -> int:
    try:
        pred = _parse_box(args.pred, args.corners, "pred")
        target = _parse_box(args.target, args.corners, "target")
        variant = make_loss(
            args.kind,
            beta=args.beta,
            gamma=args.gamma,
            focal_beta=args.focal_beta,
            batch_normalize=False,
        )
    except (ValueError, UnknownLossError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    value, grad = variant.value_and_grad(pred.as_array(), target.as_array())
    grad = np.asarray(grad).reshape(4)
    record = {
        "kind": variant.name,
        "params": variant.params,
        "value": float(value),
        "grad": [float(g) for g in grad],
    }
    print(json.dumps(record))
    return EXIT_OK


def _random_pairs(rng, count, avoid_nonsmooth=1e-4, min_iou=0.0):
    """Seeded valid box pairs, excluding neighborhoods of edge-aligned and
    equal-aspect-ratio configurations where the losses are non-smooth."""
    pred = np.empty((count, 4))
    tgt = np.empty((count, 4))
    filled = 0
    while filled < count:
        n = (count - filled) * 2 + 8
        p = np.column_stack(
            [rng.uniform(0, 20, n), rng.uniform(0, 20, n), rng.uniform(0.5, 10, n), rng.uniform(0.5, 10, n)]
        )
        t = np.column_stack(
            [rng.uniform(0, 20, n), rng.uniform(0, 20, n), rng.uniform(0.5, 10, n), rng.uniform(0.5, 10, n)]
        )
        edge_gap = np.min(
            np.abs(
                np.stack(
                    [
                        (p[:, 0] - 0.5 * p[:, 2]) - (t[:, 0] - 0.5 * t[:, 2]),
                        (p[:, 0] + 0.5 * p[:, 2]) - (t[:, 0] + 0.5 * t[:, 2]),
                        (p[:, 1] - 0.5 * p[:, 3]) - (t[:, 1] - 0.5 * t[:, 3]),
                        (p[:, 1] + 0.5 * p[:, 3]) - (t[:, 1] + 0.5 * t[:, 3]),
                    ]
                )
            ),
            axis=0,
        )
        aspect_gap = np.abs(p[:, 2] / p[:, 3] - t[:, 2] / t[:, 3])
        ok = (edge_gap > avoid_nonsmooth) & (aspect_gap > avoid_nonsmooth)
        if min_iou > 0.0:
            ok &= losses.iou_values(p, t) >= min_iou
        p, t = p[ok], t[ok]
        take = min(len(p), count - filled)
        pred[filled : filled + take] = p[:take]
        tgt[filled : filled + take] = t[:take]
        filled += take
    return pred, tgt


def _fd_grad(value_fn, pred, target, step):
    grad = np.zeros_like(pred)
    for i in range(4):
        hi = pred.copy()
        lo = pred.copy()
        hi[:, i] += step
        lo[:, i] -= step
        grad[:, i] = (value_fn(hi, target) - value_fn(lo, target)) / (2.0 * step)
    return grad


def gradcheck_kind(kind: str, pred, target, step, frozen_oracles=True):
    """Max/mean relative error of a loss's analytic gradient against
    central finite differences over the given pairs.

    CIOU is checked against the frozen-alpha oracle, and the detached-
    weight focal variants against frozen-weight oracles, unless
    frozen_oracles is False (which demonstrates the mismatch between the
    detachment conventions and the plain loss value).
    """
    variant = make_loss(kind, batch_normalize=False)
    _, grad = variant.value_and_grad(pred, target)

    if kind == "ciou" and frozen_oracles:
        alpha = losses.ciou_alpha(pred, target)
        value_fn = lambda p, t: losses.ciou_value_frozen_alpha(p, t, alpha)
    elif kind == "focal-eiou" and frozen_oracles:
        weight = losses.iou_values(pred, target) ** 0.5
        value_fn = lambda p, t: weight * losses.eiou_loss_vg(p, t)[0]
    elif kind == "focal-eiou-star" and frozen_oracles:
        weight = focal_eiou_star_weight(losses.iou_values(pred, target), 0.5)
        value_fn = lambda p, t: weight * losses.eiou_loss_vg(p, t)[0]
    else:
        value_fn = lambda p, t: variant.value_and_grad(p, t)[0]

    fd = _fd_grad(value_fn, pred, target, step)
    denom = np.maximum(np.maximum(np.abs(grad), np.abs(fd)), 1e-3)
    rel = np.abs(grad - fd) / denom
    return float(rel.max()), float(rel.mean())


def cmd_gradcheck(args) -> int:
    kinds = [k.strip() for k in args.kinds.split(",")] if args.kinds else list(GRADCHECK_KINDS)
    rng = np.random.default_rng(args.seed)
    pred, target = _random_pairs(rng, args.samples)
    results = {}
    all_pass = True
    for kind in kinds:
        try:
            max_err, mean_err = gradcheck_kind(
                kind, pred, target, args.step, frozen_oracles=not args.no_frozen_oracles
            )
        except UnknownLossError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_BAD_INPUT
        ok = max_err < args.threshold
        all_pass &= ok
        results[kind] = {"max_rel_err": max_err, "mean_rel_err": mean_err, "pass": ok}
    print(
        json.dumps(
            {
                "samples": args.samples,
                "step": args.step,
                "threshold": args.threshold,
                "results": results,
            },
            indent=2,
        )
    )
    return EXIT_OK if all_pass else EXIT_THRESHOLD


def _apply_config_file(args, argv):
    """Config-file values fill in flags the user did not pass explicitly."""
    if not args.config:
        return args
    file_values = _load_config_file(args.config)
    passed = {a.split("=")[0].lstrip("-").replace("-", "_") for a in argv if a.startswith("--")}
    casts = {
        "iters": int,
        "seed": int,
        "points": int,
        "gamma": float,
        "focal_beta": float,
        "streaming": lambda v: v.lower() in ("1", "true", "yes"),
        "literal_ascent": lambda v: v.lower() in ("1", "true", "yes"),
        "save_tensor": lambda v: v.lower() in ("1", "true", "yes"),
    }
    for key, value in file_values.items():
        if key in ("config",) or key in passed or not hasattr(args, key):
            continue
        setattr(args, key, casts.get(key, str)(value))
    return args


def cmd_simulate(args, argv) -> int:
    args = _apply_config_file(args, argv)
    out_dir = Path(args.out or os.environ.get("BOXLOSS_OUT", "."))
    variant_names = [v.strip() for v in args.variants.split(",") if v.strip()]
    try:
        variants = [
            make_loss(v, gamma=args.gamma, focal_beta=args.focal_beta) for v in variant_names
        ]
    except UnknownLossError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT

    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        print(f"error: output directory {out_dir} is not writable: {exc}", file=sys.stderr)
        return EXIT_UNWRITABLE

    setup = f"setup{args.setup}"
    t0 = time.time()
    configs = []
    clamp_events = {}
    curves = {}
    for variant in variants:
        cfg = SimConfig(
            setup=setup,
            loss=variant,
            iterations=args.iters,
            seed=args.seed,
            point_count=args.points,
            literal_ascent=args.literal_ascent,
            streaming=args.streaming,
        )
        result = run_simulation(cfg)
        vdir = out_dir / variant.name
        vdir.mkdir(parents=True, exist_ok=True)
        report.write_errors_csv(vdir / "errors.csv", result.errors)
        report.write_iou_stats_csv(vdir / "iou_stats.csv", result.iou_stats)
        if args.save_tensor and result.iou_tensor is not None:
            np.save(vdir / "iou_tensor.npy", result.iou_tensor)
        configs.append(cfg.to_dict())
        clamp_events[variant.name] = result.clamp_events
        curves[variant.name] = report.read_errors_csv(vdir / "errors.csv")

    manifest = report.RunManifest(
        configs=configs,
        version=__version__,
        wall_time_s=time.time() - t0,
        clamp_events=clamp_events,
    )
    report.write_manifest(out_dir / "manifest.json", manifest)
    report.render_comparison_svg(curves, out_dir / "compare.svg")
    print(f"wrote {len(variants)} variant(s) to {out_dir}")
    return EXIT_OK


def cmd_stats(args) -> int:
    tensor = np.load(args.input)
    if tensor.ndim < 2:
        print("error: expected an IOU tensor with a leading iteration axis", file=sys.stderr)
        return EXIT_BAD_INPUT
    stats = [
        report.box_plot_stats(tensor[t].ravel(), t + 1) for t in range(tensor.shape[0])
    ]
    report.write_iou_stats_csv(args.out, stats)
    print(f"wrote {len(stats)} rows to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boxloss", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_loss = sub.add_parser("loss", help="evaluate one loss on a box pair")
    p_loss.add_argument("--kind", required=True)
    p_loss.add_argument("--pred", required=True, help="cx,cy,w,h (or x1,y1,x2,y2 with --corners)")
    p_loss.add_argument("--target", required=True)
    p_loss.add_argument("--corners", action="store_true", help="boxes given as x1,y1,x2,y2")
    p_loss.add_argument("--beta", type=float, default=1.0, help="SmoothL1 threshold")
    p_loss.add_argument("--gamma", type=float, default=0.5, help="focal-eiou exponent")
    p_loss.add_argument("--focal-beta", type=float, default=0.8, help="FocalL1 shape parameter")

    p_gc = sub.add_parser("gradcheck", help="audit analytic gradients vs finite differences")
    p_gc.add_argument("--kinds", default=None, help="comma list; default audits all kinds")
    p_gc.add_argument("--samples", type=int, default=1000)
    p_gc.add_argument("--seed", type=int, default=0)
    p_gc.add_argument("--step", type=float, default=1e-6)
    p_gc.add_argument("--threshold", type=float, default=1e-5)
    p_gc.add_argument(
        "--no-frozen-oracles",
        action="store_true",
        help="finite-difference the plain values even for detachment-convention losses "
        "(ciou and the weighted focal variants then report mismatches by design)",
    )

    p_sim = sub.add_parser("simulate", help="run the convergence simulation")
    p_sim.add_argument("--setup", type=int, choices=(1, 2), default=1)
    p_sim.add_argument("--variants", default="iou,giou,ciou,eiou,focal-eiou")
    p_sim.add_argument("--iters", type=int, default=200)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--points", type=int, default=None)
    p_sim.add_argument("--gamma", type=float, default=0.5)
    p_sim.add_argument("--focal-beta", type=float, default=0.8)
    p_sim.add_argument("--streaming", action="store_true", help="per-iteration stats only")
    p_sim.add_argument("--literal-ascent", action="store_true", help="apply +mu*grad verbatim")
    p_sim.add_argument("--save-tensor", action="store_true", help="also save iou_tensor.npy")
    p_sim.add_argument("--out", default=None, help="output directory (default $BOXLOSS_OUT or .)")
    p_sim.add_argument("--config", default=None, help="key = value file mirroring these flags")

    p_stats = sub.add_parser("stats", help="recompute box-plot stats from a stored IOU tensor")
    p_stats.add_argument("--input", required=True, help=".npy IOU tensor, iterations first")
    p_stats.add_argument("--out", required=True, help="destination iou_stats.csv")

    return parser


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "loss":
        return cmd_loss(args)
    if args.command == "gradcheck":
        return cmd_gradcheck(args)
    if args.command == "simulate":
        return cmd_simulate(args, argv)
    if args.command == "stats":
        return cmd_stats(args)
    parser.error(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
