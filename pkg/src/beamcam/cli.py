"""Command line interface.

Subcommands: generate, evaluate, render, inspect, sweep. Exit code 0 on
success, 1 with a message on stderr on any error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import dataset as ds
from .pipeline import DetectorNoiseModel, Simulator
from .render import render_debug_frame, write_ppm
from .scenario import ScenarioError, parse_scenario


def _load_scenario(path: str):
    text = Path(path).read_text(encoding="utf-8")
    return parse_scenario(text)


def _render_frame_bytes(sim: Simulator, frame: int) -> bytes:
    scene, positions = sim.frame_scene(frame)
    truth = sim.frame_truth(frame)
    bboxes = [u.bbox for u in truth.ues if u.bbox is not None]
    img = render_debug_frame(sim.camera, scene.tset.meshes, bboxes)
    return write_ppm(img)


def _cmd_generate(args) -> int:
    scenario = _load_scenario(args.scenario)
    base_dir = Path(args.scenario).parent
    model = DetectorNoiseModel(pixel_sigma=args.pixel_sigma,
                               miss_prob=args.miss_prob, seed=args.seed)
    sim = Simulator(scenario, args.bs, base_dir)
    records = sim.apply_detector(sim.run_truth(), model)
    metadata = {
        "seed": args.seed,
        "pixel_sigma": args.pixel_sigma,
        "miss_prob": args.miss_prob,
        "scenario": Path(args.scenario).name,
        "bs": sim.bs.name,
    }
    count = ds.export_records(records, args.out, metadata)
    rendered = 0
    if args.render_every:
        render_dir = Path(args.render_dir or Path(args.out).parent)
        render_dir.mkdir(parents=True, exist_ok=True)
        for frame in range(0, scenario.system.frames, args.render_every):
            out = render_dir / f"frame_{frame:06d}.ppm"
            out.write_bytes(_render_frame_bytes(sim, frame))
            rendered += 1
    print(f"wrote {count} records to {args.out}"
          + (f", {rendered} renders" if rendered else ""))
    return 0


def _cmd_evaluate(args) -> int:
    _, records = ds.import_records(args.dataset)
    ks = tuple(args.topk)
    metrics = ds.evaluate(records, ks)
    if args.json:
        print(json.dumps(metrics.as_dict(), indent=2, sort_keys=True))
    else:
        print(metrics.format_table())
    return 0


def _cmd_render(args) -> int:
    scenario = _load_scenario(args.scenario)
    sim = Simulator(scenario, args.bs, Path(args.scenario).parent)
    if not 0 <= args.frame < scenario.system.frames:
        raise ValueError(f"frame {args.frame} outside "
                         f"[0, {scenario.system.frames})")
    Path(args.out).write_bytes(_render_frame_bytes(sim, args.frame))
    print(f"wrote {args.out}")
    return 0


def _cmd_inspect(args) -> int:
    _, records = ds.import_records(args.dataset)
    summaries = []
    for rec in records:
        summaries.append({
            "frame": rec.frame,
            "bs": rec.bs_name,
            "active": sum(u.active for u in rec.ues),
            "visible": sum(u.bbox is not None for u in rec.ues),
            "detected": sum(u.detection is not None for u in rec.ues),
            "outages": sum(u.outage for u in rec.ues),
            "correct": sum(
                u.predicted_index is not None
                and u.predicted_index == u.optimal_index
                for u in rec.ues
            ),
        })
    if args.json:
        print(json.dumps(summaries))
    else:
        print(f"{'frame':>6} {'active':>6} {'visible':>7} "
              f"{'detected':>8} {'outages':>7} {'correct':>7}")
        for s in summaries:
            print(f"{s['frame']:>6} {s['active']:>6} {s['visible']:>7} "
                  f"{s['detected']:>8} {s['outages']:>7} {s['correct']:>7}")
    return 0


def _cmd_sweep(args) -> int:
    scenario = _load_scenario(args.scenario)
    sim = Simulator(scenario, args.bs, Path(args.scenario).parent)
    truth = sim.run_truth()
    sigmas = [float(s) for s in args.sigmas.split(",")]
    rows = []
    for sigma in sigmas:
        accs = []
        for seed in range(args.seed, args.seed + args.seeds):
            model = DetectorNoiseModel(pixel_sigma=sigma,
                                       miss_prob=args.miss_prob, seed=seed)
            records = sim.apply_detector(truth, model)
            accs.append(ds.evaluate(records).top1_accuracy)
        rows.append((sigma, sum(accs) / len(accs)))
    lines = ["pixel_sigma,mean_top1_accuracy"]
    lines += [f"{sigma:g},{acc:.6f}" for sigma, acc in rows]
    csv_text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(csv_text, encoding="utf-8")
        print(f"wrote {args.out}")
    if args.json:
        print(json.dumps([{"pixel_sigma": s, "mean_top1_accuracy": a}
                          for s, a in rows]))
    elif not args.out:
        print(csv_text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beamcam",
        description="Co-simulate synchronized visual and mmWave beam data "
                    "from a text scenario, and evaluate camera-assisted "
                    "beam selection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate",
                         help="simulate a scenario into a JSON-lines dataset")
    gen.add_argument("--scenario", required=True, help="scenario file path")
    gen.add_argument("--out", required=True, help="output dataset path")
    gen.add_argument("--seed", type=int, default=0, help="detector RNG seed")
    gen.add_argument("--pixel-sigma", type=float, default=0.0,
                     help="detector bbox-center jitter (pixels)")
    gen.add_argument("--miss-prob", type=float, default=0.0,
                     help="detector miss probability")
    gen.add_argument("--render-every", type=int, default=0, metavar="N",
                     help="write a PPM render every N frames")
    gen.add_argument("--render-dir", default=None,
                     help="directory for renders (default: alongside --out)")
    gen.add_argument("--bs", default=None, help="BS name (default: first)")
    gen.set_defaults(func=_cmd_generate)

    ev = sub.add_parser("evaluate", help="compute metrics from a dataset")
    ev.add_argument("dataset", help="dataset file from 'generate'")
    ev.add_argument("--json", action="store_true",
                    help="machine-readable output")
    ev.add_argument("--topk", type=int, nargs="+", default=[1, 3],
                    help="k values for top-k accuracy")
    ev.set_defaults(func=_cmd_evaluate)

    ren = sub.add_parser("render", help="render one frame to a PPM image")
    ren.add_argument("--scenario", required=True)
    ren.add_argument("--frame", type=int, required=True)
    ren.add_argument("--out", required=True)
    ren.add_argument("--bs", default=None)
    ren.set_defaults(func=_cmd_render)

    ins = sub.add_parser("inspect", help="per-frame dataset summary")
    ins.add_argument("dataset")
    ins.add_argument("--json", action="store_true")
    ins.set_defaults(func=_cmd_inspect)

    sw = sub.add_parser("sweep",
                        help="accuracy vs detector noise sigma (CSV)")
    sw.add_argument("--scenario", required=True)
    sw.add_argument("--sigmas", default="0,2,5,10,20",
                    help="comma-separated pixel sigmas")
    sw.add_argument("--seeds", type=int, default=20,
                    help="number of detector seeds per sigma")
    sw.add_argument("--seed", type=int, default=0, help="first seed")
    sw.add_argument("--miss-prob", type=float, default=0.0)
    sw.add_argument("--out", default=None, help="CSV output path")
    sw.add_argument("--json", action="store_true")
    sw.add_argument("--bs", default=None)
    sw.set_defaults(func=_cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except (ds.DatasetError, ScenarioError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
