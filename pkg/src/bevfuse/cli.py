"""Command-line entry point: generate, train, eval, ablate.

Every command takes --config/--seed/--out and writes a manifest next to
its outputs. The default output root comes from $BEVFUSE_OUT_ROOT when
--out is omitted.
"""

import argparse
import csv
import json
import multiprocessing
import os
import sys

import numpy as np

from .config import Config, ConfigError, load_config, save_config
from .evaluation import evaluate_predictions, predict_frame_record, write_predictions
from .evaluation.reports import binned_report
from .evaluation.runner import outcomes_from_predictions
from .manifest import write_manifest
from .sim import generate_scene, read_frames, write_frames
from .tensor import set_default_dtype
from .training import load_model, train

OUT_ROOT_ENV = "BEVFUSE_OUT_ROOT"

ABLATION_AXES = {
    "K": ("model", "radar_k", int),
    "d": ("model", "radar_d", float),
    "resolution": ("model", "radar_resolution_ratio", float),
    "history": ("sim", "radar_history_s", float),
    "radar_on_off": ("model", "radar_enabled", None),
}

BIN_AXES = {
    "distance": (0.0, 8.0, 16.0, 24.0),
    "lidar_points": (0.0, 10.0, 40.0, 1e9),
    "speed": (0.0, 2.0, 6.0, 12.0),
    "accel": (0.0, 1.0, 3.0, 8.0),
}


class CliError(RuntimeError):
    pass


def resolve_out(args, command):
    if args.out:
        return args.out
    root = os.environ.get(OUT_ROOT_ENV)
    if not root:
        raise CliError(f"--out not given and ${OUT_ROOT_ENV} is not set")
    return os.path.join(root, f"{command}_seed{args.seed}")


def load_cfg(path):
    if path is None:
        return Config().validate()
    if not os.path.exists(path):
        raise CliError(f"config file not found: {path}")
    return load_config(path)


def cmd_generate(args):
    cfg = load_cfg(args.config)
    out_dir = resolve_out(args, "generate")
    os.makedirs(out_dir, exist_ok=True)
    n_scenes = args.scenes if args.scenes is not None else cfg.sim.scenes
    frames = []
    for i in range(n_scenes):
        frames.extend(generate_scene(cfg.sim, seed=args.seed + i))
    data_path = os.path.join(out_dir, "frames.jsonl")
    write_frames(data_path, frames)
    save_config(os.path.join(out_dir, "config.yaml"), cfg)
    write_manifest(
        out_dir,
        "generate",
        cfg,
        args.seed,
        {"dataset": "frames.jsonl", "config": "config.yaml"},
        extra={"scenes": n_scenes, "frames": len(frames)},
    )
    print(f"wrote {len(frames)} frames from {n_scenes} scenes to {data_path}")
    return 0


def cmd_train(args):
    cfg = load_cfg(args.config)
    out_dir = resolve_out(args, "train")
    os.makedirs(out_dir, exist_ok=True)
    if not os.path.exists(args.data):
        raise CliError(f"dataset not found: {args.data}")
    frames = read_frames(args.data)
    result = train(frames, cfg, seed=args.seed, out_dir=out_dir, resume=args.resume)
    save_config(os.path.join(out_dir, "config.yaml"), cfg)
    write_manifest(
        out_dir,
        "train",
        cfg,
        args.seed,
        {
            "checkpoint": os.path.basename(result.checkpoint_path),
            "metrics": os.path.basename(result.metrics_path),
            "config": "config.yaml",
        },
        extra={"data": os.path.abspath(args.data), "steps": result.steps,
               "final_loss": result.final_loss, "resumed_from": args.resume},
    )
    print(f"trained {result.steps} steps, final loss {result.final_loss:.4f}")
    print(f"checkpoint: {result.checkpoint_path}")
    return 0


def _metric_rows(report):
    rows = []
    for subset, entry in report["subsets"].items():
        for key, val in entry.items():
            if isinstance(val, (int, float)) and val is not None:
                rows.append((f"{key}_{subset}", subset, key, val))
    for level, val in report.get("ap", {}).items():
        rows.append((f"ap_{level}", "all", f"ap_{level}", val))
    return rows


def cmd_eval(args):
    cfg = load_cfg(args.config)
    out_dir = resolve_out(args, "eval")
    os.makedirs(out_dir, exist_ok=True)
    for path, what in ((args.data, "dataset"), (args.checkpoint, "checkpoint")):
        if not os.path.exists(path):
            raise CliError(f"{what} not found: {path}")
    set_default_dtype(np.float32 if cfg.optimizer.precision == "float32" else np.float64)
    frames = read_frames(args.data)
    model = load_model(cfg, args.checkpoint)
    records = [predict_frame_record(model, frame, cfg) for frame in frames]
    pred_path = os.path.join(out_dir, "predictions.jsonl")
    write_predictions(pred_path, records)
    report, outcomes = evaluate_predictions(records, frames, cfg, target_recall=args.recall)
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")
    with open(os.path.join(out_dir, "metrics.csv"), "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["series", "subset", "metric", "value"])
        for row in _metric_rows(report):
            writer.writerow(row)
    write_manifest(
        out_dir,
        "eval",
        cfg,
        args.seed,
        {"report": "report.json", "metrics": "metrics.csv", "predictions": "predictions.jsonl"},
        extra={"data": os.path.abspath(args.data), "checkpoint": os.path.abspath(args.checkpoint)},
    )
    moving = report["subsets"]["moving"]
    print(
        f"recall {report['achieved_recall']:.3f} at threshold {report['threshold']}, "
        f"moving ADE {moving['ade']} FDE {moving['fde']}"
    )
    return 0


def apply_axis(cfg, axis, raw_value):
    section, key, cast = ABLATION_AXES[axis]
    if axis == "radar_on_off":
        if raw_value not in ("on", "off"):
            raise CliError(f"radar_on_off values must be on/off, got {raw_value!r}")
        value = raw_value == "on"
    else:
        value = cast(np.inf if raw_value in ("inf", "+inf", ".inf") else raw_value)
    setattr(getattr(cfg, section), key, value)
    return cfg


def _ablate_one(packed):
    """Worker: train + eval one (axis value, seed) cell."""
    base_cfg_dict, axis, raw_value, seed, train_path, eval_path, out_dir, recall = packed
    from .config import config_from_dict

    cfg = apply_axis(config_from_dict(base_cfg_dict), axis, raw_value)
    cell_dir = os.path.join(out_dir, f"{axis}_{raw_value}_seed{seed}")
    os.makedirs(cell_dir, exist_ok=True)
    frames = read_frames(train_path)
    result = train(frames, cfg, seed=seed, out_dir=cell_dir)
    set_default_dtype(np.float32 if cfg.optimizer.precision == "float32" else np.float64)
    eval_frames = read_frames(eval_path)
    model = load_model(cfg, result.checkpoint_path)
    records = [predict_frame_record(model, frame, cfg) for frame in eval_frames]
    write_predictions(os.path.join(cell_dir, "predictions.jsonl"), records)
    report, _ = evaluate_predictions(records, eval_frames, cfg, target_recall=recall)
    with open(os.path.join(cell_dir, "report.json"), "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")
    save_config(os.path.join(cell_dir, "config.yaml"), cfg)
    write_manifest(
        cell_dir, "ablate-cell", cfg, seed,
        {"report": "report.json", "checkpoint": "model.ckpt", "config": "config.yaml",
         "predictions": "predictions.jsonl"},
        extra={"axis": axis, "value": raw_value},
    )
    return axis, raw_value, seed, report


def cmd_ablate(args):
    cfg = load_cfg(args.config)
    if args.axis not in ABLATION_AXES:
        raise CliError(
            f"unknown ablation axis {args.axis!r}; valid axes: {', '.join(sorted(ABLATION_AXES))}"
        )
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise CliError("--values is empty")
    seeds = [int(s) for s in args.seeds.split(",")]
    out_dir = resolve_out(args, f"ablate_{args.axis}")
    os.makedirs(out_dir, exist_ok=True)

    train_path, eval_path = args.train_data, args.eval_data
    if not train_path or not eval_path:
        raise CliError("--train-data and --eval-data are required")
    for path in (train_path, eval_path):
        if not os.path.exists(path):
            raise CliError(f"dataset not found: {path}")

    from .config import config_to_dict

    jobs = [
        (config_to_dict(cfg), args.axis, value, seed, train_path, eval_path, out_dir, args.recall)
        for value in values
        for seed in seeds
    ]
    if args.jobs > 1:
        with multiprocessing.get_context("spawn").Pool(args.jobs) as pool:
            results = pool.map(_ablate_one, jobs)
    else:
        results = [_ablate_one(job) for job in jobs]

    table = []
    for value in values:
        cells = [r for r in results if r[1] == value]
        row = {"axis": args.axis, "value": value, "seeds": len(cells)}
        for subset in ("all", "moving"):
            for metric in ("ade", "fde"):
                vals = [c[3]["subsets"][subset][metric] for c in cells
                        if c[3]["subsets"][subset][metric] is not None]
                row[f"{metric}_{subset}"] = float(np.mean(vals)) if vals else None
        table.append(row)
    with open(os.path.join(out_dir, "ablation.json"), "w", encoding="utf-8") as f:
        json.dump({"axis": args.axis, "rows": table}, f, indent=2, sort_keys=True)
        f.write("\n")
    with open(os.path.join(out_dir, "ablation.csv"), "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["axis", "value", "ade_all", "fde_all", "ade_moving", "fde_moving", "seeds"])
        for row in table:
            writer.writerow(
                [row["axis"], row["value"], row["ade_all"], row["fde_all"],
                 row["ade_moving"], row["fde_moving"], row["seeds"]]
            )

    artifacts = {"table": "ablation.csv", "table_json": "ablation.json"}
    if args.axis == "radar_on_off" and {"on", "off"} <= set(values):
        _write_binned_comparison(out_dir, results, seeds, eval_path, cfg)
        artifacts["binned"] = "binned.csv"
    write_manifest(out_dir, "ablate", cfg, seeds[0], artifacts,
                   extra={"axis": args.axis, "values": values, "seeds": seeds})
    for row in table:
        print(row)
    return 0


def _write_binned_comparison(out_dir, results, seeds, eval_path, cfg):
    """Per-bucket relative FDE improvement of radar-on over radar-off."""
    from .evaluation import read_predictions

    eval_frames = read_frames(eval_path)
    rows = []
    for seed in seeds:
        runs = {}
        for state in ("off", "on"):
            cell_dir = os.path.join(out_dir, f"radar_on_off_{state}_seed{seed}")
            records = read_predictions(os.path.join(cell_dir, "predictions.jsonl"))
            with open(os.path.join(cell_dir, "report.json"), encoding="utf-8") as f:
                report = json.load(f)
            outcomes, _, _ = outcomes_from_predictions(records, eval_frames)
            thr = report["threshold"] if report["threshold"] is not None else np.inf
            runs[state] = [
                o for o in outcomes if not o.matched or o.score >= thr
            ]
        for axis, edges in BIN_AXES.items():
            for entry in binned_report(runs["off"], runs["on"], axis, edges):
                entry["seed"] = seed
                rows.append(entry)
    with open(os.path.join(out_dir, "binned.csv"), "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["seed", "axis", "lo", "hi", "count_off", "count_on",
                         "fde_off", "fde_on", "improvement_pct"])
        for e in rows:
            writer.writerow([e["seed"], e["axis"], e["lo"], e["hi"], e["count_a"],
                             e["count_b"], e["fde_a"], e["fde_b"], e["improvement_pct"]])


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bevfuse",
        description="Radar/lidar/map BEV fusion: synthetic data, training, evaluation, ablations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML config path (defaults apply when omitted)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help=f"output directory (default under ${OUT_ROOT_ENV})")

    g = sub.add_parser("generate", help="write a synthetic dataset")
    common(g)
    g.add_argument("--scenes", type=int, help="override the config's scene count")
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="train a model on a dataset")
    common(t)
    t.add_argument("--data", required=True, help="frames.jsonl produced by generate")
    t.add_argument("--resume", help="checkpoint to continue from")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    common(e)
    e.add_argument("--data", required=True)
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--recall", type=float, default=0.8)
    e.set_defaults(func=cmd_eval)

    a = sub.add_parser("ablate", help="sweep one axis, training per value per seed")
    common(a)
    a.add_argument("--axis", required=True)
    a.add_argument("--values", required=True, help="comma-separated axis values")
    a.add_argument("--seeds", default="0", help="comma-separated seeds")
    a.add_argument("--train-data", required=True)
    a.add_argument("--eval-data", required=True)
    a.add_argument("--jobs", type=int, default=1)
    a.add_argument("--recall", type=float, default=0.8)
    a.set_defaults(func=cmd_ablate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
