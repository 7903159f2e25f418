"""Command-line entry point exposing the full pipeline.

Subcommands mirror the experiment stages: simulate -> train -> infer/eval ->
ablate/bench, plus a standalone stratified split. Flags override values from
an optional JSON config file, which override the built-in defaults (the
reference configuration). Every command is deterministic for identical
inputs, flags, and seed, except live latency measurement (`bench --reps N`),
which is wall-clock by nature and written to a separate file.

Failures print a single machine-parseable line `error: <Name>: <detail>` and
exit 1; usage problems exit 2.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from .core import WeightingConfig
from .dataio import (
    TraceBundle,
    canonical_json_dumps,
    derive_accuracy,
    load_bundle,
    state_to_trajectory,
    write_bundle,
)
from .errors import EngineError
from .inference import ensemble_predict
from .metrics import confusion, report
from .synth import SynthModelSpec, SynthWorldSpec, generate_bundle, stratified_split
from .weighting import run_training, static_weights

_CONFIG_FIELDS = (
    "lambda_init",
    "delta",
    "lambda_min",
    "lambda_max",
    "acc_source",
    "size_mode",
    "normalize_weights",
)


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--seed", type=int, default=None, help="seed controlling all randomness")
    p.add_argument("--delta", type=float, default=None, help="lambda update step size")
    p.add_argument("--lambda-init", type=float, default=None, dest="lambda_init",
                   help="initial per-model lambda")
    p.add_argument("--lambda-min", type=float, default=None, dest="lambda_min",
                   help="lower clip bound for lambda")
    p.add_argument("--lambda-max", type=float, default=None, dest="lambda_max",
                   help="upper clip bound for lambda")
    p.add_argument("--acc-source", choices=("train", "validation"), default=None,
                   dest="acc_source", help="accuracy series driving the weighting")
    p.add_argument("--size-mode", choices=("proportional", "inverse"), default=None,
                   dest="size_mode", help="size proportion: literal share or inverse share")
    p.add_argument("--normalize-weights", action=argparse.BooleanOptionalAction,
                   default=None, dest="normalize_weights",
                   help="divide final weights by their sum")
    p.add_argument("--mode", choices=("dynamic", "static"), default=None,
                   help="adaptive weights or the uniform 1/n baseline")
    p.add_argument("--models", default=None,
                   help="comma-separated model subset (default: all in the bundle)")


def _file_config(args) -> dict:
    if not getattr(args, "config", None):
        return {}
    path = Path(args.config)
    if not path.is_file():
        raise FileNotFoundError(f"config file {path} does not exist")
    return json.loads(path.read_text())


def _setting(args, file_cfg: dict, key: str, default=None):
    value = getattr(args, key, None)
    if value is None:
        value = file_cfg.get(key, default)
    return value


def _weighting_config(args, file_cfg: dict) -> WeightingConfig:
    merged = {}
    for key in _CONFIG_FIELDS:
        value = _setting(args, file_cfg, key)
        if value is not None:
            merged[key] = value
    return WeightingConfig(**merged)


def _members(args, file_cfg: dict, bundle: TraceBundle) -> list[str]:
    raw = _setting(args, file_cfg, "models")
    if raw is None:
        return bundle.model_names
    names = [n.strip() for n in raw.split(",")] if isinstance(raw, str) else list(raw)
    known = set(bundle.model_names)
    for n in names:
        if n not in known:
            raise KeyError(f"bundle has no model named {n!r}")
    return names


def _config_echo(cfg: WeightingConfig, mode: str, members, seed, bundle_path) -> dict:
    echo = cfg.to_dict()
    echo["mode"] = mode
    echo["models"] = list(members)
    echo["seed"] = seed
    echo["bundle"] = str(bundle_path)
    return echo


def _weights_for(bundle: TraceBundle, members: list[str], mode: str,
                 cfg: WeightingConfig, weights_file: str | None):
    """(weight vector, state or None). Static mode is uniform 1/n; dynamic
    reads a saved train output or retrains in-process."""
    if mode == "static":
        return static_weights(len(members)), None
    if weights_file:
        saved = json.loads(Path(weights_file).read_text())
        final = saved["final_weights"]
        missing = [n for n in members if n not in final]
        if missing:
            raise KeyError(f"weights file lacks entries for {missing}")
        return np.array([float(final[n]) for n in members]), None
    sub = bundle.subset(members)
    state = run_training([sub.traces[n] for n in members], list(sub.profiles), cfg)
    return state.weights, state


# --- subcommands ---------------------------------------------------------------


def _cmd_simulate(args) -> int:
    spec = json.loads(Path(args.spec).read_text())
    world = SynthWorldSpec.from_dict(spec["world"])
    if args.seed is not None:
        d = world.to_dict()
        d["seed"] = args.seed
        world = SynthWorldSpec.from_dict(d)
    models = [SynthModelSpec.from_dict(m) for m in spec["models"]]
    epochs = int(spec["epochs"])
    bundle = generate_bundle(world, models, epochs, include_epoch_preds=args.include_epoch_preds)
    write_bundle(bundle, args.out)
    print(f"wrote bundle with {len(models)} models, {epochs} epochs to {args.out}")
    return 0


def _cmd_split(args) -> int:
    header, rows = [], []
    with open(args.labels, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [int(r[0]) for r in reader]
    if header != ["label"]:
        raise ValueError(f"{args.labels}: expected header 'label', got {header!r}")
    fractions = tuple(float(x) for x in args.fractions.split(","))
    if len(fractions) != 3:
        raise ValueError(f"need exactly three fractions, got {len(fractions)}")
    parts = stratified_split(np.array(rows), fractions, seed=args.seed or 0)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for split, indices in zip(("train", "val", "test"), parts):
        with (out / f"indices_{split}.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index"])
            for i in indices:
                writer.writerow([int(i)])
    print(f"split {len(rows)} labels into {[len(p) for p in parts]} under {out}")
    return 0


def _cmd_train(args) -> int:
    file_cfg = _file_config(args)
    cfg = _weighting_config(args, file_cfg)
    bundle = load_bundle(args.bundle)
    members = _members(args, file_cfg, bundle)
    sub = bundle.subset(members)
    state = run_training([sub.traces[n] for n in members], list(sub.profiles), cfg)
    payload = {
        "config": _config_echo(cfg, "dynamic", members, args.seed, args.bundle),
        "models": members,
        "final_weights": {n: float(w) for n, w in zip(members, state.weights)},
        "trajectory": state_to_trajectory(state, members),
    }
    Path(args.out).write_text(canonical_json_dumps(payload))
    print(f"trained {len(members)} models over {bundle.epochs} epochs -> {args.out}")
    return 0


def _cmd_infer(args) -> int:
    file_cfg = _file_config(args)
    cfg = _weighting_config(args, file_cfg)
    mode = _setting(args, file_cfg, "mode", "dynamic")
    bundle = load_bundle(args.bundle)
    members = _members(args, file_cfg, bundle)
    weights, _ = _weights_for(bundle, members, mode, cfg, args.weights)
    labels, _ = ensemble_predict([bundle.test_preds[n] for n in members], weights)
    with Path(args.out).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label"])
        for v in labels:
            writer.writerow([int(v)])
    print(f"wrote {labels.size} predicted labels -> {args.out}")
    return 0


def _cmd_eval(args) -> int:
    file_cfg = _file_config(args)
    cfg = _weighting_config(args, file_cfg)
    mode = _setting(args, file_cfg, "mode", "dynamic")
    bundle = load_bundle(args.bundle)
    members = _members(args, file_cfg, bundle)
    weights, state = _weights_for(bundle, members, mode, cfg, args.weights)
    predicted, _ = ensemble_predict([bundle.test_preds[n] for n in members], weights)
    truth = bundle.labels["test"]
    cm = confusion(truth, predicted, bundle.num_classes)
    rep = report(cm).to_dict()
    for entry in rep["per_class"]:
        entry["name"] = bundle.class_names[entry["class"]]
    payload = {
        "config": _config_echo(cfg, mode, members, args.seed, args.bundle),
        "models": members,
        "weights": {
            "final": {n: float(w) for n, w in zip(members, weights)},
            "trajectory": state_to_trajectory(state, members) if state is not None else None,
        },
        "classification": rep,
        "confusion_matrix": cm.tolist(),
        "latency": None,
        "ablation": None,
    }
    Path(args.out).write_text(canonical_json_dumps(payload))
    print(f"accuracy {rep['accuracy']:.6f} over {truth.size} test samples -> {args.out}")
    return 0


def _ablation_seeds(args, file_cfg: dict) -> list[int]:
    raw = _setting(args, file_cfg, "seeds")
    if raw is not None:
        return [int(s) for s in (raw.split(",") if isinstance(raw, str) else raw)]
    base = _setting(args, file_cfg, "seed", 0) or 0
    return list(range(base, base + args.num_seeds))


def _cmd_ablate(args) -> int:
    file_cfg = _file_config(args)
    cfg = _weighting_config(args, file_cfg)
    bundle = load_bundle(args.bundle)
    seeds = _ablation_seeds(args, file_cfg)
    results = bench_mod.run_ablation(bundle, cfg, seeds)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "ablation.csv").write_text(bench_mod.ablation_csv(results))
    with (out / "ablation_runs.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "seed", "accuracy"])
        for r in results:
            for seed, acc in zip(seeds, r.per_seed_accuracy):
                writer.writerow([r.name, seed, repr(acc)])
    payload = {
        "config": _config_echo(cfg, "dynamic", bundle.model_names, args.seed, args.bundle),
        "seeds": seeds,
        "ablation": [r.to_dict() for r in results],
    }
    (out / "ablation.json").write_text(canonical_json_dumps(payload))
    best = max(results, key=lambda r: r.mean_accuracy)
    print(f"ablation over {len(seeds)} seeds: best mean accuracy "
          f"{best.mean_accuracy:.6f} ({best.name}) -> {out}")
    return 0


def _cmd_bench(args) -> int:
    file_cfg = _file_config(args)
    cfg = _weighting_config(args, file_cfg)
    bundle = load_bundle(args.bundle)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    points = bench_mod.recorded_pareto_points(bundle, cfg)
    frontier = [p[0] for p in bench_mod.pareto_points(points)]
    (out / "pareto.csv").write_text(bench_mod.pareto_csv(points))
    payload = {
        "config": _config_echo(cfg, "dynamic", bundle.model_names, args.seed, args.bundle),
        "points": [
            {"name": n, "accuracy": a, "latency_ms": l, "on_frontier": n in frontier}
            for n, a, l in points
        ],
        "frontier": frontier,
    }
    (out / "bench.json").write_text(canonical_json_dumps(payload))
    if args.reps > 0:
        stats = bench_mod.measure_bundle_latency(bundle, cfg, warmup=args.warmup, reps=args.reps)
        (out / "latency.json").write_text(
            canonical_json_dumps({"latency": stats.to_dict(), "note":
                                  "wall-clock measurement; not reproducible across runs"})
        )
        print(f"measured p50 {stats.p50_ms:.3f} ms "
              f"(overhead fraction {stats.overhead_fraction:.3f}) -> {out}")
    else:
        print(f"pareto frontier: {', '.join(frontier)} -> {out}")
    return 0


# --- parser / dispatch ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynens",
        description="Adaptive accuracy/size-weighted ensemble engine over recorded "
                    "prediction traces, with evaluation and benchmarking commands.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic trace bundle")
    p.add_argument("--config", dest="spec", required=True,
                   help="JSON world spec: {world, models, epochs}")
    p.add_argument("--out", required=True, help="bundle directory to write")
    p.add_argument("--seed", type=int, default=None, help="override the world seed")
    p.add_argument("--include-epoch-preds", action="store_true",
                   help="also write per-epoch train/val prediction matrices")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("split", help="stratified train/val/test index split")
    p.add_argument("--labels", required=True, help="CSV with header 'label'")
    p.add_argument("--out", required=True, help="directory for indices_{split}.csv")
    p.add_argument("--fractions", default="0.8,0.1,0.1")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("train", help="run the adaptive weighting over a bundle's traces")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True, help="weight trajectory JSON")
    _add_common_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("infer", help="fused predictions on the bundle's test split")
    p.add_argument("--bundle", required=True)
    p.add_argument("--weights", default=None, help="train output JSON (dynamic mode)")
    p.add_argument("--out", required=True, help="predicted labels CSV")
    _add_common_flags(p)
    p.set_defaults(func=_cmd_infer)

    p = sub.add_parser("eval", help="full evaluation report on the test split")
    p.add_argument("--bundle", required=True)
    p.add_argument("--weights", default=None, help="train output JSON (dynamic mode)")
    p.add_argument("--out", required=True, help="report JSON")
    _add_common_flags(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("ablate", help="model-subset and static-baseline ablation")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True, help="directory for ablation tables")
    p.add_argument("--seeds", default=None, help="comma-separated explicit seed list")
    p.add_argument("--num-seeds", type=int, default=10,
                   help="number of seeds starting at --seed (default 10)")
    _add_common_flags(p)
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("bench", help="accuracy/latency points, Pareto frontier, "
                                     "optional live latency measurement")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True, help="directory for pareto.csv + bench.json")
    p.add_argument("--reps", type=int, default=0,
                   help="live timing repetitions (0 = recorded latencies only)")
    p.add_argument("--warmup", type=int, default=3, help="discarded warmup runs")
    _add_common_flags(p)
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EngineError as exc:
        detail = " ".join(str(exc).split())
        print(f"error: {exc.name}: {detail}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        detail = " ".join(str(exc).split())
        print(f"error: {type(exc).__name__}: {detail}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
