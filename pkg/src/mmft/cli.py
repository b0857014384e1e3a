"""Command-line entry point: ``mmft <command> [options]``.

Exit codes: 0 success, 1 a check did not pass, 2 usage error, 3 config or
parameter error, 4 missing or malformed data, 5 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

from mmft import __version__
from mmft.config import CHANNELS, PRESETS, RunConfig
from mmft.errors import (
    ConfigError,
    DimensionError,
    InputError,
    NumericError,
    ParameterError,
    ParseError,
    RangeError,
    UndefinedMetricError,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3, 4, 5
CHECKPOINT = "checkpoint.mmft"

log = logging.getLogger("mmft")


class UsageError(Exception):
    pass


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_json(path: Path, obj) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_json(obj), encoding="utf-8")
    return path


def write_csv(path: Path, rows: list[dict], columns) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        w.writerows(rows)
    return path


def max_threads() -> int:
    raw = os.environ.get("MMFT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise ConfigError(f"MMFT_THREADS must be an integer, got {raw!r}") from exc


# -- configuration ---------------------------------------------------------------

def run_config(args) -> RunConfig:
    base = PRESETS[args.preset]()
    cfg = RunConfig.load(args.config, base=base) if args.config else base
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    cfg = cfg.with_overrides(args.set)
    if args.data_dir:
        cfg = cfg.replace(data_dir=args.data_dir)
    if args.out_dir:
        cfg = cfg.replace(out_dir=args.out_dir)
    return cfg


def _out_dir(cfg: RunConfig) -> Path:
    return Path(cfg.out_dir or "runs")


def _dataset(cfg: RunConfig):
    from mmft.datagen import load_dataset

    if not cfg.data_dir:
        raise InputError("no dataset directory; pass --data-dir")
    directory = Path(cfg.data_dir)
    if not directory.is_dir():
        raise InputError(f"dataset directory {directory} does not exist")
    return load_dataset(directory)


def _model_from_checkpoint(cfg: RunConfig, path: Path):
    from mmft.model import MMFTModel
    from mmft.params import ModelParams
    from mmft.pipeline import FeatureStore

    if not path.is_file():
        raise InputError(f"checkpoint {path} not found; run 'mmft train' first")
    store = FeatureStore(_dataset(cfg), cfg)
    return MMFTModel(cfg, ModelParams.load(path), store, cfg.drop)


def _saved_config(args) -> RunConfig:
    """Config for commands that follow ``train``: the run's saved config unless one is given."""
    if not args.config and args.out_dir and (Path(args.out_dir) / "config.json").is_file():
        args.config = str(Path(args.out_dir) / "config.json")
    return run_config(args)


# -- commands ---------------------------------------------------------------------

def cmd_gen(args) -> int:
    from mmft.datagen import FILES, GenSpec, generate, save_dataset

    raw = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read generator spec {args.config}: {exc}") from exc
    for item in args.set or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        try:
            raw[key.strip()] = json.loads(value)
        except json.JSONDecodeError:
            raw[key.strip()] = value
    if args.seed is not None:
        raw["seed"] = args.seed
    try:
        spec = GenSpec.from_dict(raw)
    except (ParameterError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    out = Path(args.out_dir or args.data_dir or "data")
    ds = generate(spec)
    paths = save_dataset(ds, out)
    ledger = ds.ledger
    summary = {
        "out_dir": str(out), "seed": spec.seed, "symbols": len(ds.symbols), "days": len(ds.calendar),
        "documents": len(ds.docs), "events": len(ledger["events"]),
        "event_types": {t.name: t.beta for t in spec.event_types},
        "sha256": {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in paths},
    }
    missing = [f for f in FILES if not (out / f).is_file()]
    if missing:
        raise InputError(f"files not written: {missing}")
    sys.stdout.write(dump_json(summary))
    return EXIT_OK


def cmd_train(args) -> int:
    from mmft.training import evaluate, train

    cfg = run_config(args)
    out = _out_dir(cfg)
    cfg = cfg.replace(checkpoint=str(out / CHECKPOINT))
    ds = _dataset(cfg)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "config.json", cfg.to_dict())
    result = train(cfg, ds)
    report = {"best_epoch": result.best_epoch,
              "val": evaluate(result.model, "val").to_dict(),
              "test": evaluate(result.model, "test").to_dict()}
    write_json(out / "history.json", result.history)
    write_json(out / "train_metrics.json", report)
    sys.stdout.write(dump_json(report))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    from mmft.training import evaluate

    cfg = _saved_config(args)
    out = _out_dir(cfg)
    ckpt = Path(args.checkpoint) if args.checkpoint else out / CHECKPOINT
    model = _model_from_checkpoint(cfg, ckpt)
    report = evaluate(model, args.split).to_dict()
    report["split"] = args.split
    write_json(out / f"metrics_{args.split}.json", report)
    sys.stdout.write(dump_json(report))
    return EXIT_OK


def cmd_ablate(args) -> int:
    from mmft.training import ablation_table

    cfg = run_config(args)
    tags = tuple(t for t in (args.channels or ",".join(CHANNELS)).split(",") if t)
    rows = ablation_table(cfg, _dataset(cfg), tags=tags, workers=min(max_threads(), len(tags) + 1))
    out = _out_dir(cfg)
    write_json(out / "ablation.json", rows)
    write_csv(out / "ablation.csv", rows, ("variant", "rmse", "accuracy", "sharpe", "rmse_change",
                                           "persistence_rmse"))
    for r in rows:
        log.info("%-8s rmse %.6g accuracy %.4f", r["variant"], r["rmse"], r["accuracy"])
    sys.stdout.write(dump_json(rows))
    return EXIT_OK


def cmd_impact(args) -> int:
    from mmft.training import impact_table, train

    cfg = _saved_config(args)
    out = _out_dir(cfg)
    ckpt = Path(args.checkpoint) if args.checkpoint else out / CHECKPOINT
    if ckpt.is_file():
        model = _model_from_checkpoint(cfg, ckpt)
    else:
        log.info("no checkpoint at %s; training first", ckpt)
        model = train(cfg, _dataset(cfg)).model
    table = impact_table(model, horizon=args.horizon)
    ledger = model.store.ds.ledger or {}
    planted = {}
    for ev in ledger.get("events", []):
        planted.setdefault(ev["type"], ev["beta"])
    for t, row in table["types"].items():
        row["planted_beta"] = planted.get(t)
    write_json(out / "impact.json", table)
    write_csv(out / "impact.csv", table["events"], ("node", "type", "coefficient", "duration_days"))
    sys.stdout.write(dump_json(table["types"]))
    return EXIT_OK


def cmd_converge_check(args) -> int:
    from mmft.training import convergence_harness

    report = convergence_harness(args.mu, args.L, args.eta, args.steps)
    summary = report.to_dict()
    summary["one_step"] = bool(report.distances.size > 1 and report.distances[1] == 0.0)
    sys.stdout.write(dump_json(summary))
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_gradcheck(args) -> int:
    from mmft.gradsuites import run_suites

    results = run_suites(args.scope, instances=args.instances, seed=args.seed or 0)
    for r in results:
        sys.stdout.write(f"{'PASS' if r.passed else 'FAIL'} {r.name} instances={r.instances} "
                         f"max_rel_error={r.max_rel_error:.3e}\n")
    ok = all(r.passed for r in results)
    sys.stdout.write(f"{sum(r.passed for r in results)}/{len(results)} suites passed\n")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_bench(args) -> int:
    from mmft.bench import bench, to_csv

    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError as exc:
        raise UsageError(f"--sizes must be comma-separated integers: {exc}") from exc
    if not sizes:
        raise UsageError("--sizes needs at least one length")
    text = to_csv(bench(sizes, repeats=args.repeats))
    if args.out_dir:
        Path(args.out_dir).mkdir(parents=True, exist_ok=True)
        (Path(args.out_dir) / "bench.csv").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


# -- argument parsing --------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--data-dir", help="dataset directory")
    p.add_argument("--out-dir", help="directory for reports and checkpoints")
    p.add_argument("--seed", type=int, help="seed governing all randomness")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config field (repeatable; values parse as JSON)")
    p.add_argument("--preset", choices=sorted(PRESETS), default="desk",
                   help="base hyperparameters before --config and --set (default: desk)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmft", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"mmft {__version__}")
    parser.add_argument("-q", "--quiet", action="store_true", help="suppress progress logs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    _common(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train and checkpoint a model")
    _common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="metrics of a checkpoint on one split")
    _common(p)
    p.add_argument("--checkpoint")
    p.add_argument("--split", choices=("train", "val", "test"), default="test")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="retrain with each channel nulled")
    _common(p)
    p.add_argument("--channels", help=f"comma-separated subset of {','.join(CHANNELS)}")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("impact", help="counterfactual impact of every event node")
    _common(p)
    p.add_argument("--checkpoint")
    p.add_argument("--horizon", type=int, default=63)
    p.set_defaults(func=cmd_impact)

    p = sub.add_parser("converge-check", help="gradient descent rate on a strongly convex quadratic")
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--L", type=float, default=3.0)
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--steps", type=int, default=200)
    p.set_defaults(func=cmd_converge_check)

    p = sub.add_parser("gradcheck", help="finite-difference gradient suites")
    p.add_argument("--scope", default="all", help="suite name or dotted prefix, or 'all'")
    p.add_argument("--instances", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("bench", help="forward-pass timings as CSV")
    p.add_argument("--sizes", default="64,128,256")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"mmft: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, ParameterError) as exc:
        print(f"mmft: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, InputError, RangeError, DimensionError, FileNotFoundError) as exc:
        print(f"mmft: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, UndefinedMetricError) as exc:
        print(f"mmft: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
