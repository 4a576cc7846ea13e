"""Command-line interface: ``aeelm <command> [options]``.

Exit code 0 means success. Bad input or configuration exits with 1;
numerical failures exit with 2.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import PipelineConfig, load_config
from .dataset import SplitSpec, split_chronological, write_csv
from .delay import scan_delays
from .errors import AeelmError, InputError, NumericalError, StageError
from .metrics import evaluate
from .mi import select_features
from .pipeline import (
    VARIANTS,
    delay_curve_rows,
    delay_rows,
    load_data,
    load_fitted,
    metrics_table_rows,
    run_ablation,
    run_pipeline,
    selection_rows,
    write_ablation,
    write_csv_rows,
    write_run,
)
from .synthplant import PlantSpec, generate, write_truth

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2


def _config(args):
    if getattr(args, "manifest", None):
        try:
            manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise InputError(f"manifest not found: {args.manifest}") from None
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.manifest}: {exc}") from None
        cfg = PipelineConfig.from_dict(manifest["config"])
    elif args.config:
        cfg = load_config(args.config)
    else:
        cfg = PipelineConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["out"] = args.out
    if getattr(args, "data", None):
        changes["data"] = dataclasses.replace(cfg.data, path=args.data)
    return cfg.replace(**changes).validate() if changes else cfg


def _out_dir(cfg, default):
    return Path(cfg.out or default)


def _train_part(cfg):
    ds, _ = load_data(cfg)
    split = SplitSpec(cfg.split.train_count, cfg.split.test_count)
    return split_chronological(ds, split)[0]


def _print_rows(rows, keys):
    print("\t".join(keys))
    for r in rows:
        print("\t".join(f"{r[k]:.6g}" if isinstance(r[k], float) else str(r[k]) for k in keys))


def cmd_synth(args):
    fields = {"seed": args.seed if args.seed is not None else 42, "n_samples": args.n_samples}
    if args.noise is not None:
        fields["noise_sigma"] = args.noise
    spec = PlantSpec(**fields)
    ds, truth = generate(spec)
    out = Path(args.out or "synth")
    out.mkdir(parents=True, exist_ok=True)
    write_csv(ds, out / "plant.csv")
    write_truth(truth, out / "truth.json")
    print(f"wrote {out / 'plant.csv'} ({ds.n_samples} rows, {len(ds.channels)} channels)")
    return EXIT_OK


def cmd_analyze_mi(args):
    cfg = _config(args)
    selection = select_features(_train_part(cfg), cfg.mi.threshold, cfg.mi.bins)
    rows = selection_rows(selection)
    path = write_csv_rows(_out_dir(cfg, "out") / "mi_scores.csv", rows)
    _print_rows(rows, ["channel", "normalized_mi", "selected"])
    print(f"selected {len(selection.selected)} of {len(rows)} channels; wrote {path}")
    return EXIT_OK


def cmd_scan_delay(args):
    cfg = _config(args)
    train = _train_part(cfg)
    if args.channels:
        names = args.channels
    else:
        names = select_features(train, cfg.mi.threshold, cfg.mi.bins).selected
    table = scan_delays(train, names, cfg.delay.d_max, cfg.delay.bins)
    out = _out_dir(cfg, "out")
    rows = delay_rows(table, cfg.data.sample_interval)
    write_csv_rows(out / "delays.csv", rows)
    write_csv_rows(out / "delay_curves.csv", delay_curve_rows(table))
    _print_rows(rows, ["channel", "delay_samples", "mi_at_best"])
    return EXIT_OK


def _summary(result):
    fitted = result.fitted
    print(f"variant {result.variant}: {len(fitted.selected)} channels -> "
          f"{result.feature_dim} features, ELM K={fitted.models['elm'].K}")
    rows = [{"model": n, **r.to_dict()} for n, r in result.reports.items()]
    _print_rows(rows, ["model", "nmse", "mape_percent", "r2"])
    print(f"total time {result.total_time:.2f} s")


def cmd_train(args):
    cfg = _config(args)
    result = run_pipeline(cfg, args.variant)
    out = _out_dir(cfg, "run")
    write_run(result, out)
    _summary(result)
    print(f"wrote run to {out}")
    return EXIT_OK


def cmd_evaluate(args):
    fitted, manifest = load_fitted(args.run)
    cfg = _config(args)
    if not args.data and not cfg.data.path:
        cfg = PipelineConfig.from_dict(manifest["config"])
    ds, _ = load_data(cfg)
    lagged, preds = fitted.predict(ds)
    keep = lagged.index >= args.start
    if not keep.any():
        raise InputError(f"no rows at or after sample {args.start}")
    y = lagged.target[keep]
    reports = {n: evaluate(y, p[keep], cfg.metrics.mape_denominator) for n, p in preds.items()}
    rows = metrics_table_rows(reports, dataset=Path(cfg.data.path).stem if cfg.data.path else "synthetic")
    if args.out:
        write_csv_rows(Path(args.out) / "metrics.csv", rows)
    _print_rows([{"model": n, **r.to_dict()} for n, r in reports.items()],
                ["model", "nmse", "mape_percent", "r2", "n"])
    return EXIT_OK


def cmd_ablate(args):
    cfg = _config(args)
    report = run_ablation(cfg, tuple(args.variants))
    out = _out_dir(cfg, "ablation")
    write_ablation(report, out)
    keys = ["variant", "model", "feature_dim", "nmse", "mape_percent", "r2"]
    _print_rows(report.rows(), keys)
    for v, r in report.results.items():
        print(f"{v}: {r.total_time:.2f} s")
    print(f"wrote ablation to {out}")
    return EXIT_OK


def cmd_report(args):
    run = Path(args.run)
    metrics_path, ablation = run / "metrics.json", run / "ablation.csv"
    if not metrics_path.exists() and not ablation.exists():
        raise InputError(f"{run} has neither metrics.json nor ablation.csv")
    if metrics_path.exists():
        metrics = json.loads(metrics_path.read_text(encoding="utf-8"))
        _print_rows([{"model": n, **m} for n, m in metrics.items()],
                    ["model", "nmse", "mape_percent", "r2", "n"])
    if ablation.exists():
        with ablation.open(newline="", encoding="utf-8") as fh:
            rows = [{k: float(v) if k in ("nmse", "mape_percent", "r2") else v
                     for k, v in r.items()} for r in csv.DictReader(fh)]
        _print_rows(rows, ["variant", "model", "feature_dim", "nmse", "mape_percent", "r2"])
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML configuration file")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--data", help="plant CSV (default: the synthetic plant)")
    data.add_argument("--manifest", help="replay the config recorded in a manifest.json")

    p = argparse.ArgumentParser(prog="aeelm", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="write a synthetic plant CSV and its truth")
    s.add_argument("--n-samples", type=int, default=500)
    s.add_argument("--noise", type=float, help="noise as a fraction of the target std")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("analyze-mi", parents=[common, data], help="score channels by MI")
    s.set_defaults(func=cmd_analyze_mi)

    s = sub.add_parser("scan-delay", parents=[common, data], help="estimate channel delays")
    s.add_argument("--channels", nargs="+", help="channels to scan (default: MI selection)")
    s.set_defaults(func=cmd_scan_delay)

    s = sub.add_parser("train", parents=[common, data], help="fit the pipeline and write a run")
    s.add_argument("--variant", choices=VARIANTS, default="full")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("evaluate", parents=[common, data], help="score a saved run on data")
    s.add_argument("--run", required=True, help="run directory written by 'train'")
    s.add_argument("--start", type=int, default=0, help="first sample index to score")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("ablate", parents=[common, data], help="run the ablation variants")
    s.add_argument("--variants", nargs="+", choices=VARIANTS, default=list(VARIANTS))
    s.set_defaults(func=cmd_ablate)

    s = sub.add_parser("report", parents=[common], help="print the metrics of a run")
    s.add_argument("--run", required=True)
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL if exc.numerical else EXIT_INPUT
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (AeelmError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
