"""Command line interface.

Four subcommands cover the full pipeline:

    featgate ingest --prices p.csv --covid c.csv --config cfg.yaml --out data/
    featgate run    --config cfg.yaml --arm both --runs 31 --seed 42 --out results/
    featgate report --in results/ --out report/
    featgate pfi    --model m.json --data d.csv

Exit codes: 0 success, 2 config error, 3 data error, 4 IO error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from .booster import load_model
from .config import Config, load_config
from .errors import ConfigError, DataError, IoError
from .experiment import (
    ARMS,
    champion_pfi,
    compare_arms,
    emit_report,
    load_records,
    run_experiment,
)
from .featwin import FeatureSpec, build_matrix
from .gaopt import GAConfig
from .ingest import (
    build_dataset,
    chronological_split,
    export_csv,
    load_aligned_csv,
    load_indicators,
    load_prices,
)
from .metrics import permutation_importance

ALIGNED_NAME = "aligned.csv"


def _load_cfg(path: str | None) -> Config:
    return load_config(path) if path else Config()


def _dataset_from_cfg(cfg: Config, prices: str | None, covid: str | None):
    """Build the aligned dataset from raw CSVs; CLI paths beat config paths."""
    d = cfg.data
    prices = prices or d.prices
    covid = covid or d.covid
    if not prices:
        raise ConfigError("no price CSV: pass --prices or set data.prices")
    p = load_prices(prices, date_col=d.date_col, close_col=d.close_col)
    table = None
    if covid:
        table = load_indicators(covid, d.indicator_columns,
                                date_col=d.covid_date_col,
                                location_col=d.location_col,
                                location=d.location)
    return build_dataset(p, table, horizon=d.horizon, gap_policy=d.gap_policy)


def _snapshot(cfg: Config, **extra) -> dict:
    doc = asdict(cfg)
    doc.update(extra)
    return doc


# -- subcommands -------------------------------------------------------------

def _cmd_ingest(args) -> int:
    cfg = _load_cfg(args.config)
    d = _dataset_from_cfg(cfg, args.prices, args.covid)
    out = Path(args.out) / ALIGNED_NAME
    out.parent.mkdir(parents=True, exist_ok=True)
    export_csv(d, out)
    print(f"wrote {out}: {len(d)} rows x {len(d.series)} series, "
          f"{d.dates[0]}..{d.dates[-1]}, horizon {d.horizon}")
    return 0


def _cmd_run(args) -> int:
    cfg = _load_cfg(args.config)
    if args.data:
        d = load_aligned_csv(args.data)
    else:
        d = _dataset_from_cfg(cfg, args.prices, args.covid)
    split = chronological_split(d, cfg.split.train_end, cfg.split.test_len)
    ga_split = None
    if args.holdout is not None:
        if not 1 <= args.holdout < split.train_end:
            raise ConfigError(
                f"--holdout must be in [1, {split.train_end}), got {args.holdout}")
        ga_split = chronological_split(
            d, split.train_end - args.holdout, args.holdout)
    runs = args.runs if args.runs is not None else cfg.experiment.runs
    seed = args.seed if args.seed is not None else cfg.experiment.base_seed
    arms = ARMS if args.arm == "both" else (args.arm,)
    ga = GAConfig(generations=cfg.ga.generations,
                  population=cfg.ga.population,
                  parents_kept=cfg.ga.parents_kept,
                  mutation_rate=cfg.ga.mutation_rate,
                  fitness_floor=cfg.ga.fitness_floor)
    snap = _snapshot(cfg, arms=list(arms), runs=runs, base_seed=seed,
                     holdout=args.holdout)
    records, report = run_experiment(
        d, split, ga, runs, seed, args.out, arms=arms,
        pfi_repeats=cfg.experiment.pfi_repeats, ga_split=ga_split,
        config_snapshot=snap)
    for arm, rec in sorted(champion_pfi(records).items()):
        print(f"{arm} champion: r2 {rec.test_metrics.r2:.4f} "
              f"rmse {rec.test_metrics.rmse:.5f} ({len(rec.features)} features)")
    if report is not None:
        emit_report(report, records, args.out)
        for name, m in report.metrics.items():
            print(f"{name}: baseline {m['baseline_mean']:.4f} "
                  f"augmented {m['augmented_mean']:.4f} p {m['p_value']:.3g}")
        print(f"report written to {Path(args.out) / 'report.json'}")
    return 0


def _cmd_report(args) -> int:
    src = Path(args.in_dir)
    records = load_records(src)
    snap = {}
    prior = src / "report.json"
    if prior.exists():
        try:
            snap = json.loads(prior.read_text()).get("config", {})
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"unreadable {prior}: {exc}") from exc
    report = compare_arms(records, config_snapshot=snap)
    models = {}
    for rec in records:
        mp = src / "models" / f"{rec.arm}_{rec.run_index:02d}.json"
        if mp.exists():
            models[(rec.arm, rec.run_index)] = load_model(mp)
    written = emit_report(report, records, args.out, models=models or None)
    print(f"wrote {len(written)} files to {args.out}")
    return 0


def _pfi_specs(args) -> tuple[list[FeatureSpec], int, int]:
    """Feature specs plus (seed, repeats); sidecar run record fills defaults."""
    specs = None
    seed, repeats = 0, 10
    model_p = Path(args.model)
    sidecar = model_p.parent.parent / "runs" / model_p.name
    if sidecar.exists():
        try:
            doc = json.loads(sidecar.read_text())
            specs = [FeatureSpec.from_string(s)
                     for s in doc["optim"]["decoded_features"]]
            seed = int(doc["seed"])
            if doc.get("pfi"):
                repeats = int(doc["pfi"][0]["repeats"])
        except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
            raise DataError(f"unusable run record {sidecar}: {exc}") from exc
    if args.features:
        specs = [FeatureSpec.from_string(s.strip())
                 for s in args.features.split(",")]
    if specs is None:
        raise ConfigError(
            "cannot recover feature windows: no runs/ record next to the "
            "model; pass --features 'series|w0|wl|fc,...'")
    if args.seed is not None:
        seed = args.seed
    if args.repeats is not None:
        repeats = args.repeats
    return specs, seed, repeats


def _cmd_pfi(args) -> int:
    model = load_model(args.model)
    d = load_aligned_csv(args.data)
    specs, seed, repeats = _pfi_specs(args)
    mat = build_matrix(d, specs)
    if mat.column_names != model.feature_names:
        raise DataError(
            f"feature mismatch: matrix has {mat.column_names}, "
            f"model expects {model.feature_names}")
    y = d.target[len(d.target) - len(mat.values):]
    entries = permutation_importance(model, mat.values, y,
                                     repeats=repeats, seed=seed)
    print(f"{'feature':<40} r2_drop")
    for e in entries:
        print(f"{e.feature:<40} {e.r2_drop:+.6f}")
    return 0


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="featgate",
        description="Do exogenous indicator features improve return forecasts?")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="align raw CSVs into one dataset CSV")
    p.add_argument("--prices", help="price CSV (date, close)")
    p.add_argument("--covid", help="indicator CSV (optional)")
    p.add_argument("--config", help="YAML config file")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("run", help="run the two-arm GA experiment")
    p.add_argument("--config", help="YAML config file")
    p.add_argument("--prices", help="price CSV (overrides config)")
    p.add_argument("--covid", help="indicator CSV (overrides config)")
    p.add_argument("--data", help="pre-aligned dataset CSV (skips ingest)")
    p.add_argument("--arm", choices=[*ARMS, "both"], default="both")
    p.add_argument("--runs", type=int, help="GA runs per arm")
    p.add_argument("--seed", type=int, help="base seed; run r uses seed + r")
    p.add_argument("--holdout", type=int,
                   help="carve this many training rows into a validation "
                        "slice for GA fitness (test rows stay untouched)")
    p.add_argument("--out", required=True, help="results directory")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("report", help="rebuild report + plots from run files")
    p.add_argument("--in", dest="in_dir", required=True,
                   help="results directory holding runs/")
    p.add_argument("--out", required=True, help="report output directory")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("pfi", help="permutation importance for a saved model")
    p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--data", required=True, help="aligned dataset CSV")
    p.add_argument("--features",
                   help="comma-separated 'series|w0|wl|fc' feature specs "
                        "(default: read the model's sidecar run record)")
    p.add_argument("--seed", type=int, help="permutation seed")
    p.add_argument("--repeats", type=int, help="permutations per feature")
    p.set_defaults(func=_cmd_pfi)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except IoError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
