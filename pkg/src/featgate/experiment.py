"""Two-arm experiment harness.

Runs M independent GA searches per arm against one shared aligned dataset.
The Baseline arm may only draw features from price history and calendar
series; the Augmented arm additionally sees every indicator column.  Both
arms consume the identical run-seed sequence (base_seed + run_index), so
any distributional difference is attributable to the feature pool alone.

Every run is persisted to its own JSON file the moment it finishes, plus
its champion model; rerunning skips completed runs after verifying their
champions still reproduce against the dataset, which makes a multi-hour
experiment crash-resumable.  Nothing in any artifact depends on wall
clock, host, or worker count.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import svgplot
from .booster import (
    BoostedModel,
    HyperParams,
    fit,
    load_model,
    predict,
    save_model,
)
from .errors import ConfigError, DataError, IoError, UnbalancedArms
from .featwin import FC_RAW, FC_SUFFIX, MAX_LOOKBACK, FeatureSpec, build_matrix
from .gaopt import GAConfig, Genome, OptimResult, decode, run_ga
from .ingest import AlignedDataset, SplitIndices
from .metrics import (
    DEFAULT_OVERLAP_BINS,
    DEFAULT_PFI_REPEATS,
    MetricSet,
    PfiEntry,
    compute_metrics,
    histogram_overlap,
    mann_whitney_u,
    permutation_importance,
)

log = logging.getLogger(__name__)

ARMS = ("Baseline", "Augmented")
BASELINE_POOL = ("Returns", "DayOfWeek_cos", "DOY_cos")
METRIC_NAMES = ("r2", "mae", "rmse")
REPORT_FORMAT = "featgate-report"
REPORT_VERSION = 1


def arm_pool(d: AlignedDataset, arm: str) -> list[str]:
    """Series the GA may draw from in the given arm."""
    missing = [s for s in BASELINE_POOL if s not in d.series]
    if missing:
        raise DataError(f"dataset lacks baseline series: {missing}")
    if arm == "Baseline":
        return list(BASELINE_POOL)
    if arm == "Augmented":
        return list(BASELINE_POOL) + [s for s in d.series
                                      if s not in BASELINE_POOL]
    raise ConfigError(f"unknown arm {arm!r}; expected one of {ARMS}")


@dataclass(frozen=True)
class RunRecord:
    """Everything one GA run leaves behind, minus the model itself."""

    arm: str
    run_index: int
    seed: int
    optim: OptimResult
    hyperparams: HyperParams
    features: tuple  # champion FeatureSpec strings, slot order
    test_metrics: MetricSet
    pfi: tuple
    test_actual: tuple
    test_predicted: tuple


@dataclass(frozen=True)
class ComparisonReport:
    metrics: dict
    feature_frequency: dict
    config_snapshot: dict


# -- persistence -------------------------------------------------------------

def _atomic_write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            os.unlink(tmp)
            raise
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _write_json(path: Path, doc) -> None:
    _atomic_write(path, json.dumps(doc, indent=1) + "\n")


def run_path(out_dir, arm: str, run_index: int) -> Path:
    return Path(out_dir) / "runs" / f"{arm}_{run_index:02d}.json"


def model_path(out_dir, arm: str, run_index: int) -> Path:
    return Path(out_dir) / "models" / f"{arm}_{run_index:02d}.json"


def run_record_to_dict(rec: RunRecord) -> dict:
    return {
        "arm": rec.arm,
        "run_index": rec.run_index,
        "seed": rec.seed,
        "optim": {
            "best_genome": rec.optim.best_genome.to_dict(),
            "best_fitness": rec.optim.best_fitness,
            "best_metrics": rec.optim.best_metrics.to_dict(),
            "fitness_history": list(rec.optim.fitness_history),
            "evaluations": rec.optim.evaluations,
            "best_seed": list(rec.optim.best_seed),
            "decoded_hyperparams": rec.hyperparams.to_dict(),
            "decoded_features": list(rec.features),
        },
        "test_metrics": rec.test_metrics.to_dict(),
        "pfi": [{"feature": e.feature, "r2_drop": e.r2_drop,
                 "repeats": e.repeats} for e in rec.pfi],
        "test_actual": list(rec.test_actual),
        "test_predicted": list(rec.test_predicted),
    }


def run_record_from_dict(doc: dict) -> RunRecord:
    o = doc["optim"]
    optim = OptimResult(
        best_genome=Genome.from_dict(o["best_genome"]),
        best_fitness=float(o["best_fitness"]),
        best_metrics=MetricSet.from_dict(o["best_metrics"]),
        fitness_history=tuple(o["fitness_history"]),
        evaluations=int(o["evaluations"]),
        best_seed=tuple(o["best_seed"]),
    )
    return RunRecord(
        arm=doc["arm"],
        run_index=int(doc["run_index"]),
        seed=int(doc["seed"]),
        optim=optim,
        hyperparams=HyperParams.from_dict(o["decoded_hyperparams"]),
        features=tuple(o["decoded_features"]),
        test_metrics=MetricSet.from_dict(doc["test_metrics"]),
        pfi=tuple(PfiEntry(feature=e["feature"], r2_drop=float(e["r2_drop"]),
                           repeats=int(e["repeats"])) for e in doc["pfi"]),
        test_actual=tuple(doc["test_actual"]),
        test_predicted=tuple(doc["test_predicted"]),
    )


def load_run_record(path) -> RunRecord:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read run record {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed run record {path}: {exc}") from exc
    try:
        return run_record_from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed run record {path}: {exc}") from exc


def load_records(out_dir) -> list[RunRecord]:
    runs = Path(out_dir) / "runs"
    paths = sorted(runs.glob("*.json"))
    if not paths:
        raise DataError(f"no run records under {runs}")
    records = [load_run_record(p) for p in paths]
    records.sort(key=lambda r: (r.arm, r.run_index))
    return records


# -- single run --------------------------------------------------------------

def _split_matrix(d: AlignedDataset, split: SplitIndices, specs):
    mat = build_matrix(d, specs, max_lookback=MAX_LOOKBACK)
    a = split.train_end - MAX_LOOKBACK
    b = a + split.test_len
    y = d.target[MAX_LOOKBACK:]
    return mat, (mat.values[:a], y[:a]), (mat.values[a:b], y[a:b])


def _single_run(d: AlignedDataset, split: SplitIndices, arm: str, pool,
                run_index: int, seed: int, ga_template: GAConfig,
                pfi_repeats: int,
                ga_split: SplitIndices | None = None) -> tuple[RunRecord, BoostedModel]:
    cfg = replace(ga_template, seed=seed)
    res = run_ga(d, ga_split or split, cfg, pool)
    hp, specs = decode(res.best_genome, pool)
    mat, (xtr, ytr), (xte, yte) = _split_matrix(d, split, specs)
    model = fit(xtr, ytr, hp, res.best_seed, feature_names=mat.column_names)
    pred = predict(model, xte)
    mets = compute_metrics(yte, pred)
    if ga_split is None:
        assert mets == res.best_metrics  # refit with best_seed is exact
    pfi = tuple(permutation_importance(model, xte, yte, repeats=pfi_repeats,
                                       seed=seed))
    rec = RunRecord(
        arm=arm, run_index=run_index, seed=seed, optim=res, hyperparams=hp,
        features=tuple(sp.to_string() for sp in specs),
        test_metrics=mets, pfi=pfi,
        test_actual=tuple(float(v) for v in yte),
        test_predicted=tuple(float(v) for v in pred),
    )
    return rec, model


def _verify_resumed(d: AlignedDataset, split: SplitIndices, rec: RunRecord,
                    model: BoostedModel) -> None:
    specs = [FeatureSpec.from_string(s) for s in rec.features]
    _, _, (xte, yte) = _split_matrix(d, split, specs)
    mets = compute_metrics(yte, predict(model, xte))
    if mets != rec.test_metrics:
        raise DataError(
            f"resumed run {rec.arm}/{rec.run_index} does not reproduce "
            "against this dataset; delete stale run files or fix the config")


# -- experiment --------------------------------------------------------------

def run_experiment(d: AlignedDataset, split: SplitIndices,
                   ga_template: GAConfig, m_runs: int, base_seed: int,
                   out_dir, *, arms=ARMS,
                   pfi_repeats: int = DEFAULT_PFI_REPEATS,
                   ga_split: SplitIndices | None = None,
                   config_snapshot: dict | None = None):
    """(records, report); report is None unless both arms were requested.

    Completed runs found under out_dir are loaded, verified against the
    dataset, and skipped; fresh runs are persisted (model first, then the
    run record as commit marker) as soon as they finish.  ga_split, when
    given, makes fitness selection use that split (a holdout carved from
    the training rows) while champion metrics stay on the real test rows.
    """
    if m_runs < 2:
        raise ConfigError(f"need at least 2 runs per arm, got {m_runs}")
    for arm in arms:
        arm_pool(d, arm)  # validate arm names and dataset series up front
    records = []
    for arm in arms:
        pool = arm_pool(d, arm)
        for r in range(m_runs):
            seed = base_seed + r
            rp = run_path(out_dir, arm, r)
            if rp.exists():
                rec = load_run_record(rp)
                if (rec.arm, rec.run_index, rec.seed) != (arm, r, seed):
                    raise DataError(
                        f"run file {rp} holds {rec.arm}/{rec.run_index} "
                        f"seed {rec.seed}, expected {arm}/{r} seed {seed}")
                _verify_resumed(d, split, rec, load_model(model_path(out_dir, arm, r)))
                log.info("resumed %s run %d (r2=%.4f)", arm, r,
                         rec.test_metrics.r2)
            else:
                rec, model = _single_run(d, split, arm, pool, r, seed,
                                         ga_template, pfi_repeats,
                                         ga_split=ga_split)
                save_model(model, model_path(out_dir, arm, r))
                _write_json(rp, run_record_to_dict(rec))
                log.info("finished %s run %d (r2=%.4f)", arm, r,
                         rec.test_metrics.r2)
            records.append(rec)
    report = None
    if set(arms) == set(ARMS):
        report = compare_arms(records, config_snapshot=config_snapshot)
    return records, report


# -- comparison --------------------------------------------------------------

def _frequency_key(sp: FeatureSpec) -> str:
    if sp.fc == FC_RAW:
        return f"{sp.series}_raw"
    return f"{sp.series}{FC_SUFFIX[sp.fc]}"


def _feature_frequency(aug_records) -> dict:
    stats: dict[str, list] = {}
    for rec in aug_records:
        drops = {e.feature: e.r2_drop for e in rec.pfi}
        for s in rec.features:
            sp = FeatureSpec.from_string(s)
            cols = [drops[c] for c in sp.column_names() if c in drops]
            mean_drop = float(np.mean(cols)) if cols else 0.0
            entry = stats.setdefault(_frequency_key(sp), [0, []])
            entry[0] += 1
            entry[1].append(mean_drop)
    items = {
        name: {"count": count, "mean_r2_drop": float(np.mean(ds))}
        for name, (count, ds) in stats.items()
    }
    return dict(sorted(items.items(),
                       key=lambda kv: (-kv[1]["count"], kv[0])))


def compare_arms(records, config_snapshot: dict | None = None) -> ComparisonReport:
    """Arm means, percent change, overlap, and U test for each metric."""
    by_arm = {arm: sorted((r for r in records if r.arm == arm),
                          key=lambda r: r.run_index) for arm in ARMS}
    extra = {r.arm for r in records} - set(ARMS)
    if extra:
        raise UnbalancedArms(f"records carry unknown arm(s) {sorted(extra)}")
    n_base, n_aug = len(by_arm["Baseline"]), len(by_arm["Augmented"])
    if n_base == 0 or n_base != n_aug:
        raise UnbalancedArms(
            f"need the same nonzero run count per arm, got "
            f"{n_base} Baseline vs {n_aug} Augmented")
    metrics = {}
    for name in METRIC_NAMES:
        base = [float(getattr(r.test_metrics, name))
                for r in by_arm["Baseline"]]
        aug = [float(getattr(r.test_metrics, name))
               for r in by_arm["Augmented"]]
        bm, am = float(np.mean(base)), float(np.mean(aug))
        if bm == 0.0:
            pct = 0.0 if am == 0.0 else None  # undefined relative change
        else:
            pct = (am - bm) / abs(bm)
        u = mann_whitney_u(base, aug)
        metrics[name] = {
            "baseline_mean": bm,
            "augmented_mean": am,
            "pct_change": pct,
            "overlap": histogram_overlap(base, aug, DEFAULT_OVERLAP_BINS),
            "u_statistic": u.u_statistic,
            "p_value": u.p_value,
            "baseline_values": base,
            "augmented_values": aug,
        }
    return ComparisonReport(
        metrics=metrics,
        feature_frequency=_feature_frequency(by_arm["Augmented"]),
        config_snapshot=dict(config_snapshot or {}),
    )


def champion_pfi(records) -> dict:
    """Per-arm top-R2 record (ties go to the lowest run index).

    Each record already carries its own PFI list; this picks which one
    headlines the report's PFI chart for each arm.
    """
    out: dict[str, RunRecord] = {}
    for rec in sorted(records, key=lambda r: (r.arm, r.run_index)):
        cur = out.get(rec.arm)
        if cur is None or rec.test_metrics.r2 > cur.test_metrics.r2:
            out[rec.arm] = rec
    return out


# -- report artifacts --------------------------------------------------------

def report_to_dict(report: ComparisonReport) -> dict:
    return {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "metrics": report.metrics,
        "feature_frequency": report.feature_frequency,
        "config": report.config_snapshot,
    }


def report_from_dict(doc: dict) -> ComparisonReport:
    if doc.get("format") != REPORT_FORMAT:
        raise ConfigError(f"not a {REPORT_FORMAT} document")
    if doc.get("version") != REPORT_VERSION:
        raise ConfigError(f"unsupported report version {doc.get('version')!r}")
    return ComparisonReport(metrics=doc["metrics"],
                            feature_frequency=doc["feature_frequency"],
                            config_snapshot=doc["config"])


def emit_report(report: ComparisonReport, records, out_dir,
                models: dict | None = None) -> list[Path]:
    """Write report.json, run records, optional models, and all SVG plots.

    Returns the written paths.  models maps (arm, run_index) to a
    BoostedModel; pass it when relocating artifacts to a fresh directory.
    """
    out = Path(out_dir)
    written = []
    path = out / "report.json"
    _write_json(path, report_to_dict(report))
    written.append(path)
    for rec in records:
        path = run_path(out, rec.arm, rec.run_index)
        _write_json(path, run_record_to_dict(rec))
        written.append(path)
    for (arm, idx), model in sorted((models or {}).items()):
        path = model_path(out, arm, idx)
        save_model(model, path)
        written.append(path)
    for name in METRIC_NAMES:
        m = report.metrics[name]
        svg = svgplot.two_arm_histogram(m["baseline_values"],
                                        m["augmented_values"], name,
                                        bins=DEFAULT_OVERLAP_BINS)
        path = out / f"hist_{name}.svg"
        _atomic_write(path, svg)
        written.append(path)
    for arm, rec in champion_pfi(records).items():
        path = out / f"overlay_{arm.lower()}.svg"
        _atomic_write(path, svgplot.overlay_chart(rec.test_actual,
                                                  rec.test_predicted, arm))
        written.append(path)
        path = out / f"pfi_{arm.lower()}.svg"
        _atomic_write(path, svgplot.pfi_chart(rec.pfi, arm))
        written.append(path)
    return written
