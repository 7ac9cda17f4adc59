"""Genetic search over hyperparameters and windowed feature subsets.

A genome is a flat vector of 34 genes: ten hyperparameter genes in
HyperParams field order, then six feature slots of four genes each
(series index into the active pool, window offset w0, window length wl,
function code fc).  Categorical genes hold option indices or codes and
mutate by uniform resampling; numeric genes mutate by clamped Gaussian
jitter with sigma at 10% of the gene range.  Disabled slots (fc = -1)
are stored in one canonical form so equal phenotypes compare equal.

The engine is generational with elitism: the best parents_kept genomes
survive unchanged (keeping their already-computed fitness and evaluation
seed), the rest of the population is refilled by uniform crossover of
random parent pairs plus mutation.  Every fitness evaluation is seeded
by (run seed, generation, population index), so a full run is a pure
function of (dataset, split, config, pool).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .booster import HyperParams, fit, predict
from .booster.params import BOOSTING_TYPES, MAX_DEPTH_CHOICES, RANGES
from .errors import (
    ConfigError,
    FeatgateError,
    OutOfRange,
    OutOfRangeGene,
    TooManyFeatures,
    UnknownSeries,
)
from .featwin import (
    FC_DISABLED,
    MAX_ENABLED,
    MAX_LOOKBACK,
    VALID_FC,
    W0_MAX,
    WL_MAX,
    FeatureSpec,
    build_matrix,
)
from .ingest import AlignedDataset, SplitIndices
from .metrics import MetricSet, compute_metrics

log = logging.getLogger(__name__)

FC_GENE_OPTIONS = tuple(sorted(VALID_FC))
N_HP_GENES = 10
N_SLOTS = MAX_ENABLED
SLOT_GENES = 4
#: Canonical form of a disabled feature slot.
DISABLED_SLOT = (0, 0, WL_MAX, FC_DISABLED)
#: Slot written into an all-disabled genome: 7-day average of pool[0].
REPAIR_SLOT = (0, 0, WL_MAX, 1)


@dataclass(frozen=True)
class _Gene:
    name: str
    kind: str  # "int" | "float" | "cat"
    lo: float = 0.0
    hi: float = 0.0
    options: tuple = ()

    def sample(self, rng: np.random.Generator):
        if self.kind == "cat":
            return self.options[int(rng.integers(len(self.options)))]
        if self.kind == "int":
            return int(rng.integers(int(self.lo), int(self.hi) + 1))
        return float(rng.uniform(self.lo, self.hi))

    def mutated(self, value, rng: np.random.Generator):
        if self.kind == "cat":
            return self.options[int(rng.integers(len(self.options)))]
        sigma = 0.1 * (self.hi - self.lo)
        step = value + rng.normal(0.0, sigma)
        if self.kind == "int":
            return int(np.clip(round(step), self.lo, self.hi))
        return float(np.clip(step, self.lo, self.hi))

    def contains(self, value) -> bool:
        if self.kind == "cat":
            return any(value == opt for opt in self.options)
        if self.kind == "int":
            return (isinstance(value, (int, np.integer))
                    and self.lo <= value <= self.hi)
        return (isinstance(value, (int, float, np.integer, np.floating))
                and self.lo <= value <= self.hi)

    def clamp(self, value):
        if self.kind == "cat":
            opts = np.asarray(self.options, dtype=np.float64)
            return self.options[int(np.argmin(np.abs(opts - float(value))))]
        if self.kind == "int":
            return int(np.clip(round(float(value)), self.lo, self.hi))
        return float(np.clip(float(value), self.lo, self.hi))


@lru_cache(maxsize=None)
def _gene_table(pool_size: int) -> tuple:
    if pool_size < 1:
        raise ConfigError("series pool is empty")
    hp = (
        _Gene("boosting", "cat", options=tuple(range(len(BOOSTING_TYPES)))),
        _Gene("num_leaves", "int", *RANGES["num_leaves"]),
        _Gene("max_depth", "cat", options=tuple(range(len(MAX_DEPTH_CHOICES)))),
        _Gene("learning_rate", "float", *RANGES["learning_rate"]),
        _Gene("n_estimators", "int", *RANGES["n_estimators"]),
        _Gene("subsample", "float", *RANGES["subsample"]),
        _Gene("colsample_bytree", "float", *RANGES["colsample_bytree"]),
        _Gene("min_child_samples", "int", *RANGES["min_child_samples"]),
        _Gene("reg_alpha", "float", *RANGES["reg_alpha"]),
        _Gene("reg_lambda", "float", *RANGES["reg_lambda"]),
    )
    slots = []
    for s in range(N_SLOTS):
        slots += [
            _Gene(f"slot{s}_series", "cat", options=tuple(range(pool_size))),
            _Gene(f"slot{s}_w0", "int", 0, W0_MAX),
            _Gene(f"slot{s}_wl", "int", 1, WL_MAX),
            _Gene(f"slot{s}_fc", "cat", options=FC_GENE_OPTIONS),
        ]
    return hp + tuple(slots)


@dataclass(frozen=True)
class Genome:
    """Raw gene vector; decode() gives it meaning against a series pool."""

    hp_genes: tuple
    feature_slots: tuple

    def to_dict(self) -> dict:
        return {"hp_genes": list(self.hp_genes),
                "feature_slots": [list(s) for s in self.feature_slots]}

    @staticmethod
    def from_dict(d: dict) -> "Genome":
        return Genome(hp_genes=tuple(d["hp_genes"]),
                      feature_slots=tuple(tuple(s) for s in d["feature_slots"]))


def _flatten(g: Genome) -> list:
    flat = list(g.hp_genes)
    for slot in g.feature_slots:
        flat.extend(slot)
    return flat


def _unflatten(flat: list) -> Genome:
    hp = tuple(flat[:N_HP_GENES])
    slots = tuple(
        tuple(flat[N_HP_GENES + SLOT_GENES * s: N_HP_GENES + SLOT_GENES * (s + 1)])
        for s in range(N_SLOTS)
    )
    return Genome(hp_genes=hp, feature_slots=slots)


def _canonical(flat: list) -> list:
    # enabled slots pack to the front, disabled ones collapse to one shape,
    # so a phenotype has exactly one genome and encode can invert decode
    slots = []
    for s in range(N_SLOTS):
        base = N_HP_GENES + SLOT_GENES * s
        if flat[base + 3] != FC_DISABLED:
            slots.append(tuple(flat[base: base + SLOT_GENES]))
    if not slots:
        slots.append(REPAIR_SLOT)
    while len(slots) < N_SLOTS:
        slots.append(DISABLED_SLOT)
    out = list(flat[:N_HP_GENES])
    for slot in slots:
        out.extend(slot)
    return out


def random_genome(rng: np.random.Generator, pool_size: int) -> Genome:
    table = _gene_table(pool_size)
    return _unflatten(_canonical([gene.sample(rng) for gene in table]))


def repair(g: Genome, pool_size: int) -> tuple[Genome, bool]:
    """Clamp every gene into range and canonicalize; returns (genome, changed)."""
    table = _gene_table(pool_size)
    flat = _flatten(g)
    if len(flat) != len(table):
        raise OutOfRangeGene(
            f"genome has {len(flat)} genes, expected {len(table)}")
    fixed = _canonical([gene.clamp(v) for gene, v in zip(table, flat)])
    repaired = _unflatten(fixed)
    return repaired, repaired != g


def decode(g: Genome, pool) -> tuple[HyperParams, list[FeatureSpec]]:
    """Genome -> (HyperParams, enabled FeatureSpecs); strict about ranges."""
    pool = list(pool)
    table = _gene_table(len(pool))
    flat = _flatten(g)
    if len(flat) != len(table):
        raise OutOfRangeGene(
            f"genome has {len(flat)} genes, expected {len(table)}")
    for gene, v in zip(table, flat):
        if not gene.contains(v):
            raise OutOfRangeGene(f"gene {gene.name} = {v!r} is out of range")
    hp = HyperParams(
        boosting_type=BOOSTING_TYPES[flat[0]],
        num_leaves=int(flat[1]),
        max_depth=MAX_DEPTH_CHOICES[flat[2]],
        learning_rate=float(flat[3]),
        n_estimators=int(flat[4]),
        subsample=float(flat[5]),
        colsample_bytree=float(flat[6]),
        min_child_samples=int(flat[7]),
        reg_alpha=float(flat[8]),
        reg_lambda=float(flat[9]),
    )
    specs = []
    for s in range(N_SLOTS):
        base = N_HP_GENES + SLOT_GENES * s
        si, w0, wl, fc = flat[base: base + SLOT_GENES]
        if fc == FC_DISABLED:
            continue
        specs.append(
            FeatureSpec(series=pool[si], w0=int(w0), wl=int(wl), fc=int(fc)))
    if not specs:
        raise OutOfRangeGene("genome has no enabled feature slot")
    return hp, specs


def encode(hp: HyperParams, specs, pool) -> Genome:
    """Inverse of decode; disabled specs are dropped, slots padded canonically."""
    pool = list(pool)
    enabled = [sp for sp in specs if sp.enabled]
    if len(enabled) > N_SLOTS:
        raise TooManyFeatures(
            f"{len(enabled)} specs exceed the {N_SLOTS}-slot genome")
    slots = []
    for sp in enabled:
        try:
            si = pool.index(sp.series)
        except ValueError:
            raise UnknownSeries(f"series {sp.series!r} is not in the pool") from None
        slots.append((si, sp.w0, sp.wl, sp.fc))
    while len(slots) < N_SLOTS:
        slots.append(DISABLED_SLOT)
    hp_genes = (
        BOOSTING_TYPES.index(hp.boosting_type),
        hp.num_leaves,
        MAX_DEPTH_CHOICES.index(hp.max_depth),
        hp.learning_rate,
        hp.n_estimators,
        hp.subsample,
        hp.colsample_bytree,
        hp.min_child_samples,
        hp.reg_alpha,
        hp.reg_lambda,
    )
    return Genome(hp_genes=hp_genes, feature_slots=tuple(slots))


def _crossover(a: Genome, b: Genome, rng: np.random.Generator) -> list:
    fa, fb = _flatten(a), _flatten(b)
    mask = rng.random(len(fa)) < 0.5
    return [x if m else y for x, y, m in zip(fa, fb, mask)]


def _mutate(flat: list, rng: np.random.Generator, table, rate: float) -> Genome:
    hits = rng.random(len(flat)) < rate
    out = list(flat)
    for i in range(len(out)):
        if hits[i]:
            out[i] = table[i].mutated(out[i], rng)
    return _unflatten(_canonical(out))


@dataclass(frozen=True)
class GAConfig:
    generations: int = 150
    population: int = 24
    parents_kept: int = 8
    crossover: str = "uniform"
    mutation_rate: float = 0.08
    seed: int = 0
    fitness_floor: float = -1.0

    def __post_init__(self):
        if self.generations < 1:
            raise ConfigError(f"generations must be >= 1, got {self.generations}")
        if self.population < 4:
            raise ConfigError(f"population must be >= 4, got {self.population}")
        if not 1 <= self.parents_kept < self.population:
            raise ConfigError(
                f"parents_kept must be in [1, population), got {self.parents_kept}")
        if self.crossover != "uniform":
            raise ConfigError(f"unknown crossover scheme {self.crossover!r}")
        if not 0.0 < self.mutation_rate < 1.0:
            raise ConfigError(
                f"mutation_rate must be in (0, 1), got {self.mutation_rate}")


@dataclass(frozen=True)
class OptimResult:
    best_genome: Genome
    best_fitness: float
    best_metrics: MetricSet | None
    fitness_history: tuple
    evaluations: int
    #: (seed, generation, index) of the evaluation that produced best_fitness;
    #: refitting the decoded genome with this seed reproduces the champion.
    best_seed: tuple


def _check_split(split: SplitIndices, n_rows: int, lookback: int) -> None:
    if split.train_end <= lookback:
        raise OutOfRange(
            f"train_end {split.train_end} leaves no rows after the "
            f"{lookback}-row lookback")
    if split.train_end + split.test_len > n_rows:
        raise OutOfRange(
            f"split needs {split.train_end + split.test_len} rows, "
            f"dataset has {n_rows}")


def evaluate_full(g: Genome, d: AlignedDataset, split: SplitIndices, pool,
                  seed, *, fitness_floor: float = -1.0,
                  lookback: int = MAX_LOOKBACK):
    """(fitness, MetricSet | None); data-level failures floor, bugs raise."""
    hp, specs = decode(g, pool)
    assert len(specs) <= MAX_ENABLED
    _check_split(split, d.target.size, lookback)
    a = split.train_end - lookback
    b = a + split.test_len
    try:
        mat = build_matrix(d, specs, max_lookback=lookback)
        y = d.target[lookback:]
        model = fit(mat.values[:a], y[:a], hp, seed,
                    feature_names=mat.column_names)
        mets = compute_metrics(y[a:b], predict(model, mat.values[a:b]))
    except FeatgateError as exc:
        log.debug("evaluation floored: %s", exc)
        return fitness_floor, None
    return float(mets.r2), mets


def evaluate(g: Genome, d: AlignedDataset, split: SplitIndices, pool, seed, *,
             fitness_floor: float = -1.0,
             lookback: int = MAX_LOOKBACK) -> float:
    """Test-set R-squared of the decoded genome; degenerate cases floor."""
    return evaluate_full(g, d, split, pool, seed,
                         fitness_floor=fitness_floor, lookback=lookback)[0]


def optimize(cfg: GAConfig, pool_size: int, fitness_fn) -> OptimResult:
    """Generic GA engine; fitness_fn(genome, generation, index) -> float.

    Generation 0 is the random initial population; each later generation
    re-evaluates nothing, carrying the elite parents forward as-is.
    best_metrics is left None; dataset-aware wrappers fill it in.
    """
    table = _gene_table(pool_size)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed)))
    pop = [random_genome(rng, pool_size) for _ in range(cfg.population)]
    fits = [float(fitness_fn(g, 0, i)) for i, g in enumerate(pop)]
    seeds = [(cfg.seed, 0, i) for i in range(cfg.population)]
    evaluations = cfg.population
    history = [max(fits)]
    for gen in range(1, cfg.generations):
        order = np.argsort(-np.asarray(fits), kind="stable")
        keep = [int(i) for i in order[:cfg.parents_kept]]
        parents = [pop[i] for i in keep]
        pop = parents[:]
        fits = [fits[i] for i in keep]
        seeds = [seeds[i] for i in keep]
        for ci in range(cfg.parents_kept, cfg.population):
            pa, pb = (int(v) for v in rng.integers(0, cfg.parents_kept, size=2))
            child = _mutate(_crossover(parents[pa], parents[pb], rng),
                            rng, table, cfg.mutation_rate)
            pop.append(child)
            fits.append(float(fitness_fn(child, gen, ci)))
            seeds.append((cfg.seed, gen, ci))
            evaluations += 1
        history.append(max(fits))
    best = int(np.argmax(fits))
    return OptimResult(best_genome=pop[best], best_fitness=fits[best],
                       best_metrics=None, fitness_history=tuple(history),
                       evaluations=evaluations, best_seed=seeds[best])


def run_ga(d: AlignedDataset, split: SplitIndices, cfg: GAConfig,
           pool) -> OptimResult:
    """Full search against a dataset; deterministic in (d, split, cfg, pool)."""
    pool = list(pool)
    if not pool:
        raise ConfigError("series pool is empty")
    missing = [s for s in pool if s not in d.series]
    if missing:
        raise UnknownSeries(f"pool series not in dataset: {missing}")
    _check_split(split, d.target.size, MAX_LOOKBACK)

    def fitness_fn(genome: Genome, gen: int, idx: int) -> float:
        return evaluate(genome, d, split, pool, (cfg.seed, gen, idx),
                        fitness_floor=cfg.fitness_floor)

    res = optimize(cfg, len(pool), fitness_fn)
    _, mets = evaluate_full(res.best_genome, d, split, pool, res.best_seed,
                            fitness_floor=cfg.fitness_floor)
    return replace(res, best_metrics=mets)
