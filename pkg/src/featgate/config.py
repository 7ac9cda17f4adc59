"""YAML experiment configuration: schema, defaults, validation.

The document has four sections (all optional, all keys defaulted):

data:
  prices: path to the price CSV (required to run)
  covid: path to the indicator CSV, or omit for a price-only dataset
  date_col / close_col: price CSV headers        (Date / Close)
  covid_date_col: indicator CSV date header      (date)
  location_col / location: optional row filter   (location / World)
  indicator_columns: list of column names        (45 OWID-style defaults)
  horizon: forecast horizon in days              (7)
  lookback: max feature lookback in days         (14)
  gap_policy: ffill_zero | strict                (ffill_zero)
split:
  train_end: training rows                       (358)
  test_len: test rows                            (200)
ga:
  generations / population / parents_kept / mutation_rate / fitness_floor
                                                 (150 / 24 / 8 / 0.08 / -1.0)
experiment:
  runs: repeated GA runs per arm                 (31)
  base_seed: seed of run 0; run r uses base_seed + r  (42)
  pfi_repeats: permutations per feature in PFI   (10)
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import yaml

from .errors import ConfigError, IoError

#: Default exogenous block: 45 OWID-style pandemic indicator columns.
DEFAULT_INDICATOR_COLUMNS = (
    "total_cases",
    "new_cases",
    "new_cases_smoothed",
    "total_deaths",
    "new_deaths",
    "new_deaths_smoothed",
    "total_cases_per_million",
    "new_cases_per_million",
    "new_cases_smoothed_per_million",
    "total_deaths_per_million",
    "new_deaths_per_million",
    "new_deaths_smoothed_per_million",
    "reproduction_rate",
    "icu_patients",
    "icu_patients_per_million",
    "hosp_patients",
    "hosp_patients_per_million",
    "weekly_icu_admissions",
    "weekly_icu_admissions_per_million",
    "weekly_hosp_admissions",
    "weekly_hosp_admissions_per_million",
    "total_tests",
    "new_tests",
    "total_tests_per_thousand",
    "new_tests_per_thousand",
    "new_tests_smoothed",
    "new_tests_smoothed_per_thousand",
    "positive_rate",
    "tests_per_case",
    "total_vaccinations",
    "people_vaccinated",
    "people_fully_vaccinated",
    "total_boosters",
    "new_vaccinations",
    "new_vaccinations_smoothed",
    "total_vaccinations_per_hundred",
    "people_vaccinated_per_hundred",
    "people_fully_vaccinated_per_hundred",
    "total_boosters_per_hundred",
    "new_vaccinations_smoothed_per_million",
    "new_people_vaccinated_smoothed",
    "new_people_vaccinated_smoothed_per_hundred",
    "stringency_index",
    "excess_mortality",
    "excess_mortality_cumulative",
)

assert len(DEFAULT_INDICATOR_COLUMNS) == 45


@dataclass
class DataConfig:
    prices: str | None = None
    covid: str | None = None
    date_col: str = "Date"
    close_col: str = "Close"
    covid_date_col: str = "date"
    location_col: str | None = "location"
    location: str | None = "World"
    indicator_columns: list[str] = field(
        default_factory=lambda: list(DEFAULT_INDICATOR_COLUMNS)
    )
    horizon: int = 7
    lookback: int = 14
    gap_policy: str = "ffill_zero"


@dataclass
class SplitConfig:
    train_end: int = 358
    test_len: int = 200


@dataclass
class GASettings:
    generations: int = 150
    population: int = 24
    parents_kept: int = 8
    mutation_rate: float = 0.08
    fitness_floor: float = -1.0


@dataclass
class ExperimentSettings:
    runs: int = 31
    base_seed: int = 42
    pfi_repeats: int = 10


@dataclass
class Config:
    data: DataConfig = field(default_factory=DataConfig)
    split: SplitConfig = field(default_factory=SplitConfig)
    ga: GASettings = field(default_factory=GASettings)
    experiment: ExperimentSettings = field(default_factory=ExperimentSettings)


_SECTIONS = {
    "data": DataConfig,
    "split": SplitConfig,
    "ga": GASettings,
    "experiment": ExperimentSettings,
}


def _coerce(section: str, key: str, value, annotation: str):
    # YAML already produces native types; only int-where-float-expected
    # needs widening, everything else is checked strictly.
    if annotation in ("str | None", "str"):
        if value is None and annotation == "str | None":
            return None
        if not isinstance(value, str):
            raise ConfigError(f"{section}.{key} must be a string, got {value!r}")
        return value
    if annotation == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{section}.{key} must be an integer, got {value!r}")
        return value
    if annotation == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{section}.{key} must be a number, got {value!r}")
        return float(value)
    if annotation == "list[str]":
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise ConfigError(f"{section}.{key} must be a list of strings")
        return list(value)
    raise ConfigError(f"unhandled annotation {annotation!r} for {section}.{key}")


def _build_section(section: str, cls, raw: dict):
    allowed = {f.name: f for f in fields(cls)}
    unknown = set(raw) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in section {section!r}: {sorted(unknown)}")
    kwargs = {}
    for key, value in raw.items():
        kwargs[key] = _coerce(section, key, value, str(allowed[key].type))
    return cls(**kwargs)


def validate(cfg: Config) -> Config:
    """Range checks beyond simple typing; raises ConfigError."""
    d, s, g, e = cfg.data, cfg.split, cfg.ga, cfg.experiment
    if d.horizon < 1:
        raise ConfigError("data.horizon must be >= 1")
    if d.lookback < 1:
        raise ConfigError("data.lookback must be >= 1")
    if d.gap_policy not in ("ffill_zero", "strict"):
        raise ConfigError(f"data.gap_policy {d.gap_policy!r} not recognized")
    if len(set(d.indicator_columns)) != len(d.indicator_columns):
        raise ConfigError("data.indicator_columns contains duplicates")
    if s.train_end < 1 or s.test_len < 1:
        raise ConfigError("split.train_end and split.test_len must be >= 1")
    if g.generations < 1:
        raise ConfigError("ga.generations must be >= 1")
    if g.population < 2:
        raise ConfigError("ga.population must be >= 2")
    if not 1 <= g.parents_kept < g.population:
        raise ConfigError("ga.parents_kept must be in [1, population)")
    if not 0.0 <= g.mutation_rate <= 1.0:
        raise ConfigError("ga.mutation_rate must be in [0, 1]")
    if e.runs < 1:
        raise ConfigError("experiment.runs must be >= 1")
    if e.pfi_repeats < 1:
        raise ConfigError("experiment.pfi_repeats must be >= 1")
    return cfg


def parse_config(doc: dict | None) -> Config:
    """Build a validated Config from a parsed YAML mapping."""
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a mapping")
    unknown = set(doc) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown top-level section(s): {sorted(unknown)}")
    parts = {}
    for name, cls in _SECTIONS.items():
        raw = doc.get(name, {})
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise ConfigError(f"section {name!r} must be a mapping")
        parts[name] = _build_section(name, cls, raw)
    return validate(Config(**parts))


def load_config(path) -> Config:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except FileNotFoundError as exc:
        raise IoError(str(exc)) from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML in {path}: {exc}") from None
    return parse_config(doc)
