"""Seeded synthetic market and indicator generators.

Real price and pandemic-indicator feeds cannot ship with the repository, so
fixtures and the injected-signal experiments are generated here instead.
Every generator is a pure function of its seed.

The central trick: returns at day i embed a component of the hidden driver
at day i - horizon.  After alignment (target[t] = Returns[t + horizon]) the
target at row t is therefore a function of indicator windows ending at t,
which is exactly what the feature search is supposed to discover.
"""

from __future__ import annotations

import numpy as np

from .config import DEFAULT_INDICATOR_COLUMNS
from .ingest import (
    AlignedDataset,
    IndicatorTable,
    PriceSeries,
    build_dataset,
)


def _dates(n: int, start: str) -> np.ndarray:
    return np.datetime64(start, "D") + np.arange(n)


def _ar1(rng: np.random.Generator, n: int, rho: float) -> np.ndarray:
    """Unit-variance stationary AR(1) path."""
    eps = rng.standard_normal(n) * np.sqrt(1.0 - rho * rho)
    out = np.empty(n)
    out[0] = rng.standard_normal()
    for t in range(1, n):
        out[t] = rho * out[t - 1] + eps[t]
    return out


def _standardize(x: np.ndarray) -> np.ndarray:
    return (x - x.mean()) / x.std()


def _rolling_mean(x: np.ndarray, w: int) -> np.ndarray:
    """Trailing w-day mean; the first w-1 entries reuse the partial window."""
    c = np.concatenate([[0.0], np.cumsum(x)])
    out = np.empty_like(x)
    for t in range(len(x)):
        lo = max(0, t - w + 1)
        out[t] = (c[t + 1] - c[lo]) / (t + 1 - lo)
    return out


def _bumps(n: int, centers, widths, heights) -> np.ndarray:
    """Sum of Gaussian bumps: the classic multi-wave epidemic silhouette."""
    t = np.arange(n, dtype=np.float64)
    out = np.zeros(n)
    for c, w, h in zip(centers, widths, heights):
        out += h * np.exp(-0.5 * ((t - c) / w) ** 2)
    return out


def returns_with_signal(
    rng: np.random.Generator,
    n_returns: int,
    driver: np.ndarray,
    *,
    beta_momentum: float,
    beta_exo: float,
    noise: float,
    horizon: int = 7,
    scale: float = 0.035,
) -> tuple[np.ndarray, np.ndarray]:
    """Return (returns, momentum_latent) of length n_returns.

    returns[i] = scale * (beta_momentum * mu[i] + beta_exo * driver[i - horizon]
    + noise * eta[i]); the driver term is absent where i < horizon.  mu is a
    slow AR(1) so that averages of past returns predict future returns,
    giving the price-only arm something honest to work with.
    """
    if len(driver) != n_returns:
        raise ValueError("driver must align with the return index")
    mu = _ar1(rng, n_returns, rho=0.97)
    eta = rng.standard_normal(n_returns)
    r = beta_momentum * mu + noise * eta
    r[horizon:] += beta_exo * driver[:-horizon] if horizon else beta_exo * driver
    return scale * r, mu


def prices_from_returns(returns: np.ndarray, start: str, s0: float = 18000.0) -> PriceSeries:
    close = s0 * np.exp(np.concatenate([[0.0], np.cumsum(returns)]))
    return PriceSeries(dates=_dates(len(close), start), close=close)


def btc_like_prices(n_closes: int, start: str, seed: int, s0: float = 18000.0) -> PriceSeries:
    """Signal-free price path with clustered volatility; for parser fixtures."""
    rng = np.random.default_rng(seed)
    n = n_closes - 1
    logvol = _ar1(rng, n, rho=0.95) * 0.45 + np.log(0.032)
    r = rng.standard_normal(n) * np.exp(logvol) + 0.0004
    return prices_from_returns(r, start, s0)


def covid_like_indicators(
    dates: np.ndarray,
    seed: int,
    z_repro: np.ndarray | None = None,
    z_posrate: np.ndarray | None = None,
) -> IndicatorTable:
    """All 45 default indicator columns with OWID-like shapes and gaps.

    z_repro / z_posrate, when given, are smooth unit-variance latents planted
    into reproduction_rate and positive_rate so those columns carry signal;
    otherwise independent latents are drawn.  Gaps are deliberate: vaccine
    columns lead with NaN, weekly_* report once a week, excess mortality
    twice a month.
    """
    n = len(dates)
    rng = np.random.default_rng(seed)
    if z_repro is None:
        z_repro = _ar1(rng, n, rho=0.94)
    if z_posrate is None:
        z_posrate = _ar1(rng, n, rho=0.94)

    # Epidemic waves spread over the whole span so train and test periods
    # see comparable ranges.
    step = max(n // 4, 1)
    wave = _bumps(
        n,
        centers=[0.55 * step, 1.55 * step, 2.6 * step, 3.6 * step],
        widths=[0.22 * step, 0.25 * step, 0.2 * step, 0.24 * step],
        heights=[1.0, 1.7, 1.3, 2.2],
    )
    wave = wave + 0.03 + 0.02 * np.abs(_ar1(rng, n, rho=0.8))

    pop_m = 7900.0  # population in millions for per-capita variants
    new_cases = 420_000.0 * wave * (1.0 + 0.08 * rng.standard_normal(n))
    new_cases = np.maximum(new_cases, 0.0)
    new_cases_sm = _rolling_mean(new_cases, 7)
    total_cases = np.cumsum(new_cases)

    lag = 14
    new_deaths = 0.016 * np.concatenate([new_cases_sm[:1].repeat(lag), new_cases_sm[:-lag]])
    new_deaths *= 1.0 + 0.1 * rng.standard_normal(n)
    new_deaths = np.maximum(new_deaths, 0.0)
    new_deaths_sm = _rolling_mean(new_deaths, 7)
    total_deaths = np.cumsum(new_deaths)

    hosp = 90_000.0 * _rolling_mean(wave, 10) * (1.0 + 0.05 * rng.standard_normal(n))
    hosp = np.maximum(hosp, 0.0)
    icu = 0.22 * hosp * (1.0 + 0.05 * rng.standard_normal(n))

    tests = 4_000_000.0 * (0.6 + 0.4 * np.linspace(0, 1, n)) * (1.0 + 0.3 * wave)
    tests *= 1.0 + 0.05 * rng.standard_normal(n)
    tests = np.maximum(tests, 1.0)
    tests_sm = _rolling_mean(tests, 7)
    total_tests = np.cumsum(tests)

    positive_rate = np.clip(0.11 + 0.045 * z_posrate + 0.004 * rng.standard_normal(n), 0.003, 0.6)
    repro = 1.0 + 0.3 * z_repro + 0.012 * rng.standard_normal(n)

    t_idx = np.arange(n, dtype=np.float64)
    uptake = 1.0 / (1.0 + np.exp(-(t_idx - 0.45 * n) / (0.09 * n)))
    people_vacc = pop_m * 1e6 * 0.62 * uptake
    fully = np.concatenate([np.zeros(28), people_vacc[:-28]]) * 0.92
    boost_start = int(0.6 * n)
    boosters = np.where(
        t_idx > boost_start,
        pop_m * 1e6 * 0.25 / (1.0 + np.exp(-(t_idx - 0.85 * n) / (0.07 * n))),
        0.0,
    )
    new_vacc = np.maximum(np.diff(people_vacc * 1.9, prepend=0.0), 0.0)
    new_vacc *= 1.0 + 0.15 * rng.standard_normal(n)
    new_vacc = np.maximum(new_vacc, 0.0)
    new_vacc_sm = _rolling_mean(new_vacc, 7)
    new_people = np.maximum(np.diff(people_vacc, prepend=0.0), 0.0)
    new_people_sm = _rolling_mean(new_people, 7)
    total_vacc = np.cumsum(new_vacc)

    stringency = np.clip(28.0 + 48.0 * _rolling_mean(wave, 14) / max(wave.max(), 1e-9)
                         + 2.0 * rng.standard_normal(n), 0.0, 100.0)
    excess = 8.0 + 22.0 * _rolling_mean(wave, 21) / max(wave.max(), 1e-9)
    excess += 1.5 * rng.standard_normal(n)
    excess_cum = np.cumsum(np.maximum(excess, 0.0)) / 30.0

    cols = {
        "total_cases": total_cases,
        "new_cases": new_cases,
        "new_cases_smoothed": new_cases_sm,
        "total_deaths": total_deaths,
        "new_deaths": new_deaths,
        "new_deaths_smoothed": new_deaths_sm,
        "total_cases_per_million": total_cases / pop_m,
        "new_cases_per_million": new_cases / pop_m,
        "new_cases_smoothed_per_million": new_cases_sm / pop_m,
        "total_deaths_per_million": total_deaths / pop_m,
        "new_deaths_per_million": new_deaths / pop_m,
        "new_deaths_smoothed_per_million": new_deaths_sm / pop_m,
        "reproduction_rate": repro,
        "icu_patients": icu,
        "icu_patients_per_million": icu / pop_m,
        "hosp_patients": hosp,
        "hosp_patients_per_million": hosp / pop_m,
        "weekly_icu_admissions": 7.0 * 0.1 * icu,
        "weekly_icu_admissions_per_million": 7.0 * 0.1 * icu / pop_m,
        "weekly_hosp_admissions": 7.0 * 0.12 * hosp,
        "weekly_hosp_admissions_per_million": 7.0 * 0.12 * hosp / pop_m,
        "total_tests": total_tests,
        "new_tests": tests,
        "total_tests_per_thousand": total_tests / (pop_m * 1000.0),
        "new_tests_per_thousand": tests / (pop_m * 1000.0),
        "new_tests_smoothed": tests_sm,
        "new_tests_smoothed_per_thousand": tests_sm / (pop_m * 1000.0),
        "positive_rate": positive_rate,
        "tests_per_case": tests / np.maximum(new_cases, 1.0),
        "total_vaccinations": total_vacc,
        "people_vaccinated": people_vacc,
        "people_fully_vaccinated": fully,
        "total_boosters": boosters,
        "new_vaccinations": new_vacc,
        "new_vaccinations_smoothed": new_vacc_sm,
        "total_vaccinations_per_hundred": total_vacc / (pop_m * 1e4),
        "people_vaccinated_per_hundred": people_vacc / (pop_m * 1e4),
        "people_fully_vaccinated_per_hundred": fully / (pop_m * 1e4),
        "total_boosters_per_hundred": boosters / (pop_m * 1e4),
        "new_vaccinations_smoothed_per_million": new_vacc_sm / pop_m,
        "new_people_vaccinated_smoothed": new_people_sm,
        "new_people_vaccinated_smoothed_per_hundred": new_people_sm / (pop_m * 1e4),
        "stringency_index": stringency,
        "excess_mortality": excess,
        "excess_mortality_cumulative": excess_cum,
    }
    assert set(cols) == set(DEFAULT_INDICATOR_COLUMNS)

    # Reporting gaps.
    vacc_cols = [c for c in cols if "vacc" in c or "booster" in c]
    vacc_start = int(0.05 * n)
    weekly = np.arange(n) % 7 != 0
    for name in ("weekly_icu_admissions", "weekly_icu_admissions_per_million",
                 "weekly_hosp_admissions", "weekly_hosp_admissions_per_million"):
        col = cols[name].copy()
        col[weekly] = np.nan
        cols[name] = col
    for name in vacc_cols:
        col = cols[name].copy()
        col[:vacc_start] = np.nan
        cols[name] = col
    for name in ("excess_mortality", "excess_mortality_cumulative"):
        col = cols[name].copy()
        col[np.arange(n) % 15 != 0] = np.nan
        cols[name] = col

    return IndicatorTable(dates=dates.astype("datetime64[D]"), columns=cols)


def btc_covid_fixture(
    seed: int,
    n_closes: int = 566,
    start: str = "2020-12-10",
    *,
    beta_momentum: float = 0.40,
    beta_exo: float = 0.45,
    noise: float = 0.88,
    horizon: int = 7,
) -> tuple[PriceSeries, IndicatorTable]:
    """Price + 45-indicator pair whose aligned dataset hides a real edge.

    The driver planted into the returns is a tanh-squashed blend of the
    latents carried by reproduction_rate (weight 0.75) and positive_rate
    (0.25).  The squash bounds the driver, so when the test period pushes a
    latent past its training range the saturated response a tree clamps to
    is close to correct.  The momentum component is reachable from price
    history alone, so the Baseline arm scores above zero while the
    Augmented arm can add the indicator component on top.
    """
    rng = np.random.default_rng(seed)
    n_ret = n_closes - 1
    z_repro = _ar1(rng, n_ret, rho=0.94)
    z_pos = 0.6 * z_repro + 0.8 * _ar1(rng, n_ret, rho=0.94)
    driver = _standardize(np.tanh(0.75 * z_repro + 0.25 * _standardize(z_pos)))
    r, _ = returns_with_signal(
        rng, n_ret, driver,
        beta_momentum=beta_momentum, beta_exo=beta_exo, noise=noise,
        horizon=horizon,
    )
    prices = prices_from_returns(r, start)
    # Indicator dates align with return dates (prices start one day early).
    ind = covid_like_indicators(
        prices.dates[1:], seed + 1, z_repro=z_repro, z_posrate=_standardize(z_pos)
    )
    return prices, ind


def planted_signal_dataset(
    seed: int,
    n_rows: int = 558,
    start: str = "2020-12-10",
    horizon: int = 7,
) -> AlignedDataset:
    """Aligned dataset where target = 0.6 * g(indicator windows) + 0.3 * noise.

    g is the standardized trailing 4-day mean of the column "ind_alpha"
    (an AR(1) path); two pure-noise decoys ride along.  Nothing in the
    price history predicts the target, so only the Augmented pool can reach
    the planted structure; the attainable R-squared tops out near 0.8.
    """
    rng = np.random.default_rng(seed)
    n_closes = n_rows + 1 + horizon
    n_ret = n_closes - 1
    x = _ar1(rng, n_ret, rho=0.6)
    g = _standardize(_rolling_mean(x, 4))
    r, _ = returns_with_signal(
        rng, n_ret, g, beta_momentum=0.0, beta_exo=0.6, noise=0.3,
        horizon=horizon,
    )
    prices = prices_from_returns(r, start)
    ind = IndicatorTable(
        dates=prices.dates[1:],
        columns={
            "ind_alpha": x,
            "ind_beta": rng.standard_normal(n_ret),
            "ind_gamma": _ar1(rng, n_ret, rho=0.5),
        },
    )
    return build_dataset(prices, ind, horizon=horizon)
