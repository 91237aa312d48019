"""Fit initial infections and transmission rate to observed case/death series.

The search is a dependency-free two-phase black-box optimizer: a Sobol
quasi-random global phase over the parameter box, then Gaussian local
perturbations around the incumbent. Each trial averages the loss over
several seeded simulator replications because a 10^4-agent run is noisy.
The loss compares pop_scale-scaled cumulative diagnoses and deaths against
the observed national series with a mean squared relative error.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
from dataclasses import dataclass, field
from datetime import date, timedelta

import numpy as np
from scipy.stats import qmc

from .config import DiseaseConfig, InterventionConfig, PopulationConfig
from .errors import AlignmentError, ConfigurationError, ScheduleParseError, SearchError
from .simulator import DailyCounts, run_simulation

logger = logging.getLogger(__name__)

DEFAULT_START_DATE = date(2020, 1, 21)


@dataclass
class ObservedSeries:
    """Real-population cumulative confirmed cases and deaths by date."""

    dates: list[date]
    cum_confirmed: np.ndarray
    cum_deaths: np.ndarray

    def __post_init__(self):
        self.cum_confirmed = np.asarray(self.cum_confirmed, dtype=np.float64)
        self.cum_deaths = np.asarray(self.cum_deaths, dtype=np.float64)
        if not (len(self.dates) == len(self.cum_confirmed) == len(self.cum_deaths)):
            raise AlignmentError("observed series columns have mismatched lengths")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise ScheduleParseError("observed dates must be strictly increasing")
        for name, series in (("cum_confirmed", self.cum_confirmed), ("cum_deaths", self.cum_deaths)):
            if np.any(np.diff(series) < 0):
                raise ScheduleParseError(f"{name} must be non-decreasing")

    def __len__(self) -> int:
        return len(self.dates)


def observed_from_csv(path: str) -> ObservedSeries:
    """Read an observed series CSV with header date,cum_confirmed,cum_deaths."""
    dates: list[date] = []
    confirmed: list[float] = []
    deaths: list[float] = []
    with open(path, "r", encoding="utf-8") as fh:
        rows = [line for line in fh if line.strip() and not line.lstrip().startswith("#")]
    reader = csv.DictReader(rows)
    required = {"date", "cum_confirmed", "cum_deaths"}
    if reader.fieldnames is None or not required.issubset(set(reader.fieldnames)):
        raise ScheduleParseError(f"observed data needs columns {sorted(required)}, got {reader.fieldnames}")
    for row in reader:
        try:
            dates.append(date.fromisoformat(row["date"].strip()))
            confirmed.append(float(row["cum_confirmed"]))
            deaths.append(float(row["cum_deaths"]))
        except (TypeError, ValueError) as exc:
            raise ScheduleParseError(f"bad observed-data row {row}: {exc}") from exc
    return ObservedSeries(dates, np.array(confirmed), np.array(deaths))


def observed_to_csv(series: ObservedSeries, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "cum_confirmed", "cum_deaths"])
        for d, c, dd in zip(series.dates, series.cum_confirmed, series.cum_deaths):
            writer.writerow([d.isoformat(), f"{c:.6g}", f"{dd:.6g}"])


@dataclass
class CalibrationSpec:
    """Search configuration for the two fitted parameters."""

    pop_infected_range: tuple[float, float]
    beta_range: tuple[float, float]
    trials: int = 100
    replications: int = 3
    seed: int = 0
    case_weight: float = 1.0
    death_weight: float = 1.0
    global_fraction: float = 0.7
    local_scale: float = 0.1  # Gaussian perturbation scale, fraction of range width
    start_date: date = DEFAULT_START_DATE

    def validate(self) -> None:
        for name, (lo, hi) in (("pop_infected_range", self.pop_infected_range), ("beta_range", self.beta_range)):
            if not lo < hi:
                raise ConfigurationError(f"{name} must be a non-empty interval, got ({lo}, {hi})")
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if self.replications < 1:
            raise ConfigurationError("replications must be >= 1")


@dataclass
class Trial:
    index: int
    pop_infected: float
    beta_initial: float
    loss: float
    replication_losses: list[float] = field(default_factory=list)
    failed: bool = False


@dataclass
class SearchResult:
    best_pop_infected: float
    best_beta_initial: float
    best_loss: float
    trials: list[Trial]


def sim_series_to_observed(
    series: list[DailyCounts],
    pop_scale: float,
    start_date: date = DEFAULT_START_DATE,
) -> ObservedSeries:
    """Scale a simulated run up to the real population as an observed series.

    Simulated cumulative diagnoses stand in for confirmed cases.
    """
    dates = [start_date + timedelta(days=c.day) for c in series]
    confirmed = np.array([c.cumulative_diagnoses for c in series], dtype=np.float64) * pop_scale
    deaths = np.array([c.cumulative_dead for c in series], dtype=np.float64) * pop_scale
    return ObservedSeries(dates, confirmed, deaths)


def calibration_loss(
    sim_series: ObservedSeries,
    observed: ObservedSeries,
    case_weight: float = 1.0,
    death_weight: float = 1.0,
) -> float:
    """Weighted mean squared relative error over the overlapping dates.

    Per point: ((sim - obs) / max(obs, 1))^2, averaged over points within
    each series, then combined as the weight-normalized mean of the two
    per-series losses. A perfect fit scores 0; sim = 2x obs scores 1.
    """
    obs_index = {d: i for i, d in enumerate(observed.dates)}
    sim_idx = []
    obs_idx = []
    for i, d in enumerate(sim_series.dates):
        j = obs_index.get(d)
        if j is not None:
            sim_idx.append(i)
            obs_idx.append(j)
    if not sim_idx:
        raise AlignmentError("no overlapping dates between simulated and observed series")
    sim_idx = np.asarray(sim_idx)
    obs_idx = np.asarray(obs_idx)

    def mse_rel(sim_vals: np.ndarray, obs_vals: np.ndarray) -> float:
        rel = (sim_vals - obs_vals) / np.maximum(obs_vals, 1.0)
        return float((rel ** 2).mean())

    case_term = mse_rel(sim_series.cum_confirmed[sim_idx], observed.cum_confirmed[obs_idx])
    death_term = mse_rel(sim_series.cum_deaths[sim_idx], observed.cum_deaths[obs_idx])
    total_weight = case_weight + death_weight
    if total_weight <= 0:
        raise ConfigurationError("at least one of case_weight/death_weight must be positive")
    return (case_weight * case_term + death_weight * death_term) / total_weight


def search(
    spec: CalibrationSpec,
    observed: ObservedSeries,
    pop_cfg: PopulationConfig,
    disease_cfg: DiseaseConfig,
    int_cfg: InterventionConfig,
    policy=None,
    n_days: int | None = None,
) -> SearchResult:
    """Two-phase search for (pop_infected, beta_initial).

    Phase one evaluates a Sobol design over the box (global_fraction of the
    trials); phase two perturbs the incumbent with Gaussian steps scaled to
    local_scale of each range width. Failed trials are logged and skipped;
    a run where every trial fails raises SearchError.
    """
    spec.validate()
    if n_days is None:
        n_days = len(observed)
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(0,)))
    sobol = qmc.Sobol(d=2, scramble=True, seed=spec.seed)
    n_global = max(1, int(round(spec.trials * spec.global_fraction)))
    n_global = min(n_global, spec.trials)
    # Sobol balance wants powers of two; draw the next one and slice.
    unit = sobol.random_base2(max(1, int(np.ceil(np.log2(n_global)))))[:n_global]

    lo = np.array([spec.pop_infected_range[0], spec.beta_range[0]])
    hi = np.array([spec.pop_infected_range[1], spec.beta_range[1]])
    width = hi - lo

    trials: list[Trial] = []
    best: Trial | None = None
    for t in range(spec.trials):
        if t < n_global:
            point = lo + unit[t] * width
        else:
            anchor = np.array([best.pop_infected, best.beta_initial]) if best else lo + width / 2
            point = anchor + rng.normal(0.0, spec.local_scale * width)
            point = np.clip(point, lo, hi)
        trial = _evaluate_trial(
            t, float(point[0]), float(point[1]), spec, observed,
            pop_cfg, disease_cfg, int_cfg, policy, n_days,
        )
        trials.append(trial)
        if not trial.failed and (best is None or trial.loss < best.loss):
            best = trial

    if best is None:
        raise SearchError("all calibration trials failed")
    return SearchResult(
        best_pop_infected=best.pop_infected,
        best_beta_initial=best.beta_initial,
        best_loss=best.loss,
        trials=trials,
    )


def _evaluate_trial(
    index: int,
    pop_infected: float,
    beta_initial: float,
    spec: CalibrationSpec,
    observed: ObservedSeries,
    pop_cfg: PopulationConfig,
    disease_cfg: DiseaseConfig,
    int_cfg: InterventionConfig,
    policy,
    n_days: int,
) -> Trial:
    cfg = dataclasses.replace(pop_cfg, pop_infected=pop_infected, beta_initial=beta_initial)
    losses: list[float] = []
    for rep in range(spec.replications):
        rep_seed = int(np.random.SeedSequence((spec.seed, index, rep)).generate_state(1)[0])
        try:
            series = run_simulation(cfg, disease_cfg, int_cfg, policy=policy, n_days=n_days, seed=rep_seed)
            sim_obs = sim_series_to_observed(series, cfg.pop_scale, spec.start_date)
            losses.append(
                calibration_loss(sim_obs, observed, spec.case_weight, spec.death_weight)
            )
        except AlignmentError:
            raise
        except Exception as exc:  # noqa: BLE001 - a failed trial must not kill the search
            logger.warning("trial %d replication %d failed: %s", index, rep, exc)
            return Trial(index, pop_infected, beta_initial, float("inf"), losses, failed=True)
    return Trial(index, pop_infected, beta_initial, float(np.mean(losses)), losses)


def trial_log_to_csv(trials: list[Trial], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial", "pop_infected", "beta_initial", "loss", "replication_losses", "failed"])
        for t in trials:
            writer.writerow([
                t.index,
                f"{t.pop_infected:.8g}",
                f"{t.beta_initial:.8g}",
                f"{t.loss:.8g}",
                ";".join(f"{x:.8g}" for x in t.replication_losses),
                int(t.failed),
            ])
