"""Deterministic agent-based SEIRD transmission simulator.

State machine per agent:

    SUSCEPTIBLE -> EXPOSED -> {I_ASYMPTOMATIC, I_MILD} -> RECOVERED
                                          I_MILD -> I_SEVERE -> {RECOVERED, DEAD}

Transitions are scheduled when a state is entered; on the scheduled day the
agent advances (drawing symptom/severity/fatality outcomes at the moment
they are needed). Only the three infectious states transmit; DEAD and
RECOVERED are absorbing. Transmission runs over four contact layers:
household/school/work cliques (static per run) and a community layer of
random pairings resampled every day.

Everything stochastic draws from named substreams of a single master seed
in ascending agent-id order, which makes whole runs bit-reproducible.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, fields
from enum import IntEnum

import numpy as np

from . import interventions as iv
from .config import DiseaseConfig, InterventionConfig, PopulationConfig
from .errors import ConfigurationError
from .interventions import Action, NULL_ACTION
from .population import Population, synthesize_population
from .rng import all_substreams

logger = logging.getLogger(__name__)


class EpiState(IntEnum):
    SUSCEPTIBLE = 0
    EXPOSED = 1
    I_ASYMPTOMATIC = 2
    I_MILD = 3
    I_SEVERE = 4
    RECOVERED = 5
    DEAD = 6


INFECTIOUS_STATES = (EpiState.I_ASYMPTOMATIC, EpiState.I_MILD, EpiState.I_SEVERE)
INFECTED_STATES = (EpiState.EXPOSED,) + INFECTIOUS_STATES

# Sentinel for "outcome drawn at transition time" in next_state.
DRAW_AT_TRANSITION = -1


@dataclass
class AgentState:
    """Mutable per-agent epidemic state, one array entry per agent."""

    epi_state: np.ndarray            # int8 EpiState
    state_entry_day: np.ndarray      # int32
    scheduled_day: np.ndarray        # int32, -1 = none
    next_state: np.ndarray           # int8, -1 = draw at transition
    diagnosed: np.ndarray            # bool
    diagnosed_day: np.ndarray        # int32, -1 = never
    test_pending_day: np.ndarray     # int32, -1 = none (day result returns)
    test_positive: np.ndarray        # bool, result of pending test
    quarantine_start: np.ndarray     # int32, -1 = never
    quarantine_until: np.ndarray     # int32, -1 = never (exclusive end)

    @classmethod
    def fresh(cls, n: int) -> "AgentState":
        return cls(
            epi_state=np.full(n, EpiState.SUSCEPTIBLE, dtype=np.int8),
            state_entry_day=np.zeros(n, dtype=np.int32),
            scheduled_day=np.full(n, -1, dtype=np.int32),
            next_state=np.full(n, DRAW_AT_TRANSITION, dtype=np.int8),
            diagnosed=np.zeros(n, dtype=bool),
            diagnosed_day=np.full(n, -1, dtype=np.int32),
            test_pending_day=np.full(n, -1, dtype=np.int32),
            test_positive=np.zeros(n, dtype=bool),
            quarantine_start=np.full(n, -1, dtype=np.int32),
            quarantine_until=np.full(n, -1, dtype=np.int32),
        )


@dataclass
class DailyCounts:
    """Per-day stocks and flows; one record per simulated day."""

    day: int
    S: int
    E: int
    I: int
    R: int
    D: int
    new_infections: int
    new_severe: int
    new_deaths: int
    new_recovered: int
    new_tests: int
    new_quarantined: int
    new_diagnoses: int
    cumulative_tests: int
    cumulative_quarantined: int
    cumulative_diagnoses: int
    currently_infected: int
    currently_quarantined: int
    cumulative_dead: int


COUNT_FIELDS = tuple(f.name for f in fields(DailyCounts))


def counts_to_csv(series: list[DailyCounts], path: str) -> None:
    """Write one row per day with columns exactly matching the field names."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(COUNT_FIELDS)
        for c in series:
            writer.writerow([getattr(c, name) for name in COUNT_FIELDS])


def counts_from_csv(path: str) -> list[DailyCounts]:
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        return [DailyCounts(**{k: int(row[k]) for k in COUNT_FIELDS}) for row in reader]


def _lognormal_params(mean: float, sd: float) -> tuple[float, float]:
    """Underlying (mu, sigma) of a lognormal with the given real-space moments."""
    sigma2 = np.log(1.0 + (sd / mean) ** 2)
    mu = np.log(mean) - sigma2 / 2.0
    return mu, float(np.sqrt(sigma2))


def seed_infections(
    state: AgentState,
    config: PopulationConfig,
    seeding_rng: np.random.Generator,
) -> np.ndarray:
    """Move the scaled initial-infection count from SUSCEPTIBLE to EXPOSED.

    pop_infected counts people on the real-population scale; the number of
    seeded agents is max(1, round(pop_infected / pop_scale)), chosen
    uniformly at random. Returns the seeded agent ids.
    """
    n = len(state.epi_state)
    n_seed = int(round(config.pop_infected / config.pop_scale))
    if n_seed < 1:
        logger.warning(
            "pop_infected=%s scales to %d agents; flooring to 1 seeded agent",
            config.pop_infected, n_seed,
        )
        n_seed = 1
    if n_seed > n:
        raise ConfigurationError(f"seed count {n_seed} exceeds pop_size {n}")
    seeded = np.sort(seeding_rng.choice(n, size=n_seed, replace=False))
    state.epi_state[seeded] = EpiState.EXPOSED
    state.state_entry_day[seeded] = 0
    return seeded


class Simulation:
    """One self-contained simulation run with its own random substreams."""

    # Class-level aliases so the interventions module can stay import-free.
    DEAD = int(EpiState.DEAD)
    I_MILD = int(EpiState.I_MILD)
    I_SEVERE = int(EpiState.I_SEVERE)
    INFECTED_STATES = tuple(int(s) for s in INFECTED_STATES)

    def __init__(
        self,
        pop_cfg: PopulationConfig,
        disease_cfg: DiseaseConfig,
        int_cfg: InterventionConfig,
        seed: int,
    ):
        pop_cfg.validate()
        disease_cfg.validate()
        int_cfg.validate()
        self.pop_cfg = pop_cfg
        self.disease_cfg = disease_cfg
        self.int_cfg = int_cfg
        self.seed = int(seed)
        self.streams = all_substreams(self.seed)

        self._latent_mu, self._latent_sigma = _lognormal_params(disease_cfg.latent_mean, disease_cfg.latent_sd)
        self._inf_mu, self._inf_sigma = _lognormal_params(disease_cfg.infectious_mean, disease_cfg.infectious_sd)

        self.pop: Population = synthesize_population(pop_cfg, self.streams["population"])
        self.state = AgentState.fresh(pop_cfg.pop_size)
        self.day = 0
        self.seeded_ids = seed_infections(self.state, pop_cfg, self.streams["seeding"])
        self._schedule_latent(self.seeded_ids)

        # Community pairings: today's are sampled at the start of each day;
        # yesterday's are retained for contact tracing.
        self.prev_community_src: np.ndarray | None = None
        self.prev_community_dst: np.ndarray | None = None
        self._community_src: np.ndarray | None = None
        self._community_dst: np.ndarray | None = None

        # Cumulative counters.
        self.cum_tests = 0
        self.cum_quarantined = 0
        self.cum_diagnoses = 0
        self.cum_infections = len(self.seeded_ids)  # seeded agents count as infected

        self._sus_odds = np.asarray(pop_cfg.sus_odds_ratios, dtype=np.float64)
        self._layer_weight = dict(zip(("household", "school", "work", "community"), pop_cfg.layer_weights))

    # -- duration draws -------------------------------------------------

    def _schedule_latent(self, ids: np.ndarray) -> None:
        """Schedule E -> infectious transitions (latent period, >= 1 day)."""
        if not len(ids):
            return
        rng = self.streams["progression"]
        dur = rng.lognormal(self._latent_mu, self._latent_sigma, size=len(ids))
        dur = np.maximum(1, np.rint(dur)).astype(np.int32)
        self.state.scheduled_day[ids] = self.state.state_entry_day[ids] + dur
        self.state.next_state[ids] = DRAW_AT_TRANSITION

    def _draw_infectious_duration(self, k: int) -> np.ndarray:
        rng = self.streams["progression"]
        dur = rng.lognormal(self._inf_mu, self._inf_sigma, size=k)
        return np.maximum(1, np.rint(dur)).astype(np.int32)

    # -- daily step ------------------------------------------------------

    def step_day(self, action: Action) -> DailyCounts:
        """Simulate one day under the given intervention triple."""
        action.validate_physical()
        st = self.state
        day = self.day

        # Rotate the community layer: keep yesterday's pairs for tracing.
        self.prev_community_src = self._community_src
        self.prev_community_dst = self._community_dst
        self._sample_community()

        new_exposed = self._transmit(action.ch_beta)
        new_severe, new_deaths, new_recovered = self._progress()

        # Interventions: reveal due results, trace today's diagnoses, then
        # administer today's tests (results return after the test delay).
        new_diagnoses = iv.reveal_test_results(self)
        diagnosed_today = np.nonzero(st.diagnosed_day == day)[0]
        new_quarantined = iv.run_tracing(self, action.ch_ctp, diagnosed_today)
        new_tests, _ = iv.run_testing(self, action.ch_tp)

        self.cum_tests += new_tests
        self.cum_quarantined += new_quarantined
        self.cum_diagnoses += new_diagnoses
        self.cum_infections += len(new_exposed)

        counts = self._emit_counts(
            new_infections=len(new_exposed),
            new_severe=new_severe,
            new_deaths=new_deaths,
            new_recovered=new_recovered,
            new_tests=new_tests,
            new_quarantined=new_quarantined,
            new_diagnoses=new_diagnoses,
        )
        self.day += 1
        return counts

    def _sample_community(self) -> None:
        n = self.pop_cfg.pop_size
        n_pairs = int(round(n * self.pop_cfg.contacts_c / 2.0))
        rng = self.streams["community"]
        self._community_src = rng.integers(0, n, size=n_pairs, dtype=np.int64)
        self._community_dst = rng.integers(0, n, size=n_pairs, dtype=np.int64)

    def _transmit(self, ch_beta: float) -> np.ndarray:
        """One transmission sweep with state frozen at the start of the day.

        Returns the ids newly exposed today (each at most once, even when
        hit through several layers).
        """
        st = self.state
        if ch_beta == 0.0 or self.pop_cfg.beta_initial == 0.0:
            return np.empty(0, dtype=np.int64)

        epi = st.epi_state
        infectious = (epi == EpiState.I_ASYMPTOMATIC) | (epi == EpiState.I_MILD) | (epi == EpiState.I_SEVERE)
        if not infectious.any():
            return np.empty(0, dtype=np.int64)
        susceptible = epi == EpiState.SUSCEPTIBLE
        quarantined = (st.quarantine_start >= 0) & (st.quarantine_start <= self.day) & (self.day < st.quarantine_until)

        base = iv.apply_lockdown(ch_beta, self.pop_cfg.beta_initial)
        asymp = epi == EpiState.I_ASYMPTOMATIC
        cfg = self.int_cfg

        hit_chunks: list[np.ndarray] = []
        layer_edges = [(name, layer.src, layer.dst) for name, layer in self.pop.layers.items()]
        layer_edges.append(("community", self._community_src, self._community_dst))
        layer_edges.append(("community", self._community_dst, self._community_src))

        rng = self.streams["transmission"]
        for name, src, dst in layer_edges:
            if not len(src):
                continue
            cand = infectious[src] & susceptible[dst]
            if not cand.any():
                continue
            s = src[cand]
            d = dst[cand]
            p = np.full(len(s), base * self._layer_weight[name], dtype=np.float64)
            p *= self._sus_odds[self.pop.age_bands[d]]
            p[asymp[s]] *= self.pop_cfg.asymp_factor
            p[st.diagnosed[s]] *= cfg.isolation_transmission_factor
            p[quarantined[s]] *= cfg.quarantine_transmission_factor
            p[quarantined[d]] *= cfg.quarantine_susceptibility_factor
            np.clip(p, 0.0, 1.0, out=p)
            hits = d[rng.random(len(p)) < p]
            if len(hits):
                hit_chunks.append(hits)

        if not hit_chunks:
            return np.empty(0, dtype=np.int64)
        new_exposed = np.unique(np.concatenate(hit_chunks))
        st.epi_state[new_exposed] = EpiState.EXPOSED
        st.state_entry_day[new_exposed] = self.day
        self._schedule_latent(new_exposed)
        return new_exposed

    def _progress(self) -> tuple[int, int, int]:
        """Advance agents whose scheduled transition falls on today."""
        st = self.state
        due = np.nonzero(st.scheduled_day == self.day)[0]
        if not len(due):
            return 0, 0, 0
        due_states = st.epi_state[due].copy()  # snapshot: one transition per agent per day
        rng = self.streams["progression"]
        bands = self.pop.age_bands
        dc = self.disease_cfg
        new_severe = new_deaths = new_recovered = 0

        # E -> infectious: draw symptom course now.
        e_ids = due[due_states == EpiState.EXPOSED]
        if len(e_ids):
            p_sym = np.asarray(dc.prob_symptomatic)[bands[e_ids]]
            symptomatic = rng.random(len(e_ids)) < p_sym
            p_sev = np.asarray(dc.prob_severe_given_symptomatic)[bands[e_ids]]
            severe_course = symptomatic & (rng.random(len(e_ids)) < p_sev)
            dur = self._draw_infectious_duration(len(e_ids))

            asym = e_ids[~symptomatic]
            st.epi_state[asym] = EpiState.I_ASYMPTOMATIC
            mild = e_ids[symptomatic]
            st.epi_state[mild] = EpiState.I_MILD
            st.state_entry_day[e_ids] = self.day

            plain = e_ids[~severe_course]
            st.scheduled_day[plain] = self.day + dur[~severe_course]
            st.next_state[plain] = EpiState.RECOVERED

            sev = e_ids[severe_course]
            if len(sev):
                onset = rng.integers(dc.severe_onset_min, dc.severe_onset_max + 1, size=len(sev))
                st.scheduled_day[sev] = self.day + onset.astype(np.int32)
                st.next_state[sev] = EpiState.I_SEVERE

        # Infectious agents whose scheduled outcome is due.
        inf_ids = due[np.isin(due_states, (EpiState.I_ASYMPTOMATIC, EpiState.I_MILD, EpiState.I_SEVERE))]
        if len(inf_ids):
            to_severe = inf_ids[st.next_state[inf_ids] == EpiState.I_SEVERE]
            if len(to_severe):
                st.epi_state[to_severe] = EpiState.I_SEVERE
                st.state_entry_day[to_severe] = self.day
                new_severe = len(to_severe)
                p_death = np.asarray(dc.prob_death_given_severe)[bands[to_severe]]
                dies = rng.random(len(to_severe)) < p_death
                dur = self._draw_infectious_duration(len(to_severe))
                st.scheduled_day[to_severe] = self.day + dur
                st.next_state[to_severe] = np.where(dies, EpiState.DEAD, EpiState.RECOVERED).astype(np.int8)

            to_recovered = inf_ids[st.next_state[inf_ids] == EpiState.RECOVERED]
            if len(to_recovered):
                st.epi_state[to_recovered] = EpiState.RECOVERED
                st.state_entry_day[to_recovered] = self.day
                st.scheduled_day[to_recovered] = -1
                new_recovered = len(to_recovered)

            to_dead = inf_ids[st.next_state[inf_ids] == EpiState.DEAD]
            if len(to_dead):
                st.epi_state[to_dead] = EpiState.DEAD
                st.state_entry_day[to_dead] = self.day
                st.scheduled_day[to_dead] = -1
                new_deaths = len(to_dead)

        return new_severe, new_deaths, new_recovered

    def _emit_counts(self, **flows: int) -> DailyCounts:
        st = self.state
        stocks = np.bincount(st.epi_state, minlength=len(EpiState))
        infectious = int(stocks[EpiState.I_ASYMPTOMATIC] + stocks[EpiState.I_MILD] + stocks[EpiState.I_SEVERE])
        alive = st.epi_state != EpiState.DEAD
        in_quarantine = (
            (st.quarantine_start >= 0)
            & (st.quarantine_start <= self.day)
            & (self.day < st.quarantine_until)
            & alive
        )
        return DailyCounts(
            day=self.day,
            S=int(stocks[EpiState.SUSCEPTIBLE]),
            E=int(stocks[EpiState.EXPOSED]),
            I=infectious,
            R=int(stocks[EpiState.RECOVERED]),
            D=int(stocks[EpiState.DEAD]),
            cumulative_tests=self.cum_tests,
            cumulative_quarantined=self.cum_quarantined,
            cumulative_diagnoses=self.cum_diagnoses,
            currently_infected=int(stocks[EpiState.EXPOSED]) + infectious,
            currently_quarantined=int(in_quarantine.sum()),
            cumulative_dead=int(stocks[EpiState.DEAD]),
            **{k: int(v) for k, v in flows.items()},
        )


def run_simulation(
    pop_cfg: PopulationConfig,
    disease_cfg: DiseaseConfig,
    int_cfg: InterventionConfig,
    policy=None,
    n_days: int = 133,
    seed: int = 0,
    decision_days: int = 7,
) -> list[DailyCounts]:
    """Run a full simulation under a policy, without environment gating.

    The policy is queried once per decision block (every decision_days days)
    and may be None (no intervention), an object with ``action_at(day)``
    (schedule policies), or a callable ``(day, last_counts) -> Action``.
    ceil(n_days / decision_days) decisions are consumed in total. Identical
    (configs, seed, policy) reproduce the series exactly.
    """
    sim = Simulation(pop_cfg, disease_cfg, int_cfg, seed)
    series: list[DailyCounts] = []
    current = NULL_ACTION
    last: DailyCounts | None = None
    for day in range(n_days):
        if day % decision_days == 0:
            current = _query_policy(policy, day, last)
            current.validate_physical()
        last = sim.step_day(current)
        series.append(last)
    return series


def _query_policy(policy, day: int, last_counts: DailyCounts | None) -> Action:
    if policy is None:
        return NULL_ACTION
    if hasattr(policy, "action_at"):
        return policy.action_at(day)
    return policy(day, last_counts)
