"""Testing, tracing, quarantine mechanics, and the substream discipline."""

import numpy as np
import pytest

from epictrl.config import DiseaseConfig, InterventionConfig, PopulationConfig
from epictrl.errors import ActionDomainError
from epictrl.interventions import (
    Action,
    NULL_ACTION,
    apply_lockdown,
    decode_discrete,
    encode_discrete,
    run_testing,
    run_tracing,
)
from epictrl.simulator import EpiState, Simulation, run_simulation


def make_sim(pop_size=200, pop_infected=5, seed=1, int_cfg=None, **pop_kwargs) -> Simulation:
    pop_cfg = PopulationConfig(pop_size=pop_size, total_pop=float(pop_size),
                               pop_infected=float(pop_infected), **pop_kwargs)
    return Simulation(pop_cfg, DiseaseConfig(), int_cfg or InterventionConfig(), seed=seed)


class TestLockdown:
    def test_effective_beta_product(self):
        assert apply_lockdown(0.6, 0.005997) == pytest.approx(0.6 * 0.005997)
        assert apply_lockdown(0.5, 0.005997) == pytest.approx(0.0029985)

    def test_identity(self):
        assert apply_lockdown(1.0, 0.005997) == 0.005997

    def test_out_of_domain(self):
        with pytest.raises(ActionDomainError):
            apply_lockdown(1.2, 0.005997)
        with pytest.raises(ActionDomainError):
            apply_lockdown(-0.1, 0.005997)


class TestEncodeDecode:
    def test_first_and_last(self):
        assert encode_discrete(0) == Action(0.5, 0.0, 0.0)
        assert encode_discrete(63) == Action(0.875, 0.75, 0.75)

    def test_bijection_over_all_indices(self):
        seen = set()
        for k in range(64):
            action = encode_discrete(k)
            assert decode_discrete(action) == k
            seen.add((action.ch_beta, action.ch_tp, action.ch_ctp))
        assert len(seen) == 64

    def test_index_layout(self):
        assert encode_discrete(16) == Action(0.625, 0.0, 0.0)
        assert encode_discrete(4) == Action(0.5, 0.25, 0.0)
        assert encode_discrete(1) == Action(0.5, 0.0, 0.25)

    def test_out_of_range(self):
        for bad in (-1, 64, 100):
            with pytest.raises(ActionDomainError):
                encode_discrete(bad)
        with pytest.raises(ActionDomainError):
            decode_discrete(Action(0.6, 0.0, 0.0))


class TestTesting:
    def _symptomatic_sim(self, seed, n=100):
        """Whole population mild-symptomatic and undiagnosed, detection off."""
        int_cfg = InterventionConfig(symp_detection_prob=0.0, severe_detection_prob=0.0)
        sim = make_sim(pop_size=n, pop_infected=1, seed=seed, int_cfg=int_cfg)
        sim.state.epi_state[:] = EpiState.I_MILD
        sim.state.scheduled_day[:] = 10_000
        sim.state.next_state[:] = EpiState.RECOVERED
        return sim

    def test_zero_probability_means_zero_tests(self):
        sim = self._symptomatic_sim(0)
        new_tests, _ = run_testing(sim, 0.0)
        assert new_tests == 0
        assert (sim.state.test_pending_day == -1).all()

    @pytest.mark.slow
    def test_binomial_oracle_100_symptomatic(self):
        # 100 symptomatic agents at ch_tp = 0.75: mean tests within 3 sigma
        # of Binomial(100, 0.75) over 1000 replications.
        n_rep = 1000
        total = 0
        for seed in range(n_rep):
            sim = self._symptomatic_sim(seed)
            new_tests, _ = run_testing(sim, 0.75)
            total += new_tests
        mean = total / n_rep
        sigma = np.sqrt(100 * 0.75 * 0.25 / n_rep)
        assert abs(mean - 75.0) < 3 * sigma

    def test_asymptomatic_factor_scales_probability(self):
        int_cfg = InterventionConfig(symp_detection_prob=0.0, severe_detection_prob=0.0,
                                     asymptomatic_test_factor=0.0)
        sim = make_sim(pop_size=300, pop_infected=1, seed=3, int_cfg=int_cfg)
        # All susceptible (non-symptomatic): zero asymptomatic factor, no tests.
        sim.state.epi_state[:] = EpiState.SUSCEPTIBLE
        new_tests, _ = run_testing(sim, 1.0)
        assert new_tests == 0

    def test_positive_results_only_for_infected(self):
        int_cfg = InterventionConfig(symp_detection_prob=0.0, severe_detection_prob=0.0,
                                     test_delay=1, asymptomatic_test_factor=1.0)
        sim = make_sim(pop_size=10, pop_infected=1, seed=3, int_cfg=int_cfg)
        sim.state.epi_state[:] = EpiState.SUSCEPTIBLE
        sim.state.epi_state[3] = EpiState.EXPOSED
        sim.state.epi_state[4] = EpiState.RECOVERED
        sim.state.scheduled_day[:] = 10_000
        run_testing(sim, 1.0)
        assert (sim.state.test_pending_day[[3, 4]] == sim.day + 1).all()
        assert sim.state.test_positive[3]       # exposed agents test positive
        assert not sim.state.test_positive[4]   # recovered agents test negative

    def test_isolated_diagnosed_agent_with_zero_factor_infects_nobody(self):
        int_cfg = InterventionConfig(isolation_transmission_factor=0.0,
                                     symp_detection_prob=0.0, severe_detection_prob=0.0)
        pop_cfg = PopulationConfig(pop_size=50, total_pop=50.0, pop_infected=1.0, beta_initial=0.5)
        sim = Simulation(pop_cfg, DiseaseConfig(), int_cfg, seed=5)
        src = int(sim.seeded_ids[0])
        sim.state.epi_state[src] = EpiState.I_MILD
        sim.state.scheduled_day[src] = 10_000
        sim.state.diagnosed[src] = True
        sim.state.diagnosed_day[src] = 0
        for _ in range(20):
            counts = sim.step_day(NULL_ACTION)
            assert counts.new_infections == 0


class TestTracing:
    def _household_sim(self, n=4):
        """One household of four (80+ ages: no school/work edges)."""
        int_cfg = InterventionConfig(symp_detection_prob=0.0, severe_detection_prob=0.0,
                                     trace_delay=2, quarantine_duration=14)
        pop_cfg = PopulationConfig(
            pop_size=n, total_pop=float(n), pop_infected=1.0,
            contacts_h=float(n - 1), contacts_c=0.01,
            age_pyramid=(0.0,) * 8 + (1.0,),
        )
        return Simulation(pop_cfg, DiseaseConfig(), int_cfg, seed=9)

    def test_zero_ctp_no_quarantines(self):
        sim = self._household_sim()
        assert run_tracing(sim, 0.0, np.array([0])) == 0
        assert (sim.state.quarantine_until == -1).all()

    def test_full_tracing_quarantines_all_household_contacts(self):
        sim = self._household_sim()
        new_q = run_tracing(sim, 1.0, np.array([0]))
        assert new_q == 3
        others = [1, 2, 3]
        assert (sim.state.quarantine_start[others] == sim.day + 2).all()
        assert (sim.state.quarantine_until[others] == sim.day + 2 + 14).all()

    def test_retrace_extends_without_double_count(self):
        sim = self._household_sim()
        assert run_tracing(sim, 1.0, np.array([0])) == 3
        first_until = sim.state.quarantine_until[1]
        sim.day = 5
        new_q = run_tracing(sim, 1.0, np.array([2]))
        # Agents 0, 1, 3 are contacts of 2; 1 and 3 already quarantined
        # (extended, not recounted); agent 0 is fresh.
        assert new_q == 1
        assert sim.state.quarantine_until[1] == 5 + 2 + 14 > first_until

    def test_quarantine_after_expiry_counts_again(self):
        sim = self._household_sim()
        run_tracing(sim, 1.0, np.array([0]))
        sim.day = 40  # all windows expired
        assert run_tracing(sim, 1.0, np.array([0])) == 3

    def test_cq_counts_distinct_entries(self, small_cfg):
        policy = lambda day, counts: Action(1.0, 0.75, 0.75)
        series = run_simulation(
            small_cfg.population, small_cfg.disease, small_cfg.interventions,
            policy=policy, n_days=80, seed=21,
        )
        assert series[-1].cumulative_quarantined == sum(c.new_quarantined for c in series)
        assert series[-1].cumulative_tests == sum(c.new_tests for c in series)


class TestStreamDiscipline:
    def test_null_triple_equals_no_intervention_run(self, small_cfg):
        args = (small_cfg.population, small_cfg.disease, small_cfg.interventions)
        null_run = run_simulation(*args, policy=lambda d, c: NULL_ACTION, n_days=90, seed=31)
        no_policy = run_simulation(*args, policy=None, n_days=90, seed=31)
        assert null_run == no_policy
        assert null_run[-1].cumulative_tests == 0
        assert null_run[-1].cumulative_quarantined == 0

    def test_same_ch_beta_zero_testing_matches_no_intervention(self, small_cfg):
        args = (small_cfg.population, small_cfg.disease, small_cfg.interventions)
        locked_null = run_simulation(*args, policy=lambda d, c: Action(0.7, 0.0, 0.0), n_days=90, seed=31)
        locked_ref = run_simulation(*args, policy=lambda d, c: Action(0.7, 0.0, 0.0), n_days=90, seed=31)
        assert locked_null == locked_ref
        assert locked_null[-1].cumulative_tests == 0
        assert locked_null[-1].cumulative_quarantined == 0

    def test_disabling_tracing_does_not_perturb_testing_stream(self, small_cfg):
        # Testing-only run and testing-plus-tracing run must administer the
        # same tests on the days before tracing has any effect.
        args = (small_cfg.population, small_cfg.disease, small_cfg.interventions)
        test_only = run_simulation(*args, policy=lambda d, c: Action(1.0, 0.5, 0.0), n_days=12, seed=8)
        test_trace = run_simulation(*args, policy=lambda d, c: Action(1.0, 0.5, 1.0), n_days=12, seed=8)
        # Until the first diagnosis day there are no traced quarantines, so
        # the two runs agree exactly.
        first_diag = next((c.day for c in test_only if c.new_diagnoses), None)
        if first_diag is not None:
            assert test_only[:first_diag] == test_trace[:first_diag]
