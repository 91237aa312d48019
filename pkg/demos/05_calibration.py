"""Recover known simulator parameters from synthetic observed data.

Generates cumulative confirmed-case and death series from the simulator at
a known transmission rate, then runs the two-phase search (Sobol global
phase, Gaussian local refinement) to recover it. Uses a reduced trial count
so the demo finishes in about half a minute.
"""

import dataclasses

import numpy as np

from epictrl import FullConfig
from epictrl.baselines import uk_approximation_schedule
from epictrl.calibration import (
    CalibrationSpec,
    ObservedSeries,
    search,
    sim_series_to_observed,
)
from epictrl.simulator import run_simulation

TRUE_BETA = 0.006
TRUE_POP_INFECTED = 10.0

cfg = FullConfig()
pop = dataclasses.replace(
    cfg.population, pop_size=2000, total_pop=2000.0,
    pop_infected=TRUE_POP_INFECTED, beta_initial=TRUE_BETA,
)
policy = uk_approximation_schedule()

replicas = []
for rep in range(3):
    run = run_simulation(pop, cfg.disease, cfg.interventions,
                         policy=policy, n_days=100, seed=1000 + rep)
    replicas.append(sim_series_to_observed(run, pop.pop_scale))
observed = ObservedSeries(
    replicas[0].dates,
    np.mean([r.cum_confirmed for r in replicas], axis=0),
    np.mean([r.cum_deaths for r in replicas], axis=0),
)
print(f"synthetic target: beta={TRUE_BETA}, pop_infected={TRUE_POP_INFECTED:.0f}, "
      f"final confirmed {observed.cum_confirmed[-1]:.0f}")

spec = CalibrationSpec(
    pop_infected_range=(2, 40), beta_range=(0.002, 0.015),
    trials=40, replications=2, seed=7,
)
result = search(spec, observed, pop, cfg.disease, cfg.interventions,
                policy=policy, n_days=100)

print(f"\nbest after {spec.trials} trials:")
print(f"  beta_initial  {result.best_beta_initial:.5f}  "
      f"(error {100 * (result.best_beta_initial / TRUE_BETA - 1):+.1f}%)")
print(f"  pop_infected  {result.best_pop_infected:.1f}")
print(f"  loss          {result.best_loss:.4f}")

incumbent = np.inf
print("\nincumbent loss trajectory (every 5 trials):")
for t in result.trials:
    if not t.failed:
        incumbent = min(incumbent, t.loss)
    if (t.index + 1) % 5 == 0:
        print(f"  trial {t.index + 1:>3}: {incumbent:.4f}")
