"""Decision-step environment wrapping the simulator.

One environment step applies an intervention triple for step_days
consecutive simulated days and returns the end-of-step observation, the sum
of the daily rewards over those days (plus, in continuous action spaces,
one action-change penalty against the previous step's applied action), a
done flag, and diagnostics.

Actions only take effect once the epidemic is visible: while cumulative
diagnoses are below the activation threshold the applied action is forced
to the null triple (no lockdown, no testing, no tracing) regardless of the
input. Schedule policies are allowed outside the agents' continuous box
(e.g. deeper lockdowns), so the environment validates actions against their
physical [0, 1] domains in continuous mode and against the discrete grid in
discrete mode.
"""

from __future__ import annotations

import json
from dataclasses import asdict

import numpy as np

from .config import FullConfig
from .errors import ActionDomainError, ProtocolError
from .interventions import (
    Action,
    NULL_ACTION,
    decode_discrete,
    encode_discrete,
)
from .rewards import action_penalty, daily_reward
from .simulator import DailyCounts, Simulation

__all__ = ["EpidemicEnv", "encode_discrete", "decode_discrete", "OBSERVATION_FIELDS"]

OBSERVATION_FIELDS = ("S", "E", "I", "R", "D", "cumulative_tests", "cumulative_quarantined", "cumulative_diagnoses")


class EpidemicEnv:
    """Reset/step interface over the agent-based simulator."""

    def __init__(self, config: FullConfig):
        config.validate()
        self.config = config
        self.env_cfg = config.env
        self.pop_size = config.population.pop_size
        self.sim: Simulation | None = None
        self._done = True
        self._days_elapsed = 0
        self._prev_applied = NULL_ACTION
        self._last_counts: DailyCounts | None = None

    # -- spaces ----------------------------------------------------------

    @property
    def observation_dim(self) -> int:
        return 8 if self.env_cfg.include_diagnoses_dim else 7

    @property
    def n_steps_per_episode(self) -> int:
        return -(-self.env_cfg.episode_days // self.env_cfg.step_days)  # ceil

    # -- protocol ----------------------------------------------------------

    def reset(self, seed: int) -> np.ndarray:
        """Start a fresh episode; deterministic per seed."""
        self.sim = Simulation(
            self.config.population, self.config.disease, self.config.interventions, seed
        )
        self._done = False
        self._days_elapsed = 0
        self._prev_applied = NULL_ACTION
        self._last_counts = None
        return self._observe()

    def step(self, action) -> tuple[np.ndarray, float, bool, dict]:
        """Apply an action for one decision block of step_days days.

        Accepts an Action, or a flat index in discrete mode. Raises
        ActionDomainError for out-of-domain actions and ProtocolError when
        called on a finished episode.
        """
        if self.sim is None:
            raise ProtocolError("step() before reset()")
        if self._done:
            raise ProtocolError("step() on a finished episode")
        raw = self._coerce_action(action)

        activated = self._cumulative_diagnoses() >= self.env_cfg.activation_threshold
        applied = raw if activated else NULL_ACTION

        days_left = self.env_cfg.episode_days - self._days_elapsed
        block = min(self.env_cfg.step_days, days_left)
        weights = self.config.rewards

        week_counts: list[DailyCounts] = []
        r_h_daily: list[float] = []
        r_e_daily: list[float] = []
        r_e_scaled_daily: list[float] = []
        reward = 0.0
        for _ in range(block):
            counts = self.sim.step_day(applied)
            week_counts.append(counts)
            dr = daily_reward(counts, applied, weights, self.pop_size)
            r_h_daily.append(dr.r_h)
            r_e_daily.append(dr.r_e)
            r_e_scaled_daily.append(dr.r_e_scaled)
            reward += dr.combined

        penalty = None
        if self.env_cfg.action_space_kind == "continuous":
            penalty = action_penalty(applied, self._prev_applied)
            reward += weights.lambda3 * penalty

        self._days_elapsed += block
        self._last_counts = week_counts[-1]
        self._prev_applied = applied
        self._done = self._days_elapsed >= self.env_cfg.episode_days

        info = {
            "day": self._days_elapsed,
            "raw_action": raw,
            "applied_action": applied,
            "activated": activated,
            "week_counts": week_counts,
            "reward_components": {
                "r_h_daily": r_h_daily,
                "r_e_daily": r_e_daily,
                "r_e_scaled_daily": r_e_scaled_daily,
                "penalty": penalty,
            },
        }
        return self._observe(), reward, self._done, info

    # -- helpers -----------------------------------------------------------

    def _coerce_action(self, action) -> Action:
        if self.env_cfg.action_space_kind == "discrete":
            if isinstance(action, (int, np.integer)):
                return encode_discrete(int(action))
            if isinstance(action, Action):
                return action.validate_discrete()
            raise ActionDomainError(f"discrete mode expects an index or grid Action, got {type(action)}")
        if not isinstance(action, Action):
            raise ActionDomainError(f"continuous mode expects an Action, got {type(action)}")
        return action.validate_physical()

    def _cumulative_diagnoses(self) -> int:
        return 0 if self.sim is None else self.sim.cum_diagnoses

    def _observe(self) -> np.ndarray:
        if self._last_counts is None:
            sim = self.sim
            n_seeded = len(sim.seeded_ids)
            values = [self.pop_size - n_seeded, n_seeded, 0, 0, 0, 0, 0, 0]
        else:
            c = self._last_counts
            values = [getattr(c, f) for f in OBSERVATION_FIELDS]
        obs = np.asarray(values[: self.observation_dim], dtype=np.float64)
        if self.env_cfg.observation_normalization:
            obs = obs / self.pop_size
        return obs


def write_trace(path: str, records: list[dict]) -> None:
    """JSONL trace export: one record per environment step."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def trace_record(obs: np.ndarray, reward: float, info: dict) -> dict:
    """Flatten one step's outputs into a JSON-serializable trace record."""
    return {
        "day": info["day"],
        "observation": [float(x) for x in obs],
        "raw_action": list(info["raw_action"].as_array()),
        "applied_action": list(info["applied_action"].as_array()),
        "activated": bool(info["activated"]),
        "reward": float(reward),
        "reward_components": {
            "r_h_daily": [float(x) for x in info["reward_components"]["r_h_daily"]],
            "r_e_daily": [float(x) for x in info["reward_components"]["r_e_daily"]],
            "r_e_scaled_daily": [float(x) for x in info["reward_components"]["r_e_scaled_daily"]],
            "penalty": info["reward_components"]["penalty"],
        },
        "week_counts": [asdict(c) for c in info["week_counts"]],
    }
