"""Prioritized experience replay with proportional sampling.

Transitions are sampled with replacement with probability p_i^alpha /
sum_j p_j^alpha, so long-run empirical frequencies match that law exactly.
Importance weights (N * P(i))^(-beta) are normalized by the largest weight
within each sampled batch, which pins the weight of the lowest-probability
sampled item at exactly 1. New transitions enter with the largest priority
currently in the buffer so they are seen at least once.
"""

from __future__ import annotations

import numpy as np

from ..errors import ProtocolError

PRIORITY_FLOOR = 1e-3


class PrioritizedBuffer:
    """Ring buffer of transitions with proportional priorities."""

    def __init__(
        self,
        capacity: int,
        obs_dim: int,
        alpha: float,
        beta: float,
        beta_increment: float = 0.0,
    ):
        self.capacity = int(capacity)
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.beta_increment = float(beta_increment)
        self.obs = np.zeros((capacity, obs_dim))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.next_obs = np.zeros((capacity, obs_dim))
        self.dones = np.zeros(capacity)
        self.priorities = np.zeros(capacity)
        self.pos = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def add(self, obs, action, reward, next_obs, done) -> None:
        i = self.pos
        self.obs[i] = obs
        self.actions[i] = int(action)
        self.rewards[i] = reward
        self.next_obs[i] = next_obs
        self.dones[i] = float(done)
        self.priorities[i] = self.priorities[: self.size].max() if self.size else 1.0
        self.pos = (self.pos + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sampling_probabilities(self) -> np.ndarray:
        """Current sampling law p^alpha / sum(p^alpha) over stored items."""
        if self.size == 0:
            raise ProtocolError("cannot sample from an empty buffer")
        scaled = self.priorities[: self.size] ** self.alpha
        return scaled / scaled.sum()

    def sample(self, batch_size: int, rng: np.random.Generator) -> dict:
        """Priority-proportional sample with importance weights.

        beta is incremented (capped at 1) once per call.
        """
        probs = self.sampling_probabilities()
        idx = rng.choice(self.size, size=batch_size, replace=True, p=probs)
        weights = (self.size * probs[idx]) ** (-self.beta)
        weights = weights / weights.max()
        self.beta = min(1.0, self.beta + self.beta_increment)
        return {
            "indices": idx,
            "obs": self.obs[idx],
            "actions": self.actions[idx],
            "rewards": self.rewards[idx],
            "next_obs": self.next_obs[idx],
            "dones": self.dones[idx],
            "weights": weights,
        }

    def update_priorities(self, indices: np.ndarray, td_errors: np.ndarray) -> None:
        """Set priorities to |TD error| plus a small floor."""
        self.priorities[indices] = np.abs(td_errors) + PRIORITY_FLOOR
