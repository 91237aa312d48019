"""DQN over the discrete action grid, trained from prioritized replay.

The online network maps the observation to 64 action values. Updates
minimize the importance-weighted squared TD error against a target network
that is hard-copied (tau = 1) every target_update_interval gradient steps,
or soft-updated for tau < 1. Sampled transitions feed their absolute TD
errors back into the replay priorities.
"""

from __future__ import annotations

import numpy as np

from ..config import DqnConfig
from ..errors import ProtocolError, TrainingError
from ..interventions import N_DISCRETE_ACTIONS, encode_discrete
from .networks import MLP, Adam
from .replay import PrioritizedBuffer


class DQNAgent:
    """Q-learning agent with prioritized replay and a target network."""

    def __init__(self, obs_dim: int, cfg: DqnConfig, seed: int, n_actions: int = N_DISCRETE_ACTIONS):
        cfg.validate()
        self.cfg = cfg
        self.obs_dim = obs_dim
        self.n_actions = n_actions
        init_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
        self.rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))
        self.q_net = MLP((obs_dim, *cfg.hidden_sizes, n_actions), init_rng)
        self.target_net = MLP((obs_dim, *cfg.hidden_sizes, n_actions), init_rng)
        self.target_net.set_flat(self.q_net.get_flat())
        self.optimizer = Adam(self.q_net.parameters(), lr=cfg.learning_rate)
        self.buffer = PrioritizedBuffer(
            cfg.buffer_size, obs_dim, cfg.per_alpha, cfg.per_beta, cfg.per_beta_increment
        )
        self.gradient_steps = 0

    # -- acting -----------------------------------------------------------

    def epsilon(self, progress: float) -> float:
        """Linear schedule over the first epsilon_fraction of training."""
        cfg = self.cfg
        anneal = min(1.0, max(0.0, progress) / max(cfg.epsilon_fraction, 1e-9))
        return cfg.epsilon_start + (cfg.epsilon_final - cfg.epsilon_start) * anneal

    def act(self, obs: np.ndarray, progress: float) -> int:
        if self.rng.random() < self.epsilon(progress):
            return int(self.rng.integers(self.n_actions))
        return self.greedy_action(obs)

    def greedy_action(self, obs: np.ndarray) -> int:
        return int(np.argmax(self.q_net(obs)[0]))

    def policy(self) -> "DQNPolicy":
        return DQNPolicy(self)

    # -- learning ----------------------------------------------------------

    def update(self) -> dict:
        """One prioritized minibatch gradient step; returns TD diagnostics."""
        cfg = self.cfg
        if len(self.buffer) < cfg.learning_starts:
            raise ProtocolError(
                f"buffer holds {len(self.buffer)} < learning_starts={cfg.learning_starts} transitions"
            )
        batch = self.buffer.sample(cfg.batch_size, self.rng)

        q_all, cache = self.q_net.forward(batch["obs"])
        taken = batch["actions"]
        b = len(taken)
        q_taken = q_all[np.arange(b), taken]

        next_q = self.target_net(batch["next_obs"]).max(axis=1)
        targets = batch["rewards"] + cfg.gamma * (1.0 - batch["dones"]) * next_q
        td_errors = q_taken - targets

        loss = float((batch["weights"] * td_errors ** 2).mean())
        if not np.isfinite(loss):
            raise TrainingError(f"non-finite DQN loss; td_errors={td_errors}")

        dq = np.zeros_like(q_all)
        dq[np.arange(b), taken] = 2.0 * batch["weights"] * td_errors / b
        grads = self.q_net.backward(cache, dq)
        self.optimizer.step(grads)
        self.buffer.update_priorities(batch["indices"], td_errors)

        self.gradient_steps += 1
        if self.gradient_steps % cfg.target_update_interval == 0:
            self._update_target()

        return {"loss": loss, "td_errors": td_errors, "mean_q": float(q_taken.mean())}

    def _update_target(self) -> None:
        tau = self.cfg.tau
        if tau >= 1.0:
            self.target_net.set_flat(self.q_net.get_flat())
        else:
            mixed = tau * self.q_net.get_flat() + (1.0 - tau) * self.target_net.get_flat()
            self.target_net.set_flat(mixed)


class DQNPolicy:
    """Greedy evaluation wrapper around a trained DQN agent."""

    def __init__(self, agent: DQNAgent, name: str = "dqn"):
        self.agent = agent
        self.name = name

    def select_action(self, observation: np.ndarray, day: int):
        return encode_discrete(self.agent.greedy_action(observation))
