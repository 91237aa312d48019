"""Proximal policy optimization with generalized advantage estimation.

The continuous actor is an independent per-dimension Gaussian with a
state-independent log standard deviation, squashed by tanh and mapped
affinely into each action component's box ([0.5, 1] for the lockdown
multiplier, [0, 1] for the testing and tracing probabilities). Probability
ratios are evaluated at the stored pre-squash samples, where the squash
Jacobian cancels between new and old policies, so the update needs no
explicit correction term. The discrete actor is a plain categorical over
the 64 grid actions.
"""

from __future__ import annotations

import numpy as np

from ..config import PpoConfig
from ..errors import ShapeError, TrainingError
from ..interventions import (
    Action,
    CONTINUOUS_HIGH,
    CONTINUOUS_LOW,
    N_DISCRETE_ACTIONS,
    encode_discrete,
)
from .networks import MLP, Adam, clip_global_norm

LOG_2PI = float(np.log(2.0 * np.pi))


def clipped_surrogate(rho: np.ndarray, advantage: np.ndarray, clip_range: float) -> np.ndarray:
    """Per-sample clipped surrogate objective min(rho*A, clip(rho)*A)."""
    rho = np.asarray(rho, dtype=np.float64)
    advantage = np.asarray(advantage, dtype=np.float64)
    clipped = np.clip(rho, 1.0 - clip_range, 1.0 + clip_range)
    return np.minimum(rho * advantage, clipped * advantage)


def compute_gae(
    rewards: np.ndarray,
    values: np.ndarray,
    dones: np.ndarray,
    gamma: float,
    gae_lambda: float,
    last_value: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Generalized advantage estimates and returns for one rollout.

    dones[t] marks that the episode ended after transition t, cutting the
    bootstrap. last_value is the value estimate of the state following the
    final transition (ignored when it terminated).

    Returns:
        (advantages, returns) with returns = advantages + values.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=np.float64)
    if not (len(rewards) == len(values) == len(dones)):
        raise ShapeError(
            f"length mismatch: rewards {len(rewards)}, values {len(values)}, dones {len(dones)}"
        )
    n = len(rewards)
    advantages = np.zeros(n)
    gae = 0.0
    next_value = float(last_value)
    for t in range(n - 1, -1, -1):
        not_done = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_value * not_done - values[t]
        gae = delta + gamma * gae_lambda * not_done * gae
        advantages[t] = gae
        next_value = values[t]
    return advantages, advantages + values


class ContinuousActor:
    """Squashed-Gaussian policy over the continuous intervention box."""

    def __init__(self, obs_dim: int, hidden: tuple[int, ...], rng: np.random.Generator,
                 init_log_std: float):
        self.low = CONTINUOUS_LOW.copy()
        self.high = CONTINUOUS_HIGH.copy()
        self.center = (self.low + self.high) / 2.0
        self.half = (self.high - self.low) / 2.0
        self.act_dim = len(self.low)
        self.mlp = MLP((obs_dim, *hidden, self.act_dim), rng, out_scale=0.01)
        self.log_std = np.full(self.act_dim, float(init_log_std))

    def squash(self, u: np.ndarray) -> np.ndarray:
        return self.center + self.half * np.tanh(u)

    def sample(self, obs: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, float]:
        """Draws (action, pre-squash sample, log-prob in pre-squash space)."""
        mean = self.mlp(obs)[0]
        std = np.exp(self.log_std)
        u = mean + std * rng.standard_normal(self.act_dim)
        logp = float(self._gauss_logp(u[None, :], mean[None, :])[0])
        return self.squash(u), u, logp

    def deterministic(self, obs: np.ndarray) -> np.ndarray:
        return self.squash(self.mlp(obs)[0])

    def _gauss_logp(self, u: np.ndarray, mean: np.ndarray) -> np.ndarray:
        std = np.exp(self.log_std)
        z = (u - mean) / std
        return (-0.5 * z ** 2 - self.log_std - 0.5 * LOG_2PI).sum(axis=1)

    def entropy(self) -> float:
        """Entropy of the pre-squash Gaussian (state-independent)."""
        return float((self.log_std + 0.5 * (LOG_2PI + 1.0)).sum())

    def parameters(self) -> list[np.ndarray]:
        return self.mlp.parameters() + [self.log_std]


class DiscreteActor:
    """Categorical policy over the 64 discrete grid actions."""

    def __init__(self, obs_dim: int, hidden: tuple[int, ...], rng: np.random.Generator,
                 n_actions: int = N_DISCRETE_ACTIONS):
        self.n_actions = n_actions
        self.mlp = MLP((obs_dim, *hidden, n_actions), rng, out_scale=0.01)

    @staticmethod
    def _log_softmax(logits: np.ndarray) -> np.ndarray:
        shifted = logits - logits.max(axis=1, keepdims=True)
        return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))

    def sample(self, obs: np.ndarray, rng: np.random.Generator) -> tuple[int, float]:
        logp = self._log_softmax(self.mlp(obs))[0]
        probs = np.exp(logp)
        idx = int(np.searchsorted(np.cumsum(probs), rng.random()))
        idx = min(idx, self.n_actions - 1)
        return idx, float(logp[idx])

    def deterministic(self, obs: np.ndarray) -> int:
        return int(np.argmax(self.mlp(obs)[0]))

    def parameters(self) -> list[np.ndarray]:
        return self.mlp.parameters()


class Rollout:
    """Fixed-size on-policy transition store for one PPO update."""

    def __init__(self, n_steps: int, obs_dim: int, continuous: bool, act_dim: int = 3):
        self.n_steps = n_steps
        self.continuous = continuous
        self.obs = np.zeros((n_steps, obs_dim))
        self.actions = np.zeros((n_steps, act_dim)) if continuous else np.zeros(n_steps, dtype=np.int64)
        self.log_probs = np.zeros(n_steps)
        self.rewards = np.zeros(n_steps)
        self.values = np.zeros(n_steps)
        self.dones = np.zeros(n_steps)
        self.pos = 0

    def add(self, obs, action, log_prob, reward, value, done) -> None:
        i = self.pos
        self.obs[i] = obs
        self.actions[i] = action
        self.log_probs[i] = log_prob
        self.rewards[i] = reward
        self.values[i] = value
        self.dones[i] = float(done)
        self.pos += 1

    @property
    def full(self) -> bool:
        return self.pos >= self.n_steps

    def reset(self) -> None:
        self.pos = 0


class PPOAgent:
    """Actor-critic PPO over either action-space kind."""

    def __init__(self, obs_dim: int, space_kind: str, cfg: PpoConfig, seed: int,
                 n_actions: int = N_DISCRETE_ACTIONS):
        cfg.validate()
        self.cfg = cfg
        self.space_kind = space_kind
        self.obs_dim = obs_dim
        self.n_actions = n_actions
        init_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
        self.rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))
        if space_kind == "continuous":
            self.actor: ContinuousActor | DiscreteActor = ContinuousActor(
                obs_dim, cfg.hidden_sizes, init_rng, cfg.init_log_std
            )
        elif space_kind == "discrete":
            self.actor = DiscreteActor(obs_dim, cfg.hidden_sizes, init_rng, n_actions)
        else:
            raise ValueError(f"unknown space kind {space_kind!r}")
        self.critic = MLP((obs_dim, *cfg.hidden_sizes, 1), init_rng)
        self.params = self.actor.parameters() + self.critic.parameters()
        self.optimizer = Adam(self.params, lr=cfg.learning_rate)
        self.rollout = Rollout(cfg.n_steps, obs_dim, continuous=(space_kind == "continuous"))

    # -- acting -----------------------------------------------------------

    def act(self, obs: np.ndarray) -> tuple[object, dict]:
        """Sample an action; returns (env action, rollout bookkeeping)."""
        value = float(self.critic(obs)[0, 0])
        if self.space_kind == "continuous":
            action, u, logp = self.actor.sample(obs, self.rng)
            env_action = Action(*[float(a) for a in action])
            return env_action, {"stored": u, "log_prob": logp, "value": value}
        idx, logp = self.actor.sample(obs, self.rng)
        return idx, {"stored": idx, "log_prob": logp, "value": value}

    def deterministic_action(self, obs: np.ndarray) -> object:
        if self.space_kind == "continuous":
            return Action(*[float(a) for a in self.actor.deterministic(obs)])
        return self.actor.deterministic(obs)

    def policy(self) -> "PPOPolicy":
        return PPOPolicy(self)

    # -- learning ----------------------------------------------------------

    def update(self, last_value: float = 0.0) -> dict:
        """One PPO update over the filled rollout buffer.

        Computes GAE, normalizes advantages over the whole batch, then runs
        n_epochs of shuffled minibatch gradient steps on the clipped
        surrogate plus value and entropy terms.
        """
        roll = self.rollout
        if not roll.full:
            raise TrainingError(f"rollout holds {roll.pos}/{roll.n_steps} transitions")
        cfg = self.cfg
        advantages, returns = compute_gae(
            roll.rewards, roll.values, roll.dones, cfg.gamma, cfg.gae_lambda, last_value
        )
        advantages = (advantages - advantages.mean()) / (advantages.std() + 1e-8)

        n = roll.n_steps
        diagnostics = {"policy_loss": 0.0, "value_loss": 0.0, "entropy": 0.0, "n_updates": 0}
        for _ in range(cfg.n_epochs):
            perm = self.rng.permutation(n)
            for start in range(0, n, cfg.batch_size):
                mb = perm[start:start + cfg.batch_size]
                loss, grads, info = self.loss_and_grads(
                    roll.obs[mb],
                    roll.actions[mb],
                    roll.log_probs[mb],
                    advantages[mb],
                    returns[mb],
                )
                if not np.isfinite(loss):
                    raise TrainingError(f"non-finite PPO loss: {info}")
                clip_global_norm(grads, cfg.max_grad_norm)
                self.optimizer.step(grads)
                for k in ("policy_loss", "value_loss", "entropy"):
                    diagnostics[k] += info[k]
                diagnostics["n_updates"] += 1
        for k in ("policy_loss", "value_loss", "entropy"):
            diagnostics[k] /= max(1, diagnostics["n_updates"])
        roll.reset()
        return diagnostics

    def loss_and_grads(
        self,
        obs: np.ndarray,
        actions: np.ndarray,
        logp_old: np.ndarray,
        advantages: np.ndarray,
        returns: np.ndarray,
    ) -> tuple[float, list[np.ndarray], dict]:
        """Total loss and analytic gradients for one minibatch.

        The gradient list aligns with self.params (actor parameters, then
        critic parameters). Exposed separately from update() so the
        finite-difference gradient check can exercise exactly this path.
        """
        cfg = self.cfg
        b = len(obs)

        if self.space_kind == "continuous":
            actor: ContinuousActor = self.actor
            mean, cache = actor.mlp.forward(obs)
            std = np.exp(actor.log_std)
            z = (actions - mean) / std
            logp_new = (-0.5 * z ** 2 - actor.log_std - 0.5 * LOG_2PI).sum(axis=1)
        else:
            actor: DiscreteActor = self.actor
            logits, cache = actor.mlp.forward(obs)
            log_probs_all = DiscreteActor._log_softmax(logits)
            idx = actions.astype(np.int64)
            logp_new = log_probs_all[np.arange(b), idx]

        rho = np.exp(logp_new - logp_old)
        surr1 = rho * advantages
        surr2 = np.clip(rho, 1.0 - cfg.clip_range, 1.0 + cfg.clip_range) * advantages
        policy_loss = -np.minimum(surr1, surr2).mean()
        # Gradient flows through the unclipped branch wherever it attains the min.
        active = (surr1 <= surr2).astype(np.float64)
        dlogp = -(advantages * rho * active) / b

        if self.space_kind == "continuous":
            entropy = actor.entropy()
            dmean = dlogp[:, None] * (z / std)
            actor_grads = actor.mlp.backward(cache, dmean)
            dlog_std = (dlogp[:, None] * (z ** 2 - 1.0)).sum(axis=0)
            dlog_std -= cfg.entropy_coef  # d(-coef * H)/dlog_std = -coef
            actor_grads = actor_grads + [dlog_std]
        else:
            probs = np.exp(log_probs_all)
            entropies = -(probs * log_probs_all).sum(axis=1)
            entropy = float(entropies.mean())
            one_hot = np.zeros_like(probs)
            one_hot[np.arange(b), idx] = 1.0
            dlogits = dlogp[:, None] * (one_hot - probs)
            # d(-coef * mean(H))/dlogits
            dlogits += (cfg.entropy_coef / b) * probs * (log_probs_all + entropies[:, None])
            actor_grads = actor.mlp.backward(cache, dlogits)

        values, vcache = self.critic.forward(obs)
        values = values[:, 0]
        value_loss = float(((values - returns) ** 2).mean())
        dvalues = (cfg.value_coef * 2.0 * (values - returns) / b)[:, None]
        critic_grads = self.critic.backward(vcache, dvalues)

        total = float(policy_loss + cfg.value_coef * value_loss - cfg.entropy_coef * entropy)
        info = {"policy_loss": float(policy_loss), "value_loss": value_loss, "entropy": float(entropy)}
        return total, actor_grads + critic_grads, info

    # -- parameter access ---------------------------------------------------

    def get_flat_params(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params])

    def set_flat_params(self, flat: np.ndarray) -> None:
        offset = 0
        for p in self.params:
            p[...] = flat[offset:offset + p.size].reshape(p.shape)
            offset += p.size
        if offset != len(flat):
            raise ShapeError(f"flat vector length {len(flat)} != parameter count {offset}")


class PPOPolicy:
    """Deterministic evaluation wrapper around a trained PPO agent."""

    def __init__(self, agent: PPOAgent, name: str = "ppo"):
        self.agent = agent
        self.name = name

    def select_action(self, observation: np.ndarray, day: int):
        action = self.agent.deterministic_action(observation)
        if isinstance(action, (int, np.integer)):
            return encode_discrete(int(action))
        return action
