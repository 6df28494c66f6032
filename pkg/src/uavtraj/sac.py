"""Soft actor-critic with twin critics, target networks and a tanh-Gaussian actor."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import BufferTooSmall, ShapeMismatch
from .nn import Adam, Mlp, MlpSpec, gaussian_head, load_weights, sample_squashed_gaussian, \
    save_weights, squashed_backward

SOURCES = ("policy", "advisor")


@dataclass(frozen=True)
class SacConfig:
    actor_lr: float = 1e-4
    critic_lr: float = 3e-4
    gamma: float = 0.99
    batch: int = 256
    temperature: float = 0.2
    polyak: float = 0.005
    warmup_steps: int = 1000
    buffer_capacity: int = 100_000
    hidden: tuple[int, ...] = (64, 64)
    log_std_min: float = -20.0
    log_std_max: float = 2.0
    auto_temperature: bool = False
    target_entropy: float = -2.0
    grad_steps_per_episode: int = 0  # 0: as many as environment steps in the episode


@dataclass
class Transition:
    obs: np.ndarray
    action: np.ndarray  # environment units (m/s)
    reward: float
    next_obs: np.ndarray
    done: bool
    source: str = "policy"


class ReplayBuffer:
    """Fixed-capacity FIFO ring of transitions, sampled uniformly with replacement."""

    def __init__(self, capacity: int, obs_dim: int, act_dim: int = 2):
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.act = np.zeros((capacity, act_dim))
        self.rew = np.zeros(capacity)
        self.next_obs = np.zeros((capacity, obs_dim))
        self.done = np.zeros(capacity)
        self.source = np.zeros(capacity, dtype=np.int8)
        self.size = 0
        self.ptr = 0

    def __len__(self):
        return self.size

    def push(self, tr: Transition) -> None:
        if tr.source not in SOURCES:
            raise ValueError(f"unknown transition source {tr.source!r}")
        i = self.ptr
        self.obs[i] = tr.obs
        self.act[i] = tr.action
        self.rew[i] = tr.reward
        self.next_obs[i] = tr.next_obs
        self.done[i] = float(tr.done)
        self.source[i] = SOURCES.index(tr.source)
        self.ptr = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch: int, rng: np.random.Generator) -> dict:
        if self.size < batch:
            raise BufferTooSmall(f"buffer holds {self.size} transitions, batch needs {batch}")
        idx = rng.integers(0, self.size, size=batch)
        return {"idx": idx, "obs": self.obs[idx], "act": self.act[idx], "rew": self.rew[idx],
                "next_obs": self.next_obs[idx], "done": self.done[idx], "source": self.source[idx]}

    def save(self, path) -> None:
        n = self.size
        np.savez_compressed(path, obs=self.obs[:self.capacity], act=self.act, rew=self.rew,
                            next_obs=self.next_obs, done=self.done, source=self.source,
                            meta=np.array([self.capacity, n, self.ptr]))

    @classmethod
    def load(cls, path) -> "ReplayBuffer":
        with np.load(path) as z:
            cap, n, ptr = (int(v) for v in z["meta"])
            buf = cls(cap, z["obs"].shape[1], z["act"].shape[1])
            for k in ("obs", "act", "rew", "next_obs", "done", "source"):
                getattr(buf, k)[...] = z[k]
            buf.size, buf.ptr = n, ptr
        return buf


class SacAgent:
    def __init__(self, obs_dim: int, cfg: SacConfig, action_scale: float, seed: int = 0,
                 act_dim: int = 2):
        self.cfg = cfg
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.action_scale = float(action_scale)
        init_rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
        self.rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
        hid = tuple(cfg.hidden)
        self.actor = Mlp.init(MlpSpec(obs_dim, act_dim, hid, head="gaussian"), init_rng)
        qspec = MlpSpec(obs_dim + act_dim, 1, hid)
        self.q1 = Mlp.init(qspec, init_rng)
        self.q2 = Mlp.init(qspec, init_rng)
        self.q1_targ = self.q1.copy()
        self.q2_targ = self.q2.copy()
        self.actor_opt = Adam(self.actor.params)
        self.q1_opt = Adam(self.q1.params)
        self.q2_opt = Adam(self.q2.params)
        self.log_alpha = np.array([np.log(cfg.temperature)]) if cfg.temperature > 0 else np.array([-np.inf])
        self.alpha_opt = Adam([self.log_alpha])
        self.updates = 0
        self.counts: Counter = Counter()

    @property
    def temperature(self) -> float:
        if self.cfg.auto_temperature:
            return float(np.exp(self.log_alpha[0]))
        return self.cfg.temperature

    # -- acting -----------------------------------------------------------------------
    def _head(self, obs):
        out, cache = self.actor.forward(obs)
        mean, log_std, mask = gaussian_head(out, self.cfg.log_std_min, self.cfg.log_std_max)
        return mean, log_std, mask, cache

    def act(self, obs, deterministic: bool = False, rng: Optional[np.random.Generator] = None) -> np.ndarray:
        mean, log_std, _, _ = self._head(np.asarray(obs, dtype=float))
        if deterministic:
            a = np.tanh(mean)
        else:
            rng = self.rng if rng is None else rng
            a, _, _ = sample_squashed_gaussian(mean, log_std, rng.standard_normal(self.act_dim))
        return a * self.action_scale

    def _q_input(self, obs, a_unit):
        return np.concatenate([obs, a_unit], axis=1)

    # -- updates ----------------------------------------------------------------------
    def critic_target(self, batch: dict, noise: Optional[np.ndarray] = None) -> np.ndarray:
        o2 = batch["next_obs"]
        if noise is None:
            noise = self.rng.standard_normal((len(o2), self.act_dim))
        mean, log_std, _, _ = self._head(o2)
        a2, logp2, _ = sample_squashed_gaussian(mean, log_std, noise)
        x2 = self._q_input(o2, a2)
        q_next = np.minimum(self.q1_targ(x2)[:, 0], self.q2_targ(x2)[:, 0])
        self.counts["target_min"] += 1
        soft = q_next - self.temperature * logp2
        return batch["rew"] + (1.0 - batch["done"]) * self.cfg.gamma * soft

    def critic_update(self, batch: dict) -> tuple[float, float]:
        if len(batch["obs"]) != self.cfg.batch:
            raise ShapeMismatch(f"batch of {len(batch['obs'])}, configured {self.cfg.batch}")
        y = self.critic_target(batch)
        a_unit = np.clip(batch["act"] / self.action_scale, -1.0, 1.0)
        x = self._q_input(batch["obs"], a_unit)
        n = len(y)
        losses = []
        for q, opt in ((self.q1, self.q1_opt), (self.q2, self.q2_opt)):
            pred, cache = q.forward(x)
            err = pred[:, 0] - y
            losses.append(float(np.mean(err * err)))
            grads, _ = q.backward(cache, (2.0 / n) * err[:, None])
            opt.step(q.params, grads, self.cfg.critic_lr)
        return losses[0], losses[1]

    def actor_update(self, batch: dict, noise: Optional[np.ndarray] = None) -> float:
        obs = batch["obs"]
        n = len(obs)
        if noise is None:
            noise = self.rng.standard_normal((n, self.act_dim))
        loss, grads, logp = self.actor_loss_and_grad(obs, noise)
        self.actor_opt.step(self.actor.params, grads, self.cfg.actor_lr)
        if self.cfg.auto_temperature:
            g = -np.mean(logp + self.cfg.target_entropy)
            self.alpha_opt.step([self.log_alpha], [np.array([g])], self.cfg.actor_lr)
        return loss

    def actor_loss_and_grad(self, obs: np.ndarray, noise: np.ndarray):
        """Reparameterised actor objective ``mean(mu * log_pi - min(Q1, Q2))`` and its gradient."""
        n = len(obs)
        mu = self.temperature
        mean, log_std, mask, cache = self._head(obs)
        a, logp, sq = sample_squashed_gaussian(mean, log_std, noise)
        x = self._q_input(obs, a)
        q1v, c1 = self.q1.forward(x)
        q2v, c2 = self.q2.forward(x)
        self.counts["actor_min"] += 1
        pick1 = (q1v[:, 0] <= q2v[:, 0]).astype(float)
        qmin = np.where(pick1 > 0, q1v[:, 0], q2v[:, 0])
        loss = float(np.mean(mu * logp - qmin))
        # critic parameters are not stepped here; only the input gradient is used
        _, gx1 = self.q1.backward(c1, (-pick1 / n)[:, None])
        _, gx2 = self.q2.backward(c2, (-(1.0 - pick1) / n)[:, None])
        grad_a = gx1[:, self.obs_dim:] + gx2[:, self.obs_dim:]
        g_mean, g_ls = squashed_backward(sq, grad_a, np.full(n, mu / n))
        g_ls = g_ls * mask
        grads, _ = self.actor.backward(cache, np.concatenate([g_mean, g_ls], axis=1))
        return loss, grads, logp

    def polyak_update(self) -> None:
        k = self.cfg.polyak
        for net, targ in ((self.q1, self.q1_targ), (self.q2, self.q2_targ)):
            for p, pt in zip(net.params, targ.params):
                pt *= 1.0 - k
                pt += k * p

    def update(self, buffer: ReplayBuffer, rng: np.random.Generator) -> dict:
        batch = buffer.sample(self.cfg.batch, rng)
        l1, l2 = self.critic_update(batch)
        la = self.actor_update(batch)
        self.polyak_update()
        self.updates += 1
        return {"critic1": l1, "critic2": l2, "actor": la}

    # -- persistence ------------------------------------------------------------------
    def state_docs(self, metadata: Optional[dict] = None) -> dict:
        meta = dict(metadata or {})
        return {
            "actor": save_weights(self.actor, self.actor_opt, meta),
            "critic1": save_weights(self.q1, self.q1_opt, meta),
            "critic2": save_weights(self.q2, self.q2_opt, meta),
            "target1": save_weights(self.q1_targ, None, meta),
            "target2": save_weights(self.q2_targ, None, meta),
        }

    def extra_state(self) -> dict:
        return {"updates": self.updates, "log_alpha": float(self.log_alpha[0]),
                "alpha_opt": self.alpha_opt.state_dict(), "rng": self.rng.bit_generator.state}

    def load_state(self, docs: dict, extra: dict) -> None:
        a_spec = self.actor.spec
        q_spec = self.q1.spec
        self.actor, self.actor_opt = load_weights(docs["actor"], a_spec, require_optimizer=True)
        self.q1, self.q1_opt = load_weights(docs["critic1"], q_spec, require_optimizer=True)
        self.q2, self.q2_opt = load_weights(docs["critic2"], q_spec, require_optimizer=True)
        self.q1_targ, _ = load_weights(docs["target1"], q_spec)
        self.q2_targ, _ = load_weights(docs["target2"], q_spec)
        self.updates = int(extra["updates"])
        self.log_alpha = np.array([extra["log_alpha"]])
        self.alpha_opt = Adam.from_state_dict(extra["alpha_opt"], [self.log_alpha])
        self.rng.bit_generator.state = extra["rng"]
