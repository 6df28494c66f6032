"""Training loop with conditional advisor dispatch, baseline policies, evaluation and checkpoints."""

from __future__ import annotations

import io
import json
import math
import shutil
import zipfile
from functools import lru_cache
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import config as config_mod
from .advisor import (AdvisorUnavailable, PromptContext, PromptFlags, TerminateEpisode, TriggerConfig,
                      advise, context_from_env, fit_speed, make_advisor, should_invoke)
from .config import RunConfig, derive_seed
from .env import LAYOUT, EpisodeLog, UavEnv
from .errors import ConfigMismatch, VersionMismatch
from .sac import ReplayBuffer, SacAgent, Transition
from .world import Rect, inside_any, sample_scenario

STATE_VERSION = 1
ZIP_EPOCH = (1980, 1, 1, 0, 0, 0)
# config fields that may differ between a checkpoint and the run resuming from it
RESUMABLE_FIELDS = {("run", "episodes"), ("run", "checkpoint_every")}


# -- policies ---------------------------------------------------------------------------
@dataclass(frozen=True)
class PolicyKind:
    tag: str = "hybrid"
    fp: float = 0.5
    trigger: TriggerConfig = TriggerConfig()

    def __post_init__(self):
        if self.tag not in config_mod.POLICIES:
            raise ValueError(f"unknown policy {self.tag!r}")
        if not 0.0 <= self.fp <= 1.0:
            raise ValueError("fp must lie in [0, 1]")

    @property
    def uses_actor(self) -> bool:
        return self.tag != "heuristic"

    @classmethod
    def from_config(cls, cfg: RunConfig) -> "PolicyKind":
        return cls(cfg.run.policy, cfg.run.fp, cfg.advisor.trigger)


def _unit(dx: float, dy: float) -> tuple[float, float]:
    n = math.hypot(dx, dy)
    return (dx / n, dy / n) if n > 0 else (0.0, 0.0)


def _crosses_interior(p, q, r: Rect, eps: float = 1e-9) -> bool:
    """True when segment p-q passes through the open interior of r (edge contact does not count)."""
    t0, t1 = 0.0, 1.0
    dx, dy = q[0] - p[0], q[1] - p[1]
    for den, num in ((-dx, p[0] - r.x), (dx, r.x2 - p[0]), (-dy, p[1] - r.y), (dy, r.y2 - p[1])):
        if den == 0.0:
            if num < 0:
                return False
        else:
            t = num / den
            if den < 0:
                t0 = max(t0, t)
            else:
                t1 = min(t1, t)
    if t1 - t0 <= eps:
        return False
    tm = 0.5 * (t0 + t1)
    mx, my = p[0] + tm * dx, p[1] + tm * dy
    return r.x + eps < mx < r.x2 - eps and r.y + eps < my < r.y2 - eps


def _limit_speed(v, cap: float) -> tuple[float, float]:
    return fit_speed(v[0], v[1], cap)


def _respect_rz(ctx: PromptContext, v) -> tuple[float, float]:
    p = ctx.position
    nxt = (p[0] + v[0] * ctx.t_fly, p[1] + v[1] * ctx.t_fly)
    if inside_any(p, ctx.rz) or inside_any(nxt, ctx.rz):
        # stay a hair under the limit so rounding never registers a violation
        return _limit_speed(v, ctx.v_limit * (1.0 - 1e-9))
    return v


def heuristic_target(ctx: PromptContext, reserve_margin: float = 1.2) -> tuple[float, float]:
    p = ctx.position
    pending = [(x, y) for x, y, d in ctx.ges if d > 0]
    if not pending or ctx.energy_remaining <= reserve_margin * ctx.energy_min:
        return ctx.landing.center
    return min(pending, key=lambda g: (math.hypot(g[0] - p[0], g[1] - p[1]), g))


@lru_cache(maxsize=256)
def _corner_graph(walls: tuple, X: float, Y: float, clearance: float):
    """Waypoints just outside each inflated zone and all-pairs shortest paths between them."""
    nodes = []
    for w in walls:
        big = w.inflate(clearance)
        for c in ((big.x, big.y), (big.x2, big.y), (big.x, big.y2), (big.x2, big.y2)):
            if 0.0 <= c[0] <= X and 0.0 <= c[1] <= Y and not any(_strictly_inside(c, r) for r in walls):
                nodes.append(c)
    n = len(nodes)
    D = np.full((n, n), np.inf)
    np.fill_diagonal(D, 0.0)
    for i in range(n):
        for j in range(i + 1, n):
            a, b = nodes[i], nodes[j]
            if not any(_crosses_interior(a, b, w) for w in walls):
                D[i, j] = D[j, i] = math.hypot(a[0] - b[0], a[1] - b[1])
    for k in range(n):
        D = np.minimum(D, D[:, k:k + 1] + D[k:k + 1, :])
    return nodes, D


def _strictly_inside(p, r: Rect) -> bool:
    return r.x < p[0] < r.x2 and r.y < p[1] < r.y2


def plan_waypoint(p, goal, walls: tuple, zones: tuple, area: tuple, clearance: float = 1.0):
    """Next point to fly toward on the shortest detour around the inflated zones ``walls``.

    A goal lying inside a wall's margin is approached through that margin, so for that wall
    only the bare zone blocks the way. Returns None when no detour exists.
    """
    eff = [z if _strictly_inside(goal, w) else w for w, z in zip(walls, zones)]
    if not any(_crosses_interior(p, goal, w) for w in eff):
        return goal
    nodes, D = _corner_graph(walls, float(area[0]), float(area[1]), clearance)
    if not nodes:
        return None
    n = len(nodes)
    dp = np.full(n, np.inf)
    dg = np.full(n, np.inf)
    for i, c in enumerate(nodes):
        d = math.hypot(c[0] - p[0], c[1] - p[1])
        if d > 1e-6 and not any(_crosses_interior(p, c, w) for w in eff):
            dp[i] = d
        if not any(_crosses_interior(c, goal, w) for w in eff):
            dg[i] = math.hypot(goal[0] - c[0], goal[1] - c[1])
    total = dp + (D + dg[None, :]).min(axis=1)
    i = int(np.argmin(total))
    return nodes[i] if np.isfinite(total[i]) else None


def heuristic_act(ctx: PromptContext, d_min: float = 5.0, d_safe: float = 15.0,
                  reserve_margin: float = 1.2, clearance: float = 1.0) -> tuple[float, float]:
    """Greedy collector: nearest GE with data, detours around zones, hover-or-retreat from OUs."""
    p = ctx.position
    vmax = ctx.v_max
    X, Y = ctx.area
    zones = (*ctx.bz, *ctx.nfz)
    walls = tuple(r.inflate(d_min) for r in zones)
    near = [o for o in ctx.ous if o.distance <= d_safe]
    if near:
        o = min(near, key=lambda o: o.distance)
        rx, ry = p[0] - o.position[0], p[1] - o.position[1]
        closing = o.velocity[0] * rx + o.velocity[1] * ry > 0
        v = (0.0, 0.0)
        if not closing:
            ux, uy = _unit(rx, ry)
            nxt = (p[0] + ux * vmax * ctx.t_fly, p[1] + uy * vmax * ctx.t_fly)
            if 0.0 <= nxt[0] <= X and 0.0 <= nxt[1] <= Y and not any(_strictly_inside(nxt, w) for w in walls):
                v = (ux * vmax, uy * vmax)
        return _limit_speed(_respect_rz(ctx, v), vmax)

    target = heuristic_target(ctx, reserve_margin)
    for orig, r in zip(zones, walls):
        if _strictly_inside(p, r) and not _strictly_inside(target, r):
            # inside a margin we have no business in: back straight out, just far enough
            q = (min(max(p[0], orig.x), orig.x2), min(max(p[1], orig.y), orig.y2))
            ux, uy = _unit(p[0] - q[0], p[1] - q[1])
            if ux == 0.0 and uy == 0.0:
                ux, uy = _unit(p[0] - orig.center[0], p[1] - orig.center[1])
            gap = d_min - math.hypot(p[0] - q[0], p[1] - q[1]) + clearance
            sp = min(vmax, gap / ctx.t_fly)
            nxt = (p[0] + ux * sp * ctx.t_fly, p[1] + uy * sp * ctx.t_fly)
            if not any(_strictly_inside(nxt, z) for z in zones):
                return _limit_speed(_respect_rz(ctx, (ux * sp, uy * sp)), vmax)
            break

    goal = plan_waypoint(p, target, walls, zones, (X, Y), clearance)
    if goal is None:
        # margins seal the way; squeeze past the bare zones instead
        goal = plan_waypoint(p, target, zones, zones, (X, Y), clearance)
    if goal is None:
        goal = target
    dist = math.hypot(goal[0] - p[0], goal[1] - p[1])
    ux, uy = _unit(goal[0] - p[0], goal[1] - p[1])
    speed = min(vmax, dist / ctx.t_fly)
    return _limit_speed(_respect_rz(ctx, (ux * speed, uy * speed)), vmax)


class HeuristicAdvisor:
    """The greedy baseline behind the advisor interface, so SAC+heuristic shares the dispatch path."""

    def __init__(self, d_min: float = 5.0, d_safe: float = 15.0, reserve_margin: float = 1.2):
        self.d_min, self.d_safe, self.reserve_margin = d_min, d_safe, reserve_margin
        self.queries = 0

    def query(self, prompt: str, ctx: PromptContext) -> str:
        self.queries += 1
        vx, vy = heuristic_act(ctx, self.d_min, self.d_safe, self.reserve_margin)
        return json.dumps({"vx": vx, "vy": vy, "Confidence": 1.0, "Reasoning": "greedy rule"})


def random_disc_action(rng: np.random.Generator, v_max: float) -> np.ndarray:
    r = v_max * math.sqrt(rng.random())
    th = 2.0 * math.pi * rng.random()
    return np.array([r * math.cos(th), r * math.sin(th)])


class Controller:
    """Picks each slot's action and records where it came from."""

    def __init__(self, cfg: RunConfig, kind: PolicyKind, agent: Optional[SacAgent], advisor,
                 dispatch_rng: np.random.Generator, explore_rng: np.random.Generator):
        self.cfg = cfg
        self.kind = kind
        self.agent = agent
        self.advisor = advisor
        self.dispatch_rng = dispatch_rng
        self.explore_rng = explore_rng
        self.flags: PromptFlags = cfg.advisor.prompt
        self.advisor_queries = 0
        self.advised_steps = 0

    def _advise(self, ctx) -> np.ndarray:
        a = self.cfg.advisor
        adv = advise(self.advisor, ctx, ctx.v_max, a.max_attempts, a.shared_cap)
        self.advisor_queries += adv.attempts
        self.advised_steps += 1
        return np.array(adv.action)

    def act(self, env: UavEnv, obs: np.ndarray, *, deterministic: bool, warmup: bool):
        tag = self.kind.tag
        r = self.cfg.radii
        if tag == "heuristic":
            ctx = context_from_env(env, self.flags)
            return np.array(heuristic_act(ctx, r.d_min.ou, r.d_safe.ou, self.cfg.advisor.return_margin)), "policy"
        delegate = False
        ctx = None
        if tag in ("hybrid", "sac_heuristic"):
            ctx = context_from_env(env, self.flags)
            delegate = should_invoke(ctx, self.kind.trigger)
        elif tag == "sac_llm_fixed_fp":
            delegate = self.dispatch_rng.random() < self.kind.fp
        if delegate and self.advisor is not None:
            if ctx is None:
                ctx = context_from_env(env, self.flags)
            return self._advise(ctx), "advisor"
        if warmup:
            return random_disc_action(self.explore_rng, env.v_max), "policy"
        return self.agent.act(obs, deterministic=deterministic), "policy"


def bind_advisor(cfg: RunConfig, kind: PolicyKind, advisor=None):
    if kind.tag == "sac_heuristic":
        r = cfg.radii
        return HeuristicAdvisor(r.d_min.ou, r.d_safe.ou, cfg.advisor.return_margin)
    if kind.tag in ("hybrid", "sac_llm_fixed_fp"):
        if advisor is not None:
            return advisor
        adv = make_advisor(cfg.advisor)
        if adv is None:
            raise ValueError(f"policy {kind.tag!r} needs an advisor but advisor.kind is 'none'")
        return adv
    return None


def scenario_for(cfg: RunConfig, stream: int, episode: int):
    seed = derive_seed(stream, episode) if cfg.episode.resample_scenario else stream
    return sample_scenario(cfg.scenario_config(seed), t_max=cfg.episode.t_max)


def _bootstrap_done(ev) -> bool:
    # running out of slots is a truncation, not a terminal state of the task
    return ev.collided or ev.landed or ev.energy_exhausted


# -- deterministic files ------------------------------------------------------------------
def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def save_arrays(path: Path, arrays: dict) -> None:
    """An ``.npz`` readable by ``np.load`` whose bytes depend only on the arrays."""
    with zipfile.ZipFile(path, "w") as zf:
        for name in sorted(arrays):
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.ascontiguousarray(arrays[name]), allow_pickle=False)
            info = zipfile.ZipInfo(name + ".npy", date_time=ZIP_EPOCH)
            info.compress_type = zipfile.ZIP_DEFLATED
            info.external_attr = 0o644 << 16
            zf.writestr(info, buf.getvalue())


def save_buffer(buf: ReplayBuffer, path: Path) -> None:
    n = buf.size
    save_arrays(path, {"obs": buf.obs[:n], "act": buf.act[:n], "rew": buf.rew[:n],
                       "next_obs": buf.next_obs[:n], "done": buf.done[:n], "source": buf.source[:n],
                       "meta": np.array([buf.capacity, n, buf.ptr])})


def load_buffer(path: Path, obs_dim: int) -> ReplayBuffer:
    with np.load(path) as z:
        cap, n, ptr = (int(v) for v in z["meta"])
        buf = ReplayBuffer(cap, obs_dim, z["act"].shape[1] if n else 2)
        for k in ("obs", "act", "rew", "next_obs", "done", "source"):
            getattr(buf, k)[:n] = z[k]
    buf.size, buf.ptr = n, ptr
    return buf


def _config_diff(a: dict, b: dict, prefix=()) -> list[tuple]:
    out = []
    for k in sorted(set(a) | set(b)):
        path = prefix + (k,)
        va, vb = a.get(k), b.get(k)
        if isinstance(va, dict) and isinstance(vb, dict):
            out += _config_diff(va, vb, path)
        elif va != vb and path not in RESUMABLE_FIELDS:
            out.append(path)
    return out


# -- training ---------------------------------------------------------------------------
@dataclass
class TrainResult:
    rewards: list = field(default_factory=list)
    final_checkpoint: Optional[Path] = None
    advisor_queries: int = 0
    episodes: int = 0


class Trainer:
    """Runs the episode loop: act, step, store, then train after every episode."""

    def __init__(self, cfg: RunConfig, out_dir=None, advisor=None, write_logs: bool = True):
        self.cfg = cfg
        self.kind = PolicyKind.from_config(cfg)
        self.out = Path(out_dir) if out_dir is not None else None
        self.write_logs = write_logs and self.out is not None
        v_max = cfg.scenario.v_max
        pol = cfg.seeds.policy
        self.agent = SacAgent(LAYOUT.total_dim, cfg.sac, v_max, seed=derive_seed(pol, 0))
        self.buffer = ReplayBuffer(cfg.sac.buffer_capacity, LAYOUT.total_dim)
        self.batch_rng = np.random.default_rng(np.random.SeedSequence([pol, 1]))
        self.explore_rng = np.random.default_rng(np.random.SeedSequence([pol, 2]))
        self.dispatch_rng = np.random.default_rng(np.random.SeedSequence([cfg.seeds.advisor, 1]))
        self.advisor = bind_advisor(cfg, self.kind, advisor)
        self.controller = Controller(cfg, self.kind, self.agent, self.advisor, self.dispatch_rng,
                                     self.explore_rng)
        self.episode = 0
        self.total_steps = 0
        self.rewards: list[float] = []
        self.advisor_terminations = 0
        self.logs: list[EpisodeLog] = []
        self.keep_logs = False

    # rng streams touched while acting; snapshotted so an aborted episode can be rewound
    def _acting_rngs(self):
        return {"agent": self.agent.rng, "explore": self.explore_rng, "dispatch": self.dispatch_rng}

    def run_episode(self) -> EpisodeLog:
        ep = self.episode + 1
        scen = scenario_for(self.cfg, self.cfg.seeds.scenario, ep)
        env = UavEnv(scen, self.cfg)
        obs = env.reset()
        snap = {k: r.bit_generator.state for k, r in self._acting_rngs().items()}
        pending: list[Transition] = []
        steps = self.total_steps
        try:
            while not env.done:
                warm = steps < self.cfg.sac.warmup_steps
                try:
                    action, source = self.controller.act(env, obs, deterministic=False, warmup=warm)
                except AdvisorUnavailable:
                    raise
                except TerminateEpisode:
                    env.terminate_by_advisor()
                    self.advisor_terminations += 1
                    break
                out = env.step(action, source)
                pending.append(Transition(obs, np.asarray(action, dtype=float), out.reward.total,
                                          out.observation, _bootstrap_done(out.events), source))
                obs = out.observation
                steps += 1
        except AdvisorUnavailable:
            for k, r in self._acting_rngs().items():
                r.bit_generator.state = snap[k]
            raise
        for tr in pending:
            self.buffer.push(tr)
        self.total_steps = steps
        self.episode = ep
        if self.total_steps >= self.cfg.sac.warmup_steps and len(self.buffer) >= self.cfg.sac.batch:
            n = self.cfg.sac.grad_steps_per_episode or len(pending)
            for _ in range(n):
                self.agent.update(self.buffer, self.batch_rng)
        log = env.log
        self.rewards.append(log.total_reward)
        if self.write_logs:
            d = self.out / "logs"
            d.mkdir(parents=True, exist_ok=True)
            log.write(d / f"episode_{ep:06d}.jsonl")
        if self.keep_logs:
            self.logs.append(log)
        return log

    def train(self, episodes: Optional[int] = None, progress=None) -> TrainResult:
        target = self.cfg.run.episodes if episodes is None else episodes
        if self.out is not None:
            self.out.mkdir(parents=True, exist_ok=True)
            config_mod.write_effective_config(self.cfg, self.out)
        every = self.cfg.run.checkpoint_every
        try:
            while self.episode < target:
                self.run_episode()
                if progress is not None:
                    progress(self.episode, self.rewards[-1])
                if self.out is not None and self.episode % every == 0 and self.episode < target:
                    self.save_checkpoint()
        except AdvisorUnavailable:
            if self.out is not None:
                self.save_checkpoint()
            raise
        final = self.save_checkpoint(final=True) if self.out is not None else None
        if self.out is not None:
            self.write_rewards()
        return TrainResult(list(self.rewards), final, self.controller.advisor_queries, self.episode)

    def write_rewards(self) -> None:
        lines = ["episode,reward"] + [f"{i},{r!r}" for i, r in enumerate(self.rewards, 1)]
        (self.out / "rewards.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    # -- checkpoints ----------------------------------------------------------------------
    def state(self) -> dict:
        return {
            "format_version": STATE_VERSION,
            "episode": self.episode,
            "total_steps": self.total_steps,
            "buffer_size": len(self.buffer),
            "rewards": self.rewards,
            "advisor_queries": self.controller.advisor_queries,
            "advised_steps": self.controller.advised_steps,
            "advisor_terminations": self.advisor_terminations,
            "agent": self.agent.extra_state(),
            "rng": {"batch": self.batch_rng.bit_generator.state,
                    "explore": self.explore_rng.bit_generator.state,
                    "dispatch": self.dispatch_rng.bit_generator.state},
            "config": self.cfg.to_dict(),
        }

    def save_checkpoint(self, final: bool = False) -> Path:
        root = self.out / "checkpoints"
        d = root / ("final" if final else f"episode_{self.episode:06d}")
        if d.exists():
            shutil.rmtree(d)
        d.mkdir(parents=True)
        meta = {"episode": self.episode}
        for name, doc in self.agent.state_docs(meta).items():
            _write_json(d / f"{name}.json", doc)
        _write_json(d / "trainer_state.json", self.state())
        save_buffer(self.buffer, d / "replay.npz")
        # the replay buffer dominates checkpoint size; only the newest copy is kept
        for old in root.iterdir():
            if old != d and (old / "replay.npz").exists() and old.name != "final":
                (old / "replay.npz").unlink()
        return d

    @classmethod
    def resume(cls, ckpt, cfg: RunConfig, out_dir=None, advisor=None, **kw) -> "Trainer":
        ckpt = Path(ckpt)
        st = json.loads((ckpt / "trainer_state.json").read_text(encoding="utf-8"))
        if st.get("format_version") != STATE_VERSION:
            raise VersionMismatch(f"trainer state version {st.get('format_version')!r} unsupported")
        diff = _config_diff(st["config"], cfg.to_dict())
        if diff:
            raise ConfigMismatch("config differs from checkpoint at: " + ", ".join(".".join(p) for p in diff))
        if not (ckpt / "replay.npz").exists():
            raise VersionMismatch("checkpoint has no replay buffer; resume needs the newest checkpoint")
        tr = cls(cfg, out_dir if out_dir is not None else ckpt.parent.parent, advisor, **kw)
        docs = {k: json.loads((ckpt / f"{k}.json").read_text(encoding="utf-8"))
                for k in ("actor", "critic1", "critic2", "target1", "target2")}
        tr.agent.load_state(docs, st["agent"])
        tr.buffer = load_buffer(ckpt / "replay.npz", LAYOUT.total_dim)
        if tr.buffer.capacity != cfg.sac.buffer_capacity:
            raise ConfigMismatch("replay buffer capacity differs from the config")
        tr.batch_rng.bit_generator.state = st["rng"]["batch"]
        tr.explore_rng.bit_generator.state = st["rng"]["explore"]
        tr.dispatch_rng.bit_generator.state = st["rng"]["dispatch"]
        tr.controller.agent = tr.agent
        tr.episode = st["episode"]
        tr.total_steps = st["total_steps"]
        tr.rewards = list(st["rewards"])
        tr.controller.advisor_queries = st["advisor_queries"]
        tr.controller.advised_steps = st["advised_steps"]
        tr.advisor_terminations = st["advisor_terminations"]
        return tr


def train(cfg: RunConfig, out_dir=None, advisor=None, resume=None, progress=None) -> TrainResult:
    tr = Trainer.resume(resume, cfg, out_dir, advisor) if resume else Trainer(cfg, out_dir, advisor)
    return tr.train(progress=progress)


def load_agent(ckpt, cfg: RunConfig) -> SacAgent:
    """Actor and critics from a checkpoint directory, ready for deterministic evaluation."""
    ckpt = Path(ckpt)
    agent = SacAgent(LAYOUT.total_dim, cfg.sac, cfg.scenario.v_max, seed=0)
    docs = {k: json.loads((ckpt / f"{k}.json").read_text(encoding="utf-8"))
            for k in ("actor", "critic1", "critic2", "target1", "target2")}
    st = json.loads((ckpt / "trainer_state.json").read_text(encoding="utf-8"))
    agent.load_state(docs, st["agent"])
    return agent


def checkpoint_config(ckpt) -> RunConfig:
    st = json.loads((Path(ckpt) / "trainer_state.json").read_text(encoding="utf-8"))
    return config_mod.from_dict(st["config"])


# -- evaluation -------------------------------------------------------------------------
def evaluate(cfg: RunConfig, agent: Optional[SacAgent], n_episodes: int, seed: Optional[int] = None,
             kind: Optional[PolicyKind] = None, advisor=None) -> list[EpisodeLog]:
    """Roll out fresh scenarios from the evaluation stream with the deterministic actor."""
    kind = kind or PolicyKind.from_config(cfg)
    if kind.uses_actor and agent is None:
        raise ValueError(f"policy {kind.tag!r} needs a trained actor")
    stream = cfg.seeds.eval if seed is None else seed
    adv = bind_advisor(cfg, kind, advisor)
    dispatch = np.random.default_rng(np.random.SeedSequence([stream, 1]))
    ctl = Controller(cfg, kind, agent, adv, dispatch, np.random.default_rng(0))
    logs = []
    for i in range(n_episodes):
        env = UavEnv(scenario_for(cfg, stream, i + 1), cfg)
        obs = env.reset()
        while not env.done:
            try:
                action, source = ctl.act(env, obs, deterministic=True, warmup=False)
            except AdvisorUnavailable:
                raise
            except TerminateEpisode:
                env.terminate_by_advisor()
                break
            obs = env.step(action, source).observation
        logs.append(env.log)
    return logs


def with_policy(cfg: RunConfig, tag: str, **trigger) -> RunConfig:
    run = replace(cfg.run, policy=tag)
    adv = cfg.advisor
    if trigger:
        adv = replace(adv, trigger=replace(adv.trigger, **trigger))
    return replace(cfg, run=run, advisor=adv)
