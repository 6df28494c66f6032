import json
import math
from dataclasses import replace

import numpy as np
import pytest

from conftest import bare_scenario
from uavtraj import config as config_mod
from uavtraj import orchestrator as orch
from uavtraj.advisor import (AdvisorUnavailable, PromptContext, TransportError, VisibleOu,
                             context_from_env, should_invoke)
from uavtraj.env import EpisodeLog, UavEnv
from uavtraj.errors import ConfigMismatch, VersionMismatch
from uavtraj.world import Rect


def ctx(pos=(100.0, 100.0), ges=((200.0, 100.0, 1.0),), ous=(), bz=(), nfz=(), rz=(), energy=1e6, e_min=0.0):
    return PromptContext((500.0, 500.0), pos, (0.0, 0.0), tuple(ges), tuple(nfz), tuple(bz), tuple(rz),
                         Rect(475.0, 0.0, 25.0, 25.0), tuple(ous), energy_remaining=energy, energy_min=e_min)


class Refuses:
    """An advisor that must never be consulted."""

    def query(self, prompt, c):
        raise AssertionError("advisor consulted")


class Down:
    queries = 0

    def query(self, prompt, c):
        raise TransportError("connection refused")


# -- heuristic ------------------------------------------------------------------------------
def test_heuristic_clear_path_full_speed():
    v = orch.heuristic_act(ctx())
    assert v == pytest.approx((10.0, 0.0))


def test_heuristic_hovers_for_closing_ou_and_retreats_otherwise():
    closing = VisibleOu((110.0, 100.0), (-3.0, 0.0), 10.0)
    assert orch.heuristic_act(ctx(ous=[closing])) == (0.0, 0.0)
    leaving = VisibleOu((110.0, 100.0), (3.0, 0.0), 10.0)
    assert orch.heuristic_act(ctx(ous=[leaving])) == pytest.approx((-10.0, 0.0))


def test_heuristic_reserve_margin_switches_to_landing():
    c = ctx(energy=110.0, e_min=100.0)
    assert orch.heuristic_target(c, 1.2) == Rect(475.0, 0.0, 25.0, 25.0).center
    assert orch.heuristic_target(ctx(energy=130.0, e_min=100.0), 1.2) == (200.0, 100.0)


def test_heuristic_detours_around_building():
    wall = Rect(140.0, 60.0, 20.0, 80.0)
    v = orch.heuristic_act(ctx(bz=[wall]))
    assert abs(v[1]) > 0 and math.hypot(*v) == pytest.approx(10.0)


def test_heuristic_slows_in_rz():
    v = orch.heuristic_act(ctx(rz=[Rect(50.0, 50.0, 100.0, 100.0)]))
    assert math.hypot(*v) < 5.0


def test_crosses_interior_ignores_edges():
    r = Rect(0.0, 0.0, 10.0, 10.0)
    assert orch._crosses_interior((-5, 5), (15, 5), r)
    assert not orch._crosses_interior((-5, 10), (15, 10), r)
    assert not orch._crosses_interior((-5, 15), (15, 15), r)


def test_heuristic_clean_world_never_collides(cfg):
    sc = bare_scenario(ges=[((100.0, 300.0), 2.0), ((400.0, 100.0), 2.0)])
    env = UavEnv(sc, cfg)
    env.reset()
    ctl = orch.Controller(cfg, orch.PolicyKind("heuristic"), None, None, None, None)
    while not env.done:
        env.step(ctl.act(env, None, deterministic=True, warmup=False)[0])
    assert env.log.records[-1]["events"]["landed"]
    assert not any(r["events"]["collided_ou"] or r["events"]["collided_bz"] or r["events"]["entered_nfz"]
                   for r in env.log.records)


# -- dispatch -------------------------------------------------------------------------------
def test_sac_never_consults_advisor(small_cfg):
    cfg = orch.with_policy(small_cfg, "sac")
    res = orch.Trainer(cfg, None, Refuses()).train(episodes=2)
    assert res.advisor_queries == 0


def test_fixed_fp_one_delegates_every_step(small_cfg):
    cfg = replace(orch.with_policy(small_cfg, "sac_llm_fixed_fp"), run=replace(small_cfg.run, policy="sac_llm_fixed_fp", fp=1.0))
    tr = orch.Trainer(cfg, None)
    tr.keep_logs = True
    tr.train(episodes=2)
    assert all(r["source"] == "advisor" for lg in tr.logs for r in lg.records)


def test_hybrid_dispatch_matches_trigger_recomputed_offline(small_cfg):
    tr = orch.Trainer(small_cfg, None)
    tr.keep_logs = True
    tr.train(episodes=3)
    seen = set()
    for lg in tr.logs:
        env = UavEnv(lg.scenario, small_cfg)
        env.reset()
        for rec in lg.records:
            want = should_invoke(context_from_env(env), small_cfg.advisor.trigger)
            assert (rec["source"] == "advisor") == want
            seen.add(want)
            env.step(rec["action"], rec["source"])
    assert seen == {True, False}


def test_advisor_off_equals_plain_sac(small_cfg, tmp_path):
    cfg = orch.with_policy(small_cfg, "sac")
    off = replace(cfg, advisor=replace(cfg.advisor, kind="none"))
    orch.Trainer(cfg, tmp_path / "a", Refuses()).train()
    orch.Trainer(off, tmp_path / "b").train()
    for name in ("logs/episode_000004.jsonl", "checkpoints/final/actor.json", "rewards.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_needs_advisor_for_hybrid(small_cfg):
    cfg = replace(small_cfg, advisor=replace(small_cfg.advisor, kind="none"))
    with pytest.raises(ValueError):
        orch.Trainer(cfg, None)


# -- determinism and checkpoints ----------------------------------------------------------
def _tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_training_is_byte_reproducible(small_cfg, tmp_path):
    orch.train(small_cfg, tmp_path / "a")
    orch.train(small_cfg, tmp_path / "b")
    a, b = _tree(tmp_path / "a"), _tree(tmp_path / "b")
    assert a.keys() == b.keys() and a == b
    assert "checkpoints/final/replay.npz" in a and "checkpoints/episode_000002/actor.json" in a
    assert "checkpoints/episode_000002/replay.npz" not in a  # superseded copies are pruned


def test_resume_matches_uninterrupted_run(small_cfg, tmp_path):
    orch.train(small_cfg, tmp_path / "full")
    part = replace(small_cfg, run=replace(small_cfg.run, episodes=2))
    orch.train(part, tmp_path / "part")
    orch.train(small_cfg, tmp_path / "part", resume=tmp_path / "part" / "checkpoints" / "final")
    for ep in (3, 4):
        name = f"logs/episode_{ep:06d}.jsonl"
        assert (tmp_path / "full" / name).read_bytes() == (tmp_path / "part" / name).read_bytes()
    for name in ("actor.json", "critic1.json", "target2.json", "replay.npz"):
        assert (tmp_path / "full/checkpoints/final" / name).read_bytes() == \
            (tmp_path / "part/checkpoints/final" / name).read_bytes()


def test_resume_rejections(small_cfg, tmp_path):
    orch.train(small_cfg, tmp_path)
    ck = tmp_path / "checkpoints" / "final"
    other = replace(small_cfg, sac=replace(small_cfg.sac, batch=32))
    with pytest.raises(ConfigMismatch, match="sac.batch"):
        orch.Trainer.resume(ck, other)
    with pytest.raises(VersionMismatch):
        orch.Trainer.resume(tmp_path / "checkpoints" / "episode_000002", small_cfg)
    doc = json.loads((ck / "critic1.json").read_text())
    del doc["optimizer_state"]
    (ck / "critic1.json").write_text(json.dumps(doc))
    with pytest.raises(VersionMismatch):
        orch.Trainer.resume(ck, small_cfg)
    st = json.loads((ck / "trainer_state.json").read_text())
    st["format_version"] = 99
    (ck / "trainer_state.json").write_text(json.dumps(st))
    with pytest.raises(VersionMismatch):
        orch.Trainer.resume(ck, small_cfg)


def test_transport_outage_aborts_with_checkpoint(small_cfg, tmp_path):
    with pytest.raises(AdvisorUnavailable):
        orch.train(small_cfg, tmp_path, advisor=Down())
    cks = list((tmp_path / "checkpoints").iterdir())
    assert cks and (cks[0] / "trainer_state.json").exists()


def test_save_arrays_is_deterministic(tmp_path):
    arrs = {"b": np.arange(6.0).reshape(2, 3), "a": np.array([1, 2], dtype=np.int8)}
    orch.save_arrays(tmp_path / "x.npz", arrs)
    orch.save_arrays(tmp_path / "y.npz", dict(reversed(list(arrs.items()))))
    assert (tmp_path / "x.npz").read_bytes() == (tmp_path / "y.npz").read_bytes()
    with np.load(tmp_path / "x.npz") as z:
        assert np.array_equal(z["b"], arrs["b"])


# -- evaluation -----------------------------------------------------------------------------
def test_evaluate_examples(small_cfg):
    tr = orch.Trainer(small_cfg, None)
    tr.train(episodes=1)
    assert orch.evaluate(small_cfg, tr.agent, 0) == []
    a = orch.evaluate(small_cfg, tr.agent, 2)
    b = orch.evaluate(small_cfg, tr.agent, 2)
    assert [x.to_jsonl() for x in a] == [x.to_jsonl() for x in b]
    with pytest.raises(ValueError):
        orch.evaluate(orch.with_policy(small_cfg, "sac"), None, 1)


def test_load_agent_reproduces_actor(small_cfg, tmp_path):
    tr = orch.Trainer(small_cfg, tmp_path)
    tr.train()
    ag = orch.load_agent(tmp_path / "checkpoints" / "final", orch.checkpoint_config(tmp_path / "checkpoints" / "final"))
    obs = np.linspace(0, 1, 123)
    assert np.array_equal(ag.act(obs, deterministic=True), tr.agent.act(obs, deterministic=True))
