import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from uavtraj.dynamics import (OuTrack, SlotClock, UavState, clip_speed, generate_ou_tracks, step_dcu,
                              visible_ous)
from uavtraj.world import AreaSpec, Rect, inside_any

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_slot_clock_must_split_evenly():
    SlotClock()
    with pytest.raises(ValueError):
        SlotClock(2.0, 1.5, 0.5)


def test_overspeed_action_is_rescaled():
    s, info = step_dcu(UavState((100.0, 100.0)), (30.0, 40.0), AreaSpec())
    assert s.velocity == pytest.approx((6.0, 8.0))
    assert s.position == pytest.approx((106.0, 108.0))
    assert info.clipped and not info.exited_area


def test_exit_is_clamped_and_flagged():
    s, info = step_dcu(UavState((2.0, 250.0)), (-5.0, 0.0), AreaSpec())
    assert s.position == (0.0, 250.0)
    assert info.exited_area and info.pre_clamp_position == (-3.0, 250.0)


@given(finite, finite, st.floats(0.1, 50))
def test_clip_speed_never_exceeds_vmax_and_keeps_direction(vx, vy, vmax):
    cx, cy = clip_speed((vx, vy), vmax)
    assert math.hypot(cx, cy) <= vmax * (1 + 1e-12)
    if math.hypot(vx, vy) <= vmax:
        assert (cx, cy) == (vx, vy)
    else:
        assert cx * vy == pytest.approx(cy * vx, abs=1e-6 * max(1.0, abs(vx * vy)))


@given(st.floats(0, 500), st.floats(0, 500), finite, finite)
def test_step_stays_in_area_and_moves_at_most_vmax(x, y, vx, vy):
    s, _ = step_dcu(UavState((x, y)), (vx, vy), AreaSpec())
    assert AreaSpec().contains(s.position)
    assert math.dist(s.position, (x, y)) <= 10.0 + 1e-9


def test_no_ous_gives_empty_list():
    assert generate_ou_tracks(AreaSpec(), [], 0, 10) == []


@given(st.integers(0, 10_000), st.integers(1, 4))
def test_ou_tracks_avoid_blocked_zones_and_respect_speed(seed, n):
    area = AreaSpec(200, 200)
    blocked = [Rect(50, 50, 60, 40), Rect(120, 130, 40, 50)]
    tracks = generate_ou_tracks(area, blocked, n, 120, seed=seed, heading_period=7)
    assert len(tracks) == n
    for tr in tracks:
        assert len(tr) == 120
        for p in tr.positions:
            assert area.contains(p) and not inside_any(p, blocked)
        steps = np.linalg.norm(np.diff(tr.positions, axis=0), axis=1)
        assert steps.max() <= 10.0 + 1e-6
        assert np.linalg.norm(tr.velocities, axis=1).max() <= 10.0


def test_ou_tracks_are_seeded():
    a = generate_ou_tracks(AreaSpec(), [], 3, 50, seed=7)
    b = generate_ou_tracks(AreaSpec(), [], 3, 50, seed=7)
    assert all(np.array_equal(x.positions, y.positions) for x, y in zip(a, b))


def test_track_dict_roundtrip():
    tr = generate_ou_tracks(AreaSpec(), [], 1, 30, seed=3)[0]
    back = OuTrack.from_dict(tr.to_dict())
    assert np.array_equal(back.positions, tr.positions)
    assert np.array_equal(back.velocities, tr.velocities)


def test_visible_ous_boundary_and_order():
    tracks = [OuTrack(np.array([[20.0, 0.0]]), np.zeros((1, 2))),
              OuTrack(np.array([[0.0, 5.0]]), np.zeros((1, 2))),
              OuTrack(np.array([[30.0, 0.0]]), np.zeros((1, 2)))]
    vis = visible_ous((0.0, 0.0), tracks, 0, 20.0)
    assert [v[0] for v in vis] == [1, 0]  # PR boundary included, nearest first
    assert visible_ous((400.0, 400.0), tracks, 0, 20.0) == []
