import sys

import numpy as np
import pytest
from hypothesis import settings

from uavtraj import config as config_mod
from uavtraj.world import AreaSpec, GeSpec, Rect, Scenario, landing_rect, take_off_rect

settings.register_profile("suite", max_examples=60, deadline=None)
settings.load_profile("suite")


def bare_scenario(ges=(), nfz=(), bz=(), rz=(), tracks=(), X=500.0, Y=500.0, seed=0) -> Scenario:
    """Hand-built world for targeted tests: no random draws."""
    area = AreaSpec(X, Y)
    return Scenario(area, take_off_rect(area, 25.0), landing_rect(area, 25.0), list(nfz), list(bz),
                    list(rz), [GeSpec(tuple(p), dv, 0.01) for p, dv in ges], list(tracks), seed, 20.0)


@pytest.fixture
def cfg():
    return config_mod.default_config()


@pytest.fixture
def small_cfg():
    # tiny network and batch so a handful of episodes exercises every training path
    return config_mod.reduced_config(
        "hybrid", episodes=4,
        sac={"hidden": [8, 8], "batch": 16, "warmup_steps": 20, "grad_steps_per_episode": 3},
        episode={"t_max": 40}, run={"checkpoint_every": 2},
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)



def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    report = getattr(mod, "REPORT", None)
    if report:
        terminalreporter.section("acceptance criteria")
        for n in sorted(report):
            terminalreporter.write_line(report[n])
