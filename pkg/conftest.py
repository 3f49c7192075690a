"""
Shared fixtures: the shipped hand model, scene and default run config
"""

import numpy as np
import pytest

from hand_retarget.config import DEFAULT_HAND_SPEC, DEFAULT_SCENE, REPO_ROOT, load_run_config
from hand_retarget.hand_kinematics import HandModelSpec
from hand_retarget.scene import SceneState
from hand_retarget.synth import SynthConfig, synth_generate

# Short scripted grasp used by the pipeline tests
SHORT_SYNTH = SynthConfig(approach_frames=4, close_frames=4, hold_frames=2, lift_frames=4,
                          final_hold_frames=2, timing_jitter=0.0)


@pytest.fixture(scope="session")
def spec():
    return HandModelSpec.load(DEFAULT_HAND_SPEC)


@pytest.fixture(scope="session")
def scene():
    return SceneState.load(DEFAULT_SCENE)


@pytest.fixture
def run_config():
    return load_run_config(REPO_ROOT / 'retarget_config.json')


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def short_synth():
    return SHORT_SYNTH


@pytest.fixture(scope="session")
def short_trajectories(spec, scene):
    return synth_generate(scene, spec, 2, 0.0, 0, SHORT_SYNTH)


@pytest.fixture(autouse=True)
def _no_env_config(monkeypatch):
    monkeypatch.delenv('HAND_RETARGET_CONFIG', raising=False)
    monkeypatch.delenv('HAND_RETARGET_WORKERS', raising=False)
