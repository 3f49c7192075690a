#!/usr/bin/env python3
"""
Tests for the synthetic grasp trajectory generator
"""

import numpy as np
import pytest

from hand_retarget.errors import ConfigurationError, GenerationError
from hand_retarget.hand_kinematics import forward_kinematics_batch
from hand_retarget.scene import ContactConfig, HandPoints, grasp_rule
from hand_retarget.synth import SynthConfig, solve_grasp, synth_generate


def test_scripted_grasp_holds_object(spec, scene):
    """The solved grasp pose satisfies the grasp rule on the default cube"""
    action = solve_grasp(scene, spec, SynthConfig(), ContactConfig())
    hand = HandPoints.from_state(forward_kinematics_batch(spec, action))
    points = hand.contact_points()
    assert grasp_rule(points, scene.distances(points), scene.position, ContactConfig())


def test_unreachable_object(spec, scene):
    """A grasp rule no hand can satisfy is a generation error"""
    impossible = ContactConfig(opposition_angle_deg=180.0)
    with pytest.raises(GenerationError):
        solve_grasp(scene, spec, SynthConfig(), impossible)


def test_trajectory_ids_and_timestamps(spec, scene, short_synth):
    trajectories = synth_generate(scene, spec, 3, 0.0, 5, short_synth)
    assert [t.traj_id for t in trajectories] == ['traj_000', 'traj_001', 'traj_002']
    for trajectory in trajectories:
        assert trajectory.fps == pytest.approx(60.0)
        assert trajectory.frames[0][0] == 0.0


def test_same_seed_same_output(spec, scene, short_synth):
    first = synth_generate(scene, spec, 2, 0.0, 3, short_synth)
    second = synth_generate(scene, spec, 2, 0.0, 3, short_synth)
    for a, b in zip(first, second):
        assert len(a) == len(b)
        for (ta, xa), (tb, xb) in zip(a.frames, b.frames):
            assert ta == tb
            np.testing.assert_array_equal(xa.joints, xb.joints)


def test_human_domain_is_larger(spec, scene, short_synth):
    """Clean trajectories are the model motion scaled by the human factor"""
    trajectory = synth_generate(scene, spec, 1, 0.0, 0, short_synth)[0]
    bones = np.linalg.norm(trajectory.frames[0][1].joints[8] - trajectory.frames[0][1].joints[7])
    rest = np.linalg.norm(spec.rest_skeleton[8] - spec.rest_skeleton[7])
    assert bones == pytest.approx(1.1 * rest, rel=1e-9)


def test_noise_rms(spec, scene):
    """sigma = 0.01 m gives a per-joint RMS displacement of about 0.01 * sqrt(3)"""
    clean = synth_generate(scene, spec, 1, 0.0, 11)[0]
    noisy = synth_generate(scene, spec, 1, 0.01, 11)[0]
    assert len(clean) == len(noisy)
    diffs = np.stack([xn.joints - xc.joints for (_, xc), (_, xn) in zip(clean.frames, noisy.frames)])
    displacements = np.linalg.norm(diffs, axis=-1).ravel()
    assert displacements.size >= 1000
    rms = np.sqrt(np.mean(displacements ** 2))
    assert rms == pytest.approx(0.01 * np.sqrt(3), rel=0.1)


def test_negative_sigma(spec, scene):
    with pytest.raises(ConfigurationError):
        synth_generate(scene, spec, 1, -0.01, 0)


def test_synth_config_validation():
    with pytest.raises(ConfigurationError):
        SynthConfig(close_frames=0)
    with pytest.raises(ConfigurationError):
        SynthConfig(human_scale=0.0)
