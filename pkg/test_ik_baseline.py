#!/usr/bin/env python3
"""
Tests for the palm fit and per-actuator IK baseline
"""

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from hand_retarget.errors import ConfigurationError, DegenerateInputError
from hand_retarget.hand_kinematics import (
    ACTION_DIM, FINGERTIPS, N_GLOBAL, ActuatorVector, Skeleton, forward_kinematics,
)
from hand_retarget.ik_baseline import IkConfig, ik_retarget

# Samples stay this far inside each joint limit
LIMIT_MARGIN = 0.05


def _finger_columns(spec):
    return np.array([k for k, act in enumerate(spec.actuators) if act.drives is not None])


def _sample(spec, rng):
    action = np.zeros(ACTION_DIM)
    action[:3] = rng.uniform(-0.3, 0.3, size=3)
    action[3:N_GLOBAL] = Rotation.random(random_state=rng.integers(1 << 31)).as_euler('xyz')
    fingers = _finger_columns(spec)
    action[N_GLOBAL + fingers] = rng.uniform(spec.lower[fingers] + LIMIT_MARGIN,
                                             spec.upper[fingers] - LIMIT_MARGIN)
    return action


def test_rest_maps_to_zero(spec):
    """The rest skeleton gives the identity pose with every joint at 0"""
    a = ik_retarget(spec.rest, spec)
    np.testing.assert_allclose(a.values, np.zeros(ACTION_DIM), atol=1e-6)


def test_round_trip_over_sampled_poses(spec, rng):
    """IK of FK(a) reproduces fingertips within 5 mm and joints within 5 degrees"""
    fingers = _finger_columns(spec)
    good = 0
    n = 500
    for _ in range(n):
        action = _sample(spec, rng)
        target = forward_kinematics(spec, action)
        solved = ik_retarget(target, spec)
        tips_ok = np.max(np.linalg.norm(forward_kinematics(spec, solved).fingertips - target.fingertips,
                                        axis=1)) <= 0.005
        joints_ok = np.max(np.abs(solved.joints[fingers] - action[N_GLOBAL + fingers])) <= np.radians(5)
        good += bool(tips_ok and joints_ok)
    assert good >= 0.95 * n


def test_rigid_motion_only_changes_global_pose(spec, rng):
    """Moving the input rigidly leaves the joint solution unchanged"""
    for _ in range(20):
        target = forward_kinematics(spec, _sample(spec, rng))
        rotation = Rotation.random(random_state=rng.integers(1 << 31)).as_matrix()
        moved = target.transformed(rotation, rng.uniform(-1.0, 1.0, size=3))
        np.testing.assert_allclose(ik_retarget(moved, spec).joints, ik_retarget(target, spec).joints, atol=1e-6)


def test_output_within_limits(spec, rng):
    """Noisy inputs still give joints inside their limits"""
    for _ in range(20):
        noisy = Skeleton(forward_kinematics(spec, _sample(spec, rng)).joints + rng.normal(scale=0.01, size=(21, 3)))
        joints = ik_retarget(noisy, spec).joints
        assert np.all(joints >= spec.lower) and np.all(joints <= spec.upper)


def test_collinear_palm_raises(spec):
    joints = np.zeros((21, 3))
    joints[:, 0] = np.linspace(0.01, 0.21, 21)
    with pytest.raises(DegenerateInputError):
        ik_retarget(Skeleton(joints), spec)


def test_warm_start_keeps_wrist(spec):
    """Undriven wrist actuators carry over from the previous frame"""
    prev = np.zeros(ACTION_DIM)
    prev[N_GLOBAL:N_GLOBAL + 3] = [0.2, -0.1, 0.3]
    a = ik_retarget(spec.rest, spec, ActuatorVector(prev))
    np.testing.assert_array_equal(a.joints[:3], prev[N_GLOBAL:N_GLOBAL + 3])
    np.testing.assert_allclose(forward_kinematics(spec, a).fingertips,
                               spec.rest_skeleton[list(FINGERTIPS)], atol=1e-9)


def _prev(spec, rng):
    """Random previous action with the wrist actuators left at 0"""
    prev = np.zeros(ACTION_DIM)
    fingers = _finger_columns(spec)
    prev[N_GLOBAL + fingers] = rng.uniform(spec.lower[fingers], spec.upper[fingers])
    return ActuatorVector(prev)


def test_warm_start_ignored_away_from_singularities(spec, rng):
    """With the wrist fixed, the previous frame's finger angles never change a regular solve"""
    for _ in range(20):
        target = forward_kinematics(spec, _sample(spec, rng))
        first = ik_retarget(target, spec, _prev(spec, rng))
        second = ik_retarget(target, spec, _prev(spec, rng))
        np.testing.assert_array_equal(first.values, second.values)


def test_warm_start_fills_singular_joint(spec):
    """Index PIP and DIP bones along their flexion axis keep the previous frame's angles"""
    joints = np.array(spec.rest_skeleton)
    joints[7] = joints[6] + [0.0, 0.025, 0.0]
    joints[8] = joints[6] + [0.0, 0.045, 0.0]
    x = Skeleton(joints)
    pip, dip = 9, 10

    results = []
    for bend in (0.3, 0.6):
        prev = np.zeros(ACTION_DIM)
        prev[N_GLOBAL + pip] = bend
        prev[N_GLOBAL + dip] = bend / 2
        results.append(ik_retarget(x, spec, ActuatorVector(prev)))

    first, second = results
    assert (first.joints[pip], first.joints[dip]) == (0.3, 0.15)
    assert (second.joints[pip], second.joints[dip]) == (0.6, 0.3)
    others = np.delete(np.arange(len(spec.actuators)), [pip, dip])
    np.testing.assert_array_equal(first.joints[others], second.joints[others])
    np.testing.assert_array_equal(first.values[:N_GLOBAL], second.values[:N_GLOBAL])


def test_ik_config_validation():
    with pytest.raises(ConfigurationError):
        IkConfig(max_passes=0)
    with pytest.raises(ConfigurationError):
        IkConfig(singular_tolerance=1.5)
