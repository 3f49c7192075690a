#!/usr/bin/env python3
"""
Tests for demonstration state extraction and the dataset export / import
"""

import json
from dataclasses import replace

import numpy as np
import pytest

from hand_retarget.config import DEFAULT_HAND_SPEC, DEFAULT_SCENE
from hand_retarget.demo_recorder import STATE_DIM, StateVector, build_demo, export_demos, import_demos
from hand_retarget.errors import DemoValidationError
from hand_retarget.evaluator import FrameRecord, is_success
from hand_retarget.hand_kinematics import ACTION_DIM, N_GLOBAL, ActuatorVector, HandModelSpec
from hand_retarget.scene import ContactSet, SceneState, apply_miss_rule
from hand_retarget.trajectory_io import RecordedTrajectory

SPEC = HandModelSpec.load(DEFAULT_HAND_SPEC)
SCENE = SceneState.load(DEFAULT_SCENE)
FPS = 60.0


def grasp_and_lift(traj_id, n=30, seed=0):
    """Closing hand with two contacts, then lifting the object 5 cm with the palm"""
    rng = np.random.default_rng(seed)
    frames = []
    for k in range(n):
        lift = 0.05 * max(0, k - n // 2) / (n // 2)
        scene = replace(SCENE, position=SCENE.position + np.array([0.0, 0.0, lift]))
        action = np.zeros(ACTION_DIM)
        action[:3] = [-0.05, 0.0, 0.07 + lift]
        action[N_GLOBAL:] = np.clip(0.02 * k + rng.uniform(-0.01, 0.01, size=ACTION_DIM - N_GLOBAL),
                                    SPEC.lower, SPEC.upper)
        raw = np.array([0.01, 0.0, 0.0, 0.03, 0.2, 0.2])
        distances, missing = apply_miss_rule(raw, 0.04, 2.0)
        frames.append(FrameRecord(
            t=k / FPS, x=SPEC.rest, action=ActuatorVector(action), y=SPEC.rest,
            contacts=ContactSet(distances=distances, missing=missing, raw=raw, d_max=0.04, omega_cost=2.0),
            scene=scene, palm_center=scene.position + np.array([0.0, 0.0, 0.04]),
        ))
    return RecordedTrajectory(traj_id=traj_id, frames=frames, fps=FPS)


def failed(traj_id):
    recorded = grasp_and_lift(traj_id)
    return replace(recorded, frames=[replace(f, scene=SCENE) for f in recorded.frames])


def test_scripted_grasp_is_successful():
    assert is_success(grasp_and_lift('t').frames)
    assert not is_success(failed('t').frames)


def test_state_layout():
    """57 entries: relative position and velocity, joint angles and velocities, fingertip distances"""
    demo = build_demo(grasp_and_lift('t'))
    state = demo.frames[3].state
    assert state.as_array().shape == (STATE_DIM,) == (57,)
    np.testing.assert_array_equal(state.joint_angles, grasp_and_lift('t').frames[3].action.joints)
    np.testing.assert_allclose(state.d_contact, [0.0, 0.0, 0.03, 0.08, 0.08])
    assert np.all(demo.frames[0].state.joint_vels == 0.0)
    assert np.all(demo.frames[0].state.rel_vel == 0.0)


def test_velocity_integration():
    """Integrating joint velocities from frame 0 reconstructs the joint angles"""
    recorded = grasp_and_lift('t')
    demo = build_demo(recorded)
    dt = 1.0 / recorded.fps
    angles = np.array(demo.frames[0].state.joint_angles)
    for frame in demo.frames[1:]:
        angles = angles + frame.state.joint_vels * dt
        np.testing.assert_allclose(angles, frame.state.joint_angles, atol=1e-9, rtol=0)


def test_relative_velocity_of_carried_object():
    """While the palm carries the object their relative velocity is zero"""
    demo = build_demo(grasp_and_lift('t'))
    np.testing.assert_allclose(demo.frames[-1].state.rel_vel, np.zeros(3), atol=1e-9)


def test_export_import_bit_exact(tmp_path):
    recorded = [grasp_and_lift(f"traj_{i:03d}", seed=i) for i in range(3)]
    path = export_demos(recorded, tmp_path / 'demos.jsonl', SPEC.source_hash, {'fps': FPS})
    header, demos = import_demos(path)

    assert header['model_spec_hash'] == SPEC.source_hash
    assert [d.traj_id for d in demos] == [r.traj_id for r in recorded]
    for demo, original in zip(demos, recorded):
        expected = build_demo(original)
        for got, want in zip(demo.frames, expected.frames):
            assert got.t == want.t
            np.testing.assert_array_equal(got.state.as_array(), want.state.as_array())
            np.testing.assert_array_equal(got.action.values, want.action.values)


def test_line_count(tmp_path):
    """One header line plus one line per frame"""
    recorded = [grasp_and_lift(f"traj_{i:03d}", n=20 + i, seed=i) for i in range(10)]
    path = export_demos(recorded, tmp_path / 'demos.jsonl', SPEC.source_hash, {})
    with open(path, 'r', encoding='utf-8') as f:
        lines = f.readlines()
    assert len(lines) == sum(len(r.frames) for r in recorded) + 1
    assert json.loads(lines[1])['traj_id'] == 'traj_000'


def test_empty_export_is_header_only(tmp_path):
    path = export_demos([], tmp_path / 'demos.jsonl', SPEC.source_hash, {})
    header, demos = import_demos(path)
    assert header['format'] == 'hand-retarget-demos'
    assert demos == []


def test_failed_trajectory_rejected(tmp_path):
    with pytest.raises(DemoValidationError) as info:
        export_demos([grasp_and_lift('ok'), failed('bad')], tmp_path / 'demos.jsonl', SPEC.source_hash, {})
    assert info.value.details['failed'] == ['bad']


def test_import_rejects_other_files(tmp_path):
    path = tmp_path / 'not_demos.jsonl'
    path.write_text('{"kind": "records"}\n')
    with pytest.raises(DemoValidationError):
        import_demos(path)


def test_state_vector_length_checked():
    with pytest.raises(DemoValidationError):
        StateVector.from_array(np.zeros(56))


@pytest.mark.parametrize("field, bad", [('action', float('nan')), ('action', float('inf')), ('state', float('nan'))])
def test_import_rejects_non_finite_rows(tmp_path, field, bad):
    path = export_demos([grasp_and_lift('traj_000')], tmp_path / 'demos.jsonl', SPEC.source_hash, {})
    lines = path.read_text().splitlines()
    row = json.loads(lines[1])
    row[field][3] = bad
    lines[1] = json.dumps(row)
    path.write_text('\n'.join(lines) + '\n')
    with pytest.raises(DemoValidationError):
        import_demos(path)
