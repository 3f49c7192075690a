#!/usr/bin/env python3
"""
Tests for input trajectory and records files
"""

import json

import numpy as np
import pytest

from hand_retarget.errors import ConfigurationError, DegenerateInputError
from hand_retarget.hand_kinematics import Skeleton
from hand_retarget.trajectory_io import (
    InputTrajectory, read_input_trajectory, read_records, write_input_trajectory,
)


def test_input_round_trip(tmp_path, short_trajectories):
    original = short_trajectories[0]
    path = write_input_trajectory(original, tmp_path / 'traj_000.jsonl')
    loaded = read_input_trajectory(path)
    assert loaded.traj_id == 'traj_000'
    assert len(loaded) == len(original)
    for (ta, xa), (tb, xb) in zip(original.frames, loaded.frames):
        assert ta == tb
        np.testing.assert_array_equal(xa.joints, xb.joints)


def test_input_line_format(tmp_path, spec):
    trajectory = InputTrajectory('one', ((0.0, spec.rest),))
    path = write_input_trajectory(trajectory, tmp_path / 'one.jsonl')
    row = json.loads(path.read_text().splitlines()[0])
    assert set(row) == {'t', 'joints'}
    assert len(row['joints']) == 21


def test_empty_trajectory_rejected():
    with pytest.raises(DegenerateInputError):
        InputTrajectory('empty', ())


def test_timestamps_must_increase(spec):
    with pytest.raises(DegenerateInputError):
        InputTrajectory('bad', ((0.0, spec.rest), (0.0, spec.rest)))


def test_single_frame_has_no_rate(spec):
    assert InputTrajectory('one', ((0.0, spec.rest),)).fps == 0.0


def test_missing_field(tmp_path):
    path = tmp_path / 'bad.jsonl'
    path.write_text('{"t": 0.0}\n')
    with pytest.raises(ConfigurationError):
        read_input_trajectory(path)


def test_wrong_point_count(tmp_path):
    path = tmp_path / 'bad.jsonl'
    path.write_text(json.dumps({'t': 0.0, 'joints': [[0.0, 0.0, 0.0]] * 20}) + '\n')
    with pytest.raises(ConfigurationError):
        read_input_trajectory(path)


def test_invalid_json(tmp_path):
    path = tmp_path / 'bad.jsonl'
    path.write_text('{"t": 0.0, \n')
    with pytest.raises(ConfigurationError):
        read_input_trajectory(path)


def test_records_need_header(tmp_path, spec):
    path = tmp_path / 'records.jsonl'
    write_input_trajectory(InputTrajectory('x', ((0.0, Skeleton(spec.rest_skeleton)),)), path)
    with pytest.raises(ConfigurationError):
        read_records(path)
