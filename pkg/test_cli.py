#!/usr/bin/env python3
"""
End-to-end tests for the hand-retarget command line
"""

import csv
import json

import pytest
from click.testing import CliRunner

from hand_retarget.cli import cli
from hand_retarget.demo_recorder import import_demos
from hand_retarget.retargeters import RetargeterFactory
from hand_retarget.trajectory_io import read_records


@pytest.fixture
def runner():
    return CliRunner(mix_stderr=False)


def invoke(runner, *args):
    return runner.invoke(cli, ['--log-level', 'ERROR', *map(str, args)])


def test_pipeline(runner, tmp_path):
    """synth, retarget with the IK baseline, eval, report and export-demos"""
    inputs, out = tmp_path / 'inputs', tmp_path / 'ik'

    result = invoke(runner, 'synth', '--n', 2, '--sigma', 0.0, '--seed', 0, '--out', inputs)
    assert result.exit_code == 0, result.stderr
    assert sorted(p.name for p in inputs.iterdir()) == ['traj_000.jsonl', 'traj_001.jsonl']

    result = invoke(runner, 'retarget', '--mode', 'ik', '--input', inputs, '--out', out)
    assert result.exit_code == 0, result.stderr
    assert (out / 'metrics.json').exists()
    assert read_records(out / 'traj_000.jsonl').header['run']['mode'] == 'ik'

    metrics = tmp_path / 'eval.json'
    result = invoke(runner, 'eval', '--records', out / 'traj_000.jsonl', '--records', out / 'traj_001.jsonl',
                    '--out', metrics)
    assert result.exit_code == 0, result.stderr
    evaluated = json.loads(metrics.read_text())
    retargeted = json.loads((out / 'metrics.json').read_text())
    assert evaluated['summary'] == retargeted['summary']
    assert evaluated['summary']['success_rate'] == 1.0

    csv_path = tmp_path / 'report.csv'
    result = invoke(runner, 'report', '--metrics', metrics, '--csv', csv_path)
    assert result.exit_code == 0, result.stderr
    with open(csv_path, newline='') as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 1
    assert rows[0]['mode'] == 'ik'

    demos = tmp_path / 'demos.jsonl'
    result = invoke(runner, 'export-demos', '--records', out, '--out', demos)
    assert result.exit_code == 0, result.stderr
    header, trajectories = import_demos(demos)
    assert header['model_spec_hash'] == read_records(out / 'traj_000.jsonl').header['model_spec_hash']
    assert [t.traj_id for t in trajectories] == ['traj_000', 'traj_001']


def test_invalid_config_exits_with_json_error(runner, tmp_path):
    path = tmp_path / 'run.json'
    path.write_text(json.dumps({'mode': 'magic'}))
    inputs = tmp_path / 'inputs'
    inputs.mkdir()

    result = invoke(runner, 'retarget', '--config', path, '--input', inputs, '--out', tmp_path / 'out')
    assert result.exit_code == 2
    error = json.loads(result.stderr.strip().splitlines()[-1])
    assert error['error'] == 'ConfigurationError'
    assert 'mode' in error['details']['fields']


def test_unreadable_input_exits_with_json_error(runner, tmp_path):
    bad = tmp_path / 'bad.jsonl'
    bad.write_text('{"t": 0.0}\n')
    result = invoke(runner, 'retarget', '--mode', 'ik', '--input', bad, '--out', tmp_path / 'out')
    assert result.exit_code == 2
    assert json.loads(result.stderr.strip().splitlines()[-1])['error'] == 'ConfigurationError'


def test_report_without_metrics(runner, tmp_path):
    empty = tmp_path / 'metrics'
    empty.mkdir()
    result = invoke(runner, 'report', '--metrics', empty, '--csv', tmp_path / 'report.csv')
    assert result.exit_code == 2
    assert json.loads(result.stderr.strip().splitlines()[-1])['error'] == 'ReportValidationError'


def test_retarget_help_lists_modes(runner):
    result = invoke(runner, 'retarget', '--help')
    assert result.exit_code == 0
    text = ' '.join(result.output.split())
    for mode, description in RetargeterFactory.describe().items():
        assert f"{mode}: {description}" in text
