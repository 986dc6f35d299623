import json

import pandas as pd
import pytest

from lyapspec import main


@pytest.fixture(autouse=True)
def workdir(tmp_path, monkeypatch):
  monkeypatch.chdir(tmp_path)
  return tmp_path


def write_config(path, payload):
  path.write_text(json.dumps(payload))
  return str(path)


def test_pressure_matches_oracle(workdir):
  assert main(['pressure', '--map-config', 'gc24', '--d-min', '-2', '--d-max', '2', '--d-steps', '9']) == 0
  frame = pd.read_csv(workdir / 'gc24_pressure.csv')
  assert len(frame) == 9
  assert (frame['P_extrapolated'] - frame['P_oracle']).abs().max() < 1e-6
  manifest = json.loads((workdir / 'gc24_pressure_manifest.json').read_text())
  assert manifest['subcommand'] == 'pressure'
  assert manifest['outputs'] == ['gc24_pressure.csv']
  assert len(manifest['config_hash']) == 64


def test_spectrum_writes_side_file(workdir):
  assert main(['spectrum', '--map-config', 'gc24', '--alpha-steps', '11', '--out', 'gc.csv']) == 0
  assert len(pd.read_csv(workdir / 'gc.csv')) == 11
  side = json.loads((workdir / 'gc_side.json').read_text())
  assert side['case'] == 'hyperbolic'


def test_zero_row_matrix_exits_2(workdir):
  cfg = write_config(workdir / 'bad.json', {'family': 'linear_sft', 'slopes': [2, 2],
                                            'branch_intervals': [[0, 0.5], [0.5, 1]], 'matrix': [[1, 1], [0, 0]]})
  assert main(['pressure', '--map-config', cfg]) == 2


def test_unknown_key_exits_2(workdir):
  cfg = write_config(workdir / 'map.json', {'family': 'manneville_pomeau', 's': 1.0, 'colour': 'red'})
  assert main(['pressure', '--map-config', cfg]) == 2


def test_depth_cap_exits_2():
  assert main(['pressure', '--map-config', 'gc24', '--depth', '99']) == 2


@pytest.mark.parametrize('command', ['spectrum', 'figure-data'])
def test_degenerate_map_exits_4(command):
  assert main([command, '--map-config', 'doubling']) == 4


def test_bad_tolerance_is_a_usage_error():
  with pytest.raises(SystemExit) as exc:
    main(['pressure', '--map-config', 'gc24', '--tolerance', 'nonsense=1'])
  assert exc.value.code == 2


def test_measure_rows(workdir):
  assert main(['measure', '--map-config', 'doubling', '--q', '0', '--word-depth', '3']) == 0
  frame = pd.read_csv(workdir / 'doubling_measure.csv', dtype={'word': str})
  assert list(frame.columns) == ['word', 'mass_center', 'mass_lo', 'mass_hi']
  assert len(frame) == 8
  assert frame['mass_center'].tolist() == pytest.approx([0.125] * 8)
  assert frame['word'][1] == '001'


def test_conformal_measure_rows(workdir):
  assert main(['measure', '--map-config', 'gc24', '--d', '1.0', '--word-depth', '2']) == 0
  frame = pd.read_csv(workdir / 'gc24_measure.csv')
  assert len(frame) == 4
  assert (frame['mass_lo'] <= frame['mass_hi']).all()


def test_entropy_report(workdir):
  assert main(['entropy', '--map-config', 'gc24', '--depth-min', '6', '--depth-max', '8']) == 0
  summary = json.loads((workdir / 'gc24_entropy_summary.json').read_text())
  assert summary['level0_empty'] is True


def test_wsample_is_reproducible(workdir):
  schedule = write_config(workdir / 'schedule.json', {'name': 'flat', 'stages': [{'q': 0.0}], 'm': [100, 1000]})
  args = ['wsample', '--map-config', 'gc24', '--schedule-config', schedule, '--seed', '5', '--seeds', '2']
  assert main(args + ['--out', 'a.csv']) == 0
  assert main(args + ['--out', 'b.csv']) == 0
  assert (workdir / 'a.csv').read_bytes() == (workdir / 'b.csv').read_bytes()
  frame = pd.read_csv(workdir / 'a.csv')
  assert sorted(frame['seed'].unique()) == [5, 6]
  assert json.loads((workdir / 'a_manifest.json').read_text())['seed'] == 5


@pytest.mark.slow
def test_quick_selftest_passes():
  assert main(['selftest', '--quick']) == 0
