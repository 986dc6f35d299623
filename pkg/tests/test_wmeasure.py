import math

import numpy as np
import pytest

from conftest import LOG2
from errors import ConfigError, ResourceLimitError
from maps import builtin_map
from measures import BlockGibbs
from symbolic import format_word
from wmeasure import (acceptance_fraction, boundary_schedule, build_schedule, checkpoint_grid, growth_times,
                      sample_many, sample_w_word, schedule_from_config, verify_oscillation)

Q_NINE = math.log2(9)


@pytest.fixture(scope='module')
def alternating(gc24):
  return build_schedule(gc24, [{'q': Q_NINE}, {'q': -Q_NINE}], m=[10 ** k for k in range(2, 6)], name='alternating')


def test_growth_times():
  assert growth_times(10, 4) == [10, 100, 1000, 10000]
  assert growth_times(1, 14, factor=2)[-1] == 2 * 3 * 4 * 5 * 6 * 7 * 8 * 9 * 10 * 11 * 12 * 13 * 2


def test_stage_exponents_cycle(alternating):
  chis = [s.exponent for s in alternating.stages]
  assert chis[0] == pytest.approx(1.1 * LOG2) and chis[1] == pytest.approx(1.9 * LOG2)
  assert chis[2] == chis[0] and chis[3] == chis[1]
  assert alternating.ratios == [0.1, 0.1, 0.1]
  assert alternating.stage_at(100) == 0 and alternating.stage_at(101) == 1
  assert alternating.describe()['stages'][1]['q'] == pytest.approx(-Q_NINE)


def test_schedule_by_exponent(gc24):
  schedule = build_schedule(gc24, [{'alpha': 1.1 * LOG2}], m=[100])
  assert schedule.stages[0].q == pytest.approx(Q_NINE, abs=1e-6)


@pytest.mark.parametrize('times', [[100, 500], [100, 100], [0, 10]])
def test_bad_switch_times(gc24, times):
  with pytest.raises(ConfigError):
    build_schedule(gc24, [{'q': 0.0}], m=times)


def test_schedule_arguments(gc24):
  with pytest.raises(ConfigError):
    build_schedule(gc24, [{'q': 0.0}], m=[10], m1=10, n_stages=2)
  with pytest.raises(ConfigError):
    build_schedule(gc24, [], m=[10])
  with pytest.raises(ResourceLimitError):
    build_schedule(gc24, [{'q': 0.0}], m=[10, 100], budget=50)


def test_schedule_from_config(gc24):
  schedule = schedule_from_config(gc24, {'stages': [{'q': 0.0}], 'm1': 10, 'n_stages': 3, 'name': 'c'})
  assert schedule.switch_times == [10, 100, 1000]
  assert schedule.name == 'c'


def test_checkpoint_grid_contains_switch_times():
  grid = checkpoint_grid(10 ** 4, [10, 137, 10 ** 4])
  assert 137 in grid and grid[-1] == 10 ** 4
  assert np.all(np.diff(grid) > 0)


def test_constant_schedule(gc24):
  schedule = build_schedule(gc24, [{'q': 0.0}], m=[10 ** 5])
  trace = sample_w_word(schedule, 1)
  assert trace.stage_L[0] == pytest.approx(1.5 * LOG2, rel=0.02)
  assert trace.stage_H[0] == pytest.approx(LOG2, abs=1e-9)
  report = verify_oscillation(trace, schedule)
  assert report.L_swing == 0.0
  assert report.max_junction_drift == 0.0


def test_same_seed_same_trace(alternating):
  a, b = sample_w_word(alternating, 7), sample_w_word(alternating, 7)
  assert np.array_equal(a.word, b.word)
  assert a.checkpoints == b.checkpoints
  assert not np.array_equal(a.word, sample_w_word(alternating, 8).word)


def test_entropy_trace_is_exact(fib22):
  schedule = build_schedule(fib22, [{'q': 0.5}], m=[10])
  trace = sample_w_word(schedule, 3)
  mu = schedule.stages[0].measure
  word = format_word(trace.word[:10].tolist())
  assert trace.checkpoints[-1]['m'] == 10
  assert trace.checkpoints[-1]['H_m'] == pytest.approx(-math.log(mu.mass(word)) / 10, abs=1e-12)
  assert trace.stage_L[0] == pytest.approx(LOG2)
  assert '11' not in word


def test_alternating_exponents_oscillate(alternating):
  traces = sample_many(alternating, range(5))
  fraction, reports = acceptance_fraction(traces, alternating)
  assert fraction >= 0.9
  for report in reports:
    assert report.stages_within(0.10, from_stage=2)
    assert report.L_swing > 0.2


def test_equal_exponents_different_entropies():
  model = builtin_map('eq_exponent_triple')
  schedule = build_schedule(model, [{'alpha': 2 * LOG2}, {'alpha': 2 * LOG2, 'symbols': [0, 2]}],
                            m=[10 ** 3, 10 ** 4, 10 ** 5])
  assert schedule.stages[0].entropy == pytest.approx(math.log(3), abs=1e-6)
  assert schedule.stages[1].entropy == pytest.approx(LOG2, abs=1e-6)
  report = verify_oscillation(sample_w_word(schedule, 11), schedule)
  assert report.L_swing < 0.03
  assert report.H_swing > 0.20


def test_block_stages_on_subsystems(mp1):
  schedule = build_schedule(mp1, [{'q': 0.8, 'subsystem': 3}, {'q': 1.2, 'subsystem': 4}], m=[100, 1000])
  assert all(isinstance(s.measure, BlockGibbs) for s in schedule.stages)
  trace = sample_w_word(schedule, 5)
  word = format_word(trace.word.tolist())
  assert '000' not in word[:100]
  assert '0000' not in word
  head = schedule.stages[0].measure
  first = next(c for c in trace.checkpoints if c['m'] == 10)
  assert first['H_m'] == pytest.approx(-math.log(head.mass(word[:10])) / 10, abs=1e-9)
  assert trace.log_deriv_range[0] > 0


def test_block_stages_round_switch_times(mp1):
  schedule = build_schedule(mp1, [{'q': 1.0, 'subsystem': 3}], m=[15, 150])
  assert schedule.switch_times == [20, 150]


@pytest.mark.slow
def test_boundary_schedule(mp1):
  stages = boundary_schedule(mp1, 0.05, levels=(3, 4), depth=10)
  assert [s.level for s in stages] == [3, 4]
  assert stages[1].target <= stages[0].target
  assert all(s.d > 0 and s.chi > 0 for s in stages)
