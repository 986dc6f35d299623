import math

import numpy as np
import pytest

from config import TOLERANCES
from conftest import GOLDEN, GOLDEN_D0, LOG2
from errors import ConvergenceError, PreconditionError
from maps import known_dimension
from pressure import (OracleSource, PressureSource, Subsystem, alpha_bounds, check_Pm_convergence, d_zero,
                      default_d_grid, degeneracy_test, dimension_bound_check, perron, periodic_exponents,
                      pressure_at, pressure_curve, pressure_matrix_oracle, subadditivity_check, subsystem,
                      variational_check)
from symbolic import count_words, topological_entropy


@pytest.mark.parametrize('d', [-2.0, -1.0, 0.0, 0.5, 1.0, 2.0])
def test_matches_matrix_oracle(gc24_source, fib22_source, d):
  for src in (gc24_source, fib22_source):
    est = src.estimate(d)
    exact = pressure_matrix_oracle(src.model, d)
    assert est.lower - 1e-12 <= exact <= est.upper + 1e-12
    assert est.value == pytest.approx(exact, abs=1e-6)


def test_closed_forms(gc24_source, fib22_source):
  assert gc24_source.value(1.0) == pytest.approx(math.log(0.75), abs=1e-12)
  assert fib22_source.value(1.0) == pytest.approx(math.log(GOLDEN) - LOG2, abs=1e-6)


def test_pressure_at_depth(gc24):
  upper, lower = pressure_at(gc24, 1.0, 5)
  assert upper == pytest.approx(math.log(0.75))
  assert lower == pytest.approx(math.log(0.75))
  with pytest.raises(PreconditionError):
    pressure_at(gc24, 1.0, 0)


def test_perron_fibonacci():
  radius, left, right = perron([[1, 1], [1, 0]])
  assert radius == pytest.approx(GOLDEN, abs=1e-12)
  assert right[0] / right[1] == pytest.approx(GOLDEN, abs=1e-9)
  assert left.sum() == pytest.approx(1.0)


def test_oracle_rejects_nonlinear(mp1):
  with pytest.raises(PreconditionError):
    OracleSource(mp1)


def test_d_zero_linear(gc24_source, doubling):
  dz = d_zero(gc24_source)
  assert dz.contains(GOLDEN_D0)
  assert dz.estimate == pytest.approx(GOLDEN_D0, abs=1e-6)
  assert d_zero(PressureSource(doubling)).estimate == pytest.approx(1.0, abs=1e-9)


def test_d_zero_parabolic(mp1_source):
  dz = d_zero(mp1_source)
  assert dz.contains(1.0)
  assert mp1_source.estimate(1.0).upper >= -1e-9


def test_d_zero_needs_cylinder_sums(gc24):
  with pytest.raises(PreconditionError):
    d_zero(OracleSource(gc24))


def test_pressure_curve_shape(gc24_source):
  curve = pressure_curve(gc24_source, np.linspace(-2.0, 2.0, 21))
  assert curve.is_monotone()
  assert curve.convexity_violation() <= 1e-9
  row = curve.rows()[0]
  assert set(row) == {'d', 'P_lower', 'P_upper', 'P_extrapolated', 'err', 'depth'}


def test_default_grid_refines_around_d0():
  grid = default_d_grid(d0=0.7)
  assert 0.7 in grid
  assert grid[0] == -4.0 and grid[-1] == 4.0


def test_alpha_bounds_gc24(gc24_source):
  bounds = alpha_bounds(gc24_source)
  assert bounds.alpha_minus == pytest.approx(LOG2, abs=1e-9)
  assert bounds.alpha_plus == pytest.approx(2 * LOG2, abs=1e-9)
  assert not bounds.degenerate


def test_periodic_exponents_gc24(gc24):
  rates = periodic_exponents(gc24, max_period=2)
  assert min(rates) == pytest.approx(LOG2)
  assert max(rates) == pytest.approx(2 * LOG2)


def test_degeneracy(gc24_source, doubling):
  assert degeneracy_test(PressureSource(doubling))
  assert not degeneracy_test(gc24_source)


def test_variational_principle_at_uniform_measure(gc24):
  assert variational_check(OracleSource(gc24), LOG2, 1.5 * LOG2, 0.0) < 1e-12


def test_subadditivity(gc24_source, mp1_source):
  assert subadditivity_check(gc24_source, 0.5, 3, 4) <= 1e-10
  assert subadditivity_check(mp1_source, 0.5, 4, 5) <= 1e-10


def test_dimension_bound(gc24_source, gc24):
  holds, dz = dimension_bound_check(gc24_source, known_dimension(gc24))
  assert holds
  assert dz.width > 0


def test_subsystem_requires_parabolic_point(doubling, mp1):
  with pytest.raises(PreconditionError):
    subsystem(doubling, 3)
  with pytest.raises(PreconditionError):
    Subsystem(mp1, 1)


def test_subsystems_nest(mp1):
  small, large = subsystem(mp1, 3), subsystem(mp1, 4)
  assert small.uniformly_hyperbolic and large.uniformly_hyperbolic
  assert large.contains_words_of(small, 6)
  assert not small.contains_words_of(large, 6)
  assert small.name.endswith('m=3')


def test_Pm_needs_parabolic_point(gc24):
  with pytest.raises(PreconditionError):
    check_Pm_convergence(gc24, 1.0)


@pytest.mark.slow
def test_Pm_ladder_nondecreasing(mp1, mp1_source):
  table = check_Pm_convergence(mp1, 0.5, full_source=mp1_source)
  assert table.nondecreasing
  assert table.gap >= -table.full_err - table.rows[-1].err


@pytest.mark.parametrize('d', [-2.0, -1.0, 0.0, 0.5, 1.0, 2.0])
def test_err_covers_oracle_gap(gc24, gc24_source, fib22, fib22_source, d):
  assert gc24_source.err(d) <= 1e-6
  assert OracleSource(gc24).err(d) <= 1e-6
  est = fib22_source.estimate(d)
  assert abs(est.value - pressure_matrix_oracle(fib22, d)) <= est.err + 1e-12


def test_pressure_at_one_brackets_zero(mp1):
  for n in (4, 8):
    upper, lower = pressure_at(mp1, 1.0, n)
    assert upper >= -1e-12
    assert lower <= 1e-12


def test_subshift_lower_bound_waits_for_every_state(mp1):
  source = PressureSource(subsystem(mp1, 5), depth=10)
  upper, lower = source.certificate(0.0, 4)
  assert lower == -math.inf
  assert math.isfinite(upper)
  h = topological_entropy(source.shift)
  for n in range(5, 11):
    upper, lower = source.certificate(0.0, n)
    assert lower <= h + 1e-12 <= upper + 2e-12


def test_subshift_bracket_holds_entropy(mp1):
  sub = subsystem(mp1, 5)
  est = PressureSource(sub, depth=10).estimate(0.0)
  h = topological_entropy(sub.shift)
  assert h == pytest.approx(0.675975, abs=1e-5)
  assert est.warning is None
  assert est.lower <= h + 1e-12
  assert h <= est.upper + 1e-12


def test_perron_tolerance_read_at_call_time(monkeypatch):
  with pytest.raises(ConvergenceError):
    perron([[1, 1], [1, 0]], max_iter=2)
  monkeypatch.setitem(TOLERANCES, 'power_iteration', 10.0)
  radius, _, _ = perron([[1, 1], [1, 0]], max_iter=2)
  assert radius > 0


def test_d_zero_sign_certified(gc24_source):
  dz = d_zero(gc24_source)
  assert dz.certified
  assert gc24_source.estimate(dz.lo).lower > 0
  assert gc24_source.estimate(dz.hi).upper <= 0
  assert dz.width <= TOLERANCES['d0'] + 1e-12


def test_d_zero_parabolic_bracket_signs(mp1_source):
  dz = d_zero(mp1_source)
  assert mp1_source.estimate(dz.lo).upper >= 0
  assert mp1_source.estimate(dz.hi).lower <= 1e-12


def test_subsystem_word_counts(mp1):
  fib = [2, 3, 5, 8, 13, 21, 34, 55]
  assert [count_words(subsystem(mp1, 2).shift, n) for n in range(1, 9)] == fib
  assert count_words(subsystem(mp1, 3).shift, 4) == 13
