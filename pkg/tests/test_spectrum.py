import math

import numpy as np
import pytest

from conftest import GOLDEN_D0, LOG2
from errors import DegenerateModelError, LevelSetEmptyError, PreconditionError
from pressure import OracleSource, PressureSource, alpha_bounds, subsystem
from spectrum import (bernoulli_spectrum, check_Fm_convergence, dim_hat_zero, dim_level_sets, duality_residual,
                      legendre_F, pointwise_dimension_bound, spectrum_curve)


def test_bernoulli_closed_form():
  alpha, dim = bernoulli_spectrum((2.0, 4.0), (0.5, 0.5))
  assert alpha == pytest.approx(1.5 * LOG2)
  assert dim == pytest.approx(2 / 3)


@pytest.mark.parametrize('p', np.linspace(0.05, 0.95, 10))
def test_legendre_matches_bernoulli(gc24_source, p):
  alpha, dim = bernoulli_spectrum((2.0, 4.0), (p, 1 - p))
  assert legendre_F(gc24_source, alpha).F == pytest.approx(dim, abs=1e-6)


def test_legendre_with_oracle(gc24):
  value = legendre_F(OracleSource(gc24), 1.5 * LOG2)
  assert value.F == pytest.approx(2 / 3, abs=1e-6)
  assert value.attained
  assert value.minimizer == pytest.approx(0.0, abs=1e-5)


def test_legendre_outside_spectrum(gc24_source):
  bounds = alpha_bounds(gc24_source)
  assert legendre_F(gc24_source, 3.0, bounds).F == -math.inf
  with pytest.raises(PreconditionError):
    legendre_F(gc24_source, 0.0)


def test_endpoints_not_attained(gc24_source):
  value = legendre_F(gc24_source, LOG2)
  assert not value.attained
  assert value.F <= 1e-3


def test_duality(gc24_source):
  assert duality_residual(gc24_source, legendre_F(gc24_source, 1.0)) < 1e-4


def test_degenerate_map_has_no_spectrum(doubling):
  with pytest.raises(DegenerateModelError):
    spectrum_curve(PressureSource(doubling))


def test_hyperbolic_curve(gc24_source):
  curve = spectrum_curve(gc24_source)
  assert curve.case == 'hyperbolic'
  assert curve.alpha[0] == pytest.approx(LOG2, abs=1e-9)
  assert curve.alpha[-1] == pytest.approx(2 * LOG2, abs=1e-9)
  assert GOLDEN_D0 - 1e-3 <= np.max(curve.F) <= curve.d0.hi
  assert curve.concavity_violation() <= 1e-6
  side = curve.side_file()
  assert side['case'] == 'hyperbolic' and side['alpha_plateau'] is None
  assert len(curve.rows()) == 41


def test_parabolic_curve(mp1_source):
  curve = spectrum_curve(mp1_source, alpha_steps=11)
  assert curve.case.startswith('parabolic')
  assert curve.alpha[0] == 0.0
  assert curve.F[0] == curve.d0.estimate
  assert curve.d0.contains(1.0)


def test_level_sets_gc24(gc24_source):
  dims = dim_level_sets(gc24_source, LOG2, 2 * LOG2)
  assert dims.hat == pytest.approx(GOLDEN_D0, abs=1e-3)
  assert abs(dims.regular) <= 1e-3


def test_level_set_inside_spectrum(gc24_source):
  dims = dim_level_sets(gc24_source, 1.0, 1.1)
  assert dims.regular <= dims.hat
  assert dims.regular == pytest.approx(min(legendre_F(gc24_source, a).F for a in (1.0, 1.1)), abs=1e-9)


def test_level_set_errors(gc24_source):
  with pytest.raises(LevelSetEmptyError):
    dim_level_sets(gc24_source, 5.0, 6.0)
  with pytest.raises(PreconditionError):
    dim_level_sets(gc24_source, -1.0, 1.0)


def test_dim_hat_zero(gc24_source):
  assert dim_hat_zero(gc24_source, 1.0) == pytest.approx(legendre_F(gc24_source, 1.0).F)


def test_pointwise_bound_above_spectrum(gc24):
  oracle = OracleSource(gc24)
  rows, best = pointwise_dimension_bound(oracle, 1.2)
  F = legendre_F(oracle, 1.2).F
  assert F - 1e-9 <= best <= F + 1e-2
  assert len(rows) == 81
  with pytest.raises(PreconditionError):
    pointwise_dimension_bound(oracle, 0.0)


@pytest.mark.slow
def test_Fm_ladder(mp1, mp1_source):
  table = check_Fm_convergence(mp1, 0.5, full_source=mp1_source)
  assert table.nondecreasing
  assert table.gap < 0.05


def test_interior_alpha_attained(gc24_source):
  bounds = alpha_bounds(gc24_source)
  value = legendre_F(gc24_source, 1.0, bounds)
  assert value.attained
  assert not legendre_F(gc24_source, bounds.alpha_plus, bounds).attained
  assert legendre_F(gc24_source, bounds.alpha_plus + 0.1, bounds).F == -math.inf


def test_Fm_outside_subsystem_range(mp1):
  table = check_Fm_convergence(mp1, 0.5, m_ladder=(2,), depth=8)
  assert alpha_bounds(PressureSource(subsystem(mp1, 2), depth=8)).alpha_minus > 0.5
  assert table.rows[0]['F'] == -math.inf
  assert table.rows[0]['err'] == 0.0
  assert math.isfinite(table.F)
