import math
from types import SimpleNamespace

import numpy as np
import pytest

from conftest import GOLDEN, GOLDEN_D0, LOG2
from errors import PreconditionError
from maps import builtin_map, cylinder
from measures import (BlockGibbs, MarkovGibbs, conformal_level, conformal_mass, equilibrium_for_exponent,
                      exponent_range, gibbs_constant, gibbs_measure, gibbs_rows, jacobian_check,
                      measure_dimension)
from pressure import OracleSource, subsystem

Q_NINE = math.log2(9)


def test_uniform_measure_gc24(gc24):
  mu = gibbs_measure(gc24, 0.0)
  assert isinstance(mu, MarkovGibbs)
  assert mu.pi == pytest.approx([0.5, 0.5])
  assert mu.entropy == pytest.approx(LOG2)
  assert mu.exponent == pytest.approx(1.5 * LOG2)
  assert mu.mass('01') == pytest.approx(0.25)


def test_measure_of_maximal_dimension_gc24(gc24):
  mu = gibbs_measure(gc24, GOLDEN_D0)
  assert mu.mass('0') == pytest.approx(1 / GOLDEN, abs=1e-6)
  assert mu.mass('1') == pytest.approx(1 / GOLDEN ** 2, abs=1e-6)
  assert mu.pressure == pytest.approx(0.0, abs=1e-10)
  assert mu.dimension == pytest.approx(GOLDEN_D0, abs=1e-9)


def test_parry_measure_fibonacci(fib22):
  mu = gibbs_measure(fib22, 0.0)
  assert mu.entropy == pytest.approx(math.log(GOLDEN), abs=1e-10)
  assert mu.mass('11') == 0.0


def test_equilibrium_identity(fib22):
  oracle = OracleSource(fib22)
  for q in np.linspace(-3.0, 3.0, 10):
    mu = gibbs_measure(fib22, q)
    assert abs(mu.entropy - q * mu.exponent - oracle.value(q)) <= 1e-8


def test_solve_for_exponent(gc24):
  q, mu = equilibrium_for_exponent(gc24, 1.1 * LOG2)
  assert q == pytest.approx(Q_NINE, abs=1e-6)
  assert mu.exponent == pytest.approx(1.1 * LOG2, abs=1e-8)
  assert mu.mass('0') == pytest.approx(0.9, abs=1e-6)


def test_exponent_outside_open_interval(gc24):
  lo, hi = exponent_range(gc24)
  assert lo == pytest.approx(LOG2, abs=1e-9) and hi == pytest.approx(2 * LOG2, abs=1e-9)
  with pytest.raises(PreconditionError):
    equilibrium_for_exponent(gc24, LOG2)


def test_symbol_restriction():
  model = builtin_map('eq_exponent_triple')
  mu = gibbs_measure(model, 0.0, symbols=(0, 1))
  assert mu.mass('2') == 0.0
  assert mu.exponent == pytest.approx(1.5 * LOG2)
  _, full = equilibrium_for_exponent(model, 2 * LOG2)
  assert full.exponent == pytest.approx(2 * LOG2, abs=1e-8)


@pytest.mark.parametrize('q', [-2.0, 0.5, 3.0])
def test_gibbs_sandwich(fib22, q):
  mu = gibbs_measure(fib22, q)
  D = gibbs_constant(mu)
  assert D >= 1.0
  for word in ('0', '01', '0100', '10100101'):
    assert 1 / D - 1e-12 <= mu.gibbs_ratio(word) <= D + 1e-12


def test_level_masses_sum_to_one(fib22):
  words, masses = gibbs_measure(fib22, 1.3).level_masses(6)
  assert len(words) == 21
  assert masses.sum() == pytest.approx(1.0, abs=1e-12)


def test_gibbs_rows(gc24):
  rows = gibbs_rows(gibbs_measure(gc24, 0.0), 3)
  assert len(rows) == 8
  assert all(r['mass_center'] == pytest.approx(0.125) for r in rows)


def test_dimension_peaks_at_d0(gc24):
  dims = [gibbs_measure(gc24, q).dimension for q in np.linspace(-1.0, 2.0, 13)]
  assert max(dims) <= GOLDEN_D0 + 1e-9


def test_dimension_needs_positive_exponent():
  with pytest.raises(PreconditionError):
    measure_dimension(SimpleNamespace(entropy=0.0, exponent=0.0))


def test_parabolic_host_rejected(mp1):
  with pytest.raises(PreconditionError):
    gibbs_measure(mp1, 1.0)


def test_block_measure_on_subsystem(mp1):
  host = subsystem(mp1, 3)
  mu = gibbs_measure(host, 0.8, n_rep=6)
  assert isinstance(mu, BlockGibbs)
  assert mu.masses.sum() == pytest.approx(1.0)
  _, masses = mu.level_masses(3)
  assert masses.sum() == pytest.approx(1.0)
  assert mu.mass('000') == 0.0
  assert mu.exponent > 0 and 0 < mu.dimension < 1
  assert gibbs_constant(mu) >= 1.0


def test_block_junction_forbids_long_runs(mp1):
  mu = gibbs_measure(subsystem(mp1, 3), 0.0, n_rep=4)
  ends_in_00 = next(k for k, b in enumerate(mu.blocks) if tuple(b[-2:]) == (0, 0))
  ok = mu.admissible_after(mu.last[ends_in_00], mu.trail_run[ends_in_00])
  assert not ok[mu.first == 0].any()
  assert ok[mu.first == 1].all()


def test_conformal_masses_linear(doubling, gc24):
  entry = conformal_mass(doubling, 1.0, '0110', 0.0)
  assert entry.center == pytest.approx(1 / 16)
  assert entry.lo == entry.hi == entry.center
  entry = conformal_mass(gc24, GOLDEN_D0, '01', 0.0)
  assert entry.center == pytest.approx(cylinder(gc24, '01').length ** GOLDEN_D0)


def test_conformal_bracket_holds_lebesgue(mp1):
  for entry in conformal_level(mp1, 1.0, 5, 0.0):
    length = cylinder(mp1, entry.word).length
    assert entry.lo <= length <= entry.hi


def test_conformal_kappa_range_for_subshift(fib22):
  P = OracleSource(fib22).value(1.0)
  entry = conformal_mass(fib22, 1.0, '010', P)
  assert entry.lo < entry.hi
  assert entry.lo <= entry.center <= entry.hi * (1 + 1e-9)


def test_jacobian_relation(gc24, fib22, mp1):
  deviation, slack = jacobian_check(gc24, GOLDEN_D0, '01', 1, 0.0)
  assert deviation < 1e-12 and slack == 0.0
  deviation, _ = jacobian_check(fib22, 0.7, '01', 1, OracleSource(fib22).value(0.7))
  assert deviation < 1e-12
  deviation, slack = jacobian_check(mp1, 1.0, '01', 0, 0.0)
  assert deviation <= slack


def test_markov_level_masses_every_depth(fib22):
  mu = gibbs_measure(fib22, 0.7)
  for n in range(1, 13):
    _, masses = mu.level_masses(n)
    assert masses.sum() == pytest.approx(1.0, abs=1e-12)


def test_block_level_masses_across_junctions(mp1):
  mu = gibbs_measure(subsystem(mp1, 3), 0.8, n_rep=6)
  for n in (5, 6, 7, 11, 12):
    words, masses = mu.level_masses(n)
    assert masses.sum() == pytest.approx(1.0, abs=1e-10)
    assert (masses > 0).all()


def test_block_mass_is_consistent(mp1):
  mu = gibbs_measure(subsystem(mp1, 3), 0.8, n_rep=6)
  for word in ('011011', '110110', '001101'):
    children = [word + s for s in '01' if '000' not in word + s]
    assert sum(mu.mass(c) for c in children) == pytest.approx(mu.mass(word), rel=1e-12)
