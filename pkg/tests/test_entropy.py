import math

import numpy as np
import pytest

from conftest import GOLDEN, LOG2
from entropy import (CoverCount, ZeroExponentReport, capacitive_entropy, full_set, level0_cover_count,
                     level0_predicate, satisfies_all, zero_exponent_report)
from maps import cylinder_tree

DEPTHS = range(6, 11)


def test_capacitive_entropy_full_shift(gc24):
  result = capacitive_entropy(gc24)
  assert result.lower == pytest.approx(LOG2, abs=1e-12)
  assert result.upper == pytest.approx(LOG2, abs=1e-12)
  assert result.counts[0] == 2 ** 6


def test_capacitive_entropy_golden_mean(fib22):
  result = capacitive_entropy(fib22)
  assert result.lower <= math.log(GOLDEN) + 1e-4
  assert result.upper == pytest.approx(math.log(GOLDEN), abs=1e-4)
  assert result.fit == pytest.approx(math.log(GOLDEN), abs=1e-3)


def test_capacitive_entropy_of_selected_cylinders(mp1):
  everything = capacitive_entropy(mp1, depths=DEPTHS)
  short = capacitive_entropy(mp1, [full_set, level0_predicate(0.2)], depths=DEPTHS)
  assert everything.upper == pytest.approx(LOG2)
  assert all(a <= b for a, b in zip(short.counts, everything.counts))


def test_predicates(mp1):
  level = cylinder_tree(mp1, 8).level(8)
  wide = satisfies_all(level, [level0_predicate(0.2)])
  narrow = satisfies_all(level, [level0_predicate(0.1)])
  assert np.all(narrow <= wide)
  assert satisfies_all(level, []).all()
  assert np.array_equal(satisfies_all(level, [full_set, level0_predicate(0.1)]), narrow)
  with pytest.raises(ValueError):
    level0_predicate(0.0)


def test_no_long_cylinders_for_uniform_expansion(doubling):
  cover = level0_cover_count(doubling, 0.1, DEPTHS)
  assert cover.empty
  assert cover.slope == 0.0
  assert cover.counts == [0] * len(DEPTHS)


def test_cover_counts_parabolic(mp1):
  loose = level0_cover_count(mp1, 0.2, DEPTHS)
  tight = level0_cover_count(mp1, 0.1, DEPTHS)
  assert all(a >= b for a, b in zip(loose.counts, tight.counts))
  assert loose.certified and tight.certified
  assert loose.bound == pytest.approx(math.log(1.2))
  assert len(loose.rows()) == len(DEPTHS)


def test_report_empty_for_hyperbolic_map(gc24, gc24_source):
  report = zero_exponent_report(gc24, source=gc24_source)
  assert report.empty and not report.parabolic
  assert report.covers == []
  assert report.F0 is None and report.F0_contains_dimension is None


def test_report_parabolic(mp1, mp1_source):
  report = zero_exponent_report(mp1, epsilons=(0.1, 0.2), depths=DEPTHS, source=mp1_source)
  assert not report.empty
  assert [c.epsilon for c in report.covers] == [0.2, 0.1]
  assert report.bounds_decrease
  assert report.F0_contains_dimension
  summary = report.summary()
  assert summary['level0_empty'] is False
  assert set(summary['slopes']) == {0.2, 0.1}


def _report(*covers):
  return ZeroExponentReport('synthetic', True, 1.0, 0.99, 1.01, 1.0, 1.0, list(covers), False)


def _cover(epsilon, counts, slope):
  return CoverCount(epsilon, [6, 7, 8], counts, slope, math.log1p(epsilon), False)


def test_bounds_decrease_rejects_growing_covers():
  wide = _cover(0.2, [10, 12, 14], 0.15)
  assert _report(wide, _cover(0.1, [8, 9, 10], 0.1)).bounds_decrease
  assert _report(wide, _cover(0.1, [8, 9, 10], 0.19)).bounds_decrease
  assert not _report(wide, _cover(0.1, [8, 9, 10], 0.25)).bounds_decrease
  assert not _report(wide, _cover(0.1, [8, 13, 14], 0.1)).bounds_decrease
