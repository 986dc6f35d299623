"""Invariant suite and acceptance checks, one printed line per check.

`run_selftest` returns the process exit status: 0 when every check passes.
"""

import logging
import math
import time

import numpy as np

from entropy import EPSILON_LADDER, capacitive_entropy, zero_exponent_report
from maps import builtin_map, cylinder_tree, tiling_error, word_log_deriv_sum
from measures import MarkovGibbs
from pressure import (OracleSource, PressureSource, check_Pm_convergence, d_zero, pressure_curve,
                      pressure_matrix_oracle)
from spectrum import bernoulli_spectrum, check_Fm_convergence, dim_level_sets, legendre_F, spectrum_curve
from wmeasure import acceptance_fraction, build_schedule, sample_many, sample_w_word, verify_oscillation

logger = logging.getLogger(__name__)

GOLDEN_D0 = math.log((1 + math.sqrt(5)) / 2) / math.log(2)
Q_NINE = math.log2(9)


class Checks:
  """Collects named checks; each check is a callable returning (ok, detail)."""

  def __init__(self):
    self.results = []
    self._cache = {}

  def source(self, name, depth=None):
    key = (name, depth)
    if key not in self._cache:
      self._cache[key] = PressureSource(builtin_map(name), depth=depth)
    return self._cache[key]

  def run(self, name, fn):
    start = time.time()
    try:
      ok, detail = fn()
    except Exception as exc:  # a crashing check is a failing check
      ok, detail = False, f"{type(exc).__name__}: {exc}"
    elapsed = time.time() - start
    self.results.append((name, bool(ok)))
    print(f"{'✅ PASS' if ok else '❌ FAIL'}  {name:<40s} {detail}  ({elapsed:.1f}s)")
    return ok


# ---------------------------------------------------------------------------
# acceptance

def check_pressure_oracle(checks):
  worst = 0.0
  for name in ('gc24', 'fib22'):
    src = checks.source(name)
    for d in (-2.0, -1.0, 0.0, 0.5, 1.0, 2.0):
      est = src.estimate(d)
      exact = pressure_matrix_oracle(src.model, d)
      if not est.lower - 1e-12 <= exact <= est.upper + 1e-12:
        return False, f"{name} d={d}: oracle {exact} outside [{est.lower}, {est.upper}]"
      worst = max(worst, abs(est.value - exact))
  return worst <= 1e-6, f"max |P - oracle| = {worst:.2e}"


def check_d_zero(checks):
  gc = d_zero(checks.source('gc24'))
  dbl = d_zero(checks.source('doubling'))
  mp = d_zero(checks.source('mp1'))
  ok = (gc.contains(GOLDEN_D0) and gc.width <= 1e-3 + 1e-12 and abs(dbl.estimate - 1.0) <= 1e-9
        and mp.contains(1.0) and mp.width <= 2e-2)
  return ok, f"gc24 {gc.estimate:.6f}±{gc.width / 2:.1e}, doubling {dbl.estimate:.9f}, mp1 [{mp.lo:.4f}, {mp.hi:.4f}]"


def check_legendre(checks):
  src = checks.source('gc24')
  worst = 0.0
  for p in np.linspace(0.05, 0.95, 20):
    alpha, dim = bernoulli_spectrum((2.0, 4.0), (p, 1 - p))
    worst = max(worst, abs(legendre_F(src, alpha).F - dim))
  ends = max(legendre_F(src, math.log(2)).F, legendre_F(src, math.log(4)).F)
  curve = spectrum_curve(src)
  peak = float(np.max(curve.F))
  ok = worst <= 1e-6 and ends <= 1e-3 and curve.d0.lo - 1e-9 <= peak <= curve.d0.hi + 1e-9
  return ok, f"max |F - Bernoulli| = {worst:.2e}, endpoints {ends:.1e}, max F {peak:.6f}"


def check_ladders(checks):
  full = checks.source('mp1')
  model = full.model
  for d in np.linspace(-1.0, 2.0, 7):
    table = check_Pm_convergence(model, d, full_source=full)
    if not table.nondecreasing:
      return False, f"P_m({d:g}) not nondecreasing: {[round(r.value, 5) for r in table.rows]}"
  fm = check_Fm_convergence(model, 0.5, full_source=full)
  return fm.nondecreasing and fm.gap < 0.05, f"F_m(0.5) = {[round(r['F'], 4) for r in fm.rows]}, gap {fm.gap:.3f}"


def check_level_sets(checks):
  src = checks.source('gc24')
  dims = dim_level_sets(src, math.log(2), math.log(4))
  dz = d_zero(src)
  ok = dz.lo - 1e-9 <= dims.hat <= dz.hi + 1e-9 and abs(dims.regular) <= 1e-3
  return ok, f"(max F, min F) = ({dims.hat:.6f}, {dims.regular:.1e})"


def alternating_schedule():
  return build_schedule(builtin_map('gc24'), [{'q': Q_NINE}, {'q': -Q_NINE}],
                        m=[10 ** k for k in range(2, 7)], name='gc24_alternating')


def check_wsampler(checks, seeds=20):
  schedule = alternating_schedule()
  traces = sample_many(schedule, range(seeds))
  fraction, reports = acceptance_fraction(traces, schedule)
  floors = sum(r.floor_holds for r in reports) / len(reports)
  return fraction >= 0.9 and floors >= 0.9, f"{fraction:.0%} of seeds within 10%, H/L floor held in {floors:.0%}"


def check_entropy_ladder(checks):
  report = zero_exponent_report(builtin_map('mp1'), EPSILON_LADDER, source=checks.source('mp1'))
  ok = all(c.within_bound and c.certified for c in report.covers) and report.bounds_decrease
  return ok, f"slopes {[round(c.slope, 4) for c in report.covers]} vs bounds {[round(c.bound, 4) for c in report.covers]}"


def check_zero_exponent_dimension(checks):
  details = []
  for name in ('mp05', 'mp1'):
    report = zero_exponent_report(builtin_map(name), epsilons=(0.2,), depths=range(6, 10), source=checks.source(name))
    if not report.F0_contains_dimension:
      return False, f"{name}: F(0) bracket [{report.d0_lo}, {report.d0_hi}] misses 1"
    details.append(f"{name} [{report.d0_lo:.4f}, {report.d0_hi:.4f}]")
  gc = zero_exponent_report(builtin_map('gc24'), source=checks.source('gc24'))
  return gc.empty, ', '.join(details) + f", gc24 empty={gc.empty}"


# ---------------------------------------------------------------------------
# invariants

def check_tiling(checks):
  worst = max(tiling_error(builtin_map(name), 10) for name in ('doubling', 'mp1', 'mp05'))
  return worst <= 1e-8, f"max tiling error {worst:.1e}"


def check_chain_rule(checks):
  model = builtin_map('mp1')
  level = cylinder_tree(model, 8, keep_words=True).levels[-1]
  # the cylinder endpoints are grid points, so forward sums there fall inside [smin, smax]
  worst = 0.0
  for k in range(0, len(level), 17):
    for x in (level.lo[k], level.hi[k]):
      s = word_log_deriv_sum(model, level.words[k], x)
      worst = max(worst, level.smin[k] - s, s - level.smax[k])
  return worst <= 1e-9, f"max excursion of forward sums {worst:.1e}"


def check_pressure_shape(checks):
  curve = pressure_curve(checks.source('gc24'))
  violation = curve.convexity_violation()
  return curve.is_monotone() and violation <= 1e-9, f"convexity violation {violation:.1e}"


def check_equilibrium_identity(checks):
  model = builtin_map('fib22')
  oracle = OracleSource(model)
  worst = 0.0
  for q in np.linspace(-3.0, 3.0, 13):
    mu = MarkovGibbs(model, model.shift, q)
    worst = max(worst, abs(mu.entropy - q * mu.exponent - oracle.value(q)))
  return worst <= 1e-8, f"max |h - qχ - P(q)| = {worst:.1e}"


def check_determinism(checks):
  schedule = build_schedule(builtin_map('gc24'), [{'q': 0.0}], m=[10 ** 4])
  a, b = sample_w_word(schedule, 7), sample_w_word(schedule, 7)
  same = np.array_equal(a.word, b.word) and a.checkpoints == b.checkpoints
  return same, "identical traces for seed 7" if same else "traces differ"


def check_capacitive(checks):
  gc = capacitive_entropy(builtin_map('gc24'))
  fib = capacitive_entropy(builtin_map('fib22'))
  golden = math.log((1 + math.sqrt(5)) / 2)
  ok = abs(gc.lower - math.log(2)) < 1e-12 and abs(gc.upper - math.log(2)) < 1e-12 and abs(fib.upper - golden) < 1e-4
  return ok, f"gc24 {gc.upper:.6f}, fib22 [{fib.lower:.6f}, {fib.upper:.6f}]"


def check_constant_schedule(checks):
  schedule = build_schedule(builtin_map('gc24'), [{'q': 0.0}], m=[10 ** 5])
  trace = sample_w_word(schedule, 1)
  report = verify_oscillation(trace, schedule, window_from=10 ** 4)
  L, H = trace.stage_L[-1], trace.stage_H[-1]
  ok = abs(L / (1.5 * math.log(2)) - 1) < 0.02 and abs(H / math.log(2) - 1) < 0.02
  return ok, f"L = {L:.5f}, H = {H:.5f}, window residual {report.max_L_window_residual:.3f}"


QUICK = [
  ('pressure oracle (gc24, fib22)', check_pressure_oracle),
  ('d0 roots', check_d_zero),
  ('Legendre vs Bernoulli (gc24)', check_legendre),
  ('level-set endpoints (gc24)', check_level_sets),
  ('tiling', check_tiling),
  ('chain rule', check_chain_rule),
  ('pressure convex and decreasing', check_pressure_shape),
  ('equilibrium identity (fib22)', check_equilibrium_identity),
  ('capacitive entropy', check_capacitive),
  ('determinism', check_determinism),
  ('constant schedule (gc24)', check_constant_schedule),
  ('F(0) contains dim (mp05, mp1)', check_zero_exponent_dimension),
]
SLOW = [
  ('P_m and F_m ladders (mp1)', check_ladders),
  ('w-sampler oscillation (gc24)', check_wsampler),
  ('zero-exponent entropy ladder (mp1)', check_entropy_ladder),
]


def run_selftest(quick=False):
  print("🧪 lyapspec selftest")
  print("=" * 60)
  checks = Checks()
  for name, fn in QUICK + ([] if quick else SLOW):
    checks.run(name, lambda fn=fn: fn(checks))
  failed = [name for name, ok in checks.results if not ok]
  print("=" * 60)
  if failed:
    print(f"❌ {len(failed)} of {len(checks.results)} checks failed: {', '.join(failed)}")
    return 1
  print(f"✅ all {len(checks.results)} checks passed")
  return 0
