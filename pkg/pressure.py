"""Topological pressure of φ_d = -d·log|f'|.

Cylinder sums are cached per depth in a `PressureSource`; any d then costs one
log-sum-exp per ladder depth. Three kinds of certified bounds are combined:

* full shifts: per-word max-sums are submultiplicative and min-sums
  supermultiplicative, so (1/n)·log of each brackets P at every depth;
* other subshifts: Collatz-Wielandt ratios of per-state partial sums, exact for
  piecewise linear maps;
* periodic orbits: P(d) >= -d·log|f'(q)| for every admissible fixed point q.

The reported value is the 1/n extrapolation of the mean-value sums
(1/n)·log Σ_w exp(-d·S̃_w), clipped into the tightest bracket.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.special import logsumexp
from tqdm import tqdm

from config import D_BIG, LADDER_START, LINEAR_PRESSURE_DEPTH, PRESSURE_DEPTH, TOLERANCES
from errors import ConvergenceError, ModelError, PreconditionError
from maps import CylinderTree, MapModel, cylinder_tree, fixed_points, periodic_point
from symbolic import Subshift, as_subshift, enumerate_words, is_admissible, periodic_words

logger = logging.getLogger(__name__)

FIT_POINTS = 4
ZERO_TOL = 1e-12


class Subsystem:
  """Hyperbolic subsystem Λ_m: the parent map restricted to words avoiding q^m
  for every parabolic symbol q."""

  def __init__(self, parent: MapModel, m: int):
    if not parent.is_parabolic:
      raise PreconditionError(f"{parent.name} has no parabolic point to truncate")
    if m < 2:
      raise PreconditionError(f"truncation level must be >= 2, got {m}")
    self.parent = parent
    self.m = int(m)
    try:
      self.shift = Subshift(parent.matrix, run_symbols=parent.parabolic_symbols, run_length=m)
    except ModelError as exc:
      raise ModelError(f"truncation at m = {m} empties the system: {exc}")
    self.min_log_deriv, self.min_block_sum = self._hyperbolicity()
    self.uniformly_hyperbolic = self.min_log_deriv > 0

  def __repr__(self):
    return f"Subsystem({self.parent.name}, m={self.m})"

  @property
  def model(self):
    return self.parent

  @property
  def name(self):
    return f"{self.parent.name}|m={self.m}"

  @property
  def is_linear(self):
    return self.parent.is_linear

  def _hyperbolicity(self):
    tree = cylinder_tree(self.parent, self.m, shift=self.shift, keep_words=True)
    level = tree.levels[-1]
    firsts = level.words[:, 0]
    ends = np.stack([level.lo, level.hi], axis=1)
    single = self.parent.log_deriv_by(firsts[:, None], ends)
    return float(single.min()), float(level.smin.min())

  def contains_words_of(self, other: 'Subsystem', n):
    """True if every admissible word of `other` at depth n is admissible here."""
    return all(is_admissible(self.shift, w) for w in enumerate_words(other.shift, n))


def subsystem(model: MapModel, m: int) -> Subsystem:
  sub = Subsystem(model, m)
  if not sub.uniformly_hyperbolic:
    logger.warning(f"⚠️  {sub.name}: min log|f'| = {sub.min_log_deriv:.3g} on surviving cylinders")
  return sub


def resolve_target(target) -> Tuple[MapModel, Subshift]:
  if isinstance(target, Subsystem):
    return target.parent, target.shift
  if isinstance(target, MapModel):
    return target, target.shift
  if isinstance(target, tuple) and len(target) == 2:
    return target[0], as_subshift(target[1])
  raise TypeError(f"expected a MapModel, Subsystem or (model, shift) pair, got {type(target).__name__}")


def target_name(target):
  model, shift = resolve_target(target)
  return target.name if isinstance(target, Subsystem) else (
    model.name if shift is model.shift else f"{model.name}|{shift!r}")


@dataclass
class PressureEstimate:
  d: float
  value: float
  err: float
  lower: float
  upper: float
  depth: int
  fit_residual: float = 0.0
  warning: Optional[str] = None
  mids: Dict[int, float] = field(default_factory=dict)

  @property
  def width(self):
    return self.upper - self.lower


def _weighted_lse(values, counts):
  return float(logsumexp(values, b=counts))


class PressureSource:
  """Cached cylinder sums of a map or subsystem at every ladder depth.

  Args:
      target: MapModel, Subsystem or (model, shift).
      depth: deepest level (default 14 for nonlinear, 20 for linear models).
      grid: grid points per cylinder for nonlinear models.
  """

  def __init__(self, target, depth=None, grid=None, ladder_start=LADDER_START, progress=False):
    self.target = target
    self.model, self.shift = resolve_target(target)
    self.is_linear = self.model.is_linear
    self.depth = int(depth or (LINEAR_PRESSURE_DEPTH if self.is_linear else PRESSURE_DEPTH))
    self.ladder = list(range(min(ladder_start, self.depth), self.depth + 1))
    self.tree = CylinderTree(self.model, shift=self.shift, grid=grid)
    depths = range(1, self.depth + 1)
    for n in tqdm(depths, desc=f"cylinders {target_name(target)}", disable=not progress):
      self.tree.extend(n)
    self.periodic_rates = [rate for _, _, rate in fixed_points(self.model, self.shift)]
    self._state_keys = {n: self._state_index(self.tree.levels[n - 1]) for n in self.ladder}
    if self.ladder[0] > 1:
      prev = self.ladder[0] - 1
      self._state_keys[prev] = self._state_index(self.tree.levels[prev - 1])
    self._cache = {}
    self._bounds = {}
    logger.debug(f"PressureSource {target_name(target)} ready, depth {self.depth}")

  @property
  def name(self):
    return target_name(self.target)

  def _state_index(self, level):
    index = {st: k for k, st in enumerate(self.shift.states)}
    return np.array([index[(int(f), int(r))] for f, r in zip(level.first, level.run)], dtype=np.int64)

  # raw sums

  def mid(self, d, n):
    """(1/n)·log Σ_w exp(-d·S̃_w), the mean-value sum at depth n."""
    level = self.tree.levels[n - 1]
    return _weighted_lse(-d * level.stilde, level.count) / n

  def word_sums(self, d, n):
    """(upper, lower) = (1/n)·log Σ_w exp(max/min of S_nφ_d over the grid on Δ_w)."""
    level = self.tree.levels[n - 1]
    hi_exp = -d * (level.smin if d >= 0 else level.smax)
    lo_exp = -d * (level.smax if d >= 0 else level.smin)
    return _weighted_lse(hi_exp, level.count) / n, _weighted_lse(lo_exp, level.count) / n

  def _state_sums(self, exponents, level, n):
    states = self._state_keys[n]
    out = np.full(len(self.shift.states), -np.inf)
    for k in np.unique(states):
      mask = states == k
      out[k] = _weighted_lse(exponents[mask], level.count[mask])
    return out

  def certificate(self, d, n):
    """Certified (upper, lower) bounds on P(d) from depth n.

    The word max-sum is an upper bound on every subshift. The word min-sum is a
    lower bound only on full shifts; other shifts need every prepending state
    present at depths n-1 and n for the Collatz-Wielandt ratios, and report no
    lower bound (-inf) at depths where some state is still missing.
    """
    upper, lower = self.word_sums(d, n)
    if self.shift.is_full_shift:
      return upper, lower
    if n < 2 or n - 1 not in self._state_keys:
      return upper, -math.inf
    level, prev = self.tree.levels[n - 1], self.tree.levels[n - 2]
    hi_now = self._state_sums(-d * (level.smin if d >= 0 else level.smax), level, n)
    hi_prev = self._state_sums(-d * (prev.smin if d >= 0 else prev.smax), prev, n - 1)
    lo_now = self._state_sums(-d * (level.smax if d >= 0 else level.smin), level, n)
    lo_prev = self._state_sums(-d * (prev.smax if d >= 0 else prev.smin), prev, n - 1)
    if not (np.isfinite(hi_now).all() and np.isfinite(hi_prev).all()):
      return upper, -math.inf
    return min(upper, float(np.max(hi_now - hi_prev))), float(np.min(lo_now - lo_prev))

  def periodic_bound(self, d):
    if not self.periodic_rates:
      return -math.inf
    return max(-d * rate for rate in self.periodic_rates)

  # estimates

  def estimate(self, d) -> PressureEstimate:
    d = float(d)
    if d in self._cache:
      return self._cache[d]
    uppers, lowers, mids = [], [], {}
    for n in self.ladder:
      up, lo = self.certificate(d, n)
      uppers.append(up)
      lowers.append(lo)
      mids[n] = self.mid(d, n)
    upper = min(uppers)
    lower = max(max(lowers), self.periodic_bound(d))

    fit_ns = np.array(self.ladder[-FIT_POINTS:], dtype=float)
    fit_vals = np.array([mids[int(n)] for n in fit_ns])
    if len(fit_ns) >= 2:
      design = np.column_stack([np.ones_like(fit_ns), 1.0 / fit_ns])
      coef, *_ = np.linalg.lstsq(design, fit_vals, rcond=None)
      intercept = float(coef[0])
      residual = float(np.max(np.abs(design @ coef - fit_vals)))
    else:
      intercept, residual = float(fit_vals[-1]), 0.0

    warning = None
    if lower > upper:
      # grid-level bounds of a nonlinear map can cross by rounding of the extremes
      warning = f"bracket inverted at d={d:g}: lower {lower:.3e} > upper {upper:.3e}"
      lower, upper = upper, lower
    value = min(max(intercept, lower), upper)
    lowers = np.array(lowers)
    bounded = np.isfinite(lowers)
    widths = np.array(uppers)[bounded] - lowers[bounded]
    growth = np.diff(widths) > 0
    for k in range(len(growth) - 2):
      if growth[k] and growth[k + 1] and growth[k + 2]:
        warning = f"bracket width grew over 3 consecutive depths at d={d:g}; pressure may not converge"
        break
    if warning:
      logger.warning(f"⚠️  {self.name}: {warning}")
    est = PressureEstimate(d=d, value=value, err=max(value - lower, upper - value) + residual,
                           lower=lower, upper=upper, depth=self.depth, fit_residual=residual,
                           warning=warning, mids=mids)
    self._cache[d] = est
    return est

  def value(self, d):
    return self.estimate(d).value

  def err(self, d):
    return self.estimate(d).err


def pressure_source(target, depth=None, grid=None, progress=False) -> PressureSource:
  if isinstance(target, (PressureSource, OracleSource)):
    return target
  return PressureSource(target, depth=depth, grid=grid, progress=progress)


def pressure_at(target, d, n) -> Tuple[float, float]:
  """(upper, lower) word sums at depth n."""
  if n < 1:
    raise PreconditionError(f"depth must be >= 1, got {n}")
  model, shift = resolve_target(target)
  src = PressureSource((model, shift), depth=n, ladder_start=n)
  return src.word_sums(d, n)


def pressure_extrapolated(target, d, depth=None) -> PressureEstimate:
  return pressure_source(target, depth=depth).estimate(d)


# ---------------------------------------------------------------------------
# exact oracle for piecewise linear models

def weighted_state_matrix(model: MapModel, shift: Subshift, d):
  """Prepending matrix of the shift weighted by λ_s^{-d} of the new first symbol."""
  slopes = model.slopes
  weights = np.array([slopes[s] ** (-d) for s, _ in shift.states])
  return shift.graph.astype(float) * weights[:, None]


def perron(matrix, tol=None, max_iter=1000000):
  """Spectral radius with right and left Perron vectors by power iteration.

  The radius is the generalised Rayleigh quotient y^T M x / y^T x of the current
  left and right iterates.
  """
  tol = tol or TOLERANCES['power_iteration']
  matrix = np.asarray(matrix, dtype=float)
  n = matrix.shape[0]
  right = np.ones(n) / n
  left = np.ones(n) / n
  radius = 0.0
  for _ in range(max_iter):
    right_new = matrix @ right
    right_new /= right_new.sum()
    left_new = left @ matrix
    left_new /= left_new.sum()
    rayleigh = float(left_new @ matrix @ right_new) / float(left_new @ right_new)
    converged = abs(rayleigh - radius) <= tol * rayleigh and np.max(np.abs(right_new - right)) <= tol
    right, left, radius = right_new, left_new, rayleigh
    if converged:
      return radius, left, right
  raise ConvergenceError(f"power iteration did not reach {tol:g}")


def pressure_matrix_oracle(target, d) -> float:
  """log of the spectral radius of the weighted transition matrix."""
  model, shift = resolve_target(target)
  if not model.is_linear:
    raise PreconditionError(f"{model.name} is not piecewise linear; no matrix oracle")
  radius, _, _ = perron(weighted_state_matrix(model, shift, d))
  return math.log(radius)


class OracleSource:
  """Exact pressure of a linear model behind the PressureSource interface."""

  def __init__(self, target):
    self.target = target
    self.model, self.shift = resolve_target(target)
    if not self.model.is_linear:
      raise PreconditionError(f"{self.model.name} is not piecewise linear; no matrix oracle")
    self.is_linear = True
    self.periodic_rates = [rate for _, _, rate in fixed_points(self.model, self.shift)]
    self._cache = {}
    self._bounds = {}

  @property
  def name(self):
    return f"oracle:{target_name(self.target)}"

  def value(self, d):
    d = float(d)
    if d not in self._cache:
      self._cache[d] = pressure_matrix_oracle(self.target, d)
    return self._cache[d]

  def err(self, d):
    return 1e-12

  def estimate(self, d):
    v = self.value(d)
    return PressureEstimate(d=float(d), value=v, err=self.err(d), lower=v, upper=v, depth=0)


# ---------------------------------------------------------------------------
# curves and derived quantities

@dataclass
class PressureCurve:
  d: np.ndarray
  estimates: List[PressureEstimate]

  @property
  def value(self):
    return np.array([e.value for e in self.estimates])

  @property
  def lower(self):
    return np.array([e.lower for e in self.estimates])

  @property
  def upper(self):
    return np.array([e.upper for e in self.estimates])

  @property
  def err(self):
    return np.array([e.err for e in self.estimates])

  def rows(self):
    return [{'d': e.d, 'P_lower': e.lower, 'P_upper': e.upper, 'P_extrapolated': e.value,
             'err': e.err, 'depth': e.depth} for e in self.estimates]

  def is_monotone(self, tol=1e-9):
    return bool((np.diff(self.upper) <= tol).all() and (np.diff(self.lower) <= tol).all())

  def convexity_violation(self):
    """Largest P(mid) - average over equally spaced triples."""
    v = self.value
    if len(v) < 3:
      return 0.0
    return float(np.max(v[1:-1] - 0.5 * (v[:-2] + v[2:])))


def default_d_grid(d_min=-4.0, d_max=4.0, steps=81, d0=None):
  grid = np.linspace(d_min, d_max, steps)
  if d0 is not None:
    grid = np.union1d(grid, d0 + np.linspace(-0.1, 0.1, 9))
  return grid


def pressure_curve(source, d_grid=None) -> PressureCurve:
  source = pressure_source(source)
  grid = np.asarray(default_d_grid() if d_grid is None else d_grid, dtype=float)
  estimates = [source.estimate(d) for d in tqdm(grid, desc='pressure curve', disable=len(grid) < 50)]
  return PressureCurve(grid, estimates)


@dataclass
class PmRow:
  m: int
  value: float
  err: float
  lower: float
  upper: float


@dataclass
class PmTable:
  d: float
  rows: List[PmRow]
  full_value: float
  full_err: float

  @property
  def gap(self):
    return self.full_value - self.rows[-1].value

  @property
  def nondecreasing(self):
    return all(b.value >= a.value - (a.err + b.err) for a, b in zip(self.rows, self.rows[1:]))


def check_Pm_convergence(model: MapModel, d, m_ladder=(2, 3, 4, 5), depth=None, full_source=None) -> PmTable:
  if not model.is_parabolic:
    raise PreconditionError(f"{model.name} has no parabolic point; P_m is the full pressure")
  rows = []
  for m in m_ladder:
    est = PressureSource(subsystem(model, m), depth=depth).estimate(d)
    rows.append(PmRow(m, est.value, est.err, est.lower, est.upper))
    if est.warning:
      logger.warning(f"⚠️  P_{m}({d:g}): {est.warning}")
  full = (full_source or PressureSource(model, depth=depth)).estimate(d)
  table = PmTable(float(d), rows, full.value, full.err)
  logger.info(f"P_m({d:g}) = {[round(r.value, 6) for r in rows]}, full {full.value:.6f}, gap {table.gap:.3e}")
  return table


@dataclass
class DZero:
  estimate: float
  lo: float
  hi: float
  roots: Dict[int, float]
  certified: bool = False

  @property
  def width(self):
    return self.hi - self.lo

  def contains(self, x):
    return self.lo <= x <= self.hi


def _mid_root(source: PressureSource, n, d_lo, d_hi, tol):
  g = lambda d: source.mid(d, n)
  lo, hi = d_lo, d_hi
  while hi - lo > tol:
    mid = 0.5 * (lo + hi)
    if g(mid) > ZERO_TOL:
      lo = mid
    else:
      hi = mid
  g_lo, g_hi = g(lo), g(hi)
  if g_lo - g_hi > 0:
    return lo + (hi - lo) * g_lo / (g_lo - g_hi)
  return 0.5 * (lo + hi)


def d_zero(source, tol=None) -> DZero:
  """Smallest zero of the pressure, with a bracket of width >= tol.

  The root of each deep mean-value sum is bisected, and the roots are
  extrapolated in 1/n like the pressure values themselves.
  """
  source = pressure_source(source)
  if isinstance(source, OracleSource):
    raise PreconditionError(f"d_zero needs cylinder sums, got {source.name}")
  tol = tol or TOLERANCES['d0']
  n_max = source.ladder[-1]
  if source.mid(0.0, n_max) <= ZERO_TOL:
    raise ConvergenceError(f"{source.name}: pressure at d = 0 is not positive")
  d_hi = 1.0
  while source.mid(d_hi, n_max) > ZERO_TOL:
    d_hi *= 2
    if d_hi > D_BIG:
      raise ConvergenceError(f"{source.name}: P(d) > 0 for every tested d up to {D_BIG:g}; d0 unbounded")
  fit_ns = source.ladder[-FIT_POINTS:]
  roots = {n: _mid_root(source, n, 0.0, d_hi, 1e-10) for n in fit_ns}
  ns = np.array(fit_ns, dtype=float)
  rs = np.array([roots[n] for n in fit_ns])
  if len(ns) >= 3:
    # roots carry a 1/n^2 term from the d-dependence of the prefactor
    design = np.column_stack([np.ones_like(ns), 1.0 / ns, 1.0 / ns ** 2])
    coef, *_ = np.linalg.lstsq(design, rs, rcond=None)
    estimate = float(coef[0])
    residual = float(np.max(np.abs(design @ coef - rs)))
  else:
    estimate, residual = float(rs[-1]), 0.0
  half = max(0.5 * tol, 4.0 * residual, 1e-9)
  lo, hi = _sign_bracket(source, estimate - half, estimate + half, half)
  certified = source.estimate(lo).lower > 0 and source.estimate(hi).upper <= ZERO_TOL
  result = DZero(estimate, lo, hi, roots, certified)
  if result.width > tol:
    logger.warning(f"⚠️  d0({source.name}) bracket width {result.width:.3e} exceeds {tol:g}")
  logger.info(f"✅ d0({source.name}) = {estimate:.6f}, bracket [{lo:.6f}, {hi:.6f}], "
              f"sign certified: {certified}")
  return result


def _sign_bracket(source, lo, hi, step, max_steps=60):
  """Widen [lo, hi] until neither end has a certified sign contradicting P(lo) >= 0 >= P(hi)."""
  for _ in range(max_steps):
    if source.estimate(lo).upper >= 0:
      break
    lo -= step
    step *= 2
  else:
    raise ConvergenceError(f"{source.name}: no d with P(d) >= 0 found below the d0 estimate")
  for _ in range(max_steps):
    if source.estimate(hi).lower <= ZERO_TOL:
      break
    hi += step
    step *= 2
  else:
    raise ConvergenceError(f"{source.name}: no d with P(d) <= 0 found above the d0 estimate")
  return lo, hi


@dataclass
class AlphaBounds:
  alpha_minus: float
  alpha_plus: float
  slope_minus: float
  slope_plus: float
  periodic_minus: float
  periodic_plus: float

  @property
  def degenerate(self):
    return self.alpha_plus - self.alpha_minus < TOLERANCES['degeneracy']


def periodic_exponents(target, max_period=4):
  model, shift = resolve_target(target)
  rates = []
  for n in range(1, max_period + 1):
    for w in periodic_words(shift, n):
      if len(w) > 1 and any(w == w[k:] + w[:k] for k in range(1, len(w))):
        continue
      rates.append(periodic_point(model, w)[1])
  return rates


def alpha_bounds(source, d_big=D_BIG, h=1.0, max_period=4) -> AlphaBounds:
  """Spectrum endpoints from the large-|d| slopes of the pressure.

  Periodic orbits give certified inner bounds: α⁻ <= min L(periodic) and
  α⁺ >= max L(periodic).
  """
  source = pressure_source(source)
  key = (float(d_big), float(h), int(max_period))
  if key in source._bounds:
    return source._bounds[key]
  slope_minus = -(source.value(d_big) - source.value(d_big - h)) / h
  slope_plus = (source.value(-d_big) - source.value(-d_big + h)) / h
  rates = periodic_exponents(source.target, max_period)
  per_minus, per_plus = min(rates), max(rates)
  bounds = AlphaBounds(min(slope_minus, per_minus), max(slope_plus, per_plus),
                       slope_minus, slope_plus, per_minus, per_plus)
  logger.info(f"α± ({source.name}) = ({bounds.alpha_minus:.6f}, {bounds.alpha_plus:.6f})")
  source._bounds[key] = bounds
  return bounds


def degeneracy_test(source, tol=None) -> bool:
  """True iff the pressure is affine on [-2, 2]: log|f'| cohomologous to a constant."""
  source = pressure_source(source)
  tol = tol or TOLERANCES['degeneracy']
  grid = np.linspace(-2.0, 2.0, 9)
  p0, p1 = source.value(0.0), source.value(1.0)
  deviation = max(abs(source.value(d) - (p0 + d * (p1 - p0))) for d in grid)
  return bool(deviation < tol)


def variational_check(source, h, chi, q):
  """|h - q·χ - P(q)| for an equilibrium state with entropy h and exponent χ."""
  return abs(h - q * chi - pressure_source(source).value(q))


def subadditivity_check(source, d, n, m):
  """(n+m)·upper(n+m) - (n·upper(n) + m·upper(m)) for the word max-sums; <= 0 expected."""
  source = pressure_source(source)
  up = lambda k: source.word_sums(d, k)[0] * k
  return up(n + m) - (up(n) + up(m))


def dimension_bound_check(source, known_dim):
  """d0 <= dim_H Λ within the d0 bracket; returns (holds, d0 bracket)."""
  dz = d_zero(source)
  return dz.lo <= known_dim + 1e-12, dz
