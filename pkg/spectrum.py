"""Lyapunov spectrum F(α) = (1/α)·inf_d (P(d) + α·d) and the level-set dimension formulas."""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import xlogy
from tqdm import tqdm

from config import D_BIG, TOLERANCES
from errors import DegenerateModelError, LevelSetEmptyError, PreconditionError
from pressure import (AlphaBounds, DZero, PressureSource, alpha_bounds, d_zero, degeneracy_test,
                      pressure_source, subsystem)

logger = logging.getLogger(__name__)

EDGE_TOL = 1e-6


@dataclass
class LegendreValue:
  alpha: float
  F: float
  minimizer: float
  attained: bool

  @property
  def limit_value(self):
    return not self.attained


def legendre_F(source, alpha, bounds: Optional[AlphaBounds] = None, d_big=D_BIG) -> LegendreValue:
  """F(α) by bounded Brent search of the convex map d -> P(d) + α·d on [-d_big, d_big].

  Returns the -inf sentinel when α lies outside [α⁻, α⁺] (computed when `bounds` is
  not given). `attained` is False at the spectrum endpoints, where the objective
  flattens out and the infimum is a limit, and whenever the minimiser pins to the
  search boundary.
  """
  if not alpha > 0:
    raise PreconditionError(f"legendre_F needs α > 0, got {alpha}; F(0) is d0")
  source = pressure_source(source)
  bounds = bounds or alpha_bounds(source, d_big=d_big)
  if not bounds.alpha_minus - EDGE_TOL <= alpha <= bounds.alpha_plus + EDGE_TOL:
    return LegendreValue(float(alpha), -math.inf, math.nan, False)
  interior = bounds.alpha_minus + EDGE_TOL < alpha < bounds.alpha_plus - EDGE_TOL
  objective = lambda d: source.value(d) + alpha * d
  res = minimize_scalar(objective, bounds=(-d_big, d_big), method='bounded',
                        options={'xatol': TOLERANCES['legendre_x']})
  d_star, best = float(res.x), float(res.fun)
  for edge in (-d_big, d_big):
    val = objective(edge)
    if val < best:
      d_star, best = edge, val
  attained = interior and abs(d_star) < d_big - 1e-3
  return LegendreValue(float(alpha), best / alpha, d_star, attained)


def duality_residual(source, value: LegendreValue, h=1e-4):
  """|P'(d*) + α| by central differences; small inside the spectrum."""
  source = pressure_source(source)
  d = value.minimizer
  slope = (source.value(d + h) - source.value(d - h)) / (2 * h)
  return abs(slope + value.alpha)


@dataclass
class SpectrumCurve:
  alpha: np.ndarray
  F: np.ndarray
  minimizer: np.ndarray
  attained: np.ndarray
  alpha_minus: float
  alpha_plus: float
  d0: DZero
  case: str
  alpha_plateau: Optional[float] = None
  derivative_at_d0: Optional[float] = None

  @property
  def F0(self):
    return self.d0.estimate

  def rows(self):
    return [{'alpha': a, 'F': f, 'minimizer_d': d, 'attained_flag': bool(t)}
            for a, f, d, t in zip(self.alpha, self.F, self.minimizer, self.attained)]

  def side_file(self):
    return {'alpha_minus': self.alpha_minus, 'alpha_plus': self.alpha_plus,
            'd0_lo': self.d0.lo, 'd0_hi': self.d0.hi, 'd0': self.d0.estimate,
            'case': self.case, 'alpha_plateau': self.alpha_plateau,
            'derivative_at_d0': self.derivative_at_d0}

  def concavity_violation(self):
    finite = np.isfinite(self.F)
    f = self.F[finite]
    if len(f) < 3:
      return 0.0
    return float(np.max(0.5 * (f[:-2] + f[2:]) - f[1:-1]))


def _is_parabolic(source, bounds):
  return bool(getattr(source.model, 'is_parabolic', False) or bounds.alpha_minus < EDGE_TOL)


def classify_case(source, d0: DZero, parabolic, step=None, threshold=None):
  """('hyperbolic' | 'parabolic-I' | 'parabolic-II', α_plateau, P'(d0-))."""
  step = step or TOLERANCES['derivative_step']
  threshold = threshold or TOLERANCES['case_threshold']
  source = pressure_source(source)
  derivative = (source.value(d0.estimate) - source.value(d0.estimate - step)) / step
  if not parabolic:
    return 'hyperbolic', None, derivative
  if abs(derivative) < threshold:
    return 'parabolic-I', None, derivative
  return 'parabolic-II', -derivative, derivative


def spectrum_curve(source, alpha_steps=41) -> SpectrumCurve:
  """F on an α grid over [α⁻, α⁺] with d0, endpoints and the Case I/II tag."""
  source = pressure_source(source)
  if degeneracy_test(source):
    raise DegenerateModelError(
      f"{source.name}: log|f'| is cohomologous to a constant, so every point has the same "
      "Lyapunov exponent and there is no spectrum to compute")
  bounds = alpha_bounds(source)
  d0 = d_zero(source)
  parabolic = _is_parabolic(source, bounds)
  case, plateau, derivative = classify_case(source, d0, parabolic)
  lo = 0.0 if parabolic else bounds.alpha_minus
  grid = np.linspace(lo, bounds.alpha_plus, alpha_steps)
  values = []
  for a in tqdm(grid, desc=f"spectrum {source.name}", disable=len(grid) < 50):
    if a <= 0:
      values.append(LegendreValue(0.0, d0.estimate, d0.estimate, False))
    else:
      values.append(legendre_F(source, a, bounds))
  curve = SpectrumCurve(
    alpha=grid,
    F=np.array([v.F for v in values]),
    minimizer=np.array([v.minimizer for v in values]),
    attained=np.array([v.attained for v in values]),
    alpha_minus=bounds.alpha_minus,
    alpha_plus=bounds.alpha_plus,
    d0=d0,
    case=case,
    alpha_plateau=plateau,
    derivative_at_d0=derivative,
  )
  logger.info(f"✅ spectrum {source.name}: case {case}, max F = {np.max(curve.F):.6f}, d0 = {d0.estimate:.6f}")
  return curve


def _F(source, a, bounds, d0):
  if a <= EDGE_TOL and bounds.alpha_minus <= EDGE_TOL:
    return d0.estimate
  return legendre_F(source, max(a, EDGE_TOL), bounds).F


@dataclass
class LevelSetDims:
  hat: float
  regular: float
  interval: tuple


def dim_level_sets(source, alpha, beta, grid_points=21) -> LevelSetDims:
  """(max F, min F) over [α, β] ∩ [α⁻, α⁺]: dim of 𝓛̂(α, β) and of 𝓛(α, β)."""
  if not (0 <= alpha <= beta and beta > 0):
    raise PreconditionError(f"need 0 <= α <= β and β > 0, got ({alpha}, {beta})")
  source = pressure_source(source)
  bounds = alpha_bounds(source)
  d0 = d_zero(source) if bounds.alpha_minus <= EDGE_TOL else None
  lo, hi = max(alpha, bounds.alpha_minus), min(beta, bounds.alpha_plus)
  if lo > hi + EDGE_TOL:
    raise LevelSetEmptyError(f"[{alpha}, {beta}] misses the spectrum [{bounds.alpha_minus:.6f}, {bounds.alpha_plus:.6f}]")
  hi = max(lo, hi)
  if hi - lo <= EDGE_TOL:
    v = _F(source, lo, bounds, d0)
    return LevelSetDims(v, v, (lo, hi))
  grid = np.linspace(lo, hi, grid_points)
  values = np.array([_F(source, a, bounds, d0) for a in grid])
  k = int(np.argmax(values))
  left, right = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
  refined = minimize_scalar(lambda a: -_F(source, a, bounds, d0), bounds=(left, right), method='bounded',
                            options={'xatol': 1e-10})
  hat = max(float(values.max()), -float(refined.fun))
  # F is concave, so its minimum over an interval sits at an end
  regular = float(min(values[0], values[-1]))
  return LevelSetDims(hat, regular, (lo, hi))


@dataclass
class FmTable:
  alpha: float
  rows: List[Dict]
  F: float

  @property
  def gap(self):
    return self.F - self.rows[-1]['F']

  @property
  def nondecreasing(self):
    return all(b['F'] >= a['F'] - (a['err'] + b['err']) for a, b in zip(self.rows, self.rows[1:]))


def check_Fm_convergence(model, alpha, m_ladder=(2, 3, 4, 5), depth=None, full_source=None) -> FmTable:
  """F_m(α) per hyperbolic subsystem against F(α) of the whole map."""
  rows = []
  for m in m_ladder:
    src = PressureSource(subsystem(model, m), depth=depth)
    val = legendre_F(src, alpha, alpha_bounds(src))
    err = src.err(val.minimizer) / alpha if math.isfinite(val.F) else 0.0
    rows.append({'m': m, 'F': val.F, 'err': err, 'minimizer_d': val.minimizer})
  full = full_source or PressureSource(model, depth=depth)
  table = FmTable(float(alpha), rows, legendre_F(full, alpha).F)
  logger.info(f"F_m({alpha:g}) = {[round(r['F'], 6) for r in rows]}, F = {table.F:.6f}, gap {table.gap:.3e}")
  return table


def dim_hat_zero(source, alpha):
  """Upper bound F(α) for points with lower exponent 0 and upper exponent >= α."""
  source = pressure_source(source)
  return legendre_F(source, alpha, alpha_bounds(source)).F


def pointwise_dimension_bound(source, q, d_grid=None):
  """Local-dimension bound P(d)/q + d of the conformal measure ν_d at points of exponent q.

  Returns (rows, min over the grid); the minimum approaches F(q) as the grid refines.
  """
  if not q > 0:
    raise PreconditionError(f"need q > 0, got {q}")
  source = pressure_source(source)
  grid = np.linspace(-4.0, 4.0, 81) if d_grid is None else np.asarray(d_grid, dtype=float)
  rows = [{'d': float(d), 'bound': source.value(d) / q + float(d)} for d in grid]
  return rows, min(r['bound'] for r in rows)


def bernoulli_spectrum(slopes, p):
  """(α, h/χ) of the Bernoulli measure p on a full shift with constant slopes."""
  p = np.asarray(p, dtype=float)
  logs = np.log(np.asarray(slopes, dtype=float))
  chi = float(p @ logs)
  h = float(-np.sum(xlogy(p, p)))
  return chi, h / chi
