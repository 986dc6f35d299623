"""Growth rates of cylinder counts: capacitive entropy and the zero-exponent set.

Predicates select cylinders of one depth and compose like filters:

    mask = satisfies_all(level, [full_set, level0_predicate(0.1)])

Counts use the multiplicity column of a level, so merged rows of linear models
are counted once per cylinder they stand for.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from maps import LevelSummary, MapModel, cylinder_tree, known_dimension
from pressure import d_zero, pressure_source

logger = logging.getLogger(__name__)

DEFAULT_DEPTHS = tuple(range(6, 17))
EPSILON_LADDER = (0.2, 0.1, 0.05, 0.02)
SLOPE_SLACK = 0.05
CERTIFICATE_SLACK = 2.0

Predicate = Callable[[LevelSummary], np.ndarray]


def full_set(level: LevelSummary, **params) -> np.ndarray:
  return np.ones(len(level), dtype=bool)


def level0_predicate(epsilon) -> Predicate:
  """Cylinders with |Δ_n| >= (1+ε)^{-n}, the depth-n shadow of the set L_{ε,N}."""
  if not epsilon > 0:
    raise ValueError(f"epsilon must be > 0, got {epsilon}")

  def predicate(level: LevelSummary, **params):
    return level.length >= (1.0 + epsilon) ** (-level.depth)

  predicate.__name__ = f"level0_eps{epsilon:g}"
  return predicate


def satisfies_all(level: LevelSummary, predicates: Sequence[Predicate], **params) -> np.ndarray:
  mask = np.ones(len(level), dtype=bool)
  for predicate in predicates:
    mask &= predicate(level, **params)
  return mask


def _counts(model: MapModel, predicates, depths):
  depths = sorted(int(n) for n in depths)
  tree = cylinder_tree(model, max(depths))
  counts = []
  for n in depths:
    level = tree.level(n)
    counts.append(float(level.count[satisfies_all(level, predicates)].sum()))
  return depths, np.array(counts)


def _top_half(depths, values):
  k = len(depths) // 2
  return np.asarray(depths[k:], dtype=float), np.asarray(values[k:], dtype=float)


def _slope(ns, logs):
  if len(ns) < 2:
    return 0.0
  return float(np.polyfit(ns, logs, 1)[0])


@dataclass
class CoverCount:
  epsilon: float
  depths: List[int]
  counts: List[int]
  slope: float
  bound: float
  empty: bool
  certificate: List[float] = field(default_factory=list)

  @property
  def certified(self):
    """count <= 2·|I|·(1+ε)^n at every depth."""
    return all(c <= b for c, b in zip(self.counts, self.certificate))

  @property
  def within_bound(self):
    return self.slope <= self.bound + SLOPE_SLACK

  def rows(self):
    return [{'epsilon': self.epsilon, 'n': n, 'count': c, 'bound': b}
            for n, c, b in zip(self.depths, self.counts, self.certificate)]


def level0_cover_count(model: MapModel, epsilon, depths=DEFAULT_DEPTHS) -> CoverCount:
  """Count depth-n cylinders with |Δ_n| >= (1+ε)^{-n}; fit the growth slope over the top half of the depths."""
  depths, counts = _counts(model, [level0_predicate(epsilon)], depths)
  ns, cs = _top_half(depths, counts)
  positive = cs > 0
  empty = not positive.any()
  slope = 0.0 if empty else _slope(ns[positive], np.log(cs[positive]))
  certificate = [CERTIFICATE_SLACK * model.length * (1.0 + epsilon) ** n for n in depths]
  result = CoverCount(float(epsilon), depths, [int(round(c)) for c in counts], slope,
                      math.log1p(epsilon), bool(empty), certificate)
  logger.info(f"ε = {epsilon:g}: counts {result.counts}, slope {slope:.4f} (bound {result.bound:.4f})")
  return result


@dataclass
class CapacitiveEntropy:
  lower: float
  upper: float
  fit: float
  depths: List[int]
  counts: List[int]


def capacitive_entropy(model: MapModel, predicates: Optional[Sequence[Predicate]] = None,
                       depths=DEFAULT_DEPTHS) -> CapacitiveEntropy:
  """(liminf, limsup) of the consecutive growth rates log(c_{n+1}/c_n) over the top half of the depths."""
  predicates = list(predicates) if predicates else [full_set]
  depths, counts = _counts(model, predicates, depths)
  ns, cs = _top_half(depths, counts)
  positive = cs > 0
  if positive.sum() < 2:
    return CapacitiveEntropy(0.0, 0.0, 0.0, depths, [int(c) for c in counts])
  ns, logs = ns[positive], np.log(cs[positive])
  rates = np.diff(logs) / np.diff(ns)
  return CapacitiveEntropy(float(rates.min()), float(rates.max()), _slope(ns, logs),
                           depths, [int(round(c)) for c in counts])


@dataclass
class ZeroExponentReport:
  model: str
  parabolic: bool
  d0: float
  d0_lo: float
  d0_hi: float
  F0: Optional[float]
  known_dimension: Optional[float]
  covers: List[CoverCount]
  empty: bool

  @property
  def bounds_decrease(self):
    """Measured covers shrink along the ladder: counts pointwise, fitted slopes within SLOPE_SLACK."""
    for wide, narrow in zip(self.covers, self.covers[1:]):
      if any(b > a for a, b in zip(wide.counts, narrow.counts)):
        return False
      if narrow.slope > wide.slope + SLOPE_SLACK:
        return False
    return True

  @property
  def F0_contains_dimension(self):
    if self.known_dimension is None or self.F0 is None:
      return None
    return self.d0_lo - 1e-12 <= self.known_dimension <= self.d0_hi + 1e-12

  def rows(self):
    return [row for c in self.covers for row in c.rows()]

  def summary(self) -> Dict:
    return {'model': self.model, 'parabolic': self.parabolic, 'd0': self.d0, 'd0_lo': self.d0_lo,
            'd0_hi': self.d0_hi, 'F0': self.F0, 'known_dimension': self.known_dimension,
            'level0_empty': self.empty,
            'slopes': {c.epsilon: c.slope for c in self.covers},
            'slope_bounds': {c.epsilon: c.bound for c in self.covers}}


def zero_exponent_report(model: MapModel, epsilons=EPSILON_LADDER, depths=DEFAULT_DEPTHS, source=None) -> ZeroExponentReport:
  """d0 bracket, F(0) and the entropy bounds for the zero-exponent set along an ε-ladder.

  Uniformly expanding maps have no zero-exponent points; their report is marked empty
  and carries no covers.
  """
  source = pressure_source(source or model)
  dz = d_zero(source)
  if not model.is_parabolic:
    logger.info(f"{model.name} is uniformly expanding: zero-exponent set empty")
    return ZeroExponentReport(model.name, False, dz.estimate, dz.lo, dz.hi, None,
                              known_dimension(model), [], True)
  covers = [level0_cover_count(model, eps, depths) for eps in sorted(epsilons, reverse=True)]
  report = ZeroExponentReport(model.name, True, dz.estimate, dz.lo, dz.hi, dz.estimate,
                              known_dimension(model), covers, False)
  logger.info(f"✅ {model.name}: F(0) in [{dz.lo:.6f}, {dz.hi:.6f}], slope bounds "
              f"{[round(c.bound, 4) for c in covers]}")
  return report
