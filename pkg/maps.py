"""Markov interval maps.

A `MapModel` is a finite family of increasing branches f_i: I_i -> I, each onto the
hull I, together with the subshift of allowed transitions. Inverse branches g_i
build the cylinders Δ_{i1...in} = g_{i1} ∘ ... ∘ g_{i(n-1)}(I_{in}).

Cylinder levels are produced by prepending, Δ_{iw} = g_i(Δ_w), carrying a K-point
grid per cylinder with the Birkhoff sum S_n log|f'| on it:

    S_{n+1}(g_i y) = log|f_i'(g_i y)| + S_n(y)

Piecewise linear models collapse identical cylinders (same prepending state, same
sum) into one weighted row, so deep linear levels stay cheap.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from config import GRID_POINTS, TOLERANCES, WORK_CAP, validate_map_config
from errors import ConvergenceError, ItineraryError, ModelError, PreconditionError, ResourceLimitError
from symbolic import (Subshift, TransitionMatrix, WordLevel, as_subshift, count_words, first_level,
                      format_word, parse_word, periodic_words, prepend_level, require_admissible)

logger = logging.getLogger(__name__)

# collapse linear cylinders whose sums agree to this many decimals
_MERGE_DECIMALS = 10


class AffineBranch:
  kind = 'affine'

  def __init__(self, lo, hi, slope, target_lo):
    self.lo, self.hi = float(lo), float(hi)
    self.slope = float(slope)
    self.target_lo = float(target_lo)
    self._log_slope = math.log(abs(self.slope))

  def forward(self, x):
    return self.target_lo + self.slope * (np.asarray(x, dtype=float) - self.lo)

  def deriv(self, x):
    return np.full(np.shape(x), self.slope, dtype=float)

  def log_deriv(self, x):
    return np.full(np.shape(x), self._log_slope, dtype=float)

  def inverse(self, y):
    return self.lo + (np.asarray(y, dtype=float) - self.target_lo) / self.slope

  def describe(self):
    return {'kind': self.kind, 'interval': [self.lo, self.hi], 'slope': self.slope}


class NeutralBranch:
  """f(x) = x + c·x^(1+s) - shift on [lo, hi] with lo >= 0; f'(x) = 1 + c(1+s)x^s."""
  kind = 'neutral'

  def __init__(self, lo, hi, c, s, shift=0.0):
    if lo < 0:
      raise ModelError(f"neutral branch must live on x >= 0, got [{lo}, {hi}]")
    self.lo, self.hi = float(lo), float(hi)
    self.c, self.s, self.shift = float(c), float(s), float(shift)

  def forward(self, x):
    x = np.asarray(x, dtype=float)
    return x + self.c * np.power(np.maximum(x, 0.0), 1.0 + self.s) - self.shift

  def deriv(self, x):
    x = np.asarray(x, dtype=float)
    return 1.0 + self.c * (1.0 + self.s) * np.power(np.maximum(x, 0.0), self.s)

  def log_deriv(self, x):
    x = np.asarray(x, dtype=float)
    return np.log1p(self.c * (1.0 + self.s) * np.power(np.maximum(x, 0.0), self.s))

  def inverse(self, y, tol=None, max_iter=200):
    """Safeguarded Newton from the right end; the branch is convex and increasing."""
    tol = tol or TOLERANCES['inverse']
    y = np.asarray(y, dtype=float)
    lo = np.full(y.shape, self.lo)
    hi = np.full(y.shape, self.hi)
    x = hi.copy()
    for _ in range(max_iter):
      fx = self.forward(x) - y
      hi = np.where(fx >= 0, x, hi)
      lo = np.where(fx <= 0, x, lo)
      x_new = x - fx / self.deriv(x)
      outside = (x_new < lo) | (x_new > hi)
      x_new = np.where(outside, 0.5 * (lo + hi), x_new)
      done = np.abs(x_new - x) <= tol * np.maximum(np.abs(x_new), 1e-300)
      x = x_new
      if done.all():
        return x
    raise ConvergenceError(f"inverse of neutral branch did not converge to {tol:g}")

  def describe(self):
    return {'kind': self.kind, 'interval': [self.lo, self.hi], 'c': self.c, 's': self.s,
            'shift': self.shift}


class MapModel:
  """A validated Markov interval map.

  Args:
      name: label used in logs and outputs.
      family: one of manneville_pomeau, linear_sft, parabolic_linear_blend.
      branches: one branch object per symbol, ordered left to right.
      matrix: TransitionMatrix over the symbols.
      parabolic_points: list of (symbol, x) with |f'(x)| = 1 and f(x) = x.
      params: the parameters the model was built from.
  """

  def __init__(self, name, family, branches, matrix: TransitionMatrix, parabolic_points=(), params=None):
    self.name = name
    self.family = family
    self.branches = list(branches)
    self.matrix = matrix
    self.shift = Subshift(matrix)
    self.parabolic_points = [(int(s), float(x)) for s, x in parabolic_points]
    self.params = dict(params or {})
    if len(self.branches) != matrix.size:
      raise ModelError(f"{len(self.branches)} branches but a {matrix.size}x{matrix.size} transition matrix")
    self.interval = (min(b.lo for b in self.branches), max(b.hi for b in self.branches))
    self.validate()
    gaps = sum(self.branches[i + 1].lo - self.branches[i].hi for i in range(len(self.branches) - 1))
    self.full_interval = bool(matrix.is_full and gaps <= 1e-12)

  def __repr__(self):
    return f"MapModel({self.name!r}, family={self.family}, p={self.size})"

  @property
  def size(self):
    return len(self.branches)

  @property
  def length(self):
    return self.interval[1] - self.interval[0]

  @property
  def is_linear(self):
    return all(b.kind == 'affine' for b in self.branches)

  @property
  def is_parabolic(self):
    return bool(self.parabolic_points)

  @property
  def slopes(self):
    if not self.is_linear:
      raise PreconditionError(f"{self.name} is not piecewise linear")
    return np.array([b.slope for b in self.branches])

  @property
  def parabolic_symbols(self):
    return sorted({s for s, _ in self.parabolic_points})

  def validate(self):
    tol = TOLERANCES['inverse_check']
    lo, hi = self.interval
    for i, b in enumerate(self.branches):
      if not b.hi > b.lo:
        raise ModelError(f"branch {i} has an empty interval [{b.lo}, {b.hi}]")
      if i > 0 and b.lo < self.branches[i - 1].hi - tol:
        raise ModelError(f"branch intervals {i - 1} and {i} overlap; interiors must be disjoint "
                         "and listed left to right")
    parabolic = {s: x for s, x in self.parabolic_points}
    for i, b in enumerate(self.branches):
      image = b.forward(np.array([b.lo, b.hi]))
      if abs(image[0] - lo) > 1e-9 or abs(image[1] - hi) > 1e-9:
        raise ModelError(f"branch {i} maps [{b.lo}, {b.hi}] onto [{image[0]}, {image[1]}], "
                         f"not onto the hull [{lo}, {hi}]")
      xs = np.linspace(b.lo, b.hi, 33)
      slopes = b.deriv(xs)
      if i in parabolic:
        q = parabolic[i]
        if abs(b.forward(q) - q) > tol or abs(b.deriv(q) - 1.0) > tol:
          raise ModelError(f"declared parabolic point {q} is not a fixed point with |f'| = 1 on branch {i}")
        away = np.abs(xs - q) > 1e-9
        if (slopes[away] <= 1.0).any():
          raise ModelError(f"|f'| <= 1 on branch {i} away from its parabolic point")
      elif (slopes <= 1.0).any():
        raise ModelError(f"slope <= 1 on branch {i} without a declared parabolic point")
      pulled = b.inverse(np.array([lo, hi]))
      if pulled[0] < b.lo - tol or pulled[1] > b.hi + tol:
        raise ModelError(f"inverse branch g_{i} does not map the hull into I_{i}")
      back = b.inverse(b.forward(xs))
      if np.max(np.abs(back - xs)) > tol:
        raise ModelError(f"g_{i} ∘ f_{i} differs from the identity by {np.max(np.abs(back - xs)):.2e}")

  # pointwise evaluation

  def symbol_of(self, x):
    """Branch containing x; shared endpoints go to the left branch."""
    for i, b in enumerate(self.branches):
      if b.lo <= x <= b.hi:
        return i
    return None

  def f(self, x):
    i = self.symbol_of(x)
    if i is None:
      raise ItineraryError(f"x = {x!r} lies outside every branch domain of {self.name}")
    return float(self.branches[i].forward(x))

  def forward_by(self, symbols, x):
    """Apply branch symbols[k] to x[k], vectorised."""
    return self._by_symbol(symbols, x, 'forward')

  def log_deriv_by(self, symbols, x):
    return self._by_symbol(symbols, x, 'log_deriv')

  def inverse_by(self, symbols, y):
    return self._by_symbol(symbols, y, 'inverse')

  def _by_symbol(self, symbols, x, method):
    symbols = np.asarray(symbols)
    x = np.asarray(x, dtype=float)
    out = np.empty(np.broadcast(symbols, x).shape, dtype=float)
    symbols = np.broadcast_to(symbols, out.shape)
    x = np.broadcast_to(x, out.shape)
    for i, b in enumerate(self.branches):
      mask = symbols == i
      if mask.any():
        out[mask] = getattr(b, method)(x[mask])
    return out

  def describe(self):
    return {'name': self.name, 'family': self.family, 'params': self.params,
            'branches': [b.describe() for b in self.branches],
            'matrix': self.matrix.to_rows(), 'parabolic_points': self.parabolic_points,
            'full_interval': self.full_interval}


# ---------------------------------------------------------------------------
# families

def manneville_pomeau(s, name=None):
  if not s > 0:
    raise ModelError(f"Manneville-Pomeau exponent must be positive, got s = {s}")
  split = brentq(lambda x: x + x ** (1.0 + s) - 1.0, 0.0, 1.0, xtol=1e-16, rtol=1e-15)
  branches = [NeutralBranch(0.0, split, 1.0, s, shift=0.0),
              NeutralBranch(split, 1.0, 1.0, s, shift=1.0)]
  return MapModel(name or f"manneville_pomeau(s={s:g})", 'manneville_pomeau', branches, TransitionMatrix.full(2),
                  parabolic_points=[(0, 0.0)], params={'s': s, 'branch_point': split})


def _affine_branches(slopes, branch_intervals, hull):
  if len(slopes) != len(branch_intervals):
    raise ModelError(f"{len(slopes)} slopes for {len(branch_intervals)} branch intervals")
  branches = []
  for i, (slope, interval) in enumerate(zip(slopes, branch_intervals)):
    if len(interval) != 2:
      raise ModelError(f"branch interval {i} must be [lo, hi], got {interval}")
    lo, hi = float(interval[0]), float(interval[1])
    if slope <= 1:
      raise ModelError(f"slope {slope} <= 1 on branch {i} without a declared parabolic point")
    if abs((hi - lo) * slope - (hull[1] - hull[0])) > 1e-9:
      raise ModelError(f"branch {i}: slope {slope} times |I_{i}| = {hi - lo} must equal |I| = {hull[1] - hull[0]}")
    branches.append(AffineBranch(lo, hi, slope, hull[0]))
  return branches


def linear_sft(slopes, branch_intervals, matrix=None, name=None):
  p = len(slopes)
  hull = (min(float(iv[0]) for iv in branch_intervals), max(float(iv[1]) for iv in branch_intervals))
  branches = _affine_branches(slopes, branch_intervals, hull)
  matrix = TransitionMatrix.full(p) if matrix is None else TransitionMatrix.from_rows(matrix)
  label = name or f"linear_sft(slopes={tuple(slopes)})"
  return MapModel(label, 'linear_sft', branches, matrix,
                  params={'slopes': list(slopes), 'branch_intervals': [list(iv) for iv in branch_intervals],
                          'matrix': matrix.to_rows()})


def parabolic_linear_blend(s, a, slopes, branch_intervals, matrix=None, name=None):
  """Neutral branch x + c·x^(1+s) on [0, a] onto [0, 1], then affine branches onto [0, 1]."""
  if not 0 < a < 1:
    raise ModelError(f"neutral branch end a must lie in (0, 1), got {a}")
  if not s > 0:
    raise ModelError(f"neutral exponent must be positive, got s = {s}")
  c = (1.0 - a) / a ** (1.0 + s)
  branches = [NeutralBranch(0.0, a, c, s)] + _affine_branches(slopes, branch_intervals, (0.0, 1.0))
  p = len(branches)
  matrix = TransitionMatrix.full(p) if matrix is None else TransitionMatrix.from_rows(matrix)
  return MapModel(name or f"parabolic_linear_blend(s={s:g}, a={a:g})", 'parabolic_linear_blend',
                  branches, matrix, parabolic_points=[(0, 0.0)],
                  params={'s': s, 'a': a, 'slopes': list(slopes),
                          'branch_intervals': [list(iv) for iv in branch_intervals]})


PRESETS = {
  'gc24': lambda: linear_sft((2.0, 4.0), ([0.0, 0.5], [0.75, 1.0]), name='gc24'),
  'doubling': lambda: linear_sft((2.0, 2.0), ([0.0, 0.5], [0.5, 1.0]), name='doubling'),
  'fib22': lambda: linear_sft((2.0, 2.0), ([0.0, 0.5], [0.5, 1.0]), matrix=[[1, 1], [1, 0]], name='fib22'),
  'mp1': lambda: manneville_pomeau(1.0),
  'mp05': lambda: manneville_pomeau(0.5),
  'eq_exponent_triple': lambda: linear_sft((2.0, 4.0, 8.0), ([0.0, 0.5], [0.5, 0.75], [0.875, 1.0]),
                                           name='eq_exponent_triple'),
}
PRESET_ALIASES = {'fibonacci': 'fib22', 'eq-exponent-triple': 'eq_exponent_triple'}

FAMILIES = {
  'manneville_pomeau': manneville_pomeau,
  'linear_sft': linear_sft,
  'parabolic_linear_blend': parabolic_linear_blend,
}


def builtin_map(family, **params) -> MapModel:
  """Build a map from a family name with parameters, or from a preset name."""
  family = PRESET_ALIASES.get(family, family)
  if family in PRESETS:
    if params:
      raise ModelError(f"preset '{family}' takes no parameters, got {sorted(params)}")
    model = PRESETS[family]()
  elif family in FAMILIES:
    try:
      model = FAMILIES[family](**params)
    except TypeError as exc:
      raise ModelError(f"invalid parameters for {family}: {exc}")
  else:
    raise ModelError(f"unknown map family or preset '{family}'; presets: {sorted(PRESETS)}, "
                     f"families: {sorted(FAMILIES)}")
  logger.debug(f"Built {model!r}")
  return model


def map_from_config(cfg: Dict) -> MapModel:
  cfg = validate_map_config(dict(cfg))
  family = cfg.pop('family')
  name = cfg.pop('name', None)
  if family == 'builtin':
    return builtin_map(cfg['preset'])
  if family == 'manneville_pomeau':
    return manneville_pomeau(cfg['s'], name=name)
  return builtin_map(family, name=name, **cfg)


def known_dimension(model: MapModel) -> Optional[float]:
  """dim_H of the repeller where it has a closed form, else None."""
  if model.full_interval:
    return 1.0
  if model.is_linear:
    table = model.matrix.table.astype(float)
    slopes = model.slopes

    def log_radius(d):
      weighted = table * (slopes ** (-d))[:, None]
      return math.log(max(abs(np.linalg.eigvals(weighted))))
    return brentq(log_radius, 0.0, 1.0 + 1e-12, xtol=1e-15)
  return None


# ---------------------------------------------------------------------------
# cylinders and orbits

@dataclass(frozen=True)
class Cylinder:
  word: Tuple[int, ...]
  lo: float
  hi: float

  @property
  def length(self):
    return self.hi - self.lo

  @property
  def midpoint(self):
    return 0.5 * (self.lo + self.hi)

  def contains(self, other: 'Cylinder', tol=None):
    tol = TOLERANCES['cylinder'] if tol is None else tol
    return self.lo - tol <= other.lo and other.hi <= self.hi + tol


def cylinder(model: MapModel, word, shift=None) -> Cylinder:
  word = require_admissible(shift or model.shift, word)
  if not word:
    return Cylinder((), *model.interval)
  b = model.branches[word[-1]]
  lo, hi = b.lo, b.hi
  for s in reversed(word[:-1]):
    lo, hi = model.branches[s].inverse(np.array([lo, hi]))
  return Cylinder(word, float(lo), float(hi))


def iterate(model: MapModel, x, n):
  for _ in range(n):
    x = model.f(x)
  return x


def log_deriv_sum(model: MapModel, x, n) -> Tuple[float, float]:
  """(S_n log|f'|(x), L_n(x)) along the forward orbit of x."""
  if n < 1:
    raise PreconditionError(f"need n >= 1 steps, got {n}")
  total = 0.0
  for k in range(n):
    i = model.symbol_of(x)
    if i is None:
      raise ItineraryError(f"orbit of the start point leaves every branch domain at step {k} (x = {x!r})")
    total += float(model.branches[i].log_deriv(x))
    x = float(model.branches[i].forward(x))
  return total, total / n


def word_log_deriv_sum(model: MapModel, word, x):
  """S_n log|f'| at x, following the branches named by word rather than by position."""
  total = 0.0
  for s in word:
    b = model.branches[s]
    total += float(b.log_deriv(x))
    x = float(b.forward(x))
  return total


def periodic_point(model: MapModel, word, tol=1e-15, max_iter=100000):
  """Fixed point of g_w and the Birkhoff average of log|f'| along its orbit.

  Returns (x, L) with L = S_n log|f'|(x) / n.
  """
  word = parse_word(word)
  parabolic = dict(model.parabolic_points)
  if len(set(word)) == 1 and word[0] in parabolic:
    return parabolic[word[0]], 0.0
  x = 0.5 * (model.interval[0] + model.interval[1])
  for _ in range(max_iter):
    y = x
    for s in reversed(word):
      y = float(model.branches[s].inverse(y))
    if abs(y - x) <= tol:
      x = y
      break
    x = y
  else:
    raise ConvergenceError(f"fixed point of g_{format_word(word)} not found")
  total = 0.0
  z = x
  for s in reversed(word):
    z = float(model.branches[s].inverse(z))
    total += float(model.branches[s].log_deriv(z))
  return x, total / len(word)


def fixed_points(model: MapModel, shift=None):
  """[(symbol, x, log|f'(x)|)] for every branch whose fixed point is admissible."""
  shift = as_subshift(shift or model.shift)
  out = []
  for w in periodic_words(shift, 1):
    x, rate = periodic_point(model, w)
    out.append((w[0], x, rate))
  return out


def orbit_log_derivatives(model: MapModel, word, window=40):
  """log|f'| at each position along the point coded by a long word.

  The point at position k is approximated by pulling the midpoint of I back through
  the next `window` symbols; exact for linear models.
  """
  word = np.asarray(word, dtype=np.int64)
  if model.is_linear:
    return np.log(model.slopes)[word]
  m = word.shape[0]
  z = np.full(m, 0.5 * (model.interval[0] + model.interval[1]))
  for j in range(window, 0, -1):
    idx = np.arange(m) + j - 1
    valid = idx < m
    z[valid] = model.inverse_by(word[idx[valid]], z[valid])
  return model.log_deriv_by(word, z)


@dataclass
class DistortionEstimate:
  depths: List[int]
  rho: List[float]

  def at(self, n):
    return dict(zip(self.depths, self.rho))[n]


# ---------------------------------------------------------------------------
# cylinder levels

@dataclass
class LevelSummary:
  """Per-cylinder data of one depth, as consumed by pressure and entropy.

  smin/smax are the grid extremes of S_n log|f'| on the cylinder, stilde the
  mean-value exponent log(|I| / |Δ_w|), count the multiplicity of a row.
  """
  depth: int
  first: np.ndarray
  run: np.ndarray
  count: np.ndarray
  smin: np.ndarray
  smax: np.ndarray
  stilde: np.ndarray
  length: np.ndarray
  words: Optional[np.ndarray] = None
  lo: Optional[np.ndarray] = None
  hi: Optional[np.ndarray] = None

  def __len__(self):
    return self.first.shape[0]

  @property
  def total(self):
    return int(self.count.sum())

  @property
  def rho(self):
    return float(np.max(self.smax - self.smin)) / self.depth


class CylinderTree:
  """All cylinders of a model (or of one of its subshifts) up to some depth.

  Args:
      model: the map.
      shift: a Subshift of model.shift (default: the model's own).
      grid: points per cylinder, endpoints included.
      keep_words: store words and endpoints (disables merging of linear rows).
  """

  def __init__(self, model: MapModel, shift=None, grid=None, keep_words=False):
    self.model = model
    self.shift = as_subshift(shift or model.shift)
    self.merge = model.is_linear and not keep_words
    self.grid = 2 if model.is_linear else int(grid or GRID_POINTS)
    self.keep_words = keep_words
    self.levels: List[LevelSummary] = []
    self._words = None
    self._x = None
    self._s = None

  @property
  def depth(self):
    return len(self.levels)

  def level(self, n) -> LevelSummary:
    self.extend(n)
    return self.levels[n - 1]

  def extend(self, depth):
    if depth <= self.depth:
      return self
    if not self.merge:
      work = count_words(self.shift, depth)
      if work > WORK_CAP:
        raise ResourceLimitError(f"depth {depth} needs {work} cylinders, above the work cap {WORK_CAP}")
    if not self.levels:
      self._first_level()
    while self.depth < depth:
      self._next_level()
    return self

  def _first_level(self):
    model = self.model
    level = first_level(self.shift)
    syms = level.first
    xs = np.stack([np.linspace(model.branches[s].lo, model.branches[s].hi, self.grid) for s in syms])
    svals = model.log_deriv_by(syms[:, None], xs)
    self._words = level
    self._x = xs
    self._s = svals
    self._lo = xs[:, 0].copy()
    self._hi = xs[:, -1].copy()
    self._count = np.ones(len(syms), dtype=float)
    self._record(1)

  def _next_level(self):
    model = self.model
    level = self._words
    blocks, xs, ss, los, his, counts = [], [], [], [], [], []
    for s, mask, block in prepend_level(self.shift, level):
      b = model.branches[s]
      x_new = b.inverse(self._x[mask])
      xs.append(x_new)
      ss.append(b.log_deriv(x_new) + self._s[mask])
      los.append(b.inverse(self._lo[mask]))
      his.append(b.inverse(self._hi[mask]))
      counts.append(self._count[mask])
      blocks.append(block)
    self._words = WordLevel(np.concatenate([blk.words for blk in blocks]) if self.keep_words
                            else np.zeros((sum(len(blk) for blk in blocks), 0), dtype=np.int64),
                            np.concatenate([blk.first for blk in blocks]),
                            np.concatenate([blk.run for blk in blocks]))
    self._x = np.concatenate(xs)
    self._s = np.concatenate(ss)
    self._lo = np.concatenate(los)
    self._hi = np.concatenate(his)
    self._count = np.concatenate(counts)
    if self.merge:
      self._merge_rows()
    self._record(self.depth + 1)

  def _merge_rows(self):
    key = np.column_stack([self._words.first, self._words.run,
                           np.round(self._s[:, 0], _MERGE_DECIMALS)])
    _, first_idx, inverse = np.unique(key, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    counts = np.bincount(inverse, weights=self._count)
    self._words = WordLevel(np.zeros((len(first_idx), 0), dtype=np.int64),
                            self._words.first[first_idx], self._words.run[first_idx])
    self._x = self._x[first_idx]
    self._s = self._s[first_idx]
    self._lo = self._lo[first_idx]
    self._hi = self._hi[first_idx]
    self._count = counts

  def _record(self, depth):
    model = self.model
    if self.merge:
      stilde = self._s[:, 0].copy()
      length = model.length * np.exp(-stilde)
    else:
      length = self._hi - self._lo
      stilde = np.log(model.length / length)
    summary = LevelSummary(
      depth=depth,
      first=self._words.first.copy(),
      run=self._words.run.copy(),
      count=self._count.copy(),
      smin=self._s.min(axis=1),
      smax=self._s.max(axis=1),
      stilde=stilde,
      length=length,
    )
    if self.keep_words:
      summary.words = self._words.words.copy()
      summary.lo = self._lo.copy()
      summary.hi = self._hi.copy()
    self.levels.append(summary)
    logger.debug(f"{model.name}: depth {depth}, {len(summary)} rows, {summary.total} cylinders")


def cylinder_tree(model: MapModel, depth, shift=None, grid=None, keep_words=False) -> CylinderTree:
  return CylinderTree(model, shift=shift, grid=grid, keep_words=keep_words).extend(depth)


def estimate_distortion(model: MapModel, depths: Sequence[int], shift=None, grid=None) -> DistortionEstimate:
  """ρ̂_n = max over depth-n cylinders of (max - min of S_n log|f'| on the grid) / n."""
  depths = sorted(int(n) for n in depths)
  tree = cylinder_tree(model, max(depths), shift=shift, grid=grid)
  return DistortionEstimate(depths, [tree.levels[n - 1].rho for n in depths])


def tiling_error(model: MapModel, n, tree=None) -> float:
  """| Σ |Δ_w| - |I| | over the depth-n cylinders of a full-interval model."""
  level = (tree or cylinder_tree(model, n)).level(n)
  return abs(float(np.sum(level.length * level.count)) - model.length)


def mean_value_violation(level: LevelSummary) -> float:
  """How far the mean-value exponent leaves [smin - nρ̂, smax + nρ̂]; 0 when consistent."""
  slack = level.depth * level.rho
  below = (level.smin - slack) - level.stilde
  above = level.stilde - (level.smax + slack)
  return float(max(0.0, below.max(), above.max()))


def detect_zero_exponent_membership(model: MapModel, word, n) -> float:
  """r_n = (1/n) log|Δ_n| for the first n symbols of word.

  A word shorter than n is repeated periodically.
  """
  word = parse_word(word)
  if not word:
    raise PreconditionError("need a non-empty word")
  if len(word) < n:
    word = (word * (n // len(word) + 1))[:n]
  cyl = cylinder(model, word[:n])
  return math.log(cyl.length) / n
