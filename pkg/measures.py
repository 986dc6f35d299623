"""Equilibrium (Gibbs) states, conformal cylinder masses and measure dimensions.

Linear hosts get exact Markov chains built from the Perron data of
M[i][j] = A[i][j]·λ_i^{-q}. Nonlinear hyperbolic subsystems get a block
measure at depth n_rep: depth-n_rep cylinders weighted by exp(-q·S̃_w) and
concatenated independently, subject to admissibility at the junctions.
"""

import functools
import logging
import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp, xlogy

from config import D_BIG, GIBBS_DEPTH, TOLERANCES
from errors import ConvergenceError, PreconditionError
from maps import MapModel, cylinder, cylinder_tree, word_log_deriv_sum
from pressure import Subsystem, perron, resolve_target, target_name
from symbolic import Subshift, format_word, parse_word, require_admissible, word_array

logger = logging.getLogger(__name__)


class MarkovGibbs:
  """Equilibrium state of φ = -q·log|f'| on a linear host, as a stationary Markov chain."""

  kind = 'markov'

  def __init__(self, model: MapModel, shift: Subshift, q):
    self.model = model
    self.shift = shift
    self.q = float(q)
    self.symbols = shift.symbols
    sym = list(self.symbols)
    log_slopes = np.log(model.slopes)[sym]
    table = model.matrix.table[np.ix_(sym, sym)].astype(float)
    weighted = table * np.exp(-self.q * log_slopes)[:, None]
    radius, left, right = perron(weighted)
    self.radius = radius
    self.pressure = math.log(radius)
    self.left, self.right = left, right
    self.log_slopes = log_slopes
    self.P = weighted * right[None, :] / (radius * right[:, None])
    self.P /= self.P.sum(axis=1, keepdims=True)
    pi = left * right
    self.pi = pi / pi.sum()
    self.entropy = float(-np.sum(self.pi[:, None] * xlogy(self.P, self.P)))
    self.exponent = float(self.pi @ log_slopes)
    # ratio μ(Δ_w) / exp(S_nψ) depends only on the first and last symbols
    norm = float(left @ right)
    ratios = np.outer(left, right * radius * np.exp(self.q * log_slopes)) / norm
    self._ratios = ratios
    self.gibbs_constant = float(max(ratios.max(), 1.0 / ratios.min()))
    self._index = {s: k for k, s in enumerate(sym)}

  def __repr__(self):
    return f"MarkovGibbs({target_name((self.model, self.shift))}, q={self.q:g})"

  @property
  def dimension(self):
    return measure_dimension(self)

  def mass(self, word):
    word = parse_word(word)
    if not word:
      return 1.0
    if any(s not in self._index for s in word):
      return 0.0
    idx = [self._index[s] for s in word]
    return float(self.pi[idx[0]] * np.prod(self.P[idx[:-1], idx[1:]]))

  def log_potential_sum(self, word):
    """S_nψ for the zero-pressure potential ψ = -q·log|f'| - P."""
    idx = [self._index[s] for s in parse_word(word)]
    return float(-self.q * self.log_slopes[idx].sum() - len(idx) * self.pressure)

  def gibbs_ratio(self, word):
    return self.mass(word) / math.exp(self.log_potential_sum(word))

  def level_masses(self, n):
    words = word_array(self.shift, n)
    idx = np.vectorize(self._index.get)(words) if n else words
    masses = self.pi[idx[:, 0]] * np.prod(self.P[idx[:, :-1], idx[:, 1:]], axis=1)
    return words, masses

  def junction_distribution(self, last_symbol):
    """First-symbol law of a new block after `last_symbol`, conditioned on admissibility."""
    allowed = np.array([self.model.matrix.table[last_symbol, s] for s in self.symbols], dtype=bool)
    weights = np.where(allowed, self.pi, 0.0)
    total = weights.sum()
    if total <= 0:
      raise PreconditionError(f"no admissible continuation after symbol {last_symbol}")
    return weights / total, total


@functools.lru_cache(maxsize=32)
def _block_level(model, shift, n_rep):
  return cylinder_tree(model, n_rep, shift=shift, keep_words=True).levels[-1]


class BlockGibbs:
  """Depth-n_rep block representation of an equilibrium state on a nonlinear host."""

  kind = 'block'

  def __init__(self, model: MapModel, shift: Subshift, q, n_rep=GIBBS_DEPTH):
    self.model = model
    self.shift = shift
    self.q = float(q)
    self.n_rep = int(n_rep)
    level = _block_level(model, shift, self.n_rep)
    self.blocks = level.words
    self.stilde = level.stilde
    logw = -self.q * level.stilde
    total = float(logsumexp(logw))
    self.log_masses = logw - total
    self.masses = np.exp(self.log_masses)
    self.pressure = total / self.n_rep
    self.entropy = float(-np.sum(self.masses * self.log_masses)) / self.n_rep
    self.exponent = float(self.masses @ level.stilde) / self.n_rep
    self.gibbs_constant = float(math.exp(abs(self.q) * np.max(level.smax - level.smin)))
    self.rho_hat = level.rho
    self.first = level.first
    self.lead_run = level.run
    self.last = self.blocks[:, -1]
    self.trail_run = self._trailing_runs()

  def __repr__(self):
    return f"BlockGibbs({target_name((self.model, self.shift))}, q={self.q:g}, n_rep={self.n_rep})"

  @property
  def dimension(self):
    return measure_dimension(self)

  def _trailing_runs(self):
    limited = set(self.shift.run_symbols)
    runs = np.zeros(len(self.blocks), dtype=np.int64)
    for k, block in enumerate(self.blocks):
      s = block[-1]
      if s in limited:
        r = 0
        while r < len(block) and block[-1 - r] == s:
          r += 1
        runs[k] = r
    return runs

  def admissible_after(self, last, trail_run):
    """Mask of blocks that may follow a block ending in `last` with that trailing run."""
    ok = self.model.matrix.table[last, self.first]
    if self.shift.run_length is not None and last in self.shift.run_symbols:
      ok = ok & ~((self.first == last) & (trail_run + self.lead_run >= self.shift.run_length))
    return ok

  def junction_law(self, state):
    """Block weights after a junction state (last symbol, trailing run); None for the first block."""
    if state is None:
      return self.masses
    return np.where(self.admissible_after(*state), self.masses, 0.0)

  def mass(self, word):
    """Prefix marginal of the block chain: every block after the first is drawn from the
    block law conditioned on admissibility at its junction."""
    word = parse_word(word)
    if not word:
      return 1.0
    total, state = 1.0, None
    for start in range(0, len(word), self.n_rep):
      chunk = np.array(word[start:start + self.n_rep])
      match = (self.blocks[:, :len(chunk)] == chunk).all(axis=1)
      weights = self.junction_law(state)
      norm = float(weights.sum())
      hit = float(weights[match].sum())
      if norm <= 0 or hit <= 0:
        return 0.0
      total *= hit / norm
      if len(chunk) == self.n_rep:
        k = int(np.flatnonzero(match)[0])
        state = (int(self.last[k]), int(self.trail_run[k]))
    return total

  def level_masses(self, n):
    words = word_array(self.shift, n)
    return words, np.array([self.mass(w) for w in words])


def _host(host, symbols=None):
  model, shift = resolve_target(host)
  if symbols is not None:
    if shift.run_symbols:
      raise PreconditionError("symbol restriction applies to linear hosts only")
    shift = Subshift(model.matrix, symbols=symbols)
  if not isinstance(host, Subsystem) and model.is_parabolic and not shift.run_symbols:
    raise PreconditionError(f"{model.name} is not uniformly hyperbolic; use a subsystem as host")
  return model, shift


def gibbs_measure(host, q, symbols=None, n_rep=GIBBS_DEPTH):
  """Equilibrium state for -q·log|f'| on a linear map (optionally a symbol subset) or a subsystem."""
  model, shift = _host(host, symbols)
  if model.is_linear:
    return MarkovGibbs(model, shift, q)
  return BlockGibbs(model, shift, q, n_rep=n_rep)


def exponent_range(host, symbols=None, q_big=D_BIG):
  """(χ(μ_{+q_big}), χ(μ_{-q_big})): the attainable exponents of the host's Gibbs family."""
  return gibbs_measure(host, q_big, symbols).exponent, gibbs_measure(host, -q_big, symbols).exponent


def equilibrium_for_exponent(host, alpha, symbols=None, tol=None, q_big=D_BIG):
  """Solve χ(μ_q) = α for q; χ is strictly decreasing in q on non-degenerate hosts."""
  tol = tol or TOLERANCES['exponent']
  lo_chi, hi_chi = exponent_range(host, symbols, q_big)
  if not lo_chi < alpha < hi_chi:
    raise PreconditionError(f"α = {alpha} outside the host's open exponent interval ({lo_chi:.9f}, {hi_chi:.9f})")
  q = brentq(lambda t: gibbs_measure(host, t, symbols).exponent - alpha, -q_big, q_big, xtol=1e-14, rtol=1e-15)
  mu = gibbs_measure(host, q, symbols)
  if abs(mu.exponent - alpha) > tol:
    raise ConvergenceError(f"|χ - α| = {abs(mu.exponent - alpha):.2e} above {tol:g}")
  return q, mu


def measure_dimension(mu):
  """h/χ of an ergodic measure."""
  if mu.exponent <= 0:
    raise PreconditionError("measure has zero Lyapunov exponent; h/χ undefined")
  return mu.entropy / mu.exponent


@dataclass
class ConformalMass:
  word: str
  center: float
  lo: float
  hi: float


def _kappa_range(model: MapModel, shift: Subshift, d, pressure):
  """Range of ν(Δ_j)·e^P·λ_j^d over symbols j for the exact conformal measure of a linear SFT."""
  if not model.is_linear or shift.is_full_shift:
    return 1.0, 1.0
  sym = list(shift.symbols)
  log_slopes = np.log(model.slopes)[sym]
  table = model.matrix.table[np.ix_(sym, sym)].astype(float)
  _, _, right = perron(table * np.exp(-d * log_slopes)[:, None])
  kappa = right / right.sum() * np.exp(pressure + d * log_slopes)
  return float(kappa.min()), float(kappa.max())


def conformal_mass(model: MapModel, d, word, pressure, rho=None, shift=None) -> ConformalMass:
  """e^{-nP}·|(f^n)'(x_mid)|^{-d} with distortion bounds e^{±max(1,|d|)·n·ρ̂_n}."""
  shift = shift or model.shift
  word = require_admissible(shift, word)
  n = len(word)
  cyl = cylinder(model, word, shift)
  s = word_log_deriv_sum(model, word, cyl.midpoint)
  center = math.exp(-n * pressure - d * s)
  if rho is None:
    rho = 0.0 if model.is_linear else cylinder_tree(model, n, shift=shift).levels[-1].rho
  slack = math.exp(max(1.0, abs(d)) * n * rho)
  k_lo, k_hi = _kappa_range(model, shift, d, pressure)
  return ConformalMass(format_word(word), center, center * k_lo / slack, center * k_hi * slack)


def conformal_level(model: MapModel, d, n, pressure, shift=None) -> List[ConformalMass]:
  """Conformal masses of every depth-n cylinder, vectorised over words."""
  shift = shift or model.shift
  level = cylinder_tree(model, n, shift=shift, keep_words=True).levels[-1]
  x = 0.5 * (level.lo + level.hi)
  s = np.zeros_like(x)
  for k in range(n):
    syms = level.words[:, k]
    s += model.log_deriv_by(syms, x)
    x = model.forward_by(syms, x)
  center = np.exp(-n * pressure - d * s)
  slack = math.exp(max(1.0, abs(d)) * n * level.rho)
  k_lo, k_hi = _kappa_range(model, shift, d, pressure)
  return [ConformalMass(format_word(w), float(c), float(c * k_lo / slack), float(c * k_hi * slack))
          for w, c in zip(level.words, center)]


def jacobian_ratio(model: MapModel, d, word, symbol, pressure):
  """ν(Δ_w) / (e^P·|f_i'|^d·ν(Δ_{iw})) from conformal centers; 1 for linear maps."""
  word = parse_word(word)
  outer = conformal_mass(model, d, word, pressure, rho=0.0)
  inner = conformal_mass(model, d, (symbol,) + word, pressure, rho=0.0)
  x = cylinder(model, (symbol,) + word).midpoint
  slope = float(model.branches[symbol].deriv(x))
  return outer.center / (math.exp(pressure) * slope ** d * inner.center)


def gibbs_constant(mu):
  """Stored Gibbs constant D >= 1 of a MarkovGibbs or BlockGibbs measure."""
  return mu.gibbs_constant


def jacobian_check(model: MapModel, d, word, symbol, pressure):
  """Deviation |log ν(Δ_w) - P - d·log|f_i'| - log ν(Δ_{iw})| and the slack allowed for it.

  Linear maps satisfy the relation exactly; nonlinear ones within 2ρ̂ at depth len(word) + 1.
  """
  ratio = jacobian_ratio(model, d, word, symbol, pressure)
  if model.is_linear:
    slack = 0.0
  else:
    n = len(parse_word(word)) + 1
    slack = 2 * max(1.0, abs(d)) * cylinder_tree(model, n).levels[-1].rho
  return abs(math.log(ratio)), slack


def mass_rows(entries: Sequence[ConformalMass]):
  return [{'word': e.word, 'mass_center': e.center, 'mass_lo': e.lo, 'mass_hi': e.hi} for e in entries]


def gibbs_rows(mu, n):
  """Per-word rows of a Gibbs measure at depth n; its masses are exact, so lo = hi = center."""
  words, masses = mu.level_masses(n)
  return [{'word': format_word(w), 'mass_center': float(m), 'mass_lo': float(m), 'mass_hi': float(m)}
          for w, m in zip(words, masses)]
