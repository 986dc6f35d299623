"""w-measures: concatenations of Gibbs-state blocks switched at fast-growing times.

A schedule lists stage measures μ_1, μ_2, ... and switch times m_1 < m_2 < ...;
a sampled word follows μ_1 up to m_1, then a block of μ_2 up to m_2, and so on.
Each new block is conditioned on the admissibility of its junction with the
word so far, which is exactly the normalisation c_{i+1} of the measure. The
trace keeps L_m = (1/m)·log|(f^m)'| and H_m = -(1/m)·log μ(Δ_m) at checkpoints.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from config import SAMPLE_BUDGET, TOLERANCES, load_schedule_config
from errors import ConfigError, PreconditionError, ResourceLimitError
from maps import MapModel, orbit_log_derivatives
from measures import BlockGibbs, MarkovGibbs, equilibrium_for_exponent, exponent_range, gibbs_measure
from pressure import PressureSource, Subsystem, subsystem
from spectrum import legendre_F
from utils import parallel_map

logger = logging.getLogger(__name__)

DEFAULT_GROWTH = 10
CHECKPOINTS_PER_DECADE = 20


@dataclass
class Stage:
  index: int
  host: str
  q: float
  measure: object
  entropy: float
  exponent: float
  dimension: float
  switch_time: int
  subsystem: Optional[int] = None
  symbols: Optional[tuple] = None
  rho_hat: float = 0.0

  def row(self):
    return {'stage': self.index, 'host': self.host, 'q': self.q, 'h': self.entropy, 'chi': self.exponent,
            'd': self.dimension, 'm': self.switch_time, 'subsystem': self.subsystem,
            'symbols': list(self.symbols) if self.symbols else None, 'rho_hat': self.rho_hat}


@dataclass
class WSchedule:
  model: MapModel
  stages: List[Stage]
  growth_factor: float = DEFAULT_GROWTH
  budget: int = SAMPLE_BUDGET
  epsilon: float = TOLERANCES['sampling_epsilon']
  name: str = 'schedule'

  @property
  def switch_times(self):
    return [s.switch_time for s in self.stages]

  @property
  def length(self):
    return self.stages[-1].switch_time

  @property
  def ratios(self):
    m = self.switch_times
    return [a / b for a, b in zip(m, m[1:])]

  def stage_at(self, m):
    """Index of the stage that produced symbol number m (1-based)."""
    return int(np.searchsorted(self.switch_times, m, side='left'))

  def describe(self):
    return {'name': self.name, 'map': self.model.name, 'growth_factor': self.growth_factor,
            'budget': self.budget, 'epsilon': self.epsilon, 'ratios': self.ratios,
            'stages': [s.row() for s in self.stages]}


def growth_times(m1, n_stages, factor=DEFAULT_GROWTH):
  """m_{i+1} = max(factor, i)·m_i starting from m_1."""
  times = [int(m1)]
  for i in range(1, n_stages):
    times.append(int(max(factor, i) * times[-1]))
  return times


def check_growth(times, factor=DEFAULT_GROWTH):
  """Raise ConfigError unless m_{i+1} >= max(factor·m_i, i·m_i) for every i."""
  for i, (a, b) in enumerate(zip(times, times[1:]), start=1):
    if b < max(factor, i) * a:
      raise ConfigError(f"switch times m_{i} = {a}, m_{i + 1} = {b} violate the growth policy "
                        f"m_(i+1) >= max({factor:g}, i)·m_i")


def _resolve_stage(model: MapModel, spec: Dict):
  sub_level = spec.get('subsystem')
  symbols = tuple(spec['symbols']) if 'symbols' in spec else None
  host = subsystem(model, sub_level) if sub_level is not None else model
  if 'alpha' in spec:
    q, mu = equilibrium_for_exponent(host, float(spec['alpha']), symbols=symbols)
  else:
    q = float(spec['q'])
    mu = gibbs_measure(host, q, symbols=symbols)
  rho_hat = mu.rho_hat if isinstance(mu, BlockGibbs) else 0.0
  host_name = host.name if isinstance(host, Subsystem) else model.name
  if symbols:
    host_name = f"{host_name}|{{{','.join(str(s) for s in symbols)}}}"
  return q, mu, sub_level, symbols, rho_hat, host_name


def build_schedule(model: MapModel, stage_specs: Sequence[Dict], m=None, m1=None, n_stages=None,
                   growth_factor=DEFAULT_GROWTH, budget=SAMPLE_BUDGET, epsilon=None, name='schedule') -> WSchedule:
  """Resolve stage specs into Gibbs measures and attach switch times.

  Stage specs cycle over the switch times. Each spec is {"q": ...} or {"alpha": ...},
  optionally with "subsystem": m (parabolic maps) or "symbols": [...] (linear maps).
  """
  if not stage_specs:
    raise ConfigError("a schedule needs at least one stage")
  if (m is None) == (m1 is None):
    raise ConfigError("give exactly one of explicit switch times or m1 with n_stages")
  times = [int(t) for t in m] if m is not None else growth_times(m1, n_stages, growth_factor)
  if any(t <= 0 for t in times) or any(b <= a for a, b in zip(times, times[1:])):
    raise ConfigError(f"switch times must be positive and strictly increasing, got {times}")
  check_growth(times, growth_factor)

  resolved = {}
  for k, spec in enumerate(stage_specs):
    try:
      resolved[k] = _resolve_stage(model, spec)
    except PreconditionError as exc:
      raise PreconditionError(f"stage spec {k} ({spec}): {exc}")

  # block stages sample whole blocks, so their switch times are rounded up
  n_rep = max((r[1].n_rep for r in resolved.values() if isinstance(r[1], BlockGibbs)), default=1)
  if n_rep > 1:
    times = [int(math.ceil(t / n_rep) * n_rep) for t in times]
  if times[-1] > budget:
    raise ResourceLimitError(f"schedule length {times[-1]} exceeds the sampling budget {budget}")

  stages = []
  for i, t in enumerate(times):
    q, mu, sub_level, symbols, rho_hat, host_name = resolved[i % len(stage_specs)]
    stages.append(Stage(i, host_name, q, mu, mu.entropy, mu.exponent, mu.entropy / mu.exponent, t,
                        sub_level, symbols, rho_hat))

  levels = [s.subsystem for s in stages if s.subsystem is not None]
  if any(b < a for a, b in zip(levels, levels[1:])):
    logger.warning(f"⚠️  subsystem levels {levels} are not nondecreasing along the schedule")
  ratios = [s.rho_hat / s.exponent for s in stages if s.subsystem is not None]
  if any(b > a + 1e-12 for a, b in zip(ratios, ratios[1:])):
    logger.warning(f"⚠️  ρ̂/χ along the stages is not nonincreasing: {[round(r, 4) for r in ratios]}")
  schedule = WSchedule(model, stages, growth_factor, budget,
                       TOLERANCES['sampling_epsilon'] if epsilon is None else float(epsilon), name)
  logger.info(f"✅ schedule {name}: {len(stages)} stages, m = {schedule.switch_times}")
  return schedule


def schedule_from_config(model: MapModel, cfg) -> WSchedule:
  if isinstance(cfg, str):
    cfg = load_schedule_config(cfg)
  return build_schedule(model, cfg['stages'], m=cfg.get('m'), m1=cfg.get('m1'), n_stages=cfg.get('n_stages'),
                        growth_factor=cfg.get('growth_factor', DEFAULT_GROWTH),
                        budget=cfg.get('budget', SAMPLE_BUDGET), epsilon=cfg.get('epsilon'),
                        name=cfg.get('name', 'schedule'))


# ---------------------------------------------------------------------------
# sampling

def _markov_path(P, start, uniforms):
  """Chain path of length len(uniforms)+1 from `start` by a parallel-prefix composition of step maps."""
  k = P.shape[0]
  cum = np.cumsum(P, axis=1)
  cum[:, -1] = 1.0
  steps = np.stack([np.searchsorted(cum[s], uniforms, side='right') for s in range(k)], axis=1)
  comp = np.minimum(steps, k - 1)
  span = 1
  while span < comp.shape[0]:
    comp[span:] = np.take_along_axis(comp[span:], comp[:-span], axis=1)
    span *= 2
  return np.concatenate([[start], comp[:, start]]) if comp.shape[0] else np.array([start])


def _trailing_run(word, end, symbol):
  r = 0
  while r < end and word[end - 1 - r] == symbol:
    r += 1
  return r


def _sample_markov(mu: MarkovGibbs, rng, length, word, pos):
  """Fill word[pos:pos+length]; returns per-symbol conditional log-probabilities and the junction factor."""
  syms = np.asarray(mu.symbols)
  if pos == 0:
    first_law, total = mu.pi, 1.0
  else:
    first_law, total = mu.junction_distribution(int(word[pos - 1]))
  start = int(min(np.searchsorted(np.cumsum(first_law), rng.random(), side='right'), len(syms) - 1))
  path = _markov_path(mu.P, start, rng.random(length - 1))
  word[pos:pos + length] = syms[path]
  logp = np.empty(length)
  logp[0] = math.log(first_law[start])
  logp[1:] = np.log(mu.P[path[:-1], path[1:]])
  return logp, total


class _BlockTables:
  """Admissible block laws per junction state, with lexicographic codes for prefix masses."""

  def __init__(self, mu: BlockGibbs):
    self.mu = mu
    p = mu.model.size
    n = mu.n_rep
    self.powers = p ** np.arange(n - 1, -1, -1, dtype=np.int64)
    self.codes = mu.blocks @ self.powers
    self.p = p
    self._laws = {}

  def law(self, state):
    if state not in self._laws:
      if state is None:
        weights = self.mu.masses
      else:
        weights = np.where(self.mu.admissible_after(*state), self.mu.masses, 0.0)
      total = float(weights.sum())
      if total <= 0:
        raise PreconditionError(f"no admissible block after junction state {state}")
      self._laws[state] = (np.concatenate([[0.0], np.cumsum(weights)]), total)
    return self._laws[state]

  def prefix_logp(self, index, state):
    """Conditional log-probability of every prefix of block `index` after `state`."""
    cum, total = self.law(state)
    block = self.mu.blocks[index]
    n = block.shape[0]
    out = np.empty(n)
    for k in range(1, n + 1):
      scale = self.p ** (n - k)
      prefix = int(block[:k] @ self.powers[n - k:])
      lo = np.searchsorted(self.codes, prefix * scale, side='left')
      hi = np.searchsorted(self.codes, (prefix + 1) * scale, side='left')
      out[k - 1] = math.log((cum[hi] - cum[lo]) / total)
    return out


def _junction_state(mu: BlockGibbs, word, pos):
  if pos == 0:
    return None
  last = int(word[pos - 1])
  run = _trailing_run(word, pos, last) if last in mu.shift.run_symbols else 0
  return (last, run)


def _sample_blocks(mu: BlockGibbs, rng, length, word, pos):
  tables = _BlockTables(mu)
  n = mu.n_rep
  logp = np.empty(length)
  junction_total = 1.0
  for b, u in enumerate(rng.random(length // n)):
    at = pos + b * n
    state = _junction_state(mu, word, at)
    cum, total = tables.law(state)
    index = int(min(np.searchsorted(cum, u * total, side='right') - 1, len(mu.blocks) - 1))
    word[at:at + n] = mu.blocks[index]
    prefix = tables.prefix_logp(index, state)
    logp[b * n:(b + 1) * n] = np.diff(np.concatenate([[0.0], prefix]))
    if b == 0:
      junction_total = total
  return logp, junction_total


def checkpoint_grid(length, switch_times, per_decade=CHECKPOINTS_PER_DECADE):
  decades = math.log10(max(length, 10))
  grid = np.unique(np.round(np.logspace(1, decades, int(per_decade * (decades - 1)) + 1)).astype(np.int64))
  grid = grid[(grid >= 1) & (grid <= length)]
  return np.unique(np.concatenate([grid, np.asarray(switch_times, dtype=np.int64)]))


@dataclass
class WSampleTrace:
  seed: int
  word: np.ndarray
  checkpoints: List[Dict]
  stage_L: List[float]
  stage_H: List[float]
  junction_drift: List[float] = field(default_factory=list)
  log_deriv_range: tuple = (0.0, 0.0)

  def rows(self):
    return list(self.checkpoints)


def sample_w_word(schedule: WSchedule, seed) -> WSampleTrace:
  """Sample one w-word of length m_N with a seeded generator."""
  if schedule.length > schedule.budget:
    raise ResourceLimitError(f"trace length {schedule.length} exceeds the budget {schedule.budget}")
  rng = np.random.default_rng(seed)
  length = schedule.length
  word = np.empty(length, dtype=np.int64)
  logp = np.empty(length)
  drift = []
  pos = 0
  for stage in schedule.stages:
    seg = stage.switch_time - pos
    sampler = _sample_blocks if isinstance(stage.measure, BlockGibbs) else _sample_markov
    logp[pos:pos + seg], total = sampler(stage.measure, rng, seg, word, pos)
    if pos > 0:
      drift.append(abs(math.log(total)) / pos)
    pos = stage.switch_time

  logd = orbit_log_derivatives(schedule.model, word)
  cum_logp = np.cumsum(logp)
  cum_logd = np.cumsum(logd)
  marks = checkpoint_grid(length, schedule.switch_times)
  checkpoints = [{'m': int(m), 'L_m': float(cum_logd[m - 1] / m), 'H_m': float(-cum_logp[m - 1] / m),
                  'stage_index': schedule.stage_at(m)} for m in marks]
  at = np.asarray(schedule.switch_times) - 1
  trace = WSampleTrace(
    seed=int(seed),
    word=word.astype(np.int8) if schedule.model.size < 128 else word,
    checkpoints=checkpoints,
    stage_L=list(cum_logd[at] / (at + 1)),
    stage_H=list(-cum_logp[at] / (at + 1)),
    junction_drift=drift,
    log_deriv_range=(float(logd.min()), float(logd.max())),
  )
  logger.debug(f"seed {seed}: L = {[round(v, 4) for v in trace.stage_L]}")
  return trace


class WSampler:
  """Callable sampler bound to a schedule, so seeds can be mapped over a process pool."""

  def __init__(self, schedule: WSchedule):
    self.schedule = schedule

  def __call__(self, seed):
    return sample_w_word(self.schedule, seed)


def sample_many(schedule: WSchedule, seeds) -> List[WSampleTrace]:
  return parallel_map(WSampler(schedule), list(seeds), desc=f"w-samples {schedule.name}")


# ---------------------------------------------------------------------------
# verification

def _rel(value, target):
  return abs(value - target) / abs(target) if target else abs(value)


@dataclass
class OscillationReport:
  stage_rows: List[Dict]
  max_L_window_residual: float
  max_H_window_residual: float
  late_min_HL: float
  dimension_floor: float
  L_swing: float
  H_swing: float
  max_junction_drift: float

  def stages_within(self, tol, from_stage=3):
    return all(r['L_dev'] < tol for r in self.stage_rows if r['stage'] + 1 >= from_stage)

  @property
  def floor_holds(self):
    return self.late_min_HL >= self.dimension_floor

  def summary(self):
    return {'stages': self.stage_rows, 'max_L_window_residual': self.max_L_window_residual,
            'max_H_window_residual': self.max_H_window_residual, 'late_min_HL': self.late_min_HL,
            'dimension_floor': self.dimension_floor, 'L_swing': self.L_swing, 'H_swing': self.H_swing,
            'max_junction_drift': self.max_junction_drift}


def _swing(values):
  values = np.asarray(values, dtype=float)
  if len(values) < 2:
    return 0.0
  return float((values.max() - values.min()) / np.mean(values))


def verify_oscillation(trace: WSampleTrace, schedule: WSchedule, window_from=None) -> OscillationReport:
  """Stage deviations, windowed interpolation residuals and the H/L floor of one trace.

  Window residuals are taken over checkpoints m > window_from (default: the first
  switch time), relative to the interpolation (m_i/m)·χ_i + ((m-m_i)/m)·χ_{i+1}.
  """
  stages = schedule.stages
  rows = []
  for s, L, H in zip(stages, trace.stage_L, trace.stage_H):
    rows.append({'stage': s.index, 'm': s.switch_time, 'chi': s.exponent, 'h': s.entropy, 'd': s.dimension,
                 'L': L, 'H': H, 'L_dev': _rel(L, s.exponent), 'H_dev': _rel(H, s.entropy)})
  times = [0] + schedule.switch_times
  window_from = stages[0].switch_time if window_from is None else window_from
  res_L, res_H = [0.0], [0.0]
  for c in trace.checkpoints:
    m, i = c['m'], c['stage_index']
    if m <= window_from:
      continue
    mi = times[i]
    prev, cur = stages[max(i - 1, 0)], stages[i]
    chi = (mi * prev.exponent + (m - mi) * cur.exponent) / m
    h = (mi * prev.entropy + (m - mi) * cur.entropy) / m
    res_L.append(_rel(c['L_m'], chi))
    res_H.append(_rel(c['H_m'], h))

  late_from = times[max(len(stages) - 2, 0)]
  late = [c['H_m'] / c['L_m'] for c in trace.checkpoints if c['m'] > late_from and c['L_m'] > 0]
  late_min = min(late) if late else math.nan
  floor = min(s.dimension for s in stages) - schedule.epsilon
  tail = slice(1, None) if len(stages) > 2 else slice(None)
  return OscillationReport(
    stage_rows=rows,
    max_L_window_residual=max(res_L),
    max_H_window_residual=max(res_H),
    late_min_HL=late_min,
    dimension_floor=floor,
    L_swing=_swing(trace.stage_L[tail]),
    H_swing=_swing(trace.stage_H[tail]),
    max_junction_drift=max(trace.junction_drift, default=0.0),
  )


def acceptance_fraction(traces, schedule, tol=0.10, from_stage=3):
  """Share of traces whose stage deviations |L_{m_i} - χ_i|/χ_i stay below tol for i >= from_stage."""
  reports = [verify_oscillation(t, schedule) for t in traces]
  passing = sum(r.stages_within(tol, from_stage) for r in reports)
  return passing / len(reports), reports


# ---------------------------------------------------------------------------
# boundary construction

@dataclass
class BoundaryStage:
  level: int
  target: float
  q: float
  h: float
  chi: float
  d: float
  F_level: float

  def row(self):
    return {'level': self.level, 'target': self.target, 'q': self.q, 'h': self.h, 'chi': self.chi,
            'd': self.d, 'F_level': self.F_level}


def boundary_schedule(model: MapModel, alpha, levels=(2, 3, 4, 5), depth=None) -> List[BoundaryStage]:
  """Equilibrium states on Λ_{n_i} with exponents a_i -> α, each against F_{n_i}(a_i).

  Where α lies outside a subsystem's open exponent interval, a_i approaches the
  nearer end from inside, halving the margin at every level.
  """
  out = []
  for i, n in enumerate(levels):
    host = subsystem(model, n)
    lo, hi = exponent_range(host)
    margin = (hi - lo) * 2.0 ** -(i + 2)
    target = min(max(alpha, lo + margin), hi - margin)
    q, mu = equilibrium_for_exponent(host, target)
    F = legendre_F(PressureSource(host, depth=depth), target).F
    out.append(BoundaryStage(int(n), float(target), float(q), mu.entropy, mu.exponent,
                             mu.entropy / mu.exponent, float(F)))
    logger.info(f"Λ_{n}: a = {target:.6f}, q = {q:.4f}, h/χ = {mu.entropy / mu.exponent:.6f}, F_n = {F:.6f}")
  return out
