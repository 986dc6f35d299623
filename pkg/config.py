# LYAPSPEC SETTINGS
#
# Runtime knobs are read from environment variables so batch runs can be tuned
# without touching the code (`LYAPSPEC_THREADS`, `LYAPSPEC_LOG_DIR`, ...).
# Map and schedule descriptions live in JSON files, see configs/.

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from errors import ConfigError

TOOL_VERSION = '0.1.0'

THREADS = int(os.environ.get('LYAPSPEC_THREADS', '1'))
LOG_DIR = os.environ.get('LYAPSPEC_LOG_DIR', 'logs')

# refuse any level with more cylinders than this
WORK_CAP = int(os.environ.get('LYAPSPEC_WORK_CAP', str(2 ** 30)))
# absolute cap on symbolic depth for enumeration-based work
DEPTH_CAP = int(os.environ.get('LYAPSPEC_DEPTH_CAP', '30'))
GRID_POINTS = int(os.environ.get('LYAPSPEC_GRID', '5'))
PRESSURE_DEPTH = int(os.environ.get('LYAPSPEC_DEPTH', '14'))
LINEAR_PRESSURE_DEPTH = int(os.environ.get('LYAPSPEC_LINEAR_DEPTH', '20'))
LADDER_START = 4
D_BIG = float(os.environ.get('LYAPSPEC_D_BIG', '40'))
D0_TOL = float(os.environ.get('LYAPSPEC_D0_TOL', '1e-3'))
SAMPLE_BUDGET = int(os.environ.get('LYAPSPEC_SAMPLE_BUDGET', str(10 ** 7)))
GIBBS_DEPTH = 10

# Tolerances a run may override through RunConfig.tolerances
TOLERANCES = {
  'inverse': 1e-14,
  'inverse_check': 1e-12,
  'cylinder': 1e-10,
  'power_iteration': 1e-13,
  'legendre_x': 1e-10,
  'exponent': 1e-8,
  'degeneracy': 1e-6,
  'case_threshold': 1e-2,
  'derivative_step': 1e-3,
  'd0': D0_TOL,
  'sampling_epsilon': 0.05,
}

MAP_FAMILIES = {
  'manneville_pomeau': {'required': {'s': (int, float)},
                        'optional': {}},
  'linear_sft': {'required': {'slopes': list, 'branch_intervals': list},
                 'optional': {'matrix': list}},
  'parabolic_linear_blend': {'required': {'s': (int, float), 'a': (int, float),
                                          'slopes': list, 'branch_intervals': list},
                             'optional': {'matrix': list}},
  'builtin': {'required': {'preset': str},
              'optional': {}},
}
COMMON_MAP_KEYS = {'family': str, 'name': str}

SCHEDULE_KEYS = {
  'name': str,
  'stages': list,
  'm': list,
  'm1': int,
  'n_stages': int,
  'growth_factor': (int, float),
  'budget': int,
  'epsilon': (int, float),
}
STAGE_KEYS = {
  'q': (int, float),
  'alpha': (int, float),
  'subsystem': int,
  'symbols': list,
}


def _check_type(where, key, value, expected):
  # bool is an int subclass; never accept it for numeric fields
  if isinstance(value, bool) and expected is not bool:
    raise ConfigError(f"{where}: key '{key}' has type bool, expected {expected}")
  if not isinstance(value, expected):
    raise ConfigError(f"{where}: key '{key}' has type {type(value).__name__}, expected {expected}")
  if isinstance(value, float) and not math.isfinite(value):
    raise ConfigError(f"{where}: key '{key}' must be finite")


def validate_map_config(cfg: Dict[str, Any], where='map config') -> Dict[str, Any]:
  """Validate a map description; returns it unchanged.

  Raises:
      ConfigError on unknown keys, missing keys or wrong types.
  """
  if not isinstance(cfg, dict):
    raise ConfigError(f"{where}: expected an object at top level")
  family = cfg.get('family')
  if family not in MAP_FAMILIES:
    raise ConfigError(f"{where}: unknown or missing family {family!r}; "
                      f"choose one of {sorted(MAP_FAMILIES)}")
  schema = MAP_FAMILIES[family]
  allowed = set(COMMON_MAP_KEYS) | set(schema['required']) | set(schema['optional'])
  unknown = sorted(set(cfg) - allowed)
  if unknown:
    raise ConfigError(f"{where}: unknown keys {unknown} for family '{family}'")
  for key, expected in schema['required'].items():
    if key not in cfg:
      raise ConfigError(f"{where}: missing key '{key}' for family '{family}'")
    _check_type(where, key, cfg[key], expected)
  for key, expected in {**schema['optional'], **COMMON_MAP_KEYS}.items():
    if key in cfg:
      _check_type(where, key, cfg[key], expected)
  return cfg


def validate_schedule_config(cfg: Dict[str, Any], where='schedule config') -> Dict[str, Any]:
  if not isinstance(cfg, dict):
    raise ConfigError(f"{where}: expected an object at top level")
  unknown = sorted(set(cfg) - set(SCHEDULE_KEYS))
  if unknown:
    raise ConfigError(f"{where}: unknown keys {unknown}")
  for key, expected in SCHEDULE_KEYS.items():
    if key in cfg:
      _check_type(where, key, cfg[key], expected)
  if 'stages' not in cfg or not cfg['stages']:
    raise ConfigError(f"{where}: 'stages' must be a non-empty list")
  if ('m' in cfg) == ('m1' in cfg):
    raise ConfigError(f"{where}: give exactly one of 'm' (switch times) or 'm1' (first switch time)")
  if 'm1' in cfg and 'n_stages' not in cfg:
    raise ConfigError(f"{where}: 'm1' needs 'n_stages'")
  for i, stage in enumerate(cfg['stages']):
    stage_where = f"{where}: stage {i}"
    if not isinstance(stage, dict):
      raise ConfigError(f"{stage_where}: expected an object")
    unknown = sorted(set(stage) - set(STAGE_KEYS))
    if unknown:
      raise ConfigError(f"{stage_where}: unknown keys {unknown}")
    if ('q' in stage) == ('alpha' in stage):
      raise ConfigError(f"{stage_where}: give exactly one of 'q' or 'alpha'")
    if 'subsystem' in stage and 'symbols' in stage:
      raise ConfigError(f"{stage_where}: 'subsystem' and 'symbols' are exclusive")
    for key, expected in STAGE_KEYS.items():
      if key in stage:
        _check_type(stage_where, key, stage[key], expected)
  return cfg


def _load_json(path):
  try:
    with open(path, 'r', encoding='utf-8') as fp:
      return json.load(fp)
  except FileNotFoundError:
    raise ConfigError(f"config file not found: {path}")
  except json.JSONDecodeError as exc:
    raise ConfigError(f"config file {path} is not valid JSON: {exc}")


def load_map_config(path_or_name: str) -> Dict[str, Any]:
  """Load a map description from a JSON file, or wrap a built-in preset name."""
  if not os.path.exists(path_or_name) and not path_or_name.endswith('.json'):
    return validate_map_config({'family': 'builtin', 'preset': path_or_name})
  return validate_map_config(_load_json(path_or_name), where=str(path_or_name))


def load_schedule_config(path: str) -> Dict[str, Any]:
  return validate_schedule_config(_load_json(path), where=str(path))


SAMPLING_COMMANDS = ('wsample',)


@dataclass(frozen=True)
class RunConfig:
  subcommand: str
  map_spec: Dict[str, Any]
  params: Dict[str, Any] = field(default_factory=dict)
  seed: Optional[int] = None
  depth: Optional[int] = None
  out: Optional[str] = None
  tolerances: Dict[str, float] = field(default_factory=dict)

  def __post_init__(self):
    validate_map_config(self.map_spec)
    unknown = sorted(set(self.tolerances) - set(TOLERANCES))
    if unknown:
      raise ConfigError(f"unknown tolerance overrides {unknown}")
    if self.subcommand in SAMPLING_COMMANDS and self.seed is None:
      raise ConfigError(f"'{self.subcommand}' needs a seed for reproducible sampling")
    if self.depth is not None and not 1 <= self.depth <= DEPTH_CAP:
      raise ConfigError(f"depth {self.depth} outside [1, {DEPTH_CAP}]")

  def tolerance(self, name):
    return self.tolerances.get(name, TOLERANCES[name])

  def as_dict(self):
    return {'subcommand': self.subcommand, 'map_spec': self.map_spec, 'params': self.params,
            'seed': self.seed, 'depth': self.depth, 'out': self.out,
            'tolerances': self.tolerances}


def config_hash(config) -> str:
  """sha256 of the canonical JSON dump (sorted keys, no whitespace)."""
  payload = config.as_dict() if isinstance(config, RunConfig) else config
  canonical = json.dumps(payload, sort_keys=True, separators=(',', ':'), default=str)
  return hashlib.sha256(canonical.encode('utf-8')).hexdigest()
