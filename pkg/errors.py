"""Exceptions raised by lyapspec.

Every error carries the process exit code the CLI returns for it.
"""


class LyapSpecError(RuntimeError):
  """Base class; `exit_code` is what `lyapspec.py` exits with."""
  exit_code = 1


class ConfigError(LyapSpecError):
  """Run configuration failed schema validation."""
  exit_code = 2


class ModelError(LyapSpecError):
  """Map or transition matrix violates the standing assumptions."""
  exit_code = 2


class InadmissibleWordError(LyapSpecError):
  exit_code = 2


class ResourceLimitError(LyapSpecError):
  """Depth, work or sample-length cap exceeded."""
  exit_code = 3


class DegenerateModelError(LyapSpecError):
  """log|f'| is cohomologous to a constant, so the spectrum is a single point."""
  exit_code = 4


class ConvergenceError(LyapSpecError):
  """Root finding or bisection did not reach its tolerance."""


class ItineraryError(LyapSpecError):
  """Forward orbit left every branch domain."""


class LevelSetEmptyError(LyapSpecError):
  pass


class PreconditionError(LyapSpecError):
  pass
