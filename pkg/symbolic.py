"""Shift spaces and admissible words.

Symbols are 0-based integers. A `Subshift` is a topologically mixing subshift of
finite type, optionally restricted to a subset of symbols and optionally forbidding
long runs s^m of selected symbols (the block truncation used for hyperbolic
subsystems near parabolic points).

Words are enumerated by *prepending*: a word's admissibility towards the left is
decided by its prepending state (first symbol, length of its leading run of a
run-limited symbol), so cylinders can be refined the same way inverse branches are
composed.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from config import DEPTH_CAP, WORK_CAP
from errors import InadmissibleWordError, ModelError, ResourceLimitError

logger = logging.getLogger(__name__)

Word = Tuple[int, ...]


def parse_word(word) -> Word:
  """'0110' or [0, 1, 1, 0] -> (0, 1, 1, 0)"""
  if isinstance(word, str):
    return tuple(int(ch) for ch in word if not ch.isspace())
  return tuple(int(s) for s in word)


def format_word(word: Sequence[int]) -> str:
  if any(s > 9 for s in word):
    return '.'.join(str(s) for s in word)
  return ''.join(str(s) for s in word)


@dataclass(frozen=True)
class Alphabet:
  size: int

  def __post_init__(self):
    if self.size < 2:
      raise ModelError(f"alphabet needs at least 2 symbols, got {self.size}")

  @property
  def symbols(self):
    return tuple(range(self.size))


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
  """0/1 transition table, A[i][j] true iff i -> j is allowed."""
  table: np.ndarray

  def __post_init__(self):
    table = np.array(self.table, dtype=bool)
    table.setflags(write=False)
    object.__setattr__(self, 'table', table)
    _validate_table(table)

  @classmethod
  def from_rows(cls, rows):
    arr = np.asarray(rows)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
      raise ModelError(f"transition matrix must be square, got shape {arr.shape}")
    if not np.isin(arr, (0, 1)).all():
      raise ModelError("transition matrix entries must be 0 or 1")
    return cls(arr.astype(bool))

  @classmethod
  def full(cls, p):
    return cls(np.ones((p, p), dtype=bool))

  @property
  def size(self):
    return self.table.shape[0]

  @property
  def alphabet(self):
    return Alphabet(self.size)

  @property
  def is_full(self):
    return bool(self.table.all())

  def allowed(self, i, j):
    return bool(self.table[i, j])

  def to_rows(self):
    return self.table.astype(int).tolist()


def _validate_table(table):
  p = table.shape[0]
  Alphabet(p)
  mixing = "the subshift must be topologically mixing (some power A^k, k <= p^2, strictly positive)"
  for i in range(p):
    if not table[i].any():
      raise ModelError(f"row {i} of the transition matrix has no allowed transition; {mixing}")
    if not table[:, i].any():
      raise ModelError(f"column {i} of the transition matrix has no allowed transition; {mixing}")
  if not is_mixing(table):
    raise ModelError(f"transition matrix is not mixing: {mixing}")


def is_mixing(table) -> bool:
  """True iff some power A^k with k <= p^2 is strictly positive."""
  a = np.asarray(table, dtype=np.int64)
  p = a.shape[0]
  power = a.copy()
  for _ in range(p * p):
    if (power > 0).all():
      return True
    power = ((power @ a) > 0).astype(np.int64)
  return False


class Subshift:
  """Subshift of finite type with optional symbol restriction and run limits.

  Args:
      matrix: the ambient TransitionMatrix.
      symbols: allowed symbols (default: all).
      run_symbols: symbols s whose run s^run_length is forbidden.
      run_length: m >= 2, the forbidden run length.
  """

  def __init__(self, matrix: TransitionMatrix, symbols: Optional[Iterable[int]] = None,
               run_symbols: Iterable[int] = (), run_length: Optional[int] = None):
    self.matrix = matrix
    p = matrix.size
    self.symbols = tuple(sorted(set(range(p) if symbols is None else (int(s) for s in symbols))))
    if not self.symbols or min(self.symbols) < 0 or max(self.symbols) >= p:
      raise ModelError(f"symbol subset {self.symbols} not inside alphabet of size {p}")
    self.run_symbols = tuple(sorted(set(int(s) for s in run_symbols)))
    if self.run_symbols and (run_length is None or run_length < 2):
      raise ModelError(f"forbidden run length must be >= 2, got {run_length}")
    self.run_length = run_length if self.run_symbols else None

    self._allowed = np.zeros(p, dtype=bool)
    self._allowed[list(self.symbols)] = True
    self._limited = np.zeros(p, dtype=bool)
    self._limited[list(self.run_symbols)] = True
    self.states, self.graph = self._state_graph()
    if len(self.symbols) < matrix.size or self.run_symbols:
      if not self.graph.any(axis=1).any() or topological_entropy_of_graph(self.graph) <= 0:
        raise ModelError(f"subshift on symbols {self.symbols} with forbidden runs "
                         f"{self.run_symbols}^{self.run_length} carries no entropy")
      if not is_mixing(self.graph):
        raise ModelError(f"restricted subshift on symbols {self.symbols} is not mixing; "
                         "the subshift must be topologically mixing")

  @classmethod
  def full(cls, p):
    return cls(TransitionMatrix.full(p))

  def __repr__(self):
    extra = f", runs {self.run_symbols}^{self.run_length}" if self.run_symbols else ''
    return f"Subshift(p={self.matrix.size}, symbols={self.symbols}{extra})"

  @property
  def size(self):
    return self.matrix.size

  @property
  def is_full_shift(self):
    return self.matrix.is_full and len(self.symbols) == self.size and not self.run_symbols

  @property
  def is_markov(self):
    """One-step constraints only, so first-symbol state suffices."""
    return not self.run_symbols

  def initial_state(self, symbol):
    return (symbol, 1 if self._limited[symbol] else 0)

  def prepend(self, symbol: int, first: np.ndarray, run: np.ndarray):
    """Vectorised prepend rule.

    Returns (mask, new_run): mask marks words that admit `symbol` in front,
    new_run is the leading-run length of the extended words.
    """
    first = np.asarray(first)
    run = np.asarray(run)
    if not self._allowed[symbol]:
      return np.zeros(first.shape, dtype=bool), np.zeros(first.shape, dtype=np.int64)
    mask = self.matrix.table[symbol, first]
    if self._limited[symbol]:
      same = first == symbol
      new_run = np.where(same, run + 1, 1)
      mask = mask & (new_run < self.run_length)
    else:
      new_run = np.zeros(first.shape, dtype=np.int64)
    return mask, new_run.astype(np.int64)

  def _state_graph(self):
    states = []
    for s in self.symbols:
      if self._limited[s]:
        states.extend((s, r) for r in range(1, self.run_length))
      else:
        states.append((s, 0))
    index = {st: k for k, st in enumerate(states)}
    graph = np.zeros((len(states), len(states)), dtype=np.int64)
    firsts = np.array([st[0] for st in states])
    runs = np.array([st[1] for st in states])
    for s in self.symbols:
      mask, new_run = self.prepend(s, firsts, runs)
      for k in np.flatnonzero(mask):
        graph[index[(s, int(new_run[k]))], k] = 1
    return states, graph

  def state_index(self, first, run):
    return self.states.index((int(first), int(run)))


def as_subshift(shift) -> Subshift:
  if isinstance(shift, Subshift):
    return shift
  if isinstance(shift, TransitionMatrix):
    return Subshift(shift)
  return Subshift(TransitionMatrix.from_rows(shift))


def state_graph(shift):
  """(states, B) with B[new, old] = 1 iff prepending leads from state old to new."""
  shift = as_subshift(shift)
  return shift.states, shift.graph


def count_words(shift, n: int) -> int:
  """Number of admissible words of length n, by matrix-vector products."""
  if n < 0:
    raise ValueError(f"depth must be >= 0, got {n}")
  if n == 0:
    return 1
  shift = as_subshift(shift)
  graph = shift.graph.astype(object)
  vec = np.array([1 if run <= 1 else 0 for _, run in shift.states], dtype=object)
  for _ in range(n - 1):
    vec = graph.dot(vec)
  return int(sum(vec))


def topological_entropy_of_graph(graph) -> float:
  radius = max(abs(np.linalg.eigvals(np.asarray(graph, dtype=float))))
  return math.log(radius) if radius > 0 else -math.inf


def topological_entropy(shift) -> float:
  """log of the spectral radius of the state graph."""
  return topological_entropy_of_graph(as_subshift(shift).graph)


def check_work(shift, n, cap=WORK_CAP):
  if n > DEPTH_CAP:
    raise ResourceLimitError(f"depth {n} exceeds the depth cap {DEPTH_CAP}")
  count = count_words(shift, n)
  if count > cap:
    raise ResourceLimitError(f"depth {n} needs {count} words, above the work cap {cap}")
  return count


class WordLevel:
  """All admissible words of one length, in lexicographic order, with prepending states."""

  def __init__(self, words, first, run):
    self.words = words
    self.first = first
    self.run = run

  def __len__(self):
    return self.words.shape[0]

  @property
  def depth(self):
    return self.words.shape[1]


def first_level(shift) -> WordLevel:
  shift = as_subshift(shift)
  syms = np.array(shift.symbols, dtype=np.int64)
  runs = np.array([shift.initial_state(s)[1] for s in shift.symbols], dtype=np.int64)
  return WordLevel(syms.reshape(-1, 1), syms.copy(), runs)


def prepend_level(shift, level: WordLevel):
  """Yield (symbol, mask, next WordLevel block) per symbol; blocks concatenate in lex order."""
  for s in shift.symbols:
    mask, new_run = shift.prepend(s, level.first, level.run)
    if not mask.any():
      continue
    words = level.words[mask]
    block = np.empty((words.shape[0], words.shape[1] + 1), dtype=np.int64)
    block[:, 0] = s
    block[:, 1:] = words
    yield s, mask, WordLevel(block, np.full(words.shape[0], s, dtype=np.int64), new_run[mask])


def concat_levels(blocks: List[WordLevel]) -> WordLevel:
  return WordLevel(np.concatenate([b.words for b in blocks]),
                   np.concatenate([b.first for b in blocks]),
                   np.concatenate([b.run for b in blocks]))


def word_array(shift, n: int) -> np.ndarray:
  """Admissible words of length n as an (N, n) int array in lexicographic order."""
  if n < 0:
    raise ValueError(f"depth must be >= 0, got {n}")
  shift = as_subshift(shift)
  if n == 0:
    return np.zeros((1, 0), dtype=np.int64)
  check_work(shift, n)
  level = first_level(shift)
  for _ in range(n - 1):
    level = concat_levels([blk for _, _, blk in prepend_level(shift, level)])
  return level.words


def enumerate_words(shift, n: int) -> List[Word]:
  """Admissible words of length n in lexicographic order; n = 0 gives [()]."""
  return [tuple(int(s) for s in row) for row in word_array(shift, n)]


def is_admissible(shift, word) -> bool:
  shift = as_subshift(shift)
  word = parse_word(word)
  if not word:
    return True
  if word[-1] not in shift.symbols:
    return False
  first, run = shift.initial_state(word[-1])
  first, run = np.array([first]), np.array([run])
  for s in reversed(word[:-1]):
    mask, new_run = shift.prepend(s, first, run)
    if not mask[0]:
      return False
    first, run = np.array([s]), new_run
  return True


def require_admissible(shift, word) -> Word:
  word = parse_word(word)
  if not is_admissible(shift, word):
    raise InadmissibleWordError(f"word {format_word(word)} is not admissible in {as_subshift(shift)!r}")
  return word


def periodic_words(shift, n: int) -> List[Word]:
  """Words w of length n whose infinite repetition w w w ... is admissible."""
  shift = as_subshift(shift)
  reps = 2 + (shift.run_length or 0) // max(n, 1)
  return [w for w in enumerate_words(shift, n) if is_admissible(shift, w * reps)]
