import math

import pytest

from maps import builtin_map
from pressure import PressureSource

GOLDEN = (1 + math.sqrt(5)) / 2
GOLDEN_D0 = math.log(GOLDEN) / math.log(2)
LOG2 = math.log(2)


@pytest.fixture(scope='session')
def gc24():
  return builtin_map('gc24')


@pytest.fixture(scope='session')
def doubling():
  return builtin_map('doubling')


@pytest.fixture(scope='session')
def fib22():
  return builtin_map('fib22')


@pytest.fixture(scope='session')
def mp1():
  return builtin_map('mp1')


@pytest.fixture(scope='session')
def mp05():
  return builtin_map('mp05')


@pytest.fixture(scope='session')
def gc24_source(gc24):
  return PressureSource(gc24)


@pytest.fixture(scope='session')
def fib22_source(fib22):
  return PressureSource(fib22)


@pytest.fixture(scope='session')
def mp1_source(mp1):
  return PressureSource(mp1, depth=12)
