import pytest

from osccrit.criteria import SystemSpec
from osccrit.quadrature import CoefFn


def make_spec(a1, a2, n1=2, n2=2, lam1=2.0, lam2=3.0, **kw):
    return SystemSpec(n1, n2, lam1, lam2, CoefFn.of(*a1), CoefFn.of(*a2), **kw)


@pytest.fixture
def example1():
    return make_spec([(1, 2, 0)], [(1, 4, 0)])


@pytest.fixture
def example2():
    return make_spec([(1, 2, 2)], [(1, 0, -1)])


@pytest.fixture
def witness_spec():
    """a1 = t, a2 = exp(-3t): the nested integral is finite."""
    return make_spec([(1, 1, 0)], [(1, 0, -3)])


@pytest.fixture
def harmonic():
    """x1' = x2, x2' = -x1."""
    return make_spec([(1, 0, 0)], [(1, 0, 0)], n1=1, n2=1, lam1=1.0, lam2=1.0)
