import random

import pytest

import haantjes.symexpr as sx
from haantjes.geometry import KForm, KVector, Operator11, VectorField
from haantjes.symexpr import ZeroTester


@pytest.fixture
def zt():
    return ZeroTester(seed=1234)


@pytest.fixture
def contact1():
    return sx.darboux_contact(1)


@pytest.fixture
def contact2():
    return sx.darboux_contact(2)


def rand_poly(chart, rng, deg=2, terms=3):
    """Small random polynomial in the chart coordinates."""
    coords = [chart.coord(i) for i in range(chart.dim)]
    e = chart.const(rng.randint(-3, 3))
    for _ in range(terms):
        t = chart.const(rng.randint(-2, 2))
        for _ in range(rng.randint(1, deg)):
            t = t * coords[rng.randrange(chart.dim)]
        e = e + t
    return e


def rand_vector(chart, rng, deg=2):
    return VectorField(chart, [rand_poly(chart, rng, deg) for _ in range(chart.dim)])


def rand_operator(chart, rng, deg=1):
    return Operator11(chart, [[rand_poly(chart, rng, deg) for _ in range(chart.dim)]
                              for _ in range(chart.dim)])


def rand_kform(chart, rng, degree, deg=2):
    from itertools import combinations
    comps = {}
    for idx in combinations(range(chart.dim), degree):
        comps[idx] = rand_poly(chart, rng, deg)
    return KForm(chart, degree, comps)


def rand_kvector(chart, rng, degree, deg=2):
    from itertools import combinations
    comps = {}
    for idx in combinations(range(chart.dim), degree):
        comps[idx] = rand_poly(chart, rng, deg)
    return KVector(chart, degree, comps)


def rand_point(chart, rng, lo=-1.5, hi=1.5):
    return {c: rng.uniform(lo, hi) for c in chart.coords}


@pytest.fixture
def rng():
    return random.Random(20250808)
