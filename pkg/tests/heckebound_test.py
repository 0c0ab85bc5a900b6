import pytest

from fractions import Fraction

from src.const import Field, ConfigError, FixtureCorruption, NoUsablePrimes, PrecisionError
from src.arith import legendre
from src.heckebound import (
    HeckeMatrix,
    hecke_matrix,
    weil_interval,
    jacobian_order,
    usable_primes,
    torsion_bound,
    rational_equals_m,
)

from conftest import PRIMES

BOUNDS = {29: 63, 37: 75, 41: 320, 53: 637, 61: 605, 73: 1452}
RATIONAL = {29: 21, 37: 15, 41: 40, 53: 91, 61: 55, 73: 66}


@pytest.mark.parametrize("p", PRIMES)
def test_bound_over_quadratic_field(fixtures, p):
    report = torsion_bound(fixtures(p).basis, Field.QSQRT, 100)
    assert report.bound == BOUNDS[p]
    assert report.primes == usable_primes(p, 100)
    assert all(s.k == (1 if legendre(p, s.q) == 1 else 2) for s in report.steps)
    assert all(s.order % report.bound == 0 for s in report.steps)


@pytest.mark.parametrize("p", PRIMES)
def test_bound_over_rationals(fixtures, p):
    report = torsion_bound(fixtures(p).basis, Field.Q, 200)
    assert report.bound == RATIONAL[p]
    assert rational_equals_m(report, RATIONAL[p])
    assert all(s.k == 1 for s in report.steps)

    running = [s.running for s in report.steps]
    assert all(b % a == 0 for a, b in zip(running[1:], running))


@pytest.mark.parametrize("p", PRIMES)
def test_hecke_matrices_commute(fixtures, p):
    basis = fixtures(p).basis
    Ts = [hecke_matrix(basis, q) for q in usable_primes(p, 50)]
    assert all(T.preserves_blocks() for T in Ts)
    for i, S in enumerate(Ts):
        for T in Ts[i + 1 :]:
            assert S.commutes(T), (S.q, T.q)


def test_hecke_blocks_37(fixtures):
    basis = fixtures(37).basis
    assert basis.g0 == 2 and basis.gH == 4
    for q in (3, 5, 7):
        T = hecke_matrix(basis, q)
        assert all(T.rows[i][j] == 0 for i in range(2) for j in range(2, 4))
        assert all(T.rows[i][j] == 0 for i in range(2, 4) for j in range(2))


def test_hecke_matrices(fixtures):
    basis = fixtures(29).basis
    T3, T5 = hecke_matrix(basis, 3), hecke_matrix(basis, 5)
    assert T3.commutes(T5)
    assert T3.preserves_blocks() and T5.preserves_blocks()
    assert all(x.denominator == 1 for row in T3.rows for x in row)


def test_jacobian_orders(fixtures):
    basis = fixtures(29).basis
    for q in (5, 7, 13):
        order = jacobian_order(basis, q, 1)
        lo, hi = weil_interval(q, 1, 4)
        assert lo <= order <= hi
        assert order % 63 == 0

    assert jacobian_order(basis, 3, 2) % 63 == 0


def test_weil_interval():
    assert weil_interval(4, 1, 1) == (1, 9)
    lo, hi = weil_interval(5, 1, 1)
    assert lo <= 2 and hi >= 10


def test_bad_inputs(fixtures):
    basis = fixtures(29).basis
    for q in (2, 29, 9):
        with pytest.raises(ConfigError):
            hecke_matrix(basis, q)

    with pytest.raises(PrecisionError):
        hecke_matrix(basis, 997)

    with pytest.raises(ConfigError):
        jacobian_order(basis, 5, 3)

    with pytest.raises(NoUsablePrimes):
        torsion_bound(basis, Field.Q, 5)


def test_corrupt_hecke_matrix(fixtures):
    basis = fixtures(29).basis
    rows = tuple(tuple(Fraction(100 * (i == j)) for j in range(4)) for i in range(4))
    with pytest.raises(FixtureCorruption):
        jacobian_order(basis, 5, 1, HeckeMatrix(5, rows, 2))

    rows = tuple(tuple(Fraction(int(i == j), 2) for j in range(4)) for i in range(4))
    with pytest.raises(FixtureCorruption):
        jacobian_order(basis, 5, 1, HeckeMatrix(5, rows, 2))


@pytest.mark.parametrize("p, qs", [(29, (5, 7, 13)), (37, (3, 7, 11))])
def test_order_ladder_at_split_primes(fixtures, p, qs):
    basis = fixtures(p).basis
    for q in qs:
        assert legendre(p, q) == 1
        assert jacobian_order(basis, q, 2) % jacobian_order(basis, q, 1) == 0
