import random
import pytest

from fractions import Fraction
from dataclasses import replace

from src.const import BasisError, BadReduction, PrecisionError, NotInSpan
from src.qseries import QSeries, sturm_precision, reduce_mod, eval_monomial

from conftest import PRIMES

READOFF = {
    29: [1, 2, 4, 5],
    37: [1, 2, 3, 4],
    41: [1, 2, 3, 4, 5],
    53: [1, 2, 3, 4, 5, 6, 8, 9],
    61: [1, 2, 3, 4, 5, 6, 7, 8],
    73: [1, 2, 3, 4, 5, 6, 7, 8, 9],
}


def test_sturm_precision():
    assert sturm_precision(4, 60) == 41
    assert sturm_precision(2, 148) == 50


def test_series_arithmetic():
    one_minus_q = QSeries.of([1, -1], 10)
    geometric = one_minus_q.inverse()
    assert geometric.coeffs == tuple(Fraction(1) for _ in range(10))
    assert (one_minus_q * geometric).coeffs == QSeries.constant(1, 10).coeffs

    f = QSeries.of([0, 1, 2, 3], 4)
    assert f.theta().coeffs == (0, 1, 4, 9)
    assert f.valuation() == 1
    assert f.shift(-1).coeffs == (1, 2, 3)
    assert f.shift(2).prec == 6
    assert f.power(2).coeffs == (0, 0, 1, 4)

    with pytest.raises(ValueError):
        geometric.shift(-1)
    with pytest.raises(PrecisionError):
        f.truncate(5)


def test_series_mod_q():
    f = QSeries.of([Fraction(1, 2), 3, Fraction(-1, 3)], 3)
    g = reduce_mod(f, 7)
    assert g.coeffs == (4, 3, 2)
    assert (g * g.inverse()).coeffs == (1, 0, 0)

    with pytest.raises(BadReduction):
        reduce_mod(f, 3)


@pytest.mark.parametrize("p", PRIMES)
def test_basis_shape(fixtures, p):
    basis = fixtures(p).basis
    assert basis.readoff == READOFF[p]
    assert basis.prec == 3001
    assert basis.gamma0_block().index == p + 1
    assert basis.pivots[: basis.g0] == list(range(1, basis.g0 + 1))
    basis.validate()


def test_coordinates(fixtures):
    basis = fixtures(29).basis
    for i, row in enumerate(basis.rows):
        expected = [Fraction(int(i == j)) for j in range(basis.gH)]
        assert basis.coordinates(row, 500) == expected

    combo = basis.rows[0].scale(3) + basis.rows[3].scale(Fraction(-1, 2))
    assert basis.coordinates(combo, 500) == [3, 0, 0, Fraction(-1, 2)]

    with pytest.raises(NotInSpan):
        basis.coordinates(combo + QSeries.monomial(200, combo.prec), 500)


def test_tampered_pivot(fixtures):
    basis = fixtures(37).basis
    row = basis.rows[1]
    bad = QSeries.of([c if n != basis.pivots[0] else Fraction(5) for n, c in enumerate(row.coeffs)])
    tampered = replace(basis, rows=(basis.rows[0], bad) + basis.rows[2:])

    with pytest.raises(BasisError) as e:
        tampered.validate()
    assert e.value.row == 2


def test_eval_monomial(fixtures):
    basis = fixtures(29).basis
    one = eval_monomial(basis, [0, 0, 0, 0])
    assert one.prec == basis.prec
    assert one.coeffs[:2] == (1, 0)

    prec = sturm_precision(2, basis.index)
    x1x2 = eval_monomial(basis, [1, 1, 0, 0], prec)
    assert x1x2.prec == prec
    assert x1x2.valuation() >= 2
    assert x1x2.coeffs == (basis.rows[0].truncate(prec) * basis.rows[1].truncate(prec)).coeffs

    with pytest.raises(PrecisionError):
        eval_monomial(basis, [1, 0, 0, 0], 5000)
    with pytest.raises(PrecisionError) as e:
        eval_monomial(basis, [2, 0, 0, 0], prec - 1)
    assert e.value.required == prec


def _random_series(rng, prec, modulus=None):
    cs = [rng.randint(-9, 9) for _ in range(prec)]
    if modulus is None:
        cs = [Fraction(c, rng.randint(1, 5)) for c in cs]
    return QSeries.of(cs, prec, modulus)


@pytest.mark.parametrize("modulus", [None, 13])
def test_series_ring_laws(modulus):
    rng = random.Random(2024 if modulus is None else modulus)
    for _ in range(25):
        a, b, c = (_random_series(rng, rng.randint(5, 25), modulus) for _ in range(3))
        assert (a * b) * c == a * (b * c)
        assert a * b == b * a
        assert a * (b + c) == a * b + a * c
        assert (a + b) - b == a.truncate(min(a.prec, b.prec))
        assert (a * b).prec == min(a.prec, b.prec)

        unit = QSeries.constant(1, a.prec, modulus)
        assert a * unit == a
