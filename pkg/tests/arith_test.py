import random
import pytest
import numpy as np

from fractions import Fraction
from sympy import Matrix, ZZ
from sympy.matrices.normalforms import smith_normal_form as sympy_snf

from src.const import InertPrime, BadReduction
from src.arith import (
    QuadFieldElem,
    PrimeFieldElem,
    legendre,
    is_prime,
    primes_up_to,
    primitive_root,
    sqrt_mod,
    reduce_rational,
    rref,
    kernel_basis,
    det_q,
    inverse_q,
    smith_normal_form,
    invariant_factors,
    unimodular_inverse,
    rref_mod,
    rank_mod,
    kernel_mod,
)


@pytest.mark.parametrize(
    "text, a, b",
    [
        ("5", 5, 0),
        ("-7/3", Fraction(-7, 3), 0),
        ("s", 0, 1),
        ("-s", 0, -1),
        ("-1*s", 0, -1),
        ("-2/73*s", 0, Fraction(-2, 73)),
        ("1/2+3/4*s", Fraction(1, 2), Fraction(3, 4)),
        ("-1-11/73*s", -1, Fraction(-11, 73)),
        ("18+3*s", 18, 3),
    ],
)
def test_quad_parse(text, a, b):
    x = QuadFieldElem.parse(text, 73)
    assert (x.a, x.b) == (Fraction(a), Fraction(b))
    assert QuadFieldElem.parse(str(x), 73) == x


@pytest.mark.parametrize("text", ["", "x", "1+", "s*2", "1/0"])
def test_quad_parse_rejects(text):
    with pytest.raises((ValueError, ZeroDivisionError)):
        QuadFieldElem.parse(text, 29)


def test_quad_field_arithmetic():
    p = 29
    x = QuadFieldElem(1, 1, p)
    y = x.conj()
    assert x * y == QuadFieldElem.rational(1 - p, p)
    assert x.norm() == 1 - p
    assert x * x.inverse() == QuadFieldElem.rational(1, p)
    assert (x + y).is_rational() and not (x - y).is_rational()
    assert x / x == QuadFieldElem.rational(1, p)
    assert not (x - x)


def test_quad_reduce():
    root = int(sqrt_mod(29, 5))
    assert root == 2
    x = QuadFieldElem(Fraction(1, 2), 3, 29)
    assert x.reduce(5, root) == (3 + 3 * 2) % 5

    with pytest.raises(ValueError):
        x.reduce(5, 1)
    with pytest.raises(BadReduction):
        QuadFieldElem(Fraction(1, 5), 0, 29).reduce(5, root)


def test_prime_field():
    x = PrimeFieldElem(3, 7)
    assert int(x * x.inverse()) == 1
    assert int(x**6) == 1
    assert int(x - 5) == 5
    assert int(1 / x) == 5


def test_number_theory():
    assert primes_up_to(20) == [2, 3, 5, 7, 11, 13, 17, 19]
    assert is_prime(73) and not is_prime(91)
    assert legendre(29, 5) == 1
    assert legendre(2, 29) == -1
    assert legendre(-1, 37) == 1
    assert legendre(58, 29) == 0
    assert [primitive_root(p) for p in (29, 37, 41, 53, 61, 73)] == [2, 2, 6, 2, 2, 5]
    assert reduce_rational(Fraction(3, 2), 7) == 5


def test_sqrt_mod():
    for p, q in [(29, 5), (29, 7), (29, 13), (41, 23), (41, 31), (73, 19)]:
        r = int(sqrt_mod(p, q))
        assert (r * r - p) % q == 0
        assert r <= q - r

    with pytest.raises(InertPrime) as e:
        sqrt_mod(29, 3)
    assert e.value.q == 3


def test_rref_and_kernel():
    M = [[1, 2, 3], [2, 4, 6], [1, 0, 1]]
    R, pivots, rank = rref(M)
    assert rank == 2 and pivots == [0, 1]

    K = kernel_basis(M, 3)
    assert len(K) == 1
    assert all(sum(Fraction(a) * b for a, b in zip(row, K[0])) == 0 for row in M)


def test_det_and_inverse():
    A = [[2, 1, 0], [1, 1, 0], [0, 3, 5]]
    assert det_q(A) == 5
    Ainv = inverse_q(A)
    I = [[sum(Fraction(A[i][k]) * Ainv[k][j] for k in range(3)) for j in range(3)] for i in range(3)]
    assert I == [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    assert det_q([[1, 2], [2, 4]]) == 0


def _check_snf(A):
    S, U, V = smith_normal_form(A)
    assert (U.dot(np.array(A, dtype=object)).dot(V) == S).all()
    d = [int(S[i, i]) for i in range(min(S.shape))]
    assert all(S[i, j] == 0 for i in range(S.shape[0]) for j in range(S.shape[1]) if i != j)
    assert all(x >= 0 for x in d)
    assert all(b % a == 0 for a, b in zip(d, d[1:]) if a)
    unimodular_inverse(U)
    unimodular_inverse(V)
    return d


def test_smith_form_cuspidal_relations():
    assert invariant_factors([[21, 0, 0], [-3, 3, 0], [-13, -1, 1]]) == [1, 3, 21]
    assert invariant_factors([[66, 0, 0], [-22, 22, 0], [-23, -1, 1]]) == [1, 22, 66]
    _check_snf([[40, 0, 0], [-8, 8, 0], [-9, -1, 1]])


def test_smith_form_against_sympy():
    rng = random.Random(1729)
    checked = 0
    while checked < 40:
        n = rng.randint(2, 4)
        A = [[rng.randint(-30, 30) for _ in range(n)] for _ in range(n)]
        if det_q(A) == 0:
            continue

        ours = _check_snf(A)
        theirs = sympy_snf(Matrix(A), domain=ZZ)
        assert ours == sorted(abs(int(theirs[i, i])) for i in range(n))
        checked += 1


def test_mod_q_linear_algebra():
    rng = np.random.default_rng(7)
    q = 13
    for _ in range(20):
        M = rng.integers(0, q, size=(4, 7))
        M[3] = (M[0] + 2 * M[1]) % q
        K = kernel_mod(M, q)
        assert rank_mod(M, q) + len(K) == 7
        assert not (M.dot(K.T) % q).any()

    R, pivots, rank = rref_mod(np.eye(3, dtype=np.int64) * 2, 5)
    assert pivots == [0, 1, 2] and (R == np.eye(3)).all()
    assert kernel_mod(np.zeros((0, 3), dtype=np.int64), 5, 3).shape == (3, 3)


def _random_quad(rng, p):
    def r():
        return Fraction(rng.randint(-50, 50), rng.randint(1, 12))

    return QuadFieldElem(r(), r(), p)


@pytest.mark.parametrize("p", [29, 37, 41, 53, 61, 73])
def test_quad_field_laws(p):
    rng = random.Random(p)
    for _ in range(200):
        x, y, z = (_random_quad(rng, p) for _ in range(3))
        assert (x * y).norm() == x.norm() * y.norm()
        assert (x + y) - y == x
        assert x * (y + z) == x * y + x * z
        assert (x * y).conj() == x.conj() * y.conj()
        if x:
            assert x * x.inverse() == QuadFieldElem.rational(1, p)


def test_rational_and_prime_field_laws():
    rng = random.Random(41)
    for _ in range(200):
        x = Fraction(rng.randint(-10**6, 10**6), rng.randint(1, 10**4))
        y = Fraction(rng.randint(-10**6, 10**6), rng.randint(1, 10**4))
        assert (x + y) - y == x

        a, b = PrimeFieldElem(rng.randrange(31), 31), PrimeFieldElem(rng.randrange(31), 31)
        assert (a + b) - b == a
        if b:
            assert (a / b) * b == a


def test_rref_is_idempotent():
    rng = random.Random(7)
    for _ in range(30):
        rows, cols = rng.randint(1, 5), rng.randint(1, 6)
        M = [[rng.randint(-5, 5) for _ in range(cols)] for _ in range(rows)]
        R, pivots, rank = rref(M)
        again, pivots2, rank2 = rref(R)
        assert again == R
        assert (pivots2, rank2) == (pivots, rank)


@pytest.mark.parametrize(
    "A, factors",
    [
        ([[0, 0, 0], [0, 0, 0]], [0, 0]),
        ([[2, 4], [6, 8]], [2, 4]),
        ([[1, 2, 3], [4, 5, 6]], [1, 3]),
        ([[1, 4], [2, 5], [3, 6]], [1, 3]),
        ([[0, 6, 0]], [6]),
    ],
)
def test_smith_form_shapes(A, factors):
    assert _check_snf(A) == factors
