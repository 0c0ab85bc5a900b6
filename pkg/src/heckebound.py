import logging

from math import gcd, isqrt
from fractions import Fraction
from dataclasses import dataclass
from typing import List, Tuple, Optional, Iterable

from .const import (
    Field,
    BoundStep,
    BoundReport,
    ConfigError,
    FixtureCorruption,
    NoUsablePrimes,
    PrecisionError,
)
from .arith import det_q, legendre, is_prime, primes_up_to
from .qseries import QSeries, QExpansionBasis

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HeckeMatrix:
    """Row i holds the coordinates of T_q f_i."""

    q: int
    rows: Tuple[Tuple[Fraction, ...], ...]
    g0: int

    @property
    def size(self) -> int:
        return len(self.rows)

    def __matmul__(self, other: "HeckeMatrix") -> List[List[Fraction]]:
        n = self.size
        return [
            [sum((self.rows[i][k] * other.rows[k][j] for k in range(n)), Fraction(0)) for j in range(n)]
            for i in range(n)
        ]

    def commutes(self, other: "HeckeMatrix") -> bool:
        return self @ other == other @ self

    def preserves_blocks(self) -> bool:
        n, g0 = self.size, self.g0
        return all(
            self.rows[i][j] == 0 for i in range(n) for j in range(n) if (i < g0) != (j < g0)
        )


def hecke_series(row: QSeries, q: int, eps: int) -> QSeries:
    """T_q on one expansion: a_n -> a_nq + eps * q * a_(n/q)."""
    length = (row.prec - 1) // q + 1
    cs = []
    for n in range(length):
        a = row[n * q]
        if n % q == 0:
            a += eps * q * row[n // q]
        cs.append(a)
    return QSeries.of(cs, length)


def hecke_matrix(basis: QExpansionBasis, q: int) -> HeckeMatrix:
    if q == basis.p or q % 2 == 0 or not is_prime(q):
        raise ConfigError(f"T_{q} is only used for odd primes q != {basis.p}")

    need = q * max(basis.readoff) + 1
    if need > basis.prec:
        raise PrecisionError(need, basis.prec, f"T_{q} reads a_{need - 1}")

    rows = []
    for i, row in enumerate(basis.rows):
        image = hecke_series(row, q, basis.nebentypus(i, q))
        rows.append(tuple(basis.coordinates(image)))

    return HeckeMatrix(q, tuple(rows), basis.g0)


def weil_interval(q: int, k: int, g: int) -> Tuple[int, int]:
    """Integer enclosure of [(sqrt(q^k) - 1)^2g, (sqrt(q^k) + 1)^2g]."""
    Q = q**k
    s = isqrt(4 * Q)
    if s * s != 4 * Q:
        s += 1
    return max(Q + 1 - s, 0) ** g, (Q + 1 + s) ** g


def _frobenius_det(T: HeckeMatrix, q: int, sign: int, basis: QExpansionBasis) -> Fraction:
    n = T.size
    M = [
        [
            (1 + q * basis.nebentypus(i, q) if i == j else 0) + sign * T.rows[i][j]
            for j in range(n)
        ]
        for i in range(n)
    ]
    return det_q(M)


def jacobian_order(basis: QExpansionBasis, q: int, k: int, T: Optional[HeckeMatrix] = None) -> int:
    """|J_H(p)(F_{q^k})| for k in {1, 2}, from the Eichler-Shimura relation."""
    if k not in (1, 2):
        raise ConfigError(f"k = {k}; only F_q and F_q^2 are supported")

    T = T or hecke_matrix(basis, q)
    value = _frobenius_det(T, q, -1, basis)
    if k == 2:
        value *= _frobenius_det(T, q, 1, basis)

    if value.denominator != 1:
        raise FixtureCorruption(f"|J(F_{q}^{k})| = {value} is not an integer")

    lo, hi = weil_interval(q, k, basis.gH)
    if not lo <= value <= hi:
        raise FixtureCorruption(f"|J(F_{q}^{k})| = {value} is outside the Weil interval [{lo}, {hi}]")

    return int(value)


def usable_primes(p: int, qmax: int) -> List[int]:
    return [q for q in primes_up_to(qmax) if q != 2 and q != p]


def torsion_bound(
    basis: QExpansionBasis, field: Field, qmax: int, primes: Optional[Iterable[int]] = None
) -> BoundReport:
    """Running gcd of |J(F_q^k)|.

    Over Q(sqrt p) split primes contribute |J(F_q)| and inert primes
    |J(F_q^2)|; over Q every prime contributes |J(F_q)|.
    """
    p = basis.p
    primes = usable_primes(p, qmax) if primes is None else list(primes)
    if len(primes) < 2:
        raise NoUsablePrimes(f"fewer than two odd primes below {qmax} avoid {p}")

    report = BoundReport(p, field)
    running = 0
    for q in primes:
        k = 1 if not field.is_quadratic() or legendre(p, q) == 1 else 2
        order = jacobian_order(basis, q, k)
        running = gcd(running, order)
        report.steps.append(BoundStep(q, k, order, running))
        logger.debug(f"p={p} q={q} k={k}: |J| = {order}, running gcd {running}")

    logger.info(f"p={p} {field.value}: bound {report.bound} over {len(primes)} primes")
    return report


def rational_equals_m(report: BoundReport, m: int) -> bool:
    return report.bound == m
