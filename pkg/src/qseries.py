import logging

from fractions import Fraction
from functools import cached_property
from dataclasses import dataclass
from typing import List, Tuple, Sequence, Optional, Any

from .const import PrecisionError, BasisError, NotInSpan
from .arith import rref, inverse_q, reduce_rational, legendre

logger = logging.getLogger(__name__)


def sturm_precision(d: int, index: int) -> int:
    assert d >= 1 and index >= 1
    return d * index // 6 + 1


@dataclass(frozen=True)
class QSeries:
    """Power series in q known modulo q^prec.

    Coefficients are Fractions, or residues in [0, modulus) when the series
    has been reduced. Sums and products are known to the smaller of the two
    precisions.
    """

    coeffs: Tuple[Any, ...]
    prec: int
    modulus: Optional[int] = None

    @classmethod
    def of(
        cls, coeffs: Sequence[Any], prec: Optional[int] = None, modulus: Optional[int] = None
    ) -> "QSeries":
        prec = len(coeffs) if prec is None else prec
        assert prec >= 1, "precision must be positive"
        if modulus is None:
            cs = [Fraction(c) for c in coeffs[:prec]]
            zero = Fraction(0)
        else:
            cs = [int(c) % modulus for c in coeffs[:prec]]
            zero = 0
        cs += [zero] * (prec - len(cs))
        return cls(tuple(cs), prec, modulus)

    @classmethod
    def constant(cls, c: Any, prec: int, modulus: Optional[int] = None) -> "QSeries":
        return cls.of([c], prec, modulus)

    @classmethod
    def monomial(cls, n: int, prec: int, modulus: Optional[int] = None) -> "QSeries":
        cs = [0] * prec
        if n < prec:
            cs[n] = 1
        return cls.of(cs, prec, modulus)

    def _zero(self):
        return 0 if self.modulus is not None else Fraction(0)

    def _norm(self, x):
        return x % self.modulus if self.modulus is not None else x

    def _check(self, other: "QSeries"):
        if self.modulus != other.modulus:
            raise ValueError("series over different coefficient rings")

    def __getitem__(self, n: int):
        return self.coeffs[n]

    def __len__(self):
        return self.prec

    def __add__(self, other: "QSeries") -> "QSeries":
        self._check(other)
        prec = min(self.prec, other.prec)
        cs = [self._norm(a + b) for a, b in zip(self.coeffs[:prec], other.coeffs[:prec])]
        return QSeries(tuple(cs), prec, self.modulus)

    def __neg__(self) -> "QSeries":
        return QSeries(tuple(self._norm(-a) for a in self.coeffs), self.prec, self.modulus)

    def __sub__(self, other: "QSeries") -> "QSeries":
        return self + (-other)

    def scale(self, c: Any) -> "QSeries":
        if self.modulus is not None:
            c = reduce_rational(Fraction(c), self.modulus)
        return QSeries(tuple(self._norm(c * a) for a in self.coeffs), self.prec, self.modulus)

    def __mul__(self, other: "QSeries") -> "QSeries":
        self._check(other)
        prec = min(self.prec, other.prec)
        out = [self._zero()] * prec
        b = other.coeffs
        for i, a in enumerate(self.coeffs[:prec]):
            if not a:
                continue
            for j in range(prec - i):
                if b[j]:
                    out[i + j] += a * b[j]

        if self.modulus is not None:
            out = [x % self.modulus for x in out]

        return QSeries(tuple(out), prec, self.modulus)

    def power(self, e: int) -> "QSeries":
        assert e >= 0
        result = QSeries.constant(1, self.prec, self.modulus)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def valuation(self) -> int:
        """Index of the first nonzero coefficient, or prec when none is known."""
        return next((n for n, a in enumerate(self.coeffs) if a), self.prec)

    def truncate(self, prec: int) -> "QSeries":
        if prec > self.prec:
            raise PrecisionError(prec, self.prec, "truncation")
        return QSeries(self.coeffs[:prec], prec, self.modulus)

    def shift(self, k: int) -> "QSeries":
        """Multiply by q^k; negative k divides and needs k leading zeros."""
        if k >= 0:
            return QSeries((self._zero(),) * k + self.coeffs, self.prec + k, self.modulus)
        if any(self.coeffs[:-k]):
            raise ValueError(f"series is not divisible by q^{-k}")
        if self.prec + k < 1:
            raise PrecisionError(1 - k, self.prec, "division by a power of q")
        return QSeries(self.coeffs[-k:], self.prec + k, self.modulus)

    def theta(self) -> "QSeries":
        """q d/dq."""
        return QSeries(
            tuple(self._norm(n * a) for n, a in enumerate(self.coeffs)), self.prec, self.modulus
        )

    def inverse(self) -> "QSeries":
        a0 = self.coeffs[0]
        if not a0:
            raise ZeroDivisionError("series with zero constant term is not a unit")

        if self.modulus is None:
            inv0 = 1 / a0
        else:
            inv0 = pow(int(a0), -1, self.modulus)

        out = [inv0]
        for n in range(1, self.prec):
            s = sum((self.coeffs[k] * out[n - k] for k in range(1, n + 1) if self.coeffs[k]), self._zero())
            out.append(self._norm(-s * inv0))

        return QSeries(tuple(out), self.prec, self.modulus)

    def __str__(self):
        terms = [f"{a}*q^{n}" for n, a in enumerate(self.coeffs[:8]) if a]
        return " + ".join(terms or ["0"]) + f" + O(q^{self.prec})"


def series_mul(a: QSeries, b: QSeries) -> QSeries:
    return a * b


def reduce_mod(series: QSeries, q: int) -> QSeries:
    if series.modulus is not None:
        raise ValueError("series is already reduced")
    return QSeries(
        tuple(reduce_rational(a, q, "series coefficient") for a in series.coeffs),
        series.prec,
        q,
    )


@dataclass(frozen=True)
class QExpansionBasis:
    """Echelon basis of S_2: a Gamma_0(p) block followed by a chi block."""

    p: int
    g0: int
    rows: Tuple[QSeries, ...]
    index: int

    @property
    def gH(self) -> int:
        return len(self.rows)

    @property
    def prec(self) -> int:
        return min(r.prec for r in self.rows)

    @cached_property
    def pivots(self) -> List[int]:
        return [r.valuation() for r in self.rows]

    def block_of(self, i: int) -> int:
        return 0 if i < self.g0 else 1

    def gamma0_block(self) -> "QExpansionBasis":
        return QExpansionBasis(self.p, self.g0, self.rows[: self.g0], self.p + 1)

    def chi_rows(self) -> Tuple[QSeries, ...]:
        return self.rows[self.g0 :]

    def nebentypus(self, i: int, q: int) -> int:
        return 1 if i < self.g0 else legendre(q, self.p)

    def validate(self):
        """Per-block echelon shape and full rank; raises BasisError."""
        blocks = [range(0, self.g0), range(self.g0, self.gH)]
        for i, row in enumerate(self.rows):
            if row.modulus is not None:
                raise BasisError(i + 1, "rows must have rational coefficients")
            if row[0] != 0:
                raise BasisError(i + 1, "constant term of a cusp form must vanish")
            n = self.pivots[i]
            if n >= row.prec:
                raise BasisError(i + 1, "row is zero to its precision")
            if row[n] != 1:
                raise BasisError(i + 1, f"pivot coefficient at q^{n} is {row[n]}, not 1")

            block = blocks[self.block_of(i)]
            for j in block:
                if j != i and self.rows[j][n] != 0:
                    raise BasisError(j + 1, f"nonzero entry in the pivot column q^{n} of row {i + 1}")

        if len(self.readoff) != self.gH:
            raise BasisError(self.gH, "rows are linearly dependent")

    @cached_property
    def readoff(self) -> List[int]:
        """Pivot columns of the echelon form of the whole coefficient matrix."""
        width = min(self.prec, 2 * max(self.pivots) + 2)
        while True:
            _, pivots, rank = rref([list(r.coeffs[:width]) for r in self.rows])
            if rank == self.gH or width == self.prec:
                logger.debug(f"read-off columns {pivots} (width {width})")
                return pivots
            width = min(self.prec, 2 * width)

    @cached_property
    def _readoff_inverse(self) -> List[List[Fraction]]:
        A = [[r[c] for c in self.readoff] for r in self.rows]
        return inverse_q(A)

    def coordinates(self, series: QSeries, upto: Optional[int] = None) -> List[Fraction]:
        """Coordinates of a form in this basis, checked on the first `upto` coefficients."""
        need = max(self.readoff) + 1
        if series.prec < need:
            raise PrecisionError(need, series.prec, "read-off columns of the basis")

        values = [series[c] for c in self.readoff]
        Ainv = self._readoff_inverse
        coords = [
            sum((values[j] * Ainv[j][i] for j in range(self.gH)), Fraction(0))
            for i in range(self.gH)
        ]

        upto = min(series.prec, self.prec) if upto is None else min(upto, series.prec, self.prec)
        for n in range(upto):
            s = sum((c * r[n] for c, r in zip(coords, self.rows) if c), Fraction(0))
            if s != series[n]:
                raise NotInSpan(n)

        return coords


def eval_monomial(
    basis: QExpansionBasis, exponents: Sequence[int], prec: Optional[int] = None
) -> QSeries:
    """Product of basis rows, known to the basis precision unless prec is given."""
    assert len(exponents) == basis.gH and all(e >= 0 for e in exponents)
    d = sum(exponents)
    prec = basis.prec if prec is None else prec
    if prec > basis.prec:
        raise PrecisionError(prec, basis.prec, f"degree-{d} monomial")
    sturm = sturm_precision(d, basis.index) if d >= 1 else 1
    if prec < sturm:
        raise PrecisionError(sturm, prec, f"Sturm bound for degree {d}")

    result = QSeries.constant(1, prec)
    for row, e in zip(basis.rows, exponents):
        for _ in range(e):
            result = result * row.truncate(prec)

    return result
