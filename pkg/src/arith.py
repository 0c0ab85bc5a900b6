"""Exact arithmetic over Q, Q(sqrt p) and F_q, and the linear algebra on top of it."""
import re
import numpy as np

from fractions import Fraction
from dataclasses import dataclass
from typing import List, Tuple, Sequence, Union, Any, Optional

from sympy import isprime, primerange
from sympy.ntheory import primitive_root as _primitive_root
from sympy.ntheory import sqrt_mod as _sqrt_mod

from .const import InertPrime, BadReduction

Rational = Fraction
Number = Union[int, Fraction]

_QUAD_RE = re.compile(
    r"^(?:(?P<a>[+-]?\d+(?:/\d+)?)(?=$|[+-]))?(?:(?P<b>[+-]?(?:\d+(?:/\d+)?)?)\*?s)?$"
)


def to_rational(value: Any) -> Fraction:
    if isinstance(value, Fraction):
        return value
    return Fraction(value)


def reduce_rational(x: Fraction, q: int, what: str = "coefficient") -> int:
    x = to_rational(x)
    if x.denominator % q == 0:
        raise BadReduction(q, what)
    return x.numerator % q * pow(x.denominator, -1, q) % q


@dataclass(frozen=True)
class QuadFieldElem:
    """a + b*sqrt(p)."""

    a: Fraction
    b: Fraction
    p: int

    def __post_init__(self):
        object.__setattr__(self, "a", to_rational(self.a))
        object.__setattr__(self, "b", to_rational(self.b))

    @classmethod
    def rational(cls, a: Number, p: int) -> "QuadFieldElem":
        return cls(Fraction(a), Fraction(0), p)

    @classmethod
    def parse(cls, text: str, p: int) -> "QuadFieldElem":
        m = _QUAD_RE.match(text.strip())
        if m is None or text.strip() == "":
            raise ValueError(f"'{text}' is not an element of Q(sqrt {p})")

        a = Fraction(m["a"]) if m["a"] else Fraction(0)
        b = m["b"]
        if b is None:
            b = Fraction(0)
        elif b in ("", "+"):
            b = Fraction(1)
        elif b == "-":
            b = Fraction(-1)
        else:
            b = Fraction(b)

        return cls(a, b, p)

    def _coerce(self, other: Any) -> "QuadFieldElem":
        if isinstance(other, QuadFieldElem):
            if other.p != self.p:
                raise ValueError(f"Q(sqrt {self.p}) and Q(sqrt {other.p}) do not mix")
            return other
        if isinstance(other, (int, Fraction)):
            return QuadFieldElem(Fraction(other), Fraction(0), self.p)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QuadFieldElem(self.a + o.a, self.b + o.b, self.p)

    __radd__ = __add__

    def __neg__(self):
        return QuadFieldElem(-self.a, -self.b, self.p)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QuadFieldElem(self.a - o.a, self.b - o.b, self.p)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QuadFieldElem(
            self.a * o.a + self.p * self.b * o.b,
            self.a * o.b + self.b * o.a,
            self.p,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o * self.inverse()

    def __bool__(self):
        return bool(self.a) or bool(self.b)

    def __eq__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return False
        return self.a == o.a and self.b == o.b

    def __hash__(self):
        return hash((self.a, self.b, self.p))

    def conj(self) -> "QuadFieldElem":
        return QuadFieldElem(self.a, -self.b, self.p)

    def norm(self) -> Fraction:
        return self.a * self.a - self.p * self.b * self.b

    def inverse(self) -> "QuadFieldElem":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("zero has no inverse in Q(sqrt p)")
        return QuadFieldElem(self.a / n, -self.b / n, self.p)

    def is_rational(self) -> bool:
        return self.b == 0

    def reduce(self, q: int, root: int) -> int:
        """Image in F_q under sqrt(p) -> root."""
        if (root * root - self.p) % q != 0:
            raise ValueError(f"{root} is not a square root of {self.p} mod {q}")
        return (reduce_rational(self.a, q) + reduce_rational(self.b, q) * root) % q

    def __str__(self):
        if self.b == 0:
            return str(self.a)
        if self.a == 0:
            return f"{self.b}*s"
        sign = "" if self.b < 0 else "+"
        return f"{self.a}{sign}{self.b}*s"

    def __repr__(self):
        return f"QuadFieldElem({self})"


@dataclass(frozen=True)
class PrimeFieldElem:
    residue: int
    q: int

    def __post_init__(self):
        object.__setattr__(self, "residue", int(self.residue) % self.q)

    def _coerce(self, other: Any) -> "PrimeFieldElem":
        if isinstance(other, PrimeFieldElem):
            if other.q != self.q:
                raise ValueError(f"F_{self.q} and F_{other.q} do not mix")
            return other
        if isinstance(other, int):
            return PrimeFieldElem(other, self.q)
        if isinstance(other, Fraction):
            return PrimeFieldElem(reduce_rational(other, self.q), self.q)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return PrimeFieldElem(self.residue + o.residue, self.q)

    __radd__ = __add__

    def __neg__(self):
        return PrimeFieldElem(-self.residue, self.q)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return PrimeFieldElem(self.residue - o.residue, self.q)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return PrimeFieldElem(self.residue * o.residue, self.q)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o * self.inverse()

    def __pow__(self, e: int):
        return PrimeFieldElem(pow(self.residue, e, self.q), self.q)

    def __bool__(self):
        return self.residue != 0

    def __eq__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return False
        return self.residue == o.residue

    def __hash__(self):
        return hash((self.residue, self.q))

    def __int__(self):
        return self.residue

    def inverse(self) -> "PrimeFieldElem":
        if self.residue == 0:
            raise ZeroDivisionError(f"zero has no inverse in F_{self.q}")
        return PrimeFieldElem(pow(self.residue, -1, self.q), self.q)

    def __str__(self):
        return str(self.residue)


def legendre(a: int, p: int) -> int:
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def is_prime(n: int) -> bool:
    return bool(isprime(n))


def primes_up_to(n: int) -> List[int]:
    """Primes below n."""
    return [int(p) for p in primerange(2, n)]


def primitive_root(p: int) -> int:
    return int(_primitive_root(p))


def sqrt_mod(a: int, q: int) -> PrimeFieldElem:
    """Smaller square root of a mod q."""
    roots = _sqrt_mod(a % q, q, all_roots=True)
    if not roots:
        raise InertPrime(a, q)
    return PrimeFieldElem(min(int(r) for r in roots), q)


# Linear algebra over a field. Entries are Fractions, QuadFieldElems or
# PrimeFieldElems; plain ints are lifted to Fractions.


def _lift(M: Sequence[Sequence[Any]]) -> List[List[Any]]:
    return [
        [Fraction(x) if isinstance(x, int) and not isinstance(x, bool) else x for x in row]
        for row in M
    ]


def rref(M: Sequence[Sequence[Any]]) -> Tuple[List[List[Any]], List[int], int]:
    R = _lift(M)
    if not R:
        return R, [], 0

    nrows, ncols = len(R), len(R[0])
    pivots: List[int] = []
    r = 0
    for c in range(ncols):
        if r == nrows:
            break

        k = next((i for i in range(r, nrows) if R[i][c]), None)
        if k is None:
            continue

        R[r], R[k] = R[k], R[r]
        inv = 1 / R[r][c]
        R[r] = [x * inv for x in R[r]]
        for i in range(nrows):
            if i != r and R[i][c]:
                f = R[i][c]
                R[i] = [x - f * y for x, y in zip(R[i], R[r])]

        pivots.append(c)
        r += 1

    return R, pivots, r


def kernel_basis(M: Sequence[Sequence[Any]], ncols: Optional[int] = None) -> List[List[Any]]:
    """Vectors v with M v = 0, one per free column."""
    R, pivots, rank = rref(M)
    if ncols is None:
        ncols = len(R[0]) if R else 0

    sample = R[0][0] if R and R[0] else Fraction(0)
    zero = sample - sample
    one = zero + 1

    pivot_set = set(pivots)
    out = []
    for f in range(ncols):
        if f in pivot_set:
            continue
        v = [zero] * ncols
        v[f] = one
        for i, pc in enumerate(pivots):
            v[pc] = -R[i][f]
        out.append(v)

    return out


def det_q(M: Sequence[Sequence[Number]]) -> Fraction:
    R = _lift(M)
    n = len(R)
    det = Fraction(1)
    for c in range(n):
        k = next((i for i in range(c, n) if R[i][c] != 0), None)
        if k is None:
            return Fraction(0)
        if k != c:
            R[c], R[k] = R[k], R[c]
            det = -det

        det *= R[c][c]
        for i in range(c + 1, n):
            if R[i][c] != 0:
                f = R[i][c] / R[c][c]
                R[i] = [x - f * y for x, y in zip(R[i], R[c])]

    return det


def inverse_q(M: Sequence[Sequence[Number]]) -> List[List[Fraction]]:
    n = len(M)
    augmented = [
        list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(M)
    ]
    R, pivots, rank = rref(augmented)
    if pivots[:n] != list(range(n)):
        raise ZeroDivisionError("matrix is singular")

    return [row[n:] for row in R[:n]]


def smith_normal_form(A: Sequence[Sequence[int]]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (S, U, V) with U @ A @ V == S, U and V unimodular.

    S is diagonal, nonnegative, each entry dividing the next.
    """
    S = np.array([[int(x) for x in row] for row in A], dtype=object)
    if S.ndim != 2:
        S = S.reshape(len(A), 0)
    m, n = S.shape
    U = np.eye(m, dtype=int).astype(object)
    V = np.eye(n, dtype=int).astype(object)

    for t in range(min(m, n)):
        while True:
            entries = [
                (abs(S[i, j]), i, j)
                for i in range(t, m)
                for j in range(t, n)
                if S[i, j] != 0
            ]
            if not entries:
                return S, U, V

            _, i, j = min(entries)
            if i != t:
                S[[t, i]] = S[[i, t]]
                U[[t, i]] = U[[i, t]]
            if j != t:
                S[:, [t, j]] = S[:, [j, t]]
                V[:, [t, j]] = V[:, [j, t]]

            dirty = False
            pivot = S[t, t]
            for i in range(t + 1, m):
                f = S[i, t] // pivot
                if f:
                    S[i] = S[i] - f * S[t]
                    U[i] = U[i] - f * U[t]
                if S[i, t] != 0:
                    dirty = True

            for j in range(t + 1, n):
                f = S[t, j] // pivot
                if f:
                    S[:, j] = S[:, j] - f * S[:, t]
                    V[:, j] = V[:, j] - f * V[:, t]
                if S[t, j] != 0:
                    dirty = True

            if dirty:
                continue

            bad = next(
                (
                    i
                    for i in range(t + 1, m)
                    for j in range(t + 1, n)
                    if S[i, j] % pivot != 0
                ),
                None,
            )
            if bad is None:
                break

            # pull the offending row into row t; the next pass reduces it
            S[t] = S[t] + S[bad]
            U[t] = U[t] + U[bad]

        if S[t, t] < 0:
            S[t] = -S[t]
            U[t] = -U[t]

    return S, U, V


def invariant_factors(A: Sequence[Sequence[int]]) -> List[int]:
    S, _, _ = smith_normal_form(A)
    return [int(S[i, i]) for i in range(min(S.shape))]


def unimodular_inverse(U: np.ndarray) -> np.ndarray:
    inv = inverse_q(U.tolist())
    assert all(x.denominator == 1 for row in inv for x in row), "not unimodular"
    return np.array([[x.numerator for x in row] for row in inv], dtype=object)


# Linear algebra over F_q on int64 arrays. Entries stay below q; callers keep
# q * q below 2**63.


def rref_mod(M: np.ndarray, q: int) -> Tuple[np.ndarray, List[int], int]:
    R = np.array(M, dtype=np.int64) % q
    if R.size == 0:
        return R, [], 0

    nrows, ncols = R.shape
    pivots: List[int] = []
    r = 0
    for c in range(ncols):
        if r == nrows:
            break

        nz = np.flatnonzero(R[r:, c])
        if nz.size == 0:
            continue

        k = r + int(nz[0])
        if k != r:
            R[[r, k]] = R[[k, r]]

        R[r] = R[r] * pow(int(R[r, c]), -1, q) % q
        col = R[:, c].copy()
        col[r] = 0
        rows = np.flatnonzero(col)
        if rows.size:
            R[rows] = (R[rows] - np.outer(col[rows], R[r])) % q

        pivots.append(c)
        r += 1

    return R, pivots, r


def rank_mod(M: np.ndarray, q: int) -> int:
    return rref_mod(M, q)[2]


def kernel_mod(M: np.ndarray, q: int, ncols: Optional[int] = None) -> np.ndarray:
    """Rows spanning {x : M x = 0} over F_q."""
    M = np.array(M, dtype=np.int64)
    if ncols is None:
        ncols = M.shape[1]
    if M.size == 0:
        return np.eye(ncols, dtype=np.int64)

    R, pivots, rank = rref_mod(M, q)
    pivot_set = set(pivots)
    free = [c for c in range(ncols) if c not in pivot_set]
    K = np.zeros((len(free), ncols), dtype=np.int64)
    for idx, f in enumerate(free):
        K[idx, f] = 1
        if pivots:
            K[idx, pivots] = (-R[:rank, f]) % q

    return K
