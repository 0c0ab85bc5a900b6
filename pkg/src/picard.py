"""Divisor-class arithmetic on X_H(p) reduced at a split prime q.

A class is carried by the subspace W = H^0(O(3) - D) of cubic forms for an
effective divisor D of degree 2g-2; it stands for [D - div(l0)]. Every
operation is linear algebra over F_q on truncated q-expansions.
"""
import math
import time
import logging
import itertools
import numpy as np

from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Dict, Tuple, Optional, Callable, Any, Sequence, Union

from .const import (
    GroupPresentation,
    ConfigError,
    ContractViolation,
    DegenerateChoice,
    DimensionContractError,
    NotAnAutomorphism,
    OrderBoundExceeded,
    PrecisionError,
)
from .arith import (
    QuadFieldElem,
    PrimeFieldElem,
    rref_mod,
    kernel_mod,
    reduce_rational,
    sqrt_mod,
    smith_normal_form,
    unimodular_inverse,
)
from .qseries import QExpansionBasis
from .modelbuilder import CurveModel, poly_eval

logger = logging.getLogger(__name__)

GENERATORS = ("c3-c1", "c4-c1", "c2-c1")
SWAP = {"c3-c1": "c4-c1", "c4-c1": "c3-c1", "c2-c1": "c2-c1"}
TRACE_LABEL = "c3+c4-2c1"

# coefficients tried for l0 and l1, per basis vector
_DIGITS = 4
_MAX_CANDIDATES = 5000


def _digit_vectors(m: int):
    """Nonzero vectors over {0..3}^m, little-endian counting order."""
    for it in range(1, min(_DIGITS**m, _MAX_CANDIDATES + 1)):
        yield [(it // _DIGITS**k) % _DIGITS for k in range(m)]


@dataclass
class FormSpace:
    k: int
    monomials: List[Tuple[int, ...]]
    series: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.monomials)


class PicardSession:
    """Section spaces F_1..F_6 and the fixed choices l0, l1 at one prime q."""

    def __init__(self, p: int, g: int, q: int, u: np.ndarray, cusps: Dict[str, np.ndarray]):
        self.p = p
        self.g = g
        self.q = q
        self.N = u.shape[1]
        self.u = u
        self.cusps = cusps
        self.F: Dict[int, FormSpace] = {}
        self.l0: List[int] = []
        self.l1: List[int] = []
        self.adds = 0
        self._shifted: Dict[int, np.ndarray] = {}
        self._fixed: Dict[Tuple[int, int], np.ndarray] = {}

    def _toeplitz(self, a: np.ndarray) -> np.ndarray:
        n = np.arange(self.N)
        idx = n[None, :] - n[:, None]
        return np.where(idx >= 0, a[np.clip(idx, 0, None)], 0)

    def conv(self, a: np.ndarray, B: np.ndarray) -> np.ndarray:
        """Row-wise products a * B_i truncated at N."""
        return np.atleast_2d(B) @ self._toeplitz(a) % self.q

    def _shift(self, B: np.ndarray) -> np.ndarray:
        """S[m, i, n] = B_i[n - m], zero when n < m."""
        n = np.arange(self.N)
        idx = n[None, :] - n[:, None]
        S = np.atleast_2d(B)[:, np.clip(idx, 0, None)].transpose(1, 0, 2)
        return np.where(idx[:, None, :] >= 0, S, 0)

    def shifted(self, k: int) -> np.ndarray:
        if k not in self._shifted:
            self._shifted[k] = self._shift(self.F[k].series)
        return self._shifted[k]

    def products(self, V: Union[np.ndarray, int], k: int) -> np.ndarray:
        """v * b for v in V and b in F_k, shape (len V, dim F_k, N).

        An integer V names the space F_V; those products are kept.
        """
        if isinstance(V, int):
            if (V, k) not in self._fixed:
                self._fixed[(V, k)] = self.products(self.F[V].series, k)
            return self._fixed[(V, k)]
        return np.tensordot(np.atleast_2d(V), self.shifted(k), axes=(1, 0)) % self.q

    def span(self, rows: np.ndarray) -> np.ndarray:
        rows = np.atleast_2d(rows)
        if rows.size == 0:
            return np.zeros((0, self.N), dtype=np.int64)
        R, _, rank = rref_mod(rows, self.q)
        return R[:rank]

    def ann(self, U: np.ndarray) -> np.ndarray:
        return kernel_mod(U.reshape(-1, self.N), self.q, self.N)

    def mult_space(self, A: np.ndarray, k: int) -> np.ndarray:
        A = np.atleast_2d(A)
        if len(A) == 0:
            return np.zeros((0, self.N), dtype=np.int64)
        return self.span(self.products(A, k).reshape(-1, self.N))

    def mult(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        A, B = np.atleast_2d(A), np.atleast_2d(B)
        if len(A) == 0 or len(B) == 0:
            return np.zeros((0, self.N), dtype=np.int64)
        P = np.tensordot(A, self._shift(B), axes=(1, 0)) % self.q
        return self.span(P.reshape(-1, self.N))

    def divide(self, U: np.ndarray, V: Union[np.ndarray, int], k: int) -> np.ndarray:
        """{t in F_k : t * V in U}; an integer V names F_V."""
        if k not in self.F:
            raise ContractViolation(f"degree {k} is outside F_1..F_6")

        B = self.F[k].series
        A = self.ann(U)
        P = self.products(V, k)
        if len(A) and len(P):
            conds = P @ A.T % self.q
            X = kernel_mod(conds.transpose(0, 2, 1).reshape(-1, len(B)), self.q, len(B))
        else:
            X = np.eye(len(B), dtype=np.int64)
        return self.span(X @ B % self.q)

    @staticmethod
    def first(U: np.ndarray) -> np.ndarray:
        if len(U) == 0:
            raise ContractViolation("expected a nonzero section")
        return U[0]

    def linear_series(self, coeffs: Sequence[int]) -> np.ndarray:
        return np.asarray(coeffs, dtype=np.int64) @ self.u % self.q

    def linear_value(self, coeffs: Sequence[int], pt: np.ndarray) -> int:
        return int(np.dot(np.asarray(coeffs, dtype=np.int64), pt) % self.q)

    @cached_property
    def _cubic_readoff(self) -> Tuple[np.ndarray, List[int]]:
        B3 = self.F[3].series
        R, pivots, rank = rref_mod(np.hstack([B3, np.eye(len(B3), dtype=np.int64)]), self.q)
        if rank != len(B3) or pivots[-1] >= self.N:
            raise DimensionContractError("truncated cubic series are not independent")
        return R[:rank, self.N :], pivots[:rank]

    @cached_property
    def _cubic_exponents(self) -> np.ndarray:
        return np.array(self.F[3].monomials, dtype=np.int64)

    def cubic_value(self, t: np.ndarray, pt: np.ndarray) -> int:
        """Value at pt of the cubic form whose series is t."""
        T, pivots = self._cubic_readoff
        coords = t[pivots] @ T % self.q
        powers = np.ones((len(pt), 4), dtype=np.int64)
        for e in range(1, 4):
            powers[:, e] = powers[:, e - 1] * pt % self.q
        monvals = np.ones(len(self._cubic_exponents), dtype=np.int64)
        for i, column in enumerate(self._cubic_exponents.T):
            monvals = monvals * powers[i, column] % self.q
        return int(coords @ monvals % self.q)

    def add_raw(self, W1: np.ndarray, W2: np.ndarray) -> np.ndarray:
        self.adds += 1
        U = self.mult(W1, W2)
        U2 = self.divide(U, 2, 4)
        s = self.first(self.divide(U2, 1, 3))
        r = self.first(self.divide(self.mult_space(s, 3), U2, 2))
        W = self.divide(self.mult(r, U2), s, 3)
        if len(W) != 3 * self.g - 3:
            raise ContractViolation(f"sum has dimension {len(W)}, expected {3 * self.g - 3}")
        return W

    def neg_raw(self, W: np.ndarray) -> np.ndarray:
        s = self.first(self.divide(W, 1, 2))
        return self.divide(self.mult_space(s, 4), W, 3)

    def is_zero_raw(self, W: np.ndarray) -> bool:
        return len(self.divide(W, 2, 1)) > 0

    def key_raw(self, W: np.ndarray) -> bytes:
        """Canonical fingerprint of the class of W.

        The section of H^0(O(2) - D) with the largest order at c1 fixes a
        unique effective divisor in the class.
        """
        top = self.divide(W, 1, 2)[-1]
        R = self.divide(self.mult_space(top, 4), W, 3)
        return np.ascontiguousarray(R).tobytes()

    @cached_property
    def zero(self) -> "DivisorClass":
        return DivisorClass(self, self.mult_space(self.linear_series(self.l0), 2))

    @cached_property
    def _residual(self) -> np.ndarray:
        # cubics vanishing on R, where div(l1) = c1 + R
        V1 = kernel_mod(self.cusps["c1"][None, :], self.q, self.g) @ self.u % self.q
        W = self.divide(self.mult_space(self.linear_series(self.l1), 3), V1, 3)
        if len(W) != 3 * self.g - 2:
            raise DimensionContractError(f"W(R) has dimension {len(W)}, expected {3 * self.g - 2}")
        return W

    @cached_property
    def _at_cusp(self) -> Dict[str, "DivisorClass"]:
        out = {}
        for label, pt in self.cusps.items():
            vals = np.array([self.cubic_value(t, pt) for t in self._residual], dtype=np.int64)
            K = kernel_mod(vals[None, :], self.q, len(self._residual))
            W = self.span(K @ self._residual % self.q)
            if len(W) != 3 * self.g - 3:
                raise DegenerateChoice(f"l1 forces a bad residual at {label}")
            out[label] = DivisorClass(self, W)
        return out

    def cusp_difference(self, i: str, j: str) -> "DivisorClass":
        return self._at_cusp[i] - self._at_cusp[j]

    def choices(self) -> Dict[str, List[int]]:
        return {"l0": list(self.l0), "l1": list(self.l1)}


@dataclass(eq=False)
class DivisorClass:
    session: PicardSession
    W: np.ndarray

    def __add__(self, other: "DivisorClass") -> "DivisorClass":
        if other.session is not self.session:
            raise ContractViolation("classes from different sessions")
        return DivisorClass(self.session, self.session.add_raw(self.W, other.W))

    def __neg__(self) -> "DivisorClass":
        return DivisorClass(self.session, self.session.neg_raw(self.W))

    def __sub__(self, other: "DivisorClass") -> "DivisorClass":
        return self + (-other)

    def __mul__(self, n: int) -> "DivisorClass":
        if n < 0:
            return (-self) * (-n)
        result, base = self.session.zero, self
        while n:
            if n & 1:
                result = result + base
            n >>= 1
            if n:
                base = base + base
        return result

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return self.session.is_zero_raw(self.W)

    @cached_property
    def key(self) -> bytes:
        return self.session.key_raw(self.W)

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, DivisorClass):
            return NotImplemented
        return self.key == other.key

    def __hash__(self):
        return hash(self.key)


def _check_level(p: int):
    if p % 4 != 1:
        raise ConfigError(f"X_H({p}) needs p = 1 mod 4")


def init_session(
    basis: QExpansionBasis,
    cusps: Dict[str, Sequence[QuadFieldElem]],
    q: int,
    model: Optional[CurveModel] = None,
) -> PicardSession:
    """Reduce the basis and cusps at q and build F_1..F_6.

    Raises InertPrime, BadReduction or DimensionContractError when q is not
    usable; the caller moves on to the next prime.
    """
    p, g = basis.p, basis.gH
    _check_level(p)
    if q in (2, p):
        raise ConfigError(f"q = {q} lies above 2 or p")

    N = 6 * (2 * g - 2) + 1
    # int64 dot products of length N over residues below q
    if q * q * N >= 2**63:
        raise ConfigError(f"q = {q} is too large for int64 arithmetic on series of length {N}")

    started = time.time()
    root = int(sqrt_mod(p, q))
    if basis.prec < N + 1:
        raise PrecisionError(N + 1, basis.prec, "divisor arithmetic on F_6")

    u = np.array(
        [[reduce_rational(row[n + 1], q, "basis coefficient") for n in range(N)] for row in basis.rows],
        dtype=np.int64,
    )
    points = {
        label: np.array([x.reduce(q, root) for x in coords], dtype=np.int64)
        for label, coords in cusps.items()
    }
    session = PicardSession(p, g, q, u, points)

    if model is not None:
        for label, pt in points.items():
            P = [PrimeFieldElem(int(x), q) for x in pt]
            if any(poly_eval(F, P) for _, _, F in model.polys):
                raise ContractViolation(f"reduced {label} is off the model mod {q}")

    eye = np.eye(g, dtype=np.int64)
    session.F[1] = FormSpace(1, [tuple(int(x) for x in r) for r in eye], u.copy())
    for k in range(2, 7):
        prev = session.F[k - 1]
        seen, monos, rows = set(), [], []
        for m, s in zip(prev.monomials, prev.series):
            for i in range(g):
                e = tuple(x + int(i == j) for j, x in enumerate(m))
                if e in seen:
                    continue
                seen.add(e)
                monos.append(e)
                rows.append(session.conv(s, u[i])[0])

        _, pivots, _ = rref_mod(np.array(rows).T, q)
        expected = k * (2 * g - 2) - g + 1
        if len(pivots) != expected:
            raise DimensionContractError(f"dim F_{k} = {len(pivots)} mod {q}, expected {expected}")
        session.F[k] = FormSpace(k, [monos[i] for i in pivots], np.array([rows[i] for i in pivots]))

    c = points
    others = [c["c2"], c["c3"], c["c4"]]
    session.l0 = next(
        (v for v in _digit_vectors(g) if all(session.linear_value(v, pt) for pt in c.values())),
        [],
    )
    if not session.l0:
        raise DegenerateChoice(f"no linear form avoids all cusps mod {q}")

    V1 = kernel_mod(c["c1"][None, :], q, g)
    for digits in _digit_vectors(len(V1)):
        co = (np.array(digits, dtype=np.int64) @ V1 % q).tolist()
        s = session.linear_series(co)
        if s[0] == 0 and s[1] != 0 and all(session.linear_value(co, pt) for pt in others):
            session.l1 = co
            break
    else:
        raise DegenerateChoice(f"no linear form with a simple zero at c1 only, mod {q}")

    dims = [session.F[k].dim for k in range(1, 7)]
    logger.debug(f"p={p} q={q}: dim F_k = {dims}, l0={session.l0}, l1={session.l1}")
    logger.info(f"p={p} q={q}: session ready in {time.time() - started:.1f}s")
    return session


def class_of_cusp_difference(session: PicardSession, i: str, j: str) -> DivisorClass:
    return session.cusp_difference(i, j)


def add(x: DivisorClass, y: DivisorClass) -> DivisorClass:
    return x + y


def neg(x: DivisorClass) -> DivisorClass:
    return -x


def is_zero(x: DivisorClass) -> bool:
    return x.is_zero()


def order(x: DivisorClass, bound: int = 1000) -> int:
    y = x
    for k in range(1, bound + 1):
        if y.is_zero():
            return k
        y = y + x
    raise OrderBoundExceeded(f"order exceeds {bound}")


class SubgroupBuilder:
    """Grows <g_1, ..., g_k> one generator at a time.

    Only the multiples of g_1 are stored, under their keys. An element y lies
    in the subgroup when y + sum j_i g_i hits that table for some offset with
    0 <= j_i < c_i (i >= 2), where c_i is the diagonal of the triangular
    relation matrix. Coefficients are normalized to 0 <= a_i < c_i.
    """

    def __init__(self, zero: Any, plus: Callable[[Any, Any], Any], key: Callable[[Any], Any]):
        self.zero = zero
        self.plus = plus
        self.key = key
        self.multiples: Dict[Any, int] = {key(zero): 0}
        self.offsets: List[Tuple[Tuple[int, ...], Any]] = [((), None)]
        self.relations: List[List[int]] = []

    @property
    def size(self) -> int:
        return math.prod(r[i] for i, r in enumerate(self.relations))

    def _normalize(self, cs: List[int]) -> Tuple[int, ...]:
        cs = list(cs)
        for i in reversed(range(len(cs))):
            r = self.relations[i]
            t = cs[i] // r[i]
            if t:
                cs = [a - t * b for a, b in zip(cs, r + [0] * (len(cs) - len(r)))]
        return tuple(cs)

    def contains(self, x: Any) -> Optional[Tuple[int, ...]]:
        if not self.relations:
            return () if self.key(x) == self.key(self.zero) else None

        for js, offset in self.offsets:
            y = x if offset is None else self.plus(x, offset)
            a = self.multiples.get(self.key(y))
            if a is not None:
                return self._normalize([a] + [-j for j in js])
        return None

    def _first(self, x: Any, bound: int) -> List[int]:
        zero_key = self.key(self.zero)
        y, c = x, 1
        while (k := self.key(y)) != zero_key:
            self.multiples[k] = c
            y = self.plus(y, x)
            c += 1
            if c > bound:
                raise OrderBoundExceeded(f"generator 1 has order above {bound}")
        return [c]

    def adjoin(self, x: Any, bound: int = 1000) -> List[int]:
        n = len(self.relations)
        if n == 0:
            relation = self._first(x, bound)
            self.relations.append(relation)
            return relation

        y, c = x, 1
        while (hit := self.contains(y)) is None:
            y = self.plus(y, x)
            c += 1
            if c > bound:
                raise OrderBoundExceeded(f"generator {n + 1} has no multiple in the group below {bound}")

        relation = [-v for v in hit] + [c]
        for r in self.relations:
            r.append(0)
        self.relations.append(relation)

        offsets = []
        for js, offset in self.offsets:
            e = offset
            for j in range(c):
                offsets.append((js + (j,), e))
                if j + 1 < c:
                    e = x if e is None else self.plus(e, x)
        self.offsets = offsets
        return relation


def _presentation(labels: Sequence[str], relations: List[List[int]]) -> GroupPresentation:
    S, _, _ = smith_normal_form(relations)
    factors = tuple(int(S[i, i]) for i in range(min(S.shape)))
    return GroupPresentation(tuple(labels), tuple(tuple(r) for r in relations), factors)


def subgroup_structure(
    generators: Sequence[Tuple[str, DivisorClass]], bound: int = 1000
) -> GroupPresentation:
    labels = [label for label, _ in generators]
    session = generators[0][1].session
    builder = SubgroupBuilder(session.zero, lambda a, b: a + b, lambda a: a.key)
    for label, x in generators:
        relation = builder.adjoin(x, bound)
        logger.debug(f"{label}: relation {relation}, subgroup size {builder.size}")

    presentation = _presentation(labels, builder.relations)
    assert presentation.order == builder.size, "relation lattice does not match the enumeration"
    return presentation


def membership(presentation: GroupPresentation, label: str) -> bool:
    """Whether the generator `label` lies in the span of those adjoined before it."""
    i = presentation.labels.index(label)
    return presentation.relations[i][i] == 1


class _AbstractGroup:
    """Z^k modulo a full-rank relation lattice, via its Smith form."""

    def __init__(self, relations: Sequence[Sequence[int]]):
        S, _, V = smith_normal_form(relations)
        self.moduli = [int(S[i, i]) for i in range(len(relations))]
        if any(m == 0 for m in self.moduli):
            raise ContractViolation("relation lattice is not of full rank")
        self.V = V
        self.Vinv = unimodular_inverse(V)

    def reduce(self, x: Sequence[int]) -> Tuple[int, ...]:
        z = np.array(list(x), dtype=object) @ self.V
        return tuple(int(a) % m for a, m in zip(z, self.moduli))

    def lift(self, z: Sequence[int]) -> List[int]:
        return [int(a) for a in np.array(list(z), dtype=object) @ self.Vinv]

    def plus(self, a: Tuple[int, ...], b: Tuple[int, ...]) -> Tuple[int, ...]:
        return tuple((x + y) % m for x, y, m in zip(a, b, self.moduli))

    def elements(self):
        return itertools.product(*[range(m) for m in self.moduli])


def galois_invariants(
    presentation: GroupPresentation, swap: Dict[str, str], trace_label: str = TRACE_LABEL
) -> Tuple[GroupPresentation, bool]:
    """Fixed subgroup of the automorphism permuting generators by `swap`.

    Returns its presentation, with the trace x + sigma(x) of the first moved
    generator adjoined first, and whether that trace alone generates it.
    """
    labels = list(presentation.labels)
    k = len(labels)
    perm = [labels.index(swap.get(label, label)) for label in labels]
    if any(perm[perm[i]] != i for i in range(k)):
        raise NotAnAutomorphism("swap is not an involution on the generators")

    def act(x: Sequence[int]) -> List[int]:
        y = [0] * k
        for i, v in enumerate(x):
            y[perm[i]] += v
        return y

    G = _AbstractGroup(presentation.relations)
    zero = tuple(0 for _ in G.moduli)
    for r in presentation.relations:
        if G.reduce(act(r)) != zero:
            raise NotAnAutomorphism(f"relation {list(r)} is not mapped into the lattice")

    moved = next((i for i in range(k) if perm[i] != i), 0)
    e = [int(i == moved) for i in range(k)]
    trace = G.reduce([a + b for a, b in zip(e, act(e))])

    builder = SubgroupBuilder(zero, G.plus, lambda z: z)
    names = [trace_label]
    builder.adjoin(trace, bound=presentation.order + 1)
    trace_order = builder.size

    for z in G.elements():
        x = G.lift(z)
        if G.reduce([a - b for a, b in zip(act(x), x)]) != zero:
            continue
        if builder.contains(z) is None:
            names.append(f"h{len(names) + 1}")
            builder.adjoin(z, bound=presentation.order + 1)

    fixed = _presentation(names, builder.relations)
    return fixed, trace_order == fixed.order


@dataclass
class CuspidalResult:
    q: int
    presentation: GroupPresentation
    rational: GroupPresentation
    generator_orders: Dict[str, int]
    membership: bool
    trace_generates: bool
    choices: Dict[str, List[int]] = field(default_factory=dict)
    seconds: float = 0.0


def cuspidal_subgroup(session: PicardSession, bound: int = 1000) -> CuspidalResult:
    started = time.time()
    generators = [(label, session.cusp_difference(*label.split("-"))) for label in GENERATORS]
    orders = {label: order(x, bound) for label, x in generators}
    presentation = subgroup_structure(generators, bound)
    rational, trace_generates = galois_invariants(presentation, SWAP)

    result = CuspidalResult(
        session.q,
        presentation,
        rational,
        orders,
        membership(presentation, "c2-c1"),
        trace_generates,
        session.choices(),
        time.time() - started,
    )
    logger.info(
        f"p={session.p} q={session.q}: C_H = {presentation}, rational {rational} "
        f"({session.adds} additions, {result.seconds:.1f}s)"
    )
    return result


@dataclass
class SelfCheck:
    words: int = 0
    failures: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def self_check(session: PicardSession, rng, words: int = 100, span: int = 3) -> SelfCheck:
    """Group laws on random words in the cusp differences, plus the cocycle rule."""
    check = SelfCheck()
    gens = [session.cusp_difference(*label.split("-")) for label in GENERATORS]
    zero = session.zero

    def word() -> DivisorClass:
        x = zero
        for g in gens:
            x = x + g * rng.randint(-span, span)
        return x

    if not (gens[0] - gens[0]).is_zero() or not zero.is_zero():
        check.failures.append("zero class is not recognised")

    for n in range(words):
        a, b, c = word(), word(), word()
        check.words += 1
        if a + b != b + a:
            check.failures.append(f"word {n}: a + b != b + a")
        if (a + b) + c != a + (b + c):
            check.failures.append(f"word {n}: associativity")
        if not (a + (-a)).is_zero():
            check.failures.append(f"word {n}: a - a is not zero")
        if a + zero != a:
            check.failures.append(f"word {n}: a + 0 != a")

    labels = sorted(session.cusps)
    for i, j, k in itertools.permutations(labels, 3):
        lhs = session.cusp_difference(i, j) + session.cusp_difference(j, k)
        if lhs != session.cusp_difference(i, k):
            check.failures.append(f"cocycle {i},{j},{k}")

    return check
