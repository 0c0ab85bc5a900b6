import logging
import itertools
import sympy
import numpy as np

from math import comb, gcd, lcm
from fractions import Fraction
from functools import reduce
from collections import Counter
from dataclasses import dataclass, field
from typing import List, Dict, Tuple, Optional, Sequence, Any

from .const import (
    CurveKind,
    Branch,
    ModelSearchError,
    HyperellipticError,
    ConfigError,
    PrecisionError,
)
from .arith import rref, kernel_basis, inverse_q, reduce_rational, PrimeFieldElem
from .qseries import QSeries, QExpansionBasis, sturm_precision

logger = logging.getLogger(__name__)

Exponents = Tuple[int, ...]
Poly = Dict[Exponents, Fraction]

# past this many candidate points fiber_sizes lifts X_0 points instead
BRUTE_FORCE_LIMIT = 200_000


def monomials(n: int, d: int) -> List[Exponents]:
    """Degree-d exponent vectors in n variables, x1^d first."""
    if n == 1:
        return [(d,)]
    out = []
    for e in range(d, -1, -1):
        out += [(e,) + rest for rest in monomials(n - 1, d - e)]
    return out


def _grlex(e: Exponents):
    return (sum(e), e)


def normalize_poly(poly: Poly) -> Poly:
    """Integer coefficients with content 1 and a positive leading term."""
    poly = {e: Fraction(c) for e, c in poly.items() if c}
    if not poly:
        return poly
    den = reduce(lcm, (c.denominator for c in poly.values()), 1)
    ints = {e: int(c * den) for e, c in poly.items()}
    content = reduce(gcd, (abs(c) for c in ints.values()), 0)
    lead = max(ints, key=_grlex)
    sign = -1 if ints[lead] < 0 else 1
    return {e: Fraction(sign * c // content) for e, c in ints.items()}


def poly_mul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = out.get(e, Fraction(0)) + ca * cb
    return {e: c for e, c in out.items() if c}


def poly_diff(poly: Poly, i: int) -> Poly:
    out: Poly = {}
    for e, c in poly.items():
        if e[i]:
            d = list(e)
            d[i] -= 1
            out[tuple(d)] = c * e[i]
    return out


def _power(x: Any, e: int) -> Any:
    result = None
    for _ in range(e):
        result = x if result is None else result * x
    return result


def _zero_like(x: Any) -> Any:
    return x - x


def poly_eval(poly: Poly, point: Sequence[Any]) -> Any:
    total = _zero_like(point[0])
    for exps, c in poly.items():
        term = c
        for x, e in zip(point, exps):
            if e:
                term = term * _power(x, e)
        total = total + term
    return total


def parse_poly(text: str, nvars: int) -> Poly:
    xs = sympy.symbols(f"x1:{nvars + 1}")
    expr = sympy.parse_expr(text, local_dict={str(x): x for x in xs})
    poly = sympy.Poly(expr, *xs)
    return {
        tuple(int(k) for k in e): Fraction(int(c.p), int(c.q)) for e, c in poly.as_dict().items()
    }


def format_poly(poly: Poly, nvars: int) -> str:
    xs = sympy.symbols(f"x1:{nvars + 1}")
    expr = sympy.Add(
        *[
            sympy.Rational(c.numerator, c.denominator) * sympy.Mul(*[x**k for x, k in zip(xs, e)])
            for e, c in poly.items()
        ]
    )
    return sympy.sstr(expr, order="grlex")


@dataclass
class CurveModel:
    kind: CurveKind
    nvars: int
    genus: int
    # canonical: (degree, name, polynomial) per generator
    polys: List[Tuple[int, str, Poly]] = field(default_factory=list)
    # hyperelliptic: y^2 = sum f[i] x^i
    f: List[Fraction] = field(default_factory=list)
    label: str = ""

    @property
    def degree_profile(self) -> Dict[int, int]:
        return dict(Counter(d for d, _, _ in self.polys))

    @property
    def quadrics(self) -> List[Poly]:
        return [P for d, _, P in self.polys if d == 2]

    @property
    def cubics(self) -> List[Poly]:
        return [P for d, _, P in self.polys if d == 3]

    def summary(self) -> Dict[str, Any]:
        if self.kind.is_canonical():
            return {
                "kind": self.kind.value,
                "genus": self.genus,
                "nvars": self.nvars,
                "degrees": {str(k): v for k, v in sorted(self.degree_profile.items())},
            }
        return {
            "kind": self.kind.value,
            "genus": self.genus,
            "f": [str(c) for c in self.f],
            "degree": len(self.f) - 1,
        }

    def lines(self) -> List[str]:
        """Model output format: one generator per line, degree first."""
        if self.kind.is_canonical():
            return [f"{d} {format_poly(normalize_poly(P), self.nvars)}" for d, _, P in self.polys]

        x = sympy.Symbol("x")
        fx = sum(sympy.Rational(c.numerator, c.denominator) * x**i for i, c in enumerate(self.f))
        return [f"y^2 = {sympy.sstr(fx, order='grlex')}", " ".join(str(c) for c in self.f)]


@dataclass(frozen=True)
class DegreeAccounting:
    monomials: int
    lq_rank: int
    cubics: int
    dim_f3: int

    @property
    def holds(self) -> bool:
        return self.monomials == self.lq_rank + self.cubics + self.dim_f3


def _monomial_series(basis: QExpansionBasis, monos: List[Exponents], prec: int) -> List[QSeries]:
    rows = [r.truncate(prec) for r in basis.rows]
    cache: Dict[Exponents, QSeries] = {(0,) * basis.gH: QSeries.constant(1, prec)}

    def get(e: Exponents) -> QSeries:
        if e not in cache:
            i = next(k for k, x in enumerate(e) if x)
            cache[e] = get(e[:i] + (e[i] - 1,) + e[i + 1 :]) * rows[i]
        return cache[e]

    return [get(e) for e in monos]


def find_relations(basis: QExpansionBasis, d: int, prec: Optional[int] = None) -> List[Poly]:
    """Degree-d forms vanishing on the basis, certified at the Sturm precision."""
    r = sturm_precision(d, basis.index) if prec is None else prec
    if r > basis.prec:
        raise PrecisionError(r, basis.prec, f"Sturm bound for degree {d}")

    monos = monomials(basis.gH, d)
    series = _monomial_series(basis, monos, r)
    A = [[s[k] for s in series] for k in range(r)]
    K = kernel_basis(A, len(monos))
    logger.debug(f"degree {d}: {len(monos)} monomials, {len(K)} relations at precision {r}")

    return [normalize_poly({m: c for m, c in zip(monos, v) if c}) for v in K]


def certify(basis: QExpansionBasis, poly: Poly, prec: int) -> bool:
    """Whether poly(f_1, ..., f_gH) vanishes to precision prec."""
    prec = min(prec, basis.prec)
    monos = list(poly.keys())
    series = _monomial_series(basis, monos, prec)
    total = QSeries.constant(0, prec)
    for m, s in zip(monos, series):
        total = total + s.scale(poly[m])
    return total.is_zero()


def _vector(poly: Poly, position: Dict[Exponents, int]) -> List[Fraction]:
    v = [Fraction(0)] * len(position)
    for e, c in poly.items():
        v[position[e]] = Fraction(c)
    return v


def _reduce(echelon: List[Tuple[int, List[Fraction]]], v: List[Fraction]) -> List[Fraction]:
    for piv, row in echelon:
        if v[piv]:
            f = v[piv]
            v = [a - f * b for a, b in zip(v, row)]
    return v


def cubic_complement(
    g: int, quadrics: List[Poly], cubics: List[Poly]
) -> Tuple[List[Poly], DegreeAccounting]:
    """Cubic relations outside the span of linear * quadric products."""
    monos3 = monomials(g, 3)
    position = {m: i for i, m in enumerate(monos3)}

    lq = []
    for i in range(g):
        x = {tuple(int(k == i) for k in range(g)): Fraction(1)}
        lq += [_vector(poly_mul(x, Q), position) for Q in quadrics]

    R, pivots, rank = rref(lq) if lq else ([], [], 0)
    echelon = [(pc, R[k]) for k, pc in enumerate(pivots)]

    new = []
    for C in cubics:
        v = _reduce(echelon, _vector(C, position))
        piv = next((k for k, a in enumerate(v) if a), None)
        if piv is None:
            continue
        v = [a / v[piv] for a in v]
        echelon.append((piv, v))
        new.append(C)

    accounting = DegreeAccounting(comb(g + 2, 3), rank, len(new), 3 * (2 * g - 2) - g + 1)
    return new, accounting


def build_canonical_model(basis: QExpansionBasis, label: str = "X_H") -> CurveModel:
    g = basis.gH
    if g < 3:
        raise HyperellipticError(f"{label} has genus {g}; every such curve is hyperelliptic")

    quadrics = find_relations(basis, 2)
    n = len(quadrics)
    if n == (g - 1) * (g - 2) // 2 and n != (g - 2) * (g - 3) // 2:
        raise HyperellipticError(f"{label}: {n} quadrics, the canonical image is a rational normal curve")
    if n != (g - 2) * (g - 3) // 2:
        raise ModelSearchError(f"{label}: found {n} quadrics, expected {(g - 2) * (g - 3) // 2}")

    cubics, accounting = cubic_complement(g, quadrics, find_relations(basis, 3))
    if not accounting.holds:
        raise ModelSearchError(f"{label}: degree-3 accounting fails ({accounting})")

    polys = [(2, f"Q{i + 1}", Q) for i, Q in enumerate(quadrics)]
    polys += [(3, f"C{i + 1}", C) for i, C in enumerate(cubics)]
    logger.info(f"{label}({basis.p}): {len(quadrics)} quadrics, {len(cubics)} cubics")

    return CurveModel(CurveKind.CANONICAL, g, g, polys, label=label)


def degree_accounting(basis: QExpansionBasis, model: CurveModel) -> DegreeAccounting:
    _, accounting = cubic_complement(model.genus, model.quadrics, find_relations(basis, 3))
    return accounting


def hyperelliptic_degree(basis0: QExpansionBasis) -> int:
    """2g+1 when a differential has order 2(g-1) at infinity, else 2g+2.

    In an echelon basis the largest q-valuation of a combination is the
    largest pivot. Pivots 1..g mean the cusp at infinity is not a
    Weierstrass point, which gives 2g+2.
    """
    g = basis0.gH
    return 2 * g + 1 if max(basis0.pivots) == 2 * g - 1 else 2 * g + 2


def _x_and_differential(basis0: QExpansionBasis, prec: int) -> Tuple[QSeries, QSeries, QSeries]:
    g = basis0.gH
    A = basis0.rows[g - 2].truncate(prec)
    B = basis0.rows[g - 1].truncate(prec)
    # y * f_g^(g+1) with x = f_{g-1}/f_g and y = (dx/dq)(q/f_g)
    S = (A.theta() * B - A * B.theta()) * B.power(g - 2)
    return A, B, S


def build_hyperelliptic_model(basis0: QExpansionBasis, label: str = "X_0") -> CurveModel:
    g = basis0.gH
    degree = hyperelliptic_degree(basis0)
    if degree == 2 * g + 1:
        raise ModelSearchError(f"{label}: infinity is a Weierstrass point (pivots {basis0.pivots})")
    if g < 2 or basis0.pivots != list(range(1, g + 1)):
        raise ModelSearchError(f"{label}: hyperelliptic branch needs pivots 1..g, got {basis0.pivots}")

    r = sturm_precision(2 * g + 2, basis0.index)
    if r > basis0.prec:
        raise PrecisionError(r, basis0.prec, f"Sturm bound for weight {2 * (2 * g + 2)}")

    A, B, S = _x_and_differential(basis0, r)
    Apow = [QSeries.constant(1, r)]
    Bpow = [QSeries.constant(1, r)]
    for _ in range(2 * g + 2):
        Apow.append(Apow[-1] * A)
        Bpow.append(Bpow[-1] * B)

    cols = [Apow[i] * Bpow[2 * g + 2 - i] for i in range(2 * g + 3)] + [S * S]
    K = kernel_basis([[c[k] for c in cols] for k in range(r)], len(cols))
    if len(K) != 1 or not K[0][-1]:
        raise ModelSearchError(f"{label}: no unique relation y^2 = f(x) ({len(K)} found)")

    v = K[0]
    f = [-c / v[-1] for c in v[:-1]]
    while f and f[-1] == 0:
        f.pop()
    if len(f) - 1 != degree:
        raise ModelSearchError(f"{label}: deg f = {len(f) - 1}, the order test says {degree}")

    x = sympy.Symbol("x")
    fx = sympy.Poly([sympy.Rational(c.numerator, c.denominator) for c in reversed(f)], x)
    if not fx.is_sqf:
        raise ModelSearchError(f"{label}: f is not squarefree")

    logger.info(f"{label}({basis0.p}): y^2 = f(x), deg f = {degree}")
    return CurveModel(CurveKind.HYPERELLIPTIC, 3, g, f=f, label=label)


def _solve_form(basis: QExpansionBasis, d: int, target: QSeries, prec: int) -> Poly:
    """A degree-d form F with F(f_1, ..., f_gH) = target."""
    monos = monomials(basis.gH, d)
    series = _monomial_series(basis, monos, prec)
    A = [[s[k] for s in series] + [-target[k]] for k in range(prec)]
    v = next((v for v in kernel_basis(A, len(monos) + 1) if v[-1]), None)
    if v is None:
        raise ModelSearchError(f"no degree-{d} form matches the target series")
    return {m: c / v[-1] for m, c in zip(monos, v[:-1]) if c}


@dataclass
class QuotientMap:
    """Degree-2 map X_H(p) -> X_0(p).

    The hyperelliptic branch lands in the weighted plane P(1, g+1, 1) with
    x = X/Z and y = Y/Z^(g+1).
    """

    source: CurveModel
    target: CurveModel
    branch: Branch
    g0: int
    indices: Tuple[int, int] = (0, 0)
    C: List[List[Fraction]] = field(default_factory=list)
    Cinv: List[List[Fraction]] = field(default_factory=list)
    G: Poly = field(default_factory=dict)
    G_inf: Poly = field(default_factory=dict)

    @property
    def e(self) -> int:
        return (self.g0 + 1) * (self.g0 - 2)

    def image(self, point: Sequence[Any]) -> Optional[Tuple[Any, ...]]:
        g = self.g0
        P0 = list(point[:g])
        if not any(P0):
            return None

        if self.branch.is_projection():
            return normalize_projective(P0)

        zero = _zero_like(P0[0])
        m = [sum((self.Cinv[j][k] * P0[k] for k in range(g)), zero) for j in range(g)]
        j = next(j for j in range(g - 1) if m[j] or m[j + 1])
        X, Z = m[j + 1], m[j]

        lam = None
        for i in range(g):
            h = sum(
                (self.C[i][k] * _pow0(X, k) * _pow0(Z, g - 1 - k) for k in range(g)), zero
            )
            if h:
                lam = P0[i] / h
                break

        if Z:
            Y = poly_eval(self.G, point) / (_pow0(lam, g + 1) * _pow0(Z, self.e))
        else:
            Y = poly_eval(self.G_inf, point) / (_pow0(lam, g + 1) * _pow0(X, self.e))

        return normalize_weighted(X, Y, Z, g + 1)

    def on_target(self, image: Tuple[Any, ...]) -> bool:
        if self.branch.is_projection():
            return all(not poly_eval(P, image) for _, _, P in self.target.polys)

        X, Y, Z = image
        F = sum(
            (c * _pow0(X, i) * _pow0(Z, 2 * self.g0 + 2 - i) for i, c in enumerate(self.target.f)),
            _zero_like(X),
        )
        return not (Y * Y - F)


def _pow0(x: Any, e: int) -> Any:
    return _power(x, e) if e else x - x + 1


def normalize_projective(v: Sequence[Any]) -> Tuple[Any, ...]:
    lead = next(x for x in v if x)
    return tuple(x / lead for x in v)


def normalize_weighted(X: Any, Y: Any, Z: Any, w: int) -> Tuple[Any, Any, Any]:
    if X:
        return (X / X, Y / _pow0(X, w), Z / X)
    return (X / Z, Y / _pow0(Z, w), Z / Z)


def build_quotient_map(
    modelH: CurveModel, model0: CurveModel, basis: QExpansionBasis
) -> QuotientMap:
    g = basis.g0
    if modelH.nvars != basis.gH or model0.genus != g:
        raise ConfigError(
            f"basis blocks ({g}, {basis.gH}) do not match the models "
            f"({model0.genus}, {modelH.nvars})"
        )

    if model0.kind.is_canonical():
        return QuotientMap(modelH, model0, Branch.PROJECTION, g)

    basis0 = basis.gamma0_block()
    e = (g + 1) * (g - 2)
    r = sturm_precision(g + 1, basis.index)
    N = r + e + g
    if N > basis.prec:
        raise PrecisionError(N, basis.prec, "weighted image of the quotient map")

    A, B, S = _x_and_differential(basis0, N)
    G = _solve_form(basis, g + 1, S, r)

    # S * (f_{g-1}/f_g)^e, with the q-powers of both factors split off
    Au = A.shift(-(g - 1))
    Bu = B.shift(-g)
    T = Au.truncate(Bu.prec).power(e) * Bu.inverse().power(e)
    G_inf = _solve_form(basis, g + 1, (S.truncate(T.prec) * T).shift(-e), r)

    # f_i * f_g^(g-2) = sum_j C_ij f_{g-1}^j f_g^(g-1-j)
    r3 = sturm_precision(g, basis0.index) + 10
    A3, B3 = A.truncate(r3), B.truncate(r3)
    cols = [A3.power(j) * B3.power(g - 1 - j) for j in range(g)]
    C = []
    for row in basis0.rows:
        rhs = row.truncate(r3) * B3.power(g - 2)
        M = [[c[k] for c in cols] + [-rhs[k]] for k in range(r3)]
        v = next((v for v in kernel_basis(M, g + 1) if v[-1]), None)
        if v is None:
            raise ModelSearchError(f"X_0({basis.p}): differential is not h(x) dx/y")
        C.append([c / v[-1] for c in v[:-1]])

    return QuotientMap(
        modelH,
        model0,
        Branch.TO_HYPERELLIPTIC,
        g,
        indices=(g - 1, g),
        C=C,
        Cinv=inverse_q(C),
        G=G,
        G_inf=G_inf,
    )


@dataclass
class ModelCheck:
    label: str
    checked: int = 0
    failures: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def _rank(rows: List[List[Any]]) -> int:
    return rref(rows)[2] if rows else 0


def verify_model_and_cusps(
    model: CurveModel, cusps: Dict[str, Sequence[Any]], label: Optional[str] = None
) -> ModelCheck:
    """Cusps on the model, conjugacy, rationality and smoothness, exactly."""
    check = ModelCheck(label or model.label)
    for name, pt in cusps.items():
        if model.kind.is_canonical():
            for _, pname, P in model.polys:
                check.checked += 1
                value = poly_eval(P, pt)
                if value:
                    check.failures.append(f"{name}: {pname} = {value}")

            J = [[poly_eval(poly_diff(P, j), pt) for j in range(model.nvars)] for _, _, P in model.polys]
            rank = _rank(J)
            if rank != model.nvars - 2:
                check.failures.append(f"{name}: Jacobian rank {rank}, expected {model.nvars - 2}")
        else:
            X, Y, Z = pt
            check.checked += 1
            F = sum(
                (c * _pow0(X, i) * _pow0(Z, 2 * model.genus + 2 - i) for i, c in enumerate(model.f)),
                _zero_like(X),
            )
            if Y * Y - F:
                check.failures.append(f"{name}: y^2 - f(x) = {Y * Y - F}")

    for name in ("c1", "c2"):
        if name in cusps and not all(x.is_rational() for x in cusps[name]):
            check.failures.append(f"{name}: coordinates are not rational")

    if "c3" in cusps and "c4" in cusps:
        if any(x.conj() != y for x, y in zip(cusps["c3"], cusps["c4"])):
            check.failures.append("c4 is not the conjugate of c3")

    return check


def affine_points(r: int, q: int) -> np.ndarray:
    """All of F_q^r, one row per point."""
    rows = list(itertools.product(range(q), repeat=r))
    return np.array(rows, dtype=np.int64).reshape(q**r, r)


def projective_points(n: int, q: int) -> np.ndarray:
    """Normalized representatives of P^(n-1)(F_q)."""
    chunks = []
    for k in range(n):
        tail = affine_points(n - k - 1, q)
        block = np.zeros((len(tail), n), dtype=np.int64)
        block[:, k] = 1
        block[:, k + 1 :] = tail
        chunks.append(block)
    return np.concatenate(chunks)


def points_on(model: CurveModel, q: int, candidates: np.ndarray) -> np.ndarray:
    mask = np.ones(len(candidates), dtype=bool)
    for _, _, P in model.polys:
        value = np.zeros(len(candidates), dtype=np.int64)
        for exps, c in P.items():
            term = np.full(len(candidates), reduce_rational(c, q), dtype=np.int64)
            for i, e in enumerate(exps):
                for _ in range(e):
                    term = term * candidates[:, i] % q
            value = (value + term) % q
        mask &= value == 0
    return candidates[mask]


def fiber_sizes(qmap: QuotientMap, q: int) -> Counter:
    """Histogram of fiber sizes of X_H(F_q) -> X_0(F_q) over the images hit."""
    n, g = qmap.source.nvars, qmap.g0
    if q ** (n - 1) <= BRUTE_FORCE_LIMIT:
        points = points_on(qmap.source, q, projective_points(n, q))
    elif qmap.branch.is_projection():
        base = points_on(qmap.target, q, projective_points(g, q))
        chi = affine_points(n - g, q)
        lifts = [
            points_on(qmap.source, q, np.hstack([np.tile(P0, (len(chi), 1)), chi]))
            for P0 in base
        ]
        points = np.concatenate(lifts) if lifts else np.zeros((0, n), dtype=np.int64)
    else:
        raise ConfigError(f"too many points to enumerate for q = {q}")

    images: Counter = Counter()
    for pt in points:
        image = qmap.image([PrimeFieldElem(int(x), q) for x in pt])
        if image is not None:
            images[image] += 1

    logger.debug(f"q={q}: {len(points)} points, {len(images)} images")
    return Counter(images.values())
