from fractions import Fraction
from typing import List, Dict

from .const import CongruenceProfile, CuspDescriptor, HSubgroup, ConfigError
from .arith import QuadFieldElem, is_prime, legendre, primitive_root
from .qseries import QExpansionBasis


def index(p: int, H: HSubgroup) -> int:
    # [SL2(Z) : Gamma_H(p)] for -1 in H; the squares have index 2 in (Z/p)*
    return 2 * (p + 1) if H.is_squares() else p + 1


def profile(p: int, H: HSubgroup) -> CongruenceProfile:
    if p < 5 or not is_prime(p):
        raise ConfigError(f"{p} is not a prime >= 5")

    if H.is_squares():
        if p % 4 != 1:
            raise ConfigError(f"-1 is not a square mod {p}; need p = 1 mod 4")
        nu2 = 4 if p % 8 == 1 else 0
        nu3 = 4 if p % 12 == 1 else 0
        nu_inf = 4
    else:
        nu2 = 1 + legendre(-1, p)
        nu3 = 1 + legendre(-3, p)
        nu_inf = 2

    mu = index(p, H)
    genus = 1 + Fraction(mu, 12) - Fraction(nu2, 4) - Fraction(nu3, 3) - Fraction(nu_inf, 2)
    assert genus.denominator == 1 and genus >= 0, f"genus {genus} for p={p}"

    return CongruenceProfile(p, H, mu, nu2, nu3, nu_inf, int(genus))


def genus_x0(p: int) -> int:
    """Closed form for the genus of X_0(p), branching on p mod 12."""
    r = p % 12
    if r == 1:
        return (p - 13) // 12
    if r in (5, 7):
        return (p - 5) // 12
    return (p + 1) // 12


def enumerate_primes(genus_min: int, genus_max: int) -> List[int]:
    assert 1 <= genus_min <= genus_max
    # g_H >= (p - 19) / 6, with equality when p = 1 mod 24
    bound = 6 * genus_max + 19
    return [
        p
        for p in range(5, bound + 1)
        if p % 4 == 1
        and is_prime(p)
        and genus_min <= profile(p, HSubgroup.SQUARES).genus <= genus_max
    ]


def cusp_set(p: int) -> List[CuspDescriptor]:
    if p % 4 != 1:
        raise ConfigError(f"X_H({p}) has four cusps only for p = 1 mod 4")

    alpha = primitive_root(p)
    return [
        CuspDescriptor("c1", (0, 1), True, "c1"),
        CuspDescriptor("c2", (0, alpha), True, "c2"),
        CuspDescriptor("c3", (1, 0), False, "c4"),
        CuspDescriptor("c4", (alpha, 0), False, "c3"),
    ]


def cusp_points(basis: QExpansionBasis) -> Dict[str, List[QuadFieldElem]]:
    """Cusp coordinates read off the echelon basis.

    c1 is the q -> 0 point, c2 its image under a non-square diamond
    operator, c3 the Atkin-Lehner image of c1 and c4 the conjugate of c3.
    """
    p = basis.p
    if basis.prec <= p:
        raise ConfigError(f"basis precision {basis.prec} does not reach a_{p}")

    c1, c2, c3 = [], [], []
    for i, row in enumerate(basis.rows):
        a1 = QuadFieldElem.rational(row[1], p)
        ap = row[p]
        c1.append(a1)
        if i < basis.g0:
            c2.append(a1)
            c3.append(QuadFieldElem(0, -ap, p))
        else:
            c2.append(-a1)
            c3.append(QuadFieldElem.rational(legendre(basis.pivots[i], p) * ap, p))

    return {"c1": c1, "c2": c2, "c3": c3, "c4": [x.conj() for x in c3]}


def projectively_equal(u: List[QuadFieldElem], v: List[QuadFieldElem]) -> bool:
    if len(u) != len(v):
        return False
    i = next((k for k, x in enumerate(u) if x), None)
    if i is None or not v[i]:
        return False
    ratio = v[i] / u[i]
    return all(x * ratio == y for x, y in zip(u, v))
