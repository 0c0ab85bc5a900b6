import random
import pytest

from src.const import (
    ConfigError,
    InertPrime,
    NotAnAutomorphism,
    OrderBoundExceeded,
)
from src.arith import invariant_factors
from src.picard import (
    GENERATORS,
    SWAP,
    SubgroupBuilder,
    init_session,
    class_of_cusp_difference,
    add,
    neg,
    is_zero,
    order,
    subgroup_structure,
    membership,
    galois_invariants,
    cuspidal_subgroup,
    self_check,
    _presentation,
)
from src.env import config_for

RELATIONS = {
    29: [[21, 0, 0], [-3, 3, 0], [-13, -1, 1]],
    37: [[15, 0, 0], [-5, 5, 0], [-11, -1, 1]],
    41: [[40, 0, 0], [-8, 8, 0], [-9, -1, 1]],
    53: [[91, 0, 0], [-7, 7, 0], [-64, -1, 1]],
    61: [[55, 0, 0], [-11, 11, 0], [-34, -1, 1]],
    73: [[66, 0, 0], [-22, 22, 0], [-23, -1, 1]],
}

# (n, m)
TABLE = {29: (3, 21), 37: (5, 15), 41: (8, 40), 53: (7, 91), 61: (11, 55), 73: (22, 66)}

FAST_RUNS = [(29, 5), (29, 7), (29, 13), (37, 3), (37, 7), (37, 11)]


@pytest.fixture(scope="module")
def session29(fixtures):
    fixture = fixtures(29)
    return init_session(fixture.basis, fixture.cusps, 5)


def test_session_dimensions(session29):
    g = session29.g
    # Riemann-Roch from k = 2 on; F_1 is the space of differentials
    expected = [g] + [k * (2 * g - 2) - g + 1 for k in range(2, 7)]
    assert [session29.F[k].dim for k in range(1, 7)] == expected
    assert expected == [4, 9, 15, 21, 27, 33]
    assert session29.l0 and session29.l1
    assert set(session29.choices()) == {"l0", "l1"}


def test_session_rejects_primes(fixtures):
    fixture = fixtures(29)
    for q in (2, 29):
        with pytest.raises(ConfigError):
            init_session(fixture.basis, fixture.cusps, q)

    with pytest.raises(InertPrime):
        init_session(fixture.basis, fixture.cusps, 3)

    # split for 29, but q * q overflows int64 products
    with pytest.raises(ConfigError) as e:
        init_session(fixture.basis, fixture.cusps, 3000000037)
    assert "int64" in str(e.value)


def test_group_operations(session29):
    x = class_of_cusp_difference(session29, "c3", "c1")
    y = class_of_cusp_difference(session29, "c4", "c1")

    assert is_zero(session29.zero)
    assert not is_zero(x)
    assert is_zero(add(x, neg(x)))
    assert add(x, y) == add(y, x)
    assert x * 21 == session29.zero
    assert order(x) == 21

    with pytest.raises(OrderBoundExceeded):
        order(x, bound=20)


@pytest.mark.parametrize("p, q", FAST_RUNS)
def test_self_check(fixtures, p, q):
    fixture = fixtures(p)
    session = init_session(fixture.basis, fixture.cusps, q)
    check = self_check(session, random.Random(p * q), words=100)
    assert check.ok, check.failures
    assert check.words == 100


def test_subgroup_builder_on_integers():
    builder = SubgroupBuilder(0, lambda a, b: (a + b) % 30, lambda a: a)
    assert builder.adjoin(6) == [5]
    assert builder.adjoin(10) == [0, 3]
    assert builder.size == 15
    assert invariant_factors(builder.relations) == [1, 15]

    with pytest.raises(OrderBoundExceeded):
        SubgroupBuilder(0, lambda a, b: (a + b) % 30, lambda a: a).adjoin(1, bound=10)


def test_subgroup_builder_walks_cosets():
    calls = []

    def plus(a, b):
        calls.append(1)
        return ((a[0] + b[0]) % 66, (a[1] + b[1]) % 22)

    builder = SubgroupBuilder((0, 0), plus, lambda a: a)
    assert builder.adjoin((1, 0)) == [66]
    assert builder.adjoin((0, 1)) == [0, 22]
    assert builder.adjoin((5, 3)) == [-5, -3, 1]
    assert builder.size == 66 * 22
    assert invariant_factors(builder.relations) == [1, 22, 66]
    assert builder.contains((7, 20)) == (7, 20, 0)
    # the group itself is never enumerated
    assert len(calls) < 200


@pytest.mark.parametrize("p", TABLE)
def test_galois_invariants_from_relations(p):
    n, m = TABLE[p]
    presentation = _presentation(GENERATORS, RELATIONS[p])
    assert presentation.nontrivial_factors() == (n, m)
    assert membership(presentation, "c2-c1")

    fixed, trace_generates = galois_invariants(presentation, SWAP)
    assert fixed.nontrivial_factors() == (m,)
    assert trace_generates


def test_galois_invariants_rejects_bad_swap():
    presentation = _presentation(GENERATORS, RELATIONS[29])
    cycle = {"c3-c1": "c4-c1", "c4-c1": "c2-c1", "c2-c1": "c3-c1"}
    with pytest.raises(NotAnAutomorphism):
        galois_invariants(presentation, cycle)


def _check_cuspidal(fixture, q):
    p = fixture.p
    n, m = TABLE[p]
    session = init_session(fixture.basis, fixture.cusps, q)
    result = cuspidal_subgroup(session, config_for(p).order_bound)

    assert [list(r) for r in result.presentation.relations] == RELATIONS[p]
    assert result.presentation.nontrivial_factors() == (n, m)
    assert result.rational.nontrivial_factors() == (m,)
    assert result.generator_orders["c3-c1"] == m
    assert result.membership and result.trace_generates

    x = session.cusp_difference("c3", "c1")
    assert subgroup_structure([("c3-c1", x)]).nontrivial_factors() == (m,)


@pytest.mark.parametrize("p, q", FAST_RUNS)
def test_cuspidal_subgroup(fixtures, p, q):
    _check_cuspidal(fixtures(p), q)


@pytest.mark.slow
@pytest.mark.parametrize("p", [41, 53, 61, 73])
def test_cuspidal_subgroup_large(fixtures, p):
    _check_cuspidal(fixtures(p), config_for(p).reduction_primes[0])
