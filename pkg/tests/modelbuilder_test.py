import pytest

from fractions import Fraction

from src.const import CurveKind, Branch, HyperellipticError, ModelSearchError, PrecisionError
from src.arith import QuadFieldElem
from src.qseries import QSeries, QExpansionBasis, sturm_precision
from src.modelbuilder import (
    monomials,
    normalize_poly,
    parse_poly,
    format_poly,
    poly_eval,
    poly_diff,
    find_relations,
    certify,
    build_canonical_model,
    hyperelliptic_degree,
    build_hyperelliptic_model,
    degree_accounting,
    build_quotient_map,
    verify_model_and_cusps,
    fiber_sizes,
    projective_points,
    cubic_complement,
)
from src.pipeline import build_models

from conftest import PRIMES

PROFILES = {
    29: {2: 1, 3: 1},
    37: {2: 1, 3: 1},
    41: {2: 3},
    53: {2: 15},
    61: {2: 15},
    73: {2: 21},
}

X0_PROFILES = {53: {2: 1, 3: 1}, 61: {2: 1, 3: 1}, 73: {2: 3}}

# y^2 = f(x), constant term first
X0_HYPERELLIPTIC = {
    29: [-7, 8, 8, 2, -12, -4, 1],
    37: [-4, 12, -24, 28, -20, 8, 1],
    41: [-4, 16, -27, -8, 60, -82, 48, -12, 1],
}


@pytest.fixture(scope="module")
def models(fixtures):
    cache = {}

    def get(p: int):
        if p not in cache:
            cache[p] = build_models(fixtures(p))
        return cache[p]

    return get


def test_monomials():
    ms = monomials(3, 2)
    assert len(ms) == 6
    assert ms[0] == (2, 0, 0)
    assert len(monomials(9, 2)) == 45


def test_poly_text():
    P = parse_poly("2*x1**2 - 4*x2*x3 + 6*x3**2", 3)
    assert P == {(2, 0, 0): 2, (0, 1, 1): -4, (0, 0, 2): 6}

    N = normalize_poly({e: Fraction(c, 3) for e, c in P.items()})
    assert N == {(2, 0, 0): 1, (0, 1, 1): -2, (0, 0, 2): 3}
    assert parse_poly(format_poly(N, 3), 3) == N

    assert poly_eval(N, [Fraction(1), Fraction(1), Fraction(1)]) == 2
    assert poly_diff(N, 0) == {(1, 0, 0): 2}


@pytest.mark.parametrize("p", PRIMES)
def test_canonical_model(models, fixtures, p):
    model = models(p)["X_H"]
    assert model.kind == CurveKind.CANONICAL
    assert model.nvars == model.genus == fixtures(p).gH
    assert model.degree_profile == PROFILES[p]

    basis = fixtures(p).basis
    assert all(c.denominator == 1 for _, _, P in model.polys for c in P.values())
    for d, _, P in (model.polys[0], model.polys[-1]):
        assert certify(basis, P, 2 * sturm_precision(d, basis.index))

    assert degree_accounting(basis, model).holds


@pytest.mark.parametrize("p", [53, 61])
def test_published_cubic_in_quadric_span(fixtures, p):
    published = fixtures(p).published_model
    assert len(published.quadrics) == 15 and len(published.cubics) == 1

    new, accounting = cubic_complement(8, published.quadrics, published.cubics)
    assert new == []
    assert accounting.lq_rank == 85
    assert accounting.monomials - accounting.dim_f3 == 85


@pytest.mark.parametrize("p", [29, 37, 41])
def test_hyperelliptic_x0(models, fixtures, p):
    model = models(p)["X_0"]
    assert model.kind == CurveKind.HYPERELLIPTIC
    assert model.f == [Fraction(c) for c in X0_HYPERELLIPTIC[p]]
    assert hyperelliptic_degree(fixtures(p).basis0) == 2 * model.genus + 2

    with pytest.raises(HyperellipticError):
        build_canonical_model(fixtures(p).basis0, "X_0")


@pytest.mark.parametrize("p", [53, 61, 73])
def test_canonical_x0(models, p):
    model = models(p)["X_0"]
    assert model.kind == CurveKind.CANONICAL
    assert model.degree_profile == X0_PROFILES[p]


def test_relation_precision(fixtures):
    basis = fixtures(29).basis
    with pytest.raises(PrecisionError):
        find_relations(basis, 2, basis.prec + 1)


@pytest.mark.parametrize("p", PRIMES)
def test_cusps_on_models(models, fixtures, p):
    fixture = fixtures(p)
    check = verify_model_and_cusps(models(p)["X_H"], fixture.cusps)
    assert check.ok, check.failures

    published = verify_model_and_cusps(fixture.published_model, fixture.published_cusps)
    assert published.ok, published.failures


def test_verify_reports_failures(models, fixtures):
    fixture = fixtures(29)
    moved = dict(fixture.cusps)
    moved["c1"] = [QuadFieldElem.rational(1, 29)] * 4
    moved["c4"] = fixture.cusps["c3"]

    check = verify_model_and_cusps(models(29)["X_H"], moved)
    assert not check.ok
    assert any(f.startswith("c1:") for f in check.failures)
    assert "c4 is not the conjugate of c3" in check.failures


@pytest.mark.parametrize("p", PRIMES)
def test_quotient_images(models, fixtures, p):
    fixture = fixtures(p)
    qmap = build_quotient_map(models(p)["X_H"], models(p)["X_0"], fixture.basis)
    images = {c: qmap.image(pt) for c, pt in fixture.cusps.items()}

    assert all(qmap.on_target(im) for im in images.values())
    assert images["c1"] == images["c2"]
    assert images["c3"] == images["c4"]
    assert images["c1"] != images["c3"]

    if p in X0_HYPERELLIPTIC:
        assert qmap.branch == Branch.TO_HYPERELLIPTIC
        assert images["c1"] == (1, -1, 0)
    else:
        assert qmap.branch == Branch.PROJECTION


@pytest.mark.parametrize("p, q", [(29, 5), (37, 7)])
def test_fiber_sizes(models, fixtures, p, q):
    qmap = build_quotient_map(models(p)["X_H"], models(p)["X_0"], fixtures(p).basis)
    histogram = fiber_sizes(qmap, q)
    assert set(histogram) <= {1, 2}
    # two ramification points
    assert histogram[1] <= 2
    # c1 and c2 share an image
    assert histogram[2] >= 1
    if (p, q) == (29, 5):
        assert histogram[2] > histogram[1]


def test_projective_points():
    assert projective_points(1, 5).tolist() == [[1]]
    points = projective_points(3, 3)
    assert len(points) == 3**2 + 3 + 1
    assert points[-1].tolist() == [0, 0, 1]
    assert len({tuple(x) for x in points.tolist()}) == len(points)


def test_weierstrass_point_at_infinity():
    # valuations 1 and 3: some differential vanishes to order 2 = 2(g-1) at infinity
    rows = (QSeries.monomial(1, 40), QSeries.monomial(3, 40))
    basis0 = QExpansionBasis(29, 2, rows, 30)
    assert hyperelliptic_degree(basis0) == 5

    with pytest.raises(ModelSearchError) as e:
        build_hyperelliptic_model(basis0)
    assert "Weierstrass" in str(e.value)
