import time
import logging
import pandas as pd

from math import lcm
from fractions import Fraction
from contextlib import contextmanager
from concurrent.futures import ProcessPoolExecutor
from typing import List, Dict, Optional, Iterable

from .const import (
    Field,
    HSubgroup,
    Verdict,
    TorsionReport,
    LabError,
    ConfigError,
    InertPrime,
    BadReduction,
    DimensionContractError,
    DegenerateChoice,
    HyperellipticError,
)
from .arith import legendre, primes_up_to
from .configs import PrimeConfig
from .congruence import profile, cusp_points, projectively_equal
from .data import FixtureSet, load_fixture
from .modelbuilder import (
    CurveModel,
    build_canonical_model,
    build_hyperelliptic_model,
    build_quotient_map,
    degree_accounting,
    verify_model_and_cusps,
)
from .heckebound import torsion_bound, jacobian_order, rational_equals_m
from .picard import CuspidalResult, init_session, cuspidal_subgroup
from .env import REDUCTION_PRIMES, config_for

logger = logging.getLogger(__name__)

TABLE_COLUMNS = ["p", "g", "gH", "n", "m", "|C_H|", "bound_qsqrt", "bound_q", "verdict"]


def lcm_consistency(p: int, n: int) -> int:
    assert n >= 1
    return lcm(n, Fraction(p - 1, 12).numerator)


def mazur_divides(p: int, m: int) -> bool:
    return m % Fraction(p - 1, 12).numerator == 0


def admissible_primes(p: int, count: int, start: int = 3) -> List[int]:
    """The first `count` odd split primes q >= start."""
    out: List[int] = []
    bound = 64
    while len(out) < count:
        out = [q for q in primes_up_to(bound) if q >= start and q != p and q != 2 and legendre(p, q) == 1]
        out = out[:count]
        bound *= 2
    return out


def build_models(fixture: FixtureSet) -> Dict[str, CurveModel]:
    models = {"X_H": build_canonical_model(fixture.basis, "X_H")}
    try:
        models["X_0"] = build_canonical_model(fixture.basis0, "X_0")
    except HyperellipticError:
        models["X_0"] = build_hyperelliptic_model(fixture.basis0, "X_0")
    return models


def cusp_provenance(fixture: FixtureSet) -> bool:
    derived = cusp_points(fixture.basis)
    return all(projectively_equal(derived[c], fixture.cusps[c]) for c in derived)


def sessions(fixture: FixtureSet, config: PrimeConfig, model: Optional[CurveModel] = None):
    """Picard sessions at the configured primes, or at the first usable split primes."""
    p = fixture.p
    explicit = list(config.reduction_primes)
    for q in explicit:
        if q in (2, p) or legendre(p, q) != 1:
            raise ConfigError(f"reduction prime {q} is not an odd split prime for p = {p}")

    candidates = explicit or admissible_primes(p, 4 * REDUCTION_PRIMES)
    wanted = len(explicit) or REDUCTION_PRIMES
    used = 0
    for q in candidates:
        if used == wanted:
            break
        try:
            session = init_session(fixture.basis, fixture.cusps, q, model)
        except (InertPrime, BadReduction, DimensionContractError, DegenerateChoice) as e:
            if explicit:
                raise
            logger.info(f"p={p}: skipping q={q} ({e})")
            continue
        used += 1
        yield session


@contextmanager
def _stage(report: TorsionReport, name: str):
    started = time.time()
    try:
        yield
    except Exception as e:
        report.failed_stage = name
        report.error = f"{type(e).__name__}: {e}"
        if not isinstance(e, LabError):
            logger.exception(f"p={report.p}: unexpected failure in {name}")
        raise
    finally:
        report.timings[name] = round(time.time() - started, 3)


def run_prime(p: int, config: Optional[PrimeConfig] = None, fixtures_dir: Optional[str] = None) -> TorsionReport:
    """Every stage for one prime; a failing stage leaves a partial report."""
    config = config or config_for(p)
    report = TorsionReport(p)
    try:
        _run(report, config, fixtures_dir)
    except Exception:
        report.verdict = Verdict.FAILED
    return report


def _run(report: TorsionReport, config: PrimeConfig, fixtures_dir: Optional[str]):
    p = report.p

    with _stage(report, "fixture"):
        fixture = load_fixture(p, fixtures_dir, max(config.qmax, config.rational_qmax))
        report.expected = fixture.expected
        report.g0 = profile(p, HSubgroup.FULL).genus
        report.gH = profile(p, HSubgroup.SQUARES).genus
        report.checks["cusp_provenance"] = cusp_provenance(fixture)

    with _stage(report, "model"):
        models = build_models(fixture)
        accounting = degree_accounting(fixture.basis, models["X_H"])
        report.model = {
            "X_H": models["X_H"].summary(),
            "X_0": models["X_0"].summary(),
            "accounting": {
                "monomials": accounting.monomials,
                "lq_rank": accounting.lq_rank,
                "cubics": accounting.cubics,
                "dim_f3": accounting.dim_f3,
            },
        }
        report.checks["degree_accounting"] = accounting.holds

    with _stage(report, "verify"):
        own = verify_model_and_cusps(models["X_H"], fixture.cusps)
        report.checks["model_cusps"] = own.ok
        for failure in own.failures:
            logger.warning(f"p={p} X_H: {failure}")

        if fixture.published_model is not None and config.published_model:
            published = verify_model_and_cusps(fixture.published_model, fixture.published_cusps)
            report.checks["published_model_cusps"] = published.ok
            for failure in published.failures:
                logger.warning(f"p={p} published model: {failure}")

    with _stage(report, "quotient"):
        qmap = build_quotient_map(models["X_H"], models["X_0"], fixture.basis)
        images = {c: qmap.image(pt) for c, pt in fixture.cusps.items()}
        report.checks["quotient_map"] = (
            all(im is not None and qmap.on_target(im) for im in images.values())
            and images["c3"] == images["c4"]
            and all(x.is_rational() for c in ("c1", "c2") for x in images[c])
        )
        report.model["cusp_images"] = {c: [str(x) for x in im] for c, im in images.items() if im}

    with _stage(report, "picard"):
        results: List[CuspidalResult] = []
        for session in sessions(fixture, config, models["X_H"]):
            results.append(cuspidal_subgroup(session, config.order_bound))
            report.choices[session.q] = session.choices()

        if not results:
            raise ConfigError(f"no usable reduction prime for p = {p}")

        first = results[0]
        report.reduction_primes = [r.q for r in results]
        report.checks["three_reduction_primes"] = len(results) >= 3
        report.checks["cross_prime_stable"] = all(
            r.presentation.nontrivial_factors() == first.presentation.nontrivial_factors()
            and r.rational.nontrivial_factors() == first.rational.nontrivial_factors()
            for r in results
        )
        report.cuspidal = first.presentation
        report.rational = first.rational
        report.generator_orders = first.generator_orders
        report.membership = all(r.membership for r in results)
        report.trace_generates = all(r.trace_generates for r in results)

    with _stage(report, "hecke"):
        report.bound_qsqrt = torsion_bound(fixture.basis, Field.QSQRT, config.qmax)
        report.bound_q = torsion_bound(fixture.basis, Field.Q, config.rational_qmax)
        report.rational_equals_m = rational_equals_m(report.bound_q, report.m)
        report.checks["rational_bound_divisible_by_m"] = report.bound_q.bound % report.m == 0
        report.checks["order_divides_jacobian"] = all(
            jacobian_order(fixture.basis, q, 1) % report.cuspidal.order == 0
            for q in report.reduction_primes
        )

    with _stage(report, "verdict"):
        report.checks["lcm_consistency"] = lcm_consistency(p, report.n) == report.m
        report.checks["mazur"] = mazur_divides(p, report.m)
        report.verdict = verdict(report)


def verdict(report: TorsionReport) -> Verdict:
    order = report.cuspidal.order
    bound = report.bound_qsqrt.bound
    if bound % order != 0:
        return Verdict.CONTRADICTION

    n, m, expected_bound = report.expected
    reproduced = (
        report.cuspidal.nontrivial_factors() == tuple(d for d in (n, m) if d != 1)
        and report.rational.nontrivial_factors() == tuple(d for d in (m,) if d != 1)
        and bound == n * m == expected_bound
        and all(report.checks.values())
    )
    return Verdict.REPRODUCED if reproduced else Verdict.DIVISIBILITY_ONLY


def run_all(primes: Iterable[int], fixtures_dir: Optional[str] = None, jobs: int = 1) -> List[TorsionReport]:
    primes = list(primes)
    if jobs <= 1:
        return [run_prime(p, fixtures_dir=fixtures_dir) for p in primes]

    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_prime, primes, [None] * len(primes), [fixtures_dir] * len(primes)))


def table(reports: Iterable[TorsionReport]) -> pd.DataFrame:
    rows = []
    for r in reports:
        rows.append(
            {
                "p": r.p,
                "g": r.g0,
                "gH": r.gH,
                "n": r.n,
                "m": r.m,
                "|C_H|": r.cuspidal.order if r.cuspidal else None,
                "bound_qsqrt": r.bound_qsqrt.bound if r.bound_qsqrt else None,
                "bound_q": r.bound_q.bound if r.bound_q else None,
                "verdict": r.verdict.value,
            }
        )
    return pd.DataFrame(rows, columns=TABLE_COLUMNS)


def stages(report: TorsionReport) -> pd.DataFrame:
    """Per-prime text report: one row per stage."""
    rows = [
        ("profile", f"g={report.g0} gH={report.gH}", ""),
        ("model", _model_text(report.model), _ok(report.checks.get("degree_accounting"))),
        ("verify", "own / published cusps on models", _ok(report.checks.get("model_cusps"))),
        ("quotient", "cusps map onto X_0", _ok(report.checks.get("quotient_map"))),
        ("cuspidal", str(report.cuspidal or "-"), _ok(report.checks.get("cross_prime_stable"))),
        ("rational", str(report.rational or "-"), _ok(report.trace_generates)),
        ("membership", "c2-c1 in <c3-c1, c4-c1>", _ok(report.membership)),
        ("bound_qsqrt", str(report.bound_qsqrt.bound if report.bound_qsqrt else "-"), ""),
        ("bound_q", str(report.bound_q.bound if report.bound_q else "-"), _ok(report.rational_equals_m)),
        ("verdict", report.verdict.value, report.failed_stage or ""),
    ]
    return pd.DataFrame(rows, columns=["stage", "value", "verdict"])


def _ok(flag: Optional[bool]) -> str:
    return "-" if flag is None else ("ok" if flag else "FAIL")


def _model_text(model: Dict) -> str:
    if not model:
        return "-"
    degrees = model["X_H"].get("degrees", {})
    return ", ".join(f"{v} of degree {k}" for k, v in degrees.items())
