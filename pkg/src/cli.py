import os
import sys
import click
import random
import logging

import pandas as pd

from dataclasses import replace
from typing import List, Optional

from .const import Field, HSubgroup, Verdict, LabError, TorsionReport
from .configs import Description
from .congruence import profile, cusp_set, enumerate_primes
from .data import load_fixture
from .modelbuilder import build_quotient_map, verify_model_and_cusps, degree_accounting, fiber_sizes
from .heckebound import torsion_bound
from .picard import cuspidal_subgroup, self_check
from .pipeline import (
    build_models,
    cusp_provenance,
    sessions,
    run_prime,
    run_all,
    table,
    stages,
)
from .plot import bound_ladder_plot, plot_table
from .utils import dump_json, reports_json, parse_primes
from .env import PRIME_CONFIGS, DEBUG, VERBOSE, GRAPH, QMAX, RESULTS_DIR, config_for, print_env

logger = logging.getLogger(__name__)

INPUT_ERROR = 4


def _setup_logging(verbose: bool):
    handlers = [logging.StreamHandler()]
    if DEBUG:
        os.makedirs(RESULTS_DIR, exist_ok=True)
        handlers.append(logging.FileHandler(os.path.join(RESULTS_DIR, "debug.log")))

    logging.basicConfig(
        level=logging.DEBUG if verbose or VERBOSE or DEBUG else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        handlers=handlers,
    )


def _emit(obj, report: str, out: Optional[str], text: str = ""):
    if report == "json":
        dump_json(obj, out or "")
        if out:
            print(f"[+] Saved report to {out}")
        return

    if out:
        os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
        with open(out, "w") as fd:
            fd.write(text + "\n")
        print(f"[+] Saved report to {out}")
    else:
        print(text)


def _fail(e: Exception):
    print(f"[-] {e}", file=sys.stderr)
    sys.exit(INPUT_ERROR)


def common(f):
    f = click.option("--out", "-o", required=False, help="Write the report to this path")(f)
    f = click.option(
        "--report", "-r", default="json", type=click.Choice(["json", "text"]), help="Report format"
    )(f)
    f = click.option("--fixtures", "-f", required=False, help="Fixture directory")(f)
    f = click.option("--verbose", "-v", is_flag=True, help="Debug logging")(f)
    return f


@click.group()
def cli():
    """Cuspidal subgroups and torsion of J_H(p) for the quadratic-residue level structure."""


@cli.command()
@click.option("--p", "-p", "p", type=int, required=False, help="Prime p = 1 mod 4")
@click.option("--range", "genus_range", nargs=2, type=int, required=False, help="List primes with g_H in [a, b]")
@common
def genus(p, genus_range, fixtures, report, out, verbose):
    """Index, elliptic points, cusps and genus for X_H(p) and X_0(p)."""
    _setup_logging(verbose)

    if genus_range:
        primes = enumerate_primes(*genus_range)
        _emit({"range": list(genus_range), "primes": primes}, report, out, " ".join(map(str, primes)))
        return

    if p is None:
        raise click.UsageError("either --p or --range is required")
    if p % 4 != 1:
        _fail(ValueError(f"p = {p} is not 1 mod 4"))

    profiles = [profile(p, H) for H in (HSubgroup.SQUARES, HSubgroup.FULL)]
    cusps = cusp_set(p)
    obj = {
        "profiles": [
            {"H": c.H.value, "index": c.index, "nu2": c.nu2, "nu3": c.nu3, "nu_inf": c.nu_inf, "genus": c.genus}
            for c in profiles
        ],
        "cusps": [
            {"label": c.label, "representative": list(c.representative), "field": c.field, "partner": c.partner}
            for c in cusps
        ],
    }
    text = "\n".join(map(str, profiles)) + "\n" + pd.DataFrame(obj["cusps"]).to_string(index=False)
    _emit(obj, report, out, text)


@cli.command()
@click.option("--p", "-p", "p", type=int, required=True)
@click.option("--fibers", type=int, required=False, help="Fiber-size histogram of X_H -> X_0 over F_q")
@common
def model(p, fibers, fixtures, report, out, verbose):
    """Canonical model of X_H(p) and a model of X_0(p).

    With --out DIR the models are written as X_H-<p>.txt and X_0-<p>.txt.
    """
    _setup_logging(verbose)
    try:
        fixture = load_fixture(p, fixtures)
        models = build_models(fixture)
        accounting = degree_accounting(fixture.basis, models["X_H"])
        histogram = None
        if fibers:
            qmap = build_quotient_map(models["X_H"], models["X_0"], fixture.basis)
            histogram = dict(sorted(fiber_sizes(qmap, fibers).items()))
    except LabError as e:
        _fail(e)

    obj = {
        "p": p,
        "X_H": models["X_H"].summary(),
        "X_0": models["X_0"].summary(),
        "accounting": {
            "monomials": accounting.monomials,
            "lq_rank": accounting.lq_rank,
            "cubics": accounting.cubics,
            "dim_f3": accounting.dim_f3,
            "holds": accounting.holds,
        },
    }
    if histogram is not None:
        obj["fibers"] = {"q": fibers, "histogram": {str(k): v for k, v in histogram.items()}}

    if out:
        os.makedirs(out, exist_ok=True)
        for name, m in models.items():
            filepath = os.path.join(out, f"{name}-{p}.txt")
            with open(filepath, "w") as fd:
                fd.write("\n".join(m.lines()) + "\n")
            print(f"[+] Saved model to {filepath}")
        out = None

    lines = [f"X_H({p}):"] + models["X_H"].lines() + [f"X_0({p}):"] + models["X_0"].lines()
    lines.append(
        f"monomials {accounting.monomials}, L*Q rank {accounting.lq_rank}, "
        f"cubics {accounting.cubics}, dim F_3 {accounting.dim_f3}"
    )
    if histogram is not None:
        lines.append(f"fibers over F_{fibers}: {histogram}")
    _emit(obj, report, out, "\n".join(lines))


@cli.command()
@click.option("--p", "-p", "p", type=int, required=True)
@common
def verify(p, fixtures, report, out, verbose):
    """Cusps on our model and on the published one, and their images on X_0(p)."""
    _setup_logging(verbose)
    try:
        fixture = load_fixture(p, fixtures)
        models = build_models(fixture)
        checks = [verify_model_and_cusps(models["X_H"], fixture.cusps)]
        if fixture.published_model is not None:
            checks.append(verify_model_and_cusps(fixture.published_model, fixture.published_cusps, "published"))

        qmap = build_quotient_map(models["X_H"], models["X_0"], fixture.basis)
        images = {c: qmap.image(pt) for c, pt in fixture.cusps.items()}
    except LabError as e:
        _fail(e)

    obj = {
        "p": p,
        "cusp_provenance": cusp_provenance(fixture),
        "checks": [{"model": c.label, "checked": c.checked, "failures": c.failures} for c in checks],
        "images": {c: [str(x) for x in im] if im else None for c, im in images.items()},
        "images_on_X_0": all(im is not None and qmap.on_target(im) for im in images.values()),
    }
    rows = [(c.label, c.checked, "ok" if c.ok else "; ".join(c.failures)) for c in checks]
    text = pd.DataFrame(rows, columns=["model", "checked", "result"]).to_string(index=False)
    text += "\n" + "\n".join(f"{c} -> ({' : '.join(obj['images'][c] or ['-'])})" for c in images)
    _emit(obj, report, out, text)

    ok = obj["cusp_provenance"] and obj["images_on_X_0"] and all(c.ok for c in checks)
    sys.exit(0 if ok else Verdict.CONTRADICTION.exit_code())


@cli.command("hecke-bound")
@click.option("--p", "-p", "p", type=int, required=True)
@click.option("--field", "field_", default="qsqrt", type=click.Choice([f.value for f in Field]))
@click.option("--qmax", "-q", type=int, default=QMAX, help="Use Hecke primes below this")
@click.option("--graph", "-g", is_flag=True, default=GRAPH, help="Save the running-gcd ladder")
@common
def hecke_bound(p, field_, qmax, graph, fixtures, report, out, verbose):
    """Upper bound on the torsion of J_H(p) from |J(F_q^k)| for q < qmax."""
    _setup_logging(verbose)
    try:
        fixture = load_fixture(p, fixtures, qmax)
        bound = torsion_bound(fixture.basis, Field(field_), qmax)
    except LabError as e:
        _fail(e)

    text = pd.DataFrame([vars(s) for s in bound.steps]).to_string(index=False)
    text += f"\nbound: {bound.bound}"
    _emit(bound.to_dict(), report, out, text)

    if graph:
        bound_ladder_plot(bound)


@cli.command("cuspidal-group")
@click.option("--p", "-p", "p", type=int, required=True)
@click.option("--reduction-primes", "--q", "primes", default="", help=Description.reduction_primes)
@click.option("--self-check", "words", type=int, default=0, help="Run N random group-law words")
@click.option("--seed", type=int, default=0)
@common
def cuspidal_group(p, primes, words, seed, fixtures, report, out, verbose):
    """Structure of the subgroup generated by cusp differences, one presentation per reduction prime."""
    _setup_logging(verbose)
    config = config_for(p)
    if primes:
        config = replace(config, reduction_primes=tuple(parse_primes(primes)))

    results, checks = [], []
    try:
        fixture = load_fixture(p, fixtures)
        for session in sessions(fixture, config):
            results.append(cuspidal_subgroup(session, config.order_bound))
            if words:
                checks.append(self_check(session, random.Random(seed), words))
    except LabError as e:
        _fail(e)

    obj = [
        {
            "q": r.q,
            "cuspidal": r.presentation.to_dict(),
            "rational": r.rational.to_dict(),
            "generator_orders": r.generator_orders,
            "membership": r.membership,
            "trace_generates": r.trace_generates,
            "choices": r.choices,
        }
        for r in results
    ]
    for entry, check in zip(obj, checks):
        entry["self_check"] = {"words": check.words, "failures": check.failures}

    rows = [(r.q, str(r.presentation), str(r.rational), r.generator_orders, r.membership) for r in results]
    text = pd.DataFrame(rows, columns=["q", "C_H", "rational", "orders", "membership"]).to_string(index=False)
    _emit(obj, report, out, text)

    if any(not c.ok for c in checks):
        print(f"[-] self check failed: {[f for c in checks for f in c.failures][:5]}", file=sys.stderr)
        sys.exit(Verdict.CONTRADICTION.exit_code())


def _exit_code(reports: List[TorsionReport]) -> int:
    return max(r.verdict.exit_code() for r in reports)


@cli.command()
@click.option("--p", "-p", "p", required=True, help="A configured prime, or 'all'")
@click.option("--qmax", "-q", type=int, required=False, help=Description.qmax)
@click.option("--reduction-primes", "primes", default="", help=Description.reduction_primes)
@click.option("--jobs", "-j", type=int, default=1, help="Processes for --p all")
@click.option("--csv", "csv_path", required=False, help="Write the table as CSV")
@click.option("--graph", "-g", is_flag=True, default=GRAPH, help="Save the running-gcd ladders")
@common
def pipeline(p, qmax, primes, jobs, csv_path, graph, fixtures, report, out, verbose):
    """Every stage for one prime, or the whole table with --p all."""
    _setup_logging(verbose)
    print_env()

    if p == "all":
        reports = run_all(sorted(PRIME_CONFIGS), fixtures, jobs)
    else:
        try:
            p = int(p)
        except ValueError:
            _fail(ValueError(f"--p must be a prime or 'all', got '{p}'"))

        config = config_for(p)
        if qmax:
            config = replace(config, qmax=qmax)
        if primes:
            config = replace(config, reduction_primes=tuple(parse_primes(primes)))
        reports = [run_prime(p, config, fixtures)]

    for r in reports:
        if r.failed_stage:
            print(f"[-] p={r.p}: {r.failed_stage} failed: {r.error}", file=sys.stderr)

    df = table(reports)
    if len(reports) == 1:
        text = stages(reports[0]).to_string(index=False)
    else:
        text = df.to_string(index=False)
    _emit(reports_json(reports), report, out, text)

    if csv_path:
        df.to_csv(csv_path, index=False)
        print(f"[+] Saved table to {csv_path}")

    if graph:
        for r in reports:
            if r.bound_qsqrt:
                bound_ladder_plot(r.bound_qsqrt, r.cuspidal.order if r.cuspidal else 0)
        if len(reports) > 1:
            plot_table(reports)

    sys.exit(_exit_code(reports))
