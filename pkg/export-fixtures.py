#!/usr/bin/env python3
# Run with Sage: sage -python export-fixtures.py --p 29 --prec 3001

import os
import click

from sage.all import CuspForms, Gamma0, kronecker_character

from src.qseries import QSeries, QExpansionBasis
from src.congruence import cusp_points, profile
from src.const import HSubgroup
from src.data import fixture_path, load_fixture, write_fixture
from src.env import FIXTURES_DIR, PRIME_CONFIGS

# (n, m, bound over Q(sqrt p))
EXPECTED = {
    29: (3, 21, 63),
    37: (5, 15, 75),
    41: (8, 40, 320),
    53: (7, 91, 637),
    61: (11, 55, 605),
    73: (22, 66, 1452),
}


def echelon_rows(space, prec: int):
    return [[int(c) if c.denominator() == 1 else str(c) for c in f.padded_list(prec)] for f in space.q_echelon_basis(prec)]


@click.command()
@click.option("--p", "-p", "primes", multiple=True, type=int, help="Prime to export (default: every configured prime)")
@click.option("--prec", default=3001, type=int, help="Number of coefficients per row")
@click.option("--directory", "-d", default=FIXTURES_DIR, help="Output directory")
def export(primes, prec, directory):
    os.makedirs(directory, exist_ok=True)

    for p in primes or sorted(PRIME_CONFIGS):
        gamma0 = echelon_rows(CuspForms(Gamma0(p), 2), prec)
        chi = echelon_rows(CuspForms(kronecker_character(p), 2), prec)

        assert len(gamma0) == profile(p, HSubgroup.FULL).genus
        assert len(gamma0) + len(chi) == profile(p, HSubgroup.SQUARES).genus

        rows = tuple(QSeries.of(r) for r in gamma0 + chi)
        basis = QExpansionBasis(p, len(gamma0), rows, 2 * (p + 1))
        basis.validate()

        # keep a published model already carried by the committed fixture
        path = fixture_path(p, directory)
        model, model_cusps = None, None
        if os.path.exists(path):
            old = load_fixture(p, directory)
            model, model_cusps = old.published_model, old.published_cusps

        write_fixture(path, basis, cusp_points(basis), EXPECTED[p], model, model_cusps)
        print(f"[+] Saved fixture to {path}")


if __name__ == "__main__":
    export()
