import os
import logging

from fractions import Fraction
from dataclasses import dataclass, field
from typing import List, Dict, Tuple, Optional

from .const import (
    HSubgroup,
    CurveKind,
    BasisError,
    FixtureError,
    PrecisionError,
)
from .arith import QuadFieldElem
from .qseries import QSeries, QExpansionBasis, sturm_precision
from .congruence import profile
from .modelbuilder import CurveModel, parse_poly, format_poly, normalize_poly
from .env import FIXTURES_DIR

logger = logging.getLogger(__name__)

CUSP_LABELS = ("c1", "c2", "c3", "c4")


@dataclass
class FixtureSet:
    p: int
    basis: QExpansionBasis
    cusps: Dict[str, List[QuadFieldElem]]
    expected: Tuple[int, int, int]
    published_model: Optional[CurveModel] = None
    published_cusps: Dict[str, List[QuadFieldElem]] = field(default_factory=dict)
    path: str = ""

    @property
    def basis0(self) -> QExpansionBasis:
        return self.basis.gamma0_block()

    @property
    def g0(self) -> int:
        return self.basis.g0

    @property
    def gH(self) -> int:
        return self.basis.gH


def precision_requirements(basis: QExpansionBasis, qmax: int) -> Dict[str, int]:
    g = basis.gH
    # largest Hecke prime below qmax reads a_(q * max read-off column)
    return {
        "Sturm bound for quartic relations": sturm_precision(4, basis.index),
        f"Hecke operators T_q for q < {qmax}": (qmax - 1) * max(basis.readoff) + 1,
        "divisor arithmetic on F_6": 6 * (2 * g - 2) + 2,
    }


def _rational(token: str, path: str, line: int) -> Fraction:
    try:
        return Fraction(token)
    except (ValueError, ZeroDivisionError):
        raise FixtureError(path, line, f"'{token}' is not a rational number")


def _integer(token: str, path: str, line: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise FixtureError(path, line, f"'{token}' is not an integer")


def _point(tokens: List[str], p: int, path: str, line: int) -> List[QuadFieldElem]:
    try:
        return [QuadFieldElem.parse(t, p) for t in tokens]
    except (ValueError, ZeroDivisionError) as e:
        raise FixtureError(path, line, str(e))


def _check_cusps(cusps: Dict[str, List[QuadFieldElem]], n: int, lines: Dict[str, int], path: str):
    for label in CUSP_LABELS:
        if label not in cusps:
            raise FixtureError(path, None, f"cusp {label} is missing")
        if len(cusps[label]) != n:
            raise FixtureError(path, lines[label], f"{label} has {len(cusps[label])} coordinates, expected {n}")

    for label in ("c1", "c2"):
        if not all(x.is_rational() for x in cusps[label]):
            raise FixtureError(path, lines[label], f"{label} must have rational coordinates")

    if [x.conj() for x in cusps["c3"]] != cusps["c4"]:
        raise FixtureError(path, lines["c4"], "c4 is not the conjugate of c3")


def ingest(path: str, qmax: int = 200) -> FixtureSet:
    """Parse and validate one fixture file."""
    with open(path, "r", encoding="utf-8") as fd:
        lines = fd.readlines()

    header = None
    rows: Dict[int, Tuple[int, List[Fraction]]] = {}
    cusps: Dict[str, List[QuadFieldElem]] = {}
    cusp_lines: Dict[str, int] = {}
    expected = None

    model: Optional[CurveModel] = None
    published_cusps: Dict[str, List[QuadFieldElem]] = {}
    published_lines: Dict[str, int] = {}
    in_model = False

    for ln, raw in enumerate(lines, start=1):
        words = raw.split()
        if not words or words[0].startswith("#"):
            continue

        tag = words[0]
        if header is None:
            if tag != "P" or len(words) != 8 or words[2::2] != ["G0", "GH", "PREC"]:
                raise FixtureError(path, ln, "expected header 'P <p> G0 <g> GH <gH> PREC <M>'")
            try:
                header = tuple(int(w) for w in words[1::2])
            except ValueError:
                raise FixtureError(path, ln, "header values must be integers")
            p, g0, gH, M = header
            continue

        if tag == "F":
            i = int(words[1]) if len(words) > 1 and words[1].isdigit() else 0
            if not 1 <= i <= gH or i in rows:
                raise FixtureError(path, ln, f"row index {i} is out of range or repeated")
            coeffs = [_rational(t, path, ln) for t in words[2:]]
            if len(coeffs) != M:
                raise PrecisionError(M, len(coeffs), f"row {i} at {path}:{ln} is truncated")
            rows[i] = (ln, coeffs)

        elif tag in ("CUSP", "MCUSP"):
            target, where = (published_cusps, published_lines) if tag == "MCUSP" else (cusps, cusp_lines)
            if tag == "MCUSP" and not in_model:
                raise FixtureError(path, ln, "MCUSP outside a MODEL block")
            if len(words) < 3:
                raise FixtureError(path, ln, f"expected '{tag} <label> <coordinates>'")
            target[words[1]] = _point(words[2:], p, path, ln)
            where[words[1]] = ln

        elif tag == "MODEL":
            if len(words) != 2:
                raise FixtureError(path, ln, "expected 'MODEL <number of variables>'")
            in_model = True
            n = _integer(words[1], path, ln)
            model = CurveModel(CurveKind.CANONICAL, n, n, label="published")

        elif tag == "POLY":
            if not in_model:
                raise FixtureError(path, ln, "POLY outside a MODEL block")
            if len(words) < 4:
                raise FixtureError(path, ln, "expected 'POLY <degree> <name> <polynomial>'")
            d, name, text = _integer(words[1], path, ln), words[2], "".join(words[3:])
            try:
                P = parse_poly(text, model.nvars)
            except Exception as e:
                raise FixtureError(path, ln, f"cannot parse {name}: {e}")
            if any(sum(e) != d for e in P):
                raise FixtureError(path, ln, f"{name} is not homogeneous of degree {d}")
            model.polys.append((d, name, P))

        elif tag == "ENDMODEL":
            in_model = False

        elif tag == "EXPECT":
            if len(words) != 7 or words[1::2] != ["n", "m", "bound"]:
                raise FixtureError(path, ln, "expected 'EXPECT n <n> m <m> bound <B>'")
            expected = tuple(_integer(w, path, ln) for w in words[2::2])

        else:
            raise FixtureError(path, ln, f"unknown record '{tag}'")

    if header is None:
        raise FixtureError(path, None, "file has no header")
    if in_model:
        raise FixtureError(path, None, "MODEL block is not closed")
    if sorted(rows) != list(range(1, gH + 1)):
        raise PrecisionError(gH, len(rows), f"{path} lists {len(rows)} of {gH} basis rows")
    if expected is None:
        raise FixtureError(path, None, "EXPECT line is missing")

    if profile(p, HSubgroup.FULL).genus != g0 or profile(p, HSubgroup.SQUARES).genus != gH:
        raise FixtureError(path, None, f"G0 {g0} / GH {gH} disagree with the genus formulas for p = {p}")

    basis = QExpansionBasis(
        p, g0, tuple(QSeries.of(rows[i][1]) for i in range(1, gH + 1)), 2 * (p + 1)
    )
    try:
        basis.validate()
    except BasisError as e:
        raise FixtureError(path, rows[e.row][0], str(e))

    need = precision_requirements(basis, qmax)
    binding = max(need, key=need.get)
    if need[binding] > M:
        raise PrecisionError(need[binding], M, binding)

    _check_cusps(cusps, gH, cusp_lines, path)
    if model is not None:
        _check_cusps(published_cusps, model.nvars, published_lines, path)

    logger.debug(f"{path}: p={p} g0={g0} gH={gH} prec={M}, binding constraint '{binding}'")
    return FixtureSet(p, basis, cusps, expected, model, published_cusps, path)


def fixture_path(p: int, directory: Optional[str] = None) -> str:
    return os.path.join(directory or FIXTURES_DIR, f"{p}.txt")


def load_fixture(p: int, directory: Optional[str] = None, qmax: int = 200) -> FixtureSet:
    path = fixture_path(p, directory)
    if not os.path.exists(path):
        raise FixtureError(path, None, f"no fixture for p = {p}")
    return ingest(path, qmax)


def write_fixture(
    path: str,
    basis: QExpansionBasis,
    cusps: Dict[str, List[QuadFieldElem]],
    expected: Tuple[int, int, int],
    model: Optional[CurveModel] = None,
    model_cusps: Optional[Dict[str, List[QuadFieldElem]]] = None,
):
    g0, gH = basis.g0, basis.gH
    out = [
        f"# X_H({basis.p}): echelon q-expansion basis, Gamma_0 block (rows 1..{g0}) then chi block (rows {g0 + 1}..{gH})",
        f"P {basis.p} G0 {g0} GH {gH} PREC {basis.prec}",
    ]
    for i, row in enumerate(basis.rows, start=1):
        out.append(f"F {i} " + " ".join(str(c) for c in row.coeffs[: basis.prec]))
    for label in CUSP_LABELS:
        out.append(f"CUSP {label} " + " ".join(str(x) for x in cusps[label]))

    if model is not None:
        out.append(f"MODEL {model.nvars}")
        for d, name, P in model.polys:
            out.append(f"POLY {d} {name} {format_poly(normalize_poly(P), model.nvars)}")
        for label in CUSP_LABELS:
            if model_cusps and label in model_cusps:
                out.append(f"MCUSP {label} " + " ".join(str(x) for x in model_cusps[label]))
        out.append("ENDMODEL")

    n, m, bound = expected
    out.append(f"EXPECT n {n} m {m} bound {bound}")

    with open(path, "w", encoding="utf-8") as fd:
        fd.write("\n".join(out) + "\n")
