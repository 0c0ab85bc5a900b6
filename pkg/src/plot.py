import os
import sys
import matplotlib
from typing import List

# no display when piped
if not sys.stdout.isatty():
    try:
        matplotlib.use("Agg")
    except Exception:
        pass

import matplotlib.pyplot as plt

from .const import BoundReport, TorsionReport
from .env import FIGURES_DIR


def _figure():
    try:
        fig = plt.figure(figsize=(14, 6))
    except Exception:
        plt.switch_backend("Agg")
        fig = plt.figure(figsize=(14, 6))
    return fig


def _save(name: str) -> str:
    if matplotlib.get_backend().lower() == "agg":
        os.makedirs(FIGURES_DIR, exist_ok=True)
        filepath = os.path.join(FIGURES_DIR, name)
        plt.savefig(filepath, bbox_inches="tight")
        plt.close()
        print(f"[+] Saved plot to {filepath}")
        return filepath

    plt.show()
    return ""


def bound_ladder_plot(report: BoundReport, cuspidal_order: int = 0) -> str:
    """Running gcd against q, on a log scale, with each |J(F_q^k)| behind it."""
    qs = [s.q for s in report.steps]

    fig = _figure()
    ax1 = fig.add_subplot(111)

    split = [s for s in report.steps if s.k == 1]
    inert = [s for s in report.steps if s.k == 2]
    ax1.scatter([s.q for s in split], [s.order for s in split], color="gray", s=12, label="|J(F_q)|")
    if inert:
        ax1.scatter([s.q for s in inert], [s.order for s in inert], color="tomato", s=12, label="|J(F_q^2)|")

    ax1.step(qs, [s.running for s in report.steps], where="post", color="black", label="running gcd")
    if cuspidal_order:
        ax1.axhline(cuspidal_order, color="green", linestyle="--", label="|C_H|")

    ax1.set_yscale("log")
    ax1.set_xlabel("q")
    ax1.set_ylabel("order")
    ax1.set_title(f"p = {report.p} over {report.field.value}: bound {report.bound}")
    ax1.legend()
    ax1.grid(axis="both")

    suffix = "" if report.field.is_quadratic() else "-q"
    return _save(f"bound-{report.p}{suffix}.png")


def plot_table(reports: List[TorsionReport]) -> str:
    """Bound against |C_H| for every prime that reached the Hecke stage."""
    done = [r for r in reports if r.bound_qsqrt and r.cuspidal]
    labels = [str(r.p) for r in done]
    xs = range(len(done))

    fig = _figure()
    ax1 = fig.add_subplot(111)

    ax1.bar([x - 0.2 for x in xs], [r.cuspidal.order for r in done], width=0.4, color="green", label="|C_H|")
    ax1.bar([x + 0.2 for x in xs], [r.bound_qsqrt.bound for r in done], width=0.4, color="gray", label="bound")

    ax1.set_xticks(list(xs))
    ax1.set_xticklabels(labels)
    ax1.set_xlabel("p")
    ax1.set_ylabel("order")
    ax1.set_title("cuspidal subgroup against the torsion bound")
    ax1.legend()
    ax1.grid(axis="y")

    return _save("table.png")
