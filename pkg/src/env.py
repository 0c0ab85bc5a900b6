from typing import Dict
from pprint import pformat

from .configs import PrimeConfig

import os
import json

ROOT: str = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def _path(name: str, default: str) -> str:
    path = os.environ.get(name, default)
    if os.path.isabs(path) or os.path.exists(path):
        return path
    return os.path.join(ROOT, path)


FIXTURES_DIR: str = _path("FIXTURES_DIR", "fixtures")
CONFIGS_FILE: str = _path("CONFIGS_FILE", "configs.json")
RESULTS_DIR: str = os.environ.get("RESULTS_DIR", "results")
FIGURES_DIR: str = os.environ.get("FIGURES_DIR", "figures")

with open(CONFIGS_FILE, "r") as fd:
    configs_json = json.load(fd)

    PRIME_CONFIGS: Dict[int, PrimeConfig] = {
        int(k): PrimeConfig._from(v) for k, v in configs_json.items()
    }

DEBUG: bool = bool(int(os.environ.get("DEBUG", 0)))
VERBOSE: bool = bool(int(os.environ.get("VERBOSE", 0)))
GRAPH: bool = bool(int(os.environ.get("GRAPH", 0)))

QMAX: int = int(os.environ.get("QMAX", 100))
assert QMAX >= 3, "QMAX must leave at least one odd prime"

RATIONAL_QMAX: int = int(os.environ.get("RATIONAL_QMAX", 200))
assert RATIONAL_QMAX >= 3, "RATIONAL_QMAX must leave at least one odd prime"

ORDER_BOUND: int = int(os.environ.get("ORDER_BOUND", 1000))
assert ORDER_BOUND > 0, "ORDER_BOUND must be positive"

# number of admissible split primes when a prime has no explicit list
REDUCTION_PRIMES: int = int(os.environ.get("REDUCTION_PRIMES", 3))
assert REDUCTION_PRIMES >= 3, "the cuspidal structure is compared across at least three reduction primes"


def config_for(p: int) -> PrimeConfig:
    if p in PRIME_CONFIGS:
        return PRIME_CONFIGS[p]

    return PrimeConfig(
        qmax=QMAX, rational_qmax=RATIONAL_QMAX, order_bound=ORDER_BOUND
    )


def print_env():
    print("Environment variables:")
    for k, v in globals().items():
        if k.isupper():
            if k == "PRIME_CONFIGS":
                print(f"  {k}:")
                for p, config in v.items():
                    print(f"    {p}: {config}")
            else:
                print(f"{k}: {pformat(v)}")
    print("")
