from typing import List, Dict, Tuple, Optional, Any
from dataclasses import dataclass, field, asdict
from enum import Enum


class LabError(Exception):
    pass


class InertPrime(LabError):
    def __init__(self, a: int, q: int):
        super().__init__(f"{a} is not a square mod {q} (inert at {q})")
        self.a = a
        self.q = q


class BadReduction(LabError):
    def __init__(self, q: int, what: str = "coefficient"):
        super().__init__(f"{what} has a denominator divisible by {q}")
        self.q = q


class PrecisionError(LabError):
    def __init__(self, required: int, available: int, constraint: str):
        super().__init__(
            f"precision {available} is below the required {required} ({constraint})"
        )
        self.required = required
        self.available = available
        self.constraint = constraint


class BasisError(LabError):
    def __init__(self, row: int, message: str):
        super().__init__(f"basis row {row}: {message}")
        self.row = row


class FixtureError(LabError):
    def __init__(self, path: str, line: Optional[int], message: str):
        where = f"{path}:{line}" if line is not None else path
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line


class ConfigError(LabError):
    pass


class ModelSearchError(LabError):
    pass


class HyperellipticError(LabError):
    pass


class FixtureCorruption(LabError):
    pass


class NoUsablePrimes(LabError):
    pass


class DimensionContractError(LabError):
    pass


class ContractViolation(LabError):
    pass


class DegenerateChoice(LabError):
    pass


class OrderBoundExceeded(LabError):
    pass


class NotAnAutomorphism(LabError):
    pass


class NotInSpan(LabError):
    def __init__(self, index: int):
        super().__init__(f"form is not in the span of the basis (coefficient {index})")
        self.index = index


class Field(Enum):
    Q = "q"
    QSQRT = "qsqrt"

    def is_quadratic(self) -> bool:
        return self == Field.QSQRT


class HSubgroup(Enum):
    SQUARES = "squares"
    FULL = "full"

    def is_squares(self) -> bool:
        return self == HSubgroup.SQUARES


class CurveKind(Enum):
    CANONICAL = "canonical"
    HYPERELLIPTIC = "hyperelliptic"

    def is_canonical(self) -> bool:
        return self == CurveKind.CANONICAL


class Branch(Enum):
    PROJECTION = "projection"
    TO_HYPERELLIPTIC = "to-hyperelliptic"

    def is_projection(self) -> bool:
        return self == Branch.PROJECTION


class Verdict(Enum):
    REPRODUCED = "reproduced"
    DIVISIBILITY_ONLY = "divisibility-only"
    CONTRADICTION = "contradiction"
    FAILED = "failed"

    def is_reproduced(self) -> bool:
        return self == Verdict.REPRODUCED

    def exit_code(self) -> int:
        return {
            Verdict.REPRODUCED: 0,
            Verdict.DIVISIBILITY_ONLY: 2,
            Verdict.CONTRADICTION: 3,
            Verdict.FAILED: 4,
        }[self]


@dataclass(frozen=True)
class CongruenceProfile:
    p: int
    H: HSubgroup
    index: int
    nu2: int
    nu3: int
    nu_inf: int
    genus: int

    def __str__(self):
        return (
            f"p={self.p} H={self.H.value} mu={self.index} nu2={self.nu2} "
            f"nu3={self.nu3} nu_inf={self.nu_inf} genus={self.genus}"
        )


@dataclass(frozen=True)
class CuspDescriptor:
    label: str
    representative: Tuple[int, int]
    rational: bool
    partner: str

    @property
    def field(self) -> str:
        return "Q" if self.rational else "Q(sqrt p)"


@dataclass(frozen=True)
class BoundStep:
    q: int
    k: int
    order: int
    running: int


@dataclass
class BoundReport:
    p: int
    field: Field
    steps: List[BoundStep] = field(default_factory=list)

    @property
    def bound(self) -> int:
        return self.steps[-1].running if self.steps else 0

    @property
    def primes(self) -> List[int]:
        return [s.q for s in self.steps]

    def orders(self, k: int) -> Dict[int, int]:
        return {s.q: s.order for s in self.steps if s.k == k}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "p": self.p,
            "field": self.field.value,
            "bound": self.bound,
            "steps": [asdict(s) for s in self.steps],
        }


@dataclass(frozen=True)
class GroupPresentation:
    labels: Tuple[str, ...]
    relations: Tuple[Tuple[int, ...], ...]
    invariant_factors: Tuple[int, ...]

    @property
    def order(self) -> int:
        n = 1
        for d in self.invariant_factors:
            n *= d
        return n

    @property
    def isomorphism_type(self) -> str:
        factors = [d for d in self.invariant_factors if d != 1]
        if not factors:
            return "0"
        return " x ".join(f"Z/{d}" for d in factors)

    def nontrivial_factors(self) -> Tuple[int, ...]:
        return tuple(d for d in self.invariant_factors if d != 1)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "labels": list(self.labels),
            "relations": [list(r) for r in self.relations],
            "invariant_factors": list(self.nontrivial_factors()),
            "order": self.order,
            "type": self.isomorphism_type,
        }

    def __str__(self):
        return f"{self.isomorphism_type} (order {self.order})"


@dataclass
class TorsionReport:
    p: int
    g0: int = 0
    gH: int = 0
    expected: Tuple[int, int, int] = (0, 0, 0)
    model: Dict[str, Any] = field(default_factory=dict)
    checks: Dict[str, bool] = field(default_factory=dict)
    cuspidal: Optional[GroupPresentation] = None
    rational: Optional[GroupPresentation] = None
    generator_orders: Dict[str, int] = field(default_factory=dict)
    membership: Optional[bool] = None
    trace_generates: Optional[bool] = None
    bound_qsqrt: Optional[BoundReport] = None
    bound_q: Optional[BoundReport] = None
    rational_equals_m: Optional[bool] = None
    reduction_primes: List[int] = field(default_factory=list)
    choices: Dict[int, Dict[str, List[int]]] = field(default_factory=dict)
    verdict: Verdict = Verdict.FAILED
    failed_stage: Optional[str] = None
    error: Optional[str] = None
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def n(self) -> Optional[int]:
        if self.cuspidal is None:
            return None
        factors = self.cuspidal.nontrivial_factors()
        return factors[0] if len(factors) == 2 else 1

    @property
    def m(self) -> Optional[int]:
        if self.cuspidal is None:
            return None
        factors = self.cuspidal.nontrivial_factors()
        return factors[-1] if factors else 1

    def to_dict(self, timings: bool = True) -> Dict[str, Any]:
        d = {
            "p": self.p,
            "g0": self.g0,
            "gH": self.gH,
            "expected": dict(zip(("n", "m", "bound"), self.expected)),
            "model": self.model,
            "checks": self.checks,
            "cuspidal": self.cuspidal.to_dict() if self.cuspidal else None,
            "rational": self.rational.to_dict() if self.rational else None,
            "generator_orders": self.generator_orders,
            "membership": self.membership,
            "trace_generates": self.trace_generates,
            "bound_qsqrt": self.bound_qsqrt.to_dict() if self.bound_qsqrt else None,
            "bound_q": self.bound_q.to_dict() if self.bound_q else None,
            "rational_equals_m": self.rational_equals_m,
            "reduction_primes": self.reduction_primes,
            "choices": {str(k): v for k, v in self.choices.items()},
            "n": self.n,
            "m": self.m,
            "verdict": self.verdict.value,
            "failed_stage": self.failed_stage,
            "error": self.error,
        }
        if timings:
            d["timings"] = self.timings

        return d
