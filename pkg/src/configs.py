from typing import Tuple, Dict, Union, Any
from dataclasses import dataclass, asdict, fields


@dataclass
class Description:
    reduction_primes: str = (
        "split primes q used to reduce the cusps (empty: smallest admissible ones)"
    )
    qmax: str = "Hecke primes q < qmax are used for the bound over Q(sqrt p)"
    rational_qmax: str = "Hecke primes q < rational_qmax are used for the bound over Q"
    order_bound: str = "largest order accepted for a cuspidal divisor class"
    published_model: str = "verify the published model carried by the fixture"


@dataclass
class PrimeConfig:
    reduction_primes: Tuple[int, ...] = ()
    qmax: int = 100
    rational_qmax: int = 200
    order_bound: int = 1000
    published_model: bool = True

    @classmethod
    def _from(cls, source: Union[Dict[str, Any], Any]) -> "PrimeConfig":
        kwargs = {}
        for field in fields(cls):
            if isinstance(source, dict):
                kwargs[field.name] = source.get(field.name, field.default)
            else:
                kwargs[field.name] = getattr(source, field.name, field.default)

        kwargs["reduction_primes"] = tuple(int(q) for q in kwargs["reduction_primes"])
        return cls(**kwargs)

    def __hash__(self):
        h = 0
        for k, v in asdict(self).items():
            h = hash((h, k, v))

        return h

    def __str__(self):
        l = []
        for k, v in asdict(self).items():
            vs = ",".join(map(str, v)) if isinstance(v, tuple) else f"{v}"
            l.append(f"{k}: {vs or '-'}")

        return ", ".join(l)
