import os
import json

from typing import Any, List

from .const import TorsionReport


def dump_json(obj: Any, path: str = ""):
    text = json.dumps(obj, sort_keys=True, indent=2)
    if not path:
        print(text)
        return

    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fd:
        fd.write(text + "\n")


def reports_json(reports: List[TorsionReport], timings: bool = True) -> Any:
    if len(reports) == 1:
        return reports[0].to_dict(timings)
    return [r.to_dict(timings) for r in reports]


def parse_primes(text: str) -> List[int]:
    """'5,7,13' -> [5, 7, 13]; empty means none."""
    if not text:
        return []
    return [int(t) for t in text.replace(" ", "").split(",") if t]
