"""Pass/fail check records used by the diagnostic and validation routines."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class Check:
    check: str
    value: float
    threshold: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "value": _json_number(self.value),
            "threshold": _json_number(self.threshold),
            "pass": bool(self.passed),
        }


@dataclass
class Report:
    checks: list[Check] = field(default_factory=list)

    def add(self, check: str, value: float, threshold: float, passed: bool) -> Check:
        c = Check(check, float(value), float(threshold), bool(passed))
        self.checks.append(c)
        return c

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.check == name:
                return c
        raise KeyError(name)

    def to_list(self) -> list[dict]:
        return [c.to_dict() for c in self.checks]

    def to_json(self) -> str:
        return json.dumps(self.to_list(), indent=2, ensure_ascii=False) + "\n"


def _json_number(x: float):
    # JSON has no inf/nan
    if math.isfinite(x):
        return x
    return str(x)
