"""Spectrum suspiciousness formulas.

Each formula maps (failed(e), passed(e), totalfailed, totalpassed) to a
score. failed(e) counts failing tests that cover or kill `e`; passed(e)
likewise for passing tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from declafl.errors import NoFailingTests

DSTAR_CAP = 1e9
FORMULAS = ("tarantula", "ochiai", "op2", "barinel", "dstar")


@dataclass(frozen=True)
class Formula:
    name: str = "ochiai"
    dstar_exponent: int = 2

    def __post_init__(self):
        if self.name not in FORMULAS:
            raise ValueError(f"unknown formula {self.name!r}")
        if self.dstar_exponent < 1:
            raise ValueError("DStar exponent must be positive")

    def __call__(self, failed: int, passed: int, total_failed: int, total_passed: int) -> float:
        return compute_suspiciousness(self, failed, passed, total_failed, total_passed)


def compute_suspiciousness(f: Formula, failed: int, passed: int, total_failed: int, total_passed: int) -> float:
    if total_failed <= 0:
        raise NoFailingTests("no failing tests")
    if not (0 <= failed <= total_failed and 0 <= passed <= total_passed):
        raise ValueError("counts out of range")
    name = f.name
    if name == "tarantula":
        if failed == 0:
            return 0.0
        fr = failed / total_failed
        pr = passed / total_passed if total_passed else 0.0
        return fr / (fr + pr)
    if name == "ochiai":
        if failed + passed == 0:
            return 0.0
        return failed / math.sqrt(total_failed * (failed + passed))
    if name == "op2":
        return failed - passed / (total_passed + 1)
    if name == "barinel":
        if failed + passed == 0:
            return 0.0
        return 1.0 - passed / (passed + failed)
    denom = passed + (total_failed - failed)
    num = failed ** f.dstar_exponent
    if denom == 0:
        return DSTAR_CAP if failed > 0 else 0.0
    return min(num / denom, DSTAR_CAP)
