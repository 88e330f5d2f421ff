from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Scope:
    """Per-signature atom bounds for one command.

    `overrides` maps a signature name to `(count, exact)`.
    """

    default: int = 3
    overrides: tuple[tuple[str, int, bool], ...] = field(default=())

    def __post_init__(self):
        if self.default < 0:
            raise ValueError("scope must be non-negative")

    def get(self, sig: str) -> tuple[int, bool] | None:
        for name, n, exact in self.overrides:
            if name == sig:
                return n, exact
        return None

    def with_override(self, sig: str, n: int, exact: bool = False) -> "Scope":
        rest = tuple(o for o in self.overrides if o[0] != sig)
        return Scope(self.default, rest + ((sig, n, exact),))

    def max_count(self) -> int:
        return max([self.default] + [n for _, n, _ in self.overrides])

    def render(self) -> str:
        if not self.overrides:
            return f"for {self.default}"
        parts = ", ".join(f"{'exactly ' if ex else ''}{n} {s}" for s, n, ex in self.overrides)
        return f"for {self.default} but {parts}"
