"""Verdict objects returned by the verifiers.

A rejection is data, not an exception: every verifier returns a
:class:`Verdict` made of named checks, each carrying a witness string when it
fails.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Check:
    name: str
    ok: bool
    witness: str = ""

    def line(self) -> str:
        if self.ok:
            return f"PASS {self.name}"
        return f"FAIL {self.name} {self.witness}".rstrip()


@dataclass
class Verdict:
    checks: list[Check] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def __bool__(self) -> bool:
        return self.ok

    @property
    def witness(self) -> str:
        for c in self.checks:
            if not c.ok:
                return f"{c.name}: {c.witness}"
        return ""

    def add(self, name: str, ok: bool, witness: str = "") -> bool:
        self.checks.append(Check(name, bool(ok), "" if ok else witness))
        return bool(ok)

    def extend(self, other: "Verdict", prefix: str = "") -> None:
        for c in other.checks:
            self.checks.append(Check(prefix + c.name, c.ok, c.witness))

    def lines(self) -> list[str]:
        return [c.line() for c in self.checks]
