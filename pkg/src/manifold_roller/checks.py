from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class CheckReport:
    """Outcome of a numerical check: worst error seen plus any violations."""

    name: str
    passed: bool
    max_error: float = 0.0
    tolerance: float | None = None
    violations: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return self.passed

    def to_dict(self):
        return {
            "name": self.name,
            "passed": self.passed,
            "max_error": self.max_error,
            "tolerance": self.tolerance,
            "violations": [str(v) for v in self.violations],
            "details": self.details,
        }

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        tol = "" if self.tolerance is None else f" (tol {self.tolerance:.1e})"
        return f"[{status}] {self.name}: max error {self.max_error:.3e}{tol}"
