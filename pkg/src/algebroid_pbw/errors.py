"""Exception hierarchy and validation reports."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


class AlgebroidError(Exception):
    """Base class for every error raised by the package."""


class StructuralError(AlgebroidError):
    """Malformed presentation: wrong dimensions, unknown labels, bad indices."""


class RingMismatchError(AlgebroidError):
    pass


class ContractError(AlgebroidError):
    """A documented precondition of an operation was violated by the caller."""


class InternalConsistencyError(AlgebroidError):
    """A verified identity failed; indicates a bug, never bad input."""


class ResourceError(AlgebroidError):
    """A configured budget was exhausted. ``partial`` carries what was computed."""

    def __init__(self, message: str, partial: Any = None):
        super().__init__(message)
        self.partial = partial


class TruncationError(AlgebroidError):
    pass


@dataclass
class Violation:
    axiom: str
    witness: tuple
    detail: str = ""

    def to_dict(self) -> dict:
        return {"axiom": self.axiom, "witness": list(self.witness), "detail": self.detail}


@dataclass
class ValidationReport:
    subject: str
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, axiom: str, witness: tuple, detail: str = "") -> None:
        self.violations.append(Violation(axiom, tuple(witness), detail))

    def extend(self, other: "ValidationReport") -> None:
        self.violations.extend(other.violations)

    def axioms(self) -> set[str]:
        return {v.axiom for v in self.violations}

    def to_dict(self) -> dict:
        return {
            "subject": self.subject,
            "valid": self.ok,
            "violations": [v.to_dict() for v in self.violations],
        }

    def __bool__(self) -> bool:
        return self.ok
