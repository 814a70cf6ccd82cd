"""Uniform verification-report container."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass
class VerificationReport:
    """Outcome of a verifier.

    ``code`` is "ok" on acceptance, otherwise the name of the failed check
    (matching the error-class names, e.g. "CoverGap").  ``details`` holds
    measured quantities so certificates can be serialized from reports.
    """

    accepted: bool
    code: str = "ok"
    message: str = ""
    details: dict[str, Any] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.accepted

    def to_json(self) -> dict[str, Any]:
        return {
            "accepted": self.accepted,
            "code": self.code,
            "message": self.message,
            "details": self.details,
        }
