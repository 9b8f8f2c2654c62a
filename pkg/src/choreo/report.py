"""
Choreo - Check Reports

Every check returns a CheckReport instead of raising on a violated property.
The CLI turns reports into canonical JSON and exit codes.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from choreo.choreo_enums import Verdict


@dataclass
class CheckReport:
    name: str
    verdict: Verdict
    exhaustive: bool = True
    precondition_met: bool = True
    details: Dict[str, Any] = field(default_factory=dict)
    counterexample: Optional[Dict[str, Any]] = None

    @property
    def holds(self) -> bool:
        return self.verdict == Verdict.HOLDS

    @classmethod
    def from_outcome(cls, name: str, holds: bool, exhaustive: bool = True, **kwargs) -> 'CheckReport':
        """Violations win over inconclusive; a clean but partial run is inconclusive."""
        if not holds:
            verdict = Verdict.VIOLATED
        elif not exhaustive:
            verdict = Verdict.INCONCLUSIVE
        else:
            verdict = Verdict.HOLDS
        return cls(name, verdict, exhaustive, **kwargs)

    def to_json(self) -> dict:
        out = {
            "check": self.name,
            "holds": self.holds,
            "verdict": self.verdict.value,
            "exhaustive": self.exhaustive,
            "precondition_met": self.precondition_met,
            "details": self.details,
        }
        if self.counterexample is not None:
            out["counterexample"] = self.counterexample
        return out
