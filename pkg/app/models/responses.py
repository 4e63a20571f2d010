"""
Response models for the command-line endpoints
"""

from typing import List, Literal

from pydantic import BaseModel, Field


class CheckResult(BaseModel):
    """Outcome of one validation check"""
    name: str = Field(..., description="Check name")
    level: Literal["quick", "full"] = Field(..., description="Suite the check belongs to")
    passed: bool = Field(..., description="Whether the check passed")
    detail: str = Field("", description="Measured value or failure diagnostic")
    seconds: float = Field(0.0, ge=0.0, description="Wall time spent")


class ValidationReport(BaseModel):
    """Pass/fail table produced by the validate command"""
    level: Literal["quick", "full"] = Field(..., description="Requested level")
    checks: List[CheckResult] = Field(default_factory=list, description="Individual results")

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failed_count(self) -> int:
        return sum(1 for check in self.checks if not check.passed)

    def render(self) -> str:
        width = max([len(check.name) for check in self.checks] + [5])
        lines = [f"{'check'.ljust(width)}  level  result  seconds  detail"]
        for check in self.checks:
            status = "PASS" if check.passed else "FAIL"
            lines.append(
                f"{check.name.ljust(width)}  {check.level.ljust(5)}  {status.ljust(6)}  "
                f"{check.seconds:7.2f}  {check.detail}"
            )
        lines.append(f"{len(self.checks) - self.failed_count}/{len(self.checks)} checks passed")
        return "\n".join(lines)
