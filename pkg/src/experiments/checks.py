from typing import Any, Iterable, List, Optional

from src.errors import AcceptanceFailure
from src.models.schemas import CheckResult


def check_below(name: str, value: float, threshold: float, **detail: Any) -> CheckResult:
    return CheckResult(name=name, passed=bool(value < threshold), value=float(value),
                       threshold=float(threshold), detail=detail)


def check_above(name: str, value: float, threshold: float, **detail: Any) -> CheckResult:
    return CheckResult(name=name, passed=bool(value > threshold), value=float(value),
                       threshold=float(threshold), detail=detail)


def check_true(name: str, passed: bool, value: Optional[float] = None, **detail: Any) -> CheckResult:
    return CheckResult(name=name, passed=bool(passed),
                       value=None if value is None else float(value), detail=detail)


def failed(checks: Iterable[CheckResult]) -> List[CheckResult]:
    return [c for c in checks if not c.passed]


def raise_on_failure(experiment: str, checks: Iterable[CheckResult]) -> None:
    bad = failed(checks)
    if bad:
        raise AcceptanceFailure(
            f"{experiment}: {len(bad)} acceptance check(s) failed",
            {"failed": [c.name for c in bad]},
        )
