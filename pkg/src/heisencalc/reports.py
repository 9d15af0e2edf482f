import json
import logging
import math
from typing import TYPE_CHECKING, NamedTuple

from heisencalc import csvio

if TYPE_CHECKING:
    from typing import Any, Dict, List, Mapping, Optional, Sequence

    from heisencalc.csvio import PathLike

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ("check", "param_json", "measured", "fitted_c", "fitted_C", "tol", "pass")


class VerificationReport(NamedTuple):
    name: str
    params: "Dict[str, Any]"
    measured: "Dict[str, float]"
    fitted_c: float
    fitted_C: float
    tol: float
    passed: bool
    runtime: float = 0.0

    @classmethod
    def create(
        cls,
        name: str,
        params: "Mapping[str, Any]",
        measured: "Mapping[str, float]",
        tol: float,
        passed: bool,
        fitted_c: float = math.nan,
        fitted_C: float = math.nan,
    ) -> "VerificationReport":
        """
        Build a report; a check with any non-finite measured value never passes.
        """
        measured = {key: float(value) for key, value in measured.items()}
        finite = all(math.isfinite(value) for value in measured.values())
        if not finite:
            logger.warning("Check %s produced non-finite measurements %s", name, measured)
        return cls(
            name=name,
            params=dict(params),
            measured=measured,
            fitted_c=float(fitted_c),
            fitted_C=float(fitted_C),
            tol=float(tol),
            passed=bool(passed) and finite,
        )

    def to_row(self) -> "List[Any]":
        return [
            self.name,
            json.dumps(self.params, sort_keys=True),
            json.dumps(self.measured, sort_keys=True),
            self.fitted_c,
            self.fitted_C,
            self.tol,
            self.passed,
        ]

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        measured = ", ".join(f"{key}={value:.6g}" for key, value in sorted(self.measured.items()))
        return f"{status} {self.name} {json.dumps(self.params, sort_keys=True)}: {measured}"


def write_reports_csv(
    path: "PathLike",
    reports: "Sequence[VerificationReport]",
    fields: "Optional[Mapping[str, Any]]" = None,
) -> None:
    csvio.write_csv(path, "reports", fields or {}, REPORT_COLUMNS, (r.to_row() for r in reports))


def render_summary(reports: "Sequence[VerificationReport]") -> str:
    passed = sum(r.passed for r in reports)
    lines = [r.summary() for r in reports]
    lines.append(f"{passed}/{len(reports)} checks passed")
    return "\n".join(lines) + "\n"
