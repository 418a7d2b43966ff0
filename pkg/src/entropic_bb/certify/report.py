"""Result records for numerical certificates and their CSV form."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

CSV_COLUMNS = ["name", "lhs", "rhs", "gap", "tolerance", "passed", "npts", "M", "epsilon"]


@dataclass
class CertificateReport:
    """Outcome of one check.

    ``comparison`` is ``"eq"`` (``|lhs - rhs| <= tolerance * max(1, |lhs|)``)
    or ``"le"`` (``lhs <= rhs + tolerance``); ``passed`` always agrees with it.
    """

    name: str
    lhs: float
    rhs: float
    tolerance: float
    passed: bool
    comparison: str = "le"
    metadata: dict = field(default_factory=dict)

    @property
    def gap(self) -> float:
        return self.lhs - self.rhs

    @classmethod
    def equality(cls, name, lhs, rhs, tolerance, **metadata) -> "CertificateReport":
        lhs, rhs = float(lhs), float(rhs)
        passed = abs(lhs - rhs) <= tolerance * max(1.0, abs(lhs))
        return cls(name, lhs, rhs, float(tolerance), bool(passed), "eq", metadata)

    @classmethod
    def upper_bound(cls, name, lhs, rhs, tolerance=0.0, **metadata) -> "CertificateReport":
        lhs, rhs = float(lhs), float(rhs)
        passed = lhs <= rhs + tolerance
        return cls(name, lhs, rhs, float(tolerance), bool(passed), "le", metadata)

    def holds(self) -> bool:
        """Re-evaluate the stated comparison (used to check ``passed``)."""
        if self.comparison == "eq":
            return abs(self.lhs - self.rhs) <= self.tolerance * max(1.0, abs(self.lhs))
        return self.lhs <= self.rhs + self.tolerance

    def row(self) -> list[str]:
        md = self.metadata

        def num(key):
            return repr(md[key]) if key in md else ""

        return [
            self.name, repr(self.lhs), repr(self.rhs), repr(self.gap), repr(self.tolerance),
            "true" if self.passed else "false", num("npts"), num("M"), num("epsilon"),
        ]

    def summary(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        op = "~=" if self.comparison == "eq" else "<="
        return f"[{mark}] {self.name}: {self.lhs:.6g} {op} {self.rhs:.6g} (tol {self.tolerance:.3g})"


def write_reports_csv(path, reports: Iterable[CertificateReport]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in reports:
            w.writerow(r.row())
    return path


def read_reports_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))
