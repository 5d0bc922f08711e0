"""Economy-wide balance sheet matrix and stock-flow consistency audit.

Sign convention follows the usual SFC balance sheet matrix: assets are
positive, liabilities negative, and the ``balance`` row carries minus each
sector's tracked net worth (so the government shows ``+GD``).  Every
financial row sums to zero, every column sums to zero, and the balance row
sums to ``-(K + INV)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

SECTORS = ("firms", "households", "banks", "government", "central_bank")

REAL_ROWS = ("capital", "inventories")
FINANCIAL_ROWS = (
    "loans",
    "deposits",
    "bills",
    "bonds",
    "hpm",
    "advances",
    "lending_facility",
    "deposit_facility",
    "interbank_on",
    "interbank_term",
)
ROWS = REAL_ROWS + FINANCIAL_ROWS + ("balance",)


class StructuralError(RuntimeError):
    """A stock is missing or cannot exist under the accounting rules."""


class AuditFailure(RuntimeError):
    def __init__(self, report: "AuditReport", dump_path: Path | None = None):
        self.report = report
        self.dump_path = dump_path
        where = f" (matrix dumped to {dump_path})" if dump_path else ""
        super().__init__(
            f"stock-flow audit failed at period {report.period}: "
            f"max residual {report.max_residual:.3e} on {report.worst}{where}"
        )


@dataclass
class SectorBalance:
    """Signed stocks of one sector, keyed by matrix row."""

    sector: str
    stocks: dict[str, float] = field(default_factory=dict)

    def total(self) -> float:
        return math.fsum(self.stocks.values())


@dataclass
class BalanceMatrix:
    period: int
    sectors: list[SectorBalance]

    @classmethod
    def from_sectors(cls, sectors: Iterable[SectorBalance], period: int = 0) -> "BalanceMatrix":
        by_name = {s.sector: s for s in sectors}
        unknown = set(by_name) - set(SECTORS)
        if unknown:
            raise StructuralError(f"unknown sector(s): {sorted(unknown)}")
        ordered = []
        for name in SECTORS:
            sb = by_name.get(name, SectorBalance(name))
            bad = set(sb.stocks) - set(ROWS)
            if bad:
                raise StructuralError(f"sector {name!r} holds unknown instrument(s) {sorted(bad)}")
            missing = [r for r, v in sb.stocks.items() if v is None]
            if missing:
                raise StructuralError(f"sector {name!r} is missing stock(s) {missing}")
            ordered.append(SectorBalance(name, {r: float(sb.stocks.get(r, 0.0)) for r in ROWS}))
        return cls(period, ordered)

    @property
    def array(self) -> np.ndarray:
        """Rows x sectors array (no sum column)."""
        return np.array([[s.stocks[r] for s in self.sectors] for r in ROWS])

    def row_sums(self) -> dict[str, float]:
        return {r: math.fsum(s.stocks[r] for s in self.sectors) for r in ROWS}

    def column_sums(self) -> dict[str, float]:
        return {s.sector: s.total() for s in self.sectors}

    def scale(self) -> float:
        return float(np.max(np.abs(self.array), initial=0.0))

    def to_rows(self) -> list[list]:
        out = [["instrument", *SECTORS, "sum"]]
        sums = self.row_sums()
        for r in ROWS:
            out.append([r, *[s.stocks[r] for s in self.sectors], sums[r]])
        out.append(["sum", *[self.column_sums()[s] for s in SECTORS], math.fsum(sums.values())])
        return out

    def dump(self, path: Path) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            csv.writer(fh).writerows(self.to_rows())
        return path


@dataclass
class AuditReport:
    period: int
    row_residuals: dict[str, float]
    column_residuals: dict[str, float]
    max_residual: float
    scale: float
    tolerance: float
    passed: bool
    worst: str = ""


def assemble_matrix(economy) -> BalanceMatrix:
    """Build the balance sheet matrix from anything exposing ``sector_balances()``."""
    balances: list[SectorBalance] = economy.sector_balances()
    return BalanceMatrix.from_sectors(balances, period=getattr(economy, "period", 0))


def audit(matrix: BalanceMatrix, tolerance: float = 1e-8) -> AuditReport:
    """Check row and column identities relative to the largest stock."""
    arr = matrix.array
    if not np.all(np.isfinite(arr)):
        r, c = np.argwhere(~np.isfinite(arr))[0]
        raise StructuralError(
            f"non-finite stock {arr[r, c]} for {SECTORS[c]}/{ROWS[r]} at period {matrix.period}"
        )
    sums = matrix.row_sums()
    real = math.fsum(sums[r] for r in REAL_ROWS)
    rows = {r: sums[r] for r in FINANCIAL_ROWS}
    rows["balance"] = sums["balance"] + real
    cols = matrix.column_sums()

    labelled = [(abs(v), f"row:{k}") for k, v in rows.items()]
    labelled += [(abs(v), f"column:{k}") for k, v in cols.items()]
    max_res, worst = max(labelled)
    scale = max(matrix.scale(), 1.0)
    passed = max_res <= tolerance * scale
    return AuditReport(
        period=matrix.period,
        row_residuals=rows,
        column_residuals=cols,
        max_residual=max_res,
        scale=scale,
        tolerance=tolerance,
        passed=passed,
        worst="" if passed and max_res == 0 else worst,
    )


def write_audit_csv(reports: Iterable[AuditReport], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["period", "max_residual", "pass"])
        for rep in reports:
            w.writerow([rep.period, repr(rep.max_residual), int(rep.passed)])


def sector_from_mapping(name: str, stocks: Mapping[str, float]) -> SectorBalance:
    return SectorBalance(name, dict(stocks))
