"""Train-by-test grids of binary F1 scores.

Row labels name a training configuration as ``<dataset>`` or
``<dataset>+<aux scheme>`` (``founta+ge_go``, ``domain1+ekman``). Column labels
name test sets. A row's in-domain cell is the column whose label equals the
row's dataset part; every other cell is cross-domain.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError, FixtureParseError

PRINTED_CD = "cd_avg_printed"


def row_dataset(label):
    """Dataset part of a row label (text before the first ``+``)."""
    return label.split("+", 1)[0]


def row_scheme(label):
    """Aux-scheme part of a row label, or ``None`` for a baseline row."""
    parts = label.split("+", 1)
    return parts[1] if len(parts) == 2 else None


def cd_average(values, in_domain=None):
    """Mean of ``values`` without position ``in_domain``."""
    vals = [float(v) for i, v in enumerate(values) if i != in_domain]
    if not vals:
        raise ContractError("CD average needs at least one cross-domain cell")
    return math.fsum(vals) / len(vals)


@dataclass
class ResultMatrix:
    rows: list
    cols: list
    cells: np.ndarray
    printed_cd: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = [str(r) for r in self.rows]
        self.cols = [str(c) for c in self.cols]
        self.cells = np.asarray(self.cells, dtype=np.float64)
        if self.cells.shape != (len(self.rows), len(self.cols)):
            raise ContractError(f"matrix cells {self.cells.shape} do not match {len(self.rows)}x{len(self.cols)} labels")
        if len(set(self.rows)) != len(self.rows) or len(set(self.cols)) != len(self.cols):
            raise ContractError("row and column labels must be unique")
        if not np.all((self.cells >= 0.0) & (self.cells <= 1.0)):
            raise ContractError("binary F1 cells must lie in [0, 1]")
        unknown = set(self.printed_cd) - set(self.rows)
        if unknown:
            raise ContractError(f"printed CD for unknown rows {sorted(unknown)}")

    def row_index(self, row):
        try:
            return self.rows.index(row)
        except ValueError:
            raise ContractError(f"no row {row!r} in matrix") from None

    def col_index(self, col):
        try:
            return self.cols.index(col)
        except ValueError:
            raise ContractError(f"no column {col!r} in matrix") from None

    def row(self, row):
        return self.cells[self.row_index(row)]

    def cell(self, row, col):
        return float(self.cells[self.row_index(row), self.col_index(col)])

    def in_domain(self, row):
        """Column index of the in-domain cell of ``row``, or ``None``."""
        ds = row_dataset(row)
        return self.cols.index(ds) if ds in self.cols else None

    def in_domain_value(self, row):
        j = self.in_domain(row)
        if j is None:
            raise ContractError(f"row {row!r} has no in-domain cell")
        return float(self.cells[self.row_index(row), j])

    def cd_average(self, row):
        return cd_average(self.row(row), self.in_domain(row))

    def cd(self, row, source="recomputed"):
        """CD average of ``row`` from the printed column or recomputed from cells."""
        if source == "printed":
            if row not in self.printed_cd:
                raise ContractError(f"row {row!r} has no printed CD average")
            return self.printed_cd[row]
        if source != "recomputed":
            raise ContractError(f"unknown CD source {source!r}")
        return self.cd_average(row)

    def text(self, row, col):
        """Cell as originally written, or formatted to four decimals."""
        return self.raw.get((row, col), f"{self.cell(row, col):.4f}")

    def baselines(self):
        return [r for r in self.rows if row_scheme(r) is None]

    def schemes(self):
        return sorted({s for s in map(row_scheme, self.rows) if s is not None})

    # -- CSV ---------------------------------------------------------------

    @classmethod
    def from_csv(cls, path):
        with open(path, encoding="utf-8", newline="") as fh:
            return cls.from_csv_text(fh.read(), source=str(path))

    @classmethod
    def from_csv_text(cls, text, source="<string>"):
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise FixtureParseError(f"{source}: empty file") from None
        header = [h.strip() for h in header]
        if len(header) < 2 or header[0] != "train":
            raise FixtureParseError(f"{source}: header must start with 'train'")
        has_cd = header[-1] == PRINTED_CD
        cols = header[1:-1] if has_cd else header[1:]
        if not cols:
            raise FixtureParseError(f"{source}: no test columns")
        rows, cells, printed, raw = [], [], {}, {}
        for lineno, rec in enumerate(reader, 2):
            if not rec or not "".join(rec).strip():
                continue
            if len(rec) != len(header):
                raise FixtureParseError(f"{source}:{lineno}: expected {len(header)} fields, got {len(rec)}")
            label = rec[0].strip()
            vals = [v.strip() for v in rec[1:]]
            try:
                nums = [float(v) for v in vals]
            except ValueError:
                raise FixtureParseError(f"{source}:{lineno}: non-numeric cell in {vals}") from None
            if has_cd:
                printed[label] = nums.pop()
                raw[(label, PRINTED_CD)] = vals.pop()
            rows.append(label)
            cells.append(nums)
            for c, v in zip(cols, vals):
                raw[(label, c)] = v
        if not rows:
            raise FixtureParseError(f"{source}: no data rows")
        try:
            return cls(rows, cols, np.array(cells), printed, raw)
        except ContractError as exc:
            raise FixtureParseError(f"{source}: {exc}") from None

    def to_csv_text(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        has_cd = bool(self.printed_cd)
        w.writerow(["train", *self.cols, *([PRINTED_CD] if has_cd else [])])
        for r in self.rows:
            extra = [self.raw.get((r, PRINTED_CD), f"{self.printed_cd[r]:.4f}") if r in self.printed_cd else ""] if has_cd else []
            w.writerow([r, *(self.text(r, c) for c in self.cols), *extra])
        return buf.getvalue()

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv_text())
