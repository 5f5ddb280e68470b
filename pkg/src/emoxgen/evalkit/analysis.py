"""Relative-change arithmetic over result matrices.

Every percentage is returned as a :class:`Change` that keeps its operands, so
a report can show where each number came from.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

from ..errors import ContractError, DomainError, FixtureParseError
from .matrix import ResultMatrix, row_dataset, row_scheme

CLAIM_TOLERANCE_PP = 0.3
DIFF_TOLERANCE = 0.0005
CLAIM_KINDS = ("decline", "cd_uplift", "cell_uplift", "in_domain_uplift", "pair_mean_uplift", "in_domain_diff")


def pct_change(old, new):
    """(new - old) / old * 100."""
    if old == 0:
        raise DomainError("percentage change from a zero baseline is undefined")
    return (new - old) / old * 100.0


@dataclass(frozen=True)
class Change:
    label: str
    old: float
    new: float

    @property
    def pct(self):
        return pct_change(self.old, self.new)

    @property
    def diff(self):
        return self.new - self.old


def _mean(xs):
    xs = list(xs)
    return math.fsum(xs) / len(xs)


def mean_uplift(old_values, new_values, label=""):
    """Change between the means of two equally long value lists."""
    if len(old_values) != len(new_values) or not old_values:
        raise ContractError("mean uplift needs two non-empty lists of equal length")
    return Change(label, _mean(old_values), _mean(new_values))


def decline(matrix, row, cd_source="printed"):
    """In-domain score to CD average of ``row``."""
    return Change(f"{row}: in-domain -> CD", matrix.in_domain_value(row), matrix.cd(row, cd_source))


def cd_uplift(matrix, baseline, enriched, cd_source="printed"):
    return Change(f"{enriched} vs {baseline}: CD", matrix.cd(baseline, cd_source), matrix.cd(enriched, cd_source))


def cell_uplift(matrix, baseline, enriched, column):
    return Change(f"{enriched} vs {baseline}: {column}", matrix.cell(baseline, column), matrix.cell(enriched, column))


def in_domain_uplift(matrix, baseline, enriched, paired=()):
    """Uplift of the in-domain cell; with ``paired`` columns, of the mean over them too.

    The rows must share their in-domain column. ``paired`` names extra
    columns averaged together with the in-domain cell on both sides.
    """
    j_old, j_new = matrix.in_domain(baseline), matrix.in_domain(enriched)
    if j_old is None or j_new is None:
        raise ContractError(f"rows {baseline!r} and {enriched!r} need an in-domain cell")
    if j_old != j_new:
        raise ContractError(f"rows {baseline!r} and {enriched!r} have different in-domain columns")
    cols = [matrix.cols[j_old]] + [c for c in paired if c != matrix.cols[j_old]]
    label = f"{enriched} vs {baseline}: in-domain" + (f" mean over {'|'.join(sorted(cols))}" if paired else "")
    return mean_uplift(
        [matrix.cell(baseline, c) for c in cols], [matrix.cell(enriched, c) for c in cols], label
    )


# ---------------------------------------------------------------------------
# marginal aggregation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MarginalEntry:
    series: str
    train: str
    baseline: float
    value: float
    members: tuple

    @property
    def change(self):
        return Change(f"{self.series}: {self.train}", self.baseline, self.value)

    @property
    def pct(self):
        return self.change.pct


def marginal_aggregate(matrices, collapse, cd_source="printed"):
    """Mean CD averages with one axis collapsed.

    ``matrices`` maps a base-model name to its :class:`ResultMatrix`.
    ``collapse="emotion-corpus"`` gives one series per base model whose value
    is the mean CD average over all aux schemes; ``collapse="base-model"``
    gives one series per aux scheme whose value, like its baseline, is the
    mean over base models. Returns ``{series: {train: MarginalEntry}}``.
    """
    if not matrices:
        raise ContractError("marginal aggregation needs at least one matrix")
    names = sorted(matrices)
    first = matrices[names[0]]
    for n in names[1:]:
        m = matrices[n]
        if m.rows != first.rows or m.cols != first.cols:
            raise ContractError(f"matrix {n!r} has a different row/column universe than {names[0]!r}")
    trains = first.baselines()
    schemes = first.schemes()
    out = {}
    if collapse == "emotion-corpus":
        for n in names:
            m = matrices[n]
            series = {}
            for t in trains:
                rows = [f"{t}+{s}" for s in schemes if f"{t}+{s}" in m.rows]
                if not rows:
                    continue
                series[t] = MarginalEntry(
                    n, t, m.cd(t, cd_source), _mean(m.cd(r, cd_source) for r in rows), tuple(rows)
                )
            out[n] = series
    elif collapse == "base-model":
        for s in schemes:
            series = {}
            for t in trains:
                r = f"{t}+{s}"
                if r not in first.rows:
                    continue
                series[t] = MarginalEntry(
                    s,
                    t,
                    _mean(matrices[n].cd(t, cd_source) for n in names),
                    _mean(matrices[n].cd(r, cd_source) for n in names),
                    tuple(names),
                )
            out[s] = series
    else:
        raise ContractError(f"unknown collapse axis {collapse!r} (use emotion-corpus or base-model)")
    return out


# ---------------------------------------------------------------------------
# reported claims
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Claim:
    """A percentage (or absolute difference) stated alongside a printed table."""

    kind: str
    train: str
    compare: str = ""
    column: str = ""
    reported: float = 0.0

    def compute(self, matrix, cd_source="printed"):
        if self.kind == "decline":
            return decline(matrix, self.train, cd_source)
        if self.kind == "cd_uplift":
            return cd_uplift(matrix, self.train, self.compare, cd_source)
        if self.kind == "cell_uplift":
            return cell_uplift(matrix, self.train, self.compare, self.column)
        if self.kind in ("in_domain_uplift", "in_domain_diff"):
            return in_domain_uplift(matrix, self.train, self.compare)
        if self.kind == "pair_mean_uplift":
            return in_domain_uplift(matrix, self.train, self.compare, tuple(self.column.split("|")))
        raise ContractError(f"unknown claim kind {self.kind!r}")


@dataclass(frozen=True)
class ClaimCheck:
    claim: Claim
    computed: Change

    @property
    def value(self):
        return self.computed.diff if self.claim.kind == "in_domain_diff" else self.computed.pct

    @property
    def tolerance(self):
        return DIFF_TOLERANCE if self.claim.kind == "in_domain_diff" else CLAIM_TOLERANCE_PP

    @property
    def ok(self):
        return abs(self.value - self.claim.reported) <= self.tolerance + 1e-12


def read_claims(path):
    """Read ``kind,train,compare,column,reported_pct`` rows."""
    claims = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"kind", "train", "compare", "column", "reported_pct"}
        if not need.issubset(reader.fieldnames or ()):
            raise FixtureParseError(f"{path}: claim file needs columns {sorted(need)}")
        for lineno, rec in enumerate(reader, 2):
            if rec["kind"] not in CLAIM_KINDS:
                raise FixtureParseError(f"{path}:{lineno}: unknown claim kind {rec['kind']!r}")
            try:
                reported = float(rec["reported_pct"])
            except ValueError:
                raise FixtureParseError(f"{path}:{lineno}: bad reported value {rec['reported_pct']!r}") from None
            claims.append(Claim(rec["kind"], rec["train"], rec["compare"], rec["column"], reported))
    return claims


@dataclass(frozen=True)
class MarginalClaim:
    collapse: str
    series: str
    train: str
    reported: float
    note: str = ""


def read_marginal_claims(path):
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, rec in enumerate(csv.DictReader(fh), 2):
            try:
                out.append(
                    MarginalClaim(rec["collapse"], rec["series"], rec["train"], float(rec["reported_pct"]), rec.get("note") or "")
                )
            except (KeyError, ValueError):
                raise FixtureParseError(f"{path}:{lineno}: malformed marginal claim") from None
    return out


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Discrepancy:
    row: str
    printed: float
    recomputed: float

    @property
    def delta(self):
        return self.printed - self.recomputed


@dataclass
class AnalysisReport:
    matrix: ResultMatrix
    tolerance: float
    cd_source: str
    recomputed_cd: dict = field(default_factory=dict)
    discrepancies: list = field(default_factory=list)
    declines: list = field(default_factory=list)
    uplifts: list = field(default_factory=list)
    claims: list = field(default_factory=list)
    marginal: dict = field(default_factory=dict)
    marginal_claims: list = field(default_factory=list)
    scheme_deltas: dict = field(default_factory=dict)
    title: str = "Analysis report"


def _pairs(matrix, baseline):
    if baseline is not None:
        matrix.row_index(baseline)
        return [(baseline, r) for r in matrix.rows if r != baseline]
    return [(row_dataset(r), r) for r in matrix.rows if row_scheme(r) is not None and row_dataset(r) in matrix.rows]


def scheme_deltas(matrix):
    """Per aux scheme: mean CD average over its rows minus the baseline-row mean.

    Only datasets that have both a baseline row and a row for the scheme
    contribute. Values are ``Change`` objects on the mean recomputed CD.
    """
    out = {}
    for s in matrix.schemes():
        pairs = [(b, f"{b}+{s}") for b in matrix.baselines() if f"{b}+{s}" in matrix.rows]
        if pairs:
            out[s] = mean_uplift(
                [matrix.cd_average(b) for b, _ in pairs], [matrix.cd_average(e) for _, e in pairs], f"{s} vs no aux: mean CD"
            )
    return out


def analyze_matrix(matrix, baseline=None, tolerance=0.001, claims=(), cd_source=None, title="Analysis report"):
    """Recompute CD averages, flag printed ones off by more than ``tolerance``,
    and compute declines, uplifts and claim checks.

    With ``baseline`` every other row is compared against that row; without it
    each ``<dataset>+<scheme>`` row is compared against ``<dataset>``.
    ``cd_source`` defaults to ``"printed"`` when the matrix has a printed CD
    column and ``"recomputed"`` otherwise.
    """
    if tolerance < 0:
        raise ContractError("tolerance must be non-negative")
    if cd_source is None:
        cd_source = "printed" if matrix.printed_cd else "recomputed"
    rep = AnalysisReport(matrix, tolerance, cd_source, title=title)
    for r in matrix.rows:
        rep.recomputed_cd[r] = matrix.cd_average(r)
        if r in matrix.printed_cd:
            d = Discrepancy(r, matrix.printed_cd[r], rep.recomputed_cd[r])
            if abs(d.delta) > tolerance + 1e-12:
                rep.discrepancies.append(d)
    for r in matrix.baselines():
        if matrix.in_domain(r) is not None:
            rep.declines.append(decline(matrix, r, cd_source))
    for base, other in _pairs(matrix, baseline):
        rep.uplifts.append(cd_uplift(matrix, base, other, cd_source))
        for c in matrix.cols:
            rep.uplifts.append(cell_uplift(matrix, base, other, c))
    rep.claims = [ClaimCheck(c, c.compute(matrix, cd_source)) for c in claims]
    rep.scheme_deltas = scheme_deltas(matrix)
    return rep


def verify_fixture(matrix, tolerance=0.001, claims=(), title="Fixture check"):
    """:func:`analyze_matrix` on a printed table with its printed CD column."""
    if not matrix.printed_cd:
        raise FixtureParseError("fixture has no cd_avg_printed column")
    return analyze_matrix(matrix, None, tolerance, claims, "printed", title)


def check_marginal(marginal_by_collapse, claims):
    """Pair each :class:`MarginalClaim` with the computed entry (or ``None``)."""
    out = []
    for c in claims:
        entry = marginal_by_collapse.get(c.collapse, {}).get(c.series, {}).get(c.train)
        out.append((c, entry))
    return out
