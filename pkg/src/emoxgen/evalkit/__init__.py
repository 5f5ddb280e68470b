"""Binary F1, cross-domain result matrices, change arithmetic and reports."""

import os

from .analysis import (
    AnalysisReport,
    Change,
    Claim,
    ClaimCheck,
    Discrepancy,
    MarginalClaim,
    MarginalEntry,
    analyze_matrix,
    cd_uplift,
    cell_uplift,
    check_marginal,
    decline,
    in_domain_uplift,
    marginal_aggregate,
    mean_uplift,
    pct_change,
    read_claims,
    read_marginal_claims,
    scheme_deltas,
    verify_fixture,
)
from .matrix import ResultMatrix, cd_average, row_dataset, row_scheme
from .metrics import binary_f1, confusion
from .report import highlight_tier, parse_markdown_grid, render_report

FIXTURE_DIR = os.path.join(os.path.dirname(__file__), "fixtures")


def fixture_path(name):
    """Path of a packaged fixture (``"table3"``, ``"reported_table3"``, ...), or ``name`` unchanged."""
    if os.path.exists(name):
        return name
    stem = name[:-4] if name.endswith(".csv") else name
    cand = os.path.join(FIXTURE_DIR, os.path.basename(stem) + ".csv")
    return cand if os.path.exists(cand) else name
