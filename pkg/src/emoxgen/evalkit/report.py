"""Markdown and CSV rendering of an :class:`AnalysisReport`.

Uplift highlight tiers (relative change vs the compared baseline, percent):

=========  ==============
tier       uplift
=========  ==============
``+``      0 < u <= 2
``++``     2 < u <= 5
``+++``    5 < u <= 10
``++++``   u > 10
=========  ==============

No change or a decline gets no highlight. In the Markdown grid a highlighted
cell reads ``0.809 (+)``; :func:`parse_markdown_grid` strips the tier again.
"""

from __future__ import annotations

import csv
import io
import re

from ..errors import ConfigError, DomainError

TIERS = ((10.0, "++++"), (5.0, "+++"), (2.0, "++"), (0.0, "+"))
FORMATS = ("markdown", "csv")


def highlight_tier(pct):
    # round away float noise so an exact 10% uplift stays in the "+++" tier
    pct = round(pct, 9)
    for lower, mark in TIERS:
        if pct > lower:
            return mark
    return ""


def _f(x, nd=4):
    return f"{x:.{nd}f}"


def _p(x):
    return f"{x:+.2f}"


def _safe_pct(change):
    try:
        return change.pct
    except DomainError:
        return None


def _cell_tiers(report):
    """(row, col) -> tier for the per-cell uplifts in the report."""
    tiers = {}
    m = report.matrix
    for ch in report.uplifts:
        # labels look like "<new> vs <old>: <col>"
        head, _, col = ch.label.rpartition(": ")
        new = head.split(" vs ", 1)[0]
        if col in m.cols:
            pct = _safe_pct(ch)
            if pct is not None and highlight_tier(pct):
                tiers[(new, col)] = highlight_tier(pct)
    return tiers


def _md_table(header, rows):
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(str(c) for c in r) + " |" for r in rows]
    return lines


def _render_markdown(report):
    m = report.matrix
    tiers = _cell_tiers(report)
    out = [f"# {report.title}", ""]
    out.append(f"CD source for percentages: {report.cd_source}. Discrepancy tolerance: {report.tolerance:g}.")
    out += ["", "## Grid", ""]
    header = ["train", *m.cols, "cd_avg"] + (["cd_avg_printed"] if m.printed_cd else [])
    rows = []
    for r in m.rows:
        cells = []
        for c in m.cols:
            t = tiers.get((r, c), "")
            cells.append(m.text(r, c) + (f" ({t})" if t else ""))
        extra = [m.raw.get((r, "cd_avg_printed"), _f(m.printed_cd[r]))] if r in m.printed_cd else ([""] if m.printed_cd else [])
        rows.append([r, *cells, _f(report.recomputed_cd[r]), *extra])
    out += _md_table(header, rows)

    out += ["", "## CD average discrepancies", ""]
    if report.discrepancies:
        out += _md_table(
            ["row", "printed", "recomputed", "printed - recomputed"],
            [[d.row, _f(d.printed, 3), _f(d.recomputed), _f(d.delta)] for d in report.discrepancies],
        )
    else:
        out.append("None.")

    out += ["", "## In-domain to cross-domain change", ""]
    out += _md_table(
        ["row", "in-domain", "CD avg", "change %"],
        [[ch.label.split(":")[0], _f(ch.old), _f(ch.new), _p(ch.pct)] for ch in report.declines],
    ) if report.declines else ["None."]

    cd_rows = [ch for ch in report.uplifts if ch.label.endswith(": CD")]
    out += ["", "## CD average uplifts", ""]
    if cd_rows:
        body = []
        for ch in cd_rows:
            pct = _safe_pct(ch)
            body.append([ch.label[: -len(": CD")], _f(ch.old), _f(ch.new), "n/a" if pct is None else _p(pct),
                         "" if pct is None else highlight_tier(pct)])
        out += _md_table(["comparison", "old", "new", "change %", "tier"], body)
    else:
        out.append("None.")

    if report.scheme_deltas:
        out += ["", "## Aux-scheme effect on mean CD average", ""]
        body = []
        for s, ch in sorted(report.scheme_deltas.items()):
            pct = _safe_pct(ch)
            body.append([s, _f(ch.old), _f(ch.new), f"{ch.diff:+.4f}", "n/a" if pct is None else _p(pct)])
        out += _md_table(["scheme", "no-aux mean CD", "scheme mean CD", "signed delta", "change %"], body)

    if report.claims:
        out += ["", "## Reported percentages", ""]
        body = []
        for c in report.claims:
            cl = c.claim
            body.append([cl.kind, cl.train, cl.compare or "-", cl.column or "-", f"{cl.reported:g}",
                         f"{c.value:+.4f}" if cl.kind == "in_domain_diff" else _p(c.value),
                         _f(c.computed.old), _f(c.computed.new), "ok" if c.ok else "MISMATCH"])
        out += _md_table(["kind", "train", "compare", "column", "reported", "computed", "old", "new", "status"], body)

    if report.marginal:
        out += ["", "## Marginal aggregates", ""]
        body = []
        for collapse in sorted(report.marginal):
            for series in sorted(report.marginal[collapse]):
                for train, e in sorted(report.marginal[collapse][series].items()):
                    body.append([collapse, series, train, _f(e.baseline), _f(e.value), _p(e.pct), highlight_tier(e.pct)])
        out += _md_table(["collapse", "series", "train", "baseline", "value", "change %", "tier"], body)
    if report.marginal_claims:
        out += ["", "## Reported marginal percentages", ""]
        body = []
        for c, e in report.marginal_claims:
            if e is None:
                body.append([c.collapse, c.series, c.train, f"{c.reported:g}", "n/a", "missing", c.note])
                continue
            ok = abs(e.pct - c.reported) <= 0.3 + 1e-12
            body.append([c.collapse, c.series, c.train, f"{c.reported:g}", _p(e.pct), "ok" if ok else "MISMATCH", c.note])
        out += _md_table(["collapse", "series", "train", "reported", "computed", "status", "note"], body)
    return "\n".join(out) + "\n"


def _render_csv(report):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["section", "row", "column", "old", "new", "value", "note"])
    m = report.matrix
    for r in m.rows:
        for c in m.cols:
            w.writerow(["cell", r, c, "", "", m.text(r, c), ""])
        printed = m.printed_cd.get(r)
        w.writerow(["cd_avg", r, "", "" if printed is None else _f(printed), _f(report.recomputed_cd[r]), "", ""])
    for d in report.discrepancies:
        w.writerow(["discrepancy", d.row, "", _f(d.printed), _f(d.recomputed), _f(d.delta), f"tolerance {report.tolerance:g}"])
    for ch in report.declines:
        w.writerow(["decline", ch.label.split(":")[0], "", _f(ch.old), _f(ch.new), _f(ch.pct), ""])
    for ch in report.uplifts:
        head, _, col = ch.label.rpartition(": ")
        pct = _safe_pct(ch)
        w.writerow(["uplift", head, col, _f(ch.old), _f(ch.new), "" if pct is None else _f(pct),
                    "" if pct is None else highlight_tier(pct)])
    for s, ch in sorted(report.scheme_deltas.items()):
        pct = _safe_pct(ch)
        w.writerow(["scheme_delta", s, "", _f(ch.old), _f(ch.new), f"{ch.diff:+.6f}", "" if pct is None else _f(pct)])
    for c in report.claims:
        cl = c.claim
        w.writerow(["claim", f"{cl.kind}:{cl.train}:{cl.compare}", cl.column, _f(c.computed.old), _f(c.computed.new),
                    _f(c.value), f"reported {cl.reported:g} {'ok' if c.ok else 'MISMATCH'}"])
    for collapse in sorted(report.marginal):
        for series in sorted(report.marginal[collapse]):
            for train, e in sorted(report.marginal[collapse][series].items()):
                w.writerow(["marginal", f"{collapse}:{series}", train, _f(e.baseline), _f(e.value), _f(e.pct), ""])
    return buf.getvalue()


def render_report(report, fmt="markdown"):
    """Deterministic text rendering of ``report`` as ``"markdown"`` or ``"csv"``."""
    if fmt == "markdown":
        return _render_markdown(report)
    if fmt == "csv":
        return _render_csv(report)
    raise ConfigError(f"unknown report format {fmt!r} (choose from {', '.join(FORMATS)})")


_TIER_RE = re.compile(r"\s*\(\++\)$")


def parse_markdown_grid(text):
    """Read the ``## Grid`` table back as ``(cols, {row: [cell text, ...]})``."""
    lines = text.splitlines()
    start = lines.index("## Grid") + 2
    header = [h.strip() for h in lines[start].strip("|").split("|")]
    end = header.index("cd_avg")
    cols = header[1:end]
    rows = {}
    for ln in lines[start + 2 :]:
        if not ln.startswith("|"):
            break
        parts = [p.strip() for p in ln.strip("|").split("|")]
        rows[parts[0]] = [_TIER_RE.sub("", p) for p in parts[1:end]]
    return cols, rows

