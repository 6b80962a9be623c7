import csv
from typing import List, Optional, TextIO

from .constants import CSV_COLUMNS, Ordering
from .harness import SequenceReport


def _figure(value: Optional[float], digits: int = 2) -> str:
    return "" if value is None else f"{value:.{digits}f}"


def report_rows(report: SequenceReport) -> List[List[str]]:
    rows = []
    for ordering in Ordering.ALL:
        for stats in sorted(report.stats.get(ordering, {}).values(), key=lambda s: s.position):
            rows.append([
                str(stats.sid),
                ordering,
                str(stats.position),
                _figure(stats.mean_us),
                _figure(stats.median_us),
                _figure(stats.p95_us),
                _figure(stats.mean_options),
            ])
    return rows


def write_csv(report: SequenceReport, handle: TextIO) -> None:
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    writer.writerows(report_rows(report))


def render_table(report: SequenceReport) -> str:
    header = ["sid", "pos a", "pos b", "opts a", "opts b", "mean us a", "mean us b", "fewer opts", "faster", "flags"]
    stats_a = report.stats.get(Ordering.SEQ_A, {})
    stats_b = report.stats.get(Ordering.SEQ_B, {})
    rows = []
    for comparison in report.comparisons:
        rule_id = (comparison.gid, comparison.sid)
        a, b = stats_a[rule_id], stats_b[rule_id]
        flags = []
        if comparison.cost_violation:
            flags.append("COST")
        if comparison.latency_inverted:
            flags.append("LATENCY")
        rows.append([
            str(comparison.sid),
            str(comparison.position_a),
            str(comparison.position_b),
            _figure(a.mean_options),
            _figure(b.mean_options),
            _figure(a.mean_us),
            _figure(b.mean_us),
            comparison.fewer_options,
            comparison.lower_latency,
            ",".join(flags) or "-",
        ])

    widths = [max(len(row[i]) for row in [header] + rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip() for row in [header] + rows]
    lines.append(f"repetitions: {report.repetitions}")
    for comparison in report.latency_inversions:
        lines.append(f"latency inversion sid {comparison.sid}: {comparison.diagnostics}")
    return "\n".join(lines) + "\n"
