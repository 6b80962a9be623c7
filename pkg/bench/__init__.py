from .constants import CSV_COLUMNS, DEFAULT_REPETITIONS, Ordering
from .exceptions import BenchError, RuleSetMismatch
from .harness import (
    Comparison,
    LatencySample,
    RuleStats,
    SequenceReport,
    compare_sequences,
    mean_packet_cost,
    measure_detection,
    summarise,
)
from .report import render_table, report_rows, write_csv

__all__ = [
    'CSV_COLUMNS',
    'DEFAULT_REPETITIONS',
    'Ordering',
    'BenchError',
    'RuleSetMismatch',
    'Comparison',
    'LatencySample',
    'RuleStats',
    'SequenceReport',
    'compare_sequences',
    'mean_packet_cost',
    'measure_detection',
    'summarise',
    'render_table',
    'report_rows',
    'write_csv',
]
