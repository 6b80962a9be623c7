class Ordering:
    SEQ_A = "seq_a"
    SEQ_B = "seq_b"

    ALL = (SEQ_A, SEQ_B)


class Winner:
    TIE = "tie"


CSV_COLUMNS = ("rule_sid", "ordering", "position", "mean_us", "median_us", "p95_us", "mean_options")

DEFAULT_REPETITIONS = 1000
LATENCY_PERCENTILE = 95
