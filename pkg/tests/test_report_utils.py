import math

import numpy as np

from src.parrondo.report_utils import csv_text, format_float


def test_format_float_marks_missing_values():
    assert format_float(None) == "NaN"
    assert format_float(math.nan) == "NaN"
    assert format_float(np.float64(0.1)) == "0.10000000000000001"
    assert format_float(7) == "7"


def test_csv_text_writes_header_rows_and_footer():
    text = csv_text(
        ("N", "mu_pattern", "note"),
        [(4, 0.25, "ok"), (5, math.nan, "a, b")],
        footer=[("L", "mu_limit"), (128, None)],
    )
    assert text.splitlines() == [
        "N,mu_pattern,note",
        "4,0.25,ok",
        '5,NaN,"a, b"',
        "L,mu_limit",
        "128,NaN",
    ]
