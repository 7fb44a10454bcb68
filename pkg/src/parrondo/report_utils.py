"""
Progress and result reporting for the solvers and the command line.
Centralizes: solver progress lines on stderr, float formatting and
serialization of JSON/CSV result documents.
"""
import csv
import io
import json
import math
import os
import sys
from typing import Any, Iterable, List, Optional, Sequence


def _scalar(x: Any) -> float:
    """Convert numpy scalars (or anything with .item()) to float."""
    if hasattr(x, "item"):
        return float(x.item())
    return float(x)


def print_solver_breakdown(
    label: str,
    iteration: int,
    step: Any,
    gap: Optional[Any] = None,
    residual: Optional[Any] = None,
) -> None:
    """Print one stderr line: solver label, iteration, L1 step, optionally start gap and residual."""
    parts = [f"[{label}] Iteration {iteration}", f"L1 step: {_scalar(step):.3e}"]
    if gap is not None:
        parts.append(f"Start gap: {_scalar(gap):.3e}")
    if residual is not None:
        parts.append(f"Residual: {_scalar(residual):.3e}")
    print(", ".join(parts), file=sys.stderr)


def print_status(message: str, verbose: bool = True) -> None:
    if verbose:
        print(message, file=sys.stderr)


def format_float(x: Optional[float]) -> str:
    """Round-trip decimal form for CSV cells; NaN and None become 'NaN'."""
    if x is None or math.isnan(_scalar(x)):
        return "NaN"
    return format(_scalar(x), ".17g")


def to_jsonable(value: Any) -> Any:
    """Recursively convert numpy scalars/arrays and NaN to JSON-safe values."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if hasattr(value, "tolist"):
        return to_jsonable(value.tolist())
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def ensure_parent_dir(path: str) -> None:
    """Create the directory holding `path` if it does not exist."""
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def dumps_json(document: dict) -> str:
    """JSON text with shortest round-trip float representation."""
    return json.dumps(to_jsonable(document), indent=2) + "\n"


def csv_text(
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    footer: Optional[List[Sequence[Any]]] = None,
) -> str:
    """CSV table; an optional footer block (its own header line, then values) follows the rows."""
    buffer = io.StringIO()
    wr = csv.writer(buffer, lineterminator="\n")
    write_csv_rows(wr, header, rows)
    if footer:
        write_csv_rows(wr, footer[0], footer[1:])
    return buffer.getvalue()


def write_csv_rows(wr, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    wr.writerow(header)
    for row in rows:
        wr.writerow([v if isinstance(v, str) else format_float(v) for v in row])


def write_text(text: str, path: Optional[str] = None) -> None:
    """Write a document to `path`, or to stdout when path is None or '-'."""
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    ensure_parent_dir(path)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    print(f"Report saved to {path}", file=sys.stderr)
