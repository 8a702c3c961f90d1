"""Deterministic CSV/JSON record emission shared by the CLI commands."""

from __future__ import annotations

import io
import json
import sys


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_records(records: list[dict], columns: list[str], fmt: str) -> str:
    """Render records with a fixed column schema; byte-stable across runs."""
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(",".join(columns) + "\n")
        for r in records:
            buf.write(",".join(_fmt(r.get(c, "")) for c in columns) + "\n")
        return buf.getvalue()
    if fmt == "json":
        rows = [{c: r.get(c, "") for c in columns} for r in records]
        return json.dumps(rows, indent=2) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def write_records(
    records: list[dict], columns: list[str], path: str | None, fmt: str
) -> None:
    text = render_records(records, columns, fmt)
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def write_table(header: list[str], rows, path: str | None) -> None:
    """Plain CSV writer for columnar sample batches."""
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    text = buf.getvalue()
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)
