"""CSV export/import of run series (9 significant digits, comma separated)."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .runner import COLUMNS


def format_value(v: float) -> str:
    return format(float(v), ".9g")


def export_csv(result_or_data, path: str | Path) -> Path:
    """Write the recorded series: header row then one row per sample."""
    data = getattr(result_or_data, "data", result_or_data)
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(COLUMNS) + "\n")
        for row in data:
            fh.write(",".join(format_value(v) for v in row) + "\n")
    return path


def read_csv(path: str | Path) -> np.ndarray:
    """Read a series file back; validates the header and column count."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            parts = line.strip().split(",")
            if len(parts) != len(COLUMNS):
                raise ValueError(f"{path}:{lineno}: expected "
                                 f"{len(COLUMNS)} columns, got {len(parts)}")
            rows.append([float(p) for p in parts])
    return np.array(rows)
