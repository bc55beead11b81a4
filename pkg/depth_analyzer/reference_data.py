"""Loaders for the two-column CSV inputs: reference accuracy and custom weights."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

logger = logging.getLogger(__name__)

ACCURACY_HEADER = ("architecture", "top1")
WEIGHTS_HEADER = ("length", "weight")
DATA_DIR = Path(__file__).resolve().parent / "data"
SHIPPED_ACCURACY_FILE = DATA_DIR / "reference_accuracy.csv"


class ReferenceDataError(Exception):
    """Custom exception for malformed reference data files."""

    def __init__(self, message: str, path=None, line: int | None = None):
        self.line = line
        where = f"{path}" if path is not None else ""
        if line is not None:
            where += f" line {line}"
        super().__init__(f"{where}: {message}" if where else message)


@dataclass(frozen=True)
class ReferenceAccuracyTable:
    rows: tuple[tuple[str, float], ...]

    def __len__(self):
        return len(self.rows)

    def names(self) -> list[str]:
        return [name for name, _ in self.rows]

    def top1(self, name: str) -> float | None:
        for row_name, value in self.rows:
            if row_name == name:
                return value
        return None


def _data_rows(path, header):
    """Yields (line number, cells) after checking the header; '#' lines are comments."""
    try:
        f = open(path, "r", encoding="utf-8", newline="")
    except OSError as e:
        raise ReferenceDataError(f"cannot open file: {e.strerror}", path) from e
    with f:
        seen_header = False
        for lineno, cells in enumerate(csv.reader(f), start=1):
            if not cells or not "".join(cells).strip() or cells[0].lstrip().startswith("#"):
                continue
            cells = [c.strip() for c in cells]
            if not seen_header:
                if tuple(cells) != header:
                    raise ReferenceDataError(f"expected header '{','.join(header)}', got '{','.join(cells)}'",
                                             path, lineno)
                seen_header = True
                continue
            if len(cells) != 2:
                raise ReferenceDataError(f"expected 2 columns, got {len(cells)}", path, lineno)
            yield lineno, cells


def load_reference_accuracy(path) -> ReferenceAccuracyTable:
    """Reads `architecture,top1` rows; names unique, 0 <= top1 <= 100."""
    rows = []
    seen = set()
    for lineno, (name, raw) in _data_rows(path, ACCURACY_HEADER):
        if not name:
            raise ReferenceDataError("empty architecture name", path, lineno)
        try:
            value = float(raw)
        except ValueError:
            raise ReferenceDataError(f"top1 '{raw}' is not a number", path, lineno) from None
        if not (0.0 <= value <= 100.0) or math.isnan(value):
            raise ReferenceDataError(f"top1 {raw} out of range [0, 100]", path, lineno)
        if name in seen:
            raise ReferenceDataError(f"duplicate architecture '{name}'", path, lineno)
        seen.add(name)
        rows.append((name, value))
    logger.info("ReferenceData: loaded %d accuracy rows from %s", len(rows), path)
    return ReferenceAccuracyTable(tuple(rows))


def load_custom_weights(path) -> dict[int, float]:
    """Reads `length,weight` rows into a per-length weight map."""
    weights: dict[int, float] = {}
    for lineno, (raw_length, raw_weight) in _data_rows(path, WEIGHTS_HEADER):
        try:
            length = int(raw_length)
            weight = float(raw_weight)
        except ValueError:
            raise ReferenceDataError(f"malformed row '{raw_length},{raw_weight}'", path, lineno) from None
        if length < 0:
            raise ReferenceDataError(f"length must be non-negative, got {length}", path, lineno)
        if weight < 0 or math.isnan(weight) or math.isinf(weight):
            raise ReferenceDataError(f"weight must be a finite non-negative number, got {raw_weight}", path, lineno)
        if length in weights:
            raise ReferenceDataError(f"duplicate length {length}", path, lineno)
        weights[length] = weight
    return weights
