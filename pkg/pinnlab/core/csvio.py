import csv
import logging
from pathlib import Path

import numpy as np

from .exceptions import ExportError

logger = logging.getLogger(__name__)


def format_value(value):
    """17 significant digits so every float64 reads back unchanged."""
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def write_rows(path, header, rows):
    """
    Write a headered CSV file and return its path.

    Rows may be any iterable of sequences; floats are written with 17
    significant digits.
    """
    path = Path(path)
    count = 0
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open('w', newline='') as handle:
            writer = csv.writer(handle)
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_value(value) for value in row])
                count += 1
    except OSError as e:
        logger.error(f"Error writing {path}: {e}")
        raise ExportError(path, e) from e

    logger.info(f"Wrote {count} rows to {path}")
    return path


def read_rows(path):
    """Return (header, rows) with every cell left as a string."""
    path = Path(path)
    try:
        with path.open(newline='') as handle:
            reader = csv.reader(handle)
            header = next(reader, [])
            rows = [row for row in reader]
    except OSError as e:
        raise ExportError(path, e) from e
    return header, rows
