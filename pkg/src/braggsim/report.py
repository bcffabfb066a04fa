"""Machine-readable run outputs: RFC-4180 CSV tables and a deterministic
JSON summary with floats at 17 significant digits (exact round-trip).

The summary is byte-stable for a fixed configuration and seed; wall time and
timestamps go to a separate run_meta.json outside the stability contract.
"""

from __future__ import annotations

import csv
import json
import platform
import time
from pathlib import Path


def format_float(x: float) -> str:
    return format(float(x), ".17g")


class _StableEncoder(json.JSONEncoder):
    """JSON encoder using the pure-python path with 17-digit floats."""

    def iterencode(self, o, _one_shot=False):
        markers = {} if self.check_circular else None
        return json.encoder._make_iterencode(
            markers, self.default, json.encoder.py_encode_basestring_ascii,
            self.indent, format_float, self.key_separator, self.item_separator,
            self.sort_keys, self.skipkeys, _one_shot=False,
        )(o, 0)


def dumps_stable(obj) -> str:
    return json.dumps(obj, cls=_StableEncoder, sort_keys=True, indent=2)


def write_summary(out_dir: str | Path, summary: dict) -> Path:
    path = Path(out_dir) / "summary.json"
    path.write_text(dumps_stable(summary) + "\n")
    return path


def write_run_meta(out_dir: str | Path, wall_time_s: float, **extra) -> Path:
    meta = {
        "wall_time_s": wall_time_s,
        "timestamp_unix": time.time(),
        "platform": platform.platform(),
        **extra,
    }
    path = Path(out_dir) / "run_meta.json"
    path.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    return path


def write_table(out_dir: str | Path, name: str, header: list[str],
                rows) -> Path:
    """One CSV per table, header row, floats at 17 significant digits."""
    path = Path(out_dir) / f"{name}.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL)
        writer.writerow(header)
        for row in rows:
            writer.writerow([
                format_float(v) if isinstance(v, float) else v for v in row
            ])
    return path


def versions() -> dict:
    import numpy
    import scipy

    from . import __version__

    return {
        "braggsim": __version__,
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }
