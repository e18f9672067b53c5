"""Deterministic table and figure writers for the command line front end.

Floats are serialized in their shortest round-trip decimal form, so two runs
with the same inputs produce byte-identical delimited files.  Figures go
through the Agg backend and land next to the tables.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

__all__ = ["fmt_value", "write_table", "write_json", "figure"]


def fmt_value(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        xf = float(x)
        if math.isnan(xf):
            return "nan"
        return repr(xf)
    s = str(x)
    if "," in s or "\n" in s:
        raise ValueError(f"table cell {s!r} needs quoting, which this writer avoids")
    return s


def write_table(out_dir, stem, header, rows, fmt="csv"):
    """Write one table as ``<stem>.csv`` or ``<stem>.json``; returns the path."""
    os.makedirs(out_dir, exist_ok=True)
    if fmt == "csv":
        path = os.path.join(out_dir, stem + ".csv")
        lines = [",".join(header)]
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"row width {len(row)} != header width {len(header)}")
            lines.append(",".join(fmt_value(x) for x in row))
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
        return path
    if fmt == "json":
        path = os.path.join(out_dir, stem + ".json")
        payload = [
            {name: _jsonable(x) for name, x in zip(header, row, strict=True)} for row in rows
        ]
        with open(path, "w", newline="\n") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path
    raise ValueError(f"unknown table format {fmt!r}")


def _jsonable(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return str(x)


def write_json(out_dir, stem, obj):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, stem + ".json")
    with open(path, "w", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


class figure:
    """Context manager yielding a matplotlib figure saved on exit.

    Usage::

        with figure(out_dir, "fig_sweep") as fig:
            ax = fig.subplots()
            ...
    """

    def __init__(self, out_dir, stem, figsize=(7.0, 4.5)):
        self.out_dir = out_dir
        self.stem = stem
        self.figsize = figsize
        self.path = os.path.join(out_dir, stem + ".png")

    def __enter__(self):
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        self._plt = plt
        self.fig = plt.figure(figsize=self.figsize)
        return self.fig

    def __exit__(self, exc_type, exc, tb):
        try:
            if exc_type is None:
                os.makedirs(self.out_dir, exist_ok=True)
                self.fig.tight_layout()
                self.fig.savefig(self.path, dpi=110)
        finally:
            self._plt.close(self.fig)
        return False
