#!/usr/bin/env python3
"""Render median-over-seeds convergence curves from solver trace CSVs.

Reads the benchmark CLI's trace files ({algorithm}_{seed}.csv), groups them
by algorithm, and draws one median line per algorithm with shaded quartiles.
"""
import argparse
import csv
import glob as globmod
import os
import re
import sys
from dataclasses import dataclass

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

# the documented trace schema; anything else is a drift we refuse to read
SCHEMA = ("k", "obj", "aug_lag", "residual", "stationarity", "theta",
          "lyapunov", "queries_cum")
X_COLUMNS = {"iterations": "k", "queries": "queries_cum"}
Y_CHOICES = ("obj", "stationarity", "residual")
LOG_FLOOR = 1e-16


class PlotError(Exception):
    pass


@dataclass
class PlotSpec:
    glob: str
    x: str = "queries"
    y: str = "obj"
    out: str = "fig.png"
    logy: bool = False


def load_trace(path):
    """Parse one CSV into {column: float array}, insisting on the exact schema."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PlotError(f"schema mismatch in {path}: empty file")
        if tuple(header) != SCHEMA:
            raise PlotError(
                f"schema mismatch in {path}: expected columns "
                f"{','.join(SCHEMA)} got {','.join(header)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(SCHEMA):
                raise PlotError(f"schema mismatch in {path}: row {lineno} has "
                                f"{len(row)} fields")
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise PlotError(f"schema mismatch in {path}: non-numeric "
                                f"value on row {lineno}")
    if not rows:
        raise PlotError(f"schema mismatch in {path}: no data rows")
    data = np.asarray(rows)
    return {name: data[:, i] for i, name in enumerate(SCHEMA)}


def _group_key(path):
    # trace files are named {algorithm}_{seed}.csv; a trailing integer is the
    # seed, the rest is the algorithm label
    stem = os.path.splitext(os.path.basename(path))[0]
    m = re.match(r"(.+)_(\d+)$", stem)
    if m:
        return m.group(1), int(m.group(2))
    return stem, 0


def aggregate(files, x_col, y_col):
    """Group runs by algorithm and reduce seeds to median plus quartiles.

    Returns {algorithm: (x, median, q25, q75)} with rows truncated to the
    shortest run in each group.
    """
    groups = {}
    for path in sorted(files):
        algo, seed = _group_key(path)
        groups.setdefault(algo, []).append((seed, load_trace(path)))
    out = {}
    for algo, runs in groups.items():
        runs.sort(key=lambda t: t[0])
        rows = min(len(t[1][x_col]) for t in runs)
        xs = np.stack([t[1][x_col][:rows] for t in runs])
        ys = np.stack([t[1][y_col][:rows] for t in runs])
        out[algo] = (np.median(xs, axis=0), np.median(ys, axis=0),
                     np.percentile(ys, 25, axis=0),
                     np.percentile(ys, 75, axis=0))
    return out


def render(spec: PlotSpec) -> str:
    files = globmod.glob(spec.glob)
    if not files:
        raise PlotError(f"no trace CSV matches {spec.glob!r}")
    if spec.x not in X_COLUMNS:
        raise PlotError(f"unknown x axis {spec.x!r}")
    if spec.y not in Y_CHOICES:
        raise PlotError(f"unknown y axis {spec.y!r}")
    curves = aggregate(files, X_COLUMNS[spec.x], spec.y)

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    clipped = 0
    for algo in sorted(curves):
        x, med, lo, hi = curves[algo]
        if spec.logy:
            clipped += int(np.sum(med < LOG_FLOOR) + np.sum(lo < LOG_FLOOR)
                           + np.sum(hi < LOG_FLOOR))
            med = np.maximum(med, LOG_FLOOR)
            lo = np.maximum(lo, LOG_FLOOR)
            hi = np.maximum(hi, LOG_FLOOR)
        line, = ax.plot(x, med, label=algo)
        ax.fill_between(x, lo, hi, color=line.get_color(), alpha=0.2,
                        linewidth=0)
    if clipped:
        print(f"warning: clipped {clipped} values below {LOG_FLOOR:g} for "
              f"the log scale", file=sys.stderr)
    if spec.logy:
        ax.set_yscale("log")
    ax.set_xlabel("function queries" if spec.x == "queries" else "iteration")
    ax.set_ylabel(spec.y)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    # drop the Software text chunk so identical inputs give identical bytes
    fig.savefig(spec.out, dpi=150, metadata={"Software": None})
    plt.close(fig)
    return spec.out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="plot median convergence curves from trace CSVs")
    parser.add_argument("--glob", required=True,
                        help="pattern matching {algorithm}_{seed}.csv traces")
    parser.add_argument("--x", choices=sorted(X_COLUMNS), default="queries")
    parser.add_argument("--y", choices=Y_CHOICES, default="obj")
    parser.add_argument("--out", default="fig.png")
    parser.add_argument("--logy", action="store_true")
    args = parser.parse_args(argv)
    spec = PlotSpec(glob=args.glob, x=args.x, y=args.y, out=args.out,
                    logy=args.logy)
    try:
        render(spec)
    except PlotError as exc:
        print(f"plots error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
