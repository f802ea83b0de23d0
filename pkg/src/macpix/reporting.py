"""CSV / JSON / SVG writers.

Floats are written with ``repr`` (shortest round-trip form), so identical
values always produce identical bytes.
"""
from __future__ import annotations

import csv
import json
import os

import numpy as np


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_json(path, obj) -> str:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_table(path, header, rows) -> str:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return path


def write_map_csv(path, vm) -> str:
    """Row-major map; the header row carries the column axis, column 0 the row axis."""
    header = [f"{vm.row_label}\\{vm.col_label}"] + [fmt(c) for c in vm.col_axis]
    rows = [[fmt(r)] + [fmt(v) for v in vals] for r, vals in zip(vm.row_axis, vm.values)]
    return write_table(path, header, rows)


def write_column_currents(path, currents) -> str:
    return write_table(path, ["col_index", "i_out_amps"], [(i, c) for i, c in enumerate(currents)])


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def write_heatmap_svg(path, vm, title="") -> str:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4.5, 3.6))
    extent = None
    if vm.row_axis and vm.col_axis:
        extent = (vm.col_axis[0], vm.col_axis[-1], vm.row_axis[0], vm.row_axis[-1])
    im = ax.imshow(vm.values, origin="lower", aspect="auto", extent=extent, cmap="viridis")
    ax.set_xlabel(vm.col_label)
    ax.set_ylabel(vm.row_label)
    ax.set_title(title)
    fig.colorbar(im, ax=ax, label=vm.units)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def write_histogram_svg(path, summary, xlabel, title="") -> str:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    edges = np.asarray(summary.hist_edges)
    ax.bar(edges[:-1], summary.hist_counts, width=np.diff(edges), align="edge", edgecolor="none")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("count")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def write_lines_svg(path, x, series: dict, xlabel, ylabel, title="") -> str:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    for label, y in series.items():
        ax.plot(x, y, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def ensure_dir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return path
