"""CSV, manifest and SVG emitters.

CSV files are UTF-8 with a header row, '.' decimals and RFC 4180 quoting
(CRLF line ends). Floats are written with ``repr`` so reruns are
byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from pathlib import Path

import numpy as np


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def write_points(path, points, masses=None):
    """One point per row, coordinates then optional mass."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = pts.shape[1]
    header = [f"x{i + 1}" for i in range(n)] + (["mass"] if masses is not None else [])
    rows = (list(p) + ([m] if masses is not None else []) for p, m in
            zip(pts, masses if masses is not None else [None] * len(pts)))
    return write_csv(path, header, rows)


def read_points(path, n=None):
    """Return ``(points, masses or None)``. The header is optional."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if rows and not _is_number(rows[0][0]):
        header, rows = rows[0], rows[1:]
        has_mass = header[-1].strip().lower() == "mass"
    else:
        has_mass = n is not None and len(rows[0]) == n + 1
    data = np.array([[float(v) for v in r] for r in rows], dtype=float)
    if has_mass:
        return data[:, :-1], data[:, -1]
    return data, None


def _is_number(text):
    try:
        float(text)
        return True
    except ValueError:
        return False


def write_solution(path, solution):
    """Node coordinates and value for every non-exterior node."""
    grid = solution.grid
    idx = np.flatnonzero(grid.kinds != 0)
    pts = grid.coords(idx)
    header = [f"x{i + 1}" for i in range(grid.n)] + ["kind", "value"]
    rows = (list(p) + [int(k), v] for p, k, v in zip(pts, grid.kinds[idx], solution.flat[idx]))
    return write_csv(path, header, rows)


def write_chain(path, chain):
    """Index, center, radius and neighbor list (space separated) per ball."""
    nbrs = chain.neighbors()
    n = chain.centers.shape[1]
    header = ["index"] + [f"c{i + 1}" for i in range(n)] + ["radius", "neighbors"]
    rows = ([k] + list(c) + [chain.radius, " ".join(str(j) for j in nbrs[k])]
            for k, c in enumerate(chain.centers))
    return write_csv(path, header, rows)


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(out_dir, command, config, outputs, version, status="ok", error=None):
    """``manifest.json`` listing inputs, version and every output with its hash."""
    out_dir = Path(out_dir)
    entries = []
    for p in outputs:
        p = Path(p)
        entries.append({"file": os.path.relpath(p, out_dir), "sha256": sha256(p), "bytes": p.stat().st_size})
    doc = {"command": command, "version": version, "config": config, "status": status,
           "outputs": entries}
    if error is not None:
        doc["error"] = error
    path = out_dir / "manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "zaremba"
    return plt


def svg_contour_slice(path, solution, axis=1, value=0.0, levels=20):
    """Contour plot of the solution on the plane ``x_axis = value``."""
    plt = _pyplot()
    grid = solution.grid
    k = int(round((value - grid.lo[axis]) / grid.h))
    k = min(max(k, 0), grid.shape[axis] - 1)
    plane = np.take(solution.values, k, axis=axis)
    others = [i for i in range(grid.n) if i != axis]
    ax_vals = grid.axes()
    fig, ax = plt.subplots(figsize=(6, 4))
    cs = ax.contourf(ax_vals[others[0]], ax_vals[others[1]], np.ma.masked_invalid(plane).T, levels=levels)
    fig.colorbar(cs, ax=ax)
    ax.set_xlabel(f"x{others[0] + 1}")
    ax.set_ylabel(f"x{others[1] + 1}")
    ax.set_title(f"u on x{axis + 1} = {grid.lo[axis] + k * grid.h:.4g}")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return Path(path)


def svg_series(path, m, M, sums=None):
    """``M_m`` against ``m`` on a log scale, with partial sums on a twin axis."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(m, M, "o-", label="M_m")
    ax.set_xlabel("m")
    ax.set_ylabel("M_m")
    if sums is not None:
        ax2 = ax.twinx()
        ax2.plot(m, sums, "s--", color="tab:orange", label="partial sums")
        ax2.set_ylabel("sum C_s(H_m) Q^{sm}")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return Path(path)
