"""Figure rendering for experiment bundles.

Every figure is drawn from the CSV intermediates of a run bundle, never
from in-memory state, so the plotted numbers are exactly the ones tests
assert on.  SVG output is deterministic: a fixed hash salt and no Date
metadata make identical bundles render byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.figure import Figure

matplotlib.rcParams["svg.hashsalt"] = "ficnull"

__all__ = ["emit_plots"]

_SAVE_KW = {"format": "svg", "metadata": {"Date": None}, "bbox_inches": "tight"}


def _read_columns(path: Path) -> dict[str, list]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        cols: dict[str, list] = {name: [] for name in reader.fieldnames}
        for row in reader:
            for name, val in row.items():
                cols[name].append(val)
    return cols


def _floats(values) -> np.ndarray:
    return np.array([float(v) for v in values])


def plot_spectrum(sigma: np.ndarray, path: Path) -> None:
    fig = Figure(figsize=(5, 3.5))
    ax = fig.add_subplot()
    ax.semilogy(np.arange(1, len(sigma) + 1), sigma, "o-", ms=4)
    ax.set_xlabel("index")
    ax.set_ylabel("singular value")
    ax.grid(True, which="both", alpha=0.3)
    fig.savefig(path, **_SAVE_KW)


def plot_weights(
    coords: np.ndarray, weights: np.ndarray, thresholded: np.ndarray, path: Path, circular: bool
) -> None:
    if circular:
        fig = Figure(figsize=(4.5, 4.5))
        ax = fig.add_subplot(projection="polar")
        width = 2 * np.pi / max(len(coords), 1)
        colors = ["#d62728" if t else "#1f77b4" for t in thresholded]
        ax.bar(coords, weights, width=width, color=colors, align="center")
    else:
        fig = Figure(figsize=(5, 3.5))
        ax = fig.add_subplot()
        width = float(coords[1] - coords[0]) * 0.9 if len(coords) > 1 else 0.1
        colors = ["#d62728" if t else "#1f77b4" for t in thresholded]
        ax.bar(coords, weights, width=width, color=colors)
        ax.set_xlabel("domain coordinate")
        ax.set_ylabel("weight")
    fig.savefig(path, **_SAVE_KW)


def plot_reconstruction(
    coords: np.ndarray,
    values: np.ndarray,
    truth: np.ndarray | None,
    path: Path,
    circular: bool,
) -> None:
    if circular:
        fig = Figure(figsize=(4.5, 4.5))
        ax = fig.add_subplot(projection="polar")
        width = 2 * np.pi / max(len(coords), 1)
        if truth is not None:
            ax.bar(coords, truth, width=width, color="#9467bd", alpha=0.5, label="true")
        ax.bar(coords, values, width=width, color="#1f77b4", alpha=0.8, label="reconstruction")
        ax.legend(loc="lower left", fontsize=7)
    else:
        fig = Figure(figsize=(5, 3.5))
        ax = fig.add_subplot()
        if truth is not None:
            ax.step(coords, truth, where="mid", color="#9467bd", label="true")
        ax.step(coords, values, where="mid", color="#1f77b4", label="reconstruction")
        ax.set_xlabel("domain coordinate")
        ax.legend(fontsize=7)
    fig.savefig(path, **_SAVE_KW)


def plot_vector_grid(
    coords: np.ndarray, vectors: np.ndarray, path: Path, circular: bool
) -> None:
    count = vectors.shape[1]
    fig = Figure(figsize=(8, 8))
    for i in range(count):
        if circular:
            ax = fig.add_subplot(3, 3, i + 1, projection="polar")
            ax.plot(coords, vectors[:, i], lw=0.8)
            ax.set_xticklabels([])
            ax.set_yticklabels([])
        else:
            ax = fig.add_subplot(3, 3, i + 1)
            ax.plot(coords, vectors[:, i], lw=0.8)
            ax.set_xticks([])
        ax.set_title(f"v{i + 1}", fontsize=8)
    fig.savefig(path, **_SAVE_KW)


def emit_plots(bundle_dir) -> list[Path]:
    """Render every figure a bundle supports; returns the written paths."""
    bundle = Path(bundle_dir)
    index_path = bundle / "index.json"
    if not index_path.exists():
        raise FileNotFoundError(f"no index.json in {bundle}")
    index = json.loads(index_path.read_text())
    circular = index["experiment"] == "annulus"
    coords = np.array(index["coordinates"])
    out = bundle / "plots"
    out.mkdir(exist_ok=True)
    written: list[Path] = []

    spec_csv = bundle / "model" / "spectrum.csv"
    if spec_csv.exists():
        cols = _read_columns(spec_csv)
        target = out / "spectrum.svg"
        plot_spectrum(_floats(cols["sigma"]), target)
        written.append(target)

    vec_csv = bundle / "model" / "right_vectors.csv"
    if vec_csv.exists():
        cols = _read_columns(vec_csv)
        names = [n for n in cols if n.startswith("v")]
        vecs = np.column_stack([_floats(cols[n]) for n in names])
        target = out / "right_vectors.svg"
        plot_vector_grid(coords, vecs, target, circular)
        written.append(target)

    truth = None
    true_csv = bundle / "model" / "true_source.csv"
    if true_csv.exists():
        truth = _floats(_read_columns(true_csv)["value"])

    seen_weights = set()
    for cell in index["cells"]:
        if cell.get("status") != "ok":
            continue
        cell_dir = bundle / cell["dir"]
        key = (cell["level"], cell["seed"])
        wpath = cell_dir / "weights.csv"
        if key not in seen_weights and wpath.exists():
            seen_weights.add(key)
            cols = _read_columns(wpath)
            target = out / f"weights_{cell['level']:g}_{cell['seed']}.svg"
            plot_weights(
                coords,
                _floats(cols["weight"]),
                [v == "true" for v in cols["thresholded"]],
                target,
                circular,
            )
            written.append(target)
        rpath = cell_dir / "reconstruction.csv"
        if rpath.exists():
            cols = _read_columns(rpath)
            target = out / f"recon_{cell['dir'].split('/')[-1]}.svg"
            plot_reconstruction(coords, _floats(cols["value"]), truth, target, circular)
            written.append(target)
    return written
