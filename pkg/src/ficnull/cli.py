"""Experiment runner and command-line interface.

Subcommands::

    ficnull run <config>        run an experiment grid, write a CSV bundle
    ficnull verify [...]        run the proposition checks, emit JSON
    ficnull plot <bundle-dir>   render SVG figures from a bundle
    ficnull svd <matrix-file>   singular spectrum of a matrix file

Exit codes: 0 success, 2 verification failure, 1 usage or I/O errors.
The environment variable FICNULL_THREADS caps cell parallelism.

Configuration files are flat ``key = value`` text; ``#`` starts a comment,
unknown keys are errors.  Lists are comma separated.  Keys::

    experiment        heat | annulus | external          (required)
    noise_levels      e.g. 0.001, 0.01    (each in (0,1); optional for external)
    seeds             e.g. 0, 1, 2
    formulations      any of STD_L1, W_L1_MODFID, W_L1_STDFID, TIKH,
                      W_TIKH, BASIS_PURSUIT
    tau               weight threshold (default 1e-3)
    k_rule            auto | fixed       (auto = noise-driven selection)
    k_fixed           truncation level when k_rule = fixed
    alpha_rule        morozov | fixed
    alpha_fixed       regularization parameter when alpha_rule = fixed
    box               none | lo,hi  componentwise bounds for the l1 solvers
    output_dir        bundle directory (default ficnull-out)
    source_center     bump position: x in (0,pi) for heat, angle for annulus
    source_amplitude  bump height
    source_width      bump half-width (raised-cosine profile)
    morozov_safety    scale of the margin-adaptive discrepancy inflation
                      (target = delta * (1 + safety * noise/signal at the
                      last retained component); default 12)
    morozov_safety_modified   safety for the modified-fidelity target (default 1)
    heat_n, heat_final_time, heat_modes, heat_obs_fraction, heat_n_obs
    annulus_r_inner, annulus_r_outer, annulus_n_forward, annulus_n_inverse,
    annulus_n_obs, annulus_n_fourier, annulus_obs_r, annulus_obs_theta
    matrix_file, data_file, delta        (external experiments)
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from ficnull import models, theory
from ficnull.linop import (
    TruncatedOperator,
    apply_truncated_pinv,
    compute_singular_system,
    projection_matrix,
)
from ficnull.solvers import (
    Formulation,
    InverseProblem,
    Reconstruction,
    SolveSpec,
    morozov_alpha,
    save_reconstruction,
    solve_basis_pursuit,
    solve_l1,
    solve_tikhonov,
    support_indices,
)
from ficnull.weighting import compute_weights, save_weights_csv, select_truncation

__all__ = [
    "ExperimentConfig",
    "TrueSource",
    "parse_config",
    "run_experiment",
    "run_verify",
    "hausdorff_distance",
    "main",
]


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class TrueSource:
    """Analytic raised-cosine bump used as the true solution.

    amplitude * cos^2(pi d / (2 width)) for distance d < width from the
    center, zero outside: compactly supported, so the thresholded true
    support is a crisp set of cells.  The reference coefficient vector
    samples the bump at the basis cell midpoints; it is deliberately not
    representable exactly in the basis, and the clean data is generated
    from the analytic description (heat) or the finer forward grid
    (annulus), so no inverse crime is committed.
    """

    center: float
    amplitude: float
    width: float
    circular: bool = False

    def evaluate(self, coords: np.ndarray) -> np.ndarray:
        d = coords - self.center
        if self.circular:
            d = np.angle(np.exp(1j * d))
        d = np.abs(d)
        profile = np.cos(np.pi * d / (2 * self.width)) ** 2
        return self.amplitude * np.where(d < self.width, profile, 0.0)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    noise_levels: tuple[float, ...]
    seeds: tuple[int, ...]
    formulations: tuple[Formulation, ...]
    tau: float = 1e-3
    k_rule: str = "auto"
    k_fixed: Optional[int] = None
    alpha_rule: str = "morozov"
    alpha_fixed: Optional[float] = None
    morozov_safety: float = 12.0
    morozov_safety_modified: float = 1.0
    box: Optional[tuple[float, float]] = None
    output_dir: str = "ficnull-out"
    source_center: Optional[float] = None
    source_amplitude: Optional[float] = None
    source_width: Optional[float] = None
    heat: models.HeatModelConfig = field(default_factory=models.HeatModelConfig)
    annulus: models.AnnulusModelConfig = field(default_factory=models.AnnulusModelConfig)
    matrix_file: Optional[str] = None
    data_file: Optional[str] = None
    delta: Optional[float] = None

    def __post_init__(self) -> None:
        if self.experiment not in ("heat", "annulus", "external"):
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if not self.formulations:
            raise ValueError("need at least one formulation")
        if self.experiment != "external":
            if not self.noise_levels:
                raise ValueError("need at least one noise level")
            if any(not 0 < lv < 1 for lv in self.noise_levels):
                raise ValueError("noise levels must lie in (0, 1)")
        if not self.seeds:
            raise ValueError("need at least one seed")
        if self.k_rule not in ("auto", "fixed"):
            raise ValueError(f"k_rule must be auto or fixed, got {self.k_rule!r}")
        if self.k_rule == "fixed" and not self.k_fixed:
            raise ValueError("k_rule = fixed requires k_fixed")
        if self.alpha_rule not in ("morozov", "fixed"):
            raise ValueError(f"alpha_rule must be morozov or fixed, got {self.alpha_rule!r}")
        if self.alpha_rule == "fixed" and not self.alpha_fixed:
            raise ValueError("alpha_rule = fixed requires alpha_fixed")
        if self.experiment == "external":
            if not self.matrix_file or not self.data_file:
                raise ValueError("external experiments require matrix_file and data_file")
            if not self.noise_levels and self.alpha_rule == "morozov" and not self.delta:
                raise ValueError("external data without noise levels needs delta for morozov")

    def source(self) -> TrueSource:
        circular = self.experiment == "annulus"
        center = self.source_center
        amplitude = self.source_amplitude
        width = self.source_width
        if circular:
            center = 1.5 * math.pi if center is None else center
            amplitude = 1.0 if amplitude is None else amplitude
            width = 0.08 if width is None else width
        else:
            center = 2.2 if center is None else center
            amplitude = 0.8 if amplitude is None else amplitude
            width = 0.18 if width is None else width
        return TrueSource(center, amplitude, width, circular)


_LIST_KEYS = {"noise_levels", "seeds", "formulations", "annulus_obs_r", "annulus_obs_theta"}
_FLOAT_KEYS = {
    "tau",
    "alpha_fixed",
    "morozov_safety",
    "morozov_safety_modified",
    "source_center",
    "source_amplitude",
    "source_width",
    "heat_final_time",
    "heat_obs_fraction",
    "annulus_r_inner",
    "annulus_r_outer",
    "delta",
}
_INT_KEYS = {
    "k_fixed",
    "heat_n",
    "heat_modes",
    "heat_n_obs",
    "annulus_n_forward",
    "annulus_n_inverse",
    "annulus_n_obs",
    "annulus_n_fourier",
}
_STR_KEYS = {"experiment", "k_rule", "alpha_rule", "box", "output_dir", "matrix_file", "data_file"}
_ALL_KEYS = _LIST_KEYS | _FLOAT_KEYS | _INT_KEYS | _STR_KEYS


def parse_config(path) -> ExperimentConfig:
    """Parse a flat key = value configuration file."""
    raw: dict[str, str] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ValueError(f"{path}: line {lineno}: expected 'key = value'")
            key, value = (part.strip() for part in text.split("=", 1))
            if key not in _ALL_KEYS:
                raise ValueError(f"{path}: line {lineno}: unknown key {key!r}")
            if key in raw:
                raise ValueError(f"{path}: line {lineno}: duplicate key {key!r}")
            raw[key] = value

    def take(key, default=None):
        if key not in raw:
            return default
        value = raw.pop(key)
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
        return value

    def take_list(key, conv, default=()):
        if key not in raw:
            return default
        return tuple(conv(v.strip()) for v in raw.pop(key).split(",") if v.strip())

    experiment = take("experiment")
    if experiment is None:
        raise ValueError(f"{path}: missing required key 'experiment'")
    levels = take_list("noise_levels", float)
    seeds = take_list("seeds", int, default=(0,))
    formulations = tuple(Formulation(f) for f in take_list("formulations", str))
    box_raw = take("box", "none")
    box = None
    if box_raw and box_raw != "none":
        parts = [float(v) for v in box_raw.split(",")]
        if len(parts) != 2:
            raise ValueError(f"{path}: box must be 'none' or 'lo,hi'")
        box = (parts[0], parts[1])
    heat = models.HeatModelConfig(
        n=take("heat_n", 20),
        final_time=take("heat_final_time", 0.5),
        modes=take("heat_modes", 3000),
        obs_fraction=take("heat_obs_fraction", 0.25),
        n_obs=take("heat_n_obs"),
    )
    obs_r = take_list("annulus_obs_r", float, default=(0.7, 0.95))
    obs_theta = take_list("annulus_obs_theta", float, default=(math.pi / 3, 2 * math.pi / 3))
    annulus = models.AnnulusModelConfig(
        r_inner=take("annulus_r_inner", 0.5),
        r_outer=take("annulus_r_outer", 1.0),
        n_basis_forward=take("annulus_n_forward", 180),
        n_basis_inverse=take("annulus_n_inverse", 120),
        n_obs=take("annulus_n_obs", 120),
        n_fourier=take("annulus_n_fourier", 64),
        obs_r=(obs_r[0], obs_r[1]),
        obs_theta=(obs_theta[0], obs_theta[1]),
    )
    cfg = ExperimentConfig(
        experiment=experiment,
        noise_levels=levels,
        seeds=seeds,
        formulations=formulations,
        tau=take("tau", 1e-3),
        k_rule=take("k_rule", "auto"),
        k_fixed=take("k_fixed"),
        alpha_rule=take("alpha_rule", "morozov"),
        alpha_fixed=take("alpha_fixed"),
        morozov_safety=take("morozov_safety", 12.0),
        morozov_safety_modified=take("morozov_safety_modified", 1.0),
        box=box,
        output_dir=take("output_dir", "ficnull-out"),
        source_center=take("source_center"),
        source_amplitude=take("source_amplitude"),
        source_width=take("source_width"),
        heat=heat,
        annulus=annulus,
        matrix_file=take("matrix_file"),
        data_file=take("data_file"),
        delta=take("delta"),
    )
    return cfg


# ---------------------------------------------------------------------------
# metrics


def hausdorff_distance(a, b, period: Optional[float] = None) -> float:
    """Hausdorff distance between two coordinate sets (circular when period given).

    Empty vs nonempty is infinitely far apart; empty vs empty is 0.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 and b.size == 0:
        return 0.0
    if a.size == 0 or b.size == 0:
        return float("inf")
    diff = np.abs(a[:, None] - b[None, :])
    if period is not None:
        diff = np.minimum(diff, period - diff)
    return float(max(diff.min(axis=1).max(), diff.min(axis=0).max()))


def _index_distance(i: int, j: int, n: int, circular: bool) -> int:
    d = abs(i - j)
    return min(d, n - d) if circular else d


# ---------------------------------------------------------------------------
# experiment pipeline


def _build_model(cfg: ExperimentConfig):
    """Assemble (matrix, clean data, coordinates, x_ref, cell_width, circular)."""
    if cfg.experiment == "heat":
        a = models.build_heat_matrix(cfg.heat)
        src = cfg.source()
        b = models.heat_forward_data_cosine(cfg.heat, src.center, src.amplitude, src.width)
        coords = models.heat_basis_midpoints(cfg.heat)
        x_ref = src.evaluate(coords)
        width = float(coords[1] - coords[0])
        return a, b, coords, x_ref, width, False
    if cfg.experiment == "annulus":
        a = models.build_annulus_matrix(cfg.annulus, "inverse")
        src = cfg.source()
        fwd_coeffs = src.evaluate(models.annulus_arc_midpoints(cfg.annulus, "forward"))
        b = models.annulus_forward_data(cfg.annulus, fwd_coeffs)
        coords = models.annulus_arc_midpoints(cfg.annulus, "inverse")
        x_ref = src.evaluate(coords)
        width = float(coords[1] - coords[0])
        return a, b, coords, x_ref, width, True
    a = models.load_matrix(cfg.matrix_file)
    data = models.load_matrix(cfg.data_file)
    if 1 not in data.shape:
        raise ValueError(f"data file must hold a vector, got shape {data.shape}")
    b = data.ravel()
    if b.shape[0] != a.shape[0]:
        raise ValueError(
            f"data length {b.shape[0]} does not match matrix rows {a.shape[0]}"
        )
    coords = np.arange(a.shape[1], dtype=float)
    return a, b, coords, None, 1.0, False


def _make_solver(prob, op, scheme, formulation: Formulation, spec: SolveSpec):
    """Closure alpha -> Reconstruction, solved cold.

    Warm starts across nearby alphas can alias the residual below the
    discrepancy tolerance, so the parameter search always solves fresh.
    """
    if formulation in (Formulation.TIKH, Formulation.W_TIKH):
        w = scheme if formulation is Formulation.W_TIKH else None
        return lambda alpha: solve_tikhonov(prob, op, w, alpha)
    w = scheme if formulation is not Formulation.STD_L1 else None
    return lambda alpha: solve_l1(prob, op, w, spec.with_alpha(alpha))


def _discrepancy(cfg: ExperimentConfig, prob: InverseProblem, op, formulation: Formulation):
    """Residual measure and target for the discrepancy-based alpha choice.

    The modified-fidelity formulation lives in the projected space where
    the natural noise scale is the inverted noise ||A_k^+ eta||; everything
    else targets the data-space residual inflated by the safety factor.
    """
    if formulation is Formulation.W_L1_MODFID:
        if prob.eta is None:
            raise ValueError(
                "morozov for W_L1_MODFID needs the noise vector; use alpha_rule = fixed"
            )
        pk = projection_matrix(op)
        data = apply_truncated_pinv(op, prob.y_delta)
        # floor at 1% of the projected data: a lucky noise draw can push the
        # inverted-noise norm below what finite iterations can resolve
        target = max(
            cfg.morozov_safety_modified
            * float(np.linalg.norm(apply_truncated_pinv(op, prob.eta))),
            0.01 * float(np.linalg.norm(data)),
        )

        def fn(rec: Reconstruction) -> float:
            return float(np.linalg.norm(pk @ rec.x - data))

        return fn, target
    if prob.delta <= 0:
        raise ValueError("morozov needs a positive noise bound delta")
    # inflate the data-space target when the last retained component is
    # noise-dominated: fitting down to ||eta|| would then invert mostly
    # noise; when it carries clear signal the plain target is right
    ratio = 0.0
    if prob.eta is not None and prob.y_clean is not None:
        u_last = op.uk[:, -1]
        signal = abs(float(u_last @ prob.y_clean))
        noise = abs(float(u_last @ prob.eta))
        ratio = min(1.0, noise / signal) if signal > 0 else 1.0
    safety = 1.0 + cfg.morozov_safety * ratio if ratio > 0.3 else 1.0
    return None, safety * prob.delta


def _run_cell(job) -> dict:
    (
        cfg,
        bundle,
        cell_name,
        level,
        seed,
        formulation,
        prob,
        op,
        scheme,
        report,
        coords,
        x_ref,
        width,
        circular,
    ) = job
    cell_dir = bundle / cell_name
    cell_dir.mkdir(parents=True, exist_ok=True)
    record = {
        "level": level,
        "seed": seed,
        "formulation": formulation.value,
        "dir": cell_name,
        "k": op.k,
    }
    try:
        if formulation is Formulation.BASIS_PURSUIT:
            target = apply_truncated_pinv(op, prob.y_delta)
            rec = solve_basis_pursuit(op, scheme, target)
            alpha = None
        else:
            spec = SolveSpec(formulation, alpha=1.0, box=cfg.box)
            solver = _make_solver(prob, op, scheme, formulation, spec)
            if cfg.alpha_rule == "morozov":
                residual_fn, target = _discrepancy(cfg, prob, op, formulation)
                alpha = morozov_alpha(prob, solver, target, residual=residual_fn)
            else:
                alpha = cfg.alpha_fixed
            rec = solver(alpha)
        save_reconstruction(rec, cell_dir / "reconstruction.csv")
        save_weights_csv(scheme, cell_dir / "weights.csv")
        metrics = _cell_metrics(
            cfg, level, seed, formulation, alpha, prob, op, rec, coords, x_ref, width, circular
        )
        if report is not None:
            metrics["truncation_fallback"] = report.fallback
        with open(cell_dir / "metrics.json", "w") as fh:
            json.dump(metrics, fh, indent=2, sort_keys=True)
            fh.write("\n")
        record["status"] = "ok"
        record["alpha"] = alpha
    except Exception as exc:  # noqa: BLE001 - per-cell isolation is the contract
        record["status"] = "error"
        record["error"] = f"{type(exc).__name__}: {exc}"
        record["traceback"] = traceback.format_exc()
    return record


def _cell_metrics(
    cfg, level, seed, formulation, alpha, prob, op, rec, coords, x_ref, width, circular
) -> dict:
    period = 2 * math.pi if circular else None
    n = coords.shape[0]
    metrics = {
        "level": level,
        "seed": seed,
        "formulation": formulation.value,
        "alpha": alpha,
        "k": op.k,
        "delta": prob.delta,
        "sigma_k": float(op.sk[-1]),
        "sigma_next": op.sigma_next,
        "converged": rec.converged,
        "iterations": rec.iterations,
        "objective": rec.objective,
        "fidelity_residual": rec.residual_norm,
        "data_residual": float(np.linalg.norm(prob.a @ rec.x - prob.y_delta)),
        "support_size": int(rec.support.size),
        "gamma_estimate": rec.diagnostics.get("gamma_estimate"),
    }
    if x_ref is not None:
        true_support = support_indices(x_ref)
        dist = hausdorff_distance(coords[rec.support], coords[true_support], period)
        metrics["l2_error"] = float(np.linalg.norm(rec.x - x_ref))
        metrics["support_hausdorff"] = dist
        metrics["support_hausdorff_cells"] = dist / width if math.isfinite(dist) else dist
        if rec.support.size:
            arg_rec = int(np.argmax(np.abs(rec.x)))
            arg_true = int(np.argmax(np.abs(x_ref)))
            metrics["argmax_distance_cells"] = _index_distance(arg_rec, arg_true, n, circular)
        else:
            metrics["argmax_distance_cells"] = None
    return metrics


def _write_model_dir(bundle: Path, a, svd, coords, x_ref) -> None:
    model_dir = bundle / "model"
    model_dir.mkdir(parents=True, exist_ok=True)
    models.save_matrix(a, model_dir / "matrix.txt")
    with open(model_dir / "spectrum.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "sigma"])
        for i, s in enumerate(svd.sigma):
            writer.writerow([i + 1, format(s, ".17g")])
    count = min(9, svd.rank)
    with open(model_dir / "right_vectors.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "coordinate"] + [f"v{i + 1}" for i in range(count)])
        for row in range(svd.cols):
            writer.writerow(
                [row, format(coords[row], ".17g")]
                + [format(svd.right[row, i], ".17g") for i in range(count)]
            )
    if x_ref is not None:
        with open(model_dir / "true_source.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "coordinate", "value"])
            for i, (c, v) in enumerate(zip(coords, x_ref)):
                writer.writerow([i, format(c, ".17g"), format(v, ".17g")])


def _thread_count() -> int:
    env = os.environ.get("FICNULL_THREADS", "")
    if env.strip():
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run the (level x seed x formulation) grid and write a bundle.

    Each cell writes reconstruction.csv/.json, weights.csv and
    metrics.json into its own directory; a failing cell is recorded in
    the index with its error and does not stop the run.  Returns the
    index structure (also written to index.json).
    """
    bundle = Path(cfg.output_dir)
    bundle.mkdir(parents=True, exist_ok=True)
    a, b_clean, coords, x_ref, width, circular = _build_model(cfg)
    svd = compute_singular_system(a)
    _write_model_dir(bundle, a, svd, coords, x_ref)

    levels = cfg.noise_levels if cfg.noise_levels else (0.0,)
    jobs = []
    for level in levels:
        for seed in cfg.seeds:
            if level > 0:
                y_delta, eta, delta = models.add_noise(b_clean, models.NoiseSpec(level, seed))
            else:
                y_delta, eta, delta = b_clean, np.zeros_like(b_clean), cfg.delta or 0.0
            prob = InverseProblem(
                a=a, y_delta=y_delta, delta=delta, y_clean=b_clean, eta=eta
            )
            report = None
            if cfg.k_rule == "auto":
                report = select_truncation(svd, b_clean, eta)
                k = report.k
            else:
                k = cfg.k_fixed
            op = TruncatedOperator(svd, min(k, svd.rank))
            scheme = compute_weights(op, np.eye(a.shape[1]), cfg.tau)
            for formulation in cfg.formulations:
                cell_name = f"cells/{level:g}_{seed}_{formulation.value}"
                jobs.append(
                    (
                        cfg,
                        bundle,
                        cell_name,
                        level,
                        seed,
                        formulation,
                        prob,
                        op,
                        scheme,
                        report,
                        coords,
                        x_ref,
                        width,
                        circular,
                    )
                )

    workers = min(_thread_count(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_cell, jobs))
    else:
        records = [_run_cell(job) for job in jobs]

    index = {
        "experiment": cfg.experiment,
        "coordinates": [float(c) for c in coords],
        "cell_width": width,
        "n_basis": int(a.shape[1]),
        "tau": cfg.tau,
        "cells": records,
    }
    with open(bundle / "index.json", "w") as fh:
        json.dump(index, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return index


def run_verify(seeds=(0, 1, 2), sizes=((6, 10), (8, 16), (12, 24))) -> dict:
    """Run the full proposition-check suite (thin wrapper over theory)."""
    return theory.verify_suite(seeds=seeds, sizes=sizes)


# ---------------------------------------------------------------------------
# command line


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _cmd_run(args) -> int:
    cfg = parse_config(args.config)
    index = run_experiment(cfg)
    failed = [c for c in index["cells"] if c["status"] != "ok"]
    print(
        f"wrote {len(index['cells']) - len(failed)} cells to {cfg.output_dir}"
        + (f" ({len(failed)} failed)" if failed else "")
    )
    for cell in failed:
        print(f"  cell {cell['dir']}: {cell['error']}", file=sys.stderr)
    return 0


def _cmd_verify(args) -> int:
    sizes = []
    for token in args.sizes:
        rows, _, cols = token.partition("x")
        sizes.append((int(rows), int(cols)))
    report = run_verify(seeds=args.seeds, sizes=sizes)
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text)
    if not report["passed"]:
        first = next(c["name"] for c in report["checks"] if not c["passed"])
        print(f"verification failed: {first}", file=sys.stderr)
        return 2
    return 0


def _cmd_plot(args) -> int:
    from ficnull.plots import emit_plots

    written = emit_plots(args.bundle)
    print(f"wrote {len(written)} figures to {Path(args.bundle) / 'plots'}")
    return 0


def _cmd_svd(args) -> int:
    a = models.load_matrix(args.matrix)
    svd = compute_singular_system(a)
    print(f"{svd.rows} {svd.cols} rank={svd.rank}")
    for s in svd.sigma:
        print(format(s, ".17g"))
    if args.output:
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "spectrum.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "sigma"])
            for i, s in enumerate(svd.sigma):
                writer.writerow([i + 1, format(s, ".17g")])
        from ficnull.plots import plot_spectrum

        plot_spectrum(svd.sigma, out / "spectrum.svg")
    return 0


def main(argv=None) -> int:
    parser = _Parser(prog="ficnull", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment grid from a config file")
    p_run.add_argument("config")
    p_run.set_defaults(func=_cmd_run)

    p_verify = sub.add_parser("verify", help="run the proposition-check suite")
    p_verify.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    p_verify.add_argument(
        "--sizes", nargs="+", default=["6x10", "8x16", "12x24"], metavar="ROWSxCOLS"
    )
    p_verify.add_argument("--output", help="write the JSON report here instead of stdout")
    p_verify.set_defaults(func=_cmd_verify)

    p_plot = sub.add_parser("plot", help="render figures from a run bundle")
    p_plot.add_argument("bundle")
    p_plot.set_defaults(func=_cmd_plot)

    p_svd = sub.add_parser("svd", help="singular spectrum of a matrix file")
    p_svd.add_argument("matrix")
    p_svd.add_argument("-o", "--output", help="directory for spectrum.csv and spectrum.svg")
    p_svd.set_defaults(func=_cmd_svd)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"ficnull: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
