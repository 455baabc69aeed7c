"""Fictitious-null-space weights.

For an orthonormal basis {phi_i} and a truncation level k, each basis
function gets the weight

    w_i = ||P_k phi_i||   if ||P_k phi_i|| >= tau,
    w_i = tau             otherwise,

where P_k projects onto the span of the first k right singular vectors.
Basis functions that the truncated operator barely sees receive the floor
weight tau, which keeps the diagonal weighting operator invertible.

Also implements the noise-driven rule for choosing k: keep the components
whose data coefficient exceeds the noise coefficient, and stop at the
crossover.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ficnull.linop import SingularSystem, TruncatedOperator, _as_vector, _freeze

__all__ = [
    "WeightingScheme",
    "TruncationReport",
    "compute_weights",
    "select_truncation",
    "weight_apply",
    "save_weights_csv",
]


@dataclass(frozen=True)
class WeightingScheme:
    """Thresholded weights w_i = max(||P_k phi_i||, tau) for one basis.

    ``basis`` holds the orthonormal basis columns the weights refer to
    (cols x n_basis); downstream certificate checks need it to form
    P_k phi_i.
    """

    k: int
    tau: float
    proj_norms: np.ndarray
    weights: np.ndarray
    basis: np.ndarray

    @property
    def n_basis(self) -> int:
        return self.weights.shape[0]

    def thresholded(self) -> np.ndarray:
        """Boolean mask of basis indices that received the floor weight."""
        return self.proj_norms < self.tau


@dataclass(frozen=True)
class TruncationReport:
    """Outcome of the noise-driven truncation rule.

    ``signal_coeffs[i] = |(y, u_i)|`` and ``noise_coeffs[i] = |(eta, u_i)|``
    for i = 1..rank.  ``margin_at_k = signal - noise`` at index k (positive
    when the rule fired) and ``margin_after_k = noise - signal`` at index
    k+1 (nan when k is the last index or the fallback fired).
    """

    k: int
    signal_coeffs: np.ndarray
    noise_coeffs: np.ndarray
    margin_at_k: float
    margin_after_k: float
    fallback: bool


def compute_weights(op: TruncatedOperator, basis, tau: float) -> WeightingScheme:
    """Projection norms ||P_k phi_i|| and thresholded weights for a basis.

    ``basis`` is a (cols x n_basis) array with orthonormal columns
    (checked to 1e-10).  The norms come from the Gram expansion
    ||P_k phi_i||^2 = sum_{j<=k} (v_j, phi_i)^2.
    """
    if tau <= 0:
        raise ValueError(f"threshold tau must be positive, got {tau}")
    b = np.asarray(basis, dtype=float)
    if b.ndim != 2 or b.shape[0] != op.system.cols:
        raise ValueError(
            f"basis must be ({op.system.cols} x n) with orthonormal columns, got {b.shape}"
        )
    gram_err = np.abs(b.T @ b - np.eye(b.shape[1])).max()
    if gram_err > 1e-10:
        raise ValueError(f"basis columns not orthonormal (max Gram deviation {gram_err:.2e})")
    coeffs = op.vk.T @ b
    proj_norms = np.sqrt(np.sum(coeffs**2, axis=0))
    weights = np.maximum(proj_norms, tau)
    return WeightingScheme(
        k=op.k,
        tau=float(tau),
        proj_norms=_freeze(proj_norms),
        weights=_freeze(weights),
        basis=_freeze(b),
    )


def select_truncation(svd: SingularSystem, y, eta) -> TruncationReport:
    """Pick the truncation level from known data and noise vectors.

    Returns the largest k with |(y, u_k)| > |(eta, u_k)| and
    |(y, u_{k+1})| <= |(eta, u_{k+1})|.  When no index satisfies both
    inequalities (e.g. eta = 0), falls back to the numerical rank,
    trusting every component above the drop tolerance.
    """
    yv = _as_vector(y, svd.rows, "y")
    ev = _as_vector(eta, svd.rows, "eta")
    r = svd.rank
    signal = np.abs(svd.left[:, :r].T @ yv)
    noise = np.abs(svd.left[:, :r].T @ ev)
    candidates = [
        k
        for k in range(1, r)
        if signal[k - 1] > noise[k - 1] and signal[k] <= noise[k]
    ]
    if candidates:
        k = max(candidates)
        return TruncationReport(
            k=k,
            signal_coeffs=_freeze(signal),
            noise_coeffs=_freeze(noise),
            margin_at_k=float(signal[k - 1] - noise[k - 1]),
            margin_after_k=float(noise[k] - signal[k]),
            fallback=False,
        )
    k = r
    return TruncationReport(
        k=k,
        signal_coeffs=_freeze(signal),
        noise_coeffs=_freeze(noise),
        margin_at_k=float(signal[k - 1] - noise[k - 1]),
        margin_after_k=float("nan"),
        fallback=True,
    )


def weight_apply(scheme: WeightingScheme, x, inverse: bool = False) -> np.ndarray:
    """Multiply (or divide, when ``inverse``) coefficients by the weights."""
    vec = _as_vector(x, scheme.n_basis)
    if inverse:
        return vec / scheme.weights
    return vec * scheme.weights


def save_weights_csv(scheme: WeightingScheme, path) -> None:
    """Write the weight profile as CSV: index, proj_norm, weight, thresholded."""
    mask = scheme.thresholded()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "proj_norm", "weight", "thresholded"])
        for i in range(scheme.n_basis):
            writer.writerow(
                [
                    i,
                    format(scheme.proj_norms[i], ".17g"),
                    format(scheme.weights[i], ".17g"),
                    str(bool(mask[i])).lower(),
                ]
            )
