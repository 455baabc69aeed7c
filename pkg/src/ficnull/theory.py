"""Numeric certificates for the recovery and convergence theory.

Every analytical statement behind the weighted method gets an executable
check: the Gram-dominance condition under which unweighted sparsity can
recover a single basis function, the predicted magnitude of a weighted
one-sparse recovery, the argmax property of the inverse-weighted minimum
norm solution, the source-condition generator and its norm series, the
Bregman-distance ledger with its noise-level bound, and the proximity of
full vs truncated Tikhonov solutions.  :func:`verify_suite` sweeps all of
them over seeded random instances and constructed counterexamples.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ficnull.linop import (
    TruncatedOperator,
    _as_vector,
    _freeze,
    as_matrix,
    compute_singular_system,
)
from ficnull.solvers import (
    Formulation,
    InverseProblem,
    SolveSpec,
    solve_basis_pursuit,
    solve_l1,
)
from ficnull.weighting import WeightingScheme, compute_weights

__all__ = [
    "RecoveryCertificate",
    "SourceConditionCertificate",
    "BregmanLedger",
    "check_gram_dominance",
    "predicted_magnitude",
    "weighted_minnorm_scores",
    "weighted_minnorm_argmax",
    "build_source_certificate",
    "bregman_ledger",
    "tikhonov_proximity",
    "nonparallel_columns",
    "recovery_certificate",
    "verify_suite",
]


@dataclass(frozen=True)
class RecoveryCertificate:
    """Flags governing one-sparse recovery of basis function j.

    ``gamma`` is the predicted recovered magnitude 1 - alpha/||P_k phi_j||
    (None when the preconditions fail), ``gram_dominance_holds`` states
    whether unweighted sparsity could even in principle return gamma phi_j,
    ``nonparallel_holds`` whether uniqueness of the weighted recovery is
    guaranteed, and ``threshold_ok`` whether ||P_k phi_j|| >= tau.
    """

    j: int
    gamma: Optional[float]
    gram_dominance_holds: bool
    nonparallel_holds: bool
    threshold_ok: bool


@dataclass(frozen=True)
class SourceConditionCertificate:
    """Source-condition generator lambda for a one-sparse true solution.

    ``lambda_norm**2`` equals ``weights[j]**-2 * norm_series`` with
    ``norm_series = sum_{i<=k} (v_i, phi_j)^2 / sigma_i^2``; the adjoint
    image of ``lambda_k`` lies in the subdifferential of the weighted l1
    functional at phi_j iff ``subdifferential_member``.
    """

    j: int
    lambda_k: np.ndarray
    lambda_norm: float
    norm_series: float
    subdifferential_member: bool
    worst_slack: float


@dataclass(frozen=True)
class BregmanLedger:
    """Bregman distance of a solve against its theoretical bound."""

    d_k: float
    bound: float
    sigma_kp1: float
    delta: float
    alpha: float
    lambda_norm: float


def check_gram_dominance(a, j: int) -> tuple[bool, Optional[int]]:
    """Does column j dominate its Gram cross terms: |(Ae_j, Ae_l)| <= ||Ae_j||^2 for all l?

    Unweighted sparsity regularization can only return a positive multiple
    of e_j when this holds.  Returns the flag and, on failure, the index of
    the worst offending column.
    """
    arr = as_matrix(a)
    if not 0 <= j < arr.shape[1]:
        raise IndexError(f"column index {j} out of range")
    g = arr.T @ arr[:, j]
    diag = g[j]
    others = np.abs(np.delete(g, j))
    if others.size == 0 or others.max() <= diag:
        return True, None
    rel = np.abs(g)
    rel[j] = -np.inf
    return False, int(np.argmax(rel))


def predicted_magnitude(scheme: WeightingScheme, j: int, alpha: float) -> float:
    """Magnitude 1 - alpha/||P_k phi_j|| of the weighted one-sparse recovery."""
    pn = float(scheme.proj_norms[j])
    if pn < scheme.tau:
        raise ValueError(
            f"||P_k phi_{j}|| = {pn:.3e} below threshold tau={scheme.tau}; no prediction"
        )
    if not 0 < alpha < pn:
        raise ValueError(f"alpha must lie in (0, {pn:.6g}), got {alpha}")
    return 1.0 - alpha / pn


def weighted_minnorm_scores(
    op: TruncatedOperator, scheme: WeightingScheme, target
) -> np.ndarray:
    """Basis coefficients of W^-1 applied to the minimum-norm solution.

    For data A_k t the minimum-norm least-squares solution is P_k t, so the
    scores are (P_k t, phi_i) / w_i.  Homogeneous of degree 1 in ``target``.
    """
    t = _as_vector(target, op.system.cols, "target")
    p = op.vk @ (op.vk.T @ t)
    return (scheme.basis.T @ p) / scheme.weights


def weighted_minnorm_argmax(
    op: TruncatedOperator, scheme: WeightingScheme, j: int
) -> np.ndarray:
    """Argmax set of the inverse-weighted minimum-norm solution for data A_k phi_j.

    Under the non-parallel-columns condition the set is exactly {j}; with
    duplicated columns it reports every tied index (relative tie tolerance
    1e-9).
    """
    pn = float(scheme.proj_norms[j])
    if pn < scheme.tau:
        raise ValueError(
            f"||P_k phi_{j}|| = {pn:.3e} below threshold tau={scheme.tau}"
        )
    scores = weighted_minnorm_scores(op, scheme, scheme.basis[:, j])
    top = scores.max()
    return np.nonzero(scores >= top - 1e-9 * max(1.0, abs(top)))[0]


def build_source_certificate(
    op: TruncatedOperator, scheme: WeightingScheme, j: int
) -> SourceConditionCertificate:
    """Construct lambda = w_j^-1 (A_k A_k^T)^+ A_k phi_j and verify it.

    The adjoint image A_k^T lambda equals w_j^-1 P_k phi_j; membership in
    the subdifferential of the weighted l1 functional at phi_j is checked
    componentwise: coefficient j must equal w_j, every other coefficient
    must not exceed its weight in magnitude (tolerance 1e-9 relative).
    """
    pn = float(scheme.proj_norms[j])
    if pn < scheme.tau:
        raise ValueError(
            f"||P_k phi_{j}|| = {pn:.3e} below threshold tau={scheme.tau}"
        )
    phi = scheme.basis[:, j]
    wj = float(scheme.weights[j])
    coords = op.vk.T @ phi
    lam = op.uk @ (coords / op.sk) / wj
    lambda_norm = float(np.linalg.norm(lam))
    norm_series = float(np.sum(coords**2 / op.sk**2))
    adj = op.vk @ (op.sk * (op.uk.T @ lam))
    comp = scheme.basis.T @ adj
    tol = 1e-9
    slack_j = abs(comp[j] - wj)
    others = np.abs(np.delete(comp, j)) - np.delete(scheme.weights, j)
    worst = max(slack_j, float(others.max()) if others.size else 0.0)
    member = slack_j <= tol * max(1.0, wj) and np.all(
        others <= tol * np.maximum(1.0, np.delete(scheme.weights, j))
    )
    return SourceConditionCertificate(
        j=j,
        lambda_k=_freeze(lam),
        lambda_norm=lambda_norm,
        norm_series=norm_series,
        subdifferential_member=bool(member),
        worst_slack=float(worst),
    )


def bregman_ledger(
    prob: InverseProblem,
    op: TruncatedOperator,
    scheme: WeightingScheme,
    x_sol,
    x_true,
    alpha: float,
    j: Optional[int] = None,
    lambda_k=None,
) -> BregmanLedger:
    """Bregman distance of x_sol to x_true and its theoretical bound.

    For a one-sparse truth pass ``j`` (the generator is built from the
    source certificate); for general x_true a subgradient generator
    ``lambda_k`` must be supplied.  Raises when the distance is negative
    beyond numerical noise or exceeds the bound

        (sigma_{k+1} ||x_true|| + delta)^2 / (2 alpha)
        + ||lambda|| (delta + sigma_{k+1} ||x_true||)
        + alpha/2 ||lambda||^2.
    """
    xs = _as_vector(x_sol, op.system.cols, "x_sol")
    xt = _as_vector(x_true, op.system.cols, "x_true")
    if lambda_k is None:
        if j is None:
            raise ValueError("general x_true requires an explicit lambda_k generator")
        lam = build_source_certificate(op, scheme, j).lambda_k
    else:
        lam = _as_vector(lambda_k, op.system.rows, "lambda_k")
    adj = op.vk @ (op.sk * (op.uk.T @ lam))

    def weighted_l1(v: np.ndarray) -> float:
        return float(scheme.weights @ np.abs(scheme.basis.T @ v))

    r_true = weighted_l1(xt)
    d_k = weighted_l1(xs) - r_true - float(adj @ (xs - xt))
    if d_k < -1e-12 * max(1.0, r_true):
        raise RuntimeError(f"Bregman distance came out negative: {d_k:.3e}")
    d_k = max(d_k, 0.0)
    sig_next = op.sigma_next
    lam_norm = float(np.linalg.norm(lam))
    tail = sig_next * float(np.linalg.norm(xt)) + prob.delta
    bound = tail**2 / (2 * alpha) + lam_norm * tail + alpha / 2 * lam_norm**2
    if d_k > bound * (1 + 1e-9):
        raise RuntimeError(
            f"Bregman bound violated: d_k={d_k:.6e} > bound={bound:.6e}"
        )
    return BregmanLedger(
        d_k=d_k,
        bound=float(bound),
        sigma_kp1=sig_next,
        delta=float(prob.delta),
        alpha=float(alpha),
        lambda_norm=lam_norm,
    )


def tikhonov_proximity(a, k: int, alpha: float, x_true) -> tuple[float, float]:
    """Distance between full and k-truncated Tikhonov solutions vs its bound.

    Both solutions are evaluated through the spectral closed form for data
    A x_true, so the distance is the tail sum over components beyond k;
    the bound is sigma_{k+1}^2 / alpha * ||x_true||.  Raises when the bound
    fails beyond 1e-9 relative slack.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    svd = compute_singular_system(a)
    xt = _as_vector(x_true, svd.cols, "x_true")
    r = svd.rank
    if not 0 <= k <= r:
        raise ValueError(f"k={k} outside [0, rank={r}]")
    sig = svd.sigma[:r]
    coef = sig**2 / (sig**2 + alpha) * (svd.right[:, :r].T @ xt)
    lhs = float(np.linalg.norm(coef[k:]))
    sig_next = float(svd.sigma[k]) if k < len(svd.sigma) else 0.0
    rhs = sig_next**2 / alpha * float(np.linalg.norm(xt))
    if lhs > rhs * (1 + 1e-9):
        raise RuntimeError(f"proximity bound violated: {lhs:.6e} > {rhs:.6e}")
    return lhs, rhs


def nonparallel_columns(
    op: TruncatedOperator, basis: np.ndarray, tol: float = 1e-10
) -> tuple[bool, Optional[tuple[int, int]]]:
    """Check that no two basis images under A_k are parallel.

    Columns whose image is numerically zero are ignored: the thresholded
    weights keep the penalty strictly positive there, so they cannot break
    uniqueness.  Returns the flag and, on failure, one offending pair.
    """
    images = (op.uk * op.sk) @ (op.vk.T @ basis)
    norms = np.linalg.norm(images, axis=0)
    scale = norms.max() if norms.size else 0.0
    live = np.nonzero(norms > 1e-14 * max(scale, 1.0))[0]
    if live.size < 2:
        return True, None
    unit = images[:, live] / norms[live]
    gram = np.abs(unit.T @ unit)
    np.fill_diagonal(gram, 0.0)
    worst = np.unravel_index(np.argmax(gram), gram.shape)
    if gram[worst] >= 1.0 - tol:
        return False, (int(live[worst[0]]), int(live[worst[1]]))
    return True, None


def recovery_certificate(
    a, op: TruncatedOperator, scheme: WeightingScheme, j: int, alpha: float
) -> RecoveryCertificate:
    """Assemble the one-sparse recovery flags for basis index j."""
    pn = float(scheme.proj_norms[j])
    threshold_ok = pn >= scheme.tau
    gamma = None
    if threshold_ok and 0 < alpha < pn:
        gamma = predicted_magnitude(scheme, j, alpha)
    dominance, _ = check_gram_dominance(a, j)
    nonpar, _ = nonparallel_columns(op, scheme.basis)
    return RecoveryCertificate(
        j=j,
        gamma=gamma,
        gram_dominance_holds=dominance,
        nonparallel_holds=nonpar,
        threshold_ok=threshold_ok,
    )


# ---------------------------------------------------------------------------
# verification sweeps


def _random_instance(seed: int, rows: int, cols: int):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((rows, cols))
    svd = compute_singular_system(a)
    k = max(1, rows // 2)
    op = TruncatedOperator(svd, k)
    scheme = compute_weights(op, np.eye(cols), tau=1e-3)
    return a, svd, op, scheme


def _check_counterexample() -> dict:
    a = np.array([[1.0, 2.0], [0.0, 0.0]])
    holds, offender = check_gram_dominance(a, 0)
    prob = InverseProblem(a=a, y_delta=a[:, 0])
    spec = SolveSpec(Formulation.STD_L1, alpha=0.05)
    rec = solve_l1(prob, None, None, spec)
    support = set(int(i) for i in rec.support)
    passed = (not holds) and offender == 1 and support != {0}
    return {
        "name": "gram_dominance_counterexample",
        "passed": bool(passed),
        "worst_margin": 0.0 if passed else 1.0,
        "details": {"dominance_holds": holds, "offender": offender, "support": sorted(support)},
    }


def _check_duplicated_columns(seed: int) -> dict:
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((6, 8))
    a[:, 5] = a[:, 2]
    svd = compute_singular_system(a)
    op = TruncatedOperator(svd, 3)
    scheme = compute_weights(op, np.eye(8), tau=1e-3)
    nonpar, pair = nonparallel_columns(op, scheme.basis)
    argmax = set(int(i) for i in weighted_minnorm_argmax(op, scheme, 2))
    passed = (not nonpar) and pair is not None and {2, 5} <= argmax
    return {
        "name": "duplicated_columns_reported",
        "passed": bool(passed),
        "worst_margin": 0.0 if passed else 1.0,
        "details": {"nonparallel_holds": nonpar, "pair": pair, "argmax": sorted(argmax)},
    }


def _check_one_sparse(seeds, sizes) -> dict:
    worst = 0.0
    failures = []
    for seed in seeds:
        for rows, cols in sizes:
            a, _, op, scheme = _random_instance(seed, rows, cols)
            for j in range(cols):
                pn = float(scheme.proj_norms[j])
                if pn < scheme.tau:
                    continue
                alpha = 0.3 * pn
                prob = InverseProblem(a=a, y_delta=a[:, j])
                rec = solve_l1(
                    prob, op, scheme, SolveSpec(Formulation.W_L1_MODFID, alpha=alpha)
                )
                gamma = predicted_magnitude(scheme, j, alpha)
                err = abs(float(rec.x[j]) - gamma)
                worst = max(worst, err)
                if set(rec.support.tolist()) != {j} or err > 1e-5:
                    failures.append({"seed": seed, "rows": rows, "cols": cols, "j": j, "err": err})
    return {
        "name": "one_sparse_recovery",
        "passed": not failures,
        "worst_margin": worst,
        "details": {"failures": failures[:5]},
    }


def _check_argmax(seeds, sizes) -> dict:
    failures = []
    for seed in seeds:
        for rows, cols in sizes:
            _, _, op, scheme = _random_instance(seed, rows, cols)
            for j in range(cols):
                if scheme.proj_norms[j] < scheme.tau:
                    continue
                arg = weighted_minnorm_argmax(op, scheme, j)
                if arg.tolist() != [j]:
                    failures.append({"seed": seed, "rows": rows, "cols": cols, "j": j})
    return {
        "name": "argmax_lemma",
        "passed": not failures,
        "worst_margin": float(len(failures)),
        "details": {"failures": failures[:5]},
    }


def _check_source_certificates(seeds, sizes) -> dict:
    worst = 0.0
    failures = []
    for seed in seeds:
        for rows, cols in sizes:
            _, _, op, scheme = _random_instance(seed, rows, cols)
            for j in range(cols):
                if scheme.proj_norms[j] < scheme.tau:
                    continue
                cert = build_source_certificate(op, scheme, j)
                rel = abs(
                    cert.lambda_norm**2 - cert.norm_series / scheme.weights[j] ** 2
                ) / max(cert.lambda_norm**2, 1e-300)
                worst = max(worst, rel, cert.worst_slack)
                if not cert.subdifferential_member or rel > 1e-9:
                    failures.append({"seed": seed, "rows": rows, "cols": cols, "j": j})
    return {
        "name": "source_certificate",
        "passed": not failures,
        "worst_margin": worst,
        "details": {"failures": failures[:5]},
    }


def _check_tikhonov(seeds, sizes) -> dict:
    worst = 0.0
    failures = []
    alphas = np.logspace(-10, -2, 5)
    for seed in seeds:
        for rows, cols in sizes:
            a, svd, _, _ = _random_instance(seed, rows, cols)
            rng = np.random.default_rng(seed + 1)
            xt = rng.standard_normal(cols)
            for alpha in alphas:
                for k in (1, svd.rank // 2, svd.rank):
                    try:
                        lhs, rhs = tikhonov_proximity(a, k, float(alpha), xt)
                    except RuntimeError:
                        failures.append({"seed": seed, "alpha": float(alpha), "k": k})
                        continue
                    if rhs > 0:
                        worst = max(worst, lhs / rhs)
    return {
        "name": "tikhonov_proximity",
        "passed": not failures,
        "worst_margin": worst,
        "details": {"failures": failures[:5]},
    }


def _check_bregman(seeds, sizes) -> dict:
    worst = 0.0
    failures = []
    for seed in seeds:
        rows, cols = sizes[0]
        a, _, op, scheme = _random_instance(seed, rows, cols)
        admissible = [j for j in range(cols) if scheme.proj_norms[j] >= scheme.tau]
        if not admissible:
            continue
        j = admissible[0]
        xt = np.eye(cols)[:, j]
        y = a @ xt
        rng = np.random.default_rng(seed + 7)
        direction = rng.standard_normal(rows)
        direction /= np.linalg.norm(direction)
        for delta in (1e-4, 1e-3, 1e-2):
            eta = delta * direction
            prob = InverseProblem(
                a=a, y_delta=y + eta, delta=delta, y_clean=y, eta=eta
            )
            alpha = delta
            rec = solve_l1(
                prob, op, scheme, SolveSpec(Formulation.W_L1_STDFID, alpha=alpha)
            )
            try:
                ledger = bregman_ledger(prob, op, scheme, rec.x, xt, alpha, j=j)
            except RuntimeError as exc:
                failures.append({"seed": seed, "delta": delta, "error": str(exc)})
                continue
            if ledger.bound > 0:
                worst = max(worst, ledger.d_k / ledger.bound)
    return {
        "name": "bregman_bound",
        "passed": not failures,
        "worst_margin": worst,
        "details": {"failures": failures[:5]},
    }


def _check_basis_pursuit(seeds, sizes) -> dict:
    worst = 0.0
    failures = []
    for seed in seeds:
        rows, cols = sizes[0]
        _, _, op, scheme = _random_instance(seed, rows, cols)
        for j in range(cols):
            if scheme.proj_norms[j] < scheme.tau:
                continue
            target = np.eye(cols)[:, j]
            rec = solve_basis_pursuit(op, scheme, target)
            err = float(np.abs(rec.x - target).max())
            worst = max(worst, err)
            if err > 1e-5:
                failures.append({"seed": seed, "j": j, "err": err})
    return {
        "name": "basis_pursuit_recovery",
        "passed": not failures,
        "worst_margin": worst,
        "details": {"failures": failures[:5]},
    }


def verify_suite(seeds=(0, 1, 2), sizes=((6, 10), (8, 16), (12, 24))) -> dict:
    """Run every proposition check on seeded instances; returns a JSON-able report."""
    seeds = [int(s) for s in seeds]
    sizes = [tuple(int(v) for v in sz) for sz in sizes]
    checks = [
        _check_counterexample(),
        _check_duplicated_columns(seeds[0]),
        _check_one_sparse(seeds, sizes),
        _check_argmax(seeds, sizes),
        _check_source_certificates(seeds, sizes),
        _check_tikhonov(seeds, sizes),
        _check_bregman(seeds, sizes),
        _check_basis_pursuit(seeds, sizes),
    ]
    return {
        "passed": all(c["passed"] for c in checks),
        "seeds": seeds,
        "sizes": [list(sz) for sz in sizes],
        "checks": checks,
    }
