"""Regularized reconstruction solvers.

One ADMM scheme covers the three l1 formulations, the equality-constrained
weighted basis pursuit, and componentwise box constraints; Tikhonov
variants are solved directly.  Fidelity terms use the 1/2 ||.||^2
convention, so the one-sparse recovery magnitude for the modified-fidelity
weighted problem is exactly 1 - alpha / ||P_k phi_j||.

Formulations
------------
STD_L1       min 1/2 ||A x - b||^2          + alpha sum_i |x_i|
W_L1_MODFID  min 1/2 ||P_k x - A_k^+ b||^2  + alpha sum_i w_i |x_i|
W_L1_STDFID  min 1/2 ||A_k x - b||^2        + alpha sum_i w_i |x_i|
TIKH         min ||A x - b||^2              + alpha ||x||^2
W_TIKH       min ||A_k x - b||^2            + alpha ||W x||^2
BASIS_PURSUIT  min sum_i w_i |x_i|  subject to  A_k x = A_k t

A_k is the k-truncated operator, A_k^+ its pseudoinverse, P_k = A_k^+ A_k
the projection onto the complement of the fictitious null space, and w the
thresholded weights.  The modified fidelity never forms A^+ A explicitly:
A_k^+ A = A_k^+ A_k = P_k, so it works on P_k x - A_k^+ b directly.

The ADMM solution reported is the best-objective feasible iterate seen, so
``diagnostics["objective_history"]`` (best value up to each iteration) is
nonincreasing by construction and the reported objective equals its last
entry.  Every converged solve additionally passes the independent
first-order optimality check :func:`optimality_residual`.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional

import numpy as np
from numba import njit

from ficnull.linop import (
    SingularSystem,
    TruncatedOperator,
    _as_vector,
    _freeze,
    apply_truncated_pinv,
    as_matrix,
    projection_matrix,
    truncated_matrix,
)
from ficnull.weighting import WeightingScheme

__all__ = [
    "Formulation",
    "InverseProblem",
    "SolveSpec",
    "Reconstruction",
    "BracketError",
    "solve_l1",
    "solve_tikhonov",
    "solve_basis_pursuit",
    "morozov_alpha",
    "optimality_residual",
    "support_indices",
    "save_reconstruction",
    "SUPPORT_TOL_FACTOR",
]

SUPPORT_TOL_FACTOR = 1e-6

MOROZOV = "morozov"


class Formulation(str, Enum):
    STD_L1 = "STD_L1"
    W_L1_MODFID = "W_L1_MODFID"
    W_L1_STDFID = "W_L1_STDFID"
    TIKH = "TIKH"
    W_TIKH = "W_TIKH"
    BASIS_PURSUIT = "BASIS_PURSUIT"


L1_FORMULATIONS = (Formulation.STD_L1, Formulation.W_L1_MODFID, Formulation.W_L1_STDFID)


class BracketError(RuntimeError):
    """Discrepancy bisection failed to bracket the noise level."""

    def __init__(self, message: str, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class InverseProblem:
    """Forward matrix with clean/noisy data and a noise bound.

    When ``eta`` is given, ``y_clean`` must be too, and
    ``y_delta = y_clean + eta`` with ``||eta|| <= delta`` is checked.
    """

    a: np.ndarray
    y_delta: np.ndarray
    delta: float = 0.0
    y_clean: Optional[np.ndarray] = None
    eta: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        a = as_matrix(self.a)
        y = _as_vector(self.y_delta, a.shape[0], "y_delta")
        object.__setattr__(self, "a", _freeze(a))
        object.__setattr__(self, "y_delta", _freeze(y))
        if self.delta < 0:
            raise ValueError("noise bound delta must be >= 0")
        if self.eta is not None:
            if self.y_clean is None:
                raise ValueError("eta given without y_clean")
            eta = _as_vector(self.eta, a.shape[0], "eta")
            clean = _as_vector(self.y_clean, a.shape[0], "y_clean")
            if np.linalg.norm(eta) > self.delta * (1 + 1e-12):
                raise ValueError(
                    f"||eta||={np.linalg.norm(eta):.6e} exceeds delta={self.delta:.6e}"
                )
            if not np.allclose(clean + eta, y, rtol=0, atol=1e-12 * max(1.0, np.abs(y).max())):
                raise ValueError("y_delta != y_clean + eta")
            object.__setattr__(self, "eta", _freeze(eta))
            object.__setattr__(self, "y_clean", _freeze(clean))
        elif self.y_clean is not None:
            clean = _as_vector(self.y_clean, a.shape[0], "y_clean")
            object.__setattr__(self, "y_clean", _freeze(clean))


@dataclass(frozen=True)
class SolveSpec:
    """Which problem to solve and how hard to try.

    ``alpha`` is a positive number or the string ``"morozov"`` (resolve it
    with :func:`morozov_alpha` before solving).  ``box`` is an optional
    (lo, hi) pair with lo <= 0 <= hi; the composite soft-threshold/clamp
    prox is exact for such boxes.
    """

    formulation: Formulation
    alpha: float | str | None = None
    box: Optional[tuple[float, float]] = None
    tol_primal: float = 1e-8
    tol_dual: float = 1e-8
    max_iter: int = 50000

    def __post_init__(self) -> None:
        form = Formulation(self.formulation)
        object.__setattr__(self, "formulation", form)
        if form is not Formulation.BASIS_PURSUIT:
            if self.alpha is None:
                raise ValueError(f"{form.value} requires alpha > 0 or '{MOROZOV}'")
            if isinstance(self.alpha, str):
                if self.alpha != MOROZOV:
                    raise ValueError(f"unknown alpha rule {self.alpha!r}")
            elif self.alpha <= 0:
                raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.box is not None:
            lo, hi = self.box
            if not (lo <= 0.0 <= hi) or lo >= hi:
                raise ValueError(f"box must satisfy lo <= 0 <= hi with lo < hi, got {self.box}")

    def with_alpha(self, alpha: float) -> "SolveSpec":
        return replace(self, alpha=float(alpha))

    def numeric_alpha(self) -> float:
        if not isinstance(self.alpha, (int, float)):
            raise ValueError(
                f"alpha rule {self.alpha!r} not resolved; call morozov_alpha first"
            )
        return float(self.alpha)


@dataclass(frozen=True)
class Reconstruction:
    """Solver output: coefficients plus convergence diagnostics.

    ``residual_norm`` is the fidelity residual of the formulation that was
    solved (for basis pursuit: the data-space constraint violation).
    ``support`` holds the indices with |x_i| > 1e-6 * ||x||_inf.
    ``converged`` is only set when the iteration tolerances were met and,
    for the l1 formulations, the independent optimality check passed.
    """

    x: np.ndarray
    residual_norm: float
    objective: float
    iterations: int
    converged: bool
    support: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def support_indices(x: np.ndarray) -> np.ndarray:
    """Indices with |x_i| above 1e-6 times the largest magnitude."""
    amax = np.abs(x).max() if x.size else 0.0
    if amax == 0.0:
        return np.array([], dtype=int)
    return np.nonzero(np.abs(x) > SUPPORT_TOL_FACTOR * amax)[0]


def _soft_threshold(v: np.ndarray, t: np.ndarray) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def optimality_residual(
    q: np.ndarray,
    c: np.ndarray,
    weights: np.ndarray,
    alpha: float,
    x: np.ndarray,
    box: Optional[tuple[float, float]] = None,
) -> float:
    """First-order optimality residual for 1/2||Qx-c||^2 + alpha sum w|x| on a box.

    Written independently of the ADMM loop: measures, componentwise, the
    distance from -grad_fidelity to alpha * (weighted sign set) plus the
    box normal cone, and returns the max over components.
    """
    g = q.T @ (q @ x - c)
    aw = alpha * weights
    s_lo = np.where(x > 0, aw, -aw)
    s_hi = np.where(x < 0, -aw, aw)
    if box is not None:
        lo, hi = box
        scale = max(1.0, np.abs(x).max() if x.size else 0.0)
        s_lo = np.where(np.abs(x - lo) <= 1e-14 * scale, -np.inf, s_lo)
        s_hi = np.where(np.abs(x - hi) <= 1e-14 * scale, np.inf, s_hi)
    target = -g
    viol = np.maximum(s_lo - target, target - s_hi)
    return float(max(viol.max(initial=0.0), 0.0))


def _l1_fidelity(
    prob: InverseProblem, op: Optional[TruncatedOperator], formulation: Formulation
) -> tuple[np.ndarray, np.ndarray]:
    """Return the (Q, c) pair of the formulation's quadratic fidelity."""
    if formulation is Formulation.STD_L1:
        return prob.a, prob.y_delta
    if op is None:
        raise ValueError(f"{formulation.value} requires a truncated operator")
    if formulation is Formulation.W_L1_MODFID:
        return projection_matrix(op), apply_truncated_pinv(op, prob.y_delta)
    if formulation is Formulation.W_L1_STDFID:
        return truncated_matrix(op), prob.y_delta
    raise ValueError(f"{formulation.value} is not an l1 formulation")


def _polish_candidate(
    qtq: np.ndarray,
    qtc: np.ndarray,
    weights: np.ndarray,
    alpha: float,
    z: np.ndarray,
    box: Optional[tuple[float, float]],
) -> Optional[np.ndarray]:
    """Exact solve on the sign/support/active-set pattern of z.

    On the pattern's interior the first-order condition is linear:
    Q^T Q x_S = Q^T c - alpha w_S sign(z_S); box-active entries stay at
    their bound.  Returns None when the reduced system is singular or the
    result leaves the box; the caller certifies optimality independently.
    """
    support = np.nonzero(z)[0]
    x = np.zeros_like(z)
    if support.size:
        at_bound = np.zeros(support.size, dtype=bool)
        if box is not None:
            at_bound = (z[support] == box[0]) | (z[support] == box[1])
        bound_idx = support[at_bound]
        free_idx = support[~at_bound]
        x[bound_idx] = z[bound_idx]
        if free_idx.size:
            rhs = qtc[free_idx] - alpha * weights[free_idx] * np.sign(z[free_idx])
            if bound_idx.size:
                rhs -= qtq[np.ix_(free_idx, bound_idx)] @ x[bound_idx]
            try:
                x[free_idx] = np.linalg.solve(qtq[np.ix_(free_idx, free_idx)], rhs)
            except np.linalg.LinAlgError:
                return None
    if box is not None and (x.min() < box[0] or x.max() > box[1]):
        return None
    return x


@njit(cache=True)
def _admm_sweep(qtq, qtc, q, c, walpha, rho, z, u, lo, hi, has_box, tol_p, tol_d, iters):
    """Jitted block of ADMM iterations.

    Runs up to ``iters`` steps, rebalancing rho (factor 2 when the
    primal/dual residual ratio exceeds 10) and stopping early once both
    scaled residuals pass their tolerances.  Returns the final state, the
    per-iteration objective values, and the early-stop flag.
    """
    n = z.shape[0]
    minv = np.linalg.inv(qtq + rho * np.eye(n))
    objs = np.empty(iters)
    r_norm = np.inf
    s_norm = np.inf
    done = 0
    resid_ok = False
    best_obj = np.inf
    best_z = z.copy()
    for t in range(iters):
        x = minv @ (qtc + rho * (z - u))
        v = x + u
        z_old = z
        z = np.sign(v) * np.maximum(np.abs(v) - walpha / rho, 0.0)
        if has_box:
            z = np.minimum(np.maximum(z, lo), hi)
        u = u + x - z
        r_norm = np.linalg.norm(x - z)
        s_norm = rho * np.linalg.norm(z - z_old)
        resid = q @ z - c
        objs[t] = 0.5 * (resid @ resid) + np.sum(walpha * np.abs(z))
        if objs[t] < best_obj:
            best_obj = objs[t]
            best_z = z.copy()
        done = t + 1
        pri_scale = max(1.0, max(np.linalg.norm(x), np.linalg.norm(z)))
        dual_scale = max(1.0, rho * np.linalg.norm(u))
        if r_norm <= tol_p * pri_scale and s_norm <= tol_d * dual_scale:
            resid_ok = True
            break
        # rebalance on scale-relative residuals, with a cooldown: raw norms
        # diverge near the fixed point, and refactorizing every step would
        # dominate the iteration cost
        if t % 25 == 24:
            r_rel = r_norm / pri_scale
            s_rel = s_norm / dual_scale
            if r_rel > 10.0 * s_rel and s_rel > 0:
                rho *= 2.0
                u = u / 2.0
                minv = np.linalg.inv(qtq + rho * np.eye(n))
            elif s_rel > 10.0 * r_rel and r_rel > 0:
                rho /= 2.0
                u = u * 2.0
                minv = np.linalg.inv(qtq + rho * np.eye(n))
    return z, u, rho, r_norm, s_norm, objs[:done], resid_ok, best_z, best_obj


_CHUNK = 50


def _admm_l1(
    q: np.ndarray,
    c: np.ndarray,
    weights: np.ndarray,
    alpha: float,
    spec: SolveSpec,
    start: Optional[dict] = None,
):
    """ADMM for 1/2||Qx-c||^2 + alpha sum_i w_i |x_i| (+ box indicator).

    The sweep runs in jitted blocks of 50 iterations.  Between blocks (at
    an adaptive stride that backs off while attempts keep failing, and
    always when the ADMM residuals pass their tolerances) the current
    support pattern is polished by an exact reduced solve; a point that
    passes the independent optimality check ends the iteration with a
    certified solution.  Small ADMM residuals alone never end it: a warm
    start from a nearby alpha is a near-fixed point, so the first-order
    certificate is always required.
    """
    n = q.shape[1]
    qtq = np.ascontiguousarray(q.T @ q)
    qtc = q.T @ c
    qc = np.ascontiguousarray(q)
    rho = 1.0
    z = np.zeros(n)
    u = np.zeros(n)
    if start:
        z = start["z"].copy()
        u = start["u"].copy()
        rho = start["rho"]
    kkt_target = 1e-6 * alpha
    lo, hi = spec.box if spec.box is not None else (0.0, 0.0)
    has_box = spec.box is not None

    def objective(v: np.ndarray) -> float:
        r = q @ v - c
        return 0.5 * float(r @ r) + alpha * float(weights @ np.abs(v))

    best_obj = objective(z)
    best_z = z.copy()
    history = [best_obj]
    admm_ok = False
    polished = False
    it = 0
    r_norm = s_norm = float("inf")
    walpha = alpha * weights
    tol_p, tol_d = spec.tol_primal, spec.tol_dual
    stride = 1
    chunk_idx = 0
    while it < spec.max_iter:
        block = min(_CHUNK, spec.max_iter - it)
        z, u, rho, r_norm, s_norm, objs, resid_ok, sweep_z, sweep_obj = _admm_sweep(
            qtq, qtc, qc, c, walpha, rho, z, u, lo, hi, has_box, tol_p, tol_d, block
        )
        it += len(objs)
        for ob in objs:
            best_obj = min(best_obj, float(ob))
            history.append(best_obj)
        if float(sweep_obj) <= best_obj:
            best_z = sweep_z
        chunk_idx += 1
        if not (resid_ok or chunk_idx % stride == 0 or it >= spec.max_iter):
            continue
        slack = 1e-12 * max(1.0, abs(best_obj))
        cand = _polish_candidate(qtq, qtc, weights, alpha, z, spec.box)
        if cand is not None and optimality_residual(
            q, c, weights, alpha, cand, spec.box
        ) <= 0.5 * kkt_target:
            cand_obj = objective(cand)
            if cand_obj <= best_obj + slack:
                best_obj = min(best_obj, cand_obj)
                best_z = cand
                history[-1] = best_obj
                polished = True
                admm_ok = True
                break
        if optimality_residual(q, c, weights, alpha, z, spec.box) <= kkt_target:
            z_obj = objective(z)
            if z_obj <= best_obj + slack:
                best_obj = min(best_obj, z_obj)
                best_z = z.copy()
                history[-1] = best_obj
                admm_ok = True
                break
        stride = min(2 * stride, 16)
        if resid_ok:
            # the residual test is satisfied but the certificate is not;
            # disable it so the sweep keeps refining instead of spinning
            tol_p = tol_d = 0.0
    state = {"z": z, "u": u, "rho": rho}
    return best_z, best_obj, history, it, admm_ok, polished, r_norm, s_norm, state


def solve_l1(
    prob: InverseProblem,
    op: Optional[TruncatedOperator],
    scheme: Optional[WeightingScheme],
    spec: SolveSpec,
    start: Optional[Reconstruction] = None,
) -> Reconstruction:
    """Solve one of the three l1 formulations.

    ``scheme`` supplies the weights for the weighted formulations; pass
    None for unit weights (required implicitly by STD_L1).  ``start``
    warm-starts ADMM from a previous solve of the same problem shape.
    """
    if spec.formulation not in L1_FORMULATIONS:
        raise ValueError(f"solve_l1 cannot handle {spec.formulation.value}")
    alpha = spec.numeric_alpha()
    q, c = _l1_fidelity(prob, op, spec.formulation)
    n = q.shape[1]
    if scheme is None:
        weights = np.ones(n)
    else:
        if scheme.n_basis != n:
            raise ValueError(f"weighting has {scheme.n_basis} entries, problem has {n}")
        weights = scheme.weights
    warm = start.diagnostics.get("_state") if start is not None else None
    x, obj, history, iters, admm_ok, polished, r_norm, s_norm, state = _admm_l1(
        q, c, weights, alpha, spec, warm
    )
    kkt = optimality_residual(q, c, weights, alpha, x, spec.box)
    converged = admm_ok and kkt <= 1e-6 * alpha
    support = support_indices(x)
    gamma = float(x[support[0]]) if support.size == 1 else None
    diagnostics = {
        "formulation": spec.formulation.value,
        "alpha": alpha,
        "k": op.k if op is not None else None,
        "tau": scheme.tau if scheme is not None else None,
        "kkt_residual": kkt,
        "polished": polished,
        "primal_residual": r_norm,
        "dual_residual": s_norm,
        "rho": state["rho"],
        "objective_history": history,
        "gamma_estimate": gamma,
        "box": spec.box,
        "_state": state,
    }
    return Reconstruction(
        x=_freeze(x),
        residual_norm=float(np.linalg.norm(q @ x - c)),
        objective=float(obj),
        iterations=iters,
        converged=bool(converged),
        support=_freeze(support),
        diagnostics=diagnostics,
    )


def solve_tikhonov(
    prob: InverseProblem,
    op: SingularSystem | TruncatedOperator,
    scheme: Optional[WeightingScheme],
    alpha: float,
) -> Reconstruction:
    """Tikhonov regularization, plain or with the diagonal weighting.

    The unweighted path uses the spectral closed form
    x = sum_l sigma_l / (sigma_l^2 + alpha) (b, u_l) v_l over the available
    components (all of them for a full system, the first k for a truncated
    operator).  The weighted path solves the normal equations
    (M^T M + alpha G) x = M^T b with G = B diag(w^2) B^T expressed in the
    weighting's basis B, and verifies the solve to relative residual 1e-10.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    b = prob.y_delta
    if isinstance(op, TruncatedOperator):
        sys, k = op.system, op.k
        m = truncated_matrix(op)
        formulation = Formulation.W_TIKH if scheme is not None else Formulation.TIKH
    else:
        sys, k = op, op.rank
        m = (op.left[:, : op.rank] * op.sigma[: op.rank]) @ op.right[:, : op.rank].T
        formulation = Formulation.W_TIKH if scheme is not None else Formulation.TIKH
    if scheme is None:
        sig = sys.sigma[:k]
        coeff = sig / (sig**2 + alpha) * (sys.left[:, :k].T @ b)
        x = sys.right[:, :k] @ coeff
        wx_sq = float(x @ x)
    else:
        if scheme.basis.shape[0] != scheme.basis.shape[1]:
            raise ValueError("weighted Tikhonov needs a square (complete) basis")
        bw = scheme.basis * scheme.weights
        g = bw @ bw.T
        lhs = m.T @ m + alpha * g
        rhs = m.T @ b
        x = np.linalg.solve(lhs, rhs)
        rel = np.linalg.norm(lhs @ x - rhs) / max(np.linalg.norm(rhs), 1e-300)
        if rel > 1e-10:
            raise RuntimeError(f"normal equations solved to {rel:.2e} > 1e-10 only")
        wx = scheme.weights * (scheme.basis.T @ x)
        wx_sq = float(wx @ wx)
    resid = float(np.linalg.norm(m @ x - b))
    objective = resid**2 + alpha * wx_sq
    diagnostics = {
        "formulation": formulation.value,
        "alpha": float(alpha),
        "k": k,
        "tau": scheme.tau if scheme is not None else None,
    }
    return Reconstruction(
        x=_freeze(x),
        residual_norm=resid,
        objective=float(objective),
        iterations=1,
        converged=True,
        support=_freeze(support_indices(x)),
        diagnostics=diagnostics,
    )


def solve_basis_pursuit(
    op: TruncatedOperator,
    scheme: WeightingScheme,
    target,
    tol_primal: float = 1e-10,
    tol_dual: float = 1e-10,
    max_iter: int = 200000,
) -> Reconstruction:
    """Minimize the weighted l1 norm subject to A_k x = A_k target.

    The constraint is enforced exactly at every iterate (the x-update is
    an orthogonal projection onto the affine constraint set), so the
    reported solution's constraint violation is at machine level.
    """
    t = _as_vector(target, op.system.cols, "target")
    if scheme.n_basis != op.system.cols:
        raise ValueError("weighting scheme does not match operator domain")
    vk = op.vk
    d = vk.T @ t
    w = scheme.weights
    n = op.system.cols
    rho = 1.0
    z = np.zeros(n)
    u = np.zeros(n)

    def objective(v: np.ndarray) -> float:
        return float(w @ np.abs(v))

    def project(v: np.ndarray) -> np.ndarray:
        return v - vk @ (vk.T @ v - d)

    best_x = project(np.zeros(n))
    best_obj = objective(best_x)
    history = [best_obj]
    admm_ok = False
    it = 0
    r_norm = s_norm = float("inf")
    for it in range(1, max_iter + 1):
        x = project(z - u)
        z_old = z
        z = _soft_threshold(x + u, w / rho)
        u = u + x - z
        r_norm = float(np.linalg.norm(x - z))
        s_norm = float(rho * np.linalg.norm(z - z_old))
        obj = objective(x)
        if obj < best_obj:
            best_obj = obj
            best_x = x.copy()
        history.append(best_obj)
        eps_pri = tol_primal * max(1.0, np.linalg.norm(x), np.linalg.norm(z))
        eps_dual = tol_dual * max(1.0, rho * np.linalg.norm(u))
        if r_norm <= eps_pri and s_norm <= eps_dual:
            admm_ok = True
            break
        if r_norm > 10.0 * s_norm and s_norm > 0:
            rho *= 2.0
            u /= 2.0
        elif s_norm > 10.0 * r_norm and r_norm > 0:
            rho /= 2.0
            u *= 2.0
    violation = float(np.linalg.norm(op.sk * (vk.T @ best_x - d)))
    converged = admm_ok and violation <= 1e-8
    diagnostics = {
        "formulation": Formulation.BASIS_PURSUIT.value,
        "alpha": None,
        "k": op.k,
        "tau": scheme.tau,
        "primal_residual": r_norm,
        "dual_residual": s_norm,
        "constraint_violation": violation,
        "objective_history": history,
        "rho": rho,
    }
    return Reconstruction(
        x=_freeze(best_x),
        residual_norm=violation,
        objective=float(best_obj),
        iterations=it,
        converged=bool(converged),
        support=_freeze(support_indices(best_x)),
        diagnostics=diagnostics,
    )


def morozov_alpha(
    prob: InverseProblem,
    solve: Callable[[float], Reconstruction],
    delta: float,
    rel_tol: float = 1e-3,
    bracket: tuple[float, float] = (1e-12, 1e4),
    max_bisect: int = 60,
    residual: Optional[Callable[[Reconstruction], float]] = None,
) -> float:
    """Pick alpha so the discrepancy residual matches delta.

    By default the residual is the data-space norm ||A x_alpha - y_delta||;
    pass ``residual`` to match a formulation's own fidelity instead (e.g.
    the truncated or projected residual).  Bisection on log alpha over
    ``bracket``: the residual is nondecreasing in alpha, so when the
    most-regularized end already satisfies the discrepancy (delta >= its
    residual, e.g. delta >= ||y_delta||), the upper bracket is returned;
    when every probe stays above delta down to the lower bracket, a
    :class:`BracketError` with diagnostics is raised.
    """
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if residual is None:
        def residual(rec: Reconstruction) -> float:
            return float(np.linalg.norm(prob.a @ rec.x - prob.y_delta))

    lo, hi = bracket
    r_hi = residual(solve(hi))
    if r_hi <= delta * (1 + rel_tol):
        return hi
    llo, lhi = np.log10(lo), np.log10(hi)
    r_mid = r_hi
    for _ in range(max_bisect):
        if lhi - llo < 1e-6:
            break
        mid = 10 ** ((llo + lhi) / 2)
        r_mid = residual(solve(mid))
        if abs(r_mid - delta) <= rel_tol * delta:
            return mid
        if r_mid > delta:
            lhi = np.log10(mid)
        else:
            llo = np.log10(mid)
    raise BracketError(
        "bisection exhausted without reaching the discrepancy tolerance "
        "(residual may sit above delta on the whole bracket)",
        residual_last=r_mid,
        residual_hi=r_hi,
        delta=delta,
        bracket=bracket,
    )


def save_reconstruction(rec: Reconstruction, csv_path) -> None:
    """Write coefficients as CSV (index, value) plus a JSON sidecar.

    The sidecar (same stem, .json suffix) records alpha, k, tau,
    iterations, residual, objective, formulation tag, convergence flag
    and the support indices.
    """
    csv_path = str(csv_path)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "value"])
        for i, v in enumerate(rec.x):
            writer.writerow([i, format(v, ".17g")])
    meta = {
        "formulation": rec.diagnostics.get("formulation"),
        "alpha": rec.diagnostics.get("alpha"),
        "k": rec.diagnostics.get("k"),
        "tau": rec.diagnostics.get("tau"),
        "iterations": rec.iterations,
        "residual": rec.residual_norm,
        "objective": rec.objective,
        "converged": rec.converged,
        "support": [int(i) for i in rec.support],
    }
    sidecar = csv_path[: -len(".csv")] + ".json" if csv_path.endswith(".csv") else csv_path + ".json"
    with open(sidecar, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
