"""Dense singular-value machinery.

Singular systems of dense forward matrices, truncated forward operators,
the truncated pseudoinverse, and the orthogonal projection onto the span
of the first k right singular vectors (the orthogonal complement of the
fictitious null space).

All types are immutable after construction and all operations are pure,
so everything here is safe to use concurrently.

Matrix file format (shared with :mod:`ficnull.models`): plain text, first
line ``rows cols``, then ``rows`` lines of ``cols`` whitespace-separated
decimal floats.  Values are printed with 17 significant digits so a
save/load round trip is bit exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SingularSystem",
    "TruncatedOperator",
    "compute_singular_system",
    "apply_truncated",
    "apply_truncated_pinv",
    "projection_apply",
    "projection_matrix",
    "truncated_matrix",
]


def as_matrix(a) -> np.ndarray:
    """Validate and convert input to a 2-D float64 array.

    Raises ValueError on non-2-D input or non-finite entries.
    """
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={arr.ndim}")
    if arr.size == 0:
        raise ValueError("matrix must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix contains non-finite entries")
    return arr


def _as_vector(x, dim: int, name: str = "x") -> np.ndarray:
    vec = np.asarray(x, dtype=float)
    if vec.ndim != 1 or vec.shape[0] != dim:
        raise ValueError(f"{name} must be a vector of length {dim}, got shape {vec.shape}")
    return vec


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class SingularSystem:
    """Ordered singular triplets (sigma_i, u_i, v_i) of a dense matrix.

    ``left`` holds the u_i as columns (rows x p), ``right`` the v_i
    (cols x p), ``sigma`` is nonincreasing, and ``rank`` counts the
    singular values above the drop tolerance
    ``eps * sigma_1 * max(rows, cols)``.
    """

    sigma: np.ndarray
    left: np.ndarray
    right: np.ndarray
    rank: int

    @property
    def rows(self) -> int:
        return self.left.shape[0]

    @property
    def cols(self) -> int:
        return self.right.shape[0]

    def drop_tolerance(self) -> float:
        return float(np.finfo(float).eps * self.sigma[0] * max(self.rows, self.cols))


@dataclass(frozen=True)
class TruncatedOperator:
    """The forward operator restricted to its first k singular components."""

    system: SingularSystem
    k: int

    def __post_init__(self) -> None:
        if not 1 <= self.k <= self.system.rank:
            raise ValueError(
                f"truncation level k={self.k} outside [1, rank={self.system.rank}]"
            )

    @property
    def uk(self) -> np.ndarray:
        return self.system.left[:, : self.k]

    @property
    def vk(self) -> np.ndarray:
        return self.system.right[:, : self.k]

    @property
    def sk(self) -> np.ndarray:
        return self.system.sigma[: self.k]

    @property
    def sigma_next(self) -> float:
        """sigma_{k+1}, or 0.0 when k exhausts the numerical rank."""
        sig = self.system.sigma
        return float(sig[self.k]) if self.k < len(sig) else 0.0


def compute_singular_system(a) -> SingularSystem:
    """Compute the full singular system of a dense matrix.

    Sign convention: the first entry of each v_i whose magnitude exceeds
    1e-12 is made positive (u_i is flipped along with v_i so the triplet
    stays consistent).  Numerical rank is the number of singular values
    at or above ``eps * sigma_1 * max(rows, cols)``.
    """
    arr = as_matrix(a)
    if not np.any(arr):
        raise ValueError("matrix is identically zero; no singular system")
    u, s, vt = np.linalg.svd(arr, full_matrices=False)
    v = vt.T
    for i in range(v.shape[1]):
        col = v[:, i]
        nz = np.nonzero(np.abs(col) > 1e-12)[0]
        lead = nz[0] if nz.size else int(np.argmax(np.abs(col)))
        if col[lead] < 0:
            v[:, i] = -col
            u[:, i] = -u[:, i]
    tol = np.finfo(float).eps * s[0] * max(arr.shape)
    rank = int(np.count_nonzero(s >= tol))
    return SingularSystem(sigma=_freeze(s), left=_freeze(u), right=_freeze(v), rank=rank)


def apply_truncated(op: TruncatedOperator, x) -> np.ndarray:
    """Apply the truncated forward map: sum over i<=k of sigma_i (x, v_i) u_i."""
    vec = _as_vector(x, op.system.cols)
    return op.uk @ (op.sk * (op.vk.T @ vec))


def apply_truncated_pinv(op: TruncatedOperator, y) -> np.ndarray:
    """Apply the truncated pseudoinverse: sum over i<=k of (y, u_i) v_i / sigma_i."""
    vec = _as_vector(y, op.system.rows, "y")
    sk = op.sk
    if sk[-1] < op.system.drop_tolerance():
        raise ZeroDivisionError(
            f"sigma_k={sk[-1]:.3e} below drop tolerance; truncated inverse undefined"
        )
    return op.vk @ ((op.uk.T @ vec) / sk)


def projection_apply(op: TruncatedOperator, x) -> np.ndarray:
    """Project onto span{v_1..v_k}, the orthogonal complement of the fictitious null space."""
    vec = _as_vector(x, op.system.cols)
    return op.vk @ (op.vk.T @ vec)


def projection_matrix(op: TruncatedOperator) -> np.ndarray:
    """Dense projector V_k V_k^T (cols x cols)."""
    return op.vk @ op.vk.T


def truncated_matrix(op: TruncatedOperator) -> np.ndarray:
    """Dense truncated forward matrix U_k diag(sigma_1..k) V_k^T (rows x cols)."""
    return (op.uk * op.sk) @ op.vk.T
