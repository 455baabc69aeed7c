"""Forward-model builders, noise generation, and matrix file I/O.

Two analytic PDE models:

* Inverse heat conduction on (0, pi) with homogeneous Dirichlet ends.
  Initial data is expanded in characteristic functions of n equal
  subintervals of [pi/n, pi - pi/n]; the solution at the final time is a
  truncated sine series (mode m decays like exp(-m^2 T)) sampled at
  midpoint-rule points inside the observation window (0, pi*obs_fraction).

* Cauchy problem for Laplace's equation on an annulus: Dirichlet data on
  the inner circle, homogeneous Neumann on the outer circle, observed in
  an interior sector.  Solved by separation of variables: for angular mode
  n >= 1 the Neumann condition forces the radial profile
  (r^n + r_out^{2n} r^{-n}) scaled to match the Dirichlet coefficient at
  r_in; mode 0 is the mean of the boundary data.  Forward and inverse
  roles use different arc counts so inversions never see the grid that
  produced their data.

Noise model: eta = beta * Xi with beta = level * (max b - min b) and Xi a
vector of standard normals.  The generator contract, chosen so any
implementation can reproduce eta bit for bit: the i-th uniform (i >= 1)
is splitmix64(seed + i * 0x9E3779B97F4A7C15) >> 11, plus one, times 2^-53
(so it lies in (0, 1]); uniforms are paired by Box-Muller, first the
cosine then the sine branch, pairing u_i with u_{i + npairs}.

Matrix file format: first line ``rows cols``, then rows lines of cols
whitespace-separated floats printed with 17 significant digits (lossless
round trip).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ficnull.linop import as_matrix

__all__ = [
    "HeatModelConfig",
    "AnnulusModelConfig",
    "NoiseSpec",
    "build_heat_matrix",
    "heat_forward_data",
    "heat_forward_data_cosine",
    "heat_basis_edges",
    "heat_basis_midpoints",
    "heat_observation_points",
    "build_annulus_matrix",
    "annulus_forward_data",
    "annulus_arc_midpoints",
    "annulus_observation_points",
    "harmonic_arc_coefficients",
    "harmonic_radial_factor",
    "add_noise",
    "standard_normals",
    "load_matrix",
    "save_matrix",
]


# ---------------------------------------------------------------------------
# inverse heat conduction


@dataclass(frozen=True)
class HeatModelConfig:
    """Discretization of the inverse heat conduction model."""

    n: int = 20
    final_time: float = 0.5
    modes: int = 3000
    obs_fraction: float = 0.25
    n_obs: Optional[int] = None

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError("need at least 2 basis functions")
        if self.modes < self.n:
            raise ValueError("sine-mode count must be at least the basis size")
        if not 0 < self.obs_fraction <= 1:
            raise ValueError("obs_fraction must lie in (0, 1]")
        if self.n_obs is None:
            object.__setattr__(self, "n_obs", self.n)
        if self.n_obs < 1:
            raise ValueError("need at least one observation point")


def heat_basis_edges(cfg: HeatModelConfig) -> np.ndarray:
    """Breakpoints of the n characteristic-function cells on [pi/n, pi - pi/n]."""
    return np.linspace(np.pi / cfg.n, np.pi - np.pi / cfg.n, cfg.n + 1)


def heat_basis_midpoints(cfg: HeatModelConfig) -> np.ndarray:
    edges = heat_basis_edges(cfg)
    return 0.5 * (edges[:-1] + edges[1:])


def heat_observation_points(cfg: HeatModelConfig) -> np.ndarray:
    """Midpoint-rule sample points inside (0, pi * obs_fraction)."""
    width = np.pi * cfg.obs_fraction
    p = np.arange(1, cfg.n_obs + 1)
    return (p - 0.5) * width / cfg.n_obs


def _heat_mode_weights(cfg: HeatModelConfig) -> tuple[np.ndarray, np.ndarray]:
    m = np.arange(1, cfg.modes + 1, dtype=float)
    decay = np.exp(-(m**2) * cfg.final_time)
    return m, decay


def build_heat_matrix(cfg: HeatModelConfig = HeatModelConfig()) -> np.ndarray:
    """Dense heat forward matrix: cell coefficients -> final-time samples.

    Entry (p, q) sums a_m^{(q)} exp(-m^2 T) sin(m z_p) over the first M
    sine modes, where a_m^{(q)} = (2/pi)(cos(m a_q) - cos(m b_q))/m is the
    exact sine coefficient of the q-th cell indicator (a_q, b_q).
    """
    m, decay = _heat_mode_weights(cfg)
    edges = heat_basis_edges(cfg)
    z = heat_observation_points(cfg)
    # (modes x n) exact indicator coefficients
    cos_edges = np.cos(np.outer(m, edges))
    coeffs = (2.0 / np.pi) * (cos_edges[:, :-1] - cos_edges[:, 1:]) / m[:, None]
    return np.sin(np.outer(z, m)) @ (decay[:, None] * coeffs)


def heat_forward_data(
    cfg: HeatModelConfig, center: float, amplitude: float, variance: float
) -> np.ndarray:
    """Final-time samples for a Gaussian-bump initial condition.

    The bump amplitude * exp(-(x - center)^2 / variance) has the closed-form
    sine transform amplitude * (2/pi) * sqrt(pi * variance)
    * exp(-m^2 variance / 4) * sin(m * center), valid as long as the bump
    effectively vanishes at the domain ends.  Because the bump is not in
    the span of the cell indicators, inverting this data commits no
    inverse crime.
    """
    if variance <= 0:
        raise ValueError("variance must be positive")
    m, decay = _heat_mode_weights(cfg)
    z = heat_observation_points(cfg)
    coeffs = (
        amplitude
        * (2.0 / np.pi)
        * math.sqrt(np.pi * variance)
        * np.exp(-(m**2) * variance / 4.0)
        * np.sin(m * center)
    )
    return np.sin(np.outer(z, m)) @ (decay * coeffs)


def heat_forward_data_cosine(
    cfg: HeatModelConfig, center: float, amplitude: float, halfwidth: float
) -> np.ndarray:
    """Final-time samples for a raised-cosine initial bump.

    The bump amplitude * cos^2(pi (x - center) / (2 halfwidth)) on
    |x - center| < halfwidth (zero outside) has exact sine coefficients
    (2/pi) * amplitude * sin(m c) * sin(m w) * a^2 / (m (a^2 - m^2)) with
    a = pi / halfwidth.  Its compact support makes thresholded-support
    comparisons well posed, unlike a Gaussian whose tails never vanish.
    """
    if halfwidth <= 0:
        raise ValueError("halfwidth must be positive")
    m, decay = _heat_mode_weights(cfg)
    z = heat_observation_points(cfg)
    a = np.pi / halfwidth
    denom = m * (a**2 - m**2)
    # integer m never equals a = pi/halfwidth exactly; guard the near-resonant case
    safe = np.where(np.abs(denom) < 1e-12, 1.0, denom)
    coeffs = (2.0 / np.pi) * amplitude * np.sin(m * center) * np.sin(m * halfwidth) * a**2 / safe
    return np.sin(np.outer(z, m)) @ (decay * coeffs)


# ---------------------------------------------------------------------------
# Cauchy problem on the annulus


@dataclass(frozen=True)
class AnnulusModelConfig:
    """Discretization of the annulus Cauchy model."""

    r_inner: float = 0.5
    r_outer: float = 1.0
    n_basis_forward: int = 180
    n_basis_inverse: int = 120
    n_obs: int = 120
    n_fourier: int = 64
    obs_r: tuple[float, float] = (0.7, 0.95)
    obs_theta: tuple[float, float] = (np.pi / 3, 2 * np.pi / 3)

    def __post_init__(self) -> None:
        r1, r2 = self.obs_r
        if not 0 < self.r_inner < r1 <= r2 < self.r_outer <= 1:
            raise ValueError(
                "need 0 < r_inner < obs_r[0] <= obs_r[1] < r_outer <= 1"
            )
        if self.n_basis_forward < 2 or self.n_basis_inverse < 2:
            raise ValueError("need at least 2 boundary arcs")
        if self.n_fourier < 1:
            raise ValueError("need at least one angular mode")

    def n_arcs(self, role: str) -> int:
        if role == "forward":
            return self.n_basis_forward
        if role == "inverse":
            return self.n_basis_inverse
        raise ValueError(f"role must be 'forward' or 'inverse', got {role!r}")


def annulus_arc_midpoints(cfg: AnnulusModelConfig, role: str) -> np.ndarray:
    n = cfg.n_arcs(role)
    return (np.arange(n) + 0.5) * 2 * np.pi / n


def annulus_observation_points(cfg: AnnulusModelConfig) -> np.ndarray:
    """Quasi-uniform (r, theta) sample grid covering the observation sector.

    A midpoint grid with n_r = round(sqrt(n_obs / 2)) radii; the first
    n_obs points in (radius-major, angle-minor) order are used.
    """
    n_r = max(1, int(round(math.sqrt(cfg.n_obs / 2))))
    n_t = math.ceil(cfg.n_obs / n_r)
    r_lo, r_hi = cfg.obs_r
    t_lo, t_hi = cfg.obs_theta
    radii = r_lo + (np.arange(n_r) + 0.5) * (r_hi - r_lo) / n_r
    angles = t_lo + (np.arange(n_t) + 0.5) * (t_hi - t_lo) / n_t
    rr, tt = np.meshgrid(radii, angles, indexing="ij")
    pts = np.column_stack([rr.ravel(), tt.ravel()])
    return pts[: cfg.n_obs]


def harmonic_arc_coefficients(
    theta_a: float, theta_b: float, n_fourier: int
) -> tuple[float, np.ndarray, np.ndarray]:
    """Fourier coefficients (mean, cos, sin) of the arc indicator [theta_a, theta_b]."""
    n = np.arange(1, n_fourier + 1, dtype=float)
    mean = (theta_b - theta_a) / (2 * np.pi)
    cos_c = (np.sin(n * theta_b) - np.sin(n * theta_a)) / (n * np.pi)
    sin_c = (np.cos(n * theta_a) - np.cos(n * theta_b)) / (n * np.pi)
    return mean, cos_c, sin_c


def harmonic_radial_factor(cfg: AnnulusModelConfig, r: np.ndarray, n_fourier: int) -> np.ndarray:
    """Radial profiles R_n(r), shape (len(r), n_fourier).

    R_n solves the mode-n radial equation with R_n(r_in) = 1 and zero
    radial derivative at r_out: R_n(r) proportional to
    r^n + r_out^{2n} r^{-n}.
    """
    n = np.arange(1, n_fourier + 1, dtype=float)
    ro2n = cfg.r_outer ** (2 * n)
    num = r[:, None] ** n + ro2n / r[:, None] ** n
    den = cfg.r_inner**n + ro2n / cfg.r_inner**n
    return num / den


def _annulus_tail_bound(cfg: AnnulusModelConfig, arc_width: float) -> float:
    """Relative bound on the observed-image energy lost to Fourier truncation.

    Modes beyond n_fourier are damped by at least (r_in / r)^n at the
    observation radii, so the literal boundary-data tail (which decays
    only like 1/N for an indicator) overstates the error wildly; this
    bounds the tail as it appears in the sampled solution.
    """
    q = cfg.r_inner / cfg.obs_r[0]
    n1 = cfg.n_fourier + 1
    tail = (4.0 / (np.pi * cfg.n_fourier**2)) * q ** (2 * n1) / (1 - q**2)
    return tail / arc_width


def build_annulus_matrix(
    cfg: AnnulusModelConfig = AnnulusModelConfig(), role: str = "inverse"
) -> np.ndarray:
    """Dense annulus forward matrix: arc coefficients -> interior samples.

    Column j holds the harmonic continuation of the j-th arc indicator,
    sampled at the observation points.  ``role`` picks the arc count
    (forward: n_basis_forward, inverse: n_basis_inverse).
    """
    n_arcs = cfg.n_arcs(role)
    arc_width = 2 * np.pi / n_arcs
    if _annulus_tail_bound(cfg, arc_width) > 1e-6:
        warnings.warn(
            f"Fourier truncation at {cfg.n_fourier} modes leaves relative image "
            f"tail above 1e-6 for {n_arcs} arcs; increase n_fourier",
            stacklevel=2,
        )
    pts = annulus_observation_points(cfg)
    radial = harmonic_radial_factor(cfg, pts[:, 0], cfg.n_fourier)
    n = np.arange(1, cfg.n_fourier + 1, dtype=float)
    cos_t = np.cos(np.outer(pts[:, 1], n)) * radial
    sin_t = np.sin(np.outer(pts[:, 1], n)) * radial
    cols = np.empty((cfg.n_obs, n_arcs))
    for j in range(n_arcs):
        mean, cos_c, sin_c = harmonic_arc_coefficients(
            j * arc_width, (j + 1) * arc_width, cfg.n_fourier
        )
        cols[:, j] = mean + cos_t @ cos_c + sin_t @ sin_c
    return cols


def annulus_forward_data(cfg: AnnulusModelConfig, coefficients) -> np.ndarray:
    """Observed samples for boundary data given by forward-basis coefficients."""
    coeff = np.asarray(coefficients, dtype=float)
    if coeff.shape != (cfg.n_basis_forward,):
        raise ValueError(
            f"expected {cfg.n_basis_forward} forward coefficients, got {coeff.shape}"
        )
    return build_annulus_matrix(cfg, "forward") @ coeff


# ---------------------------------------------------------------------------
# noise


@dataclass(frozen=True)
class NoiseSpec:
    """Noise level (relative to the data range) and generator seed."""

    level: float
    seed: int

    def __post_init__(self) -> None:
        if self.level < 0:
            raise ValueError("noise level must be >= 0")


_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _splitmix64(state: np.ndarray) -> np.ndarray:
    z = state
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def standard_normals(seed: int, count: int) -> np.ndarray:
    """Reproducible standard normals: splitmix64 uniforms through Box-Muller.

    See the module docstring for the exact bit-level contract.
    """
    if count == 0:
        return np.zeros(0)
    npairs = (count + 1) // 2
    idx = np.arange(1, 2 * npairs + 1, dtype=np.uint64)
    bits = _splitmix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + idx * _GOLDEN)
    u = ((bits >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
    u1, u2 = u[:npairs], u[npairs:]
    radius = np.sqrt(-2.0 * np.log(u1))
    out = np.empty(2 * npairs)
    out[0::2] = radius * np.cos(2 * np.pi * u2)
    out[1::2] = radius * np.sin(2 * np.pi * u2)
    return out[:count]


def add_noise(b, spec: NoiseSpec) -> tuple[np.ndarray, np.ndarray, float]:
    """Perturb data by seeded Gaussian noise scaled to the data range.

    Returns (y_delta, eta, delta) with delta = ||eta|| exactly (synthetic
    noise is known).  Raises when the data has no range to scale against.
    """
    data = np.asarray(b, dtype=float)
    if data.ndim != 1:
        raise ValueError("data must be a vector")
    span = float(data.max() - data.min())
    if span <= 0:
        raise ValueError("data is constant; noise level has no scale")
    beta = spec.level * span
    if beta == 0.0:
        eta = np.zeros_like(data)
    else:
        eta = beta * standard_normals(spec.seed, data.shape[0])
    y_delta = data + eta
    return y_delta, eta, float(np.linalg.norm(eta))


# ---------------------------------------------------------------------------
# matrix file format


def save_matrix(a, path) -> None:
    """Write a dense matrix in the plain-text format (17 significant digits)."""
    arr = as_matrix(a)
    with open(path, "w") as fh:
        fh.write(f"{arr.shape[0]} {arr.shape[1]}\n")
        for row in arr:
            fh.write(" ".join(format(v, ".17g") for v in row) + "\n")


def load_matrix(path) -> np.ndarray:
    """Read a dense matrix written by :func:`save_matrix`.

    Malformed headers, short/long rows, and non-numeric tokens raise
    ValueError naming the offending 1-based line.
    """
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty file")
    header = lines[0].split()
    if len(header) != 2:
        raise ValueError(f"{path}: line 1: header must be 'rows cols'")
    try:
        rows, cols = int(header[0]), int(header[1])
    except ValueError:
        raise ValueError(f"{path}: line 1: header must hold two integers") from None
    if rows < 1 or cols < 1:
        raise ValueError(f"{path}: line 1: dimensions must be positive")
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != rows:
        raise ValueError(f"{path}: expected {rows} data rows, found {len(body)}")
    out = np.empty((rows, cols))
    for i, line in enumerate(body):
        tokens = line.split()
        if len(tokens) != cols:
            raise ValueError(
                f"{path}: line {i + 2}: expected {cols} values, found {len(tokens)}"
            )
        try:
            out[i] = [float(t) for t in tokens]
        except ValueError:
            raise ValueError(f"{path}: line {i + 2}: non-numeric token") from None
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{path}: matrix contains non-finite entries")
    return out
