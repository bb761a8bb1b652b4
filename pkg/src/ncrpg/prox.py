"""Proximal maps used by the experiments.

The sphere l1 prox solves ``argmin_y 0.5 dist(x, y)^2 + xi ||y||_1`` on the
unit sphere by a scalar fixed-point iteration on the threshold of a
normalized soft-thresholding. The remaining maps are closed forms.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .errors import DegenerateProxError, DimensionError, DomainError, ProxBoundWarning, RankDropError
from .geometry import Euclidean, FixedRankPoint, Manifold, Sphere
from .geometry.fixed_rank import SINGULAR_VALUE_FLOOR


@dataclass(frozen=True)
class SphereProxConfig:
    """Termination parameters of the sphere l1 fixed-point iteration.

    ``t0 = None`` starts at ``xi``, the upper end of the admissible interval.
    """

    tol: float = 1e-10
    max_fixed_point_iters: int = 10
    t0: float | None = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_fixed_point_iters < 1:
            raise ValueError("max_fixed_point_iters must be at least 1")


@dataclass
class ProxResult:
    point: Any
    iterations_used: int
    converged: bool
    gaps: list[float] | None = None


def soft_threshold(x: np.ndarray, t: float) -> np.ndarray:
    """Elementwise ``sign(x) * max(|x| - t, 0)``."""
    if t < 0:
        raise DomainError("threshold must be nonnegative")
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def sigma_map(x: np.ndarray, y: np.ndarray, xi: float) -> float:
    """``xi * sqrt(1 - <x,y>^2) / arccos(<x,y>)``, equal to ``xi`` at ``y = x``."""
    c = float(np.clip(np.dot(x, y), -1.0, 1.0))
    if c <= -1.0:
        raise DomainError("sigma_map is undefined for antipodal points")
    theta = math.acos(c)
    # sin(theta)/theta, continuous at theta = 0
    return xi * float(np.sinc(theta / math.pi))


def normalized_prox_p(x: np.ndarray, t: float) -> np.ndarray:
    """Soft-threshold ``x`` at ``t`` and renormalize to the unit sphere."""
    z = soft_threshold(x, t)
    nz = np.linalg.norm(z)
    if nz == 0.0:
        raise DegenerateProxError(f"threshold {t:.6g} removes every entry of x")
    return z / nz


def mu_upper_bound(x: np.ndarray) -> float:
    """Largest ``xi`` for which the fixed-point map is a contraction at ``x``."""
    return float(_mu_upper_bound_cols(np.asarray(x, dtype=float).reshape(-1, 1))[0])


def _mu_upper_bound_cols(X: np.ndarray) -> np.ndarray:
    x_inf = np.max(np.abs(X), axis=0)
    r0 = np.sqrt(np.count_nonzero(X, axis=0))
    bound = math.pi / (8.0 * r0) * (np.sqrt(16.0 * r0 * x_inf + math.pi ** 2) - math.pi)
    return np.minimum(bound, x_inf)


def contraction_factor(x: np.ndarray, xi: float) -> float:
    """Lipschitz bound ``4 xi^2 sqrt(||x||_0) / ((||x||_inf - xi) pi^2)`` of the fixed-point map."""
    x_inf = float(np.max(np.abs(x)))
    return 4.0 * xi * xi * math.sqrt(np.count_nonzero(x)) / ((x_inf - xi) * math.pi ** 2)


def _prox_p_rows(X: np.ndarray, t: np.ndarray) -> np.ndarray:
    Z = np.sign(X) * np.maximum(np.abs(X) - t[:, None], 0.0)
    nz = np.linalg.norm(Z, axis=1)
    if np.any(nz == 0.0):
        raise DegenerateProxError("threshold removes every entry of a column")
    return Z / nz[:, None]


def _l1_prox_cols(X: np.ndarray, xi: float, cfg: SphereProxConfig, record_gaps: bool):
    """Run the fixed-point iteration on every column of ``X`` at once.

    Each column stops on its own once its gap falls below ``cfg.tol``, so the
    result equals running the scalar iteration column by column. Columns are
    processed as contiguous rows of ``X.T`` so that every reduction, and hence
    the output, is bitwise independent of column order and memory layout.
    """
    if xi < 0:
        raise DomainError("xi must be nonnegative")
    r = X.shape[1]
    if xi == 0:
        return X.copy(), np.zeros(r, dtype=int), np.ones(r, dtype=bool), [[] for _ in range(r)] if record_gaps else None
    bounds = _mu_upper_bound_cols(X)
    if np.any(xi >= bounds):
        warnings.warn(
            f"xi = {xi:.6g} exceeds the contraction bound {float(bounds.min()):.6g}", ProxBoundWarning, stacklevel=3
        )
    t0 = xi if cfg.t0 is None else float(cfg.t0)
    if not 0 < t0 <= xi:
        raise DomainError("t0 must lie in (0, xi]")
    Xr = np.ascontiguousarray(X.T)
    t = np.full(r, t0)
    iters = np.zeros(r, dtype=int)
    active = np.ones(r, dtype=bool)
    gaps = [[] for _ in range(r)] if record_gaps else None
    for _ in range(cfg.max_fixed_point_iters):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        Xa = Xr[idx]
        Y = _prox_p_rows(Xa, t[idx])
        c = np.clip(np.sum(Xa * Y, axis=1), -1.0, 1.0)
        if np.any(c <= -1.0):
            raise DomainError("sigma_map is undefined for antipodal points")
        t_new = xi * np.sinc(np.arccos(c) / math.pi)
        gap = np.abs(t_new - t[idx])
        t[idx] = t_new
        iters[idx] += 1
        if gaps is not None:
            for j, gj in zip(idx, gap):
                gaps[j].append(float(gj))
        active[idx[gap < cfg.tol]] = False
    return np.ascontiguousarray(_prox_p_rows(Xr, t).T), iters, ~active, gaps


def sphere_l1_prox(x: np.ndarray, xi: float, cfg: SphereProxConfig | None = None, record_gaps: bool = False) -> ProxResult:
    """Minimize ``0.5 dist(x, y)^2 + xi ||y||_1`` over the unit sphere.

    Iterates ``t <- sigma_map(x, normalized_prox_p(x, t), xi)`` from ``t0``
    and returns ``normalized_prox_p(x, t)`` at the final threshold. Values of
    ``xi`` above :func:`mu_upper_bound` issue a :class:`ProxBoundWarning`.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionError("sphere points are 1-D arrays")
    Y, iters, conv, gaps = _l1_prox_cols(x[:, None], xi, cfg or SphereProxConfig(), record_gaps)
    return ProxResult(Y[:, 0], int(iters[0]), bool(conv[0]), gaps[0] if gaps is not None else None)


def oblique_l1_prox(X: np.ndarray, xi: float, cfg: SphereProxConfig | None = None) -> ProxResult:
    """Columnwise :func:`sphere_l1_prox` on OB(n, r)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionError("oblique points are 2-D arrays")
    Y, iters, conv, _ = _l1_prox_cols(X, xi, cfg or SphereProxConfig(), False)
    return ProxResult(Y, int(iters.max()), bool(conv.all()))


def geodesic_distance_prox(manifold: Manifold, p, q_bar, lam: float, tau: float = 1.0):
    """Prox of ``tau * dist(., q_bar)`` with parameter ``lam``.

    Moves from ``p`` towards ``q_bar`` along the geodesic by
    ``min(lam * tau, dist(p, q_bar))``.
    """
    if lam < 0 or tau < 0:
        raise DomainError("lam and tau must be nonnegative")
    if lam == 0 or tau == 0:
        return p
    d = manifold.dist(p, q_bar)
    if lam * tau >= d:
        return q_bar
    return manifold.geodesic_point(p, q_bar, lam * tau)


def row_norms(X: FixedRankPoint) -> np.ndarray:
    """Euclidean norms of the rows of ``U diag(S) V^T``."""
    return np.linalg.norm(X.U * X.S, axis=1)


def rowwise_group_soft_threshold(Z: FixedRankPoint, lam_mu: float) -> FixedRankPoint:
    """Prox of ``lam_mu * ||.||_{1,2}``: shrink each row norm by ``lam_mu``.

    Rows with norm at most ``lam_mu`` are set to zero. The result is
    recompressed into a compact SVD of the same rank.

    Raises:
        RankDropError: if the shrunken matrix has rank below ``r``.
    """
    if lam_mu < 0:
        raise DomainError("lam_mu must be nonnegative")
    if lam_mu == 0:
        return Z
    norms = row_norms(Z)
    scale = np.zeros_like(norms)
    keep = norms > lam_mu
    scale[keep] = (norms[keep] - lam_mu) / norms[keep]
    Q, R = np.linalg.qr((Z.U * scale[:, None]) * Z.S)
    u, s, vt = np.linalg.svd(R)
    if s[-1] <= SINGULAR_VALUE_FLOOR * max(1.0, s[0]):
        raise RankDropError(f"row thresholding reduced the rank (sigma_min = {s[-1]:.3e})")
    U = Q @ u
    # thresholded rows are exactly zero; drop the roundoff the QR leaves there
    U[~keep] = 0.0
    return FixedRankPoint(U, s, Z.V @ vt.T)


def fibonacci_sphere(n_points: int) -> np.ndarray:
    """Quasi-uniform grid of ``n_points`` on S^2, shape (n_points, 3)."""
    i = np.arange(n_points) + 0.5
    z = 1.0 - 2.0 * i / n_points
    rho = np.sqrt(1.0 - z * z)
    phi = math.pi * (3.0 - math.sqrt(5.0)) * i
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def _cap_grid(center: np.ndarray, radius: float, n_points: int) -> np.ndarray:
    """Fibonacci-type grid on the spherical cap of angular ``radius`` around ``center``."""
    i = np.arange(n_points) + 0.5
    cos_r = math.cos(radius)
    z = 1.0 - (1.0 - cos_r) * i / n_points
    rho = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    phi = math.pi * (3.0 - math.sqrt(5.0)) * i
    local = np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
    # rotate e3 onto center (Householder reflection)
    e3 = np.array([0.0, 0.0, 1.0])
    v = e3 - center
    if np.linalg.norm(v) < 1e-15:
        return local
    v = v / np.linalg.norm(v)
    return local - 2.0 * np.outer(local @ v, v)


def brute_force_prox_oracle(
    manifold: Manifold,
    h: Callable[[np.ndarray], np.ndarray],
    p: np.ndarray,
    lam: float,
    n_points: int = 1_000_000,
    refine: bool = True,
    box_half_width: float = 2.0,
) -> np.ndarray:
    """Grid argmin of ``h(q) + dist(p, q)^2 / (2 lam)`` on a low-dimensional manifold.

    Supported: the spheres S^1 and S^2, and Euclidean R^1 and R^2 (on a box
    of half-width ``box_half_width`` around ``p``). ``h`` must be vectorized over a stack of points (one per
    row). With ``refine`` a second grid of the same size is laid around the
    coarse argmin.
    """
    if lam <= 0:
        raise DomainError("lam must be positive")
    p = np.asarray(p, dtype=float)

    def objective(Q, dists):
        return h(Q) + dists ** 2 / (2.0 * lam)

    if isinstance(manifold, Sphere) and manifold.n == 3:
        Q = fibonacci_sphere(n_points)
        best = Q[np.argmin(objective(Q, np.arccos(np.clip(Q @ p, -1, 1))))]
        if refine:
            spacing = math.sqrt(4.0 * math.pi / n_points)
            Q = np.vstack([_cap_grid(best, 4.0 * spacing, n_points), best])
            best = Q[np.argmin(objective(Q, np.arccos(np.clip(Q @ p, -1, 1))))]
        return best / np.linalg.norm(best)
    if isinstance(manifold, Sphere) and manifold.n == 2:
        angles = np.linspace(-math.pi, math.pi, n_points, endpoint=False)
        Q = np.column_stack([np.cos(angles), np.sin(angles)])
        k = np.argmin(objective(Q, np.arccos(np.clip(Q @ p, -1, 1))))
        if refine:
            step = 2.0 * math.pi / n_points
            fine = angles[k] + np.linspace(-2 * step, 2 * step, n_points)
            Q = np.column_stack([np.cos(fine), np.sin(fine)])
            k = np.argmin(objective(Q, np.arccos(np.clip(Q @ p, -1, 1))))
        return Q[k]
    if isinstance(manifold, Euclidean) and manifold.dim <= 2:
        half = box_half_width
        per_axis = int(round(n_points ** (1.0 / manifold.dim)))
        axes = [np.linspace(c - half, c + half, per_axis) for c in p.ravel()]
        Q = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, manifold.dim)
        best = Q[np.argmin(objective(Q, np.linalg.norm(Q - p.ravel(), axis=1)))]
        if refine:
            step = 2.0 * half / (per_axis - 1)
            axes = [np.linspace(c - 2 * step, c + 2 * step, per_axis) for c in best]
            Q = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, manifold.dim)
            best = Q[np.argmin(objective(Q, np.linalg.norm(Q - p.ravel(), axis=1)))]
        return best.reshape(p.shape)
    raise DimensionError("brute-force prox oracle supports only S^1, S^2, R^1 and R^2")
