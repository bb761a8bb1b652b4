"""Benchmark problems: sparse PCA, Grassmann regularized mean, row-sparse low-rank recovery."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curvature import Backtracking, ConstantStep, LevelSetBounds, max_constant_step, pi_kappa, zeta_delta
from .errors import DimensionError, DomainError, InvalidConfigError
from .geometry import FixedRank, FixedRankPoint, Grassmann, Oblique, as_rng
from .prox import SphereProxConfig, geodesic_distance_prox, oblique_l1_prox, row_norms, rowwise_group_soft_threshold
from .solver import SplitProblem

# ---------------------------------------------------------------------------
# Sparse PCA on OB(n, r)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SparsePcaInstance:
    A: np.ndarray
    D: np.ndarray  # leading r singular values of A, descending
    mu: float
    AtA: np.ndarray = field(repr=False)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def r(self) -> int:
        return self.D.shape[0]

    @property
    def frobenius_sq(self) -> float:
        return float(np.sum(self.A * self.A))


COLUMN_SCALINGS = ("unit-norm", "std")


def spca_make(
    n: int = 100, r: int = 5, m: int = 20, mu: float = 0.5, seed=None, column_scaling: str = "unit-norm"
) -> SparsePcaInstance:
    """Gaussian data matrix with centered, rescaled columns.

    Args:
        column_scaling: ``"unit-norm"`` divides each centered column by its
            Euclidean norm, so ``||A||_F^2 = n``; ``"std"`` divides by the
            sample standard deviation, so ``||A||_F^2 = (m - 1) n``. The two
            differ by the constant ``sqrt(m - 1)``. The default stepsize
            ``1 / (2 ||A||_F^2)`` is only stable under ``"unit-norm"``.
    """
    if min(m, n, r) < 1 or r > min(m, n):
        raise InvalidConfigError("need 1 <= r <= min(m, n)")
    if mu < 0:
        raise InvalidConfigError("mu must be nonnegative")
    if column_scaling not in COLUMN_SCALINGS:
        raise InvalidConfigError(f"column_scaling must be one of {COLUMN_SCALINGS}")
    if m < 2:
        raise InvalidConfigError("centering needs m >= 2")
    A = as_rng(seed).standard_normal((m, n))
    A = A - A.mean(axis=0)
    if column_scaling == "std":
        A = A / A.std(axis=0, ddof=1)
    else:
        A = A / np.linalg.norm(A, axis=0)
    D = np.linalg.svd(A, compute_uv=False)[:r]
    return SparsePcaInstance(A, D, float(mu), A.T @ A)


def _check_oblique(inst: SparsePcaInstance, X) -> None:
    if np.shape(X) != (inst.n, inst.r):
        raise DimensionError(f"expected a point of OB({inst.n}, {inst.r}), got shape {np.shape(X)}")
    if np.max(np.abs(np.linalg.norm(X, axis=0) - 1.0)) > 1e-10:
        raise DomainError("columns of an oblique point must have unit norm")


def spca_cost(inst: SparsePcaInstance, X) -> float:
    """Smooth part ``0.5 ||X^T A^T A X - D^2||_F^2``."""
    _check_oblique(inst, X)
    R = X.T @ inst.AtA @ X - np.diag(inst.D ** 2)
    return 0.5 * float(np.sum(R * R))


def spca_euclidean_grad(inst: SparsePcaInstance, X) -> np.ndarray:
    """Ambient gradient ``2 A^T A X (X^T A^T A X - D^2)``."""
    BX = inst.AtA @ X
    return 2.0 * BX @ (X.T @ BX - np.diag(inst.D ** 2))


def spca_grad_g(inst: SparsePcaInstance, X) -> np.ndarray:
    _check_oblique(inst, X)
    E = spca_euclidean_grad(inst, X)
    return E - X * np.sum(X * E, axis=0)


def spca_h(inst: SparsePcaInstance, X) -> float:
    return inst.mu * float(np.abs(X).sum())


def spca_decrease(inst: SparsePcaInstance, X, Y) -> float:
    """``f(X) - f(Y)`` evaluated through ``X - Y`` to avoid cancellation."""
    B = inst.AtA
    D2 = np.diag(inst.D ** 2)
    delta = X - Y
    R_x = X.T @ B @ X - D2
    R_y = Y.T @ B @ Y - D2
    dR = delta.T @ B @ X + Y.T @ B @ delta
    dg = 0.5 * float(np.sum(dR * (R_x + R_y)))
    dh = inst.mu * float(np.sum(np.abs(X) - np.abs(Y)))
    return dg + dh


def spca_problem(inst: SparsePcaInstance, cfg: SphereProxConfig | None = None) -> SplitProblem:
    """Split problem whose prox solves the oblique l1 prox with ``xi = lam * mu``."""
    return SplitProblem(
        manifold=Oblique(inst.n, inst.r),
        g=lambda X: spca_cost(inst, X),
        grad_g=lambda X: spca_grad_g(inst, X),
        h=lambda X: spca_h(inst, X),
        prox_h=lambda Y, lam: oblique_l1_prox(Y, lam * inst.mu, cfg).point,
        mode="exact",
        name="spca",
        decrease=lambda X, Y: spca_decrease(inst, X, Y),
    )


def spca_initial_point(inst: SparsePcaInstance, seed=None) -> np.ndarray:
    return Oblique(inst.n, inst.r).random_point(seed)


def spca_default_stepsizes(inst: SparsePcaInstance) -> tuple[ConstantStep, Backtracking]:
    """``lam = 1 / (2 ||A||_F^2)`` and backtracking with ``s = 5 / ||A||_F^2``, ``beta = eta = 0.5``."""
    fro = inst.frobenius_sq
    return ConstantStep(1.0 / (2.0 * fro)), Backtracking(5.0 / fro, beta=0.5, eta=0.5)


# ---------------------------------------------------------------------------
# Regularized Riemannian mean on Gr(n, r)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GrassmannMeanInstance:
    manifold: Grassmann
    data: np.ndarray  # stack (N, n, r)
    q_bar: np.ndarray
    p0: np.ndarray
    anchor: np.ndarray
    tau: float
    radius: float  # largest tangent length used to generate the points
    L_g: float = 1.0

    @property
    def N(self) -> int:
        return self.data.shape[0]


def grassmann_make(
    n: int, r: int, N: int = 1000, tau: float = 0.5, seed=None, kappa_max: float = 2.0, shrink: float = 0.99
) -> GrassmannMeanInstance:
    """Data scattered around a uniform anchor by normal tangents of length below ``pi_kmax / 2``.

    ``N + 2`` tangents are drawn with standard deviation 1; any tangent of
    length at least ``shrink * pi_kmax / 2`` is rescaled to that length. The
    last two images are the reference point and the initial point.
    """
    if N < 1:
        raise InvalidConfigError("N must be at least 1")
    if not 0 < shrink < 1:
        raise InvalidConfigError("shrink must lie in (0, 1)")
    M = Grassmann(n, r, kappa_max=kappa_max)
    rng = as_rng(seed)
    anchor = M.random_point(rng)
    limit = shrink * pi_kappa(kappa_max) / 2.0
    limit = min(limit, shrink * M.injectivity_radius)
    points = []
    longest = 0.0
    for _ in range(N + 2):
        X = M.random_tangent(anchor, 1.0, rng)
        length = M.norm(anchor, X)
        if length >= limit:
            X = X * (limit / length)
            length = limit
        longest = max(longest, length)
        points.append(M.exp(anchor, X))
    data = np.stack(points[:N])
    return GrassmannMeanInstance(M, data, points[N], points[N + 1], anchor, float(tau), longest)


def grassmann_cost(inst: GrassmannMeanInstance, p) -> float:
    """``(1 / 2N) sum_j dist(p, q_j)^2``."""
    d = inst.manifold.dist_many(p, inst.data)
    return 0.5 * float(np.mean(d * d))


def grassmann_grad_g(inst: GrassmannMeanInstance, p) -> np.ndarray:
    """``-(1 / N) sum_j log_p(q_j)``."""
    return -np.mean(inst.manifold.log_many(p, inst.data), axis=0)


def grassmann_h(inst: GrassmannMeanInstance, p) -> float:
    return inst.tau * inst.manifold.dist(p, inst.q_bar)


def grassmann_problem(inst: GrassmannMeanInstance) -> SplitProblem:
    M = inst.manifold
    return SplitProblem(
        manifold=M,
        g=lambda p: grassmann_cost(inst, p),
        grad_g=lambda p: grassmann_grad_g(inst, p),
        h=lambda p: grassmann_h(inst, p),
        prox_h=lambda p, lam: geodesic_distance_prox(M, p, inst.q_bar, lam, inst.tau),
        mode="exact",
        name="grassmann-mean",
    )


def grassmann_bounds(inst: GrassmannMeanInstance) -> LevelSetBounds:
    """Analytic bounds on the ball of radius ``inst.radius`` around the anchor.

    With ``D = 2 * radius``: ``0 <= h <= tau D``, ``||grad g|| <= D`` and
    ``L_g = zeta1(kappa_min = 0, D) = 1``.
    """
    D = 2.0 * inst.radius
    return LevelSetBounds(h_lower=0.0, h_upper=inst.tau * D, grad_g_upper=D, L_g=inst.L_g, diameter=D)


def grassmann_default_stepsizes(inst: GrassmannMeanInstance, delta: float = 0.01) -> tuple[ConstantStep, Backtracking]:
    """Constant step just inside ``min(lambda_delta, zeta_delta / L_g)``; backtracking
    with ``s = 1``, ``beta = zeta_delta / 4``, ``eta = 0.5``."""
    kmax = inst.manifold.kappa_max
    lam = max_constant_step(grassmann_bounds(inst), kmax, delta)
    return ConstantStep(lam), Backtracking(1.0, beta=zeta_delta(delta, kmax) / 4.0, eta=0.5)


# ---------------------------------------------------------------------------
# Row-sparse low-rank recovery on M_r
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RecoveryInstance:
    A_op: np.ndarray = field(repr=False)  # m x (M N), acting on row-major vec(X)
    y: np.ndarray
    M: int
    N: int
    r: int
    s: int
    mu: float
    X_true: FixedRankPoint
    support: np.ndarray  # indices of the nonzero rows of X_true
    p0: FixedRankPoint

    @property
    def m(self) -> int:
        return self.A_op.shape[0]

    @property
    def manifold(self) -> FixedRank:
        return FixedRank(self.M, self.N, self.r)


def default_measurements(M: int, N: int, r: int, s: int) -> int:
    """``2 r (M + N - r)``: twice the dimension of the rank-r manifold.

    With fewer measurements than that dimension the stepsize 0.25 is
    unstable for ``g = ||A vec(X) - y||^2``: the restricted Hessian norm
    ``2 (1 + sqrt(dim / m))^2`` exceeds ``2 / 0.25``.
    """
    return 2 * r * (M + N - r)


def recovery_make(
    M: int = 500,
    N: int = 100,
    r: int = 2,
    s: int = 10,
    m: int | None = None,
    mu: float = 1e-4,
    noise_scale: float | None = None,
    seed=None,
) -> RecoveryInstance:
    """Gaussian measurements of a random s-row-sparse rank-r matrix, plus a perturbed start.

    ``A_op`` has entries of standard deviation ``1 / sqrt(m)``; the initial
    point is the rank-r truncation of ``X_true + noise`` with noise entries
    of standard deviation ``noise_scale`` (default ``1 / sqrt(m)``).
    """
    if not (1 <= s <= M and 1 <= r <= min(M, N, s)):
        raise InvalidConfigError("need 1 <= s <= M and 1 <= r <= min(M, N, s)")
    if m is None:
        m = default_measurements(M, N, r, s)
    if m < 1:
        raise InvalidConfigError("m must be positive")
    if noise_scale is None:
        noise_scale = 1.0 / math.sqrt(m)
    rng = as_rng(seed)
    support = np.sort(rng.choice(M, size=s, replace=False))
    P = np.zeros((M, r))
    P[support] = rng.standard_normal((s, r))
    Q = rng.standard_normal((r, N))
    X_dense = P @ Q
    X_true = FixedRankPoint.from_dense(X_dense, r)
    # the SVD leaves roundoff in the zero rows; X_true must have exactly s nonzero rows
    off_support = np.setdiff1d(np.arange(M), support)
    X_true.U[off_support] = 0.0
    A_op = rng.standard_normal((m, M * N))
    A_op /= math.sqrt(m)
    y = A_op @ X_dense.ravel()
    p0 = FixedRankPoint.from_dense(X_dense + noise_scale * rng.standard_normal((M, N)), r)
    return RecoveryInstance(A_op, y, M, N, r, s, float(mu), X_true, support, p0)


def recovery_residual(inst: RecoveryInstance, X: FixedRankPoint) -> np.ndarray:
    if X.shape != (inst.M, inst.N):
        raise DimensionError(f"expected an {inst.M}x{inst.N} point, got {X.shape}")
    return inst.A_op @ X.dense().ravel() - inst.y


class _ResidualCache:
    """Remembers the residual of the most recent point (one matvec per solver step saved)."""

    def __init__(self, inst: RecoveryInstance):
        self.inst = inst
        self._key = None
        self._res = None

    def __call__(self, X: FixedRankPoint) -> np.ndarray:
        if X is not self._key:
            self._res = recovery_residual(self.inst, X)
            self._key = X
        return self._res


def recovery_cost(inst: RecoveryInstance, X: FixedRankPoint) -> float:
    """``||A vec(X) - y||^2``."""
    res = recovery_residual(inst, X)
    return float(res @ res)


def recovery_grad_g(inst: RecoveryInstance, X: FixedRankPoint, residual: np.ndarray | None = None):
    if residual is None:
        residual = recovery_residual(inst, X)
    E = (2.0 * (inst.A_op.T @ residual)).reshape(inst.M, inst.N)
    return inst.manifold.project_tangent(X, E)


def recovery_h(inst: RecoveryInstance, X: FixedRankPoint) -> float:
    return inst.mu * float(row_norms(X).sum())


def recovery_problem(inst: RecoveryInstance) -> SplitProblem:
    """Retraction-mode problem; the prox is row-wise group soft-thresholding at ``lam * mu``.

    The oracles share a one-point residual cache and are therefore not
    safe to call from several threads; build one problem per thread.
    """
    residual = _ResidualCache(inst)
    return SplitProblem(
        manifold=inst.manifold,
        g=lambda X: float(residual(X) @ residual(X)),
        grad_g=lambda X: recovery_grad_g(inst, X, residual(X)),
        h=lambda X: recovery_h(inst, X),
        prox_h=lambda Z, lam: rowwise_group_soft_threshold(Z, lam * inst.mu),
        mode="retraction",
        name="matrec",
    )


def recovery_default_stepsizes() -> tuple[ConstantStep, Backtracking]:
    """``lam = 0.25`` and backtracking from ``s = 0.5`` with ``beta = eta = 0.5``."""
    return ConstantStep(0.25), Backtracking(0.5, beta=0.5, eta=0.5)


def recovered_support(X: FixedRankPoint, rel_tol: float = 0.0) -> np.ndarray:
    """Indices of rows whose norm exceeds ``rel_tol`` times the largest row norm."""
    norms = row_norms(X)
    return np.flatnonzero(norms > rel_tol * norms.max())


def support_metrics(inst: RecoveryInstance, X: FixedRankPoint, rel_tol: float = 0.0) -> tuple[bool, float]:
    """Whether the recovered row support matches, and the mean norm of the true-zero rows."""
    norms = row_norms(X)
    zero_rows = np.setdiff1d(np.arange(inst.M), inst.support)
    match = np.array_equal(recovered_support(X, rel_tol), inst.support)
    eps0 = float(norms[zero_rows].mean()) if zero_rows.size else 0.0
    return bool(match), eps0
