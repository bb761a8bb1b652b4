"""Manifold M_r of M-by-N real matrices of rank exactly r (embedded geometry).

Points are compact SVD triples and tangent vectors the factored triples
``(Mc, Up, Vp)`` representing ``U Mc V^T + Up V^T + U Vp^T`` with
``U^T Up = 0`` and ``V^T Vp = 0``. There are no closed-form geodesics, so
only the orthographic retraction and its exact inverse are provided.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError, RetractionSingularityError
from .base import Manifold, as_rng

SINGULAR_VALUE_FLOOR = 1e-14


@dataclass(frozen=True)
class FixedRankPoint:
    """Compact SVD ``U diag(S) V^T`` with ``S`` positive and descending."""

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return (self.U.shape[0], self.V.shape[0])

    @property
    def rank(self) -> int:
        return self.S.shape[0]

    def dense(self) -> np.ndarray:
        return (self.U * self.S) @ self.V.T

    @classmethod
    def from_dense(cls, Y: np.ndarray, r: int) -> "FixedRankPoint":
        """Best rank-``r`` approximation of a dense matrix (truncated SVD)."""
        U, s, Vt = np.linalg.svd(Y, full_matrices=False)
        if s[r - 1] <= SINGULAR_VALUE_FLOOR:
            raise RetractionSingularityError("matrix has rank below r")
        return cls(U[:, :r].copy(), s[:r].copy(), Vt[:r].T.copy())


@dataclass(frozen=True)
class FixedRankTangent:
    """Tangent vector ``U Mc V^T + Up V^T + U Vp^T`` at a base point."""

    Mc: np.ndarray
    Up: np.ndarray
    Vp: np.ndarray

    def __add__(self, other: "FixedRankTangent") -> "FixedRankTangent":
        return FixedRankTangent(self.Mc + other.Mc, self.Up + other.Up, self.Vp + other.Vp)

    def __sub__(self, other: "FixedRankTangent") -> "FixedRankTangent":
        return FixedRankTangent(self.Mc - other.Mc, self.Up - other.Up, self.Vp - other.Vp)

    def __mul__(self, a: float) -> "FixedRankTangent":
        return FixedRankTangent(a * self.Mc, a * self.Up, a * self.Vp)

    __rmul__ = __mul__

    def __truediv__(self, a: float) -> "FixedRankTangent":
        return self * (1.0 / a)

    def __neg__(self) -> "FixedRankTangent":
        return self * -1.0


def _recompress(A: np.ndarray, core: np.ndarray, B: np.ndarray) -> FixedRankPoint:
    """SVD of the product ``A @ core @ B.T`` with thin factors."""
    Qa, Ra = np.linalg.qr(A)
    Qb, Rb = np.linalg.qr(B)
    u, s, vt = np.linalg.svd(Ra @ core @ Rb.T)
    if s[-1] <= SINGULAR_VALUE_FLOOR:
        raise RetractionSingularityError(f"retracted point lost rank (sigma_min = {s[-1]:.3e})")
    return FixedRankPoint(Qa @ u, s, Qb @ vt.T)


class FixedRank(Manifold):
    """M_r inside R^{M x N} with the Frobenius metric.

    Curvature is unbounded, so ``kappa_min = -inf`` and ``kappa_max = +inf``
    unless finite values are supplied for local use.
    """

    has_exact_exp_log = False
    injectivity_radius = 0.0

    def __init__(self, M: int, N: int, r: int, kappa_min: float = -math.inf, kappa_max: float = math.inf):
        if not 1 <= r <= min(M, N):
            raise ValueError("FixedRank(M, N, r) needs 1 <= r <= min(M, N)")
        self.M, self.N, self.r = int(M), int(N), int(r)
        self.kappa_min = float(kappa_min)
        self.kappa_max = float(kappa_max)

    @property
    def dim(self) -> int:
        return (self.M + self.N - self.r) * self.r

    @property
    def point_shape(self):
        return (self.M, self.N)

    def _check_point(self, X) -> None:
        if not isinstance(X, FixedRankPoint):
            raise DimensionError("fixed-rank points must be FixedRankPoint instances")
        if X.U.shape != (self.M, self.r) or X.V.shape != (self.N, self.r) or X.S.shape != (self.r,):
            raise DimensionError(f"point factors do not match M={self.M}, N={self.N}, r={self.r}")

    def _check_tangent(self, X, H) -> None:
        if not isinstance(H, FixedRankTangent):
            raise DimensionError("fixed-rank tangents must be FixedRankTangent instances")
        if H.Mc.shape != (self.r, self.r) or H.Up.shape != (self.M, self.r) or H.Vp.shape != (self.N, self.r):
            raise DimensionError("tangent factors do not match the manifold")

    def check_point(self, X, tol: float = 1e-10) -> bool:
        try:
            self._check_point(X)
        except DimensionError:
            return False
        eye = np.eye(self.r)
        return bool(
            np.linalg.norm(X.U.T @ X.U - eye) <= tol
            and np.linalg.norm(X.V.T @ X.V - eye) <= tol
            and np.all(X.S > 0)
            and np.all(np.diff(X.S) <= 0)
        )

    def inner(self, X, G, H) -> float:
        self._check_tangent(X, G)
        self._check_tangent(X, H)
        return float(np.vdot(G.Mc, H.Mc) + np.vdot(G.Up, H.Up) + np.vdot(G.Vp, H.Vp))

    def zero_vector(self, X):
        return FixedRankTangent(np.zeros((self.r, self.r)), np.zeros((self.M, self.r)), np.zeros((self.N, self.r)))

    def to_ambient(self, X, H):
        return X.U @ H.Mc @ X.V.T + H.Up @ X.V.T + X.U @ H.Vp.T

    def point_to_ambient(self, X):
        return X.dense()

    def project_tangent(self, X, Z):
        self._check_point(X)
        if np.shape(Z) != self.point_shape:
            raise DimensionError(f"expected ambient array of shape {self.point_shape}, got {np.shape(Z)}")
        ZV = Z @ X.V
        Mc = X.U.T @ ZV
        Up = ZV - X.U @ Mc
        Vp = Z.T @ X.U - X.V @ Mc.T
        return FixedRankTangent(Mc, Up, Vp)

    def retract(self, X, H):
        """Orthographic retraction ``(U(S+Mc) + Up)(S+Mc)^{-1}((S+Mc)V^T + Vp^T)``."""
        self._check_point(X)
        self._check_tangent(X, H)
        K = np.diag(X.S) + H.Mc
        if np.linalg.svd(K, compute_uv=False)[-1] <= SINGULAR_VALUE_FLOOR:
            raise RetractionSingularityError("Sigma + M is singular")
        A = X.U @ K + H.Up
        B = X.V @ K.T + H.Vp
        return _recompress(A, np.linalg.inv(K), B)

    retract_orthographic = retract

    def inverse_retract(self, X, Y):
        """Orthographic inverse retraction ``P_X(Y - X)``, computed on factors."""
        self._check_point(X)
        self._check_point(Y)
        UtUy = X.U.T @ Y.U
        VytV = Y.V.T @ X.V
        core = (UtUy * Y.S) @ VytV
        Mc = core - np.diag(X.S)
        # (Y - X) V = Uy Sy Vy^T V - U S
        Up = (Y.U * Y.S) @ VytV - X.U * X.S - X.U @ Mc
        Vp = (Y.V * Y.S) @ UtUy.T - X.V * X.S - X.V @ Mc.T
        return FixedRankTangent(Mc, Up, Vp)

    def random_point(self, seed=None):
        rng = as_rng(seed)
        U, _ = np.linalg.qr(rng.standard_normal((self.M, self.r)))
        V, _ = np.linalg.qr(rng.standard_normal((self.N, self.r)))
        S = np.sort(1.0 + np.abs(rng.standard_normal(self.r)))[::-1]
        return FixedRankPoint(U, S, V)

    def random_tangent(self, X, stddev: float = 1.0, seed=None):
        rng = as_rng(seed)
        Mc = stddev * rng.standard_normal((self.r, self.r))
        Up = stddev * rng.standard_normal((self.M, self.r))
        Vp = stddev * rng.standard_normal((self.N, self.r))
        return FixedRankTangent(Mc, Up - X.U @ (X.U.T @ Up), Vp - X.V @ (X.V.T @ Vp))
