"""Grassmann manifold Gr(n, r) of r-dimensional subspaces of R^n.

A subspace is represented by any n-by-r matrix with orthonormal columns
spanning it, and tangent vectors by their horizontal lift (``p.T @ X = 0``).
Representatives are never canonicalized: all operations are equivariant
under ``p -> p @ O`` for orthogonal ``O``, with tangents moving as ``X @ O``.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import DimensionError, IllPosedLogError
from .base import Manifold, as_rng

# Cosine of the largest principal angle below which log is refused.
LOG_COS_TOL = 1e-10


def principal_angles(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Principal angles between span(p) and span(q), ascending.

    ``q`` may be a stack of shape (..., n, r). Sines and cosines are both
    computed so small and near-right angles are resolved accurately.
    """
    C = np.swapaxes(q, -1, -2) @ p
    cos = np.linalg.svd(C, compute_uv=False)
    B = q - p @ np.swapaxes(C, -1, -2)
    sin = np.linalg.svd(B, compute_uv=False)[..., ::-1]
    return np.arctan2(sin, cos)


def _log_stack(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Logarithm of (a stack of) subspaces ``q`` at ``p``."""
    # Procrustes-align the representative so q*^T p is symmetric positive definite
    Wa, cos, Wbt = np.linalg.svd(np.swapaxes(q, -1, -2) @ p)
    if np.any(cos[..., -1] < LOG_COS_TOL):
        raise IllPosedLogError("subspaces have a principal angle of pi/2; log is undefined")
    qa = q @ (Wa @ Wbt)
    B = qa - p @ (p.T @ qa)
    U, s, Rt = np.linalg.svd(B, full_matrices=False)
    # cosines paired with the right singular vectors of the normal part
    c = np.linalg.norm((p.T @ qa) @ np.swapaxes(Rt, -1, -2), axis=-2)
    theta = np.arctan2(s, c)
    return (U * theta[..., None, :]) @ Rt


class Grassmann(Manifold):
    """Gr(n, r) with the metric ``<X, Y> = trace(X^T Y)`` on horizontal lifts.

    Args:
        n: Ambient dimension.
        r: Subspace dimension, ``1 <= r < n``.
        kappa_max: Upper curvature bound. The sectional curvature of this
            metric lies in [0, 2]; the upper value is configurable.
    """

    has_exact_exp_log = True
    injectivity_radius = math.pi / 2

    def __init__(self, n: int, r: int, kappa_max: float = 2.0):
        if not 1 <= r < n:
            raise ValueError("Grassmann(n, r) needs 1 <= r < n")
        self.n, self.r = int(n), int(r)
        self.kappa_min = 0.0
        self.kappa_max = float(kappa_max)

    @property
    def dim(self) -> int:
        return self.r * (self.n - self.r)

    @property
    def point_shape(self):
        return (self.n, self.r)

    def check_point(self, p, tol: float = 1e-10) -> bool:
        if np.shape(p) != self.point_shape:
            return False
        return bool(np.linalg.norm(p.T @ p - np.eye(self.r)) <= tol)

    def exp(self, p, X):
        self._check_point(p)
        self._check_tangent(p, X)
        U, s, Vt = np.linalg.svd(X, full_matrices=False)
        return (p @ Vt.T) * np.cos(s) @ Vt + (U * np.sin(s)) @ Vt

    def log(self, p, q):
        self._check_point(p)
        self._check_point(q)
        return _log_stack(p, q)

    def log_many(self, p, qs: np.ndarray) -> np.ndarray:
        """Logarithms of a stack ``qs`` of shape (N, n, r) at ``p``."""
        self._check_point(p)
        if qs.shape[-2:] != self.point_shape:
            raise DimensionError(f"expected stack of {self.point_shape} points, got {qs.shape}")
        return _log_stack(p, qs)

    def dist(self, p, q) -> float:
        self._check_point(p)
        self._check_point(q)
        return float(np.linalg.norm(principal_angles(p, q)))

    def dist_many(self, p, qs: np.ndarray) -> np.ndarray:
        return np.linalg.norm(principal_angles(p, qs), axis=-1)

    def parallel_transport(self, p, q, X):
        self._check_point(p)
        self._check_point(q)
        self._check_tangent(p, X)
        L = _log_stack(p, q)
        U, s, Vt = np.linalg.svd(L, full_matrices=False)
        # endpoint representative reached by the geodesic, and its rotation to q
        q_geo = (p @ Vt.T) * np.cos(s) @ Vt + (U * np.sin(s)) @ Vt
        UtX = U.T @ X
        moved = -(p @ Vt.T) @ (np.sin(s)[:, None] * UtX) + U @ (np.cos(s)[:, None] * UtX) + (X - U @ UtX)
        return moved @ (q_geo.T @ q)

    def project_tangent(self, p, Z):
        self._check_point(p)
        if np.shape(Z) != self.point_shape:
            raise DimensionError(f"expected ambient array of shape {self.point_shape}, got {np.shape(Z)}")
        return Z - p @ (p.T @ Z)

    def random_point(self, seed=None):
        G = as_rng(seed).standard_normal((self.n, self.r))
        Q, R = np.linalg.qr(G)
        return Q * np.sign(np.diag(R))
