"""Unit sphere S^{n-1} and the oblique manifold OB(n, r) of unit-norm columns.

Both share the columnwise kernels below; the oblique manifold is the r-fold
product of spheres with the product metric, so every operation acts on each
column independently and distances combine in the l2 sense.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import DimensionError, IllPosedLogError
from .base import Manifold, as_rng

# Inner products below this value are treated as antipodal.
ANTIPODAL_TOL = 1e-9


def _col_angles(P: np.ndarray, Q: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Columnwise angles between unit columns, with cosines and sine parts."""
    c = np.sum(P * Q, axis=0)
    V = Q - P * c
    s = np.linalg.norm(V, axis=0)
    return np.arctan2(s, c), c, V


def _exp_cols(P: np.ndarray, X: np.ndarray) -> np.ndarray:
    t = np.linalg.norm(X, axis=0)
    # sin(t)/t with its limit 1 at t = 0
    sinc = np.sinc(t / np.pi)
    Y = P * np.cos(t) + X * sinc
    return Y / np.linalg.norm(Y, axis=0)


def _log_cols(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    theta, c, V = _col_angles(P, Q)
    if np.any(c < -1.0 + ANTIPODAL_TOL):
        raise IllPosedLogError("logarithm requested at (near) antipodal points")
    s = np.linalg.norm(V, axis=0)
    scale = np.ones_like(theta)
    nz = s > 0
    scale[nz] = theta[nz] / s[nz]
    return V * scale


def _transport_cols(P: np.ndarray, Q: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Parallel transport along the minimizing great circle, columnwise."""
    L = _log_cols(P, Q)
    theta = np.linalg.norm(L, axis=0)
    out = np.array(X, dtype=float, copy=True)
    nz = theta > 0
    if np.any(nz):
        u = L[:, nz] / theta[nz]
        a = np.sum(u * X[:, nz], axis=0)
        out[:, nz] = X[:, nz] + u * ((np.cos(theta[nz]) - 1.0) * a) - P[:, nz] * (np.sin(theta[nz]) * a)
    return out


def _project_cols(P: np.ndarray, Z: np.ndarray) -> np.ndarray:
    return Z - P * np.sum(P * Z, axis=0)


class Oblique(Manifold):
    """OB(n, r): n-by-r matrices whose columns have unit Euclidean norm."""

    has_exact_exp_log = True
    injectivity_radius = math.pi

    def __init__(self, n: int, r: int):
        if n < 2 or r < 1:
            raise ValueError("Oblique(n, r) needs n >= 2 and r >= 1")
        self.n, self.r = int(n), int(r)
        # a single factor has constant curvature 1; mixed 2-planes are flat
        self.kappa_min = 1.0 if self.r == 1 else 0.0
        self.kappa_max = 1.0

    @property
    def dim(self) -> int:
        return (self.n - 1) * self.r

    @property
    def point_shape(self):
        return (self.n, self.r)

    def _cols(self, A):
        return np.asarray(A, dtype=float)

    def _uncols(self, A):
        return A

    def check_point(self, p, tol: float = 1e-12) -> bool:
        if np.shape(p) != self.point_shape:
            return False
        return bool(np.all(np.abs(np.linalg.norm(self._cols(p), axis=0) - 1.0) <= tol))

    def exp(self, p, X):
        self._check_point(p)
        self._check_tangent(p, X)
        return self._uncols(_exp_cols(self._cols(p), self._cols(X)))

    def log(self, p, q):
        self._check_point(p)
        self._check_point(q)
        return self._uncols(_log_cols(self._cols(p), self._cols(q)))

    def column_distances(self, p, q) -> np.ndarray:
        self._check_point(p)
        self._check_point(q)
        theta, _, _ = _col_angles(self._cols(p), self._cols(q))
        return theta

    def dist(self, p, q) -> float:
        return float(np.linalg.norm(self.column_distances(p, q)))

    def parallel_transport(self, p, q, X):
        self._check_point(p)
        self._check_point(q)
        self._check_tangent(p, X)
        return self._uncols(_transport_cols(self._cols(p), self._cols(q), self._cols(X)))

    def project_tangent(self, p, Z):
        self._check_point(p)
        if np.shape(Z) != self.point_shape:
            raise DimensionError(f"expected ambient array of shape {self.point_shape}, got {np.shape(Z)}")
        return self._uncols(_project_cols(self._cols(p), self._cols(Z)))

    def random_point(self, seed=None):
        """Uniform sample: normalized standard Gaussian columns."""
        G = as_rng(seed).standard_normal((self.n, self.r))
        return self._uncols(G / np.linalg.norm(G, axis=0))


class Sphere(Oblique):
    """S^{n-1} in R^n with points stored as 1-D unit vectors.

    The curvature bounds are (1, 1); for n = 2 the circle has no 2-planes and
    the bounds are kept only to preserve the injectivity constraint.
    """

    def __init__(self, n: int):
        super().__init__(n, 1)
        self.kappa_min = 1.0
        self.kappa_max = 1.0

    @property
    def point_shape(self):
        return (self.n,)

    def _cols(self, A):
        return np.asarray(A, dtype=float).reshape(self.n, 1)

    def _uncols(self, A):
        return A.reshape(self.n)

    def random_point(self, seed=None):
        g = as_rng(seed).standard_normal(self.n)
        return g / np.linalg.norm(g)
