"""Flat space R^shape; mainly a reference geometry for oracle tests."""

from __future__ import annotations

import math

import numpy as np

from .base import Manifold, as_rng


class Euclidean(Manifold):
    """Euclidean space with the standard inner product.

    Exponential map and retraction are ``p + X``, so the nonconvex proximal
    gradient method reduces to classical forward-backward splitting here.
    """

    kappa_min = 0.0
    kappa_max = 0.0
    has_exact_exp_log = True
    injectivity_radius = math.inf

    def __init__(self, *shape: int):
        if not shape:
            raise ValueError("Euclidean needs at least one dimension")
        self.shape = tuple(int(s) for s in shape)

    @property
    def dim(self) -> int:
        return int(np.prod(self.shape))

    @property
    def point_shape(self):
        return self.shape

    def exp(self, p, X):
        self._check_point(p)
        self._check_tangent(p, X)
        return p + X

    def log(self, p, q):
        self._check_point(p)
        self._check_point(q)
        return q - p

    def dist(self, p, q) -> float:
        return float(np.linalg.norm(np.asarray(q) - np.asarray(p)))

    def parallel_transport(self, p, q, X):
        return np.array(X, dtype=float, copy=True)

    def project_tangent(self, p, Z):
        self._check_tangent(p, Z)
        return np.array(Z, dtype=float, copy=True)

    def random_point(self, seed=None):
        return as_rng(seed).standard_normal(self.shape)
