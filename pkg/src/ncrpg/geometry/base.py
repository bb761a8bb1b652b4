"""Abstract manifold interface used by the solver, prox operators and problems."""

from __future__ import annotations

import abc
import math
from typing import Any

import numpy as np

from ..errors import DimensionError, UnsupportedOperationError


def as_rng(seed: Any = None) -> np.random.Generator:
    """Return a numpy Generator from a seed, a SeedSequence or a Generator."""
    return np.random.default_rng(seed)


class Manifold(abc.ABC):
    """Bundle of Riemannian operations on one matrix manifold.

    Points and tangent vectors are plain numpy arrays except on the
    fixed-rank manifold, which uses factored containers. Every method is a
    pure function of its arguments.

    Attributes:
        kappa_min: Lower bound of the sectional curvature (may be ``-inf``).
        kappa_max: Upper bound of the sectional curvature (may be ``+inf``).
        has_exact_exp_log: Whether ``exp``, ``log``, ``dist`` and
            ``parallel_transport`` are available in closed form.
    """

    kappa_min: float = 0.0
    kappa_max: float = 0.0
    has_exact_exp_log: bool = True
    #: Radius of a ball around any point on which ``log`` is well defined.
    injectivity_radius: float = math.inf

    @property
    @abc.abstractmethod
    def dim(self) -> int:
        """Intrinsic dimension."""

    @property
    def curvature_bounds(self) -> tuple[float, float]:
        return (self.kappa_min, self.kappa_max)

    # -- metric ------------------------------------------------------------

    def inner(self, p, X, Y) -> float:
        self._check_tangent(p, X)
        self._check_tangent(p, Y)
        return float(np.vdot(X, Y))

    def norm(self, p, X) -> float:
        return math.sqrt(max(self.inner(p, X, X), 0.0))

    def zero_vector(self, p):
        return np.zeros_like(p)

    # -- exact geodesic operations ----------------------------------------

    def exp(self, p, X):
        raise UnsupportedOperationError(f"{type(self).__name__} has no closed-form exponential map")

    def log(self, p, q):
        raise UnsupportedOperationError(f"{type(self).__name__} has no closed-form logarithmic map")

    def dist(self, p, q) -> float:
        raise UnsupportedOperationError(f"{type(self).__name__} has no closed-form distance")

    def parallel_transport(self, p, q, X):
        raise UnsupportedOperationError(f"{type(self).__name__} has no closed-form parallel transport")

    def geodesic_point(self, p, q, t: float):
        """Point at arclength ``t`` on the unit-speed geodesic from ``p`` towards ``q``."""
        if t < 0:
            raise ValueError("arclength must be nonnegative")
        X = self.log(p, q)
        length = self.norm(p, X)
        if length == 0.0 or t == 0.0:
            return p
        if t == length:
            return q
        return self.exp(p, (t / length) * X)

    # -- retractions --------------------------------------------------------

    def retract(self, p, X):
        """Retraction used by the retraction-based solver; defaults to ``exp``."""
        return self.exp(p, X)

    def inverse_retract(self, p, q):
        """Inverse of :meth:`retract`; defaults to ``log``."""
        return self.log(p, q)

    def retraction_distance(self, p, q) -> float:
        """Norm of the inverse retraction of ``q`` at ``p``; not symmetric in general."""
        return self.norm(p, self.inverse_retract(p, q))

    # -- embedding ----------------------------------------------------------

    @abc.abstractmethod
    def project_tangent(self, p, Z):
        """Orthogonal projection of an ambient array onto the tangent space at ``p``."""

    def to_ambient(self, p, X):
        """Ambient (embedded) representation of a tangent vector."""
        return X

    def point_to_ambient(self, p):
        return p

    # -- sampling -----------------------------------------------------------

    @abc.abstractmethod
    def random_point(self, seed=None):
        ...

    def random_tangent(self, p, stddev: float = 1.0, seed=None):
        rng = as_rng(seed)
        Z = rng.standard_normal(np.shape(self.point_to_ambient(p)))
        return self.project_tangent(p, stddev * Z)

    # -- validation ---------------------------------------------------------

    @property
    @abc.abstractmethod
    def point_shape(self) -> tuple[int, ...]:
        ...

    def _check_point(self, p) -> None:
        if np.shape(p) != self.point_shape:
            raise DimensionError(f"expected point of shape {self.point_shape}, got {np.shape(p)}")

    def _check_tangent(self, p, X) -> None:
        if np.shape(X) != self.point_shape:
            raise DimensionError(f"expected tangent of shape {self.point_shape}, got {np.shape(X)}")

    def check_point(self, p, tol: float = 1e-10) -> bool:
        """Return whether ``p`` satisfies the manifold's representation invariants."""
        return np.shape(p) == self.point_shape

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim={self.dim}, kappa=({self.kappa_min}, {self.kappa_max}))"
