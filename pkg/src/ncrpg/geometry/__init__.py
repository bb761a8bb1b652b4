"""Manifold geometries: Euclidean, sphere, oblique, Grassmann and fixed-rank."""

from .base import Manifold, as_rng
from .euclidean import Euclidean
from .fixed_rank import FixedRank, FixedRankPoint, FixedRankTangent
from .grassmann import Grassmann, principal_angles
from .sphere import Oblique, Sphere

__all__ = [
    "Manifold",
    "as_rng",
    "Euclidean",
    "Sphere",
    "Oblique",
    "Grassmann",
    "principal_angles",
    "FixedRank",
    "FixedRankPoint",
    "FixedRankTangent",
]
