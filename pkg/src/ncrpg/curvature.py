"""Curvature comparison functions and the stepsize constants built from them.

All functions accept extended reals: ``math.inf`` stands for an unbounded
quantity and propagates through the ``min`` expressions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

from .errors import DomainError, InvalidConfigError

_SERIES_CUTOFF = 1e-4


def _x_coth_x(x: float) -> float:
    if abs(x) < _SERIES_CUTOFF:
        return 1.0 + x * x / 3.0
    return x / math.tanh(x)


def _x_cot_x(x: float) -> float:
    if abs(x) < _SERIES_CUTOFF:
        return 1.0 - x * x / 3.0
    return x / math.tan(x)


def pi_kappa(kappa: float) -> float:
    """First positive zero of the generalized sine: ``pi / sqrt(kappa)`` or ``inf``."""
    if kappa <= 0:
        return math.inf
    return math.pi / math.sqrt(kappa)


def zeta1(kappa1: float, s: float) -> float:
    """``sqrt(-k) s coth(sqrt(-k) s)`` for ``k < 0``, else 1."""
    if s < 0:
        raise DomainError("zeta1 needs s >= 0")
    if kappa1 >= 0:
        return 1.0
    if math.isinf(kappa1):
        return math.inf if s > 0 else 1.0
    return _x_coth_x(math.sqrt(-kappa1) * s)


def zeta2(kappa2: float, s: float) -> float:
    """``sqrt(k) s cot(sqrt(k) s)`` for ``k > 0``, else 1.

    Raises:
        DomainError: if ``kappa2 > 0`` and ``s >= pi / sqrt(kappa2)``.
    """
    if s < 0:
        raise DomainError("zeta2 needs s >= 0")
    if kappa2 <= 0:
        return 1.0
    if s >= pi_kappa(kappa2):
        raise DomainError(f"zeta2 undefined for s = {s} >= pi_kappa = {pi_kappa(kappa2)}")
    return _x_cot_x(math.sqrt(kappa2) * s)


def sigma_interval(kappa1: float, kappa2: float, s: float) -> float:
    """``max(zeta1(kappa1, s), |zeta2(kappa2, s)|)``."""
    return max(zeta1(kappa1, s), abs(zeta2(kappa2, s)))


@dataclass(frozen=True)
class LevelSetBounds:
    """Bounds on the initial level set that enter the stepsize constants.

    Attributes:
        h_lower, h_upper: Bounds on the nonsmooth term ``h``.
        grad_g_upper: Bound on the norm of ``grad g``.
        f_opt: Minimum of ``f`` (in practice an estimate).
        diameter: Diameter of the level set.
        L_g: Smoothness constant of ``g``.
    """

    h_lower: float
    h_upper: float
    grad_g_upper: float
    L_g: float
    diameter: float = math.inf
    f_opt: float = -math.inf

    def __post_init__(self):
        if self.h_lower > self.h_upper:
            raise InvalidConfigError("h_lower must not exceed h_upper")
        if self.grad_g_upper < 0:
            raise InvalidConfigError("grad_g_upper must be nonnegative")
        if not self.L_g > 0:
            raise InvalidConfigError("L_g must be positive")
        if self.diameter < 0:
            raise InvalidConfigError("diameter must be nonnegative")


def lambda_delta(delta: float, bounds: LevelSetBounds, kappa_max: float) -> float:
    """Largest stepsize keeping the gradient and prox steps within ``pi_kmax / (2 + delta)``.

    It is the positive root of ``2 l dh + l^2 G^2 = (pi_kmax / (2 (2 + delta)))^2``
    with ``dh = h_upper - h_lower`` and ``G = grad_g_upper``. Returns ``inf``
    when ``kappa_max <= 0`` or ``G = 0``.
    """
    if delta <= 0:
        raise InvalidConfigError("delta must be positive")
    radius = pi_kappa(kappa_max)
    G = bounds.grad_g_upper
    if math.isinf(radius) or G == 0:
        return math.inf
    dh = bounds.h_upper - bounds.h_lower
    c = radius / (2.0 + delta)
    # rationalized root, stable when dh dominates
    return c * c / (2.0 * (math.sqrt(4.0 * dh * dh + c * c * G * G) + 2.0 * dh))


def zeta_delta(delta: float, kappa_max: float) -> float:
    """``zeta2(kappa_max, pi_kappa(kappa_max) / (2 + delta))``; 1 when ``kappa_max <= 0``."""
    if delta <= 0:
        raise InvalidConfigError("delta must be positive")
    if kappa_max <= 0:
        return 1.0
    if math.isinf(kappa_max):
        raise InvalidConfigError("zeta_delta needs a finite curvature bound")
    return _x_cot_x(math.pi / (2.0 + delta))


@dataclass(frozen=True)
class ConstantStep:
    """Constant stepsize ``lam``."""

    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise InvalidConfigError("constant stepsize must be positive")

    @property
    def initial(self) -> float:
        return self.lam


@dataclass(frozen=True)
class Backtracking:
    """Backtracking with initial guess ``s``, decrease factor ``beta`` and shrink ``eta``.

    ``rtol`` is the relative resolution of the objective below which the
    acceptance test is treated as undecidable (see ``solver.backtrack``);
    0 gives the plain test. ``None`` picks 1e-14 for the naive difference
    ``f(p) - f(q)`` and 1e-15 when the problem has a cancellation-free
    ``decrease`` oracle.
    """

    s: float
    beta: float = 0.5
    eta: float = 0.5
    max_shrinks: int = 60
    rtol: float | None = None

    def __post_init__(self):
        if not self.s > 0:
            raise InvalidConfigError("initial guess s must be positive")
        if not 0 < self.eta < 1:
            raise InvalidConfigError("eta must lie in (0, 1)")
        if not self.beta > 0:
            raise InvalidConfigError("beta must be positive")
        if self.max_shrinks < 1:
            raise InvalidConfigError("max_shrinks must be at least 1")
        if self.rtol is not None and not self.rtol >= 0:
            raise InvalidConfigError("rtol must be nonnegative")

    @property
    def initial(self) -> float:
        return self.s


Stepsize = Union[ConstantStep, Backtracking]


def decrease_constant_M(strategy: Stepsize, lambda_d: float, zeta_d: float, L_g: float) -> float:
    """Guaranteed decrease factor ``M`` in ``f(p_k) - f(p_{k+1}) >= M ||G(p_k)||^2``.

    Raises:
        InvalidConfigError: if the stepsize parameters are not admissible.
    """
    if isinstance(strategy, ConstantStep):
        lam = strategy.lam
        bound = min(lambda_d, zeta_d / L_g)
        if not 0 < lam < bound:
            raise InvalidConfigError(f"constant stepsize {lam:.6g} outside (0, {bound:.6g})")
        return (lam * zeta_d - lam * lam * L_g) / 2.0
    if not strategy.beta < zeta_d / 2.0:
        raise InvalidConfigError(f"beta = {strategy.beta:.6g} must be below zeta_delta / 2 = {zeta_d / 2:.6g}")
    return strategy.beta * min(strategy.s, strategy.eta * lambda_d, strategy.eta * (zeta_d - 2.0 * strategy.beta) / L_g)


def backtracking_lambda_bounds(strategy: Backtracking, lambda_d: float, zeta_d: float, L_g: float) -> tuple[float, float]:
    """Return ``(lower, upper)``: every accepted stepsize is at least ``lower``,
    and every trial below ``upper`` is accepted."""
    upper = min(lambda_d, (zeta_d - 2.0 * strategy.beta) / L_g)
    lower = min(strategy.s, strategy.eta * lambda_d, strategy.eta * (zeta_d - 2.0 * strategy.beta) / L_g)
    return lower, upper


def sigma_kmax(kappa_min: float, kappa_max: float, delta: float, t: float, bounds: LevelSetBounds) -> float:
    """Constant bounding a subgradient of ``f`` at each iterate by the gradient mapping.

    ``t`` is the constant stepsize or the backtracking initial guess.
    """
    if not t > 0:
        raise DomainError("t must be positive")
    if kappa_max > 0:
        s = 2.0 * pi_kappa(kappa_max) / (2.0 + delta)
    else:
        s = t * bounds.grad_g_upper + bounds.diameter
    return sigma_interval(kappa_min, kappa_max, s)


def complexity_iterations(epsilon: float, L_g: float, sigma: float, M: float, f0: float, f_opt: float, t: float) -> int:
    """Iterations after which an ``epsilon``-small subgradient is guaranteed."""
    if not epsilon > 0 or not M > 0:
        raise DomainError("epsilon and M must be positive")
    if f0 < f_opt:
        raise DomainError("f0 must not be below f_opt")
    k = (L_g + sigma) ** 2 * (f0 - f_opt) * t * t / (epsilon * epsilon * M) - 1.0
    return max(0, math.ceil(k))


@dataclass(frozen=True)
class StepsizeConstants:
    """Derived constants for one stepsize strategy on one problem."""

    delta: float
    lambda_delta: float
    zeta_delta: float
    M: float
    sigma_kmax: float
    L_g: float

    def __post_init__(self):
        if not 0 < self.zeta_delta <= 1:
            raise InvalidConfigError("zeta_delta must lie in (0, 1]")
        if not self.lambda_delta > 0 or not self.M > 0:
            raise InvalidConfigError("lambda_delta and M must be positive")


def stepsize_constants(
    strategy: Stepsize, bounds: LevelSetBounds, kappa_min: float, kappa_max: float, delta: float = 0.01
) -> StepsizeConstants:
    """Compute all constants for a strategy; raises if it is not admissible."""
    lam_d = lambda_delta(delta, bounds, kappa_max)
    zeta_d = zeta_delta(delta, kappa_max)
    M = decrease_constant_M(strategy, lam_d, zeta_d, bounds.L_g)
    sig = sigma_kmax(kappa_min, kappa_max, delta, strategy.initial, bounds)
    return StepsizeConstants(delta, lam_d, zeta_d, M, sig, bounds.L_g)


def max_constant_step(bounds: LevelSetBounds, kappa_max: float, delta: float = 0.01, safety: float = 0.99) -> float:
    """A constant stepsize ``safety * min(lambda_delta, zeta_delta / L_g)``."""
    if not 0 < safety < 1:
        raise InvalidConfigError("safety must lie in (0, 1)")
    return safety * min(lambda_delta(delta, bounds, kappa_max), zeta_delta(delta, kappa_max) / bounds.L_g)
