"""Nonconvex Riemannian proximal gradient iteration (exact and retraction variants).

Each step moves from ``p`` along ``-lam * grad g(p)`` (by ``exp`` or by the
retraction) and then applies the prox of ``h`` at that point:

    p_{k+1} = prox_{lam h}(exp_p(-lam grad g(p)))

The gradient mapping ``G_lam(p) = -log_p(p_{k+1}) / lam`` (inverse
retraction in the retraction variant) vanishes exactly at stationary points
and drives the stopping rule.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Literal

from .curvature import (
    Backtracking,
    ConstantStep,
    LevelSetBounds,
    Stepsize,
    StepsizeConstants,
    backtracking_lambda_bounds,
    stepsize_constants,
)
from .errors import IllPosedLogError, InvalidConfigError, NCRPGError, StallError
from .geometry import Manifold

logger = logging.getLogger(__name__)

# rounding resolution of f(p) - f(q) relative to 1 + |f(p)|; the oracle value
# is limited only by rounding in the trial point itself
DEFAULT_RTOL_NAIVE = 1e-14
DEFAULT_RTOL_ORACLE = 1e-15

Mode = Literal["exact", "retraction"]


@dataclass
class SplitProblem:
    """``f = g + h`` on a manifold, with a gradient oracle for ``g`` and a prox for ``h``.

    ``prox_h(point, lam)`` must return a (stationary) minimizer of
    ``h(q) + dist(q, point)^2 / (2 lam)``; in retraction mode the distance
    is the retraction distance ``||inverse_retract(q, point)||``.

    ``decrease(p, q)``, if given, returns ``f(p) - f(q)`` computed without
    cancellation. The backtracking test uses it; near convergence the naive
    difference of two nearly equal objective values is dominated by rounding.
    """

    manifold: Manifold
    g: Callable[[Any], float]
    grad_g: Callable[[Any], Any]
    h: Callable[[Any], float]
    prox_h: Callable[[Any, float], Any]
    mode: Mode = "exact"
    name: str = ""
    decrease: Callable[[Any, Any], float] | None = None

    def __post_init__(self):
        if self.mode not in ("exact", "retraction"):
            raise InvalidConfigError(f"unknown mode {self.mode!r}")
        if self.mode == "exact" and not self.manifold.has_exact_exp_log:
            raise InvalidConfigError(f"{type(self.manifold).__name__} needs mode='retraction'")

    def f(self, p) -> float:
        return self.g(p) + self.h(p)

    def f_decrease(self, p, q, f_p: float, f_q: float) -> float:
        """``f(p) - f(q)``, using the accurate oracle when one is available."""
        if self.decrease is not None:
            return self.decrease(p, q)
        return f_p - f_q


@dataclass
class SolverTrace:
    """Per-iteration record; row ``k`` describes the step taken from ``p_k``."""

    k: list[int] = field(default_factory=list)
    lam: list[float] = field(default_factory=list)
    f: list[float] = field(default_factory=list)
    grad_map_norm: list[float] = field(default_factory=list)
    elapsed_s: list[float] = field(default_factory=list)
    shrinks: list[int] = field(default_factory=list)
    termination: str = ""
    messages: list[str] = field(default_factory=list)
    monotonicity_violations: int = 0
    uncertified_steps: int = 0

    def append(self, k, lam, f, gnorm, elapsed, shrinks=0):
        self.k.append(k)
        self.lam.append(lam)
        self.f.append(f)
        self.grad_map_norm.append(gnorm)
        self.elapsed_s.append(elapsed)
        self.shrinks.append(shrinks)

    def __len__(self) -> int:
        return len(self.k)

    def rows(self):
        return list(zip(self.k, self.lam, self.f, self.grad_map_norm, self.elapsed_s))


@dataclass
class SolveResult:
    point: Any
    trace: SolverTrace
    f_final: float
    iterations: int
    constants: StepsizeConstants | None = None

    @property
    def converged(self) -> bool:
        return self.trace.termination == "tolerance-met"


@dataclass
class Step:
    """Outcome of one proximal gradient step from ``p``."""

    lam: float
    point: Any
    f_point: float
    grad_map_norm: float
    shrinks: int = 0
    certified: bool = True


def gradient_step(problem: SplitProblem, p, lam: float):
    """``exp_p(-lam grad g(p))``, or the retraction in retraction mode."""
    if not lam > 0:
        raise InvalidConfigError("stepsize must be positive")
    X = -lam * problem.grad_g(p)
    if problem.mode == "exact":
        return problem.manifold.exp(p, X)
    return problem.manifold.retract(p, X)


def iteration_map(problem: SplitProblem, p, lam: float):
    """``prox_{lam h}`` of the gradient step at ``p``."""
    return problem.prox_h(gradient_step(problem, p, lam), lam)


def _log(problem: SplitProblem, p, q):
    if problem.mode == "exact":
        return problem.manifold.log(p, q)
    return problem.manifold.inverse_retract(p, q)


def gradient_mapping(problem: SplitProblem, p, lam: float, q=None):
    """``-log_p(T_lam(p)) / lam``; pass ``q = T_lam(p)`` to reuse a computed step."""
    if q is None:
        q = iteration_map(problem, p, lam)
    try:
        L = _log(problem, p, q)
    except IllPosedLogError as exc:
        raise IllPosedLogError(f"gradient mapping undefined at lam = {lam:.6g}; stepsize too large for the curvature") from exc
    return -(1.0 / lam) * L


def _grad_map_norm(problem: SplitProblem, p, lam: float, q) -> float:
    try:
        L = _log(problem, p, q)
    except IllPosedLogError as exc:
        raise IllPosedLogError(f"gradient mapping undefined at lam = {lam:.6g}; stepsize too large for the curvature") from exc
    return problem.manifold.norm(p, L) / lam


def subproblem_objective(problem: SplitProblem, p, lam: float, q, anchor=None) -> float:
    """``h(q) + d(q, anchor)^2 / (2 lam)`` with ``anchor`` the gradient step at ``p``."""
    if anchor is None:
        anchor = gradient_step(problem, p, lam)
    if problem.mode == "exact":
        d = problem.manifold.dist(q, anchor)
    else:
        d = problem.manifold.retraction_distance(q, anchor)
    return problem.h(q) + d * d / (2.0 * lam)


def _take_step(problem: SplitProblem, p, lam: float, check_subproblem: bool) -> tuple[Any, float, float]:
    anchor = gradient_step(problem, p, lam)
    q = problem.prox_h(anchor, lam)
    if check_subproblem:
        H_q = subproblem_objective(problem, p, lam, q, anchor)
        H_p = subproblem_objective(problem, p, lam, p, anchor)
        assert H_q <= H_p + 1e-12 * (1.0 + abs(H_p)), f"prox increased the subproblem objective: {H_q} > {H_p}"
    return q, problem.f(q), _grad_map_norm(problem, p, lam, q)


def backtrack(
    problem: SplitProblem,
    p,
    strategy: Backtracking,
    f_p: float | None = None,
    check_subproblem: bool = False,
    lam_certified: float | None = None,
) -> Step:
    """Shrink ``lam = s, s eta, s eta^2, ...`` until the sufficient decrease test holds.

    Accepts the first ``lam`` with ``f(p) - f(T_lam(p)) >= beta lam ||G_lam(p)||^2``.

    With a positive resolution ``rtol`` a trial whose required and observed decrease
    are both below the resolution ``rtol * (1 + |f(p)|)`` of the objective
    cannot be judged in floating point. Such a trial is accepted (flagged
    ``certified = False``) only if ``lam <= lam_certified``, the last stepsize
    that passed the plain test.

    Raises:
        StallError: after ``strategy.max_shrinks`` rejected trials.
    """
    if f_p is None:
        f_p = problem.f(p)
    lam = strategy.s
    rtol = strategy.rtol
    if rtol is None:
        rtol = DEFAULT_RTOL_NAIVE if problem.decrease is None else DEFAULT_RTOL_ORACLE
    floor = rtol * (1.0 + abs(f_p))
    for i in range(strategy.max_shrinks + 1):
        try:
            q, f_q, gnorm = _take_step(problem, p, lam, check_subproblem)
        except IllPosedLogError:
            # the trial left the injectivity region; a shorter step is required
            q = None
        if q is not None:
            dec = problem.f_decrease(p, q, f_p, f_q)
            need = strategy.beta * lam * gnorm * gnorm
            if dec >= need:
                return Step(lam, q, f_q, gnorm, i)
            if need <= floor and abs(dec) <= floor and lam_certified is not None and lam <= lam_certified:
                return Step(lam, q, f_q, gnorm, i, certified=False)
        lam *= strategy.eta
    raise StallError(f"no sufficient decrease after {strategy.max_shrinks} shrink steps (lam = {lam:.3e})")


def step(
    problem: SplitProblem,
    p,
    strategy: Stepsize,
    f_p: float | None = None,
    check_subproblem: bool = False,
    lam_certified: float | None = None,
) -> Step:
    """One iteration with either stepsize strategy."""
    if isinstance(strategy, Backtracking):
        return backtrack(problem, p, strategy, f_p, check_subproblem, lam_certified)
    q, f_q, gnorm = _take_step(problem, p, strategy.lam, check_subproblem)
    return Step(strategy.lam, q, f_q, gnorm, 0)


def _validate(problem: SplitProblem, strategy: Stepsize, bounds: LevelSetBounds | None, delta: float, trace: SolverTrace):
    m = problem.manifold
    if bounds is None:
        return None
    if not (math.isfinite(m.kappa_min) and math.isfinite(m.kappa_max)):
        msg = "curvature bounds are unbounded; stepsize admissibility not checked"
        logger.warning(msg)
        trace.messages.append(msg)
        return None
    return stepsize_constants(strategy, bounds, m.kappa_min, m.kappa_max, delta)


def solve(
    problem: SplitProblem,
    strategy: Stepsize,
    p0,
    tol: float = 1e-7,
    max_iters: int = 100_000,
    bounds: LevelSetBounds | None = None,
    delta: float = 0.01,
    callback: Callable[[int, Any], None] | None = None,
    debug: bool = False,
) -> SolveResult:
    """Run the proximal gradient iteration from ``p0``.

    Stops when the gradient-mapping norm at the accepted stepsize drops below
    ``tol`` (returning that iterate) or after ``max_iters`` steps.

    Args:
        bounds: Level-set bounds. When given and the curvature is bounded,
            the stepsize is validated and the derived constants are returned.
        delta: Margin parameter of the curvature constants.
        callback: Called as ``callback(k, p_k)`` before each step.
        debug: Assert that every prox step does not increase the subproblem
            objective, and that backtracked stepsizes respect their lower bound.

    Raises:
        NCRPGError: solver failures (stall, ill-posed log, rank drop); the
            partial trace is attached as ``exc.trace``.
    """
    if not tol >= 0 or max_iters < 0:
        raise InvalidConfigError("tol must be nonnegative and max_iters nonnegative")
    trace = SolverTrace()
    constants = _validate(problem, strategy, bounds, delta, trace)
    lam_lower = None
    if debug and constants is not None and isinstance(strategy, Backtracking):
        lam_lower, _ = backtracking_lambda_bounds(strategy, constants.lambda_delta, constants.zeta_delta, constants.L_g)

    p = p0
    f_p = problem.f(p)
    elapsed = 0.0
    k = 0
    lam_certified = None
    try:
        while k < max_iters:
            if callback is not None:
                callback(k, p)
            t0 = time.perf_counter()
            st = step(problem, p, strategy, f_p, check_subproblem=debug, lam_certified=lam_certified)
            elapsed += time.perf_counter() - t0
            if st.certified:
                lam_certified = st.lam
            else:
                trace.uncertified_steps += 1
            if lam_lower is not None:
                assert st.lam >= lam_lower * (1 - 1e-12), f"accepted stepsize {st.lam} below bound {lam_lower}"
            trace.append(k, st.lam, f_p, st.grad_map_norm, elapsed, st.shrinks)
            if st.grad_map_norm < tol:
                trace.termination = "tolerance-met"
                break
            if st.f_point > f_p + 1e-12 * (1.0 + abs(f_p)):
                trace.monotonicity_violations += 1
            p, f_p = st.point, st.f_point
            k += 1
        else:
            trace.termination = "max-iters"
    except NCRPGError as exc:
        trace.termination = "error"
        trace.messages.append(f"{type(exc).__name__}: {exc}")
        exc.trace = trace
        raise
    return SolveResult(p, trace, f_p, k, constants)
