"""Numerical self-checks: derivative tests, manifold axioms, prox certificates, ISTA equivalence."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .curvature import ConstantStep
from .geometry import Euclidean, FixedRank, Grassmann, Manifold, Oblique, Sphere, as_rng
from .prox import geodesic_distance_prox, soft_threshold, sphere_l1_prox
from .solver import SplitProblem, solve


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one numerical check; ``passed`` iff ``max_error <= tolerance``."""

    name: str
    max_error: float
    tolerance: float
    passed: bool
    samples: int

    @classmethod
    def from_errors(cls, name: str, errors, tolerance: float) -> "CheckReport":
        errors = list(errors)
        worst = max(errors) if errors else 0.0
        if not math.isfinite(worst):
            worst = math.inf
        return cls(name, float(worst), float(tolerance), bool(worst <= tolerance), len(errors))

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: max_error={self.max_error:.3e} tol={self.tolerance:.1e} samples={self.samples}"


def _unit(manifold: Manifold, p, V):
    return V / manifold.norm(p, V)


def finite_difference_gradient_check(
    cost: Callable[[Any], float],
    grad: Callable[[Any], Any],
    manifold: Manifold,
    p,
    directions: int | list = 20,
    step: float = 1e-6,
    mode: str = "exact",
    tolerance: float = 1e-5,
    seed=None,
    name: str = "gradient",
) -> CheckReport:
    """Compare central differences of ``cost`` along curves with ``<grad(p), V>``.

    The curve is ``t -> exp(p, t V)`` in exact mode and the retraction in
    retraction mode, with unit tangent directions ``V``. The error is
    ``|fd - <grad, V>| / ||grad(p)||`` (absolute when the gradient vanishes).
    """
    if not step > 0:
        raise ValueError("step must be positive")
    move = manifold.exp if mode == "exact" else manifold.retract
    rng = as_rng(seed)
    if isinstance(directions, int):
        directions = [manifold.random_tangent(p, 1.0, rng) for _ in range(directions)]
    G = grad(p)
    scale = manifold.norm(p, G)
    scale = scale if scale > 1e-12 else 1.0
    errors = []
    for V in directions:
        V = _unit(manifold, p, V)
        fd = (cost(move(p, step * V)) - cost(move(p, -step * V))) / (2.0 * step)
        errors.append(abs(fd - manifold.inner(p, G, V)) / scale)
    return CheckReport.from_errors(f"fd-{name}", errors, tolerance)


def _tangent_of_length(manifold: Manifold, p, length: float, rng):
    V = manifold.random_tangent(p, 1.0, rng)
    return V * (length / manifold.norm(p, V))


def manifold_axiom_suite(manifold: Manifold, trials: int = 100, seed=None, tolerance: float | None = None) -> list[CheckReport]:
    """Randomized checks of the geometry invariants of ``manifold``.

    Exact geometries: ``log(p, exp(p, X)) = X``, isometry of parallel
    transport and idempotence of the tangent projection. Geometries without
    closed-form exp/log (fixed rank) get the projection check and the
    retraction round trip ``inverse_retract(X, retract(X, H)) = H``.
    Errors are relative to ``max(1, ||X||)``.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if tolerance is None:
        tolerance = 1e-12 if isinstance(manifold, Euclidean) else 1e-8
    rng = as_rng(seed)
    label = type(manifold).__name__.lower()
    reports = []
    pts = [manifold.random_point(rng) for _ in range(trials)]

    proj_errors = []
    for p in pts:
        Z = rng.standard_normal(manifold.point_shape)
        PZ = manifold.project_tangent(p, Z)
        PPZ = manifold.project_tangent(p, manifold.to_ambient(p, PZ))
        proj_errors.append(manifold.norm(p, PPZ - PZ) / max(1.0, manifold.norm(p, PZ)))
    reports.append(CheckReport.from_errors(f"{label}-projection-idempotence", proj_errors, tolerance))

    if manifold.has_exact_exp_log:
        radius = min(manifold.injectivity_radius, 3.0)
        rt_errors, pt_errors = [], []
        for p in pts:
            X = _tangent_of_length(manifold, p, 0.9 * radius * rng.uniform(0.05, 1.0), rng)
            q = manifold.exp(p, X)
            rt_errors.append(manifold.norm(p, manifold.log(p, q) - X) / max(1.0, manifold.norm(p, X)))
            Y = manifold.random_tangent(p, 1.0, rng)
            W = manifold.random_tangent(p, 1.0, rng)
            TY = manifold.parallel_transport(p, q, Y)
            TW = manifold.parallel_transport(p, q, W)
            gap = abs(manifold.inner(q, TY, TW) - manifold.inner(p, Y, W))
            gap = max(gap, abs(manifold.norm(q, TY) - manifold.norm(p, Y)))
            pt_errors.append(gap / max(1.0, manifold.norm(p, Y) * manifold.norm(p, W)))
        reports.append(CheckReport.from_errors(f"{label}-exp-log-round-trip", rt_errors, tolerance))
        reports.append(CheckReport.from_errors(f"{label}-transport-isometry", pt_errors, tolerance))
    else:
        rr_tol = min(tolerance, 1e-10)
        rr_errors = []
        for p in pts:
            H = manifold.random_tangent(p, 0.1, rng)
            H2 = manifold.inverse_retract(p, manifold.retract(p, H))
            rr_errors.append(manifold.norm(p, H2 - H) / max(1.0, manifold.norm(p, H)))
        reports.append(CheckReport.from_errors(f"{label}-retraction-round-trip", rr_errors, rr_tol))
    return reports


def prox_optimality_certificate(
    manifold: Manifold,
    h: Callable[[Any], float],
    prox: Callable[[Any, float], Any],
    x,
    lam: float,
    perturbations: int = 200,
    radius: float = 1e-3,
    slack: float = 1e-8,
    mode: str = "exact",
    seed=None,
    name: str = "prox",
) -> CheckReport:
    """Local optimality test for a prox output ``q = prox(x, lam)``.

    Samples ``y = exp(q, radius V)`` for random unit tangents ``V`` and
    records ``max(0, H(q) - H(y))`` with ``H(y) = h(y) + d(y, x)^2 / (2 lam)``.
    The check passes when no sample improves on ``q`` by more than ``slack``.
    """
    rng = as_rng(seed)
    move = manifold.exp if mode == "exact" else manifold.retract
    dist = manifold.dist if mode == "exact" else manifold.retraction_distance

    def H(y):
        d = dist(y, x)
        return h(y) + d * d / (2.0 * lam)

    q = prox(x, lam)
    H_q = H(q)
    errors = []
    for _ in range(perturbations):
        y = move(q, radius * _unit(manifold, q, manifold.random_tangent(q, 1.0, rng)))
        errors.append(max(0.0, H_q - H(y)))
    return CheckReport.from_errors(f"prox-certificate-{name}", errors, slack)


def ista_reference(A: np.ndarray, b: np.ndarray, mu: float, lam: float, x0: np.ndarray, iters: int) -> np.ndarray:
    """Iterates ``x <- S_{lam mu}(x - lam A^T (A x - b))``, stacked as rows 0..iters."""
    xs = [np.array(x0, dtype=float)]
    x = xs[0]
    for _ in range(iters):
        x = soft_threshold(x - lam * (A.T @ (A @ x - b)), lam * mu)
        xs.append(x)
    return np.stack(xs)


def lasso_problem(A: np.ndarray, b: np.ndarray, mu: float, mode: str = "exact") -> SplitProblem:
    """``0.5 ||A x - b||^2 + mu ||x||_1`` on Euclidean space."""
    return SplitProblem(
        manifold=Euclidean(A.shape[1]),
        g=lambda x: 0.5 * float(np.sum((A @ x - b) ** 2)),
        grad_g=lambda x: A.T @ (A @ x - b),
        h=lambda x: mu * float(np.abs(x).sum()),
        prox_h=lambda y, lam: soft_threshold(y, lam * mu),
        mode=mode,
        name="lasso",
    )


def ista_equivalence_check(
    A: np.ndarray, b: np.ndarray, mu: float, lam: float, x0: np.ndarray, iters: int = 50, tolerance: float = 1e-12
) -> CheckReport:
    """Max elementwise gap between solver iterates and :func:`ista_reference`."""
    if iters < 1:
        raise ValueError("iters must be at least 1")
    problem = lasso_problem(A, b, mu)
    iterates = []
    with np.errstate(over="ignore", invalid="ignore"):
        res = solve(problem, ConstantStep(lam), np.array(x0, dtype=float), tol=0.0, max_iters=iters,
                    callback=lambda k, p: iterates.append(p))
        iterates.append(res.point)
        ref = ista_reference(A, b, mu, lam, x0, iters)
    gaps = np.abs(np.stack(iterates) - ref)
    # identical divergence (inf or nan in the same entries) counts as agreement
    same = (np.isnan(np.stack(iterates)) & np.isnan(ref)) | (np.stack(iterates) == ref)
    gaps = np.where(same, 0.0, gaps)
    return CheckReport.from_errors("ista-equivalence", gaps.max(axis=1), tolerance)


def random_lasso(dim: int = 20, rows: int = 30, seed=None):
    rng = as_rng(seed)
    A = rng.standard_normal((rows, dim))
    b = rng.standard_normal(rows)
    return A, b


# -- suites used by the CLI `check` command -----------------------------------


def _seeds(seed, n):
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return ss.spawn(n)


def gradient_checks(seed=0) -> list[CheckReport]:
    """Finite-difference checks of the three experiment gradients."""
    from . import problems as pr

    s = _seeds(seed, 6)
    spca = pr.spca_make(seed=s[0])
    X = pr.spca_initial_point(spca, s[1])
    gm = pr.grassmann_make(8, 2, N=50, seed=s[2])
    rec = pr.recovery_make(M=40, N=15, r=2, s=5, seed=s[3])
    return [
        finite_difference_gradient_check(lambda Y: pr.spca_cost(spca, Y), lambda Y: pr.spca_grad_g(spca, Y),
                                         Oblique(spca.n, spca.r), X, seed=s[4], name="spca"),
        finite_difference_gradient_check(lambda p: pr.grassmann_cost(gm, p), lambda p: pr.grassmann_grad_g(gm, p),
                                         gm.manifold, gm.p0, seed=s[5], name="grassmann-mean"),
        finite_difference_gradient_check(lambda Y: pr.recovery_cost(rec, Y), lambda Y: pr.recovery_grad_g(rec, Y),
                                         rec.manifold, rec.p0, mode="retraction", seed=s[4], name="matrec"),
    ]


def axiom_checks(seed=0, trials: int = 100) -> list[CheckReport]:
    manifolds = [Euclidean(5), Sphere(10), Oblique(10, 3), Grassmann(8, 3), FixedRank(12, 9, 3)]
    out = []
    for m, s in zip(manifolds, _seeds(seed, len(manifolds))):
        out.extend(manifold_axiom_suite(m, trials, s))
    return out


def prox_checks(seed=0) -> list[CheckReport]:
    s = _seeds(seed, 5)
    rng = as_rng(s[0])
    sph = Sphere(30)
    x = sph.random_point(rng)
    mu = 0.05
    l1 = prox_optimality_certificate(
        sph, lambda y: mu * float(np.abs(y).sum()), lambda y, lam: sphere_l1_prox(y, lam * mu).point,
        x, 1.0, seed=s[1], name="sphere-l1",
    )
    gr = Grassmann(6, 2)
    p, q_bar = gr.random_point(s[2]), gr.random_point(s[3])
    tau = 0.5
    gd = prox_optimality_certificate(
        gr, lambda y: tau * gr.dist(y, q_bar), lambda y, lam: geodesic_distance_prox(gr, y, q_bar, lam, tau),
        p, 0.3, seed=s[4], name="geodesic-distance",
    )
    return [l1, gd]


def ista_checks(seed=0) -> list[CheckReport]:
    A, b = random_lasso(20, 30, seed)
    L = float(np.linalg.norm(A, 2) ** 2)
    return [ista_equivalence_check(A, b, 0.1, 1.0 / L, np.zeros(20), 50)]


def negative_controls(seed=0) -> list[CheckReport]:
    """Checks run against deliberately corrupted oracles; every report must fail."""
    from . import problems as pr

    s = _seeds(seed, 5)
    spca = pr.spca_make(seed=s[0])
    X = pr.spca_initial_point(spca, s[1])
    bad_grad = finite_difference_gradient_check(
        lambda Y: pr.spca_cost(spca, Y), lambda Y: 2.0 * pr.spca_grad_g(spca, Y),
        Oblique(spca.n, spca.r), X, seed=s[2], name="spca-corrupted-gradient",
    )
    sph = Sphere(30)
    rng = as_rng(s[3])
    x = sph.random_point(rng)
    mu = 0.05
    kick = sph.random_tangent(x, 1.0, rng)
    kick = 0.05 * kick / np.linalg.norm(kick)

    def corrupted_prox(y, lam):
        q = sphere_l1_prox(y, lam * mu).point
        return sph.exp(q, sph.project_tangent(q, kick))

    bad_prox = prox_optimality_certificate(
        sph, lambda y: mu * float(np.abs(y).sum()), corrupted_prox, x, 1.0, seed=s[4], name="sphere-l1-corrupted",
    )
    return [bad_grad, bad_prox]


def run_all_checks(seed=0) -> tuple[list[CheckReport], list[CheckReport]]:
    """Return ``(checks, controls)``; the suite is healthy iff every check passes and every control fails."""
    s = _seeds(seed, 5)
    checks = axiom_checks(s[0]) + gradient_checks(s[1]) + prox_checks(s[2]) + ista_checks(s[3])
    return checks, negative_controls(s[4])
