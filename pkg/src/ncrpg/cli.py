"""Command-line runner for the benchmark experiments and the validation suite.

Exit codes: 0 success, 1 configuration error, 2 solver failure, 3 validation failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import problems as pr
from .curvature import Backtracking, ConstantStep
from .errors import InvalidConfigError, NCRPGError
from .prox import SphereProxConfig
from .solver import SolveResult, SplitProblem, solve
from .validation import run_all_checks

logger = logging.getLogger("ncrpg")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VALIDATION = 0, 1, 2, 3
TRACE_HEADER = ["k", "lambda", "f", "grad_map_norm", "elapsed_s"]
SUMMARY_HEADER = ["experiment", "mode", "seed", "iters", "time_s", "f_final", "grad_map_norm_final"]
MATREC_EXTRA = ["support_match", "eps0_mean"]
SEED_ENV = "NCRPG_SEED"


class ConfigError(Exception):
    """Invalid command-line configuration (exit code 1)."""


class SolverFailure(Exception):
    """A solver run aborted (exit code 2)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


@dataclass
class Run:
    """One configured solver run."""

    experiment: str
    mode: str
    seed: int
    problem: SplitProblem
    strategy: Any
    p0: Any
    bounds: Any = None
    delta: float = 0.01
    finish: Callable[[Any], list] | None = None


# -- argument parsing ---------------------------------------------------------


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _add_common(p: argparse.ArgumentParser, initial_guess_flag: str = "--s") -> None:
    p.add_argument("--stepsize", choices=["constant", "backtracking"], default="constant")
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="constant stepsize (default per experiment)")
    p.add_argument(initial_guess_flag, dest="s", type=float, default=None, help="backtracking initial guess")
    p.add_argument("--beta", type=float, default=None, help="backtracking decrease factor")
    p.add_argument("--eta", type=float, default=None, help="backtracking shrink factor")
    p.add_argument("--delta", type=float, default=0.01, help="curvature margin for the stepsize constants")
    p.add_argument("--tol", type=float, default=1e-7, help="gradient mapping tolerance")
    p.add_argument("--max-iters", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=None, help=f"base seed (falls back to ${SEED_ENV}, then 0)")
    p.add_argument("--init-seed", type=int, default=None, help="seed of the random initial point (default: derived)")
    p.add_argument("--repeats", type=_positive_int, default=1)
    p.add_argument("--trace", type=Path, default=None, help="per-iteration CSV (one file per repeat)")
    p.add_argument("--summary", type=Path, default=None, help="summary CSV (default: stdout)")
    p.add_argument("--no-timing", action="store_true", help="write 0 for all times (reproducible output)")
    p.add_argument("--debug", action="store_true", help="enable solver self-checks")


def _add_spca(p):
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--r", type=int, default=5)
    p.add_argument("--m", type=int, default=20)
    p.add_argument("--mu", type=float, default=0.5)
    p.add_argument("--column-scaling", choices=list(pr.COLUMN_SCALINGS), default="unit-norm")
    p.add_argument("--prox-tol", type=float, default=1e-10)
    p.add_argument("--prox-max-iters", type=int, default=10)
    _add_common(p)


def _add_grassmann(p):
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--r", type=int, default=3)
    p.add_argument("--N", type=int, default=1000)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--kappa-max", type=float, default=2.0)
    _add_common(p)


def _add_matrec(p):
    p.add_argument("--M", type=int, default=500)
    p.add_argument("--N", type=int, default=100)
    p.add_argument("--r", type=int, default=2)
    p.add_argument("--s", dest="rows", type=int, default=10, help="number of nonzero rows")
    p.add_argument("--m", type=int, default=None, help="measurements (default 2 r (M + N - r))")
    p.add_argument("--mu", type=float, default=1e-4)
    p.add_argument("--noise-scale", type=float, default=None)
    p.add_argument("--support-rtol", type=float, default=0.0, help="relative row-norm threshold for the support")
    # --s is the row count here
    _add_common(p, initial_guess_flag="--bt-s")


EXPERIMENTS = {"spca": _add_spca, "grassmann-mean": _add_grassmann, "matrec": _add_matrec}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ncrpg", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, add in EXPERIMENTS.items():
        add(sub.add_parser(name, help=f"run the {name} experiment"))
    chk = sub.add_parser("check", help="run the validation suites")
    chk.add_argument("--seed", type=int, default=None)
    fopt = sub.add_parser("fopt", help="high-accuracy reference objective value")
    fsub = fopt.add_subparsers(dest="experiment", required=True, parser_class=_Parser)
    for name, add in EXPERIMENTS.items():
        q = fsub.add_parser(name)
        add(q)
        q.set_defaults(tol=1e-15)
    return parser


def resolve_seed(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get(SEED_ENV)
    if env is None or env == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def _seeds(seed: int, init_seed: int | None):
    data, init = np.random.SeedSequence(seed).spawn(2)
    return data, (init if init_seed is None else init_seed)


# -- experiment setup ---------------------------------------------------------


def _strategy(args, default_const: ConstantStep, default_bt: Backtracking):
    if args.stepsize == "constant":
        return ConstantStep(args.lam) if args.lam is not None else default_const
    return Backtracking(
        args.s if args.s is not None else default_bt.s,
        beta=args.beta if args.beta is not None else default_bt.beta,
        eta=args.eta if args.eta is not None else default_bt.eta,
    )


def setup_spca(args, seed: int) -> Run:
    data_seed, init_seed = _seeds(seed, args.init_seed)
    inst = pr.spca_make(args.n, args.r, args.m, args.mu, data_seed, args.column_scaling)
    cfg = SphereProxConfig(tol=args.prox_tol, max_fixed_point_iters=args.prox_max_iters)
    problem = pr.spca_problem(inst, cfg)
    strategy = _strategy(args, *pr.spca_default_stepsizes(inst))
    return Run("spca", args.stepsize, seed, problem, strategy, pr.spca_initial_point(inst, init_seed), delta=args.delta)


def setup_grassmann(args, seed: int) -> Run:
    data_seed, _ = _seeds(seed, args.init_seed)
    inst = pr.grassmann_make(args.n, args.r, args.N, args.tau, data_seed, kappa_max=args.kappa_max)
    const, bt = pr.grassmann_default_stepsizes(inst, args.delta)
    strategy = _strategy(args, const, bt)
    return Run("grassmann-mean", args.stepsize, seed, pr.grassmann_problem(inst), strategy, inst.p0,
               bounds=pr.grassmann_bounds(inst), delta=args.delta)


def setup_matrec(args, seed: int) -> Run:
    data_seed, _ = _seeds(seed, args.init_seed)
    inst = pr.recovery_make(args.M, args.N, args.r, args.rows, args.m, args.mu, args.noise_scale, data_seed)
    strategy = _strategy(args, *pr.recovery_default_stepsizes())

    def finish(point):
        match, eps0 = pr.support_metrics(inst, point, args.support_rtol)
        return [int(match), _fmt(eps0)]

    return Run("matrec", args.stepsize, seed, pr.recovery_problem(inst), strategy, inst.p0, delta=args.delta, finish=finish)


SETUP = {"spca": setup_spca, "grassmann-mean": setup_grassmann, "matrec": setup_matrec}


# -- output -------------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trace(path: Path, result: SolveResult, timing: bool = True) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for k, lam, f, g, t in result.trace.rows():
            w.writerow([k, _fmt(lam), _fmt(f), _fmt(g), _fmt(t if timing else 0.0)])


def _trace_path(base: Path, index: int, repeats: int) -> Path:
    if repeats == 1:
        return base
    return base.with_name(f"{base.stem}-{index}{base.suffix}")


def summary_row(run: Run, result: SolveResult, timing: bool = True) -> list:
    tr = result.trace
    elapsed = tr.elapsed_s[-1] if tr.elapsed_s else 0.0
    gnorm = tr.grad_map_norm[-1] if tr.grad_map_norm else math.nan
    row = [run.experiment, run.mode, run.seed, result.iterations, _fmt(elapsed if timing else 0.0),
           _fmt(result.f_final), _fmt(gnorm)]
    if run.finish is not None:
        row.extend(run.finish(result.point))
    return row


def execute(args) -> tuple[list[Run], list[SolveResult]]:
    """Run ``args.repeats`` seeded solves of the configured experiment."""
    base = resolve_seed(args.seed)
    runs, results = [], []
    for i in range(args.repeats):
        run = SETUP[args.experiment](args, base + i)
        try:
            res = solve(run.problem, run.strategy, run.p0, tol=args.tol, max_iters=args.max_iters,
                        bounds=run.bounds, delta=run.delta, debug=args.debug)
        except InvalidConfigError:
            raise
        except (NCRPGError, np.linalg.LinAlgError, FloatingPointError) as exc:
            raise SolverFailure(f"seed {run.seed}: {type(exc).__name__}: {exc}") from exc
        if res.trace.termination == "max-iters":
            logger.warning("seed %d stopped at max-iters (grad map norm %.3e)", run.seed, res.trace.grad_map_norm[-1])
        for msg in res.trace.messages:
            logger.info("seed %d: %s", run.seed, msg)
        runs.append(run)
        results.append(res)
    return runs, results


def cmd_run(args, out) -> int:
    runs, results = execute(args)
    timing = not args.no_timing
    if args.trace is not None:
        for i, res in enumerate(results):
            write_trace(_trace_path(args.trace, i, len(results)), res, timing)
    header = SUMMARY_HEADER + (MATREC_EXTRA if args.experiment == "matrec" else [])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for run, res in zip(runs, results):
        w.writerow(summary_row(run, res, timing))
    if args.summary is None:
        out.write(buf.getvalue())
    else:
        args.summary.write_text(buf.getvalue())
    return EXIT_OK


def cmd_fopt(args, out) -> int:
    args.repeats = 1
    _, results = execute(args)
    res = results[0]
    f_best = min(min(res.trace.f, default=res.f_final), res.f_final)
    out.write(f"f_best={_fmt(f_best)}\n")
    return EXIT_OK


def cmd_check(args, out) -> int:
    checks, controls = run_all_checks(resolve_seed(args.seed))
    for rep in checks:
        out.write(rep.line() + "\n")
    for rep in controls:
        status = "PASS" if not rep.passed else "FAIL"
        out.write(f"{status} negative-control {rep.name}: detected={not rep.passed} max_error={rep.max_error:.3e}\n")
    ok = all(r.passed for r in checks) and not any(r.passed for r in controls)
    return EXIT_OK if ok else EXIT_VALIDATION


def main(argv: list[str] | None = None, out=None) -> int:
    out = out if out is not None else sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "check":
            return cmd_check(args, out)
        if args.command == "fopt":
            return cmd_fopt(args, out)
        args.experiment = args.command
        return cmd_run(args, out)
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ConfigError, ValueError, NCRPGError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main_entry() -> None:  # pragma: no cover
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    main_entry()
