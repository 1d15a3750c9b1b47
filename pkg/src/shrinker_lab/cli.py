"""Command-line front end: verification sweeps, constructions, and experiments
with deterministic JSON reports and CSV data files.

Exit codes: 0 pass, 2 verification failure, 3 construction failure,
64 usage error, 65 parameter error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import geometry, quadratics, reports, shooting, tau, transforms
from .constructor import (
    ConstructionError,
    TrivialSolutionError,
    build_counterexample,
    build_mss_counterexample,
)
from .fields import CallableField
from .tau import TauParams

EXIT_PASS = 0
EXIT_VERIFY_FAIL = 2
EXIT_CONSTRUCT_FAIL = 3
EXIT_USAGE = 64
EXIT_PARAMETER = 65

BRANCH_DEFAULTS = {
    "MA": lambda: TauParams.monge_ampere(),
    "LOG": lambda: TauParams.log_branch(math.pi / 6),
    "HARM": lambda: TauParams.harmonic(),
    "ATAN": lambda: TauParams.atan_branch(math.pi / 3),
    "SLAG": lambda: TauParams.special_lagrangian(),
    "NEG": lambda: TauParams.neg_branch(a=-2.0),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


class UsageError(ValueError):
    pass


def _resolve_tp(args, fallback=None):
    """TauParams from --branch / --tau / --a; None means 'all branches'."""
    branch = getattr(args, "branch", None)
    tau_arg = getattr(args, "tau", None)
    a_arg = getattr(args, "a", None)
    try:
        if tau_arg is not None:
            return TauParams.from_tau(tau_arg)
        if a_arg is not None:
            return TauParams.from_cot(a_arg)
        if branch is not None:
            return BRANCH_DEFAULTS[branch]()
        if fallback is not None:
            return BRANCH_DEFAULTS[fallback]()
        return None
    except (ValueError, KeyError) as exc:
        raise UsageError(str(exc)) from exc


def _out_path(args, name):
    out = getattr(args, "out", None) or "."
    os.makedirs(out, exist_ok=True)
    return os.path.join(out, name)


def _emit(args, command, config, results, passed):
    text = reports.json_report(command, config, results, passed)
    path = _out_path(args, f"{command}.json")
    reports.write_json(path, text)
    sys.stdout.write(text)
    return path


def cmd_verify_quadratic(args):
    tp_single = _resolve_tp(args)
    tps = {tp_single.branch.value: tp_single} if tp_single else {
        name: make() for name, make in BRANCH_DEFAULTS.items()
    }
    rng = np.random.default_rng(args.seed)
    tol = args.tol if args.tol is not None else 1e-10
    per_branch = {}
    worst = 0.0
    for name, tp in sorted(tps.items()):
        # draw all inputs sequentially so reports stay byte-stable no matter
        # how the evaluation map is scheduled
        cases = []
        defect_cases = []
        for trial in range(args.trials):
            n = int(rng.integers(1, args.n + 1))
            A = quadratics.random_admissible_matrix(tp, n, rng)
            pts = rng.uniform(-3.0, 3.0, size=(args.points, n))
            cases.append((A, pts))
            if trial % max(1, args.trials // 5) == 0:
                defect_cases.append((A, rng.uniform(-2.0, 2.0, size=n)))

        def residual_sweep(case, tp=tp):
            A, pts = case
            sol = quadratics.build_quadratic(tp, A)
            return max(abs(tau.shrinker_residual(tp, sol.field, x)) for x in pts)

        def defect_sweep(case, tp=tp):
            A, x = case
            sol = quadratics.build_quadratic(tp, A)
            return geometry.shrinker_defect(tp, sol.field, x, h=1e-3)

        max_resid = max(reports.parallel_map(residual_sweep, cases))
        defects = reports.parallel_map(defect_sweep, defect_cases)
        per_branch[name] = {
            "max_residual": max_resid,
            "defect_max": max(defects),
            "defect_mean": float(np.mean(defects)),
        }
        worst = max(worst, max_resid)
    passed = worst <= tol
    config = {
        "branches": sorted(tps),
        "n": args.n,
        "trials": args.trials,
        "points": args.points,
        "tol": tol,
        "seed": args.seed,
    }
    _emit(args, "verify-quadratic", config, {"per_branch": per_branch, "max_residual": worst}, passed)
    return EXIT_PASS if passed else EXIT_VERIFY_FAIL


def cmd_build_counterexample(args):
    tol = args.tol if args.tol is not None else 1e-10
    if args.mss:
        fld, cert = build_mss_counterexample(
            phi0=args.phi0, s0=args.s0, T=args.span, rel_tol=tol, radius=args.rmax
        )
        rows = []
        step = args.grid_step if args.grid_step is not None else 0.01
        for t in np.arange(-args.span, args.span + step / 2, step):
            s, p = fld._pair(t)
            rows.append([t, s, p, fld.value([t]), float(fld.gradient([t])[0]), float(fld.hessian([t])[0, 0])])
        reports.write_csv(
            _out_path(args, "mss-profile.csv"),
            ["x", "s", "phi", "f", "f_prime", "f_second"],
            rows,
        )
        config = {"mss": True, "phi0": args.phi0, "s0": args.s0, "span": args.span,
                  "tol": tol, "rmax": args.rmax, "seed": args.seed}
        _emit(args, "build-counterexample", config, cert.to_dict(), cert.passed)
        return EXIT_PASS if cert.passed else EXIT_CONSTRUCT_FAIL

    tp = _resolve_tp(args, fallback="NEG")
    if tp.branch is not tau.Branch.NEG:
        print(f"build-counterexample requires the bounded-cone branch (a < -1), got {tp.branch.value}",
              file=sys.stderr)
        return EXIT_PARAMETER
    ufield, prof, cert = build_counterexample(
        tp, a0=args.a0, a1=args.a1, n=args.n, T=args.span,
        rel_tol=tol, radius=args.rmax, seed=args.seed,
    )
    reports.write_csv(
        _out_path(args, "counterexample-trajectory.csv"),
        ["t", "phi", "phi_prime", "w1", "w1_prime", "w1_second"],
        prof.rows(),
    )
    config = {"a": tp.a, "a0": args.a0, "a1": args.a1, "n": args.n, "span": args.span,
              "tol": tol, "rmax": args.rmax, "seed": args.seed}
    _emit(args, "build-counterexample", config, cert.to_dict(), cert.passed)
    return EXIT_PASS if cert.passed else EXIT_CONSTRUCT_FAIL


def cmd_shoot(args):
    tp = _resolve_tp(args, fallback="SLAG")
    if args.u0 is None:
        raise UsageError("--u0 is required for shoot")
    prof = shooting.shoot_radial(
        tp, args.n, args.u0, r_max=args.rmax,
        rel_tol=args.tol if args.tol is not None else 1e-10,
        dps=args.dps,
    )
    reports.write_csv(
        _out_path(args, "radial-profile.csv"),
        ["r", "u", "u_prime", "u_second"],
        prof.rows(),
    )
    config = {"branch": tp.branch.value, "tau": tp.tau, "n": args.n, "u0": args.u0,
              "rmax": args.rmax, "tol": args.tol, "dps": args.dps, "seed": args.seed}
    results = {
        "event": {"kind": prof.event.kind, "r": prof.event.r},
        "samples": int(len(prof.rs)),
        "u_end": float(prof.us[-1]) if len(prof.us) else None,
    }
    # events are data: recording one is a successful experiment
    _emit(args, "shoot", config, results, True)
    return EXIT_PASS


def cmd_flow_check(args):
    tp_single = _resolve_tp(args)
    tps = {tp_single.branch.value: tp_single} if tp_single else {
        name: make() for name, make in BRANCH_DEFAULTS.items()
    }
    rng = np.random.default_rng(args.seed)
    tol = args.tol if args.tol is not None else 1e-10
    worst = 0.0
    per_branch = {}
    for name, tp in sorted(tps.items()):
        cases = []
        for _ in range(args.trials):
            n = int(rng.integers(1, args.n + 1))
            A = quadratics.random_admissible_matrix(tp, n, rng)
            x = rng.uniform(-3.0, 3.0, size=n)
            t = -float(rng.uniform(0.1, 10.0))
            cases.append((A, x, t))

        def extension_defect(case, tp=tp):
            A, x, t = case
            sol = quadratics.build_quadratic(tp, A)
            return abs(transforms.self_similar_extension(tp, sol.field, x, t).defect)

        m = max(reports.parallel_map(extension_defect, cases))
        per_branch[name] = {"max_defect": m}
        worst = max(worst, m)
    passed = worst <= tol
    config = {"branches": sorted(tps), "n": args.n, "trials": args.trials, "tol": tol, "seed": args.seed}
    _emit(args, "flow-check", config, {"per_branch": per_branch, "max_defect": worst}, passed)
    return EXIT_PASS if passed else EXIT_VERIFY_FAIL


def cmd_legendre_check(args):
    step = args.grid_step if args.grid_step is not None else 1e-2
    span = args.span
    num = int(round(2 * span / step)) + 1
    results = {}

    quad = CallableField(1, lambda x: 0.5 * x[0] ** 2,
                         grad=lambda x: np.array([x[0]]),
                         hess=lambda x: np.array([[1.0]]))
    res = transforms.legendre_1d(quad, -span, span, num=num)
    results["self_dual_involution"] = res.involution_defect

    lam = 0.8
    tp = TauParams.harmonic()
    sol = quadratics.build_quadratic(tp, np.array([[lam]]))
    w = transforms.convexify_shift(tp, sol.field)
    check = transforms.legendre_dual_residual(w, -span, span, grid_step=step)
    results["dual_equation_sup"] = check.dual_equation_sup
    results["hessian_inverse_defect"] = check.hessian_inverse_defect
    results["phase_drift_sup"] = check.phase_drift_sup

    tol_inv = 1e-9
    passed = (
        results["self_dual_involution"] <= tol_inv
        and results["hessian_inverse_defect"] <= 1e-8
        and results["dual_equation_sup"] <= 1e-5
        and results["phase_drift_sup"] <= 1e-5
    )
    config = {"grid_step": step, "span": span, "seed": args.seed}
    _emit(args, "legendre-check", config, results, passed)
    return EXIT_PASS if passed else EXIT_VERIFY_FAIL


def cmd_defect(args):
    tp_single = _resolve_tp(args)
    tps = {tp_single.branch.value: tp_single} if tp_single else {
        name: make() for name, make in BRANCH_DEFAULTS.items()
    }
    rng = np.random.default_rng(args.seed)
    tol = args.tol if args.tol is not None else 1e-7
    per_branch = {}
    worst = 0.0
    for name, tp in sorted(tps.items()):
        m = 0.0
        for _ in range(args.trials):
            n = int(rng.integers(1, args.n + 1))
            A = quadratics.random_admissible_matrix(tp, n, rng)
            sol = quadratics.build_quadratic(tp, A)
            x = rng.uniform(-2.0, 2.0, size=n)
            m = max(m, geometry.shrinker_defect(tp, sol.field, x, h=1e-3))
        per_branch[name] = {"max_defect": m}
        worst = max(worst, m)
    passed = worst <= tol
    config = {"branches": sorted(tps), "n": args.n, "trials": args.trials, "tol": tol, "seed": args.seed}
    _emit(args, "defect", config, {"per_branch": per_branch, "max_defect": worst}, passed)
    return EXIT_PASS if passed else EXIT_VERIFY_FAIL


def _add_common(p):
    p.add_argument("--branch", choices=sorted(BRANCH_DEFAULTS), help="operator branch")
    p.add_argument("--tau", type=float, help="metric angle in (-pi/4, pi/2]")
    p.add_argument("--a", type=float, help="cot(tau); a < -1 selects the bounded-cone branch")
    p.add_argument("--n", type=int, default=2, help="spatial dimension (default 2)")
    p.add_argument("--tol", type=float, default=None, help="tolerance / integrator tolerance")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (reports are byte-stable per seed)")
    p.add_argument("--out", type=str, default=None, help="output directory (default .)")


def build_parser():
    parser = _Parser(prog="shrinker-lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-quadratic", help="random-matrix verification sweep per branch")
    _add_common(p)
    p.add_argument("--trials", type=int, default=100, help="matrices per branch")
    p.add_argument("--points", type=int, default=20, help="sample points per matrix")
    p.set_defaults(func=cmd_verify_quadratic)

    p = sub.add_parser("build-counterexample", help="construct and certify a non-quadratic entire solution")
    _add_common(p)
    p.add_argument("--a0", type=float, default=0.0, help="phase value at 0")
    p.add_argument("--a1", type=float, default=1.0, help="phase slope at 0 (> 0)")
    p.add_argument("--phi0", type=float, default=1.0, help="spacelike construction: phase at 0")
    p.add_argument("--s0", type=float, default=0.0, help="spacelike construction: slope parameter at 0")
    p.add_argument("--span", type=float, default=20.0, help="integration half-span T")
    p.add_argument("--rmax", type=float, default=10.0, help="certification radius")
    p.add_argument("--grid-step", type=float, default=None, help="CSV sampling step")
    p.add_argument("--mss", action="store_true", help="build the spacelike graph profile instead")
    p.set_defaults(func=cmd_build_counterexample)

    p = sub.add_parser("shoot", help="radial shooting experiment (events are data)")
    _add_common(p)
    p.add_argument("--u0", type=float, default=None, help="potential value at the origin")
    p.add_argument("--rmax", type=float, default=50.0, help="target radius")
    p.add_argument("--dps", type=int, default=None, help="decimal digits for the high-precision path")
    p.set_defaults(func=cmd_shoot)

    p = sub.add_parser("flow-check", help="self-similar time extension defect sweep")
    _add_common(p)
    p.add_argument("--trials", type=int, default=100)
    p.set_defaults(func=cmd_flow_check)

    p = sub.add_parser("legendre-check", help="dual-pipeline residuals on convex tests")
    _add_common(p)
    p.add_argument("--grid-step", type=float, default=None)
    p.add_argument("--span", type=float, default=2.0)
    p.set_defaults(func=cmd_legendre_check)

    p = sub.add_parser("defect", help="vector self-shrinker defect sweep on quadratics")
    _add_common(p)
    p.add_argument("--trials", type=int, default=50)
    p.set_defaults(func=cmd_defect)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"shrinker-lab: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrivialSolutionError as exc:
        print(f"shrinker-lab: trivial solution: {exc}", file=sys.stderr)
        return EXIT_PARAMETER
    except ConstructionError as exc:
        print(f"shrinker-lab: construction failed: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCT_FAIL


if __name__ == "__main__":
    sys.exit(main())
