"""Command-line front end.

Subcommands::

    analyze ellipticity --problem P.json
    analyze ls          --problem P.json --phi 1.5708
    solve elliptic      --problem P.json --lambda 1+0j
    solve parabolic     --problem P.json
    verify kernels      [--problem P.json]
    verify rbounds      [--suite NAME] [--out TABLE.csv]
    verify mr           --problem P.json
    fixtures list
    fixtures emit NAME  [--out FILE]

Analyze, solve and verify commands print a JSON report to stdout and
exit 0 when every verdict passed, 2 when any failed, and 1 on usage or
input errors.  All randomness is drawn from ``--seed`` (default 0);
with ``--no-timestamps`` a rerun of the same command line is
byte-identical.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import fixtures
from . import io as lio
from ._threads import resolve_threads
from .ellipticity import ellipticity_angle
from .errors import (ArgumentError, AssumptionError, ConsistencyError,
                     LopashkaError)
from .grids import Grid
from .halfspace import TOL_BC, TOL_PDE, HalfSpaceProblem, solve_halfspace
from .kernels import (p_kernel, lemma_integral_identity_check,
                      decay_stability)
from .lopatinskii import ls_sweep
from .parabolic import (ParabolicProblem, validate_data, solve_parabolic,
                        mr_ratio_harness)
from .rbounds import (OperatorFamily, estimate_rbound, neumann_rbound_check,
                      sector_derivative_check, mikhlin_symbol_check,
                      mikhlin_resolvent_suite, combinatorial_inequality_test)
from .reports import RunReport, write_csv

__all__ = ["main", "run"]


class _UsageError(Exception):
    """Raised in place of argparse's sys.exit(2) so usage errors map to 1."""


class _Parser(argparse.ArgumentParser):

    def error(self, message):
        raise _UsageError("%s: error: %s\n%s"
                          % (self.prog, message, self.format_usage().rstrip()))


def _parse_complex(text):
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise ArgumentError("cannot parse %r as a complex number "
                            "(examples: 1, 2.5, 1+2j, 1e3j)" % text)


def _parse_ints(text, count=None, what="list"):
    try:
        vals = tuple(int(p) for p in text.split(","))
    except ValueError:
        raise ArgumentError("cannot parse %r as comma-separated integers"
                            % text)
    if count is not None and len(vals) != count:
        raise ArgumentError("%s needs %d comma-separated integers, got %r"
                            % (what, count, text))
    return vals


def _config(args, **extra):
    cfg = {"seed": args.seed, "threads": args.threads}
    cfg.update(extra)
    return cfg


def _emit(report, args):
    sys.stdout.write(report.dumps())
    if args.report:
        report.write(args.report)
    return report.exit_code


# ---------------------------------------------------------------------------
# seeded data for the solve commands

def _seeded_boundary(rng, grid, comp, N, window=None):
    """Trig-mode boundary data in the slot's projection range."""
    kscale = 2.0 * np.pi / grid.L
    vecs = comp.projection @ (rng.standard_normal((3, N))
                              + 1j * rng.standard_normal((3, N))).T
    freqs = rng.integers(-2, 3, size=(3, grid.n))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=3)

    def modes(xs):
        out = 0.0
        for i in range(3):
            phase = phases[i]
            for ax, x in enumerate(xs):
                phase = phase + kscale * freqs[i, ax] * x
            out = out + np.exp(1j * np.asarray(phase))[..., None] * vecs[:, i]
        return out

    if window is None:
        return lambda *xs: modes(xs)

    def g(t, *xs):
        return np.asarray(window(t))[..., None] * modes(xs) \
            if np.ndim(t) else window(t) * modes(xs)

    return g


def _seeded_forcing(rng, grid, N, window=None):
    """One trig mode times a normal-direction bump, seeded amplitude."""
    kscale = 2.0 * np.pi / grid.L
    amp = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    freqs = rng.integers(-2, 3, size=grid.n)
    y0, wy = grid.Y / 5.0, grid.Y / 6.0

    def f(*axes):
        if window is None:
            xs, y = axes[:-1], axes[-1]
            tfac = 1.0
        else:
            t, xs, y = axes[0], axes[1:-1], axes[-1]
            tfac = np.asarray(window(t))
        phase = 0.0
        for ax, x in enumerate(xs):
            phase = phase + kscale * freqs[ax] * x
        bump = np.exp(-((y - y0) / wy) ** 2)
        return (tfac * np.exp(1j * np.asarray(phase)) * bump)[..., None] * amp

    return f


# ---------------------------------------------------------------------------
# analyze

def _cmd_ellipticity(args):
    sym, _ = lio.load_problem(args.problem)
    report = RunReport("analyze ellipticity",
                       _config(args, problem=args.problem,
                               samples=args.samples),
                       args.no_timestamps)
    rep = ellipticity_angle(sym, args.samples)
    report.add_verdict("parameter-elliptic", rep.elliptic,
                       angle=rep.angle,
                       a0_condition=rep.a0_condition,
                       samples=rep.samples,
                       refinement=list(rep.refinement),
                       worst_xi=rep.worst_xi)
    return _emit(report, args)


def _cmd_ls(args):
    sym, bspec = lio.load_problem(args.problem)
    report = RunReport("analyze ls",
                       _config(args, problem=args.problem, phi=args.phi,
                               grid=list(args.grid)),
                       args.no_timestamps)
    verdict = ls_sweep(sym, bspec, args.phi, grid=args.grid,
                       threads=args.threads)
    report.add_verdict("lopatinskii-shapiro", verdict.passes,
                       **verdict.to_dict())
    return _emit(report, args)


# ---------------------------------------------------------------------------
# solve

def _cmd_solve_elliptic(args):
    sym, bspec = lio.load_problem(args.problem)
    lam = _parse_complex(args.lam)
    report = RunReport("solve elliptic",
                       _config(args, problem=args.problem, lam=args.lam,
                               nx=args.nx, ny=args.ny, L=args.L, Y=args.Y,
                               data=args.data, out=args.out),
                       args.no_timestamps)
    grid = Grid(n=sym.dim - 1, nx=args.nx, L=args.L, ny=args.ny, Y=args.Y)
    rng = np.random.default_rng(args.seed)
    f = None
    if args.data in ("interior", "both"):
        f = _seeded_forcing(rng, grid, sym.N)
    g = {}
    if args.data in ("boundary", "both"):
        for j, k, comp in bspec.slots():
            g[(j, k)] = _seeded_boundary(rng, grid, comp, sym.N)
    try:
        problem = HalfSpaceProblem(sym, bspec, lam, f=f, g=g, grid=grid)
        sol = solve_halfspace(problem, check=False)
    except (AssumptionError, ConsistencyError) as exc:
        report.add_verdict("solve", False, error=str(exc))
        return _emit(report, args)
    br = sol.boundary_residual()
    pr = sol.pde_residual()
    report.add_verdict("boundary-rows", br <= TOL_BC,
                       residual=br, tolerance=TOL_BC)
    report.add_verdict("interior-residual", pr <= TOL_PDE,
                       residual=pr, tolerance=TOL_PDE)
    report.add_table("norms", ["quantity", "value"], [
        ["sup |u|", float(np.abs(sol.values).max())],
        ["sup |u(.,0)|", float(np.abs(sol.trace()).max())],
    ])
    if args.out:
        lio.write_field(args.out, sol.values)
    return _emit(report, args)


def _cmd_solve_parabolic(args):
    sym, bspec = lio.load_problem(args.problem)
    report = RunReport("solve parabolic",
                       _config(args, problem=args.problem, nt=args.nt,
                               tfinal=args.tfinal, nx=args.nx, ny=args.ny,
                               L=args.L, Y=args.Y, data=args.data,
                               out=args.out),
                       args.no_timestamps)
    grid = Grid(n=sym.dim - 1, nx=args.nx, L=args.L, ny=args.ny, Y=args.Y)
    T = args.tfinal
    rng = np.random.default_rng(args.seed)

    def window(t):
        s = np.asarray(t) / T
        return (s ** 2) * np.exp(-3.0 * s)

    f = None
    if args.data in ("interior", "both"):
        f = _seeded_forcing(rng, grid, sym.N, window=window)
    g = {}
    if args.data in ("boundary", "both"):
        for j, k, comp in bspec.slots():
            g[(j, k)] = _seeded_boundary(rng, grid, comp, sym.N,
                                         window=window)
    try:
        problem = ParabolicProblem(sym, bspec, T=T, f=f, g=g, grid=grid)
        data_report = validate_data(problem)
        sol = solve_parabolic(problem, nt=args.nt)
    except (AssumptionError, ConsistencyError) as exc:
        report.add_verdict("solve", False, error=str(exc))
        return _emit(report, args)
    report.add_verdict("time-stepping", True,
                       steps=args.nt,
                       final_sup=float(np.abs(sol.values[-1]).max()))
    report.add_verdict("data-compatibility", data_report.compatible)
    rows = []
    for key, entry in sorted(data_report.items.items()):
        rows.append([key[0], key[1], str(entry["kappa"]),
                     entry["time_order"], entry["space_order"],
                     entry["sup"], entry["seminorm_time"],
                     entry["seminorm_space"], entry["compat"]])
    report.add_table("data-classes",
                     ["row", "k", "kappa", "time_order", "space_order",
                      "sup", "seminorm_time", "seminorm_space", "compat"],
                     rows)
    if args.out:
        lio.write_field(args.out, sol.values)
    return _emit(report, args)


# ---------------------------------------------------------------------------
# verify

def _cmd_verify_kernels(args):
    if args.problem:
        sym, bspec = lio.load_problem(args.problem)
        source = args.problem
    else:
        sym, bspec = fixtures.load_fixture("heat-dirichlet")
        source = "fixture:heat-dirichlet"
    report = RunReport("verify kernels",
                       _config(args, problem=source),
                       args.no_timestamps)

    rows, worst_cf = [], 0.0
    for k in (1, 2):
        for n in (2, 3, 4):
            for r in (0.5, 1.0, 2.0):
                # nu = k - 1 collapses the algebraic factor, leaving a
                # pure exponential moment with a closed form
                got = p_kernel(k, k - 1, n, r)
                want = math.exp(-r) * math.factorial(n - 2) / r ** (n - 1)
                rel = abs(got - want) / want
                worst_cf = max(worst_cf, rel)
                rows.append([k, k - 1, n, r, got, rel])
    report.add_verdict("closed-form-moments", worst_cf <= 1e-8,
                       worst_relative=worst_cf, tolerance=1e-8)
    report.add_table("moments", ["k", "nu", "n", "r", "value", "rel_error"],
                     rows)

    worst_id = 0.0
    for k in (2, 3, 4):
        for nu in (0, 1, 2):
            for y in (0.5, 1.5):
                worst_id = max(worst_id, lemma_integral_identity_check(
                    k, nu, 2, 0.8, y))
    report.add_verdict("composition-identity", worst_id <= 1e-6,
                       worst_residual=worst_id, tolerance=1e-6,
                       grid="k in {2,3,4} x nu in {0,1,2} x y in {0.5,1.5}")

    ds = decay_stability(sym, bspec)
    report.add_verdict("decay-fit-stability", ds["stable"],
                       c_spread=ds["c_spread"], tolerance=1.2)
    report.add_table("decay-fits",
                     ["lambda_re", "lambda_im", "M", "c", "coverage",
                      "feasible"],
                     [[f.lam.real, f.lam.imag, f.M, f.c, f.coverage,
                       f.feasible] for f in ds["fits"]])
    return _emit(report, args)


def _rb_definition(args, report, rows):
    rng = np.random.default_rng(args.seed)
    mats = [np.diag(rng.uniform(0.2, 1.5, size=4)
                    * np.exp(2j * np.pi * rng.uniform(size=4)))
            for _ in range(8)]
    est = estimate_rbound(OperatorFamily(mats), p=2, trials=300,
                          seed=args.seed)
    rel = abs(est.estimate - est.sup_norm) / est.sup_norm
    report.add_verdict("definition-hilbert-diagonal", rel <= 0.05,
                       estimate=est.estimate, sup_norm=est.sup_norm,
                       relative_gap=rel, trials=est.trials)
    rows.append(["definition", "estimate", est.estimate])
    rows.append(["definition", "sup_norm", est.sup_norm])
    rows.append(["definition", "relative_gap", rel])


def _rb_neumann(args, report, rows):
    rho = 0.5
    mats = []
    for theta in np.linspace(0.0, 2.0 * np.pi, 9)[:-1]:
        c, s = np.cos(theta), np.sin(theta)
        mats.append(rho * np.array([[c, -s], [s, c]]))
    res = neumann_rbound_check(OperatorFamily(mats), seed=args.seed)
    limit = 1.0 / (1.0 - rho) * 1.05
    ok = res["passed"] and res["resolvent"].estimate <= limit
    report.add_verdict("neumann-series-resolvent", ok,
                       rho=res["rho"].estimate,
                       resolvent=res["resolvent"].estimate,
                       bound=res["bound"], limit=limit)
    rows.append(["neumann", "rho", res["rho"].estimate])
    rows.append(["neumann", "resolvent", res["resolvent"].estimate])
    rows.append(["neumann", "bound", res["bound"]])


def _rb_sector(args, report, rows):
    res = sector_derivative_check(lambda lam: 1.0 / (1.0 + lam),
                                  np.pi / 4.0, np.pi / 2.0, seed=args.seed)
    ok = res["passed"] and res["fd_stable"]
    report.add_verdict("sector-derivative", ok,
                       base=res["base"].estimate,
                       derivative=res["derivative"].estimate,
                       bound=res["bound"],
                       fd_max_disagreement=res["fd_max_disagreement"])
    rows.append(["sector", "base", res["base"].estimate])
    rows.append(["sector", "derivative", res["derivative"].estimate])
    rows.append(["sector", "bound", res["bound"]])


def _rb_mikhlin(args, report, rows):
    sc = mikhlin_symbol_check(lambda xi: xi[0] / (1.0 + abs(xi[0])), n=1)
    report.add_verdict("mikhlin-symbol", sc["passed"],
                       sups={str(k): v for k, v in sc["sups"].items()},
                       diverging=[str(a) for a in sc["diverging"]])
    suite = mikhlin_resolvent_suite()
    report.add_verdict("mikhlin-resolvent-uniformity", suite["passed"],
                       spreads={str(k): v for k, v in suite["spreads"].items()},
                       spread_max=2.0)
    for alpha, row in sorted(suite["table"].items()):
        for k, sup in sorted(row.items()):
            rows.append(["mikhlin", "alpha=%d k=%d" % (alpha[0], k), sup])


def _rb_combinatorial(args, report, rows):
    res = combinatorial_inequality_test(samples=10000, seed=args.seed)
    report.add_verdict("combinatorial-inequality", res["passed"],
                       cases=res["cases"], violations=res["violations"],
                       worst_margin=res["worst_margin"])
    rows.append(["combinatorial", "cases", res["cases"]])
    rows.append(["combinatorial", "violations", res["violations"]])
    rows.append(["combinatorial", "worst_margin", res["worst_margin"]])


_RB_SUITES = {
    "definition": _rb_definition,
    "neumann": _rb_neumann,
    "sector": _rb_sector,
    "mikhlin": _rb_mikhlin,
    "combinatorial": _rb_combinatorial,
}


def _cmd_verify_rbounds(args):
    names = list(_RB_SUITES) if args.suite == "all" else [args.suite]
    report = RunReport("verify rbounds",
                       _config(args, suite=args.suite, out=args.out),
                       args.no_timestamps)
    rows = []
    for name in names:
        _RB_SUITES[name](args, report, rows)
    report.add_table("results", ["suite", "metric", "value"], rows)
    if args.out:
        write_csv(args.out, ["suite", "metric", "value"], rows)
    return _emit(report, args)


def _cmd_verify_mr(args):
    sym, bspec = lio.load_problem(args.problem)
    report = RunReport("verify mr",
                       _config(args, problem=args.problem,
                               trials=args.trials,
                               resolutions=list(args.resolutions),
                               tfinal=args.tfinal,
                               incompatible=args.incompatible),
                       args.no_timestamps)
    try:
        res = mr_ratio_harness(sym, bspec, trials=args.trials,
                               resolutions=args.resolutions, T=args.tfinal,
                               seed=args.seed,
                               incompatible=args.incompatible)
    except (AssumptionError, ConsistencyError) as exc:
        report.add_verdict("mr-ratio", False, error=str(exc))
        return _emit(report, args)
    name = "mr-ratio-blowup" if args.incompatible else "mr-ratio-stability"
    report.add_verdict(name, res["passed"], growth=res["growth"],
                       ratios={str(k): v for k, v in res["ratios"].items()},
                       skipped=res["skipped"])
    report.add_table("ratios", ["steps", "ratio"],
                     sorted(res["ratios"].items()))
    return _emit(report, args)


# ---------------------------------------------------------------------------
# fixtures

def _cmd_fixtures_list(args):
    width = max(len(name) for name in fixtures.FIXTURE_NAMES)
    for name in fixtures.FIXTURE_NAMES:
        sys.stdout.write("%-*s  %s\n"
                         % (width, name, fixtures.fixture_description(name)))
    return 0


def _cmd_fixtures_emit(args):
    doc = fixtures.fixture_document(args.name)
    out = args.out or (args.name + ".json")
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    sys.stdout.write("wrote %s\n" % out)
    return 0


# ---------------------------------------------------------------------------
# wiring

def _common_flags():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0,
                        help="seed for all randomness (default 0)")
    common.add_argument("--threads", type=int, default=None,
                        help="worker cap; overrides LOPASHKA_THREADS")
    common.add_argument("--no-timestamps", action="store_true",
                        help="drop wall-clock data for byte-identical "
                             "reruns")
    common.add_argument("--report", metavar="FILE", default=None,
                        help="also write the JSON report to FILE")
    return common


def _add_grid_flags(p, nx=64, ny=64, Y=8.0):
    p.add_argument("--nx", type=int, default=nx,
                   help="tangential points per axis (power of two)")
    p.add_argument("--ny", type=int, default=ny, help="normal ray nodes")
    p.add_argument("--L", type=float, default=2.0 * np.pi,
                   help="tangential period")
    p.add_argument("--Y", type=float, default=Y, help="normal extent")


def _build_parser():
    common = _common_flags()
    parser = _Parser(prog="lopashka",
                     description="Symbol analysis, half-space solvers and "
                                 "estimate verification for mixed-order "
                                 "boundary value problems.")
    sub = parser.add_subparsers(metavar="COMMAND")

    analyze = sub.add_parser("analyze", help="symbol and boundary analysis")
    asub = analyze.add_subparsers(metavar="KIND")
    p = asub.add_parser("ellipticity", parents=[common],
                        help="parameter-ellipticity scan")
    p.add_argument("--problem", required=True, metavar="FILE")
    p.add_argument("--samples", type=int, default=4096,
                   help="sphere sample count")
    p.set_defaults(func=_cmd_ellipticity)
    p = asub.add_parser("ls", parents=[common],
                        help="boundary-row solvability sweep")
    p.add_argument("--problem", required=True, metavar="FILE")
    p.add_argument("--phi", type=float, required=True,
                   help="sector half-angle the sweep must cover")
    p.add_argument("--grid", type=lambda s: _parse_ints(s, 3, "--grid"),
                   default=(64, 32, 16), metavar="ARC,DIRS,RADII",
                   help="sweep resolution (default 64,32,16)")
    p.set_defaults(func=_cmd_ls)

    solve = sub.add_parser("solve", help="run the solvers on seeded data")
    ssub = solve.add_subparsers(metavar="KIND")
    p = ssub.add_parser("elliptic", parents=[common],
                        help="spectral half-space solve")
    p.add_argument("--problem", required=True, metavar="FILE")
    p.add_argument("--lambda", dest="lam", default="1+0j", metavar="Z",
                   help="spectral parameter (complex literal, default 1+0j)")
    _add_grid_flags(p)
    p.add_argument("--data", choices=("boundary", "interior", "both"),
                   default="both", help="which seeded data to generate")
    p.add_argument("--out", metavar="FILE",
                   help="write the solved field as a binary dump")
    p.set_defaults(func=_cmd_solve_elliptic)
    p = ssub.add_parser("parabolic", parents=[common],
                        help="time-stepped solve")
    p.add_argument("--problem", required=True, metavar="FILE")
    p.add_argument("--nt", type=int, default=64, help="time steps")
    p.add_argument("--tfinal", type=float, default=1.0, help="final time")
    _add_grid_flags(p, nx=8, ny=32)
    p.add_argument("--data", choices=("boundary", "interior", "both"),
                   default="both", help="which seeded data to generate")
    p.add_argument("--out", metavar="FILE",
                   help="write the solution history as a binary dump")
    p.set_defaults(func=_cmd_solve_parabolic)

    verify = sub.add_parser("verify", help="estimate verification batteries")
    vsub = verify.add_subparsers(metavar="KIND")
    p = vsub.add_parser("kernels", parents=[common],
                        help="kernel moments, composition identity, decay "
                             "fits")
    p.add_argument("--problem", metavar="FILE",
                   help="problem for the decay fits (default: the scalar "
                        "diffusion fixture)")
    p.set_defaults(func=_cmd_verify_kernels)
    p = vsub.add_parser("rbounds", parents=[common],
                        help="randomized boundedness estimators")
    p.add_argument("--suite", default="all",
                   choices=("all",) + tuple(_RB_SUITES),
                   help="which battery to run (default all)")
    p.add_argument("--out", metavar="FILE",
                   help="write the results table as CSV")
    p.set_defaults(func=_cmd_verify_rbounds)
    p = vsub.add_parser("mr", parents=[common],
                        help="space-time regularity ratio harness")
    p.add_argument("--problem", required=True, metavar="FILE")
    p.add_argument("--trials", type=int, default=3,
                   help="random data draws per resolution")
    p.add_argument("--resolutions",
                   type=lambda s: _parse_ints(s, None, "--resolutions"),
                   default=(32, 64), metavar="NT1,NT2,...",
                   help="time-step counts to compare (default 32,64)")
    p.add_argument("--tfinal", type=float, default=1.0, help="final time")
    p.add_argument("--incompatible", action="store_true",
                   help="run the incompatible-data negative control "
                        "(requires growth instead of stability)")
    p.set_defaults(func=_cmd_verify_mr)

    fix = sub.add_parser("fixtures", help="built-in problem library")
    fsub = fix.add_subparsers(metavar="ACTION")
    p = fsub.add_parser("list", help="list fixture names")
    p.set_defaults(func=_cmd_fixtures_list)
    p = fsub.add_parser("emit", help="write a fixture as a problem file")
    p.add_argument("name", choices=fixtures.FIXTURE_NAMES, metavar="NAME",
                   help="one of: %s" % ", ".join(fixtures.FIXTURE_NAMES))
    p.add_argument("--out", metavar="FILE",
                   help="output path (default NAME.json)")
    p.set_defaults(func=_cmd_fixtures_emit)

    return parser


def run(argv):
    """Parse and execute one command line; returns the exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(list(argv))
    except _UsageError as exc:
        sys.stderr.write("%s\n" % exc)
        return 1
    except SystemExit as exc:
        # argparse exits directly only for --help
        return int(exc.code or 0)
    if not hasattr(args, "func"):
        parser.print_help(sys.stderr)
        return 1
    if getattr(args, "threads", None) is not None:
        os.environ["LOPASHKA_THREADS"] = str(resolve_threads(args.threads))
    try:
        return args.func(args)
    except LopashkaError as exc:
        sys.stderr.write("error: %s\n" % exc)
        return 1
    except OSError as exc:
        sys.stderr.write("error: %s\n" % exc)
        return 1


def main(argv=None):
    return run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
