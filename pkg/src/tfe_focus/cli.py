"""Command-line front end: ``tfe-focus <subcommand> [options]``.

Every run writes CSV and/or JSON files whose headers carry the resolved
configuration and the package version, plus a plot manifest describing the
figure-ready columns. Identical configurations give byte-identical files.
"""

import argparse
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from . import __version__
from .errors import EigenvalueNotFound, IntegrationError, ParameterError, TfeFocusError
from .linear_spectrum import FOCUSING, find_linear_eigenvalues, scan_alpha
from .nonlinear_spectrum import (DEFAULT_DELTA, DEFAULT_Y_STAR, approximate_eigenvalue,
                                 trace_branch)
from .oscillatory import (ENVELOPE_EXPONENT, envelope_slope, integrate_phi, integrate_phihat,
                          osc_params, periodicity_scan)
from .output import (default_out_dir, read_config_file, write_csv, write_json, write_manifest)
from .regularity import linear_branches, regularity_report
from .wkbj import (eikonal_residual, match_inner_outer, outer_amplitude,
                   outer_amplitude_quadrature, transport_residual, wkbj_amplitude_ode_check)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(ValueError):
    pass


# defaults per subcommand; a config file or flags override them
DEFAULTS: Dict[str, dict] = {
    "linear-scan": {"N": 1, "kind": "sh2", "alpha_min": 0.05, "alpha_max": 3.0,
                    "alpha_step": 0.01, "alpha": None, "window": [250.0, 300.0],
                    "max_fail_fraction": 0.0},
    "linear-eigen": {"N": 1, "k_max": 5, "step": 0.1, "coincidence_tol": 1e-6},
    "nonlinear-branch": {"N": [1], "k": 1, "n": None, "n_min": 1e-3, "n_max": 0.5,
                         "n_points": 12, "delta": DEFAULT_DELTA, "y_star": DEFAULT_Y_STAR,
                         "free_datum": False},
    "osc": {"n": 0.1, "N": 1, "alpha": 0.5, "s_max": None, "span_hat": 60.0,
            "samples": 4001, "initial": [1.0, 0.0, 0.0, 0.0], "phihat": False,
            "periodicity_n": None, "rtol": 1e-10},
    "wkbj-check": {"N": 1, "alpha": 0.5, "Y_min": 1e-2, "Y_max": 1e2, "samples": 401,
                   "match_n": [0.05, 0.02, 0.01, 0.001]},
    "regularity": {"n": 0.0, "N": 1, "k_max": 4, "alpha": None},
}


def _floats(text: str) -> List[float]:
    return [float(v) for v in text.replace(",", " ").split()]


def _ints(text: str) -> List[int]:
    return [int(v) for v in text.replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tfe-focus", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="key = value or JSON config file")
        p.add_argument("--out-dir", type=Path, help="output directory (default: $TFE_FOCUS_OUT or .)")
        p.add_argument("--format", choices=("csv", "json", "both"), default=None)
        p.add_argument("--quiet", action="store_true")
        return p

    p = common(sub.add_parser("linear-scan", help="C1(alpha), C2(alpha) table at n = 0"))
    p.add_argument("--N", type=int)
    p.add_argument("--kind", choices=("sh1", "sh2"))
    p.add_argument("--alpha-min", type=float)
    p.add_argument("--alpha-max", type=float)
    p.add_argument("--alpha-step", type=float)
    p.add_argument("--alpha", type=_floats, help="explicit grid, e.g. '0.3,0.4,0.5'")
    p.add_argument("--window", type=_floats)
    p.add_argument("--max-fail-fraction", type=float)

    p = common(sub.add_parser("linear-eigen", help="first k_max linear eigenvalues"))
    p.add_argument("--N", type=int)
    p.add_argument("--k-max", type=int)
    p.add_argument("--step", type=float)
    p.add_argument("--coincidence-tol", type=float)

    p = common(sub.add_parser("nonlinear-branch", help="trace alpha_k(n) for n > 0"))
    p.add_argument("--N", type=_ints, help="one or more dimensions, e.g. '1,2,3'")
    p.add_argument("--k", type=int)
    p.add_argument("--n", type=_floats, help="explicit increasing n grid")
    p.add_argument("--n-min", type=float)
    p.add_argument("--n-max", type=float)
    p.add_argument("--n-points", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--y-star", type=float)
    p.add_argument("--free-datum", action="store_const", const=True, default=None,
                   help="also solve for the second origin datum")

    p = common(sub.add_parser("osc", help="oscillatory component of maximal solutions"))
    p.add_argument("--n", type=float)
    p.add_argument("--N", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--s-max", type=float)
    p.add_argument("--span-hat", type=float, help="orbit length in the rescaled variable")
    p.add_argument("--samples", type=int)
    p.add_argument("--initial", type=_floats)
    p.add_argument("--rtol", type=float)
    p.add_argument("--phihat", action="store_const", const=True, default=None,
                   help="integrate the rescaled small-n equation instead")
    p.add_argument("--periodicity-n", type=_floats, help="n grid for a periodicity scan")

    p = common(sub.add_parser("wkbj-check", help="residuals of the matched asymptotics"))
    p.add_argument("--N", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--Y-min", type=float)
    p.add_argument("--Y-max", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--match-n", type=_floats)

    p = common(sub.add_parser("regularity", help="Hoelder and integrability bounds"))
    p.add_argument("--n", type=float)
    p.add_argument("--N", type=int)
    p.add_argument("--k-max", type=int)
    p.add_argument("--alpha", type=_floats, help="alpha_k values for k = 1.. (needed for n > 0)")
    return parser


def resolve_config(args: argparse.Namespace):
    """Defaults, then the config file, then explicit flags."""
    config = dict(DEFAULTS[args.command])
    config["format"] = "both"
    if args.config is not None:
        for key, value in read_config_file(args.config).items():
            if key not in config:
                raise UsageError(f"unknown config key {key!r} for {args.command}")
            config[key] = value
    for key in config:
        value = getattr(args, key, None)
        if value is not None:
            config[key] = value
    out_dir = args.out_dir if args.out_dir is not None else default_out_dir()
    return config, Path(out_dir)


class Run:
    """Collects output files for one command."""

    def __init__(self, command: str, config: dict, out_dir: Path, quiet: bool = False):
        self.command = command
        self.config = config
        self.out_dir = out_dir
        self.quiet = quiet
        self.plots: List[dict] = []
        self.files: List[Path] = []

    @property
    def stem(self) -> str:
        return self.command.replace("-", "_")

    def csv(self, name: str, columns, rows, plot: Optional[dict] = None, extra_header=None):
        if self.config["format"] in ("csv", "both"):
            path = write_csv(self.out_dir / name, self.command, self.config, columns, rows,
                             extra_header)
            self.files.append(path)
            if plot is not None:
                self.plots.append(dict(plot, file=name, columns=list(columns)))

    def json(self, results, diagnostics=None):
        if self.config["format"] in ("json", "both"):
            self.files.append(write_json(self.out_dir / f"{self.stem}.json", self.command,
                                         self.config, results, diagnostics))

    def finish(self):
        if self.plots:
            self.files.append(write_manifest(self.out_dir / f"{self.stem}_plots.json",
                                             self.plots))
        if not self.quiet:
            for f in self.files:
                print(f"wrote {f}")

    def say(self, text: str):
        if not self.quiet:
            print(text)


def _require(cond: bool, message: str):
    if not cond:
        raise UsageError(message)


def cmd_linear_scan(run: Run) -> int:
    c = run.config
    _require(len(c["window"]) == 2 and c["window"][0] < c["window"][1], "window must be lo,hi")
    if c["alpha"] is not None:
        grid = np.asarray(c["alpha"], dtype=float)
    else:
        _require(c["alpha_step"] > 0, "alpha_step must be positive")
        count = int(np.floor((c["alpha_max"] - c["alpha_min"]) / c["alpha_step"] + 1e-9)) + 1
        grid = c["alpha_min"] + c["alpha_step"] * np.arange(max(count, 0))
    _require(grid.size > 0, "empty alpha grid")
    _require(bool(np.all(np.diff(grid) > 0)), "alpha grid must be strictly increasing")
    _require(bool(np.all(grid > 0)), "alpha must be positive")
    table = scan_alpha(int(c["N"]), c["kind"], grid, window=tuple(c["window"]))
    rows = table.rows()
    run.csv(f"{run.stem}.csv", ("alpha", "C1", "C2", "fit_residual"), rows,
            plot={"title": f"far-field constants, N={c['N']}, {c['kind']}", "x": "alpha",
                  "y": ["C1", "C2"]})
    # sign changes of C1 and C2 as a quick summary
    changes = {}
    for name, col in (("C1", table.C1), ("C2", table.C2)):
        s = np.sign(col)
        idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
        changes[name] = [[float(grid[i]), float(grid[i + 1])] for i in idx]
    failures = {f"{a:.17g}": msg for a, msg in sorted(table.failures.items())}
    run.json({"alpha": grid, "C1": table.C1, "C2": table.C2, "fit_residual": table.residual},
             {"sign_changes": changes, "failures": failures})
    run.finish()
    frac = len(table.failures) / grid.size
    if frac > c["max_fail_fraction"]:
        print(f"error: {len(table.failures)} of {grid.size} grid points failed", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_linear_eigen(run: Run) -> int:
    c = run.config
    _require(int(c["k_max"]) >= 1, "k_max must be at least 1")
    _require(int(c["N"]) >= 1, "N must be at least 1")
    eig = find_linear_eigenvalues(int(c["N"]), int(c["k_max"]), step=float(c["step"]),
                                  coincidence_tol=float(c["coincidence_tol"]))
    rows = [(k, e.alpha, e.kind, e.zero_C1, e.zero_C2, e.coincidence, e.C1, e.C2)
            for k, e in enumerate(eig, 1)]
    cols = ("k", "alpha", "kind", "zero_C1", "zero_C2", "coincidence", "C1", "C2")
    run.csv(f"{run.stem}.csv", cols, rows)
    run.json([dict(zip(cols, r)) for r in rows],
             {"max_deviation_from_k_over_2": max(abs(e.alpha - 0.5 * k) for k, e in enumerate(eig, 1))})
    run.finish()
    for k, e in enumerate(eig, 1):
        run.say(f"alpha_{k} = {e.alpha:.12f}")
    return EXIT_OK


def cmd_nonlinear_branch(run: Run) -> int:
    c = run.config
    dims = c["N"] if isinstance(c["N"], list) else [c["N"]]
    _require(len(dims) > 0 and all(int(d) >= 1 for d in dims), "N must be positive integers")
    k = int(c["k"])
    _require(k >= 1, "k must be at least 1")
    if c["n"] is not None:
        grid = np.asarray(c["n"], dtype=float)
    else:
        _require(int(c["n_points"]) >= 1, "n_points must be at least 1")
        grid = np.geomspace(c["n_min"], c["n_max"], int(c["n_points"])) if c["n_points"] > 1 \
            else np.array([c["n_min"]])
    _require(grid.size > 0, "empty n grid")
    _require(float(grid.max()) < 2.0, "n must stay below 2")
    _require(float(grid.max()) < 2.0 / k, f"n must stay below 2/k = {2.0 / k:g} for branch k={k}")
    _require(bool(np.all(grid > 0)), "n grid must be positive")

    results, diagnostics, failed = {}, {}, False
    for N in dims:
        N = int(N)
        branch = trace_branch(N, k, grid, delta=float(c["delta"]), y_star=float(c["y_star"]),
                              free_datum=bool(c["free_datum"]))
        rows = [(p.n, p.alpha, approximate_eigenvalue(k, p.n), p.mu, p.local_exponent,
                 p.residual, p.check_residual, p.nu, p.y_star, p.delta_shift,
                 p.delta_sensitive) for p in branch.points]
        cols = ("n", "alpha", "alpha_approx", "mu", "local_exponent", "residual",
                "check_residual", "nu", "y_star", "delta_shift", "delta_sensitive")
        run.csv(f"{run.stem}_k{k}_N{N}.csv", cols, rows,
                plot={"title": f"branch k={k}, N={N}", "x": "n", "y": ["alpha", "alpha_approx"]})
        results[f"N={N}"] = [dict(zip(cols, r)) for r in rows]
        slope = branch.slope_estimate
        diagnostics[f"N={N}"] = {
            "failure": branch.failure,
            "points": len(branch.points),
            "slope_estimate": slope,
            # candidate first-order coefficients: alpha_k(0)**2 and mu_k(0) = 2k
            "slope_vs_alpha_sq": None if slope is None else slope - 0.25 * k * k,
            "slope_vs_2k": None if slope is None else slope - 2.0 * k,
            "monotone": bool(np.all(np.diff(branch.alpha) > 0)) if len(branch.points) > 1 else None,
            "exponent_ok": [p.exponent_ok for p in branch.points],
        }
        failed |= branch.failure is not None
        run.say(f"N={N}: {len(branch.points)}/{grid.size} points"
                + (f", stopped at {branch.failure}" if branch.failure else ""))
    if len(dims) > 1:
        alphas = [np.array([r["alpha"] for r in results[f"N={int(N)}"]]) for N in dims]
        m = min(len(a) for a in alphas)
        spread = float(max(np.max(np.abs(a[:m] - alphas[0][:m])) for a in alphas)) if m else None
        diagnostics["dimension_spread"] = spread
    run.json(results, diagnostics)
    run.finish()
    return EXIT_FAIL if failed else EXIT_OK


def cmd_osc(run: Run) -> int:
    c = run.config
    initial = np.asarray(c["initial"], dtype=float)
    _require(initial.shape == (4,), "initial needs four values")
    _require(int(c["samples"]) >= 2, "samples must be at least 2")
    results, diagnostics = {}, {}
    if c["phihat"]:
        n = float(c["n"])
        _require(0 <= n < 1, "phihat needs 0 <= n < 1")
        span = float(c["s_max"] if c["s_max"] is not None else c["span_hat"])
        ss = np.linspace(0.0, span, int(c["samples"]))
        orbit = integrate_phihat(n, initial, (0.0, span), samples=ss)
        tr = orbit.transformed()
        run.csv("osc_phihat.csv", ("s_hat", "t_phi_hat", "log_abs_phi_hat", "sign"),
                zip(ss, tr, orbit.log_abs_phi, orbit.sign),
                plot={"title": f"rescaled orbit, n={n:g}", "x": "s_hat", "y": ["t_phi_hat"]})
        try:
            slope = envelope_slope(orbit)
        except ParameterError as exc:
            slope = None
            diagnostics["envelope_error"] = str(exc)
        diagnostics.update({"envelope_slope": slope, "envelope_exponent_n0": ENVELOPE_EXPONENT,
                            "crossings": len(orbit.crossings)})
        results["orbit_samples"] = int(ss.size)
        if slope is not None:
            run.say(f"envelope slope {slope:.7f} (n=0 exponent {ENVELOPE_EXPONENT:.7f})")
    else:
        p = osc_params(float(c["n"]), int(c["N"]), float(c["alpha"]))
        _require(p.n < 1, "zero crossings are integrated for n < 1 only")
        span = float(c["s_max"]) if c["s_max"] is not None else float(c["span_hat"]) / p.mu
        ss = np.linspace(0.0, span, int(c["samples"]))
        orbit = integrate_phi(p, initial, (0.0, span), samples=ss, rtol=float(c["rtol"]))
        run.csv("osc_orbit.csv", ("s", "t_phi", "log_abs_phi", "sign"),
                zip(ss, orbit.transformed(), orbit.log_abs_phi, orbit.sign),
                plot={"title": f"t(phi), n={p.n:g}, N={p.N}, alpha={p.alpha:g}", "x": "s",
                      "y": ["t_phi"]})
        diagnostics["crossings"] = len(orbit.crossings)
        results["orbit_samples"] = int(ss.size)
    if c["periodicity_n"]:
        grid = np.asarray(c["periodicity_n"], dtype=float)
        _require(bool(np.all((grid > 0) & (grid < 1))), "periodicity n values must be in (0, 1)")
        scan = periodicity_scan(int(c["N"]), float(c["alpha"]), grid)
        rows = [(n, r.status, r.period, r.confidence, r.n_periods)
                for n, r in zip(scan.n, scan.results)]
        run.csv("osc_periodicity.csv", ("n", "status", "period", "confidence", "n_periods"), rows)
        results["periodicity"] = [dict(n=n, **r.as_dict()) for n, r in zip(scan.n, scan.results)]
        diagnostics["periodicity_bracket"] = scan.bracket
        run.say(f"periodicity bracket: {scan.bracket}")
    run.json(results, diagnostics)
    run.finish()
    return EXIT_OK


def cmd_wkbj_check(run: Run) -> int:
    c = run.config
    _require(0 < c["Y_min"] < c["Y_max"], "need 0 < Y_min < Y_max")
    N, alpha = int(c["N"]), float(c["alpha"])
    Y = np.geomspace(c["Y_min"], c["Y_max"], int(c["samples"]))
    eik = eikonal_residual(Y)
    trans = transport_residual(Y, N, alpha)
    lnB = outer_amplitude(Y, N, alpha)
    run.csv("wkbj_outer.csv", ("Y", "eikonal_residual", "transport_residual", "ln_abs_B"),
            zip(Y, eik, trans, lnB),
            plot={"title": "outer WKBJ residuals", "x": "Y", "y": ["eikonal_residual"],
                  "log_x": True})
    inner = {root: wkbj_amplitude_ode_check(a, N, alpha)
             for root, a in (("a1", FOCUSING.a1), ("a3", complex(FOCUSING.a3)))}
    quad = outer_amplitude_quadrature(1.0, N, alpha)
    closed = float(outer_amplitude(1.0, N, alpha))
    matching = []
    for n in c["match_n"]:
        _require(0 < n <= 0.05, "match_n values must lie in (0, 0.05]")
        m = match_inner_outer(float(n), N, alpha)
        matching.append({"n": float(n), **{k: v for k, v in m.items()
                                            if np.ndim(v) == 0}})
    results = {"max_eikonal_residual": float(eik.max()),
               "max_transport_residual": float(trans.max()),
               "inner": {k: {kk: vv for kk, vv in v.items()} for k, v in inner.items()},
               "ln_abs_B_at_1": closed, "ln_abs_B_at_1_quadrature": quad,
               "matching": matching}
    run.json(results, {"quadrature_difference": abs(quad - closed)})
    run.finish()
    run.say(f"eikonal residual max {eik.max():.3e}, transport residual max {trans.max():.3e}")
    return EXIT_OK


def cmd_regularity(run: Run) -> int:
    c = run.config
    n, N = float(c["n"]), int(c["N"])
    _require(0 <= n < 2, "n must lie in [0, 2)")
    _require(N >= 1, "N must be at least 1")
    if c["alpha"] is not None:
        branches = [(k, float(a)) for k, a in enumerate(c["alpha"], 1)]
    else:
        _require(n == 0, "alpha values are required for n > 0 (e.g. from nonlinear-branch)")
        _require(int(c["k_max"]) >= 1, "k_max must be at least 1")
        branches = linear_branches(int(c["k_max"]))
    report = regularity_report(n, N, branches)
    run.csv(f"{run.stem}.csv", report.COLUMNS, report.to_csv_rows())
    run.json(report.as_dict())
    run.finish()
    run.say(report.to_text().rstrip())
    return EXIT_OK


COMMANDS: Dict[str, Callable[[Run], int]] = {
    "linear-scan": cmd_linear_scan,
    "linear-eigen": cmd_linear_eigen,
    "nonlinear-branch": cmd_nonlinear_branch,
    "osc": cmd_osc,
    "wkbj-check": cmd_wkbj_check,
    "regularity": cmd_regularity,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config, out_dir = resolve_config(args)
        run = Run(args.command, config, out_dir, quiet=args.quiet)
        return COMMANDS[args.command](run)
    except (UsageError, ParameterError) as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EigenvalueNotFound, IntegrationError, TfeFocusError) as exc:
        print(f"{parser.prog} {args.command}: failed: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
