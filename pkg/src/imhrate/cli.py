"""Command-line front end.

Subcommands: analyze, spectrum, simulate, couple, reproduce, validate.
Models come from `registry:<name>?key=value` URIs or JSON files (see
modelspec). Reports land in --output (or $IMHRATE_OUTPUT_DIR, or the current
directory) as CSV/JSON with reproducibility headers, plus rendered figures
unless --no-figures. Exit codes: 0 success, 2 model error, 3 numerical
failure; validate exits with its failure count (capped at 100).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import figures
from .discrete import (
    HORIZON_CAP,
    TV_REPORT_FLOOR,
    MatrixChain,
    exact_tv,
    liu_spectrum,
    rate_bounds_discrete,
)
from .errors import InvalidModel, ModelError, NumericalError, UnboundedWeight
from .general import rate_report, tv_at_point_general, weight_cdf_pair
from .measures import DiscreteModel, GeneralModel, compute_wstar
from .modelspec import load_model
from .ratefit import fit_decay_rate
from .registry import MhFixture, dirichlet_wstar
from .report_io import write_csv, write_json
from .samplers import run_coupling, run_imh, run_mh
from .validation import SUITES, run_suites

EPS_DEFAULT = 0.01


def _outdir(args) -> Path:
    out = args.output or os.environ.get("IMHRATE_OUTPUT_DIR") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _steps_table(report, epsilons) -> dict:
    table = {}
    for eps in epsilons:
        frac = report.steps_to_eps(eps)
        table[repr(eps)] = {"fractional": frac, "ceil": int(np.ceil(frac))}
    return table


def _clamped_horizon(args) -> int:
    if args.horizon > HORIZON_CAP:
        print(f"note: horizon clamped to {HORIZON_CAP} (iterated matrix powers)")
        return HORIZON_CAP
    return args.horizon


def _analyze_discrete(model: DiscreteModel, args, cmd, out: Path) -> int:
    bounds = rate_bounds_discrete(model, horizon=_clamped_horizon(args),
                                  stop_below=TV_REPORT_FLOOR)
    traj = bounds.trajectory
    rows = []
    for t in range(traj.horizon + 1):
        for state in range(model.n):
            rows.append((t, state, float(traj.per_state[state, t]),
                         float(bounds.lower[t]), float(bounds.upper[t])))
    write_csv(out / "tv.csv", ["t", "state", "tv", "lower", "upper"], rows, cmd)
    steps = {}
    if bounds.rate > 0.0:
        for eps in args.epsilon:
            frac = float(np.log(eps) / np.log(bounds.rate))
            steps[repr(eps)] = {"fractional": frac, "ceil": int(np.ceil(frac))}
    write_json(out / "report.json", {
        "model": model.label,
        "wstar": bounds.wstar,
        "rate": bounds.rate,
        "pi1": bounds.pi1,
        "speed_kind": "sandwich",
        "sandwich_ok": bounds.sandwich_ok,
        "horizon": traj.horizon,
        "steps_to_eps": steps,
    }, cmd)
    if args.figures:
        t = np.arange(traj.horizon + 1)
        figures.tv_envelope_figure(out / "tv.png", t, traj.d_max,
                                   lower=bounds.lower, upper=bounds.upper,
                                   title=f"{model.label or 'discrete model'}: worst-case TV")
    print(f"wrote {out / 'report.json'}, {out / 'tv.csv'}")
    return 0


def _analyze_matrix(chain: MatrixChain, args, cmd, out: Path) -> int:
    traj = exact_tv(chain.kernel, chain.stationary, _clamped_horizon(args),
                    stop_below=TV_REPORT_FLOOR)
    rows = []
    for t in range(traj.horizon + 1):
        for state in range(chain.kernel.n):
            rows.append((t, state, float(traj.per_state[state, t]), None, None))
    write_csv(out / "tv.csv", ["t", "state", "tv", "lower", "upper"], rows, cmd)
    write_json(out / "report.json", {
        "model": chain.label,
        "wstar": None,
        "rate": None,
        "speed_kind": "matrix-fixture",
        "horizon": traj.horizon,
    }, cmd)
    if args.figures:
        figures.tv_envelope_figure(out / "tv.png", np.arange(traj.horizon + 1),
                                   traj.d_max,
                                   title=f"{chain.label or 'matrix chain'}: worst-case TV")
    print(f"wrote {out / 'report.json'}, {out / 'tv.csv'}")
    return 0


def _analyze_general(model: GeneralModel, args, cmd, out: Path) -> int:
    report = rate_report(model)
    if report.speed_kind == "not-geometric":
        raise UnboundedWeight(
            f"{model.label or 'model'} has unbounded weight: not geometrically ergodic"
        )
    horizon = args.horizon
    ns = np.arange(1, horizon + 1)
    upper = report.upper_envelope(ns)
    if report.attained:
        lower = upper
        tv = upper  # exact worst-case speed
    else:
        lower = report.lower_envelope(ns, slack=args.slack)
        tv = None
    if args.point is not None:
        pair = weight_cdf_pair(model)
        tv = np.array([tv_at_point_general(model, pair, int(n), args.point) for n in ns])
    rows = []
    for i, n in enumerate(ns):
        fit = None
        if tv is not None:
            fit = fit_decay_rate(ns[: i + 1], tv[: i + 1], window_start=n / 2.0)
        rows.append((int(n), None if tv is None else float(tv[i]),
                     float(lower[i]), float(upper[i]), fit))
    write_csv(out / "tv.csv", ["n", "tv", "lower", "upper", "rate_fit"], rows, cmd)
    write_json(out / "report.json", {
        "model": model.label,
        "wstar": report.wstar,
        "rate": report.exact_rate,
        "attained": report.attained,
        "speed_kind": report.speed_kind,
        "boundary_warning": report.boundary_warning,
        "method": report.method,
        "steps_to_eps": _steps_table(report, args.epsilon),
        "point": args.point,
    }, cmd)
    if args.figures:
        figures.tv_envelope_figure(out / "tv.png", ns,
                                   upper if tv is None else tv,
                                   lower=lower, upper=upper,
                                   title=f"{model.label or 'model'}: TV decay")
    print(f"wrote {out / 'report.json'}, {out / 'tv.csv'}")
    return 0


def cmd_analyze(args, cmd) -> int:
    loaded = load_model(args.model)
    out = _outdir(args)
    if loaded.kind == "discrete":
        return _analyze_discrete(loaded.model, args, cmd, out)
    if loaded.kind == "matrix":
        return _analyze_matrix(loaded.model, args, cmd, out)
    if loaded.kind == "general":
        return _analyze_general(loaded.model, args, cmd, out)
    raise InvalidModel(
        "analyze expects an independence-sampler model or a matrix chain; "
        "random-walk fixtures support `simulate` only"
    )


def cmd_spectrum(args, cmd) -> int:
    loaded = load_model(args.model)
    if loaded.kind != "discrete":
        raise InvalidModel("spectrum needs a discrete independence-sampler model")
    model: DiscreteModel = loaded.model
    spec = liu_spectrum(model)
    out = _outdir(args)
    names = ["k", "eigenvalue"] + [f"v_{s}" for s in range(model.n)]
    rows = [(0, 1.0) + tuple(1.0 for _ in range(model.n))]
    for k in range(1, model.n):
        rows.append((k, float(spec.eigenvalues[k])) + tuple(map(float, spec.eigenvectors[:, k - 1])))
    write_csv(out / "spectrum.csv", names, rows, cmd)
    if args.figures:
        figures.spectrum_figure(out / "spectrum.png", spec.eigenvalues,
                                title=f"{model.label or 'discrete model'}: spectrum")
    print(f"wrote {out / 'spectrum.csv'}")
    return 0


def cmd_simulate(args, cmd) -> int:
    loaded = load_model(args.model)
    out = _outdir(args)
    if args.algorithm == "mh":
        if not isinstance(loaded.model, MhFixture):
            raise InvalidModel("--algorithm mh needs a random-walk fixture model")
        fx = loaded.model
        run = run_mh(fx.target_density, fx.kernel, float(args.x0), args.steps,
                     args.seed, model_id=fx.label)
    else:
        if loaded.kind == "discrete":
            run = run_imh(loaded.model, int(args.x0), args.steps, args.seed)
        elif loaded.kind == "general":
            run = run_imh(loaded.model, float(args.x0), args.steps, args.seed)
        else:
            raise InvalidModel("simulate imh needs a discrete or general model")
    payload = {
        "model": run.model_id,
        "algorithm": args.algorithm,
        "steps": args.steps,
        "x0": args.x0,
        "acceptance_rate": run.acceptance_rate,
        "final_state": float(run.states[-1]),
    }
    write_json(out / "run.json", payload, cmd, seed=args.seed)
    if args.trajectory:
        rows = [(0, float(run.states[0]), None)]
        rows += [(i + 1, float(run.states[i + 1]), int(run.acceptance_flags[i]))
                 for i in range(args.steps)]
        write_csv(out / "states.csv", ["t", "state", "accepted"], rows, cmd, seed=args.seed)
    print(f"wrote {out / 'run.json'}" + (f", {out / 'states.csv'}" if args.trajectory else ""))
    return 0


def cmd_couple(args, cmd) -> int:
    loaded = load_model(args.model)
    if loaded.kind not in ("discrete", "general"):
        raise InvalidModel("couple needs a discrete or general independence-sampler model")
    model = loaded.model
    x0 = int(args.x0) if loaded.kind == "discrete" else float(args.x0)
    times = np.array([
        run_coupling(model, x0, seed=args.seed, stream=i).meeting_time
        for i in range(args.replicas)
    ])
    if loaded.kind == "discrete":
        wstar = float(model.weight[0])
    else:
        wstar = float(compute_wstar(model).wstar)
    out = _outdir(args)
    values, counts = np.unique(times, return_counts=True)
    write_csv(out / "meeting_times.csv", ["meeting_time", "count"],
              list(zip(map(int, values), map(int, counts))), cmd, seed=args.seed)
    tail = {}
    for n in range(1, 11):
        tail[str(n)] = {
            "empirical": float(np.mean(times >= n)),
            "geometric": (1.0 - 1.0 / wstar) ** (n - 1),
        }
    write_json(out / "couple.json", {
        "model": loaded.label,
        "wstar": wstar,
        "replicas": args.replicas,
        "x0": args.x0,
        "mean_meeting_time": float(times.mean()),
        "tail_probabilities": tail,
    }, cmd, seed=args.seed)
    if args.figures:
        figures.meeting_time_figure(out / "meeting_times.png", values, counts, wstar,
                                    title=f"{loaded.label}: meeting times")
    print(f"wrote {out / 'couple.json'}, {out / 'meeting_times.csv'}")
    return 0


def cmd_reproduce(args, cmd) -> int:
    out = _outdir(args)
    if args.figure == "steps_vs_theta":
        thetas = np.round(np.arange(0.01, 0.995, 0.01), 10)
        rows = []
        steps = []
        for th in thetas:
            rate = 1.0 - th
            n = float(np.log(EPS_DEFAULT) / np.log(rate)) if rate > 0 else 0.0
            steps.append(n)
            rows.append((float(th), 1.0 / th, rate, n, int(np.ceil(n))))
        write_csv(out / "steps_vs_theta.csv",
                  ["theta", "wstar", "rate", "steps_fractional", "steps_ceil"],
                  rows, cmd)
        if args.figures:
            figures.steps_curve_figure(out / "steps_vs_theta.png", thetas,
                                       {"exponential proposal": steps},
                                       xlabel="theta",
                                       title="Steps to 1% accuracy vs theta")
        print(f"wrote {out / 'steps_vs_theta.csv'}")
        return 0
    # steps_vs_N: two-category posterior with uniform prior, counts ~ N * p
    ns_grid = [20, 40, 80, 160, 320, 640, 1280]
    fracs = [0.1, 0.25, 0.5]
    rows = []
    series = {}
    for p in fracs:
        steps = []
        for n_total in ns_grid:
            x1 = round(n_total * p)
            ws = dirichlet_wstar([1.0, 1.0], [x1, n_total - x1])
            rate = 1.0 - 1.0 / ws
            n_steps = float(np.log(EPS_DEFAULT) / np.log(rate))
            steps.append(n_steps)
            rows.append((n_total, p, ws, rate, n_steps))
        series[f"p = {p}"] = steps
    write_csv(out / "steps_vs_N.csv", ["N", "p", "wstar", "rate", "steps_fractional"],
              rows, cmd)
    if args.figures:
        figures.steps_curve_figure(out / "steps_vs_N.png", ns_grid, series,
                                   xlabel="sample size N",
                                   title="Steps to 1% accuracy vs N (two categories)",
                                   loglog=True)
    print(f"wrote {out / 'steps_vs_N.csv'}")
    return 0


def cmd_validate(args, cmd) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    checks, failures = run_suites(names, seed=args.seed, replicas=args.replicas)
    width = max(len(c.name) for c in checks) + 2
    print(f"{'check':<{width}} {'value':>12} {'tolerance':>12}  status")
    for c in checks:
        status = "pass" if c.passed else "FAIL"
        print(f"{c.name:<{width}} {c.value:>12.3e} {c.tol:>12.3e}  {status}"
              + (f"  ({c.detail})" if c.detail else ""))
    print(f"{failures} failed / {len(checks)} checks")
    return min(failures, 100)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="imhrate",
        description="Exact convergence-rate analysis for independence samplers",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(p, model=True):
        if model:
            p.add_argument("--model", required=True,
                           help="registry:<name>?k=v or path to a model JSON file")
        p.add_argument("--output", "-o", default=None,
                       help="output directory (default $IMHRATE_OUTPUT_DIR or .)")
        p.add_argument("--no-figures", dest="figures", action="store_false",
                       help="skip rendering PNG figures next to the CSV output")

    p = sub.add_parser("analyze", help="rate report, envelopes, and TV curves")
    add_common(p)
    p.add_argument("--epsilon", type=float, action="append", default=None,
                   help="accuracy level(s) for the steps table (default 0.01)")
    p.add_argument("--horizon", type=int, default=50, help="TV curve length")
    p.add_argument("--point", type=float, default=None,
                   help="general models: compute quadrature TV from this start point")
    p.add_argument("--slack", type=float, default=0.05,
                   help="rate-only models: lower envelope uses (rate - slack)^n")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("spectrum", help="closed-form spectrum of a discrete model")
    add_common(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("simulate", help="run a sampler trajectory")
    add_common(p)
    p.add_argument("--algorithm", choices=["imh", "mh"], default="imh")
    p.add_argument("--steps", type=int, default=10_000)
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trajectory", action="store_true", help="also write states.csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("couple", help="meeting-time statistics for the split coupling")
    add_common(p)
    p.add_argument("--replicas", type=int, default=10_000)
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_couple)

    p = sub.add_parser("reproduce", help="regenerate the steps-to-accuracy study data")
    add_common(p, model=False)
    p.add_argument("--figure", choices=["steps_vs_theta", "steps_vs_N"], required=True)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("validate", help="run the fixed-seed validation suites")
    p.add_argument("suite", choices=[*SUITES, "all"])
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--replicas", type=int, default=100_000)
    p.set_defaults(func=cmd_validate, figures=False)

    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "epsilon", None) is None and args.subcommand == "analyze":
        args.epsilon = [EPS_DEFAULT]
    cmd = "imhrate " + " ".join(argv)
    try:
        return args.func(args, cmd)
    except ModelError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
