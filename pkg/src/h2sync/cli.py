"""Command-line front end.

Subcommands: check, synth, analyze, simulate, reproduce-case1,
reproduce-case2.  Exit codes: 0 success, 1 solvability failure,
2 input error, 3 numerical failure.
"""

import argparse
import sys
from pathlib import Path

from . import cases
from .closedloop import probe_to_csv, rho_scaling_probe
from .conditions import full_report, parse_model
from .errors import (
    ConfigInvalid,
    DeltaSearchExhausted,
    Diverged,
    DimensionMismatch,
    H2SyncError,
    NoStabilizingSolution,
    NotHurwitz,
    NotPositiveDefinite,
    ParseError,
    PreconditionFailed,
    RhoOutOfRange,
)
from .graph import parse_graph
from .protocol import realization_to_text, synthesize_p1, synthesize_p2
from .sim import SimConfig, simulate

EXIT_OK = 0
EXIT_SOLVABILITY = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

_INPUT_ERRORS = (ParseError, ConfigInvalid, DimensionMismatch, FileNotFoundError)
_SOLVABILITY_ERRORS = (PreconditionFailed, RhoOutOfRange)
_NUMERICAL_ERRORS = (
    NoStabilizingSolution,
    NotPositiveDefinite,
    NotHurwitz,
    DeltaSearchExhausted,
    Diverged,
)


def _rho_list(text):
    try:
        rhos = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad rho list {text!r}")
    if not rhos:
        raise argparse.ArgumentTypeError("rho list must be nonempty")
    if any(r < 1.0 for r in rhos):
        raise argparse.ArgumentTypeError("every rho must be >= 1")
    return rhos


def build_parser():
    ap = argparse.ArgumentParser(
        prog="h2sync",
        description=(
            "Protocol synthesis and analysis for scale-free H2 almost state "
            "synchronization of linear multi-agent networks."
        ),
        epilog=(
            "Output files (UTF-8): analysis.csv has columns "
            "rho,h2,rho_times_h2,spectral_abscissa; trajectory CSVs have "
            "t, x_1[1..n], ..., x_N[1..n], sync_error; summary.csv has "
            "case,rho,delta,seed,rms_sync_error."
        ),
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p, graph=True):
        p.add_argument("--model", required=True, help="model file (n m p w header, then A B C E)")
        if graph:
            p.add_argument("--graph", required=True, help="graph file (N, then edges `i j w` or dense rows)")
        p.add_argument("--out", default=".", help="output directory")

    def add_protocol(p):
        p.add_argument("--protocol", choices=("p1", "p2"), required=True)
        p.add_argument("--rho", type=_rho_list, required=True,
                       help="comma-separated list, each >= 1")
        p.add_argument("--delta", type=float, default=None,
                       help="fixed low-gain parameter (p2); default: halving search")

    def add_sim(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--dt", type=float, default=1e-3)
        p.add_argument("--t-final", type=float, default=50.0)
        p.add_argument("--noise", choices=("off", "white"), default="off")
        p.add_argument("--integrator", choices=("rk4", "zoh"), default="rk4")

    p = sub.add_parser("check", help="run the solvability conditions")
    add_common(p)
    p.add_argument("--protocol", choices=("p1", "p2"), default=None,
                   help="which protocol's conditions to check; default inferred from C")

    p = sub.add_parser("synth", help="synthesize protocol realizations")
    add_common(p, graph=False)
    add_protocol(p)

    p = sub.add_parser("analyze", help="H2 scaling probe over rho")
    add_common(p)
    add_protocol(p)

    p = sub.add_parser("simulate", help="simulate and write trajectory CSVs")
    add_common(p)
    add_protocol(p)
    add_sim(p)

    for case in ("reproduce-case1", "reproduce-case2"):
        p = sub.add_parser(case, help=f"run the built-in {case[-5:]} benchmark")
        p.add_argument("--out", default=".")
        add_sim(p)
    return ap


def _load_model(args, coupling_kind=None):
    return parse_model(Path(args.model).read_text(), coupling_kind=coupling_kind)


def _load_graph(args):
    return parse_graph(Path(args.graph).read_text())


def _outdir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_config(out, args):
    resolved = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    text = "\n".join(f"{k}={v}" for k, v in resolved.items()) + "\n"
    (out / "run_config.txt").write_text(text)


def cmd_check(args):
    kind = {"p1": "full-state", "p2": "partial-state", None: None}[args.protocol]
    model = _load_model(args, coupling_kind=kind)
    g = _load_graph(args)
    report = full_report(model, g)
    text = report.to_text()
    sys.stdout.write(text)
    out = _outdir(args)
    _write_config(out, args)
    (out / "report.txt").write_text(text)
    if not report.overall:
        failed = ", ".join(letter for letter, _ in report.failed_conditions())
        print(f"solvability FAILED: condition(s) {failed}", file=sys.stderr)
        return EXIT_SOLVABILITY
    return EXIT_OK


def _synthesize(model, kind, rho, delta):
    if kind == "p1":
        return synthesize_p1(model, rho)
    return synthesize_p2(model, rho, delta_hint=delta)


def cmd_synth(args):
    kind = "full-state" if args.protocol == "p1" else None
    model = _load_model(args, coupling_kind=kind)
    out = _outdir(args)
    _write_config(out, args)
    for rho in args.rho:
        real = _synthesize(model, args.protocol, rho, args.delta)
        path = out / f"protocol_{args.protocol}_rho{rho:g}.txt"
        path.write_text(realization_to_text(real))
        print(f"rho={rho:g}: wrote {path}" + (
            f" (delta={real.delta:g})" if real.kind == "p2" else ""))
    return EXIT_OK


def cmd_analyze(args):
    kind = "full-state" if args.protocol == "p1" else None
    model = _load_model(args, coupling_kind=kind)
    g = _load_graph(args)
    report = full_report(model, g)
    if not report.overall:
        failed = ", ".join(letter for letter, _ in report.failed_conditions())
        print(f"refusing to analyze: condition(s) {failed} violated", file=sys.stderr)
        return EXIT_SOLVABILITY
    rows = rho_scaling_probe(model, g, args.protocol, args.rho, delta=args.delta)
    csv = probe_to_csv(rows)
    out = _outdir(args)
    _write_config(out, args)
    (out / "analysis.csv").write_text(csv)
    sys.stdout.write(csv)
    return EXIT_OK


def _trajectory_csv(result, n):
    cols = ["t"]
    N = result.states.shape[1]
    for i in range(1, N + 1):
        cols.extend(f"x_{i}[{k}]" for k in range(1, n + 1))
    cols.append("sync_error")
    lines = [",".join(cols)]
    flat = result.states.reshape(result.states.shape[0], -1)
    for row_t, row_x, se in zip(result.t, flat, result.sync_error):
        vals = [f"{row_t:.10g}"] + [f"{v:.10g}" for v in row_x] + [f"{se:.10g}"]
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def _run_simulations(model, g, kind, rhos, delta, args, out, case_name):
    summary = ["case,rho,delta,seed,rms_sync_error"]
    for rho in rhos:
        real = _synthesize(model, kind, rho, delta)
        cfg = SimConfig(
            model=model, graph=g, protocol=real,
            t_final=args.t_final, dt=args.dt, noise=args.noise,
            seed=args.seed, integrator=args.integrator,
        )
        result = simulate(cfg)
        traj = out / f"trajectory_{case_name}_rho{rho:g}.csv"
        traj.write_text(_trajectory_csv(result, model.n))
        d = "" if real.delta is None else f"{real.delta:.10g}"
        summary.append(
            f"{case_name},{rho:g},{d},{args.seed},{result.rms_sync_error:.10g}"
        )
        print(f"rho={rho:g}: rms_sync_error={result.rms_sync_error:.6g} -> {traj}")
    (out / "summary.csv").write_text("\n".join(summary) + "\n")
    return EXIT_OK


def cmd_simulate(args):
    kind = "full-state" if args.protocol == "p1" else None
    model = _load_model(args, coupling_kind=kind)
    g = _load_graph(args)
    report = full_report(model, g)
    if not report.overall:
        failed = ", ".join(letter for letter, _ in report.failed_conditions())
        print(f"refusing to simulate: condition(s) {failed} violated", file=sys.stderr)
        return EXIT_SOLVABILITY
    out = _outdir(args)
    _write_config(out, args)
    return _run_simulations(model, g, args.protocol, args.rho, args.delta,
                            args, out, "custom")


def cmd_reproduce(args, which):
    model = cases.triple_integrator()
    g = cases.case1_graph() if which == 1 else cases.case2_graph()
    out = _outdir(args)
    _write_config(out, args)
    return _run_simulations(model, g, "p2", cases.CASE_RHOS, cases.CASE_DELTA,
                            args, out, f"case{which}")


def main(argv=None):
    args = build_parser().parse_args(argv)
    handlers = {
        "check": cmd_check,
        "synth": cmd_synth,
        "analyze": cmd_analyze,
        "simulate": cmd_simulate,
        "reproduce-case1": lambda a: cmd_reproduce(a, 1),
        "reproduce-case2": lambda a: cmd_reproduce(a, 2),
    }
    try:
        return handlers[args.command](args)
    except _INPUT_ERRORS as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except _SOLVABILITY_ERRORS as exc:
        print(f"solvability error: {exc}", file=sys.stderr)
        return EXIT_SOLVABILITY
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except H2SyncError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
