"""Command-line interface: single-point solves, branch tables, sweeps.

Exit codes: 0 success, 1 usage or configuration error, 2 physics
failure (no stable steady state, no converged root, or multistability
under the error branch policy).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

import numpy as np

from . import dynamics, entanglement, meanfield, steadystate, sweep
from .errors import (
    ConfigError,
    DriftUnstableError,
    InvalidParameterError,
    KerrmagError,
    MultistabilityError,
)
from .params import (
    TWO_PI,
    SphereSpec,
    SystemParams,
    apply_overrides,
    load_config,
    parse_key,
    spin_count,
)

log = logging.getLogger(__name__)

VALIDITY_WARNING_RATIO = 1e-2
DEFAULT_DIAMETER_UM = 40.0


class UsageError(KerrmagError):
    """Bad command line; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; the CLI contract
    # reserves 2 for physics failures, so raise instead.
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="kerrmag", description=__doc__)
    parser.add_argument(
        "-v", "--verbose", action="count", default=0,
        help="-v for progress messages, -vv for debug output",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="YAML parameter file")
        p.add_argument(
            "-O", "--override", action="append", default=[], metavar="KEY=VALUE",
            help="override a config quantity (config key grammar); repeatable",
        )

    p = sub.add_parser("solve", help="full steady-state report at one parameter point")
    common(p)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument(
        "--branch-policy", choices=sweep.BRANCH_POLICIES[:3], default="error",
        help="what to do when several stable branches coexist",
    )
    p.add_argument(
        "--diameter-um", type=float, default=DEFAULT_DIAMETER_UM,
        help="sphere diameter in micrometers for the validity ratio",
    )

    p = sub.add_parser("meanfield", help="mean-field branches, optionally over a power range")
    common(p)
    p.add_argument(
        "--power-range", nargs=3, type=float, metavar=("START", "STOP", "COUNT"),
        help="drive powers in W; COUNT evenly spaced values",
    )

    p = sub.add_parser("stability", help="stability verdict for every branch at one point")
    common(p)

    p = sub.add_parser("sweep", help="grid sweep producing a CSV or JSON table")
    common(p)
    p.add_argument(
        "--mode", choices=("direct", "physical"), required=True,
        help="prescribed couplings (direct) or mean-field solve per point (physical)",
    )
    p.add_argument(
        "--axis", action="append", required=True, metavar="KEY=START:STOP:COUNT",
        help="sweep axis in config-key units; once for 1D, twice for 2D",
    )
    p.add_argument("--branch-policy", choices=sweep.BRANCH_POLICIES, default="error")
    p.add_argument(
        "--outputs", default=None,
        help="comma-separated output groups (default: all applicable)",
    )
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument(
        "-o", "--output", default=None,
        help="table file; stdout when omitted (summary then goes to stderr)",
    )
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            stream=sys.stderr,
            level={0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG),
            format="%(levelname)s %(name)s: %(message)s",
        )
        params = _load_params(args)
        if args.command == "solve":
            _cmd_solve(args, params)
        elif args.command == "meanfield":
            _cmd_meanfield(args, params)
        elif args.command == "stability":
            _cmd_stability(args, params)
        else:
            _cmd_sweep(args, params)
    except (UsageError, ConfigError, InvalidParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KerrmagError as exc:
        print(f"physics error: {exc}", file=sys.stderr)
        return 2
    return 0


def _load_params(args) -> SystemParams:
    params = load_config(args.config)
    overrides = {}
    for item in args.override:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"override {item!r} is not KEY=VALUE")
        if key in overrides:
            raise UsageError(f"override key {key!r} given twice")
        overrides[key] = value
    if overrides:
        params = apply_overrides(params, overrides)
    return params


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def _freq_line(label: str, value: float) -> str:
    return f"  {label:<18} {_fmt(value / TWO_PI / 1e6):>12} MHz (/2pi) = {_fmt(value):>12} rad/s"


def _choose_branch(params: SystemParams, policy: str) -> meanfield.SteadyAmplitudes:
    roots = meanfield.solve_meanfield(params)
    stable = [r for r in roots if r.stable]
    if not stable:
        raise DriftUnstableError(
            f"no stable mean-field branch among {len(roots)} root(s)"
        )
    if len(stable) > 1:
        if policy == "error":
            raise MultistabilityError(
                f"{len(stable)} stable branches; pick one with --branch-policy"
            )
        pick = min if policy == "lowest-amplitude" else max
        return pick(stable, key=lambda r: abs(r.m1) ** 2 + abs(r.m2) ** 2)
    return stable[0]


def _couplings_report(c: meanfield.EffectiveCouplings, delta_c: float) -> dict:
    diag = dynamics.bogoliubov(c)
    eps_real = not isinstance(diag.epsilon, complex)
    return {
        "G_rad_per_s": c.G,
        "F_rad_per_s": c.F,
        "delta_tilde_rad_per_s": c.delta_tilde,
        "epsilon_rad_per_s": diag.epsilon if eps_real else None,
        "optimality_gap_rad_per_s": diag.epsilon + delta_c if eps_real else None,
    }


def _cmd_solve(args, params: SystemParams) -> None:
    report: dict = {"parameters": params.as_mapping()}
    if params.has_direct_couplings:
        c1 = meanfield.direct_couplings(params.G1, params.F1, params.delta_m1)
        c2 = meanfield.direct_couplings(params.G2, params.F2, params.delta_m2)
        report["mode"] = "direct"
    else:
        amp = _choose_branch(params, args.branch_policy)
        c1 = meanfield.effective_couplings(amp, params, 1)
        c2 = meanfield.effective_couplings(amp, params, 2)
        report["mode"] = "physical"
        report["amplitudes"] = {
            "m1": [amp.m1.real, amp.m1.imag],
            "m2": [amp.m2.real, amp.m2.imag],
            "a": [amp.a.real, amp.a.imag],
            "abs_m1": abs(amp.m1),
            "abs_m2": abs(amp.m2),
            "abs_a": abs(amp.a),
            "residual": amp.residual,
        }
        _, bound = spin_count(SphereSpec(diameter=args.diameter_um * 1e-6))
        report["validity_ratio"] = amp.magnon_occupation / bound
    report["magnon1"] = _couplings_report(c1, params.delta_c)
    report["magnon2"] = _couplings_report(c2, params.delta_c)
    model = dynamics.build_drift(c1, c2, params)
    report["stable"] = model.stable
    report["max_re_lambda_rad_per_s"] = float(np.max(model.eigenvalues_A.real))
    if not model.stable:
        if args.format == "json":
            print(json.dumps(report, indent=2))
        else:
            _print_solve_text(report)
        raise DriftUnstableError(
            f"drift matrix unstable (max Re eigenvalue "
            f"{report['max_re_lambda_rad_per_s']:.6g} rad/s); no stationary state"
        )
    cm = steadystate.solve_lyapunov(model)
    pairs = entanglement.all_pairs(cm)
    ent = {}
    for pair, res in pairs.items():
        key = f"E_{_short(pair.first)}{_short(pair.second)}"
        ent[key] = {"e_n": res.e_n, "nu_minus": res.nu_minus}
    report["entanglement"] = ent
    if args.format == "json":
        print(json.dumps(report, indent=2))
    else:
        _print_solve_text(report)


def _short(mode: entanglement.Mode) -> str:
    return {"magnon1": "m1", "magnon2": "m2", "cavity": "a"}[mode.value]


def _print_solve_text(report: dict) -> None:
    print(f"mode: {report['mode']}")
    if "amplitudes" in report:
        amp = report["amplitudes"]
        print("steady amplitudes:")
        for name in ("m1", "m2", "a"):
            re, im = amp[name]
            print(f"  <{name}> = {_fmt(re)} {im:+.6g}j  (|{name}| = {_fmt(amp['abs_' + name])})")
        print(f"  residual: {amp['residual']:.3e}")
    for which in ("magnon1", "magnon2"):
        c = report[which]
        print(f"{which}:")
        print(_freq_line("G", c["G_rad_per_s"]))
        print(_freq_line("F", c["F_rad_per_s"]))
        print(_freq_line("delta_tilde", c["delta_tilde_rad_per_s"]))
        if c["epsilon_rad_per_s"] is None:
            print("  epsilon            complex (squeezing-dominated regime)")
        else:
            print(_freq_line("epsilon", c["epsilon_rad_per_s"]))
            print(_freq_line("optimality gap", c["optimality_gap_rad_per_s"]))
    verdict = "stable" if report["stable"] else "UNSTABLE"
    print(f"drift matrix: {verdict} (max Re eigenvalue {_fmt(report['max_re_lambda_rad_per_s'])} rad/s)")
    if "validity_ratio" in report:
        ratio = report["validity_ratio"]
        print(f"validity ratio <m+m>/(2Ns): {ratio:.3e}")
        if ratio > VALIDITY_WARNING_RATIO:
            print(
                f"warning: occupation ratio {ratio:.3e} exceeds {VALIDITY_WARNING_RATIO}; "
                "the linearized model is outside its validity range"
            )
    if "entanglement" in report:
        print("logarithmic negativity:")
        for key, val in report["entanglement"].items():
            print(f"  {key:<8} = {val['e_n']:.6f}  (nu_minus = {val['nu_minus']:.6f})")


def _cmd_meanfield(args, params: SystemParams) -> None:
    if args.power_range is not None:
        start, stop, count = args.power_range
        count = int(count)
        if count < 1 or not (math.isfinite(start) and math.isfinite(stop)):
            raise UsageError("power range needs finite START STOP and COUNT >= 1")
        powers = [float(v) for v in np.linspace(start, stop, count)]
    else:
        powers = [params.power]
    print("power_W  branch  abs_m1  abs_m2  abs_a  stable  monostable")
    for power in powers:
        p = params.replace(power=power)
        roots = meanfield.solve_meanfield(p)
        n_stable = sum(r.stable for r in roots)
        monostable = "yes" if n_stable == 1 else "no"
        for i, r in enumerate(roots):
            print(
                f"{_fmt(power)}  {i}  {abs(r.m1):.6e}  {abs(r.m2):.6e}  "
                f"{abs(r.a):.6e}  {'yes' if r.stable else 'no'}  {monostable}"
            )


def _cmd_stability(args, params: SystemParams) -> None:
    if params.has_direct_couplings:
        c1 = meanfield.direct_couplings(params.G1, params.F1, params.delta_m1)
        c2 = meanfield.direct_couplings(params.G2, params.F2, params.delta_m2)
        model = dynamics.build_drift(c1, c2, params)
        max_re = float(np.max(model.eigenvalues_A.real))
        verdict = "stable" if model.stable else "unstable"
        print(f"direct couplings: {verdict} (max Re eigenvalue {_fmt(max_re)} rad/s)")
        return
    roots = meanfield.solve_meanfield(params)
    for i, amp in enumerate(roots):
        c1 = meanfield.effective_couplings(amp, params, 1)
        c2 = meanfield.effective_couplings(amp, params, 2)
        model = dynamics.build_drift(c1, c2, params)
        max_re = float(np.max(model.eigenvalues_A.real))
        verdict = "stable" if model.stable else "unstable"
        print(
            f"branch {i} (|m1| = {abs(amp.m1):.6e}): {verdict} "
            f"(max Re eigenvalue {_fmt(max_re)} rad/s)"
        )


def _parse_axis(text: str) -> sweep.AxisSpec:
    key, sep, grid = text.partition("=")
    if not sep:
        raise UsageError(f"axis {text!r} is not KEY=START:STOP:COUNT")
    try:
        base, factor = parse_key(key)
    except ConfigError as exc:
        raise UsageError(str(exc)) from None
    parts = grid.split(":")
    if len(parts) != 3:
        raise UsageError(f"axis {text!r} needs START:STOP:COUNT")
    try:
        start, stop = float(parts[0]), float(parts[1])
        count = int(parts[2])
    except ValueError:
        raise UsageError(f"axis {text!r} has non-numeric grid values") from None
    return sweep.AxisSpec(name=base, start=start * factor, stop=stop * factor, count=count)


def _cmd_sweep(args, params: SystemParams) -> None:
    if len(args.axis) > 2:
        raise UsageError("at most two axes are supported")
    axes = [_parse_axis(a) for a in args.axis]
    outputs = None
    if args.outputs is not None:
        outputs = tuple(s.strip() for s in args.outputs.split(",") if s.strip())
    spec = sweep.SweepSpec(
        mode=args.mode,
        axis1=axes[0],
        axis2=axes[1] if len(axes) == 2 else None,
        fixed=params,
        branch_policy=args.branch_policy,
        outputs=outputs,
    )
    result = sweep.run_sweep(spec)
    table = sweep.emit_table(result, args.format)
    summary = _summarize(result)
    if args.output is None:
        sys.stdout.buffer.write(table)
        sys.stdout.buffer.flush()
        print(summary, file=sys.stderr)
    else:
        with open(args.output, "wb") as fh:
            fh.write(table)
        print(f"wrote {args.output} ({len(result.rows)} rows)")
        print(summary)


def _summarize(result: sweep.SweepResult) -> str:
    counts: dict[str, int] = {}
    for row in result.rows:
        counts[row[-1]] = counts.get(row[-1], 0) + 1
    parts = [f"{n} {s}" for s, n in sorted(counts.items())]
    if "E_m1m2" not in result.columns:
        return f"points: {', '.join(parts)}"
    col = result.columns.index("E_m1m2")
    best_row = None
    for row in result.rows:
        if row[col] is not None and (best_row is None or row[col] > best_row[col]):
            best_row = row
    if best_row is None:
        return f"points: {', '.join(parts)}; no stable points"
    n_axes = len(result.axes)
    coords = ", ".join(
        f"{name} = {_fmt(best_row[i] / TWO_PI / 1e6)} MHz (/2pi)"
        if name not in ("power", "temperature", "rabi")
        else f"{name} = {_fmt(best_row[i])}"
        for i, (name, _) in enumerate(result.axes[:n_axes])
    )
    return f"points: {', '.join(parts)}; max E_m1m2 = {best_row[col]:.6f} at {coords}"


if __name__ == "__main__":
    sys.exit(main())
