"""Command-line front end.

Subcommands: validate, stationary, stability, simulate, krein,
counterexample, scan.  Every subcommand has a machine-readable JSON mode
(``--json PATH``, ``-`` for stdout); the human text output formats the same
data.  Exit codes: 0 success, 1 analysis ran with a negative verdict,
2 input error, 3 numeric error.  Output files are written atomically and all
numeric output is deterministic given the inputs and ``--seed``.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import dynamics, figures, model, reduction, stability, stationary
from .errors import BlowUpError, DomainError, InputError, NpdtError, NumericError

__all__ = ["CommandResult", "run", "main"]

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT = 2
EXIT_NUMERIC = 3


@dataclass
class CommandResult:
    exit_code: int
    artifacts: list = field(default_factory=list)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); surface as InputError
        raise InputError(message)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _atomic_write(path: str, text: str) -> str:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".npdt-tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _emit_json(obj, target, artifacts):
    text = json.dumps(obj, indent=2) + "\n"
    if target == "-":
        sys.stdout.write(text)
    else:
        _atomic_write(target, text)
        artifacts.append(target)


def _complex_pairs(zs):
    return [[z.real, z.imag] for z in np.asarray(zs, dtype=complex)]


def _build_parser() -> _Parser:
    parser = _Parser(prog="npdt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--json", metavar="PATH", help="write a JSON report (- for stdout)")
        sp.add_argument("--seed", type=int, default=0, help="seed for randomized pieces")

    sp = sub.add_parser("validate", help="check the structural assumptions of a model")
    sp.add_argument("model")
    add_common(sp)

    sp = sub.add_parser("stationary", help="construct the positive equilibrium")
    sp.add_argument("model")
    add_common(sp)

    sp = sub.add_parser("stability", help="run the full stability decision ladder")
    sp.add_argument("model")
    sp.add_argument("--plot", metavar="PNG", help="render the linearization spectrum")
    add_common(sp)

    sp = sub.add_parser("simulate", help="integrate the population equation")
    sp.add_argument("model")
    sp.add_argument("--u0", required=True, help='initial state: file, "star", or "perturbed:EPS"')
    sp.add_argument("--t-end", type=float, required=True, dest="t_end")
    sp.add_argument("--rtol", type=float, default=1e-8)
    sp.add_argument("--atol", type=float, default=1e-10)
    sp.add_argument("--samples", type=int, default=400)
    sp.add_argument("--csv", metavar="PATH", help="write the trajectory CSV")
    sp.add_argument("--diagnostics", metavar="PATH", help="write the diagnostics CSV")
    sp.add_argument("--plot", metavar="PNG", help="render the trajectory")
    add_common(sp)

    sp = sub.add_parser("krein", help="secular-function spectral localization")
    sp.add_argument("model")
    sp.add_argument("--plot", metavar="PNG", help="render spectrum and secular roots")
    add_common(sp)

    sp = sub.add_parser("counterexample", help="reproduce a published counterexample")
    sp.add_argument("case", choices=["one", "two", "nonexistence"])
    sp.add_argument("--D", type=float, default=0.01, help="diffusion rate (nonexistence)")
    add_common(sp)

    sp = sub.add_parser("scan", help="parameter scan for stability crossings")
    sp.add_argument("family")
    sp.add_argument("--steps", type=int, required=True)
    sp.add_argument("--plot", metavar="PNG", help="render the stability margin curve")
    add_common(sp)
    return parser


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_validate(args) -> CommandResult:
    spec = model.load_model(args.model)
    report = model.validate_model(spec)
    artifacts = []
    payload = {
        "essentially_nonnegative": report.essentially_nonnegative,
        "irreducible": report.irreducible,
        "zero_row_sum": report.zero_row_sum,
        "positive_coefficients": report.positive_coefficients,
        "passed": report.passed,
        "messages": report.messages,
    }
    if args.json:
        _emit_json(payload, args.json, artifacts)
    else:
        for key in ("essentially_nonnegative", "irreducible", "zero_row_sum", "positive_coefficients"):
            print(f"{key}: {payload[key]}")
        for msg in report.messages:
            print(f"  - {msg}")
        print(f"passed: {report.passed}")
    return CommandResult(EXIT_OK if report.passed else EXIT_NEGATIVE, artifacts)


def _cmd_stationary(args) -> CommandResult:
    spec = model.load_model(args.model)
    st = stationary.solve_stationary(spec)
    artifacts = []
    payload = {
        "u_star": st.u_star.tolist(),
        "lambda1": st.lambda1,
        "amplitude": st.amplitude,
        "residual": st.residual,
    }
    if args.json:
        _emit_json(payload, args.json, artifacts)
    else:
        print("u_star: " + " ".join(_fmt(x) for x in st.u_star))
        print(f"lambda1: {_fmt(st.lambda1)}")
        print(f"amplitude: {_fmt(st.amplitude)}")
        print(f"residual: {st.residual:.6e}")
    return CommandResult(EXIT_OK, artifacts)


_POSITIVE_VERDICTS = (stability.VERDICT_GAS, stability.VERDICT_LAS, stability.VERDICT_LINEAR)


def _cmd_stability(args) -> CommandResult:
    spec = model.load_model(args.model)
    rep = stability.stability_verdict(spec, seed=args.seed)
    artifacts = []
    payload = stability.stability_report_to_dict(rep)
    if args.json:
        _emit_json(payload, args.json, artifacts)
    else:
        print(f"verdict: {rep.verdict}")
        print(f"min real part of linearization: {_fmt(rep.min_real_part)}")
        print(f"linearly stable: {rep.linearly_stable}")
        sigma2 = "inf" if math.isinf(rep.sigma2) else _fmt(rep.sigma2)
        print(f"sigma2: {sigma2}")
        print("checks:")
        for c in rep.checks:
            detail = ", ".join(f"{k}={v:.6g}" for k, v in c.numeric_evidence.items())
            print(f"  {c.id:6s} {c.holds:15s} {detail}")
    if args.plot:
        artifacts.append(
            figures.spectrum_figure(rep.linearization_spectrum.eigenvalues, args.plot)
        )
    code = EXIT_OK if rep.verdict in _POSITIVE_VERDICTS else EXIT_NEGATIVE
    return CommandResult(code, artifacts)


def _parse_u0(arg: str, spec, seed: int) -> np.ndarray:
    if arg == "star":
        return stationary.solve_stationary(spec).u_star
    if arg.startswith("perturbed:"):
        try:
            eps = float(arg.split(":", 1)[1])
        except ValueError as exc:
            raise InputError(f"malformed --u0 {arg!r}") from exc
        u_star = stationary.solve_stationary(spec).u_star
        rng = np.random.default_rng(seed)
        q = rng.standard_normal(spec.n)
        q /= max(np.abs(q).max(), 1e-300)
        u0 = u_star * (1.0 + eps * q)
        if (u0 < 0).any():
            raise InputError(f"perturbation eps={eps} leaves the nonnegative cone")
        return u0
    try:
        with open(arg, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        u0 = np.asarray(data, dtype=float)
    except OSError as exc:
        raise InputError(f"cannot read initial state file {arg}: {exc}") from exc
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise InputError(f"initial state file {arg} must hold a JSON array: {exc}") from exc
    if u0.shape != (spec.n,):
        raise InputError(f"initial state has shape {u0.shape}, expected ({spec.n},)")
    return u0


def _trajectory_csv(traj) -> str:
    n = traj.states.shape[1]
    lines = ["t," + ",".join(f"u_{i + 1}" for i in range(n))]
    for t, row in zip(traj.times, traj.states):
        lines.append(_fmt(t) + "," + ",".join(_fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def _diagnostics_csv(traj, diag) -> str:
    lines = ["t,l1,competition,lyapunov_h,energy_f,adjoint_mass"]
    for i, t in enumerate(traj.times):
        energy = "" if diag.energy_f is None else _fmt(diag.energy_f[i])
        lines.append(
            ",".join(
                [
                    _fmt(t),
                    _fmt(diag.l1_norm[i]),
                    _fmt(diag.competition[i]),
                    _fmt(diag.lyapunov_h[i]),
                    energy,
                    _fmt(diag.adjoint_mass[i]),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def _cmd_simulate(args) -> CommandResult:
    spec = model.load_model(args.model)
    u0 = _parse_u0(args.u0, spec, args.seed)
    artifacts = []
    blow_up = False
    try:
        traj = dynamics.integrate(
            spec, u0, args.t_end, rtol=args.rtol, atol=args.atol, samples=args.samples
        )
    except BlowUpError as exc:
        if exc.trajectory is None:
            raise
        traj = exc.trajectory
        blow_up = True
    diag = None
    if args.diagnostics or args.plot or args.json:
        st = stationary.solve_stationary(spec)
        red = reduction.reduce_model(spec, st)
        diag = dynamics.diagnostics(traj, st, red)
    if args.csv:
        artifacts.append(_atomic_write(args.csv, _trajectory_csv(traj)))
    if args.diagnostics:
        artifacts.append(_atomic_write(args.diagnostics, _diagnostics_csv(traj, diag)))
    if args.plot:
        artifacts.append(figures.trajectory_figure(traj, args.plot, diag=diag))
    payload = {
        "t_final": float(traj.times[-1]) if traj.times.size else 0.0,
        "final_state": traj.states[-1].tolist() if traj.states.size else [],
        "blow_up": blow_up,
        "integrator_stats": {
            k: (bool(v) if isinstance(v, bool) else float(v))
            for k, v in traj.integrator_stats.items()
        },
    }
    if args.json:
        _emit_json(payload, args.json, artifacts)
    else:
        print(f"integrated to t = {payload['t_final']:.6g} "
              f"({traj.integrator_stats['steps']} steps, "
              f"{traj.integrator_stats['rejections']} rejections)")
        if blow_up:
            print("status: blow-up (state norm exceeded threshold); partial output written")
        if traj.states.size:
            print("final state: " + " ".join(_fmt(x) for x in traj.states[-1]))
    return CommandResult(EXIT_NEGATIVE if blow_up else EXIT_OK, artifacts)


def _cmd_krein(args) -> CommandResult:
    spec = model.load_model(args.model)
    st = stationary.solve_stationary(spec)
    red = reduction.reduce_model(spec, st)
    rep = stability.krein_roots(red)
    artifacts = []
    payload = {
        "roots": _complex_pairs(rep.roots),
        "combined": _complex_pairs(rep.combined),
        "direct": _complex_pairs(rep.direct),
        "max_mismatch": rep.max_mismatch,
    }
    if args.json:
        _emit_json(payload, args.json, artifacts)
    else:
        print("secular roots:")
        for z in rep.roots:
            print(f"  {z.real:+.10g} {z.imag:+.10g}i")
        print(f"retained eigenvalues: {len(rep.combined) - len(rep.roots)}")
        print(f"max mismatch vs dense spectrum: {rep.max_mismatch:.3e}")
    if args.plot:
        artifacts.append(figures.spectrum_figure(rep.direct, args.plot, roots=rep.roots))
    return CommandResult(EXIT_OK, artifacts)


def _cmd_counterexample(args) -> CommandResult:
    artifacts = []
    if args.case == "nonexistence":
        rep = stationary.nonexistence_report(args.D)
        payload = {
            "D": rep.D,
            "omega_volume": rep.omega_volume,
            "total_mass": rep.total_mass,
            "density_l1": rep.density_l1,
            "atomic_mass": rep.atomic_mass,
            "valid": rep.valid,
        }
        if args.json:
            _emit_json(payload, args.json, artifacts)
        else:
            for key, val in payload.items():
                print(f"{key}: {val if isinstance(val, bool) else _fmt(val)}")
        return CommandResult(EXIT_OK if rep.valid else EXIT_NEGATIVE, artifacts)

    spec = model.build_counterexample(args.case)
    st = stationary.solve_stationary(spec)
    red = reduction.reduce_model(spec, st)
    L = stability.linearization(red)
    from .operators import spectrum as dense_spectrum

    ev = dense_spectrum(L, want_vectors=False).eigenvalues
    angle = stability.check_angle_condition(red.b_tilde, red.c_tilde, red.measure)
    payload = {
        "name": spec.name,
        "model": model.model_to_dict(spec),
        "u_star": st.u_star.tolist(),
        "reduced_generator": red.M.ravel().tolist(),
        "linearization_spectrum": _complex_pairs(ev),
        "angle_condition": {
            "holds": angle.holds,
            "lhs": angle.numeric_evidence["lhs"],
            "rhs": angle.numeric_evidence["rhs"],
            "margin": angle.numeric_evidence["margin"],
        },
    }
    if args.json:
        _emit_json(payload, args.json, artifacts)
    else:
        print(f"counterexample: {spec.name}")
        print("u_star: " + " ".join(_fmt(x) for x in st.u_star))
        print("linearization spectrum:")
        for z in ev:
            print(f"  {z.real:+.6f} {z.imag:+.6f}i")
        print(
            "angle condition margin (lhs - rhs): "
            f"{_fmt(angle.numeric_evidence['margin'])} ({angle.holds})"
        )
    return CommandResult(EXIT_OK, artifacts)


def _cmd_scan(args) -> CommandResult:
    try:
        with open(args.family, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read family file {args.family}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"family file is not valid JSON: {exc}") from exc
    family, lo, hi = dynamics.family_from_dict(obj)
    result = dynamics.hopf_scan(family, lo, hi, args.steps)
    artifacts = []
    payload = {
        "thetas": result.thetas.tolist(),
        "min_real_parts": [None if math.isnan(x) else x for x in result.min_real_parts],
        "crossings": [
            {
                "theta": c.theta,
                "kind": c.kind,
                "imag_part": c.imag_part,
                "bracket": list(c.bracket),
            }
            for c in result.crossings
        ],
        "gaps": result.gaps,
    }
    if args.json:
        _emit_json(payload, args.json, artifacts)
    else:
        print(f"scanned {result.thetas.size} parameter values")
        for c in result.crossings:
            print(
                f"crossing at theta = {c.theta:.6f} ({c.kind}, |Im| = {c.imag_part:.6g},"
                f" bracket {c.bracket})"
            )
        if not result.crossings:
            print("no stability crossings found")
        for g in result.gaps:
            print(f"gap at theta = {g:.6f} (equilibrium solve failed)")
    if args.plot:
        artifacts.append(figures.scan_figure(result, args.plot))
    return CommandResult(EXIT_OK, artifacts)


_HANDLERS = {
    "validate": _cmd_validate,
    "stationary": _cmd_stationary,
    "stability": _cmd_stability,
    "simulate": _cmd_simulate,
    "krein": _cmd_krein,
    "counterexample": _cmd_counterexample,
    "scan": _cmd_scan,
}


def run(argv) -> CommandResult:
    """Execute one CLI invocation; never raises for contract error classes."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _HANDLERS[args.command](args)
    except (InputError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CommandResult(EXIT_INPUT)
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return CommandResult(EXIT_NUMERIC)
    except NpdtError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CommandResult(EXIT_INPUT)
    except SystemExit as exc:  # argparse --help
        return CommandResult(int(exc.code or 0))


def main() -> None:
    sys.exit(run(sys.argv[1:]).exit_code)


if __name__ == "__main__":
    main()
