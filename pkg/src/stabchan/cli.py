"""Command-line front end.

Every subcommand prints one JSON report (``"schema": "stabchan/1"``) on
stdout.  Exit codes: 0 success, 1 a requested verification failed, 2 invalid
input, 3 numerical failure.  ``STABCHAN_TOL`` overrides the default check
tolerance of 1e-9.
"""
import argparse
import csv
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import channel as ch
from . import jsonio, qmat, scattering, sdpcert, stabilizer as st
from .jsonio import SCHEMA, FormatError, matrix_to_json

EXIT_OK, EXIT_FAILED, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2, 3
DEFAULT_TOL = 1e-9
TRACE_HEADER = ("n", "p_n", "weight_B", "dist_to_sigma")

INVALID_INPUT = (FormatError, qmat.MatrixError, st.ValidityError, st.DomainError, ValueError)
NUMERICAL = (qmat.EigenSolverError, ch.NoFixedPointError, sdpcert.OracleError,
             np.linalg.LinAlgError, ArithmeticError)


class VerificationFailed(Exception):
    def __init__(self, report):
        super().__init__(report.get("failure", "verification failed"))
        self.report = report


def check_tol() -> float:
    raw = os.environ.get("STABCHAN_TOL")
    if raw is None:
        return DEFAULT_TOL
    try:
        tol = float(raw)
    except ValueError:
        raise FormatError(f"STABCHAN_TOL must be a number, got {raw!r}") from None
    if not np.isfinite(tol) or tol <= 0:
        raise FormatError(f"STABCHAN_TOL must be positive and finite, got {raw!r}")
    return tol


def _matrix(path, what):
    try:
        return jsonio.matrix_from_json(jsonio.load_json(path))
    except FormatError as exc:
        raise FormatError(f"{what}: {exc}") from None


def _state(path, what):
    try:
        return qmat.as_density(_matrix(path, what), name=what)
    except qmat.MatrixError as exc:
        raise FormatError(str(exc)) from None


def _hermitian(path, what):
    try:
        return qmat.as_hermitian(_matrix(path, what), name=what)
    except qmat.MatrixError as exc:
        raise FormatError(str(exc)) from None


def _finite(value, what):
    if not np.isfinite(value):
        raise FormatError(f"{what} must be finite, got {value!r}")
    return value


def cmd_gibbs(args):
    h = _hermitian(args.hamiltonian, "hamiltonian")
    beta = _finite(args.beta, "beta")
    rho = qmat.gibbs(h, beta)
    jsonio.dump_json(matrix_to_json(rho), args.out)
    return {"state": matrix_to_json(rho), "out": str(args.out)}


def cmd_min_channel(args):
    sigma = _state(args.sigma, "sigma")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", st.DegenerateSpectrumWarning)
        target = st.StabilizerTarget.from_state(sigma)
    choi = st.min_choi(target)
    jsonio.dump_json(jsonio.channel_to_json(choi), args.out)
    report = {"trace": float(np.trace(choi.mat).real), "lambda_max": target.lambda_max,
              "degenerate": target.degenerate, "out": str(args.out)}
    if target.degenerate:
        report["warning"] = "largest eigenvalue is degenerate; v_max chosen by tie-break"
    return report


def cmd_tp_channel(args):
    tol = check_tol()
    sigma = _state(args.sigma, "sigma")
    b = _state(args.completion, "completion")
    fam = st.FamilyChannel.build(st.StabilizerTarget.from_state(sigma, warn=False), b)
    choi = fam.choi()
    jsonio.dump_json(jsonio.channel_to_json(choi), args.out)
    tp = ch.is_trace_preserving(choi, tol)
    cp = ch.is_completely_positive(choi, tol)
    report = {"tp": tp.ok, "tp_defect": tp.defect, "cp": cp.ok,
              "min_eigenvalue": cp.min_eigenvalue, "overlap_q": fam.overlap_q,
              "out": str(args.out)}
    if not tp.ok or (args.require_cp and not cp.ok):
        report["failure"] = "channel is not trace preserving" if not tp.ok \
            else "channel is not completely positive"
        raise VerificationFailed(report)
    return report


def cmd_apply(args):
    c = jsonio.channel_from_json(jsonio.load_json(args.channel))
    rho = _state(args.rho, "rho")
    out = ch.apply_choi(c, rho)
    out = (out + out.conj().T) / 2
    if args.out:
        jsonio.dump_json(matrix_to_json(out), args.out)
    return {"state": matrix_to_json(out), "trace": float(np.trace(out).real)}


def write_trace_csv(trace, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for n, p, w, dist in trace.rows():
            writer.writerow([n, repr(p), repr(w), repr(dist)])


def trace_to_json(trace):
    return {"overlap_q": trace.overlap_q, "stagnant": trace.stagnant,
            "steps": [{"n": s.n, "p_n": s.p_n, "weight_B": s.weight_B,
                       "dist_to_sigma": s.dist_to_sigma, "state": matrix_to_json(s.state)}
                      for s in trace.steps]}


def cmd_iterate(args):
    tol = check_tol()
    sigma = _state(args.sigma, "sigma")
    b = _state(args.completion, "completion")
    rho0 = _state(args.rho0, "rho0")
    if args.steps < 0:
        raise FormatError("--steps must be non-negative")
    h_y = taus = None
    if (args.hy is None) != (args.taus is None):
        raise FormatError("--hy and --taus must be given together")
    if args.hy is not None:
        h_y = _hermitian(args.hy, "hy")
        taus = jsonio.real_list(jsonio.load_json(args.taus), "taus")
    fam = st.FamilyChannel.build(st.StabilizerTarget.from_state(sigma, warn=False), b)
    trace = st.iterate(fam, rho0, args.steps, h_y=h_y, taus=taus, tol=tol)
    write_trace_csv(trace, args.trace_out)
    if args.json_out:
        jsonio.dump_json(trace_to_json(trace), args.json_out)
    final = trace.final
    return {"steps": args.steps, "overlap_q": fam.overlap_q,
            "final_dist": final.dist_to_sigma, "final_weight_B": final.weight_B,
            "converged": final.dist_to_sigma <= tol, "stagnant": trace.stagnant,
            "trace_out": str(args.trace_out)}


def cmd_verify_sdp(args):
    sigma = _state(args.sigma, "sigma")
    cert = sdpcert.certify_optimality(sigma, args.tol)
    report = cert.to_json()
    report["lambda_max"] = 1.0 / cert.primal_trace
    if args.oracle:
        oracle = sdpcert.brute_force_min_trace(sigma, budget=args.budget, seed=args.seed)
        report["oracle"] = {"value": oracle.value, "warm_value": oracle.warm_value,
                            "cold_value": oracle.cold_value, "seed": args.seed,
                            "evaluations": oracle.evaluations}
    if not cert.certified:
        raise VerificationFailed(report)
    return report


def cmd_verify_channel(args):
    tol = check_tol()
    c = jsonio.channel_from_json(jsonio.load_json(args.channel))
    tp = ch.is_trace_preserving(c, tol)
    cp = ch.is_completely_positive(c, tol)
    report = {"d_out": c.d_out, "d_in": c.d_in, "tp": tp.ok, "tp_defect": tp.defect,
              "cp": cp.ok, "min_eigenvalue": cp.min_eigenvalue}
    failures = [name for name, ok in (("trace preservation", tp.ok),
                                      ("complete positivity", cp.ok)) if not ok]
    if c.square:
        try:
            fp = ch.fixed_point(c)
            report["fixed_point"] = {"state": matrix_to_json(fp.state), "unique": fp.unique,
                                     "multiplicity": fp.multiplicity}
        except ch.NoFixedPointError as exc:
            report["fixed_point"] = {"error": str(exc)}
    if args.sigma:
        sigma = _state(args.sigma, "sigma")
        if sigma.shape != (c.d_in, c.d_in):
            raise FormatError(f"sigma must be {c.d_in}x{c.d_in}")
        residual = float(np.max(np.abs(ch.apply_choi(c, sigma) - sigma)))
        member = st.is_in_family(c, st.StabilizerTarget.from_state(sigma, warn=False), tol)
        report["stabilizes"] = residual <= tol
        report["stabilization_residual"] = residual
        report["in_family"] = member.ok
        if member.ok:
            report["completion"] = matrix_to_json(member.completion)
        else:
            report["family_reason"] = member.reason
        if residual > tol:
            failures.append("stabilization")
    if failures:
        report["failure"] = ", ".join(failures)
        raise VerificationFailed(report)
    return report


def cmd_collision(args):
    tol = check_tol()
    try:
        spec = jsonio.collision_from_json(jsonio.load_json(args.spec))
    except qmat.MatrixError as exc:
        raise FormatError(f"spec: {exc}") from None
    h_y = _hermitian(args.hy, "hy")
    beta = _finite(args.beta, "beta")
    choi = scattering.collision_choi(spec)
    if args.out:
        jsonio.dump_json(jsonio.channel_to_json(choi), args.out)
    kraus = scattering.collision_kraus(spec)
    completeness = float(np.max(np.abs(kraus.completeness() - np.eye(spec.d_Y))))
    rep = scattering.thermal_membership(spec, h_y, beta, tol)
    return {
        "channel": jsonio.channel_to_json(choi),
        "kraus_count": len(kraus),
        "completeness_defect": completeness,
        "thermal_state": matrix_to_json(rep.thermal_state),
        "fixed_point": {
            "state": None if rep.fixed_point is None else matrix_to_json(rep.fixed_point),
            "unique": rep.fixed_point_unique,
            "multiplicity": rep.fixed_point_multiplicity,
            "distance_to_thermal": rep.fixed_point_distance,
            "fixed_point_match": rep.fixed_point_match,
        },
        "membership": {
            "in_family": rep.in_family,
            "B": None if rep.completion is None else matrix_to_json(rep.completion),
            "reason": rep.reason,
        },
    }


def build_parser():
    parser = argparse.ArgumentParser(prog="stabchan", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gibbs", help="thermal state exp(-beta H)/Z")
    p.add_argument("--hamiltonian", required=True, type=Path)
    p.add_argument("--beta", required=True, type=float)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=cmd_gibbs)

    p = sub.add_parser("min-channel", help="minimum-trace stabilizer Choi matrix")
    p.add_argument("--sigma", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=cmd_min_channel)

    p = sub.add_parser("tp-channel", help="trace-preserving family member C[sigma, B]")
    p.add_argument("--sigma", required=True, type=Path)
    p.add_argument("--completion", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--require-cp", action="store_true",
                   help="exit 1 if the channel is not completely positive")
    p.set_defaults(func=cmd_tp_channel)

    p = sub.add_parser("apply", help="apply a channel to a state")
    p.add_argument("--channel", required=True, type=Path)
    p.add_argument("--rho", required=True, type=Path)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("iterate", help="iterate C[sigma, B] and write a CSV trace")
    p.add_argument("--sigma", required=True, type=Path)
    p.add_argument("--completion", required=True, type=Path)
    p.add_argument("--rho0", required=True, type=Path)
    p.add_argument("--steps", required=True, type=int)
    p.add_argument("--hy", type=Path, help="free-evolution Hamiltonian (matrix JSON)")
    p.add_argument("--taus", type=Path, help="JSON list of free-evolution durations")
    p.add_argument("--trace-out", required=True, type=Path)
    p.add_argument("--json-out", type=Path, help="per-step states as JSON")
    p.set_defaults(func=cmd_iterate)

    p = sub.add_parser("verify-sdp", help="certify the minimum-trace optimum")
    p.add_argument("--sigma", required=True, type=Path)
    p.add_argument("--tol", type=float, default=sdpcert.CERT_TOL)
    p.add_argument("--oracle", action="store_true", help="add the brute-force value (d <= 3)")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--budget", type=int, default=3000)
    p.set_defaults(func=cmd_verify_sdp)

    p = sub.add_parser("verify-channel", help="TP/CP/fixed-point checks for a channel")
    p.add_argument("--channel", required=True, type=Path)
    p.add_argument("--sigma", type=Path, help="also check stabilization and family membership")
    p.set_defaults(func=cmd_verify_channel)

    p = sub.add_parser("collision", help="collision channel and thermal membership")
    p.add_argument("--spec", required=True, type=Path)
    p.add_argument("--hy", required=True, type=Path)
    p.add_argument("--beta", required=True, type=float)
    p.add_argument("--out", type=Path, help="write the collision Choi matrix here")
    p.set_defaults(func=cmd_collision)
    return parser


def _emit(command, status, body, stream=None):
    doc = {"schema": SCHEMA, "command": command, "status": status}
    doc.update(body)
    print(json.dumps(doc, indent=2, allow_nan=False), file=stream or sys.stdout)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        report = args.func(args)
    except VerificationFailed as exc:
        _emit(args.command, "failed", exc.report)
        return EXIT_FAILED
    except INVALID_INPUT as exc:
        _emit(args.command, "invalid-input", {"error": str(exc)})
        print(f"stabchan {args.command}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NUMERICAL as exc:
        _emit(args.command, "numerical-failure", {"error": str(exc)})
        print(f"stabchan {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    _emit(args.command, "ok", report)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
