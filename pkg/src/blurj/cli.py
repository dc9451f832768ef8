"""Command-line entry point: ``blurj eval | check | witness | phi | selftest``."""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

import numpy as np

from .modular_eval import DEFAULT_TOL, QSeries, TruncationError, eval_j, eval_j_jet, schwarzian_residual
from .modular_polys import build_phi
from .moebius import GroupKind, GroupSpec, ZetaDomainError
from .selftest import format_results, timed_selftest
from .variety import (
    Mode,
    Region,
    SamplingError,
    VarietyParseError,
    check_broad,
    check_free,
    parse_variety,
    sample_points,
)
from .witness import WitnessError, complex_pair, density_probe, find_witness_J, find_witness_j, intersection_dimension_audit

EXIT_OK = 0
EXIT_SELFTEST = 1
EXIT_INPUT = 2
EXIT_GATING = 3
EXIT_NUMERIC = 4

_COMPLEX_RE = re.compile(r"^[0-9eE.+\-ij ]+$")


class InputError(ValueError):
    pass


def parse_complex(text: str) -> complex:
    """Parse '0.1+1.2i', 'i', '-2i', '3' (i or j for the imaginary unit)."""
    s = text.strip().replace(" ", "").replace("i", "j")
    if not s or not _COMPLEX_RE.match(s):
        raise InputError(f"malformed complex number: {text!r}")
    # python wants a coefficient before j
    s = re.sub(r"(^|[+\-])j", r"\g<1>1j", s)
    try:
        return complex(s)
    except ValueError:
        raise InputError(f"malformed complex number: {text!r}") from None


def parse_bounds(text: str) -> list[int]:
    try:
        bounds = [int(float(b)) for b in text.split(",") if b.strip()]
    except ValueError:
        raise InputError(f"malformed bound list: {text!r}") from None
    if not bounds or any(b < 1 for b in bounds):
        raise InputError("bounds must be positive integers")
    return bounds


def _emit(payload: dict, output: str | None):
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _series(args) -> QSeries:
    return QSeries.j_series(args.series_order)


def cmd_eval(args) -> int:
    tau = parse_complex(args.tau)
    if tau.imag <= 0:
        raise InputError(f"tau = {args.tau} is not in the upper half-plane")
    series = _series(args)
    payload = {"schema": 1, "tau": complex_pair(tau)}
    if args.jet:
        jet = eval_j_jet(tau, tol=args.tol, series=series)
        payload.update(j=complex_pair(jet.j), j1=complex_pair(jet.j1), j2=complex_pair(jet.j2), j3=complex_pair(jet.j3))
        try:
            payload["psi_residual"] = complex_pair(schwarzian_residual(jet))
        except ZeroDivisionError:
            payload["psi_residual"] = None  # j' = 0 or j in {0, 1728}
    else:
        payload["j"] = complex_pair(eval_j(tau, tol=args.tol, series=series))
    _emit(payload, args.output)
    return EXIT_OK


def _load(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    return parse_variety(text)


def _audit(V, args):
    rng = np.random.default_rng(args.rng_seed)
    samples = sample_points(V, args.samples, Region(), rng)
    return check_broad(V, samples), check_free(V, samples, n_max=args.nmax), samples


def cmd_check(args) -> int:
    V = _load(args.file)
    broad, free, _ = _audit(V, args)
    payload = {
        "schema": 1,
        "mode": V.mode.value,
        "n": V.n,
        "broad": broad.broad,
        "free": free.free,
        "h_free": free.h_free,
        "broad_violations": [{"k": list(k), "dim": d, "required": r} for k, d, r in broad.violations],
        "free_reasons": free.reasons,
        "h_relations": [{"i": i, "k": k} for i, k, _ in free.h_relations] + [{"constant_z": z} for z in free.constant_z],
        "note": free.note,
    }
    _emit(payload, args.output)
    return EXIT_OK


def _gate(V, broad, free) -> str | None:
    prefix = V.mode.value
    if not broad.broad:
        k, d, r = broad.violations[0]
        return f"not {prefix}-broad: dim pr_{list(k)} V = {d} < {r}"
    if not free.free:
        return f"not {prefix}-free: " + "; ".join(free.reasons)
    return None


def cmd_witness(args) -> int:
    V = _load(args.file)
    broad, free, samples = _audit(V, args)
    reason = _gate(V, broad, free)
    if reason:
        print(f"blurj: gating failure, {reason}", file=sys.stderr)
        return EXIT_GATING
    series = _series(args)
    default_kind = GroupKind.G_CAL_Q if V.mode is Mode.j else GroupKind.SL2_GAUSSIAN
    kind = GroupKind(args.group) if args.group else default_kind
    tol = args.tol if args.tol is not None else (DEFAULT_TOL if V.mode is Mode.j else 1e-6)
    rng = np.random.default_rng([args.rng_seed, 1])

    if args.probe_density:
        seeds = sample_points(V, args.seeds, Region(), np.random.default_rng([args.rng_seed, 2]))
        probe = density_probe(V, [kind], seeds, parse_bounds(args.bounds), tol=tol, rng_seed=args.rng_seed, series=series)[0]
        for row in probe.table():
            print(row, file=sys.stderr)
        _emit(probe.to_dict(), args.output)
        return EXIT_OK

    if args.seed_point:
        seed = np.array([parse_complex(c) for c in args.seed_point.split(",")])
        if seed.shape != (V.arity,):
            raise InputError(f"--seed-point needs {V.arity} comma-separated coordinates")
    else:
        seed = samples[0]
    spec = GroupSpec(kind, args.den_bound)
    try:
        if V.mode is Mode.j:
            report = find_witness_j(V, spec, seed, tol=tol, rng=rng, series=series, max_candidates=args.candidates)
        else:
            report = find_witness_J(V, spec, seed, tol=tol, rng=rng, series=series)
    except ZetaDomainError as exc:
        print(f"blurj: seed outside the domain of zeta ({exc.exclusion}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except WitnessError as exc:
        if exc.report is not None:
            _emit(exc.report.to_dict(), args.output)
        print(f"blurj: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    payload = report.to_dict()
    audit = intersection_dimension_audit(V, report, tol=tol, series=series)
    payload["audit"] = {
        "isolated": audit.isolated,
        "min_singular_value": audit.min_singular_value,
        "predicted_dimension": audit.predicted_dimension,
    }
    _emit(payload, args.output)
    return EXIT_OK


def cmd_phi(args) -> int:
    if args.level < 1:
        raise InputError("level must be positive")
    text = build_phi(args.level, n_max=max(args.level, args.nmax)).to_text()
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_selftest(args) -> int:
    results, elapsed = timed_selftest(quick=args.quick, series=_series(args), seed=args.rng_seed, tol=args.tol)
    text = "\n".join(format_results(results, elapsed)) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if all(r.failed == 0 for r in results) else EXIT_SELFTEST


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--series-order", type=int, default=32, help="q-series coefficients kept (default 32)")
    common.add_argument("--nmax", type=int, default=5, help="largest modular-polynomial level checked")
    common.add_argument("--rng-seed", type=int, default=0)
    common.add_argument("--output", help="write the report here instead of stdout")

    parser = argparse.ArgumentParser(prog="blurj", description="Modular j, blurred graphs and their witnesses.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", parents=[common], help="evaluate j (and its jet) at tau")
    p.add_argument("--tau", required=True, help='point of the upper half-plane, e.g. "0.1+1.2i"')
    p.add_argument("--jet", action="store_true", help="also print j', j'', j''' and the Schwarzian residual")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("check", parents=[common], help="broad / free / H-free verdicts for a variety file")
    p.add_argument("file")
    p.add_argument("--samples", type=int, default=6)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("witness", parents=[common], help="find a point of V on the blurred graph")
    p.add_argument("file")
    p.add_argument("--group", choices=[k.value for k in GroupKind])
    p.add_argument("--den-bound", type=int, default=1000)
    p.add_argument("--seed-point", help="comma-separated coordinates z..., w... (p..., q... in J mode)")
    p.add_argument("--tol", type=float, default=None, help="residual tolerance (1e-8 j mode, 1e-6 J mode)")
    p.add_argument("--samples", type=int, default=6)
    p.add_argument("--candidates", type=int, default=16, help="subgroup elements tried per search")
    p.add_argument("--probe-density", action="store_true")
    p.add_argument("--bounds", default="10,100,1000,10000")
    p.add_argument("--seeds", type=int, default=10)
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("phi", parents=[common], help="print the modular polynomial of a level")
    p.add_argument("level", type=int)
    p.set_defaults(func=cmd_phi)

    p = sub.add_parser("selftest", parents=[common], help="run the invariant suite")
    p.add_argument("--quick", action="store_true")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, VarietyParseError) as exc:
        print(f"blurj: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SamplingError as exc:
        print(f"blurj: could not sample the variety: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        # caps, bad seeds and similar caller-side problems
        print(f"blurj: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (TruncationError, ArithmeticError) as exc:
        print(f"blurj: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
