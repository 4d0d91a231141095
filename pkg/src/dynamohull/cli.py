"""Command-line front end: verification campaigns, point queries, exports.

Exit codes are a stable contract: 0 success, 1 mathematical failure
(membership violation, failed decomposition, convergence ratio below 3),
2 usage or parse error.  All randomized commands print the effective seed,
and --deterministic suppresses the timestamp so reports are byte-stable.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from datetime import datetime, timezone

from .core import (
    ConeKind,
    HullParams,
    Tolerances,
    Triple,
    Vec3,
    eval_g1,
    eval_g2,
    eval_g3,
    in_hull,
    in_wave_cone,
)
from .laminate import NotInHullError, decompose, verify_decomposition
from .oracle import (
    SampleConfig,
    sample_K,
    sample_first_laminate,
    sample_hull,
    two_sided_hull_check,
    write_samples_csv,
)
from .planewave import refinement_study, round_to_lattice, wave_vector_for

USAGE_ERROR = 2
MATH_FAILURE = 1

# Cone directions with small-integer lattice frequencies and a genuinely
# second-order truncation term in every equation; used by `residual`.
_RESIDUAL_DIRECTIONS = {
    "shared": Triple(Vec3(6, -3, -1), Vec3(1, 2, -1), Vec3(1, 2, 0)),
    "stationary-incompressible": Triple(Vec3(6, -3, -1), Vec3(2, -1, 3), Vec3(1, 2, 0)),
}


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--r", type=float, default=1.0, help="magnetic amplitude radius (default 1)")
    parser.add_argument("--s", type=float, default=1.0, help="velocity amplitude radius (default 1)")
    parser.add_argument("--kind", default="nonstationary",
                        choices=[k.value for k in ConeKind],
                        help="system variant (default nonstationary)")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    parser.add_argument("--count", type=int, default=10_000,
                        help="sample count (default 10000)")
    parser.add_argument("--tol", type=float, default=None,
                        help="membership slack eps_mem override (default 1e-9)")
    parser.add_argument("--output", default=None, help="output path (default stdout)")
    parser.add_argument("--format", default="json", choices=["json", "csv"],
                        help="output format (default json)")
    parser.add_argument("--deterministic", action="store_true",
                        help="suppress the timestamp so reports are byte-identical")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynamohull",
        description="Verify and export the relaxed set of the ideal-Ohm "
                    "constraint equations.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-hull", help="two-sided membership/decomposition campaign")
    _add_common(p)

    p = sub.add_parser("decompose", help="decompose one triple read as JSON")
    _add_common(p)
    p.add_argument("--input", default="-", help="triple JSON path, or - for stdin")

    p = sub.add_parser("wavecone", help="cone membership verdict for one triple")
    _add_common(p)
    p.add_argument("--input", default="-", help="triple JSON path, or - for stdin")

    p = sub.add_parser("sample", help="export sampled triples")
    _add_common(p)
    p.add_argument("--sampler", default="laminate",
                   choices=["constraint", "laminate", "hull"],
                   help="which set to sample (default laminate)")

    p = sub.add_parser("residual", help="plane-wave grid residual convergence table")
    _add_common(p)
    p.add_argument("--n", type=int, default=32,
                   help="finest grid points per axis; levels n/4, n/2, n (default 32)")
    return parser


def _tolerances(args) -> Tolerances:
    if args.tol is None:
        return Tolerances()
    return Tolerances(eps_mem=args.tol)


def _params(args, parser: argparse.ArgumentParser) -> HullParams:
    try:
        return HullParams(args.r, args.s)
    except ValueError as exc:
        parser.error(str(exc))
        raise AssertionError("unreachable")


def _emit_text(args, text: str):
    if args.output:
        with open(args.output, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, payload: dict):
    if not args.deterministic:
        payload = {**payload,
                   "generated_at": datetime.now(timezone.utc).isoformat()}
    _emit_text(args, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _read_triple(args) -> Triple:
    if args.input == "-":
        text = sys.stdin.read()
    else:
        with open(args.input) as f:
            text = f.read()
    return Triple.from_json(text)


def _cmd_verify_hull(args, parser) -> int:
    p = _params(args, parser)
    tol = _tolerances(args)
    cfg = SampleConfig(seed=args.seed, count=args.count, params=p,
                       kind=ConeKind.from_label(args.kind))
    report = two_sided_hull_check(cfg, tol)
    _emit_json(args, report.to_json_dict())
    return 0 if report.failure_count == 0 else MATH_FAILURE


def _cmd_decompose(args, parser) -> int:
    p = _params(args, parser)
    tol = _tolerances(args)
    kind = ConeKind.from_label(args.kind)
    z = _read_triple(args)
    try:
        d = decompose(z, p, kind, tol)
    except NotInHullError as exc:
        payload = {"error": "not-in-hull", "message": str(exc)}
        if exc.witness is not None:
            payload["witness"] = exc.witness.to_json_dict()
        _emit_json(args, payload)
        return MATH_FAILURE
    ver = verify_decomposition(d, z, p, kind, tol)
    payload = d.to_json_dict(residuals=ver.residuals)
    payload["passed"] = ver.passed
    payload["max_residual"] = ver.max_residual
    _emit_json(args, payload)
    return 0 if ver.passed else MATH_FAILURE


def _cmd_wavecone(args, parser) -> int:
    tol = _tolerances(args)
    kind = ConeKind.from_label(args.kind)
    z = _read_triple(args)
    verdict = in_wave_cone(z, kind, tol)
    payload = {
        "verdict": "in-cone" if verdict else "not-in-cone",
        "kind": kind.label,
        "g1": eval_g1(z),
    }
    if kind.restricts_u:
        payload["g3"] = eval_g3(z)
    _emit_json(args, payload)
    return 0


def _cmd_sample(args, parser) -> int:
    p = _params(args, parser)
    tol = _tolerances(args)
    kind = ConeKind.from_label(args.kind)
    cfg = SampleConfig(seed=args.seed, count=args.count, params=p, kind=kind)
    sampler = {"constraint": sample_K, "laminate": sample_first_laminate,
               "hull": sample_hull}[args.sampler]
    if args.format == "csv":
        buf = io.StringIO()
        write_samples_csv(buf, sampler(cfg), p, kind, tol)
        _emit_text(args, buf.getvalue())
        return 0
    rows = []
    for z in sampler(cfg):
        row = z.to_json_dict()
        row["in_hull"] = in_hull(z, p, kind, tol)
        row["g1"] = eval_g1(z)
        row["g2"] = eval_g2(z, p)
        row["g3"] = eval_g3(z)
        rows.append(row)
    _emit_json(args, {"seed": args.seed, "kind": kind.label, "sampler": args.sampler,
                      "samples": rows})
    return 0


def _cmd_residual(args, parser) -> int:
    if args.n < 16 or args.n % 4 != 0:
        parser.error(f"--n must be a multiple of 4 and at least 16, got {args.n}")
    tol = _tolerances(args)
    kind = ConeKind.from_label(args.kind)
    if kind is ConeKind.STATIONARY_INCOMPRESSIBLE:
        direction = _RESIDUAL_DIRECTIONS["stationary-incompressible"]
        xi = wave_vector_for(direction, kind, tol)
    elif kind is ConeKind.NONSTATIONARY:
        direction = _RESIDUAL_DIRECTIONS["shared"]
        # This coefficient pair lands exactly on the integer frequency (1,1,3;1).
        xi = wave_vector_for(direction, kind, tol, a=0.6, c=-0.2)
    else:
        direction = _RESIDUAL_DIRECTIONS["shared"]
        xi = wave_vector_for(direction, kind, tol)
    xi = round_to_lattice(xi, direction, kind, tol)
    levels = (args.n // 4, args.n // 2, args.n)
    study = refinement_study(direction, xi, kind, levels)
    study["direction"] = direction.to_json_dict()
    _emit_json(args, study)
    ok = all(ratio >= 3.0 for row in study["ratios"].values()
             for ratio in row if ratio is not None)
    return 0 if ok else MATH_FAILURE


_DISPATCH = {
    "verify-hull": _cmd_verify_hull,
    "decompose": _cmd_decompose,
    "wavecone": _cmd_wavecone,
    "sample": _cmd_sample,
    "residual": _cmd_residual,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_ERROR
    try:
        return _DISPATCH[args.command](args, parser)
    except SystemExit as exc:  # parser.error inside a command
        return exc.code if isinstance(exc.code, int) else USAGE_ERROR
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


def console_main():
    sys.exit(main())


if __name__ == "__main__":
    console_main()
