"""Command-line interface.

Every subcommand prints a single JSON document on stdout (also on errors)
and a human-readable message on stderr.  Exit codes: 0 success, 2
validation error, 3 solver failure, 4 verification failure.  The env var
CW_SOLVER_TOL overrides the solver's relative gap tolerance.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .devices import Ensemble, Povm
from .dilation import (ComponentError, best_trivial_target,
                       certificate_for_component, is_extreme,
                       naimark_dilation, trivial_weight_analytic)
from .freesets import DeviceShape, FreeSetSpec, membership_check
from .games import GameError, game_from_witness, verify_ratio
from .jsonio import (ParseError, dumps, parse_device, serialize_certificate,
                     serialize_device, serialize_game,
                     serialize_weight_result)
from .solver.program import SolverFailure
from .weight import DecompositionError, compute_weight

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3
EXIT_VERIFICATION = 4


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _read_device(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(EXIT_VALIDATION, f"cannot read {path}: {exc}") from exc
    try:
        return parse_device(text)
    except ParseError as exc:
        raise CliError(EXIT_VALIDATION, str(exc)) from exc


def _free_set(args, device):
    kind = args.free_set
    split = None
    if getattr(args, "split", None):
        try:
            a, b = (int(t) for t in args.split.split(","))
        except ValueError as exc:
            raise CliError(EXIT_VALIDATION,
                           f"bad --split {args.split!r}") from exc
        split = (a, b)
    try:
        spec = FreeSetSpec(kind, split=split)
        spec.check_class(device)
    except ValueError as exc:
        raise CliError(EXIT_VALIDATION, str(exc)) from exc
    return spec


def _emit(doc, out_path=None) -> None:
    text = dumps(doc)
    print(text)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def cmd_weight(args) -> int:
    device = _read_device(args.device)
    spec = _free_set(args, device)
    try:
        result = compute_weight(device, spec)
    except SolverFailure as exc:
        raise CliError(EXIT_SOLVER, str(exc)) from exc
    _emit(serialize_weight_result(result, device), args.out)
    return EXIT_OK


def cmd_game(args) -> int:
    device = _read_device(args.device)
    spec = _free_set(args, device)
    try:
        result = compute_weight(device, spec)
        game = game_from_witness(result.witness, DeviceShape.of(device))
    except SolverFailure as exc:
        raise CliError(EXIT_SOLVER, str(exc)) from exc
    except GameError as exc:
        raise CliError(EXIT_VERIFICATION, str(exc)) from exc
    _emit(serialize_game(game), args.out)
    return EXIT_OK


def cmd_verify_ratio(args) -> int:
    device = _read_device(args.device)
    spec = _free_set(args, device)
    try:
        result = compute_weight(device, spec)
        report = verify_ratio(device, spec, result,
                              n_random_games=args.games, seed=args.seed)
    except SolverFailure as exc:
        raise CliError(EXIT_SOLVER, str(exc)) from exc
    except (GameError, DecompositionError) as exc:
        raise CliError(EXIT_VERIFICATION, str(exc)) from exc
    doc = {"schema_version": "1", "weight": report["weight"],
           "ratio": report["ratio"], "num": report["num"],
           "den": report["den"], "pass": bool(report["pass"]),
           "outside_payoff": report["outside_payoff"],
           "lower_bound_violation": report["lower_bound_violation"]}
    _emit(doc, args.out)
    if not report["pass"]:
        print("ratio identity failed", file=sys.stderr)
        return EXIT_VERIFICATION
    return EXIT_OK


def _read_povm(path: str) -> Povm:
    device = _read_device(path)
    if not isinstance(device, Povm):
        raise CliError(EXIT_VALIDATION,
                       f"{path} holds a {device.kind!r}, expected a povm")
    return device


def cmd_components(args) -> int:
    povm = _read_povm(args.povm)
    comp = _read_povm(args.component)
    try:
        dil = naimark_dilation(povm)
        cert = certificate_for_component(dil, comp)
    except (ComponentError, ValueError) as exc:
        raise CliError(EXIT_VERIFICATION, str(exc)) from exc
    _emit(serialize_certificate(cert), args.out)
    return EXIT_OK


def cmd_analytic(args) -> int:
    if args.povm and args.ensemble:
        raise CliError(EXIT_VALIDATION, "give either --povm or --ensemble")
    if args.povm:
        povm = _read_povm(args.povm)
        weight, dist = trivial_weight_analytic(povm)
        _emit({"schema_version": "1", "weight": float(weight),
               "distribution": [float(p) for p in dist]}, args.out)
        return EXIT_OK
    if args.ensemble:
        device = _read_device(args.ensemble)
        if not isinstance(device, Ensemble):
            raise CliError(EXIT_VALIDATION,
                           f"{args.ensemble} holds a {device.kind!r}, "
                           "expected an ensemble")
        try:
            n_polar, n_azimuth = (int(t) for t in args.grid.split("x"))
            bound, target = best_trivial_target(device, n_polar, n_azimuth)
        except ValueError as exc:
            raise CliError(EXIT_VALIDATION, str(exc)) from exc
        _emit({"schema_version": "1", "bound": float(bound),
               "target": (None if target is None
                          else serialize_device(target))}, args.out)
        return EXIT_OK
    raise CliError(EXIT_VALIDATION, "give --povm or --ensemble")


def cmd_extreme(args) -> int:
    povm = _read_povm(args.povm)
    extreme, nullity = is_extreme(povm)
    _emit({"schema_version": "1", "extreme": bool(extreme),
           "nullspace_dim": int(nullity)}, args.out)
    return EXIT_OK


def cmd_membership(args) -> int:
    device = _read_device(args.device)
    spec = _free_set(args, device)
    try:
        inside = membership_check(device, spec)
    except SolverFailure as exc:
        raise CliError(EXIT_SOLVER, str(exc)) from exc
    _emit({"schema_version": "1", "inside": bool(inside)}, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="convexweight",
        description="Convex weight of quantum devices, witnesses and "
                    "exclusion games.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_device_free(p):
        p.add_argument("--device", required=True, help="device JSON file")
        p.add_argument("--free-set", required=True,
                       choices=["trivial-ensemble", "trivial-povm", "jm",
                                "lhs", "ppt-state", "eb-ppt"])
        p.add_argument("--split", help="bipartition a,b for ppt-state")
        p.add_argument("--out", help="also write the JSON to this file")

    p = sub.add_parser("weight", help="convex weight, witness, components")
    add_device_free(p)
    p.set_defaults(func=cmd_weight)

    p = sub.add_parser("game", help="exclusion game from the optimal witness")
    add_device_free(p)
    p.set_defaults(func=cmd_game)

    p = sub.add_parser("verify-ratio", help="payoff ratio identity check")
    add_device_free(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--games", type=int, default=20,
                   help="random games for the lower-bound check")
    p.set_defaults(func=cmd_verify_ratio)

    p = sub.add_parser("components", help="component certificate of a POVM")
    p.add_argument("--povm", required=True)
    p.add_argument("--component", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_components)

    p = sub.add_parser("analytic", help="closed-form trivial weight / bound")
    p.add_argument("--povm")
    p.add_argument("--ensemble")
    p.add_argument("--grid", default="20x40",
                   help="polar x azimuth Bloch grid for --ensemble")
    p.add_argument("--out")
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("extreme", help="extremality of a POVM")
    p.add_argument("--povm", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_extreme)

    p = sub.add_parser("membership", help="free-set membership of a device")
    add_device_free(p)
    p.set_defaults(func=cmd_membership)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(dumps({"error": str(exc), "exit_code": exc.code}))
        print(str(exc), file=sys.stderr)
        return exc.code
    except Exception as exc:  # keep stdout machine readable
        print(dumps({"error": str(exc), "exit_code": EXIT_SOLVER}))
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
