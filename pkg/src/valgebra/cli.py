"""Command-line front end.

Exit codes: 0 success, 1 failed checks (verify-suite), 2 malformed input,
3 precondition violation, 4 non-convergence (the partial artifact is still
written).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import arith
from .dynamics import (
    InvariantTieError,
    PreconditionError,
    dynamical_degree_empirical,
    invariant_valuation,
    unit_volume_reference,
    vanishing_check,
)
from .geometry import DegenerateBody, DimensionMismatch, LinearMap, Polytope, ReferenceBody, ball_polytope
from .minkowski import (
    MinkowskiDataError,
    SolverConfig,
    SolverError,
    default_fan,
    fan_test_bodies,
    multistart_solution_set,
    stationarity_residual,
)
from .mixed import mixed_volume
from .suite import format_report, run_suite
from .valuation import (
    CONV_MODES,
    UNIT,
    DegreeError,
    NotStrictlyPositive,
    Valuation,
    cone_norm,
    convolve,
    evaluate,
    p_norm_estimate,
    p_norm_upper,
    reverse_kt_constant,
    scalar,
)

log = logging.getLogger("valgebra")

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_PRECONDITION, EXIT_NONCONVERGENCE = 0, 1, 2, 3, 4

PRECONDITION_ERRORS = (PreconditionError, InvariantTieError, DegreeError, DimensionMismatch, DegenerateBody,
                       MinkowskiDataError, NotStrictlyPositive, SolverError, arith.MixedArithmeticError)


class InputError(Exception):
    pass


class NonConvergence(Exception):
    pass


# --------------------------------------------------------------------------
# input and output helpers


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except OSError as err:
        raise InputError(f"cannot read {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise InputError(f"malformed JSON in {path}: {err}") from err


def _parse(path: str, build):
    data = _load_json(path)
    try:
        return build(data)
    except PRECONDITION_ERRORS:
        raise
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as err:
        raise InputError(f"bad content in {path}: {err}") from err


def load_body(path: str) -> Polytope:
    return _parse(path, lambda d: Polytope.from_json(d) if isinstance(d, dict) else Polytope.from_points(d))


def load_map(path: str) -> LinearMap:
    return _parse(path, lambda d: LinearMap.from_json(d) if isinstance(d, dict) else LinearMap.from_rows(d))


def load_valuation(path: str) -> Valuation:
    return _parse(path, Valuation.from_json)


def fmt(x) -> str:
    if isinstance(x, Fraction):
        return str(x)
    return f"{float(x):.17g}"


def _meta(args, reference: str = "none") -> dict:
    return {"reference": reference, "arith": arith.get_mode(), "conv_mode": args.conv_mode}


def _write(args, text: str) -> None:
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(args, payload: dict) -> None:
    _write(args, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _reference(args, dim: int) -> ReferenceBody | Polytope:
    if getattr(args, "body", None):
        return load_body(args.body)
    res = getattr(args, "resolution", None)
    return ball_polytope(dim, res if res else (8 if dim == 2 else 16 if dim == 3 else 2 * dim))


def _ref_id(b) -> str:
    return b.id if isinstance(b, ReferenceBody) else "custom-body"


def _body_of(b) -> Polytope:
    return b.body if isinstance(b, ReferenceBody) else b


# --------------------------------------------------------------------------
# subcommands


def cmd_mixed_volume(args) -> int:
    bodies = [load_body(p) for p in args.bodies.split(",") if p]
    v = mixed_volume(bodies)
    if args.out:
        _dump(args, {"meta": _meta(args), "mixed_volume": arith.format_number(v)})
    print(fmt(v))
    return EXIT_OK


def cmd_convolve(args) -> int:
    phi, psi = load_valuation(args.phi), load_valuation(args.psi)
    prod = convolve(phi, psi, args.conv_mode)
    payload = {"meta": _meta(args), "valuation": prod.to_json()}
    if prod.degree == 0:
        payload["scalar"] = arith.format_number(scalar(prod))
    if args.eval:
        payload["value"] = arith.format_number(evaluate(prod, load_body(args.eval)))
    _dump(args, payload)
    return EXIT_OK


def cmd_norms(args) -> int:
    phi = load_valuation(args.valuation)
    ref = _reference(args, phi.dim)
    body = _body_of(ref)
    payload = {"meta": _meta(args, _ref_id(ref)), "cone_norm": float(cone_norm(phi, body))}
    if phi.degree >= 1:
        est = p_norm_estimate(phi, body, rng=np.random.default_rng(args.seed), budget=args.budget)
        payload["p_norm_lower"] = est.lower_bound
        payload["p_norm_upper"] = p_norm_upper(phi, body)
        payload["reverse_kt_constant"] = reverse_kt_constant(phi.dim, phi.degree, body)
        payload["evaluations"] = est.evaluations
    _dump(args, payload)
    return EXIT_OK


def cmd_dyndeg(args) -> int:
    g = load_map(args.matrix)
    b = load_body(args.body) if args.body else unit_volume_reference(g.dim, args.resolution)
    rep = dynamical_degree_empirical(g, args.codeg, b, k_max=args.kmax)
    rep.conv_mode = args.conv_mode
    _write(args, rep.to_csv())
    return EXIT_OK


def cmd_invariants(args) -> int:
    g = load_map(args.matrix)
    inv = invariant_valuation(g, args.codeg, resolution=args.resolution, body=args.shape,
                              n_samples=args.samples, rng=np.random.default_rng(args.seed))
    ref = f"ball-polygon-n2-m{inv.resolution}" if inv.uses_disk else "none"
    _dump(args, {"meta": _meta(args, ref), "valuation": inv.valuation.to_json(),
                 "eigenvalue": float(inv.eigenvalue), "residual": inv.residual, "uses_disk": inv.uses_disk})
    return EXIT_OK


def cmd_vanishing(args) -> int:
    g = load_map(args.matrix)
    ref = _reference(args, g.dim)
    res = vanishing_check(g, args.i, args.s, ref, mode=args.conv_mode)
    _dump(args, {"meta": _meta(args, _ref_id(ref)), "value": res.value, "margin": res.margin,
                 "typical_scale": res.scale})
    return EXIT_OK


def cmd_minkowski(args) -> int:
    with arith.arithmetic(arith.FLOAT):
        psi = load_valuation(args.valuation)
        if args.dim is not None and psi.dim != args.dim:
            raise DimensionMismatch(f"valuation lives in dimension {psi.dim}, not {args.dim}")
        cfg = SolverConfig.from_dict({**args.solver, "multistart": args.starts, "seed": args.seed,
                                      "fan_size": args.fan})
        normals = default_fan(psi.dim, args.fan)
        sols = multistart_solution_set(psi, cfg, normals)
        best = min(sols.results, key=lambda r: r.c)
        tests = fan_test_bodies(np.random.default_rng(args.seed), normals, args.tests)
        min_gap, eq_gap = stationarity_residual(psi, best.body, tests)
        payload = {
            "meta": {**_meta(args, f"fan-n{psi.dim}-N{len(normals)}"), "arith": arith.FLOAT},
            "body": best.body.to_json(),
            "c": best.c,
            "converged": best.converged,
            "message": best.message,
            "min_gap": min_gap,
            "eq_gap": eq_gap,
            "starts": [{"c": r.c, "converged": r.converged, "iterations": r.iterations} for r in sols.results],
            "pairwise_hausdorff": sols.pairwise.tolist(),
            "containment": sols.containment,
            "trace": best.trace,
        }
    _dump(args, payload)
    if not best.converged:
        raise NonConvergence(best.message)
    return EXIT_OK


def cmd_verify_suite(args) -> int:
    dims = tuple(int(x) for x in str(args.dims).split(",") if x)
    results = run_suite(args.seed, dims)
    _write(args, format_report(results, args.seed, dims, args.conv_mode))
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--arith", choices=[arith.EXACT, arith.FLOAT], default=None)
    common.add_argument("--conv-mode", choices=list(CONV_MODES), default=None)
    common.add_argument("--config", help="JSON file whose keys mirror the long flags")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="valgebra", description="Valuations on polytopes and their dynamics.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("mixed-volume", parents=[common], help="mixed volume of n bodies")
    s.add_argument("--bodies", required=True, help="comma-separated body JSON files")
    s.set_defaults(func=cmd_mixed_volume)

    s = sub.add_parser("convolve", parents=[common], help="convolution of two valuations")
    s.add_argument("--phi", required=True)
    s.add_argument("--psi", required=True)
    s.add_argument("--eval", help="body JSON to evaluate the product on")
    s.set_defaults(func=cmd_convolve)

    s = sub.add_parser("norms", parents=[common], help="cone norm and P-norm bounds")
    s.add_argument("--valuation", required=True)
    s.add_argument("--body", help="reference body JSON (default: polytopal ball)")
    s.add_argument("--resolution", type=int, default=None)
    s.add_argument("--budget", type=int, default=200)
    s.set_defaults(func=cmd_norms)

    s = sub.add_parser("dyndeg", parents=[common], help="degree growth of a linear map as CSV")
    s.add_argument("--matrix", required=True)
    s.add_argument("--codeg", type=int, required=True)
    s.add_argument("--kmax", type=int, default=30)
    s.add_argument("--body", help="body JSON (default: unit-volume polytopal ball)")
    s.add_argument("--resolution", type=int, default=None)
    s.set_defaults(func=cmd_dyndeg)

    s = sub.add_parser("invariants", parents=[common], help="invariant valuation of a map")
    s.add_argument("--matrix", required=True)
    s.add_argument("--codeg", type=int, required=True)
    s.add_argument("--resolution", type=int, default=64)
    s.add_argument("--shape", choices=["box", "simplex"], default="box")
    s.add_argument("--samples", type=int, default=100)
    s.set_defaults(func=cmd_invariants)

    s = sub.add_parser("vanishing", parents=[common], help="vanishing of psi1 * psi2 * V(B)")
    s.add_argument("--matrix", required=True)
    s.add_argument("--i", type=int, required=True)
    s.add_argument("--s", type=int, default=1)
    s.add_argument("--body", default=None)
    s.add_argument("--resolution", type=int, default=None)
    s.set_defaults(func=cmd_vanishing)

    s = sub.add_parser("minkowski", parents=[common], help="variational Minkowski solver")
    s.add_argument("--valuation", required=True)
    s.add_argument("--dim", type=int, default=None)
    s.add_argument("--fan", type=int, default=None)
    s.add_argument("--starts", type=int, default=4)
    s.add_argument("--tests", type=int, default=20, help="number of stationarity test bodies")
    s.set_defaults(func=cmd_minkowski)

    s = sub.add_parser("verify-suite", parents=[common], help="seeded battery of invariant checks")
    s.add_argument("--dims", default="2,3")
    s.set_defaults(func=cmd_verify_suite)
    return p


def _apply_config(args) -> None:
    """Fill flags left unset from the --config file; explicit flags win."""
    cfg = _load_json(args.config) if args.config else {}
    if not isinstance(cfg, dict):
        raise InputError("config must be a JSON object")
    args.solver = cfg.get("solver", {})
    if not isinstance(args.solver, dict):
        raise InputError("config 'solver' must be an object")
    for key, value in cfg.items():
        attr = key.replace("-", "_")
        if attr != "solver" and getattr(args, attr, None) is None:
            setattr(args, attr, value)
    defaults = {"arith": arith.FLOAT, "conv_mode": UNIT, "seed": 0}
    for key, value in defaults.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    if args.conv_mode not in CONV_MODES:
        raise InputError(f"unknown conv mode {args.conv_mode!r}")
    if args.arith not in (arith.EXACT, arith.FLOAT):
        raise InputError(f"unknown arithmetic mode {args.arith!r}")


def run_command(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _apply_config(args)
        arith.set_mode(args.arith)
        return args.func(args)
    except InputError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except PRECONDITION_ERRORS as err:
        print(f"precondition violated: {err}", file=sys.stderr)
        return EXIT_PRECONDITION
    except NonConvergence as err:
        print(f"did not converge: {err}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
