"""Seeded battery of invariant checks behind ``valgebra verify-suite``.

Every check draws from its own generator derived from the seed, the check
name and the dimension, so the report is reproducible byte for byte and
independent of which other checks run.
"""
from __future__ import annotations

import io
import math
import zlib
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import arith, sampling
from .dynamics import (
    PreconditionError,
    closed_form_box_degree,
    dynamical_degree_empirical,
    invariant_valuation,
    log_concavity_report,
    raw_degree,
    submultiplicativity_constant,
    unit_volume_reference,
    vanishing_check,
)
from .geometry import LinearMap, ball_polytope, box, hausdorff_distance
from .minkowski import center, classical_minkowski_2d, surface_data_2d
from .mixed import af_margin, mixed_volume, mixed_volume_by_interpolation
from .valuation import (
    PAPER,
    UNIT,
    Valuation,
    cone_norm,
    convolve,
    evaluate,
    p_norm_estimate,
    reverse_kt_constant,
    scalar,
)


@dataclass
class CheckResult:
    name: str
    dim: int
    cases: int
    passed: bool
    margin: float        # worst slack; >= 0 means the check holds with room to spare
    detail: str = ""


def _rng(seed: int, name: str, dim: int) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(name.encode()), dim])


def _positive_valuation(rng, n: int, degree: int, exact: bool, terms: int = 2) -> Valuation:
    total = None
    for _ in range(terms):
        w = Fraction(int(rng.integers(1, 5))) if exact else float(rng.integers(1, 5))
        if degree == n:
            v = Valuation.volume(n, w, exact=exact)
        else:
            bodies = [sampling.random_polytope(rng, n, exact=exact) for _ in range(n - degree)]
            v = Valuation.mixed(bodies, w)
        total = v if total is None else total + v
    return total


# --------------------------------------------------------------------------
# checks


def check_mixed_volume_oracle(rng, n, exact, cases=6):
    worst = 0.0
    for _ in range(cases):
        bodies = [sampling.random_polytope(rng, n, exact=exact) for _ in range(n)]
        a = mixed_volume(bodies, use_fast_paths=False)
        b = mixed_volume_by_interpolation(bodies)
        worst = max(worst, 0.0 if a == b else abs(float(a - b)) / max(abs(float(a)), 1e-300))
    tol = 0.0 if exact else 1e-9
    return cases, worst <= tol, tol - worst, f"max relative difference {worst:.3e}"


def check_diagonal_identity(rng, n, exact, cases=10):
    worst = 0.0
    for _ in range(cases):
        k = sampling.random_polytope(rng, n, exact=exact)
        d = mixed_volume([k] * n, use_fast_paths=False) - k.volume()
        worst = max(worst, abs(float(d)) / float(k.volume()))
    tol = 0.0 if exact else 1e-9
    return cases, worst <= tol, tol - worst, f"max relative difference {worst:.3e}"


def check_alexandrov_fenchel(rng, n, exact, cases=20):
    worst = math.inf
    for _ in range(cases):
        k, l = (sampling.random_polytope(rng, n, exact=exact) for _ in range(2))
        rest = [sampling.random_polytope(rng, n, exact=exact) for _ in range(n - 2)]
        worst = min(worst, float(af_margin(k, l, rest)))
    return cases, worst >= -1e-12, worst, f"min margin {worst:.3e}"


def check_convolution_unit(rng, n, exact, cases=5):
    worst = 0.0
    for _ in range(cases):
        i = int(rng.integers(1, n + 1))
        phi = _positive_valuation(rng, n, i, exact)
        vol = Valuation.volume(n, exact=exact)
        k = sampling.random_polytope(rng, n, exact=exact)
        for prod in (convolve(vol, phi), convolve(phi, vol)):
            worst = max(worst, abs(float(evaluate(prod, k) - evaluate(phi, k))))
    tol = 0.0 if exact else 1e-10
    return cases, worst <= tol, tol - worst, f"max |vol*phi - phi| {worst:.3e}"


def check_convolution_commutes(rng, n, exact, cases=5):
    worst = 0.0
    for _ in range(cases):
        i = int(rng.integers(1, n + 1))
        j = int(rng.integers(n - i, n + 1)) if n - i >= 1 else n
        phi, psi = _positive_valuation(rng, n, i, exact), _positive_valuation(rng, n, j, exact)
        a, b = convolve(phi, psi), convolve(psi, phi)
        k = sampling.random_polytope(rng, n, exact=exact)
        va = scalar(a) if a.degree == 0 else evaluate(a, k)
        vb = scalar(b) if b.degree == 0 else evaluate(b, k)
        worst = max(worst, abs(float(va - vb)))
    tol = 0.0 if exact else 1e-10
    return cases, worst <= tol, tol - worst, f"max |phi*psi - psi*phi| {worst:.3e}"


def check_reverse_kt(rng, n, exact, cases=10):
    worst = math.inf
    for _ in range(cases):
        i = int(rng.integers(1, n))
        phi, psi = _positive_valuation(rng, n, i, exact), _positive_valuation(rng, n, n - i, exact)
        k = sampling.random_polytope(rng, n, exact=exact)
        lhs = evaluate(phi, k) * evaluate(psi, k)
        rhs = k.volume() * scalar(convolve(phi, psi, PAPER))
        worst = min(worst, float(lhs - rhs) / max(float(lhs), 1e-300))
    return cases, worst >= -1e-12, worst, f"min relative slack {worst:.3e}"


def check_log_concavity(rng, n, exact, cases=20):
    worst = math.inf
    for _ in range(cases):
        g = sampling.random_map(rng, n, exact=False)
        rep = log_concavity_report(g)
        worst = min([worst] + [m / max(d * d, 1e-300) for m, d in zip(rep.margins, rep.degrees[1:-1])])
    return cases, worst >= -1e-12, worst, f"min relative margin {worst:.3e}"


def check_degree_sequence(rng, n, exact, cases=1):
    """Box bodies and diagonal maps: engine degrees equal the permanent closed form."""
    diag = [Fraction(int(rng.integers(1, 4)) * int(rng.choice([-1, 1])), int(rng.integers(1, 3))) for _ in range(n)]
    sides = [Fraction(int(rng.integers(1, 4))) for _ in range(n)]
    g = LinearMap.diagonal(diag, exact=True)
    b = box([0] * n, sides, exact=True)
    worst = 0
    count = 0
    det = g.abs_det
    for codeg in range(1, n):
        for k in range(1, 9):
            v, _ = raw_degree(g, codeg, b, k)
            worst = max(worst, abs(v - closed_form_box_degree(diag, sides, codeg, k) / det ** k))
            count += 1
    return count, worst == 0, 0.0 - float(worst), f"max difference {float(worst):.3e}"


def check_dynamical_degree(rng, n, exact, cases=3, k_max=30, tol=1e-3):
    """Consecutive ratio raw_k / raw_(k-1) against the spectral value.

    The ratio cancels the body-dependent constant in raw_k ~ C d^k, so it
    tests the degree engine itself; the k-th root converges only like C^(1/k).
    """
    worst = 0.0
    for _ in range(cases):
        g = sampling.random_diagonalizable_map(rng, n, exact=False)
        for codeg in range(1, n):
            rep = dynamical_degree_empirical(g, codeg, unit_volume_reference(n, exact=False),
                                             ks=[k_max - 1, k_max])
            ratio = math.exp(rep.log_raw[1] - rep.log_raw[0])
            worst = max(worst, abs(ratio - rep.spectral_value) / rep.spectral_value)
    return cases, worst <= tol, tol - worst, f"max relative error of raw_{k_max}/raw_{k_max - 1} {worst:.3e}"


def check_submultiplicativity(rng, n, exact, cases=1, k_max=6):
    g = sampling.random_diagonalizable_map(rng, n, exact=False)
    b = unit_volume_reference(n, exact=False).body
    worst = math.inf
    count = 0
    for codeg in range(1, n):
        c = submultiplicativity_constant(n, codeg, b)
        logs = {k: raw_degree(g, codeg, b, k)[1] for k in range(1, 2 * k_max + 1)}
        for k in range(1, k_max + 1):
            for l in range(1, k_max + 1):
                slack = math.log(c) + logs[k] + logs[l] - logs[k + l]
                worst = min(worst, slack)
                count += 1
    return count, worst >= -1e-9, worst, f"min log slack {worst:.3e}"


def check_invariant_residual(rng, n, exact, cases=2):
    worst = 0.0
    for _ in range(cases):
        g = sampling.random_diagonalizable_map(rng, n, exact=False)
        for codeg in range(1, n):
            inv = invariant_valuation(g, codeg, n_samples=10, rng=rng)
            worst = max(worst, inv.residual)
    return cases, worst <= 1e-8, 1e-8 - worst, f"max residual {worst:.3e}"


def check_vanishing(rng, n, exact, cases=1):
    if n % 2:
        return None
    i = n // 2
    mods = sorted((float(rng.uniform(0.5, 3.0)) for _ in range(n)), reverse=True)
    mods = [m * 1.5 ** (n - j) for j, m in enumerate(mods)]
    g = LinearMap.diagonal([Fraction(m).limit_denominator(1000) for m in mods], exact=True)
    try:
        res = vanishing_check(g, i, 1)
    except PreconditionError as err:
        return 1, False, -1.0, f"refused: {err}"
    ok = abs(res.value) <= 1e-10
    return 1, ok, 1e-10 - abs(res.value), f"value {res.value:.3e}, margin {res.margin:.3e}"


def check_minkowski_roundtrip(rng, n, exact, cases=10):
    if n != 2:
        return None
    worst = 0.0
    for _ in range(cases):
        p = sampling.random_polytope(rng, 2, n_points=8, exact=False)
        normals, lengths = surface_data_2d(p)
        q = classical_minkowski_2d(normals, lengths, exact=False)
        worst = max(worst, hausdorff_distance(center(p), q))
    return cases, worst <= 1e-9, 1e-9 - worst, f"max Hausdorff distance {worst:.3e}"


def check_norm_chain(rng, n, exact, cases=5):
    b = ball_polytope(n, 8 if n == 2 else 16, exact=False).body
    worst = math.inf
    for _ in range(cases):
        i = int(rng.integers(1, n))
        phi = _positive_valuation(rng, n, i, False) - _positive_valuation(rng, n, i, False, terms=1)
        if phi.is_zero():
            continue
        est = p_norm_estimate(phi, b, rng=rng, budget=20, local_search=False)
        bound = reverse_kt_constant(n, i, b) * float(cone_norm(phi, b))
        worst = min(worst, (bound - est.lower_bound) / max(bound, 1e-300))
    return cases, worst >= -1e-12, worst, f"min relative slack of P <= C cone {worst:.3e}"


CHECKS: list[tuple[str, Callable]] = [
    ("mixed_volume_oracle", check_mixed_volume_oracle),
    ("diagonal_identity", check_diagonal_identity),
    ("alexandrov_fenchel", check_alexandrov_fenchel),
    ("convolution_unit", check_convolution_unit),
    ("convolution_commutes", check_convolution_commutes),
    ("reverse_kt", check_reverse_kt),
    ("log_concavity", check_log_concavity),
    ("degree_sequence_boxes", check_degree_sequence),
    ("dynamical_degree_ratio", check_dynamical_degree),
    ("submultiplicativity", check_submultiplicativity),
    ("invariant_residual", check_invariant_residual),
    ("vanishing", check_vanishing),
    ("minkowski_roundtrip", check_minkowski_roundtrip),
    ("norm_chain", check_norm_chain),
]


def run_suite(seed: int = 0, dims=(2, 3), checks: list[str] | None = None) -> list[CheckResult]:
    exact = arith.is_exact_mode()
    results = []
    for name, fn in CHECKS:
        if checks is not None and name not in checks:
            continue
        for n in dims:
            out = fn(_rng(seed, name, n), n, exact)
            if out is None:
                continue
            cases, ok, margin, detail = out
            results.append(CheckResult(name, n, cases, bool(ok), float(margin), detail))
    return results


def format_report(results: list[CheckResult], seed: int, dims, conv_mode: str = UNIT) -> str:
    refs = ",".join(unit_volume_reference(n, exact=False).id + "-unitvol" for n in dims)
    buf = io.StringIO()
    buf.write(f"# valgebra verify-suite seed={seed} dims={','.join(map(str, dims))}"
              f" arith={arith.get_mode()} conv_mode={conv_mode} reference={refs}\n")
    buf.write(f"{'check':<24} {'dim':>3} {'cases':>5} {'status':<6} {'margin':>13}  detail\n")
    for r in results:
        buf.write(f"{r.name:<24} {r.dim:>3} {r.cases:>5} {'PASS' if r.passed else 'FAIL':<6} "
                  f"{r.margin:>13.6e}  {r.detail}\n")
    failed = sum(not r.passed for r in results)
    buf.write(f"# {len(results) - failed} passed, {failed} failed\n")
    return buf.getvalue()
