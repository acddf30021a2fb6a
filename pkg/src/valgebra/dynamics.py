"""Degrees, dynamical degrees and invariant valuations of linear maps.

Conventions: for a body ``B`` and ``j = n - i`` the raw degree of ``g`` is

    raw_j(g) = V(g(B)[j], B[n-j]) / |det g|,

so that ``deg_j(g) = (g . psi) * phi`` with ``psi = V(., B[j])`` and
``phi = V(., B[n-j])`` equals ``c * raw_j(g)`` where
``c = j! (n-j)! / n!``.  The dynamical degree is

    d_j(g) = lim raw_j(g^k)^(1/k) = |det g|^-1 * prod of the j largest |eigenvalues|.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.linalg

from . import arith
from .geometry import (
    LinearMap,
    Polytope,
    ReferenceBody,
    apply_linear_map,
    ball_polytope,
    box,
    complement_basis,
    project,
)
from .mixed import mixed_volume
from .parallel import pool_map
from .valuation import (
    UNIT,
    DegreeError,
    Valuation,
    convolution_coefficient,
    convolve,
    evaluate,
    group_action,
    scalar,
)
from . import sampling


class PreconditionError(ValueError):
    """An input violates the hypothesis of the requested computation."""


class InvariantTieError(PreconditionError):
    """No invariant choice exists for the requested cut of the spectrum."""


# --------------------------------------------------------------------------
# spectral side


def dynamical_degree_spectral(g: LinearMap, codeg: int) -> float:
    """|det g|^-1 times the product of the ``codeg`` largest eigenvalue moduli."""
    d = float(g.abs_det)
    if d == 0:
        raise PreconditionError("dynamical degrees need an invertible map")
    if not 0 <= codeg <= g.dim:
        raise DegreeError(f"codegree {codeg} outside 0..{g.dim}")
    mods = g.moduli
    return math.exp(sum(math.log(m) for m in mods[:codeg]) - math.log(d))


def spectral_degrees(g: LinearMap) -> list[float]:
    """[d_0(g), ..., d_n(g)]."""
    return [dynamical_degree_spectral(g, j) for j in range(g.dim + 1)]


@dataclass
class LogConcavityReport:
    degrees: list[float]
    margins: list[float]          # d_i^2 - d_{i-1} d_{i+1}, i = 1..n-1
    strict: list[bool]

    def margin(self, i: int, s: int = 1) -> float:
        d = self.degrees
        if not (0 <= i - s and i + s < len(d)):
            raise DegreeError(f"need 0 <= i - s and i + s <= n, got i={i}, s={s}")
        return d[i] * d[i] - d[i - s] * d[i + s]


def log_concavity_margin(g: LinearMap, i: int, s: int = 1) -> float:
    """d_i^2 - d_{i-s} d_{i+s} from eigenvalue moduli.

    Computed as d_{i-s} d_i (prod_{i-s<j<=i} rho_j - prod_{i<j<=i+s} rho_j), which
    keeps the sign reliable when the two products are close.
    """
    n = g.dim
    if not (0 <= i - s and i + s <= n and s >= 1):
        raise DegreeError(f"need 0 <= i - s and i + s <= n, got i={i}, s={s}")
    mods = g.moduli
    upper = math.prod(mods[i - s:i])
    lower = math.prod(mods[i:i + s])
    scale = dynamical_degree_spectral(g, i - s) * dynamical_degree_spectral(g, i)
    return scale * (upper - lower)


def log_concavity_report(g: LinearMap, rtol: float = 1e-12) -> LogConcavityReport:
    degrees = spectral_degrees(g)
    margins, strict = [], []
    for i in range(1, g.dim):
        m = log_concavity_margin(g, i, 1)
        margins.append(m)
        strict.append(m > rtol * degrees[i] ** 2)
    return LogConcavityReport(degrees, margins, strict)


# --------------------------------------------------------------------------
# raw degrees with scale control


def _matrix_power(g: LinearMap, k: int) -> LinearMap:
    if g.exact:
        return g.power(k)
    m = np.linalg.matrix_power(g.array(), k)
    return LinearMap(g.dim, tuple(tuple(float(x) for x in r) for r in m), False)


def _balancing_scale(m: LinearMap, j: int, exact: bool):
    """Power of two ``s`` with ``sigma_j(s m)`` near 1.

    Mixed volumes are homogeneous, so ``V(s X[j], Y) = s^j V(X[j], Y)`` holds
    exactly; balancing keeps the polarization sums free of cancellation.
    """
    if j == 0:
        return Fraction(1) if exact else 1.0
    sv = np.linalg.svd(m.array(), compute_uv=False)
    e = -int(round(math.log2(max(sv[j - 1], 1e-300))))
    return Fraction(2) ** e if exact else math.ldexp(1.0, e)


def _log(x) -> float:
    if isinstance(x, Fraction):
        if x <= 0:
            return -math.inf
        return math.log(x.numerator) - math.log(x.denominator)
    return math.log(x) if x > 0 else -math.inf


def _exp(x: float) -> float:
    return math.exp(x) if x < 700 else math.inf


def _graded_power(a: np.ndarray, k: int, q0: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """g^k q0 = Q diag(exp(L)) U, accumulated as a product of triangular QR factors.

    Forming g^k directly loses the small singular directions once the
    moduli ratio passes 1/eps; the accumulated factor keeps each row
    accurate relative to its own size.  Row scales are kept as logs
    (``U`` has unit-modulus diagonal), so large k cannot overflow.
    """
    n = a.shape[0]
    q = np.eye(n) if q0 is None else q0
    logs = np.zeros(n)
    u = np.eye(n)
    for _ in range(k):
        q, rk = np.linalg.qr(a @ q)
        dk = np.abs(np.diag(rk))
        # row i of rk @ diag(exp(L)) @ u, divided by |rk_ii| exp(L_i)
        rel = np.exp(np.minimum(logs[None, :] - logs[:, None], 700.0))
        u = ((rk / dk[:, None]) * np.triu(rel)) @ u
        logs = logs + np.log(dk)
    return q, logs, u


def _flag_frame(a: np.ndarray, iters: int = 200) -> np.ndarray:
    """Orthonormal frame from subspace iteration, leading columns along the dominant directions.

    Starting the accumulated product here keeps the diagonal of R sorted
    by growth rate from the first step on.
    """
    n = a.shape[0]
    start, _ = np.linalg.qr(np.random.default_rng(20240601).normal(size=(n, n)))
    a = a / max(abs(np.linalg.det(a)) ** (1.0 / n), 1e-300)
    q = start
    for _ in range(iters):
        q, _ = np.linalg.qr(a @ q)
    return q


def _conditioning_map(g: LinearMap, k: int, j: int) -> tuple[LinearMap, LinearMap, float]:
    """Maps (T s g^k, T) and log(|det T| s^j) for V(g^k B[j], B[n-j]).

    With g^k = Q R Q0^T, ``s = 1/|R_jj|`` and ``T = D Q^T`` where ``D`` shrinks the
    j - 1 leading rows of s R to unit size; the log of |det T| s^j is
    minus the sum of the j leading log row scales of R.  The directions carrying the
    mixed volume then all have size about one, and the identity
    V(TX[j], TY[n-j]) = |det T| V(X[j], Y[n-j]) together with homogeneity
    undoes the change.
    """
    a = g.array()
    q0 = _flag_frame(a)
    q, logs, u = _graded_power(a, k, q0)     # g^k = q diag(exp(logs)) u q0^T
    lj = logs[j - 1]
    # rows up to j-1 scaled to unit size, later rows relative to row j-1
    w = np.array([1.0 if i <= j - 1 else math.exp(max(logs[i] - lj, -745.0)) for i in range(g.dim)])
    d = np.array([math.exp(min(lj - logs[i], 700.0)) if i < j - 1 else 1.0 for i in range(g.dim)])
    t = d[:, None] * q.T
    tsm = w[:, None] * (u @ q0.T)
    as_map = lambda a: LinearMap(g.dim, tuple(tuple(float(x) for x in row) for row in a), False)
    return as_map(tsm), as_map(t), -float(np.sum(logs[:j]))


def raw_degree(g: LinearMap, codeg: int, b: Polytope, k: int = 1):
    """(value, log value) of V(g^k(B)[codeg], B[n-codeg]) / |det g|^k.

    Exact mode rescales g^k(B) by a power of two (exact by homogeneity);
    float mode also applies a common conditioning map to both bodies.
    """
    n = g.dim
    det = g.abs_det
    if g.exact or codeg == 0:
        m = _matrix_power(g, k)
        s = _balancing_scale(m, codeg, g.exact)
        v = mixed_volume([apply_linear_map(m.scaled(s), b)] * codeg + [b] * (n - codeg))
        log_val = _log(v) - codeg * _log(s) - k * _log(det)
        if g.exact:
            return v / (s ** codeg * det ** k), log_val
        return _exp(log_val), log_val
    tsm, t, log_scale = _conditioning_map(g, k, codeg)
    v = mixed_volume([apply_linear_map(tsm, b)] * codeg + [apply_linear_map(t, b)] * (n - codeg))
    log_val = _log(v) - log_scale - k * _log(det)
    return _exp(log_val), log_val


def closed_form_box_degree(diag: Sequence, sides: Sequence, codeg: int, k: int):
    """V(g^k(K)[codeg], K[n-codeg]) for g = diag(lambda) and K a box with ``sides``.

    Product bodies give vol(K) e_codeg(|lambda|^k) / C(n, codeg), with
    ``e_j`` the elementary symmetric polynomial.
    """
    n = len(diag)
    lam = [abs(x) ** k for x in diag]
    e = sum(math.prod(lam[j] for j in c) for c in _combinations(n, codeg))
    vol = math.prod(sides)
    if isinstance(vol * e, (int, Fraction)):
        return Fraction(vol * e) / math.comb(n, codeg)
    return vol * e / math.comb(n, codeg)


def _combinations(n: int, r: int):
    import itertools

    return itertools.combinations(range(n), r)


def unit_volume_reference(dim: int, resolution: int | None = None, exact: bool | None = None) -> ReferenceBody:
    """The reference ball rescaled to volume one (approximately, in exact mode)."""
    ref = ball_polytope(dim, resolution if resolution is not None else default_resolution(dim), exact=exact)
    vol = float(ref.body.volume())
    s = vol ** (-1.0 / dim)
    if ref.body.exact:
        s = Fraction(s).limit_denominator(10 ** 6)
    return ReferenceBody(dim, ref.body.scale(s), ref.resolution)


def default_resolution(dim: int) -> int:
    return {1: 2, 2: 4, 3: 12}.get(dim, 2 * dim)


# --------------------------------------------------------------------------
# degree of a map


def _require_positive(v: Valuation, name: str) -> None:
    if v.is_zero() or not v.is_positive():
        raise PreconditionError(f"{name} must be a nonzero valuation with nonnegative weights")


def degree_of_map(g: LinearMap, psi: Valuation, phi: Valuation, mode: str = UNIT):
    """deg(g) = (g . psi) * phi, a scalar; psi and phi need complementary degrees."""
    if psi.degree + phi.degree != psi.dim:
        raise DegreeError(f"degrees {psi.degree} and {phi.degree} are not complementary in R^{psi.dim}")
    _require_positive(psi, "psi")
    _require_positive(phi, "phi")
    return scalar(convolve(group_action(g, psi), phi, mode))


# --------------------------------------------------------------------------
# reports


@dataclass
class DegreeReport:
    """Degree sequence of ``g^k`` with its k-th roots, Fekete estimate and spectral value.

    ``raw`` holds V(g^k B[codeg], B[n-codeg]) / |det g|^k (or, for relative
    degrees, the corresponding triple convolution).  ``fekete`` is the
    running infimum of (C raw_k)^(1/k) with C = 1 / (c vol B) the
    submultiplicativity constant, so it bounds the limit from above;
    ``fekete_estimate`` is its last value.  Relative reports use C = 1,
    which carries no such guarantee.
    """

    map: LinearMap
    codegree: int
    ks: list[int]
    raw: list
    log_raw: list[float]
    roots: list[float]
    fekete: list[float]
    fekete_estimate: float
    spectral_value: float
    reference: str
    arith_mode: str = ""
    conv_mode: str = UNIT
    notes: dict = field(default_factory=dict)

    @property
    def rel_errors(self) -> list[float]:
        return [abs(r - self.spectral_value) / self.spectral_value for r in self.roots]

    @property
    def fekete_gap(self) -> float:
        return abs(self.fekete_estimate - self.spectral_value)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# reference={self.reference} arith={self.arith_mode} conv_mode={self.conv_mode}"
                  f" codeg={self.codegree} spectral={self.spectral_value!r}"
                  f" fekete_gap={self.fekete_gap!r}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "raw_degree", "kth_root", "fekete", "spectral", "rel_error"])
        for k, raw, root, fek, err in zip(self.ks, self.raw, self.roots, self.fekete, self.rel_errors):
            w.writerow([k, repr(float(raw)), repr(root), repr(fek), repr(self.spectral_value), repr(err)])
        return buf.getvalue()


def _roots_and_fekete(ks, log_raw, log_c):
    """k-th roots and the running infimum of (C raw_k)^(1/k), ``log_c = log C``."""
    roots, fek = [], []
    best = math.inf
    for k, lr in zip(ks, log_raw):
        if k == 0:
            roots.append(math.nan)
            fek.append(best)
            continue
        roots.append(math.exp(lr / k))
        best = min(best, math.exp((lr + log_c) / k))
        fek.append(best)
    return roots, fek


def _reference_id(b) -> tuple[Polytope, str]:
    if isinstance(b, ReferenceBody):
        return b.body, b.id + "-unitvol" if abs(float(b.body.volume()) - 1) < 1e-6 else b.id
    return b, "custom-body"


def dynamical_degree_empirical(g: LinearMap, codeg: int, b=None, k_max: int = 30,
                               ks: Sequence[int] | None = None) -> DegreeReport:
    """k-th roots of V(g^k(B)[codeg], B[n-codeg]) / |det g|^k for k = 1..k_max.

    The default ``B`` is the reference ball rescaled to unit volume.
    Values are computed exactly in rational mode (box fast path for
    diagonal maps and boxes) and in the log domain otherwise.
    """
    if k_max < 4 and ks is None:
        raise PreconditionError("k_max must be at least 4")
    if g.det == 0:
        raise PreconditionError("dynamical degrees need an invertible map")
    if b is None:
        b = unit_volume_reference(g.dim, exact=g.exact)
    body, rid = _reference_id(b)
    if not body.is_full_dimensional:
        raise PreconditionError("the body must be full dimensional")
    if body.exact != g.exact:
        raise arith.MixedArithmeticError("exact and float values mixed in one computation")
    ks = list(ks) if ks is not None else list(range(1, k_max + 1))
    vals = pool_map(lambda k: raw_degree(g, codeg, body, k), ks)
    raw = [v for v, _ in vals]
    log_raw = [lv for _, lv in vals]
    roots, fek = _roots_and_fekete(ks, log_raw, math.log(submultiplicativity_constant(g.dim, codeg, body)))
    return DegreeReport(g, codeg, ks, raw, log_raw, roots, fek, fek[-1] if fek else math.nan,
                        dynamical_degree_spectral(g, codeg), rid,
                        arith_mode=arith.EXACT if g.exact else arith.FLOAT)


def submultiplicativity_constant(n: int, codeg: int, b: Polytope) -> float:
    """C = 1 / (c vol B) with c = codeg! (n-codeg)! / n!."""
    c = math.factorial(codeg) * math.factorial(n - codeg) / math.factorial(n)
    return 1.0 / (c * float(b.volume()))


# --------------------------------------------------------------------------
# relative degrees


def _orthonormal(basis, n: int) -> np.ndarray:
    a = np.asarray([[float(x) for x in v] for v in basis], dtype=float).reshape(-1, n).T
    q, _ = np.linalg.qr(a)
    return q


def check_invariant_subspace(g: LinearMap, basis, tol: float = 1e-9) -> float:
    """Residual |(I - P_S) g S| relative to |g|; raises if S is not g-invariant."""
    n = g.dim
    q = _orthonormal(basis, n)
    a = g.array()
    res = float(np.linalg.norm(a @ q - q @ (q.T @ a @ q)) / max(np.linalg.norm(a), 1e-300))
    if res > tol:
        raise PreconditionError(f"subspace is not invariant (residual {res:.3e})")
    return res


def quotient_map(g: LinearMap, basis) -> np.ndarray:
    """Matrix of the induced map on E/S in an orthonormal basis of the complement."""
    q = _orthonormal(basis, g.dim)
    c = scipy.linalg.null_space(q.T)
    return c.T @ g.array() @ c


def relative_spectral(g: LinearMap, basis, codeg: int) -> float:
    """|det g|^-1 times the product of the ``codeg`` largest moduli of the quotient map."""
    qm = quotient_map(g, basis)
    mods = sorted((abs(z) for z in np.linalg.eigvals(qm)), reverse=True) if qm.size else []
    if codeg > len(mods):
        raise DegreeError("codegree exceeds the quotient dimension")
    return math.exp(sum(math.log(m) for m in mods[:codeg]) - math.log(float(g.abs_det)))


def relative_dynamical_degree(g: LinearMap, basis, b_s: Polytope, psi: Valuation, phi: Valuation,
                              k_max: int = 20, ks: Sequence[int] | None = None,
                              mode: str = UNIT, tol: float = 1e-9) -> DegreeReport:
    """Sequence (g^k . psi) * phi * tau_B with tau_B = V(-; B_S[m]).

    Every term of the triple product contains ``B_S[m]`` with ``B_S`` inside
    the m-dimensional invariant subspace S, so the reduction formula
    V(B_S[m], X) = vol_S(B_S) V_{S-perp}(p(X)) / C(n, m) evaluates it in the
    complement.
    """
    n = g.dim
    basis = [list(v) for v in basis]
    m = len(basis)
    check_invariant_subspace(g, basis, tol)
    if psi.degree + phi.degree != n + m:
        raise DegreeError(f"need deg psi + deg phi = n + m = {n + m}")
    _require_positive(psi, "psi")
    _require_positive(phi, "phi")
    exact = g.exact
    onb = _orthonormal_basis_exact(basis, n, exact)
    comp = complement_basis(onb, exact)
    vol_s = project(b_s, onb).volume() if m else (Fraction(1) if exact else 1.0)
    if m and float(vol_s) <= 0:
        raise PreconditionError("B_S must be full dimensional in S")
    c1 = convolution_coefficient(n, psi.degree, phi.degree, mode, exact)
    c2 = convolution_coefficient(n, m, n - m, mode, exact)
    factor = c1 * c2 * vol_s / math.comb(n, m)
    j = psi.arity
    ks = list(ks) if ks is not None else list(range(1, k_max + 1))
    proj_phi = [(w, [project(x, comp) for x in bs]) for w, bs in phi.terms]

    def one(k):
        mk = _matrix_power(g, k)
        if j:
            qk = LinearMap.from_rows(np.asarray(quotient_map(mk, basis)).tolist(), exact=False)
            s = _balancing_scale(qk, j, exact)
        else:
            s = Fraction(1) if exact else 1.0
        msk = mk.scaled(s)
        total = Fraction(0) if exact else 0.0
        for w1, bs1 in psi.terms:
            mapped = [project(apply_linear_map(msk, x), comp) for x in bs1]
            for w2, bs2 in proj_phi:
                total += w1 * w2 * (mixed_volume(mapped + bs2) if n - m else 1)
        val = total * factor
        lv = _log(val) - j * _log(s) - k * _log(g.abs_det)
        return (val / (s ** j * g.abs_det ** k) if exact else _exp(lv)), lv

    vals = pool_map(one, ks)
    raw = [v for v, _ in vals]
    log_raw = [lv for _, lv in vals]
    roots, fek = _roots_and_fekete(ks, log_raw, 0.0)
    return DegreeReport(g, j, ks, raw, log_raw, roots, fek, fek[-1] if fek else math.nan,
                        relative_spectral(g, basis, j), "relative",
                        arith_mode=arith.EXACT if exact else arith.FLOAT, conv_mode=mode,
                        notes={"subspace_dim": m})


def _orthonormal_basis_exact(basis, n: int, exact: bool):
    from .mixed import _orthonormal_columns

    return _orthonormal_columns(basis, exact)


# --------------------------------------------------------------------------
# continuity


@dataclass
class ContinuityReport:
    delta: float
    max_deviation: list[float]     # per codegree 0..n
    spot_check: dict = field(default_factory=dict)


def continuity_probe(g: LinearMap, delta: float, trials: int = 20, rng: np.random.Generator | None = None,
                     spot_check_k: int = 0) -> ContinuityReport:
    """max |d_j(g + delta E) - d_j(g)| over random unit-norm perturbations E."""
    rng = rng if rng is not None else np.random.default_rng(0)
    n = g.dim
    base = spectral_degrees(g)
    dev = [0.0] * (n + 1)
    a = g.array()
    last = None
    for _ in range(trials):
        while True:
            e = rng.normal(size=(n, n))
            e /= np.linalg.norm(e)
            pert = a + delta * e
            if abs(np.linalg.det(pert)) > 1e-12:
                break
        gl = LinearMap.from_rows(pert.tolist(), exact=False)
        last = gl
        for j, dj in enumerate(spectral_degrees(gl)):
            dev[j] = max(dev[j], abs(dj - base[j]))
    spot = {}
    if spot_check_k and last is not None:
        rep = dynamical_degree_empirical(last, 1, k_max=spot_check_k)
        spot = {"codeg": 1, "k": spot_check_k, "root": rep.roots[-1], "spectral": rep.spectral_value}
    return ContinuityReport(delta, dev, spot)


# --------------------------------------------------------------------------
# invariant valuations


@dataclass
class InvariantValuation:
    """phi with g . phi = eigenvalue * phi (up to ``residual``)."""

    valuation: Valuation
    eigenvalue: float
    residual: float
    subspace: np.ndarray
    uses_disk: bool = False
    resolution: int | None = None

    def __iter__(self):
        return iter((self.valuation, self.eigenvalue))


def _is_diagonal(g: LinearMap) -> bool:
    return all(x == 0 for i, r in enumerate(g.entries) for j, x in enumerate(r) if i != j)


def _nested_schur(a: np.ndarray, rho: float, tol: float):
    """Orthogonal Q whose leading columns give, in order: moduli > rho, real moduli = rho,
    complex moduli = rho, the rest.  Returns (Q, T, sizes)."""
    n = a.shape[0]
    q = np.eye(n)
    t = a.copy()
    sizes = []
    preds = [
        lambda re, im: math.hypot(re, im) > rho * (1 + tol),
        lambda re, im: abs(math.hypot(re, im) - rho) <= rho * tol and im == 0,
        lambda re, im: abs(math.hypot(re, im) - rho) <= rho * tol,
    ]
    start = 0
    for pred in preds:
        if start >= n:
            sizes.append(0)
            continue
        sub = t[start:, start:]
        ts, qs, sdim = scipy.linalg.schur(sub, output="real", sort=pred)
        big = np.eye(n)
        big[start:, start:] = qs
        q = q @ big
        t = q.T @ a @ q
        sizes.append(int(sdim))
        start += int(sdim)
    return q, t, sizes


def _rotation_frame(block: np.ndarray) -> np.ndarray:
    """S with block = S (rho R) S^-1 for a 2x2 real block with complex eigenvalues."""
    w, v = np.linalg.eig(block)
    k = int(np.argmax(w.imag))
    z = v[:, k]
    s = np.column_stack([z.real, z.imag])
    return s / math.sqrt(abs(np.linalg.det(s)))


def _embed(q_cols: np.ndarray, pts: np.ndarray, exact: bool) -> Polytope:
    world = pts @ q_cols.T
    if exact:
        world = [[Fraction(float(x)).limit_denominator(10 ** 12) for x in r] for r in world]
    else:
        world = world.tolist()
    return Polytope.from_points(world, dim=q_cols.shape[0], exact=exact)


def invariant_valuation(g: LinearMap, codeg: int, resolution: int = 64, body: str = "box",
                        n_samples: int = 100, rng: np.random.Generator | None = None,
                        tol: float = 1e-9) -> InvariantValuation:
    """Degree-``codeg`` valuation phi = V(B_F[i], .) with g . phi = d_i(g) phi, i = n - codeg.

    ``F`` is a g-invariant subspace carrying the ``i`` largest eigenvalue
    moduli (ordered real Schur form) and ``B_F`` a full-dimensional body in
    it; the reduction formula makes phi exactly invariant.  When the cut
    splits a complex-conjugate pair, the last slot takes a regular polygon
    disk in the rotation plane, and the invariance holds up to the
    polygon-to-disk gap.  ``body`` picks the shape in F: ``"box"`` or
    ``"simplex"``.
    """
    n = g.dim
    i = n - codeg
    if not 0 < i <= n:
        raise DegreeError(f"need 0 <= codeg < n, got {codeg}")
    if g.det == 0:
        raise PreconditionError("invariant valuations need an invertible map")
    exact = g.exact
    d = dynamical_degree_spectral(g, i)
    if i == n:
        phi = Valuation.volume(n, exact=exact)
        return InvariantValuation(phi, d, 0.0, np.eye(n))
    uses_disk = False
    if _is_diagonal(g):
        order = sorted(range(n), key=lambda j: -abs(float(g.entries[j][j])))[:i]
        lo = [0] * n
        hi = [1 if j in order else 0 for j in range(n)]
        if body == "simplex":
            pts = [[0] * n] + [[1 if jj == j else 0 for jj in range(n)] for j in order]
            bf = Polytope.from_points(pts, exact=exact)
        else:
            bf = box(lo, hi, exact=exact)
        bodies = [bf] * i
        frame = np.eye(n)[:, sorted(order)]
    else:
        a = g.array()
        rho = g.moduli[i - 1]
        q, t, sizes = _nested_schur(a, rho, 1e-9)
        split = i < n and abs(t[i, i - 1]) > 1e-12
        unit = np.eye(i - 1 if split else i)
        if body == "simplex":
            shape = np.vstack([np.zeros(unit.shape[0]), unit])
        else:
            import itertools

            shape = np.array(list(itertools.product((0.0, 1.0), repeat=unit.shape[0])))
        if not split:
            bf = _embed(q[:, :i], shape, exact)
            bodies = [bf] * i
            frame = q[:, :i]
        else:
            uses_disk = True
            s = _rotation_frame(t[i - 1:i + 1, i - 1:i + 1])
            disk = ball_polytope(2, resolution, exact=False).body.array() @ s.T
            dbody = _embed(q[:, i - 1:i + 1], disk, exact)
            bodies = ([_embed(q[:, :i - 1], shape, exact)] * (i - 1) if i > 1 else []) + [dbody]
            frame = q[:, :i + 1]
    phi = Valuation.mixed(bodies)
    res = invariance_residual(g, phi, d, n_samples=n_samples, rng=rng)
    return InvariantValuation(phi, d, res, frame, uses_disk, resolution if uses_disk else None)


@dataclass
class ExtremalityProbe:
    """Two constructions of the codegree n-1 invariant valuation V(L, .[n-1]).

    ``r_ab`` and ``r_ba`` are the containment scales of each body in the
    other; the bodies are homothetic exactly when their product is 1.
    """

    bodies: tuple
    r_ab: float
    r_ba: float

    @property
    def homothetic_gap(self) -> float:
        return abs(self.r_ab * self.r_ba - 1.0)


def extremality_probe(g: LinearMap, resolution: int = 64) -> ExtremalityProbe:
    """Check that box- and simplex-based invariant valuations of degree n-1 agree up to scaling."""
    from .mixed import containment_scale

    n = g.dim
    cands = [invariant_valuation(g, n - 1, resolution, body=shape, n_samples=0) for shape in ("box", "simplex")]
    bodies = []
    for c in cands:
        (_, tup), = c.valuation.terms
        bodies.append(tup[0])
    frame = cands[0].subspace
    # compare inside the invariant subspace, where the bodies are full dimensional
    a, b = _in_subspace(bodies[0], frame), _in_subspace(bodies[1], frame)
    return ExtremalityProbe(tuple(bodies), containment_scale(a, b).r_exact, containment_scale(b, a).r_exact)


def _in_subspace(p: Polytope, frame: np.ndarray) -> Polytope:
    q, _ = np.linalg.qr(frame)
    coords = p.array() @ q
    return Polytope.from_points(coords.tolist(), exact=False)


def invariance_residual(g: LinearMap, phi: Valuation, eigenvalue, n_samples: int = 100,
                        rng: np.random.Generator | None = None) -> float:
    """max over sample bodies L of |(g . phi - d phi)(L)| / |d phi(L)|."""
    rng = rng if rng is not None else np.random.default_rng(12345)
    gphi = group_action(g, phi)
    samples = [sampling.random_polytope(rng, g.dim, exact=g.exact) for _ in range(n_samples)]
    ev = float(eigenvalue)

    def one(body):
        lhs = float(evaluate(gphi, body))
        rhs = ev * float(evaluate(phi, body))
        return abs(lhs - rhs) / max(abs(rhs), 1e-300)

    return max(pool_map(one, samples)) if samples else 0.0


@dataclass
class VanishingResult:
    value: float
    margin: float
    psi1: Valuation
    psi2: Valuation
    scale: float          # |psi1 * psi2 * phi_B| would be compared to this typical size


def vanishing_check(g: LinearMap, i: int, s: int = 1, b=None, mode: str = UNIT,
                    rtol: float = 1e-12) -> VanishingResult:
    """psi_1 * psi_2 * V(-; B[n-2i]) for two invariant valuations of degree n - i.

    Refuses (``PreconditionError``) unless 2i <= n and the strict margin
    d_i^2 - d_{i-s} d_{i+s} is positive.
    """
    n = g.dim
    if not (1 <= i and 2 * i <= n):
        raise PreconditionError(f"need 1 <= i and 2i <= n, got i={i}, n={n}")
    if not (s >= 1 and i - s >= 0 and i + s <= n):
        raise PreconditionError(f"need 1 <= s <= i and i + s <= n, got s={s}")
    margin = log_concavity_margin(g, i, s)
    scale_d = dynamical_degree_spectral(g, i) ** 2
    if not margin > rtol * scale_d:
        raise PreconditionError(
            f"strict log-concavity fails at i={i}, s={s}: d_i^2 - d_(i-s) d_(i+s) = {margin:.3e}")
    psi1 = invariant_valuation(g, n - i, body="box", n_samples=0).valuation
    psi2 = invariant_valuation(g, n - i, body="simplex", n_samples=0).valuation
    if b is None:
        b = ball_polytope(n, default_resolution(n), exact=g.exact)
    body = b.body if isinstance(b, ReferenceBody) else b
    prod = convolve(psi1, psi2, mode)
    if 2 * i == n:
        value = scalar(prod)
    else:
        value = scalar(convolve(prod, Valuation.mixed([body] * (n - 2 * i)), mode))
    # a nonvanishing reference of the same shape: replace psi2 by V(B[i], .)
    ref = convolve(psi1, Valuation.reference(body, n - i), mode)
    typical = float(evaluate(ref, body)) if ref.degree else float(scalar(ref))
    return VanishingResult(float(value), margin, psi1, psi2, abs(typical))


# --------------------------------------------------------------------------
# operator-norm sandwich


@dataclass
class SandwichRow:
    k: int
    lower: float
    proxy: float
    upper: float

    @property
    def ok(self) -> bool:
        tol = 1e-9 * max(abs(self.upper), 1.0)
        return self.lower <= self.proxy + tol and self.proxy <= self.upper + tol


def norm_sandwich(g: LinearMap, codeg: int, b, ks: Sequence[int], tests: Sequence[Valuation] = ()) -> list[SandwichRow]:
    """Bounds for the cone-norm growth of g^k on degree n - codeg valuations.

    ``proxy`` is max over ``phi_B = V(., B[codeg])`` and ``tests`` of
    ||g^k . phi||_C / ||phi||_C.  With raw = V(g^k B[codeg], B[n-codeg]) / |det g|^k:
    raw / vol(B) <= proxy (from phi_B) and proxy <= c' raw where
    c' = max over phi of sum |w| prod r(B, A_j) / ||phi||_C and ``r`` the
    containment scale (monotonicity of mixed volumes).
    """
    from .valuation import cone_norm, p_norm_upper

    body = b.body if isinstance(b, ReferenceBody) else b
    n = g.dim
    phi_b = Valuation.reference(body, n - codeg)
    family = [phi_b] + [t for t in tests if t.degree == n - codeg and t.is_positive()]
    vol = float(body.volume())
    cprime = max(p_norm_upper(phi, body) / float(cone_norm(phi, body)) for phi in family)
    rows = []
    for k in ks:
        raw, _ = raw_degree(g, codeg, body, k)
        gk = _matrix_power(g, k)
        proxy = max(float(cone_norm(group_action(gk, phi), body)) / float(cone_norm(phi, body)) for phi in family)
        rows.append(SandwichRow(k, float(raw) / vol, proxy, cprime * float(raw)))
    return rows
