"""Valuations as finite signed combinations of mixed-volume functionals.

A degree-``i`` valuation on R^n is stored as a list of terms
``(w, (A_1, ..., A_{n-i}))`` and acts by

    phi(L) = sum_terms w * V(L[i], A_1, ..., A_{n-i}).

Degree ``n`` terms have an empty tuple (multiples of ``vol``), degree ``0``
terms carry ``n`` bodies and evaluate to a constant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import arith
from .geometry import (
    DimensionMismatch,
    LinearMap,
    Polytope,
    ReferenceBody,
    apply_linear_map,
)
from .mixed import containment_scale, mixed_volume
from .parallel import pool_map
from . import sampling

UNIT = "unit"
PAPER = "paper"
CONV_MODES = (UNIT, PAPER)


class DegreeError(ValueError):
    """Degrees or arities do not fit the requested operation."""


def _body(b) -> Polytope:
    return b.body if isinstance(b, ReferenceBody) else b


def normalize_translation(p: Polytope) -> Polytope:
    """Translate ``p`` so its lexicographically first vertex is the origin.

    Mixed volumes are translation invariant, so this is the canonical
    representative used inside valuation terms.
    """
    v0 = p.vertices[0]
    if all(x == 0 for x in v0):
        return p
    return p.translate([-x for x in v0])


def _tuple_key(bodies: tuple) -> tuple:
    return tuple(b.sort_key() for b in bodies)


class Valuation:
    """Degree-``degree`` valuation on R^``dim`` given by weighted body tuples.

    Parameters
    ----------
    dim, degree : int
    terms : iterable of (weight, bodies)
        ``bodies`` must hold exactly ``dim - degree`` polytopes of dimension ``dim``.
    canonicalize : bool
        Merge identical tuples and drop zero weights (default).  Pass
        ``False`` to keep a specific representation, e.g. to test that an
        operation does not depend on it.
    """

    __slots__ = ("dim", "degree", "terms", "exact")

    def __init__(self, dim: int, degree: int, terms: Iterable = (), canonicalize: bool = True,
                 exact: bool | None = None):
        if not 0 <= degree <= dim:
            raise DegreeError(f"degree {degree} outside 0..{dim}")
        arity = dim - degree
        cleaned = []
        for w, bodies in terms:
            bodies = tuple(bodies)
            if len(bodies) != arity:
                raise DegreeError(f"degree-{degree} terms need {arity} bodies, got {len(bodies)}")
            for b in bodies:
                if b.dim != dim:
                    raise DimensionMismatch(f"body of dim {b.dim} in a valuation on R^{dim}")
            cleaned.append((w, bodies))
        if exact is None:
            flags = {b.exact for _, bs in cleaned for b in bs}
            if len(flags) > 1:
                raise arith.MixedArithmeticError("exact and float bodies mixed in one valuation")
            exact = flags.pop() if flags else arith.is_exact_mode()
        cleaned = [(arith.parse_number(w, exact), bs) for w, bs in cleaned]
        if canonicalize:
            merged: dict[tuple, object] = {}
            for w, bodies in cleaned:
                key = tuple(sorted((normalize_translation(b) for b in bodies), key=Polytope.sort_key))
                merged[key] = merged.get(key, 0) + w
            cleaned = sorted(((w, k) for k, w in merged.items() if w != 0), key=lambda t: _tuple_key(t[1]))
        self.dim = dim
        self.degree = degree
        self.terms = tuple(cleaned)
        self.exact = exact

    # constructors ----------------------------------------------------------
    @classmethod
    def volume(cls, n: int, weight=1, exact: bool | None = None) -> "Valuation":
        return cls(n, n, [(weight, ())], exact=exact)

    @classmethod
    def mixed(cls, bodies: Sequence[Polytope], weight=1) -> "Valuation":
        """``weight * V(., bodies)``; the degree is ``n - len(bodies)``."""
        bodies = list(bodies)
        if not bodies:
            raise DegreeError("use Valuation.volume for the empty tuple")
        n = bodies[0].dim
        return cls(n, n - len(bodies), [(weight, tuple(bodies))])

    @classmethod
    def reference(cls, b, degree: int, weight=1) -> "Valuation":
        """``V(B[n - degree], .)``."""
        b = _body(b)
        if degree == b.dim:
            return cls.volume(b.dim, weight, exact=b.exact)
        return cls.mixed([b] * (b.dim - degree), weight)

    # algebra -------------------------------------------------------------
    @property
    def arity(self) -> int:
        return self.dim - self.degree

    def is_zero(self) -> bool:
        return not self.terms

    def is_positive(self) -> bool:
        """All weights nonnegative (membership in the positive cone)."""
        return all(w >= 0 for w, _ in self.terms)

    def _check_compatible(self, other: "Valuation") -> None:
        if (self.dim, self.degree) != (other.dim, other.degree):
            raise DegreeError("valuations of different dimension or degree")
        if self.exact != other.exact:
            raise arith.MixedArithmeticError("exact and float valuations mixed")

    def __add__(self, other: "Valuation") -> "Valuation":
        self._check_compatible(other)
        return Valuation(self.dim, self.degree, self.terms + other.terms, exact=self.exact)

    def __neg__(self) -> "Valuation":
        return self.scaled(-1)

    def __sub__(self, other: "Valuation") -> "Valuation":
        return self + (-other)

    def scaled(self, c) -> "Valuation":
        c = arith.parse_number(c, self.exact)
        return Valuation(self.dim, self.degree, [(c * w, b) for w, b in self.terms], exact=self.exact)

    def __mul__(self, c) -> "Valuation":
        return self.scaled(c)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, Valuation):
            return NotImplemented
        return (self.dim, self.degree, self.terms) == (other.dim, other.degree, other.terms)

    def __hash__(self):
        return hash((self.dim, self.degree, self.terms))

    def __repr__(self):
        return f"Valuation(dim={self.dim}, degree={self.degree}, n_terms={len(self.terms)})"

    # serialization -------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "degree": self.degree,
            "terms": [{"weight": arith.format_number(w), "bodies": [b.to_json() for b in bs]}
                      for w, bs in self.terms],
        }

    @classmethod
    def from_json(cls, data: dict, exact: bool | None = None) -> "Valuation":
        try:
            dim = int(data["dim"])
            degree = int(data["degree"])
            raw_terms = data["terms"]
        except (KeyError, TypeError) as err:
            raise ValueError(f"valuation JSON needs dim, degree and terms ({err})") from err
        if exact is None:
            exact = arith.is_exact_mode()
        terms = []
        for t in raw_terms:
            bodies = tuple(Polytope.from_json(b, exact=exact) for b in t["bodies"])
            terms.append((arith.parse_number(t["weight"], exact), bodies))
        return cls(dim, degree, terms, exact=exact)


# --------------------------------------------------------------------------
# evaluation


def _zero(exact: bool):
    return Fraction(0) if exact else 0.0


def _check_body(phi: Valuation, body: Polytope) -> None:
    if body.dim != phi.dim:
        raise DimensionMismatch(f"body in R^{body.dim}, valuation on R^{phi.dim}")
    if body.exact != phi.exact:
        raise arith.MixedArithmeticError("exact and float values mixed in one computation")


def _term_sum(phi: Valuation, head: list[Polytope]):
    def one(term):
        w, bodies = term
        return w * mixed_volume(head + list(bodies))

    vals = pool_map(one, phi.terms)
    total = _zero(phi.exact)
    for v in vals:
        total = total + v
    return total


def evaluate(phi: Valuation, body) -> object:
    """phi(L) = sum_terms w * V(L[i], bodies)."""
    body = _body(body)
    _check_body(phi, body)
    if phi.degree == 0:
        return scalar(phi)
    if phi.degree == phi.dim:
        return sum((w for w, _ in phi.terms), _zero(phi.exact)) * body.volume()
    return _term_sum(phi, [body] * phi.degree)


def polarized_evaluate(phi: Valuation, bodies: Sequence) -> object:
    """sum_terms w * V(L_1, ..., L_i, bodies): the symmetric multilinear extension."""
    bodies = [_body(b) for b in bodies]
    if len(bodies) != phi.degree:
        raise DegreeError(f"degree-{phi.degree} valuation takes {phi.degree} bodies, got {len(bodies)}")
    for b in bodies:
        _check_body(phi, b)
    if phi.degree == 0:
        return scalar(phi)
    return _term_sum(phi, bodies)


def scalar(phi: Valuation) -> object:
    """The constant value of a degree-0 valuation."""
    if phi.degree != 0:
        raise DegreeError("only degree-0 valuations are constants")
    return _term_sum(phi, [])


# --------------------------------------------------------------------------
# convolution and the group action


def convolution_coefficient(n: int, i: int, j: int, mode: str = UNIT, exact: bool = True):
    """Weight factor for convolving degree ``i`` with degree ``j`` on R^n.

    ``paper``: i! j! / n!.  ``unit``: i! j! / (n! (i+j-n)!), which makes
    ``vol`` the unit and the product associative.  The two agree when
    ``i + j - n`` is 0 or 1.
    """
    if mode not in CONV_MODES:
        raise ValueError(f"unknown convolution mode {mode!r}")
    num = math.factorial(i) * math.factorial(j)
    den = math.factorial(n)
    if mode == UNIT:
        den *= math.factorial(i + j - n)
    return Fraction(num, den) if exact else num / den


def convolve(phi: Valuation, psi: Valuation, mode: str = UNIT) -> Valuation:
    """Degree ``i + j - n`` valuation with concatenated tuples."""
    if phi.dim != psi.dim:
        raise DimensionMismatch("valuations on spaces of different dimension")
    if phi.exact != psi.exact:
        raise arith.MixedArithmeticError("exact and float valuations mixed")
    n, i, j = phi.dim, phi.degree, psi.degree
    if i + j < n:
        raise DegreeError(f"convolution needs i + j >= n, got {i} + {j} < {n}")
    c = convolution_coefficient(n, i, j, mode, phi.exact)
    terms = [(c * w1 * w2, b1 + b2) for w1, b1 in phi.terms for w2, b2 in psi.terms]
    return Valuation(n, i + j - n, terms, exact=phi.exact)


def group_action(g: LinearMap, phi: Valuation) -> Valuation:
    """g . phi = |det g|^-1 phi_{g(bodies)}, so that (g . phi)(K) = phi(g^-1 K)."""
    if g.dim != phi.dim:
        raise DimensionMismatch("map and valuation dimensions differ")
    if g.exact != phi.exact:
        raise arith.MixedArithmeticError("exact and float values mixed in one computation")
    d = g.abs_det
    if d == 0:
        raise ValueError("group action needs an invertible map")
    inv = 1 / d
    terms = [(w * inv, tuple(apply_linear_map(g, b) for b in bodies)) for w, bodies in phi.terms]
    return Valuation(phi.dim, phi.degree, terms, exact=phi.exact)


def even_odd_split(phi: Valuation) -> tuple[Valuation, Valuation]:
    """(phi_even, phi_odd) with phi_even(-K) = phi_even(K) and phi_odd(-K) = -phi_odd(K)."""
    half = Fraction(1, 2) if phi.exact else 0.5
    refl = [(w, tuple(b.reflect() for b in bodies)) for w, bodies in phi.terms]
    even = Valuation(phi.dim, phi.degree, [(half * w, b) for w, b in phi.terms + tuple(refl)], exact=phi.exact)
    odd = Valuation(phi.dim, phi.degree,
                    [(half * w, b) for w, b in phi.terms] + [(-half * w, b) for w, b in refl], exact=phi.exact)
    return even, odd


# --------------------------------------------------------------------------
# norms


def cone_norm(phi: Valuation, b) -> object:
    """sum |w| V(B[i], bodies): the cone norm of the stored representation.

    This is an upper bound for the infimum over all positive
    decompositions; a cancelling representation such as
    ``V(., A) - V(., A)`` is not detected.
    """
    body = _body(b)
    _check_body(phi, body)
    absphi = Valuation(phi.dim, phi.degree, [(abs(w), bs) for w, bs in phi.terms], canonicalize=False,
                       exact=phi.exact)
    return evaluate(absphi, body)


def reverse_kt_constant(n: int, i: int, b) -> float:
    """n! / (i! (n-i)! vol(B)): the constant relating the P-norm to the cone norm."""
    vol = float(_body(b).volume())
    return math.comb(n, i) / vol


def p_ratio(phi: Valuation, b: Polytope, bodies: Sequence[Polytope]) -> float | None:
    """|phi(L_1..L_i)| / V(B[n-i], L_1..L_i), or ``None`` for a degenerate tuple."""
    den = float(mixed_volume([b] * (phi.dim - phi.degree) + list(bodies)))
    if den <= 1e-14:
        return None
    return abs(float(polarized_evaluate(phi, bodies))) / den


@dataclass
class PNormEstimate:
    """Certified lower bound for the P-norm with its maximizing tuple."""

    lower_bound: float
    argmax: tuple
    evaluations: int
    budget: int

    def __iter__(self):
        return iter((self.lower_bound, self.argmax))


def _sample_tuple(rng: np.random.Generator, b: Polytope, i: int) -> tuple:
    out = []
    for _ in range(i):
        u = rng.random()
        if u < 0.4:
            out.append(sampling.random_segment_in(rng, b))
        elif u < 0.9:
            out.append(sampling.random_body_in(rng, b))
        else:
            out.append(b)
    return tuple(out)


def _inside(b: Polytope, x) -> bool:
    for a, off in b.facets():
        if sum(float(p) * float(q) for p, q in zip(a, x)) > float(off) + 1e-12:
            return False
    return True


def _moves(b: Polytope, tup: tuple, step: float):
    scale = float(np.max(np.abs(b.array())))
    for j, body in enumerate(tup):
        if body == b:
            continue
        for vi, v in enumerate(body.vertices):
            for c in range(b.dim):
                for sgn in (1, -1):
                    delta = step * scale * sgn
                    w = list(v)
                    w[c] = w[c] + (Fraction(delta).limit_denominator(1024) if b.exact else delta)
                    if not _inside(b, w):
                        continue
                    pts = list(body.vertices)
                    pts[vi] = tuple(w)
                    moved = Polytope.from_points(pts, dim=b.dim, exact=b.exact)
                    yield tup[:j] + (moved,) + tup[j + 1:]


def _local_search(phi, b, best, best_ratio, budget, used, step=0.25):
    """First-improvement coordinate moves on the vertices of the best tuple, kept inside B."""
    while used < budget and step > 1e-3:
        improved = False
        for cand in _moves(b, best, step):
            if used >= budget:
                break
            used += 1
            r = p_ratio(phi, b, cand)
            if r is not None and r > best_ratio:
                best, best_ratio, improved = cand, r, True
                break
        if not improved:
            step /= 2
    return best, best_ratio, used


def p_norm_estimate(phi: Valuation, b, rng: np.random.Generator | None = None, budget: int = 200,
                    samples: Iterable[tuple] | None = None, local_search: bool = True) -> PNormEstimate:
    """Lower bound for ||phi||_P from sampled tuples inside B.

    Tuples are random polytopes inside ``B``, segments, and ``B`` itself
    (or the caller's ``samples``); the best one is refined by coordinate
    moves of its vertices.  Every reported ratio is attained, so the
    result is a valid lower bound.
    """
    body = _body(b)
    _check_body(phi, body)
    if phi.degree < 1:
        raise DegreeError("the P-norm needs degree >= 1")
    rng = rng if rng is not None else np.random.default_rng(0)
    i = phi.degree
    candidates = [tuple([body] * i)]
    if samples is not None:
        candidates.extend(tuple(s) for s in samples)
    best, best_ratio, used = None, -1.0, 0
    n_random = max(0, budget // 2 - len(candidates)) if local_search else max(0, budget - len(candidates))

    def gen():
        yield from candidates
        for _ in range(n_random):
            yield _sample_tuple(rng, body, i)

    for tup in gen():
        used += 1
        r = p_ratio(phi, body, tup)
        if r is not None and r > best_ratio:
            best, best_ratio = tup, r
    if local_search and best is not None:
        best, best_ratio, used = _local_search(phi, body, best, best_ratio, budget, used)
    return PNormEstimate(max(best_ratio, 0.0), best, used, budget)


def p_norm_upper(phi: Valuation, b) -> float:
    """Upper bound sum |w| prod_j r(B, A_j) for ||phi||_P.

    ``A_j`` fits in a translate of ``r_j B``, so monotonicity of mixed
    volumes gives ``|phi(L_1..L_i)| <= bound * V(B[n-i], L_1..L_i)``.
    """
    body = _body(b)
    total = 0.0
    cache: dict[Polytope, float] = {}
    for w, bodies in phi.terms:
        prod = abs(float(w))
        for a in bodies:
            if a not in cache:
                cache[a] = containment_scale(body, a).r_exact
            prod *= cache[a]
        total += prod
    return total


# --------------------------------------------------------------------------
# strict positivity


@dataclass
class StrictPositivityCertificate:
    """Sampled witness that phi >= epsilon V(B[n-i], .) in the polarized sense.

    ``epsilon`` is the minimum ratio over ``witness_samples``; it is a
    probe, not a proof, for tuples outside the sample.
    """

    valuation: Valuation
    epsilon: float
    witness_samples: list = field(default_factory=list)
    reference_id: str = ""


class NotStrictlyPositive(ValueError):
    pass


def certify_strict_positivity(phi: Valuation, b, rng: np.random.Generator | None = None,
                              n_samples: int = 24) -> StrictPositivityCertificate:
    body = _body(b)
    if not phi.is_positive():
        raise NotStrictlyPositive("valuation has negative weights")
    if phi.is_zero():
        raise NotStrictlyPositive("zero valuation")
    rng = rng if rng is not None else np.random.default_rng(0)
    samples = [tuple([body] * phi.degree)]
    samples += [_sample_tuple(rng, body, phi.degree) for _ in range(n_samples)]
    eps = math.inf
    kept = []
    for tup in samples:
        den = float(mixed_volume([body] * phi.arity + list(tup)))
        if den <= 1e-14:
            continue
        r = float(polarized_evaluate(phi, tup)) / den
        kept.append(tup)
        eps = min(eps, r)
    if not kept or eps <= 0:
        raise NotStrictlyPositive(f"sampled ratio {eps} is not positive")
    rid = b.id if isinstance(b, ReferenceBody) else ""
    return StrictPositivityCertificate(phi, eps, kept, rid)
