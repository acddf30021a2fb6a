"""Mixed volumes of polytopes and the inequalities and identities built on them.

The general engine is inclusion-exclusion polarization over Minkowski
sums, grouped by repeated arguments:

    V(K_1[m_1], ..., K_r[m_r])
        = 1/n! * sum_{0 <= a <= m} (-1)^(n - |a|) prod_j C(m_j, a_j) vol(sum_j a_j K_j)

Boxes and segments have closed forms (permanent / determinant) used as
fast paths; ``volume_polynomial`` recovers the same numbers by
interpolation and serves as the independent check.
"""
from __future__ import annotations

import itertools
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from . import arith
from .geometry import (
    DegenerateBody,
    DimensionMismatch,
    Polytope,
    _check_same_dim,
    _points_volume,
    complement_basis,
    extreme_indices,
    project,
)

# --------------------------------------------------------------------------
# memo cache for volumes of Minkowski combinations


class _VolumeCache:
    def __init__(self, maxsize: int = 50_000):
        self.maxsize = maxsize
        self._data: OrderedDict = OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, key):
        with self._lock:
            if key in self._data:
                self._data.move_to_end(key)
                self.hits += 1
                return self._data[key]
            self.misses += 1
            return None

    def put(self, key, value):
        with self._lock:
            # identical keys always carry identical values
            self._data[key] = value
            if len(self._data) > self.maxsize:
                self._data.popitem(last=False)

    def clear(self):
        with self._lock:
            self._data.clear()
            self.hits = self.misses = 0


volume_cache = _VolumeCache()


_PRUNE_ABOVE = 1500


def _hull_vertex_rows(arr: np.ndarray) -> np.ndarray:
    """Rows of ``arr`` that are hull vertices (float combinatorics, any affine dimension)."""
    if arr.dtype.kind == "f" and len(arith.pivot_columns(arr[1:] - arr[0], False)) == arr.shape[1]:
        from .geometry import _float_hull

        return arr[np.sort(_float_hull(arr).vertices)]
    idx = extreme_indices([tuple(r) for r in arr.tolist()], exact=False)
    return arr[idx]


def _body_array(body: Polytope, denom: int) -> np.ndarray:
    if body.exact:
        return np.array([[int(x * denom) for x in v] for v in body.vertices], dtype=object)
    return body.array()


def combination_volume(terms: Sequence[tuple[Polytope, int]]):
    """vol(sum_j a_j K_j) for integer multiplicities ``a_j >= 0``, memoized."""
    terms = [(b, a) for b, a in terms if a > 0]
    if not terms:
        return Fraction(0)
    exact = terms[0][0].exact
    key = (exact, tuple(sorted(terms, key=lambda t: (t[0].sort_key(), t[1]))))
    cached = volume_cache.get(key)
    if cached is not None:
        return cached
    n = terms[0][0].dim
    denom = arith.common_denominator(x for b, _ in terms for v in b.vertices for x in v) if exact else 1
    arrays = [_body_array(b, denom) * a for b, a in key[1]]
    if exact:
        biggest = sum(int(np.max(np.abs(arr))) for arr in arrays) if arrays else 0
        dtype = np.int64 if biggest < 2 ** 40 else object
        arrays = [arr.astype(dtype) for arr in arrays]
    if not exact and len(arrays) > 1:
        idx = _vertex_tuples(tuple(b for b, _ in key[1]))
        pts = sum(arr[idx[:, j]] for j, arr in enumerate(arrays))
        value = _float_volume(pts)
        volume_cache.put(key, value)
        return value
    pts = arrays[0]
    for step, arr in enumerate(arrays[1:], start=2):
        pts = (pts[:, None, :] + arr[None, :, :]).reshape(-1, n)
        pts = np.unique(pts, axis=0) if pts.dtype != object else np.array(sorted(set(map(tuple, pts.tolist()))), dtype=object)
        # the final volume hulls the last sum anyway
        if len(pts) > _PRUNE_ABOVE and step < len(arrays):
            pts = _hull_vertex_rows(pts)
    if exact:
        value = _points_volume([tuple(Fraction(int(x)) for x in r) for r in pts], True) / denom ** n \
            if pts.dtype == object else _int_volume(pts) / Fraction(denom ** n)
    else:
        value = _float_volume(pts)
    volume_cache.put(key, value)
    return value


_tuple_cache: OrderedDict = OrderedDict()


def _vertex_tuples(bodies: tuple[Polytope, ...]) -> np.ndarray:
    """Index tuples (i_1, ..., i_m) whose vertex sums include every vertex of K_1 + ... + K_m.

    The normal fan of sum a_j K_j does not depend on the weights a_j > 0, so
    one set of tuples serves every positive combination.  Partial sums are
    pruned to their hull vertices as they are built.
    """
    with _hull_lock:
        if bodies in _tuple_cache:
            _tuple_cache.move_to_end(bodies)
            return _tuple_cache[bodies]
    from .geometry import _float_hull

    n = bodies[0].dim
    arrays = [b.array() for b in bodies]
    pts = arrays[0]
    idx = np.arange(len(pts))[:, None]
    for arr in arrays[1:]:
        m = len(arr)
        pts = (pts[:, None, :] + arr[None, :, :]).reshape(-1, n)
        idx = np.hstack([np.repeat(idx, m, axis=0), np.tile(np.arange(m), len(idx))[:, None]])
        if len(pts) > n + 1 and len(arith.pivot_columns(pts[1:] - pts[0], False)) == n:
            keep = np.sort(_float_hull(pts).vertices)
            pts, idx = pts[keep], idx[keep]
    with _hull_lock:
        _tuple_cache[bodies] = idx
        if len(_tuple_cache) > 4096:
            _tuple_cache.popitem(last=False)
    return idx


_hull_lock = threading.Lock()


def _float_volume(pts: np.ndarray) -> float:
    from .geometry import _float_hull

    n = pts.shape[1]
    if len(pts) <= n:
        return 0.0
    diffs = pts[1:] - pts[0]
    if len(arith.pivot_columns(diffs, False)) < n:
        return 0.0
    if n == 1:
        return float(pts.max() - pts.min())
    return float(_float_hull(pts).volume)


def _int_volume(pts: np.ndarray) -> Fraction:
    """Exact volume of the hull of integer points (int64 array)."""
    from .geometry import _float_hull, _sum_abs_dets, int_full_rank

    n = pts.shape[1]
    if len(pts) <= n:
        return Fraction(0)
    if not int_full_rank(pts[1:] - pts[0]):
        return Fraction(0)
    if n == 1:
        return Fraction(int(pts.max() - pts.min()))
    hull = _float_hull(pts.astype(float))
    simp = hull.simplices
    apex = pts[int(simp[0][0])]
    mats = pts[simp] - apex
    return Fraction(_sum_abs_dets(mats), math.factorial(n))


# --------------------------------------------------------------------------
# fast paths


def permanent(matrix) -> object:
    """Permanent by Ryser's inclusion-exclusion formula with Gray-code updates."""
    a = [list(r) for r in matrix]
    n = len(a)
    if n == 0:
        return 1
    zero = a[0][0] * 0
    row_sums = [zero] * n
    total = zero
    prev_gray = 0
    for k in range(1, 2 ** n):
        gray = k ^ (k >> 1)
        changed = (gray ^ prev_gray).bit_length() - 1
        sign = 1 if gray & (1 << changed) else -1
        for i in range(n):
            row_sums[i] = row_sums[i] + sign * a[i][changed]
        prod = row_sums[0]
        for i in range(1, n):
            prod = prod * row_sums[i]
        bits = bin(gray).count("1")
        total = total + (prod if (n - bits) % 2 == 0 else -prod)
        prev_gray = gray
    return total


def box_sides(p: Polytope):
    """Side lengths if ``p`` is an axis-aligned box (degenerate sides allowed), else None."""
    n = p.dim
    lo = [min(v[j] for v in p.vertices) for j in range(n)]
    hi = [max(v[j] for v in p.vertices) for j in range(n)]
    free = sum(1 for a, b in zip(lo, hi) if a != b)
    if len(p.vertices) != 2 ** free:
        return None
    for v in p.vertices:
        for j in range(n):
            if v[j] != lo[j] and v[j] != hi[j]:
                return None
    return [b - a for a, b in zip(lo, hi)]


def segment_direction(p: Polytope):
    if len(p.vertices) != 2:
        return None
    a, b = p.vertices
    return [y - x for x, y in zip(a, b)]


def _factorial(n: int, exact: bool):
    f = math.factorial(n)
    return Fraction(f) if exact else float(f)


def _fast_path(bodies: Sequence[Polytope]):
    n = bodies[0].dim
    exact = bodies[0].exact
    if any(len(b.vertices) == 1 for b in bodies):
        return Fraction(0) if exact else 0.0
    sides = [box_sides(b) for b in bodies]
    if all(s is not None for s in sides):
        return permanent(sides) / _factorial(n, exact)
    dirs = [segment_direction(b) for b in bodies]
    if all(d is not None for d in dirs):
        return abs(arith.determinant(dirs)) / _factorial(n, exact)
    return None


# --------------------------------------------------------------------------
# mixed volume


def _group(bodies: Sequence[Polytope]) -> list[tuple[Polytope, int]]:
    counts: dict[Polytope, int] = {}
    for b in bodies:
        counts[b] = counts.get(b, 0) + 1
    return sorted(counts.items(), key=lambda t: t[0].sort_key())


def polarization(bodies: Sequence[Polytope]):
    """Mixed volume by grouped inclusion-exclusion over Minkowski sums (no fast paths)."""
    n = bodies[0].dim
    exact = bodies[0].exact
    groups = _group(bodies)
    mults = [m for _, m in groups]
    total = Fraction(0) if exact else 0.0
    for a in itertools.product(*[range(m + 1) for m in mults]):
        s = sum(a)
        if s == 0:
            continue
        coeff = 1
        for m, aj in zip(mults, a):
            coeff *= math.comb(m, aj)
        if (n - s) % 2:
            coeff = -coeff
        vol = combination_volume([(g[0], aj) for g, aj in zip(groups, a)])
        total = total + coeff * vol
    return total / _factorial(n, exact)


def mixed_volume(bodies: Sequence[Polytope], use_fast_paths: bool = True):
    """V(K_1, ..., K_n) for ``n`` bodies in R^n."""
    bodies = list(bodies)
    if not bodies:
        raise ValueError("mixed volume needs n bodies")
    _check_same_dim(*bodies)
    n = bodies[0].dim
    if len(bodies) != n:
        raise ValueError(f"mixed volume in R^{n} takes exactly {n} bodies, got {len(bodies)}")
    if use_fast_paths:
        fast = _fast_path(bodies)
        if fast is not None:
            return fast
    value = polarization(bodies)
    if not bodies[0].exact and value < 0:
        # cancellation noise around a true zero
        scale = max(b.volume() for b in bodies) if any(b.is_full_dimensional for b in bodies) else 0.0
        if -value <= 1e-9 * max(scale, 1e-300) or value > -1e-12:
            value = 0.0
    return value


def mixed_volume_with_multiplicities(pairs: Sequence[tuple[Polytope, int]]):
    """V(K_1[m_1], ..., K_r[m_r])."""
    bodies = [b for b, m in pairs for _ in range(m)]
    return mixed_volume(bodies)


# --------------------------------------------------------------------------
# interpolation oracle


def _monomials(m: int, n: int) -> list[tuple[int, ...]]:
    out = []
    for combo in itertools.combinations_with_replacement(range(m), n):
        alpha = [0] * m
        for j in combo:
            alpha[j] += 1
        out.append(tuple(alpha))
    return sorted(set(out), reverse=True)


def default_grid(m: int, n: int) -> list[tuple[int, ...]]:
    """Positive points (beta + 1, 1) with |beta| <= n: a shifted principal lattice."""
    pts = []
    for beta in itertools.product(range(n + 1), repeat=m - 1):
        if sum(beta) <= n:
            pts.append(tuple(b + 1 for b in beta) + (1,))
    return pts


@lru_cache(maxsize=64)
def _exact_inverse(m: int, n: int, grid: tuple) -> tuple:
    mons = _monomials(m, n)
    a = [[Fraction(math.prod(t ** e for t, e in zip(pt, alpha))) for alpha in mons] for pt in grid]
    size = len(mons)
    aug = [row + [Fraction(int(i == j)) for j in range(size)] for i, row in enumerate(a)]
    red, piv = arith.row_reduce_exact(aug)
    if piv[:size] != list(range(size)):
        raise np.linalg.LinAlgError("singular interpolation grid")
    return tuple(tuple(red[i][size:]) for i in range(size))


class SingularGrid(ValueError):
    pass


def volume_polynomial(bodies: Sequence[Polytope], grid=None) -> dict[tuple[int, ...], object]:
    """Coefficients of vol(t_1 K_1 + ... + t_m K_m), recovered by interpolation.

    Returns ``{alpha: coefficient}`` over the exponent vectors with
    ``|alpha| = n``.  The mixed volume ``V(K[alpha])`` is
    ``coefficient * alpha! / n!``.
    """
    bodies = list(bodies)
    if not bodies:
        raise ValueError("need at least one body")
    _check_same_dim(*bodies)
    m = len(bodies)
    n = bodies[0].dim
    exact = bodies[0].exact
    mons = _monomials(m, n)
    grid = tuple(tuple(pt) for pt in (grid if grid is not None else default_grid(m, n)))
    if len(grid) != len(mons):
        raise SingularGrid(f"grid needs exactly {len(mons)} points, got {len(grid)}")
    vols = []
    for pt in grid:
        if any(t < 0 or int(t) != t for t in pt):
            raise ValueError("grid points must be nonnegative integers")
        vols.append(combination_volume([(b, int(t)) for b, t in zip(bodies, pt)]))
    if exact:
        try:
            inv = _exact_inverse(m, n, grid)
        except np.linalg.LinAlgError as err:
            raise SingularGrid(str(err)) from err
        coeffs = [sum(r * v for r, v in zip(row, vols)) for row in inv]
    else:
        a = np.array([[float(math.prod(t ** e for t, e in zip(pt, alpha))) for alpha in mons] for pt in grid])
        if np.linalg.matrix_rank(a) < len(mons):
            raise SingularGrid("singular interpolation grid")
        inv = np.array(_exact_inverse(m, n, grid), dtype=float)
        coeffs = [float(x) for x in inv @ np.array(vols, dtype=float)]
    return dict(zip(mons, coeffs))


def mixed_volume_by_interpolation(bodies: Sequence[Polytope]):
    """V(K_1, ..., K_n) read off the t_1...t_n coefficient of the volume polynomial."""
    bodies = list(bodies)
    n = bodies[0].dim
    groups = _group(bodies)
    coeffs = volume_polynomial([g for g, _ in groups])
    alpha = tuple(m for _, m in groups)
    fact = math.prod(math.factorial(a) for a in alpha)
    c = coeffs[alpha]
    return c * fact / math.factorial(n) if not isinstance(c, Fraction) else c * Fraction(fact, math.factorial(n))


# --------------------------------------------------------------------------
# inequalities and identities


def af_margin(k: Polytope, l: Polytope, rest: Sequence[Polytope]):
    """V(K,L,rest)^2 - V(K,K,rest) V(L,L,rest); nonnegative by Alexandrov-Fenchel."""
    rest = list(rest)
    if len(rest) != k.dim - 2:
        raise ValueError(f"need {k.dim - 2} further bodies")
    kl = mixed_volume([k, l] + rest)
    kk = mixed_volume([k, k] + rest)
    ll = mixed_volume([l, l] + rest)
    return kl * kl - kk * ll


def _orthonormal_columns(columns, exact: bool):
    """Orthonormal basis of span(columns); coordinate bases are kept as they are (exactly)."""
    from .geometry import _is_coordinate_basis

    if _is_coordinate_basis(columns) is not None:
        return [tuple(arith.parse_number(x, exact) for x in c) for c in columns]
    q, _ = np.linalg.qr(np.asarray(columns, dtype=float).T)
    return [tuple(arith.parse_number(x, exact) for x in q[:, k]) for k in range(q.shape[1])]


def _distance_to_subspace(p: Polytope, basis) -> float:
    b = np.asarray(basis, dtype=float).T
    x = p.array()
    coef, *_ = np.linalg.lstsq(b, x.T, rcond=None)
    return float(np.max(np.abs(b @ coef - x.T))) if x.size else 0.0


def reduction_formula_residual(l_bodies: Sequence[Polytope], k_bodies: Sequence[Polytope], h_basis, tol: float = 1e-9):
    """C(n,k) V(L_1..L_k, K_1..K_{n-k}) - V_H(L) * V_{H-perp}(p(K)); zero in theory.

    ``h_basis`` spans the k-dimensional subspace H that contains every L_i.
    """
    l_bodies = list(l_bodies)
    k_bodies = list(k_bodies)
    _check_same_dim(*(l_bodies + k_bodies))
    n = l_bodies[0].dim
    k = len(l_bodies)
    if len(h_basis) != k or k + len(k_bodies) != n:
        raise ValueError("need dim H = number of L bodies and n bodies overall")
    exact = l_bodies[0].exact
    basis = _orthonormal_columns(h_basis, exact)
    for body in l_bodies:
        if _distance_to_subspace(body, basis) > tol:
            raise ValueError("an L body is not contained in H")
    comp = complement_basis(basis, exact)
    full = mixed_volume(l_bodies + k_bodies)
    in_h = mixed_volume([project(b, basis) for b in l_bodies])
    in_perp = mixed_volume([project(b, comp) for b in k_bodies])
    return math.comb(n, k) * full - in_h * in_perp


@dataclass(frozen=True)
class ContainmentScale:
    r_exact: float
    r_bound: object
    translation: tuple

    def __iter__(self):
        return iter((self.r_exact, self.r_bound))


def containment_scale(k: Polytope, m: Polytope) -> ContainmentScale:
    """Smallest r with M inside rK + t for some t, and the bound n V(K[n-1], M) / vol(K)."""
    _check_same_dim(k, m)
    if not k.is_full_dimensional:
        raise DegenerateBody("containment scale needs a full-dimensional K")
    n = k.dim
    facets = k.facets()
    a_rows, b_rows = [], []
    for a, b in facets:
        af = [float(x) for x in a]
        for v in m.vertices:
            # <v - t, a> <= r b   ->   -b r - <t, a> <= -<v, a>
            a_rows.append([-float(b)] + [-x for x in af])
            b_rows.append(-sum(x * float(y) for x, y in zip(af, v)))
    c = [1.0] + [0.0] * n
    bounds = [(0, None)] + [(None, None)] * n
    res = linprog(c, A_ub=np.array(a_rows), b_ub=np.array(b_rows), bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"containment LP failed: {res.message}")
    r = float(res.x[0])
    bound = n * mixed_volume([k] * (n - 1) + [m]) / k.volume()
    return ContainmentScale(r, bound, tuple(float(x) for x in res.x[1:]))
