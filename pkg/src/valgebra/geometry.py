"""Polytopes in vertex representation and the basic operations on them.

Bodies are stored as canonical vertex lists (extreme points only, sorted
lexicographically), so two equal bodies compare and hash equal.  Facet
data is derived on demand and cached on the instance.
"""
from __future__ import annotations

import itertools
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from . import arith


class DimensionMismatch(ValueError):
    pass


class DegenerateBody(ValueError):
    """Raised when an operation needs a full-dimensional body."""


# --------------------------------------------------------------------------
# hull primitives


_hull_cache: "OrderedDict[bytes, ConvexHull]" = OrderedDict()
_hull_lock = threading.Lock()


def _float_hull(pts: np.ndarray, options: str | None = None) -> ConvexHull:
    """qhull hull (triangulated facets), memoized on the exact point array."""
    pts = np.ascontiguousarray(pts, dtype=float)
    key = pts.tobytes() + bytes(str(pts.shape), "ascii")
    with _hull_lock:
        hit = _hull_cache.get(key)
        if hit is not None:
            _hull_cache.move_to_end(key)
            return hit
    try:
        hull = ConvexHull(pts)
    except QhullError:
        # nearly flat point sets: joggle instead of failing outright
        hull = ConvexHull(pts, qhull_options="QJ")
    with _hull_lock:
        _hull_cache[key] = hull
        if len(_hull_cache) > 4096:
            _hull_cache.popitem(last=False)
    return hull


def _to_int_coords(pts: Sequence[Sequence[Fraction]]) -> tuple[list[list[int]], int]:
    d = arith.common_denominator(v for p in pts for v in p)
    return [[int(v * d) for v in p] for p in pts], d


def _simplex_normal(rows: list[list[int]]) -> list[int]:
    """Integer normal of the hyperplane through ``n`` integer points in Z^n."""
    base = rows[0]
    diffs = [[a - b for a, b in zip(r, base)] for r in rows[1:]]
    n = len(base)
    normal = []
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in diffs]
        normal.append((-1) ** j * arith.det_int(minor))
    return normal


def _affine_projection(pts, exact: bool) -> tuple[list[int], list]:
    """Pivot coordinates of the affine hull and the points projected onto them."""
    base = pts[0]
    diffs = [[a - b for a, b in zip(p, base)] for p in pts[1:]]
    cols = arith.pivot_columns(diffs, exact)
    return cols, [[p[c] for c in cols] for p in pts]


def _extreme_indices_full(pts, exact: bool) -> list[int]:
    n = len(pts[0])
    if n == 1:
        vals = [p[0] for p in pts]
        lo = min(range(len(pts)), key=lambda i: vals[i])
        hi = max(range(len(pts)), key=lambda i: vals[i])
        return sorted({lo, hi})
    if not exact:
        hull = _float_hull(np.asarray(pts, dtype=float))
        return sorted(int(i) for i in hull.vertices)
    ints, _ = _to_int_coords(pts)
    hull = _float_hull(np.asarray(ints, dtype=float))
    incident: dict[int, list[list[int]]] = {}
    for simplex in hull.simplices:
        rows = [ints[int(i)] for i in simplex]
        normal = _simplex_normal(rows)
        for i in simplex:
            incident.setdefault(int(i), []).append(normal)
    keep = []
    for idx, normals in incident.items():
        # an extreme point sits on facets whose normals span the space
        rank = len(arith.row_reduce_exact([[Fraction(x) for x in v] for v in normals])[1])
        if rank == n:
            keep.append(idx)
    return sorted(keep)


def extreme_indices(pts, exact: bool) -> list[int]:
    """Indices of the extreme points of a finite point set (any affine dimension)."""
    if len(pts) == 1:
        return [0]
    n = len(pts[0])
    cols, proj = _affine_projection(pts, exact)
    r = len(cols)
    if r == 0:
        return [0]
    if r == n:
        return _extreme_indices_full(pts, exact)
    sub = _extreme_indices_full(proj, exact)
    return sub


def _points_volume(pts, exact: bool):
    """n-dimensional volume of the hull of ``pts`` (zero when lower dimensional)."""
    n = len(pts[0])
    zero = Fraction(0) if exact else 0.0
    if len(pts) <= n:
        return zero
    if n == 1:
        vals = [p[0] for p in pts]
        return max(vals) - min(vals)
    base = pts[0]
    diffs = [[a - b for a, b in zip(p, base)] for p in pts[1:]]
    if len(arith.pivot_columns(diffs, exact)) < n:
        return zero
    if not exact:
        return float(_float_hull(np.asarray(pts, dtype=float)).volume)
    ints, d = _to_int_coords(pts)
    hull = _float_hull(np.asarray(ints, dtype=float))
    # cone over the boundary from a hull vertex; simplices through it vanish
    apex = ints[int(hull.simplices[0][0])]
    arr = np.asarray(ints, dtype=object)
    total = _sum_abs_dets(arr[hull.simplices] - np.asarray(apex, dtype=object))
    return Fraction(total, math.factorial(n) * d ** n)


def _sum_abs_dets(mats) -> int:
    """Sum of |det| over integer matrices (nested lists or an int array), exactly."""
    if len(mats) == 0:
        return 0
    arr = mats if isinstance(mats, np.ndarray) else np.asarray(mats, dtype=object)
    n = arr.shape[1]
    biggest = int(np.max(np.abs(arr)))
    # Hadamard: |det| <= (sqrt(n) * max entry)^n; float LU is exact after rounding below 2^50
    if biggest == 0 or (math.log2(biggest) + 0.5 * math.log2(n)) * n < 50:
        dets = np.rint(np.abs(np.linalg.det(arr.astype(float)))).astype(np.int64)
        return int(dets.sum())
    return sum(abs(arith.det_int(m)) for m in arr.tolist())


def int_full_rank(diffs: np.ndarray) -> bool:
    """Exact test that the integer rows of ``diffs`` span R^n."""
    m, n = diffs.shape
    if m < n:
        return False
    import scipy.linalg

    _, _, perm = scipy.linalg.qr(diffs.astype(float).T, mode="economic", pivoting=True)
    # n rows chosen by pivoted QR; a nonzero exact determinant certifies full rank
    if arith.det_int(diffs[perm[:n]].tolist()) != 0:
        return True
    return len(arith.row_reduce_exact([[Fraction(int(x)) for x in r] for r in diffs.tolist()])[1]) == n


# --------------------------------------------------------------------------
# Polytope


class Polytope:
    """A convex polytope given by its (canonical) vertex list.

    Use :meth:`from_points` to build one; it drops non-extreme points and
    sorts the vertices, so equal bodies are structurally equal.
    """

    __slots__ = ("dim", "vertices", "exact", "_cache", "_lock", "_hash")

    def __init__(self, dim: int, vertices: tuple, exact: bool, _trusted: bool = False):
        if not _trusted:
            raise TypeError("use Polytope.from_points")
        self.dim = dim
        self.vertices = vertices
        self.exact = exact
        self._cache: dict = {}
        self._lock = threading.Lock()
        self._hash = hash((dim, vertices))

    @classmethod
    def from_points(cls, points, dim: int | None = None, exact: bool | None = None) -> "Polytope":
        if exact is None:
            exact = arith.is_exact_mode()
        pts = [tuple(arith.parse_number(x, exact) for x in p) for p in points]
        if not pts:
            raise ValueError("a polytope needs at least one point")
        if dim is None:
            dim = len(pts[0])
        if dim < 1 or any(len(p) != dim for p in pts):
            raise DimensionMismatch(f"points must all have dimension {dim}")
        uniq = sorted(set(pts))
        idx = extreme_indices(uniq, exact)
        verts = tuple(sorted(uniq[i] for i in idx))
        return cls(dim, verts, exact, _trusted=True)

    # structural equality ------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, Polytope):
            return NotImplemented
        return self.dim == other.dim and self.vertices == other.vertices

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Polytope(dim={self.dim}, n_vertices={len(self.vertices)})"

    def sort_key(self):
        return (len(self.vertices), self.vertices)

    def __lt__(self, other):
        return self.sort_key() < other.sort_key()

    # derived data -----------------------------------------------------------
    def _cached(self, key, fn):
        try:
            return self._cache[key]
        except KeyError:
            pass
        value = fn()
        with self._lock:
            self._cache.setdefault(key, value)
        return self._cache[key]

    def array(self) -> np.ndarray:
        return self._cached("array", lambda: np.asarray(self.vertices, dtype=float))

    @property
    def affine_dim(self) -> int:
        def compute():
            if len(self.vertices) == 1:
                return 0
            base = self.vertices[0]
            diffs = [[a - b for a, b in zip(p, base)] for p in self.vertices[1:]]
            return len(arith.pivot_columns(diffs, self.exact))

        return self._cached("affine_dim", compute)

    @property
    def is_full_dimensional(self) -> bool:
        return self.affine_dim == self.dim

    def volume(self):
        return self._cached("volume", lambda: _points_volume(list(self.vertices), self.exact))

    def support(self, u):
        """Support function h(u) = max over vertices of <v, u>."""
        if self.exact and all(isinstance(x, (int, Fraction)) for x in u):
            return max(sum(a * b for a, b in zip(v, u)) for v in self.vertices)
        return float(np.max(self.array() @ np.asarray(u, dtype=float)))

    def centroid_of_vertices(self):
        k = len(self.vertices)
        return tuple(sum(v[j] for v in self.vertices) / k for j in range(self.dim))

    def facets(self) -> list[tuple[tuple, object]]:
        """Facet inequalities ``<a, x> <= b`` of a full-dimensional body.

        Exact bodies get primitive integer normals with rational offsets;
        float bodies get unit normals.
        """
        return self._cached("facets", self._compute_facets)

    def _compute_facets(self):
        if not self.is_full_dimensional:
            raise DegenerateBody("facets need a full-dimensional body")
        n = self.dim
        if n == 1:
            lo, hi = self.vertices[0][0], self.vertices[-1][0]
            one = 1 if self.exact else 1.0
            return [((one,), hi), ((-one,), -lo)]
        if not self.exact:
            hull = _float_hull(self.array())
            out: dict[tuple, tuple] = {}
            for eq in hull.equations:
                a = eq[:-1] / np.linalg.norm(eq[:-1])
                b = -eq[-1] / np.linalg.norm(eq[:-1])
                key = tuple(np.round(a, 9))
                if key not in out:
                    out[key] = (tuple(float(x) for x in a), float(b))
            return sorted(out.values())
        ints, d = _to_int_coords(self.vertices)
        hull = _float_hull(np.asarray(ints, dtype=float))
        k = len(ints)
        centre = [sum(p[j] for p in ints) for j in range(n)]
        found: dict[tuple, Fraction] = {}
        for simplex in hull.simplices:
            rows = [ints[int(i)] for i in simplex]
            normal = _simplex_normal(rows)
            g = 0
            for x in normal:
                g = math.gcd(g, x)
            if g == 0:
                continue
            normal = [x // g for x in normal]
            # orient outward: the vertex centroid lies strictly inside
            inner = sum(a * (k * p - c) for a, p, c in zip(normal, rows[0], centre))
            if inner < 0:
                normal = [-x for x in normal]
            key = tuple(normal)
            if key not in found:
                found[key] = Fraction(sum(a * p for a, p in zip(key, rows[0])), d)
        return sorted(found.items())

    def translate(self, t) -> "Polytope":
        t = [arith.parse_number(x, self.exact) for x in t]
        pts = [tuple(a + b for a, b in zip(v, t)) for v in self.vertices]
        return Polytope(self.dim, tuple(sorted(pts)), self.exact, _trusted=True)

    def scale(self, s) -> "Polytope":
        s = arith.parse_number(s, self.exact)
        if s == 0:
            return Polytope(self.dim, (tuple(0 * x for x in self.vertices[0]),), self.exact, _trusted=True)
        pts = [tuple(s * x for x in v) for v in self.vertices]
        return Polytope(self.dim, tuple(sorted(pts)), self.exact, _trusted=True)

    def reflect(self) -> "Polytope":
        return self.scale(-1)

    def to_json(self) -> dict:
        return {"dim": self.dim, "vertices": [[arith.format_number(x) for x in v] for v in self.vertices]}

    @classmethod
    def from_json(cls, data: dict, exact: bool | None = None) -> "Polytope":
        if "vertices" not in data:
            raise ValueError("body JSON needs a 'vertices' list")
        return cls.from_points(data["vertices"], dim=data.get("dim"), exact=exact)


# --------------------------------------------------------------------------
# constructors


def point(coords, exact: bool | None = None) -> Polytope:
    return Polytope.from_points([coords], exact=exact)


def segment(a, b, exact: bool | None = None) -> Polytope:
    return Polytope.from_points([a, b], exact=exact)


def box(lo, hi, exact: bool | None = None) -> Polytope:
    """Axis-aligned box ``prod [lo_j, hi_j]`` (degenerate sides allowed)."""
    corners = itertools.product(*[(a, b) for a, b in zip(lo, hi)])
    return Polytope.from_points(list(corners), exact=exact)


def cube(n: int, side=1, exact: bool | None = None) -> Polytope:
    return box([0] * n, [side] * n, exact=exact)


def cross_polytope(n: int, exact: bool | None = None) -> Polytope:
    pts = []
    for j in range(n):
        for s in (1, -1):
            p = [0] * n
            p[j] = s
            pts.append(p)
    return Polytope.from_points(pts, exact=exact)


def simplex(n: int, exact: bool | None = None) -> Polytope:
    pts = [[0] * n]
    for j in range(n):
        p = [0] * n
        p[j] = 1
        pts.append(p)
    return Polytope.from_points(pts, exact=exact)


def _check_same_dim(*bodies: Polytope) -> None:
    dims = {b.dim for b in bodies}
    if len(dims) > 1:
        raise DimensionMismatch(f"bodies live in different dimensions {sorted(dims)}")
    if len({b.exact for b in bodies}) > 1:
        raise arith.MixedArithmeticError("exact and float bodies mixed in one computation")


# --------------------------------------------------------------------------
# operations


def _sum_points(p: Polytope, q: Polytope) -> list[tuple]:
    return [tuple(a + b for a, b in zip(u, v)) for u in p.vertices for v in q.vertices]


def minkowski_sum(p: Polytope, q: Polytope) -> Polytope:
    _check_same_dim(p, q)
    return Polytope.from_points(_sum_points(p, q), dim=p.dim, exact=p.exact)


def minkowski_combination(bodies: Sequence[Polytope], weights: Sequence) -> Polytope:
    """Hull of ``sum_j w_j K_j`` for nonnegative weights."""
    _check_same_dim(*bodies)
    acc = None
    for body, w in zip(bodies, weights):
        if w == 0:
            continue
        term = body.scale(w)
        acc = term if acc is None else minkowski_sum(acc, term)
    if acc is None:
        return point([0] * bodies[0].dim, exact=bodies[0].exact)
    return acc


def volume(p: Polytope):
    return p.volume()


def support_function(p: Polytope, u):
    return p.support(u)


@dataclass(frozen=True)
class LinearMap:
    """An n x n real matrix acting on bodies.

    Determinant is exact for exact entries.  ``moduli`` are the complex
    eigenvalue moduli sorted in descending order.
    """

    dim: int
    entries: tuple
    exact: bool

    @classmethod
    def from_rows(cls, rows, exact: bool | None = None, require_invertible: bool = False) -> "LinearMap":
        if exact is None:
            exact = arith.is_exact_mode()
        entries = tuple(tuple(arith.parse_number(x, exact) for x in r) for r in rows)
        n = len(entries)
        if n == 0 or any(len(r) != n for r in entries):
            raise DimensionMismatch("matrix must be square")
        g = cls(n, entries, exact)
        if require_invertible and g.det == 0:
            raise ValueError("singular matrix where an invertible map is required")
        return g

    @classmethod
    def identity(cls, n: int, exact: bool | None = None) -> "LinearMap":
        return cls.from_rows(np.eye(n, dtype=int).tolist(), exact=exact)

    @classmethod
    def diagonal(cls, diag, exact: bool | None = None) -> "LinearMap":
        n = len(diag)
        rows = [[diag[i] if i == j else 0 for j in range(n)] for i in range(n)]
        return cls.from_rows(rows, exact=exact)

    @property
    def det(self):
        return _map_det(self)

    @property
    def abs_det(self):
        return abs(self.det)

    @property
    def moduli(self) -> tuple[float, ...]:
        return _map_moduli(self)

    def array(self) -> np.ndarray:
        return np.asarray(self.entries, dtype=float)

    def apply_point(self, v):
        return tuple(sum(a * b for a, b in zip(row, v)) for row in self.entries)

    def __matmul__(self, other: "LinearMap") -> "LinearMap":
        if self.dim != other.dim:
            raise DimensionMismatch("maps of different dimension")
        cols = list(zip(*other.entries))
        rows = tuple(tuple(sum(a * b for a, b in zip(r, c)) for c in cols) for r in self.entries)
        return LinearMap(self.dim, rows, self.exact and other.exact)

    def power(self, k: int) -> "LinearMap":
        if k < 0:
            return self.inverse().power(-k)
        result = LinearMap.identity(self.dim, exact=self.exact)
        base = self
        while k:
            if k & 1:
                result = result @ base
            base = base @ base
            k >>= 1
        return result

    def scaled(self, c) -> "LinearMap":
        c = arith.parse_number(c, self.exact)
        return LinearMap(self.dim, tuple(tuple(c * x for x in r) for r in self.entries), self.exact)

    def inverse(self) -> "LinearMap":
        if self.det == 0:
            raise ValueError("singular map has no inverse")
        n = self.dim
        if self.exact:
            aug = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(self.entries)]
            red, _ = arith.row_reduce_exact(aug)
            rows = tuple(tuple(red[i][n:]) for i in range(n))
            return LinearMap(n, rows, True)
        inv = np.linalg.inv(self.array())
        return LinearMap(n, tuple(tuple(float(x) for x in r) for r in inv), False)

    def to_json(self) -> dict:
        return {"dim": self.dim, "rows": [[arith.format_number(x) for x in r] for r in self.entries]}

    @classmethod
    def from_json(cls, data: dict, exact: bool | None = None) -> "LinearMap":
        if "rows" not in data:
            raise ValueError("matrix JSON needs a 'rows' list")
        g = cls.from_rows(data["rows"], exact=exact)
        if "dim" in data and data["dim"] != g.dim:
            raise DimensionMismatch("declared dim does not match rows")
        return g


_det_cache: dict = {}
_moduli_cache: dict = {}


def _map_det(g: LinearMap):
    # 3 == 3.0 and both hash alike, so the mode must be part of the key
    key = (g.exact, g.entries)
    if key not in _det_cache:
        _det_cache[key] = arith.determinant([list(r) for r in g.entries])
    return _det_cache[key]


def _map_moduli(g: LinearMap) -> tuple[float, ...]:
    key = (g.exact, g.entries)
    if key not in _moduli_cache:
        eig = np.linalg.eigvals(g.array())
        _moduli_cache[key] = tuple(sorted((float(abs(z)) for z in eig), reverse=True))
    return _moduli_cache[key]


def apply_linear_map(g: LinearMap, p: Polytope) -> Polytope:
    if g.dim != p.dim:
        raise DimensionMismatch("map and body dimensions differ")
    if g.exact != p.exact:
        raise arith.MixedArithmeticError("exact and float values mixed in one computation")
    return Polytope.from_points([g.apply_point(v) for v in p.vertices], dim=p.dim, exact=p.exact)


# --------------------------------------------------------------------------
# distances


def min_norm_point(points: np.ndarray, tol: float = 1e-12, max_iter: int = 1000) -> np.ndarray:
    """Point of minimal Euclidean norm in the convex hull of ``points`` (Wolfe's method)."""
    pts = np.asarray(points, dtype=float)
    if len(pts) == 1:
        return pts[0].copy()
    scale = max(1.0, float(np.max(np.abs(pts))))
    start = int(np.argmin(np.einsum("ij,ij->i", pts, pts)))
    active = [start]
    lam = np.array([1.0])
    x = pts[start].copy()
    for _ in range(max_iter):
        dots = pts @ x
        j = int(np.argmin(dots))
        if dots[j] >= x @ x - tol * scale * scale or j in active:
            break
        active.append(j)
        lam = np.append(lam, 0.0)
        while True:
            q = pts[active]
            # affine minimizer over the active set
            m = len(active)
            gram = q @ q.T
            kkt = np.zeros((m + 1, m + 1))
            kkt[:m, :m] = gram
            kkt[:m, m] = 1.0
            kkt[m, :m] = 1.0
            rhs = np.zeros(m + 1)
            rhs[m] = 1.0
            sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
            alpha = sol[:m]
            if np.all(alpha > 1e-14):
                lam = alpha
                x = alpha @ q
                break
            mask = alpha <= 1e-14
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(mask, lam / (lam - alpha), np.inf)
            theta = float(np.min(ratios))
            theta = min(max(theta, 0.0), 1.0)
            lam = lam + theta * (alpha - lam)
            keep = lam > 1e-14
            active = [a for a, k in zip(active, keep) if k]
            lam = lam[keep]
            lam = lam / lam.sum()
            x = lam @ pts[active]
    return x


def point_body_distance(x, q: Polytope) -> float:
    pts = q.array() - np.asarray(x, dtype=float)
    return float(np.linalg.norm(min_norm_point(pts)))


def directed_hausdorff(p: Polytope, q: Polytope) -> float:
    return max(point_body_distance(v, q) for v in p.array())


def hausdorff_distance(p: Polytope, q: Polytope) -> float:
    """Euclidean Hausdorff distance; the max is attained at vertices by convexity."""
    if p.dim != q.dim:
        raise DimensionMismatch("bodies live in different dimensions")
    return max(directed_hausdorff(p, q), directed_hausdorff(q, p))


# --------------------------------------------------------------------------
# reference body


@dataclass(frozen=True)
class ReferenceBody:
    """Origin-symmetric full-dimensional polytope standing in for the unit ball."""

    dim: int
    body: Polytope
    resolution: int

    @property
    def id(self) -> str:
        kind = {2: "polygon", 3: "sphere-sample"}.get(self.dim, "cube")
        return f"ball-{kind}-n{self.dim}-m{self.resolution}"


def _fibonacci_sphere(k: int) -> np.ndarray:
    i = np.arange(k) + 0.5
    z = 1.0 - 2.0 * i / k
    r = np.sqrt(1.0 - z * z)
    theta = math.pi * (1.0 + math.sqrt(5.0)) * i
    return np.stack([r * np.cos(theta), r * np.sin(theta), z], axis=1)


def _exactify(x: float) -> Fraction:
    return Fraction(x).limit_denominator(10 ** 12)


def ball_polytope(dim: int, resolution: int, exact: bool | None = None) -> ReferenceBody:
    """Polytopal stand-in for the Euclidean unit ball.

    dim 2: regular ``2m``-gon inscribed in the unit circle; dim 3: hull of
    a symmetric ``m``-point sphere sample; dim >= 4: the cube scaled to unit
    circumradius.
    """
    if exact is None:
        exact = arith.is_exact_mode()
    if resolution < 2 * dim:
        raise ValueError(f"resolution {resolution} too small for dim {dim} (need >= {2 * dim})")
    if dim == 1:
        pts = [[-1.0], [1.0]]
    elif dim == 2:
        k = 2 * resolution
        pts = [[math.cos(2 * math.pi * j / k), math.sin(2 * math.pi * j / k)] for j in range(resolution)]
        pts += [[-x, -y] for x, y in pts]
    elif dim == 3:
        half = _fibonacci_sphere((resolution + 1) // 2)
        pts = half.tolist() + (-half).tolist()
    else:
        s = 1.0 / math.sqrt(dim)
        pts = [list(c) for c in itertools.product((-s, s), repeat=dim)]
    if exact:
        half_pts = [[_exactify(x) for x in p] for p in pts[: len(pts) // 2]]
        pts = half_pts + [[-x for x in p] for p in half_pts]
    body = Polytope.from_points(pts, dim=dim, exact=exact)
    return ReferenceBody(dim, body, resolution)


# --------------------------------------------------------------------------
# sections and projections


class EmptySection:
    """Marker for a subspace that misses the body."""

    def __repr__(self):
        return "EmptySection()"

    def __bool__(self):
        return False


EMPTY = EmptySection()


def _orthonormal_complement(basis: np.ndarray) -> np.ndarray:
    import scipy.linalg

    return scipy.linalg.null_space(basis.T)


def _is_coordinate_basis(cols: Sequence[Sequence]) -> list[int] | None:
    idx = []
    for c in cols:
        nz = [j for j, x in enumerate(c) if x != 0]
        if len(nz) != 1 or c[nz[0]] != 1:
            return None
        idx.append(nz[0])
    return idx if len(set(idx)) == len(idx) else None


def complement_basis(columns, exact: bool):
    """Basis of the orthogonal complement; coordinate vectors stay exact."""
    n = len(columns[0])
    idx = _is_coordinate_basis(columns)
    if idx is not None:
        rest = [j for j in range(n) if j not in idx]
        one, zero = (Fraction(1), Fraction(0)) if exact else (1.0, 0.0)
        return [tuple(one if i == j else zero for i in range(n)) for j in rest]
    comp = _orthonormal_complement(np.asarray(columns, dtype=float).T)
    return [tuple(arith.parse_number(x, exact) for x in comp[:, k]) for k in range(comp.shape[1])]


def project(p: Polytope, columns) -> Polytope:
    """Coordinates of ``p`` in the (orthonormal) basis ``columns``: x -> (<x, c_k>)_k."""
    cols = [tuple(arith.parse_number(x, p.exact) for x in c) for c in columns]
    pts = [tuple(sum(a * b for a, b in zip(v, c)) for c in cols) for v in p.vertices]
    return Polytope.from_points(pts, dim=len(cols), exact=p.exact)


def _solve_small(a, b, exact: bool):
    if exact:
        try:
            return arith.solve_exact(a, b)
        except np.linalg.LinAlgError:
            return None
    am = np.asarray(a, dtype=float)
    if abs(np.linalg.det(am)) < 1e-12 * max(1.0, np.max(np.abs(am))) ** len(a):
        return None
    return [float(x) for x in np.linalg.solve(am, np.asarray(b, dtype=float))]


def section(p: Polytope, columns):
    """``p`` intersected with span(columns), in the coefficients of ``columns``."""
    if not p.is_full_dimensional:
        raise DegenerateBody("sections are computed from the facet description of a full-dimensional body")
    cols = [tuple(arith.parse_number(x, p.exact) for x in c) for c in columns]
    k = len(cols)
    rows = []
    for a, b in p.facets():
        rows.append(([sum(x * y for x, y in zip(a, c)) for c in cols], b))
    tol = 0 if p.exact else 1e-9
    pts = []
    for combo in itertools.combinations(range(len(rows)), k):
        a = [rows[i][0] for i in combo]
        b = [rows[i][1] for i in combo]
        y = _solve_small(a, b, p.exact)
        if y is None:
            continue
        if all(sum(x * yy for x, yy in zip(r, y)) <= bb + tol for r, bb in rows):
            pts.append(y)
    if not pts:
        return EMPTY
    if not p.exact:
        pts = [tuple(round(x, 12) + 0.0 for x in q) for q in pts]
    return Polytope.from_points(pts, dim=k, exact=p.exact)


def restrict_and_project(p: Polytope, columns):
    """Section with span(columns) and orthogonal projection onto its complement.

    Returns ``(section, projection)``; ``section`` is :data:`EMPTY` when the
    subspace misses ``p``.  ``columns`` must be linearly independent.
    """
    cols = [list(c) for c in columns]
    if any(len(c) != p.dim for c in cols):
        raise DimensionMismatch("basis vectors must live in the body's space")
    if len(arith.pivot_columns([[arith.parse_number(x, p.exact) for x in c] for c in cols], p.exact)) < len(cols):
        raise ValueError("subspace basis is not linearly independent")
    sec = section(p, cols)
    comp = complement_basis([[arith.parse_number(x, p.exact) for x in c] for c in cols], p.exact)
    proj = project(p, comp) if comp else None
    return sec, proj
