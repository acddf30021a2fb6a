"""Variational solver for the generalized Minkowski problem and the classical 2-D one.

The unknown body is parametrized by support values ``h`` on a fixed fan of
unit normals, ``P(h) = {x : <x, u_j> <= h_j}``.  The solver minimizes the
scale-invariant ratio ``psi(P) / vol(P)^(i/n)`` by gradient steps with
Armijo backtracking, re-tightening ``h`` to the support function of ``P(h)``,
rescaling to volume one and recentering after every step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.spatial import ConvexHull, HalfspaceIntersection, QhullError

from . import arith
from .geometry import Polytope, _fibonacci_sphere, ball_polytope, hausdorff_distance
from .mixed import containment_scale, mixed_volume
from .parallel import pool_map
from .valuation import (
    StrictPositivityCertificate,
    NotStrictlyPositive,
    Valuation,
    certify_strict_positivity,
    evaluate,
    polarized_evaluate,
)


class SolverError(ValueError):
    pass


class MinkowskiDataError(ValueError):
    """Edge data that do not describe a polygon."""


# --------------------------------------------------------------------------
# fans and support vectors


def default_fan(dim: int, size: int | None = None) -> np.ndarray:
    """Regular directions in the plane (64 by default); icosahedral face normals in 3-D (80)."""
    if dim == 2:
        m = size or 64
        t = 2 * math.pi * np.arange(m) / m
        return np.stack([np.cos(t), np.sin(t)], axis=1)
    if dim == 3:
        if size in (None, 20, 80, 320):
            return _icosahedral_fan({None: 1, 20: 0, 80: 1, 320: 2}[size])
        half = _fibonacci_sphere(size // 2)
        return np.vstack([half, -half])
    raise SolverError("the solver supports dimensions 2 and 3")


def _icosahedral_fan(levels: int) -> np.ndarray:
    """Face normals of an icosahedron refined ``levels`` times by midpoint subdivision (20 * 4^levels)."""
    t = (1 + math.sqrt(5)) / 2
    v = np.array([[-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0], [0, -1, t], [0, 1, t],
                  [0, -1, -t], [0, 1, -t], [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1]], dtype=float)
    v /= np.linalg.norm(v, axis=1)[:, None]
    tris = [v[s] for s in ConvexHull(v).simplices]
    for _ in range(levels):
        out = []
        for a, b, c in tris:
            ab, bc, ca = [(p + q) / np.linalg.norm(p + q) for p, q in ((a, b), (b, c), (c, a))]
            out += [np.array(x) for x in ((a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca))]
        tris = out
    cen = np.array([t_.mean(axis=0) for t_ in tris])
    cen /= np.linalg.norm(cen, axis=1)[:, None]
    return cen[np.lexsort(cen.T[::-1])]


@dataclass
class SupportVector:
    """A polytope {x : <x, u_j> <= h_j} on a fixed fan of unit normals."""

    normals: np.ndarray
    h: np.ndarray

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    def vertices(self) -> np.ndarray:
        return _vertices(self.normals, self.h)

    def polytope(self) -> Polytope:
        return Polytope.from_points(self.vertices().tolist(), exact=False)

    def tightened(self) -> "SupportVector":
        """Support values of P(h) itself; redundant entries drop to the touching value."""
        v = self.vertices()
        return SupportVector(self.normals, np.max(v @ self.normals.T, axis=0))

    def redundant(self, tol: float = 1e-12) -> np.ndarray:
        """Mask of normals whose half-plane does not touch P(h)."""
        v = self.vertices()
        supp = np.max(v @ self.normals.T, axis=0)
        return self.h - supp > tol * max(1.0, float(np.max(np.abs(self.h))))


def _vertices(normals: np.ndarray, h: np.ndarray) -> np.ndarray:
    if np.any(h <= 0):
        raise SolverError("support values must be positive (origin inside)")
    halfspaces = np.hstack([normals, -h[:, None]])
    try:
        hs = HalfspaceIntersection(halfspaces, np.zeros(normals.shape[1]))
    except QhullError as err:
        raise SolverError(f"empty or unbounded support vector: {err}") from err
    pts = hs.intersections
    # merge duplicates produced by several facets meeting at a vertex
    pts = np.unique(np.round(pts, 13), axis=0)
    return pts


def support_vector_of(body: Polytope, normals: np.ndarray) -> SupportVector:
    return SupportVector(normals, np.max(body.array() @ normals.T, axis=0))


# --------------------------------------------------------------------------
# fast geometry of the iterates


def _ordered_polygon(v: np.ndarray) -> np.ndarray:
    c = v.mean(axis=0)
    ang = np.arctan2(v[:, 1] - c[1], v[:, 0] - c[0])
    return v[np.argsort(ang)]


def _polygon_area_centroid(v: np.ndarray) -> tuple[float, np.ndarray]:
    p = _ordered_polygon(v)
    q = np.roll(p, -1, axis=0)
    cross = p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]
    area = cross.sum() / 2
    cen = ((p + q) * cross[:, None]).sum(axis=0) / (6 * area)
    return float(area), cen


def _hull_volume_centroid(v: np.ndarray) -> tuple[float, np.ndarray]:
    if v.shape[1] == 2:
        return _polygon_area_centroid(v)
    hull = ConvexHull(v)
    apex = v[hull.vertices[0]]
    vol = 0.0
    cen = np.zeros(v.shape[1])
    for s in hull.simplices:
        m = v[s] - apex
        vs = abs(np.linalg.det(m)) / math.factorial(v.shape[1])
        vol += vs
        cen += vs * (v[s].sum(axis=0) + apex) / (v.shape[1] + 1)
    return vol, cen / vol


def centroid(body: Polytope) -> np.ndarray:
    """Volume centroid of a full-dimensional body."""
    _, c = _hull_volume_centroid(body.array())
    return c


def center(body: Polytope) -> Polytope:
    return body.translate([-float(x) for x in centroid(body)])


def _facet_data(v: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Outer unit normals, facet areas (n-1 volumes) and volume of a full-dimensional hull."""
    if v.shape[1] == 2:
        p = _ordered_polygon(v)
        e = np.roll(p, -1, axis=0) - p
        lengths = np.hypot(e[:, 0], e[:, 1])
        keep = lengths > 1e-15
        normals = np.stack([e[keep, 1], -e[keep, 0]], axis=1) / lengths[keep, None]
        area = float(np.sum(p[:, 0] * np.roll(p[:, 1], -1) - np.roll(p[:, 0], -1) * p[:, 1]) / 2)
        return normals, lengths[keep], area
    hull = ConvexHull(v)
    tri = v[hull.simplices]
    areas = np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1) / 2
    return hull.equations[:, :-1], areas, float(hull.volume)


def _fan_facet_areas(sv: SupportVector) -> tuple[np.ndarray, np.ndarray]:
    """Facet areas of P(h) in 3-D read off the vertex-facet incidences of the intersection.

    Avoids a second hull computation, which is fragile when tiny facets
    produce nearly coincident vertices.
    """
    normals, h = sv.normals, sv.h
    if np.any(h <= 0):
        raise SolverError("support values must be positive (origin inside)")
    hs = HalfspaceIntersection(np.hstack([normals, -h[:, None]]), np.zeros(3))
    pts = hs.intersections
    incident: list[list[int]] = [[] for _ in range(len(h))]
    for vi, faces in enumerate(hs.dual_facets):
        for j in faces:
            incident[j].append(vi)
    areas = np.zeros(len(h))
    for j, idx in enumerate(incident):
        if len(idx) < 3:
            continue
        q = pts[idx]
        u = normals[j]
        e1 = np.cross(u, [1.0, 0.0, 0.0] if abs(u[0]) < 0.9 else [0.0, 1.0, 0.0])
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(u, e1)
        xy = np.stack([q @ e1, q @ e2], axis=1)
        c = xy.mean(axis=0)
        o = np.argsort(np.arctan2(xy[:, 1] - c[1], xy[:, 0] - c[0]))
        xy = xy[o]
        areas[j] = abs(np.sum(xy[:, 0] * np.roll(xy[:, 1], -1) - np.roll(xy[:, 0], -1) * xy[:, 1])) / 2
    return normals, areas


class _Objective:
    """psi(P) and vol(P) for iterates.

    Terms of degree n-1 use V(A, P[n-1]) = (1/n) sum_F h_A(u_F) vol(F) over
    the facets of P; other terms fall back to the mixed volume engine.
    """

    def __init__(self, psi: Valuation):
        self.psi = psi
        self.n = psi.dim
        self.i = psi.degree
        self.fast = not psi.exact and self.i >= self.n - 1
        if self.fast:
            self.terms = [(float(w), [b.array() for b in bodies]) for w, bodies in psi.terms]

    def values(self, v: np.ndarray) -> tuple[float, float]:
        if self.fast:
            normals, areas, vol = _facet_data(v)
            total = 0.0
            for w, arrays in self.terms:
                if not arrays:
                    total += w * vol
                else:
                    ha = np.max(arrays[0] @ normals.T, axis=0)
                    total += w * float(np.dot(ha, areas)) / self.n
            return total, vol
        body = Polytope.from_points(v.tolist(), exact=False)
        return float(evaluate(self.psi, body)), float(body.volume())

    def values_fan(self, sv: SupportVector) -> tuple[float, float]:
        normals, areas = _fan_facet_areas(sv)
        vol = float(np.dot(sv.h, areas)) / self.n
        total = 0.0
        for w, arrays in self.terms:
            if not arrays:
                total += w * vol
            else:
                ha = np.max(arrays[0] @ normals.T, axis=0)
                total += w * float(np.dot(ha, areas)) / self.n
        return total, vol

    def ratio(self, sv: SupportVector) -> float:
        if self.fast and self.n == 3:
            val, vol = self.values_fan(sv)
        else:
            val, vol = self.values(sv.vertices())
        return val / vol ** (self.i / self.n)


# --------------------------------------------------------------------------
# solver


@dataclass
class SolverConfig:
    max_iters: int = 3000
    armijo: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 50
    volume_tol: float = 1e-9
    stationarity_tol: float = 1e-8
    grad_tol: float = 1e-11
    fd_step: float = 1e-5
    clip_slack: float = 2.0
    multistart: int = 4
    seed: int = 0
    fan_size: int | None = None
    stall_iters: int = 30

    def __post_init__(self):
        for name in ("armijo", "backtrack", "volume_tol", "stationarity_tol", "grad_tol", "fd_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack must lie in (0, 1)")

    @classmethod
    def from_dict(cls, data: dict) -> "SolverConfig":
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)


@dataclass
class SolverResult:
    body: Polytope
    c: float
    trace: list = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    support: SupportVector | None = None
    certificate_epsilon: float | None = None
    message: str = ""


def _normalize(sv: SupportVector, obj: _Objective) -> SupportVector:
    """Tighten, center at the centroid and rescale to volume one."""
    sv = sv.tightened()
    v = sv.vertices()
    vol, cen = _hull_volume_centroid(v)
    h = (sv.h - sv.normals @ cen) * vol ** (-1.0 / obj.n)
    return SupportVector(sv.normals, h)


def _active_normals(sv: SupportVector, tol: float = 1e-9) -> np.ndarray:
    """Mask of normals carrying a genuine facet of P(h)."""
    v = sv.vertices()
    n = sv.dim
    scale = max(1.0, float(np.max(np.abs(sv.h))))
    out = np.zeros(len(sv.h), dtype=bool)
    for j, u in enumerate(sv.normals):
        on = v[np.abs(v @ u - sv.h[j]) <= tol * scale]
        if len(on) >= n:
            out[j] = np.linalg.matrix_rank(on[1:] - on[0], tol=tol * scale) == n - 1
    return out


def _gradient(obj: _Objective, sv: SupportVector, step: float) -> tuple[np.ndarray, np.ndarray]:
    """Descent data ``(g, base)``: the step is ``base - a g``.

    Facet normals get central differences.  Normals without a facet are
    kinks: their half-planes are moved well away in ``base`` so they cannot
    clip the moving facets, and each one is brought back only when cutting
    a new facet there lowers the ratio (one-sided slope).
    """
    h = sv.h
    scale = float(np.max(np.abs(h)))
    eps = step * scale
    active = _active_normals(sv)
    relaxed = np.where(active, h, h + 4.0 * scale)
    f0 = obj.ratio(sv)

    def partial(j):
        if not active[j]:
            hc = relaxed.copy()
            hc[j] = h[j] - eps
            return max((f0 - obj.ratio(SupportVector(sv.normals, hc))) / eps, 0.0)
        hp = relaxed.copy()
        hm = relaxed.copy()
        hp[j] += eps
        hm[j] -= eps
        return (obj.ratio(SupportVector(sv.normals, hp)) - obj.ratio(SupportVector(sv.normals, hm))) / (2 * eps)

    g = np.array(pool_map(partial, range(len(h))))
    moving = active | (g > 0)
    base = np.where(moving, h, relaxed)
    # the ratio is invariant under scaling and translation; drop those components
    for d in [h] + [sv.normals[:, k] for k in range(sv.dim)]:
        d = np.where(moving, d, 0.0)
        g = g - (g @ d) / (d @ d) * d
    return g, base


def _initial(rng: np.random.Generator, normals: np.ndarray, start: int) -> SupportVector:
    if start == 0:
        h = np.ones(len(normals))
    else:
        h = np.exp(rng.normal(scale=0.3, size=len(normals)))
    return SupportVector(normals, h)


class _DiskantClip:
    """A priori size bound for volume-one iterates with psi(M) <= psi0.

    With psi >= eps V(B[n-i], M[i]) and log-concavity of j -> V(B[n-j], M[j]),
    V(B[n-1], M) <= (psi0 / eps)^((n-1)/(n-i)) when vol(M) = 1, and the
    containment bound gives r(M) <= n V(B[n-1], M) / vol(B).
    """

    def __init__(self, psi0: float, cert: StrictPositivityCertificate, n: int, i: int, slack: float):
        self.ref = ball_polytope(n, 8 if n == 2 else 16, exact=False).body
        mv1 = (psi0 / cert.epsilon) ** ((n - 1) / (n - i))
        self.radius = slack * n * mv1 / float(self.ref.volume())

    def admits(self, sv: SupportVector) -> bool:
        r = containment_scale(self.ref, sv.polytope()).r_exact
        return r <= self.radius


def variational_minimize(psi: Valuation, cfg: SolverConfig | None = None,
                         certificate: StrictPositivityCertificate | None = None,
                         normals: np.ndarray | None = None, start: int = 0) -> SolverResult:
    """Minimize psi(M) subject to vol(M) = 1 over polytopes on a fixed normal fan.

    Returns the best body (centered, volume one), ``c = psi(B)`` and a trace.
    ``converged`` is False when the line search fails or the iteration
    budget runs out; the best iterate is still returned.
    """
    cfg = cfg or SolverConfig()
    n, i = psi.dim, psi.degree
    if i < 1:
        raise SolverError("psi must have degree at least 1")
    if psi.exact:
        raise SolverError("the solver runs in float arithmetic")
    if certificate is None:
        try:
            certificate = certify_strict_positivity(psi, ball_polytope(n, 8 if n == 2 else 16, exact=False),
                                                    np.random.default_rng(cfg.seed))
        except NotStrictlyPositive as err:
            raise SolverError(f"no strict positivity certificate: {err}") from err
    normals = normals if normals is not None else default_fan(n, cfg.fan_size)
    rng = np.random.default_rng(cfg.seed + 7919 * start)
    obj = _Objective(psi)
    sv = _normalize(_initial(rng, normals, start), obj)
    f = obj.ratio(sv)
    psi0 = f
    clip = _DiskantClip(psi0, certificate, n, i, cfg.clip_slack) if i < n else None
    trace = [{"iter": 0, "objective": f, "step": 0.0, "grad_norm": math.nan}]
    alpha = 1.0
    converged = False
    message = "iteration budget exhausted"
    stall = 0
    it = 0
    for it in range(1, cfg.max_iters + 1):
        g, base = _gradient(obj, sv, cfg.fd_step)
        gn = float(np.linalg.norm(g))
        if gn < cfg.grad_tol:
            converged, message = True, "gradient below tolerance"
            break
        accepted = False
        a = min(alpha * 4.0, 1e3)
        for _ in range(cfg.max_backtracks):
            h_new = base - a * g
            if np.all(h_new > 0):
                try:
                    cand = _normalize(SupportVector(normals, h_new), obj)
                    f_new = obj.ratio(cand)
                except (SolverError, QhullError, ZeroDivisionError):
                    f_new = math.inf
                if f_new <= f - cfg.armijo * a * gn * gn:
                    accepted = True
                    break
            a *= cfg.backtrack
        if not accepted:
            converged = gn < 1e3 * cfg.grad_tol or stall >= cfg.stall_iters
            message = "line search made no further progress" if converged else "line search failed"
            break
        # the parabola through f(0), f'(0) and f(a) damps the zigzag of overshooting steps
        curv = f_new - f + a * gn * gn
        if curv > 0:
            a_q = gn * gn * a * a / (2 * curv)
            if 1e-3 * a < a_q < a and np.all(base - a_q * g > 0):
                try:
                    cand_q = _normalize(SupportVector(normals, base - a_q * g), obj)
                    f_q = obj.ratio(cand_q)
                except (SolverError, QhullError, ZeroDivisionError):
                    f_q = math.inf
                if f_q < f_new:
                    cand, f_new, a = cand_q, f_q, a_q
        decrease = f - f_new
        if clip is not None and not clip.admits(cand):
            trace.append({"iter": it, "objective": f, "step": 0.0, "grad_norm": gn, "clipped": True})
            converged, message = False, "iterate left the a priori containment bound"
            break
        sv, f, alpha = cand, f_new, a
        stall = stall + 1 if decrease <= 1e-15 * abs(f) else 0
        trace.append({"iter": it, "objective": f, "step": a, "grad_norm": gn})
        if stall >= cfg.stall_iters:
            converged, message = True, "objective stalled at machine precision"
            break
    body = sv.polytope()
    vol = float(body.volume())
    body = body.scale(vol ** (-1.0 / n))
    body = center(body)
    c = float(evaluate(psi, body))
    if c > psi0 * (1 + 1e-9):
        converged = False
        message = "objective increased"
    return SolverResult(body, c, trace, converged, it, sv, certificate.epsilon, message)


def stationarity_residual(psi: Valuation, body: Polytope, tests: Sequence[Polytope]) -> tuple[float, float]:
    """(min_gap, eq_gap) of psi(N, B[i-1]) - psi(B) V(B[n-1], N).

    At a minimizer of psi on volume-one bodies the gap is nonnegative for
    every admissible direction N and vanishes at N = B.
    """
    n, i = psi.dim, psi.degree
    vol = float(body.volume())
    if abs(vol - 1) > 1e-6:
        raise SolverError(f"stationarity needs vol(B) = 1, got {vol}")
    psib = float(evaluate(psi, body))

    def gap(nb: Polytope) -> float:
        lhs = float(polarized_evaluate(psi, [nb] + [body] * (i - 1)))
        rhs = psib * float(mixed_volume([body] * (n - 1) + [nb]))
        return lhs - rhs

    gaps = pool_map(gap, list(tests))
    return (min(gaps) if gaps else math.inf), abs(gap(body))


def fan_test_bodies(rng: np.random.Generator, normals: np.ndarray, count: int) -> list[Polytope]:
    """Random polytopes whose facet normals lie in the fan (admissible variations)."""
    out = []
    for _ in range(count):
        h = np.exp(rng.normal(scale=0.5, size=len(normals)))
        out.append(SupportVector(normals, h).polytope())
    return out


@dataclass
class SolutionSet:
    solutions: list
    results: list
    pairwise: np.ndarray
    containment: list = field(default_factory=list)

    @property
    def diameter(self) -> float:
        return float(self.pairwise.max()) if self.pairwise.size else 0.0


def multistart_solution_set(psi: Valuation, cfg: SolverConfig | None = None,
                            normals: np.ndarray | None = None) -> SolutionSet:
    """Independent starts; centered solutions and their pairwise Hausdorff distances."""
    cfg = cfg or SolverConfig()
    results = pool_map(lambda s: variational_minimize(psi, cfg, normals=normals, start=s), range(cfg.multistart))
    sols = [r.body for r in results]
    m = len(sols)
    dist = np.zeros((m, m))
    for a in range(m):
        for b in range(a + 1, m):
            dist[a, b] = dist[b, a] = hausdorff_distance(sols[a], sols[b])
    # containment of each solution against K = (1/eps) reference
    contain = []
    for r in results:
        if r.certificate_epsilon and r.certificate_epsilon > 0:
            ref = ball_polytope(psi.dim, 8 if psi.dim == 2 else 16, exact=False).body
            k = ref.scale(1.0 / r.certificate_epsilon)
            cs = containment_scale(k, r.body)
            contain.append((cs.r_exact, float(cs.r_bound)))
    return SolutionSet(sols, results, dist, contain)


# --------------------------------------------------------------------------
# classical Minkowski problem in the plane


def surface_data_2d(body: Polytope) -> tuple[list[tuple], list]:
    """(outer unit normals, edge lengths) of a polygon, counterclockwise.

    Exact-mode bodies return exact edge vectors' normals only when the
    edges have rational length; otherwise lengths are floats.
    """
    if body.dim != 2 or not body.is_full_dimensional:
        raise MinkowskiDataError("need a full-dimensional polygon")
    v = [tuple(p) for p in body.vertices]
    c = np.mean(np.asarray(v, dtype=float), axis=0)
    order = sorted(range(len(v)), key=lambda k: math.atan2(float(v[k][1]) - c[1], float(v[k][0]) - c[0]))
    p = [v[k] for k in order]
    normals, lengths = [], []
    for a, b in zip(p, p[1:] + p[:1]):
        ex, ey = b[0] - a[0], b[1] - a[1]
        ln = math.hypot(float(ex), float(ey))
        if body.exact:
            exact_len = _exact_sqrt(ex * ex + ey * ey)
            if exact_len is not None:
                normals.append((ey / exact_len, -ex / exact_len))
                lengths.append(exact_len)
                continue
        normals.append((float(ey) / ln, -float(ex) / ln))
        lengths.append(ln)
    return normals, lengths


def _exact_sqrt(q: Fraction) -> Fraction | None:
    q = Fraction(q)
    a, b = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if a * a == q.numerator and b * b == q.denominator:
        return Fraction(a, b)
    return None


def classical_minkowski_2d(normals: Sequence, lengths: Sequence, exact: bool | None = None,
                           tol: float = 1e-9) -> Polytope:
    """Polygon with the given outer edge normals and edge lengths, centroid at the origin.

    Edges are chained in order of normal angle, each edge being the normal
    rotated by +90 degrees times its length.
    """
    if exact is None:
        exact = arith.is_exact_mode()
    if len(normals) != len(lengths):
        raise MinkowskiDataError("normals and lengths differ in number")
    us = [tuple(arith.parse_number(x, exact) for x in u) for u in normals]
    ls = [arith.parse_number(x, exact) for x in lengths]
    if any(len(u) != 2 for u in us):
        raise MinkowskiDataError("normals must be planar")
    if any(x <= 0 for x in ls):
        raise MinkowskiDataError("lengths must be positive")
    if np.linalg.matrix_rank(np.asarray(us, dtype=float)) < 2:
        raise MinkowskiDataError("degenerate data: all normals are collinear")
    sx = sum(l * u[0] for u, l in zip(us, ls))
    sy = sum(l * u[1] for u, l in zip(us, ls))
    total = sum(ls)
    if exact and (sx != 0 or sy != 0) or not exact and math.hypot(sx, sy) > tol * float(total):
        raise MinkowskiDataError(f"unbalanced edge data: sum of l_j u_j = ({float(sx):.3e}, {float(sy):.3e})")
    order = sorted(range(len(us)), key=lambda k: math.atan2(float(us[k][1]), float(us[k][0])))
    zero = Fraction(0) if exact else 0.0
    x, y = zero, zero
    pts = []
    for k in order:
        pts.append((x, y))
        ux, uy = us[k]
        x, y = x - ls[k] * uy, y + ls[k] * ux
    # area centroid of the chained polygon
    area2 = zero
    cx, cy = zero, zero
    for (x0, y0), (x1, y1) in zip(pts, pts[1:] + pts[:1]):
        cr = x0 * y1 - x1 * y0
        area2 += cr
        cx += (x0 + x1) * cr
        cy += (y0 + y1) * cr
    cx, cy = cx / (3 * area2), cy / (3 * area2)
    return Polytope.from_points([(a - cx, b - cy) for a, b in pts], exact=exact)
