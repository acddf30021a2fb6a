"""Seeded random bodies and maps for sweeps, property checks and the suite."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from . import arith
from .geometry import LinearMap, Polytope


def _num(x, exact: bool, denom: int = 64):
    if exact:
        return Fraction(x).limit_denominator(denom) if not isinstance(x, (int, np.integer)) else Fraction(int(x))
    return float(x)


def random_lattice_polytope(rng: np.random.Generator, n: int, n_points: int | None = None,
                            radius: int = 3, exact: bool | None = None) -> Polytope:
    """Full-dimensional hull of random integer points in ``[-radius, radius]^n``."""
    if exact is None:
        exact = arith.is_exact_mode()
    while True:
        k = n_points if n_points is not None else int(rng.integers(n + 1, n + 3))
        pts = rng.integers(-radius, radius + 1, size=(k, n))
        p = Polytope.from_points([[_num(x, exact) for x in r] for r in pts], exact=exact)
        if p.is_full_dimensional:
            return p


def random_polytope(rng: np.random.Generator, n: int, n_points: int | None = None,
                    exact: bool | None = None) -> Polytope:
    """Full-dimensional hull of Gaussian points, coordinates rounded to a 1/64 grid."""
    if exact is None:
        exact = arith.is_exact_mode()
    while True:
        k = n_points if n_points is not None else int(rng.integers(n + 1, 2 * n + 3))
        pts = np.round(rng.normal(size=(k, n)) * 64) / 64
        p = Polytope.from_points([[_num(x, exact) for x in r] for r in pts], exact=exact)
        if p.is_full_dimensional:
            return p


def random_box(rng: np.random.Generator, n: int, exact: bool | None = None) -> Polytope:
    if exact is None:
        exact = arith.is_exact_mode()
    lo = rng.integers(-3, 3, size=n)
    hi = lo + rng.integers(1, 4, size=n)
    return Polytope.from_points(
        [[_num(lo[j] if (c >> j) & 1 == 0 else hi[j], exact) for j in range(n)] for c in range(2 ** n)], exact=exact)


def random_points_in(rng: np.random.Generator, body: Polytope, k: int) -> list[tuple]:
    """``k`` points of ``body`` as convex combinations of its vertices with rational weights."""
    verts = body.vertices
    out = []
    for _ in range(k):
        w = rng.dirichlet(np.full(len(verts), 0.5))
        # integer weights out of 64 keep exact coordinates small
        iw = np.floor(w * 64).astype(int)
        iw[int(np.argmax(w))] += 64 - int(iw.sum())
        if body.exact:
            out.append(tuple(sum(Fraction(int(c), 64) * v[j] for c, v in zip(iw, verts) if c) for j in range(body.dim)))
        else:
            out.append(tuple(float(x) for x in (iw / 64.0) @ np.asarray(verts, dtype=float)))
    return out


def random_body_in(rng: np.random.Generator, body: Polytope, k: int | None = None) -> Polytope:
    """A random polytope inside ``body`` (may be lower dimensional)."""
    n = body.dim
    k = k if k is not None else int(rng.integers(2, n + 3))
    return Polytope.from_points(random_points_in(rng, body, k), dim=n, exact=body.exact)


def random_segment_in(rng: np.random.Generator, body: Polytope) -> Polytope:
    while True:
        p = Polytope.from_points(random_points_in(rng, body, 2), dim=body.dim, exact=body.exact)
        if len(p.vertices) == 2:
            return p


def random_map(rng: np.random.Generator, n: int, exact: bool | None = None, scale: float = 1.0) -> LinearMap:
    """A random invertible map with entries on a 1/16 grid."""
    if exact is None:
        exact = arith.is_exact_mode()
    while True:
        a = np.round(rng.normal(size=(n, n)) * scale * 16) / 16
        if abs(np.linalg.det(a)) > 1e-3:
            g = LinearMap.from_rows([[_num(x, exact) for x in r] for r in a], exact=exact)
            if g.det != 0:
                return g


def random_diagonalizable_map(rng: np.random.Generator, n: int, exact: bool | None = None,
                              gap: float = 1.25) -> LinearMap:
    """``P diag(lambda) P^-1`` with well-conditioned ``P`` and moduli separated by ``gap``."""
    if exact is None:
        exact = arith.is_exact_mode()
    while True:
        p = np.eye(n) + 0.3 * np.round(rng.normal(size=(n, n)) * 8) / 8
        if np.linalg.cond(p) < 10:
            break
    mods = [float(rng.uniform(0.3, 3.0))]
    while len(mods) < n:
        mods.append(mods[-1] / float(rng.uniform(gap, 2 * gap)))
    lam = np.array(mods) * rng.choice([-1.0, 1.0], size=n)
    rng.shuffle(lam)
    a = p @ np.diag(lam) @ np.linalg.inv(p)
    return LinearMap.from_rows([[_num(x, exact, 10 ** 9) for x in r] for r in a], exact=exact)
