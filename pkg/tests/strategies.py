"""Hypothesis strategies shared by the property tests."""
from fractions import Fraction

from hypothesis import assume
from hypothesis import strategies as st

from valgebra.geometry import LinearMap, Polytope

coord = st.integers(min_value=-3, max_value=3)


def point_lists(n, min_size=None, max_size=None):
    return st.lists(st.tuples(*[coord] * n), min_size=min_size or n + 1, max_size=max_size or n + 5)


@st.composite
def polytopes(draw, n, exact=True, full=True):
    pts = draw(point_lists(n))
    p = Polytope.from_points([[Fraction(x) if exact else float(x) for x in v] for v in pts], dim=n, exact=exact)
    if full:
        assume(p.is_full_dimensional)
    return p


@st.composite
def any_polytopes(draw, n, exact=True):
    pts = draw(point_lists(n, min_size=1))
    return Polytope.from_points([[Fraction(x) if exact else float(x) for x in v] for v in pts], dim=n, exact=exact)


@st.composite
def maps(draw, n, exact=True):
    rows = draw(st.lists(st.lists(st.integers(-3, 3), min_size=n, max_size=n), min_size=n, max_size=n))
    g = LinearMap.from_rows([[Fraction(x) if exact else float(x) for x in r] for r in rows], exact=exact)
    assume(g.det != 0)
    return g


directions = st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
