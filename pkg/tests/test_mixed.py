import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from valgebra.geometry import Polytope, ball_polytope, box, cube, minkowski_combination, minkowski_sum, segment
from valgebra.mixed import (
    af_margin,
    containment_scale,
    mixed_volume,
    mixed_volume_by_interpolation,
    permanent,
    polarization,
    reduction_formula_residual,
    volume_polynomial,
)
from valgebra import sampling

from strategies import any_polytopes, polytopes

F = Fraction


def mixed_area_oracle(k: Polytope, l: Polytope) -> Fraction:
    """V(K, L) = 1/2 sum over edges e of K of h_L(nu_e), nu_e the outer normal scaled by |e|."""
    if k.affine_dim < 2:
        k, l = l, k
    if k.affine_dim < 2:
        # both at most segments: V = |det(d_K, d_L)| / 2
        dk = [b - a for a, b in zip(*k.vertices)] if len(k.vertices) == 2 else [0, 0]
        dl = [b - a for a, b in zip(*l.vertices)] if len(l.vertices) == 2 else [0, 0]
        return abs(dk[0] * dl[1] - dk[1] * dl[0]) / 2
    v = [tuple(p) for p in k.vertices]
    c = (sum(p[0] for p in v) / len(v), sum(p[1] for p in v) / len(v))
    v.sort(key=lambda p: math.atan2(float(p[1] - c[1]), float(p[0] - c[0])))
    total = 0
    for a, b in zip(v, v[1:] + v[:1]):
        nu = (b[1] - a[1], a[0] - b[0])
        total += l.support(nu)
    return F(total) / 2


def test_mixed_volume_examples(exact_mode):
    assert mixed_volume([cube(3)] * 3) == 1
    assert mixed_volume([segment((0, 0), (1, 0)), segment((0, 0), (0, 1))]) == F(1, 2)
    assert mixed_volume([box([0, 0], [1, 2]), box([0, 0], [3, 4])]) == 5
    assert polarization([box([0, 0], [1, 2]), box([0, 0], [3, 4])]) == 5


def test_permanent_ryser():
    a = [[1, 2, 3], [4, 5, 6], [7, 8, 10]]
    brute = sum(math.prod(a[i][p[i]] for i in range(3)) for p in itertools.permutations(range(3)))
    assert permanent(a) == brute


def test_wrong_arity(exact_mode):
    with pytest.raises(ValueError):
        mixed_volume([cube(2)])


@given(any_polytopes(2), any_polytopes(2))
def test_mixed_area_matches_edge_formula(k, l):
    assert mixed_volume([k, l], use_fast_paths=False) == mixed_area_oracle(k, l)


@given(st.lists(polytopes(3, full=False), min_size=3, max_size=3), st.permutations(range(3)))
def test_symmetry(bodies, perm):
    assert mixed_volume(bodies) == mixed_volume([bodies[i] for i in perm])


@given(polytopes(2), polytopes(2), polytopes(2), st.integers(0, 3), st.integers(1, 3))
def test_multilinearity(k, k2, l, a, b):
    lhs = mixed_volume([minkowski_combination([k, k2], [a, b]), l])
    assert lhs == a * mixed_volume([k, l]) + b * mixed_volume([k2, l])


@given(polytopes(3), polytopes(3), polytopes(3))
def test_monotone_under_inclusion(k, l, m):
    outer = minkowski_sum(k, l.translate([-x for x in l.vertices[0]]))
    assert mixed_volume([k, l, m]) <= mixed_volume([outer, l, m])


@given(polytopes(3), polytopes(3), st.tuples(*[st.integers(-5, 5)] * 3))
def test_translation_invariance(k, l, t):
    assert mixed_volume([k, l, l]) == mixed_volume([k.translate(t), l, l])


@given(polytopes(3))
def test_diagonal_is_volume(k):
    assert mixed_volume([k] * 3, use_fast_paths=False) == k.volume()


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(1, 3), st.integers(1, 4)), min_size=3, max_size=3))
def test_box_fast_path_matches_polarization(specs):
    bodies = [box([lo] * 3, [lo + s, lo + t, lo + s + t]) for lo, s, t in specs]
    assert mixed_volume(bodies) == polarization(bodies)


@given(st.lists(st.tuples(*[st.integers(-3, 3)] * 3), min_size=3, max_size=3))
def test_segment_fast_path_matches_polarization(dirs):
    bodies = [Polytope.from_points([(0, 0, 0), d], dim=3, exact=True) for d in dirs]
    assert mixed_volume(bodies) == polarization(bodies)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_oracle_equivalence_exact(n, rng, exact_mode):
    for _ in range(3):
        bodies = [sampling.random_lattice_polytope(rng, n) for _ in range(n)]
        assert mixed_volume(bodies, use_fast_paths=False) == mixed_volume_by_interpolation(bodies)


def test_volume_polynomial_examples(exact_mode):
    sq = cube(2)
    assert volume_polynomial([sq]) == {(2,): 1}
    assert volume_polynomial([sq, sq]) == {(2, 0): 1, (1, 1): 2, (0, 2): 1}
    coeffs = volume_polynomial([sq, segment((0, 0), (1, 0))])
    assert coeffs == {(2, 0): 1, (1, 1): 1, (0, 2): 0}


def test_af_examples(exact_mode):
    k = cube(2)
    assert af_margin(k, k, []) == 0
    assert af_margin(k, segment((0, 0), (1, 0)), []) == F(1, 4)


def test_af_sweep_dim3(rng):
    ref = ball_polytope(3, 12, exact=False).body
    for _ in range(20):
        k, l = sampling.random_polytope(rng, 3, exact=False), sampling.random_polytope(rng, 3, exact=False)
        assert af_margin(k, l, [ref]) >= -1e-12


@given(polytopes(3), polytopes(3), polytopes(3))
def test_af_nonnegative_exact(k, l, m):
    assert af_margin(k, l, [m]) >= 0


def test_reduction_formula_examples(exact_mode):
    assert reduction_formula_residual([segment((0, 0), (1, 0))], [cube(2)], [(1, 0)]) == 0
    sq = box([0, 0, 0], [1, 1, 0])
    assert reduction_formula_residual([sq, sq], [cube(3)], [(1, 0, 0), (0, 1, 0)]) == 0
    assert reduction_formula_residual([sq, sq], [sq], [(1, 0, 0), (0, 1, 0)]) == 0


@given(st.lists(st.tuples(st.integers(-3, 3), st.integers(-3, 3)), min_size=3, max_size=5), polytopes(3))
def test_reduction_formula_random(plane_pts, k):
    l_body = Polytope.from_points([(x, y, 0) for x, y in plane_pts], dim=3, exact=True)
    res = reduction_formula_residual([l_body, l_body], [k], [(1, 0, 0), (0, 1, 0)])
    assert res == 0


def test_reduction_formula_rejects_body_outside(exact_mode):
    with pytest.raises(ValueError):
        reduction_formula_residual([segment((0, 0), (1, 1))], [cube(2)], [(1, 0)])


def test_containment_examples(exact_mode):
    k = cube(2)
    r = containment_scale(k, k)
    assert r.r_exact == pytest.approx(1)
    r2 = containment_scale(k, k.scale(2))
    assert r2.r_exact == pytest.approx(2) and r2.r_bound == 4


@pytest.mark.parametrize("n", [2, 3])
def test_containment_bound_sweep(n, rng):
    for _ in range(15):
        k = sampling.random_polytope(rng, n, exact=False)
        m = sampling.random_polytope(rng, n, exact=False)
        r = containment_scale(k, m)
        assert r.r_exact <= float(r.r_bound) + 1e-9


def test_containment_needs_full_dimensional_k():
    with pytest.raises(ValueError):
        containment_scale(segment((0, 0), (1, 0), exact=False), cube(2, exact=False))
