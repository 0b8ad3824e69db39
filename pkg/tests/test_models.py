import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import square_metric, tripod_metric
from quadcomp import models
from quadcomp.cones import all_negtype_hold
from quadcomp.errors import InvalidArgument, NotOnSide, UndefinedAngle
from quadcomp.forms import FiniteSemimetric
from quadcomp.models import (
    Chain,
    ComparisonConfig,
    ModelPoint,
    comparison_angle,
    heron_16a2,
    lemma_area_bound_residual,
    model_distance,
    point_on_side_value,
    telescoping_residual,
    weighted_31_error_value,
)
from quadcomp.wald import check_triangle, classify4

H = models.Hyperbolic()


# -- distances ---------------------------------------------------------------------

def test_distance_examples():
    p = ModelPoint(H, (1, 0, 0))
    q = ModelPoint(H, (math.cosh(1), math.sinh(1), 0))
    assert model_distance(p, q) == pytest.approx(1.0, rel=1e-15)
    T = models.Tripod()
    assert model_distance(ModelPoint(T, (0, 0.5)), ModelPoint(T, (1, 0.7))) == pytest.approx(1.2)
    assert model_distance(ModelPoint(T, (0, 0.5)), ModelPoint(T, (0, 0.2))) == pytest.approx(0.3)
    C = models.Circle(2.0)
    assert model_distance(ModelPoint(C, (0,)), ModelPoint(C, (3 * math.pi / 2,))) == pytest.approx(math.pi)
    S = models.Sphere(2.0)
    assert model_distance(ModelPoint(S, (2, 0, 0)), ModelPoint(S, (0, 0, 2))) == pytest.approx(math.pi)
    P = models.Product((models.Euclidean(1), models.Circle(1.0)))
    assert model_distance(ModelPoint(P, (0, 0)), ModelPoint(P, (3, math.pi / 2))) == pytest.approx(
        math.hypot(3, math.pi / 2))


def test_mismatched_spaces():
    with pytest.raises(InvalidArgument):
        model_distance(ModelPoint(models.Circle(1.0), (0,)), ModelPoint(models.Circle(2.0), (0,)))


def test_point_validation():
    with pytest.raises(InvalidArgument):
        ModelPoint(H, (2, 0, 0))
    with pytest.raises(InvalidArgument):
        ModelPoint(H, (-1, 0, 0))
    with pytest.raises(InvalidArgument):
        ModelPoint(models.Sphere(1.0), (1, 1, 0))
    with pytest.raises(InvalidArgument):
        ModelPoint(models.Tripod(), (3, 0.5))
    with pytest.raises(InvalidArgument):
        ModelPoint(models.Euclidean(3), (1, 2))


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 3), st.floats(0, 6.3), st.floats(0, 3), st.floats(0, 6.3))
def test_hyperbolic_distance_against_arccosh(r1, a1, r2, a2):
    p = models.hyperbolic_polar(r1, a1)
    q = models.hyperbolic_polar(r2, a2)
    # exact polar-coordinate law of cosines in high precision
    R1, R2, A = sp.Float(r1, 50), sp.Float(r2, 50), sp.Float(a1, 50) - sp.Float(a2, 50)
    # cosh d = cosh(r1 - r2) + sinh r1 sinh r2 (1 - cos a), never below 1
    arg = sp.cosh(R1 - R2) + sp.sinh(R1) * sp.sinh(R2) * 2 * sp.sin(A / 2) ** 2
    exact = sp.acosh(arg).evalf(30)
    assert float(H.dist(p, q)) == pytest.approx(float(exact), rel=1e-9, abs=1e-12)


def test_hyperbolic_small_scale_stability():
    p = models.hyperbolic_polar(0.3, 0.2)
    q = models.hyperbolic_geodesic_point(p, models.hyperbolic_polar(0.5, 1.0), 1e-7)
    assert float(H.dist(p, q)) == pytest.approx(1e-7, rel=1e-7)


def test_geodesic_helpers():
    p, q = models.hyperbolic_polar(0.4, 0.1), models.hyperbolic_polar(0.9, 2.0)
    d = float(H.dist(p, q))
    x = models.hyperbolic_geodesic_point(p, q, 0.3 * d)
    assert float(H.dist(p, x)) == pytest.approx(0.3 * d, rel=1e-12)
    assert float(H.dist(x, q)) == pytest.approx(0.7 * d, rel=1e-12)
    S = models.Sphere(1.0)
    a, b = np.array([1.0, 0, 0]), np.array([0, 0.6, 0.8])
    m = models.sphere_arc_point(a, b, 0.25)
    assert float(S.dist(a, m)) == pytest.approx(0.25 * math.pi / 2)


# -- comparison quantities -----------------------------------------------------------

def test_comparison_angle_examples():
    assert comparison_angle(1, 1, 1, 0) == pytest.approx(math.pi / 3)
    assert comparison_angle(2, 1, 1, 0) == pytest.approx(math.pi)
    assert comparison_angle(2, 1, 1, -1) == pytest.approx(math.pi)
    c1 = math.cosh(1)
    expected = math.acos(c1 * (c1 - 1) / math.sinh(1) ** 2)
    assert comparison_angle(1, 1, 1, -1) == pytest.approx(expected, rel=1e-14)


def test_hyperbolic_angle_by_construction():
    # equilateral triangle with unit sides built on the hyperboloid
    theta = comparison_angle(1, 1, 1, -1)
    o = models.hyperbolic_polar(0.0, 0.0)
    a, b = models.hyperbolic_polar(1.0, 0.0), models.hyperbolic_polar(1.0, theta)
    assert float(H.dist(a, b)) == pytest.approx(1.0, rel=1e-12)
    assert float(H.dist(o, a)) == pytest.approx(1.0, rel=1e-12)


def test_comparison_angle_errors():
    with pytest.raises(InvalidArgument):
        comparison_angle(3, 1, 1)
    with pytest.raises(UndefinedAngle):
        comparison_angle(1, 0, 1)
    with pytest.raises(InvalidArgument):
        comparison_angle(1, 1, 1, curvature=1)


def test_heron_examples():
    assert heron_16a2(3, 4, 5) == 576.0
    assert heron_16a2(1, 1, 1) == pytest.approx(3.0)
    assert heron_16a2(1, 1, 2) == 0.0
    assert models.model_area(3, 4, 5) == pytest.approx(6.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 100), st.floats(0.01, 100), st.floats(0.01, 1))
def test_heron_matches_product_form(a, b, t):
    c = abs(a - b) + t * (a + b - abs(a - b))
    s = (a + b + c) / 2
    oracle = 16 * s * (s - a) * (s - b) * (s - c)
    assert heron_16a2(a, b, c) == pytest.approx(oracle, rel=1e-10, abs=1e-10 * (a * a + b * b + c * c) ** 2)


# -- point on side ---------------------------------------------------------------------

def test_point_on_side_euclidean_example():
    m = FiniteSemimetric.from_points([[0, 0], [1, 0], [0, 1], [0.5, 0]])
    assert point_on_side_value(m, 0.5) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("alpha", [0.1 * k for k in range(1, 10)])
def test_point_on_side_euclidean_equality(alpha):
    rng = np.random.default_rng(int(alpha * 10))
    for _ in range(50):
        x = rng.uniform(-1, 1, (3, 3))
        x4 = alpha * x[0] + (1 - alpha) * x[1]
        m = FiniteSemimetric.from_points(np.vstack([x, x4]))
        assert abs(point_on_side_value(m, alpha)) < 1e-12


def test_point_on_side_sphere():
    S = models.Sphere(1.0)
    pts = S.points(np.random.default_rng(2).uniform(size=(200, S.draws)))
    for alpha in (0.2, 0.5, 0.9):
        x4 = models.sphere_arc_point(pts[:, 0], pts[:, 1], 1 - alpha)
        d = S.pairwise(np.concatenate([pts[:, :3], x4[:, None]], axis=1))
        assert max(point_on_side_value(x, alpha) for x in d) <= 1e-9


def test_point_on_side_hyperbolic_beyond():
    pts = H.points(np.random.default_rng(3).uniform(size=(200, H.draws)))
    for alpha in (1.2, 2.0, 3.5):
        d12 = H.dist(pts[:, 0], pts[:, 1])
        x4 = models.hyperbolic_geodesic_point(pts[:, 0], pts[:, 1], -(alpha - 1) * d12)
        d = H.pairwise(np.concatenate([pts[:, :3], x4[:, None]], axis=1))
        assert max(point_on_side_value(x, alpha) / x.max() ** 2 for x in d) <= 1e-9


def test_point_on_side_precondition(square):
    with pytest.raises(NotOnSide):
        point_on_side_value(square, 0.5)


# -- telescoping -------------------------------------------------------------------------

def _chain(rng, k, beta):
    return Chain(rng.uniform(), tuple(rng.uniform(size=k + 1)), tuple(rng.uniform(size=k + 1)),
                 tuple(rng.uniform() * beta ** np.arange(1, k + 1)))


def test_telescoping_k1_exact():
    rng = np.random.default_rng(0)
    for _ in range(20):
        assert telescoping_residual(ComparisonConfig(0.3, 0.6, 1), _chain(rng, 1, 0.6)) == 0.0


def test_telescoping_k2_symbolic():
    a, b, s = sp.symbols("alpha beta s", positive=True)
    d12, p0, p1, p2, q0, q1, q2 = sp.symbols("d12 p0 p1 p2 q0 q1 q2", positive=True)

    def L(lam, side1, side2, far1, far2, gap):
        # lam . D^2 . lam over the ordered pairs of (x1, x2, near, far)
        D = sp.Matrix([[0, d12, side1, far1], [d12, 0, side2, far2],
                       [side1, side2, 0, gap], [far1, far2, gap, 0]])
        v = sp.Matrix(lam)
        return (v.T * D.applyfunc(lambda x: x ** 2) * v)[0]

    lam1 = [a * (1 - b), (1 - a) * (1 - b), b, -1]
    lam2 = [a * (1 - b ** 2), (1 - a) * (1 - b ** 2), b ** 2, -1]
    steps = (s * b, s * b ** 2)
    whole = L(lam2, p0, q0, p2, q2, steps[0] + steps[1])
    parts = b * L(lam1, p0, q0, p1, q1, steps[0]) + L(lam1, p1, q1, p2, q2, steps[1])
    assert sp.expand(whole - (1 + b) * parts) == 0

    rng = np.random.default_rng(1)
    for _ in range(50):
        assert telescoping_residual(ComparisonConfig(1 / 3, 0.5, 2), _chain(rng, 2, 0.5)) < 1e-12


def test_telescoping_sweep():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(300):
        k = int(rng.integers(1, 11))
        beta = rng.uniform(0.1, 0.9)
        cfg = ComparisonConfig(rng.uniform(0.01, 0.99), beta, k)
        worst = max(worst, telescoping_residual(cfg, _chain(rng, k, beta)))
    assert worst < 1e-10


def test_telescoping_rejects_bad_chains():
    cfg = ComparisonConfig(0.5, 0.5, 2)
    with pytest.raises(InvalidArgument):
        telescoping_residual(cfg, Chain(1.0, (1, 1, 1), (1, 1, 1), (0.5, 0.5)))
    with pytest.raises(InvalidArgument):
        telescoping_residual(cfg, Chain(1.0, (1, 1), (1, 1), (0.5,)))


def test_config_validation():
    assert ComparisonConfig(0.5, 0.5, 3).gamma == 0.125
    assert ComparisonConfig(0.5, 0.5).regime == (3, 1)
    assert ComparisonConfig(2.0, 0.5).regime == (2, 2)
    for bad in ((0.5, 1.0, 1), (0.5, 0.0, 1), (1.0, 0.5, 1), (-1, 0.5, 1), (0.5, 0.5, 0), (0.5, 0.5, 1.5)):
        with pytest.raises(InvalidArgument):
            ComparisonConfig(*bad)


# -- lemma and weighted error --------------------------------------------------------------

def test_lemma_coincident_points():
    p = ModelPoint(H, (1, 0, 0))
    assert lemma_area_bound_residual([p, p, p, p], [1 / 3, 1 / 3, 1 / 3, -1]) == 0.0


def test_lemma_small_equilateral():
    pts = np.array([models.hyperbolic_polar(0.05, t) for t in (0, 2 * math.pi / 3, 4 * math.pi / 3)])
    pts = np.vstack([pts, pts[:1]])
    points = [ModelPoint(H, tuple(x)) for x in pts]
    assert lemma_area_bound_residual(points, [1 / 3, 1 / 3, 1 / 3, -1]) >= 0.0
    assert lemma_area_bound_residual(pts, [0.2, 0.5, 0.3, -1]) >= 0.0


def test_lemma_rejects_bad_lambda():
    p = ModelPoint(H, (1, 0, 0))
    for lam in ([0.5, 0.5, 0.5, -1.5], [1, 1, -1, -1], [0.5, 0.6, -0.1, -1]):
        with pytest.raises(InvalidArgument):
            lemma_area_bound_residual([p, p, p, p], lam)


def test_lemma_sampled():
    from quadcomp.suites import lemma_residuals, lemma_scale
    u = np.random.default_rng(9).uniform(size=(5000, H.draws + 3))
    d = H.pairwise(H.points(u[:, :H.draws]))
    assert d.max() <= 1.0
    w = 1 - u[:, H.draws:]
    w /= w.sum(axis=1, keepdims=True)
    lam = np.hstack([w, -np.ones((len(w), 1))])
    res = lemma_residuals(d, lam)
    assert np.all(res >= -1e-9 * lemma_scale(d, lam))
    assert res[0] == pytest.approx(lemma_area_bound_residual(d[0], lam[0]), rel=1e-12, abs=1e-15)


def test_weighted_31():
    lam = [1 / 3, 1 / 3, 1 / 3, -1]
    assert weighted_31_error_value(tripod_metric(), lam, 2.0) == pytest.approx(2 / 3 - 480 / 27)
    assert weighted_31_error_value(tripod_metric(), lam, 0.0) == pytest.approx(2 / 3)
    assert weighted_31_error_value(square_metric(), [0.2, 0.3, 0.5, -1], 0.7) <= 0


# -- sampling ----------------------------------------------------------------------------

def test_parse_space():
    sp_ = models.parse_space("circle(r=0.1..10)*euclidean(3)")
    assert isinstance(sp_, models.Product)
    assert isinstance(sp_.factors[0], models.Scaled)
    assert models.parse_space("hyperbolic(cap=0.5)").cap == 0.5
    assert models.parse_space("tripod(L=2)").length == 2.0
    for bad in ("blob", "circle(r=x)", "random*euclidean(2)", "circle(r=1"):
        with pytest.raises(InvalidArgument):
            models.parse_space(bad)


def test_sample_deterministic():
    a = models.sample("circle(r=0.1..10)*euclidean(3)", 20, 5)
    b = models.sample("circle(r=0.1..10)*euclidean(3)", 20, 5)
    assert all(np.array_equal(x.d, y.d) for x, y in zip(a, b))
    c = models.sample("circle(r=0.1..10)*euclidean(3)", 20, 6)
    assert not np.array_equal(a[0].d, c[0].d)
    tail = models.sample_distances("random", 5, 5, start=15)
    assert np.array_equal(tail, models.sample_distances("random", 20, 5)[15:])
    with pytest.raises(InvalidArgument):
        models.sample("random", 0, 1)


def test_scaled_radius_range():
    u = np.random.default_rng(0).uniform(size=(500, 5))
    pts = models.Scaled(models.Circle(1.0), 0.1, 10.0).points(u)
    r = pts[:, 0, -1]
    assert r.min() >= 0.1 and r.max() <= 10.0


def test_samples_classify():
    assert all(classify4(m).cbb for m in models.sample("circle(r=1)", 300, 11))
    hyp = models.sample("hyperbolic", 300, 11)
    assert all(classify4(m).cat for m in hyp)
    assert max(m.scale for m in hyp) <= 1.0
    assert all(check_triangle(m) for m in models.sample("random", 1000, 11))


def test_curvature_families_hold():
    for d in models.sample_distances("sphere(r=0.1..10)", 10_000, 12):
        assert all_negtype_hold(d, (3, 1))
    for d in models.sample_distances("hyperbolic", 10_000, 12):
        assert all_negtype_hold(d, (2, 2))
