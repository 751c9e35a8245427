"""Cone trigonometry, radii and the Y regions."""
import numpy as np
import pytest
from hypothesis import given, strategies as st

from conesmith import complexes as C
from conesmith import cones as K
from conesmith.widths import sample_complex


def test_right_triangle_examples(pentagon):
    D = ("c0", "c1")
    X = np.zeros((3, 7))
    X[0, [pentagon.index["c0"], pentagon.index["c1"]]] = np.sqrt(0.5)
    X[1, pentagon.index["n0"]] = 1.0
    X[2, [pentagon.index["c0"], pentagon.index["n0"]]] = np.sqrt(0.5)
    e = K.decompose(X, np.array([2.0, 2.0, 1.0]), D, pentagon)
    assert e.r[0] == 0 and e.t[0] == pytest.approx(2.0)
    assert e.t[1] == pytest.approx(0.0, abs=1e-15) and e.r[1] == pytest.approx(2.0)
    # s = 1 at 45 degrees
    r = np.arcsinh(np.sinh(1.0) * np.sqrt(0.5))
    assert e.r[2] == pytest.approx(r)
    assert np.cosh(e.r[2]) * np.cosh(e.t[2]) == pytest.approx(np.cosh(1.0))


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 40))
def test_decompose_recompose(seed, smax):
    P = C.suspension(C.circle_complex(5))
    rng = np.random.default_rng(seed)
    X = sample_complex(P, 64, rng)
    s = rng.uniform(1e-3, smax, 64)
    for simp in (("n0",), ("c2", "c3")):
        inside = C.in_star_dense(X, simp, P)
        e = K.decompose(X[inside], s[inside], simp, P)
        np.testing.assert_allclose(np.cosh(e.r) * np.cosh(e.t) / np.cosh(s[inside]), 1, atol=1e-12)
        np.testing.assert_allclose(np.sinh(e.r), np.sin(e.beta) * np.sinh(s[inside]),
                                   rtol=1e-12, atol=1e-300)
        X2, s2 = K.recompose(e, P)
        np.testing.assert_allclose(X2, X[inside], atol=1e-12)
        np.testing.assert_allclose(s2, s[inside], rtol=1e-12)


def test_decompose_outside_star(pentagon):
    X = np.zeros((1, 7))
    X[0, pentagon.index["c3"]] = 1
    with pytest.raises(ValueError):
        K.decompose(X, 1.0, ("c0",), pentagon)


def test_slice_widths():
    assert K.sphere_slice_width(2.0, np.pi / 2) == pytest.approx(2.0)
    assert K.sphere_slice_width(2.0, np.arcsin(0.1)) == pytest.approx(np.arcsinh(0.1 * np.sinh(2)))


def test_slice_consistency(pentagon):
    # (x, s) is within the slice width of the cone on D exactly when x is within beta of D
    rng = np.random.default_rng(0)
    X = sample_complex(pentagon, 3000, rng)
    s = rng.uniform(0.5, 10, 3000)
    beta = 0.4
    for simp in (("c0",), ("c0", "s0")):
        d, inside = K.cone_distance(X, s, simp, pentagon)
        sin_g, _ = C.star_sin_distance(X, simp, pentagon)
        by_cone = inside & (d < K.sphere_slice_width(s, beta))
        by_sphere = inside & (sin_g < np.sin(beta))
        np.testing.assert_array_equal(by_cone, by_sphere)


def test_radii(params):
    m = 2
    r0 = np.arcsinh(np.sinh(params.r) / params.ratio)
    rk, s, r = K.radii(params, m, 0)
    assert rk == pytest.approx(r0)
    assert r == params.r          # r_{m, m-2} = r_{-1} = r
    # s_{m, m-2} = arcsinh(c sinh r)
    assert s == pytest.approx(np.arcsinh(params.scale * np.sinh(params.r)))
    assert K.radius_k(params, -1) == params.r
    assert K.radius_from_top(params, 2, r0) == pytest.approx(params.r)


def test_three_dim_radii():
    prm = K.ConeParams(27, 4, np.exp(-20), np.exp(7), (14.5, 14.5, 14.5))
    assert K.radii(prm, 3, 0)[2] == pytest.approx(K.radius_k(prm, 0))   # r_{m, m-3} = r_0
    top = K.radius_k(prm, 1)
    assert K.radii(prm, 3, 1)[1] == pytest.approx(np.arcsinh(prm.scale * np.sinh(top) * prm.ratio**2))


@pytest.mark.parametrize("kw,needle", [
    (dict(ratio=0.5, scale=0.5), "c="), (dict(scale=np.exp(7), ratio=np.exp(-10)), "e^-4"),
    (dict(depths=(9, 13)), "d2"), (dict(r=20), "r=20"),
])
def test_parameter_violations(kw, needle):
    base = dict(r=27, xi=3, ratio=np.exp(-20), scale=np.exp(7), depths=(13, 13))
    base.update(kw)
    bad = K.ConeParams(**base).violations(2)
    assert any(needle in b for b in bad)
    with pytest.raises(ValueError):
        K.ConeParams(**base).validate(2)


def test_excess_must_cover_dimension(params):
    assert any("xi" in b for b in K.ConeParams(27, 2, params.ratio, params.scale, (13, 13)).violations(2))
    assert params.violations(2) == []


def test_y_regions_avoid_the_ball(pentagon, params):
    reg = K.Regions(pentagon, params)
    rng = np.random.default_rng(0)
    X = sample_complex(pentagon, 2000, rng)
    s = rng.uniform(0.1, reg.y_ball - 1e-6, 2000)
    masks, _ = reg.classify(X, s)
    assert not any(m.any() for m in masks.values())


def test_points_on_a_simplex_cone_are_in_its_region(pentagon, params):
    reg = K.Regions(pentagon, params)
    v = "c2"
    X = np.zeros((4, 7))
    X[:, pentagon.index[v]] = 1
    s = np.array([reg.top_radius + 0.1, reg.top_radius + 5, reg.y_ball + 1, reg.top_radius + 20])
    assert reg.y_simplex(X, s, {v}).inside.all()


def test_region_audit_corrected(pentagon, params):
    audit = K.region_audit(pentagon, params, 3000, 1)
    assert audit.violations == 0 and audit.samples == 3000


def test_region_audit_literal_ratio_overlaps(pentagon):
    # with ratio e^-13 the width around vertices exceeds the ball radius by four
    literal = K.ConeParams(27, 3, np.exp(-13), np.exp(7), (13, 13))
    reg = K.Regions(pentagon, literal)
    assert reg.s_width(0) - reg.y_ball == pytest.approx(4.0, abs=1e-6)
    audit = K.region_audit(pentagon, literal, 3000, 1)
    assert audit.uncovered == 0 and audit.disjoint_overlaps > 0


def test_radial_case_examples():
    assert K.radial_case(0.1, 0.0, 0.5) == ("C1", 0.0)
    assert K.radial_case(np.sin(0.5), 0.0, 0.5)[0] == "C3"
    assert K.radial_case(0.9, 0.0, 0.5)[0] == "C2"


def test_radial_case_threshold():
    theta = 0.6
    sin_g = np.sin(theta) / 3
    b = np.log(2)
    case, s0 = K.radial_case(sin_g, b, theta)
    assert case == "C1"
    assert not K.ray_inside(sin_g, b, theta, s0 - 0.1)
    assert K.ray_inside(sin_g, b, theta, s0 + 0.1)


@given(st.floats(0.01, 0.99), st.floats(-3, 3), st.floats(0.05, 1.5))
def test_radial_case_agrees_with_direct_test(sin_g, b, theta):
    case, s0 = K.radial_case(sin_g, b, theta)
    far = 60.0
    if case == "C1":
        assert K.ray_inside(sin_g, b, theta, far)
        if s0 > 0.05:
            assert not K.ray_inside(sin_g, b, theta, s0 - 0.05)
            assert K.ray_inside(sin_g, b, theta, s0 + 0.05)
    elif case == "C2":
        assert not K.ray_inside(sin_g, b, theta, far)


def test_radial_stability(pentagon, params):
    v = pentagon.vertices[0]
    x = np.zeros(7)
    x[pentagon.index[v]] = 1
    assert K.radial_stability(x, 0.0, pentagon, params).region == frozenset({v})
    g = np.abs(np.random.default_rng(0).normal(size=3))
    y = np.zeros(7)
    y[[pentagon.index[w] for w in ("c0", "c1", "n0")]] = g / np.linalg.norm(g)
    top = K.radial_stability(y, 0.0, pentagon, params)
    assert top.region == "top"
    y2 = y.copy()
    y2[pentagon.index["c0"]] += 1e-3
    y2 /= np.linalg.norm(y2)
    assert K.radial_stability(y2, 0.0, pentagon, params) == top
