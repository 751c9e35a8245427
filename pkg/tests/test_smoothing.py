import numpy as np
import pytest
from hypothesis import given, strategies as st

from conesmith import complexes as C
from conesmith import curvature as Cu
from conesmith import metrics as M
from conesmith import smoothing as S
from conesmith.cones import ConeParams


# ---- polygons -------------------------------------------------------------------------

@pytest.mark.parametrize("construction", ["blend", "forced"])
def test_circle_is_exact_outside_the_band(construction):
    G = S.smooth_cone_dim1(5, 20.0, 8.0, construction)
    n = np.array([[0.6, 0.8], [1.0, 0.0], [-0.28, 0.96]])
    for s, ref in ((5.0, M.hyperbolic_metric(1)), (11.9, M.hyperbolic_metric(1)), (25.0, G.patched)):
        sv = np.full(3, s)
        gap = S.relative_gap(S.metric_at(G, sv, n), S.metric_at(ref, sv, n))
        assert gap.max() < 1e-12


def test_circle_constructions_agree_in_value():
    t = np.linspace(13.0, 19.0, 7)
    n = np.tile([0.0, 1.0], (7, 1))
    a = S.metric_at(S.smooth_cone_dim1(5, 20.0, 8.0, "blend"), t, n).value
    b = S.metric_at(S.smooth_cone_dim1(5, 20.0, 8.0, "forced"), t, n).value
    # polar charts divide out sinh^2, leaving a warp factor between 1 and k
    for g in (a, b):
        assert np.all(g[:, 1, 1] >= 1 - 1e-12)
        assert np.all(g[:, 1, 1] <= 1.25 + 1e-12)
    assert np.all(np.diff(a[:, 1, 1]) > 0)


def test_square_is_hyperbolic_everywhere():
    G = S.smooth_cone_dim1(4, 20.0, 8.0)
    t = np.linspace(1.0, 30.0, 60)
    np.testing.assert_allclose(S.circle_curvature(t, 1.0, 20.0, 8.0), -1.0, atol=1e-12)
    assert G.metric.k == 1.0


def test_circle_validation():
    with pytest.raises(ValueError):
        S.smooth_cone_dim1(2, 20.0, 8.0)
    with pytest.raises(ValueError):
        S.smooth_cone_dim1(5, 8.0, 8.0)
    with pytest.raises(ValueError):
        S.smooth_cone_dim1(5, 20.0, 8.0, xi=2.0)
    with pytest.raises(ValueError):
        S.smooth_cone_dim1(5, 20.0, 8.0, construction="spline")


@given(st.integers(3, 12), st.floats(7.0, 30.0))
def test_circle_curvature_bounded_by_depth(segments, d2):
    t = np.linspace(40.0 - d2, 40.0, 400)
    K = S.circle_curvature(t, segments / 4, 40.0, d2)
    k = segments / 4
    # the step has derivative bounded by 2/d2 and second derivative bounded by ~10/d2^2
    bound = abs(k - 1) / min(k, 1) * (2 / d2 / np.tanh(t[0]) + 10 / d2**2) + (k - 1) ** 2 / min(k, 1) ** 2 / d2**2
    assert np.all(np.abs(K + 1) <= bound)


def test_circle_cut_limit_matches_probe():
    fam = S.circle_family(5, 8.0)
    for b in (-8.0, -4.0, 0.0):
        ref = S.circle_cut_limit(5, 8.0, b)
        probe = M.cut_limit_probe(fam, b, (40.0, 45.0, 50.0), reference=ref)
        assert probe.reference_errors[-1] < 1e-3


# ---- dimension two ---------------------------------------------------------------------

def test_pentagon_suspension_properties(smoothed):
    rep = S.property_report(smoothed, count=300, seed=0)
    assert rep.core_deviation < 1e-12
    assert rep.outer_deviation < 1e-12
    assert rep.top_deviation < 1e-12
    assert rep.samples["top"] > 0


def test_pentagon_suspension_overlaps(smoothed):
    rep = S.overlap_check(smoothed, count=600, seed=3)
    assert rep.overlaps > 0
    assert rep.passed() and rep.max_relative < 1e-9


def test_provenance_labels(smoothed):
    s = np.array([1.0, smoothed.core + 1, smoothed.top_radius - 1, smoothed.top_radius + 0.2, smoothed.top_radius + 30])
    n = np.tile(smoothed.layout.to_sphere(np.eye(len(smoothed.complex.vertices))[:1]), (5, 1))
    labels = smoothed.provenance(s, n)
    assert labels[:4] == ["hyperbolic core", "two-variable blend", "warped cut", "warp blend"]
    assert labels[4].startswith("patched:")


def test_canonical_sphere_generic_is_hyperbolic(params):
    sphere = C.canonical_sphere(2)
    G = S.smooth_cone(sphere, params, generic=True)
    rng = np.random.default_rng(0)
    n = S.sample_directions(G.layout, 200, rng)
    s = rng.uniform(1.0, G.top_radius + 20, 200)
    gap = S.relative_gap(S.metric_at(G, s, n), S.metric_at(M.hyperbolic_metric(2), s, n))
    assert gap.max() < 1e-9


def test_c_independence(pentagon, params):
    v = S.c_independence_check(pentagon, params, np.exp(7), np.exp(9), samples=400, seed=2)
    assert v.passed and v.max_relative < 1e-9
    assert all(g > b for g, b in v.gaps)
    with pytest.raises(ValueError):
        S.c_independence_check(pentagon, params, np.exp(9), np.exp(7))


def test_link_restriction_is_functorial(pentagon):
    layout = S.JoinSmoothing(pentagon)
    poles = [v for v in pentagon.vertices if str(v)[0] in "ns"]
    edge = frozenset([poles[0], "c0"])
    assert S.link_restriction_agrees(layout, [poles[0]], edge)
    with pytest.raises(ValueError):
        S.link_restriction_agrees(layout, edge, [poles[0]])


def test_smoothed_family_cut_limits_are_cauchy(pentagon, params):
    fam = S.smoothed_family(pentagon, params)
    probe = M.cut_limit_probe(fam, -params.depths[1] / 2, (60.0, 66.0, 72.0))
    assert probe.cauchy
    assert probe.deviations[-1] < 1e-3


# ---- chart change -----------------------------------------------------------------------

@given(st.floats(0.05, 12.0), st.floats(0.01, 1.55))
def test_chart_change_round_trip(s, beta):
    t, r = S.chart_change(s, beta)
    assert np.cosh(s) == pytest.approx(np.cosh(t) * np.cosh(r), rel=1e-10)
    s2, b2 = S.chart_change_inverse(t, r)
    assert s2 == pytest.approx(s, rel=1e-9, abs=1e-9)
    assert b2 == pytest.approx(beta, rel=1e-8, abs=1e-9)


def test_radius_over_angle_is_smooth_at_zero():
    s = 3.0
    small = S.radius_over_angle(s, np.array([0.0, 1e-6]))
    assert small[0] == pytest.approx(np.sinh(s))
    assert small[1] == pytest.approx(small[0], rel=1e-9)
    beta = 0.4
    assert S.radius_over_angle(s, beta) * beta == pytest.approx(S.chart_change(s, beta)[1])


# ---- cones over manifolds -----------------------------------------------------------------

@pytest.mark.parametrize("profile,expected", [("corrected", -1.0), ("literal", -0.25)])
def test_manifold_cone_inner_curvature(profile, expected, params):
    cone, _ = S.standin_manifold_cone(5, params, profile)
    rng = np.random.default_rng(0)
    t = rng.uniform(5.0, cone.inner_edge - 1, 30)
    y = rng.uniform(-0.3, 0.3, (30, 2))
    rep = Cu.pinch_report(cone, np.column_stack([t, y]), 4, 0)
    assert rep.k_min == pytest.approx(expected, abs=1e-9)
    assert rep.k_max == pytest.approx(expected, abs=1e-9)


def test_manifold_cone_matches_forced_patch_outside(params):
    cone, model = S.standin_manifold_cone(5, params)
    rng = np.random.default_rng(1)
    t = rng.uniform(cone.top + 1, cone.top + 10, 50)
    y = rng.uniform(-0.2, 0.2, (50, 2))
    keep = model.faithful(t, y)
    assert keep.any()
    rep = Cu.pinch_report(cone, np.column_stack([t, y])[keep], 4, 0)
    assert rep.max_dev < 1e-6


def test_manifold_cone_validation(params):
    cone, model = S.standin_manifold_cone(5, params)
    with pytest.raises(ValueError):
        S.ManifoldCone(model.G.patched, model.to_sphere, S.flat_form, 20.0, 13.0)
    with pytest.raises(ValueError):
        S.ManifoldCone(model.G.patched, model.to_sphere, S.flat_form, 47.0, 13.0, profile="other")
    with pytest.warns(UserWarning):
        S.smooth_cone_manifold(model.G.patched, model.to_sphere, S.flat_form,
                               ConeParams(27, 3, np.exp(-20), np.exp(7), (13,) * 6), 5)
