"""Curvature kernel, pinch reports and closeness to the hyperbolic model."""
import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from conesmith import curvature as Cu
from conesmith import jets as J
from conesmith import metrics as M
from conesmith import smoothing as S
from conesmith.acceptance import upper_half_points


class RoundSphere(M.ChartMetric):
    """Stereographic chart of the unit sphere: 4|dx|^2 / (1 + |x|^2)^2."""

    def __init__(self, dim):
        self.dim = dim

    def metric(self, x):
        dx = x.grad()
        conf = 4.0 / (1.0 + (x * x).sum(-1)) ** 2
        return (dx.expand(-1) * dx.expand(-2)).sum(0) * M.lower(conf).expand(-1).expand(-1)


class ScaledHyperbolic(M.ChartMetric):
    """Upper half plane scaled by lam^2: curvature -1/lam^2."""

    def __init__(self, lam):
        self.dim, self.lam = 2, lam

    def metric(self, x):
        return M.HyperbolicSpace(2).metric(x) * self.lam**2


@pytest.mark.parametrize("dim", [2, 3, 4])
def test_constant_curvature_models(dim):
    rng = np.random.default_rng(dim)
    pts = upper_half_points(rng, 50, [dim])
    assert Cu.pinch_report(M.HyperbolicSpace(dim), pts, 6, 0).max_dev <= 1e-6
    sph = Cu.pinch_report(RoundSphere(dim), rng.normal(size=(50, dim)), 6, 0)
    assert abs(sph.k_min - 1) <= 1e-6 and abs(sph.k_max - 1) <= 1e-6


@given(st.floats(0.3, 4.0))
def test_scaling_law(lam):
    pts = upper_half_points(np.random.default_rng(0), 10, [2])
    rep = Cu.pinch_report(ScaledHyperbolic(lam), pts, 2, 0)
    assert rep.k_min == pytest.approx(-1 / lam**2, rel=1e-9)


def test_sectional_curvature_rejects_degenerate_metric():
    class Flat0(M.ChartMetric):
        dim = 2

        def metric(self, x):
            return M.outer(x[0].grad())
    with pytest.raises(ValueError):
        Cu.sectional_curvature(Flat0(), np.zeros((1, 2)), np.array([[1.0, 0]]), np.array([[0, 1.0]]))


def _profile_oracle(t, k, r, d2):
    """-f''/f for f = sinh(t) sqrt(mu(t)), differentiated by mpmath from the step's closed form."""
    mp.mp.dps = 40

    def step(x):
        if x <= 0:
            return mp.mpf(0)
        if x >= 1:
            return mp.mpf(1)
        a, b = mp.exp(-1 / x), mp.exp(-1 / (1 - x))
        return a / (a + b)

    def f(u):
        mu = 1 + (k - 1) * step((u - (r - d2)) / d2)
        return mp.sinh(u) * mp.sqrt(mu)

    u = mp.mpf(t)
    return float(-mp.diff(f, u, 2) / f(u))


@pytest.mark.parametrize("t", [12.4, 13.1, 15.0, 17.3, 19.6])
def test_circle_curvature_against_oracle(t):
    k, r, d2 = 1.25, 20.0, 8.0
    assert S.circle_curvature(t, k, r, d2) == pytest.approx(_profile_oracle(t, k, r, d2), rel=1e-6)


def test_circle_curvature_pipeline_matches_formula():
    G = S.smooth_cone_dim1(5, 20.0, 8.0)
    t = np.linspace(11.0, 21.0, 41)
    g = M.RadialInChart(G.metric, M.angle_chart)
    pts = np.column_stack([t, np.zeros_like(t)])
    K = Cu.sectional_curvature(g, pts, np.tile([1.0, 0], (41, 1)), np.tile([0, 1.0], (41, 1)))
    np.testing.assert_allclose(K, S.circle_curvature(t, 1.25, 20.0, 8.0), atol=1e-8)


def test_hand_written_blend_formula_matches_generic_one():
    t = np.linspace(12.5, 19.5, 30)
    mu, d1, d2 = S.circle_profile_derivatives(t, 1.25, 20, 8)
    f = np.sinh(t) * np.sqrt(mu)
    # f'' from f = sinh sqrt(mu) by the product rule
    sq, dsq = np.sqrt(mu), d1 / (2 * np.sqrt(mu))
    ddsq = d2 / (2 * sq) - d1**2 / (4 * mu * sq)
    f2 = np.sinh(t) * sq + 2 * np.cosh(t) * dsq + np.sinh(t) * ddsq
    np.testing.assert_allclose(Cu.blended_warp_curvature(t, mu, d1, d2), Cu.warp_curvature(f, f2), rtol=1e-10)


def test_pinch_report_extension():
    g = M.HypExtension(M.HyperbolicSpace(2), 1)
    pts = upper_half_points(np.random.default_rng(0), 100, [1, 2])
    rep = Cu.pinch_report(g, pts, 6, 0, labels=np.arange(100) % 2)
    assert -1 - 1e-4 <= rep.k_min <= rep.k_max <= -1 + 1e-4
    assert set(rep.regions) == {"0", "1"} and sum(rep.histogram) == 600
    assert rep.to_json()["samples"] == 100


def test_model_chart_deviation_of_hyperbolic_space():
    hyp = M.hyperbolic_metric(1)
    n0 = np.array([1.0, 0.0])
    devs = []
    for t in (6.0, 8.0, 10.0):
        chart, seen = Cu.radial_model_chart(hyp, t, n0, 2.0)
        devs.append(Cu.c2_deviation(seen, chart))
    assert all(d > 0 for d in devs)
    assert devs[0] > devs[1] > devs[2]
    assert devs[2] < 1e-3


def test_model_chart_of_the_model_itself():
    chart = Cu.ModelChart(2, 1.0, lambda x: x)

    class Model(M.ChartMetric):
        dim = 2

        def metric(self, x):
            return chart.reference(x)
    assert Cu.c2_deviation(Model(), chart) == 0.0


def test_transition_deviation_shrinks_with_depth():
    n0 = np.array([0.0, 1.0])
    devs = []
    for d2 in (8.0, 16.0, 32.0):
        G = S.smooth_cone_dim1(5, 40.0, d2)
        chart, seen = Cu.radial_model_chart(G.metric, 40.0 - d2 / 2, n0, 0.5)
        devs.append(Cu.c2_deviation(seen, chart))
    assert devs[0] > devs[1] > devs[2]


def test_adapted_chart_sees_a_scaled_warp_as_hyperbolic():
    cone = M.cone_metric(1, 1.5625)
    n0 = np.array([0.6, 0.8])
    chart, seen = Cu.radial_model_chart(cone, 12.0, n0, 1.0)
    assert Cu.c2_deviation(seen, chart) < 1e-6
    chart, seen = Cu.radial_model_chart(cone, 12.0, n0, 1.0, adapt=False)
    assert Cu.c2_deviation(seen, chart) > 0.1


def test_ball_closeness_of_hyperbolic_space():
    v = Cu.is_ball_eps_close(M.hyperbolic_metric(1), 16.0, 1e-2, 2.0)
    assert v.passed and v.inside_error == 0.0 and v.path_bound_ok
    # charts near the origin cannot be close to the horospherical model
    assert not Cu.is_ball_eps_close(M.hyperbolic_metric(1), 6.0, 1e-2, 2.0).passed


def test_ball_closeness_of_the_smoothed_circle_improves_with_depth():
    worst = []
    for d2 in (16.0, 32.0):
        G = S.smooth_cone_dim1(5, 40.0 + d2, d2)
        v = Cu.is_ball_eps_close(G.metric, 40.0, 0.5, 0.5, outer=44.0 + d2)
        assert v.inside_error < 1e-12 and v.path_bound_ok
        worst.append(v.worst_chart["deviation"])
    assert worst[1] < 0.6 * worst[0]
    # the exact ball cannot reach into the transition annulus
    G = S.smooth_cone_dim1(5, 40.0, 16.0)
    assert Cu.is_ball_eps_close(G.metric, 30.0, 0.5, 0.5).inside_error > 1e-3


def test_chart_centres_are_seeded():
    a = Cu.chart_centers(2, 3.0, 5.0, 4, seed=1)
    b = Cu.chart_centers(2, 3.0, 5.0, 4, seed=1)
    assert len(a) == 20
    assert all(np.array_equal(x[1], y[1]) for x, y in zip(a, b))
    assert all(abs(np.linalg.norm(x[1]) - 1) < 1e-12 for x in a)


def test_path_length_of_a_geodesic():
    # vertical segment in the upper half plane: length log(z1 / z0)
    assert Cu.path_length(M.HyperbolicSpace(2), np.array([0.0, 1.0]), np.array([0.0, 5.0])) == \
        pytest.approx(np.log(5.0), rel=1e-10)


def test_jets_of_the_metric_need_order_three():
    class Bad(M.ChartMetric):
        dim = 1

        def metric(self, x):
            return M.outer(x[0].grad()).truncate(1)
    with pytest.raises(ValueError):
        Cu.metric_jets(Bad(), np.zeros((1, 1)))


def test_closeness_threshold_grows_as_eps_shrinks():
    hyp = M.hyperbolic_metric(1)
    loose = Cu.closeness_threshold(hyp, 1e-1, 2.0, stop=14.0)
    tight = Cu.closeness_threshold(hyp, 1e-4, 2.0, stop=14.0)
    assert loose is not None and tight is not None and loose < tight
    assert Cu.closeness_threshold(hyp, 1e-30, 2.0, stop=8.0) is None
