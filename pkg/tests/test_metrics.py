"""Radial metrics, the deformations W, T, H, families and hyperbolic extensions."""
import numpy as np
import pytest
from hypothesis import given, strategies as st

from conesmith import curvature as Cu
from conesmith import jets as J
from conesmith import metrics as M
from conesmith import smoothing as S
from conesmith.acceptance import iterated_extension_gap, upper_half_points
from conesmith.jets import jet_space


class GrowingLink(M.RadialMetric):
    """(1 + s) |dn|^2 + ds^2: not warped, so the cut depends on the radius."""

    def __init__(self, dim=1):
        self.dim = dim

    def link(self, s, n):
        return M.round_form(n) * M.lower(1.0 + s).expand(-1).expand(-1)


def link_value(metric, t, dim=1, count=5, seed=0):
    rng = np.random.default_rng(seed)
    n = rng.normal(size=(count, dim + 1))
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    nj = jet_space(dim + 1, 1).variables(n)
    return metric.link_at(t, nj).value, M.round_form(nj).value


def test_step_values():
    rho = M.rho_ad(3.0, 2.0)
    assert rho(3.0) == 0 and rho(4.0) == 1
    assert rho(3.5) == pytest.approx(0.5)
    assert M.rho_at(5.0)(5.25) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        M.rho_ad(0.0, 0.0)


def test_step_derivatives_match_jets():
    x = np.linspace(-0.2, 1.2, 29)
    v, d1, d2 = M.bump_derivatives(x)
    jet = M.bump(jet_space(1, 3).variables(x[:, None])[0])
    np.testing.assert_allclose(jet.value, v, atol=1e-15)
    np.testing.assert_allclose(jet.coef[:, 1], d1, atol=1e-12)
    np.testing.assert_allclose(2 * jet.coef[:, 2], d2, atol=1e-10)


@pytest.mark.parametrize("dim", [1, 2])
def test_spherical_cut_of_hyperbolic_space_is_round(dim):
    rng = np.random.default_rng(0)
    n = rng.normal(size=(4, dim + 1))
    nj = jet_space(dim + 1, 1).variables(n / np.linalg.norm(n, axis=1, keepdims=True))
    np.testing.assert_allclose(M.spherical_cut(M.hyperbolic_metric(dim), 3.0)(nj).value,
                               M.round_form(nj).value, rtol=1e-13)


def test_spherical_cut_examples():
    nj = jet_space(2, 1).variables(np.array([[0.6, 0.8]]))
    cone = M.cone_metric(1, 1.5625)
    # the link form only matters on tangent vectors of the circle
    tangent = np.array([-0.8, 0.6])
    form = M.spherical_cut(cone, 7.0)(nj).value[0]
    assert tangent @ form @ tangent == pytest.approx(1.5625)
    cut = M.spherical_cut(GrowingLink(), 1.0)(nj).value
    np.testing.assert_allclose(cut, 2.0 / np.sinh(1.0) ** 2 * M.round_form(nj).value)
    with pytest.raises(ValueError):
        M.spherical_cut(cone, 0.0)


def test_warp_force_branches():
    r0 = 4.0
    W = M.warp_force(GrowingLink(), r0)
    for t in (0.5, 2.0, r0):
        g, rnd = link_value(W, t)
        np.testing.assert_allclose(g, np.sinh(t) ** 2 * (1 + r0) / np.sinh(r0) ** 2 * rnd, rtol=1e-13)
    t = r0 + 0.25
    g, rnd = link_value(W, t)
    mix = 0.5 * np.sinh(t) ** 2 * (1 + r0) / np.sinh(r0) ** 2 + 0.5 * (1 + t)
    np.testing.assert_allclose(g, mix * rnd, rtol=1e-13)
    for t in (r0 + 0.5, r0 + 3):
        g, rnd = link_value(W, t)
        np.testing.assert_allclose(g, (1 + t) * rnd, rtol=1e-13)


def test_two_variable_deform_branches():
    a, d = 5.0, 4.0
    g_in = M.cone_metric(1, 2.0)
    T = M.two_var_deform(g_in, a, d)
    for t in (1.0, a):
        g, rnd = link_value(T, t)
        np.testing.assert_allclose(g, np.sinh(t) ** 2 * rnd, rtol=1e-13)
    t = a + d / 4
    g, _ = link_value(T, t)
    ref = 0.5 * link_value(M.hyperbolic_metric(1), t)[0] + 0.5 * link_value(g_in, t)[0]
    np.testing.assert_allclose(g, ref, rtol=1e-13)
    with pytest.raises(ValueError):
        M.two_var_deform(g_in, a, 0.0)


def test_hyperbolic_forcing_branches():
    r0, d = 10.0, 4.0
    H = M.hyp_force(GrowingLink(), r0, d)
    g, rnd = link_value(H, r0 - d - 0.5)
    np.testing.assert_allclose(g, np.sinh(r0 - d - 0.5) ** 2 * rnd, rtol=1e-13)
    cut = (1 + r0) / np.sinh(r0) ** 2
    for t in (r0 - d + 0.3, r0 - d / 2 - 0.1, r0):
        w = float(M.rho_ad(r0 - d, d)(t))
        g, rnd = link_value(H, t)
        np.testing.assert_allclose(g, np.sinh(t) ** 2 * ((1 - w) + w * cut) * rnd, rtol=1e-12)
    with pytest.raises(ValueError):
        M.hyp_force(GrowingLink(), 3.0, 4.0)


@given(st.floats(1.05, 4.0), st.floats(2.0, 12.0), st.floats(0.5, 6.0), st.sampled_from([1, 2]))
def test_deformations_leave_the_outside_alone(kappa, r0, d, dim):
    g = M.cone_metric(dim, kappa)
    s = np.array([r0 + d / 2 + 0.5, r0 + d + 3.0, r0 + 20.0])
    rng = np.random.default_rng(0)
    n = rng.normal(size=(3, dim + 1))
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    ref = S.metric_at(g, s, n)
    for op in (M.warp_force(g, r0), M.two_var_deform(g, r0, d), M.hyp_force(g, r0 + d, d)):
        assert S.relative_gap(S.metric_at(op, s, n), ref).max() <= 1e-13


@given(st.floats(1.0, 15.0), st.floats(0.5, 8.0))
def test_hyperbolic_space_is_a_fixed_point(r0, d):
    hyp = M.hyperbolic_metric(2)
    s = np.linspace(0.2, r0 + d + 2, 30)
    n = np.tile([0.0, 0.6, 0.8], (30, 1))
    ref = S.metric_at(hyp, s, n)
    for op in (M.warp_force(hyp, r0), M.two_var_deform(hyp, r0, d), M.hyp_force(hyp, r0 + d, d),
               M.family_force(M.constant_family(hyp), d)(r0 + d)):
        assert S.relative_gap(S.metric_at(op, s, n), ref).max() <= 1e-12


def test_warped_check():
    nj = jet_space(2, 1).variables(np.array([[1.0, 0.0]]))
    assert M.check_warped(M.cone_metric(1, 2.0), 10, nj, [1, 3, 8])
    assert not M.check_warped(GrowingLink(), 10, nj, [1, 3, 8])
    assert M.check_warped(M.warp_force(GrowingLink(), 5.0), 5.0, nj, [1, 3, 5, 8])


def test_theta_reparametrisation():
    assert M.theta_reparam(4.0, np.pi / 2) == pytest.approx(4.0)
    assert M.theta_reparam(3.0, np.pi / 6) == pytest.approx(np.arcsinh(np.sinh(3.0) / 2))


def test_constant_family_has_no_deviation():
    fam = M.constant_family(M.cone_metric(1, 1.5))
    cl = M.cut_limit_probe(fam, 0.5, (10, 20, 30), points=11)
    assert max(cl.deviations) <= 1e-12 and cl.cauchy


def test_family_domain():
    fam = M.family_force(M.constant_family(M.hyperbolic_metric(1)), 5.0)
    with pytest.raises(ValueError):
        fam(4.0)
    with pytest.raises(ValueError):
        M.cut_limit_probe(fam, 0.0, (20, 10))


def test_forced_cut_limit_branches():
    nj = jet_space(2, 1).variables(np.array([[0.6, 0.8]]))
    limit = lambda n: M.round_form(n) * 3.0
    d = 6.0
    assert M.forced_cut_limit(limit, d, -7.0)(nj).value == pytest.approx(M.round_form(nj).value)
    assert M.forced_cut_limit(limit, d, 1.0)(nj).value == pytest.approx(3 * M.round_form(nj).value)
    w = float(M.bump(2 + 2 * (-2.0) / d))
    np.testing.assert_allclose(M.forced_cut_limit(limit, d, -2.0)(nj).value,
                               ((1 - w) + 3 * w) * M.round_form(nj).value)


@pytest.mark.parametrize("b", [-6.0, -3.0, -1.0, 0.0])
def test_forced_family_cut_limits(b):
    d = 6.0
    fam = M.family_force(M.constant_family(M.cone_metric(1, 1.5625)), d)
    ref = M.forced_cut_limit(lambda n: M.round_form(n) * 1.5625, d, b)
    cl = M.cut_limit_probe(fam, b, (40.0,), ref, points=21)
    assert cl.reference_errors[0] <= 1e-3


def test_theta_family_stays_cauchy():
    fam = M.theta_family(S.circle_family(5, 8.0, "forced"), np.pi / 5)
    cl = M.cut_limit_probe(fam, -2.0, (40, 44, 48, 52), points=21)
    assert cl.cauchy and max(cl.deviations) <= 1e-6


def test_cut_limit_detects_a_wrong_reference():
    fam = S.circle_family(5, 8.0, "forced")
    wrong = M.forced_cut_limit(lambda n: M.round_form(n), 8.0, -6.0)
    assert M.cut_limit_probe(fam, -6.0, (40.0,), wrong, points=21).reference_errors[0] > 1e-2


def test_sphere_atlas_stays_in_the_ball():
    for _, _, grid in M.sphere_atlas(2):
        assert np.all(np.sum(grid**2, axis=1) <= 0.75**2 + 1e-12)
    assert len(M.sphere_atlas(3)) == 8


@pytest.mark.parametrize("base_dim,k", [(2, 1), (1, 2), (1, 1), (2, 2)])
def test_hyperbolic_extension_of_hyperbolic_space(base_dim, k):
    g = M.HypExtension(M.HyperbolicSpace(base_dim), k)
    pts = upper_half_points(np.random.default_rng(1), 60, [k, base_dim])
    assert Cu.pinch_report(g, pts, 6, 0).max_dev <= 1e-4


def test_extension_is_a_product_on_the_centre_fibre():
    g = M.HypExtension(M.HyperbolicSpace(1), 1)
    G = Cu.metric_jets(g, np.array([[0.3, 0.0], [-1.2, 0.0]]))
    np.testing.assert_allclose(G.value, np.tile(np.eye(2), (2, 1, 1)), atol=1e-15)


@pytest.mark.parametrize("l,k", [(1, 1), (2, 1), (1, 2), (2, 2)])
def test_iterated_extension(l, k):
    assert iterated_extension_gap(l, k, 300, 0) <= 1e-10


def test_hyperboloid_round_trip():
    H3 = M.HyperbolicSpace(3)
    pts = upper_half_points(np.random.default_rng(0), 50, [3])
    x = jet_space(3, 1).variables(pts)
    Y = H3.to_hyperboloid(x)
    v = Y.value
    np.testing.assert_allclose(-v[:, 0] ** 2 + np.sum(v[:, 1:] ** 2, axis=1), -1, atol=1e-12)
    np.testing.assert_allclose(H3.from_hyperboloid(Y).value, pts, rtol=1e-12)
    # the centre cosh is the first hyperboloid coordinate
    np.testing.assert_allclose(H3.center_cosh(x).value, v[:, 0], rtol=1e-12)


def test_product_to_sum_is_an_isometry():
    mapping = M.product_to_sum(1, 2)
    rng = np.random.default_rng(2)
    pts = upper_half_points(rng, 40, [1, 2])
    pulled = M.PulledBack(M.HyperbolicSpace(3), mapping, 3)
    a = Cu.metric_jets(pulled, pts).value
    # cosh^2(t) sigma_1 + sigma_2, t the distance from the H^2 point to its centre
    b_pts = pts[:, 1:]
    t_cosh = 1 + (b_pts[:, 0] ** 2 + (b_pts[:, 1] - 1) ** 2) / (2 * b_pts[:, 1])
    ref = np.zeros_like(a)
    ref[:, 0, 0] = t_cosh**2
    ref[:, 1, 1] = ref[:, 2, 2] = 1 / b_pts[:, 1] ** 2
    np.testing.assert_allclose(a, ref, rtol=1e-12, atol=1e-12)
