"""Metric expressions and the deformation operators built from them.

A radial metric on S^m x R+ (or on a cone through a sphere map) has the form
ds^2 + g_s, with g_s a metric on the link.  Radial metrics are evaluated as
pullbacks: given jets s(x) and n(x) of the radius and of a unit vector in
R^{m+1}, ``pullback`` returns the jet of the metric components in the chart
variables x, one order lower than the input jets.  Chart metrics (used for
extensions and curvature) map a jet of chart coordinates to the jet of their
metric components in the same way.

The bump is the smooth step E(x) / (E(x) + E(1-x)), E(x) = exp(-1/x), which is
exactly 0 for x <= 0 and exactly 1 for x >= 1 (the exponential underflows).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Callable

import numpy as np

from . import jets as J
from .jets import Jet, jet_space

FLAT_EDGE = 1.0 / 700.0


# ---- bump ---------------------------------------------------------------------

def _flat_exp(x):
    x = np.asarray(x, dtype=float)
    live = x > FLAT_EDGE
    return np.where(live, np.exp(-1.0 / np.where(live, x, 1.0)), 0.0)


def bump(x):
    """Smooth step on arrays or jets."""
    if isinstance(x, Jet):
        return J.smooth_step(x)
    a = _flat_exp(x)
    return a / (a + _flat_exp(1.0 - np.asarray(x, dtype=float)))


def bump_derivatives(x):
    """(value, first, second) derivative of the step, written out by hand.

    Used as an oracle independent of the jet arithmetic.  With a = E(x),
    b = E(1-x), the step is a/(a+b) and E' = E/x^2, E'' = E(1-2x)/x^4.
    """
    x = np.asarray(x, dtype=float)
    a, b = _flat_exp(x), _flat_exp(1 - x)
    xs = np.where(x > FLAT_EDGE, x, 1.0)
    ys = np.where(1 - x > FLAT_EDGE, 1 - x, 1.0)
    da, db = a / xs**2, -b / ys**2
    dda, ddb = a * (1 - 2 * xs) / xs**4, b * (1 - 2 * ys) / ys**4
    q = a + b
    val = a / q
    d1 = (da * b - a * db) / q**2
    d2 = ((dda * b - a * ddb) * q - 2 * (da * b - a * db) * (da + db)) / q**3
    return val, d1, d2


def rho_ad(a: float, d: float) -> Callable:
    """t -> step(2 (t - a) / d): 0 up to a, 1 from a + d/2."""
    if d <= 0:
        raise ValueError(f"width d must be positive, got {d}")
    return lambda t: bump(2.0 * (t - a) / d)


def rho_at(r0: float) -> Callable:
    """t -> step(2 t - 2 r0): 0 up to r0, 1 from r0 + 1/2."""
    return lambda t: bump(2.0 * t - 2.0 * r0)


# ---- jet helpers ----------------------------------------------------------------

def lower(x: Jet) -> Jet:
    return x.truncate(x.space.order - 1)


def outer(a: Jet) -> Jet:
    """Symmetric square of a one-form jet of trailing shape (V,)."""
    return a.expand(-1) * a.expand(-2)


def square_of_differential(f: Jet) -> Jet:
    return outer(f.grad())


def round_form(n: Jet) -> Jet:
    """|dn|^2 pulled back: sum_a dn_a (x) dn_a."""
    dn = n.grad()
    return (dn.expand(-1) * dn.expand(-2)).sum(0)


def constant_like(s: Jet, value: float) -> Jet:
    return s.space.constant(np.full(s.batch, float(value)))


def _rows_eval(mask, total: Jet, fn, *args):
    """Add fn(*args restricted to rows) into ``total`` on the masked rows."""
    rows = np.flatnonzero(mask)
    if rows.size == 0:
        return
    part = fn(*[a.take(rows) for a in args])
    total.coef[rows] = total.coef[rows] + part.coef


# ---- link forms ---------------------------------------------------------------------

class RoundForm:
    """The round metric |dn|^2 on the unit sphere."""

    def __call__(self, n: Jet) -> Jet:
        return round_form(n)


class AngularForm:
    """(omega . dn)^2 with omega the unit rotation of the last two coordinates.

    Equals |n_c|^2 dpsi^2 where psi is the angle of the circle part n_c.
    """

    def __call__(self, n: Jet) -> Jet:
        a, b = n[-2], n[-1]
        rad = J.sqrt(a * a + b * b)
        one = (lower(a).expand(-1) * b.grad() - lower(b).expand(-1) * a.grad()) / lower(rad).expand(-1)
        return outer(one)


@dataclass
class ScaledForm:
    form: Callable
    factor: float

    def __call__(self, n: Jet) -> Jet:
        return self.form(n) * self.factor


# ---- radial metrics ---------------------------------------------------------------------

class RadialMetric:
    """ds^2 + g_s.  Subclasses implement ``link`` (the g_s part) or ``pullback``."""

    dim: int = 1
    # below this radius the metric is exactly sinh^2(s)|dn|^2 + ds^2
    hyperbolic_below: float = -np.inf

    def link(self, s: Jet, n: Jet) -> Jet:
        return self.pullback(s, n) - square_of_differential(s)

    def pullback(self, s: Jet, n: Jet) -> Jet:
        return square_of_differential(s) + self.link(s, n)

    def link_at(self, radius: float, n: Jet) -> Jet:
        """Link metric at a fixed radius, as a form in dn."""
        return self.link(constant_like(n[0], radius), n)


@dataclass
class WarpSum(RadialMetric):
    """ds^2 + sum_i f_i(s) form_i(n)."""
    terms: list = field(default_factory=list)  # (scalar function of s, link form)
    dim: int = 1
    hyperbolic_below: float = -np.inf

    def link(self, s, n):
        out = None
        for fn, form in self.terms:
            piece = form(n) * lower(fn(s)).expand(-1).expand(-1)
            out = piece if out is None else out + piece
        return out


def sinh2(s):
    return J.sinh(s) ** 2 if isinstance(s, Jet) else np.sinh(s) ** 2


def hyperbolic_metric(dim: int) -> WarpSum:
    """sinh^2(s) sigma_{S^dim} + ds^2."""
    return WarpSum([(sinh2, RoundForm())], dim=dim, hyperbolic_below=np.inf)


def cone_metric(dim: int, kappa: float) -> WarpSum:
    """sinh^2(s) (|dn|^2 + (kappa - 1)(omega . dn)^2) + ds^2: the cone over a join with a polygon."""
    if kappa == 1.0:
        return hyperbolic_metric(dim)
    return WarpSum([(sinh2, RoundForm()), (lambda s: sinh2(s) * (kappa - 1.0), AngularForm())], dim=dim)


def warped_metric(link_form: Callable, dim: int) -> WarpSum:
    """sinh^2(s) h + ds^2 for a fixed link metric h."""
    return WarpSum([(sinh2, link_form)], dim=dim)


class SphericalCut:
    """The link metric g_{r0} / sinh^2(r0), as a form in dn."""

    def __init__(self, metric: RadialMetric, r0: float):
        self.metric = metric
        self.r0 = float(r0)

    def __call__(self, n: Jet) -> Jet:
        return self.metric.link_at(self.r0, n) * (1.0 / np.sinh(self.r0) ** 2)


def spherical_cut(metric: RadialMetric, r0: float) -> SphericalCut:
    if r0 <= 0:
        raise ValueError("cut radius must be positive")
    return SphericalCut(metric, r0)


class WarpForce(RadialMetric):
    """(1 - rho_{r0}) sinh^2(s) cut_{r0}(g) + rho_{r0} g_s + ds^2."""

    def __init__(self, metric: RadialMetric, r0: float):
        self.metric = metric
        self.r0 = float(r0)
        self.dim = metric.dim
        self.hyperbolic_below = metric.hyperbolic_below if metric.hyperbolic_below > r0 else -np.inf
        self.cut = SphericalCut(metric, r0)

    def link(self, s, n):
        weight = rho_at(self.r0)(s)
        wv = weight.value
        total = J.zeros(lower(s).space, s.batch, (s.grad().shape[-1],) * 2)

        def inner(s_, n_, w_):
            return self.cut(n_) * lower((1.0 - w_) * sinh2(s_)).expand(-1).expand(-1)

        def outer_(s_, n_, w_):
            return self.metric.link(s_, n_) * lower(w_).expand(-1).expand(-1)

        _rows_eval(wv < 1.0, total, inner, s, n, weight)
        _rows_eval(wv > 0.0, total, outer_, s, n, weight)
        return total


class TwoVarDeform(RadialMetric):
    """(1 - rho_{a,d}) sinh^2(s) base + rho_{a,d} g_s + ds^2.

    The input must be warped on the ball of radius a + d/2 for the result to be
    meaningful (checked by ``check_warped``).
    """

    def __init__(self, metric: RadialMetric, a: float, d: float, base: Callable | None = None):
        if d <= 0:
            raise ValueError(f"width d must be positive, got {d}")
        self.metric = metric
        self.a, self.d = float(a), float(d)
        self.base = base or RoundForm()
        self.dim = metric.dim
        self.hyperbolic_below = max(self.a, metric.hyperbolic_below) if base is None else -np.inf

    def link(self, s, n):
        weight = rho_ad(self.a, self.d)(s)
        wv = weight.value
        total = J.zeros(lower(s).space, s.batch, (s.grad().shape[-1],) * 2)

        def inner(s_, n_, w_):
            return self.base(n_) * lower((1.0 - w_) * sinh2(s_)).expand(-1).expand(-1)

        def outer_(s_, n_, w_):
            return self.metric.link(s_, n_) * lower(w_).expand(-1).expand(-1)

        _rows_eval(wv < 1.0, total, inner, s, n, weight)
        _rows_eval(wv > 0.0, total, outer_, s, n, weight)
        return total


def warp_force(metric: RadialMetric, r0: float) -> WarpForce:
    return WarpForce(metric, r0)


def two_var_deform(metric: RadialMetric, a: float, d: float) -> TwoVarDeform:
    return TwoVarDeform(metric, a, d)


def hyp_force(metric: RadialMetric, r0: float, d: float) -> TwoVarDeform:
    """T_{r0-d, d} o W_{r0}: exactly hyperbolic on the ball of radius r0 - d."""
    if not r0 > d > 0:
        raise ValueError(f"need r0 > d > 0, got r0={r0}, d={d}")
    return TwoVarDeform(WarpForce(metric, r0), r0 - d, d)


def check_warped(metric: RadialMetric, upto: float, n: Jet, radii, rtol: float = 1e-10) -> bool:
    """g_s / sinh^2 s is independent of s for the sampled radii below ``upto``."""
    ref = None
    for t in radii:
        if t > upto:
            continue
        cut = SphericalCut(metric, t)(n).value
        if ref is None:
            ref = cut
        elif not np.allclose(cut, ref, rtol=rtol, atol=rtol):
            return False
    return True


# ---- families -----------------------------------------------------------------------------

@dataclass
class MetricFamily:
    """lambda -> radial metric, defined for lambda above ``start``."""
    member: Callable[[float], RadialMetric]
    start: float = 0.0

    def __call__(self, lam: float) -> RadialMetric:
        if lam <= self.start:
            raise ValueError(f"family index {lam} outside its domain (> {self.start})")
        return self.member(lam)


def constant_family(metric: RadialMetric) -> MetricFamily:
    return MetricFamily(lambda lam: metric, -np.inf)


def family_force(family: MetricFamily, d: float) -> MetricFamily:
    """lambda -> H_{lambda, d}(g_lambda)."""
    def member(lam):
        if lam <= d:
            raise ValueError(f"family index {lam} must exceed the depth {d}")
        return hyp_force(family(lam), lam, d)
    return MetricFamily(member, max(family.start, d))


def theta_reparam(lam_prime, theta):
    """arcsinh(sinh(lam') sin(theta))."""
    return np.arcsinh(np.sinh(lam_prime) * np.sin(theta))


def theta_family(family: MetricFamily, theta: float) -> MetricFamily:
    return MetricFamily(lambda lp: family(float(theta_reparam(lp, theta))), family.start)


# ---- charts on spheres and C^2 norms of link forms ----------------------------------------

def sphere_atlas(m: int, half_width: float = 0.75, points: int = 41):
    """Graph charts over the 2(m+1) coordinate hemispheres, sampled on a grid.

    Returns a list of (axis, sign, grid) with grid of shape (N, m).
    """
    axis = np.linspace(-half_width, half_width, points)
    grid = np.stack(np.meshgrid(*([axis] * m), indexing="ij"), axis=-1).reshape(-1, m)
    grid = grid[np.sum(grid**2, axis=1) <= half_width**2 + 1e-12]
    return [(i, sg, grid) for i in range(m + 1) for sg in (1.0, -1.0)]


def graph_chart(axis: int, sign: float, y: Jet) -> Jet:
    """Unit vector with the given coordinate sign*sqrt(1-|y|^2) and the others y."""
    m = y.shape[-1]
    h = J.sqrt(1.0 - (y * y).sum(-1)) * sign
    parts = []
    k = 0
    for i in range(m + 1):
        if i == axis:
            parts.append(h)
        else:
            parts.append(y[k])
            k += 1
    return J.stack(parts, -1)


def form_jets_on_atlas(form: Callable, m: int, points: int = 41, order: int = 3):
    """Evaluate a link form on every atlas chart; yields jets of order ``order-1``."""
    space = jet_space(m, order)
    for axis, sign, grid in sphere_atlas(m, points=points):
        y = space.variables(grid)
        yield form(graph_chart(axis, sign, y))


def c2_norm(jet: Jet) -> float:
    """max over points of |value| + |first derivatives| + |second derivatives| (sup over components)."""
    c = np.abs(jet.coef)
    sp = jet.space
    worst = 0.0
    for deg in range(min(sp.order, 2) + 1):
        idx = np.flatnonzero(sp.degree == deg)
        # coefficient -> derivative factor (factorials of the exponents)
        fac = np.array([np.prod([factorial(e) for e in sp.monomials[i]]) for i in idx])
        part = c[:, idx] * fac.reshape((1, -1) + (1,) * (c.ndim - 2))
        worst = max(worst, float(part.max()) if part.size else 0.0)
    return worst


def link_form_distance(a: Callable, b: Callable, m: int, points: int = 41) -> float:
    """C^2 distance between two link forms over the fixed atlas."""
    worst = 0.0
    for ja, jb in zip(form_jets_on_atlas(a, m, points), form_jets_on_atlas(b, m, points)):
        worst = max(worst, c2_norm(ja - jb))
    return worst


@dataclass
class CutLimit:
    offset: float
    schedule: tuple
    deviations: tuple          # C^2 distance between consecutive cuts
    reference_errors: tuple    # C^2 distance to a reference limit, when given
    limit: Callable
    cauchy: bool


def cut_limit_probe(family: MetricFamily, b: float, schedule, reference: Callable | None = None,
                    points: int = 41) -> CutLimit:
    """Cuts of the family at lambda + b along an increasing schedule."""
    schedule = tuple(float(x) for x in schedule)
    if any(y <= x for x, y in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be increasing")
    cuts = [SphericalCut(family(lam), lam + b) for lam in schedule]
    m = family(schedule[0]).dim
    dev = tuple(link_form_distance(x, y, m, points) for x, y in zip(cuts, cuts[1:]))
    ref = tuple(link_form_distance(c, reference, m, points) for c in cuts) if reference is not None else ()
    tail = dev[len(dev) // 2:]
    cauchy = all(y <= x + 1e-12 for x, y in zip(tail, tail[1:])) if len(tail) > 1 else True
    return CutLimit(b, schedule, dev, ref, cuts[-1], cauchy)


def forced_cut_limit(limit_form: Callable, d: float, b: float) -> Callable:
    """Closed form of the cut limit of a forced family at offset b."""
    if b <= -d:
        return RoundForm()
    if b >= 0:
        return limit_form
    w = float(bump(2 + 2 * b / d))
    return lambda n: round_form(n) * (1 - w) + limit_form(n) * w


# ---- chart metrics and hyperbolic extensions ----------------------------------------------

class ChartMetric:
    """Metric given directly in chart coordinates."""

    dim: int

    def metric(self, x: Jet) -> Jet:
        raise NotImplementedError

    def center_cosh(self, x: Jet) -> Jet:
        """cosh of the distance to the marked center."""
        raise NotImplementedError(f"{type(self).__name__} has no marked center")


class HyperbolicSpace(ChartMetric):
    """H^k: the real line for k = 1, the upper half space (last coordinate > 0) otherwise.

    The center is the origin of the line, or (0, ..., 0, 1).
    """

    def __init__(self, k: int):
        if k < 1:
            raise ValueError("dimension must be positive")
        self.dim = k

    def metric(self, x: Jet) -> Jet:
        dx = x.grad()
        if self.dim == 1:
            return outer(dx[0])
        z = lower(x[self.dim - 1])
        return (dx.expand(-1) * dx.expand(-2)).sum(0) / (z * z).expand(-1).expand(-1)

    def center_cosh(self, x: Jet) -> Jet:
        if self.dim == 1:
            return J.cosh(x[0])
        z = x[self.dim - 1]
        flat = (x * x).sum(-1) - z * z
        return 1.0 + (flat + (z - 1.0) ** 2) / (2.0 * z)

    def to_hyperboloid(self, x: Jet) -> Jet:
        """Coordinates in the hyperboloid model (X0 > 0, -X0^2 + |X|^2 = -1)."""
        if self.dim == 1:
            return J.stack([J.cosh(x[0]), J.sinh(x[0])], -1)
        z = x[self.dim - 1]
        sq = (x * x).sum(-1) - z * z
        x0 = (1.0 + sq + z * z) / (2.0 * z)
        xn = (sq + z * z - 1.0) / (2.0 * z)
        return J.stack([x0] + [x[i] / z for i in range(self.dim - 1)] + [xn], -1)

    def from_hyperboloid(self, X: Jet) -> Jet:
        """Inverse of ``to_hyperboloid``."""
        if self.dim == 1:
            return J.stack([J.arcsinh(X[1])], -1)
        denom = X[0] - X[self.dim]
        z = 1.0 / denom
        return J.stack([X[i + 1] * z for i in range(self.dim - 1)] + [z], -1)


class HypExtension(ChartMetric):
    """cosh^2(r) sigma_{H^k} + h on H^k x M, r the distance to the center of (M, h)."""

    def __init__(self, base: ChartMetric, k: int):
        self.base = base
        self.k = k
        self.space_k = HyperbolicSpace(k)
        self.dim = base.dim + k

    def _split(self, x: Jet):
        z = J.stack([x[i] for i in range(self.k)], -1)
        y = J.stack([x[i] for i in range(self.k, self.dim)], -1)
        return z, y

    def metric(self, x: Jet) -> Jet:
        z, y = self._split(x)
        weight = lower(self.base.center_cosh(y)) ** 2
        # z and y are jets in the full coordinates, so both terms are full-size forms
        return self.space_k.metric(z) * weight.expand(-1).expand(-1) + self.base.metric(y)

    def center_cosh(self, x: Jet) -> Jet:
        z, y = self._split(x)
        return self.space_k.center_cosh(z) * self.base.center_cosh(y)


def hyp_extension(base: ChartMetric, k: int) -> HypExtension:
    base.center_cosh  # the base must carry a center
    return HypExtension(base, k)


class WarpedPlane(ChartMetric):
    """dr^2 + f(r)^2 dtheta^2 in coordinates (r, theta), centered at r = 0."""

    def __init__(self, profile: Callable):
        self.profile = profile
        self.dim = 2

    def metric(self, x: Jet) -> Jet:
        r, th = x[0], x[1]
        f = lower(self.profile(r))
        dr, dt = r.grad(), th.grad()
        return outer(dr) + outer(dt) * (f * f).expand(-1).expand(-1)

    def center_cosh(self, x: Jet) -> Jet:
        return J.cosh(x[0])


class PulledBack(ChartMetric):
    """Metric pulled back through a map of chart coordinates."""

    def __init__(self, target: ChartMetric, mapping: Callable[[Jet], Jet], dim: int):
        self.target = target
        self.mapping = mapping
        self.dim = dim

    def metric(self, x: Jet) -> Jet:
        # the target differentiates its coordinates, which are jets in x
        return self.target.metric(self.mapping(x))

    def center_cosh(self, x: Jet) -> Jet:
        return self.target.center_cosh(self.mapping(x))


def product_to_sum(l: int, k: int) -> Callable[[Jet], Jet]:
    """Isometry H^l x_{cosh} H^k -> H^{l+k} in hyperbolic-space coordinates.

    Points a of H^l and b of H^k go to (b_0 a, b_vec) in the hyperboloid model,
    which pulls the Minkowski form back to cosh^2(t) sigma_l + sigma_k with t the
    distance from b to the center.
    """
    hl, hk, hs = HyperbolicSpace(l), HyperbolicSpace(k), HyperbolicSpace(l + k)

    def mapping(x: Jet) -> Jet:
        a = J.stack([x[i] for i in range(l)], -1)
        b = J.stack([x[i] for i in range(l, l + k)], -1)
        A, B = hl.to_hyperboloid(a), hk.to_hyperboloid(b)
        X = J.stack([A[i] * B[0] for i in range(l + 1)] + [B[i] for i in range(1, k + 1)], -1)
        return hs.from_hyperboloid(X)

    return mapping


class RadialInChart(ChartMetric):
    """A radial metric seen through a chart x -> (s, n)."""

    def __init__(self, metric: RadialMetric, chart: Callable[[Jet], tuple]):
        self.radial = metric
        self.chart = chart
        self.dim = metric.dim + 1

    def metric(self, x: Jet) -> Jet:
        s, n = self.chart(x)
        return self.radial.pullback(s, n)

    def center_cosh(self, x: Jet) -> Jet:
        s, _ = self.chart(x)
        return J.cosh(s)


def angle_chart(x: Jet):
    """(s, theta) -> (s, (cos theta, sin theta)) for radial metrics over the circle."""
    s, th = x[0], x[1]
    return s, J.stack([J.cos(th), J.sin(th)], -1)


def spherical_angle_chart(x: Jet):
    """(s, a, b) -> (s, (sin a cos b, sin a sin b, cos a)) over the 2-sphere."""
    s, a, b = x[0], x[1], x[2]
    sa = J.sin(a)
    return s, J.stack([sa * J.cos(b), sa * J.sin(b), J.cos(a)], -1)


def polar_chart(center_s: np.ndarray, center_n: np.ndarray):
    """Chart x -> (s0 + x0, normalize(n0 + sum_a x_a e_a / sinh s0)) around each base point.

    The frame e_a is an orthonormal basis of the tangent space at n0, so the chart
    is close to isometric for the warped hyperbolic metric at the base point.
    """
    center_s = np.asarray(center_s, dtype=float)
    center_n = np.asarray(center_n, dtype=float)
    frames = tangent_frames(center_n)
    scale = 1.0 / np.sinh(center_s)

    def chart(x: Jet):
        s = x[0] + center_s
        dirs = None
        for a in range(frames.shape[1]):
            piece = x[a + 1].expand(-1) * (frames[:, a, :] * scale[:, None])
            dirs = piece if dirs is None else dirs + piece
        v = dirs + center_n
        return s, v / J.norm(v).expand(-1)

    return chart


def tangent_frames(n: np.ndarray) -> np.ndarray:
    """Orthonormal bases of the tangent spaces at unit vectors n, shape (B, m, m+1)."""
    B, A = n.shape
    out = np.zeros((B, A - 1, A))
    for i in range(B):
        q, _ = np.linalg.qr(np.column_stack([n[i], np.eye(A)]))
        out[i] = (q[:, 1:A]).T
    return out
