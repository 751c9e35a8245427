"""Smoothed metrics on hyperbolic cones over all-right spheres.

The construction is recursive in the dimension m of the complex P.

* m = 1: P is a polygon of k' quarter circles, seen through the constant
  speed map to the unit circle.  The cone metric is sinh^2(s) kappa dpsi^2 + ds^2
  and the smoothing drives it to the hyperbolic plane inside a ball.
* m >= 2: on the region Y(D) near the cone on a low dimensional simplex D, the
  patched metric is the hyperbolic extension of the smoothed metric of
  Link(D); on Y(top) it is the cone metric itself.  Hyperbolic forcing at
  radius r_{m-2} with depth d_{m+1} then closes the metric up at the vertex.

Points of the cone are (s, n) with n a unit vector in R^{m+1}, the image of
the complex under its sphere map (see ``JoinSmoothing``).  Links inherit the
coordinate layout of P, so the sphere map of a link is literally the
restriction of the one of P.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import jets as J
from .complexes import AllRightComplex, JoinSmoothing, induced_layout
from .cones import ConeParams, Regions, radius_from_top, radius_k
from .jets import Jet, jet_space
from .metrics import (
    MetricFamily, RadialMetric, SphericalCut, WarpForce, _rows_eval, bump, bump_derivatives,
    cone_metric, graph_chart, hyp_force, hyperbolic_metric, lower, polar_chart, rho_ad, round_form,
    sinh2, square_of_differential,
)

OVERLAP_TOL = 1e-9
AXIS_TOL = 1e-6


# ---- dimension one ----------------------------------------------------------------

def circle_profile(t, k: float, r: float, d2: float):
    """mu(t) = k step((t - (r - d2)) / d2) + 1 - step(...): 1 below r - d2, k above r."""
    w = bump((t - (r - d2)) / d2)
    return w * (k - 1.0) + 1.0


def circle_profile_derivatives(t, k: float, r: float, d2: float):
    """(mu, mu', mu'') from the hand-written derivatives of the step."""
    v, d1, dd = bump_derivatives((np.asarray(t, dtype=float) - (r - d2)) / d2)
    return 1 + (k - 1) * v, (k - 1) * d1 / d2, (k - 1) * dd / d2**2


def circle_curvature(t, k: float, r: float, d2: float):
    """Gauss curvature of sinh^2(t) mu(t) dpsi^2 + dt^2, i.e. -f''/f with f = sinh(t) sqrt(mu)."""
    t = np.asarray(t, dtype=float)
    mu, d1, dd = circle_profile_derivatives(t, k, r, d2)
    return -1.0 - (d1 / mu) / np.tanh(t) - dd / (2 * mu) + d1**2 / (4 * mu**2)


class ProfileMetric(RadialMetric):
    """sinh^2(s) mu(s) |dn|^2 + ds^2 over the circle."""

    def __init__(self, k: float, r: float, d2: float):
        self.k, self.r, self.d2 = float(k), float(r), float(d2)
        self.dim = 1
        self.hyperbolic_below = self.r - self.d2

    def link(self, s, n):
        weight = lower(sinh2(s) * circle_profile(s, self.k, self.r, self.d2))
        return round_form(n) * weight.expand(-1).expand(-1)


def smooth_cone_dim1(segments: int, r: float, d2: float, construction: str = "blend",
                     kappa: str = "literal", xi: float | None = None) -> "SmoothedCone":
    """Smoothed metric on the cone over a polygon of ``segments`` quarter circles.

    ``construction`` is "blend" (explicit profile mu) or "forced" (hyperbolic
    forcing of the constant family).  ``kappa`` chooses the outer warp factor:
    "literal" uses k = segments/4, "isometric" uses k^2, the value for which the
    outer metric is the cone metric of the polygon in the constant speed chart.
    """
    if segments < 3:
        raise ValueError(f"a polygon needs at least 3 segments, got {segments}")
    if not r > d2 > 0:
        raise ValueError(f"need r > d2 > 0, got r={r}, d2={d2}")
    if xi is not None and d2 <= 6 + 2 * xi:
        raise ValueError(f"d2={d2:g} < 6+2xi={6 + 2 * xi:g}")
    k = segments / 4
    factor = {"literal": k, "isometric": k * k}[kappa]
    if construction == "blend":
        metric = ProfileMetric(factor, r, d2)
    elif construction == "forced":
        metric = hyp_force(cone_metric(1, factor), r, d2)
    else:
        raise ValueError(f"unknown construction {construction!r}")
    return SmoothedCone(metric=metric, patched=cone_metric(1, factor), dim=1,
                        core=r - d2, top_radius=r, depth=d2)


def circle_family(segments: int, d2: float, construction: str = "blend", kappa: str = "literal") -> MetricFamily:
    """r -> smoothed metric over the polygon with radius r and fixed width d2."""
    return MetricFamily(lambda r: smooth_cone_dim1(segments, r, d2, construction, kappa).metric, d2)


def circle_cut_limit(segments: int, d2: float, b: float, kappa: str = "literal"):
    """Reference cut limit at offset b of ``circle_family``: (1 + (k-1) step(1 + b/d2)) |dn|^2."""
    k = segments / 4
    factor = {"literal": k, "isometric": k * k}[kappa]
    w = 1 + (factor - 1) * float(bump(1 + b / d2))
    return lambda n: round_form(n) * w


# ---- star charts and hyperbolic extensions ----------------------------------------

def _split(x):
    big = x * 134217729.0  # 2^27 + 1
    hi = big - (big - x)
    return hi, x - hi


def _two_product(x, y):
    p = x * y
    xh, xl = _split(x)
    yh, yl = _split(np.broadcast_to(y, np.shape(x)))
    err = ((xh * yh - p) + xh * yl + xl * yh) + xl * yl
    return p, err


def _exact_difference_of_products(x, y, z, w):
    """x*y - z*w with a relative error of a few ulps (Dekker products)."""
    p, e = _two_product(np.asarray(x, dtype=float), y)
    q, f = _two_product(np.asarray(z, dtype=float), w)
    return (p - q) + (e - f)


@dataclass
class StarChart:
    """Coordinates on the cone over Star(D) split along D and its link.

    In ``iso`` coordinates the star is a piece of the round sphere: polygon
    angles are measured from an anchor vertex in true arc length.  Each vertex
    of D is a signed coordinate axis; the remaining axes form the link's own
    sphere coordinates.
    """
    simplex: frozenset
    anchor: int | None          # index into the polygon, or None
    phase: float                # angle of the anchor in the constant speed chart
    k: float
    circle_col: int             # first polygon column of the ambient layout
    delta: list                 # (column, sign) per vertex of D
    rest: list                  # link columns in the link's layout order
    link: JoinSmoothing

    def iso(self, n: Jet) -> Jet:
        if self.anchor is None:
            return n
        p = self.circle_col
        a, b = n[p], n[p + 1]
        c, s = np.cos(self.phase), np.sin(self.phase)
        ar, br = a * c + b * s, b * c - a * s
        # near the anchor br is tiny; recompute its value without cancellation
        br.coef[:, 0] = _exact_difference_of_products(b.value, c, a.value, s)
        rad = J.sqrt(ar * ar + br * br)
        ang = J.atan2(br, ar) * self.k
        parts = [n[i] for i in range(p)] + [rad * J.cos(ang), rad * J.sin(ang)]
        return J.stack(parts, -1)

    def split(self, n_iso: Jet):
        along = J.stack([n_iso[c] * sg for c, sg in self.delta], -1)
        across = J.stack([n_iso[c] for c in self.rest], -1)
        return along, across


def star_chart(layout: JoinSmoothing, simplex) -> StarChart:
    simplex = frozenset(simplex)
    p = len(layout.pairs)
    delta = []
    for i, (plus, minus) in enumerate(layout.pairs):
        if plus in simplex:
            delta.append((i, 1.0))
        if minus in simplex:
            delta.append((i, -1.0))
    cyc = layout.cycle
    on_cycle = [i for i, c in enumerate(cyc) if c in simplex]
    anchor, phase = None, 0.0
    if on_cycle:
        nseg = len(cyc)
        if len(on_cycle) == 1:
            anchor = on_cycle[0]
        else:
            i, j = on_cycle
            anchor = i if (i + 1) % nseg == j else j
        phase = anchor * (np.pi / 2) / layout.k
        delta.append((p, 1.0))
        if len(on_cycle) == 2:
            delta.append((p + 1, 1.0))
    used = {c for c, _ in delta}
    rest = [i for i in range(p) if i not in used]
    if not on_cycle and cyc:
        rest += [p, p + 1]
    elif len(on_cycle) == 1:
        rest.append(p + 1)
    return StarChart(simplex, anchor, phase, layout.k, p, delta, rest, induced_layout(layout, simplex))


class Extension(RadialMetric):
    """cosh^2(rho) (dt^2 + sinh^2(t) |dw|^2) + G_link(rho, u) on the cone over a star.

    rho is the distance to the cone on D, t the position along it, w the
    direction inside D and u the direction inside the link.
    """

    def __init__(self, chart: StarChart, link_metric: RadialMetric, dim: int):
        self.chart = chart
        self.link_metric = link_metric
        self.dim = dim
        self.hyperbolic_below = -np.inf
        self._flat = hyperbolic_metric(dim)

    def pullback(self, s, n):
        n_iso = self.chart.iso(n)
        along, across = self.chart.split(n_iso)
        # on the cone of D itself u is undefined; the link is hyperbolic there, so is the extension
        near_axis = np.linalg.norm(across.value, axis=-1) * np.sinh(s.value) < AXIS_TOL
        if self.link_metric.hyperbolic_below <= AXIS_TOL and near_axis.any():
            raise ValueError("link smoothing is not hyperbolic near its vertex")
        total = J.zeros(lower(s).space, s.batch, (s.grad().shape[-1],) * 2)
        if near_axis.any():
            _rows_eval(near_axis, total, self._flat.pullback, s, n_iso)
        _rows_eval(~near_axis, total, self._generic, s, along, across)
        return total

    def _generic(self, s, along, across):
        # cosh^2(rho) sigma_{C D} written without the cancellations of t = arcsinh(...):
        # with q = |n_D|^2, p = n_D . dn_D and N = cosh(rho) = sqrt(1 + sinh^2(s) |n_R|^2),
        #   N^2 cosh^2(rho) sigma = q ds^2 + 2 sinh cosh ds p + N^2 sinh^2 |dn_D|^2 + sinh^4 p^2
        sh = J.sinh(s)
        r_across = J.norm(across)
        sh_rho = r_across * sh
        rho = J.arcsinh(sh_rho)
        N2 = lower(sh_rho * sh_rho + 1.0)
        shl, chl = lower(sh), lower(J.cosh(s))
        ds = s.grad()
        # n is a unit vector, so n_D . dn_D = -n_R . dn_R; the right side is accurate near the cone on D
        p = -(lower(across).expand(-1) * across.grad()).sum(0)
        q = lower((along * along).sum(-1))
        cross = ds.expand(-1) * p.expand(-2)
        num = (outer_product(ds) * q.expand(-1).expand(-1)
               + (cross + cross.swap(-1, -2)) * (shl * chl).expand(-1).expand(-1)
               + round_form(along) * (N2 * shl * shl).expand(-1).expand(-1)
               + outer_product(p) * (shl * shl * shl * shl).expand(-1).expand(-1))
        base = num / N2.expand(-1).expand(-1)
        u = across / r_across.expand(-1)
        return base + self.link_metric.pullback(rho, u)


def outer_product(a: Jet) -> Jet:
    return a.expand(-1) * a.expand(-2)


# ---- patched metric ---------------------------------------------------------------

class OverlapError(RuntimeError):
    pass


@dataclass
class OverlapReport:
    max_relative: float
    overlaps: int
    worst_pair: tuple | None
    per_pair: dict = field(default_factory=dict)

    def passed(self, tol: float = OVERLAP_TOL) -> bool:
        return self.max_relative <= tol


def _row_scale(jet: Jet) -> np.ndarray:
    return np.abs(jet.coef).reshape(jet.batch, -1).max(axis=1)


def region_label(simplex) -> str:
    return "top" if simplex == "top" else "Y(" + ",".join(sorted(map(str, simplex))) + ")"


class PatchedMetric(RadialMetric):
    """Cone metric on Y(top), extended link smoothings on Y(D), defined outside a ball."""

    def __init__(self, complex_: AllRightComplex, layout: JoinSmoothing, params: ConeParams, links: dict,
                 check_overlaps: bool = True):
        self.complex = complex_
        self.layout = layout
        self.params = params
        self.dim = complex_.dim
        self.hyperbolic_below = -np.inf
        self.regions = Regions(complex_, params)
        self.domain = self.regions.y_ball
        self.top = cone_metric(self.dim, layout.kappa)
        self.order = [simp for simp in self.regions.low]
        self.candidates_by_region = {simp: Extension(star_chart(layout, simp), links[simp], self.dim)
                                     for simp in self.order}
        self.candidates_by_region["top"] = self.top
        self.check_overlaps = check_overlaps

    def memberships(self, s_val, n_val):
        X = self.layout.from_sphere(n_val)
        masks, edge = self.regions.classify(X, s_val, "y")
        return masks, edge

    def assign(self, s_val, n_val) -> list:
        """Chosen region per row: the lowest dimensional Y(D) containing it, else top."""
        masks, _ = self.memberships(s_val, n_val)
        out = [None] * len(s_val)
        for key in self.order + ["top"]:
            for i in np.flatnonzero(masks[key]):
                if out[i] is None:
                    out[i] = key
        return out

    def pullback(self, s, n):
        masks, _ = self.memberships(s.value, n.value)
        total = J.zeros(lower(s).space, s.batch, (s.grad().shape[-1],) * 2)
        taken = np.zeros(s.batch, dtype=bool)
        for key in self.order + ["top"]:
            rows = masks[key] & ~taken
            _rows_eval(rows, total, self.candidates_by_region[key].pullback, s, n)
            taken |= rows
        if not taken.all():
            bad = np.flatnonzero(~taken)[0]
            raise ValueError(f"point (s={s.value[bad]:.6g}) lies in no patch of the patched metric")
        if self.check_overlaps:
            report = self.overlap_report(s, n, masks=masks)
            if not report.passed():
                raise OverlapError(f"patches disagree by {report.max_relative:.3g} on {report.worst_pair}")
        return total

    def overlap_report(self, s, n, masks=None, skip=None) -> OverlapReport:
        """Evaluate every patch containing each point and compare them pairwise."""
        if masks is None:
            masks, _ = self.memberships(s.value, n.value)
        keys = self.order + ["top"]
        skip = np.zeros(s.batch, dtype=bool) if skip is None else skip
        count = np.zeros(s.batch, dtype=int)
        for key in keys:
            count += masks[key]
        multi = (count > 1) & ~skip
        worst, worst_pair, per_pair = 0.0, None, {}
        if not multi.any():
            return OverlapReport(0.0, 0, None, per_pair)
        values = {}
        for key in keys:
            rows = np.flatnonzero(masks[key] & multi)
            if rows.size:
                values[key] = (rows, self.candidates_by_region[key].pullback(s.take(rows), n.take(rows)))
        for i, a in enumerate(keys):
            for b in keys[i + 1:]:
                if a not in values or b not in values:
                    continue
                ra, ja = values[a]
                rb, jb = values[b]
                common, ia, ib = np.intersect1d(ra, rb, return_indices=True)
                if common.size == 0:
                    continue
                A, B = ja.take(ia), jb.take(ib)
                rel = _row_scale(A - B) / np.maximum(_row_scale(A), 1e-300)
                pair = (region_label(a), region_label(b))
                per_pair[pair] = (int(common.size), float(rel.max()))
                if rel.max() > worst:
                    worst, worst_pair = float(rel.max()), pair
        return OverlapReport(worst, int(multi.sum()), worst_pair, per_pair)


# ---- recursion ----------------------------------------------------------------------

@dataclass
class SmoothedCone(RadialMetric):
    """Smoothed metric with its patched metric and the radii that organise it."""
    metric: RadialMetric
    patched: RadialMetric
    dim: int = 1
    core: float = 0.0           # hyperbolic on the ball of this radius
    top_radius: float = 0.0     # forcing radius r_{m-2} (r for polygons)
    depth: float = 0.0          # forcing depth d_{m+1}
    complex: AllRightComplex | None = None
    layout: JoinSmoothing | None = None
    params: ConeParams | None = None
    links: dict = field(default_factory=dict)

    def __post_init__(self):
        self.hyperbolic_below = self.core

    def pullback(self, s, n):
        return self.metric.pullback(s, n)

    def provenance(self, s_val, n_val) -> list[str]:
        """Which piece of the construction produced the metric at each point."""
        s_val = np.asarray(s_val, dtype=float)
        out = []
        labels = None
        if isinstance(self.patched, PatchedMetric):
            far = s_val >= self.top_radius
            labels = [None] * len(s_val)
            if far.any():
                sub = self.patched.assign(s_val[far], np.asarray(n_val)[far])
                for i, lab in zip(np.flatnonzero(far), sub):
                    labels[i] = lab
        for i, s in enumerate(s_val):
            if s <= self.core:
                out.append("hyperbolic core")
            elif s < self.top_radius - self.depth / 2:
                out.append("two-variable blend")
            elif s < self.top_radius:
                out.append("warped cut")
            elif s < self.top_radius + 0.5:
                out.append("warp blend")
            else:
                out.append("patched:" + (region_label(labels[i]) if labels is not None and labels[i] else "cone"))
        return out


def _layout_key(layout: JoinSmoothing):
    return (frozenset(layout.complex.faces), layout.layout())


def smooth_cone(complex_: AllRightComplex, params: ConeParams, layout: JoinSmoothing | None = None,
                generic: bool = False, check_overlaps: bool = True, _memo: dict | None = None) -> SmoothedCone:
    """Smoothed metric G(P, r) on the cone over P, built through the link recursion.

    With ``generic=False`` links that are canonical spheres are taken to be
    exactly hyperbolic (their smoothing is); ``generic=True`` runs the full
    recursion on them too.
    """
    layout = JoinSmoothing(complex_) if layout is None else layout
    m = complex_.dim
    if m >= 2:
        params.validate(dim=m)
    memo = {} if _memo is None else _memo
    key = _layout_key(layout)
    if key in memo:
        return memo[key]
    if m == 1:
        d2 = params.depth(2)
        if params.r <= d2:
            raise ValueError(f"need r > d2, got r={params.r:g}, d2={d2:g}")
        sigma = cone_metric(1, layout.kappa)
        out = SmoothedCone(metric=hyp_force(sigma, params.r, d2), patched=sigma, dim=1, core=params.r - d2,
                           top_radius=params.r, depth=d2, complex=complex_, layout=layout, params=params)
        memo[key] = out
        return out
    top = radius_k(params, m - 2)
    depth = params.depth(m + 1)
    links = {}
    for simp in Regions(complex_, params).low:
        sub = induced_layout(layout, simp)
        if not sub.cycle and not generic:
            links[simp] = hyperbolic_metric(sub.complex.dim)
        else:
            links[simp] = smooth_cone(sub.complex, params, sub, generic, check_overlaps, memo)
    patched = PatchedMetric(complex_, layout, params, links, check_overlaps)
    out = SmoothedCone(metric=hyp_force(patched, top, depth), patched=patched, dim=m, core=top - depth,
                       top_radius=top, depth=depth, complex=complex_, layout=layout, params=params, links=links)
    memo[key] = out
    return out


def smoothed_family(complex_: AllRightComplex, params: ConeParams, **kw) -> MetricFamily:
    """lambda -> G(P, r(lambda)) with lambda = r_{m-2} (lambda = r for polygons)."""
    m = complex_.dim

    def member(lam):
        r = lam if m == 1 else radius_from_top(params, m, lam)
        return smooth_cone(complex_, params.with_r(r), **kw)

    return MetricFamily(member, start=2 * max(params.depths[: max(m, 1)]))


def link_restriction_agrees(layout: JoinSmoothing, outer, inner) -> bool:
    """Restricting the layout to Link(outer) and then to the link of inner-outer equals restricting once."""
    outer, inner = frozenset(outer), frozenset(inner)
    if not outer < inner or not layout.complex.is_simplex(inner):
        raise ValueError("need outer a proper face of a simplex inner")
    twice = induced_layout(induced_layout(layout, outer), inner - outer)
    once = induced_layout(layout, inner)
    return twice.complex == once.complex and twice.layout() == once.layout()


# ---- sampling and property checks -----------------------------------------------------

def sample_directions(layout: JoinSmoothing, count: int, rng: np.random.Generator) -> np.ndarray:
    n = rng.normal(size=(count, layout.ambient))
    return n / np.linalg.norm(n, axis=1, keepdims=True)


def metric_at(metric: RadialMetric, s, n, order: int = 1) -> Jet:
    """Metric jets at points (s, n) in polar charts; order 1 gives values and first derivatives."""
    s = np.asarray(s, dtype=float)
    n = np.asarray(n, dtype=float)
    space = jet_space(n.shape[1], order + 1)
    x = space.variables(np.zeros((len(s), n.shape[1])))
    sj, nj = polar_chart(s, n)(x)
    return metric.pullback(sj, nj)


def relative_gap(a: Jet, b: Jet) -> np.ndarray:
    return _row_scale(a - b) / np.maximum(_row_scale(a), 1e-300)


@dataclass
class PropertyReport:
    core_deviation: float       # against the hyperbolic metric on the core ball
    outer_deviation: float      # against the patched metric beyond top_radius + 1/2
    top_deviation: float        # against the cone metric on X(top)
    samples: dict


def property_report(G: SmoothedCone, count: int = 500, seed: int = 0, spread: float = 6.0) -> PropertyReport:
    rng = np.random.default_rng(seed)
    layout = G.layout
    hyp = hyperbolic_metric(G.dim)
    sigma = cone_metric(G.dim, layout.kappa)
    n = sample_directions(layout, count, rng)
    s_core = rng.uniform(max(0.5, G.core - spread), G.core, count)
    core = relative_gap(metric_at(G, s_core, n), metric_at(hyp, s_core, n))
    s_out = rng.uniform(G.top_radius + 0.5, G.top_radius + spread, count)
    outer = relative_gap(metric_at(G, s_out, n), metric_at(G.patched, s_out, n))
    top_dev, n_top = 0.0, 0
    if isinstance(G.patched, PatchedMetric):
        s_top = rng.uniform(G.top_radius, G.top_radius + spread, count)
        X = layout.from_sphere(n)
        mem = G.patched.regions.x_top(X, s_top)
        rows = mem.inside & ~mem.boundary
        n_top = int(rows.sum())
        if n_top:
            top_dev = float(relative_gap(metric_at(G, s_top[rows], n[rows]),
                                         metric_at(sigma, s_top[rows], n[rows])).max())
    return PropertyReport(float(core.max()), float(outer.max()), top_dev,
                          {"core": count, "outer": count, "top": n_top, "seed": seed})


def sample_near_simplices(complex_: AllRightComplex, simplices, count: int, s_range, rho_range,
                          rng: np.random.Generator):
    """Dense cone points (X, s) at distance rho (uniform in rho_range) from the cone on a random simplex."""
    from .widths import sample_complex
    simplices = list(simplices)
    lo, hi = s_range
    X = np.zeros((count, len(complex_.vertices)))
    s = rng.uniform(lo, hi, count)
    which = rng.integers(len(simplices), size=count)
    for j, simp in enumerate(simplices):
        rows = np.flatnonzero(which == j)
        if rows.size == 0:
            continue
        link = complex_.link(simp)
        rho = rng.uniform(rho_range[0], np.minimum(rho_range[1], s[rows]))
        sin_g = np.sinh(rho) / np.sinh(s[rows])
        w = np.abs(rng.normal(size=(rows.size, len(simp))))
        w /= np.linalg.norm(w, axis=1, keepdims=True)
        cols = [complex_.index[v] for v in complex_.ordered(simp)]
        X[np.ix_(rows, cols)] = np.sqrt(1 - sin_g**2)[:, None] * w
        u = sample_complex(link, rows.size, rng)
        lcols = [complex_.index[v] for v in link.vertices]
        X[np.ix_(rows, lcols)] = sin_g[:, None] * u
    return X, s


def overlap_check(G: SmoothedCone, count: int = 1000, seed: int = 0, s_range=None,
                  targeted: bool = True) -> OverlapReport:
    """Dual evaluation of the patched metric on sampled overlaps of its patches.

    Targeted samples sit at distances between r_{m,0} and s_{m,0} + 1 from the
    cones on low dimensional simplices, where the patches overlap.
    """
    patched = G.patched
    if not isinstance(patched, PatchedMetric):
        return OverlapReport(0.0, 0, None)
    rng = np.random.default_rng(seed)
    lo, hi = s_range if s_range is not None else (patched.domain, G.top_radius + 8)
    if targeted:
        reg = patched.regions
        inner = min(reg.r_width(k) for k in range(G.dim - 1)) - 1
        outer = max(reg.s_width(k) for k in range(G.dim - 1)) + 1
        X, s = sample_near_simplices(G.complex, reg.low, count, (lo, hi), (inner, outer), rng)
        n = G.layout.to_sphere(X)
    else:
        s = rng.uniform(lo, hi, count)
        n = sample_directions(G.layout, count, rng)
    space = jet_space(G.dim + 1, 2)
    x = space.variables(np.zeros((count, G.dim + 1)))
    sj, nj = polar_chart(s, n)(x)
    _, edge = patched.memberships(s, n)
    return patched.overlap_report(sj, nj, skip=edge)


# ---- independence of the scale c ------------------------------------------------------

def scale_gap(params: ConeParams, m: int, k: int, c: float, c2: float) -> tuple[float, float]:
    """(s'_{m,k} - s_{m,k}, ln(c'/c) - 1) for widths with scales c < c'."""
    top = radius_k(params, m - 2)
    s1 = np.arcsinh(np.sinh(top) * c * params.ratio ** (k + 1))
    s2 = np.arcsinh(np.sinh(top) * c2 * params.ratio ** (k + 1))
    return float(s2 - s1), float(np.log(c2 / c) - 1)


@dataclass
class ScaleVerdict:
    passed: bool
    max_relative: float
    samples: int
    gaps: list
    seed: int


def c_independence_check(complex_: AllRightComplex, params: ConeParams, c: float, c2: float,
                         samples: int = 1000, seed: int = 0, layout: JoinSmoothing | None = None) -> ScaleVerdict:
    """Compare the smoothed metrics built with scales c < c' at sampled cone points."""
    if not c2 > c > 1:
        raise ValueError("need c' > c > 1")
    if c2 * params.ratio >= np.exp(-4):
        raise ValueError("need c' * ratio < e^-4")
    m = complex_.dim
    if m == 1:
        return ScaleVerdict(True, 0.0, 0, [], seed)
    layout = JoinSmoothing(complex_) if layout is None else layout
    G1 = smooth_cone(complex_, params.with_scale(c), layout)
    G2 = smooth_cone(complex_, params.with_scale(c2), layout)
    rng = np.random.default_rng(seed)
    half = samples // 2
    s = rng.uniform(max(0.5, G1.core - 2), G1.top_radius + 10, samples - half)
    n = sample_directions(layout, samples - half, rng)
    # the other half near the low simplices, where the two sets of regions differ
    reg = G1.patched.regions
    X, s_near = sample_near_simplices(complex_, reg.low, half, (G1.core, G1.top_radius + 8),
                                      (reg.r_width(0) - 1, G2.patched.regions.s_width(0) + 2), rng)
    s = np.concatenate([s, s_near])
    n = np.concatenate([n, layout.to_sphere(X)])
    gap = relative_gap(metric_at(G1, s, n), metric_at(G2, s, n))
    gaps = [scale_gap(params, m, k, c, c2) for k in range(m - 1)]
    ok = float(gap.max()) <= OVERLAP_TOL and all(g > b for g, b in gaps)
    return ScaleVerdict(ok, float(gap.max()), samples, gaps, seed)


# ---- the chart change between (s, beta) and (t, r) ----------------------------------------

def _asinhc(x):
    """arcsinh(x)/x, smooth and even."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-3
    xs = np.where(small, 1.0, x)
    series = 1 - x**2 / 6 + 3 * x**4 / 40
    return np.where(small, series, np.arcsinh(xs) / xs)


def radius_over_angle(s, beta):
    """r / beta with r = arcsinh(sin(beta) sinh(s)); smooth and even in beta."""
    s = np.asarray(s, dtype=float)
    beta = np.asarray(beta, dtype=float)
    x = np.sin(beta) * np.sinh(s)
    return _asinhc(x) * np.sinc(beta / np.pi) * np.sinh(s)


def chart_change(s, beta):
    """(s, beta) -> (t, r): legs of the right triangle with hypotenuse s and angle beta at the vertex."""
    s = np.asarray(s, dtype=float)
    beta = np.asarray(beta, dtype=float)
    r = np.arcsinh(np.sin(beta) * np.sinh(s))
    t = np.arcsinh(np.cos(beta) * np.sinh(s) / np.cosh(r))
    return t, r


def chart_change_inverse(t, r):
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    s = np.arccosh(np.cosh(r) * np.cosh(t))
    # tan(beta) = tanh(r) / sinh(t) in the right triangle
    beta = np.arctan2(np.tanh(r), np.sinh(t))
    return s, beta


# ---- cones over manifolds ------------------------------------------------------------

class ManifoldCone:
    """Metric on P x R from the patched metric of a closed all-right manifold P and a metric h.

    Coordinates are x = (t, y) with y a chart of P.  ``to_sphere`` maps chart
    points to the directions used by the patched metric, ``link_metric`` maps
    them to the form h.  Outside r_{m-2} the warp-forced patched metric is used;
    between r_{m-2} - d and r_{m-2} the cut g is blended into h; further in
    the profile takes over (see ``profile``).
    """

    def __init__(self, patched: RadialMetric, to_sphere, link_metric, top: float, depth: float,
                 profile: str = "corrected", dim: int = 2):
        if top - 2 * depth <= 0:
            raise ValueError(f"need r_(m-2) - 2 d > 0, got {top} - 2*{depth}")
        if profile not in ("corrected", "literal"):
            raise ValueError(f"unknown profile {profile!r}")
        self.patched = patched
        self.forced = WarpForce(patched, top)
        self.cut = SphericalCut(patched, top)
        self.to_sphere = to_sphere
        self.link_metric = link_metric
        self.top, self.depth = float(top), float(depth)
        self.profile = profile
        self.dim = dim + 1
        self.inner_edge = self.top - 2 * self.depth

    def mu(self, t):
        """Warp function of h on the inner region."""
        lam = rho_ad(self.top - 2 * self.depth, self.depth)(t)
        if self.profile == "corrected":
            return (J.exp(t) - lam * J.exp(-t)) * 0.5
        return (J.exp(t) - J.exp(lam)) * 0.5

    def metric(self, x: Jet) -> Jet:
        t = x[0]
        y = J.stack([x[i] for i in range(1, self.dim)], -1)
        tv = t.value
        total = J.zeros(lower(t).space, t.batch, (self.dim, self.dim))
        far = tv >= self.top
        _rows_eval(far, total, lambda t_, y_: self.forced.pullback(t_, self.to_sphere(y_)), t, y)
        _rows_eval(~far, total, self._inner, t, y)
        return total

    def _inner(self, t, y):
        h = self.link_metric(y)
        blend = rho_ad(self.top - self.depth, self.depth)(t)
        if self.profile == "corrected":
            mu = self.mu(t)
            weight_h = mu * mu * (1.0 - blend)
        else:
            tv = t.value
            band = tv >= self.top - self.depth
            deep = tv <= self.inner_edge
            mu = self.mu(t)
            weight_h = J.where(band, sinh2(t) * (1.0 - blend), J.where(deep, J.exp(t) * 0.5, mu * mu))
        out = square_of_differential(t) + h * lower(weight_h).expand(-1).expand(-1)
        wv = blend.value
        if np.any(wv > 0):
            extra = J.zeros(lower(t).space, t.batch, (self.dim, self.dim))
            _rows_eval(wv > 0, extra,
                       lambda t_, y_, w_: self.cut(self.to_sphere(y_)) * lower(sinh2(t_) * w_).expand(-1).expand(-1),
                       t, y, blend)
            out = out + extra
        return out


def flat_form(y: Jet) -> Jet:
    """The flat metric |dy|^2 in chart coordinates."""
    return round_form(y)


@dataclass
class VertexStarStandIn:
    """Local model of a closed all-right surface whose vertex links are polygons.

    Around a vertex with link C_k' the cone looks like the cone over the
    suspension of C_k' near one pole; the chart is the graph chart of the upper
    hemisphere and h is flat in it.  Only the pole's patch and the top patch
    are faithful to the surface, so ``faithful`` masks out the rest.
    """
    segments: int
    params: ConeParams

    def __post_init__(self):
        from .complexes import circle_complex, suspension
        self.complex = suspension(circle_complex(self.segments))
        self.layout = JoinSmoothing(self.complex)
        self.G = smooth_cone(self.complex, self.params, self.layout)
        self.pole = next(v for pair in self.layout.pairs for v in pair[:1])
        self.axis = [i for i, p in enumerate(self.layout.pairs) if self.pole in p][0]

    def to_sphere(self, y: Jet) -> Jet:
        return graph_chart(self.axis, 1.0, y)

    def faithful(self, t, y) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        y = np.asarray(y, dtype=float)
        n = np.column_stack([np.sqrt(1 - np.sum(y**2, axis=1)), y])
        out = np.ones(len(t), dtype=bool)
        patched = self.G.patched
        for radius in (t, np.full_like(t, self.G.top_radius)):
            far = radius >= patched.domain
            if far.any():
                labels = patched.assign(radius[far], n[far])
                ok = np.array([lab == "top" or (lab != "top" and self.pole in lab) for lab in labels])
                out[np.flatnonzero(far)] &= ok
        return out


def smooth_cone_manifold(patched: RadialMetric, to_sphere, link_metric, params: ConeParams, m: int,
                         profile: str = "corrected", whitehead_trivial: bool | None = None) -> ManifoldCone:
    """Metric on P x R built from the patched metric of P and a metric h on P."""
    if m > 4 and not whitehead_trivial:
        warnings.warn("smooth structure claims need dim <= 4 or a trivial Whitehead group; "
                      "the metric itself is unaffected", stacklevel=2)
    top = radius_k(params, m - 2)
    return ManifoldCone(patched, to_sphere, link_metric, top, params.depth(m + 1), profile, dim=m)


def standin_manifold_cone(segments: int, params: ConeParams, profile: str = "corrected"):
    """Manifold cone over the vertex-star stand-in with a flat h."""
    model = VertexStarStandIn(segments, params)
    cone = smooth_cone_manifold(model.G.patched, model.to_sphere, flat_form, params, 2, profile)
    return cone, model
