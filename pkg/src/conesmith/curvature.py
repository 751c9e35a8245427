"""Sectional curvature, model charts and closeness-to-hyperbolic verdicts.

Curvature comes from second-order jets of the metric components: Christoffel
symbols from first derivatives, the Riemann tensor from second derivatives.
The convention is fixed so that the unit sphere has K = +1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import qmc

from . import jets as J
from .jets import Jet, jet_space
from .metrics import ChartMetric, RadialMetric, c2_norm, lower, round_form, sinh2

# ---- tensors ------------------------------------------------------------------------


def metric_jets(g: ChartMetric, points: np.ndarray) -> Jet:
    """Second-order jets of the metric components at a batch of chart points."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    space = jet_space(points.shape[1], 3)
    G = g.metric(space.variables(points))
    if G.space.order != 2:
        raise ValueError("metric must return jets one order below its input")
    return G


def derivative_arrays(G: Jet):
    """(g, dg, ddg) with dg[b,k,i,j] = d_k g_ij and ddg[b,k,l,i,j] = d_k d_l g_ij."""
    sp = G.space
    V = sp.nvars
    g = G.coef[:, 0]
    dg = np.stack([G.coef[:, sp.unit(k)] for k in range(V)], axis=1)
    ddg = np.empty((G.batch, V, V) + g.shape[1:])
    for k in range(V):
        for l in range(V):
            idx, fac = sp.second(k, l)
            ddg[:, k, l] = G.coef[:, idx] * fac
    return g, dg, ddg


def christoffel(g, dg):
    """Gamma^a_{bc} = g^{ad} (d_b g_dc + d_c g_db - d_d g_bc) / 2, plus the lowered symbols."""
    ginv = np.linalg.inv(g)
    low = 0.5 * (np.einsum("zbdc->zdbc", dg) + np.einsum("zcdb->zdbc", dg) - dg)
    return np.einsum("zad,zdbc->zabc", ginv, low), low


def riemann_lower(g, dg, ddg):
    """R_{iklm} with R_{1212} = K det g on a surface of curvature K."""
    gamma, _ = christoffel(g, dg)
    # second derivative part: (d_k d_l g_im + d_i d_m g_kl - d_k d_m g_il - d_i d_l g_km) / 2
    t1 = np.einsum("bklim->biklm", ddg)
    t2 = np.einsum("bimkl->biklm", ddg)
    t3 = np.einsum("bkmil->biklm", ddg)
    t4 = np.einsum("bilkm->biklm", ddg)
    second = 0.5 * (t1 + t2 - t3 - t4)
    # quadratic part: g_np (Gamma^n_kl Gamma^p_im - Gamma^n_km Gamma^p_il)
    q1 = np.einsum("bnp,bnkl,bpim->biklm", g, gamma, gamma)
    q2 = np.einsum("bnp,bnkm,bpil->biklm", g, gamma, gamma)
    return second + q1 - q2


def sectional_from_tensors(g, R, u, v):
    u = np.atleast_2d(u)
    v = np.atleast_2d(v)
    num = np.einsum("biklm,bi,bk,bl,bm->b", R, u, v, u, v)
    guu = np.einsum("bij,bi,bj->b", g, u, u)
    gvv = np.einsum("bij,bi,bj->b", g, v, v)
    guv = np.einsum("bij,bi,bj->b", g, u, v)
    gram = guu * gvv - guv**2
    if np.any(gram <= 1e-14 * guu * gvv):
        raise ValueError("degenerate plane")
    return num / gram


def sectional_curvature(g: ChartMetric, points, u, v) -> np.ndarray:
    """Sectional curvature of the planes span(u, v) at chart points (batched)."""
    G = metric_jets(g, points)
    gv, dg, ddg = derivative_arrays(G)
    if np.any(np.linalg.eigvalsh(gv)[:, 0] <= 0):
        raise ValueError("metric is not positive definite")
    return sectional_from_tensors(gv, riemann_lower(gv, dg, ddg), u, v)


def random_planes(rng: np.random.Generator, batch: int, dim: int, g: np.ndarray | None = None):
    """Seeded Gaussian pairs, orthonormalised (in the metric when given)."""
    u = rng.normal(size=(batch, dim))
    v = rng.normal(size=(batch, dim))
    if g is None:
        g = np.broadcast_to(np.eye(dim), (batch, dim, dim))
    uu = np.einsum("bij,bi,bj->b", g, u, u)
    u = u / np.sqrt(uu)[:, None]
    v = v - np.einsum("bij,bi,bj->b", g, u, v)[:, None] * u
    v = v / np.sqrt(np.einsum("bij,bi,bj->b", g, v, v))[:, None]
    return u, v


@dataclass
class PinchReport:
    k_min: float
    k_max: float
    max_dev: float
    samples: int
    planes: int
    seed: int
    histogram: tuple = ()
    regions: dict = field(default_factory=dict)
    values: np.ndarray | None = None

    def to_json(self) -> dict:
        return {"k_min": self.k_min, "k_max": self.k_max, "max_abs_k_plus_1": self.max_dev,
                "samples": self.samples, "planes_per_point": self.planes, "seed": self.seed,
                "histogram": list(self.histogram), "regions": self.regions}


def pinch_report(g: ChartMetric, points: np.ndarray, planes_per_point: int = 6, seed: int = 0,
                 labels: np.ndarray | None = None, chunk: int = 256) -> PinchReport:
    """Sample random planes at each point and record curvature extremes."""
    rng = np.random.default_rng(seed)
    points = np.atleast_2d(points)
    V = points.shape[1]
    all_k = np.empty((len(points), planes_per_point))
    for lo in range(0, len(points), chunk):
        pts = points[lo:lo + chunk]
        G = metric_jets(g, pts)
        gv, dg, ddg = derivative_arrays(G)
        R = riemann_lower(gv, dg, ddg)
        for p in range(planes_per_point):
            u, v = random_planes(rng, len(pts), V, gv)
            all_k[lo:lo + len(pts), p] = sectional_from_tensors(gv, R, u, v)
    dev = np.abs(all_k + 1)
    hist, _ = np.histogram(all_k, bins=10, range=(all_k.min() - 1e-6, all_k.max() + 1e-6))
    regions = {}
    if labels is not None:
        for lab in np.unique(labels):
            sel = all_k[labels == lab]
            regions[str(lab)] = {"k_min": float(sel.min()), "k_max": float(sel.max()),
                                 "max_abs_k_plus_1": float(np.abs(sel + 1).max()), "count": int(sel.shape[0])}
    return PinchReport(float(all_k.min()), float(all_k.max()), float(dev.max()), len(points),
                       planes_per_point, seed, tuple(int(h) for h in hist), regions, all_k)


# ---- warped surfaces: independent oracle ----------------------------------------------------

def warp_curvature(f, df2):
    """K = -f''/f for the surface dt^2 + f(t)^2 dtheta^2."""
    return -np.asarray(df2) / np.asarray(f)


def blended_warp_curvature(t, mu, dmu, ddmu):
    """-f''/f for f = sinh(t) sqrt(mu(t)), written out by hand."""
    t = np.asarray(t, dtype=float)
    return -1.0 - (dmu / mu) / np.tanh(t) - ddmu / (2 * mu) + dmu**2 / (4 * mu**2)


# ---- model charts -----------------------------------------------------------------------------

@dataclass
class ModelChart:
    """Chart on B^{l-1} x (-(1+xi), 1+xi) with reference e^{2t}|dy|^2 + dt^2.

    ``embed`` maps a jet of (y, t) to the target chart coordinates.
    """
    dim: int
    xi: float
    embed: Callable[[Jet], Jet]

    def reference(self, x: Jet) -> Jet:
        y = J.stack([x[i] for i in range(self.dim - 1)], -1)
        t = x[self.dim - 1]
        dy = y.grad()
        flat = (dy.expand(-1) * dy.expand(-2)).sum(0)
        dt = t.grad()
        return flat * lower(J.exp(2.0 * t)).expand(-1).expand(-1) + dt.expand(-1) * dt.expand(-2)

    def grid(self, resolution: int = 9) -> np.ndarray:
        half = self.dim - 1
        ys = np.linspace(-1 / np.sqrt(half), 1 / np.sqrt(half), resolution) if half else np.zeros(1)
        ts = np.linspace(-(1 + self.xi), 1 + self.xi, resolution)
        mesh = np.meshgrid(*([ys] * half + [ts]), indexing="ij")
        pts = np.stack(mesh, axis=-1).reshape(-1, self.dim)
        return pts[np.sum(pts[:, :half] ** 2, axis=1) < 1 + 1e-12]


def radial_model_chart(metric: RadialMetric, center_s: float, center_n: np.ndarray, xi: float,
                       frame: np.ndarray | None = None, adapt: bool = True) -> tuple[ModelChart, ChartMetric]:
    """Radial chart (y, t) -> (center_s + t, normalize(n0 + 2 e^{-a} sum y_a e_a)) and the metric it sees.

    For the hyperbolic warp this is e^{2t}|dy|^2 + dt^2 up to O(e^{-2a}).  With ``adapt`` the
    frame e_a is first made orthonormal for the metric at the center, so warps by any
    slowly varying multiple of sinh^2 look hyperbolic too.
    """
    n0 = np.asarray(center_n, dtype=float)
    m = n0.shape[0] - 1
    if frame is None:
        from .metrics import tangent_frames
        frame = tangent_frames(n0[None])[0]
    lam = 2.0 * np.exp(-center_s)

    def to_sn(x: Jet):
        t = x[m]
        v = None
        for a in range(m):
            piece = x[a].expand(-1) * (frame[a] * lam)[None]
            v = piece if v is None else v + piece
        v = v + n0[None]
        return t + center_s, v / J.norm(v).expand(-1)

    class _Seen(ChartMetric):
        dim = m + 1

        def metric(self, x):
            s, n = to_sn(x)
            return metric.pullback(s, n)

    if adapt and m:
        # normalize the angular frame so the chart is isometric to the model at its center
        block = _Seen().metric(jet_space(m + 1, 1).variables(np.zeros((1, m + 1)))).value[0, :m, :m]
        w, V = np.linalg.eigh(block)
        frame = (V @ np.diag(w ** -0.5) @ V.T) @ frame

    return ModelChart(m + 1, xi, lambda x: x), _Seen()


def c2_deviation(g: ChartMetric, chart: ModelChart, resolution: int = 9) -> float:
    """sup over the chart grid of the C^2 size of (pullback of g) - reference."""
    pts = chart.grid(resolution)
    space = jet_space(chart.dim, 3)
    x = space.variables(pts)
    diff = g.metric(chart.embed(x)) - chart.reference(x)
    return c2_norm(diff)


@dataclass
class BallVerdict:
    passed: bool
    inside_error: float
    worst_chart: dict
    charts: int
    epsilon: float
    path_bound_ok: bool


def chart_centers(m: int, start: float, stop: float, per_shell: int = 4, seed: int = 0):
    """Concentric shells 0.5 apart; directions from a scrambled Sobol sequence."""
    radii = np.arange(start, stop + 1e-12, 0.5)
    count = per_shell * len(radii)
    sob = qmc.Sobol(d=m + 1, scramble=True, seed=seed).random_base2(int(np.ceil(np.log2(count))))[:count]
    dirs = np.sqrt(2) * _erfinv(2 * sob - 1)
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return [(float(r), dirs[i * per_shell + j]) for i, r in enumerate(radii) for j in range(per_shell)]


def _erfinv(x):
    from scipy.special import erfinv
    return erfinv(np.clip(x, -1 + 1e-12, 1 - 1e-12))


def path_length(g: ChartMetric, start: np.ndarray, stop: np.ndarray, steps: int = 64) -> float:
    """Length of the straight coordinate segment, by Gauss-Legendre quadrature."""
    nodes, weights = np.polynomial.legendre.leggauss(steps)
    tau = 0.5 * (nodes + 1)
    pts = start[None] + tau[:, None] * (stop - start)[None]
    space = jet_space(len(start), 1)
    G = g.metric(space.variables(pts)).value
    d = stop - start
    speed = np.sqrt(np.einsum("bij,i,j->b", G, d, d))
    return float(0.5 * np.sum(weights * speed))


def closeness_threshold(metric: RadialMetric, eps: float, xi: float, start: float = 1.0, stop: float = 30.0,
                        per_shell: int = 4, seed: int = 0, resolution: int = 7) -> float | None:
    """Smallest shell radius beyond which every scheduled chart deviates by less than eps.

    Returns None when the outermost shell still fails.
    """
    centers = chart_centers(metric.dim, start, stop, per_shell, seed)
    worst: dict = {}
    for cs, cn in centers:
        chart, seen = radial_model_chart(metric, cs, cn, xi)
        worst[cs] = max(worst.get(cs, 0.0), c2_deviation(seen, chart, resolution))
    radii = sorted(worst)
    threshold = None
    for r in reversed(radii):
        if worst[r] >= eps:
            break
        threshold = r
    return threshold


def is_ball_eps_close(metric: RadialMetric, a: float, eps: float, xi: float, outer: float | None = None,
                      per_shell: int = 4, seed: int = 0, resolution: int = 7) -> BallVerdict:
    """Exactly hyperbolic on B_a and radially eps-close on charts centered outside B_{a-1-xi}."""
    m = metric.dim
    rng = np.random.default_rng(seed)
    # (1) warped hyperbolic inside the ball, checked on sampled link forms
    radii = np.linspace(0.5, max(a - 1e-6, 0.5), 12)
    n = rng.normal(size=(32, m + 1))
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    space = jet_space(m + 2, 1)
    inside = 0.0
    for r in radii:
        x = space.variables(np.column_stack([np.full(len(n), r), n]))
        s = x[0]
        nn = J.stack([x[i + 1] for i in range(m + 1)], -1)
        nn = nn / J.norm(nn).expand(-1)
        G = metric.link(s, nn).value - (round_form(nn) * lower(J.sinh(s) ** 2).expand(-1).expand(-1)).value
        inside = max(inside, float(np.abs(G).max() / np.sinh(r) ** 2))
    # (2) radial charts outside B_{a-1-xi}
    outer = outer if outer is not None else a + 4 + 2 * xi
    worst = {"deviation": 0.0}
    path_ok = True
    centers = chart_centers(m, max(a - 1 - xi, 2 + xi), outer, per_shell, seed)
    for cs, cn in centers:
        chart, seen = radial_model_chart(metric, cs, cn, xi)
        dev = c2_deviation(seen, chart, resolution)
        if dev > worst["deviation"]:
            worst = {"deviation": dev, "center_s": cs, "center_n": cn.tolist()}
        # broken path (0,0) -> (y,0) -> (y,t) to a far corner of the chart
        y = np.zeros(m + 1)
        y[0] = 1 / np.sqrt(max(m, 1)) if m else 0.0
        corner = y.copy()
        corner[m] = 1 + xi
        length = path_length(seen, np.zeros(m + 1), y) + path_length(seen, y, corner)
        path_ok &= length <= (2 + xi) + (m + 1) ** 2 * max(dev, eps)
    passed = inside < 1e-12 and worst["deviation"] < eps
    return BallVerdict(passed, inside, worst, len(centers), eps, bool(path_ok))
