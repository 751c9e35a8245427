"""Face lattice of a cubical hyperbolization and its cone-fiber checks.

Each cube Q of a cube complex K gives a face X_Q of the hyperbolized space,
with Link(X_Q) = Link(Q, K).  A normal neighborhood of X_Q is the product
of X_Q with a ball in the cone over that link, and every check here lives on
that cone factor.  The X_Q factor is never given coordinates: fiber points
sit over a base point deep inside X_Q, far from the faces of Q, so only the
cubes containing Q are visible from a fiber.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .complexes import AllRightComplex, CubicalComplex, JoinSmoothing, induced_layout, star_sin_distance
from .cones import ConeParams, Regions, radius_k, radii
from .metrics import RadialMetric, cone_metric
from .widths import sample_complex
from .smoothing import (
    OVERLAP_TOL, Extension, SmoothedCone, metric_at, relative_gap, sample_directions, sample_near_simplices,
    smooth_cone, star_chart,
)


# ---- the lattice -------------------------------------------------------------------

@dataclass
class HyperbolizedLattice:
    base: CubicalComplex
    s0: float
    faces: dict = field(default_factory=dict)   # cube -> face label
    links: dict = field(default_factory=dict)   # cube -> AllRightComplex

    @property
    def dim(self) -> int:
        return self.base.dim

    def cube_dim(self, cube) -> int:
        return self.base.cube_dim(frozenset(cube))

    def meet(self, a, b):
        """The cube a & b, or None when the cubes are disjoint."""
        common = frozenset(a) & frozenset(b)
        if not common:
            return None
        if common not in self.base.cubes:
            raise ValueError("cube intersection is not a cube; K is not a cube complex")
        return common

    def cofaces(self, cube) -> list:
        cube = frozenset(cube)
        return sorted((c for c in self.base.cubes if cube < c), key=lambda c: (len(c), self.faces[c]))

    def delta(self, base, big) -> frozenset:
        """Simplex of Link(base) cut out by a cube containing base."""
        return self.base.delta(base, big)

    def smallest_cube_containing(self, a, b):
        a, b = frozenset(a), frozenset(b)
        best = None
        for c in self.base.cubes:
            if a <= c and b <= c and (best is None or len(c) < len(best)):
                best = c
        return best

    def is_sphere_link(self, cube) -> bool:
        link = self.links[frozenset(cube)]
        if link is None:
            return False
        try:
            JoinSmoothing(link)
        except ValueError:
            return False
        return True


def hyperbolize_lattice(K: CubicalComplex, s0: float, r: float | None = None) -> HyperbolizedLattice:
    """Faces and links of the hyperbolization of K; ``s0`` is the normal width."""
    if not isinstance(K, CubicalComplex):
        raise TypeError("expected a CubicalComplex")
    if s0 <= 0:
        raise ValueError("normal width s0 must be positive")
    if r is not None and not s0 > 2 * r:
        raise ValueError(f"need s0 > 2r, got s0={s0:g}, r={r:g}")
    for a, b in combinations(K.cubes, 2):
        common = a & b
        if common and common not in K.cubes:
            raise ValueError(f"cubes {K.label(a)} and {K.label(b)} meet in a non-cube")
    lat = HyperbolizedLattice(K, float(s0))
    for cube in K.cubes:
        lat.faces[cube] = "X[" + K.label(cube) + "]"
        lat.links[cube] = K.link(cube) if any(cube < c for c in K.cubes) else None
    return lat


def facet_intersection_counts(lat: HyperbolizedLattice) -> dict:
    """Within each top cube, how many facets contain each face: must be n - k."""
    K = lat.base
    out = {}
    for top in K.cubes:
        if any(top < c for c in K.cubes):
            continue
        n = K.cube_dim(top)
        facets = K.facets(top)
        for face in K.cubes:
            if face <= top and face != top:
                holders = [f for f in facets if face <= f]
                inter = frozenset.intersection(*holders) if holders else top
                out[(top, face)] = (len(holders), n - K.cube_dim(face), inter == face)
    return out


def link_identification(lat: HyperbolizedLattice, small, big) -> dict:
    """Vertex map Link(D(big), Link(small)) -> Link(big) and a check that it is an isomorphism.

    A vertex of the left side is a cube one dimension above ``small``; it goes
    to the smallest cube containing it and ``big``.
    """
    K = lat.base
    small, big = frozenset(small), frozenset(big)
    L = lat.links[small]
    D = lat.delta(small, big)
    inner = L.link(D)
    by_label = {K.label(c): c for c in K.cubes}
    target = lat.links[big]
    vmap = {}
    for v in inner.vertices:
        joined = lat.smallest_cube_containing(by_label[v], big)
        vmap[v] = K.label(joined)
    mapped = {frozenset(vmap[v] for v in f) for f in inner.faces if f}
    ok = len(set(vmap.values())) == len(vmap) and mapped == {f for f in target.faces if f}
    if not ok:
        raise ValueError(f"link of {K.label(big)} does not match the iterated link")
    return vmap


# ---- Z sets on a fiber ------------------------------------------------------------------

@dataclass
class FiberPoint:
    cube: frozenset
    X: np.ndarray       # dense coordinates on Link(cube)
    s: float            # distance to the cone vertex

    def __post_init__(self):
        self.cube = frozenset(self.cube)
        self.X = np.asarray(self.X, dtype=float)


def s_width(params: ConeParams, n: int, k: int) -> float:
    return radii(params, n, k)[1]


def r_width(params: ConeParams, n: int, k: int) -> float:
    return radius_k(params, n - k - 3)


def fiber_distance(lat: HyperbolizedLattice, base, cube, X, s) -> np.ndarray:
    """Distance in the cone over Link(base) to the cone on D(cube); cube contains base."""
    base, cube = frozenset(base), frozenset(cube)
    X = np.atleast_2d(X)
    s = np.broadcast_to(np.asarray(s, dtype=float), (X.shape[0],))
    if cube == base:
        return s.copy()
    D = lat.delta(base, cube)
    sin_g, inside = star_sin_distance(X, D, lat.links[base])
    # outside the star the nearest point of the cone on D is the vertex
    sin_g = np.where(inside, np.minimum(sin_g, 1.0), 1.0)
    return np.arcsinh(sin_g * np.sinh(s))


def z_masks(lat: HyperbolizedLattice, base, X, s, params: ConeParams) -> dict:
    """Membership in Z(cube) for every cube containing ``base``, plus the top region Z ("top")."""
    base = frozenset(base)
    n = lat.dim
    X = np.atleast_2d(X)
    s = np.broadcast_to(np.asarray(s, dtype=float), (X.shape[0],))
    if np.any(s >= lat.s0):
        raise ValueError("fiber radius must stay below s0")
    visible = [base] + lat.cofaces(base)
    dist = {c: fiber_distance(lat, base, c, X, s) for c in visible if lat.cube_dim(c) <= n - 2}
    out = {}
    for c in dist:
        k = lat.cube_dim(c)
        mask = dist[c] < s_width(params, n, k)
        for low, d in dist.items():
            if lat.cube_dim(low) < k:
                mask &= d > r_width(params, n, lat.cube_dim(low))
        out[c] = mask
    top = np.ones(len(s), dtype=bool)
    for low, d in dist.items():
        top &= d > r_width(params, n, lat.cube_dim(low))
    out["top"] = top
    return out


def z_membership(p: FiberPoint, cube, params: ConeParams, lat: HyperbolizedLattice) -> bool:
    """Is the fiber point in Z(cube)?  ``cube="top"`` asks for the top region Z."""
    masks = z_masks(lat, p.cube, p.X[None, :], np.array([p.s]), params)
    if cube == "top":
        return bool(masks["top"][0])
    cube = frozenset(cube)
    if cube not in masks:
        # cubes not containing the base are at distance >= s0 from a deep base point
        return False
    return bool(masks[cube][0])


# ---- fiber metrics -------------------------------------------------------------------

@dataclass
class FiberMetric:
    """Cone-factor metric of G(X_Q); the X_Q factor carries the weight ``warp``."""
    cube: frozenset
    metric: RadialMetric
    layout: JoinSmoothing
    warp: str = "cosh^2(rho)"


def fiber_metric(lat: HyperbolizedLattice, cube, params: ConeParams, memo: dict | None = None,
                 smoothed: bool = True) -> FiberMetric:
    """G(Link(X_Q)) on the cone factor, or the cone metric itself when ``smoothed`` is False."""
    cube = frozenset(cube)
    L = lat.links[cube]
    if L is None or L.dim < 1:
        raise ValueError("fiber metrics need a link of dimension >= 1")
    layout = JoinSmoothing(L)
    if not smoothed:
        return FiberMetric(cube, cone_metric(L.dim, layout.kappa), layout)
    memo = {} if memo is None else memo
    G = smooth_cone(L, params, layout, _memo=memo)
    return FiberMetric(cube, G, layout)


def restricted_extension(lat: HyperbolizedLattice, small, big, params: ConeParams, memo=None) -> RadialMetric:
    """E_{C D}(G(Link(D, Link(small)))) on the cone over Link(small), D = D(big)."""
    small, big = frozenset(small), frozenset(big)
    link_identification(lat, small, big)
    layout = JoinSmoothing(lat.links[small])
    D = lat.delta(small, big)
    sub = induced_layout(layout, D)
    G = smooth_cone(sub.complex, params, sub, _memo={} if memo is None else memo)
    return Extension(star_chart(layout, D), G, layout.complex.dim)


# ---- consistency on Z intersections --------------------------------------------------------

@dataclass
class PairVerdict:
    small: str
    big: str
    samples: int
    max_relative: float
    max_relative_outside_shell: float
    shell: float


@dataclass
class FiberVerdict:
    pairs: list
    top: list
    skipped: list
    seed: int

    @property
    def max_relative(self) -> float:
        vals = [p.max_relative for p in self.pairs + self.top]
        return max(vals) if vals else 0.0

    @property
    def max_relative_outside_shell(self) -> float:
        vals = [p.max_relative_outside_shell for p in self.pairs + self.top]
        return max(vals) if vals else 0.0

    def passed(self, literal: bool = True, tol: float = OVERLAP_TOL) -> bool:
        return (self.max_relative if literal else self.max_relative_outside_shell) <= tol

    def to_json(self) -> dict:
        return {"seed": self.seed, "max_relative": self.max_relative,
                "max_relative_outside_shell": self.max_relative_outside_shell,
                "pairs": [vars(p) for p in self.pairs], "top": [vars(p) for p in self.top],
                "skipped": self.skipped}


def _gap_summary(gap, s, shell):
    far = s >= shell
    return float(gap.max()) if gap.size else 0.0, float(gap[far].max()) if far.any() else 0.0


def fiber_check(lat: HyperbolizedLattice, params: ConeParams, samples: int = 400, seed: int = 0,
                max_pairs: int | None = None) -> FiberVerdict:
    """Dual evaluation of the cone-factor metrics on sampled Z & Z fibers.

    For faces small < big (dims below n - 1) the smoothed metric of Link(small) is
    compared with the extension of the smoothed metric of Link(big), on fiber
    points of Z(small) & Z(big).  For every such face the smoothed metric is also
    compared with the cone metric on Z & Z(face).  The gap is reported over all
    samples and over samples outside the warp band r_{m-2} + 1/2 of the link cone.
    """
    rng = np.random.default_rng(seed)
    n = lat.dim
    memo: dict = {}
    low = [c for c in lat.base.cubes if lat.cube_dim(c) <= n - 2]
    low.sort(key=lambda c: (len(c), lat.faces[c]))
    skipped = [lat.faces[c] for c in low if not lat.is_sphere_link(c)]
    good = [c for c in low if lat.is_sphere_link(c)]
    pairs, tops = [], []
    todo = [(a, b) for a in good for b in lat.cofaces(a) if b in good]
    if max_pairs is not None:
        todo = todo[:max_pairs]
    for small, big in todo:
        j, k = lat.cube_dim(small), lat.cube_dim(big)
        G = fiber_metric(lat, small, params, memo)
        E = restricted_extension(lat, small, big, params, memo)
        L = lat.links[small]
        lo, hi = r_width(params, n, j), s_width(params, n, j)
        D = lat.delta(small, big)
        X, s = sample_near_simplices(L, [D], samples, (lo, hi), (0.0, s_width(params, n, k)), rng)
        masks = z_masks(lat, small, X, s, params)
        rows = masks[small] & masks[big]
        if not rows.any():
            continue
        N = G.layout.to_sphere(X[rows])
        gap = relative_gap(metric_at(G.metric, s[rows], N), metric_at(E, s[rows], N))
        shell = G.metric.top_radius + 0.5
        full, outside = _gap_summary(gap, s[rows], shell)
        pairs.append(PairVerdict(lat.faces[small], lat.faces[big], int(rows.sum()), full, outside, shell))
    for cube in good:
        j = lat.cube_dim(cube)
        G = fiber_metric(lat, cube, params, memo)
        sigma = fiber_metric(lat, cube, params, smoothed=False)
        lo, hi = r_width(params, n, j), s_width(params, n, j)
        s = rng.uniform(lo, hi, samples)
        N = sample_directions(G.layout, samples, rng)
        X = G.layout.from_sphere(N)
        masks = z_masks(lat, cube, X, s, params)
        rows = masks[cube] & masks["top"]
        if not rows.any():
            continue
        gap = relative_gap(metric_at(G.metric, s[rows], N[rows]), metric_at(sigma.metric, s[rows], N[rows]))
        shell = G.metric.top_radius + 0.5
        full, outside = _gap_summary(gap, s[rows], shell)
        tops.append(PairVerdict(lat.faces[cube], "Z", int(rows.sum()), full, outside, shell))
    return FiberVerdict(pairs, tops, skipped, seed)


# ---- neighborhood set algebra --------------------------------------------------------------

@dataclass
class ContainmentVerdict:
    passed: bool
    checked: int
    hits: int
    violations: list


def intersection_containment(lat: HyperbolizedLattice, params: ConeParams, samples: int = 2000,
                             seed: int = 0) -> ContainmentVerdict:
    """N_{s_i}(X_i) & N_{s_j}(X_j) lies in N_{r_k}(X_k) when X_i & X_j = X_k, seen on the fiber over X_k."""
    rng = np.random.default_rng(seed)
    n = lat.dim
    low = [c for c in lat.base.cubes if lat.cube_dim(c) <= n - 2]
    checked = hits = 0
    bad = []
    for a, b in combinations(low, 2):
        k_cube = lat.meet(a, b)
        if k_cube is None or k_cube in (a, b):
            continue
        i, j, k = lat.cube_dim(a), lat.cube_dim(b), lat.cube_dim(k_cube)
        L = lat.links[k_cube]
        top = lat.smallest_cube_containing(a, b)
        if top is None:
            continue
        span = lat.delta(k_cube, top)
        X, s = sample_near_simplices(L, [span], samples, (0.0, lat.s0 * 0.999), (0.0, 0.0), rng)
        # sample_near_simplices with a zero distance gives points on the simplex itself
        di = fiber_distance(lat, k_cube, a, X, s)
        dj = fiber_distance(lat, k_cube, b, X, s)
        both = (di <= s_width(params, n, i)) & (dj <= s_width(params, n, j))
        checked += 1
        hits += int(both.sum())
        outside = both & (s > r_width(params, n, k))
        if outside.any():
            bad.append((lat.faces[a], lat.faces[b], float(s[outside].max())))
    return ContainmentVerdict(not bad, checked, hits, bad)


def z_pair_disjoint(lat: HyperbolizedLattice, params: ConeParams, samples: int = 2000, seed: int = 0) -> bool:
    """Z(X_i) & Z(X_j) is empty when neither face contains the other (fiber over their meet)."""
    rng = np.random.default_rng(seed)
    n = lat.dim
    low = [c for c in lat.base.cubes if lat.cube_dim(c) <= n - 2]
    for a, b in combinations(low, 2):
        k_cube = lat.meet(a, b)
        if k_cube is None or k_cube in (a, b):
            continue
        L = lat.links[k_cube]
        s = rng.uniform(0, lat.s0 * 0.999, samples)
        X = sample_complex(L, samples, rng)
        m = z_masks(lat, k_cube, X, s, params)
        if np.any(m[a] & m[b]):
            return False
    return True


def x_region_inclusion(lat: HyperbolizedLattice, params: ConeParams, samples: int = 1000, seed: int = 0) -> dict:
    """Z(X_j) & Z(X_k) lands in X(C Link(X_j), D(k)), and Z & Z(X_k) in X(C Link(X_k)); violation counts."""
    rng = np.random.default_rng(seed)
    n = lat.dim
    low = [c for c in lat.base.cubes if lat.cube_dim(c) <= n - 2]
    out = {"pair_points": 0, "pair_violations": 0, "top_points": 0, "top_violations": 0}
    for small in low:
        L = lat.links[small]
        j = lat.cube_dim(small)
        s = rng.uniform(0, lat.s0 * 0.999, samples)
        X = sample_complex(L, samples, rng)
        masks = z_masks(lat, small, X, s, params)
        regions = Regions(L, params) if L.dim >= 2 else None
        top_radius = radius_k(params, L.dim - 2)
        for big in lat.cofaces(small):
            if big not in masks or regions is None:
                continue
            # Z & Z is a thin shell around the cone on D(big); sample there
            D = lat.delta(small, big)
            Xb, sb = sample_near_simplices(L, [D], samples, (r_width(params, n, j), s_width(params, n, j)),
                                           (0.0, s_width(params, n, lat.cube_dim(big))), rng)
            mb = z_masks(lat, small, Xb, sb, params)
            rows = mb[small] & mb[big]
            if not rows.any():
                continue
            mem = regions.x_simplex(Xb[rows], sb[rows], D)
            out["pair_points"] += int(rows.sum())
            out["pair_violations"] += int((~mem.inside & ~mem.boundary).sum())
        rows = masks[small] & masks["top"]
        if rows.any():
            if regions is not None:
                mem = regions.x_top(X[rows], s[rows])
                miss = ~mem.inside & ~mem.boundary
            else:
                miss = s[rows] < top_radius
            out["top_points"] += int(rows.sum())
            out["top_violations"] += int(miss.sum())
    return out
