"""Geometry of the hyperbolic cone over an all-right complex.

A cone point is a pair (x, s): a point x of the complex in dense all-right
coordinates and its distance s to the cone vertex.  Relative to a simplex D
whose star contains x, the point splits as a right hyperbolic triangle with
legs t (along the cone on D) and r (to the cone on D) and angle beta at the
vertex:

    cosh s = cosh r cosh t,     sinh r = sin(beta) sinh s.

Everything here is star-local trigonometry; no global distances are computed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .complexes import AllRightComplex, in_star_dense
from .widths import WidthSet

BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class ConeParams:
    """Radius r, excess xi, width ratio and scale, and forcing depths d_2, d_3, ..."""
    r: float
    xi: float
    ratio: float
    scale: float
    depths: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "depths", tuple(float(d) for d in self.depths))

    @property
    def small(self) -> WidthSet:
        return WidthSet(self.ratio, 1.0)

    @property
    def big(self) -> WidthSet:
        return WidthSet(self.ratio, self.scale)

    def depth(self, i: int) -> float:
        """d_i for i >= 2."""
        if i - 2 >= len(self.depths) or i < 2:
            raise ValueError(f"forcing depth d_{i} not supplied")
        return self.depths[i - 2]

    def violations(self, dim: int | None = None) -> list[str]:
        out = []
        if not 0 < self.ratio < 1:
            out.append(f"ratio={self.ratio} must lie in (0, 1)")
        if self.scale < 1:
            out.append(f"c={self.scale} must be >= 1")
        if self.scale * self.ratio >= np.exp(-4):
            out.append(f"c*ratio={self.scale * self.ratio:.4g} must be < e^-4")
        floor = 6 + 2 * self.xi
        for i, d in enumerate(self.depths, start=2):
            if d <= floor:
                out.append(f"d{i}={d:g} < 6+2xi={floor:g}")
            if self.r <= 2 * d:
                out.append(f"r={self.r:g} must exceed 2*d{i}={2 * d:g}")
        if dim is not None:
            if len(self.depths) < dim:
                out.append(f"need depths d2..d{dim + 1} for a complex of dimension {dim}")
            if dim + 1 > self.xi:
                out.append(f"dim+1={dim + 1} must be <= xi={self.xi:g}")
        return out

    def validate(self, dim: int | None = None) -> "ConeParams":
        bad = self.violations(dim)
        if bad:
            raise ValueError("; ".join(bad))
        return self

    def with_scale(self, scale: float) -> "ConeParams":
        return ConeParams(self.r, self.xi, self.ratio, scale, self.depths)

    def with_r(self, r: float) -> "ConeParams":
        return ConeParams(r, self.xi, self.ratio, self.scale, self.depths)

    def to_json(self) -> dict:
        return {"r": self.r, "xi": self.xi, "ratio": self.ratio, "c": self.scale, "d": list(self.depths)}


# ---- radii -------------------------------------------------------------------

def radius_k(params: ConeParams, k: int) -> float:
    """r_k = arcsinh(sinh r / sin alpha_k), with r_{-1} = r."""
    if k == -1:
        return params.r
    return float(np.arcsinh(np.sinh(params.r) / params.small.sin(k)))


def radius_from_top(params: ConeParams, m: int, top: float) -> float:
    """Inverse of r -> r_{m-2}."""
    return float(np.arcsinh(np.sinh(top) * params.small.sin(m - 2)))


def radii(params: ConeParams, m: int, k: int) -> tuple[float, float, float]:
    """(r_k, s_{m,k}, r_{m,k}) for 0 <= k <= m-2."""
    if m < 2 or not 0 <= k <= m - 2:
        raise ValueError(f"index k={k} out of range for m={m}")
    top = radius_k(params, m - 2)
    s_mk = float(np.arcsinh(np.sinh(top) * params.big.sin(k)))
    r_mk = radius_k(params, m - k - 3)
    assert r_mk < s_mk, "r_{m,k} < s_{m,k} needs scale > 1"
    return radius_k(params, k), s_mk, r_mk


def sphere_slice_width(s, beta):
    """Cone width whose slice at radius s is the spherical beta-neighborhood."""
    return np.arcsinh(np.sinh(s) * np.sin(beta))


# ---- decomposition ----------------------------------------------------------

@dataclass
class ExtensionCoords:
    t: np.ndarray
    w: np.ndarray
    r: np.ndarray
    u: np.ndarray
    beta: np.ndarray
    simplex: tuple = field(default=())
    rest: tuple = field(default=())


def decompose(X: np.ndarray, s, simplex, complex_: AllRightComplex) -> ExtensionCoords:
    """Split cone points (X, s) relative to a simplex.  Raises for points outside its star."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    s = np.broadcast_to(np.asarray(s, dtype=float), (X.shape[0],))
    simplex = complex_.ordered(simplex)
    if not in_star_dense(X, simplex, complex_).all():
        raise ValueError("point outside the star of the simplex")
    cols = [complex_.index[v] for v in simplex]
    rest_cols = [i for i in range(X.shape[1]) if i not in cols]
    xd, xr = X[:, cols], X[:, rest_cols]
    cos_b = np.linalg.norm(xd, axis=1)
    sin_b = np.linalg.norm(xr, axis=1)
    beta = np.arctan2(sin_b, cos_b)
    sh = np.sinh(s)
    r = np.arcsinh(sin_b * sh)
    t = np.arcsinh(cos_b * sh / np.cosh(r))
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.where(cos_b[:, None] > 0, xd / cos_b[:, None], 0.0)
        u = np.where(sin_b[:, None] > 0, xr / sin_b[:, None], 0.0)
    return ExtensionCoords(t, w, r, u, beta, simplex, tuple(complex_.vertices[i] for i in rest_cols))


def recompose(coords: ExtensionCoords, complex_: AllRightComplex):
    """Inverse of ``decompose``: returns (X, s)."""
    sh_r = np.sinh(coords.r)
    along = np.sinh(coords.t) * np.cosh(coords.r)
    s = np.arcsinh(np.hypot(sh_r, along))
    beta = np.arctan2(sh_r, along)
    n = len(coords.t)
    X = np.zeros((n, len(complex_.vertices)))
    cols = [complex_.index[v] for v in coords.simplex]
    rest_cols = [complex_.index[v] for v in coords.rest]
    X[:, cols] = np.cos(beta)[:, None] * coords.w
    X[:, rest_cols] = np.sin(beta)[:, None] * coords.u
    return X, s


def cone_distance(X: np.ndarray, s, simplex, complex_: AllRightComplex):
    """(distance to the cone on a simplex, in-star mask); inf outside the closed star."""
    X = np.atleast_2d(X)
    s = np.broadcast_to(np.asarray(s, dtype=float), (X.shape[0],))
    cols = [complex_.index[v] for v in simplex]
    inside = in_star_dense(X, simplex, complex_)
    # norm of the remaining coordinates; 1 - |x_D|^2 would cancel near the simplex
    sin_g = np.linalg.norm(np.delete(X, cols, axis=1), axis=1)
    d = np.arcsinh(np.minimum(sin_g, 1.0) * np.sinh(s))
    return np.where(inside, d, np.inf), inside


# ---- regions --------------------------------------------------------------------

@dataclass
class Membership:
    inside: np.ndarray
    boundary: np.ndarray


class Regions:
    """Y and X region predicates on the cone over a complex of dimension m >= 2."""

    def __init__(self, complex_: AllRightComplex, params: ConeParams):
        if complex_.dim < 2:
            raise ValueError("region predicates need a complex of dimension >= 2")
        self.complex = complex_
        self.params = params
        self.m = complex_.dim
        self.top_radius = radius_k(params, self.m - 2)
        self.y_ball = self.top_radius - (4 + 2 * params.xi)
        self.low = [s for k in range(self.m - 1) for s in complex_.simplices(k)]

    def s_width(self, k: int) -> float:
        return radii(self.params, self.m, k)[1]

    def r_width(self, k: int) -> float:
        return radii(self.params, self.m, k)[2]

    def distances(self, X, s) -> dict:
        return {simp: cone_distance(X, s, simp, self.complex)[0] for simp in self.low}

    def _lower_excluded(self, dist, k, n):
        """Inside some closed N_{r_{m,j}}(C D^j), j < k, with a boundary flag."""
        hit = np.zeros(n, dtype=bool)
        edge = np.zeros(n, dtype=bool)
        for j in range(k):
            rad = self.r_width(j)
            for simp in self.complex.simplices(j):
                d = dist[simp]
                hit |= d <= rad
                edge |= np.abs(d - rad) < BOUNDARY_TOL
        return hit, edge

    def y_simplex(self, X, s, simplex, dist=None, ball=None) -> Membership:
        X = np.atleast_2d(X)
        s = np.broadcast_to(np.asarray(s, dtype=float), (X.shape[0],))
        k = len(simplex) - 1
        if k > self.m - 2:
            raise ValueError("Y regions are defined for simplices of dimension <= m-2")
        ball = self.y_ball if ball is None else ball
        dist = self.distances(X, s) if dist is None else dist
        d = dist[frozenset(simplex)]
        rad = self.s_width(k)
        near = d < rad
        lower, edge = self._lower_excluded(dist, k, len(s))
        out = near & ~lower & (s >= ball)
        edge = edge | (np.abs(d - rad) < BOUNDARY_TOL) | (np.abs(s - ball) < BOUNDARY_TOL)
        return Membership(out, edge)

    def y_top(self, X, s, dist=None, ball=None) -> Membership:
        X = np.atleast_2d(X)
        s = np.broadcast_to(np.asarray(s, dtype=float), (X.shape[0],))
        ball = self.y_ball if ball is None else ball
        dist = self.distances(X, s) if dist is None else dist
        lower, edge = self._lower_excluded(dist, self.m - 1, len(s))
        out = ~lower & (s >= ball)
        return Membership(out, edge | (np.abs(s - ball) < BOUNDARY_TOL))

    def x_simplex(self, X, s, simplex, dist=None) -> Membership:
        return self.y_simplex(X, s, simplex, dist, ball=self.top_radius)

    def x_top(self, X, s, dist=None) -> Membership:
        return self.y_top(X, s, dist, ball=self.top_radius)

    def classify(self, X, s, kind: str = "y"):
        """All region memberships for a batch: ({simplex or 'top': mask}, boundary mask)."""
        X = np.atleast_2d(X)
        s = np.broadcast_to(np.asarray(s, dtype=float), (X.shape[0],))
        dist = self.distances(X, s)
        ball = self.y_ball if kind == "y" else self.top_radius
        masks = {}
        edge = np.zeros(len(s), dtype=bool)
        for simp in self.low:
            mem = self.y_simplex(X, s, simp, dist, ball)
            masks[simp] = mem.inside
            edge |= mem.boundary
        mem = self.y_top(X, s, dist, ball)
        masks["top"] = mem.inside
        edge |= mem.boundary
        # points on a lower-dimensional face of the complex are knife-edge cases
        edge |= (np.count_nonzero(X > 1e-12, axis=1) < self.m + 1)
        return masks, edge


def y_membership(X, s, region, regions: Regions) -> Membership:
    """Membership in Y(simplex) or Y(top) (``region == 'top'``)."""
    if region == "top":
        return regions.y_top(X, s)
    return regions.y_simplex(X, s, frozenset(region))


def open_star_mask(X: np.ndarray, simplex, complex_: AllRightComplex) -> np.ndarray:
    cols = [complex_.index[v] for v in simplex]
    return in_star_dense(X, simplex, complex_) & np.all(np.atleast_2d(X)[:, cols] > 0, axis=1)


# ---- radial stability ------------------------------------------------------------

def radial_case(sin_gamma: float, b: float, theta: float, tol: float = 1e-12):
    """Classify the ray t -> (t+b)x against the widening neighborhood of angle theta.

    Returns ("C1", s0), ("C2", None) or ("C3", None); in case C1 the ray is inside
    the open neighborhood from radius s0 on.
    """
    lhs = np.exp(b) * sin_gamma
    rhs = np.sin(theta)
    if abs(lhs - rhs) <= tol * max(1.0, rhs):
        return "C3", None
    if lhs > rhs:
        return "C2", None
    num = rhs - sin_gamma * np.exp(-b)
    den = rhs - lhs
    s0 = 0.0 if num <= den else 0.5 * np.log(num / den)
    return "C1", float(max(s0, 0.0))


def ray_inside(sin_gamma: float, b: float, theta: float, s: float) -> bool:
    """Direct test sin(gamma) sinh(s+b) < sin(theta) sinh(s)."""
    return sin_gamma * np.sinh(s + b) < np.sin(theta) * np.sinh(s)


@dataclass
class StabilityVerdict:
    region: object  # frozenset simplex or "top"
    threshold: float


def radial_stability(x: np.ndarray, b: float, complex_: AllRightComplex, params: ConeParams) -> StabilityVerdict:
    """Eventual region of the ray (r_{m-2} + b) x as r_{m-2} grows."""
    x = np.atleast_2d(x)
    m = complex_.dim
    small, big = params.small, params.big
    for k in range(m - 1):
        for simp in complex_.simplices(k):
            if not in_star_dense(x, simp, complex_)[0]:
                continue
            cols = [complex_.index[v] for v in simp]
            sin_g = float(np.sqrt(max(np.sum(x**2) - np.sum(x[0, cols] ** 2), 0.0)))
            case, s0 = radial_case(sin_g, b, np.arcsin(small.sin(k)))
            if case == "C1":
                return StabilityVerdict(simp, s0)
            if case == "C3":
                _, s0 = radial_case(sin_g, b, np.arcsin(big.sin(k)))
                return StabilityVerdict(simp, s0)
    return StabilityVerdict("top", 0.0)


# ---- region audit -----------------------------------------------------------------

@dataclass
class RegionAudit:
    samples: int
    seed: int
    uncovered: int          # outside the ball but in no Y region
    disjoint_overlaps: int  # in Y of two disjoint simplices
    meet_overlaps: int      # in Y of two simplices meeting in a smaller face
    boundary: int           # knife-edge samples, skipped
    examples: list = field(default_factory=list)

    @property
    def violations(self) -> int:
        return self.uncovered + self.disjoint_overlaps + self.meet_overlaps

    def to_json(self) -> dict:
        return {"samples": self.samples, "seed": self.seed, "uncovered": self.uncovered,
                "disjoint_overlaps": self.disjoint_overlaps, "meet_overlaps": self.meet_overlaps,
                "boundary": self.boundary, "examples": self.examples}


def region_audit(complex_: AllRightComplex, params: ConeParams, samples: int = 10_000, seed: int = 0,
                 spread: float = 12.0, X=None, s=None) -> RegionAudit:
    """Sample cone points outside the Y ball and check covering and the two disjointness rules."""
    from .widths import sample_complex
    regions = Regions(complex_, params)
    rng = np.random.default_rng(seed)
    if X is None:
        X = sample_complex(complex_, samples, rng)
        s = rng.uniform(regions.y_ball, regions.top_radius + spread, samples)
    masks, edge = regions.classify(X, s, "y")
    covered = np.zeros(len(s), dtype=bool)
    for mask in masks.values():
        covered |= mask
    uncovered = ~covered & ~edge
    disjoint = np.zeros(len(s), dtype=bool)
    meet = np.zeros(len(s), dtype=bool)
    low = regions.low
    for i, a in enumerate(low):
        for b in low[i + 1:]:
            both = masks[a] & masks[b] & ~edge
            if not both.any():
                continue
            common = a & b
            if not common:
                disjoint |= both
            elif common != a and common != b:
                meet |= both
    examples = [{"s": float(s[i]), "x": [float(v) for v in X[i]]}
                for i in np.flatnonzero(uncovered | disjoint | meet)[:5]]
    return RegionAudit(len(s), seed, int(uncovered.sum()), int(disjoint.sum()), int(meet.sum()),
                       int(edge.sum()), examples)
