"""All-right spherical complexes and cubical complexes.

Simplices are frozensets of vertex labels.  Every k-simplex carries the
metric of the positive orthant of the unit k-sphere, so a point of a simplex
is a nonnegative unit vector indexed by the simplex's sorted vertices.  For
batches of points we use a dense layout: one row per point and one column per
vertex of the complex, zero outside the supporting simplex.

The module also holds the explicit sphere maps for joins of a canonical
sphere with a polygon (``JoinSmoothing``), which cover the spheres used as
links throughout the package, and a small cubical complex toolkit.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations, product

import numpy as np

COORD_TOL = 1e-12


def _key(label):
    return (0, label) if isinstance(label, (int, np.integer)) else (1, str(label))


def _sorted(labels):
    return tuple(sorted(labels, key=_key))


class AllRightComplex:
    """Finite abstract simplicial complex with the all-right spherical metric."""

    def __init__(self, maximal_simplices, vertices=None):
        faces = set()
        for s in maximal_simplices:
            s = frozenset(s)
            if not s:
                continue
            for k in range(1, len(s) + 1):
                for f in combinations(s, k):
                    faces.add(frozenset(f))
        verts = set(v for f in faces for v in f)
        if vertices is not None:
            verts |= set(vertices)
            faces |= {frozenset([v]) for v in vertices}
        self.vertices = _sorted(verts)
        self.index = {v: i for i, v in enumerate(self.vertices)}
        self.faces = frozenset(faces)
        by_dim: dict[int, list] = {}
        for f in faces:
            by_dim.setdefault(len(f) - 1, []).append(f)
        self._by_dim = {k: sorted(v, key=self.sort_key) for k, v in by_dim.items()}
        self.dim = max(by_dim) if by_dim else -1
        self.maximal = tuple(sorted((f for f in faces if not any(f < g for g in self._cofaces(f, faces))),
                                    key=self.sort_key))

    @staticmethod
    def _cofaces(f, faces):
        return (g for g in faces if len(g) == len(f) + 1)

    def sort_key(self, simplex):
        return tuple(self.index[v] for v in sorted(simplex, key=lambda v: self.index[v]))

    def ordered(self, simplex) -> tuple:
        return tuple(sorted(simplex, key=lambda v: self.index[v]))

    def simplices(self, k: int | None = None) -> list:
        if k is None:
            return [f for d in sorted(self._by_dim) for f in self._by_dim[d]]
        return list(self._by_dim.get(k, []))

    def f_vector(self) -> list[int]:
        return [len(self._by_dim.get(k, [])) for k in range(self.dim + 1)]

    def is_simplex(self, s) -> bool:
        s = frozenset(s)
        return (not s) or s in self.faces

    def __contains__(self, s) -> bool:
        return self.is_simplex(s)

    def __eq__(self, other) -> bool:
        return isinstance(other, AllRightComplex) and self.faces == other.faces and \
            set(self.vertices) == set(other.vertices)

    def __hash__(self):
        return hash(self.faces)

    def __repr__(self):
        return f"AllRightComplex(dim={self.dim}, f={self.f_vector()})"

    # ---- combinatorics ---------------------------------------------------
    def link(self, simplex) -> "AllRightComplex":
        d = frozenset(simplex)
        if d and d not in self.faces:
            raise KeyError(f"{sorted(d, key=_key)} is not a simplex of the complex")
        tops = [f - d for f in self.maximal if d <= f and f != d]
        return AllRightComplex(tops)

    def star(self, simplex) -> "AllRightComplex":
        d = frozenset(simplex)
        if d not in self.faces:
            raise KeyError(f"{sorted(d, key=_key)} is not a simplex of the complex")
        return AllRightComplex([f for f in self.maximal if d <= f])

    def restrict(self, vertices) -> "AllRightComplex":
        keep = set(vertices)
        return AllRightComplex([f for f in self.faces if f <= keep], vertices=[v for v in self.vertices if v in keep])

    def intersection_condition(self) -> bool:
        """Any two simplices meet in a single common face (possibly empty)."""
        tops = self.maximal
        for a, b in combinations(tops, 2):
            c = a & b
            if c and c not in self.faces:
                return False
        return True

    def owner(self, support) -> frozenset:
        """Canonical simplex for a point with the given support."""
        s = frozenset(support)
        for f in self.maximal:
            if s <= f:
                return f
        raise ValueError("support is not a simplex")

    # ---- io -------------------------------------------------------------
    def to_json(self) -> dict:
        return {"vertices": [v for v in self.vertices],
                "maximal_simplices": [list(self.ordered(f)) for f in self.maximal],
                "kind": "spherical"}


# ---- constructors -----------------------------------------------------------

def canonical_sphere(m: int) -> AllRightComplex:
    """Boundary of the (m+1)-dimensional cross polytope."""
    if m < 0:
        raise ValueError("dimension must be nonnegative")
    pairs = [(f"+{i}", f"-{i}") for i in range(m + 1)]
    return AllRightComplex([frozenset(choice) for choice in product(*pairs)])


def circle_complex(segments: int) -> AllRightComplex:
    """Polygon made of ``segments`` quarter circles."""
    if segments < 3:
        raise ValueError(f"a circle complex needs at least 3 segments, got {segments}")
    names = [f"c{i}" for i in range(segments)]
    return AllRightComplex([frozenset((names[i], names[(i + 1) % segments])) for i in range(segments)])


def _fresh(label: str, taken) -> str:
    i = 0
    while f"{label}{i}" in taken:
        i += 1
    return f"{label}{i}"


def suspension(complex_: AllRightComplex) -> AllRightComplex:
    """Join with two new pole vertices."""
    taken = set(map(str, complex_.vertices))
    north = _fresh("n", taken)
    south = _fresh("s", taken | {north})
    tops = []
    for f in complex_.maximal:
        tops.append(f | {north})
        tops.append(f | {south})
    if not complex_.maximal:
        tops = [frozenset([north]), frozenset([south])]
    return AllRightComplex(tops)


def join(a: AllRightComplex, b: AllRightComplex) -> AllRightComplex:
    if set(a.vertices) & set(b.vertices):
        raise ValueError("join needs disjoint vertex sets")
    if not a.maximal:
        return b
    if not b.maximal:
        return a
    return AllRightComplex([x | y for x in a.maximal for y in b.maximal])


def simplicial_link(simplex, complex_: AllRightComplex) -> AllRightComplex:
    return complex_.link(simplex)


def load_complex(data) -> "AllRightComplex | CubicalComplex":
    if isinstance(data, str):
        with open(data) as fh:
            data = json.load(fh)
    kind = data.get("kind", "spherical")
    if kind == "spherical":
        return AllRightComplex([frozenset(s) for s in data["maximal_simplices"]], vertices=data.get("vertices"))
    if kind == "cubical":
        return CubicalComplex([tuple(c) for c in data["maximal_simplices"]])
    raise ValueError(f"unknown complex kind {kind!r}")


# ---- points -----------------------------------------------------------------

@dataclass(frozen=True)
class SimplexPoint:
    simplex: tuple
    direction: np.ndarray = field(compare=False)

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        if d.shape != (len(self.simplex),):
            raise ValueError("direction must have one entry per vertex")
        if abs(np.linalg.norm(d) - 1) > 1e-12 or d.min() < -COORD_TOL:
            raise ValueError("direction must be a nonnegative unit vector")
        object.__setattr__(self, "direction", d)

    def support(self, tol: float = COORD_TOL) -> frozenset:
        return frozenset(v for v, x in zip(self.simplex, self.direction) if x > tol)

    def dense(self, complex_: AllRightComplex) -> np.ndarray:
        out = np.zeros(len(complex_.vertices))
        for v, x in zip(self.simplex, self.direction):
            out[complex_.index[v]] = max(x, 0.0)
        return out

    def canonical(self, complex_: AllRightComplex) -> "SimplexPoint":
        owner = complex_.ordered(complex_.owner(self.support()))
        vals = dict(zip(self.simplex, self.direction))
        return SimplexPoint(owner, np.array([max(vals.get(v, 0.0), 0.0) for v in owner]))


def barycenter(simplex) -> SimplexPoint:
    s = _sorted(simplex)
    return SimplexPoint(s, np.full(len(s), 1 / np.sqrt(len(s))))


def star_local_distance(x: SimplexPoint, simplex, complex_: AllRightComplex):
    """Spherical distance from x to the simplex inside its star, or None outside."""
    d = frozenset(simplex)
    supp = x.support()
    if not complex_.is_simplex(d | supp):
        return None
    vals = dict(zip(x.simplex, x.direction))
    cos_g = np.sqrt(sum(max(vals.get(v, 0.0), 0.0) ** 2 for v in d))
    sin_g = np.sqrt(sum(max(w, 0.0) ** 2 for v, w in vals.items() if v not in d))
    return float(np.arctan2(sin_g, cos_g))


def in_star_dense(X: np.ndarray, simplex, complex_: AllRightComplex, tol: float = COORD_TOL) -> np.ndarray:
    """Vectorised star test for dense points: supp(x) together with the simplex spans a simplex."""
    d = frozenset(simplex)
    mask = X > tol
    patterns, inverse = np.unique(mask, axis=0, return_inverse=True)
    ok = np.array([complex_.is_simplex(d | {complex_.vertices[i] for i in np.flatnonzero(p)})
                   for p in patterns])
    return ok[inverse.ravel()]


def star_sin_distance(X: np.ndarray, simplex, complex_: AllRightComplex):
    """(sin of star-local distance, in-star mask) for dense points."""
    cols = [complex_.index[v] for v in simplex]
    inside = in_star_dense(X, simplex, complex_)
    rest = np.delete(X, cols, axis=1)
    sin_g = np.sqrt(np.sum(rest**2, axis=1))
    return np.minimum(sin_g, 1.0), inside


def link_transitivity_holds(complex_: AllRightComplex, small, big) -> bool:
    """Link(Link(small, big), Link(small, P)) equals Link(big, P)."""
    small, big = frozenset(small), frozenset(big)
    inner = complex_.link(small)
    opposite = big - small
    return inner.link(opposite).faces == complex_.link(big).faces


# ---- sphere maps for joins of a canonical sphere with a polygon --------------

class JoinSmoothing:
    """Explicit map from S^{p-1} * C_k' (or a canonical sphere) to the round sphere.

    Pair coordinates are kept as they are.  A point at arc length theta along
    the polygon (total length k' pi/2) and at angle a from the sphere part maps
    to sin(a) (cos(theta/k), sin(theta/k)) with k = k'/4, so the polygon is
    traversed at constant speed.  The map is the identity for canonical spheres.
    """

    def __init__(self, complex_: AllRightComplex):
        pairs, cycle = recognize_join(complex_)
        self.complex = complex_
        self.pairs = pairs
        self.cycle = cycle
        self.segments = len(cycle) if cycle else 0
        self.m = len(pairs) + 1 if cycle else len(pairs) - 1
        self.ambient = len(pairs) + (2 if cycle else 0)
        self.k = self.segments / 4 if cycle else 1.0
        self.kappa = self.k**2

    # columns of the dense layout for each coordinate
    def _cols(self):
        idx = self.complex.index
        pos = np.array([idx[a] for a, _ in self.pairs], dtype=int)
        neg = np.array([idx[b] for _, b in self.pairs], dtype=int)
        cyc = np.array([idx[c] for c in self.cycle], dtype=int) if self.cycle else np.zeros(0, int)
        return pos, neg, cyc

    def circle_angle(self, theta):
        return np.asarray(theta) / self.k

    def to_sphere(self, X: np.ndarray) -> np.ndarray:
        """Dense all-right coordinates to points of the round sphere."""
        X = np.atleast_2d(X)
        pos, neg, cyc = self._cols()
        out = np.zeros((X.shape[0], self.ambient))
        p = len(self.pairs)
        out[:, :p] = X[:, pos] - X[:, neg]
        if self.cycle:
            vals = X[:, cyc]
            radius = np.sqrt(np.sum(vals**2, axis=1))
            seg = np.argmax(vals, axis=1)
            nxt = (seg + 1) % self.segments
            prv = (seg - 1) % self.segments
            rows = np.arange(X.shape[0])
            fwd = vals[rows, nxt]
            bwd = vals[rows, prv]
            phi = np.where(fwd >= bwd, np.arctan2(fwd, vals[rows, seg]), -np.arctan2(bwd, vals[rows, seg]))
            theta = seg * np.pi / 2 + phi
            psi = theta / self.k
            out[:, p] = radius * np.cos(psi)
            out[:, p + 1] = radius * np.sin(psi)
        return out

    def from_sphere(self, N: np.ndarray) -> np.ndarray:
        """Points of the round sphere to dense all-right coordinates."""
        N = np.atleast_2d(N)
        pos, neg, cyc = self._cols()
        X = np.zeros((N.shape[0], len(self.complex.vertices)))
        p = len(self.pairs)
        X[:, pos] = np.maximum(N[:, :p], 0.0)
        X[:, neg] = np.maximum(-N[:, :p], 0.0)
        if self.cycle:
            c = N[:, p:p + 2]
            radius = np.sqrt(np.sum(c**2, axis=1))
            psi = np.mod(np.arctan2(c[:, 1], c[:, 0]), 2 * np.pi)
            theta = psi * self.k
            seg = np.minimum(np.floor(theta / (np.pi / 2)).astype(int), self.segments - 1)
            phi = theta - seg * np.pi / 2
            rows = np.arange(N.shape[0])
            X[rows, cyc[seg]] = radius * np.cos(phi)
            X[rows, cyc[(seg + 1) % self.segments]] = radius * np.sin(phi)
        return X

    def vertex_direction(self, v) -> np.ndarray:
        X = np.zeros((1, len(self.complex.vertices)))
        X[0, self.complex.index[v]] = 1.0
        return self.to_sphere(X)[0]

    @classmethod
    def from_layout(cls, complex_: AllRightComplex, pairs, cycle) -> "JoinSmoothing":
        """Build the map for a known (pairs, polygon) layout without re-recognizing it."""
        out = cls.__new__(cls)
        out.complex = complex_
        out.pairs = [tuple(p) for p in pairs]
        out.cycle = list(cycle)
        out.segments = len(out.cycle)
        out.m = len(out.pairs) + 1 if out.cycle else len(out.pairs) - 1
        out.ambient = len(out.pairs) + (2 if out.cycle else 0)
        out.k = out.segments / 4 if out.cycle else 1.0
        out.kappa = out.k**2
        return out

    def layout(self) -> tuple:
        return tuple(self.pairs), tuple(self.cycle)

    def link_smoothing(self, simplex) -> "JoinSmoothing":
        return induced_layout(self, simplex)


def induced_layout(smoothing: JoinSmoothing, simplex) -> JoinSmoothing:
    """Coordinate layout of Link(simplex) inherited from the layout of the whole complex.

    Pairs touched by the simplex drop out.  A simplex with one polygon vertex c_a
    turns the polygon into the new pair (c_{a+1}, c_{a-1}); with two it removes it.
    """
    simplex = frozenset(simplex)
    pairs = [p for p in smoothing.pairs if not (set(p) & simplex)]
    cycle = smoothing.cycle
    on_cycle = [i for i, c in enumerate(cycle) if c in simplex]
    if on_cycle:
        if len(on_cycle) == 1:
            a = on_cycle[0]
            n = len(cycle)
            pairs.append((cycle[(a + 1) % n], cycle[(a - 1) % n]))
        cycle = []
    return JoinSmoothing.from_layout(smoothing.complex.link(simplex), pairs, cycle)


def recognize_join(complex_: AllRightComplex):
    """Split a complex as (suspension pairs, polygon) when it is S^{p-1} * C_k'.

    Returns the list of pairs (u, v) and the polygon's vertices in cyclic order
    (empty when the complex is a canonical sphere).  Raises ValueError for
    complexes outside this family.
    """
    remaining = list(complex_.vertices)
    current = complex_
    pairs = []
    changed = True
    while changed and remaining:
        changed = False
        for u, v in combinations(remaining, 2):
            if current.is_simplex({u, v}):
                continue
            rest = [w for w in remaining if w not in (u, v)]
            base = current.restrict(rest) if rest else AllRightComplex([])
            if current.link({u}).faces == base.faces and current.link({v}).faces == base.faces:
                pairs.append((u, v))
                remaining = rest
                current = base
                changed = True
                break
    if not remaining:
        return pairs, []
    edges = current.simplices(1)
    if current.dim != 1 or any(sum(1 for e in edges if w in e) != 2 for w in remaining):
        raise ValueError("complex is not a join of a canonical sphere with a polygon")
    start = remaining[0]
    order = [start]
    prev = None
    here = start
    while True:
        nbrs = sorted((w for e in edges if here in e for w in e if w != here), key=_key)
        nxt = [w for w in nbrs if w != prev]
        step = nxt[0]
        if step == start:
            break
        order.append(step)
        prev, here = here, step
        if len(order) > len(remaining):
            raise ValueError("polygon traversal failed")
    if len(order) != len(remaining):
        raise ValueError("polygon part is disconnected")
    return pairs, order


# ---- cubical complexes --------------------------------------------------------

def _cube_faces(cube: tuple):
    """All faces of a cube given by its 2^k vertices in binary order."""
    k = int(round(np.log2(len(cube))))
    out = []
    for free in range(k + 1):
        for axes in combinations(range(k), free):
            fixed = [a for a in range(k) if a not in axes]
            for bits in product((0, 1), repeat=len(fixed)):
                verts = []
                for local in product((0, 1), repeat=free):
                    code = [0] * k
                    for a, b in zip(fixed, bits):
                        code[a] = b
                    for a, b in zip(axes, local):
                        code[a] = b
                    idx = sum(bit << (k - 1 - pos) for pos, bit in enumerate(code))
                    verts.append(cube[idx])
                out.append(tuple(verts))
    return out


class CubicalComplex:
    """Cube complex with cubes given as vertex tuples in binary order."""

    def __init__(self, maximal_cubes):
        cubes = {}
        for c in maximal_cubes:
            c = tuple(c)
            n = len(c)
            if n & (n - 1) or len(set(c)) != n:
                raise ValueError(f"malformed cube {c}")
            for f in _cube_faces(c):
                cubes.setdefault(frozenset(f), f)
        self.cubes = cubes
        self.dim = max(int(round(np.log2(len(c)))) for c in cubes.values())

    def cube_dim(self, key) -> int:
        return int(round(np.log2(len(key))))

    def of_dim(self, k: int) -> list:
        return sorted((key for key in self.cubes if self.cube_dim(key) == k), key=lambda s: sorted(map(str, s)))

    def facets(self, key) -> list:
        k = self.cube_dim(key)
        return [frozenset(f) for f in _cube_faces(self.cubes[key]) if len(f) == 2 ** (k - 1)]

    def contains(self, big, small) -> bool:
        return frozenset(small) <= frozenset(big)

    def label(self, key) -> str:
        return "|".join(sorted(map(str, key)))

    def link(self, key) -> AllRightComplex:
        """Link of a cube: vertices are the cubes one dimension up that contain it."""
        key = frozenset(key)
        if key not in self.cubes:
            raise KeyError("not a cube of the complex")
        k = self.cube_dim(key)
        tops = []
        for other, verts in self.cubes.items():
            if key < other:
                ups = [frozenset(f) for f in _cube_faces(verts)
                       if len(f) == 2 ** (k + 1) and key <= frozenset(f)]
                tops.append(frozenset(self.label(u) for u in ups))
        return AllRightComplex(tops)

    def delta(self, base, big) -> frozenset:
        """Simplex of Link(base) determined by a cube containing base."""
        base, big = frozenset(base), frozenset(big)
        k = self.cube_dim(base)
        return frozenset(self.label(frozenset(f)) for f in _cube_faces(self.cubes[big])
                         if len(f) == 2 ** (k + 1) and base <= frozenset(f))

    def to_json(self) -> dict:
        tops = [c for key, c in self.cubes.items() if not any(key < o for o in self.cubes)]
        return {"vertices": sorted({str(v) for c in tops for v in c}),
                "maximal_simplices": [list(c) for c in tops], "kind": "cubical"}


def single_cube(n: int) -> CubicalComplex:
    return CubicalComplex([tuple(range(2**n))])


def cube_boundary(n: int) -> CubicalComplex:
    full = tuple(range(2**n))
    return CubicalComplex([f for f in _cube_faces(full) if len(f) == 2 ** (n - 1)])


def cycle_cubes(length: int) -> CubicalComplex:
    return CubicalComplex([(f"z{i}", f"z{(i + 1) % length}") for i in range(length)])


def flower(petals: int) -> CubicalComplex:
    """``petals`` squares glued cyclically around a central vertex."""
    sq = []
    for i in range(petals):
        j = (i + 1) % petals
        sq.append(("o", f"e{i}", f"e{j}", f"f{i}"))
    return CubicalComplex(sq)


def cube_product(a: CubicalComplex, b: CubicalComplex) -> CubicalComplex:
    tops_a = [c for key, c in a.cubes.items() if not any(key < o for o in a.cubes)]
    tops_b = [c for key, c in b.cubes.items() if not any(key < o for o in b.cubes)]
    out = []
    for ca in tops_a:
        for cb in tops_b:
            out.append(tuple(f"{x}.{y}" for x in ca for y in cb))
    return CubicalComplex(out)
