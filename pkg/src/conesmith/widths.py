"""Width sets and the disjoint neighborhood property.

A width set is the decreasing sequence of angles with sin(beta_i) = c * ratio**(i+1).
The natural set has c = 1.  Index -1 is the convention pi/2.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import gamma, pi

import numpy as np

from .complexes import AllRightComplex, star_sin_distance

HALF_SQRT2 = np.sqrt(2.0) / 2


@dataclass(frozen=True)
class WidthSet:
    ratio: float
    scale: float = 1.0

    def __post_init__(self):
        if not 0 < self.ratio < 1:
            raise ValueError(f"ratio must lie in (0, 1), got {self.ratio}")
        if self.scale < 1:
            raise ValueError(f"scale must be at least 1, got {self.scale}")
        if self.scale * self.ratio >= 1:
            raise ValueError(f"scale * ratio = {self.scale * self.ratio} must be < 1")

    def sin(self, i: int) -> float:
        if i < -1:
            raise ValueError("width index must be >= -1")
        if i == -1:
            return 1.0
        return self.scale * self.ratio ** (i + 1)

    def angle(self, i: int) -> float:
        return width(self, i)

    def is_natural(self) -> bool:
        return self.scale == 1.0


def width(widths: WidthSet, i: int) -> float:
    if i == -1:
        return np.pi / 2
    s = widths.sin(i)
    if s > 1:
        raise ValueError(f"sin of width {i} would be {s} > 1")
    return float(np.arcsin(s))


@dataclass(frozen=True)
class DnpVerdict:
    holds: bool
    witness: int | None
    ratios: tuple


def check_dnp(big: WidthSet, small: WidthSet, max_dim: int = 8) -> DnpVerdict:
    """Algebraic test sin(beta_k) / sin(alpha_{k-1}) <= sqrt(2)/2 for k = 0..max_dim."""
    ratios = tuple(big.sin(k) / small.sin(k - 1) for k in range(max_dim + 1))
    # geometric sets: the ratio is constant from k = 1 on, so a finite prefix decides
    if max_dim >= 2:
        assert abs(ratios[2] - ratios[1]) <= 1e-12 * max(1.0, ratios[1])
    for k, q in enumerate(ratios):
        if q > HALF_SQRT2:
            return DnpVerdict(False, k, ratios)
    return DnpVerdict(True, None, ratios)


def induced_widths(widths: WidthSet, k: int) -> WidthSet:
    """Widths seen on the link of a k-simplex: sin b'_l = sin b_{k+l+1} / sin b_k."""
    return WidthSet(widths.sin(k + 1) / widths.sin(k), 1.0)


def induced_sin(widths: WidthSet, k: int, l: int) -> float:
    """Direct form of the induced width, used as an oracle for ``induced_widths``."""
    return widths.sin(k + l + 1) / widths.sin(k)


# ---- brute force geometry ----------------------------------------------------

def sample_complex(complex_: AllRightComplex, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform samples (dense coordinates) over the top simplices, weighted by area.

    Each k-simplex is an orthant of S^k, so uniform points are normalised
    absolute gaussians, and a simplex is weighted by its orthant volume.
    """
    tops = list(complex_.maximal)
    vol = np.array([2 * pi ** (len(f) / 2) / gamma(len(f) / 2) / 2 ** len(f) for f in tops])
    choice = rng.choice(len(tops), size=count, p=vol / vol.sum())
    X = np.zeros((count, len(complex_.vertices)))
    for t, f in enumerate(tops):
        rows = np.flatnonzero(choice == t)
        if rows.size == 0:
            continue
        cols = [complex_.index[v] for v in complex_.ordered(f)]
        g = np.abs(rng.normal(size=(rows.size, len(cols))))
        X[np.ix_(rows, cols)] = g / np.linalg.norm(g, axis=1, keepdims=True)
    return X


def neighborhood_mask(X: np.ndarray, simplex, complex_: AllRightComplex, sin_width: float) -> np.ndarray:
    """Closed spherical neighborhood of a simplex, decided inside its star."""
    sin_g, inside = star_sin_distance(X, simplex, complex_)
    return inside & (sin_g <= sin_width)


def distance_table(complex_: AllRightComplex, X: np.ndarray) -> dict:
    """sin-distance to every simplex (inf outside its star), for reuse across width sets."""
    table = {}
    for k in range(complex_.dim + 1):
        for s in complex_.simplices(k):
            sin_g, inside = star_sin_distance(X, s, complex_)
            table[s] = np.where(inside, sin_g, np.inf)
    return table


@dataclass
class BruteVerdict:
    passed: bool
    samples: int
    seed: int
    counterexample: dict | None = None


def dnp_brute_check(complex_: AllRightComplex, big: WidthSet, small: WidthSet, samples: int = 10_000,
                    seed: int = 0, X: np.ndarray | None = None, table: dict | None = None) -> BruteVerdict:
    """Sampled check that beta-neighborhoods of distinct k-simplices meet only near the (k-1)-skeleton.

    ``table`` (from ``distance_table`` on the same X) skips recomputing distances.
    """
    if X is None:
        X = sample_complex(complex_, samples, np.random.default_rng(seed))
    if table is None:
        table = distance_table(complex_, X)
    lower = np.zeros(len(X), dtype=bool)
    for k in range(complex_.dim + 1):
        simplices = complex_.simplices(k)
        masks = [table[s] <= big.sin(k) for s in simplices]
        if k > 0:
            for s in complex_.simplices(k - 1):
                lower |= table[s] <= small.sin(k - 1)
        for (a, ma), (b, mb) in combinations(zip(simplices, masks), 2):
            bad = ma & mb & ~lower
            if bad.any():
                i = int(np.flatnonzero(bad)[0])
                return BruteVerdict(False, len(X), seed, {
                    "k": k, "simplices": [sorted(map(str, a)), sorted(map(str, b))],
                    "point": {str(v): float(x) for v, x in zip(complex_.vertices, X[i]) if x > 0}})
    return BruteVerdict(True, len(X), seed)
