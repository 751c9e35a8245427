"""Batched multivariate truncated Taylor series.

A jet holds the Taylor coefficients of a (tensor valued) function of a few
chart variables around a batch of base points.  Coefficients are stored as
an array of shape ``(batch, n_monomials, *trailing)``; trailing dimensions
broadcast like ordinary numpy arrays.  Orders up to 3 are supported, which is
what the curvature kernel needs (metric to second order, link coordinates to
third order so that their differentials are known to second order).
"""
from __future__ import annotations

from functools import lru_cache
from itertools import product
from math import factorial

import numpy as np

MAX_ORDER = 3


class JetSpace:
    """Monomial bookkeeping for jets in ``nvars`` variables up to ``order``."""

    def __init__(self, nvars: int, order: int):
        if not 0 <= order <= MAX_ORDER:
            raise ValueError(f"jet order must be in [0, {MAX_ORDER}], got {order}")
        self.nvars = nvars
        self.order = order
        monos = [m for m in product(range(order + 1), repeat=nvars) if sum(m) <= order]
        monos.sort(key=lambda m: (sum(m), tuple(-e for e in m)))
        self.monomials = monos
        self.index = {m: i for i, m in enumerate(monos)}
        self.size = len(monos)
        self.degree = np.array([sum(m) for m in monos])

        pi, pj, pk = [], [], []
        for i, a in enumerate(monos):
            for j, b in enumerate(monos):
                c = tuple(x + y for x, y in zip(a, b))
                if sum(c) <= order:
                    pi.append(i)
                    pj.append(j)
                    pk.append(self.index[c])
        order_idx = np.argsort(pk, kind="stable")
        self._pi = np.array(pi)[order_idx]
        self._pj = np.array(pj)[order_idx]
        pk = np.array(pk)[order_idx]
        self._starts = np.searchsorted(pk, np.arange(self.size))

    def unit(self, var: int) -> int:
        e = [0] * self.nvars
        e[var] = 1
        return self.index[tuple(e)]

    def second(self, a: int, b: int) -> tuple[int, float]:
        """Index and factor turning a coefficient into the mixed partial."""
        e = [0] * self.nvars
        e[a] += 1
        e[b] += 1
        return self.index[tuple(e)], (2.0 if a == b else 1.0)

    def variables(self, base) -> "Jet":
        """Jet of the coordinate functions ``base + x`` with trailing shape (nvars,)."""
        base = np.asarray(base, dtype=float)
        coef = np.zeros((base.shape[0], self.size, self.nvars))
        coef[:, 0, :] = base
        for v in range(self.nvars):
            coef[:, self.unit(v), v] = 1.0
        return Jet(self, coef)

    def constant(self, value) -> "Jet":
        value = np.asarray(value, dtype=float)
        coef = np.zeros((value.shape[0], self.size) + value.shape[1:])
        coef[:, 0] = value
        return Jet(self, coef)


@lru_cache(maxsize=None)
def jet_space(nvars: int, order: int) -> JetSpace:
    return JetSpace(nvars, order)


@lru_cache(maxsize=None)
def _grad_table(nvars: int, order: int):
    """Source indices and factors mapping a jet to its partials (one order less)."""
    hi = jet_space(nvars, order)
    lo = jet_space(nvars, order - 1)
    src = np.zeros((nvars, lo.size), dtype=int)
    fac = np.zeros((nvars, lo.size))
    for v in range(nvars):
        for i, m in enumerate(lo.monomials):
            up = list(m)
            up[v] += 1
            src[v, i] = hi.index[tuple(up)]
            fac[v, i] = up[v]
    return src, fac


@lru_cache(maxsize=None)
def _truncate_table(nvars: int, order: int, new_order: int):
    hi = jet_space(nvars, order)
    lo = jet_space(nvars, new_order)
    return np.array([hi.index[m] for m in lo.monomials])


def _pad(coef: np.ndarray, ntrail: int) -> np.ndarray:
    extra = ntrail - (coef.ndim - 2)
    if extra <= 0:
        return coef
    return coef.reshape(coef.shape[:2] + (1,) * extra + coef.shape[2:])


def _lift(arr, ntrail_hint: int = 0) -> np.ndarray:
    """Reshape a per-point array (batch, *trailing) to broadcast against coefficients."""
    arr = np.asarray(arr, dtype=float)
    if arr.ndim == 0:
        return arr
    return arr[:, None, ...]


class Jet:
    __array_priority__ = 100

    def __init__(self, space: JetSpace, coef: np.ndarray):
        self.space = space
        self.coef = coef

    # ---- structure -------------------------------------------------------
    @property
    def value(self) -> np.ndarray:
        return self.coef[:, 0]

    @property
    def shape(self):
        return self.coef.shape[2:]

    @property
    def batch(self) -> int:
        return self.coef.shape[0]

    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Jet(self.space, self.coef[(slice(None), slice(None)) + idx])

    def take(self, rows) -> "Jet":
        """Restrict to a subset of the batch."""
        return Jet(self.space, self.coef[rows])

    def sum(self, axis: int) -> "Jet":
        ax = axis + 2 if axis >= 0 else axis
        return Jet(self.space, self.coef.sum(axis=ax))

    def expand(self, axis: int) -> "Jet":
        ax = axis + 2 if axis >= 0 else self.coef.ndim + axis + 1
        return Jet(self.space, np.expand_dims(self.coef, ax))

    def swap(self, a: int, b: int) -> "Jet":
        return Jet(self.space, np.swapaxes(self.coef, a + 2 if a >= 0 else a, b + 2 if b >= 0 else b))

    def truncate(self, order: int) -> "Jet":
        if order == self.space.order:
            return self
        idx = _truncate_table(self.space.nvars, self.space.order, order)
        return Jet(jet_space(self.space.nvars, order), self.coef[:, idx])

    def grad(self) -> "Jet":
        """Partials in each chart variable, stacked on a new last trailing axis."""
        if self.space.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        src, fac = _grad_table(self.space.nvars, self.space.order)
        parts = self.coef[:, src]  # (B, nvars, C_lo, *t)
        fshape = fac.shape + (1,) * (self.coef.ndim - 2)
        parts = parts * fac.reshape(fshape)
        parts = np.moveaxis(parts, 1, -1)
        return Jet(jet_space(self.space.nvars, self.space.order - 1), parts)

    # ---- arithmetic -------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.space is not self.space:
                raise ValueError("jets from different spaces")
            return other
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is not None:
            n = max(self.coef.ndim, o.coef.ndim) - 2
            return Jet(self.space, _pad(self.coef, n) + _pad(o.coef, n))
        coef = self.coef.copy() if np.ndim(other) == 0 else np.broadcast_to(
            self.coef, np.broadcast_shapes(self.coef.shape, _lift(other).shape)).copy()
        coef[:, 0] = coef[:, 0] + np.asarray(other, dtype=float)
        return Jet(self.space, coef)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.space, -self.coef)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return Jet(self.space, self.coef * _lift(other))
        n = max(self.coef.ndim, o.coef.ndim) - 2
        a = _pad(self.coef, n)
        b = _pad(o.coef, n)
        sp = self.space
        prod = a[:, sp._pi] * b[:, sp._pj]
        return Jet(sp, np.add.reduceat(prod, sp._starts, axis=1))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return Jet(self.space, self.coef / _lift(other))
        return self * reciprocal(o)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, p):
        if p == 2:
            return self * self
        return power(self, p)


def compose(x: Jet, derivs) -> Jet:
    """Apply a scalar function given its derivatives at the base value."""
    sp = x.space
    delta = Jet(sp, x.coef.copy())
    delta.coef[:, 0] = 0.0
    out = np.zeros_like(x.coef)
    out[:, 0] = derivs[0]
    term = delta
    for p in range(1, sp.order + 1):
        out = out + term.coef * _lift(np.asarray(derivs[p]) / factorial(p))
        if p < sp.order:
            term = term * delta
    return Jet(sp, out)


def _safe(x):
    return np.asarray(x, dtype=float)


def exp(x: Jet) -> Jet:
    e = np.exp(x.value)
    return compose(x, [e, e, e, e])


def log(x: Jet) -> Jet:
    v = x.value
    return compose(x, [np.log(v), 1 / v, -1 / v**2, 2 / v**3])


def reciprocal(x: Jet) -> Jet:
    v = x.value
    return compose(x, [1 / v, -1 / v**2, 2 / v**3, -6 / v**4])


def power(x: Jet, a: float) -> Jet:
    v = x.value
    return compose(x, [v**a, a * v ** (a - 1), a * (a - 1) * v ** (a - 2),
                       a * (a - 1) * (a - 2) * v ** (a - 3)])


def sqrt(x: Jet) -> Jet:
    v = x.value
    r = np.sqrt(v)
    return compose(x, [r, 0.5 / r, -0.25 / (r * v), 0.375 / (r * v * v)])


def sin(x: Jet) -> Jet:
    s, c = np.sin(x.value), np.cos(x.value)
    return compose(x, [s, c, -s, -c])


def cos(x: Jet) -> Jet:
    s, c = np.sin(x.value), np.cos(x.value)
    return compose(x, [c, -s, -c, s])


def sinh(x: Jet) -> Jet:
    s, c = np.sinh(x.value), np.cosh(x.value)
    return compose(x, [s, c, s, c])


def cosh(x: Jet) -> Jet:
    s, c = np.sinh(x.value), np.cosh(x.value)
    return compose(x, [c, s, c, s])


def tanh(x: Jet) -> Jet:
    t = np.tanh(x.value)
    q = 1 - t * t
    return compose(x, [t, q, -2 * t * q, q * (6 * t * t - 2)])


def arcsinh(x: Jet) -> Jet:
    v = x.value
    w = 1 + v * v
    r = 1 / np.sqrt(w)
    return compose(x, [np.arcsinh(v), r, -v * r / w, (2 * v * v - 1) * r / (w * w)])


def arccosh(x: Jet) -> Jet:
    v = x.value
    w = v * v - 1
    r = 1 / np.sqrt(w)
    return compose(x, [np.arccosh(v), r, -v * r / w, (2 * v * v + 1) * r / (w * w)])


def arcsin(x: Jet) -> Jet:
    v = x.value
    w = 1 - v * v
    r = 1 / np.sqrt(w)
    return compose(x, [np.arcsin(v), r, v * r / w, (1 + 2 * v * v) * r / (w * w)])


def arctan(x: Jet) -> Jet:
    v = x.value
    w = 1 + v * v
    return compose(x, [np.arctan(v), 1 / w, -2 * v / w**2, (6 * v * v - 2) / w**3])


def atan2(y: Jet, x: Jet) -> Jet:
    """Angle of (x, y), continuous around each base point."""
    x0, y0 = x.value, y.value
    base = np.arctan2(y0, x0)
    num = y * x0 - x * y0
    den = x * x0 + y * y0
    return arctan(num / den) + base


def flat_exp(x: Jet) -> Jet:
    """exp(-1/x) for x > 0 and 0 otherwise, the building block of the bump."""
    v = _safe(x.value)
    live = v > 1.0 / 700.0
    vs = np.where(live, v, 1.0)
    e = np.where(live, np.exp(-1.0 / vs), 0.0)
    d1 = e / vs**2
    d2 = e * (1 - 2 * vs) / vs**4
    d3 = e * (1 - 6 * vs + 6 * vs * vs) / vs**6
    return compose(x, [e, d1, d2, d3])


def smooth_step(x: Jet) -> Jet:
    """Jet of the smooth step E(x) / (E(x) + E(1 - x))."""
    a = flat_exp(x)
    b = flat_exp(1.0 - x)
    return a / (a + b)


def stack(jets, axis: int = -1) -> Jet:
    sp = jets[0].space
    n = max(j.coef.ndim for j in jets)
    coefs = [np.broadcast_to(_pad(j.coef, n - 2), np.broadcast_shapes(*[_pad(k.coef, n - 2).shape for k in jets]))
             for j in jets]
    ax = axis + 2 if axis >= 0 else axis
    return Jet(sp, np.stack(coefs, axis=ax))


def where(mask, a: Jet, b: Jet) -> Jet:
    """Select per batch row."""
    m = np.asarray(mask).reshape((-1,) + (1,) * (a.coef.ndim - 1))
    return Jet(a.space, np.where(m, a.coef, b.coef))


def zeros(space: JetSpace, batch: int, shape=()) -> Jet:
    return Jet(space, np.zeros((batch, space.size) + tuple(shape)))


def scatter(target: Jet, rows, part: Jet) -> None:
    """Write ``part`` into the given batch rows of ``target`` in place."""
    target.coef[rows] = part.coef


def dot(a: Jet, b: Jet, axis: int = -1) -> Jet:
    return (a * b).sum(axis)


def norm(a: Jet, axis: int = -1) -> Jet:
    return sqrt(dot(a, a, axis))
