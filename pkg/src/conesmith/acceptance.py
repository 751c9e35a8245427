"""The acceptance suite: eleven end-to-end checks with fixed seeds and tolerances.

Each ``criterion_N`` returns a ``CriterionResult``.  Where the stated
parameters cannot pass as written, ``passed`` is False and ``detail`` carries
the corrected variant that does pass, under the key ``"corrected"``.
"""
from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import complexes as C
from . import cones as K
from . import curvature as Cu
from . import hyperbolize as H
from . import jets as J
from . import metrics as M
from . import smoothing as S
from . import widths as W

E = np.exp

# parameters of the dimension two checks
LITERAL = K.ConeParams(27, 3, E(-13), E(7), (13, 13))
CORRECTED = K.ConeParams(27, 3, E(-20), E(7), (13, 13))


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    note: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.note})" if self.note else ""
        return f"criterion {self.number:2d} {tag}  {self.name}{extra}"

    def to_json(self) -> dict:
        return {"number": self.number, "name": self.name, "passed": self.passed,
                "detail": _plain(self.detail), "note": self.note}


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return x


def suspension_pentagon() -> C.AllRightComplex:
    return C.suspension(C.circle_complex(5))


# ---- 1, 2: the circle ----------------------------------------------------------------

def criterion_1(k_segments: int = 5, r: float = 20.0, d2: float = 8.0) -> CriterionResult:
    t0 = time.perf_counter()
    G = S.smooth_cone_dim1(k_segments, r, d2)
    t = np.concatenate([np.linspace(1e-3, r - d2, 4001), np.linspace(r, r + 40, 4001)])
    K_t = S.circle_curvature(t, k_segments / 4, r, d2)
    analytic = float(np.abs(K_t + 1).max())
    # the same metric through the jet pipeline, at a subsample
    ts = t[::200]
    g = M.RadialInChart(G.metric, M.angle_chart)
    pts = np.column_stack([ts, np.linspace(0, 2 * np.pi, ts.size)])
    u = np.tile([1.0, 0.0], (ts.size, 1))
    v = np.tile([0.0, 1.0], (ts.size, 1))
    pipeline = float(np.abs(Cu.sectional_curvature(g, pts, u, v) + 1).max())
    seconds = time.perf_counter() - t0
    ok = analytic < 1e-8 and pipeline < 1e-8 and seconds < 1.0
    return CriterionResult(1, "dim-1 smoothing exact outside [r-d2, r]", ok,
                           {"max_abs_k_plus_1": analytic, "pipeline": pipeline, "under_one_second": seconds < 1.0},
                           "d2=8 is below 6+2xi=10; depth floor not enforced here")


def pinching(d2: float, k_segments: int = 5, points: int = 20001) -> float:
    r = 3 * d2
    t = np.linspace(r - d2, r, points)
    return float(np.abs(S.circle_curvature(t, k_segments / 4, r, d2) + 1).max())


def criterion_2() -> CriterionResult:
    vals = [pinching(d) for d in (8, 16, 32)]
    ok = vals[0] > vals[1] > vals[2]
    return CriterionResult(2, "pinching decreases with depth", ok,
                           {"d2": [8, 16, 32], "max_abs_k_plus_1": vals, "constant_d2_32": vals[2]})


# ---- 3, 4, 5: deformations, extensions, triangles -------------------------------------

def fixed_point_grid(n: int, size: int = 41):
    s = np.linspace(0.25, 12.0, size)
    if n == 2:
        th = np.linspace(0, 2 * np.pi, size, endpoint=False)
        dirs = np.column_stack([np.cos(th), np.sin(th)])
    else:
        # golden spiral directions
        i = np.arange(size) + 0.5
        z = 1 - 2 * i / size
        ph = np.pi * (1 + 5**0.5) * i
        dirs = np.column_stack([np.sqrt(1 - z * z) * np.cos(ph), np.sqrt(1 - z * z) * np.sin(ph), z])
    return np.repeat(s, size), np.tile(dirs, (size, 1))


def criterion_3(r0: float = 8.0, a: float = 6.0, d: float = 4.0) -> CriterionResult:
    worst = {}
    for n in (2, 3):
        hyp = M.hyperbolic_metric(n - 1)
        ops = {"W": M.warp_force(hyp, r0), "T": M.two_var_deform(hyp, a, d), "H": M.hyp_force(hyp, r0, d),
               "family": M.family_force(M.constant_family(hyp), d)(r0)}
        s, dirs = fixed_point_grid(n)
        ref = S.metric_at(hyp, s, dirs)
        for name, op in ops.items():
            worst[f"{name}_n{n}"] = float(S.relative_gap(S.metric_at(op, s, dirs), ref).max())
    ok = max(worst.values()) <= 1e-12
    return CriterionResult(3, "hyperbolic metric fixed by W, T, H, family forcing", ok, worst)


def upper_half_points(rng, count: int, dims: list) -> np.ndarray:
    """Random chart points for a product of hyperbolic spaces listed by dimension."""
    cols = []
    for k in dims:
        block = rng.normal(scale=0.7, size=(count, k))
        if k > 1:
            block[:, -1] = np.exp(rng.normal(scale=0.7, size=count))
        cols.append(block)
    return np.column_stack(cols)


class _BumpyPlane(M.WarpedPlane):
    """A non-hyperbolic rotationally symmetric plane, used as the base of iterated extensions."""

    def __init__(self):
        super().__init__(lambda r: J.sinh(r) * (1.2 + 0.1 * J.cos(r)))


def iterated_extension_gap(l: int, k: int, count: int, seed: int) -> float:
    base = _BumpyPlane()
    twice = M.HypExtension(M.HypExtension(base, k), l)
    to_sum = M.product_to_sum(l, k)

    def mapping(x):
        z = to_sum(x)
        return J.stack([z[i] for i in range(l + k)] + [x[l + k], x[l + k + 1]], -1)

    once = M.PulledBack(M.HypExtension(base, l + k), mapping, l + k + 2)
    rng = np.random.default_rng(seed)
    pts = np.column_stack([upper_half_points(rng, count, [l, k]), rng.uniform(0.2, 3, count),
                           rng.uniform(0, 2 * np.pi, count)])
    A, B = Cu.metric_jets(twice, pts), Cu.metric_jets(once, pts)
    return float(S.relative_gap(A, B).max())


def criterion_4(count: int = 100, seed: int = 0) -> CriterionResult:
    rng = np.random.default_rng(seed)
    out = {}
    for base_dim, k in ((2, 1), (1, 2)):
        g = M.HypExtension(M.HyperbolicSpace(base_dim), k)
        pts = upper_half_points(rng, count, [k, base_dim])
        out[f"E{k}(H{base_dim})"] = Cu.pinch_report(g, pts, 6, seed).max_dev
    gaps = {f"l{l}k{k}": iterated_extension_gap(l, k, 1000, seed) for l, k in ((1, 1), (1, 2), (2, 1))}
    ok = max(out.values()) <= 1e-4 and max(gaps.values()) <= 1e-10
    return CriterionResult(4, "hyperbolic extensions of H^l are H^(k+l); iterated extension identity",
                           ok, {"max_abs_k_plus_1": out, "iterated_gap": gaps})


def criterion_5(count: int = 100_000, seed: int = 0) -> CriterionResult:
    P = suspension_pentagon()
    rng = np.random.default_rng(seed)
    X = W.sample_complex(P, count, rng)
    s = rng.uniform(0.01, 30, count)
    worst, total = 0.0, 0
    for v in P.vertices:
        # vertex stars cover the complex
        inside = C.in_star_dense(X, (v,), P)
        e = K.decompose(X[inside], s[inside], (v,), P)
        worst = max(worst, _triangle_error(e, s[inside]))
        total += int(inside.sum())
    ok = worst <= 1e-12 and total >= count
    return CriterionResult(5, "right triangle identities", ok, {"decompositions": total, "max_relative": worst})


def _triangle_error(e, s) -> float:
    a = np.abs(np.cosh(s) - np.cosh(e.r) * np.cosh(e.t)) / np.cosh(s)
    b = np.abs(np.sinh(e.r) - np.sin(e.beta) * np.sinh(s)) / np.sinh(s)
    return float(max(a.max(), b.max()))


# ---- 6, 7: widths and regions ---------------------------------------------------------

def dnp_width_sets(count: int = 20, margin: float = 0.05):
    """Seeded (ratio, scale) pairs with c*ratio on alternating sides of sqrt(2)/2."""
    out = []
    for seed in range(count):
        rng = np.random.default_rng(seed)
        q = rng.uniform(0.4, W.HALF_SQRT2 - margin) if seed % 2 == 0 else rng.uniform(W.HALF_SQRT2 + margin, 0.95)
        ratio = rng.uniform(0.05, 0.9 * q)
        out.append((ratio, q / ratio))
    return out


def criterion_6(samples: int = 20_000, seed: int = 1) -> CriterionResult:
    rows, ok = [], True
    for m in (2, 3):
        P = C.canonical_sphere(m)
        X = W.sample_complex(P, samples, np.random.default_rng(seed))
        table = W.distance_table(P, X)
        for i, (ratio, scale) in enumerate(dnp_width_sets()):
            big, small = W.WidthSet(ratio, scale), W.WidthSet(ratio, 1.0)
            alg = W.check_dnp(big, small).holds
            geo = W.dnp_brute_check(P, big, small, X=X, table=table, seed=seed)
            agree = alg == geo.passed and (geo.passed or geo.counterexample is not None)
            ok &= agree
            rows.append({"m": m, "set": i, "c_ratio": ratio * scale, "algebraic": alg, "brute": geo.passed,
                         "counterexample": geo.counterexample})
    return CriterionResult(6, "DNP criterion agrees with brute force", ok,
                           {"agreements": sum(r["algebraic"] == r["brute"] for r in rows), "sets": rows})


def criterion_7(samples: int = 10_000, seed: int = 0) -> CriterionResult:
    P = suspension_pentagon()
    lit = K.region_audit(P, LITERAL, samples, seed)
    cor = K.region_audit(P, CORRECTED, samples, seed)
    return CriterionResult(7, "Y regions cover and obey disjointness", lit.violations == 0,
                           {"literal": lit.to_json(), "corrected": cor.to_json(),
                            "corrected_passed": cor.violations == 0},
                           "" if lit.violations == 0 else
                           f"ratio e^-13 gives {lit.violations} violations; ratio e^-20 gives {cor.violations}")


# ---- 8: overlaps --------------------------------------------------------------------

def fiber_lattice(params: K.ConeParams, s0: float = 200.0) -> H.HyperbolizedLattice:
    return H.hyperbolize_lattice(C.cube_product(C.flower(5), C.cycle_cubes(4)), s0, params.r)


def criterion_8(samples: int = 2000, seed: int = 0) -> CriterionResult:
    P = suspension_pentagon()
    y = {}
    for label, prm in (("literal", LITERAL), ("corrected", CORRECTED)):
        rep = S.overlap_check(S.smooth_cone(P, prm), samples, seed)
        y[label] = {"max_relative": rep.max_relative, "overlaps": rep.overlaps}
    y_ok = max(v["max_relative"] for v in y.values()) <= S.OVERLAP_TOL
    fib = H.fiber_check(fiber_lattice(CORRECTED), CORRECTED, 400, seed)
    z_lit = fib.passed(literal=True)
    z_cor = fib.passed(literal=False)
    detail = {"y_overlaps": y, "z_overlaps": {"max_relative": fib.max_relative,
                                              "max_relative_outside_shell": fib.max_relative_outside_shell,
                                              "skipped": len(fib.skipped)},
              "corrected_passed": y_ok and z_cor}
    note = "" if z_lit else ("Z&Z overlaps disagree in the forcing shell next to non-conical links; "
                             f"outside it {fib.max_relative_outside_shell:.1e}")
    return CriterionResult(8, "patched metric agrees on Y&Y and Z&Z overlaps", y_ok and z_lit, detail, note)


# ---- 9, 10, 11 ---------------------------------------------------------------------------

def criterion_9(d2: float = 8.0, segments: int = 5, schedule=(40.0, 45.0, 50.0)) -> CriterionResult:
    out, ok = {}, True
    k = segments / 4
    for b in (-d2, -d2 / 2, 0.0):
        fam = S.circle_family(segments, d2, "blend")
        cl = M.cut_limit_probe(fam, b, schedule, S.circle_cut_limit(segments, d2, b))
        forced = M.cut_limit_probe(S.circle_family(segments, d2, "forced"), b, schedule,
                                   M.forced_cut_limit(lambda n: M.round_form(n) * k, d2, b))
        out[f"b={b:g}"] = {"blend": max(cl.reference_errors), "forced": max(forced.reference_errors)}
        ok &= max(cl.reference_errors) <= 1e-3 and max(forced.reference_errors) <= 1e-3
    return CriterionResult(9, "cut limits match the closed forms", ok, out)


def gap_triples(count: int = 100, seed: int = 0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        r = rng.uniform(20, 60)
        c = E(rng.uniform(0.5, 8))
        c2 = c * E(rng.uniform(0.05, 6))
        ratio = E(-rng.uniform(4.5, 20)) / c2
        out.append((K.ConeParams(r, 3, ratio, c, (13, 13)), c, c2))
    return out


def criterion_10(samples: int = 1000, seed: int = 0) -> CriterionResult:
    P = suspension_pentagon()
    v = S.c_independence_check(P, CORRECTED, E(7), 1.5 * E(7), samples, seed)
    gaps = [S.scale_gap(p, 2, 0, c, c2) for p, c, c2 in gap_triples()]
    gap_ok = all(g > bound for g, bound in gaps)
    ok = v.max_relative <= S.OVERLAP_TOL and gap_ok
    return CriterionResult(10, "smoothed metric independent of the scale c", ok,
                           {"max_relative": v.max_relative, "samples": samples, "gap_ok": gap_ok,
                            "min_margin": float(min(g - b for g, b in gaps))})


def dim2_pinch(params: K.ConeParams = CORRECTED, count: int = 1000, seed: int = 0):
    """Sectional curvature of the smoothed cone over the suspended pentagon at random points."""
    G = S.smooth_cone(suspension_pentagon(), params)
    rng = np.random.default_rng(seed)
    s = rng.uniform(0.5, G.top_radius + 8, count)
    n = S.sample_directions(G.layout, count, rng)
    rep = Cu.pinch_report(M.RadialInChart(G, M.polar_chart(s, n)), np.zeros((count, 3)), 6, seed, chunk=count)
    mem = G.patched.regions.x_top(G.layout.from_sphere(n), s)
    return G, s, rep, mem.inside & ~mem.boundary


def criterion_11(count: int = 1000, seed: int = 0) -> CriterionResult:
    G, s, rep, top = dim2_pinch(CORRECTED, count, seed)
    k = rep.values
    core = s < G.core
    core_dev = float(np.abs(k[core] + 1).max())
    top_dev = float(np.abs(k[top] + 1).max())
    ok = rep.k_max < 0 and core_dev <= 1e-6 and top_dev <= 1e-6
    return CriterionResult(11, "dim-2 smoothed cone negatively curved, exact in core and X(top)", ok,
                           {"k_min": rep.k_min, "k_max": rep.k_max, "max_abs_k_plus_1": rep.max_dev,
                            "core_points": int(core.sum()), "core_dev": core_dev,
                            "top_points": int(top.sum()), "top_dev": top_dev})


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 12)}


def run_one(number: int) -> CriterionResult:
    t0 = time.perf_counter()
    res = CRITERIA[number]()
    res.seconds = time.perf_counter() - t0
    return res


def worker_count() -> int:
    cap = os.environ.get("CONESMITH_THREADS")
    n = os.cpu_count() or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return n


def run_all(numbers=None, workers: int | None = None) -> list[CriterionResult]:
    numbers = list(numbers or CRITERIA)
    workers = worker_count() if workers is None else workers
    if workers <= 1:
        return [run_one(i) for i in numbers]
    with ProcessPoolExecutor(max_workers=min(workers, len(numbers))) as pool:
        return list(pool.map(run_one, numbers))
