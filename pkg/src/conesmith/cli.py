"""Command line entry point.

Every subcommand prints (or writes) one JSON document that embeds its
configuration, a hash of that configuration and the seed, so that runs with
the same arguments produce byte-identical output.

Exit status: 0 when every asserted property holds, 2 for invalid
parameters, 3 when a numerical check fails.

Complex arguments are JSON files (see ``load_complex``) or built-in names,
also accepted with a ``.json`` suffix when no such file exists:
sphere<m>, circle<k>, susp-circle<k>, cube<n>, cube-boundary<n>, flower<p>,
flower<p>-cycle<q>.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import re
import sys

import numpy as np

from . import acceptance as A
from . import complexes as C
from . import cones as K
from . import curvature as Cu
from . import hyperbolize as H
from . import metrics as M
from . import smoothing as S
from . import widths as W
from .jets import jet_space

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 2, 3


class InvalidConfig(ValueError):
    pass


BUILTINS = [
    (r"sphere(\d+)", lambda m: C.canonical_sphere(int(m))),
    (r"circle(\d+)", lambda k: C.circle_complex(int(k))),
    (r"susp-circle(\d+)", lambda k: C.suspension(C.circle_complex(int(k)))),
    (r"cube(\d+)", lambda n: C.single_cube(int(n))),
    (r"cube-boundary(\d+)", lambda n: C.cube_boundary(int(n))),
    (r"flower(\d+)", lambda p: C.flower(int(p))),
    (r"flower(\d+)-cycle(\d+)", lambda p, q: C.cube_product(C.flower(int(p)), C.cycle_cubes(int(q)))),
]


def resolve_complex(name: str):
    if os.path.exists(name):
        return C.load_complex(name)
    stem = os.path.basename(name)
    if stem.endswith(".json"):
        stem = stem[:-5]
    for pattern, build in BUILTINS:
        m = re.fullmatch(pattern, stem)
        if m:
            try:
                return build(*m.groups())
            except ValueError as exc:
                raise InvalidConfig(str(exc)) from None
    raise InvalidConfig(f"no file {name!r} and no built-in complex called {stem!r}")


def parse_exp(text: str) -> float:
    """Floats, also written e^-13 or exp(7)."""
    t = text.strip()
    m = re.fullmatch(r"e\^\(?([-+0-9.]+)\)?|exp\(([-+0-9.]+)\)", t)
    if m:
        return float(np.exp(float(m.group(1) or m.group(2))))
    return float(t)


def parse_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def cone_params(args, dim: int) -> K.ConeParams:
    if args.d is None:
        raise InvalidConfig("forcing depths --d are required")
    prm = K.ConeParams(args.r, args.xi, args.sigma, args.c, tuple(args.d))
    bad = prm.violations(dim)
    if bad:
        raise InvalidConfig("parameter constraints violated: " + "; ".join(bad))
    return prm


def _config(args) -> dict:
    skip = {"func", "out", "csv"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def emit(args, result: dict) -> None:
    cfg = _config(args)
    blob = json.dumps(cfg, sort_keys=True)
    doc = {"command": args.command, "config": cfg, "config_hash": hashlib.sha256(blob.encode()).hexdigest(),
           "seed": getattr(args, "seed", None), "result": A._plain(result)}
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) for x in row])


# ---- subcommands ---------------------------------------------------------------------

def cmd_check_dnp(args) -> int:
    P = resolve_complex(args.complex)
    if not isinstance(P, C.AllRightComplex):
        raise InvalidConfig("check-dnp needs a simplicial complex")
    try:
        big, small = W.WidthSet(args.sigma, args.c), W.WidthSet(args.sigma, 1.0)
    except ValueError as exc:
        raise InvalidConfig(str(exc)) from None
    alg = W.check_dnp(big, small, max(P.dim, 2))
    geo = W.dnp_brute_check(P, big, small, args.samples, args.seed)
    emit(args, {"algebraic": {"holds": alg.holds, "witness": alg.witness, "ratios": list(alg.ratios)},
                "brute": {"holds": geo.passed, "samples": geo.samples, "counterexample": geo.counterexample},
                "agree": alg.holds == geo.passed})
    return EXIT_OK if alg.holds and geo.passed else EXIT_FAILED


def cmd_regions(args) -> int:
    P = resolve_complex(args.complex)
    prm = cone_params(args, P.dim)
    audit = K.region_audit(P, prm, args.samples, args.seed)
    reg = K.Regions(P, prm)
    emit(args, {"y_ball": reg.y_ball, "top_radius": reg.top_radius,
                "s_widths": [reg.s_width(k) for k in range(P.dim - 1)],
                "r_widths": [reg.r_width(k) for k in range(P.dim - 1)],
                "audit": audit.to_json(), "violations": audit.violations})
    return EXIT_OK if audit.violations == 0 else EXIT_FAILED


OP_ALIASES = {"warp": "W", "twovar": "T", "force": "H"}


def cmd_deform(args) -> int:
    args.op = OP_ALIASES.get(args.op, args.op)
    dim = args.dim
    base = M.hyperbolic_metric(dim - 1) if args.metric == "hyperbolic" else M.cone_metric(dim - 1, args.kappa)
    if args.op == "W":
        g, exact_below = M.warp_force(base, args.r0), args.r0
    elif args.op == "T":
        g, exact_below = M.two_var_deform(base, args.a, args.depth), args.a
    else:
        g, exact_below = M.hyp_force(base, args.r0, args.depth), args.r0 - args.depth
    rng = np.random.default_rng(args.seed)
    s = np.linspace(0.1, args.smax, args.grid)
    n = rng.normal(size=(args.grid, dim))
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    gap_hyp = S.relative_gap(S.metric_at(g, s, n), S.metric_at(M.hyperbolic_metric(dim - 1), s, n))
    gap_base = S.relative_gap(S.metric_at(g, s, n), S.metric_at(base, s, n))
    if args.csv:
        write_csv(args.csv, ["s", "gap_to_hyperbolic", "gap_to_input"], zip(s, gap_hyp, gap_base))
    inner = s <= exact_below
    fixed_outside = args.a + args.depth / 2 if args.op == "T" else args.r0 + 0.5
    outer = s >= fixed_outside
    if args.op == "W":
        ok_inner = M.check_warped(g, exact_below, _as_jet(n[:8]), s[inner])
    else:
        ok_inner = bool((gap_hyp[inner] <= 1e-9).all())
    ok_outer = bool((gap_base[outer] <= 1e-12).all())
    emit(args, {"inner_radius": exact_below, "unchanged_beyond": fixed_outside, "inner_ok": ok_inner,
                "outer_ok": ok_outer, "max_gap_to_hyperbolic_inside": float(gap_hyp[inner].max(initial=0)),
                "max_gap_to_input_outside": float(gap_base[outer].max(initial=0))})
    return EXIT_OK if ok_inner and ok_outer else EXIT_FAILED


def _as_jet(n: np.ndarray):
    return jet_space(n.shape[1], 1).variables(n)


def _dim1_floor(args) -> float:
    return 6 + 2 * args.xi if args.xi is not None else 6.0


def cmd_smooth_cone(args) -> int:
    P = resolve_complex(args.complex)
    if not isinstance(P, C.AllRightComplex):
        raise InvalidConfig("smooth-cone needs a simplicial complex")
    if P.dim == 1:
        if args.d is None or len(args.d) != 1:
            raise InvalidConfig("a circle needs exactly one depth --d")
        d2 = args.d[0]
        floor = _dim1_floor(args)
        if d2 <= floor:
            raise InvalidConfig(f"d2={d2:g} < 6+2xi={floor:g}" if args.xi is not None else f"d2={d2:g} <= 6")
        if not args.r > d2:
            raise InvalidConfig(f"need r > d2, got r={args.r:g}, d2={d2:g}")
        segments = len(P.vertices)
        k = {"literal": segments / 4, "isometric": (segments / 4) ** 2}[args.kappa]
        t = np.linspace(args.tmin, args.r + args.tpad, args.grid)
        mu = S.circle_profile(t, k, args.r, d2)
        Kt = S.circle_curvature(t, k, args.r, d2)
        if args.csv:
            write_csv(args.csv, ["t", "mu", "K"], zip(t, mu, Kt))
        outside = (t <= args.r - d2) | (t >= args.r)
        dev = float(np.abs(Kt[outside] + 1).max())
        emit(args, {"dim": 1, "segments": segments, "kappa": k, "core": args.r - d2, "top_radius": args.r,
                    "max_abs_k_plus_1_outside": dev, "max_abs_k_plus_1": float(np.abs(Kt + 1).max()),
                    "k_max": float(Kt.max())})
        return EXIT_OK if dev < 1e-8 else EXIT_FAILED
    if args.d is None:
        args.d = [13.0] * P.dim
    if args.xi is None:
        args.xi = float(P.dim + 1)
    prm = cone_params(args, P.dim)
    G = S.smooth_cone(P, prm)
    rep = S.property_report(G, args.samples, args.seed)
    ov = S.overlap_check(G, args.samples, args.seed)
    emit(args, {"dim": P.dim, "core": G.core, "top_radius": G.top_radius, "properties": vars(rep),
                "overlaps": {"max_relative": ov.max_relative, "count": ov.overlaps}})
    return EXIT_OK if ov.passed() else EXIT_FAILED


def cmd_curvature(args) -> int:
    P = resolve_complex(args.complex)
    if not isinstance(P, C.AllRightComplex):
        raise InvalidConfig("curvature needs a simplicial complex")
    if P.dim == 1:
        raise InvalidConfig("use smooth-cone for circles; the curvature there is a function of t")
    prm = cone_params(args, P.dim)
    G = S.smooth_cone(P, prm)
    rng = np.random.default_rng(args.seed)
    s = rng.uniform(0.5, G.top_radius + 8, args.samples)
    n = S.sample_directions(G.layout, args.samples, rng)
    chart = M.RadialInChart(G, M.polar_chart(s, n))
    rep = Cu.pinch_report(chart, np.zeros((args.samples, P.dim + 1)), args.planes, args.seed, chunk=args.samples)
    k = rep.values
    core = s < G.core
    if args.csv:
        write_csv(args.csv, ["s", "k_min", "k_max"], zip(s, k.min(1), k.max(1)))
    core_dev = float(np.abs(k[core] + 1).max(initial=0))
    emit(args, {"report": rep.to_json(), "core": G.core, "core_points": int(core.sum()), "core_dev": core_dev})
    return EXIT_OK if rep.k_max < 0 and core_dev <= 1e-6 else EXIT_FAILED


def _lattice(args):
    Kc = resolve_complex(args.cubical)
    if not isinstance(Kc, C.CubicalComplex):
        raise InvalidConfig("--cubical must name a cubical complex")
    prm = cone_params(args, None)
    try:
        return H.hyperbolize_lattice(Kc, args.s0, prm.r), prm
    except ValueError as exc:
        raise InvalidConfig(str(exc)) from None


def cmd_hyperbolize(args) -> int:
    lat, prm = _lattice(args)
    counts = H.facet_intersection_counts(lat)
    ok = all(a == b and same for a, b, same in counts.values())
    faces = {lat.base.label(c): {"dim": lat.cube_dim(c), "sphere_link": lat.is_sphere_link(c),
                                 "link_vertices": len(lat.links[c].vertices) if lat.links[c] else 0}
             for c in lat.base.cubes}
    emit(args, {"dim": lat.dim, "s0": lat.s0, "cubes": len(lat.base.cubes), "faces": faces,
                "facet_pattern_ok": ok})
    return EXIT_OK if ok else EXIT_FAILED


def cmd_fiber_check(args) -> int:
    lat, prm = _lattice(args)
    v = H.fiber_check(lat, prm, args.samples, args.seed, args.max_pairs)
    passed = v.passed(literal=not args.outside_shell)
    emit(args, {"verdict": v.to_json(), "passed": passed})
    return EXIT_OK if passed else EXIT_FAILED


def cmd_acceptance(args) -> int:
    numbers = sorted(set(int(x) for x in args.only.split(","))) if args.only else list(A.CRITERIA)
    for i in numbers:
        if i not in A.CRITERIA:
            raise InvalidConfig(f"no criterion {i}")
    results = A.run_all(numbers, args.workers)
    for r in results:
        print(r.line(), file=sys.stderr)
    emit(args, {"criteria": [r.to_json() for r in results], "passed": all(r.passed for r in results)})
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


# ---- parser ----------------------------------------------------------------------------

def _cone_args(p, complex_flag="--complex"):
    if complex_flag:
        p.add_argument(complex_flag, required=True)
    p.add_argument("--r", type=float, default=27.0)
    p.add_argument("--xi", type=float, default=3.0)
    p.add_argument("--sigma", type=parse_exp, default=float(np.exp(-20)))
    p.add_argument("--c", type=parse_exp, default=float(np.exp(7)))
    p.add_argument("--d", type=parse_list, default=[13.0, 13.0], help="forcing depths d2,d3,...")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="conesmith", description="Smoothed hyperbolic cones over all-right spheres.")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="write the JSON verdict here instead of stdout")
        return p

    p = add("check-dnp", cmd_check_dnp, "algebraic and sampled disjoint neighborhood property")
    p.add_argument("--complex", required=True)
    p.add_argument("--sigma", type=parse_exp, required=True)
    p.add_argument("--c", type=parse_exp, default=1.0)
    p.add_argument("--samples", type=int, default=10_000)

    p = add("regions", cmd_regions, "audit the Y regions of a cone")
    _cone_args(p)
    p.add_argument("--samples", type=int, default=10_000)

    p = add("deform", cmd_deform, "apply W, T or H to a radial metric and check its two ends")
    p.add_argument("--op", choices=["W", "T", "H", "warp", "twovar", "force"], required=True)
    p.add_argument("--metric", choices=["hyperbolic", "cone"], default="cone")
    p.add_argument("--kappa", type=float, default=1.5625, help="warp factor of the cone metric")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--r0", type=float, default=12.0)
    p.add_argument("--a", type=float, default=8.0)
    p.add_argument("--depth", type=float, default=8.0)
    p.add_argument("--smax", type=float, default=30.0)
    p.add_argument("--grid", type=int, default=201)
    p.add_argument("--csv")

    p = add("smooth-cone", cmd_smooth_cone, "smooth the cone over a complex")
    p.add_argument("--complex", required=True)
    p.add_argument("--r", type=float, default=27.0)
    p.add_argument("--xi", type=float, default=None,
                   help="for circles, enforce d2 > 6+2xi; without it the floor is 6")
    p.add_argument("--sigma", type=parse_exp, default=float(np.exp(-20)))
    p.add_argument("--c", type=parse_exp, default=float(np.exp(7)))
    p.add_argument("--d", type=parse_list, default=None)
    p.add_argument("--kappa", choices=["literal", "isometric"], default="literal")
    p.add_argument("--grid", type=int, default=401)
    p.add_argument("--tmin", type=float, default=0.05)
    p.add_argument("--tpad", type=float, default=10.0)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--csv")

    p = add("curvature", cmd_curvature, "pinch report of a smoothed cone")
    _cone_args(p)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--planes", type=int, default=6)
    p.add_argument("--csv")

    p = add("hyperbolize", cmd_hyperbolize, "face lattice data of a hyperbolized cubical complex")
    p.add_argument("--cubical", required=True)
    _cone_args(p, None)
    p.add_argument("--s0", type=float, required=True)

    p = add("fiber-check", cmd_fiber_check, "dual evaluation of fiber metrics on Z overlaps")
    p.add_argument("--cubical", required=True)
    _cone_args(p, None)
    p.add_argument("--s0", type=float, default=200.0)
    p.add_argument("--samples", type=int, default=400)
    p.add_argument("--max-pairs", type=int, default=None)
    p.add_argument("--outside-shell", action="store_true",
                   help="judge only points outside the forcing shell of the smaller face")

    p = add("acceptance", cmd_acceptance, "run the acceptance suite")
    p.add_argument("--only", help="comma separated criterion numbers")
    p.add_argument("--workers", type=int, default=None, help="defaults to CONESMITH_THREADS or the CPU count")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except InvalidConfig as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
