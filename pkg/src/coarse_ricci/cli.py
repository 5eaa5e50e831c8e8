"""Command-line front end.

Exit codes: 0 success, 2 input error, 3 numerical or feasibility error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import geometry as geo
from . import io as rio
from .exceptions import CutLocusPair, InputError, NumericalError
from .gamma import (
    CoarseRicciReport,
    cd_estimate,
    coarse_ricci_matrix,
    distcarre_check,
    log_sobolev_audit,
    make_generator,
)
from .operators import (
    KernelConfig,
    default_bandwidth,
    distance_kernel_generator,
    graph_components,
    invariant_measure,
    pointcloud_generator,
    semigroup_matrix,
    weighted_grid_generator,
)
from .space import build_space
from .transport import lazy_kernel, ollivier_kappa, simple_walk_kernel, wasserstein

ALL_PAIRS_LIMIT = 300


@dataclass
class RunConfig:
    command: str
    graph: Optional[str] = None
    cloud: Optional[str] = None
    matrix: Optional[str] = None
    geometry: Optional[str] = None
    generator: Optional[str] = None
    sample: Optional[str] = None
    kernel: dict = field(default_factory=dict)
    pairs: str = "all"
    seed: int = 0
    output: Optional[str] = None
    format: str = "json"
    threads: int = 1
    tol: Optional[float] = None
    options: dict = field(default_factory=dict)


class Problem:
    """Resolved input: generator, space and, for oracles, the geometry and samples."""

    def __init__(self, L, space, geom=None, points=None):
        self.L = L
        self.space = space
        self.geom = geom
        self.points = points


# -- input handling ----------------------------------------------------------

def _kernel_config(args, space_for_default=None) -> KernelConfig:
    t = args.bandwidth
    if t is None:
        t = default_bandwidth(space_for_default)
    return KernelConfig(t, args.normalization, args.cutoff)


def _parse_sample(text, geom):
    if text is None:
        text = "fibonacci:500" if isinstance(geom, geo.Sphere) and geom.dim == 2 else "grid:" + str(
            21 ** geom.dim if geom.dim <= 2 else 9 ** geom.dim)
    parts = text.split(":")
    kind = {"fibonacci": "fibonacci-sphere", "grid": "uniform-grid"}.get(parts[0], parts[0])
    try:
        N = int(parts[1])
    except (IndexError, ValueError):
        raise InputError(f"cannot parse sample spec {text!r}") from None
    seed = None
    for p in parts[2:]:
        if p.startswith("seed="):
            seed = int(p[5:])
    return kind, N, seed


def _discrete_for_geometry(geom, sampler, points, space, args):
    if sampler == "uniform-grid" and not isinstance(geom, geo.Sphere):
        axes = [np.unique(points[:, k]) for k in range(geom.dim)]
        rho = np.array([geom.rho(p) for p in points])
        grad = np.array([geom.grad_rho(p) for p in points])
        return weighted_grid_generator(axes, rho, grad, periodic=isinstance(geom, geo.FlatTorus))
    cfg = _kernel_config(args, space)
    L, _ = pointcloud_generator(points, cfg)
    return L


def load_problem(args, config: RunConfig, need_generator=True, allow_geometry=True):
    sources = [s for s in ("graph", "cloud", "matrix", "geometry") if getattr(args, s, None)]
    if len(sources) != 1:
        raise InputError("give exactly one input: --graph, --cloud, --matrix or --geometry")
    src = sources[0]
    if src == "graph":
        edges = rio.read_edge_list(args.graph)
        if not edges:
            raise InputError("need ≥ 2 points")
        mode = "weighted" if args.weighted_distances else "hop"
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            comps = graph_components(edges, distance_mode=mode)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        if not comps:
            raise InputError("need ≥ 2 points")
        return [Problem(L, S) for L, S in comps]
    if src == "cloud":
        X = rio.read_point_cloud_csv(args.cloud)
        if X.shape[0] < 2:
            raise InputError("need ≥ 2 points")
        from .space import euclidean_space
        cfg = _kernel_config(args, euclidean_space(X))
        config.kernel = asdict(cfg)
        L, S = pointcloud_generator(X, cfg)
        return [Problem(L, S, points=X)]
    if src == "matrix":
        D = rio.read_matrix_csv(args.matrix)
        if D.shape[0] < 2:
            raise InputError("need ≥ 2 points")
        S = build_space(D, symmetric=not args.asymmetric)
        if args.generator:
            L = make_generator(rio.read_generator(args.generator, S.n), args.generator_kind)
        elif need_generator:
            cfg = _kernel_config(args, S)
            config.kernel = asdict(cfg)
            L = distance_kernel_generator(S, cfg)
        else:
            L = None
        return [Problem(L, S)]
    if not allow_geometry:
        raise InputError("this command does not take --geometry")
    geom = geo.parse_geometry(args.geometry)
    sampler, N, seed = _parse_sample(args.sample, geom)
    if sampler == "random" and seed is None:
        seed = args.seed
    config.sample = f"{sampler}:{N}" + (f":seed={seed}" if seed is not None else "")
    X, S = geo.discretize(geom, sampler, N, seed)
    L = None
    if need_generator or getattr(args, "discrete", False):
        L = _discrete_for_geometry(geom, sampler, X, S, args)
        if L.kind == "kernel-laplacian":
            config.kernel = asdict(_kernel_config(args, S))
    return [Problem(L, S, geom, X)]


def select_pairs(spec: str, problem: Problem, seed: int):
    S = problem.space
    n = S.n
    excl = problem.L.excluded if problem.L is not None else np.zeros(n, dtype=bool)
    parts = spec.split(":")
    if parts[0] == "all":
        if n > ALL_PAIRS_LIMIT:
            raise InputError(f"pair filter 'all' is limited to n <= {ALL_PAIRS_LIMIT} points "
                             f"(got {n}); use random:k or maxdist:r")
        return [(x, y) for x in range(n) for y in range(n) if x != y and not excl[x]]
    if parts[0] == "random":
        try:
            k = int(parts[1])
        except (IndexError, ValueError):
            raise InputError(f"cannot parse pair filter {spec!r}") from None
        for p in parts[2:]:
            if p.startswith("seed="):
                seed = int(p[5:])
        xs = np.flatnonzero(~excl)
        total = xs.size * (n - 1)
        rng = np.random.default_rng(seed)
        picks = rng.choice(total, size=min(k, total), replace=False)
        out = []
        for q in np.sort(picks):
            x = xs[q // (n - 1)]
            y = q % (n - 1)
            y = y + 1 if y >= x else y
            out.append((int(x), int(y)))
        return out
    if parts[0] == "maxdist":
        try:
            r = float(parts[1])
        except (IndexError, ValueError):
            raise InputError(f"cannot parse pair filter {spec!r}") from None
        xs, ys = np.nonzero((S.dist <= r) & ~np.eye(n, dtype=bool) & ~excl[:, None])
        return list(zip(xs.tolist(), ys.tolist()))
    raise InputError(f"unknown pair filter {spec!r}")


# -- output ------------------------------------------------------------------

def _label(space, i):
    p = space.points[i]
    return p if isinstance(p, (str, int)) else str(p)


def emit(args, config: RunConfig, columns, rows, extra=None):
    meta = {"format_version": rio.FORMAT_VERSION, "config": asdict(config)}
    if extra:
        meta.update(extra)
    if args.output:
        if args.format == "csv":
            rio.dump_csv(args.output, rows, columns, meta)
        else:
            payload = dict(meta)
            payload["rows"] = rows
            rio.dump_json(args.output, payload)
    if getattr(args, "emit_plot_data", None):
        keys = [c for c in ("x", "y", "point") if c in columns]
        tidy = []
        for k, r in enumerate(rows):
            for c in columns:
                if c not in keys and isinstance(r[c], (int, float)):
                    row = {"observation": k, "variable": c, "value": float(r[c])}
                    row.update({key: r[key] for key in keys})
                    tidy.append(row)
        rio.dump_csv(args.emit_plot_data, tidy, ["observation", *keys, "variable", "value"], meta)


# -- commands ----------------------------------------------------------------

def cmd_ric(args, config):
    analytic = bool(args.geometry) and not args.discrete
    problems = load_problem(args, config, need_generator=not analytic)
    rows, cut = [], []
    for pb in problems:
        pairs = select_pairs(args.pairs, pb, args.seed)
        if analytic:
            rep = geo.analytic_coarse_ricci_matrix(pb.geom, pb.points, pairs,
                                                   weighted=args.weighted or None)
        else:
            rep = coarse_ricci_matrix(pb.L, pb.space, pairs, symmetrize=args.symmetrize,
                                      workers=args.threads)
        for p in rep.pairs:
            rows.append({"x": _label(pb.space, p.x), "y": _label(pb.space, p.y),
                         "d": p.d, "ric": p.ric, "ratio": p.ratio})
        cut += [[_label(pb.space, x), _label(pb.space, y)] for x, y in rep.cut_pairs]
    k_est = min(r["ratio"] for r in rows)
    if args.output:
        if args.format == "csv":
            emit(args, config, ["x", "y", "d", "ric", "ratio"], rows,
                 {"K_est": k_est, "cut_pairs": cut})
        else:
            rio.dump_json(args.output, {
                "format_version": rio.FORMAT_VERSION, "config": asdict(config),
                "pairs": rows, "K_est": k_est, "cut_pairs": cut})
    if args.emit_plot_data:
        saved, args.output = args.output, None
        emit(args, config, ["x", "y", "d", "ric", "ratio"], rows)
        args.output = saved
    print(f"K_est={k_est!r} pairs={len(rows)} cut={len(cut)}")
    return 0


def cmd_recover(args, config):
    if not args.geometry:
        raise InputError("recover needs --geometry")
    geom = geo.parse_geometry(args.geometry)
    tol = 1e-5 if args.tol is None else args.tol
    config.tol = tol
    rng = np.random.default_rng(args.seed)
    weighted = bool(args.weighted)
    form = geom.bakry_emery_form if weighted else geom.ricci_form
    rows = []
    for _ in range(args.probes):
        x = geom.random_point(rng)
        V = geom.random_tangent(x, rng, rng.uniform(0.5, 2.0))
        try:
            rec = geo.ricci_recovery(geom, x, V, h=args.step, method=args.method, weighted=weighted)
        except CutLocusPair as exc:
            raise NumericalError(str(exc)) from None
        exact = form(x, V)
        rows.append({"x": x.tolist(), "V": V.tolist(), "recovered": rec, "exact": exact,
                     "abs_error": abs(rec - exact)})
    emit(args, config, ["x", "V", "recovered", "exact", "abs_error"], rows)
    worst = max(r["abs_error"] for r in rows)
    print(f"probes={len(rows)} max_abs_error={worst!r} tol={tol!r}")
    if worst > tol:
        print(f"error: recovery error {worst:.3e} exceeds tolerance {tol:.3e}", file=sys.stderr)
        return 3
    return 0


def _step_kernel(args, L):
    if args.step == "semigroup":
        return semigroup_matrix(L, args.step_time)
    if args.step == "lazy":
        return lazy_kernel(L, args.alpha)
    if args.step == "walk":
        return simple_walk_kernel(L)
    raise InputError(f"unknown step convention {args.step!r}")


def cmd_compare(args, config):
    problems = load_problem(args, config)
    rows = []
    for pb in problems:
        pairs = select_pairs(args.pairs, pb, args.seed)
        rep = coarse_ricci_matrix(pb.L, pb.space, pairs, workers=args.threads)
        K = _step_kernel(args, pb.L)
        for p in rep.pairs:
            rows.append({"x": _label(pb.space, p.x), "y": _label(pb.space, p.y), "d": p.d,
                         "ric": p.ric, "ratio": p.ratio,
                         "kappa": ollivier_kappa(pb.space, K, p.x, p.y)})
    ratio = np.array([r["ratio"] for r in rows])
    kappa = np.array([r["kappa"] for r in rows])
    corr = None
    if ratio.size > 1 and np.ptp(ratio) > 1e-12 and np.ptp(kappa) > 1e-12:
        corr = float(np.corrcoef(ratio, kappa)[0, 1])
    emit(args, config, ["x", "y", "d", "ric", "ratio", "kappa"], rows, {"correlation": corr})
    print(f"pairs={len(rows)} corr={corr!r}")
    return 0


def cmd_audit(args, config):
    problems = load_problem(args, config, allow_geometry=False)
    if len(problems) != 1:
        raise InputError("audit needs a connected input")
    pb = problems[0]
    L = pb.L
    if not L.is_markov:
        raise InputError("audit needs a Markov generator")
    st = invariant_measure(L)
    if args.K is not None:
        K, source = args.K, "given"
    else:
        ks = [cd_estimate(L, x).k for x in np.flatnonzero(~L.excluded)]
        K, source = min(ks), "cd_estimate"
        if not K > 0:
            raise NumericalError(f"no positive curvature bound (min k = {K})")
    audit = log_sobolev_audit(L, st.measure, K, args.trials, args.seed)
    pairs = select_pairs(args.pairs, pb, args.seed)
    dc = distcarre_check(L, pb.space, pairs)
    rows = [{"x": _label(pb.space, x), "y": _label(pb.space, y), "ratio": r,
             "flag": "<1" if r < 1.0 else ">=1"} for (x, y), r in dc]
    extra = {"K": K, "K_source": source, "trials": audit.trials,
             "violations": audit.n_violations, "reversible": st.reversible,
             "max_lhs_minus_rhs": float(np.max(audit.lhs - audit.rhs))}
    emit(args, config, ["x", "y", "ratio", "flag"], rows, extra)
    below = sum(r["flag"] == "<1" for r in rows)
    print(f"K={K!r} trials={audit.trials} violations={audit.n_violations} distcarre_below_1={below}")
    for r in rows:
        print(f"{r['x']} {r['y']} {r['ratio']!r} {r['flag']}")
    return 0


def cmd_transport(args, config):
    problems = load_problem(args, config, need_generator=False, allow_geometry=False)
    if len(problems) != 1:
        raise InputError("transport needs a connected input")
    S = problems[0].space
    mu = rio.read_measure_csv(args.mu, S)
    nu = rio.read_measure_csv(args.nu, S)
    w, plan = wasserstein(S, mu, nu, args.p, args.method)
    if args.output:
        rio.write_plan(args.output, plan)
    gap = plan.dual_gap
    print(f"W{args.p}={w!r} dual_gap={gap!r}")
    return 0


def cmd_cd(args, config):
    problems = load_problem(args, config)
    N = math.inf if args.N in ("inf", "infinity") else float(args.N)
    rows = []
    for pb in problems:
        for x in np.flatnonzero(~pb.L.excluded):
            rows.append({"point": _label(pb.space, int(x)), "k": cd_estimate(pb.L, int(x), N).k})
    kmin = min(r["k"] for r in rows)
    emit(args, config, ["point", "k"], rows, {"k_min": kmin, "N": N})
    print(f"k_min={kmin!r} N={N!r} points={len(rows)}")
    return 0


COMMANDS = {"ric": cmd_ric, "recover": cmd_recover, "compare": cmd_compare,
            "audit": cmd_audit, "transport": cmd_transport, "cd": cmd_cd}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("-o", "--output", default=None, help="report file")

    inputs = argparse.ArgumentParser(add_help=False)
    inputs.add_argument("--graph", help="edge list 'u v [w]'")
    inputs.add_argument("--cloud", help="point-cloud CSV")
    inputs.add_argument("--matrix", help="distance-matrix CSV")
    inputs.add_argument("--geometry", help="sphere:n:R, euclidean:n, torus:n:p1,p2, ou:n")
    inputs.add_argument("--generator", help="generator CSV or 'i j value' file (with --matrix)")
    inputs.add_argument("--generator-kind", default="custom",
                        choices=("markov-generator", "grid-laplacian", "kernel-laplacian", "custom"))
    inputs.add_argument("--sample", help="fibonacci:N, grid:N or random:N[:seed=s]")
    inputs.add_argument("--weighted-distances", action="store_true",
                        help="graph distances use edge weights as lengths")
    inputs.add_argument("--asymmetric", action="store_true", help="allow asymmetric distances")
    inputs.add_argument("--bandwidth", type=float, help="kernel bandwidth t")
    inputs.add_argument("--normalization", default="laplace-beltrami",
                        choices=("laplace-beltrami", "fokker-planck"))
    inputs.add_argument("--cutoff", type=float)
    inputs.add_argument("--discrete", action="store_true",
                        help="with --geometry, discretize instead of using closed forms")
    inputs.add_argument("--pairs", default="all", help="all, random:k[:seed=s] or maxdist:r")

    p = argparse.ArgumentParser(prog="coarse-ricci", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ric", parents=[common, inputs], help="coarse Ricci curvature report")
    s.add_argument("--symmetrize", action="store_true")
    s.add_argument("--weighted", action="store_true", help="weighted Laplacian for ou geometries")
    s.add_argument("--emit-plot-data", metavar="PATH")

    s = sub.add_parser("recover", parents=[common, inputs], help="Ricci recovery along curves")
    s.add_argument("--probes", type=int, default=20)
    s.add_argument("--step", type=float, default=None)
    s.add_argument("--method", choices=("richardson", "finite-difference"), default="richardson")
    s.add_argument("--weighted", action="store_true")

    s = sub.add_parser("compare", parents=[common, inputs], help="coarse Ricci vs Ollivier curvature")
    s.add_argument("--step", choices=("semigroup", "lazy", "walk"), default="semigroup")
    s.add_argument("--step-time", type=float, default=1.0)
    s.add_argument("--alpha", type=float, default=0.5, help="holding probability of the lazy step")
    s.add_argument("--emit-plot-data", metavar="PATH")

    s = sub.add_parser("audit", parents=[common, inputs], help="log-Sobolev and distcarre audit")
    s.add_argument("--K", type=float, default=None)
    s.add_argument("--trials", type=int, default=10_000)

    s = sub.add_parser("transport", parents=[common, inputs], help="Wasserstein distance")
    s.add_argument("--mu", required=True)
    s.add_argument("--nu", required=True)
    s.add_argument("--p", type=int, choices=(1, 2), default=1)
    s.add_argument("--method", choices=("auto", "lp", "line"), default="auto")

    s = sub.add_parser("cd", parents=[common, inputs], help="pointwise CD(k, N) constants")
    s.add_argument("--N", default="inf")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) if exc.code in (0, None) else 2
    config = RunConfig(
        command=args.command, graph=args.graph, cloud=args.cloud, matrix=args.matrix,
        geometry=args.geometry, generator=args.generator, sample=args.sample,
        pairs=args.pairs, seed=args.seed, output=args.output, format=args.format,
        threads=args.threads, tol=args.tol,
        options={k: v for k, v in vars(args).items()
                 if k in ("symmetrize", "weighted", "probes", "step", "method", "step_time",
                          "alpha", "K", "trials", "p", "N", "normalization", "discrete")},
    )
    try:
        return COMMANDS[args.command](args, config)
    except (InputError, FileNotFoundError, IsADirectoryError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def main_exit():
    sys.exit(main())
