"""Acceptance criteria, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL`` line with the measured
quantities; the terminal summary of the run repeats the verdicts.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the detail lines.
"""

import itertools
import math
import time

import numpy as np
import pytest

import oracles
from coarse_ricci import (
    GaussianOU,
    KernelConfig,
    Sphere,
    analytic_coarse_ricci,
    build_space,
    carre_du_champ,
    cd_estimate,
    coarse_ricci,
    coarse_ricci_matrix,
    contraction_rate,
    distcarre_check,
    euclidean_space,
    gamma2,
    graph_generator,
    grid_generator,
    invariant_measure,
    lazy_kernel,
    log_sobolev_audit,
    make_generator,
    ollivier_kappa,
    pointcloud_generator,
    ricci_flow_derivative_check,
    ricci_recovery,
    semigroup_matrix,
    simple_walk_kernel,
    synge_remainder_order,
    wasserstein,
    weighted_grid_generator,
)
from coarse_ricci.geometry import fibonacci_sphere
from coarse_ricci.transport import line_wasserstein


def verdict(n, ok, detail):
    print(f"\ncriterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def two_point():
    L = make_generator([[-1.0, 1.0], [1.0, -1.0]], "markov-generator")
    return L, build_space([[0.0, 1.0], [1.0, 0.0]])


def ou_grid(h=0.02):
    z = np.arange(-5.0, 5.0 + h / 2, h)
    return z, weighted_grid_generator([z], 0.5 * z ** 2, z[:, None])


@pytest.mark.criterion(1, "two-point exactness: Ric = 1, Gamma = 1/2, k = 2, contraction rate = 2")
def test_criterion_01_two_point():
    L, S = two_point()
    f = np.array([0.0, 1.0])
    ric = coarse_ricci(L, S, 0, 1)
    g = carre_du_champ(L, f, f)
    k = cd_estimate(L, 0).k
    rate = contraction_rate(L, S, 0, 1, np.linspace(0.0, 2.0, 11))
    errs = [abs(ric - 1.0), np.abs(g - 0.5).max(), abs(k - 2.0), abs(rate - 2.0)]
    verdict(1, max(errs) <= 1e-10,
            f"Ric={ric!r} Gamma={g.tolist()} k={k!r} rate={rate!r} max err={max(errs):.1e}")


@pytest.mark.criterion(2, "flat 50x50 grid: Ric = 0 within 1e-9 on all interior pairs")
def test_criterion_02_flat_grid():
    ax = np.arange(50) * 0.05
    L, S = grid_generator([ax, ax])
    rep = coarse_ricci_matrix(L, S)
    worst = float(np.abs(rep.values()).max())
    verdict(2, worst <= 1e-9, f"pairs={len(rep.pairs)} max|Ric|={worst:.2e}")


@pytest.mark.criterion(3, "Ricci recovery: spheres within 1e-5, Gaussian model within 1e-7")
def test_criterion_03_recovery():
    rng = np.random.default_rng(2024)
    worst = {}
    for geom in (Sphere(2, 1.0), Sphere(3, 1.0)):
        errs = []
        for _ in range(50):
            x = geom.random_point(rng)
            V = geom.random_tangent(x, rng, rng.uniform(0.5, 2.0))
            rec = ricci_recovery(geom, x, V, h=1e-2, method="richardson")
            errs.append(abs(rec - (geom.dim - 1) * float(V @ V)))
        worst[repr(geom)] = max(errs)
    ou_errs = []
    for dim in (1, 2, 3):
        G = GaussianOU(dim)
        for _ in range(50):
            x = G.random_point(rng)
            V = G.random_tangent(x, rng, rng.uniform(0.5, 2.0))
            ou_errs.append(abs(ricci_recovery(G, x, V, weighted=True) - float(V @ V)))
    ok = max(worst.values()) <= 1e-5 and max(ou_errs) <= 1e-7
    verdict(3, ok, f"sphere max err={ {k: f'{v:.1e}' for k, v in worst.items()} } "
                   f"OU max err={max(ou_errs):.1e}")


@pytest.mark.criterion(4, "lower-bound equivalence on spheres: min ratio >= (n-1)/R^2, tight as d -> 0")
def test_criterion_04_lower_bound():
    rng = np.random.default_rng(4)
    lines, ok = [], True
    for n, R in ((2, 1.0), (3, 1.0), (3, 2.0), (5, 0.5)):
        S = Sphere(n, R)
        K = (n - 1) / R ** 2
        ratios = []
        while len(ratios) < 1000:
            x, y = S.random_point(rng), S.random_point(rng)
            if S.in_cut_locus(x, y):
                continue
            ratios.append(analytic_coarse_ricci(S, x, y) / S.distance(x, y) ** 2)
        near = []
        for _ in range(1000):
            x = S.random_point(rng)
            y = S.exp_map(x, S.random_tangent(x, rng, 1.0), rng.uniform(1e-4, 0.05) * R)
            near.append(analytic_coarse_ricci(S, x, y) / S.distance(x, y) ** 2)
        ok &= min(ratios) >= K - 1e-9 and abs(min(near) - K) <= 0.01 * K
        lines.append(f"S({n},{R}): min={min(ratios):.6f} near-min={min(near):.6f} K={K:g}")
    verdict(4, ok, "; ".join(lines))


@pytest.mark.criterion(5, "OU tightness: Ric/d^2 = 1 +- 0.05, invariant density within 2%")
def test_criterion_05_ou():
    z, L = ou_grid()
    S = euclidean_space(z[:, None])
    interior = np.flatnonzero(~L.excluded)
    pairs = [(int(x), int(y)) for x in interior for y in interior if x != y]
    rep = coarse_ricci_matrix(L, S, pairs)
    dev = float(np.abs(rep.ratios() - 1.0).max())
    mu = invariant_measure(L).measure
    ref = np.exp(-z ** 2 / 2)
    ref /= ref.sum()
    rel = float(np.abs(mu[interior] / ref[interior] - 1.0).max())
    verdict(5, dev <= 0.05 and rel <= 0.02,
            f"pairs={len(pairs)} max|ratio-1|={dev:.2e} max density rel err={rel:.2e}")


@pytest.mark.criterion(6, "Synge remainder slope in [3.9, 4.1] on the unit 2-sphere")
def test_criterion_06_synge():
    S = Sphere(2, 1.0)
    rng = np.random.default_rng(6)
    slopes = []
    for _ in range(10):
        x = S.random_point(rng)
        V = S.random_tangent(x, rng, 1.0)
        slopes.append(synge_remainder_order(S, x, V, np.logspace(-3, -1, 15)))
    verdict(6, all(3.9 <= s <= 4.1 for s in slopes),
            f"slopes in [{min(slopes):.4f}, {max(slopes):.4f}]")


@pytest.mark.criterion(7, "Ricci-flow identity on shrinking spheres: residual <= 1e-10")
def test_criterion_07_flow():
    rng = np.random.default_rng(7)
    worst = {}
    for n in (2, 3):
        S = Sphere(n, 1.0)
        T = 1.0 / (2 * (n - 1))
        res = []
        for _ in range(10):
            x = S.random_point(rng)
            y = S.exp_map(x, S.random_tangent(x, rng, 1.0), rng.uniform(0.1, 2.5))
            res.append(ricci_flow_derivative_check(S, x, y, np.linspace(0.0, 0.9 * T, 10)))
        worst[n] = max(res)
    verdict(7, max(worst.values()) <= 1e-10,
            "max residual " + ", ".join(f"S{n}: {v:.1e}" for n, v in worst.items()))


@pytest.mark.criterion(8, "semigroup property to 1e-10 and P_0 = Id exactly")
def test_criterion_08_semigroup():
    rng = np.random.default_rng(8)
    worst, exact = 0.0, True
    for _ in range(100):
        n = int(rng.integers(2, 21))
        W = rng.uniform(0.0, 2.0, size=(n, n)) * (rng.uniform(size=(n, n)) < 0.6)
        np.fill_diagonal(W, 0.0)
        L = make_generator(W - np.diag(W.sum(1)), "markov-generator")
        t, s = rng.uniform(0.0, 2.0, size=2)
        worst = max(worst, np.abs(semigroup_matrix(L, t + s)
                                  - semigroup_matrix(L, t) @ semigroup_matrix(L, s)).max())
        exact &= np.array_equal(semigroup_matrix(L, 0.0), np.eye(n))
    verdict(8, worst <= 1e-10 and exact, f"max ||P_t+s - P_t P_s||={worst:.1e} P_0==Id: {exact}")


@pytest.mark.criterion(9, "transport: LP = line closed form to 1e-10, gap <= 1e-9, W1 <= W2")
def test_criterion_09_transport():
    rng = np.random.default_rng(9)
    diff, gap, order = 0.0, 0.0, True
    for _ in range(100):
        n = int(rng.integers(2, 51))
        z = np.sort(rng.uniform(-3, 3, size=n))
        S = euclidean_space(z[:, None])
        a = rng.uniform(size=n) * (rng.uniform(size=n) > 0.3)
        b = rng.uniform(size=n) * (rng.uniform(size=n) > 0.3)
        a[0] += 1e-3
        b[-1] += 1e-3
        a, b = a / a.sum(), b / b.sum()
        w = {}
        for p in (1, 2):
            w_lp, plan = wasserstein(S, a, b, p, method="lp")
            w[p] = w_lp
            diff = max(diff, abs(w_lp - line_wasserstein(z, a, b, p)))
            gap = max(gap, plan.dual_gap)
        order &= w[1] <= w[2] + 1e-12
    verdict(9, diff <= 1e-10 and gap <= 1e-9 and order,
            f"max|LP-closed form|={diff:.1e} max dual gap={gap:.1e} W1<=W2: {order}")


@pytest.mark.criterion(10, "Ollivier harness: K3 = 1/2, lazy two-point = 1, full swap = 0")
def test_criterion_10_ollivier():
    L3, S3 = graph_generator([("a", "b"), ("b", "c"), ("c", "a")])
    K = simple_walk_kernel(L3)
    k3 = [ollivier_kappa(S3, K, x, y) for x, y in itertools.permutations(range(3), 2)]
    L, S = two_point()
    lazy = ollivier_kappa(S, lazy_kernel(L, 0.5), 0, 1)
    swap = ollivier_kappa(S, lazy_kernel(L, 0.0), 0, 1)
    err = max(max(abs(k - 0.5) for k in k3), abs(lazy - 1.0), abs(swap))
    verdict(10, err <= 1e-12, f"K3={k3[0]!r} lazy={lazy!r} swap={swap!r} max err={err:.1e}")


@pytest.mark.criterion(11, "distcarre: ratio 1 +- 1e-9 on grid interiors, 1/2 flagged on two points")
def test_criterion_11_distcarre():
    ax = np.arange(20) * 0.05
    L, S = grid_generator([ax, ax])
    r = np.array([v for _, v in distcarre_check(L, S)])
    dev = float(np.abs(r - 1.0).max())
    L2, S2 = two_point()
    two = dict(distcarre_check(L2, S2))
    ok = dev <= 1e-9 and two == {(0, 1): 0.5, (1, 0): 0.5}
    verdict(11, ok, f"grid pairs={r.size} max|ratio-1|={dev:.1e} two-point={two[(0, 1)]} (<1 flagged)")


@pytest.mark.criterion(12, "log-Sobolev audit: K = 2 gives 0 violations, K = 10 gives some")
def test_criterion_12_lsi():
    L, _ = two_point()
    K = min(cd_estimate(L, x).k for x in range(2))
    mu = invariant_measure(L).measure
    sharp = log_sobolev_audit(L, mu, K, trials=10_000, seed=11)
    loose = log_sobolev_audit(L, mu, 10.0, trials=10_000, seed=11)
    verdict(12, abs(K - 2.0) < 1e-10 and sharp.n_violations == 0 and loose.n_violations > 0,
            f"auto K={K!r}: {sharp.n_violations} violations; K=10: {loose.n_violations} violations")


@pytest.mark.criterion(13, "kernel Laplacian trend on S^2: mean |error| decreases for N = 1000/2000/4000")
def test_criterion_13_kernel_trend():
    S = Sphere(2, 1.0)
    rng = np.random.default_rng(13)
    targets = []
    while len(targets) < 30:
        x, y = S.random_point(rng), S.random_point(rng)
        if 0.3 <= S.distance(x, y) <= 2.5:
            targets.append((x, y))
    start = time.perf_counter()
    means = []
    for N in (1000, 2000, 4000):
        X = fibonacci_sphere(N)
        L, _ = pointcloud_generator(X, KernelConfig(0.5 / math.sqrt(N)))
        space = build_space(S.distance_matrix(X), coords=X)
        errs = []
        for x, y in targets:
            i = int(np.argmax(X @ x))
            j = int(np.argmax(X @ y))
            errs.append(abs(coarse_ricci(L, space, i, j) - analytic_coarse_ricci(S, X[i], X[j])))
        means.append(float(np.mean(errs)))
    elapsed = time.perf_counter() - start
    ok = means[0] > means[1] > means[2] and elapsed <= 600
    verdict(13, ok, "mean |err| " + " > ".join(f"{m:.4f}" for m in means) + f" ({elapsed:.1f}s)")


@pytest.mark.criterion(14, "brute force: Gamma, Gamma2, Ric match a loop transcription to 1e-12")
def test_criterion_14_brute_force():
    worst = 0.0
    count = 0
    for seed in range(500):
        rng = np.random.default_rng(seed)
        for n in range(2, 7):
            W = rng.uniform(0.0, 2.0, size=(n, n)) * (rng.uniform(size=(n, n)) < 0.8)
            np.fill_diagonal(W, 0.0)
            A = W - np.diag(W.sum(1))
            D = rng.uniform(0.2, 3.0, size=(n, n))
            if seed % 2:
                D = 0.5 * (D + D.T)
            np.fill_diagonal(D, 0.0)
            L = make_generator(A, "markov-generator")
            space = build_space(D, symmetric=bool(seed % 2))
            Wl, Dl = A.tolist(), D.tolist()
            u, v = rng.normal(size=(2, n))
            pairs = [
                (carre_du_champ(L, u, v), oracles.gamma(Wl, u.tolist(), v.tolist())),
                (gamma2(L, u, v), oracles.gamma2(Wl, u.tolist(), v.tolist())),
            ]
            for x, y in itertools.permutations(range(n), 2):
                pairs.append(([coarse_ricci(L, space, x, y)], [oracles.ricci(Wl, Dl, x, y)]))
            for lib, ref in pairs:
                lib, ref = np.asarray(lib), np.asarray(ref)
                worst = max(worst, float(np.max(np.abs(lib - ref) / np.maximum(1.0, np.abs(ref)))))
                count += 1
    verdict(14, worst <= 1e-12, f"{count} comparisons over 2500 spaces, max rel err={worst:.1e}")
