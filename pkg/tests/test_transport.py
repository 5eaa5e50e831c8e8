import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from coarse_ricci import (
    build_space,
    contraction_rate,
    entropy,
    euclidean_space,
    graph_generator,
    lazy_kernel,
    ollivier_kappa,
    simple_walk_kernel,
    wasserstein,
    weighted_grid_generator,
)
from coarse_ricci.exceptions import DegenerateDecay, InputError, MeasureMismatch, SamePoint
from coarse_ricci.transport import line_wasserstein, point_mass


def random_measure(rng, n, sparsity=0.0):
    m = rng.uniform(size=n) * (rng.uniform(size=n) >= sparsity)
    if m.sum() == 0:
        m[0] = 1.0
    return m / m.sum()


def lp_oracle(C, a, b):
    """Transportation LP through scipy's HiGHS, as an independent solver."""
    n, m = C.shape
    A_eq = np.vstack([np.kron(np.eye(n), np.ones(m)), np.kron(np.ones(n), np.eye(m))])
    res = linprog(C.ravel(), A_eq=A_eq, b_eq=np.r_[a, b], bounds=(0, None), method="highs")
    return res.fun


def test_identical_measures():
    S = euclidean_space(np.arange(4.0)[:, None] ** 2)
    mu = np.array([0.1, 0.2, 0.3, 0.4])
    for method in ("lp", "line"):
        w, plan = wasserstein(S, mu, mu, method=method)
        assert w == 0.0
        np.testing.assert_allclose(plan.coupling, np.diag(mu), atol=1e-15)


@pytest.mark.parametrize("p", [1, 2])
def test_point_masses(p):
    rng = np.random.default_rng(0)
    S = euclidean_space(rng.normal(size=(6, 2)))
    w, _ = wasserstein(S, point_mass(S, 1), point_mass(S, 4), p=p)
    assert w == pytest.approx(S.dist[1, 4], rel=1e-14)


def test_three_point_line():
    S = euclidean_space([[0.0], [1.0], [2.0]])
    mu, nu = [0.5, 0.5, 0.0], [0.0, 0.5, 0.5]
    assert wasserstein(S, mu, nu, method="lp")[0] == pytest.approx(1.0, abs=1e-15)
    assert wasserstein(S, mu, nu, method="line")[0] == pytest.approx(1.0, abs=1e-15)
    assert line_wasserstein([0, 1, 2], mu, nu) == pytest.approx(1.0, abs=1e-15)


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 12), p=st.sampled_from([1, 2]))
def test_lp_matches_independent_solver(seed, n, p):
    rng = np.random.default_rng(seed)
    S = euclidean_space(rng.normal(size=(n, 2)))
    a, b = random_measure(rng, n, 0.3), random_measure(rng, n, 0.3)
    w, plan = wasserstein(S, a, b, p=p)
    assert w ** p == pytest.approx(lp_oracle(S.dist ** p, a, b), rel=1e-8, abs=1e-12)
    np.testing.assert_allclose(plan.coupling.sum(1), a, atol=1e-10)
    np.testing.assert_allclose(plan.coupling.sum(0), b, atol=1e-10)
    assert plan.dual_gap <= 1e-9


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 10))
def test_metric_properties(seed, n):
    rng = np.random.default_rng(seed)
    S = euclidean_space(rng.normal(size=(n, 3)))
    a, b, c = (random_measure(rng, n) for _ in range(3))
    for p in (1, 2):
        ab = wasserstein(S, a, b, p)[0]
        assert ab == pytest.approx(wasserstein(S, b, a, p)[0], abs=1e-9)
        assert ab <= wasserstein(S, a, c, p)[0] + wasserstein(S, c, b, p)[0] + 1e-9
    assert wasserstein(S, a, b, 1)[0] <= wasserstein(S, a, b, 2)[0] + 1e-12


def test_plan_export():
    S = euclidean_space([[0.0], [1.0]])
    _, plan = wasserstein(S, [1.0, 0.0], [0.0, 1.0])
    assert plan.to_coo() == [(0, 1, 1.0)]


def test_measure_validation():
    S = euclidean_space([[0.0], [1.0]])
    with pytest.raises(MeasureMismatch):
        wasserstein(S, [1.0], [0.5, 0.5])
    with pytest.raises(MeasureMismatch):
        wasserstein(S, [0.6, 0.6], [0.5, 0.5])
    with pytest.raises(MeasureMismatch):
        wasserstein(S, [1.5, -0.5], [0.5, 0.5])
    with pytest.raises(InputError):
        wasserstein(S, [1.0, 0.0], [0.5, 0.5], p=3)
    T = build_space([[0, 1, 1], [1, 0, 1], [1, 1, 0]])
    with pytest.raises(InputError):
        wasserstein(T, [1, 0, 0], [0, 1, 0], method="line")


# -- entropy -----------------------------------------------------------------

def test_entropy_values():
    assert entropy([0.5, 0.5], [0.5, 0.5]) == 0.0
    assert entropy([1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2.0), abs=1e-15)
    assert entropy([0.5, 0.5], [1.0, 0.0]) == math.inf
    with pytest.raises(MeasureMismatch):
        entropy([1.0], [0.5, 0.5])


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 10))
def test_entropy_nonnegative(seed, n):
    rng = np.random.default_rng(seed)
    a, b = random_measure(rng, n), random_measure(rng, n)
    assert entropy(a, b) >= -1e-12
    assert entropy(a, a) == pytest.approx(0.0, abs=1e-12)


# -- Ollivier curvature ----------------------------------------------------------

def test_kappa_two_point(two_point):
    L, S = two_point
    assert ollivier_kappa(S, lazy_kernel(L, 0.5), 0, 1) == pytest.approx(1.0, abs=1e-12)
    assert ollivier_kappa(S, lazy_kernel(L), 0, 1) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(SamePoint):
        ollivier_kappa(S, lazy_kernel(L), 0, 0)


def test_kappa_triangle(triangle):
    L, S = triangle
    K = simple_walk_kernel(L)
    np.testing.assert_allclose(K.sum(1), 1.0)
    for x in range(3):
        for y in range(3):
            if x != y:
                assert ollivier_kappa(S, K, x, y) == pytest.approx(0.5, abs=1e-12)


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 8))
def test_kappa_at_most_one(seed, n):
    rng = np.random.default_rng(seed)
    S = euclidean_space(rng.normal(size=(n, 2)))
    K = np.array([random_measure(rng, n) for _ in range(n)])
    k = ollivier_kappa(S, K, 0, n - 1)
    assert k <= 1.0 + 1e-12
    K[n - 1] = K[0]
    assert ollivier_kappa(S, K, 0, n - 1) == pytest.approx(1.0, abs=1e-12)


# -- contraction --------------------------------------------------------------------

def test_contraction_two_point(two_point):
    L, S = two_point
    rate = contraction_rate(L, S, 0, 1, np.linspace(0.0, 2.0, 11))
    assert rate == pytest.approx(2.0, abs=1e-10)


def test_contraction_ou_interior():
    h = 0.02
    z = np.arange(-5, 5 + h / 2, h)
    L = weighted_grid_generator([z], 0.5 * z ** 2, z[:, None])
    S = euclidean_space(z[:, None])
    x, y = int(np.argmin(np.abs(z + 0.5))), int(np.argmin(np.abs(z - 0.5)))
    rate = contraction_rate(L, S, x, y, np.linspace(0.0, 1.0, 6))
    assert rate == pytest.approx(1.0, rel=0.1)


def test_contraction_flat_torus():
    n = 24  # large enough that diffused mass does not wrap around
    edges = [((i, j), ((i + 1) % n, j)) for i in range(n) for j in range(n)]
    edges += [((i, j), (i, (j + 1) % n)) for i in range(n) for j in range(n)]
    L, S = graph_generator(edges)
    x, y = S.index((0, 0)), S.index((3, 0))
    assert contraction_rate(L, S, x, y, np.linspace(0.0, 1.0, 6)) <= 0.05


def test_contraction_errors(two_point):
    L, S = two_point
    with pytest.raises(InputError):
        contraction_rate(L, S, 0, 1, [0.0, 1.0])
    with pytest.raises(DegenerateDecay):
        contraction_rate(L, S, 0, 1, [0.0, 10.0, 20.0])
