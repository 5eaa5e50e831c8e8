"""Closed-form model geometries and smooth-manifold curvature checks.

Each geometry supplies its distance, exponential and logarithm maps, Ricci
form, and (for the Gaussian model) the log-density weight ``rho``. On top of
these the module evaluates the coarse Ricci curvature in closed form, recovers
the Ricci form from its second derivative along curves, measures the order of
the remainder, and checks the Ricci-flow identity for the integrated Ricci
curvature along geodesics.
"""

from __future__ import annotations

import itertools
import math
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .exceptions import (
    CutLocusPair,
    DimensionMismatch,
    FlowExtinct,
    InputError,
    RemainderBelowNoiseFloor,
    StepTooLarge,
    UnsupportedSampler,
)
from .space import MetricMeasureSpace, build_space

CUT_EPS = 1e-9
NOISE_FLOOR = 1e-14


class SmoothGeometry:
    """Base class. Points and tangent vectors are 1-D numpy arrays."""

    name = "geometry"
    dim: int
    weighted = False  # natural operator is the weighted Laplacian

    # metric
    def distance(self, x, y) -> float:
        raise NotImplementedError

    def distance_matrix(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        n = X.shape[0]
        D = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                D[i, j] = D[j, i] = self.distance(X[i], X[j])
        return D

    def norm(self, x, V) -> float:
        return float(np.linalg.norm(V))

    def exp_map(self, x, V, s=1.0):
        raise NotImplementedError

    def log_map(self, x, y):
        raise NotImplementedError

    def geodesic(self, x, y, t):
        """Point and velocity at time ``t`` of the constant-speed geodesic from x to y."""
        V = self.log_map(x, y)
        return self.exp_map(x, V, t), self.transport_velocity(x, V, t)

    def transport_velocity(self, x, V, t):
        return np.asarray(V, dtype=float)

    @property
    def injectivity_radius(self) -> float:
        return math.inf

    def in_cut_locus(self, x, y) -> bool:
        return False

    # curvature
    def ricci_form(self, x, V) -> float:
        return 0.0

    def min_ricci(self) -> float:
        """Smallest eigenvalue of the Ricci form over the whole manifold."""
        return 0.0

    def rho(self, x) -> float:
        return 0.0

    def grad_rho(self, x) -> np.ndarray:
        return np.zeros_like(np.asarray(x, dtype=float))

    def hess_rho(self, x, V) -> float:
        return 0.0

    def bakry_emery_form(self, x, V) -> float:
        """``Ric + Hess rho`` on (V, V)."""
        return self.ricci_form(x, V) + self.hess_rho(x, V)

    # sampling
    def random_point(self, rng) -> np.ndarray:
        raise NotImplementedError

    def random_tangent(self, x, rng, length=None) -> np.ndarray:
        V = rng.standard_normal(np.asarray(x).shape)
        V = self.project(x, V)
        if length is not None:
            V *= length / self.norm(x, V)
        return V

    def project(self, x, V):
        return np.asarray(V, dtype=float)

    def __repr__(self):
        return f"{type(self).__name__}({self.spec_string()})"

    def spec_string(self) -> str:
        raise NotImplementedError


class Euclidean(SmoothGeometry):
    name = "euclidean"

    def __init__(self, n: int):
        self.dim = int(n)

    def spec_string(self):
        return f"euclidean:{self.dim}"

    def distance(self, x, y):
        return float(np.linalg.norm(np.asarray(x, float) - np.asarray(y, float)))

    def distance_matrix(self, X):
        X = np.asarray(X, dtype=float)
        diff = X[:, None, :] - X[None, :, :]
        return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))

    def exp_map(self, x, V, s=1.0):
        return np.asarray(x, float) + s * np.asarray(V, float)

    def log_map(self, x, y):
        return np.asarray(y, float) - np.asarray(x, float)

    def random_point(self, rng):
        return rng.uniform(-1.0, 1.0, self.dim)


class GaussianOU(Euclidean):
    """R^n with weight ``rho(z) = |z|^2 / 2``; the natural operator is ``Δ - <z, ∇>``."""

    name = "gaussian-ou"
    weighted = True

    def spec_string(self):
        return f"ou:{self.dim}"

    def rho(self, x):
        x = np.asarray(x, float)
        return 0.5 * float(x @ x)

    def grad_rho(self, x):
        return np.asarray(x, float).copy()

    def hess_rho(self, x, V):
        V = np.asarray(V, float)
        return float(V @ V)

    def random_point(self, rng):
        return rng.standard_normal(self.dim)


class FlatTorus(SmoothGeometry):
    """``R^n`` modulo the lattice generated by ``periods`` along the axes."""

    name = "flat-torus"

    def __init__(self, n: int, periods=None):
        self.dim = int(n)
        p = np.ones(self.dim) if periods is None else np.asarray(periods, dtype=float).ravel()
        if p.shape != (self.dim,) or np.any(p <= 0):
            raise InputError("torus needs one positive period per dimension")
        self.periods = p

    def spec_string(self):
        return f"torus:{self.dim}:" + ",".join(repr(float(p)) for p in self.periods)

    def _delta(self, x, y):
        d = np.asarray(y, float) - np.asarray(x, float)
        return d - self.periods * np.round(d / self.periods)

    def distance(self, x, y):
        return float(np.linalg.norm(self._delta(x, y)))

    def distance_matrix(self, X):
        X = np.asarray(X, dtype=float)
        d = np.abs(X[:, None, :] - X[None, :, :]) % self.periods
        d = np.minimum(d, self.periods - d)
        return np.sqrt((d ** 2).sum(-1))

    def exp_map(self, x, V, s=1.0):
        return (np.asarray(x, float) + s * np.asarray(V, float)) % self.periods

    def log_map(self, x, y):
        return self._delta(x, y)

    @property
    def injectivity_radius(self):
        return 0.5 * float(self.periods.min())

    def in_cut_locus(self, x, y):
        d = np.abs(np.asarray(y, float) - np.asarray(x, float)) % self.periods
        return bool(np.any(np.abs(d - 0.5 * self.periods) <= CUT_EPS))

    def random_point(self, rng):
        return rng.uniform(0.0, 1.0, self.dim) * self.periods


class Sphere(SmoothGeometry):
    """Round sphere of radius ``R`` in ``R^{n+1}``; points are ambient vectors of norm R."""

    name = "sphere"

    def __init__(self, n: int, R: float = 1.0):
        self.dim = int(n)
        if self.dim < 1 or not R > 0:
            raise InputError("sphere needs n >= 1 and R > 0")
        self.R = float(R)

    def spec_string(self):
        return f"sphere:{self.dim}:{self.R!r}"

    def _angle(self, x, y):
        a = np.asarray(x, float) / self.R
        b = np.asarray(y, float) / self.R
        # stable for both small and near-antipodal angles
        return 2.0 * math.atan2(np.linalg.norm(a - b), np.linalg.norm(a + b))

    def distance(self, x, y):
        return self.R * self._angle(x, y)

    def distance_matrix(self, X):
        U = np.asarray(X, dtype=float) / self.R
        sq = np.einsum("ik,ik->i", U, U)
        G = U @ U.T
        minus = np.sqrt(np.maximum(sq[:, None] + sq[None, :] - 2 * G, 0.0))
        plus = np.sqrt(np.maximum(sq[:, None] + sq[None, :] + 2 * G, 0.0))
        D = self.R * 2.0 * np.arctan2(minus, plus)
        np.fill_diagonal(D, 0.0)
        return D

    def project(self, x, V):
        u = np.asarray(x, float) / self.R
        V = np.asarray(V, float)
        return V - (V @ u) * u

    def exp_map(self, x, V, s=1.0):
        x = np.asarray(x, float)
        V = np.asarray(V, float) * s
        nv = np.linalg.norm(V)
        if nv == 0.0:
            return x.copy()
        a = nv / self.R
        return math.cos(a) * x + (self.R * math.sin(a) / nv) * V

    def log_map(self, x, y):
        x = np.asarray(x, float)
        w = self.project(x, np.asarray(y, float))
        nw = np.linalg.norm(w)
        d = self.distance(x, y)
        if nw == 0.0:
            if d == 0.0:
                return np.zeros_like(x)
            raise CutLocusPair("antipodal points have no unique geodesic")
        return d * w / nw

    def transport_velocity(self, x, V, t):
        x = np.asarray(x, float)
        V = np.asarray(V, float)
        nv = np.linalg.norm(V)
        if nv == 0.0:
            return V.copy()
        a = t * nv / self.R
        return -math.sin(a) * (nv / self.R) * x + math.cos(a) * V

    @property
    def injectivity_radius(self):
        return math.pi * self.R

    def in_cut_locus(self, x, y):
        return self.distance(x, y) >= math.pi * self.R - CUT_EPS

    def ricci_form(self, x, V):
        V = np.asarray(V, float)
        return (self.dim - 1) / self.R ** 2 * float(V @ V)

    def min_ricci(self):
        return (self.dim - 1) / self.R ** 2

    def random_point(self, rng):
        g = rng.standard_normal(self.dim + 1)
        return self.R * g / np.linalg.norm(g)


def parse_geometry(text: str) -> SmoothGeometry:
    """Parse ``sphere:2:1.0``, ``euclidean:3``, ``torus:2:1.0,1.0`` or ``ou:1``."""
    parts = text.strip().split(":")
    kind = parts[0].lower()
    try:
        n = int(parts[1]) if len(parts) > 1 else None
        if kind == "sphere":
            return Sphere(n, float(parts[2]) if len(parts) > 2 else 1.0)
        if kind == "euclidean":
            return Euclidean(n)
        if kind == "torus":
            periods = [float(p) for p in parts[2].split(",")] if len(parts) > 2 else None
            return FlatTorus(n, periods)
        if kind in ("ou", "gaussian-ou"):
            return GaussianOU(n)
    except (IndexError, TypeError, ValueError) as exc:
        raise InputError(f"cannot parse geometry {text!r}: {exc}") from None
    raise InputError(f"unknown geometry {text!r}")


# -- closed-form coarse Ricci ------------------------------------------------

def analytic_coarse_ricci(geom: SmoothGeometry, x, y, weighted: Optional[bool] = None) -> float:
    """Closed-form ``Gamma2(f_xy, f_xy)(x)`` for the geometry's Laplacian.

    The sphere value follows from the Hessian comparison for ``d_y^2 / 2``
    (radial eigenvalue 1, tangential eigenvalue ``(d/R) cot(d/R)``)::

        (n - 1) [ d^2 / R^2 + (1 - (d/R) cot(d/R))^2 ]

    Flat models give 0. The Gaussian model under ``Δ - <∇rho, ∇>`` gives
    ``|x - y|^2`` (``weighted=False`` selects the plain Laplacian instead).
    """
    if weighted is None:
        weighted = geom.weighted
    if geom.in_cut_locus(x, y):
        raise CutLocusPair("pair lies in the cut locus")
    if isinstance(geom, Sphere):
        d = geom.distance(x, y)
        a = d / geom.R
        if a == 0.0:
            return 0.0
        # 1 - a cot a, with a series where the closed form cancels
        if a < 1e-3:
            q = a * a / 3.0 + a ** 4 / 45.0 + 2.0 * a ** 6 / 945.0
        else:
            q = 1.0 - a / math.tan(a)
        return (geom.dim - 1) * (a * a + q * q)
    if isinstance(geom, GaussianOU) and weighted:
        return geom.distance(x, y) ** 2
    return 0.0


def stereographic_coarse_ricci(geom: Sphere, x, y, h: float = 1e-2) -> float:
    """Finite-difference coarse Ricci curvature on the sphere, for cross-checks.

    The Laplace-Beltrami operator is discretized in the stereographic chart
    centred at ``x`` (conformal factor ``2R / (1 + |u|^2)``) by the
    conservative five-point scheme; Gamma2 of the exact test function is then
    taken with :func:`coarse_ricci.gamma.coarse_ricci` at the chart origin.
    Results at ``h`` and ``h/2`` are Richardson-combined.
    """
    from .gamma import coarse_ricci, make_generator

    def at_step(step):
        n = geom.dim
        offsets = [k for k in itertools.product(range(-2, 3), repeat=n) if sum(map(abs, k)) <= 2]
        offsets = np.array(offsets, dtype=float)
        index = {tuple(k.astype(int)): i for i, k in enumerate(offsets)}
        xh = np.asarray(x, float) / geom.R
        E = sla.null_space(xh[None, :]).T        # tangent frame at x
        U = offsets * step
        sq = (U ** 2).sum(1)
        P = geom.R * (((1.0 - sq)[:, None] * xh[None, :] + 2.0 * U @ E) / (1.0 + sq)[:, None])
        lam = lambda u2: 2.0 * geom.R / (1.0 + u2)
        m = len(offsets)
        A = np.zeros((m, m))
        for i, k in enumerate(offsets):
            for ax in range(n):
                for sgn in (1, -1):
                    nb = k.copy()
                    nb[ax] += sgn
                    j = index.get(tuple(nb.astype(int)))
                    if j is None:
                        continue
                    mid = (k + 0.5 * sgn * np.eye(n)[ax]) * step
                    A[i, j] = lam((mid ** 2).sum()) ** (n - 2) / (lam(sq[i]) ** n * step ** 2)
        A -= np.diag(A.sum(1))
        pts = np.vstack([P, np.asarray(y, float)[None, :]])
        D = geom.distance_matrix(pts)
        # y joins as an isolated point so the test function sees its distances
        Lfull = make_generator(np.pad(A, ((0, 1), (0, 1))), "custom")
        space = build_space(D)
        return coarse_ricci(Lfull, space, index[(0,) * n], m)

    return (4.0 * at_step(h / 2) - at_step(h)) / 3.0


# -- recovery of the Ricci form ----------------------------------------------

def _curve_values(geom, x, V, s, weighted):
    pts = geom.exp_map(x, V, s)
    if geom.in_cut_locus(x, pts):
        raise CutLocusPair("probe curve reaches the cut locus")
    return analytic_coarse_ricci(geom, x, pts, weighted)


def ricci_recovery(geom: SmoothGeometry, x, V, h: Optional[float] = None,
                   method: str = "richardson", weighted: Optional[bool] = None) -> float:
    """Estimate ``(1/2) d^2/ds^2 Ric(x, exp_x(sV))`` at ``s = 0``.

    Centred second differences with step ``h`` (default ``1e-2`` times the
    injectivity radius, or ``1e-2`` when it is infinite); ``richardson``
    combines steps ``h`` and ``h/2`` to cancel the ``h^2`` error term.
    """
    if h is None:
        inj = geom.injectivity_radius
        h = 1e-2 * (inj if math.isfinite(inj) else 1.0)
    if method not in ("finite-difference", "richardson"):
        raise InputError(f"unknown method {method!r}")
    if h * geom.norm(x, V) >= geom.injectivity_radius:
        raise StepTooLarge("step leaves the injectivity radius")

    def second(step):
        fp = _curve_values(geom, x, V, step, weighted)
        fm = _curve_values(geom, x, -np.asarray(V, float), step, weighted)
        return (fp + fm) / step ** 2   # value at s = 0 is zero

    if method == "finite-difference":
        return 0.5 * second(h)
    return 0.5 * (4.0 * second(h / 2) - second(h)) / 3.0


def synge_remainder_order(geom: SmoothGeometry, x, V, s_grid=None,
                          weighted: Optional[bool] = None) -> float:
    """Log-log slope of ``|Ric(x, exp_x(sV)) - Ric_form(sV, sV)|`` against ``s``.

    Raises
    ------
    RemainderBelowNoiseFloor
        If the remainder stays below ``1e-14`` on the whole grid.
    """
    if weighted is None:
        weighted = geom.weighted
    s = np.logspace(-3, -1, 15) if s_grid is None else np.asarray(s_grid, dtype=float)
    form = geom.bakry_emery_form if weighted else geom.ricci_form
    V = np.asarray(V, float)
    r = np.array([_curve_values(geom, x, V, si, weighted) - form(x, si * V) for si in s])
    if np.max(np.abs(r)) < NOISE_FLOOR:
        raise RemainderBelowNoiseFloor("remainder is identically zero")
    good = np.abs(r) >= NOISE_FLOOR
    if good.sum() < 2:
        raise RemainderBelowNoiseFloor("remainder is below the noise floor on most of the grid")
    slope, _ = np.polyfit(np.log(s[good]), np.log(np.abs(r[good])), 1)
    return float(slope)


# -- integrated Ricci curvature and Ricci flow -------------------------------

def integral_cric(geom: SmoothGeometry, x, y, order: int = 8, weighted: bool = False) -> float:
    """``int_0^1 Ric(gamma'(t), gamma'(t)) dt`` along the minimizing geodesic (Gauss-Legendre)."""
    if geom.in_cut_locus(x, y):
        raise CutLocusPair("no unique minimizing geodesic")
    nodes, weights = np.polynomial.legendre.leggauss(order)
    t = 0.5 * (nodes + 1.0)
    form = geom.bakry_emery_form if weighted else geom.ricci_form
    V = geom.log_map(x, y)
    vals = [form(geom.exp_map(x, V, ti), geom.transport_velocity(x, V, ti)) for ti in t]
    return 0.5 * float(np.dot(weights, vals))


def ricci_flow_derivative_check(geom: SmoothGeometry, x, y, t_grid, dt: float = 1e-4) -> float:
    """Max over ``t_grid`` of ``|d/dt d_t(x,y)^2 + 2 cRic_t(x,y)|`` under Ricci flow.

    The round sphere shrinks homothetically, ``g(t) = (1 - 2(n-1)t/R^2) g(0)``;
    flat models are static. The time derivative is a centred difference of
    the closed-form distances.
    """
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if isinstance(geom, Sphere):
        c = lambda t: 1.0 - 2.0 * (geom.dim - 1) * t / geom.R ** 2

        def at(t):
            if not c(t) > 0:
                raise FlowExtinct(f"sphere has collapsed by time {t}")
            g = Sphere(geom.dim, geom.R * math.sqrt(c(t)))
            s = math.sqrt(c(t))
            return g, np.asarray(x, float) * s, np.asarray(y, float) * s
    elif geom.min_ricci() == 0.0 and not geom.weighted:
        def at(t):
            return geom, x, y
    else:
        raise InputError("Ricci flow is only modelled for round spheres and flat geometries")

    worst = 0.0
    for t in t_grid:
        g1, x1, y1 = at(t + dt)
        g0, x0, y0 = at(t - dt)
        deriv = (g1.distance(x1, y1) ** 2 - g0.distance(x0, y0) ** 2) / (2 * dt)
        g, xt, yt = at(t)
        worst = max(worst, abs(deriv + 2.0 * integral_cric(g, xt, yt)))
    return worst


def ric_n_form(geom: SmoothGeometry, x, V, N: float) -> float:
    """Dimension-dependent Bakry-Emery tensor on (V, V).

    ``Ric + Hess rho - (drho (x) drho) / (N - n)`` for ``n < N < inf``; the
    last term is dropped for ``N = inf``; ``N = n`` gives ``-inf`` unless
    ``drho(V) = 0``; ``N < n`` gives ``-inf``.
    """
    n = geom.dim
    V = np.asarray(V, float)
    base = geom.ricci_form(x, V) + geom.hess_rho(x, V)
    drv = float(geom.grad_rho(x) @ V) if geom.weighted else 0.0
    if N == math.inf:
        return base
    if N < n:
        return -math.inf
    if N == n:
        return base if drv == 0.0 else -math.inf
    return base - drv * drv / (N - n)


# -- sampling ----------------------------------------------------------------

def fibonacci_sphere(N: int, R: float = 1.0) -> np.ndarray:
    """Quasi-uniform points on the 2-sphere along a golden-angle spiral."""
    i = np.arange(N) + 0.5
    z = 1.0 - 2.0 * i / N
    r = np.sqrt(1.0 - z * z)
    phi = math.pi * (3.0 - math.sqrt(5.0)) * i
    return R * np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def discretize(geom: SmoothGeometry, sampler: str, N: int, seed: Optional[int] = None):
    """Sample ``N`` points and build the space of their intrinsic distances.

    Samplers: ``fibonacci-sphere`` (2-sphere only), ``uniform-grid`` (flat
    models; ``N`` must be a perfect ``n``-th power), ``random`` (seeded,
    default seed 0).

    Returns
    -------
    points : (N, k) ndarray
    space : MetricMeasureSpace
        Uniform measure, oracle distances, ``coords = points``.
    """
    if N < 2:
        raise InputError("need ≥ 2 points")
    if sampler == "fibonacci-sphere":
        if not (isinstance(geom, Sphere) and geom.dim == 2):
            raise UnsupportedSampler("fibonacci sampling needs the 2-sphere")
        X = fibonacci_sphere(N, geom.R)
    elif sampler == "uniform-grid":
        if isinstance(geom, Sphere):
            raise UnsupportedSampler("no uniform grid on the sphere")
        m = round(N ** (1.0 / geom.dim))
        if m ** geom.dim != N:
            raise UnsupportedSampler(f"{N} points do not form a {geom.dim}-dimensional lattice")
        if isinstance(geom, FlatTorus):
            axes = [np.arange(m) * p / m for p in geom.periods]
        elif isinstance(geom, GaussianOU):
            axes = [np.linspace(-5.0, 5.0, m)] * geom.dim
        else:
            axes = [np.linspace(0.0, 1.0, m)] * geom.dim
        mesh = np.meshgrid(*axes, indexing="ij")
        X = np.stack([a.ravel() for a in mesh], axis=1)
    elif sampler == "random":
        rng = np.random.default_rng(0 if seed is None else seed)
        X = np.array([geom.random_point(rng) for _ in range(N)])
    else:
        raise UnsupportedSampler(f"unknown sampler {sampler!r}")
    return X, build_space(geom.distance_matrix(X), coords=X)


def analytic_coarse_ricci_matrix(geom: SmoothGeometry, points, pairs,
                                 weighted: Optional[bool] = None):
    """Closed-form coarse Ricci report over index pairs of sampled ``points``.

    Pairs in the cut locus are listed separately and left out of ``K_est``.
    """
    from .exceptions import NoAdmissiblePairs
    from .gamma import CoarseRicciReport, PairCurvature

    X = np.asarray(points, dtype=float)
    rows, cut = [], []
    for x, y in pairs:
        if x == y:
            continue
        if geom.in_cut_locus(X[x], X[y]):
            cut.append((x, y))
            continue
        d = geom.distance(X[x], X[y])
        r = analytic_coarse_ricci(geom, X[x], X[y], weighted)
        rows.append(PairCurvature(int(x), int(y), d, r, r / d ** 2))
    if not rows:
        raise NoAdmissiblePairs("no admissible pairs to evaluate")
    return CoarseRicciReport(rows, min(p.ratio for p in rows), cut)
