"""Exact optimal transport on finite spaces and transport-based curvature.

The linear program is solved with the network simplex of POT; every plan
carries the duality gap of the returned potentials as an optimality
certificate. Spaces that are subsets of the real line use the monotone
(quantile) coupling instead.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import DegenerateDecay, InputError, MeasureMismatch, SamePoint
from .gamma import Generator
from .operators import semigroup_matrix
from .space import MetricMeasureSpace

for _backend in ("PYTORCH", "TENSORFLOW", "JAX", "CUPY"):
    os.environ.setdefault(f"POT_BACKEND_DISABLE_{_backend}", "1")
import ot  # noqa: E402

MASS_TOL = 1e-12


@dataclass
class TransportPlan:
    """Optimal coupling between two measures.

    ``cost`` is ``(sum coupling * d^p)^(1/p)``. ``dual_gap`` is the absolute
    gap between primal and dual objectives of the linear program (None for
    the closed-form line solver).
    """

    coupling: np.ndarray
    cost: float
    p: int
    dual_gap: Optional[float] = None

    def to_coo(self):
        """Nonzero entries as ``(i, j, mass)`` triples."""
        i, j = np.nonzero(self.coupling)
        return list(zip(i.tolist(), j.tolist(), self.coupling[i, j].tolist()))


def as_measure(space: MetricMeasureSpace, mu) -> np.ndarray:
    m = np.asarray(mu, dtype=float).ravel()
    if m.shape != (space.n,):
        raise MeasureMismatch(f"measure has {m.size} entries for a {space.n}-point space")
    if np.any(m < 0) or not np.all(np.isfinite(m)):
        raise MeasureMismatch("measure entries must be finite and nonnegative")
    if abs(m.sum() - 1.0) > MASS_TOL:
        raise MeasureMismatch(f"measure must sum to 1, sums to {m.sum()!r}")
    return m


def point_mass(space: MetricMeasureSpace, x: int) -> np.ndarray:
    m = np.zeros(space.n)
    m[x] = 1.0
    return m


def _line_plan(z, a, b):
    """North-west corner rule on sorted support: the monotone coupling."""
    order = np.argsort(z, kind="stable")
    a = a[order].copy()
    b = b[order].copy()
    n = z.size
    G = np.zeros((n, n))
    i = j = 0
    while i < n and j < n:
        m = min(a[i], b[j])
        G[order[i], order[j]] += m
        a[i] -= m
        b[j] -= m
        if a[i] <= 0.0:
            i += 1
        if b[j] <= 0.0:
            j += 1
    return G


def line_wasserstein(z, mu1, mu2, p: int = 1) -> float:
    """``W_p`` between measures on points ``z`` of the real line, by quantiles.

    For ``p = 1`` this is ``int |F - G|``; in general
    ``(int_0^1 |F^-1(u) - G^-1(u)|^p du)^(1/p)``.
    """
    z = np.asarray(z, dtype=float)
    order = np.argsort(z, kind="stable")
    z = z[order]
    a = np.asarray(mu1, float)[order]
    b = np.asarray(mu2, float)[order]
    if p == 1:
        F = np.cumsum(a)[:-1]
        G = np.cumsum(b)[:-1]
        return float(np.sum(np.abs(F - G) * np.diff(z)))
    Fa = np.cumsum(a)
    Fb = np.cumsum(b)
    u = np.union1d(Fa, Fb)
    u = u[(u > 0) & (u <= 1.0 + 1e-15)]
    lo = np.r_[0.0, u[:-1]]
    mid = 0.5 * (lo + u)
    ia = np.minimum(np.searchsorted(Fa, mid), z.size - 1)
    ib = np.minimum(np.searchsorted(Fb, mid), z.size - 1)
    return float(np.sum((u - lo) * np.abs(z[ia] - z[ib]) ** p) ** (1.0 / p))


def wasserstein(space: MetricMeasureSpace, mu1, mu2, p: int = 1, method: str = "auto"):
    """Exact ``W_p`` distance and an optimal plan.

    Parameters
    ----------
    method : {"auto", "lp", "line"}
        ``auto`` takes the monotone coupling on line spaces and the linear
        program elsewhere.

    Returns
    -------
    (float, TransportPlan)
    """
    if p not in (1, 2):
        raise InputError("p must be 1 or 2")
    a = as_measure(space, mu1)
    b = as_measure(space, mu2)
    if method == "auto":
        method = "line" if space.is_line() else "lp"
    C = space.dist ** p
    if method == "line":
        if not space.is_line():
            raise InputError("space is not a subset of the real line")
        G = _line_plan(space.coords[:, 0], a, b)
        cost = float(np.sum(G * C))
        return cost ** (1.0 / p), TransportPlan(G, cost ** (1.0 / p), p)
    if method != "lp":
        raise InputError(f"unknown method {method!r}")
    G, log = ot.emd(a, b, C, log=True)
    if log.get("warning"):
        raise ArithmeticError(f"transport solver: {log['warning']}")
    cost = float(np.sum(G * C))
    u, v = log["u"], log["v"]
    sa, sb = a > 0, b > 0
    # dual feasibility on the supports, and the objective gap
    slack = C[np.ix_(sa, sb)] - u[sa][:, None] - v[sb][None, :]
    infeas = max(0.0, -float(slack.min()))
    gap = abs(cost - float(a[sa] @ u[sa] + b[sb] @ v[sb])) + infeas
    return cost ** (1.0 / p), TransportPlan(G, cost ** (1.0 / p), p, gap)


def entropy(mu, nu) -> float:
    """Relative entropy ``sum nu (mu/nu) log(mu/nu)``; ``inf`` without absolute continuity."""
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if mu.shape != nu.shape:
        raise MeasureMismatch("measures live on different spaces")
    if np.any((nu <= 0) & (mu > 0)):
        return math.inf
    s = mu > 0
    return float(np.sum(mu[s] * np.log(mu[s] / nu[s])))


# -- one-step kernels and curvature ------------------------------------------

def lazy_kernel(L: Generator, alpha: float = 0.0) -> np.ndarray:
    """``alpha I + (1 - alpha)(I + eps L)`` with ``eps = 1 / max |L(x, x)|``."""
    A = L.toarray()
    eps = 1.0 / np.max(np.abs(np.diag(A)))
    n = L.n
    return alpha * np.eye(n) + (1.0 - alpha) * (np.eye(n) + eps * A)


def simple_walk_kernel(L: Generator) -> np.ndarray:
    """Jump chain: off-diagonal rates normalized to probabilities."""
    A = L.toarray()
    W = A - np.diag(np.diag(A))
    return W / W.sum(axis=1, keepdims=True)


def ollivier_kappa(space: MetricMeasureSpace, kernel, x: int, y: int) -> float:
    """``1 - W_1(m_x, m_y) / d(x, y)`` with ``m_x`` the row ``x`` of the step kernel."""
    if x == y:
        raise SamePoint("Ollivier curvature needs x != y")
    K = np.asarray(kernel, dtype=float)
    w, _ = wasserstein(space, K[x], K[y], p=1)
    return float(1.0 - w / space.dist[x, y])


def contraction_rate(L: Generator, space: MetricMeasureSpace, x: int, y: int, t_grid,
                     p: int = 1) -> float:
    """Exponential decay rate of ``W_p(P_t delta_x, P_t delta_y)``.

    Least-squares slope of ``log W_p`` against ``t``, negated.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.size < 3 or np.any(np.diff(t) <= 0):
        raise InputError("t grid must be increasing with at least 3 points")
    logs = []
    for ti in t:
        P = semigroup_matrix(L, ti)
        a = P[x] / P[x].sum()
        b = P[y] / P[y].sum()
        w, _ = wasserstein(space, a, b, p=p)
        if w < 1e-13:
            raise DegenerateDecay(f"distance fell below 1e-13 at t = {ti}")
        logs.append(math.log(w))
    slope, _ = np.polyfit(t, np.array(logs), 1)
    return float(-slope)
