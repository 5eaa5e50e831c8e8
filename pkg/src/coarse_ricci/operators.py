"""Generators from graphs, grids and point clouds; semigroups and invariant measures."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph
import scipy.sparse.linalg as spla
from scipy.spatial import cKDTree

from .exceptions import (
    DimensionMismatch,
    DisconnectedGraph,
    DuplicatePoints,
    InputError,
    NonpositiveBandwidth,
    NonpositiveWeight,
    NonuniformGrid,
    NotAGenerator,
    ReducibleChain,
)
from .gamma import Generator, make_generator
from .space import MetricMeasureSpace, build_space, euclidean_space

BOUNDARY_BAND = 2


# -- graphs ------------------------------------------------------------------

def _index_edges(edges, weights=None, nodes=None):
    labels = list(nodes) if nodes is not None else []
    index = {lab: i for i, lab in enumerate(labels)}
    rows, cols, ws = [], [], []
    edges = list(edges)
    if weights is not None and len(weights) != len(edges):
        raise DimensionMismatch("weights and edges differ in length")
    for k, e in enumerate(edges):
        if len(e) == 3:
            u, v, w = e
        else:
            (u, v), w = e, 1.0
        if weights is not None:
            w = weights[k]
        w = float(w)
        if not w > 0:
            raise NonpositiveWeight(f"edge {u!r}-{v!r} has weight {w}")
        for lab in (u, v):
            if lab not in index:
                index[lab] = len(labels)
                labels.append(lab)
        if u == v:
            continue
        rows.append(index[u])
        cols.append(index[v])
        ws.append(w)
    return labels, np.array(rows, dtype=int), np.array(cols, dtype=int), np.array(ws, dtype=float)


def _graph_parts(labels, rows, cols, ws, distance_mode):
    n = len(labels)
    W = sp.coo_array((np.r_[ws, ws], (np.r_[rows, cols], np.r_[cols, rows])), shape=(n, n)).tocsr()
    W.sum_duplicates()
    L = W - sp.diags_array(np.asarray(W.sum(axis=1)).ravel())
    if distance_mode == "hop":
        D = csgraph.shortest_path(W, unweighted=True, directed=False)
    elif distance_mode == "weighted":
        D = csgraph.shortest_path(W, method="D", directed=False)
    else:
        raise InputError(f"unknown distance mode {distance_mode!r}")
    return L, D


def graph_generator(edges, weights=None, distance_mode: str = "hop", nodes=None):
    """Graph Laplacian ``Lf(x) = sum_{y~x} w(x,y) (f(y) - f(x))`` and its path metric.

    Parameters
    ----------
    edges : iterable
        Pairs ``(u, v)`` or triples ``(u, v, w)`` of arbitrary hashable labels.
        Labels are indexed in first-seen order. Repeated edges add weights.
    weights : sequence of float, optional
        Overrides the third entry of each edge.
    distance_mode : {"hop", "weighted"}
        Unit-hop shortest path, or shortest path with weights as edge lengths.
    nodes : sequence, optional
        Labels to index first (isolated nodes included).

    Returns
    -------
    (Generator, MetricMeasureSpace)

    Raises
    ------
    DisconnectedGraph
        Use :func:`graph_components` to process each component separately.
    """
    labels, rows, cols, ws = _index_edges(edges, weights, nodes)
    if len(labels) < 2:
        raise InputError("need ≥ 2 points")
    L, D = _graph_parts(labels, rows, cols, ws, distance_mode)
    if not np.all(np.isfinite(D)):
        raise DisconnectedGraph("graph is disconnected")
    return make_generator(L, "markov-generator"), build_space(D, points=labels)


def graph_components(edges, weights=None, distance_mode: str = "hop", nodes=None):
    """Per-component ``(Generator, MetricMeasureSpace)`` pairs, warning when there are several.

    Components with a single node are skipped.
    """
    labels, rows, cols, ws = _index_edges(edges, weights, nodes)
    n = len(labels)
    adj = sp.coo_array((np.ones(rows.size), (rows, cols)), shape=(n, n))
    ncomp, comp = csgraph.connected_components(adj, directed=False)
    if ncomp > 1:
        warnings.warn(f"graph has {ncomp} connected components; processing each separately",
                      stacklevel=2)
    out = []
    for c in range(ncomp):
        members = np.flatnonzero(comp == c)
        if members.size < 2:
            continue
        remap = -np.ones(n, dtype=int)
        remap[members] = np.arange(members.size)
        keep = comp[rows] == c
        sub_labels = [labels[i] for i in members]
        L, D = _graph_parts(sub_labels, remap[rows[keep]], remap[cols[keep]], ws[keep], distance_mode)
        out.append((make_generator(L, "markov-generator"), build_space(D, points=sub_labels)))
    return out


# -- grids -------------------------------------------------------------------

def _check_axes(axes):
    axes = [np.asarray(a, dtype=float) for a in axes]
    hs = []
    for a in axes:
        if a.ndim != 1 or a.size < 3:
            raise InputError("each grid axis needs at least 3 nodes")
        steps = np.diff(a)
        h = steps.mean()
        if h <= 0 or np.max(np.abs(steps - h)) > 1e-9 * abs(h):
            raise NonuniformGrid("grid axes must be uniformly spaced and increasing")
        hs.append(float(h))
    return axes, hs


def grid_coords(axes) -> np.ndarray:
    """Grid nodes in C order, shape ``(n, dim)``."""
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def grid_space(axes, periods=None) -> MetricMeasureSpace:
    """Euclidean (or flat-torus when ``periods`` is given) distances between grid nodes."""
    axes, _ = _check_axes(axes)
    X = grid_coords(axes)
    if periods is None:
        return euclidean_space(X)
    P = np.asarray(periods, dtype=float)
    diff = np.abs(X[:, None, :] - X[None, :, :])
    diff = np.minimum(diff, P - diff)
    return build_space(np.sqrt((diff ** 2).sum(-1)), coords=X)


def weighted_grid_generator(axes, rho=None, grad_rho=None, periodic=False) -> Generator:
    """Finite-difference weighted Laplacian ``Lu = Δu - <∇ρ, ∇u>`` on a uniform grid.

    Parameters
    ----------
    axes : sequence of 1-D arrays
        Uniformly spaced coordinates along each axis.
    rho : (n,) array, optional
        Log-density weight sampled at the nodes (C order). Zero by default.
    grad_rho : (n, dim) array, optional
        Gradient of ``rho``. Central differences of ``rho`` otherwise.
    periodic : bool
        Wrap every axis around (flat torus).

    Interior rows use central differences. A node missing a neighbour uses
    the reflected second difference and a one-sided drift difference, which
    keeps the rates nonnegative; nodes within two cells of a boundary are
    marked excluded.
    """
    axes, hs = _check_axes(axes)
    shape = tuple(a.size for a in axes)
    n = int(np.prod(shape))
    dim = len(axes)
    if rho is None:
        rho = np.zeros(n)
    rho = np.asarray(rho, dtype=float).ravel()
    if rho.shape != (n,):
        raise DimensionMismatch("rho must have one value per grid node")
    if grad_rho is None:
        R = rho.reshape(shape)
        grads = []
        for ax, h in enumerate(hs):
            if periodic:
                g = (np.roll(R, -1, axis=ax) - np.roll(R, 1, axis=ax)) / (2 * h)
            else:
                g = np.gradient(R, h, axis=ax, edge_order=2)
            grads.append(g.ravel())
        grad_rho = np.stack(grads, axis=1)
    grad_rho = np.asarray(grad_rho, dtype=float).reshape(n, dim)

    idx = np.arange(n).reshape(shape)
    rows, cols, vals = [], [], []
    excluded = np.zeros(shape, dtype=bool)
    for ax, h in enumerate(hs):
        m = shape[ax]
        pos = np.indices(shape)[ax]
        b = grad_rho[:, ax].reshape(shape)
        up = np.roll(idx, -1, axis=ax)
        dn = np.roll(idx, 1, axis=ax)
        c_up = 1.0 / h ** 2 - b / (2 * h)
        c_dn = 1.0 / h ** 2 + b / (2 * h)
        if not periodic:
            first = pos == 0
            last = pos == m - 1
            # reflected second difference, one-sided drift
            c_up = np.where(first, 2.0 / h ** 2 - b / h, c_up)
            c_dn = np.where(last, 2.0 / h ** 2 + b / h, c_dn)
            c_dn = np.where(first, 0.0, c_dn)
            c_up = np.where(last, 0.0, c_up)
            excluded |= (pos < BOUNDARY_BAND) | (pos > m - 1 - BOUNDARY_BAND)
        for nb, c in ((up, c_up), (dn, c_dn)):
            mask = c != 0.0
            rows.append(idx[mask])
            cols.append(nb[mask])
            vals.append(c[mask])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    W = sp.coo_array((vals, (rows, cols)), shape=(n, n)).tocsr()
    W.sum_duplicates()
    L = W - sp.diags_array(np.asarray(W.sum(axis=1)).ravel())
    if np.any(vals < 0):
        warnings.warn("drift too strong for the grid spacing; generator is not Markov", stacklevel=2)
        kind = "custom"
    else:
        kind = "grid-laplacian"
    return make_generator(L, kind, excluded.ravel())


def grid_generator(axes, periodic=False):
    """Plain grid Laplacian with its Euclidean (or flat-torus) space."""
    axes, hs = _check_axes(axes)
    periods = [h * a.size for a, h in zip(axes, hs)] if periodic else None
    return weighted_grid_generator(axes, periodic=periodic), grid_space(axes, periods)


# -- point clouds ------------------------------------------------------------

@dataclass(frozen=True)
class KernelConfig:
    """Heat-kernel bandwidth and normalization for point-cloud Laplacians.

    ``t`` has units of length squared; ``cutoff`` defaults to ``6 sqrt(t)``.
    """

    t: float
    normalization: str = "laplace-beltrami"
    cutoff: Optional[float] = None

    def __post_init__(self):
        if not self.t > 0:
            raise NonpositiveBandwidth(f"bandwidth must be positive, got {self.t}")
        if self.normalization not in ("laplace-beltrami", "fokker-planck"):
            raise InputError(f"unknown normalization {self.normalization!r}")
        if self.cutoff is not None and not self.cutoff > 0:
            raise InputError("cutoff must be positive")

    @property
    def radius(self) -> float:
        return self.cutoff if self.cutoff is not None else 6.0 * math.sqrt(self.t)


def kernel_matrix(points, config: KernelConfig) -> sp.csr_array:
    """Truncated Gaussian kernel ``exp(-|x-y|^2 / 4t)`` including the diagonal."""
    X = np.asarray(points, dtype=float)
    tree = cKDTree(X)
    D = tree.sparse_distance_matrix(tree, config.radius, output_type="coo_matrix")
    off = D.row != D.col
    vals = np.exp(-D.data[off] ** 2 / (4.0 * config.t))
    n = X.shape[0]
    K = sp.coo_array((np.r_[vals, np.ones(n)],
                      (np.r_[D.row[off], np.arange(n)], np.r_[D.col[off], np.arange(n)])),
                     shape=(n, n))
    return K.tocsr()


def pointcloud_generator(points, config: KernelConfig):
    """Kernel Laplacian ``L_t f(x) = (1/t) (sum_y k(x,y) f(y) / sum_y k(x,y) - f(x))``.

    ``fokker-planck`` mode first divides the kernel by ``q(x) q(y)`` with
    ``q(x) = sum_y k(x, y)``.

    Returns
    -------
    (Generator, MetricMeasureSpace)
        The space carries chordal (ambient Euclidean) distances. Pair the
        generator with an intrinsic-distance space of the same points to
        compare against geodesic curvature.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] < 2:
        raise InputError("need ≥ 2 points")
    if cKDTree(X).query_pairs(0.0, output_type="ndarray").size:
        raise DuplicatePoints("point cloud has coincident points")
    K = kernel_matrix(X, config)
    if config.normalization == "fokker-planck":
        q = np.asarray(K.sum(axis=1)).ravel()
        K = sp.diags_array(1.0 / q) @ K @ sp.diags_array(1.0 / q)
    deg = np.asarray(K.sum(axis=1)).ravel()
    P = sp.diags_array(1.0 / deg) @ K
    P = sp.csr_array(P)
    # exact zero row sums: put the residual on the diagonal
    L = (P - sp.eye_array(X.shape[0])) / config.t
    L = sp.csr_array(L)
    L.setdiag(L.diagonal() - np.asarray(L.sum(axis=1)).ravel())
    return make_generator(L, "kernel-laplacian"), euclidean_space(X)


# -- semigroups --------------------------------------------------------------

def _require_markov(L: Generator):
    if not L.is_markov:
        raise NotAGenerator("operator is not a Markov generator")


def semigroup_matrix(L: Generator, t: float) -> np.ndarray:
    """Row-stochastic ``P_t = exp(t L)``.

    Uses scaling and squaring with a Pade approximant; entries within
    ``1e-12`` below zero are clamped.
    """
    _require_markov(L)
    if not t >= 0:
        raise InputError("time must be nonnegative")
    if t == 0:
        return np.eye(L.n)
    P = sla.expm(t * L.toarray())
    if P.min() < -1e-12:
        raise NotAGenerator("semigroup has negative entries")
    return np.maximum(P, 0.0)


def semigroup_matrix_eig(L: Generator, t: float, measure=None) -> np.ndarray:
    """``exp(t L)`` through the spectral decomposition of a reversible generator.

    ``measure`` is the reversing measure (uniform if omitted); the generator
    is symmetrized with ``diag(sqrt(mu))`` before diagonalization.
    """
    A = L.toarray()
    mu = np.full(L.n, 1.0 / L.n) if measure is None else np.asarray(measure, dtype=float)
    s = np.sqrt(mu)
    S = s[:, None] * A / s[None, :]
    S = 0.5 * (S + S.T)
    lam, U = np.linalg.eigh(S)
    E = (U * np.exp(t * lam)) @ U.T
    return E * s[None, :] / s[:, None]


@dataclass
class Stationary:
    measure: np.ndarray
    reversible: bool


def invariant_measure(L: Generator) -> Stationary:
    """Unique probability vector ``mu`` with ``L^T mu = 0``.

    Raises
    ------
    ReducibleChain
        When the chain has more than one closed class.
    """
    _require_markov(L)
    M = L.matrix
    n = L.n
    A = sp.csr_array(M.copy())
    A.setdiag(0.0)
    A.eliminate_zeros()
    ncomp, comp = csgraph.connected_components(A, directed=True, connection="strong")
    if ncomp > 1:
        # a class is closed when no rate leaves it
        coo = A.tocoo()
        leaving = np.zeros(ncomp, dtype=bool)
        leaving[comp[coo.row][comp[coo.row] != comp[coo.col]]] = True
        if np.count_nonzero(~leaving) > 1:
            raise ReducibleChain("stationary distribution is not unique")
    T = sp.lil_array(M.T)
    T[n - 1, :] = np.ones(n)
    b = np.zeros(n)
    b[-1] = 1.0
    T = sp.csc_array(T)
    mu = spla.spsolve(T, b)
    for _ in range(2):  # iterative refinement
        mu = mu + spla.spsolve(T, b - T @ mu)
    mu = np.where(np.abs(mu) < 1e-300, 0.0, mu)
    if mu.min() < -1e-12:
        raise ReducibleChain("stationary solve produced negative mass")
    mu = np.maximum(mu, 0.0)
    mu /= mu.sum()
    flux = M.multiply(mu[:, None]).toarray() if n <= 5000 else None
    reversible = bool(flux is not None and
                      np.max(np.abs(flux - flux.T)) <= 1e-10 * max(1.0, np.abs(flux).max()))
    return Stationary(mu, reversible)


def distance_kernel_generator(space: MetricMeasureSpace, config: KernelConfig) -> Generator:
    """Kernel Laplacian built from a distance matrix instead of coordinates.

    Same formula as :func:`pointcloud_generator` with ``|x - y|`` replaced
    by ``d(x, y)``; the matrix is symmetrized first.
    """
    D = 0.5 * (space.dist + space.dist.T)
    K = np.where(D <= config.radius, np.exp(-D ** 2 / (4.0 * config.t)), 0.0)
    if config.normalization == "fokker-planck":
        q = K.sum(axis=1)
        K = K / np.outer(q, q)
    P = K / K.sum(axis=1, keepdims=True)
    L = (P - np.eye(space.n)) / config.t
    L -= np.diag(L.sum(axis=1))
    return make_generator(L, "kernel-laplacian")


def default_bandwidth(space: MetricMeasureSpace) -> float:
    """Squared median nearest-neighbour distance, a scale-aware default ``t``."""
    D = space.dist + np.diag(np.full(space.n, np.inf))
    return float(np.median(D.min(axis=1)) ** 2)
