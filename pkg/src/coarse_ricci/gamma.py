"""Carre du champ calculus and the coarse Ricci curvature it induces.

For a linear operator ``L`` on functions of a finite space::

    Gamma(u, v)  = (L(uv) - u Lv - v Lu) / 2
    Gamma2(u, v) = (L Gamma(u, v) - Gamma(Lu, v) - Gamma(u, Lv)) / 2

and the coarse Ricci curvature of a pair is ``Gamma2(f, f)(x)`` where ``f`` is
the test function of :func:`coarse_ricci.space.test_function`.

Generators follow the sign convention ``Lf(x) = sum_y w(x, y) (f(y) - f(x))``,
so Markov generators are negative semidefinite like the Laplace-Beltrami
operator.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .exceptions import (
    CutLocusPair,
    DegenerateGamma,
    DimensionMismatch,
    InputError,
    NoAdmissiblePairs,
    NonInvariantMeasure,
    NonpositiveK,
    OracleRequired,
    SamePoint,
)
from .space import MetricMeasureSpace, test_functions

KINDS = ("markov-generator", "grid-laplacian", "kernel-laplacian", "custom")
ROW_SUM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Generator:
    """A linear operator on fields of an ``n``-point space.

    Attributes
    ----------
    matrix : scipy.sparse.csr_array
        ``(Lf)(i) = sum_j matrix[i, j] f(j)``.
    kind : str
        One of ``KINDS``.
    excluded : (n,) bool ndarray
        Points whose stencil reaches a boundary band. Curvature scans never use
        them as base points.
    """

    matrix: sp.csr_array
    kind: str = "custom"
    excluded: np.ndarray = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_markov(self) -> bool:
        """Nonnegative off-diagonal rates and zero row sums."""
        m = self.matrix.tocoo()
        off = m.row != m.col
        if np.any(m.data[off] < 0):
            return False
        return True  # row sums are enforced at construction

    def __call__(self, f):
        return self.matrix @ f

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def make_generator(matrix, kind: str = "custom", excluded=None) -> Generator:
    """Validate and wrap an operator matrix.

    Every generator must annihilate constants (row sums within ``1e-10``,
    relative to the largest entry of the row when that exceeds one). Markov
    generators additionally need nonnegative off-diagonal entries.
    """
    if kind not in KINDS:
        raise InputError(f"unknown generator kind {kind!r}")
    m = sp.csr_array(matrix, dtype=float)
    m.sum_duplicates()
    m.eliminate_zeros()
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"generator must be square, got {m.shape}")
    if not np.all(np.isfinite(m.data)):
        raise InputError("generator has non-finite entries")
    n = m.shape[0]
    rows = np.asarray(m.sum(axis=1)).ravel()
    scale = np.maximum(1.0, np.asarray(abs(m).max(axis=1).todense()).ravel())
    if np.any(np.abs(rows) > ROW_SUM_TOL * scale):
        raise InputError("generator does not annihilate constants (row sums nonzero)")
    if kind != "custom":
        coo = m.tocoo()
        off = coo.row != coo.col
        if np.any(coo.data[off] < 0):
            raise InputError(f"a {kind} needs nonnegative off-diagonal entries")
    if excluded is None:
        ex = np.zeros(n, dtype=bool)
    else:
        ex = np.asarray(excluded, dtype=bool).copy()
        if ex.shape != (n,):
            raise DimensionMismatch("excluded mask has the wrong length")
    ex.setflags(write=False)
    return Generator(m, kind, ex)


def _as_fields(L: Generator, *fields):
    out = []
    for f in fields:
        a = np.asarray(f, dtype=float)
        if a.shape[0] != L.n:
            raise DimensionMismatch(f"field of length {a.shape[0]} on a {L.n}-point generator")
        out.append(a)
    return out


def carre_du_champ(L: Generator, u, v) -> np.ndarray:
    """Gamma(L, u, v) as a field. Accepts 2-D arrays column-wise."""
    u, v = _as_fields(L, u, v)
    M = L.matrix
    return 0.5 * (M @ (u * v) - (M @ u) * v - u * (M @ v))


def gamma2(L: Generator, u, v) -> np.ndarray:
    """Iterated carre du champ Gamma2(L, u, v) as a field."""
    u, v = _as_fields(L, u, v)
    M = L.matrix
    return 0.5 * (M @ carre_du_champ(L, u, v)
                  - carre_du_champ(L, M @ u, v)
                  - carre_du_champ(L, u, M @ v))


def bochner_residual(L: Generator, u, gradient=None, hessian=None, ricci=None) -> np.ndarray:
    """``Gamma2(u, u) - [Ric(grad u, grad u) + |Hess u|^2]`` pointwise.

    Parameters
    ----------
    u : (n,) array
        Samples of a smooth function on the discretization behind ``L``.
    gradient : (n, k) array
        Closed-form gradient of the function at every point.
    hessian : (n, k, k) array
        Closed-form Hessian, in the same frame as ``gradient``.
    ricci : (n, k, k) array or (k, k) array
        Ricci form at each point (or a constant one).
    """
    if gradient is None or hessian is None or ricci is None:
        raise OracleRequired("the Bochner residual needs a closed-form gradient, Hessian and Ricci form")
    (u,) = _as_fields(L, u)
    g = np.asarray(gradient, dtype=float)
    H = np.asarray(hessian, dtype=float)
    R = np.asarray(ricci, dtype=float)
    if R.ndim == 2:
        R = np.broadcast_to(R, H.shape)
    ric = np.einsum("ni,nij,nj->n", g, R, g)
    hess2 = np.einsum("nij,nij->n", H, H)
    return gamma2(L, u, u) - (ric + hess2)


# -- coarse Ricci ------------------------------------------------------------

def _support(M: sp.csr_array, rows) -> np.ndarray:
    cols = [M.indices[M.indptr[r]:M.indptr[r + 1]] for r in rows]
    return np.union1d(np.concatenate(cols + [np.asarray(rows)]), [])


def _stencil(L: Generator, x: int):
    """One- and two-hop supports of the operator around ``x``."""
    M = L.matrix
    s1 = _support(M, [x]).astype(int)
    s2 = _support(M, s1).astype(int)
    return s1, s2


def coarse_ricci_many(L: Generator, space: MetricMeasureSpace, x: int, ys) -> np.ndarray:
    """Coarse Ricci curvature ``Gamma2(f_xy, f_xy)(x)`` for one ``x`` and many ``y``.

    Only the two-hop stencil of ``x`` enters, so the cost is independent of the
    size of the space for sparse operators.
    """
    if L.n != space.n:
        raise DimensionMismatch("generator and space have different sizes")
    ys = np.atleast_1d(np.asarray(ys, dtype=int))
    if np.any(ys == x):
        raise SamePoint("coarse Ricci curvature needs x != y")
    s1, s2 = _stencil(L, x)
    M = L.matrix
    L1 = M[s1][:, s2].toarray()            # rows on s1, columns on s2
    pos1 = np.searchsorted(s2, s1)         # s1 inside s2
    ix = int(np.searchsorted(s1, x))
    lx = L1[ix]                            # row x, columns s2
    lx1 = lx[pos1]                         # row x, columns s1 (support of row x)

    F = test_functions(space, x, ys, rows=s2)   # (|s2|, m)
    F1 = F[pos1]
    LF = L1 @ F                                  # Lf on s1
    G = 0.5 * (L1 @ (F * F) - 2.0 * F1 * LF)     # Gamma(f, f) on s1
    fx = F[pos1[ix]]
    lfx = LF[ix]
    gamma_lf_f = 0.5 * (lx1 @ (LF * F1) - lfx * lfx - fx * (lx1 @ LF))
    return 0.5 * (lx1 @ G) - gamma_lf_f


def coarse_ricci(L: Generator, space: MetricMeasureSpace, x: int, y: int,
                 symmetrize: bool = False) -> float:
    """Coarse Ricci curvature ``Ric_L(x, y)``.

    Finite spaces have an empty cut locus, so every pair with ``x != y`` is
    admissible. With ``symmetrize`` the mean of ``Ric_L(x, y)`` and
    ``Ric_L(y, x)`` is returned.
    """
    if x == y:
        raise SamePoint("coarse Ricci curvature needs x != y")
    if cut_locus_contains(space, x, y):
        raise CutLocusPair(f"pair ({x}, {y}) lies in the cut locus")
    val = float(coarse_ricci_many(L, space, x, [y])[0])
    if symmetrize:
        val = 0.5 * (val + float(coarse_ricci_many(L, space, y, [x])[0]))
    return val


def cut_locus_contains(space_or_geometry, x, y) -> bool:
    """Whether Gamma2 of the test function is undefined at the base point.

    Always False on finite spaces. Smooth geometries answer with their
    closed-form predicate.
    """
    if isinstance(space_or_geometry, MetricMeasureSpace):
        return False
    return bool(space_or_geometry.in_cut_locus(x, y))


@dataclass
class PairCurvature:
    x: int
    y: int
    d: float
    ric: float
    ratio: float


@dataclass
class CoarseRicciReport:
    """Pairwise coarse Ricci values and the implied lower-bound constant."""

    pairs: list
    K_est: float
    cut_pairs: list = field(default_factory=list)

    def ratios(self) -> np.ndarray:
        return np.array([p.ratio for p in self.pairs])

    def values(self) -> np.ndarray:
        return np.array([p.ric for p in self.pairs])

    def to_dict(self) -> dict:
        return {
            "pairs": [{"x": p.x, "y": p.y, "d": p.d, "ric": p.ric, "ratio": p.ratio}
                      for p in self.pairs],
            "K_est": self.K_est,
            "cut_pairs": [list(c) for c in self.cut_pairs],
        }


def admissible_pairs(L: Generator, space: MetricMeasureSpace, pairs=None):
    """Pairs ``(x, y)`` with ``x != y`` and ``x`` away from the boundary band."""
    if pairs is None:
        xs = np.flatnonzero(~L.excluded)
        return [(int(x), int(y)) for x in xs for y in range(space.n) if y != x]
    return [(int(x), int(y)) for x, y in pairs if x != y and not L.excluded[x]]


def coarse_ricci_matrix(L: Generator, space: MetricMeasureSpace, pairs=None,
                        symmetrize: bool = False, workers: int = 1) -> CoarseRicciReport:
    """Coarse Ricci curvature over a set of pairs.

    Parameters
    ----------
    pairs : iterable of (x, y), optional
        Candidate pairs; all pairs by default. Pairs with ``x == y`` or with
        ``x`` in the generator's excluded band are dropped.
    symmetrize : bool
        Report ``(Ric_L(x,y) + Ric_L(y,x)) / 2`` instead of ``Ric_L(x,y)``.
    workers : int
        Thread count. Results do not depend on it.

    Returns
    -------
    CoarseRicciReport
        ``K_est`` is the minimum of ``Ric_L(x, y) / d(x, y)^2``.
    """
    cand = admissible_pairs(L, space, pairs)
    cut = [(x, y) for x, y in cand if cut_locus_contains(space, x, y)]
    cutset = set(cut)
    cand = [p for p in cand if p not in cutset]
    if symmetrize:
        cand = [(x, y) for x, y in cand if not L.excluded[y]]
    if not cand:
        raise NoAdmissiblePairs("no admissible pairs to evaluate")

    by_x: dict = {}
    for x, y in cand:
        by_x.setdefault(x, []).append(y)
    if symmetrize:
        for x, y in cand:
            by_x.setdefault(y, [])
            if x not in by_x[y]:
                by_x[y].append(x)

    def work(item):
        x, ys = item
        return x, dict(zip(ys, coarse_ricci_many(L, space, x, ys))) if ys else {}

    items = list(by_x.items())
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = dict(ex.map(work, items))
    else:
        results = dict(map(work, items))

    out = []
    for x, y in cand:
        r = results[x][y]
        if symmetrize:
            r = 0.5 * (r + results[y][x])
        d = float(space.dist[x, y])
        out.append(PairCurvature(x, y, d, float(r), float(r) / d ** 2))
    k_est = min(p.ratio for p in out)
    return CoarseRicciReport(out, k_est, cut)


# -- curvature-dimension -----------------------------------------------------

@dataclass
class CDEstimate:
    """Largest ``k`` with ``Gamma2 >= (Lf)^2 / N + k Gamma`` at one point."""

    point: int
    N: float
    k: float


def gamma_forms(L: Generator, x: int):
    """Quadratic forms of Gamma2, Gamma and (Lf)^2 at ``x``.

    Returns ``(support, A, B, C)`` where the forms act on the values of ``f``
    at ``support`` (the two-hop stencil of ``x``):
    ``Gamma2(f,f)(x) = f.A.f``, ``Gamma(f,f)(x) = f.B.f``, ``(Lf)(x)^2 = f.C.f``.
    """
    s1, s2 = _stencil(L, x)
    L1 = L.matrix[s1][:, s2].toarray()
    pos1 = np.searchsorted(s2, s1)
    m = s2.size

    def bform(row, at):
        # Gamma(f,f)(z) = f.B_z.f for z = s2[at], row = L[z, s2]
        B = 0.5 * np.diag(row)
        B[at, :] -= 0.5 * row
        B[:, at] -= 0.5 * row
        return B

    ix = int(np.searchsorted(s1, x))
    lx = L1[ix]
    Bx = bform(lx, pos1[ix])
    A = np.zeros((m, m))
    for k, z in enumerate(s1):
        w = lx[pos1[k]]
        if w != 0.0:
            A += 0.5 * w * bform(L1[k], pos1[k])
    # Gamma(Lf, f)(x) = (L1 f)^T Bx[s1, s1] f[s1]
    Bx1 = Bx[np.ix_(pos1, pos1)]
    T = np.zeros((m, m))
    T[:, pos1] = L1.T @ Bx1
    A -= 0.5 * (T + T.T)
    C = np.outer(lx, lx)
    return s2, A, Bx, C


def _pencil_min(A: np.ndarray, B: np.ndarray) -> float:
    """Largest ``k`` with ``A - k B`` positive semidefinite on the complement of constants."""
    m = A.shape[0]
    Q = sla.null_space(np.ones((1, m)))
    A = Q.T @ A @ Q
    B = Q.T @ B @ Q
    A = 0.5 * (A + A.T)
    B = 0.5 * (B + B.T)
    lam, V = np.linalg.eigh(B)
    tr = max(np.trace(B), 0.0)
    keep = lam > 1e-12 * tr
    if not np.any(keep):
        raise DegenerateGamma("Gamma vanishes on every nonconstant field at this point")
    R, Z = V[:, keep], V[:, ~keep]
    ARR = R.T @ A @ R
    scale = max(np.abs(A).max(), 1e-300)
    if Z.shape[1]:
        AZZ = Z.T @ A @ Z
        ARZ = R.T @ A @ Z
        mu, W = np.linalg.eigh(AZZ)
        tol = 1e-10 * scale
        if mu.min() < -tol:
            return -math.inf
        pos = mu > tol
        # directions invisible to Gamma must not couple to the rest through Gamma2
        if np.any(np.abs(ARZ @ W[:, ~pos]) > 1e-8 * scale):
            return -math.inf
        Wp = W[:, pos]
        ARR = ARR - (ARZ @ Wp) @ np.diag(1.0 / mu[pos]) @ (ARZ @ Wp).T
    s = 1.0 / np.sqrt(lam[keep])
    Mred = s[:, None] * ARR * s[None, :]
    return float(np.linalg.eigvalsh(0.5 * (Mred + Mred.T))[0])


def cd_estimate(L: Generator, x: int, N: float = math.inf) -> CDEstimate:
    """Pointwise curvature-dimension constant.

    ``k(x) = inf_f [Gamma2(f,f)(x) - (Lf)(x)^2 / N] / Gamma(f,f)(x)`` over
    nonconstant ``f`` with ``Gamma(f,f)(x) > 0``, computed as the smallest
    eigenvalue of the reduced symmetric pencil. Directions on which ``Gamma``
    vanishes are eliminated by a Schur complement; when they make the ratio
    unbounded below the result is ``-inf``.
    """
    if not (N >= 1):
        raise InputError("dimension N must be >= 1")
    _, A, B, C = gamma_forms(L, x)
    if math.isfinite(N):
        A = A - C / N
    return CDEstimate(int(x), float(N), _pencil_min(A, B))


# -- distance / carre du champ comparison --------------------------------------

def distcarre_check(L: Generator, space: MetricMeasureSpace, pairs=None):
    """Ratios ``Gamma(f_xy, f_xy)(x) / d(x, y)^2`` over admissible pairs.

    The condition ``Gamma(f_xy, f_xy)(x) >= d(x, y)^2`` holds for a pair iff
    its ratio is at least one.

    Returns
    -------
    list of ((x, y), ratio)
    """
    cand = admissible_pairs(L, space, pairs)
    if not cand:
        raise NoAdmissiblePairs("no admissible pairs to evaluate")
    by_x: dict = {}
    for x, y in cand:
        by_x.setdefault(x, []).append(y)
    vals = {}
    M = L.matrix
    for x, ys in by_x.items():
        s1 = _support(M, [x]).astype(int)
        lx = M[[x]][:, s1].toarray()[0]
        F = test_functions(space, x, ys, rows=s1)
        fx = F[int(np.searchsorted(s1, x))]
        g = 0.5 * (lx @ (F * F) - 2.0 * fx * (lx @ F))
        for y, gv in zip(ys, g):
            vals[(x, y)] = gv
    return [((x, y), float(vals[(x, y)] / space.dist[x, y] ** 2)) for x, y in cand]


# -- log-Sobolev audit -------------------------------------------------------

@dataclass
class LSIAudit:
    K: float
    lhs: np.ndarray
    rhs: np.ndarray
    violations: np.ndarray

    @property
    def n_violations(self) -> int:
        return int(self.violations.sum())

    @property
    def trials(self) -> int:
        return int(self.lhs.size)


def entropy_functional(f, mu) -> float:
    """``sum mu f log f`` with ``0 log 0 = 0``."""
    f = np.asarray(f, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(f > 0, f * np.log(f), 0.0)
    return float(np.dot(mu, t))


def fisher_functional(L: Generator, f, mu) -> float:
    """``sum mu Gamma(f, f) / f`` for positive ``f``."""
    return float(np.dot(mu, carre_du_champ(L, f, f) / f))


def random_probe(rng: np.random.Generator, n: int, mu) -> np.ndarray:
    """A positive density with respect to ``mu`` (``sum mu f = 1``)."""
    scale = rng.uniform(0.0, 4.0)
    f = np.exp(scale * rng.standard_normal(n))
    return f / np.dot(mu, f)


def log_sobolev_audit(L: Generator, measure, K: float, trials: int = 10_000,
                      seed: int = 0, probes: Optional[Iterable] = None,
                      invariance_tol: float = 1e-8) -> LSIAudit:
    """Test ``Ent(f) <= (1/2K) sum mu Gamma(f,f)/f`` on random positive densities.

    Each trial draws from its own substream of ``seed`` so results do not
    depend on the number of trials requested. Explicit ``probes`` replace the
    random draw.
    """
    if not (K > 0):
        raise NonpositiveK(f"K must be positive, got {K}")
    mu = np.asarray(measure, dtype=float)
    if mu.shape != (L.n,):
        raise DimensionMismatch("measure length does not match the generator")
    resid = L.matrix.T @ mu
    if np.max(np.abs(resid)) > invariance_tol * max(1.0, np.abs(L.matrix).max()):
        raise NonInvariantMeasure("measure is not invariant for the generator")

    if probes is None:
        probes = (random_probe(np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,))),
                               L.n, mu)
                  for i in range(trials))
    lhs, rhs = [], []
    for f in probes:
        f = np.asarray(f, dtype=float)
        lhs.append(entropy_functional(f, mu))
        rhs.append(fisher_functional(L, f, mu) / (2.0 * K))
    lhs = np.array(lhs)
    rhs = np.array(rhs)
    viol = lhs > rhs + 1e-12 * np.maximum(1.0, np.abs(rhs))
    return LSIAudit(float(K), lhs, rhs, viol)
