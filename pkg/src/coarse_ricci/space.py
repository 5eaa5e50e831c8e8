"""Finite metric measure spaces and the distance-derived test functions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import (
    AsymmetryWithoutFlag,
    DimensionMismatch,
    InputError,
    NegativeDistance,
    NonSquareMatrix,
    NonzeroDiagonal,
)

SYMMETRY_TOL = 1e-12
MEASURE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class MetricMeasureSpace:
    """A finite point set with a distance matrix and a reference measure.

    Attributes
    ----------
    points : tuple
        Point identifiers, in index order.
    dist : (n, n) ndarray
        ``dist[i, j] = d(p_i, p_j)``. May be asymmetric when ``symmetric`` is
        False.
    measure : (n,) ndarray
        Strictly positive weights summing to one.
    symmetric : bool
    coords : (n, k) ndarray or None
        Optional embedding coordinates. Only used for exports and for the
        one-dimensional transport fast path.
    """

    points: tuple
    dist: np.ndarray
    measure: np.ndarray
    symmetric: bool = True
    coords: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.dist.setflags(write=False)
        self.measure.setflags(write=False)
        if self.coords is not None:
            self.coords.setflags(write=False)

    def __len__(self):
        return self.dist.shape[0]

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    def index(self, label) -> int:
        """Index of the point labelled ``label``."""
        try:
            return self.points.index(label)
        except ValueError:
            raise InputError(f"unknown point {label!r}") from None

    def is_line(self) -> bool:
        """True when the space is a set of reals with the distance |s - t|."""
        if self.coords is None or self.coords.ndim != 2 or self.coords.shape[1] != 1:
            return False
        z = self.coords[:, 0]
        return bool(np.allclose(self.dist, np.abs(z[:, None] - z[None, :]), rtol=0, atol=1e-12))


def build_space(dist, measure=None, symmetric: bool = True, points: Optional[Sequence] = None,
                coords=None) -> MetricMeasureSpace:
    """Validate a distance matrix and measure and return a space.

    The uniform measure is used when ``measure`` is None. A symmetric space
    rejects matrices with ``|d(i,j) - d(j,i)| > 1e-12``.
    """
    d = np.array(dist, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise NonSquareMatrix(f"distance matrix must be square, got shape {d.shape}")
    n = d.shape[0]
    if n == 0:
        raise InputError("need at least one point")
    if not np.all(np.isfinite(d)):
        raise InputError("distance matrix has non-finite entries")
    if np.any(d < 0):
        raise NegativeDistance("distance matrix has negative entries")
    if np.any(np.diag(d) != 0):
        raise NonzeroDiagonal("distance matrix must have a zero diagonal")
    off = ~np.eye(n, dtype=bool)
    if np.any(d[off] <= 0):
        raise InputError("distinct points must be at positive distance")
    if symmetric and np.max(np.abs(d - d.T), initial=0.0) > SYMMETRY_TOL:
        raise AsymmetryWithoutFlag("matrix is asymmetric but the space was declared symmetric")

    if measure is None:
        m = np.full(n, 1.0 / n)
    else:
        m = np.array(measure, dtype=float).ravel()
        if m.shape != (n,):
            raise DimensionMismatch(f"measure has length {m.size}, expected {n}")
        if not np.all(np.isfinite(m)) or np.any(m <= 0):
            raise InputError("measure entries must be strictly positive")
        if abs(m.sum() - 1.0) > MEASURE_TOL:
            raise InputError(f"measure must sum to 1, sums to {m.sum()!r}")

    labels = tuple(range(n)) if points is None else tuple(points)
    if len(labels) != n:
        raise DimensionMismatch("number of point labels does not match the matrix")
    c = None
    if coords is not None:
        c = np.array(coords, dtype=float)
        if c.ndim == 1:
            c = c[:, None]
        if c.shape[0] != n:
            raise DimensionMismatch("coordinates do not match the number of points")
    return MetricMeasureSpace(labels, d, m, bool(symmetric), c)


def euclidean_space(coords, measure=None, points=None) -> MetricMeasureSpace:
    """Space of points in R^k with Euclidean distances."""
    c = np.asarray(coords, dtype=float)
    if c.ndim == 1:
        c = c[:, None]
    diff = c[:, None, :] - c[None, :, :]
    d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    return build_space(d, measure, symmetric=True, points=points, coords=c)


def _check_index(space, i):
    if not (0 <= i < space.n):
        raise IndexError(f"point index {i} out of range for a space of {space.n} points")


def test_function(space: MetricMeasureSpace, x: int, y: int) -> np.ndarray:
    """The field ``f(z) = (d(x,y)^2 - d(y,z)^2 + d(z,x)^2) / 2`` on every point z."""
    _check_index(space, x)
    _check_index(space, y)
    d = space.dist
    return 0.5 * (d[x, y] ** 2 - d[y, :] ** 2 + d[:, x] ** 2)


# pytest would otherwise collect the public name above as a test
test_function.__test__ = False


def test_functions(space: MetricMeasureSpace, x: int, ys, rows=None) -> np.ndarray:
    """Test functions for one base point and many targets.

    Returns an array of shape ``(len(rows), len(ys))`` whose column ``k`` is
    ``test_function(space, x, ys[k])`` restricted to ``rows`` (all points by
    default).
    """
    d = space.dist
    ys = np.asarray(ys, dtype=int)
    rows = np.arange(space.n) if rows is None else np.asarray(rows, dtype=int)
    return 0.5 * (d[x, ys][None, :] ** 2 - d[np.ix_(ys, rows)].T ** 2 + d[rows, x][:, None] ** 2)


test_functions.__test__ = False
