"""Unordered Q-tuples of points in R^n and the metrics between them.

A :class:`QPoint` is an element of the space of Q-points, i.e. a multiset
``sum_i [[P_i]]`` of ``q`` points in ``R^n``.  Two Q-points are compared with
the assignment metric

    G(S, T) = min_sigma ( sum_i |S_i - T_sigma(i)|^2 )^(1/2)

and with the 1-Wasserstein distance ``W1(S, T) = min_sigma sum_i |S_i - T_sigma(i)|``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import pdist

__all__ = [
    "QPoint",
    "InvalidInput",
    "metric_g",
    "wasserstein1",
    "optimal_matching",
    "batch_matching",
    "separation",
    "diameter",
    "translate",
    "cluster_split",
    "DIST_ATOL",
]

#: absolute tolerance used when two distances are compared for equality
DIST_ATOL = 1e-12


class InvalidInput(ValueError):
    """Raised on dimension or multiplicity mismatch."""


@dataclass(frozen=True, eq=False)
class QPoint:
    """A multiset of ``q`` points of ``R^n`` stored as a ``(q, n)`` array."""

    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.array(self.points, dtype=float, copy=True)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
            raise InvalidInput(f"QPoint needs a (q, n) array with q, n >= 1, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InvalidInput("QPoint coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def q(self) -> int:
        return self.points.shape[0]

    @property
    def n(self) -> int:
        return self.points.shape[1]

    @classmethod
    def collapsed(cls, q: int, p: Sequence[float]) -> "QPoint":
        """The point ``q [[p]]``."""
        return cls(np.tile(np.asarray(p, dtype=float).reshape(1, -1), (q, 1)))

    def canonical(self) -> np.ndarray:
        """Points sorted lexicographically by coordinates (ties keep index order)."""
        order = np.lexsort(self.points.T[::-1])
        return self.points[order]

    def to_dict(self) -> dict:
        return {"q": self.q, "n": self.n, "points": self.canonical().tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "QPoint":
        pts = np.asarray(data["points"], dtype=float).reshape(int(data["q"]), int(data["n"]))
        return cls(pts)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QPoint):
            return NotImplemented
        return self.points.shape == other.points.shape and np.array_equal(
            self.canonical(), other.canonical()
        )

    def __hash__(self) -> int:
        return hash((self.points.shape, self.canonical().tobytes()))

    def __repr__(self) -> str:
        body = ", ".join("(" + ", ".join(f"{c:.6g}" for c in p) + ")" for p in self.canonical())
        return f"QPoint(q={self.q}, n={self.n}, [{body}])"


def _check_pair(a: QPoint, b: QPoint) -> None:
    if a.q != b.q or a.n != b.n:
        raise InvalidInput(f"incompatible Q-points: (q={a.q}, n={a.n}) vs (q={b.q}, n={b.n})")


def _cost(a: np.ndarray, b: np.ndarray, power: int) -> np.ndarray:
    d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1)
    return d * d if power == 2 else d


def optimal_matching(a: QPoint, b: QPoint, power: int = 2) -> tuple[np.ndarray, float]:
    """Return ``(sigma, cost)`` with ``a_i`` matched to ``b_sigma(i)``.

    ``power=2`` minimises the sum of squared distances, ``power=1`` the sum of
    distances.  ``cost`` is the minimal sum.
    """
    _check_pair(a, b)
    c = _cost(a.points, b.points, power)
    rows, cols = linear_sum_assignment(c)
    sigma = np.empty(a.q, dtype=int)
    sigma[rows] = cols
    return sigma, float(c[rows, cols].sum())


def metric_g(a: QPoint, b: QPoint) -> float:
    """The assignment metric G(a, b)."""
    _, cost = optimal_matching(a, b, power=2)
    return math.sqrt(max(cost, 0.0))


def wasserstein1(a: QPoint, b: QPoint) -> float:
    """The 1-Wasserstein distance between two Q-points (equal mass, unit atoms)."""
    _, cost = optimal_matching(a, b, power=1)
    return cost


@lru_cache(maxsize=None)
def _permutations(q: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(q))), dtype=int)


def batch_matching(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Squared-cost optimal matchings for many pairs at once.

    ``a`` and ``b`` have shape ``(K, q, n)``.  Returns ``(sigma, cost)`` with
    ``sigma`` of shape ``(K, q)`` so that ``a[k, i]`` pairs with
    ``b[k, sigma[k, i]]``.  Permutations are enumerated in lexicographic order
    and the first optimal one is kept, so ties resolve to the lowest-index
    permutation.  Intended for small ``q`` (enumeration is ``q!``).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    q = a.shape[1]
    perms = _permutations(q)
    d2 = ((a[:, :, None, :] - b[:, None, :, :]) ** 2).sum(-1)  # (K, q, q)
    idx = np.arange(q)
    costs = d2[:, idx[None, :], perms].sum(-1)  # (K, q!)
    # ties within rounding noise go to the lowest index
    best = costs.min(axis=1, keepdims=True)
    scale = np.maximum(best, 1.0)
    k = np.argmax(costs <= best + 1e-13 * scale, axis=1)
    return perms[k], costs[np.arange(len(k)), k]


def separation(t: QPoint) -> float:
    """Smallest distance between two distinct values of ``t``; ``inf`` if all coincide."""
    p = t.points
    best = math.inf
    for i in range(t.q):
        for j in range(i + 1, t.q):
            if np.any(p[i] != p[j]):
                best = min(best, float(np.linalg.norm(p[i] - p[j])))
    return best


def diameter(t: QPoint) -> float:
    """Largest pairwise distance of ``t``."""
    p = t.points
    if t.q == 1:
        return 0.0
    return float(np.max(np.linalg.norm(p[:, None, :] - p[None, :, :], axis=-1)))


def translate(t: QPoint, y: Sequence[float]) -> QPoint:
    """``tau_y(t)``: every point shifted by ``-y``."""
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != t.n:
        raise InvalidInput(f"translation vector has dimension {y.shape[0]}, expected {t.n}")
    return QPoint(t.points - y[None, :])


def cluster_split(t: QPoint, threshold: float) -> list[QPoint]:
    """Single-linkage clusters of ``t`` at the given distance threshold.

    Points in different clusters are more than ``threshold`` apart.  Clusters
    are returned in order of their first point index.
    """
    if threshold <= 0:
        raise InvalidInput("threshold must be positive")
    if t.q == 1:
        return [t]
    labels = fcluster(linkage(pdist(t.points), method="single"), t=threshold, criterion="distance")
    out: list[QPoint] = []
    seen: dict[int, list[int]] = {}
    for i, lab in enumerate(labels):
        seen.setdefault(int(lab), []).append(i)
    for members in sorted(seen.values(), key=lambda m: m[0]):
        out.append(QPoint(t.points[members]))
    return out


def random_qpoint(rng: np.random.Generator, q: int, n: int, scale: float = 1.0) -> QPoint:
    """A Q-point with i.i.d. Gaussian coordinates."""
    return QPoint(scale * rng.standard_normal((q, n)))


def as_array(points: Iterable[QPoint]) -> np.ndarray:
    """Stack Q-points into a ``(K, q, n)`` array."""
    return np.stack([p.points for p in points])
