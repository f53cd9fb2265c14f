"""Almgren's embedding of Q-points into R^N and the cone complex of its image.

For unit directions ``e_1..e_h`` of ``R^n`` the linear map ``L`` sends an
ordered tuple ``(P_1..P_Q)`` to the ``h`` blocks ``(P_1.e_l, .., P_Q.e_l)``,
the map ``O`` sorts every block increasingly and ``xi = O o L`` (times a
normalising factor ``h**-0.5``) is well defined on unordered Q-points.  Its
image ``cQ`` is a closed cone, decomposed into finitely many open convex cones
("faces") labelled by per-block order/equality patterns.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog, nnls

from .qspace import InvalidInput, QPoint, batch_matching

__all__ = [
    "EmbeddingSpec",
    "Face",
    "ConeComplex",
    "CapabilityError",
    "DomainError",
    "ConvergenceError",
    "lmap",
    "omap",
    "xi",
    "xi_array",
    "face_decomposition",
    "face_of",
    "decode",
    "retract_rho",
    "signature_of",
]

log = logging.getLogger(__name__)

FACE_EPS = 1e-7
DECODE_TOL = 1e-8
STRICT_SLACK = 1e-6


class CapabilityError(RuntimeError):
    """Requested enumeration exceeds the configured desk-scale bound."""


class DomainError(ValueError):
    """A point that should lie on cQ does not (within tolerance)."""


class ConvergenceError(RuntimeError):
    def __init__(self, msg: str, residual: float):
        super().__init__(f"{msg} (best residual {residual:.3e})")
        self.residual = residual


def _spread_directions(n: int, h: int, rng: np.random.Generator) -> np.ndarray:
    if n == 1:
        return np.ones((h, 1))
    if n == 2:
        ang = math.pi * np.arange(h) / h
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    # Fibonacci points on the upper hemisphere, randomly rotated
    k = np.arange(h) + 0.5
    z = 1.0 - k / h
    phi = math.pi * (1 + 5**0.5) * k
    r = np.sqrt(1 - z * z)
    base = np.zeros((h, n))
    base[:, 0] = r * np.cos(phi)
    base[:, 1] = r * np.sin(phi)
    base[:, 2] = z
    if n > 3:
        base[:, 3:] = 0.1 * rng.standard_normal((h, n - 3))
    rot, _ = np.linalg.qr(rng.standard_normal((n, n)))
    d = base @ rot.T
    return d / np.linalg.norm(d, axis=1, keepdims=True)


@dataclass(frozen=True, eq=False)
class EmbeddingSpec:
    """Dimensions and directions defining ``xi``.

    Use :meth:`build` for the default choice of directions; it validates
    injectivity of ``xi`` on random samples.
    """

    q: int
    n: int
    dirs: np.ndarray
    scale: float
    max_q: int = 3
    max_hq: int = 12

    def __post_init__(self) -> None:
        d = np.asarray(self.dirs, dtype=float).reshape(-1, self.n)
        if not np.allclose(np.linalg.norm(d, axis=1), 1.0, atol=1e-12):
            raise InvalidInput("directions must be unit vectors")
        for i in range(len(d)):
            for j in range(i + 1, len(d)):
                if np.allclose(d[i], d[j], atol=1e-12):
                    raise InvalidInput("directions must be pairwise distinct")
        if np.linalg.matrix_rank(d) < self.n:
            raise InvalidInput("directions must span R^n")
        d.setflags(write=False)
        object.__setattr__(self, "dirs", d)

    @property
    def h(self) -> int:
        return self.dirs.shape[0]

    @property
    def N(self) -> int:
        return self.q * self.h

    @classmethod
    def build(
        cls,
        q: int,
        n: int,
        seed: int = 0,
        validate_pairs: int = 10_000,
        max_q: int = 3,
        max_hq: int = 12,
    ) -> "EmbeddingSpec":
        """Default spec: ``h = n(q-1)+1`` maximally spread directions, scale ``h**-0.5``."""
        h = 1 if n == 1 else n * (q - 1) + 1
        rng = np.random.default_rng(seed)
        for attempt in range(10):
            spec = cls(q, n, _spread_directions(n, h, rng), h**-0.5, max_q, max_hq)
            if validate_pairs <= 0 or spec.injectivity_ratio(validate_pairs, seed=seed + attempt) > 1e-6:
                return spec
            log.warning("direction set failed the injectivity check, resampling")
        raise RuntimeError("could not find an injective direction set")

    def injectivity_ratio(self, pairs: int, seed: int = 0) -> float:
        """min |xi(S)-xi(T)| / G(S,T) over random pairs (half of them close)."""
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((pairs, self.q, self.n))
        b = rng.standard_normal((pairs, self.q, self.n))
        half = pairs // 2
        b[:half] = a[:half] + 1e-3 * b[:half]
        _, g2 = batch_matching(a, b)
        g = np.sqrt(np.maximum(g2, 0))
        d = np.linalg.norm(xi_array(a, self) - xi_array(b, self), axis=1)
        ok = g > 1e-12
        return float(np.min(d[ok] / g[ok]))

    @cached_property
    def complex(self) -> "ConeComplex":
        return face_decomposition(self)

    def to_dict(self) -> dict:
        return {"q": self.q, "n": self.n, "h": self.h, "scale": self.scale, "dirs": self.dirs.tolist()}


def _as_tuple_array(p, spec: EmbeddingSpec) -> np.ndarray:
    if isinstance(p, QPoint):
        arr = p.points
    else:
        arr = np.asarray(p, dtype=float).reshape(spec.q, -1)
    if arr.shape != (spec.q, spec.n):
        raise InvalidInput(f"expected a ({spec.q}, {spec.n}) tuple, got {arr.shape}")
    return arr


def lmap(p, spec: EmbeddingSpec) -> np.ndarray:
    """``scale * L(P_1..P_Q)``; block ``l`` holds the projections onto ``e_l``."""
    arr = _as_tuple_array(p, spec)
    return spec.scale * (arr @ spec.dirs.T).T.reshape(-1)


def omap(w, spec: EmbeddingSpec) -> np.ndarray:
    """Sort every ``q``-block of ``w`` increasingly."""
    w = np.asarray(w, dtype=float)
    if w.shape[-1] != spec.N:
        raise InvalidInput(f"expected length {spec.N}, got {w.shape[-1]}")
    return np.sort(w.reshape(*w.shape[:-1], spec.h, spec.q), axis=-1).reshape(w.shape)


def xi(t, spec: EmbeddingSpec) -> np.ndarray:
    """The embedding ``xi(t) = O(L(t))``; independent of the ordering of ``t``."""
    arr = _as_tuple_array(t, spec)
    proj = arr @ spec.dirs.T  # (q, h)
    return spec.scale * np.sort(proj.T, axis=1).reshape(-1)


def xi_array(points: np.ndarray, spec: EmbeddingSpec) -> np.ndarray:
    """``xi`` applied to a stack of tuples of shape ``(..., q, n)``."""
    points = np.asarray(points, dtype=float)
    proj = points @ spec.dirs.T  # (..., q, h)
    blocks = np.sort(np.swapaxes(proj, -1, -2), axis=-1)  # (..., h, q)
    return spec.scale * blocks.reshape(*points.shape[:-2], spec.N)


# ---------------------------------------------------------------------------
# face decomposition

Signature = tuple  # tuple over blocks of tuple of groups (sorted index tuples)


@lru_cache(maxsize=None)
def _weak_orderings(q: int) -> tuple:
    """All ordered set partitions of ``range(q)``."""
    out = []

    def partitions(items):
        if not items:
            yield []
            return
        first, rest = items[0], items[1:]
        for part in partitions(rest):
            for i in range(len(part)):
                yield part[:i] + [[first] + part[i]] + part[i + 1 :]
            yield [[first]] + part

    for part in partitions(list(range(q))):
        for perm in itertools.permutations(part):
            out.append(tuple(tuple(sorted(g)) for g in perm))
    return tuple(sorted(set(out)))


def _relabel(sig: Signature, sigma: Sequence[int]) -> Signature:
    return tuple(tuple(tuple(sorted(sigma[i] for i in g)) for g in block) for block in sig)


def _canonical(sig: Signature, q: int) -> Signature:
    return min(_relabel(sig, s) for s in itertools.permutations(range(q)))


def _constraints(sig: Signature, spec: EmbeddingSpec) -> tuple[np.ndarray, np.ndarray]:
    """Equality rows and strict-inequality rows on the flattened tuple ``x = P.ravel()``."""
    q, n = spec.q, spec.n
    eq, ineq = [], []

    def row(i, l):
        r = np.zeros(q * n)
        r[i * n : (i + 1) * n] = spec.dirs[l]
        return r

    for l, groups in enumerate(sig):
        for g in groups:
            for a, b in zip(g[:-1], g[1:]):
                eq.append(row(b, l) - row(a, l))
        for g0, g1 in zip(groups[:-1], groups[1:]):
            ineq.append(row(g1[0], l) - row(g0[0], l))
    shape = (0, q * n)
    return (np.array(eq) if eq else np.zeros(shape)), (np.array(ineq) if ineq else np.zeros(shape))


def _feasible(a_eq: np.ndarray, a_in: np.ndarray) -> np.ndarray | None:
    """A strictly feasible point of the cone ``a_eq x = 0, a_in x > 0``, or None.

    Maximises the common slack ``t`` over the box ``|x_i| <= 1`` so the point
    sits well inside the cone; strictness means ``t >= STRICT_SLACK``.
    """
    dim = a_eq.shape[1]
    if len(a_in) == 0:
        z = null_space(a_eq) if len(a_eq) else np.eye(dim)
        return z[:, 0] if z.shape[1] else np.zeros(dim)
    # variables (x, t); minimise -t
    c = np.zeros(dim + 1)
    c[-1] = -1.0
    a_ub = np.hstack([-a_in, np.ones((len(a_in), 1))])
    a_eq_t = np.hstack([a_eq, np.zeros((len(a_eq), 1))]) if len(a_eq) else None
    res = linprog(
        c,
        A_ub=a_ub,
        b_ub=np.zeros(len(a_in)),
        A_eq=a_eq_t,
        b_eq=np.zeros(len(a_eq)) if len(a_eq) else None,
        bounds=[(-1.0, 1.0)] * dim + [(None, 1.0)],
        method="highs",
    )
    if res.status != 0 or res.x[-1] < STRICT_SLACK:
        return None
    return res.x[:-1]


@dataclass(eq=False)
class Face:
    """An open convex cone of ``cQ``.

    ``matrix`` maps a flattened tuple in the face's class to its image under
    ``xi`` (a fixed block permutation of ``scale * L``).  The closure of the
    face is ``{matrix @ x : a_eq x = 0, a_in x >= 0}``.
    """

    index: int
    dim: int
    signature: Signature
    representative: np.ndarray
    matrix: np.ndarray
    a_eq: np.ndarray
    a_in: np.ndarray
    _basis: np.ndarray = field(default=None, repr=False)  # null space of a_eq
    _gq: np.ndarray = field(default=None, repr=False)
    _gr: np.ndarray = field(default=None, repr=False)

    def __post_init__(self) -> None:
        z = null_space(self.a_eq) if len(self.a_eq) else np.eye(self.matrix.shape[1])
        self._basis = z
        g = self.matrix @ z
        self._gq, self._gr = np.linalg.qr(g)
        c = self.a_in @ z if len(self.a_in) else np.zeros((0, z.shape[1]))
        self._e = np.linalg.solve(self._gr.T, c.T).T if len(c) else c  # C R^-1

    @property
    def span_basis(self) -> np.ndarray:
        """Orthonormal basis (columns) of the linear span of the face."""
        return self._gq

    def project_span(self, w: np.ndarray) -> np.ndarray:
        return self._gq @ (self._gq.T @ w)

    def project(self, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Nearest point of the closed face to ``w`` and its tuple coordinates.

        Least-distance programming: with ``G = QR`` the problem becomes
        ``min |v|`` subject to ``E v >= f``, solved exactly by NNLS.
        """
        c0 = self._gq.T @ w
        v = np.zeros_like(c0)
        if len(self._e):
            f = -self._e @ c0
            if np.any(f > 0):
                d = len(c0)
                a = np.vstack([self._e.T, f[None, :]])
                b = np.zeros(d + 1)
                b[-1] = 1.0
                u, _ = nnls(a, b, maxiter=50 * a.shape[1])
                r = a @ u - b
                if abs(r[-1]) > 1e-14:
                    v = -r[:d] / r[-1]
        u = np.linalg.solve(self._gr, v + c0)
        x = self._basis @ u
        return self.matrix @ x, x

    def distance(self, w: np.ndarray) -> float:
        p, _ = self.project(w)
        return float(np.linalg.norm(w - p))

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "dim": self.dim,
            "signature": [[list(g) for g in block] for block in self.signature],
            "representative": self.representative.tolist(),
        }


def _order_matrix(sig: Signature, spec: EmbeddingSpec) -> np.ndarray:
    q, n = spec.q, spec.n
    m = np.zeros((spec.N, q * n))
    for l, groups in enumerate(sig):
        order = [i for g in groups for i in g]
        for k, i in enumerate(order):
            m[l * q + k, i * n : (i + 1) * n] = spec.scale * spec.dirs[l]
    return m


@dataclass(eq=False)
class ConeComplex:
    """The faces of ``cQ`` together with their embedding parameters."""

    spec: EmbeddingSpec
    faces: list[Face]

    def __post_init__(self) -> None:
        self._by_sig = {f.signature: f.index for f in self.faces}
        self.top_dim = max(f.dim for f in self.faces)

    def faces_of_dim(self, k: int) -> list[Face]:
        return [f for f in self.faces if f.dim == k]

    @property
    def dims(self) -> list[int]:
        return sorted({f.dim for f in self.faces})

    def index_of(self, sig: Signature) -> int:
        return self._by_sig[_canonical(sig, self.spec.q)]

    def nearest(self, w: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
        """Nearest point of cQ to ``w``: (point, tuple coordinates, distance)."""
        w = np.asarray(w, dtype=float)
        best = None
        for f in self.faces_of_dim(self.top_dim):
            p, x = f.project(w)
            d = float(np.linalg.norm(w - p))
            if best is None or d < best[2] - 1e-15:
                best = (p, x, d)
        return best

    def dist_to_skeleton(self, w: np.ndarray, k: int) -> float:
        fs = self.faces_of_dim(k)
        if not fs:
            return math.inf
        return min(f.distance(w) for f in fs)

    def to_dict(self) -> dict:
        return {"spec": self.spec.to_dict(), "faces": [f.to_dict() for f in self.faces]}


def face_decomposition(spec: EmbeddingSpec) -> ConeComplex:
    """Enumerate the realizable order/equality signatures modulo relabelling."""
    if spec.q > spec.max_q or spec.h * spec.q > spec.max_hq:
        raise CapabilityError(
            f"face enumeration bounded to q <= {spec.max_q} and h*q <= {spec.max_hq}; "
            f"got q={spec.q}, h*q={spec.h * spec.q}"
        )
    q = spec.q
    orders = _weak_orderings(q)
    # relabelling lets the first block list points in index order
    first = [o for o in orders if [i for g in o for i in g] == list(range(q))]
    found: dict[Signature, np.ndarray] = {}

    def dfs(prefix: list):
        if prefix:
            sig = tuple(prefix)
            if _feasible(*_constraints(sig, spec)) is None:
                return
            if len(prefix) == spec.h:
                found.setdefault(_canonical(sig, q), None)
                return
        choices = first if not prefix else orders
        for o in choices:
            dfs(prefix + [o])

    dfs([])
    faces = []
    for idx, sig in enumerate(sorted(found, key=lambda s: (-_dim(s, spec), s))):
        a_eq, a_in = _constraints(sig, spec)
        x = _feasible(a_eq, a_in)
        m = _order_matrix(sig, spec)
        rep = m @ x
        nrm = np.linalg.norm(rep)
        rep = rep / nrm if nrm > 0 else rep
        faces.append(Face(idx, _dim(sig, spec), sig, rep, m, a_eq, a_in))
    faces.sort(key=lambda f: (f.dim, f.signature))
    for i, f in enumerate(faces):
        f.index = i
    return ConeComplex(spec, faces)


def _dim(sig: Signature, spec: EmbeddingSpec) -> int:
    a_eq, _ = _constraints(sig, spec)
    return int(spec.q * spec.n - (np.linalg.matrix_rank(a_eq) if len(a_eq) else 0))


def signature_of(points: np.ndarray, spec: EmbeddingSpec, tol: float) -> Signature:
    """Order/equality pattern of a tuple, values closer than ``tol`` counted equal."""
    proj = spec.scale * (points @ spec.dirs.T)  # (q, h)
    sig = []
    for l in range(spec.h):
        vals = proj[:, l]
        order = sorted(range(spec.q), key=lambda i: (vals[i], i))
        groups, cur = [], [order[0]]
        for a, b in zip(order[:-1], order[1:]):
            if vals[b] - vals[a] <= tol:
                cur.append(b)
            else:
                groups.append(tuple(sorted(cur)))
                cur = [b]
        groups.append(tuple(sorted(cur)))
        sig.append(tuple(groups))
    return tuple(sig)


# ---------------------------------------------------------------------------
# inverse maps


def _decode_refine(p: np.ndarray, blocks: np.ndarray, spec: EmbeddingSpec, iters: int = 100) -> np.ndarray:
    """Alternate rank matching per block and least squares for the points."""
    pinv = np.linalg.pinv(spec.scale * spec.dirs)  # (n, h)
    ranks_prev = None
    for _ in range(iters):
        proj = p @ spec.dirs.T  # (q, h)
        ranks = np.argsort(np.argsort(proj, axis=0, kind="stable"), axis=0, kind="stable")
        targets = np.take_along_axis(blocks.T, ranks, axis=0)  # (q, h)
        p = targets @ pinv.T
        if ranks_prev is not None and np.array_equal(ranks, ranks_prev):
            break
        ranks_prev = ranks
    return p


def decode(w, spec: EmbeddingSpec, tol: float = DECODE_TOL, restarts: int = 8, seed: int = 0) -> QPoint:
    """Recover ``T`` with ``xi(T) = w`` for ``w`` on cQ.

    Initial tuples solve the ``n`` best-conditioned blocks under enumerated
    (or, when too many, random) rank matchings; each start is refined by
    alternating minimisation and the start with the smallest residual wins.
    Raises :class:`ConvergenceError` if no start reaches ``tol * max(1, |w|)``.
    """
    w = np.asarray(w, dtype=float)
    if w.shape != (spec.N,):
        raise InvalidInput(f"expected a vector of length {spec.N}")
    blocks = np.sort(w.reshape(spec.h, spec.q), axis=1)
    thr = tol * max(1.0, float(np.linalg.norm(w)))
    q, n = spec.q, spec.n
    sub = _basis_blocks(spec)
    a = spec.scale * spec.dirs[list(sub)]  # (n, n)
    ainv = np.linalg.inv(a)
    perms = list(itertools.permutations(range(q)))
    combos_total = len(perms) ** (n - 1)
    rng = np.random.default_rng(seed)
    if combos_total <= 64:
        combos = itertools.product(perms, repeat=n - 1)
    else:
        combos = (tuple(perms[rng.integers(len(perms))] for _ in range(n - 1)) for _ in range(max(restarts, 1)))
    best_p, best_r = None, math.inf
    for combo in combos:
        vals = np.empty((q, n))
        vals[:, 0] = blocks[sub[0]]
        for j, perm in enumerate(combo, start=1):
            vals[:, j] = blocks[sub[j]][list(perm)]
        p = _decode_refine(vals @ ainv.T, blocks, spec)
        r = float(np.linalg.norm(xi(p, spec) - w))
        if r < best_r:
            best_p, best_r = p, r
        if best_r <= thr * 1e-3:
            break
    if best_r > thr:
        for _ in range(restarts):
            p = _decode_refine(rng.standard_normal((q, n)) * (np.abs(blocks).max() + 1), blocks, spec)
            r = float(np.linalg.norm(xi(p, spec) - w))
            if r < best_r:
                best_p, best_r = p, r
    if best_r > thr:
        raise ConvergenceError("decode did not reach tolerance", best_r)
    return QPoint(best_p)


@lru_cache(maxsize=64)
def _basis_blocks_cached(key: bytes, n: int) -> tuple:
    dirs = np.frombuffer(key).reshape(-1, n)
    best, best_det = None, -1.0
    for sub in itertools.combinations(range(len(dirs)), n):
        d = abs(np.linalg.det(dirs[list(sub)]))
        if d > best_det + 1e-12:
            best, best_det = sub, d
    return best


def _basis_blocks(spec: EmbeddingSpec) -> tuple:
    return _basis_blocks_cached(spec.dirs.tobytes(), spec.n)


def retract_rho(w, spec: EmbeddingSpec) -> np.ndarray:
    """Nearest point of cQ to ``w``; the identity on cQ.

    Computed exactly as the best projection onto the closures of the
    top-dimensional faces, which cover cQ.
    """
    p, _, _ = spec.complex.nearest(np.asarray(w, dtype=float))
    return p


def face_of(w, complex: ConeComplex, eps: float = FACE_EPS, tol: float = 1e-7) -> int:
    """Index of the unique face containing the point ``w`` of cQ."""
    spec = complex.spec
    w = np.asarray(w, dtype=float)
    p, x, dist = complex.nearest(w)
    if dist > tol * max(1.0, float(np.linalg.norm(w))):
        raise DomainError(f"point is {dist:.3e} away from cQ")
    pts = x.reshape(spec.q, spec.n)
    sig = signature_of(pts, spec, eps * float(np.linalg.norm(w)))
    return complex.index_of(sig)
