"""Almost-projections onto cQ built from radial Kirszbraun extensions.

The map ``rho*_mu`` is assembled skeleton by skeleton.  Around every
``k``-dimensional face ``G`` the current map is rewritten in the normal cone
of ``G`` by a radial extension that vanishes on a small ball, so near ``G``
the final map is the orthogonal projection onto ``G``.  Off cQ the map is
precomposed with the nearest-point retraction.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.spatial.distance import cdist, pdist

from .embedding import ConeComplex, EmbeddingSpec, Face, decode, retract_rho, xi, xi_array
from .qspace import InvalidInput

__all__ = [
    "InconsistentSamples",
    "KirszbraunError",
    "GeometryError",
    "kirszbraun_extend",
    "RadialConeExtension",
    "radial_cone_extension",
    "SkeletonGeometry",
    "build_geometry",
    "AlmostProjection",
    "build_rho_star",
    "apply_rho_star",
    "sample_clustered",
    "stage_ledger",
    "sup_distance_sweep",
    "tube_samples",
    "EnergyInequalityReport",
    "verify_energy_inequality",
    "cone_like_extension",
]

log = logging.getLogger(__name__)

KIRSZBRAUN_TOL = 1e-8
CONSISTENCY_TOL = 1e-9


class InconsistentSamples(ValueError):
    """Sample pairs violate the requested Lipschitz bound."""


class KirszbraunError(RuntimeError):
    """The feasibility solver did not reach tolerance."""


class GeometryError(RuntimeError):
    """Skeleton tubes overlap or the radial lemma's hypotheses fail."""


# ---------------------------------------------------------------------------
# Kirszbraun


def _check_consistency(xs: np.ndarray, ys: np.ndarray, lam: float, tol: float = CONSISTENCY_TOL) -> None:
    if len(xs) < 2:
        return
    dx = pdist(xs)
    dy = pdist(ys)
    bad = dy - lam * dx
    worst = float(bad.max())
    if worst > tol:
        raise InconsistentSamples(f"samples are not {lam:.6g}-Lipschitz (excess {worst:.3e})")


def _violation(y: np.ndarray, ys: np.ndarray, radii: np.ndarray) -> np.ndarray:
    return np.linalg.norm(ys - y, axis=1) - radii


def _polyak(y, ys, radii, max_iter, stop):
    for _ in range(max_iter):
        viol = _violation(y, ys, radii)
        i = int(np.argmax(viol))
        f = viol[i]
        if f <= stop:
            break
        g = y - ys[i]
        # Polyak step with target value 0: lands on the sphere around y_i
        y = y - f * g / np.linalg.norm(g)
    return y


def _ball_projection(y0, ys, radii, max_iter, stop):
    """Projection of ``y0`` onto an intersection of balls.

    Works on the concave dual over the active balls: for multipliers ``l``
    the primal minimiser is ``(y0 + sum l_i y_i) / (1 + sum l_i)`` and the
    dual gradient is ``|y - y_i|^2 - r_i^2``.  Violated balls are added to
    the active set until none remain.
    """
    active = list(np.flatnonzero(_violation(y0, ys, radii) > stop))
    if not active:
        return y0
    y = y0
    for _ in range(len(ys)):
        c = ys[active]
        r2 = radii[active] ** 2

        def neg_dual(lam):
            s = 1.0 + lam.sum()
            y = (y0 + lam @ c) / s
            d2 = np.sum((y - c) ** 2, axis=1) - r2
            val = np.sum((y - y0) ** 2) + lam @ d2
            return -val, -d2

        res = minimize(
            neg_dual,
            np.zeros(len(active)),
            jac=True,
            method="L-BFGS-B",
            bounds=[(0, None)] * len(active),
            options={"maxiter": max_iter, "ftol": 1e-16, "gtol": 1e-14},
        )
        lam = res.x
        y = (y0 + lam @ c) / (1 + lam.sum())
        extra = [i for i in np.flatnonzero(_violation(y, ys, radii) > stop) if i not in active]
        if not extra:
            break
        active += extra
    return y


def kirszbraun_extend(
    xs,
    ys,
    lam: float,
    query,
    *,
    start=None,
    method: str = "polyak",
    tol: float = KIRSZBRAUN_TOL,
    max_iter: int = 10_000,
    check: bool = True,
) -> np.ndarray:
    """A value ``y`` at ``query`` keeping the samples ``lam``-Lipschitz.

    Solves ``max_i |y - y_i| - lam |query - x_i| <= 0``.  ``method="polyak"``
    runs projected subgradient steps from ``start`` (default: the value at
    the nearest sample); ``method="project"`` returns the Euclidean projection
    of ``start`` onto the feasible set, which depends continuously on the
    query when ``start`` does.
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    x = np.asarray(query, dtype=float).reshape(-1)
    if len(xs) != len(ys) or len(xs) == 0:
        raise InvalidInput("need the same positive number of sample inputs and values")
    if lam <= 0:
        raise InvalidInput("lam must be positive")
    if check:
        _check_consistency(xs, ys, lam)
    dist = np.linalg.norm(xs - x, axis=1)
    near = int(np.argmin(dist))
    if dist[near] == 0.0:
        return ys[near].copy()
    radii = lam * dist
    y = ys[near].copy() if start is None else np.asarray(start, dtype=float).reshape(-1).copy()
    scale = max(1.0, float(np.abs(ys).max()))
    stop = 1e-13 * scale
    if method == "project":
        y = _ball_projection(y, ys, radii, max_iter, stop)
        if _violation(y, ys, radii).max() > tol:
            y = _polyak(y, ys, radii, max_iter, stop)
    elif method == "polyak":
        y = _polyak(y, ys, radii, max_iter, stop)
    else:
        raise InvalidInput(f"unknown method {method!r}")
    worst = float(_violation(y, ys, radii).max())
    if worst > tol:
        raise KirszbraunError(f"Kirszbraun solver stopped at violation {worst:.3e} > {tol:.1e}")
    return y


# ---------------------------------------------------------------------------
# radial lemma


@dataclass(eq=False)
class RadialConeExtension:
    """Extension of boundary data on ``dB_b`` of a cone to the whole ``B_b``.

    The data are extended by zero on ``B_tau`` (zero samples at the origin and
    at ``tau * x_i / b``) and then, query by query, by a Kirszbraun value with
    constant ``1 + 2 tau``.  The Kirszbraun value is the projection of the
    query itself onto the feasible set.
    """

    xs: np.ndarray
    vs: np.ndarray
    b: float
    tau: float
    strict_b: bool = True

    def __post_init__(self) -> None:
        self.xs = np.atleast_2d(np.asarray(self.xs, dtype=float))
        self.vs = np.atleast_2d(np.asarray(self.vs, dtype=float))
        if self.strict_b and not self.b > 2:
            raise InvalidInput("b must exceed 2")
        if self.b < 1 + self.tau:
            raise InvalidInput("b must be at least 1 + tau")
        if not 0 < self.tau < 1:
            raise InvalidInput("tau must lie in (0, 1)")
        radii = np.linalg.norm(self.xs, axis=1)
        if not np.allclose(radii, self.b, rtol=1e-9, atol=1e-9):
            raise InvalidInput("boundary samples must lie on the sphere of radius b")
        defect = float(np.max(np.linalg.norm(self.vs - self.xs, axis=1)))
        if defect > self.tau * (1 + 1e-9):
            raise InconsistentSamples(f"|v(x) - x| reaches {defect:.3e} > tau = {self.tau:.3e}")
        if len(self.xs) > 1:
            lip = float(np.max(pdist(self.vs) / np.maximum(pdist(self.xs), 1e-300)))
            if lip > (1 + self.tau) * (1 + 1e-9):
                raise InconsistentSamples(f"boundary data Lipschitz constant {lip:.6g} > 1 + tau")
        zeros = np.vstack([np.zeros((1, self.xs.shape[1])), self.tau * self.xs / self.b])
        self.lam = 1 + 2 * self.tau
        self.sample_x = np.vstack([self.xs, zeros])
        self.sample_y = np.vstack([self.vs, np.zeros_like(zeros)])
        _check_consistency(self.sample_x, self.sample_y, self.lam)

    def __call__(self, query) -> np.ndarray:
        x = np.asarray(query, dtype=float).reshape(-1)
        r = float(np.linalg.norm(x))
        if r <= self.tau:
            return np.zeros_like(x)
        if r > self.b * (1 + 1e-9):
            raise InvalidInput("query outside the ball of radius b")
        return kirszbraun_extend(
            self.sample_x, self.sample_y, self.lam, x, start=x, method="project", check=False
        )


def radial_cone_extension(xs, vs, b: float, tau: float, query) -> np.ndarray:
    """One-shot evaluation of :class:`RadialConeExtension` (requires ``b > 2``)."""
    return RadialConeExtension(xs, vs, b, tau)(query)


# ---------------------------------------------------------------------------
# sampling


def sample_clustered(
    rng: np.random.Generator, q: int, n: int, count: int, scale: float = 1.0, jitter=(1e-4, 1.0)
) -> np.ndarray:
    """Random tuples ``(count, q, n)`` whose points form random clusters.

    Cluster sizes and jitter (log-uniform in ``jitter``, relative to
    ``scale``) vary, so samples land near faces of every dimension.
    """
    out = np.empty((count, q, n))
    for s in range(count):
        kc = int(rng.integers(1, q + 1))
        labels = rng.integers(0, kc, size=q)
        centers = scale * rng.standard_normal((kc, n))
        j = scale * math.exp(rng.uniform(math.log(jitter[0]), math.log(jitter[1])))
        out[s] = centers[labels] + j * rng.standard_normal((q, n)) * (rng.random() < 0.8)
    return out


# ---------------------------------------------------------------------------
# skeleton geometry


@dataclass(eq=False)
class SkeletonGeometry:
    """Constants ``c_k`` and tube tests ``G_{2c_k, c_{k-1}}`` for a cone complex."""

    complex: ConeComplex
    c: dict  # dim -> c_k ; c[top-1] = 1
    kappa: float
    gap: float

    @property
    def top(self) -> int:
        return self.complex.top_dim

    @property
    def stage_dims(self) -> list[int]:
        return [k for k in self.complex.dims if k < self.top]

    def dist_lower(self, x: np.ndarray, k: int) -> float:
        """Distance from ``x`` to the union of faces of dimension below ``k``."""
        best = math.inf
        for f in self.complex.faces:
            if f.dim < k:
                best = min(best, f.distance(x))
        return best

    def c_lower(self, k: int) -> float:
        lower = [d for d in self.c if d < k]
        return self.c[max(lower)] if lower else math.inf

    def tube_of(self, x: np.ndarray, k: int, a: float | None = None, b: float | None = None) -> Face | None:
        """The ``k``-face ``G`` with ``x`` in ``G_{a, b}`` (defaults ``a = 2c_k``, ``b = c_{k-1}``)."""
        a = 2 * self.c[k] if a is None else a
        b = self.c_lower(k) if b is None else b
        hits = [f for f in self.complex.faces_of_dim(k) if f.distance(x) <= a]
        if not hits:
            return None
        if self.dist_lower(x, k) < b:
            return None
        if len(hits) > 1:
            raise GeometryError(f"point lies in {len(hits)} tubes of dimension {k}")
        return hits[0]

    def to_dict(self) -> dict:
        return {"c": {str(k): v for k, v in sorted(self.c.items())}, "kappa": self.kappa, "gap": self.gap}


def _tube_overlap(complex: ConeComplex, pts: np.ndarray, k: int, a: float, b: float) -> tuple[bool, float]:
    faces = complex.faces_of_dim(k)
    lower = [f for f in complex.faces if f.dim < k]
    members: dict[int, list] = {}
    overlap = False
    for x in pts:
        if lower and min(f.distance(x) for f in lower) < b:
            continue
        hits = [f.index for f in faces if f.distance(x) <= a]
        if len(hits) > 1:
            overlap = True
        for h in hits:
            members.setdefault(h, []).append(x)
    gap = math.inf
    keys = sorted(members)
    for i in range(len(keys)):
        for j in range(i + 1, len(keys)):
            gap = min(gap, float(cdist(np.array(members[keys[i]]), np.array(members[keys[j]])).min()))
    return overlap, gap


def build_geometry(complex: ConeComplex, seed: int = 0, samples: int = 4000, kappa0: float = 4.0) -> SkeletonGeometry:
    """Choose ``c_k`` by doubling ``kappa`` until sampled tubes are disjoint."""
    spec = complex.spec
    rng = np.random.default_rng(seed)
    top = complex.top_dim
    dims = [k for k in complex.dims if k < top]
    kappa = kappa0
    for _ in range(20):
        c = {top - 1: 1.0}
        for k in sorted(dims, reverse=True):
            c[k] = kappa ** (top - 1 - k)
        ok, gap = True, math.inf
        for k in dims:
            if len(complex.faces_of_dim(k)) < 2:
                continue
            lower_c = [c[d] for d in c if d < k]
            b = c[max(d for d in c if d < k)] if lower_c else math.inf
            scale = 4 * (b if math.isfinite(b) else c[k])
            pts = xi_array(sample_clustered(rng, spec.q, spec.n, samples, scale), spec)
            overlap, g = _tube_overlap(complex, pts, k, 2 * c[k], b)
            if overlap:
                ok = False
                break
            gap = min(gap, g)
        if ok:
            return SkeletonGeometry(complex, c, kappa, gap)
        kappa *= 2
    raise GeometryError("could not separate skeleton tubes")


# ---------------------------------------------------------------------------
# the almost-projection


@dataclass(eq=False)
class StageFace:
    face: Face
    base: np.ndarray
    tau: float
    ext: RadialConeExtension | None
    defect: float
    lip: float


@dataclass(eq=False)
class AlmostProjection:
    """``rho*_mu``: stage maps on cQ, precomposed off cQ with the retraction."""

    spec: EmbeddingSpec
    mu: float
    geometry: SkeletonGeometry
    stages: dict = field(default_factory=dict)  # dim -> list[StageFace]
    seed: int = 0

    @property
    def nq(self) -> int:
        return self.spec.n * self.spec.q

    @property
    def mu_max(self) -> float:
        return min(1.0, self.geometry.gap / 2) if self.geometry.gap > 0 else 0.0

    def stage_value(self, x: np.ndarray, kmin: int) -> np.ndarray:
        """``f_{kmin}(x)`` for ``x`` on cQ (``f_top`` is the identity)."""
        for k in self.geometry.stage_dims:
            if k < kmin or k not in self.stages:
                continue
            g = self.geometry.tube_of(x, k)
            if g is None:
                continue
            sf = next(s for s in self.stages[k] if s.face is g)
            y = g.project_span(x)
            z = x - y
            if np.linalg.norm(z) <= sf.tau:
                return y
            return retract_rho(y + sf.ext(z), self.spec)
        return x

    def on_cq(self, x: np.ndarray) -> np.ndarray:
        """``rho*_0`` on cQ."""
        return self.stage_value(np.asarray(x, dtype=float), min(self.geometry.complex.dims))

    def __call__(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        x = retract_rho(w, self.spec)
        return self.on_cq(x)


def _tau_for(mu: float, k: int, nq: int) -> float:
    return mu ** (2.0 ** (k + 1 - nq))


def _normal_directions(face: Face, base: np.ndarray, spec: EmbeddingSpec, rng, count: int, step: float):
    _, x0 = face.project(base)
    t0 = x0.reshape(spec.q, spec.n)
    dirs = []
    for _ in range(count * 4):
        t = t0 + step * rng.standard_normal(t0.shape) * rng.random()
        x = xi(t, spec)
        z = x - base
        z = z - face.project_span(z)
        nz = np.linalg.norm(z)
        if nz > 1e-9 * step:
            dirs.append(z / nz)
        if len(dirs) >= count:
            break
    if not dirs:
        return np.zeros((0, spec.N))
    d = np.array(dirs)
    _, idx = np.unique(np.round(d, 9), axis=0, return_index=True)
    return d[np.sort(idx)]


def build_rho_star(
    spec: EmbeddingSpec,
    mu: float,
    seed: int = 0,
    density: float = 50.0,
    geometry: SkeletonGeometry | None = None,
) -> AlmostProjection:
    """Construct ``rho*_mu`` stage by stage from the top skeleton down."""
    complex = spec.complex
    geometry = geometry or build_geometry(complex, seed=seed)
    proj = AlmostProjection(spec, mu, geometry, {}, seed)
    if not 0 < mu < proj.mu_max:
        raise GeometryError(f"mu must lie in (0, {proj.mu_max:.4g})")
    rng = np.random.default_rng(seed)
    nq = proj.nq
    for k in sorted(geometry.stage_dims, reverse=True):
        b = 2 * geometry.c[k]
        c_low = geometry.c_lower(k)
        entries = []
        for face in complex.faces_of_dim(k):
            rep_lower = geometry.dist_lower(face.representative, k)
            if math.isfinite(rep_lower):
                radius = (2 * c_low + 4 * b) / rep_lower
                step = 0.25 * radius * rep_lower
            else:
                radius, step = 0.0, 1.0
            base = radius * face.representative
            count = max(24, int(density * b))
            dirs = _normal_directions(face, base, spec, rng, count, step)
            if len(dirs) == 0:
                raise GeometryError(f"face {face.index} has an empty normal cone")
            zs = b * dirs
            vals = np.array([proj.stage_value(base + z, k + 1) - base for z in zs])
            tangential = np.array([face.project_span(v) for v in vals])
            vals = vals - tangential
            defect = float(np.max(np.linalg.norm(vals - zs, axis=1)))
            defect = max(defect, float(np.max(np.linalg.norm(tangential, axis=1))))
            lip = float(np.max(pdist(vals) / pdist(zs))) if len(zs) > 1 else 1.0
            tau = max(_tau_for(mu, k, nq), defect * (1 + 1e-9), (lip - 1) * (1 + 1e-9))
            if tau >= 1:
                raise GeometryError(f"radial lemma needs tau < 1, got {tau:.3g} at dimension {k}")
            ext = RadialConeExtension(zs, vals, b, tau, strict_b=False)
            entries.append(StageFace(face, base, tau, ext, defect, lip))
        proj.stages[k] = entries
    return proj


def tube_samples(p: AlmostProjection, count: int, seed: int = 0) -> list[tuple[Face, np.ndarray]]:
    """Points of cQ within ``mu`` of a stage face ``F`` and ``2 c_{k-1}`` away from lower faces.

    On these points ``rho*_mu`` must agree with the projection onto ``F``.
    Each is built by perturbing the decoded tuple of a scaled face
    representative; candidates outside the tube are discarded.
    """
    rng = np.random.default_rng(seed)
    spec = p.spec
    geo = p.geometry
    faces = [f for k in geo.stage_dims for f in geo.complex.faces_of_dim(k)]
    if not faces:
        return []
    out = []
    for i in range(count * 20):
        if len(out) >= count:
            break
        face = faces[i % len(faces)]
        k = face.dim
        need = 2 * geo.c_lower(k) if math.isfinite(geo.c_lower(k)) else 0.0
        low = geo.dist_lower(face.representative, k)
        radius = (need + 2 * p.mu + 1.0) / low if math.isfinite(low) and low > 0 else 1.0 + rng.random()
        base = radius * (1 + rng.random()) * face.representative
        t0 = decode(base, spec).points
        t = t0 + p.mu * rng.random() * rng.standard_normal(t0.shape) / math.sqrt(t0.size)
        x = xi(t, spec)
        if face.distance(x) <= p.mu and geo.dist_lower(x, k) >= need:
            out.append((face, x))
    return out


def apply_rho_star(p: AlmostProjection, w) -> np.ndarray:
    return p(w)


def stage_ledger(p: AlmostProjection, points: np.ndarray, pairs: int = 2000, seed: int = 0) -> list[dict]:
    """Sampled ``Lip(f_k)`` and ``sup |f_k(x) - x|`` per stage on cQ points."""
    rng = np.random.default_rng(seed)
    rows = []
    dims = [min(p.geometry.complex.dims)] + [k for k in sorted(p.geometry.stage_dims)]
    top = p.geometry.top
    for k in sorted(set(dims) | {top}, reverse=True):
        vals = np.array([p.stage_value(x, k) for x in points])
        sup = float(np.max(np.linalg.norm(vals - points, axis=1)))
        i = rng.integers(0, len(points), pairs)
        j = rng.integers(0, len(points), pairs)
        dx = np.linalg.norm(points[i] - points[j], axis=1)
        ok = dx > 1e-12
        lip = float(np.max(np.linalg.norm(vals[i] - vals[j], axis=1)[ok] / dx[ok])) if ok.any() else 1.0
        rows.append({"k": k, "lip": lip, "sup": sup})
    return rows


def sup_distance_sweep(spec: EmbeddingSpec, mus: Sequence[float], samples: int = 400, seed: int = 0):
    """``sup |rho*_mu(P) - P|`` over sampled cQ points for each ``mu`` and the log-log slope."""
    rng = np.random.default_rng(seed)
    pts = xi_array(sample_clustered(rng, spec.q, spec.n, samples, 2.0), spec)
    geometry = build_geometry(spec.complex, seed=seed)
    sups = []
    for mu in mus:
        p = build_rho_star(spec, mu, seed=seed, geometry=geometry)
        sups.append(max(float(np.linalg.norm(p.on_cq(x) - x)) for x in pts))
    slope = float(np.polyfit(np.log(mus), np.log(sups), 1)[0])
    return list(zip(mus, sups)), slope


# ---------------------------------------------------------------------------
# energy inequality


@dataclass
class EnergyInequalityReport:
    lhs: list
    near: list
    far: list
    required_c: list
    mu: float
    exponent: float

    @property
    def fitted_c(self) -> float:
        return max([0.0] + [c for c in self.required_c if math.isfinite(c)])

    def holds(self, c: float) -> bool:
        f = self.mu**self.exponent
        return all(l <= (1 + c * f) * a + c * b + 1e-12 * (1 + l) for l, a, b in zip(self.lhs, self.near, self.far))


def _grid_energy_split(values: np.ndarray, dist: np.ndarray, thr: float) -> tuple[float, float]:
    """Forward-difference energy on a 2-D grid, split by distance to cQ."""
    near = far = 0.0
    for axis in (0, 1):
        d = np.diff(values, axis=axis)
        e = np.sum(d * d, axis=-1)
        m = np.maximum(np.take(dist, range(dist.shape[axis] - 1), axis=axis), np.take(dist, range(1, dist.shape[axis]), axis=axis))
        near += float(e[m <= thr].sum())
        far += float(e[m > thr].sum())
    return near, far


def verify_energy_inequality(p: AlmostProjection, fields: Sequence[np.ndarray]) -> EnergyInequalityReport:
    """Compare ``int |D(rho* o u)|^2`` with the two-region bound for grid fields.

    Each field is an array ``(nx, ny, N)`` of samples on a unit-spacing grid;
    the energy is the forward-difference sum (a fixed multiple of the
    continuum energy, irrelevant for the comparison).
    """
    thr = p.mu**p.nq
    expo = 2.0 ** (-p.nq)
    lhs, near, far, req = [], [], [], []
    for u in fields:
        u = np.asarray(u, dtype=float)
        flat = u.reshape(-1, u.shape[-1])
        proj = np.array([p(w) for w in flat]).reshape(u.shape)
        dist = np.array([p.spec.complex.nearest(w)[2] for w in flat]).reshape(u.shape[:-1])
        a, b = _grid_energy_split(u, dist, thr)
        l = sum(float(np.sum(np.diff(proj, axis=ax) ** 2)) for ax in (0, 1))
        lhs.append(l)
        near.append(a)
        far.append(b)
        denom = p.mu**expo * a + b
        req.append((l - a) / denom if denom > 0 else (0.0 if l <= a + 1e-12 else math.inf))
    return EnergyInequalityReport(lhs, near, far, req, p.mu, expo)


# ---------------------------------------------------------------------------
# cone-like extension


def cone_like_extension(boundary: Callable[[np.ndarray], np.ndarray], points: np.ndarray, center=None) -> np.ndarray:
    """``h(x) = sum_i [[ |x|_inf u_i(x / |x|_inf) ]]`` on a cube centred at ``center``.

    ``boundary`` maps a point of the unit cube's boundary to a ``(q, n)``
    array; ``points`` has shape ``(K, m)``.  Returns ``(K, q, n)``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    c = np.zeros(pts.shape[1]) if center is None else np.asarray(center, dtype=float)
    out = []
    q_shape = None
    for x in pts - c:
        r = float(np.max(np.abs(x)))
        if r == 0.0:
            out.append(None)
            continue
        val = np.asarray(boundary(x / r), dtype=float)
        q_shape = val.shape
        out.append(r * val)
    if q_shape is None:
        raise InvalidInput("all points coincide with the centre")
    return np.array([np.zeros(q_shape) if v is None else v for v in out])
