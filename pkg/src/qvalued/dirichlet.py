"""Dirichlet energy of discrete Q-valued maps and the constructions built on it.

The discrete energy of a field ``u`` on a P1 mesh is

    D(u) = sum_e c_e G(u(a_e), u(b_e))^2,

with ``c_e = -K_ab`` the off-diagonal entries of the P1 stiffness matrix.
For single-valued fields it is exactly ``u^T K u``.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import splu

from .embedding import CapabilityError, EmbeddingSpec, decode, retract_rho, xi_array
from .mesh import Mesh, QField
from .qspace import InvalidInput, QPoint, batch_matching

__all__ = [
    "EnergyReport",
    "MinimizerOptions",
    "MinimizeResult",
    "dirichlet_energy",
    "gradient_density",
    "harmonic_extension",
    "minimize_dirichlet",
    "ReverseHolderReport",
    "reverse_holder_check",
    "TruncationReport",
    "lipschitz_truncate",
    "AnnulusReport",
    "interpolate_annulus",
    "mollify",
    "CompetitorReport",
    "build_competitor",
]

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# energy


@dataclass
class EnergyReport:
    """Total energy, per-cell energies and densities, and an optional iteration trace."""

    total: float
    cell_energy: np.ndarray
    density: np.ndarray
    trace: list = field(default_factory=list)  # (iteration, energy, max subgradient)
    converged: bool = True

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "energy", "max_subgradient"])
        for it, e, g in self.trace:
            w.writerow([it, repr(float(e)), repr(float(g))])
        return buf.getvalue()


def _edge_costs(mesh: Mesh, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    e = mesh.edges
    return batch_matching(values[e[:, 0]], values[e[:, 1]])


def dirichlet_energy(u: QField) -> EnergyReport:
    """Assignment-coupled P1 energy of ``u``, split over cells."""
    mesh = u.mesh
    _, g2 = _edge_costs(mesh, u.values)
    idx, w = mesh.cell_edges
    cell = np.sum(w * g2[idx], axis=1)
    return EnergyReport(float(cell.sum()), cell, cell / mesh.volumes)


def gradient_density(u: QField) -> np.ndarray:
    """Per-cell ``|Du|^2`` from the aligned sheets; nonnegative by construction."""
    al, _ = u.aligned  # (C, m+1, q, n)
    g = u.mesh.gradients  # (C, m+1, m)
    du = np.einsum("cjk,cjqn->cqnk", g, al)
    return np.sum(du * du, axis=(1, 2, 3))


def harmonic_extension(mesh: Mesh, values: np.ndarray, fixed: np.ndarray | None = None) -> np.ndarray:
    """Discrete harmonic extension of ``values`` from the ``fixed`` vertices (default: boundary)."""
    fixed = mesh.boundary if fixed is None else np.asarray(fixed, dtype=bool)
    vals = np.asarray(values, dtype=float)
    flat = vals.reshape(mesh.nv, -1).copy()
    free = ~fixed
    if not free.any():
        return vals.copy()
    k = mesh.stiffness_matrix()
    kii = k[free][:, free].tocsc()
    kib = k[free][:, fixed]
    flat[free] = splu(kii).solve(np.asarray(-(kib @ flat[fixed])))
    return flat.reshape(vals.shape)


# ---------------------------------------------------------------------------
# minimisation


@dataclass
class MinimizerOptions:
    """Settings for :func:`minimize_dirichlet`.

    ``tol`` is relative: the absolute stationarity threshold is
    ``tol * (initial energy + 1)``.
    """

    tol: float = 1e-8
    max_iter: int = 10_000
    restarts: int = 5
    seed: int = 0
    init: str = "xi"  # "xi" or "sheets"


@dataclass
class MinimizeResult:
    field: QField
    report: EnergyReport
    stationarity: float
    restarts_energy: list


def _sheet_system(mesh: Mesh, q: int, sigma: np.ndarray):
    """Weighted Laplacian of the sheet graph for the given edge matchings."""
    e = mesh.edges
    c = mesh.edge_weights
    keep = c > 0
    e, c, sigma = e[keep], c[keep], sigma[keep]
    a = (e[:, 0:1] * q + np.arange(q)[None, :]).ravel()
    b = (e[:, 1:2] * q + sigma).ravel()
    w = np.repeat(c, q)
    size = mesh.nv * q
    rows = np.concatenate([a, b, a, b])
    cols = np.concatenate([a, b, b, a])
    vals = np.concatenate([w, w, -w, -w])
    return coo_matrix((vals, (rows, cols)), shape=(size, size)).tocsr()


def _energy_values(mesh: Mesh, values: np.ndarray) -> tuple[float, np.ndarray]:
    sigma, g2 = _edge_costs(mesh, values)
    return float(np.dot(mesh.edge_weights, g2)), sigma


def _alternate(mesh, values, fixed_nodes, max_iter, tol_abs):
    """Global solve with frozen matchings, then rematch; monotone in energy."""
    q, n = values.shape[1], values.shape[2]
    x = values.reshape(-1, n).copy()
    free = ~fixed_nodes
    energy, sigma = _energy_values(mesh, values)
    trace = [(0, energy, math.nan)]
    it = 0
    for it in range(1, max_iter + 1):
        lap = _sheet_system(mesh, q, sigma)
        lff = lap[free][:, free].tocsc()
        rhs = -(lap[free][:, fixed_nodes] @ x[fixed_nodes])
        cand = x.copy()
        cand[free] = splu(lff).solve(np.asarray(rhs))
        new_energy, new_sigma = _energy_values(mesh, cand.reshape(values.shape))
        if new_energy > energy:  # rounding only; keep the previous iterate
            break
        x = cand
        changed = not np.array_equal(new_sigma, sigma)
        drop = energy - new_energy
        energy, sigma = new_energy, new_sigma
        trace.append((it, energy, math.nan))
        if not changed or drop <= tol_abs * 1e-3:
            break
    return x.reshape(values.shape), energy, trace


def _stationarity(mesh: Mesh, values: np.ndarray, fixed_nodes: np.ndarray) -> float:
    q, n = values.shape[1], values.shape[2]
    _, sigma = _energy_values(mesh, values)
    lap = _sheet_system(mesh, q, sigma)
    grad = 2.0 * (lap @ values.reshape(-1, n))
    grad[fixed_nodes] = 0.0
    return float(np.max(np.linalg.norm(grad, axis=1))) if len(grad) else 0.0


def _as_boundary_array(mesh: Mesh, boundary) -> np.ndarray:
    nb = int(mesh.boundary.sum())
    if isinstance(boundary, np.ndarray):
        arr = np.asarray(boundary, dtype=float)
    else:
        arr = np.stack([p.points if isinstance(p, QPoint) else np.asarray(p, dtype=float) for p in boundary])
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.shape[0] != nb:
        raise InvalidInput(f"boundary data for {arr.shape[0]} vertices, mesh has {nb}")
    return arr


def _initial_values(mesh: Mesh, bvals: np.ndarray, opts: MinimizerOptions) -> np.ndarray:
    q, n = bvals.shape[1:]
    vals = np.zeros((mesh.nv, q, n))
    vals[mesh.boundary] = bvals
    if opts.init == "xi" and q > 1:
        try:
            spec = EmbeddingSpec.build(q, n, seed=opts.seed, validate_pairs=2000)
            cx = spec.complex
            w = np.zeros((mesh.nv, spec.N))
            w[mesh.boundary] = xi_array(bvals, spec)
            w = harmonic_extension(mesh, w)
            for v in np.flatnonzero(~mesh.boundary):
                _, x, _ = cx.nearest(w[v])
                vals[v] = x.reshape(q, n)
            return vals
        except CapabilityError:
            log.info("embedding unavailable for (q=%d, n=%d), using sheetwise init", q, n)
    vals = harmonic_extension(mesh, vals.reshape(mesh.nv, -1)).reshape(mesh.nv, q, n)
    return vals


def minimize_dirichlet(mesh: Mesh, boundary, opts: MinimizerOptions | None = None, initial=None) -> MinimizeResult:
    """Discrete Dirichlet minimiser with prescribed boundary values.

    Alternates an exact global solve of the quadratic energy on the sheet
    graph (edge matchings frozen) with optimal rematching of every edge.
    Random sheet permutations on a ball followed by the same descent serve as
    restarts; the lowest-energy run wins.
    """
    opts = opts or MinimizerOptions()
    bvals = _as_boundary_array(mesh, boundary)
    q, n = bvals.shape[1:]
    if initial is not None:
        init = np.array(initial.values if isinstance(initial, QField) else initial, dtype=float)
        init[mesh.boundary] = bvals
    else:
        init = _initial_values(mesh, bvals, opts)
    fixed_nodes = np.repeat(mesh.boundary, q)
    e0, _ = _energy_values(mesh, init)
    tol_abs = opts.tol * (e0 + 1.0)
    best, best_e, trace = _alternate(mesh, init, fixed_nodes, opts.max_iter, tol_abs)
    rng = np.random.default_rng(opts.seed)
    interior = np.flatnonzero(~mesh.boundary)
    restart_e = [best_e]
    if q > 1 and len(interior):
        scale = float(np.ptp(mesh.vertices, axis=0).max())
        amp = 1e-3 * (float(np.abs(bvals).max()) + 1.0)
        for _ in range(opts.restarts):
            c = mesh.vertices[interior[rng.integers(len(interior))]]
            rad = scale * rng.uniform(0.1, 0.4)
            ball = interior[np.linalg.norm(mesh.vertices[interior] - c, axis=1) < rad]
            start = best.copy()
            perm = rng.permutation(q)
            start[ball] = start[ball][:, perm]
            start[interior] += amp * rng.standard_normal(start[interior].shape)
            cand, e, _ = _alternate(mesh, start, fixed_nodes, opts.max_iter, tol_abs)
            restart_e.append(e)
            if e < best_e - tol_abs:
                best, best_e = cand, e
    stat = _stationarity(mesh, best, fixed_nodes)
    trace = trace + [(len(trace), best_e, stat)]
    u = QField(mesh, best)
    rep = dirichlet_energy(u)
    rep.trace = trace
    rep.converged = stat <= tol_abs
    return MinimizeResult(u, rep, stat, restart_e)


# ---------------------------------------------------------------------------
# reverse Hoelder


@dataclass
class ReverseHolderReport:
    s: float
    p: float
    rows: list  # (center x, center y, r, ratio)
    max_ratio: float
    lp_ratio: float


def reverse_holder_check(
    u: QField,
    inner: float,
    s: float,
    p: float,
    radii: Sequence[float] = (0.1, 0.2),
    centers: np.ndarray | None = None,
) -> ReverseHolderReport:
    """Ratios ``(avg_{B_r}|Du|^2)^(1/2) / (avg_{B_2r}|Du|^s)^(1/s)`` over a ball sweep.

    ``inner`` is the radius of a ball concentric with the domain; balls
    ``B_2r`` are required to lie inside it.  Also reports
    ``||Du||_{L^p(inner)} / ||Du||_{L^2}``.
    """
    m = u.mesh.m
    if not 2 * (m - 1) / m < s < 2:
        raise InvalidInput(f"s must lie in ({2 * (m - 1) / m:g}, 2)")
    if not p > 2:
        raise InvalidInput("p must exceed 2")
    mesh = u.mesh
    dens = gradient_density(u)
    vol = mesh.volumes
    x = mesh.centroids
    center0 = mesh.vertices.mean(axis=0) if mesh.grid is not None else np.zeros(m)
    centers = np.atleast_2d(center0 if centers is None else np.asarray(centers, dtype=float))
    rows = []
    for c in centers:
        for r in radii:
            if np.linalg.norm(c - center0) + 2 * r > inner + 1e-12:
                continue
            d = np.linalg.norm(x - c, axis=1)
            b1, b2 = d < r, d < 2 * r
            num = math.sqrt(np.dot(vol[b1], dens[b1]) / vol[b1].sum())
            den = (np.dot(vol[b2], dens[b2] ** (s / 2)) / vol[b2].sum()) ** (1 / s)
            rows.append((*map(float, c), float(r), num / den if den > 0 else math.inf))
    if not rows:
        raise InvalidInput("no admissible balls inside the inner region")
    inside = np.linalg.norm(x - center0, axis=1) < inner
    lp = np.dot(vol[inside], dens[inside] ** (p / 2)) ** (1 / p)
    l2 = math.sqrt(np.dot(vol, dens))
    finite = [row[-1] for row in rows]
    return ReverseHolderReport(s, p, rows, float(max(finite)), float(lp / l2) if l2 > 0 else 0.0)


# ---------------------------------------------------------------------------
# Lipschitz truncation


@dataclass
class TruncationReport:
    level: float
    bad: np.ndarray
    lip_in: float
    lip_out: float
    energy_in: float
    energy_out: float
    trace_error: float


def _vertex_slopes(u: QField) -> np.ndarray:
    mesh = u.mesh
    e = mesh.edges
    _, g2 = _edge_costs(mesh, u.values)
    ratio = np.sqrt(np.maximum(g2, 0)) / np.linalg.norm(mesh.vertices[e[:, 0]] - mesh.vertices[e[:, 1]], axis=1)
    g = np.zeros(mesh.nv)
    np.maximum.at(g, e[:, 0], ratio)
    np.maximum.at(g, e[:, 1], ratio)
    return g


def _vertex_maximal(mesh: Mesh, g: np.ndarray, radii: Sequence[float]) -> np.ndarray:
    from scipy.spatial import cKDTree

    tree = cKDTree(mesh.vertices)
    w = mesh.lumped_mass
    out = g.copy()
    for r in radii:
        for v, nb in enumerate(tree.query_ball_point(mesh.vertices, r)):
            nb = np.asarray(nb)
            out[v] = max(out[v], float(np.dot(w[nb], g[nb]) / w[nb].sum()))
    return out


def lipschitz_truncate(u: QField, level: float, preserve_boundary: bool = False, scales: int = 4) -> tuple[QField, TruncationReport]:
    """Replace ``u`` where the local maximal slope exceeds ``level``.

    Good vertices keep their values; the rest are filled with the discrete
    Dirichlet minimiser that has the good values (and, with
    ``preserve_boundary``, the boundary values) as constraints.
    """
    if not level > 0:
        raise InvalidInput("level must be positive")
    mesh = u.mesh
    g = _vertex_slopes(u)
    h = mesh.spacing
    mg = _vertex_maximal(mesh, g, [h * 2**k for k in range(scales)])
    bad = mg > level
    fixed = ~bad
    if preserve_boundary:
        fixed = fixed | mesh.boundary
    values = u.values.copy()
    if bad.any():
        if not fixed.any():
            fixed = np.zeros(mesh.nv, dtype=bool)
            fixed[int(np.argmin(g))] = True
        q = u.q
        fixed_nodes = np.repeat(fixed, q)
        start = values.copy()
        free_vals = harmonic_extension(mesh, values.reshape(mesh.nv, -1), fixed).reshape(values.shape)
        start[~fixed] = free_vals[~fixed]
        values, _, _ = _alternate(mesh, start, fixed_nodes, 1000, 1e-12)
    out = QField(mesh, values)
    bidx = mesh.boundary
    _, g2 = batch_matching(u.values[bidx], values[bidx])
    rep = TruncationReport(
        level,
        bad,
        u.lipschitz(),
        out.lipschitz(),
        dirichlet_energy(u).total,
        dirichlet_energy(out).total,
        float(np.sqrt(np.max(g2))) if len(g2) else 0.0,
    )
    return out, rep


# ---------------------------------------------------------------------------
# annulus interpolation


@dataclass
class AnnulusReport:
    eps: float
    energy_h: float
    energy_f: float
    boundary_energy_f: float
    boundary_energy_g: float
    mismatch: float
    fitted_c: float
    lip_h: float
    lip_f: float
    lip_g: float
    sup_mismatch: float
    lip_constant: float

    def holds(self, c: float) -> bool:
        rhs = self.energy_f + self.eps * (self.boundary_energy_f + self.boundary_energy_g)
        return self.energy_h <= rhs + c * self.mismatch / self.eps + 1e-12 * max(1.0, rhs)


def _boundary_loop(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    seg = mesh.boundary_facets
    length = np.linalg.norm(mesh.vertices[seg[:, 0]] - mesh.vertices[seg[:, 1]], axis=1)
    return seg, length


def _tangential_energy(mesh: Mesh, values: np.ndarray) -> float:
    seg, length = _boundary_loop(mesh)
    _, g2 = batch_matching(values[seg[:, 0]], values[seg[:, 1]])
    return float(np.sum(g2 / length))


def _boundary_integral(mesh: Mesh, density: np.ndarray) -> float:
    seg, length = _boundary_loop(mesh)
    return float(np.sum(0.5 * length * (density[seg[:, 0]] + density[seg[:, 1]])))


def interpolate_annulus(f: QField, g, eps: float, radius: float | None = None) -> tuple[QField, AnnulusReport]:
    """Glue ``f`` (rescaled into ``B_{r-eps}``) to boundary data ``g`` on ``dB_r``.

    ``g`` is either an array of values on the mesh's boundary vertices or a
    callable mapping points ``(K, 2)`` to ``(K, q, n)``.  In the annulus the
    two traces are matched optimally and interpolated linearly in the radius.
    """
    mesh = f.mesh
    x = mesh.vertices
    r = float(np.max(np.linalg.norm(x, axis=1))) if radius is None else float(radius)
    if not 0 < eps < r:
        raise InvalidInput("eps must lie in (0, r)")
    bmask = mesh.boundary
    if callable(g):
        gb_vertices = np.asarray(g(x[bmask]), dtype=float)
    else:
        gb_vertices = np.asarray(g, dtype=float)
    if gb_vertices.ndim == 2:
        gb_vertices = gb_vertices[:, :, None]
    if gb_vertices.shape != (int(bmask.sum()), f.q, f.n):
        raise InvalidInput("boundary data must have one (q, n) value per boundary vertex")
    gfield_vals = f.values.copy()
    gfield_vals[bmask] = gb_vertices
    gfield = QField(mesh, gfield_vals)

    rad = np.linalg.norm(x, axis=1)
    out = np.empty_like(f.values)
    inner = rad <= r - eps
    out[inner] = f.sample(x[inner] * r / (r - eps))
    ann = ~inner
    if ann.any():
        theta = x[ann] / np.maximum(rad[ann], 1e-300)[:, None]
        fb = f.sample(r * theta)
        gb = gfield.trace_at(r * theta)
        sig, _ = batch_matching(fb, gb)
        gb = np.take_along_axis(gb, sig[:, :, None], axis=1)
        t = ((rad[ann] - (r - eps)) / eps)[:, None, None]
        out[ann] = (1 - t) * fb + t * gb
    out[bmask] = gb_vertices
    h = QField(mesh, out)

    e_h = dirichlet_energy(h).total
    e_f = dirichlet_energy(f).total
    bf = _tangential_energy(mesh, f.values)
    bg = _tangential_energy(mesh, gfield.values)
    _, g2 = batch_matching(f.values, gfield.values)
    mism = _boundary_integral(mesh, g2)
    excess = e_h - e_f - eps * (bf + bg)
    if excess <= 0:
        fitted = 0.0
    else:
        fitted = excess * eps / mism if mism > 0 else math.inf
    lip_h, lip_f = h.lipschitz(), f.lipschitz()
    seg, length = _boundary_loop(mesh)
    _, gg = batch_matching(gfield.values[seg[:, 0]], gfield.values[seg[:, 1]])
    lip_g = float(np.max(np.sqrt(gg) / length))
    sup_m = float(np.sqrt(np.max(g2[bmask])))
    lip_c = lip_h / max(lip_f + lip_g + sup_m / eps, 1e-300)
    return h, AnnulusReport(eps, e_h, e_f, bf, bg, mism, fitted, lip_h, lip_f, lip_g, sup_m, lip_c)


# ---------------------------------------------------------------------------
# mollification


def _kernel(eps: float, h: float) -> np.ndarray:
    k = int(math.floor(eps / h))
    t = np.arange(-k, k + 1) * h / eps
    w = np.where(np.abs(t) < 1, (1 - t * t) ** 2, 0.0)
    return w / w.sum()


def mollify(mesh: Mesh, values: np.ndarray, eps: float) -> np.ndarray:
    """Convolution with a tensor-product quartic bump of radius ``eps``.

    ``values`` has shape ``(V, ...)`` on a structured box mesh.  The kernel is
    normalised on the grid; values beyond the box are taken from the nearest
    grid point.
    """
    if mesh.grid is None:
        raise InvalidInput("mollify needs a structured box mesh")
    h = mesh.grid["h"]
    if eps < 2 * max(h) * (1 - 1e-12):
        raise InvalidInput(f"eps = {eps:g} is below twice the grid spacing {max(h):g}")
    shape = tuple(s + 1 for s in mesh.grid["shape"])
    vals = np.asarray(values, dtype=float)
    arr = vals.reshape(shape + vals.shape[1:])
    for axis, hx in enumerate(h):
        arr = ndimage.convolve1d(arr, _kernel(eps, hx), axis=axis, mode="nearest")
    return arr.reshape(vals.shape)


# ---------------------------------------------------------------------------
# competitor


@dataclass
class CompetitorReport:
    energy_scale: float
    energy_f: float
    energy_g: float
    region_energy: dict
    lip_f: float
    lip_g: float
    l2_error: float
    decode_residual: float
    boundary_error: float
    lip_constant: float


def _lin(outer: np.ndarray, inner: np.ndarray, rho: np.ndarray, s: float, r: float) -> np.ndarray:
    t = ((rho - s) / (r - s))[:, None]
    return (1 - t) * inner + t * outer


def build_competitor(
    f: QField,
    mu: float,
    eps: float,
    radii: Sequence[float],
    spec: EmbeddingSpec,
    proj,
    energy_scale: float | None = None,
) -> tuple[QField, CompetitorReport]:
    """Regularise ``f`` inside ``B_{r3}`` through mollification and ``rho*``.

    ``f`` lives on a structured box mesh containing ``B_{r3}``.  With
    ``f' = xi o f`` and ``E`` the energy scale, the embedded competitor is
    ``sqrt(E) rho*(f'/sqrt(E) * phi_eps)`` in ``B_{r1}``, radial linear
    interpolations in the annuli ``B_{r2} \\ B_{r1}`` and ``B_{r3} \\ B_{r2}``,
    and ``f'`` outside.  Interpolated values are retracted onto cQ before
    decoding.
    """
    r1, r2, r3 = (float(r) for r in radii)
    if not 0 < r1 < r2 < r3:
        raise InvalidInput("radii must be strictly increasing")
    if proj.spec.to_dict() != spec.to_dict() or (f.q, f.n) != (spec.q, spec.n):
        raise InvalidInput("projection, spec and field dimensions do not match")
    if not math.isclose(proj.mu, mu):
        raise InvalidInput("proj was built for a different mu")
    mesh = f.mesh
    if mesh.grid is None:
        raise InvalidInput("build_competitor needs a structured box mesh")
    x = mesh.vertices
    center = np.asarray(mesh.grid["lo"]) + 0.5 * np.asarray(mesh.grid["h"]) * np.asarray(mesh.grid["shape"])
    rel = x - center
    rho = np.linalg.norm(rel, axis=1)
    if np.max(np.abs(rel)) < r3:
        raise InvalidInput("the mesh must contain B_r3")
    e_f = dirichlet_energy(f).total
    big_e = float(energy_scale) if energy_scale is not None else max(e_f, 1e-12)
    if big_e <= 0:
        raise InvalidInput("energy scale must be positive")
    se = math.sqrt(big_e)
    fp = xi_array(f.values, spec)  # (V, N)
    moll = mollify(mesh, fp / se, eps)

    theta = rel / np.maximum(rho, 1e-300)[:, None]
    gp = fp.copy()
    zone1 = rho < r1
    zone2 = (rho >= r1) & (rho < r2)
    zone3 = (rho >= r2) & (rho < r3)

    def at_radius(idx, r):
        return center + r * theta[idx]

    def moll_at(points):
        # P1 interpolation of the mollified vector field
        cell, bary = mesh.locate(points)
        return np.einsum("kj,kjd->kd", bary, moll[mesh.cells[cell]])

    def f_at(points):
        return xi_array(f.sample(points), spec) / se

    for v in np.flatnonzero(zone1):
        gp[v] = se * proj(moll[v])
    idx = np.flatnonzero(zone2)
    if len(idx):
        outer = np.array([proj(w) for w in f_at(at_radius(idx, r2))])
        inner = np.array([proj(w) for w in moll_at(at_radius(idx, r1))])
        lin = _lin(outer, inner, rho[idx], r1, r2)
        gp[idx] = se * np.array([retract_rho(w, spec) for w in lin])
    idx = np.flatnonzero(zone3)
    if len(idx):
        outer = f_at(at_radius(idx, r3))
        inner = np.array([proj(w) for w in f_at(at_radius(idx, r2))])
        lin = _lin(outer, inner, rho[idx], r2, r3)
        gp[idx] = se * np.array([retract_rho(w, spec) for w in lin])

    vals = f.values.copy()
    resid = 0.0
    for v in np.flatnonzero(rho < r3):
        t = decode(gp[v], spec)
        vals[v] = t.points
        resid = max(resid, float(np.linalg.norm(xi_array(t.points, spec) - gp[v])))
    g = QField(mesh, vals)
    rep_g = dirichlet_energy(g)
    rep_f = dirichlet_energy(f)
    centroid_r = np.linalg.norm(mesh.centroids - center, axis=1)
    regions = {
        "B_r1": float(rep_g.cell_energy[centroid_r < r1].sum()),
        "B_r2-B_r1": float(rep_g.cell_energy[(centroid_r >= r1) & (centroid_r < r2)].sum()),
        "B_r3-B_r2": float(rep_g.cell_energy[(centroid_r >= r2) & (centroid_r < r3)].sum()),
        "outside": float(rep_g.cell_energy[centroid_r >= r3].sum()),
    }
    _, g2 = batch_matching(f.values, vals)
    l2 = math.sqrt(float(np.dot(mesh.lumped_mass, g2)))
    outside = rho >= r3
    bnd_err = float(np.sqrt(np.max(g2[outside]))) if outside.any() else 0.0
    lip_f, lip_g = f.lipschitz(), g.lipschitz()
    nq = spec.n * spec.q
    lip_c = lip_g / max(lip_f + se * mu ** (2.0 ** (-nq)), 1e-300)
    rep = CompetitorReport(big_e, rep_f.total, rep_g.total, regions, lip_f, lip_g, l2, resid, bnd_err, lip_c)
    return g, rep
