"""Integer simplicial currents, graphs of Q-valued maps and excess quantities.

Currents live in ``R^{m+n}`` with the first ``m`` coordinates horizontal.
An m-current ``T = sum_j theta_j [[S_j]]`` is stored as the vertex stack of
its oriented simplices ``S_j`` (orientation = vertex order) together with the
integer multiplicities ``theta_j``.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import sympy as sp
from scipy import ndimage, signal
from scipy.spatial import cKDTree
from scipy.special import roots_legendre

from . import forms
from .constants import BV_FACTOR, BV_MARGIN
from .dirichlet import _alternate, gradient_density, harmonic_extension
from .mesh import Mesh, QField, align_cells
from .qspace import InvalidInput, QPoint, batch_matching, metric_g, wasserstein1

__all__ = [
    "SheetTrackingError",
    "HypothesisError",
    "DegenerateSlice",
    "SimplicialCurrent",
    "graph_current",
    "pushforward",
    "pushforward_mass",
    "boundary",
    "StokesReport",
    "stokes_check",
    "curve_pairing",
    "Slice",
    "slice_current",
    "slice_values",
    "slice_arrays",
    "ExcessField",
    "excess_field",
    "VarifoldReport",
    "varifold_excess",
    "BVReport",
    "bv_estimate_check",
    "MaximalReport",
    "maximal_measure",
    "LipschitzApproximation",
    "lipschitz_approximate",
    "TaylorReport",
    "taylor_check",
    "higher_integrability_scan",
    "strong_estimate_scan",
    "dyadic_regions",
]

KEY_DECIMALS = 10
ALIGN_TOL = 1e-12


class SheetTrackingError(RuntimeError):
    """A cell carries no consistent sheet decomposition (refine the mesh)."""

    def __init__(self, cell: int, excess: float):
        super().__init__(f"inconsistent sheet matching in cell {cell} (excess {excess:.3e}); refine the mesh")
        self.cell = cell


class HypothesisError(ValueError):
    """The projection or smallness hypothesis of an operation fails."""


class DegenerateSlice(RuntimeError):
    """A slice position stayed on projected cell boundaries after jittering."""


# ---------------------------------------------------------------------------
# the current type


def _volumes(simplices: np.ndarray) -> np.ndarray:
    k = simplices.shape[1] - 1
    if k == 0:
        return np.ones(len(simplices))
    e = simplices[:, 1:, :] - simplices[:, :1, :]
    gram = np.einsum("cik,cjk->cij", e, e)
    return np.sqrt(np.maximum(np.linalg.det(gram), 0.0)) / math.factorial(k)


@dataclass(eq=False)
class SimplicialCurrent:
    simplices: np.ndarray  # (K, k+1, m+n)
    mult: np.ndarray  # (K,) nonzero integers
    m: int  # number of horizontal coordinates

    def __post_init__(self) -> None:
        s = np.asarray(self.simplices, dtype=float)
        if s.ndim != 3:
            raise InvalidInput("simplices must have shape (K, k+1, D)")
        mult = np.asarray(self.mult)
        if mult.shape != (len(s),):
            raise InvalidInput("one multiplicity per simplex")
        if not np.all(mult == np.round(mult)) or np.any(mult == 0):
            raise InvalidInput("multiplicities must be nonzero integers")
        self.simplices = s
        self.mult = mult.astype(np.int64)
        if len(s) and np.any(self.volumes <= 0):
            raise InvalidInput("every simplex needs positive volume")
        if not 0 <= self.m <= self.dim_ambient:
            raise InvalidInput("invalid horizontal dimension")

    @property
    def k(self) -> int:
        return self.simplices.shape[1] - 1

    @property
    def dim_ambient(self) -> int:
        return self.simplices.shape[2]

    @property
    def n(self) -> int:
        return self.dim_ambient - self.m

    @property
    def volumes(self) -> np.ndarray:
        return _volumes(self.simplices)

    @property
    def edges(self) -> np.ndarray:
        return self.simplices[:, 1:, :] - self.simplices[:, :1, :]

    def orientation(self) -> np.ndarray:
        """Unit orienting k-vectors as components on increasing index sets."""
        sets = forms.all_index_sets(self.dim_ambient, self.k)
        w = forms.wedge_coefficients(self.edges, sets)
        w = w / np.linalg.norm(w, axis=1, keepdims=True)
        return w * np.sign(self.mult)[:, None]

    def base_det(self) -> np.ndarray:
        """``det`` of the horizontal edge block (k = m); sign gives the projected orientation."""
        if self.k != self.m:
            raise InvalidInput("base determinant needs k = m")
        return np.linalg.det(self.edges[:, :, : self.m]) if self.m else np.ones(len(self.simplices))

    def base_vertices(self) -> np.ndarray:
        return self.simplices[:, :, : self.m]

    def mass(self, region=None) -> float:
        return mass(self, region)

    def restrict(self, mask: np.ndarray) -> "SimplicialCurrent":
        mask = np.asarray(mask, dtype=bool)
        return SimplicialCurrent(self.simplices[mask], self.mult[mask], self.m)

    def __add__(self, other: "SimplicialCurrent") -> "SimplicialCurrent":
        if self.simplices.shape[1:] != other.simplices.shape[1:] or self.m != other.m:
            raise InvalidInput("currents of different type")
        return _merge(np.concatenate([self.simplices, other.simplices]), np.concatenate([self.mult, other.mult]), self.m)

    def __neg__(self) -> "SimplicialCurrent":
        return SimplicialCurrent(self.simplices, -self.mult, self.m)

    def to_dict(self) -> dict:
        return {
            "ambient_dim": self.dim_ambient,
            "m": self.m,
            "k": self.k,
            "cells": [
                {"vertices": s.tolist(), "multiplicity": int(t)} for s, t in zip(self.simplices, self.mult)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimplicialCurrent":
        k, dim = int(d["k"]), int(d["ambient_dim"])
        cells = d["cells"]
        s = np.array([c["vertices"] for c in cells], dtype=float).reshape(len(cells), k + 1, dim)
        return cls(s, np.array([int(c["multiplicity"]) for c in cells], dtype=np.int64), int(d["m"]))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "SimplicialCurrent":
        return cls.from_dict(json.loads(text))


def _canonical_rows(simplices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per simplex: parity of the sorting permutation and the sorted vertex ids.

    Vertex ids index the lexicographically sorted rounded coordinates, so
    equal ids mean equal vertices up to ``KEY_DECIMALS``.
    """
    kk, nv, d = simplices.shape
    flat = np.round(simplices.reshape(-1, d), KEY_DECIMALS) + 0.0
    _, ids = np.unique(flat, axis=0, return_inverse=True)
    ids = ids.reshape(kk, nv)
    order = np.argsort(ids, axis=1, kind="stable")
    inv = np.zeros(kk, dtype=np.int64)
    for i in range(nv):
        for j in range(i + 1, nv):
            inv += order[:, i] > order[:, j]
    sign = np.where(inv % 2 == 0, 1, -1)
    srt = np.take_along_axis(ids, order, axis=1)
    # repeated vertices make a degenerate simplex
    if nv > 1:
        sign = np.where(np.any(np.diff(srt, axis=1) == 0, axis=1), 0, sign)
    return sign, srt


def _merge(simplices: np.ndarray, mult: np.ndarray, m: int) -> SimplicialCurrent:
    """Add up multiplicities of geometrically identical simplices (orientation-aware)."""
    simplices = np.asarray(simplices, dtype=float)
    mult = np.asarray(mult, dtype=np.int64)
    if len(simplices) == 0:
        return SimplicialCurrent(np.zeros((0,) + simplices.shape[1:]), np.zeros(0, dtype=np.int64), m)
    sign, rows = _canonical_rows(simplices)
    _, first, inverse = np.unique(rows, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.ravel()
    acc = np.zeros(len(first), dtype=np.int64)
    np.add.at(acc, inverse, sign * mult)
    keep = acc != 0
    # representative: first occurrence, oriented by its own parity
    rep = first[keep]
    order = np.argsort(rep, kind="stable")
    rep = rep[order]
    out_t = (acc[keep] * sign[first[keep]])[order]
    return SimplicialCurrent(simplices[rep], out_t, m)


def mass(t: SimplicialCurrent, region=None) -> float:
    """``sum |theta| vol``; ``region`` is a simplex mask or a predicate on base centroids."""
    w = np.abs(t.mult) * t.volumes
    if region is None:
        return float(w.sum())
    if callable(region):
        mask = np.asarray(region(t.base_vertices().mean(axis=1)), dtype=bool)
    else:
        mask = np.asarray(region, dtype=bool)
    return float(w[mask].sum())


# ---------------------------------------------------------------------------
# graphs and push-forwards


def _lift(base: np.ndarray, aligned: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Lift base simplices ``(K, k+1, m)`` with aligned values ``(K, k+1, q, n)``."""
    k1 = base.shape[1]
    q = aligned.shape[2]
    b = np.repeat(base[:, None], q, axis=1)  # (K, q, k+1, m)
    v = np.transpose(aligned, (0, 2, 1, 3))  # (K, q, k+1, n)
    s = np.concatenate([b, v], axis=3).reshape(-1, k1, base.shape[2] + aligned.shape[3])
    return s, np.ones(len(s), dtype=np.int64)


def _aligned_or_raise(values: np.ndarray, cells: np.ndarray) -> np.ndarray:
    al, excess = align_cells(values, cells)
    scale = np.maximum(1.0, np.abs(values[cells]).max(axis=(1, 2, 3)))
    bad = np.flatnonzero(excess > ALIGN_TOL * scale**2)
    if len(bad):
        raise SheetTrackingError(int(bad[0]), float(excess[bad[0]]))
    return al


def graph_current(f: QField) -> SimplicialCurrent:
    """``T_F``: every mesh cell lifted once per sheet, identical lifts merged."""
    mesh = f.mesh
    al = _aligned_or_raise(f.values, mesh.cells)
    s, t = _lift(mesh.vertices[mesh.cells], al)
    return _merge(s, t, mesh.m)


def pushforward(f: QField, r: SimplicialCurrent) -> SimplicialCurrent:
    """``T_{f,R}``: the simplices of ``R`` (in the domain of ``f``) lifted by the sheets of ``f``."""
    if r.dim_ambient != f.mesh.m:
        raise InvalidInput("R must live in the domain of f")
    pts = r.simplices.reshape(-1, r.dim_ambient)
    vals = f.sample(pts)
    k1 = r.k + 1
    cells = np.arange(len(pts)).reshape(-1, k1)
    al = _aligned_or_raise(vals, cells)
    q = f.q
    s, _ = _lift(r.simplices, al)
    t = np.repeat(r.mult, q)
    return _merge(s, t, r.dim_ambient)


def pushforward_mass(f: QField, r: SimplicialCurrent) -> float:
    return mass(pushforward(f, r))


def boundary(t: SimplicialCurrent) -> SimplicialCurrent:
    """``dT`` by face cancellation with orientation signs."""
    if t.k == 0:
        raise InvalidInput("0-currents have no boundary")
    faces, mult = [], []
    for s, th in zip(t.simplices, t.mult):
        for i in range(t.k + 1):
            faces.append(np.delete(s, i, axis=0))
            mult.append((-1) ** i * int(th))
    if not faces:
        return SimplicialCurrent(np.zeros((0, t.k, t.dim_ambient)), np.zeros(0, dtype=np.int64), t.m)
    return _merge(np.array(faces), np.array(mult, dtype=np.int64), t.m)


def mesh_current(mesh: Mesh, mult: int = 1) -> SimplicialCurrent:
    """``mult [[Omega]]`` for a positively oriented mesh."""
    s = mesh.vertices[mesh.cells]
    return SimplicialCurrent(s, np.full(len(s), mult, dtype=np.int64), mesh.m)


# ---------------------------------------------------------------------------
# Stokes


@dataclass
class StokesReport:
    pairing_d: float  # <T, d omega>
    pairing_boundary: float  # <dT, omega>
    discrete_residual: float
    reference: float | None = None
    residual: float | None = None


def stokes_check(t: SimplicialCurrent, omega: forms.Form, reference: float | None = None, p: int = 8) -> StokesReport:
    """Compare ``<T, d omega>`` with ``<dT, omega>`` and, if given, with a reference boundary pairing."""
    d_omega = forms.exterior_derivative(omega, t.dim_ambient)
    lhs = forms.integrate_form(d_omega, t.simplices, t.mult, p)
    bt = boundary(t)
    rhs = forms.integrate_form(omega, bt.simplices, bt.mult, p)
    rep = StokesReport(lhs, rhs, abs(lhs - rhs))
    if reference is not None:
        rep.reference = float(reference)
        rep.residual = abs(lhs - reference)
    return rep


def curve_pairing(omega: forms.Form, gamma: Callable[[np.ndarray], np.ndarray], a: float, b: float, pieces: int = 8, p: int = 24) -> float:
    """``int_gamma omega`` for a 1-form along a smooth parametrised curve (Gauss-Legendre)."""
    d = len(gamma(np.array([a]))[0])
    x = forms.coords(d)
    fns = {key[0]: sp.lambdify(x, expr, "numpy") for key, expr in omega.items()}
    t, w = roots_legendre(p)
    total = 0.0
    edges = np.linspace(a, b, pieces + 1)
    for lo, hi in zip(edges[:-1], edges[1:]):
        tt = 0.5 * (hi - lo) * (t + 1) + lo
        ww = 0.5 * (hi - lo) * w
        pts = gamma(tt)
        hstep = 1e-6 * (hi - lo)
        der = (gamma(tt + hstep) - gamma(tt - hstep)) / (2 * hstep)
        for j, fn in fns.items():
            vals = np.broadcast_to(np.asarray(fn(*pts.T), dtype=float), tt.shape)
            total += float(np.sum(ww * vals * der[:, j]))
    return total


# ---------------------------------------------------------------------------
# slices


@dataclass
class Slice:
    x: np.ndarray
    points: np.ndarray  # (K, n)
    signs: np.ndarray  # (K,) integers

    @property
    def total(self) -> int:
        return int(self.signs.sum())

    def pair(self, psi: Callable[[np.ndarray], np.ndarray]) -> float:
        if len(self.points) == 0:
            return 0.0
        return float(np.dot(self.signs, psi(self.points)))


def _slice_data(t: SimplicialCurrent):
    if t.k != t.m:
        raise InvalidInput("slices need an m-current in R^{m+n}")
    base = t.base_vertices()
    det = t.base_det()
    keep = np.abs(det) > 1e-14 * np.maximum(1.0, np.abs(base).max(axis=(1, 2))) ** t.m
    e = t.edges[keep][:, :, : t.m]
    inv = np.linalg.inv(e)  # lambda_{1..m} = (x - v0) @ inv
    return keep, base[keep][:, 0], inv, np.sign(det[keep]).astype(np.int64) * t.mult[keep], t.simplices[keep]


def slice_arrays(t: SimplicialCurrent, points: np.ndarray, jitter_budget: int = 4):
    """Flat form of :func:`slice_values`: ``(owner, points, signs)`` over all slice atoms.

    ``owner[j]`` is the index of the base point whose slice holds atom ``j``.
    Base points on a cell boundary are moved by a deterministic jitter of
    ``1e-9`` times the local cell size along a fixed direction.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    keep, v0, inv, sgn, simp = _slice_data(t)
    m = t.m
    empty = (np.zeros(0, dtype=np.int64), np.zeros((0, t.n)), np.zeros(0, dtype=np.int64))
    if len(simp) == 0:
        return empty
    size = np.abs(np.linalg.det(inv)) ** (-1.0 / m)
    direction = np.array([1.0, math.sqrt(2) - 1.0, math.sqrt(3) - 1.0][:m]) if m <= 3 else np.ones(m)
    direction = direction / np.linalg.norm(direction)
    base = simp[:, :, :m]
    cen = base.mean(axis=1)
    reach = float(np.max(np.linalg.norm(base - cen[:, None, :], axis=2))) * (1 + 1e-9) + 1e-12
    tree = cKDTree(cen)
    xx = pts.copy()
    active = np.arange(len(pts))
    owners, ys, signs = [], [], []
    for attempt in range(jitter_budget + 1):
        lists = tree.query_ball_point(xx[active], reach)
        local = np.repeat(np.arange(len(active)), [len(c) for c in lists])
        cand = np.fromiter(itertools.chain.from_iterable(lists), dtype=np.int64, count=len(local))
        lam = np.einsum("ck,ckj->cj", xx[active][local] - v0[cand], inv[cand])
        lam = np.concatenate([1 - lam.sum(axis=1, keepdims=True), lam], axis=1)
        lo = lam.min(axis=1)
        edge = np.abs(lo) <= 1e-12
        deg = np.zeros(len(active), dtype=bool)
        deg[local[edge]] = True
        take = (lo > 1e-12) & ~deg[local]
        owners.append(active[local[take]])
        ys.append(np.einsum("cj,cjn->cn", lam[take], simp[cand[take]][:, :, m:]))
        signs.append(sgn[cand[take]])
        if not deg.any():
            break
        hmin = np.full(len(active), np.inf)
        np.minimum.at(hmin, local[edge], size[cand[edge]])
        moved = active[deg]
        xx[moved] += 1e-9 * (attempt + 1) * hmin[deg][:, None] * direction[None, :]
        active = moved
    else:
        raise DegenerateSlice(f"slice position {pts[active[0]]} remains degenerate")
    owner = np.concatenate(owners)
    order = np.argsort(owner, kind="stable")
    return owner[order], np.concatenate(ys)[order], np.concatenate(signs)[order]


def slice_values(t: SimplicialCurrent, points: np.ndarray, jitter_budget: int = 4):
    """Slices at many base points; returns a list of :class:`Slice`."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    owner, y, sg = slice_arrays(t, pts, jitter_budget)
    starts = np.searchsorted(owner, np.arange(len(pts) + 1))
    return [Slice(x, y[starts[i] : starts[i + 1]], sg[starts[i] : starts[i + 1]]) for i, x in enumerate(pts)]


def slice_current(t: SimplicialCurrent, x) -> Slice:
    """``<T, pi, x>`` pushed to ``R^n``: signed points."""
    return slice_values(t, np.asarray(x, dtype=float)[None, :])[0]


def phi_psi(t: SimplicialCurrent, points: np.ndarray, psi: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """``Phi_psi(x) = <T_x, psi>`` at many base points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    owner, y, sg = slice_arrays(t, pts)
    return np.bincount(owner, weights=sg * psi(y), minlength=len(pts)) if len(owner) else np.zeros(len(pts))


# ---------------------------------------------------------------------------
# clipping simplices to grid squares (m = 1, 2)


def _clip_polygon(poly: list, axis: int, bound: float, keep_less: bool) -> list:
    out = []
    if not poly:
        return out
    prev = poly[-1]
    for cur in poly:
        pin = prev[axis] <= bound if keep_less else prev[axis] >= bound
        cin = cur[axis] <= bound if keep_less else cur[axis] >= bound
        if cin:
            if not pin:
                out.append(_intersect(prev, cur, axis, bound))
            out.append(cur)
        elif pin:
            out.append(_intersect(prev, cur, axis, bound))
        prev = cur
    return out


def _intersect(a, b, axis, bound):
    t = (bound - a[axis]) / (b[axis] - a[axis])
    return (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))


def _poly_area(poly: list) -> float:
    if len(poly) < 3:
        return 0.0
    s = 0.0
    for i in range(len(poly)):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % len(poly)]
        s += x0 * y1 - x1 * y0
    return abs(s) / 2


def _grid_coverage(base: np.ndarray, lo: np.ndarray, h: float, shape: tuple) -> list:
    """For each base simplex: list of (flat cell index, fraction of its area in that cell)."""
    m = base.shape[2]
    out: list = []
    if m == 1:
        for s in base:
            a, b = sorted(s[:, 0])
            i0 = max(int(math.floor((a - lo[0]) / h)), 0)
            i1 = min(int(math.ceil((b - lo[0]) / h)), shape[0])
            parts = []
            for i in range(i0, i1):
                l, r = lo[0] + i * h, lo[0] + (i + 1) * h
                ov = min(b, r) - max(a, l)
                if ov > 0:
                    parts.append((i, ov / (b - a)))
            out.append(parts)
        return out
    if m != 2:
        raise InvalidInput("grid coverage is implemented for m = 1, 2")
    bmin = base.min(axis=1)
    bmax = base.max(axis=1)
    i0 = np.floor((bmin - lo) / h + 1e-9).astype(int)
    i1 = np.ceil((bmax - lo) / h - 1e-9).astype(int)
    single = np.all(i1 - i0 <= 1, axis=1)
    for j, s in enumerate(base):
        if single[j]:
            ix, iy = i0[j]
            if 0 <= ix < shape[0] and 0 <= iy < shape[1]:
                out.append([(ix * shape[1] + iy, 1.0)])
            else:
                out.append([])
            continue
        tri = [tuple(p) for p in s]
        area = _poly_area(tri)
        parts = []
        for ix in range(max(i0[j, 0], 0), min(i1[j, 0], shape[0])):
            for iy in range(max(i0[j, 1], 0), min(i1[j, 1], shape[1])):
                poly = tri
                x0, y0 = lo[0] + ix * h, lo[1] + iy * h
                poly = _clip_polygon(poly, 0, x0, False)
                poly = _clip_polygon(poly, 0, x0 + h, True)
                poly = _clip_polygon(poly, 1, y0, False)
                poly = _clip_polygon(poly, 1, y0 + h, True)
                a = _poly_area(poly)
                if a > 0:
                    parts.append((ix * shape[1] + iy, a / area))
        out.append(parts)
    return out


# ---------------------------------------------------------------------------
# excess


def _disk_kernel(radius_cells: float) -> np.ndarray:
    k = int(math.floor(radius_cells))
    ii = np.arange(-k, k + 1)
    X, Y = np.meshgrid(ii, ii, indexing="ij")
    return (X * X + Y * Y <= radius_cells * radius_cells + 1e-9).astype(float)


def _disk_sum(a: np.ndarray, ker: np.ndarray) -> np.ndarray:
    """Zero-padded correlation with a symmetric kernel; FFT for wide kernels."""
    if ker.shape[0] <= 9:
        return ndimage.correlate(a, ker, mode="constant", cval=0.0)
    return signal.fftconvolve(a, ker, mode="same")


def _maximal_grid(values: np.ndarray, area: np.ndarray, inside: np.ndarray, radii_cells: Sequence[float]) -> np.ndarray:
    """Max over admissible discrete balls of ``sum values / sum area`` (balls fully inside ``inside``)."""
    out = np.zeros_like(values)
    for rc in radii_cells:
        ker = _disk_kernel(rc)
        num, den, full = (_disk_sum(a, ker) for a in (values, area, inside.astype(float)))
        ok = inside & (full >= ker.sum() - 0.5)
        ratio = np.where(ok & (den > 0), num / np.where(den > 0, den, 1.0), 0.0)
        out = np.maximum(out, ratio)
    return out


@dataclass
class ExcessField:
    """Excess quantities of a current over a square grid of base cells.

    ``inside`` marks the cells whose centres lie in ``B_r(y)``; their union
    ``A_r`` stands in for the ball.
    """

    center: np.ndarray
    r: float
    h: float
    lo: np.ndarray
    shape: tuple
    q: int
    mass_cell: np.ndarray
    e: np.ndarray
    delta: np.ndarray
    maximal: np.ndarray
    inside: np.ndarray
    stable: np.ndarray
    E: float
    radii_cells: tuple

    @property
    def cell_area(self) -> float:
        return self.h**2

    @property
    def centers(self) -> np.ndarray:
        ix, iy = np.meshgrid(np.arange(self.shape[0]), np.arange(self.shape[1]), indexing="ij")
        return np.stack([self.lo[0] + (ix + 0.5) * self.h, self.lo[1] + (iy + 0.5) * self.h], axis=-1)

    def excess_of(self, mask: np.ndarray) -> float:
        return float(self.e[mask].sum())

    def ball(self, c, rad: float) -> np.ndarray:
        return np.linalg.norm(self.centers - np.asarray(c, dtype=float), axis=-1) < rad

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y", "e_T", "delta_T", "M_T", "inside"])
        cen = self.centers
        for i in range(self.shape[0]):
            for j in range(self.shape[1]):
                w.writerow([repr(float(cen[i, j, 0])), repr(float(cen[i, j, 1])), repr(float(self.e[i, j])),
                            repr(float(self.delta[i, j])), repr(float(self.maximal[i, j])), int(self.inside[i, j])])
        return buf.getvalue()


def _cell_masses(t: SimplicialCurrent, lo, h, shape):
    cov = _grid_coverage(t.base_vertices(), lo, h, shape)
    w = np.abs(t.mult) * t.volumes
    signed = np.sign(t.base_det()) * t.mult * np.abs(t.base_det()) / math.factorial(t.m)
    mass_c = np.zeros(int(np.prod(shape)))
    proj_c = np.zeros(int(np.prod(shape)))
    for j, parts in enumerate(cov):
        for c, frac in parts:
            mass_c[c] += frac * w[j]
            proj_c[c] += frac * signed[j]
    return mass_c.reshape(shape), proj_c.reshape(shape), cov


def excess_field(t: SimplicialCurrent, center=(0.0, 0.0), r: float = 1.0, resolution: int = 32, q: int | None = None) -> ExcessField:
    """Cell excess ``e_T``, density proxy ``delta_T``, maximal function ``M_T`` and ``E`` over ``B_r``.

    The grid has ``resolution`` cells per side of ``[y-r, y+r]^2``.  The
    projection hypothesis ``pi_# T = Q [[A_r]]`` is verified cell by cell.
    """
    if t.m != 2 or t.k != 2:
        raise InvalidInput("excess fields are implemented for 2-currents over R^2")
    c = np.asarray(center, dtype=float)
    h = 2 * r / resolution
    lo = c - r
    shape = (resolution, resolution)
    mass_c, proj_c, _ = _cell_masses(t, lo, h, shape)
    area = h * h
    ix, iy = np.meshgrid(np.arange(resolution), np.arange(resolution), indexing="ij")
    cen = np.stack([lo[0] + (ix + 0.5) * h, lo[1] + (iy + 0.5) * h], axis=-1)
    inside = np.linalg.norm(cen - c, axis=-1) < r
    mult = proj_c[inside] / area
    qq = int(round(float(np.median(mult)))) if q is None else int(q)
    if qq <= 0 or np.max(np.abs(mult - qq)) > 1e-8:
        bad = float(np.max(np.abs(mult - qq)))
        raise HypothesisError(f"projection is not Q [[B_r]] (deviation {bad:.3e})")
    e = np.where(inside, mass_c - qq * area, 0.0)
    e = np.where(np.abs(e) < 1e-15, 0.0, e)
    delta = e / area
    # density one dyadic scale up (2x2 blocks) for the stability diagnostic
    if resolution % 2 == 0:
        blocks = e.reshape(resolution // 2, 2, resolution // 2, 2).sum(axis=(1, 3)) / (4 * area)
        coarse = np.repeat(np.repeat(blocks, 2, axis=0), 2, axis=1)
    else:
        coarse = delta
    stable = (delta <= 2 * coarse + 1e-14) & (coarse <= 2 * delta + 1e-14)
    nmax = int(math.floor(math.log2(resolution)))
    radii = (0.5,) + tuple(float(2**j) for j in range(0, nmax))
    areas = np.where(inside, area, 0.0)
    maximal = np.maximum(_maximal_grid(e, areas, inside, radii), delta)
    big_e = float(e[inside].sum() / (inside.sum() * area))
    return ExcessField(c, r, h, lo, shape, qq, mass_c, e, delta, maximal, inside, stable, big_e, radii)


# ---------------------------------------------------------------------------
# varifold excess


@dataclass
class VarifoldReport:
    ve: float
    tilt: float  # (2|A|)^-1 int |T - e|^2 d||T||
    cylindrical: float | None  # mass-based E when the projection hypothesis holds

    def ratio(self) -> float:
        return self.ve / self.tilt if self.tilt > 0 else 0.0


def _tangent_projectors(t: SimplicialCurrent) -> np.ndarray:
    e = t.edges  # (K, k, D)
    qmat, _ = np.linalg.qr(np.transpose(e, (0, 2, 1)))  # (K, D, k)
    return np.einsum("cik,cjk->cij", qmat, qmat)


def varifold_excess(t: SimplicialCurrent, center=(0.0, 0.0), r: float = 1.0, resolution: int = 32) -> VarifoldReport:
    """Varifold excess and tilt excess over the grid ball ``A_r``.

    ``VE = (2|A_r|)^-1 int ||pi_x - pi_0||^2 d||T||`` with the operator norm,
    and the tilt excess uses ``|T(x) - e|^2`` for the oriented unit m-vector.
    """
    if t.k != t.m:
        raise InvalidInput("varifold excess needs an m-current")
    c = np.asarray(center, dtype=float)
    h = 2 * r / resolution
    lo = c - r
    shape = (resolution,) * t.m
    cov = _grid_coverage(t.base_vertices(), lo, h, shape)
    ix = np.indices(shape).reshape(t.m, -1).T
    cen = lo + (ix + 0.5) * h
    inside = np.linalg.norm(cen - c, axis=1) < r
    frac = np.array([sum(f for cidx, f in parts if inside[cidx]) for parts in cov])
    w = np.abs(t.mult) * t.volumes * frac
    proj = _tangent_projectors(t)
    d = t.dim_ambient
    pi0 = np.zeros((d, d))
    pi0[: t.m, : t.m] = np.eye(t.m)
    norms = np.linalg.norm(proj - pi0[None], ord=2, axis=(1, 2))
    area = inside.sum() * h**t.m
    ve = float(np.dot(w, norms**2) / (2 * area))
    cos = np.sign(t.mult) * t.base_det() / (np.abs(t.volumes) * math.factorial(t.m))
    tilt = float(np.dot(w, 2 - 2 * cos) / (2 * area))
    cyl = None
    if t.m == 2:
        try:
            cyl = excess_field(t, c, r, resolution).E
        except HypothesisError:
            cyl = None
    return VarifoldReport(ve, tilt, cyl)


# ---------------------------------------------------------------------------
# dyadic regions


def dyadic_regions(shape: tuple, inside: np.ndarray | None = None, min_cells: int = 2) -> list[np.ndarray]:
    """Masks of all dyadic sub-squares of the grid down to ``min_cells`` per side."""
    n = shape[0]
    out = []
    size = n
    while size >= min_cells:
        for i in range(0, n, size):
            for j in range(0, n, size):
                mask = np.zeros(shape, dtype=bool)
                mask[i : i + size, j : j + size] = True
                if inside is not None:
                    mask &= inside
                if mask.any():
                    out.append(mask)
        size //= 2
    return out


# ---------------------------------------------------------------------------
# modified BV estimate


@dataclass
class BVReport:
    rows: list  # (psi index, region index, tv, tv_chain, excess, mass, ratio)
    margin: float

    @property
    def worst(self) -> float:
        return max((r[-1] for r in self.rows), default=0.0)

    @property
    def holds(self) -> bool:
        return self.worst <= 1 + self.margin

    @property
    def route_gap(self) -> float:
        gaps = [abs(r[2] - r[3]) / max(r[3], 1e-300) for r in self.rows if r[3] > 1e-12]
        return max(gaps, default=0.0)


def _tv_grid(phi: np.ndarray, h: float) -> np.ndarray:
    """Per-square total variation of the P1 interpolant of corner values.

    Squares are split along the ``(i, j) -> (i+1, j+1)`` diagonal, matching
    :meth:`Mesh.box`, so fine triangles nest inside mesh cells.
    """
    p00, p10, p11, p01 = phi[:-1, :-1], phi[1:, :-1], phi[1:, 1:], phi[:-1, 1:]
    g1 = np.hypot(p10 - p00, p11 - p10)
    g2 = np.hypot(p11 - p01, p01 - p00)
    return 0.5 * (g1 + g2) * h


def bv_estimate_check(
    f: QField,
    psis: Sequence[tuple[Callable, Callable]],
    resolution: int = 32,
    sub: int = 4,
    margin: float = BV_MARGIN,
) -> BVReport:
    """``(|D Phi_psi|(A))^2 <= 2 e_T(A) M(T restricted to A x R^n)`` on dyadic squares.

    ``f`` is a Q-valued map on a structured box mesh whose graph is ``T``;
    ``psis`` holds pairs ``(psi, grad psi)`` with ``|grad psi| <= 1``.  The
    total variation is computed twice: from slices of ``T`` at the corners of
    a grid ``sub`` times finer, and by the chain rule on every sheet.
    Regions are all dyadic squares of the excess grid (full square domain).
    """
    t = graph_current(f)
    mesh = f.mesh
    if mesh.grid is None:
        raise InvalidInput("bv_estimate_check needs a structured box mesh")
    lo = np.asarray(mesh.grid["lo"], dtype=float)
    hi = lo + np.asarray(mesh.grid["h"]) * np.asarray(mesh.grid["shape"])
    side = float(hi[0] - lo[0])
    h = side / resolution
    shape = (resolution, resolution)
    mass_c, proj_c, _ = _cell_masses(t, lo, h, shape)
    qq = int(round(float(np.median(proj_c / (h * h)))))
    e = mass_c - qq * h * h
    fine = resolution * sub
    hf = side / fine
    g1 = lo[0] + hf * np.arange(fine + 1)
    g2 = lo[1] + hf * np.arange(fine + 1)
    X, Y = np.meshgrid(g1, g2, indexing="ij")
    corners = np.stack([X.ravel(), Y.ravel()], axis=1)
    # route one: slices of T at the fine grid corners
    # corners on the outer boundary are nudged inward so the slice is not empty
    inset = 1e-6 * hf
    owner, atoms, signs = slice_arrays(t, np.clip(corners, lo + inset, hi - inset))
    # route two: chain rule on each sheet at the fine triangle centroids
    ii = X[:-1, :-1].ravel()
    jj = Y[:-1, :-1].ravel()
    cc = np.concatenate(
        [np.stack([ii + 2 * hf / 3, jj + hf / 3], axis=1), np.stack([ii + hf / 3, jj + 2 * hf / 3], axis=1)]
    )
    cell, bary = mesh.locate(cc)
    if np.any(cell < 0):
        raise InvalidInput("fine grid leaves the mesh")
    al, _ = f.aligned
    grads = mesh.gradients[cell]  # (P, 3, 2)
    sheet_vals = np.einsum("pj,pjqn->pqn", bary, al[cell])
    sheet_grad = np.einsum("pjk,pjqn->pqnk", grads, al[cell])  # d f_i / dx_k
    rows = []
    regions = dyadic_regions(shape)
    for pi_, (psi, dpsi) in enumerate(psis):
        phi = np.bincount(owner, weights=signs * psi(atoms), minlength=len(corners)).reshape(fine + 1, fine + 1)
        tv_fine = _tv_grid(phi, hf)
        gp = dpsi(sheet_vals.reshape(-1, f.n)).reshape(len(cc), f.q, f.n)
        dphi = np.einsum("pqn,pqnk->pk", gp, sheet_grad)
        tv_chain_fine = (np.linalg.norm(dphi, axis=1) * 0.5 * hf * hf).reshape(2, fine, fine).sum(axis=0)
        tv = tv_fine.reshape(resolution, sub, resolution, sub).sum(axis=(1, 3))
        tvc = tv_chain_fine.reshape(resolution, sub, resolution, sub).sum(axis=(1, 3))
        for ri, mask in enumerate(regions):
            lhs = float(tv[mask].sum())
            lhs_c = float(tvc[mask].sum())
            ex = float(e[mask].sum())
            ms = float(mass_c[mask].sum())
            rhs = BV_FACTOR * ex * ms
            ratio = lhs * lhs / rhs if rhs > 0 else (0.0 if lhs < 1e-12 else math.inf)
            rows.append((pi_, ri, lhs, lhs_c, ex, ms, ratio))
    return BVReport(rows, margin)


# ---------------------------------------------------------------------------
# maximal function of a measure


@dataclass
class MaximalReport:
    theta: float
    r0: float
    j_theta: np.ndarray
    rows: list  # (r, |J cap B_r|, bound)

    @property
    def holds(self) -> bool:
        return all(a <= b * (1 + 1e-12) + 1e-15 for _, a, b in self.rows)


def maximal_measure(mu: np.ndarray, theta: float, s: float = 0.25, h: float | None = None, radii: Sequence[float] | None = None) -> MaximalReport:
    """``J_theta = {M mu >= theta} cap B_3s`` on a square grid covering ``B_4s``.

    ``mu`` holds cell masses on an ``N x N`` grid over ``[-4s, 4s]^2``.  Ball
    measures use the discrete ball (cells with centres inside) as area.
    """
    mu = np.asarray(mu, dtype=float)
    nn = mu.shape[0]
    h = 8 * s / nn if h is None else h
    ix, iy = np.meshgrid(np.arange(nn), np.arange(nn), indexing="ij")
    cen = np.stack([-4 * s + (ix + 0.5) * h, -4 * s + (iy + 0.5) * h], axis=-1)
    rad = np.linalg.norm(cen, axis=-1)
    inside = rad < 4 * s
    total = float(mu[inside].sum())
    r0 = (total / (math.pi * theta)) ** 0.5 / s
    if not r0 < 0.2:
        raise HypothesisError(f"r0 = {r0:.3g} is not below 1/5; theta is too small")
    rc = (0.5,) + tuple(float(2**j) for j in range(int(math.log2(nn))))
    mm = _maximal_grid(np.where(inside, mu, 0.0), np.where(inside, h * h, 0.0), inside, rc)
    j_theta = (mm >= theta) & (rad < 3 * s)
    rows = []
    radii = radii or [s * k / 4 for k in range(1, 13)]
    for r in radii:
        lhs = float(np.sum(j_theta & (rad < r)) * h * h)
        region = (mm >= theta / 4) & (rad < r + r0 * s)
        rhs = 25 / theta * float(mu[region].sum())
        rows.append((r, lhs, rhs))
    return MaximalReport(theta, r0, j_theta, rows)


# ---------------------------------------------------------------------------
# Lipschitz approximation


@dataclass
class LipschitzApproximation:
    u: QField
    K: np.ndarray  # cell mask (grid cells)
    eta: float
    r0: float
    lip: float
    cell_exact: bool
    coverage: list  # (r, |B_r \ K|, bound)
    wg_ratio: float  # max G / |x - y| over sampled K-vertex pairs, W1 route

    def lip_constant(self) -> float:
        return self.lip / math.sqrt(self.eta)

    def coverage_holds(self, margin: float = 0.1) -> bool:
        return all(a <= b * (1 + margin) + 1e-15 for _, a, b in self.coverage)


def lipschitz_approximate(t: SimplicialCurrent, mesh: Mesh, eta: float, seed: int = 0) -> LipschitzApproximation:
    """Lipschitz approximation of a graph-like current over a structured box mesh.

    ``mesh`` is a square box mesh whose cells carry ``t``.  The cylinder is
    ``C_{4s}`` with ``4s`` the half-side of the mesh.  Values on ``K`` come
    from slices at the vertices of ``K``-cells; elsewhere they are filled by
    the discrete Dirichlet minimiser with the ``K`` values fixed.
    """
    if mesh.grid is None or mesh.m != 2:
        raise InvalidInput("lipschitz_approximate needs a planar structured box mesh")
    if not 0 < eta < 1:
        raise InvalidInput("eta must lie in (0, 1)")
    nx, ny = mesh.grid["shape"]
    lo = np.asarray(mesh.grid["lo"], dtype=float)
    h = float(mesh.grid["h"][0])
    if nx != ny or not math.isclose(h, mesh.grid["h"][1]):
        raise InvalidInput("square grids only")
    center = lo + 0.5 * nx * h
    big_r = 0.5 * nx * h
    s = big_r / 4
    ef = excess_field(t, center, big_r, nx)
    q = ef.q
    r0 = 4 * (ef.E / eta) ** 0.5
    if not r0 < 0.2:
        raise HypothesisError(f"r0 = {r0:.3g} is not below 1/5")
    cen = ef.centers
    rad = np.linalg.norm(cen - center, axis=-1)
    k_cells = (ef.maximal < eta) & (rad < 3 * s)
    # vertices of K cells (cells are indexed like the grid squares)
    sq = np.flatnonzero(k_cells.ravel())
    cell_ids = np.concatenate([2 * sq, 2 * sq + 1])
    kv = np.unique(mesh.cells[cell_ids].ravel()) if len(sq) else np.zeros(0, dtype=int)
    values = np.zeros((mesh.nv, q, t.n))
    fixed = np.zeros(mesh.nv, dtype=bool)
    if len(kv):
        # slice slightly inside a K cell touching the vertex
        owner = {}
        for c in cell_ids:
            for v in mesh.cells[c]:
                owner.setdefault(int(v), int(c))
        pts = []
        for v in kv:
            c = owner[int(v)]
            pts.append(mesh.vertices[v] + 1e-7 * (mesh.centroids[c] - mesh.vertices[v]))
        sl = slice_values(t, np.array(pts))
        for v, sv in zip(kv, sl):
            if len(sv.points) != q or np.any(sv.signs != 1):
                raise HypothesisError(f"slice at vertex {int(v)} does not consist of {q} positive points; refine the grid")
            values[v] = sv.points
        # snap slice points back to the vertex values (first order in the 1e-7 offset)
        values[kv] = _snap_vertex_values(t, mesh, kv, values[kv])
        fixed[kv] = True
    if fixed.any() and not fixed.all():
        start = harmonic_extension(mesh, values.reshape(mesh.nv, -1), fixed).reshape(values.shape)
        start[fixed] = values[fixed]
        values, _, _ = _alternate(mesh, start, np.repeat(fixed, q), 1000, 1e-12)
    elif not fixed.any():
        raise HypothesisError("K is empty")
    u = QField(mesh, values)
    # cell-exactness of gr(u|K)
    exact = True
    if len(sq):
        gr = graph_current(u)
        gu = gr.restrict(_cells_over(mesh, gr, cell_ids))
        tk = t.restrict(_cells_over(mesh, t, cell_ids))
        exact = _same_current(gu, tk)
    # Lipschitz constant over B_3s
    e = mesh.edges
    mid = 0.5 * (mesh.vertices[e[:, 0]] + mesh.vertices[e[:, 1]])
    inner = np.linalg.norm(mid - center, axis=1) < 3 * s
    _, g2 = batch_matching(values[e[inner, 0]], values[e[inner, 1]])
    ln = np.linalg.norm(mesh.vertices[e[inner, 0]] - mesh.vertices[e[inner, 1]], axis=1)
    lip = float(np.max(np.sqrt(np.maximum(g2, 0)) / ln)) if inner.any() else 0.0
    # coverage estimate
    rows = []
    area = h * h
    for r in [3 * s * k / 6 for k in range(1, 7)]:
        lhs = float(np.sum((rad < r) & ~k_cells) * area)
        region = (ef.maximal > eta / 4) & (rad < r + r0 * s)
        rhs = 25 / eta * float(ef.e[region].sum())
        rows.append((r, lhs, rhs))
    # W1 / G chain on K vertices
    rng = np.random.default_rng(seed)
    ratio = 0.0
    if len(kv) > 1:
        for _ in range(200):
            a, b = rng.choice(kv, 2, replace=False)
            d = float(np.linalg.norm(mesh.vertices[a] - mesh.vertices[b]))
            ga = metric_g(QPoint(values[a]), QPoint(values[b]))
            wa = wasserstein1(QPoint(values[a]), QPoint(values[b]))
            if ga > wa + 1e-12:
                ratio = math.inf
                break
            ratio = max(ratio, wa / d)
    return LipschitzApproximation(u, k_cells, eta, r0, lip, exact, rows, ratio)


def _snap_vertex_values(t: SimplicialCurrent, mesh: Mesh, kv: np.ndarray, approx: np.ndarray) -> np.ndarray:
    """Replace slice points by the exact lifted vertex coordinates of ``t`` above each vertex."""
    m = t.m
    pts = t.simplices.reshape(-1, t.dim_ambient)
    keys = np.round(pts[:, :m], KEY_DECIMALS) + 0.0
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = inv.ravel()
    order = np.argsort(inv, kind="stable")
    starts = np.searchsorted(inv[order], np.arange(len(uniq) + 1))
    lookup = {tuple(k): i for i, k in enumerate(uniq)}
    out = approx.copy()
    for j, v in enumerate(kv):
        g = lookup.get(tuple(np.round(mesh.vertices[v], KEY_DECIMALS) + 0.0))
        if g is None:
            continue
        cand = pts[order[starts[g] : starts[g + 1]], m:]
        d = np.linalg.norm(cand[None, :, :] - out[j][:, None, :], axis=2)  # (q, c)
        near = d.min(axis=1) < 1e-5
        out[j, near] = cand[np.argmin(d, axis=1)[near]]
    return out


def _cells_over(mesh: Mesh, t: SimplicialCurrent, cell_ids: np.ndarray) -> np.ndarray:
    cen = t.base_vertices().mean(axis=1)
    cell, _ = mesh.locate(cen)
    return np.isin(cell, cell_ids)


def _same_current(a: SimplicialCurrent, b: SimplicialCurrent) -> bool:
    """Equality as integral currents: ``a - b`` merges to nothing."""
    if len(a.simplices) == 0 or len(b.simplices) == 0:
        return len(a.simplices) == len(b.simplices)
    return len(_merge(np.concatenate([a.simplices, b.simplices]), np.concatenate([a.mult, -b.mult]), a.m).mult) == 0


# ---------------------------------------------------------------------------
# Taylor expansion of the area


@dataclass
class TaylorReport:
    """Excess against half the Dirichlet energy on regions.

    ``c_upper`` is the least C for ``e <= (1 + C Lip^2)/2 D``; ``c_lower_max``
    the largest C for ``e >= (1 - Lip^2/C)/2 D``; ``c_symmetric`` the least C
    for ``e >= (1 - C Lip^2)/2 D``.
    """

    lip: float
    rows: list  # (region index, excess, half dirichlet)
    c_upper: float
    c_lower_max: float
    c_symmetric: float

    @property
    def relative_error(self) -> float:
        return max((abs(e - d) / d for _, e, d in self.rows if d > 0), default=0.0)

    def holds(self, c: float, form: str = "split") -> bool:
        l2 = self.lip**2
        hi = 1 + c * l2
        lo = 1 - l2 / c if form == "split" else 1 - c * l2
        return all(lo * d - 1e-14 <= e <= hi * d + 1e-14 for _, e, d in self.rows)


def _square_regions(points: np.ndarray, levels: int = 3) -> list[np.ndarray]:
    """Masks of points in the dyadic sub-squares of their bounding square."""
    lo = points.min(axis=0)
    side = float(np.max(points.max(axis=0) - lo)) * (1 + 1e-12)
    out = []
    for lev in range(levels + 1):
        k = 2**lev
        idx = np.minimum(np.floor((points - lo) / side * k).astype(int), k - 1)
        for i in range(k):
            for j in range(k):
                mask = (idx[:, 0] == i) & (idx[:, 1] == j)
                if mask.any():
                    out.append(mask)
    return out


def taylor_check(g: QField, regions: Sequence[np.ndarray] | None = None) -> TaylorReport:
    """Compare ``e_{gr g}(A)`` with ``(1/2) int_A |Dg|^2`` on cell regions.

    Regions are masks over the mesh cells (default: the whole mesh and the
    dyadic squares of its bounding box, by cell centroid).
    """
    lip = g.lipschitz()
    if lip > 1 + 1e-12:
        raise InvalidInput(f"Lip(g) = {lip:.4g} exceeds 1")
    mesh = g.mesh
    # per-cell excess from the merged graph: lifted volume minus q * base volume
    al = _aligned_or_raise(g.values, mesh.cells)
    s, _ = _lift(mesh.vertices[mesh.cells], al)
    vol = _volumes(s).reshape(len(mesh.cells), g.q)
    exc = vol.sum(axis=1) - g.q * mesh.volumes
    dens = gradient_density(g) * mesh.volumes * 0.5
    if regions is None:
        regions = _square_regions(mesh.centroids, levels=3)
    rows = []
    c_up, c_lo_max, c_sym = 0.0, math.inf, 0.0
    for i, mask in enumerate(regions):
        e = float(exc[mask].sum())
        d = float(dens[mask].sum())
        rows.append((i, e, d))
        if d > 0 and lip > 0:
            ratio = e / d
            if ratio > 1:
                c_up = max(c_up, (ratio - 1) / lip**2)
            elif ratio < 1:
                c_lo_max = min(c_lo_max, lip**2 / (1 - ratio))
                c_sym = max(c_sym, (1 - ratio) / lip**2)
    return TaylorReport(lip, rows, c_up, c_lo_max, c_sym)


# ---------------------------------------------------------------------------
# empirical scans


def higher_integrability_scan(ef: ExcessField, ps: Sequence[float], threshold: float = 1.0) -> list[dict]:
    """``int_{delta <= threshold} delta^p`` against ``E^p`` for each p."""
    mask = ef.inside & (ef.delta <= threshold)
    area = ef.cell_area
    rows = []
    for p in ps:
        lhs = float(np.sum(ef.delta[mask] ** p) * area)
        rhs = ef.E**p
        rows.append({"p": float(p), "lhs": lhs, "E_p": rhs, "ratio": lhs / rhs if rhs > 0 else 0.0})
    return rows


def strong_estimate_scan(ef: ExcessField, regions: Sequence[np.ndarray], sigma: float) -> list[dict]:
    """``e_T(A)`` against ``E (E^sigma + |A|^sigma)`` for each region."""
    rows = []
    for i, mask in enumerate(regions):
        mask = mask & ef.inside
        a = float(mask.sum() * ef.cell_area)
        lhs = ef.excess_of(mask)
        rhs = ef.E * (ef.E**sigma + a**sigma)
        rows.append({"region": i, "area": a, "e_T": lhs, "bound": rhs, "ratio": lhs / rhs if rhs > 0 else 0.0})
    return rows
