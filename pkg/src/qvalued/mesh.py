"""Simplicial meshes and Q-valued fields sampled at their vertices."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from .qspace import InvalidInput, QPoint, batch_matching

__all__ = ["DegenerateMesh", "Mesh", "QField", "align_cells"]


class DegenerateMesh(ValueError):
    """A cell has (numerically) zero measure."""


@dataclass(eq=False)
class Mesh:
    """A conforming simplicial mesh of a domain in ``R^m``.

    ``grid`` is set for structured box meshes: ``{"shape", "lo", "h"}`` with
    two triangles per square (cells ``2s`` and ``2s+1`` lie in square ``s``).
    """

    vertices: np.ndarray
    cells: np.ndarray
    boundary: np.ndarray | None = None
    grid: dict | None = None

    def __post_init__(self) -> None:
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        c = np.asarray(self.cells, dtype=np.int64)
        m = v.shape[1]
        if c.ndim != 2 or c.shape[1] != m + 1:
            raise InvalidInput(f"cells must have {m + 1} vertices in dimension {m}")
        # orient every cell positively
        e = v[c[:, 1:]] - v[c[:, :1]]
        det = np.linalg.det(e) if m > 0 else np.ones(len(c))
        scale = float(np.ptp(v, axis=0).max()) if len(v) > 1 else 1.0
        if np.any(np.abs(det) <= 1e-14 * scale**m):
            raise DegenerateMesh("mesh contains cells of zero measure")
        neg = det < 0
        if neg.any():
            c = c.copy()
            c[neg, :2] = c[neg, 1::-1]
        self.vertices = v
        self.cells = c
        if self.boundary is None:
            self.boundary = self._topological_boundary()
        else:
            self.boundary = np.asarray(self.boundary, dtype=bool)

    # -- basic geometry ---------------------------------------------------
    @property
    def m(self) -> int:
        return self.vertices.shape[1]

    @property
    def nv(self) -> int:
        return len(self.vertices)

    def _topological_boundary(self) -> np.ndarray:
        counts: dict[tuple, int] = {}
        m = self.m
        for cell in self.cells:
            for facet in combinations(sorted(cell.tolist()), m):
                counts[facet] = counts.get(facet, 0) + 1
        mask = np.zeros(self.nv, dtype=bool)
        for facet, k in counts.items():
            if k == 1:
                mask[list(facet)] = True
        return mask

    @cached_property
    def boundary_facets(self) -> np.ndarray:
        """Facets on the boundary, oriented as the boundary of their cell."""
        counts: dict[tuple, list] = {}
        for cell in self.cells:
            cl = cell.tolist()
            for i in range(len(cl)):
                facet = cl[:i] + cl[i + 1 :]
                sign = (-1) ** i
                counts.setdefault(tuple(sorted(facet)), []).append((facet, sign))
        out = []
        for entries in counts.values():
            if len(entries) == 1:
                facet, sign = entries[0]
                if sign < 0:
                    facet = [facet[1], facet[0]] + facet[2:] if len(facet) > 1 else facet
                out.append(facet)
        return np.array(out, dtype=np.int64)

    @cached_property
    def volumes(self) -> np.ndarray:
        e = self.vertices[self.cells[:, 1:]] - self.vertices[self.cells[:, :1]]
        return np.abs(np.linalg.det(e)) / math.factorial(self.m)

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.cells].mean(axis=1)

    @cached_property
    def gradients(self) -> np.ndarray:
        """Gradients of the barycentric coordinates, shape ``(C, m+1, m)``."""
        e = self.vertices[self.cells[:, 1:]] - self.vertices[self.cells[:, :1]]  # (C, m, m)
        inv = np.linalg.inv(e)  # rows of inv(E) are gradients of lambda_1..lambda_m (E has rows e_j)
        g = np.transpose(inv, (0, 2, 1))
        g0 = -g.sum(axis=1, keepdims=True)
        return np.concatenate([g0, g], axis=1)

    @cached_property
    def local_stiffness(self) -> np.ndarray:
        g = self.gradients
        return self.volumes[:, None, None] * np.einsum("cik,cjk->cij", g, g)

    @cached_property
    def edges(self) -> np.ndarray:
        m1 = self.m + 1
        pairs = [(i, j) for i in range(m1) for j in range(i + 1, m1)]
        e = np.concatenate([np.sort(self.cells[:, [i, j]], axis=1) for i, j in pairs])
        return np.unique(e, axis=0)

    @cached_property
    def edge_index(self) -> dict:
        return {(int(a), int(b)): k for k, (a, b) in enumerate(self.edges)}

    @cached_property
    def cell_edges(self) -> tuple[np.ndarray, np.ndarray]:
        """For every cell and local pair: global edge id and stiffness weight ``-K_ab``."""
        m1 = self.m + 1
        pairs = [(i, j) for i in range(m1) for j in range(i + 1, m1)]
        idx = np.empty((len(self.cells), len(pairs)), dtype=np.int64)
        w = np.empty((len(self.cells), len(pairs)))
        k = self.local_stiffness
        lookup = self.edge_index
        for p, (i, j) in enumerate(pairs):
            a = np.minimum(self.cells[:, i], self.cells[:, j])
            b = np.maximum(self.cells[:, i], self.cells[:, j])
            idx[:, p] = [lookup[(int(x), int(y))] for x, y in zip(a, b)]
            w[:, p] = -k[:, i, j]
        return idx, w

    @cached_property
    def edge_weights(self) -> np.ndarray:
        """Global edge coefficients ``c_e = -K_ab`` of the P1 stiffness matrix."""
        idx, w = self.cell_edges
        return np.bincount(idx.ravel(), weights=w.ravel(), minlength=len(self.edges))

    @cached_property
    def lumped_mass(self) -> np.ndarray:
        out = np.zeros(self.nv)
        np.add.at(out, self.cells.ravel(), np.repeat(self.volumes / (self.m + 1), self.m + 1))
        return out

    @property
    def measure(self) -> float:
        return float(self.volumes.sum())

    @property
    def spacing(self) -> float:
        d = self.vertices[self.edges[:, 0]] - self.vertices[self.edges[:, 1]]
        return float(np.median(np.linalg.norm(d, axis=1)))

    def stiffness_matrix(self):
        from scipy.sparse import coo_matrix

        m1 = self.m + 1
        rows = np.repeat(self.cells, m1, axis=1).ravel()
        cols = np.tile(self.cells, (1, m1)).ravel()
        return coo_matrix((self.local_stiffness.ravel(), (rows, cols)), shape=(self.nv, self.nv)).tocsr()

    # -- point location ---------------------------------------------------
    @cached_property
    def _tree(self):
        return cKDTree(self.centroids)

    def locate(self, points: np.ndarray, k: int = 12) -> tuple[np.ndarray, np.ndarray]:
        """Containing cell and barycentric coordinates of each point (-1 if outside)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        kk = min(k, len(self.cells))
        _, cand = self._tree.query(pts, k=kk)
        cand = np.atleast_2d(cand).reshape(len(pts), kk)
        v0 = self.vertices[self.cells[cand, 0]]  # (P, kk, m)
        g = self.gradients[cand]  # (P, kk, m+1, m)
        lam = np.empty(cand.shape + (self.m + 1,))
        lam[..., 1:] = np.einsum("pcij,pcj->pci", g[..., 1:, :], pts[:, None, :] - v0)
        lam[..., 0] = 1.0 - lam[..., 1:].sum(axis=-1)
        low = lam.min(axis=-1)
        hit = low >= -1e-12
        # nearest-centroid candidate that contains the point, else the least violating one
        pick = np.where(hit.any(axis=1), np.argmax(hit, axis=1), np.argmax(low, axis=1))
        rows = np.arange(len(pts))
        ok = low[rows, pick] >= -1e-9
        cell_of = np.where(ok, cand[rows, pick], -1).astype(np.int64)
        bary = np.where(ok[:, None], lam[rows, pick], 0.0)
        return cell_of, bary

    def barycentric(self, c: int, x: np.ndarray) -> np.ndarray:
        v = self.vertices[self.cells[c]]
        g = self.gradients[c]
        lam = np.empty(len(v))
        lam[1:] = g[1:] @ (x - v[0])
        lam[0] = 1.0 - lam[1:].sum()
        return lam

    # -- constructors -----------------------------------------------------
    @classmethod
    def box(cls, shape, lo=None, hi=None) -> "Mesh":
        """Structured mesh of a box; squares split along their main diagonal."""
        shape = tuple(int(s) for s in np.atleast_1d(shape))
        m = len(shape)
        lo = np.zeros(m) if lo is None else np.asarray(lo, dtype=float).reshape(m)
        hi = np.ones(m) if hi is None else np.asarray(hi, dtype=float).reshape(m)
        h = (hi - lo) / np.array(shape)
        if m == 1:
            x = lo[0] + h[0] * np.arange(shape[0] + 1)
            cells = np.stack([np.arange(shape[0]), np.arange(1, shape[0] + 1)], axis=1)
            return cls(x[:, None], cells, grid={"shape": shape, "lo": lo.tolist(), "h": h.tolist()})
        if m != 2:
            raise InvalidInput("box meshes are available for m = 1, 2")
        nx, ny = shape
        xs = lo[0] + h[0] * np.arange(nx + 1)
        ys = lo[1] + h[1] * np.arange(ny + 1)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        verts = np.stack([X.ravel(), Y.ravel()], axis=1)

        def vid(i, j):
            return i * (ny + 1) + j

        I, J = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
        I, J = I.ravel(), J.ravel()
        a, b, c, d = vid(I, J), vid(I + 1, J), vid(I + 1, J + 1), vid(I, J + 1)
        cells = np.empty((2 * len(I), 3), dtype=np.int64)
        cells[0::2] = np.stack([a, b, c], axis=1)
        cells[1::2] = np.stack([a, c, d], axis=1)
        return cls(verts, cells, grid={"shape": shape, "lo": lo.tolist(), "h": h.tolist()})

    @classmethod
    def disk(cls, radius: float = 1.0, n: int = 64, center=(0.0, 0.0)) -> "Mesh":
        """Delaunay mesh of a disk from an ``n x n`` grid plus boundary points."""
        h = 2 * radius / n
        t = -radius + h * (np.arange(n + 1))
        X, Y = np.meshgrid(t, t, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel()], axis=1)
        pts = pts[np.linalg.norm(pts, axis=1) < radius - 0.5 * h]
        nb = int(math.ceil(2 * math.pi * radius / h))
        ang = 2 * math.pi * np.arange(nb) / nb
        circle = radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
        verts = np.vstack([pts, circle]) + np.asarray(center, dtype=float)
        tri = Delaunay(verts)
        bnd = np.zeros(len(verts), dtype=bool)
        bnd[len(pts) :] = True
        return cls(verts, tri.simplices, boundary=bnd)

    @classmethod
    def annulus(cls, r0: float, r1: float, nr: int, nt: int) -> "Mesh":
        """Structured polar mesh of ``r0 <= |x| <= r1``."""
        rs = np.linspace(r0, r1, nr + 1)
        ang = 2 * math.pi * np.arange(nt) / nt
        R, A = np.meshgrid(rs, ang, indexing="ij")
        verts = np.stack([(R * np.cos(A)).ravel(), (R * np.sin(A)).ravel()], axis=1)

        def vid(i, j):
            return i * nt + (j % nt)

        cells = []
        for i in range(nr):
            for j in range(nt):
                a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
                cells.append([a, b, c])
                cells.append([a, c, d])
        return cls(verts, np.array(cells))

    @classmethod
    def polar(cls, radius: float, nr: int, nt: int) -> "Mesh":
        """Disk mesh of ``nr`` rings with ``nt`` sectors and a central fan.

        Angular resolution stays fixed near the centre, so branched data
        rotating faster than the angle remains sheet-trackable.
        """
        verts = [np.zeros(2)]
        ang = 2 * math.pi * np.arange(nt) / nt
        for i in range(1, nr + 1):
            rr = radius * i / nr
            verts.extend(np.stack([rr * np.cos(ang), rr * np.sin(ang)], axis=1))
        verts = np.array(verts)

        def vid(i, j):
            return 1 + (i - 1) * nt + (j % nt)

        cells = [[0, vid(1, j), vid(1, j + 1)] for j in range(nt)]
        for i in range(1, nr):
            for j in range(nt):
                a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
                cells.append([a, b, c])
                cells.append([a, c, d])
        return cls(verts, np.array(cells))

    # -- serialisation ----------------------------------------------------
    def to_dict(self) -> dict:
        d = {
            "m": self.m,
            "vertices": self.vertices.tolist(),
            "cells": self.cells.tolist(),
            "boundary": np.flatnonzero(self.boundary).tolist(),
        }
        if self.grid is not None:
            d["grid"] = {"shape": list(self.grid["shape"]), "lo": list(self.grid["lo"]), "h": list(self.grid["h"])}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Mesh":
        v = np.asarray(d["vertices"], dtype=float).reshape(-1, int(d["m"]))
        bnd = np.zeros(len(v), dtype=bool)
        bnd[np.asarray(d["boundary"], dtype=np.int64)] = True
        grid = d.get("grid")
        if grid is not None:
            grid = {"shape": tuple(grid["shape"]), "lo": list(grid["lo"]), "h": list(grid["h"])}
        return cls(v, np.asarray(d["cells"], dtype=np.int64), bnd, grid)


def align_cells(values: np.ndarray, cells: np.ndarray, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Sheet decomposition per cell.

    For every cell, each vertex's Q-point is matched to a reference vertex;
    the reference is chosen among the cell's vertices to minimise the
    inconsistency ``max_{j,k} (implied cost - optimal cost)``.  Returns the
    aligned values ``(C, m+1, q, n)`` and that inconsistency (0 when the cell
    carries ``q`` consistent single-valued sheets).
    """
    vals = values[cells]  # (C, m1, q, n)
    ncell, m1, q, n = vals.shape
    best = None
    best_excess = None
    for ref in range(m1):
        aligned = np.empty_like(vals)
        for j in range(m1):
            if j == ref:
                aligned[:, j] = vals[:, ref]
                continue
            sig, _ = batch_matching(vals[:, ref], vals[:, j])
            aligned[:, j] = np.take_along_axis(vals[:, j], sig[:, :, None], axis=1)
        excess = np.zeros(ncell)
        for j in range(m1):
            for k in range(j + 1, m1):
                implied = np.sum((aligned[:, j] - aligned[:, k]) ** 2, axis=(1, 2))
                _, opt = batch_matching(aligned[:, j], aligned[:, k])
                excess = np.maximum(excess, implied - opt)
        if best is None:
            best, best_excess = aligned, excess
        else:
            better = excess < best_excess - tol
            best[better] = aligned[better]
            best_excess = np.where(better, excess, best_excess)
    return best, np.maximum(best_excess, 0.0)


@dataclass(eq=False)
class QField:
    """A Q-valued map given by its values ``(V, q, n)`` at the mesh vertices."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 2:
            v = v[:, :, None]
        if v.ndim != 3 or v.shape[0] != self.mesh.nv:
            raise InvalidInput(f"expected values of shape ({self.mesh.nv}, q, n), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidInput("field values must be finite")
        self.values = v

    @property
    def q(self) -> int:
        return self.values.shape[1]

    @property
    def n(self) -> int:
        return self.values.shape[2]

    def at(self, i: int) -> QPoint:
        return QPoint(self.values[i])

    @property
    def trace(self) -> np.ndarray:
        return self.values[self.mesh.boundary]

    def with_values(self, values: np.ndarray) -> "QField":
        return QField(self.mesh, values)

    @cached_property
    def aligned(self) -> tuple[np.ndarray, np.ndarray]:
        return align_cells(self.values, self.mesh.cells)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Sheetwise P1 interpolation at arbitrary points, shape ``(K, q, n)``."""
        cell, bary = self.mesh.locate(points)
        if np.any(cell < 0):
            raise InvalidInput("some points lie outside the mesh")
        al, _ = self.aligned
        return np.einsum("kj,kjqn->kqn", bary, al[cell])

    def trace_at(self, points: np.ndarray) -> np.ndarray:
        """Values at points near the boundary of a planar mesh.

        Each point is projected to the closest boundary segment and the two
        endpoint values are interpolated after optimal matching.
        """
        if self.mesh.m != 2:
            raise InvalidInput("trace_at needs a planar mesh")
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        seg = self.mesh.boundary_facets
        a = self.mesh.vertices[seg[:, 0]]
        d = self.mesh.vertices[seg[:, 1]] - a
        dd = np.einsum("sk,sk->s", d, d)
        t = np.clip(np.einsum("psk,sk->ps", pts[:, None, :] - a[None], d) / dd, 0.0, 1.0)
        foot = a[None] + t[:, :, None] * d[None]
        s = np.argmin(np.linalg.norm(pts[:, None, :] - foot, axis=2), axis=1)
        tt = t[np.arange(len(pts)), s]
        va = self.values[seg[s, 0]]
        vb = self.values[seg[s, 1]]
        sig, _ = batch_matching(va, vb)
        vb = np.take_along_axis(vb, sig[:, :, None], axis=1)
        return (1 - tt)[:, None, None] * va + tt[:, None, None] * vb

    def sample(self, points: np.ndarray) -> np.ndarray:
        """:meth:`evaluate` inside the mesh, :meth:`trace_at` outside it."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        cell, bary = self.mesh.locate(pts)
        out = np.empty((len(pts), self.q, self.n))
        inside = cell >= 0
        if inside.any():
            al, _ = self.aligned
            out[inside] = np.einsum("kj,kjqn->kqn", bary[inside], al[cell[inside]])
        if (~inside).any():
            out[~inside] = self.trace_at(pts[~inside])
        return out

    def lipschitz(self) -> float:
        """Largest edge quotient ``G(u(a), u(b)) / |a - b|``."""
        e = self.mesh.edges
        _, cost = batch_matching(self.values[e[:, 0]], self.values[e[:, 1]])
        length = np.linalg.norm(self.mesh.vertices[e[:, 0]] - self.mesh.vertices[e[:, 1]], axis=1)
        return float(np.max(np.sqrt(np.maximum(cost, 0)) / length)) if len(e) else 0.0

    def to_dict(self) -> dict:
        return {
            "mesh": self.mesh.to_dict(),
            "q": self.q,
            "n": self.n,
            "values": [QPoint(v).canonical().tolist() for v in self.values],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QField":
        mesh = Mesh.from_dict(d["mesh"])
        vals = np.asarray(d["values"], dtype=float).reshape(mesh.nv, int(d["q"]), int(d["n"]))
        return cls(mesh, vals)
