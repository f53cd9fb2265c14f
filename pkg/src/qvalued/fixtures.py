"""Test objects with known answers: sheets, branched graphs, spikes, random graphs."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from . import forms
from .currents import SheetTrackingError, SimplicialCurrent, curve_pairing, graph_current
from .mesh import Mesh, QField

__all__ = [
    "branch_values",
    "flat_sheet",
    "tilted_sheet",
    "reversed_pair",
    "branched_box",
    "branched_polar",
    "spike_field",
    "random_two_valued",
    "random_psis",
    "stokes_form",
    "stokes_reference",
]


def branch_values(points: np.ndarray, power: float = 0.5, scale: float = 1.0, linear: np.ndarray | None = None) -> np.ndarray:
    """``[[L(c z^p)]] + [[-L(c z^p)]]`` at planar points, shape ``(K, 2, 2)``.

    Well defined as a 2-valued map when the monodromy ``exp(2 pi i p)`` is -1.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    z = pts[:, 0] + 1j * pts[:, 1]
    w = np.zeros(len(z), dtype=complex)
    nz = np.abs(z) > 0
    w[nz] = scale * np.exp(power * np.log(z[nz]))
    v = np.stack([w.real, w.imag], axis=1)
    if linear is not None:
        v = v @ np.asarray(linear, dtype=float).T
    return np.stack([v, -v], axis=1)


def flat_sheet(mesh: Mesh, q: int = 2, n: int = 1, heights=None) -> QField:
    h = np.zeros((q, n)) if heights is None else np.asarray(heights, dtype=float).reshape(q, n)
    return QField(mesh, np.broadcast_to(h, (mesh.nv, q, n)).copy())


def tilted_sheet(mesh: Mesh, a: np.ndarray) -> QField:
    """Single-valued linear graph ``x -> A x``."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    return QField(mesh, (mesh.vertices @ a.T)[:, None, :])


def reversed_pair(mesh: Mesh) -> SimplicialCurrent:
    """Flat sheets at heights 0 and 1 plus an orientation-reversed sheet at height 2.

    Projects to ``[[Omega]]``; the reversed sheet costs excess but no tilt
    of the unoriented planes.
    """
    base = mesh.vertices[mesh.cells]

    def lift(h):
        return np.concatenate([base, np.full(base.shape[:2] + (1,), float(h))], axis=2)

    s = np.concatenate([lift(0), lift(1), lift(2)])
    mult = np.repeat([1, 1, -1], len(base))
    return SimplicialCurrent(s, mult, mesh.m)


def branched_box(resolution: int, power: float = 0.5, scale: float = 1.0) -> QField:
    """Branched 2-valued graph on ``[-1, 1]^2`` with the branch point at a vertex."""
    if resolution % 2:
        raise ValueError("use an even resolution so the origin is a vertex")
    mesh = Mesh.box((resolution, resolution), [-1, -1], [1, 1])
    return QField(mesh, branch_values(mesh.vertices, power, scale))


def branched_polar(nr: int, power: float = 1.5, scale: float = 1.0, linear=None, nt: int | None = None) -> QField:
    mesh = Mesh.polar(1.0, nr, nt or 4 * nr)
    return QField(mesh, branch_values(mesh.vertices, power, scale, linear))


def spike_field(resolution: int, amplitude: float, q: int = 2) -> QField:
    """Flat sheets at heights ``0..q-1`` with the lowest sheet lifted at the centre vertex."""
    mesh = Mesh.box((resolution, resolution), [-1, -1], [1, 1])
    vals = np.zeros((mesh.nv, q, 1))
    vals[:, :, 0] = np.arange(q, dtype=float)[None, :]
    centre = int(np.argmin(np.linalg.norm(mesh.vertices, axis=1)))
    vals[centre, 0, 0] = amplitude
    return QField(mesh, vals)


def random_two_valued(rng: np.random.Generator, mesh: Mesh, n: int = 2, amplitude: float = 0.12, modes: int = 3, tries: int = 50) -> QField:
    """A random smooth 2-valued map whose graph is sheet-trackable on ``mesh``."""
    x = mesh.vertices
    for _ in range(tries):
        vals = np.zeros((mesh.nv, 2, n))
        for i in range(2):
            for j in range(n):
                k = rng.normal(size=(modes, 2)) * 2.0
                ph = rng.uniform(0, 2 * math.pi, modes)
                a = rng.normal(size=modes) * amplitude
                vals[:, i, j] = np.sin(x @ k.T + ph) @ a
        vals[:, 1, 0] += rng.uniform(0.0, 0.6)
        f = QField(mesh, vals)
        try:
            graph_current(f)
        except SheetTrackingError:
            continue
        return f
    raise RuntimeError("could not draw a sheet-trackable random graph")


def random_psis(rng: np.random.Generator, n: int = 2, count: int = 5) -> list[tuple[Callable, Callable]]:
    """Pairs ``(psi, grad psi)`` with ``psi(y) = sin(k.y + phi)/|k|`` so that ``|grad psi| <= 1``."""
    out = []
    for _ in range(count):
        k = rng.normal(size=n) * 1.5
        ph = float(rng.uniform(0, 2 * math.pi))
        kn = float(np.linalg.norm(k))

        def psi(y, k=k, ph=ph, kn=kn):
            return np.sin(y @ k + ph) / kn

        def dpsi(y, k=k, ph=ph, kn=kn):
            return np.cos(y @ k + ph)[:, None] * k[None, :] / kn

        out.append((psi, dpsi))
    return out


def stokes_form() -> forms.Form:
    """A polynomial 1-form on ``R^4`` used for boundary pairings."""
    x = forms.coords(4)
    return {
        (0,): x[2] * x[1],
        (1,): x[0] * x[3] ** 2,
        (2,): x[2] * x[3] + x[0],
        (3,): x[0] ** 2 * x[2],
    }


def stokes_reference(omega: forms.Form, power: float = 0.5, scale: float = 1.0) -> float:
    """``<T_{f, d[-1,1]^2}, omega>`` for the exact branched map, by Gauss quadrature on the sides."""
    corners = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)]
    total = 0.0
    for i in range(4):
        a = np.array(corners[i])
        b = np.array(corners[(i + 1) % 4])
        for sheet in (0, 1):

            def gamma(t, a=a, b=b, sheet=sheet):
                p = a[None, :] + np.asarray(t, dtype=float)[:, None] * (b - a)[None, :]
                return np.concatenate([p, branch_values(p, power, scale)[:, sheet]], axis=1)

            total += curve_pairing(omega, gamma, 0.0, 1.0, pieces=8)
    return total
