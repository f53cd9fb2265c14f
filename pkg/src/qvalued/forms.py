"""Polynomial differential forms on ``R^D`` and their integrals over affine simplices.

A k-form is a dict mapping strictly increasing index tuples ``(i_1, ..., i_k)``
to sympy expressions in the coordinates ``x0, ..., x{D-1}``.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations

import numpy as np
import sympy as sp
from scipy.special import roots_legendre

__all__ = ["Form", "coords", "exterior_derivative", "wedge_coefficients", "simplex_rule", "integrate_form", "all_index_sets"]

Form = dict


@lru_cache(maxsize=None)
def coords(d: int) -> tuple:
    return sp.symbols(f"x0:{d}", real=True)


def _sort_sign(idx: tuple) -> tuple[int, tuple]:
    """Sign of the permutation sorting ``idx`` (0 if an index repeats) and the sorted tuple."""
    if len(set(idx)) < len(idx):
        return 0, idx
    arr = list(idx)
    sign = 1
    for i in range(len(arr)):
        for j in range(len(arr) - 1 - i):
            if arr[j] > arr[j + 1]:
                arr[j], arr[j + 1] = arr[j + 1], arr[j]
                sign = -sign
    return sign, tuple(arr)


def exterior_derivative(omega: Form, d: int) -> Form:
    """``d omega`` for a polynomial form on ``R^d``."""
    x = coords(d)
    out: dict = {}
    for idx, expr in omega.items():
        for j in range(d):
            dexpr = sp.diff(expr, x[j])
            if dexpr == 0:
                continue
            sign, key = _sort_sign((j,) + tuple(idx))
            if sign == 0:
                continue
            out[key] = out.get(key, 0) + sign * dexpr
    return {k: sp.expand(v) for k, v in out.items() if sp.expand(v) != 0}


def wedge_coefficients(edges: np.ndarray, index_sets) -> np.ndarray:
    """Components ``det(E[:, I])`` of ``e_1 ^ ... ^ e_k`` for edge stacks ``(K, k, D)``."""
    cols = [np.linalg.det(edges[:, :, list(idx)]) if len(idx) else np.ones(len(edges)) for idx in index_sets]
    return np.stack(cols, axis=1) if cols else np.zeros((len(edges), 0))


@lru_cache(maxsize=None)
def simplex_rule(k: int, p: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Collapsed Gauss-Legendre rule on the unit k-simplex.

    Returns barycentric-style coordinates ``(P, k)`` of the points
    ``lambda_1..lambda_k`` and weights summing to ``1/k!``.
    """
    if k == 0:
        return np.zeros((1, 0)), np.ones(1)
    t, w = roots_legendre(p)
    t = 0.5 * (t + 1)
    w = 0.5 * w
    grids = np.meshgrid(*([t] * k), indexing="ij")
    wg = np.meshgrid(*([w] * k), indexing="ij")
    u = np.stack([g.ravel() for g in grids], axis=1)
    wt = np.prod(np.stack([g.ravel() for g in wg], axis=1), axis=1)
    lam = np.empty_like(u)
    rest = np.ones(len(u))
    for i in range(k):
        lam[:, i] = rest * u[:, i]
        rest = rest * (1 - u[:, i])
    # Jacobian of the collapse map: prod_i (1 - u_i)^(k-1-i)
    jac = np.ones(len(u))
    for i in range(k - 1):
        jac = jac * (1 - u[:, i]) ** (k - 1 - i)
    return lam, wt * jac


def integrate_form(omega: Form, simplices: np.ndarray, mult: np.ndarray, p: int = 8) -> float:
    """``<T, omega>`` for ``T = sum_j mult_j [[simplex_j]]`` (vertices ``(K, k+1, D)``)."""
    simplices = np.asarray(simplices, dtype=float)
    if len(simplices) == 0 or not omega:
        return 0.0
    kk = simplices.shape[1] - 1
    d = simplices.shape[2]
    x = coords(d)
    lam, wt = simplex_rule(kk, p)
    v0 = simplices[:, 0, :]
    edges = simplices[:, 1:, :] - v0[:, None, :]
    keys = list(omega)
    wedge = wedge_coefficients(edges, keys)  # (K, len(keys))
    pts = v0[:, None, :] + np.einsum("pk,ckd->cpd", lam, edges)  # (K, P, D)
    flat = pts.reshape(-1, d)
    total = np.zeros(len(simplices))
    for c, key in enumerate(keys):
        fn = sp.lambdify(x, omega[key], "numpy")
        vals = np.broadcast_to(np.asarray(fn(*flat.T), dtype=float), (len(flat),)).reshape(pts.shape[:2])
        total += wedge[:, c] * (vals @ wt)
    return float(np.dot(np.asarray(mult, dtype=float), total))


def all_index_sets(d: int, k: int) -> list[tuple]:
    return list(combinations(range(d), k))

