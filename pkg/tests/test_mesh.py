import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qvalued.mesh import DegenerateMesh, Mesh, QField, align_cells
from qvalued.qspace import InvalidInput


def test_box_counts_and_measure():
    m = Mesh.box((4, 3), [-1, 0], [1, 3])
    assert m.nv == 5 * 4 and len(m.cells) == 24
    assert m.measure == pytest.approx(6.0, rel=1e-14)
    assert m.boundary.sum() == 2 * (5 + 4) - 4
    assert np.all(m.volumes > 0)


def test_interval_mesh():
    m = Mesh.box(5)
    assert m.m == 1 and m.measure == pytest.approx(1.0)
    assert m.boundary.tolist() == [True, False, False, False, False, True]


def test_degenerate_cell_rejected():
    with pytest.raises(DegenerateMesh):
        Mesh(np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]), np.array([[0, 1, 2]]))


def test_cells_are_positively_oriented():
    m = Mesh(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), np.array([[0, 2, 1]]))
    e = m.vertices[m.cells[:, 1:]] - m.vertices[m.cells[:, :1]]
    assert np.linalg.det(e)[0] > 0


@pytest.mark.parametrize(
    "mesh, area",
    [
        (Mesh.disk(1.0, 32), math.pi),
        (Mesh.annulus(0.5, 1.0, 8, 64), 0.75 * math.pi),
        (Mesh.polar(1.0, 8, 64), math.pi),
    ],
    ids=["disk", "annulus", "polar"],
)
def test_curved_meshes_approximate_their_area(mesh, area):
    assert mesh.measure == pytest.approx(area, rel=5e-3)
    r = np.linalg.norm(mesh.vertices[mesh.boundary], axis=1)
    assert np.all((np.abs(r - 1.0) < 1e-12) | (np.abs(r - 0.5) < 1e-12))


def test_stiffness_reproduces_linear_energy(rng):
    m = Mesh.disk(1.0, 16)
    a = rng.standard_normal(2)
    u = m.vertices @ a
    k = m.stiffness_matrix()
    assert float(u @ (k @ u)) == pytest.approx(float(a @ a) * m.measure, rel=1e-12)
    assert np.allclose(k @ np.ones(m.nv), 0.0, atol=1e-12)


def test_barycentric_gradients_reproduce_affine_maps(rng):
    m = Mesh.box((3, 3))
    a = rng.standard_normal(2)
    u = m.vertices @ a + 0.7
    grad = np.einsum("cjk,cj->ck", m.gradients, u[m.cells])
    assert np.allclose(grad, a[None, :], atol=1e-12)


def test_locate_inside_and_outside(rng):
    m = Mesh.box((6, 6), [-1, -1], [1, 1])
    pts = rng.uniform(-1, 1, (200, 2))
    cell, bary = m.locate(pts)
    assert np.all(cell >= 0)
    assert np.allclose(np.einsum("pj,pjk->pk", bary, m.vertices[m.cells[cell]]), pts, atol=1e-12)
    assert np.all(bary >= -1e-12)
    cell, _ = m.locate(np.array([[1.5, 0.0], [0.0, -3.0]]))
    assert cell.tolist() == [-1, -1]


def test_mesh_roundtrip():
    m = Mesh.box((3, 2), [0, 0], [3, 2])
    back = Mesh.from_dict(json.loads(json.dumps(m.to_dict())))
    assert np.array_equal(back.vertices, m.vertices)
    assert np.array_equal(back.cells, m.cells)
    assert np.array_equal(back.boundary, m.boundary)
    assert back.grid["shape"] == (3, 2)


def test_field_shape_checks():
    m = Mesh.box((2, 2))
    with pytest.raises(InvalidInput):
        QField(m, np.zeros((3, 2, 1)))
    with pytest.raises(InvalidInput):
        QField(m, np.full((m.nv, 2, 1), np.inf))
    f = QField(m, np.zeros((m.nv, 2)))
    assert (f.q, f.n) == (2, 1)


def test_align_cells_consistent_sheets(rng):
    m = Mesh.box((4, 4))
    a = m.vertices @ rng.standard_normal(2)
    vals = np.stack([a, a + 5.0], axis=1)[:, :, None]
    # shuffle the labels vertex by vertex
    flip = rng.random(m.nv) < 0.5
    vals[flip] = vals[flip][:, ::-1]
    al, excess = align_cells(vals, m.cells)
    assert np.all(excess <= 1e-12)
    low = al[:, :, 0, 0] < al[:, :, 1, 0]
    assert np.all(low == low[:, :1])


def test_linear_sheets_interpolate_exactly(rng):
    m = Mesh.box((5, 5), [-1, -1], [1, 1])
    a, b = rng.standard_normal((2, 2))
    vals = np.stack([m.vertices @ a, m.vertices @ b + 10], axis=1)
    f = QField(m, vals)
    pts = rng.uniform(-1, 1, (50, 2))
    got = np.sort(f.evaluate(pts)[:, :, 0], axis=1)
    want = np.sort(np.stack([pts @ a, pts @ b + 10], axis=1), axis=1)
    assert np.allclose(got, want, atol=1e-12)
    # sheets stay 10 apart, so every edge matches them sheetwise
    dirs = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]) / np.array([[1.0], [1.0], [math.sqrt(2)]])
    want_lip = max(math.hypot(d @ a, d @ b) for d in dirs)
    assert f.lipschitz() == pytest.approx(want_lip, rel=1e-12)


def test_trace_and_sample_outside():
    m = Mesh.box((4, 4))
    vals = np.stack([m.vertices[:, 0], -m.vertices[:, 0]], axis=1)
    f = QField(m, vals)
    out = f.sample(np.array([[1.2, 0.5], [0.5, 0.5]]))
    assert np.allclose(np.sort(out[0, :, 0]), [-1.0, 1.0])
    assert np.allclose(np.sort(out[1, :, 0]), [-0.5, 0.5])


@given(st.integers(1, 3), st.integers(1, 2), st.integers(0, 1000))
def test_field_roundtrip(q, n, seed):
    m = Mesh.box((2, 3))
    vals = np.random.default_rng(seed).standard_normal((m.nv, q, n))
    f = QField(m, vals)
    g = QField.from_dict(json.loads(json.dumps(f.to_dict())))
    for i in range(m.nv):
        assert f.at(i) == g.at(i)
