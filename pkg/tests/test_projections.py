import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qvalued.embedding import EmbeddingSpec, retract_rho, xi, xi_array
from qvalued.projections import (
    GeometryError,
    InconsistentSamples,
    RadialConeExtension,
    build_rho_star,
    cone_like_extension,
    kirszbraun_extend,
    radial_cone_extension,
    sup_distance_sweep,
    tube_samples,
    verify_energy_inequality,
)
from qvalued.qspace import InvalidInput

SPEC21 = EmbeddingSpec.build(2, 1)
P21 = build_rho_star(SPEC21, 0.1)


def test_kirszbraun_interpolates_and_degenerates():
    xs = np.array([[0.0, 0.0], [1.0, 0.0]])
    ys = np.array([[1.0], [2.0]])
    assert np.array_equal(kirszbraun_extend(xs, ys, 1.0, [1.0, 0.0]), [2.0])
    assert np.array_equal(kirszbraun_extend([[0.0]], [[7.0, -1.0]], 2.0, [5.0]), [7.0, -1.0])


def test_kirszbraun_one_dimensional_cone_intersection():
    xs = np.array([[0.0], [1.0], [3.0]])
    ys = np.array([[0.0], [1.0], [1.0]])
    lam = 1.0
    for x in np.linspace(-1, 4, 21):
        lo = max(y - lam * abs(x - xi_) for xi_, y in zip(xs[:, 0], ys[:, 0]))
        hi = min(y + lam * abs(x - xi_) for xi_, y in zip(xs[:, 0], ys[:, 0]))
        y = kirszbraun_extend(xs, ys, lam, [x])[0]
        assert lo - 1e-8 <= y <= hi + 1e-8


def test_kirszbraun_rejects_bad_input():
    with pytest.raises(InconsistentSamples):
        kirszbraun_extend([[0.0], [1.0]], [[0.0], [3.0]], 1.0, [0.5])
    with pytest.raises(InvalidInput):
        kirszbraun_extend([[0.0]], [[0.0]], 0.0, [0.5])
    with pytest.raises(InvalidInput):
        kirszbraun_extend([[0.0]], [[0.0]], 1.0, [0.5], method="nope")


@given(st.integers(0, 10_000), st.sampled_from(["polyak", "project"]))
def test_kirszbraun_keeps_the_samples_lipschitz(seed, method):
    rng = np.random.default_rng(seed)
    xs = rng.standard_normal((8, 3))
    a = rng.standard_normal((2, 3))
    a /= np.linalg.norm(a, 2)
    ys = xs @ a.T + 0.3 * np.sin(xs[:, :2])  # Lipschitz constant below 1.3
    lam = 1.3
    q = rng.standard_normal(3) * 2
    y = kirszbraun_extend(xs, ys, lam, q, method=method, start=np.zeros(2))
    assert np.all(np.linalg.norm(ys - y, axis=1) <= lam * np.linalg.norm(xs - q, axis=1) + 1e-7)


def test_radial_extension_on_a_half_line():
    tau = 0.04
    w = RadialConeExtension([[3.0]], [[3.0]], b=3.0, tau=tau)
    for x in np.linspace(0, tau, 5):
        assert np.array_equal(w([x]), [0.0])
    for x in np.linspace(0, 3, 61):
        assert abs(w([x])[0] - x) <= 30 * math.sqrt(tau)


def test_radial_extension_of_identity_on_a_sector():
    b, tau = 3.0, 0.05
    ang = np.linspace(0, math.pi / 3, 25)
    xs = b * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    ext = RadialConeExtension(xs, xs.copy(), b, tau)
    rr, aa = np.meshgrid(np.linspace(0.1, b, 10), np.linspace(0, math.pi / 3, 10))
    pts = np.stack([(rr * np.cos(aa)).ravel(), (rr * np.sin(aa)).ravel()], axis=1)
    err = max(float(np.linalg.norm(ext(p) - p)) for p in pts)
    assert err <= 10 * b * math.sqrt(tau)
    assert np.array_equal(radial_cone_extension(xs, xs, b, tau, [0.01, 0.0]), [0.0, 0.0])


def test_radial_extension_hypotheses():
    with pytest.raises(InvalidInput):
        RadialConeExtension([[2.0]], [[2.0]], b=2.0, tau=0.1)
    with pytest.raises(InvalidInput):
        RadialConeExtension([[3.0]], [[3.0]], b=3.0, tau=1.5)
    with pytest.raises(InconsistentSamples):
        RadialConeExtension([[3.0]], [[2.0]], b=3.0, tau=0.1)


def test_rho_star_identity_far_from_the_diagonal():
    w = xi([[-5.0], [5.0]], SPEC21)
    assert np.array_equal(P21(w), w)


def test_rho_star_collapses_the_inner_tube():
    mu = P21.mu
    d = mu / 2 / math.sqrt(2)
    w = np.array([1.0 - d, 1.0 + d])
    out = P21(w)
    assert out[0] == pytest.approx(out[1], abs=1e-12)
    assert out == pytest.approx([1.0, 1.0], abs=1e-12)


def test_rho_star_agrees_with_face_projection_on_tubes():
    pts = tube_samples(P21, 40, seed=3)
    assert len(pts) == 40
    for face, x in pts:
        assert np.linalg.norm(P21(x) - face.project(x)[0]) <= 1e-8


def test_rho_star_lands_on_cq(rng):
    for w in rng.standard_normal((40, 2)) * 3:
        out = P21(w)
        assert out[0] <= out[1] + 1e-12
        assert np.allclose(retract_rho(out, SPEC21), out, atol=1e-12)


def test_rho_star_rejects_large_mu():
    with pytest.raises(GeometryError):
        build_rho_star(SPEC21, 1.5)


def test_sup_distance_shrinks_with_mu():
    rows, slope = sup_distance_sweep(SPEC21, [0.2, 0.05], samples=100)
    assert rows[1][1] < rows[0][1]
    assert slope >= 2.0 ** -2 - 0.05


def test_energy_inequality_trivial_fields():
    const = np.ones((6, 6, 2)) * np.array([0.5, 2.0])
    rep = verify_energy_inequality(P21, [const])
    assert rep.lhs == [0.0] and rep.near == [0.0] and rep.far == [0.0]
    # fields valued in cQ away from the diagonal tube are left alone
    x = np.linspace(0, 1, 8)
    X, Y = np.meshgrid(x, x, indexing="ij")
    field = np.stack([X - 3, Y + 3], axis=-1)
    rep = verify_energy_inequality(P21, [field])
    assert rep.far == [0.0]
    assert rep.lhs[0] <= (1 + rep.mu**rep.exponent) * rep.near[0] + 1e-12
    assert rep.fitted_c == 0.0 and rep.holds(0.0)


def test_cone_like_extension_constant_and_apex():
    a = np.array([1.0, -2.0])

    def const(x):
        return np.tile(a, (3, 1))

    pts = np.array([[0.5, 0.0], [0.25, -0.75], [0.0, 0.0], [1.0, 1.0]])
    h = cone_like_extension(const, pts)
    for p, v in zip(pts, h):
        assert np.allclose(v, np.max(np.abs(p)) * np.tile(a, (3, 1)))
    assert np.array_equal(h[2], np.zeros((3, 2)))


def test_cone_like_extension_single_valued_reference(rng):
    def u(y):
        return np.array([[math.sin(y[0]) + y[1] ** 2]])

    pts = rng.uniform(-1, 1, (30, 2))
    h = cone_like_extension(u, pts)
    for p, v in zip(pts, h):
        r = max(abs(p[0]), abs(p[1]))
        ref = r * (math.sin(p[0] / r) + (p[1] / r) ** 2)
        assert v[0, 0] == pytest.approx(ref, rel=1e-13, abs=1e-15)
    with pytest.raises(InvalidInput):
        cone_like_extension(u, np.zeros((2, 2)))


def test_rho_star_on_three_points_keeps_tubes_exact():
    spec = EmbeddingSpec.build(3, 1)
    p = build_rho_star(spec, 0.05)
    for face, x in tube_samples(p, 20, seed=1):
        assert np.linalg.norm(p(x) - face.project(x)[0]) <= 1e-8
    t = np.array([[-20.0], [0.0], [20.0]])
    w = xi_array(t[None], spec)[0]
    assert np.allclose(p(w), w, atol=1e-12)
