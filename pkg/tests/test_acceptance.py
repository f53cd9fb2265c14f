"""Acceptance criteria, each at its stated tolerance, sample count and time budget.

Every test records one PASS/FAIL line; the lines are repeated in the
terminal summary under "acceptance criteria".
"""

import filecmp
import itertools
import math
import time

import numpy as np
import pytest

from qvalued import constants, fixtures
from qvalued.campaigns import (
    branch_minimizers,
    face_properties,
    library_currents,
    random_embedded_field,
    stokes_sweep,
    taylor_sweep,
)
from qvalued.cli import main
from qvalued.currents import bv_estimate_check, graph_current, lipschitz_approximate, varifold_excess
from qvalued.dirichlet import reverse_holder_check
from qvalued.embedding import EmbeddingSpec, decode, xi_array
from qvalued.mesh import Mesh
from qvalued.projections import (
    build_geometry,
    build_rho_star,
    sample_clustered,
    sup_distance_sweep,
    tube_samples,
    verify_energy_inequality,
)
from qvalued.qspace import QPoint, batch_matching, metric_g, wasserstein1

SEED = 0


def brute_force(a, b):
    """Plain-Python minima over all q! matchings of the squared and unsquared costs."""
    q = len(a)
    d = [[math.dist(a[i], b[j]) for j in range(q)] for i in range(q)]
    best2 = best1 = math.inf
    for perm in itertools.permutations(range(q)):
        best2 = min(best2, sum(d[i][perm[i]] ** 2 for i in range(q)))
        best1 = min(best1, sum(d[i][perm[i]] for i in range(q)))
    return math.sqrt(best2), best1


def test_criterion_01_metric_oracle(record_criterion):
    label = "C1 G and W1 against brute force, 500 pairs per (Q, n), <= 1e-12, < 10 s"
    record_criterion(label)
    worst = 0.0
    elapsed = 0.0
    for q in range(2, 7):
        for n in range(1, 4):
            rng = np.random.default_rng([SEED, 1, q, n])
            a = rng.standard_normal((500, q, n))
            b = rng.standard_normal((500, q, n))
            b[:125, 0] = a[:125, 1]  # shared points make ties
            t0 = time.perf_counter()
            g = [metric_g(QPoint(x), QPoint(y)) for x, y in zip(a, b)]
            w = [wasserstein1(QPoint(x), QPoint(y)) for x, y in zip(a, b)]
            elapsed += time.perf_counter() - t0
            for x, y, gv, wv in zip(a.tolist(), b.tolist(), g, w):
                g_ref, w_ref = brute_force(x, y)
                worst = max(worst, abs(gv - g_ref), abs(wv - w_ref))
    record_criterion(label, f"max error {worst:.2e}, library time {elapsed:.2f} s")
    assert worst <= 1e-12
    assert elapsed < 10.0


def test_criterion_02_metric_axioms(record_criterion):
    label = "C2 metric axioms and W1 >= G on 1e4 samples at 1e-9"
    record_criterion(label)
    tol = 1e-9
    total = 0
    worst = {"triangle": -math.inf, "symmetry": 0.0, "identity": 0.0, "positivity": 0, "chain": -math.inf}
    for q in range(2, 7):
        for n in range(1, 4):
            per = 667
            rng = np.random.default_rng([SEED, 2, q, n])
            a, b, c = (rng.standard_normal((per, q, n)) for _ in range(3))
            gab, gba, gbc, gac = (np.sqrt(np.maximum(batch_matching(x, y)[1], 0)) for x, y in ((a, b), (b, a), (b, c), (a, c)))
            gaa = np.sqrt(np.maximum(batch_matching(a, a[:, rng.permutation(q)])[1], 0))
            w1 = np.array([wasserstein1(QPoint(x), QPoint(y)) for x, y in zip(a, b)])
            worst["triangle"] = max(worst["triangle"], float(np.max(gac - gab - gbc)))
            worst["symmetry"] = max(worst["symmetry"], float(np.max(np.abs(gab - gba))))
            worst["identity"] = max(worst["identity"], float(np.max(gaa)))
            worst["positivity"] += int(np.sum(gab <= tol))
            worst["chain"] = max(worst["chain"], float(np.max(gab - w1)))
            total += per
    record_criterion(label, f"{total} samples, " + ", ".join(f"{k}={v:.2e}" for k, v in worst.items()))
    assert total >= 10_000
    assert worst["triangle"] <= tol
    assert worst["symmetry"] <= tol
    assert worst["identity"] <= tol
    assert worst["positivity"] == 0
    assert worst["chain"] <= tol


@pytest.mark.parametrize("q, n", [(2, 1), (2, 2), (3, 1)])
def test_criterion_03_embedding(q, n, record_criterion):
    label = f"C3 xi for ({q},{n}): bit-exact invariance, Lip <= 1+1e-9 on 1e4 pairs, decode <= 1e-6 on 1e3"
    record_criterion(label)
    spec = EmbeddingSpec.build(q, n, seed=SEED)
    rng = np.random.default_rng([SEED, 3, q, n])
    a = sample_clustered(rng, q, n, 10_000, 1.0)
    b = a + rng.standard_normal(a.shape) * rng.choice([1e-6, 1e-3, 1.0], size=(len(a), 1, 1))
    perm = np.array([rng.permutation(q) for _ in range(len(a))])
    xa = xi_array(a, spec)
    invariant = np.array_equal(xa, xi_array(np.take_along_axis(a, perm[:, :, None], axis=1), spec))
    g = np.sqrt(np.maximum(batch_matching(a, b)[1], 0))
    d = np.linalg.norm(xa - xi_array(b, spec), axis=1)
    lip = float(np.max(d[g > 1e-14] / g[g > 1e-14]))
    pts = sample_clustered(rng, q, n, 1000, 1.0)
    err = max(metric_g(decode(w, spec), QPoint(t)) for t, w in zip(pts, xi_array(pts, spec)))
    record_criterion(label, f"invariant={invariant}, Lip={lip:.12f}, roundtrip={err:.2e}")
    assert invariant
    assert lip <= 1 + 1e-9
    assert err <= 1e-6


def test_criterion_04_face_lattice(record_criterion):
    label = "C4 face lattice (2,1): two faces; partition, cone and limit on 1e4 samples"
    record_criterion(label)
    spec = EmbeddingSpec.build(2, 1, seed=SEED)
    dims = sorted(f.dim for f in spec.complex.faces)
    props = face_properties(spec, 10_000, SEED)
    record_criterion(label, f"dims={dims}, violations={props}")
    assert dims == [1, 2]
    assert props["samples"] == 10_000
    assert props["partition"] == 0 and props["cone"] == 0 and props["limit"] == 0


def test_criterion_05_almost_projection(record_criterion):
    label = "C5 rho*: tube coincidence 1e-8, sweep slope >= 2^-nQ - 0.05, energy inequality on 20 fields, < 5 min"
    record_criterion(label)
    t0 = time.perf_counter()
    spec = EmbeddingSpec.build(2, 1, seed=SEED)
    mus = [0.2, 0.1, 0.05, 0.025]
    geo = build_geometry(spec.complex, seed=SEED)
    tube_err, tube_count = 0.0, 0
    for mu in mus:
        p = build_rho_star(spec, mu, seed=SEED, geometry=geo)
        pts = tube_samples(p, 200, seed=SEED)
        tube_count += len(pts)
        tube_err = max([tube_err] + [float(np.linalg.norm(p(x) - f.project(x)[0])) for f, x in pts])
    _, slope = sup_distance_sweep(spec, mus, samples=400, seed=SEED)
    p = build_rho_star(spec, 0.1, seed=SEED, geometry=geo)
    rng = np.random.default_rng([SEED, 5])
    fields = [random_embedded_field(rng, spec.N, 12) for _ in range(20)]
    rep = verify_energy_inequality(p, fields)
    elapsed = time.perf_counter() - t0
    need = 2.0 ** (-spec.n * spec.q) - 0.05
    c = constants.ENERGY_INEQUALITY_C
    record_criterion(
        label,
        f"tube err {tube_err:.1e} on {tube_count}, slope {slope:.3f} >= {need}, fitted C {rep.fitted_c:.3f} <= {c}, {elapsed:.0f} s",
    )
    assert tube_count >= 4 * 100 and tube_err <= 1e-8
    assert slope >= need
    assert len(rep.lhs) == 20 and rep.holds(c)
    assert elapsed < 300


@pytest.fixture(scope="module")
def branch_runs():
    runs, times = [], []
    for res in (16, 32, 64):
        t0 = time.perf_counter()
        runs += branch_minimizers([res], restarts=5, seed=SEED)
        times.append(time.perf_counter() - t0)
    return runs, times


def test_criterion_06_branch_energy(branch_runs, record_criterion):
    label = "C6 branch minimiser energy at 64 within 5% of 2pi, < 2 min"
    record_criterion(label)
    runs, times = branch_runs
    res, r = runs[-1]
    rel = abs(r.report.total - 2 * math.pi) / (2 * math.pi)
    record_criterion(label, f"E={r.report.total:.6f}, rel err {rel:.4f}, {times[-1]:.1f} s")
    assert res == 64
    assert rel <= 0.05
    assert times[-1] < 120


def test_criterion_07_reverse_holder(branch_runs, record_criterion):
    label = "C7 reverse Holder ratio with s=1.5 stable within 2x over 3 refinements"
    record_criterion(label)
    runs, _ = branch_runs
    ratios = [reverse_holder_check(r.field, inner=0.9, s=1.5, p=3.0, radii=(0.1, 0.2)).max_ratio for _, r in runs]
    spread = max(ratios) / min(ratios)
    record_criterion(label, "ratios " + ", ".join(f"{x:.4f}" for x in ratios) + f", spread {spread:.3f}")
    assert len(ratios) == 3 and all(math.isfinite(x) and x > 0 for x in ratios)
    assert spread <= 2.0


def test_criterion_08_taylor(record_criterion):
    label = "C8 Taylor envelope (1 +- C Lip^2)/2 with frozen C, slope 2 +- 0.1"
    record_criterion(label)
    c = constants.TAYLOR_C
    sweep = taylor_sweep((0.2, 0.1, 0.05))
    eps = [e for e, _ in sweep]
    errs = [tr.relative_error for _, tr in sweep]
    slope = float(np.polyfit(np.log(eps), np.log(errs), 1)[0])
    envelope = [tr.holds(c, "symmetric") and tr.holds(c, "split") for _, tr in sweep]
    record_criterion(label, f"C={c}, envelopes {envelope}, slope {slope:.4f}")
    assert all(envelope)
    assert abs(slope - 2.0) <= 0.1


def test_criterion_09_bv(record_criterion):
    label = "C9 BV estimate with factor 2 (+10%): 50 graphs x 5 psi x all dyadic regions"
    record_criterion(label)
    rng = np.random.default_rng([SEED, 6])
    mesh = Mesh.box((16, 16), [-1, -1], [1, 1])
    psis = fixtures.random_psis(rng, n=2, count=5)
    worst = gap = 0.0
    checks = 0
    for _ in range(50):
        f = fixtures.random_two_valued(rng, mesh)
        rep = bv_estimate_check(f, psis, resolution=16, sub=8)
        checks += len(rep.rows)
        worst = max(worst, rep.worst)
        gap = max(gap, rep.route_gap)
    record_criterion(label, f"{checks} checks, worst ratio {worst:.4f}, slice/chain gap {gap:.4f}")
    assert checks == 50 * 5 * (1 + 4 + 16 + 64)
    assert constants.BV_FACTOR == 2.0
    assert worst <= 1 + constants.BV_MARGIN
    # the two total variation routes agree
    assert gap <= 0.01


def test_criterion_10_lipschitz_approximation(record_criterion):
    label = "C10 Lipschitz approximation of the spike: cell-exact on K, Lip <= C sqrt(eta), 5^m/eta coverage +10%"
    record_criterion(label)
    f = fixtures.spike_field(128, 0.012)
    t = graph_current(f)
    c = constants.LIPSCHITZ_APPROX_C
    rows = []
    for eta in (0.1, 0.05):
        la = lipschitz_approximate(t, f.mesh, eta, seed=SEED)
        rows.append((eta, la.cell_exact, la.lip_constant(), la.coverage_holds(constants.COVERAGE_MARGIN), int((~la.K).sum())))
    record_criterion(label, "; ".join(f"eta={e}: exact={x}, Lip/sqrt(eta)={l:.3f}, coverage={cv}" for e, x, l, cv, _ in rows))
    for eta, exact, lipc, cover, excluded in rows:
        assert exact
        assert lipc <= c
        assert cover
        assert excluded > 0  # the spike is left out of K


def test_criterion_11_stokes(record_criterion):
    label = "C11 Stokes boundary residual: order >= 1, <= 1e-3 at 64"
    record_criterion(label)
    sweep = stokes_sweep((8, 16, 32, 64))
    hs = [2.0 / n for n, _ in sweep]
    errs = [r.residual for _, r in sweep]
    order = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    discrete = max(r.discrete_residual for _, r in sweep)
    record_criterion(label, f"order {order:.3f}, residual at 64 {errs[-1]:.2e}, discrete {discrete:.1e}")
    assert sweep[-1][0] == 64
    assert order >= 1.0
    assert errs[-1] <= 1e-3
    assert discrete <= 1e-10


def test_criterion_12_varifold_excess(record_criterion):
    label = "C12 VE <= 2E on all fixtures; reversed pair has VE = 0 and E > 0"
    record_criterion(label)
    rows = {}
    for name, t in library_currents().items():
        half = float(np.min(np.max(np.abs(t.base_vertices().reshape(-1, t.m)), axis=0)))
        rows[name] = varifold_excess(t, (0.0, 0.0), 0.9 * half, 32)
    record_criterion(label, ", ".join(f"{k}: VE={v.ve:.2e} E={v.tilt:.2e}" for k, v in rows.items()))
    for v in rows.values():
        assert v.ve <= 2 * v.tilt + 1e-12
    assert rows["reversed"].ve <= 1e-12
    assert rows["reversed"].tilt > 1e-6


def test_criterion_13_determinism(tmp_path, record_criterion):
    label = "C13 determinism: byte-identical re-runs of every command"
    record_criterion(label)
    commands = ["metric-bench", "embed-verify", "rho-star-verify", "dirichlet-min", "current-analyze", "lipschitz-approx", "competitor"]
    differing = []
    compared = 0
    for cmd in commands:
        for d in ("a", "b"):
            main([cmd, "--seed", str(SEED), "--out", str(tmp_path / d)])
        cmp = filecmp.dircmp(tmp_path / "a" / cmd, tmp_path / "b" / cmd)
        differing += [f"{cmd}/{x}" for x in cmp.diff_files + cmp.left_only + cmp.right_only]
        for name in cmp.common_files:
            compared += 1
            if (tmp_path / "a" / cmd / name).read_bytes() != (tmp_path / "b" / cmd / name).read_bytes():
                differing.append(f"{cmd}/{name}")
    record_criterion(label, f"{compared} files compared, {len(differing)} differ")
    assert compared > len(commands)
    assert not differing
