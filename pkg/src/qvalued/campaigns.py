"""Verification suites run by the command line harness.

Every suite returns a :class:`SuiteResult`: named checks with the measured
value and the bound it was held to, CSV tables, and fitted constants.  All
randomness flows from the campaign seed.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import constants, fixtures
from .config import CampaignConfig
from .currents import (
    SimplicialCurrent,
    boundary,
    bv_estimate_check,
    excess_field,
    graph_current,
    lipschitz_approximate,
    mass,
    stokes_check,
    taylor_check,
    varifold_excess,
)
from .dirichlet import MinimizerOptions, build_competitor, minimize_dirichlet, reverse_holder_check
from .embedding import EmbeddingSpec, decode, face_of, xi, xi_array
from .mesh import Mesh, QField
from .projections import build_geometry, build_rho_star, sample_clustered, sup_distance_sweep, tube_samples, verify_energy_inequality
from .qspace import QPoint, batch_matching, metric_g, wasserstein1

__all__ = ["Check", "SuiteResult", "SUITES", "run_suites"]


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    bound: float
    warning: bool = False  # soft check: fails only under --strict


@dataclass
class SuiteResult:
    command: str
    suite: str
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)  # name -> (header, rows)
    constants: dict = field(default_factory=dict)

    def check(self, name: str, value: float, bound: float, ok: bool | None = None, warning: bool = False) -> None:
        passed = bool(value <= bound) if ok is None else bool(ok)
        self.checks.append(Check(name, passed, float(value), float(bound), warning))

    def table(self, name: str, header: list, rows: list) -> None:
        self.tables[name] = (header, rows)


def _seq(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng([seed, *keys])


# ---------------------------------------------------------------------------
# metric-bench


def _brute(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exhaustive permutation minima of the squared and the plain assignment costs."""
    q = a.shape[1]
    perms = np.array(list(itertools.permutations(range(q))))
    d = np.linalg.norm(a[:, :, None, :] - b[:, None, :, :], axis=-1)
    rows = np.arange(q)
    c2 = (d[:, rows[None, :], perms] ** 2).sum(-1).min(axis=1)
    c1 = d[:, rows[None, :], perms].sum(-1).min(axis=1)
    return np.sqrt(c2), c1


def suite_oracle(cfg: CampaignConfig, seed: int) -> SuiteResult:
    mb = cfg.metric_bench
    res = SuiteResult("metric-bench", "oracle")
    rows = []
    for q in range(2, mb.q_max + 1):
        for n in range(1, mb.n_max + 1):
            rng = _seq(seed, 1, q, n)
            a = rng.standard_normal((mb.pairs, q, n))
            b = rng.standard_normal((mb.pairs, q, n))
            # half the pairs share points, so ties occur
            b[: mb.pairs // 4, 0] = a[: mb.pairs // 4, 1]
            g_ref, w_ref = _brute(a, b)
            g = np.array([metric_g(QPoint(x), QPoint(y)) for x, y in zip(a, b)])
            w = np.array([wasserstein1(QPoint(x), QPoint(y)) for x, y in zip(a, b)])
            eg = float(np.max(np.abs(g - g_ref)))
            ew = float(np.max(np.abs(w - w_ref)))
            rows.append([q, n, mb.pairs, eg, ew])
            res.check(f"oracle G q={q} n={n}", eg, 1e-12)
            res.check(f"oracle W1 q={q} n={n}", ew, 1e-12)
    res.table("oracle", ["q", "n", "pairs", "max_err_g", "max_err_w1"], rows)
    return res


def suite_axioms(cfg: CampaignConfig, seed: int) -> SuiteResult:
    mb = cfg.metric_bench
    res = SuiteResult("metric-bench", "axioms")
    rows = []
    per = max(1, mb.axiom_samples // max(1, (mb.q_max - 1) * mb.n_max))
    tol = 1e-9
    for q in range(2, mb.q_max + 1):
        for n in range(1, mb.n_max + 1):
            rng = _seq(seed, 2, q, n)
            a, b, c = (rng.standard_normal((per, q, n)) for _ in range(3))
            _, ab = batch_matching(a, b)
            _, ba = batch_matching(b, a)
            _, bc = batch_matching(b, c)
            _, ac = batch_matching(a, c)
            _, aa = batch_matching(a, a[:, rng.permutation(q)])
            gab, gba, gbc, gac = (np.sqrt(np.maximum(x, 0)) for x in (ab, ba, bc, ac))
            tri = float(np.max(gac - gab - gbc))
            sym = float(np.max(np.abs(gab - gba)))
            ident = float(np.max(np.sqrt(np.maximum(aa, 0))))
            w1 = np.array([wasserstein1(QPoint(x), QPoint(y)) for x, y in zip(a, b)])
            chain = float(np.max(gab - w1))
            rows.append([q, n, per, tri, sym, ident, chain])
            res.check(f"triangle q={q} n={n}", tri, tol)
            res.check(f"symmetry q={q} n={n}", sym, tol)
            res.check(f"identity q={q} n={n}", ident, tol)
            res.check(f"W1>=G q={q} n={n}", chain, tol)
    res.table("axioms", ["q", "n", "samples", "max_triangle_excess", "max_asymmetry", "max_self_distance", "max_g_minus_w1"], rows)
    return res


# ---------------------------------------------------------------------------
# embed-verify


def suite_xi(cfg: CampaignConfig, seed: int) -> SuiteResult:
    ev = cfg.embed_verify
    res = SuiteResult("embed-verify", "xi")
    spec = EmbeddingSpec.build(ev.q, ev.n, seed=seed)
    rng = _seq(seed, 3)
    a = sample_clustered(rng, ev.q, ev.n, ev.lip_pairs, 1.0)
    b = a + rng.standard_normal(a.shape) * rng.choice([1e-6, 1e-3, 1.0], size=(len(a), 1, 1))
    perm = np.array([rng.permutation(ev.q) for _ in range(len(a))])
    a_perm = np.take_along_axis(a, perm[:, :, None], axis=1)
    xa = xi_array(a, spec)
    invariant = bool(np.array_equal(xa, xi_array(a_perm, spec)))
    res.check("permutation invariance (bit-exact)", 0.0 if invariant else 1.0, 0.0, ok=invariant)
    _, g2 = batch_matching(a, b)
    g = np.sqrt(np.maximum(g2, 0))
    d = np.linalg.norm(xa - xi_array(b, spec), axis=1)
    ok = g > 1e-14
    lip = float(np.max(d[ok] / g[ok]))
    res.check("Lip(xi) <= 1", lip, 1 + 1e-9)
    pts = sample_clustered(rng, ev.q, ev.n, ev.roundtrip, 1.0)
    err = 0.0
    for t in pts:
        back = decode(xi(t, spec), spec)
        err = max(err, metric_g(back, QPoint(t)))
    res.check("decode round trip", err, 1e-6)
    res.table("xi", ["q", "n", "h", "pairs", "lip", "roundtrip_points", "roundtrip_err"], [[ev.q, ev.n, spec.h, ev.lip_pairs, lip, ev.roundtrip, err]])
    res.constants["injectivity_ratio"] = spec.injectivity_ratio(2000, seed=seed)
    return res


def face_properties(spec: EmbeddingSpec, samples: int, seed: int) -> dict:
    """Counts of violations of the face partition properties on random cQ points."""
    cx = spec.complex
    rng = _seq(seed, 4)
    pts = sample_clustered(rng, spec.q, spec.n, samples, 1.0, jitter=(1e-3, 1.0))
    # half the samples get exactly coincident points
    for t in pts[::2]:
        i, j = rng.choice(spec.q, 2, replace=False)
        t[j] = t[i]
    bad_unique = bad_scale = bad_limit = 0
    for t in pts:
        w = xi(t, spec)
        scale = max(1.0, float(np.linalg.norm(w)))
        hits = 0
        for f in cx.faces:
            p, x = f.project(w)
            if np.linalg.norm(p - w) > 1e-9 * scale:
                continue
            strict = f.a_in @ x if len(f.a_in) else np.ones(1)
            if np.all(strict > 1e-9 * scale):
                hits += 1
        bad_unique += hits != 1
        k = face_of(w, cx)
        lam = math.exp(rng.uniform(-4, 4))
        bad_scale += face_of(lam * w, cx) != k
    # merging two points of a generic tuple ends on a face of smaller dimension
    for _ in range(max(1, samples // 10)):
        t = rng.standard_normal((spec.q, spec.n))
        end = t.copy()
        end[1] = end[0]
        k_end = cx.faces[face_of(xi(end, spec), cx)].dim
        for s in (0.5, 0.9, 0.99):
            mid = t.copy()
            mid[1] = (1 - s) * t[1] + s * t[0]
            if cx.faces[face_of(xi(mid, spec), cx)].dim <= k_end:
                bad_limit += 1
                break
    return {"samples": samples, "partition": bad_unique, "cone": bad_scale, "limit": bad_limit}


def suite_faces(cfg: CampaignConfig, seed: int) -> SuiteResult:
    ev = cfg.embed_verify
    res = SuiteResult("embed-verify", "faces")
    spec = EmbeddingSpec.build(ev.q, ev.n, seed=seed)
    cx = spec.complex
    rows = [[f.index, f.dim, _sig_text(f.signature), " ".join(repr(float(v)) for v in f.representative)] for f in cx.faces]
    res.table("faces", ["index", "dim", "signature", "representative"], rows)
    if (ev.q, ev.n) == (2, 1):
        dims = sorted(f.dim for f in cx.faces)
        res.check("two faces for (2,1)", abs(len(cx.faces) - 2), 0, ok=dims == [1, 2])
    props = face_properties(spec, ev.face_samples, seed)
    for key in ("partition", "cone", "limit"):
        res.check(f"face {key} violations", props[key], 0)
    res.table("face_properties", ["samples", "partition_violations", "cone_violations", "limit_violations"], [[props["samples"], props["partition"], props["cone"], props["limit"]]])
    return res


def _sig_text(sig) -> str:
    return "|".join(" < ".join("=".join(str(i) for i in g) for g in block) for block in sig)


# ---------------------------------------------------------------------------
# rho-star-verify


def random_embedded_field(rng: np.random.Generator, big_n: int, size: int, modes: int = 3) -> np.ndarray:
    """A smooth random map from a ``size x size`` grid to ``R^N``."""
    x = np.linspace(0, 1, size)
    X, Y = np.meshgrid(x, x, indexing="ij")
    out = np.zeros((size, size, big_n))
    for k in range(big_n):
        for _ in range(modes):
            kk = rng.normal(size=2) * 3
            out[:, :, k] += rng.normal() * np.sin(kk[0] * X + kk[1] * Y + rng.uniform(0, 2 * math.pi))
    return out


def suite_sweep(cfg: CampaignConfig, seed: int) -> SuiteResult:
    rs = cfg.rho_star
    res = SuiteResult("rho-star-verify", "sweep")
    spec = EmbeddingSpec.build(rs.q, rs.n, seed=seed)
    table, slope = sup_distance_sweep(spec, list(rs.mus), samples=rs.samples, seed=seed)
    res.table("sweep", ["mu", "sup_distance"], [[m, s] for m, s in table])
    need = 2.0 ** (-rs.n * rs.q) - 0.05
    res.check("sup-distance slope", -slope, -need)
    res.constants["slope"] = slope
    return res


def suite_tube(cfg: CampaignConfig, seed: int) -> SuiteResult:
    rs = cfg.rho_star
    res = SuiteResult("rho-star-verify", "tube")
    spec = EmbeddingSpec.build(rs.q, rs.n, seed=seed)
    geo = build_geometry(spec.complex, seed=seed)
    rows = []
    for mu in rs.mus:
        p = build_rho_star(spec, mu, seed=seed, geometry=geo)
        pts = tube_samples(p, rs.tube_samples, seed=seed)
        err = max((float(np.linalg.norm(p(x) - f.project(x)[0])) for f, x in pts), default=0.0)
        rows.append([mu, len(pts), err])
        res.check(f"projection coincidence mu={mu}", err, 1e-8, ok=err <= 1e-8 and len(pts) > 0)
    res.table("tube", ["mu", "samples", "max_error"], rows)
    return res


def suite_energy(cfg: CampaignConfig, seed: int) -> SuiteResult:
    rs = cfg.rho_star
    res = SuiteResult("rho-star-verify", "energy")
    spec = EmbeddingSpec.build(rs.q, rs.n, seed=seed)
    p = build_rho_star(spec, rs.energy_mu, seed=seed)
    rng = _seq(seed, 5)
    fields = [random_embedded_field(rng, spec.N, rs.field_size) for _ in range(rs.fields)]
    rep = verify_energy_inequality(p, fields)
    rows = [[i, l, a, b, c] for i, (l, a, b, c) in enumerate(zip(rep.lhs, rep.near, rep.far, rep.required_c))]
    res.table("energy", ["field", "lhs", "near_energy", "far_energy", "required_c"], rows)
    c = constants.ENERGY_INEQUALITY_C
    res.check(f"energy inequality with frozen C={c}", rep.fitted_c, c, ok=rep.holds(c))
    res.constants["fitted_energy_c"] = rep.fitted_c
    return res


# ---------------------------------------------------------------------------
# dirichlet-min


def branch_minimizers(resolutions, restarts: int, seed: int) -> list:
    """Discrete minimisers on the unit disk with the trace of ``+-z^(1/2)``."""
    out = []
    for res_ in resolutions:
        mesh = Mesh.disk(1.0, int(res_))
        bidx = np.flatnonzero(mesh.boundary)
        bvals = fixtures.branch_values(mesh.vertices[bidx], 0.5)[:, :, :]
        r = minimize_dirichlet(mesh, bvals, MinimizerOptions(restarts=restarts, seed=seed))
        out.append((int(res_), r))
    return out


def suite_branch(cfg: CampaignConfig, seed: int) -> SuiteResult:
    dc = cfg.dirichlet
    res = SuiteResult("dirichlet-min", "branch")
    runs = branch_minimizers(dc.resolutions, dc.restarts, seed)
    rows, ratios = [], []
    for n_, r in runs:
        rh = reverse_holder_check(r.field, inner=0.9, s=dc.holder_s, p=dc.holder_p, radii=dc.holder_radii)
        e = r.report.total
        rows.append([n_, e, abs(e - 2 * math.pi) / (2 * math.pi), r.stationarity, rh.max_ratio, rh.lp_ratio])
        ratios.append(rh.max_ratio)
    res.table("branch", ["resolution", "energy", "relative_error", "stationarity", "reverse_holder_ratio", "lp_over_l2"], rows)
    final = rows[-1]
    res.check(f"energy within 5% of 2pi at {final[0]}", final[2], 0.05)
    spread = max(ratios) / min(ratios) if min(ratios) > 0 else math.inf
    res.check("reverse Holder ratio stable within 2x", spread, 2.0)
    res.constants["reverse_holder_max"] = max(ratios)
    return res


# ---------------------------------------------------------------------------
# current-analyze


def library_currents() -> dict[str, SimplicialCurrent]:
    sq = Mesh.box((16, 16), [-1, -1], [1, 1])
    return {
        "flat": graph_current(fixtures.flat_sheet(sq, q=2, n=1, heights=[0.0, 1.0])),
        "tilted": graph_current(fixtures.tilted_sheet(sq, [[0.3, -0.2], [0.1, 0.4]])),
        "reversed": fixtures.reversed_pair(sq),
        "branched": graph_current(fixtures.branched_box(16, 0.5, 0.5)),
        "branched-polar": graph_current(fixtures.branched_polar(12, 1.5, 0.3)),
    }


def load_input(spec: str) -> SimplicialCurrent:
    lib = library_currents()
    if spec in lib:
        return lib[spec]
    path = Path(spec)
    if not path.is_file():
        raise FileNotFoundError(f"current input not found: {spec}")
    return SimplicialCurrent.loads(path.read_text())


def _analysis_radius(t: SimplicialCurrent) -> float:
    base = t.base_vertices().reshape(-1, t.m)
    half = float(np.min(np.max(np.abs(base), axis=0)))
    return 0.9 * half if np.max(np.linalg.norm(base, axis=1)) <= half * 1.0001 else half


def suite_excess(cfg: CampaignConfig, seed: int) -> SuiteResult:
    cc = cfg.current
    res = SuiteResult("current-analyze", "excess")
    t = load_input(cc.input)
    ef = excess_field(t, (0.0, 0.0), _analysis_radius(t), cc.resolution)
    header, rows = _csv_rows(ef.to_csv())
    res.table("excess_field", header, rows)
    total = float(np.sum(np.abs(ef.e[ef.inside])))
    res.constants["E"] = ef.E
    res.constants["total_excess"] = total
    bd = boundary(boundary(t))
    res.check("boundary of boundary vanishes", mass(bd), 1e-12)
    if cc.input == "flat":
        res.check("flat sheet has zero excess", total, 1e-12)
    return res


def suite_varifold(cfg: CampaignConfig, seed: int) -> SuiteResult:
    cc = cfg.current
    res = SuiteResult("current-analyze", "varifold")
    items = dict(library_currents())
    if cc.input not in items:
        items[cc.input] = load_input(cc.input)
    rows = []
    for name, t in items.items():
        r = _analysis_radius(t)
        vr = varifold_excess(t, (0.0, 0.0), r, cc.resolution)
        rows.append([name, r, vr.ve, vr.tilt])
        res.check(f"VE <= 2E on {name}", vr.ve, 2 * vr.tilt + 1e-12)
        if name == "reversed":
            res.check("reversed pair: VE = 0", vr.ve, 1e-12)
            res.check("reversed pair: E > 0", -vr.tilt, -1e-6)
    res.table("varifold", ["current", "radius", "varifold_excess", "excess"], rows)
    return res


def suite_bv(cfg: CampaignConfig, seed: int) -> SuiteResult:
    cc = cfg.current
    res = SuiteResult("current-analyze", "bv")
    rng = _seq(seed, 6)
    mesh = Mesh.box((cc.bv_resolution, cc.bv_resolution), [-1, -1], [1, 1])
    psis = fixtures.random_psis(rng, n=2, count=cc.bv_psis)
    rows = []
    worst = gap = 0.0
    for i in range(cc.bv_graphs):
        f = fixtures.random_two_valued(rng, mesh)
        rep = bv_estimate_check(f, psis, resolution=cc.bv_resolution, sub=cc.bv_sub)
        rows.append([i, len(rep.rows), rep.worst, rep.route_gap])
        worst = max(worst, rep.worst)
        gap = max(gap, rep.route_gap)
    res.table("bv", ["graph", "checks", "worst_ratio", "route_gap"], rows)
    res.check("BV estimate with factor 2", worst, 1 + constants.BV_MARGIN)
    res.check("total variation routes agree", gap, 0.01)
    return res


def taylor_sweep(eps_values, nr: int = 16) -> list:
    out = []
    for eps in eps_values:
        g = fixtures.branched_polar(nr, 1.5, eps, linear=np.diag([1.0, 0.5]))
        out.append((eps, taylor_check(g)))
    return out


def suite_taylor(cfg: CampaignConfig, seed: int) -> SuiteResult:
    cc = cfg.current
    res = SuiteResult("current-analyze", "taylor")
    sweep = taylor_sweep(cc.taylor_eps)
    c = constants.TAYLOR_C
    rows = []
    for eps, tr in sweep:
        rows.append([eps, tr.lip, tr.relative_error, tr.c_upper, tr.c_lower_max, tr.c_symmetric])
        res.check(f"envelope (1 +- C Lip^2)/2 eps={eps}", tr.c_symmetric, c, ok=tr.holds(c, "symmetric"))
        res.check(f"envelope (1 - Lip^2/C, 1 + C Lip^2)/2 eps={eps}", c, tr.c_lower_max, ok=tr.holds(c, "split"))
    slope = float(np.polyfit(np.log([r[0] for r in rows]), np.log([r[2] for r in rows]), 1)[0])
    res.table("taylor", ["eps", "lip", "relative_error", "c_upper", "c_lower_max", "c_symmetric"], rows)
    res.check("relative error slope is 2", abs(slope - 2.0), 0.1)
    res.constants["taylor_slope"] = slope
    return res


def stokes_sweep(resolutions) -> list:
    omega = fixtures.stokes_form()
    ref = fixtures.stokes_reference(omega, 0.5, 1.0)
    out = []
    for n_ in resolutions:
        t = graph_current(fixtures.branched_box(int(n_), 0.5, 1.0))
        out.append((int(n_), stokes_check(t, omega, reference=ref)))
    return out


def suite_stokes(cfg: CampaignConfig, seed: int) -> SuiteResult:
    cc = cfg.current
    res = SuiteResult("current-analyze", "stokes")
    sweep = stokes_sweep(cc.stokes_resolutions)
    rows = [[n_, r.pairing_d, r.pairing_boundary, r.reference, r.discrete_residual, r.residual] for n_, r in sweep]
    res.table("stokes", ["resolution", "pairing_d_omega", "pairing_boundary", "reference", "discrete_residual", "residual"], rows)
    hs = np.array([2.0 / r[0] for r in rows])
    errs = np.array([r[-1] for r in rows])
    order = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    res.check("boundary residual order >= 1", -order, -1.0)
    last = rows[-1]
    res.check(f"boundary residual at {last[0]}", last[-1], 1e-3, ok=last[0] < 64 or last[-1] <= 1e-3)
    res.check("discrete Stokes identity", max(r[4] for r in rows), 1e-10)
    res.constants["stokes_order"] = order
    return res


# ---------------------------------------------------------------------------
# lipschitz-approx


def suite_lipschitz(cfg: CampaignConfig, seed: int) -> SuiteResult:
    lc = cfg.lipschitz
    res = SuiteResult("lipschitz-approx", "lipschitz")
    f = fixtures.spike_field(lc.resolution, lc.amplitude)
    t = graph_current(f)
    rows = []
    c = constants.LIPSCHITZ_APPROX_C
    for eta in lc.etas:
        la = lipschitz_approximate(t, f.mesh, eta, seed=seed)
        worst = max((a / b for _, a, b in la.coverage if b > 0), default=0.0)
        rows.append([eta, la.r0, int(la.K.sum()), la.lip, la.lip_constant(), int(la.cell_exact), worst])
        res.check(f"cell-exact on K eta={eta}", 0.0 if la.cell_exact else 1.0, 0.0, ok=la.cell_exact)
        res.check(f"Lip(u) <= C sqrt(eta) eta={eta}", la.lip_constant(), c)
        res.check(f"coverage bound eta={eta}", worst, 1 + constants.COVERAGE_MARGIN, ok=la.coverage_holds(constants.COVERAGE_MARGIN))
    res.table("lipschitz", ["eta", "r0", "k_cells", "lip", "lip_over_sqrt_eta", "cell_exact", "coverage_ratio"], rows)
    return res


# ---------------------------------------------------------------------------
# competitor


def suite_competitor(cfg: CampaignConfig, seed: int) -> SuiteResult:
    cc = cfg.competitor
    res = SuiteResult("competitor", "competitor")
    spec = EmbeddingSpec.build(2, 1, seed=seed)
    proj = build_rho_star(spec, cc.mu, seed=seed)
    mesh = Mesh.box((cc.resolution, cc.resolution), [-1, -1], [1, 1])
    rng = _seq(seed, 7)
    x = mesh.vertices
    vals = np.zeros((mesh.nv, 2, 1))
    for i in range(2):
        k = rng.normal(size=(3, 2)) * 2
        a = rng.normal(size=3) * cc.amplitude
        vals[:, i, 0] = np.sin(x @ k.T + rng.uniform(0, 2 * math.pi, 3)) @ a
    f = QField(mesh, vals)
    g, rep = build_competitor(f, cc.mu, cc.eps, cc.radii, spec, proj)
    rows = [[k, v] for k, v in sorted(rep.region_energy.items())]
    rows += [["energy_f", rep.energy_f], ["energy_g", rep.energy_g], ["lip_f", rep.lip_f], ["lip_g", rep.lip_g], ["l2_error", rep.l2_error]]
    res.table("competitor", ["quantity", "value"], rows)
    res.check("g = f outside B_r3", rep.boundary_error, 1e-12)
    res.check("decode residual", rep.decode_residual, 1e-6 * max(1.0, math.sqrt(rep.energy_scale)))
    res.constants["lip_constant"] = rep.lip_constant
    return res


# ---------------------------------------------------------------------------


SUITES: dict[str, dict[str, Callable[[CampaignConfig, int], SuiteResult]]] = {
    "metric-bench": {"oracle": suite_oracle, "axioms": suite_axioms},
    "embed-verify": {"xi": suite_xi, "faces": suite_faces},
    "rho-star-verify": {"sweep": suite_sweep, "tube": suite_tube, "energy": suite_energy},
    "dirichlet-min": {"branch": suite_branch},
    "current-analyze": {
        "excess": suite_excess,
        "varifold": suite_varifold,
        "bv": suite_bv,
        "taylor": suite_taylor,
        "stokes": suite_stokes,
    },
    "lipschitz-approx": {"lipschitz": suite_lipschitz},
    "competitor": {"competitor": suite_competitor},
}


def run_suites(command: str, cfg: CampaignConfig, names=None) -> list[SuiteResult]:
    available = SUITES[command]
    names = list(names) if names else list(available)
    unknown = [n for n in names if n not in available]
    if unknown:
        raise KeyError(f"unknown suites for {command}: {unknown}; available: {sorted(available)}")
    return [available[n](cfg, cfg.seed) for n in names]


def _csv_rows(text: str) -> tuple[list, list]:
    lines = [ln.split(",") for ln in text.strip().splitlines()]
    return lines[0], lines[1:]
