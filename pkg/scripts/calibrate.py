"""Measure the constants frozen in ``qvalued.constants`` and compare.

    python3 scripts/calibrate.py [--seed 0]

Prints one line per constant: measured value, frozen value, and whether the
frozen value still covers the measurement.  Nothing is written.
"""

from __future__ import annotations

import argparse

import numpy as np

from qvalued import constants, fixtures
from qvalued.campaigns import random_embedded_field, taylor_sweep
from qvalued.currents import graph_current, lipschitz_approximate
from qvalued.embedding import EmbeddingSpec
from qvalued.projections import build_rho_star, verify_energy_inequality


def lipschitz_suite(seed: int) -> float:
    worst = 0.0
    for res in (32, 64, 96):
        for amp in (0.004, 0.008, 0.012):
            f = fixtures.spike_field(res, amp)
            t = graph_current(f)
            for eta in (0.1, 0.05):
                la = lipschitz_approximate(t, f.mesh, eta, seed=seed)
                worst = max(worst, la.lip_constant())
    return worst


def energy_suite(seed: int) -> float:
    spec = EmbeddingSpec.build(2, 1, seed=seed)
    p = build_rho_star(spec, 0.1, seed=seed)
    rng = np.random.default_rng([seed, 5])
    fields = [random_embedded_field(rng, spec.N, 12) for _ in range(20)]
    return verify_energy_inequality(p, fields).fitted_c


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    sweep = taylor_sweep((0.2, 0.1, 0.05))
    c_lower = min(tr.c_lower_max for _, tr in sweep)
    c_upper = max(tr.c_upper for _, tr in sweep)
    c_sym = max(tr.c_symmetric for _, tr in sweep)
    c = constants.TAYLOR_C
    print(f"taylor  upper C needed {c_upper:.4g}  lower C allowed {c_lower:.4g}  symmetric C needed {c_sym:.4g}  frozen {c}  ok={c_upper <= c <= c_lower and c_sym <= c}")

    lip = lipschitz_suite(args.seed)
    print(f"lipschitz approximation  max Lip/sqrt(eta) {lip:.4g}  frozen {constants.LIPSCHITZ_APPROX_C}  ok={lip <= constants.LIPSCHITZ_APPROX_C}")

    ce = energy_suite(args.seed)
    print(f"energy inequality  fitted C {ce:.4g}  frozen {constants.ENERGY_INEQUALITY_C}  ok={ce <= constants.ENERGY_INEQUALITY_C}")


if __name__ == "__main__":
    main()
