"""Continuum Dirichlet energy of z -> +-z^(1/2) on the unit disk, by radial quadrature.

The map has |Df|^2 = 1/(2|z|) on each sheet, so the energy of both sheets is
int_0^1 int_0^{2 pi} r^-1 r dtheta dr = 2 pi.  This script evaluates the
integral numerically from finite differences of the sheets instead of the
closed form, as an independent check of the target value.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate


def sheet(r: float, th: float) -> np.ndarray:
    w = math.sqrt(r) * np.exp(0.5j * th)
    return np.array([w.real, w.imag])


def density(r: float, th: float) -> float:
    # |Df|^2 in polar coordinates: |f_r|^2 + |f_theta|^2 / r^2
    h = 1e-5 * r
    fr = (sheet(r + h, th) - sheet(r - h, th)) / (2 * h)
    ft = (sheet(r, th + 1e-5) - sheet(r, th - 1e-5)) / 2e-5
    return float(fr @ fr + ft @ ft / (r * r))


def main() -> None:
    # substitute r = s^2 to remove the 1/r singularity of the integrand in r dr
    val, err = integrate.dblquad(lambda th, s: 2 * s**3 * density(s * s, th) if s > 0 else 0.0, 0.0, 1.0, 0.0, 2 * math.pi, epsabs=1e-10)
    total = 2 * val  # two sheets
    print(f"energy {total:.9f}  2pi {2 * math.pi:.9f}  relative gap {abs(total - 2 * math.pi) / (2 * math.pi):.2e}")


if __name__ == "__main__":
    main()
