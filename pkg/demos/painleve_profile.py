"""Self-similar profiles: calibration, Airy tail and the L S identity."""

import numpy as np

from cmkdv_lab.painleve import build_S, calibrate_amplitude, check_LS_identity
from cmkdv_lab.spectral import Grid

print("  r    sign   c (tau ~ c Ai)    |mean - r|   third-order   second-order")
for r in (0.05, 0.1, 0.3, 0.6):
    for sign in (1, -1):
        p = calibrate_amplitude(r, sign)
        print(f"{r:4.2f}   {sign:+d}   {p.asymptotic_c:14.10f}   {abs(p.mean() - r):10.1e}"
              f"   {p.residual_third():11.1e}   {p.residual_second():12.1e}")

# |L S|_2 grows like t^(1/6)
p = calibrate_amplitude(0.1, 1)
print("\n    t    |LS|_2      |LS|_2 t^(-1/6)   residual")
for t in (1.0, 8.0, 64.0, 512.0):
    S = build_S(0.1, t, Grid(8192, 40.0 * t ** (1 / 3) / 0.75), profile=p)
    rec = check_LS_identity(S, t, 1)
    print(f"{t:5.0f}   {rec['norm_LS']:.6e}   {rec['norm_LS'] * t ** (-1 / 6):.6e}      {rec['residual']:.1e}")
