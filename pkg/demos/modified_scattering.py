"""A desk-size nonlinear run: conserved quantities, the phase B and the left region.

The acceptance suite uses n = 65536 up to t = 300.  This box keeps the fastest
left-moving waves (|xi| ~ 3.9, speed 3 xi^2) from wrapping before t = 150 and
runs in about a minute.
"""

import numpy as np

from cmkdv_lab.diagnostics import (
    ScatteringState,
    accumulate_B,
    left_region_check,
    right_region_check,
    self_similar_check,
)
from cmkdv_lab.evolver import evolve_profile
from cmkdv_lab.initial_data import initial_spectrum
from cmkdv_lab.spectral import Grid

grid = Grid(32768, 8192.0)
sign, eps = 1, 0.1
traj = evolve_profile(grid, initial_spectrum(grid, "gaussian", eps, 1.0), sign, 150.0, 0.1)

scat = ScatteringState.start(traj[0].profile_hat, sign)
for s in traj[1:]:
    accumulate_B(scat, s.profile_hat)
k = int(np.argmin(np.abs(grid.xi - 1.0)))

c0 = traj[0].conserved
print("     t   P drift    E drift    |f(1)|     B(1)       sup |u - S|   right   left B / frozen")
for s in traj:
    if s.t < 10:
        continue
    ref = min(traj.times, key=lambda r: abs(r - s.t / 4))
    c = s.conserved
    ss = self_similar_check(s.field, s.zero_mode, s.t, sign).metric
    right = right_region_check(s.field, s.t, eps).metric
    with_B = left_region_check(s.field, s.profile_hat, scat, s.t, True, reference=ref).metric
    frozen = left_region_check(s.field, s.profile_hat, scat, s.t, False, reference=ref).metric
    print(f"{s.t:6.1f}  {(c.P - c0.P) / c0.P:9.1e}  {(c.E - c0.E) / abs(c0.E):9.1e}"
          f"  {abs(s.profile_hat.coeffs[k]):.6f}  {scat.B_at(s.t)[k]:+.6f}  {ss:12.3e}"
          f"  {right:6.3f}  {with_B:.3e} / {frozen:.3e}")
