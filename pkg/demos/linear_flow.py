"""Free Airy flow: the fundamental solution and the t^(-1/3) decay rate."""

import numpy as np

from cmkdv_lab.airy import apply_L, fundamental_solution, linear_propagate, lp_norm
from cmkdv_lab.spectral import Grid, SpatialField, SpectralField, forward_ft, inverse_ft, smooth_step

# a mollified delta spreads into (3t)^(-1/3) Ai((3t)^(-1/3) x)
grid = Grid(4096, 256.0)
cut = 4.0
delta = SpectralField(grid, (1 - smooth_step((np.abs(grid.xi) - cut) / cut)) / np.sqrt(2 * np.pi))
u = inverse_ft(linear_propagate(delta, 0.0, 1.0)).values
window = (grid.x >= -20) & (grid.x <= 10)
F = fundamental_solution(grid.x[window], 1.0)
print(f"mollified delta vs fundamental solution at t = 1: {np.max(np.abs(u[window] - F)):.2e}")

# Gaussian data, spectrum sqrt(2) exp(-xi^2): the box holds |x| <= 3 t 36 up to t = 128
grid = Grid(65536, 16384.0)
f = forward_ft(SpatialField(grid, np.exp(-grid.x ** 2 / 4)))
x_f = forward_ft(SpatialField(grid, grid.x * inverse_ft(f).values))
print("\n     t     t^(1/3) sup|u|   t^(1/3-1/18) |u|_6   |Lu - e^(-t d^3)(xf)| / |xf|")
for t in (1.0, 4.0, 16.0, 64.0, 128.0):
    ut = inverse_ft(linear_propagate(f, 0.0, t))
    commutator = apply_L(ut, t).values - inverse_ft(linear_propagate(x_f, 0.0, t)).values
    print(f"{t:6.0f}   {t ** (1 / 3) * ut.norm(np.inf):14.6f}   {t ** (1 / 3 - 1 / 18) * lp_norm(ut, 6):18.6f}"
          f"   {np.linalg.norm(commutator) / np.linalg.norm(x_f.coeffs):10.1e}")
