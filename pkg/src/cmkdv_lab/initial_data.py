"""Initial data ``u_*`` given through its Fourier transform.

Data are specified at ``t = 1`` as ``u(1) = exp(-d_x^3) u_*``, so the profile
starts from ``f_hat(1) = u_hat_*``.  Every spectrum is rolled off smoothly
inside the dealiased band; a hard cut would ring across the whole box.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .spectral import Grid, fft_coeffs, smooth_step

KINDS = ("gaussian", "modulated_gaussian", "airy_packet", "from_file")
ROLLOFF_START = 0.7  # fractions of the dealiased band edge
ROLLOFF_WIDTH = 0.25


def band_rolloff(grid: Grid) -> np.ndarray:
    cut = grid.xi_max * 2.0 / 3.0
    return 1.0 - smooth_step((np.abs(grid.xi) - ROLLOFF_START * cut) / (ROLLOFF_WIDTH * cut))


def gaussian_spectrum(grid: Grid, epsilon: float, width: float, k0: float = 0.0) -> np.ndarray:
    """``epsilon exp(-(xi - k0)^2 / (2 width^2))``; peak value ``epsilon``."""
    return epsilon * np.exp(-((grid.xi - k0) ** 2) / (2.0 * width ** 2))


def load_field(path, grid: Grid) -> np.ndarray:
    """Samples of ``u_*`` from ``.npy`` or a text file with one or two (Re, Im) columns."""
    path = Path(path)
    if path.suffix == ".npy":
        values = np.load(path)
    else:
        raw = np.loadtxt(path, ndmin=2)
        values = raw[:, 0] + 1j * raw[:, 1] if raw.shape[1] > 1 else raw[:, 0]
    values = np.asarray(values, dtype=complex).ravel()
    if values.size != grid.n_points:
        raise ConfigurationError(f"{path} holds {values.size} samples, grid has {grid.n_points}")
    return values


def initial_spectrum(grid: Grid, kind: str = "gaussian", epsilon: float = 0.05, width: float = 0.4,
                     k0: float = 0.0, tau0: float = 1.0, noise: float = 0.0, seed: int = 0,
                     path=None) -> np.ndarray:
    """``u_hat_*`` in FFT order.

    ``airy_packet`` is a Gaussian pre-dispersed by the Airy group over a
    time ``tau0``; it stays real.  ``noise`` adds a seeded random spectrum
    with the same envelope (relative amplitude ``noise``).
    """
    if kind == "gaussian":
        spec = gaussian_spectrum(grid, epsilon, width)
    elif kind == "modulated_gaussian":
        spec = gaussian_spectrum(grid, epsilon, width, k0)
    elif kind == "airy_packet":
        spec = gaussian_spectrum(grid, epsilon, width) * np.exp(-1j * tau0 * grid.xi_cubed)
    elif kind == "from_file":
        if path is None:
            raise ConfigurationError("from_file data needs a path")
        spec = fft_coeffs(grid, load_field(path, grid))
    else:
        raise ConfigurationError(f"unknown initial data {kind!r}; expected one of {KINDS}")
    if noise:
        rng = np.random.default_rng(seed)
        env = gaussian_spectrum(grid, epsilon, width, k0)
        spec = spec + noise * env * (rng.standard_normal(grid.n_points)
                                     + 1j * rng.standard_normal(grid.n_points)) / np.sqrt(2.0)
    return spec * band_rolloff(grid) * grid.dealias_mask
