"""Periodic grid, unitary Fourier transform and dyadic projectors.

The real line is replaced by the periodic box ``[-L, L)`` sampled at ``n``
points.  Transforms use the symmetric convention

    u_hat(xi) = (2 pi)^{-1/2} int u(x) exp(-i x xi) dx,

discretised so that the forward/inverse pair is exactly unitary with respect
to the weights ``dx`` (space) and ``dxi = pi / L`` (frequency).

Coefficient arrays are stored in FFT order (``numpy.fft.fftfreq``); use
``Grid.frequencies`` for the sorted frequency list.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigurationError

SQRT_2PI = np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[-L, L)``."""

    n_points: int
    domain_half_length: float

    def __post_init__(self):
        n = self.n_points
        if n < 2 or n & (n - 1):
            raise ConfigurationError(f"n_points must be a power of two, got {n}")
        if not self.domain_half_length > 0:
            raise ConfigurationError("domain_half_length must be positive")

    @property
    def spacing(self) -> float:
        return 2.0 * self.domain_half_length / self.n_points

    @property
    def dxi(self) -> float:
        return np.pi / self.domain_half_length

    @cached_property
    def x(self) -> np.ndarray:
        return -self.domain_half_length + self.spacing * np.arange(self.n_points)

    @cached_property
    def k(self) -> np.ndarray:
        """Integer mode numbers in FFT order."""
        return np.fft.fftfreq(self.n_points, 1.0 / self.n_points).astype(np.int64)

    @cached_property
    def xi(self) -> np.ndarray:
        """Frequencies in FFT order."""
        return self.dxi * self.k

    @cached_property
    def xi_cubed(self) -> np.ndarray:
        return self.xi ** 3

    @property
    def frequencies(self) -> np.ndarray:
        """Frequencies ``pi k / L`` sorted over ``k in [-n/2, n/2)``."""
        return np.fft.fftshift(self.xi)

    @property
    def xi_max(self) -> float:
        return self.dxi * (self.n_points // 2)

    @cached_property
    def _sign(self) -> np.ndarray:
        # exp(i xi_k L) = (-1)^k accounts for the grid starting at -L
        return np.where(self.k % 2 == 0, 1.0, -1.0)

    @cached_property
    def nyquist_index(self) -> int:
        return self.n_points // 2

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask; also removes the unpaired Nyquist mode."""
        keep = np.abs(self.k) < self.n_points / 3.0
        keep[self.nyquist_index] = False
        return keep

    def zero_index(self) -> int:
        return 0

    def index_of(self, xi: float) -> int:
        """FFT-order index of the grid frequency closest to ``xi``."""
        return int(np.argmin(np.abs(self.xi - xi)))


@dataclass
class SpatialField:
    grid: Grid
    values: np.ndarray
    time: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.n_points,):
            raise ConfigurationError(
                f"field has {self.values.shape} samples, grid has {self.grid.n_points}"
            )

    def norm(self, p=2) -> float:
        if p == np.inf:
            return float(np.max(np.abs(self.values), initial=0.0))
        return float((np.sum(np.abs(self.values) ** p) * self.grid.spacing) ** (1.0 / p))


@dataclass
class SpectralField:
    grid: Grid
    coeffs: np.ndarray
    time: float = 1.0

    convention_factor = 1.0 / SQRT_2PI

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != (self.grid.n_points,):
            raise ConfigurationError(
                f"spectrum has {self.coeffs.shape} modes, grid has {self.grid.n_points}"
            )

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2) * self.grid.dxi))

    def at(self, xi: float) -> complex:
        return complex(self.coeffs[self.grid.index_of(xi)])

    def ordered(self):
        """Return ``(frequencies, coeffs)`` sorted by frequency."""
        return self.grid.frequencies, np.fft.fftshift(self.coeffs)


def fft_coeffs(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Raw array form of :func:`forward_ft`."""
    return grid.spacing / SQRT_2PI * grid._sign * np.fft.fft(values)


def ifft_values(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    return grid.dxi * grid.n_points / SQRT_2PI * np.fft.ifft(grid._sign * coeffs)


def forward_ft(field: SpatialField) -> SpectralField:
    return SpectralField(field.grid, fft_coeffs(field.grid, field.values), field.time)


def inverse_ft(field: SpectralField) -> SpatialField:
    return SpatialField(field.grid, ifft_values(field.grid, field.coeffs), field.time)


def spectral_derivative(grid: Grid, values: np.ndarray, order: int = 1) -> np.ndarray:
    mult = (1j * grid.xi) ** order
    if order % 2:
        mult[grid.nyquist_index] = 0.0
    return np.fft.ifft(mult * np.fft.fft(values))


# --------------------------------------------------------------------------
# dyadic bumps


def _mollifier(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


def _log_partition(s):
    """Normalised bump in logarithmic variable ``s``; integer shifts sum to one."""
    s = np.asarray(s, dtype=float)
    frac = s - np.round(s)
    total = sum(_mollifier(frac - m) for m in (-1, 0, 1))
    return _mollifier(s) / total


def smooth_step(s):
    """C-infinity step: 0 for s <= 0, 1 for s >= 1."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    a = np.zeros_like(s)
    b = np.zeros_like(s)
    pos = s > 0
    a[pos] = np.exp(-1.0 / s[pos])
    pos = s < 1
    b[pos] = np.exp(-1.0 / (1.0 - s[pos]))
    return a / (a + b)


@dataclass(frozen=True)
class BumpPartition:
    """Littlewood-Paley bump ``psi`` with base ``base`` (2 for frequency, 4 for space).

    ``psi(z)`` is supported on ``1/base < |z| < base`` and
    ``sum_j psi(z / base**j) == 1`` for every ``z != 0``.
    """

    base: float = 2.0

    def __call__(self, z):
        z = np.abs(np.asarray(z, dtype=float))
        out = np.zeros_like(z)
        pos = z > 0
        out[pos] = _log_partition(np.log(z[pos]) / np.log(self.base))
        return out

    def scale(self, z, j):
        return self(np.asarray(z, dtype=float) / self.base ** j)

    def scales(self, z_min, z_max):
        """Integer scales touching ``[z_min, z_max]``."""
        lb = np.log(self.base)
        return range(int(np.floor(np.log(z_min) / lb)) - 1, int(np.ceil(np.log(z_max) / lb)) + 2)


PSI = BumpPartition(2.0)
CHI = BumpPartition(4.0)


def represented_scales(grid: Grid) -> range:
    return PSI.scales(grid.dxi, grid.xi_max)


def lp_multiplier(grid: Grid, j: int, kind: str = "j") -> np.ndarray:
    """Multiplier of ``P_j`` and its variants.

    ``kind`` is one of ``"j"``, ``"le"`` (``P_{<=j}``), ``"ge"`` (``P_{>=j}``),
    ``"+"`` / ``"-"`` (``P_j^+`` / ``P_j^-``).  Sums follow the dyadic
    definition and therefore vanish at ``xi = 0``.
    """
    xi = grid.xi
    scales = represented_scales(grid)
    if kind == "j":
        return PSI.scale(xi, j)
    if kind == "+":
        return PSI.scale(xi, j) * (xi > 0)
    if kind == "-":
        return PSI.scale(xi, j) * (xi < 0)
    if kind == "le":
        return sum((PSI.scale(xi, m) for m in scales if m <= j), np.zeros_like(xi))
    if kind == "ge":
        return sum((PSI.scale(xi, m) for m in scales if m >= j), np.zeros_like(xi))
    raise ConfigurationError(f"unknown projector kind {kind!r}")


def lp_project(field: SpectralField, j: int, kind: str = "j") -> SpectralField:
    return SpectralField(field.grid, lp_multiplier(field.grid, j, kind) * field.coeffs, field.time)


def _log2_cube_root_inv(t: float) -> float:
    if t <= 0:
        raise ConfigurationError("t must be positive")
    return -np.log2(t) / 3.0


def low_block_index(t: float) -> int:
    """The integer ``j`` with ``2^(j-1) < t^(-1/3) <= 2^j``."""
    return int(np.ceil(_log2_cube_root_inv(t) - 1e-12))


def chi_low_index(t: float) -> int:
    """The integer ``k`` with ``2^k <= t^(-1/3) < 2^(k+1)``."""
    return int(np.floor(_log2_cube_root_inv(t) + 1e-12))


def q_multiplier(grid: Grid, j: int, t: float) -> np.ndarray:
    j0 = low_block_index(t)
    xi = grid.xi
    if j < j0:
        return np.zeros_like(xi)
    if j > j0:
        return PSI.scale(xi, j)
    # the zero mode belongs to the low block
    above = sum((PSI.scale(xi, m) for m in represented_scales(grid) if m > j0), np.zeros_like(xi))
    return 1.0 - above


def q_project(field: SpectralField, j: int, t: float) -> SpectralField:
    if t < 1:
        raise ConfigurationError("time-dependent projectors need t >= 1")
    return SpectralField(field.grid, q_multiplier(field.grid, j, t) * field.coeffs, field.time)


def chi_scales(x_max: float, t: float) -> range:
    k_low = chi_low_index(t)
    k_high = int(np.ceil(0.5 * np.log2(max(x_max, 1e-300) / t))) + 2
    return range(k_low, max(k_low, k_high) + 1)


def chi_multiplier(x: np.ndarray, k: int, t: float) -> np.ndarray:
    """Spatial cutoff ``chi_k(x; t)`` localised near ``|x| ~ t 4^k``."""
    x = np.asarray(x, dtype=float)
    k_low = chi_low_index(t)
    if k < k_low:
        return np.zeros_like(x)
    if k > k_low:
        return CHI(x / (t * 4.0 ** k))
    # aggregate block: everything inside the first resolved shell, x = 0 included
    above = sum(
        (CHI(x / (t * 4.0 ** m)) for m in chi_scales(np.max(np.abs(x), initial=1.0), t) if m > k_low),
        np.zeros_like(x),
    )
    return 1.0 - above


def chi_cutoff(field: SpatialField, k: int, t: float) -> SpatialField:
    if t < 1:
        raise ConfigurationError("time-dependent cutoffs need t >= 1")
    return SpatialField(field.grid, chi_multiplier(field.grid.x, k, t) * field.values, field.time)
