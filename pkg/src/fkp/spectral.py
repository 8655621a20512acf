"""Periodic grids, Fourier transforms, multiplier operators and norms.

Conventions
-----------
* Arrays are indexed ``[j, k]`` with axis 0 along ``x`` and axis 1 along ``y``.
* Spectral coefficients are normalized so that
  ``u(x, y) = sum_{j,k} c[j, k] exp(i (xi_j x + eta_k y))``, i.e.
  ``c = fft2(u) / (nx * ny)``.  They are stored in numpy FFT order.
* Every multiplier that is singular or ambiguous at ``xi = 0`` acts as zero
  there.  Multipliers that are odd in a direction zero the Nyquist line of
  that direction so that outputs stay real.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConstraintViolation, PreconditionError

REAL = "real"
SPECTRAL = "spectral"


@dataclass(frozen=True)
class Grid2D:
    """Rectangular periodic box ``[0, lx) x [0, ly)`` with ``nx x ny`` points.

    ``xi`` and ``eta`` hold the wavenumber lattice in ascending order
    ``2 pi j / lx`` for ``j = -nx/2 .. nx/2 - 1``; ``kx`` and ``ky`` are the
    same values in FFT order.
    """

    nx: int
    ny: int
    lx: float
    ly: float
    xi: np.ndarray = field(init=False, repr=False, compare=False)
    eta: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if int(n) != n or n < 8 or n % 2:
                raise PreconditionError(f"{name} must be an even integer >= 8, got {n}")
        for name in ("lx", "ly"):
            length = getattr(self, name)
            if not np.isfinite(length) or length <= 0:
                raise PreconditionError(f"{name} must be positive and finite, got {length}")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        object.__setattr__(self, "lx", float(self.lx))
        object.__setattr__(self, "ly", float(self.ly))
        object.__setattr__(self, "xi", _lattice(self.nx, self.lx))
        object.__setattr__(self, "eta", _lattice(self.ny, self.ly))

    @property
    def shape(self):
        return (self.nx, self.ny)

    @property
    def kx(self):
        return np.fft.ifftshift(self.xi)

    @property
    def ky(self):
        return np.fft.ifftshift(self.eta)

    @property
    def mode_x(self):
        """Integer mode numbers along x in FFT order."""
        return np.fft.ifftshift(np.arange(-self.nx // 2, self.nx // 2))

    @property
    def mode_y(self):
        return np.fft.ifftshift(np.arange(-self.ny // 2, self.ny // 2))

    def wavenumbers(self):
        """Return the ``(XI, ETA)`` meshes in FFT order."""
        return np.meshgrid(self.kx, self.ky, indexing="ij")

    def coordinates(self):
        """Return the ``(X, Y)`` meshes of the collocation points."""
        x = self.lx * np.arange(self.nx) / self.nx
        y = self.ly * np.arange(self.ny) / self.ny
        return np.meshgrid(x, y, indexing="ij")

    @property
    def cell_area(self):
        return self.lx * self.ly / (self.nx * self.ny)


def _lattice(n, length):
    return 2.0 * np.pi * np.arange(-n // 2, n // 2) / length


def make_grid(nx, ny, lx, ly):
    return Grid2D(nx, ny, lx, ly)


@dataclass(frozen=True, eq=False)
class Field:
    """A scalar field on a :class:`Grid2D`, held in real or spectral space.

    Fields are immutable; conversions return new objects.
    """

    grid: Grid2D
    data: np.ndarray
    space: str = REAL

    def __post_init__(self):
        if self.space not in (REAL, SPECTRAL):
            raise PreconditionError(f"unknown space tag {self.space!r}")
        dtype = float if self.space == REAL else complex
        arr = np.array(self.data, dtype=dtype, copy=True)
        if arr.shape != self.grid.shape:
            raise PreconditionError(f"data shape {arr.shape} does not match grid {self.grid.shape}")
        if self.space == REAL and not np.all(np.isfinite(arr)):
            raise PreconditionError("real-space values must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_function(cls, grid: Grid2D, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]):
        X, Y = grid.coordinates()
        return cls(grid, np.broadcast_to(fn(X, Y), grid.shape))

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape))

    @property
    def values(self) -> np.ndarray:
        """Real-space samples."""
        if self.space == REAL:
            return self.data
        n = self.grid.nx * self.grid.ny
        return np.real(np.fft.ifft2(self.data)) * n

    @property
    def coeffs(self) -> np.ndarray:
        """Normalized spectral coefficients in FFT order."""
        if self.space == SPECTRAL:
            return self.data
        return np.fft.fft2(self.data) / (self.grid.nx * self.grid.ny)

    def to_real(self):
        return self if self.space == REAL else Field(self.grid, self.values, REAL)

    def to_spectral(self):
        return self if self.space == SPECTRAL else Field(self.grid, self.coeffs, SPECTRAL)

    def __add__(self, other):
        return Field(self.grid, self.coeffs + other.coeffs, SPECTRAL)

    def __sub__(self, other):
        return Field(self.grid, self.coeffs - other.coeffs, SPECTRAL)

    def __mul__(self, scalar):
        if self.space == REAL:
            return Field(self.grid, self.data * scalar, REAL)
        return Field(self.grid, self.data * scalar, SPECTRAL)

    __rmul__ = __mul__


class ZeroModeLog:
    """Counter for energy discarded on the ``xi = 0`` line.

    Operators that consume ``d_x^{-1}`` record here what they threw away,
    measured as ``||d_y P_0 u||^2`` where ``P_0`` keeps the ``xi = 0`` column.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self.reset()

    def reset(self):
        with self._lock:
            self.count = 0
            self.total_energy = 0.0
            self.last_energy = 0.0

    def record(self, energy):
        with self._lock:
            self.last_energy = float(energy)
            if energy > 0.0:
                self.count += 1
                self.total_energy += float(energy)


zero_mode_log = ZeroModeLog()


def _as_spectral_coeffs(u: Field) -> np.ndarray:
    return np.array(u.coeffs, dtype=complex)


def _apply(u: Field, mult, odd_x=False, odd_y=False) -> Field:
    c = _as_spectral_coeffs(u) * mult
    if odd_x:
        c[u.grid.nx // 2, :] = 0.0
    if odd_y:
        c[:, u.grid.ny // 2] = 0.0
    return Field(u.grid, c, SPECTRAL)


def _abs_power(k, s):
    k = np.abs(k)
    if s == 0:
        return np.ones_like(k)
    out = np.zeros_like(k)
    nz = k != 0
    out[nz] = k[nz] ** s
    return out


def _check_zero_line(c, axis, grid, what):
    line = c[0, :] if axis == 0 else c[:, 0]
    e_line = np.sum(np.abs(line) ** 2)
    e_tot = np.sum(np.abs(c) ** 2)
    if e_tot > 0 and e_line > 1e-12 * e_tot:
        raise ConstraintViolation(
            f"{what} with negative order needs a vanishing zero-wavenumber line; "
            f"relative energy there is {e_line / e_tot:.3e}"
        )


def frac_deriv_x(u: Field, s: float) -> Field:
    """Riesz derivative ``D_x^s``: multiply coefficients by ``|xi|^s``."""
    c = u.coeffs
    if s < 0:
        _check_zero_line(c, 0, u.grid, "D_x^s")
    XI, _ = u.grid.wavenumbers()
    return _apply(u, _abs_power(XI, s))


def frac_deriv_y(u: Field, s: float) -> Field:
    """Riesz derivative ``D_y^s``: multiply coefficients by ``|eta|^s``."""
    c = u.coeffs
    if s < 0:
        _check_zero_line(c, 1, u.grid, "D_y^s")
    _, ETA = u.grid.wavenumbers()
    return _apply(u, _abs_power(ETA, s))


def deriv_x(u: Field) -> Field:
    XI, _ = u.grid.wavenumbers()
    return _apply(u, 1j * XI, odd_x=True)


def deriv_y(u: Field) -> Field:
    _, ETA = u.grid.wavenumbers()
    return _apply(u, 1j * ETA, odd_y=True)


def zero_line_energy(u: Field) -> float:
    """``||d_y P_0 u||^2``: the part of ``u`` that ``d_x^{-1} d_y`` cannot act on."""
    g = u.grid
    c0 = u.coeffs[0, :]
    return float(g.lx * g.ly * np.sum(g.ky**2 * np.abs(c0) ** 2))


def inverse_xi_multiplier(grid: Grid2D) -> np.ndarray:
    """``eta / xi`` on the lattice, zero on the ``xi = 0`` column."""
    XI, ETA = grid.wavenumbers()
    out = np.zeros(grid.shape)
    nz = XI != 0
    out[nz] = ETA[nz] / XI[nz]
    return out


def antideriv_x_deriv_y(u: Field) -> Field:
    """``d_x^{-1} d_y`` with multiplier ``eta / xi``; the ``xi = 0`` column is dropped."""
    zero_mode_log.record(zero_line_energy(u))
    return _apply(u, inverse_xi_multiplier(u.grid), odd_x=True, odd_y=True)


def bessel_x(u: Field, s: float) -> Field:
    """``J_x^s`` with multiplier ``(1 + xi^2)^(s/2)``."""
    XI, _ = u.grid.wavenumbers()
    return _apply(u, (1.0 + XI**2) ** (s / 2.0))


def dealias_mask(grid: Grid2D) -> np.ndarray:
    jx = np.abs(grid.mode_x)[:, None]
    jy = np.abs(grid.mode_y)[None, :]
    return (jx <= grid.nx / 3) & (jy <= grid.ny / 3)


def dealias_23(u: Field) -> Field:
    """Two-thirds rule: zero every mode with ``|j| > nx/3`` or ``|k| > ny/3``."""
    return _apply(u, dealias_mask(u.grid))


def spectral_l2(grid: Grid2D, coeffs: np.ndarray, weight=None) -> float:
    """Parseval form of the L2 norm: ``sqrt(lx ly sum w |c|^2)``."""
    p = np.abs(coeffs) ** 2
    if weight is not None:
        p = weight * p
    return float(np.sqrt(grid.lx * grid.ly * np.sum(p)))


def norm_l2(u: Field) -> float:
    v = u.values
    return float(np.sqrt(u.grid.cell_area * np.sum(v * v)))


def norm_linf(u: Field) -> float:
    return float(np.max(np.abs(u.values)))


def norm_w1inf_x(u: Field) -> float:
    """``||u||_inf + ||d_x u||_inf``."""
    return norm_linf(u) + norm_linf(deriv_x(u))


def norm_xs(u: Field, s: float) -> float:
    """Anisotropic norm ``(||J_x^s u||^2 + ||d_x^{-1} d_y u||^2)^(1/2)``."""
    a = norm_l2(bessel_x(u, s))
    b = norm_l2(antideriv_x_deriv_y(u))
    return float(np.hypot(a, b))


def norm_hs1s2(u: Field, s1: float, s2: float) -> float:
    XI, ETA = u.grid.wavenumbers()
    w = (1.0 + XI**2) ** s1 * (1.0 + ETA**2) ** s2
    return spectral_l2(u.grid, u.coeffs, w)


def integral(u: Field) -> float:
    """``int u dx dy`` over the box (the (0, 0) mode times the box area)."""
    return float(np.real(u.coeffs[0, 0]) * u.grid.lx * u.grid.ly)


def cubic_integral(u: Field) -> float:
    v = u.values
    return float(u.grid.cell_area * np.sum(v**3))
