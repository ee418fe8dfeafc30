"""Grids, complex scalar fields, and intensity/phase decomposition.

All other modules build on the conventions fixed here:

* arrays are 2D, row-major, shape ``(ny, nx)``, x varying fastest;
* real-space coordinates are centred, ``x[i] = (i - nx//2) * dx`` (metres);
* spatial frequencies are angular (rad/m), in FFT order with k=0 at
  index 0: ``kx[m] = 2*pi*m_wrapped/(nx*dx)``;
* the discrete Fourier transform is numpy's unnormalised forward /
  (1/N)-normalised inverse pair.

Fields are immutable value objects; every operation returns a new object.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .errors import GridMismatchError, ValidationError

__all__ = [
    "Grid2D",
    "ComplexField",
    "IntensityImage",
    "PhaseMap",
    "extract_intensity",
    "extract_phase",
    "compose_field",
    "total_power",
]


@dataclass(frozen=True)
class Grid2D:
    """Uniform 2D sampling grid.

    Parameters
    ----------
    nx, ny : int
        Pixel counts along x and y. Both must be >= 2; power-of-two sizes
        are not required.
    dx, dy : float
        Pixel pitch in metres, > 0.
    """

    nx: int
    ny: int
    dx: float
    dy: float

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValidationError(f"grid needs nx, ny >= 2, got {self.nx}x{self.ny}")
        if self.dx <= 0 or self.dy <= 0:
            raise ValidationError(f"grid pitch must be positive, got dx={self.dx}, dy={self.dy}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def extent_x(self) -> float:
        """Physical width nx*dx in metres."""
        return self.nx * self.dx

    @property
    def extent_y(self) -> float:
        return self.ny * self.dy

    @property
    def pixel_area(self) -> float:
        return self.dx * self.dy

    def x(self) -> np.ndarray:
        """Centred x coordinates, shape (nx,)."""
        return (np.arange(self.nx) - self.nx // 2) * self.dx

    def y(self) -> np.ndarray:
        """Centred y coordinates, shape (ny,)."""
        return (np.arange(self.ny) - self.ny // 2) * self.dy

    def xy(self) -> tuple[np.ndarray, np.ndarray]:
        """Broadcastable coordinate arrays (x of shape (1,nx), y of shape (ny,1))."""
        return self.x()[np.newaxis, :], self.y()[:, np.newaxis]

    def kx(self) -> np.ndarray:
        """Angular spatial frequencies along x (rad/m), FFT order, k=0 at index 0."""
        return 2.0 * np.pi * np.fft.fftfreq(self.nx, d=self.dx)

    def ky(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.ny, d=self.dy)

    def k_squared(self) -> np.ndarray:
        """kx^2 + ky^2 on the full grid, shape (ny, nx)."""
        kx = self.kx()[np.newaxis, :]
        ky = self.ky()[:, np.newaxis]
        return kx * kx + ky * ky

    def __eq__(self, other) -> bool:
        if not isinstance(other, Grid2D):
            return NotImplemented
        return (
            self.nx == other.nx
            and self.ny == other.ny
            and self.dx == other.dx
            and self.dy == other.dy
        )

    def __hash__(self):
        return hash((self.nx, self.ny, self.dx, self.dy))


def _as_grid_array(grid: Grid2D, values, dtype) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype)
    if arr.shape != grid.shape:
        raise GridMismatchError(
            f"values shape {arr.shape} does not match grid shape {grid.shape}"
        )
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ComplexField:
    """Sampled complex scalar wave-function on a 2D grid at one wavelength.

    ``values`` holds the complex amplitude per pixel (dimensionless),
    ``wavelength`` the vacuum wavelength in metres. The wavenumber
    ``k = 2*pi/wavelength`` is derived, never stored.
    """

    grid: Grid2D
    values: np.ndarray
    wavelength: float

    def __post_init__(self):
        object.__setattr__(self, "values", _as_grid_array(self.grid, self.values, np.complex128))
        if not (self.wavelength > 0):
            raise ValidationError(f"wavelength must be positive, got {self.wavelength}")

    @property
    def k(self) -> float:
        """Wavenumber 2*pi/lambda in rad/m."""
        return 2.0 * np.pi / self.wavelength

    def with_values(self, values) -> "ComplexField":
        """Same grid and wavelength, new complex values."""
        return ComplexField(self.grid, values, self.wavelength)


@dataclass(frozen=True)
class IntensityImage:
    """Real nonnegative intensity per pixel (arbitrary detector units)."""

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_grid_array(self.grid, self.values, np.float64))
        if np.any(self.values < 0):
            bad = int(np.count_nonzero(self.values < 0))
            raise ValidationError(f"intensity must be nonnegative ({bad} negative pixels)")


@dataclass(frozen=True)
class PhaseMap:
    """Real phase per pixel, radians.

    ``valid`` marks pixels where the phase is meaningful; extract_phase
    flags zero-amplitude pixels (whose phase is reported as 0) as invalid.
    """

    grid: Grid2D
    values: np.ndarray
    valid: np.ndarray | None = dataclass_field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "values", _as_grid_array(self.grid, self.values, np.float64))
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("phase values must be finite")
        if self.valid is not None:
            object.__setattr__(self, "valid", _as_grid_array(self.grid, self.valid, bool))


def extract_intensity(f: ComplexField) -> IntensityImage:
    """Intensity I = |psi|^2, pixelwise."""
    vals = f.values
    return IntensityImage(f.grid, vals.real * vals.real + vals.imag * vals.imag)


def extract_phase(f: ComplexField) -> PhaseMap:
    """Principal-value phase arg(psi) in (-pi, pi].

    Zero-amplitude pixels get phase 0 and are marked invalid in the
    returned map's ``valid`` mask. No unwrapping is performed.
    """
    phase = np.angle(f.values)
    valid = f.values != 0
    return PhaseMap(f.grid, phase, valid=valid)


def compose_field(intensity: IntensityImage, phase: PhaseMap, wavelength: float) -> ComplexField:
    """Build psi = sqrt(I) * exp(i*phi) from intensity and phase maps."""
    if intensity.grid != phase.grid:
        raise GridMismatchError("intensity and phase grids differ")
    values = np.sqrt(intensity.values) * np.exp(1j * phase.values)
    return ComplexField(intensity.grid, values, wavelength)


def total_power(intensity: IntensityImage) -> float:
    """Integrated power sum(I) * dx * dy (intensity units times m^2)."""
    return float(np.sum(intensity.values) * intensity.grid.pixel_area)
