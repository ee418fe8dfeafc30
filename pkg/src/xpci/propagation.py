"""Fresnel free-space propagation and linear shift-invariant systems.

Any such system acts on a field in three steps: Fourier decomposition
into plane waves, pointwise multiplication by a complex transfer function
t(kx, ky), and Fourier synthesis. Free space over a distance ``d`` is the
special case t = exp(i*k*d) * exp(-i*d*(kx^2+ky^2)/(2k)); an analyser
crystal is a 1D profile A(kx) constant along ky. Periodic (wrap-around)
boundaries are the native model; ``pad=True`` gives a zero-padded
factor-2 window for fidelity checks on non-periodic fields.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import GridMismatchError, ValidationError
from .field import ComplexField, Grid2D

__all__ = [
    "TransferFunction",
    "FreeSpace",
    "Analyser",
    "Custom",
    "LinearSystem",
    "fresnel_propagate",
    "apply_transfer",
    "analyser_transfer",
    "compose",
    "apply_system",
]


class TransferFunction:
    """A complex multiplicative filter over a grid's (kx, ky) plane.

    Subclasses implement ``sample_on(grid, wavelength)`` returning the
    filter values in FFT order, shape (ny, nx).
    """

    def sample_on(self, grid: Grid2D, wavelength: float) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class FreeSpace(TransferFunction):
    """Vacuum propagation over ``distance`` metres (may be negative or zero).

    A pure phase filter: the global carrier exp(i*k*d) is retained so
    that composition and inversion identities hold at the field level.
    """

    distance: float

    def sample_on(self, grid: Grid2D, wavelength: float) -> np.ndarray:
        k = 2.0 * np.pi / wavelength
        carrier = np.exp(1j * k * self.distance)
        return carrier * np.exp(-1j * self.distance * grid.k_squared() / (2.0 * k))


@dataclass(frozen=True)
class Analyser(TransferFunction):
    """Analyser-crystal style filter: a 1D complex profile along one k axis.

    ``profile`` is sampled over the target grid's kx (axis='x') or ky
    (axis='y') values in FFT order; the filter is constant along the
    other axis. The profile is user-supplied data (e.g. derived from a
    measured rocking curve); no dynamical-diffraction model is computed.
    """

    profile: np.ndarray
    axis: str = "x"

    def __post_init__(self):
        prof = np.asarray(self.profile, dtype=np.complex128)
        if prof.ndim != 1:
            raise ValidationError("analyser profile must be 1D")
        if self.axis not in ("x", "y"):
            raise ValidationError(f"analyser axis must be 'x' or 'y', got {self.axis!r}")
        object.__setattr__(self, "profile", prof)

    def sample_on(self, grid: Grid2D, wavelength: float) -> np.ndarray:
        if self.axis == "x":
            if self.profile.shape[0] != grid.nx:
                raise GridMismatchError(
                    f"analyser profile length {self.profile.shape[0]} != nx {grid.nx}"
                )
            return np.broadcast_to(self.profile[np.newaxis, :], grid.shape).copy()
        if self.profile.shape[0] != grid.ny:
            raise GridMismatchError(
                f"analyser profile length {self.profile.shape[0]} != ny {grid.ny}"
            )
        return np.broadcast_to(self.profile[:, np.newaxis], grid.shape).copy()


@dataclass(frozen=True)
class Custom(TransferFunction):
    """Arbitrary sampled filter tied to one specific grid."""

    grid: Grid2D
    samples: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.complex128)
        if arr.shape != self.grid.shape:
            raise GridMismatchError(
                f"custom filter shape {arr.shape} != grid shape {self.grid.shape}"
            )
        object.__setattr__(self, "samples", arr)

    def sample_on(self, grid: Grid2D, wavelength: float) -> np.ndarray:
        if grid != self.grid:
            raise GridMismatchError("custom transfer function sampled on a different grid")
        return self.samples


@dataclass(frozen=True)
class LinearSystem:
    """Ordered cascade of transfer functions; the first listed acts first."""

    stages: tuple[TransferFunction, ...]

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))


def compose(stages: Sequence[TransferFunction]) -> LinearSystem:
    """Bundle transfer functions into a system; empty list is the identity."""
    return LinearSystem(tuple(stages))


def apply_transfer(f: ComplexField, transfer: TransferFunction) -> ComplexField:
    """Filter a field: IFFT( t(kx,ky) * FFT(field) )."""
    if isinstance(transfer, FreeSpace) and transfer.distance == 0.0:
        return f.with_values(f.values)
    samples = transfer.sample_on(f.grid, f.wavelength)
    spectrum = np.fft.fft2(f.values)
    return f.with_values(np.fft.ifft2(samples * spectrum))


def apply_system(f: ComplexField, system: LinearSystem) -> ComplexField:
    """Run a field through every stage of a linear system in order."""
    out = f
    for stage in system.stages:
        out = apply_transfer(out, stage)
    return out


def _check_sampling(grid: Grid2D, wavelength: float, distance: float) -> None:
    # Quadratic-phase sampling criterion: the Fresnel filter's fastest
    # fringe must stay resolvable on the discrete k grid.
    reach_x = abs(distance) * wavelength / (2.0 * grid.dx)
    reach_y = abs(distance) * wavelength / (2.0 * grid.dy)
    if reach_x > grid.extent_x / 2.0 or reach_y > grid.extent_y / 2.0:
        warnings.warn(
            "propagation distance strains the quadratic-phase sampling "
            f"criterion (|d|*lambda/(2*pitch) = {max(reach_x, reach_y):.3g} m "
            f"exceeds half the grid extent); consider pad=True or a finer grid",
            RuntimeWarning,
            stacklevel=3,
        )


def fresnel_propagate(f: ComplexField, distance: float, pad: bool = False) -> ComplexField:
    """Propagate a field through vacuum by ``distance`` metres.

    Negative distances back-propagate; distance 0 returns the input
    unchanged. With ``pad=True`` the field is zero-padded to twice its
    size before filtering and cropped afterwards, which suppresses
    wrap-around for beams that do not fill the window (total power over
    the cropped window is then only approximately conserved).
    """
    if distance == 0.0:
        return f.with_values(f.values)
    _check_sampling(f.grid, f.wavelength, distance)
    if not pad:
        return apply_transfer(f, FreeSpace(distance))

    grid = f.grid
    big = Grid2D(2 * grid.nx, 2 * grid.ny, grid.dx, grid.dy)
    y0 = grid.ny - grid.ny // 2
    x0 = grid.nx - grid.nx // 2
    values = np.zeros(big.shape, dtype=np.complex128)
    values[y0 : y0 + grid.ny, x0 : x0 + grid.nx] = f.values
    padded = ComplexField(big, values, f.wavelength)
    out = apply_transfer(padded, FreeSpace(distance))
    return f.with_values(out.values[y0 : y0 + grid.ny, x0 : x0 + grid.nx])


def analyser_transfer(profile: np.ndarray, axis: str = "x") -> Analyser:
    """Wrap a sampled complex profile A(kx) as an analyser transfer function.

    The profile must be sampled at the target grid's kx (or ky) values in
    FFT order; length is checked when the filter is applied.
    """
    return Analyser(np.asarray(profile, dtype=np.complex128), axis)
