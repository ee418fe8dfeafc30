"""Transport of intensity: the continuity equation of paraxial wave optics.

The longitudinal intensity derivative is set by the convergence of the
transverse energy flow, k * dI/dz = -div(I * grad(phi)). Expanding the
divergence splits the contrast into a prism term grad(I).grad(phi)
(transverse displacement of energy) and a lens term I * laplacian(phi)
(local focusing or defocusing). ``tie_forward`` turns this into a
finite-propagation-distance contrast model.

Derivatives default to spectral differentiation, consistent with the
propagation module's Fourier filters; a periodic central finite
difference mode exists for cross-validation and for phases (such as
quadratics) that are smooth but not periodic.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError, ValidationError
from .field import Grid2D, IntensityImage, PhaseMap

__all__ = ["TieTerms", "tie_terms", "tie_forward"]


def _spectral_gradient(values: np.ndarray, grid: Grid2D) -> tuple[np.ndarray, np.ndarray]:
    spectrum = np.fft.fft2(values)
    kx = grid.kx()[np.newaxis, :]
    ky = grid.ky()[:, np.newaxis]
    gx = np.fft.ifft2(1j * kx * spectrum).real
    gy = np.fft.ifft2(1j * ky * spectrum).real
    return gx, gy


def _spectral_laplacian(values: np.ndarray, grid: Grid2D) -> np.ndarray:
    spectrum = np.fft.fft2(values)
    return np.fft.ifft2(-grid.k_squared() * spectrum).real


def _fd_gradient(values: np.ndarray, grid: Grid2D) -> tuple[np.ndarray, np.ndarray]:
    gx = (np.roll(values, -1, axis=1) - np.roll(values, 1, axis=1)) / (2.0 * grid.dx)
    gy = (np.roll(values, -1, axis=0) - np.roll(values, 1, axis=0)) / (2.0 * grid.dy)
    return gx, gy


def _fd_laplacian(values: np.ndarray, grid: Grid2D) -> np.ndarray:
    lx = (np.roll(values, -1, axis=1) - 2.0 * values + np.roll(values, 1, axis=1)) / grid.dx**2
    ly = (np.roll(values, -1, axis=0) - 2.0 * values + np.roll(values, 1, axis=0)) / grid.dy**2
    return lx + ly


_METHODS = {
    "spectral": (_spectral_gradient, _spectral_laplacian),
    "fd": (_fd_gradient, _fd_laplacian),
}


@dataclass(frozen=True)
class TieTerms:
    """Decomposed transport-of-intensity contrast contributions.

    gradient_term is grad(I).grad(phi) (prism), laplacian_term is
    I*laplacian(phi) (lens); dIdz = -(gradient_term+laplacian_term)/k by
    construction.
    """

    grid: Grid2D
    gradient_term: np.ndarray
    laplacian_term: np.ndarray
    dIdz: np.ndarray


def tie_terms(intensity: IntensityImage, phase: PhaseMap, k: float, method: str = "spectral") -> TieTerms:
    """Evaluate the expanded transport-of-intensity right-hand side.

    Parameters
    ----------
    intensity, phase : maps on a common grid
    k : wavenumber, rad/m
    method : 'spectral' (default) or 'fd' (periodic central differences)
    """
    if intensity.grid != phase.grid:
        raise GridMismatchError("intensity and phase grids differ")
    if method not in _METHODS:
        raise ValidationError(f"unknown differentiation method {method!r}")
    grad, lap = _METHODS[method]
    grid = intensity.grid
    ix, iy = grad(intensity.values, grid)
    px, py = grad(phase.values, grid)
    gradient_term = ix * px + iy * py
    laplacian_term = intensity.values * lap(phase.values, grid)
    didz = -(gradient_term + laplacian_term) / k
    return TieTerms(grid, gradient_term, laplacian_term, didz)


def tie_forward(
    intensity: IntensityImage,
    phase: PhaseMap,
    k: float,
    delta_z: float,
    method: str = "spectral",
) -> IntensityImage:
    """Finite-difference contrast model I(z+dz) = I - (dz/k) div(I grad phi).

    Valid for small delta_z; the linearised model can undershoot near
    sharp features, so negative predictions are clamped to zero with a
    warning reporting the clamp count.
    """
    if intensity.grid != phase.grid:
        raise GridMismatchError("intensity and phase grids differ")
    if method not in _METHODS:
        raise ValidationError(f"unknown differentiation method {method!r}")
    grad, _ = _METHODS[method]
    grid = intensity.grid
    px, py = grad(phase.values, grid)
    div_x, _ = grad(intensity.values * px, grid)
    _, div_y = grad(intensity.values * py, grid)
    out = intensity.values - (delta_z / k) * (div_x + div_y)
    negative = out < 0
    if np.any(negative):
        warnings.warn(
            f"tie_forward clamped {int(np.count_nonzero(negative))} negative pixels to zero",
            RuntimeWarning,
            stacklevel=2,
        )
        out = np.where(negative, 0.0, out)
    return IntensityImage(grid, out)
