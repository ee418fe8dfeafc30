"""Inverse problems: thickness retrieval and field-level deconvolution.

``paganin_retrieve`` inverts a single propagation-based phase-contrast
image of a single-material object into its projected thickness via a
low-pass Fourier filter and a logarithm. ``invert_transfer_single`` and
``schiske_combine`` solve the field-level inverse problem for one or
several states of a linear shift-invariant system, with Tikhonov-style
regularisation T*/(|T|^2 + reg) against vanishing transfer functions.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import GridMismatchError, NumericalError, ValidationError
from .field import ComplexField, IntensityImage
from .propagation import TransferFunction

__all__ = [
    "RetrievalConfig",
    "paganin_retrieve",
    "invert_transfer_single",
    "schiske_combine",
]

INTENSITY_FLOOR = 1e-8  # relative to flat-field; guards the logarithm
ZERO_FILTER_TOL = 1e-12


@dataclass(frozen=True)
class RetrievalConfig:
    """Parameters of single-image single-material retrieval.

    delta and mu (1/m) describe the material at the design wavelength,
    distance is the object-to-detector propagation (effective parallel
    distance for cone beams), flat_field the illumination intensity I0.
    The filter denominator 1 + (delta*distance/mu)*k^2 is then >= 1 at
    every frequency, a pure low-pass that never divides by zero.
    """

    delta: float
    mu: float
    distance: float
    wavelength: float
    flat_field: float = 1.0
    regularization: float = 0.0

    def __post_init__(self):
        if self.mu <= 0:
            raise ValidationError(f"mu must be positive, got {self.mu}")
        if self.delta < 0:
            raise ValidationError(f"delta must be nonnegative, got {self.delta}")
        if self.distance < 0:
            raise ValidationError(f"distance must be nonnegative, got {self.distance}")
        if not (self.wavelength > 0):
            raise ValidationError("wavelength must be positive")
        if self.flat_field <= 0:
            raise ValidationError("flat_field must be positive")
        if self.regularization < 0:
            raise ValidationError("regularization must be nonnegative")


def paganin_retrieve(image: IntensityImage, cfg: RetrievalConfig) -> np.ndarray:
    """Projected thickness (metres) from one propagated intensity image.

    T = -(1/mu) * ln( IFFT[ FFT[I/I0] / (1 + (delta*distance/mu) k^2) ] ).
    Filtered intensities below 1e-8 of the flat field are floored before
    the logarithm, with a warning reporting how many pixels were touched.
    """
    grid = image.grid
    ratio = image.values / cfg.flat_field
    filtered = np.fft.ifft2(
        np.fft.fft2(ratio) / (1.0 + (cfg.delta * cfg.distance / cfg.mu) * grid.k_squared())
    ).real
    low = filtered < INTENSITY_FLOOR
    if np.any(low):
        warnings.warn(
            f"paganin_retrieve floored {int(np.count_nonzero(low))} non-positive "
            "filtered pixels before the logarithm",
            RuntimeWarning,
            stacklevel=2,
        )
        filtered = np.where(low, INTENSITY_FLOOR, filtered)
    return -np.log(filtered) / cfg.mu


def _format_zero_modes(denominator: np.ndarray, grid, limit: int = 5) -> str:
    iy, ix = np.nonzero(denominator < ZERO_FILTER_TOL**2)
    kx = grid.kx()
    ky = grid.ky()
    listed = ", ".join(
        f"(kx={kx[j]:.4g}, ky={ky[i]:.4g})" for i, j in zip(iy[:limit], ix[:limit])
    )
    more = "" if len(iy) <= limit else f" and {len(iy) - limit} more"
    return f"{len(iy)} frequencies with vanishing denominator: {listed}{more}"


def schiske_combine(
    outputs: Sequence[ComplexField],
    systems: Sequence[TransferFunction],
    regularization: float = 0.0,
) -> ComplexField:
    """Least-squares field recovery from several system states.

    psi_in = IFFT[ sum_j T_j* FFT[psi_out_j] / (sum_p |T_p|^2 + reg) ].
    Exact on noiseless consistent data whenever the denominator is
    nowhere zero; with reg = 0 a vanishing denominator raises a
    NumericalError naming the offending frequencies (regularise, or add
    more system states whose transfer zeros do not coincide).
    """
    if len(outputs) != len(systems):
        raise ValidationError(
            f"got {len(outputs)} outputs but {len(systems)} transfer functions"
        )
    if not outputs:
        raise ValidationError("need at least one output/system pair")
    if regularization < 0:
        raise ValidationError("regularization must be nonnegative")
    first = outputs[0]
    for f in outputs[1:]:
        if f.grid != first.grid:
            raise GridMismatchError("all outputs must share one grid")
        if f.wavelength != first.wavelength:
            raise ValidationError("all outputs must share one wavelength")

    numerator = np.zeros(first.grid.shape, dtype=np.complex128)
    denominator = np.zeros(first.grid.shape, dtype=np.float64)
    for f, transfer in zip(outputs, systems):
        samples = transfer.sample_on(first.grid, first.wavelength)
        numerator += np.conj(samples) * np.fft.fft2(f.values)
        denominator += samples.real**2 + samples.imag**2

    if regularization == 0.0 and np.any(denominator < ZERO_FILTER_TOL**2):
        raise NumericalError(
            "unregularised inversion would divide by zero at "
            + _format_zero_modes(denominator, first.grid)
        )
    return first.with_values(np.fft.ifft2(numerator / (denominator + regularization)))


def invert_transfer_single(
    output: ComplexField,
    transfer: TransferFunction,
    regularization: float = 0.0,
) -> ComplexField:
    """Invert one linear shift-invariant system state.

    The N=1 case of schiske_combine (shared implementation):
    IFFT[ T* FFT[psi_out] / (|T|^2 + reg) ]. With reg = 0 and a
    nowhere-vanishing T this is the exact inverse of apply_transfer.
    """
    return schiske_combine([output], [transfer], regularization)
