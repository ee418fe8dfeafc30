"""Parallel-beam tomography under the projection approximation.

Forward projection rotates the voxel volume about the vertical axis
(bilinear resampling by default; resampling is the dominant
discretisation error source) and line-integrates along the beam, per
modality: log-attenuation integral(mu dz), phase shift -k*integral(delta
dz), or the propagated intensity of a unit plane wave through the
projected transmission. Reconstruction is ramp-filtered (Ram-Lak, with
optional Hann apodization) back-projection over angles equally spaced in
[0, pi). A Paganin-filtered pipeline turns propagated-intensity
sinograms of locally single-material objects into quantitative mu or
delta slices, with a marked noise-robustness (SNR) advantage over direct
log-and-reconstruct on the same data.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import GridMismatchError, ValidationError
from .field import ComplexField, Grid2D, IntensityImage, extract_intensity
from .propagation import fresnel_propagate
from .retrieval import RetrievalConfig, paganin_retrieve
from .sample import ProjectedObject, RefractiveVolume, transmission_function

__all__ = [
    "Sinogram",
    "ReconSlice",
    "MODALITIES",
    "forward_sinogram",
    "fbp_reconstruct",
    "paganin_fbp",
    "region_snr",
]

MODALITIES = ("attenuation_log", "phase", "propagated_intensity")


@dataclass(frozen=True)
class Sinogram:
    """Angle-indexed stack of parallel projections.

    rows has shape (n_angles, nx) in slice mode or (n_angles, ny, nx) in
    stack mode. angles are strictly increasing within [0, pi).
    ``distance`` is required for (and only for) the
    propagated_intensity modality; ``wavelength`` is carried whenever
    the modality needs it to get back to physical units.
    """

    angles: np.ndarray
    rows: np.ndarray
    pixel_size: float
    modality: str
    wavelength: float | None = None
    distance: float | None = None

    def __post_init__(self):
        ang = np.asarray(self.angles, dtype=np.float64)
        rows = np.asarray(self.rows, dtype=np.float64)
        if ang.ndim != 1 or ang.size < 1:
            raise ValidationError("angles must be a nonempty 1D array")
        if np.any(ang < 0) or np.any(ang >= np.pi) or np.any(np.diff(ang) <= 0):
            raise ValidationError("angles must be strictly increasing within [0, pi)")
        if rows.ndim not in (2, 3) or rows.shape[0] != ang.size:
            raise ValidationError(
                f"rows must be (n_angles, nx) or (n_angles, ny, nx), got {rows.shape}"
            )
        if self.modality not in MODALITIES:
            raise ValidationError(f"unknown modality {self.modality!r}")
        if self.pixel_size <= 0:
            raise ValidationError("pixel size must be positive")
        if (self.modality == "propagated_intensity") != (self.distance is not None):
            raise ValidationError(
                "distance is required for propagated_intensity and only for it"
            )
        object.__setattr__(self, "angles", ang)
        object.__setattr__(self, "rows", rows)

    @property
    def n_angles(self) -> int:
        return self.angles.size

    @property
    def stacked(self) -> bool:
        return self.rows.ndim == 3


@dataclass(frozen=True)
class ReconSlice:
    """Reconstructed mu (1/m) or delta (dimensionless) over a square grid."""

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != self.grid.shape:
            raise GridMismatchError("reconstruction shape must match its grid")
        if not np.all(np.isfinite(vals)):
            raise ValidationError("reconstruction contains non-finite values")
        object.__setattr__(self, "values", vals)


def _rotated_projection(slab: np.ndarray, phi: float, order: int) -> np.ndarray:
    """Integrate a (nz, nx) slab along z after rotating by phi about y.

    Samples f(x = s cos phi - t sin phi, z = s sin phi + t cos phi) and
    sums over t; returns the projection over the detector coordinate s
    (length nx, in index units; multiply by dz outside).
    """
    n_z, n_x = slab.shape
    s = np.arange(n_x) - n_x // 2
    t = np.arange(n_z) - n_z // 2
    grid_s, grid_t = np.meshgrid(s, t, indexing="xy")
    cos, sin = np.cos(phi), np.sin(phi)
    coord_x = grid_s * cos - grid_t * sin + n_x // 2
    coord_z = grid_s * sin + grid_t * cos + n_z // 2
    vals = ndimage.map_coordinates(slab, [coord_z, coord_x], order=order, mode="constant", cval=0.0)
    return vals.sum(axis=0)


def _check_rotation_circle(volume: RefractiveVolume) -> None:
    nz, _, nx = volume.shape
    z = (np.arange(nz) - nz // 2)[:, None, None]
    x = (np.arange(nx) - nx // 2)[None, None, :]
    outside = (z * z + x * x) > (min(nz, nx) / 2.0 - 1.0) ** 2
    if np.any((volume.delta != 0) & outside) or np.any((volume.beta != 0) & outside):
        warnings.warn(
            "volume has nonzero voxels outside the inscribed rotation circle; "
            "they leave the field of view at some angles",
            RuntimeWarning,
            stacklevel=3,
        )


def _two_row_grid(values: np.ndarray, pixel_size: float) -> tuple[Grid2D, np.ndarray]:
    """Lift a 1-row map onto a legal 2-row grid (y-uniform, so propagation
    and Fourier filters act exactly as in 1D)."""
    if values.shape[0] == 1:
        values = np.vstack([values, values])
    grid = Grid2D(values.shape[1], values.shape[0], pixel_size, pixel_size)
    return grid, values


def forward_sinogram(
    volume: RefractiveVolume,
    angles: np.ndarray,
    modality: str,
    wavelength: float,
    distance: float | None = None,
    noise_counts: float | None = None,
    seed: int = 0,
    interpolation_order: int = 1,
) -> Sinogram:
    """Project a volume over a set of rotation angles.

    Per angle the volume is rotated (bilinear by default;
    ``interpolation_order=3`` gives cubic-spline resampling for
    high-fidelity consistency studies) and line-integrated along the
    beam. For 'propagated_intensity' the projected transmission is
    applied to a unit plane wave and Fresnel-propagated by ``distance``.
    Poisson noise (mean ``noise_counts`` per unit intensity) applies to
    intensities only.
    """
    if modality not in MODALITIES:
        raise ValidationError(f"unknown modality {modality!r}")
    if (modality == "propagated_intensity") != (distance is not None):
        raise ValidationError("distance is required for propagated_intensity and only for it")
    if noise_counts is not None and modality != "propagated_intensity":
        raise ValidationError("Poisson noise applies to intensities only")
    if volume.dx != volume.dz:
        raise ValidationError("rotation requires equal x and z voxel pitches")
    angles = np.asarray(angles, dtype=np.float64)
    _check_rotation_circle(volume)

    k = 2.0 * np.pi / wavelength
    _, n_y, _ = volume.shape
    rows = []
    for phi in angles:
        # line integrals per transverse row
        delta_proj = np.stack(
            [_rotated_projection(volume.delta[:, iy, :], phi, interpolation_order) for iy in range(n_y)]
        ) * volume.dz
        beta_proj = np.stack(
            [_rotated_projection(volume.beta[:, iy, :], phi, interpolation_order) for iy in range(n_y)]
        ) * volume.dz
        if modality == "attenuation_log":
            rows.append(2.0 * k * beta_proj)
        elif modality == "phase":
            rows.append(-k * delta_proj)
        else:
            grid, phase = _two_row_grid(-k * delta_proj, volume.dx)
            _, atten = _two_row_grid(2.0 * k * beta_proj, volume.dx)
            projected = ProjectedObject(grid, phase, atten, wavelength)
            beam = ComplexField(grid, np.ones(grid.shape, dtype=np.complex128), wavelength)
            exit_field = beam.with_values(beam.values * transmission_function(projected).values)
            intensity = extract_intensity(fresnel_propagate(exit_field, distance)).values
            rows.append(intensity[:n_y])

    stack = np.stack(rows)
    if n_y == 1:
        stack = stack[:, 0, :]
    if noise_counts is not None:
        if noise_counts <= 0:
            raise ValidationError("noise_counts must be positive")
        rng = np.random.default_rng(seed)
        stack = rng.poisson(np.maximum(stack, 0.0) * noise_counts).astype(np.float64) / noise_counts
    return Sinogram(angles, stack, volume.dx, modality, wavelength=wavelength, distance=distance)


def _ramlak_response(pad: int, pitch: float, apodization: str) -> np.ndarray:
    """Frequency response of the band-limited ramp filter (real-space kernel DFT)."""
    lags = np.fft.fftfreq(pad) * pad
    kernel = np.zeros(pad)
    kernel[0] = 1.0 / (4.0 * pitch * pitch)
    odd = np.abs(lags) % 2 == 1
    kernel[odd] = -1.0 / (np.pi * np.pi * (lags[odd] * pitch) ** 2)
    response = np.real(np.fft.fft(kernel))
    if apodization == "hann":
        freq = np.fft.fftfreq(pad)
        response *= 0.5 * (1.0 + np.cos(2.0 * np.pi * freq))
    elif apodization != "none":
        raise ValidationError(f"unknown apodization {apodization!r}")
    return response


def _fbp_2d(rows: np.ndarray, angles: np.ndarray, pitch: float, apodization: str) -> np.ndarray:
    n_ang, n = rows.shape
    pad = int(2 ** np.ceil(np.log2(max(2 * n, 16))))
    response = _ramlak_response(pad, pitch, apodization)
    padded = np.zeros((n_ang, pad))
    padded[:, :n] = rows
    filtered = np.fft.ifft(np.fft.fft(padded, axis=1) * response, axis=1).real[:, :n] * pitch

    axis = (np.arange(n) - n // 2) * pitch
    grid_x, grid_z = np.meshgrid(axis, axis, indexing="xy")
    out = np.zeros((n, n))
    for phi, profile in zip(angles, filtered):
        s = grid_x * np.cos(phi) + grid_z * np.sin(phi)
        out += np.interp(s, axis, profile, left=0.0, right=0.0)
    return out * (np.pi / n_ang)


def fbp_reconstruct(sinogram: Sinogram, apodization: str = "none"):
    """Ramp-filtered back-projection of a linear-modality sinogram.

    attenuation_log rows reconstruct mu (1/m); phase rows reconstruct
    delta (the -k factor is divided out, which requires the sinogram's
    wavelength). propagated_intensity data is rejected: retrieve phase
    first (see paganin_fbp). Returns a ReconSlice, or a list of them for
    stacked sinograms (one per transverse row).
    """
    if sinogram.modality == "propagated_intensity":
        raise ValidationError(
            "propagated_intensity sinograms must be phase-retrieved before "
            "reconstruction (e.g. paganin_fbp)"
        )
    if sinogram.n_angles < 2:
        raise ValidationError("need at least 2 angles to reconstruct")
    rows = sinogram.rows
    if sinogram.modality == "phase":
        if sinogram.wavelength is None:
            raise ValidationError("phase sinogram needs its wavelength to recover delta")
        rows = -rows * sinogram.wavelength / (2.0 * np.pi)

    pitch = sinogram.pixel_size
    n = rows.shape[-1]
    grid = Grid2D(n, n, pitch, pitch)
    if rows.ndim == 2:
        return ReconSlice(grid, _fbp_2d(rows, sinogram.angles, pitch, apodization))
    return [
        ReconSlice(grid, _fbp_2d(rows[:, iy, :], sinogram.angles, pitch, apodization))
        for iy in range(rows.shape[1])
    ]


def paganin_fbp(
    sinogram: Sinogram,
    cfg: RetrievalConfig,
    output: str = "mu",
    apodization: str = "none",
):
    """Thickness-retrieve every projection, then reconstruct.

    Each propagated-intensity projection (flat-field normalised via
    cfg.flat_field) passes through paganin_retrieve to the local
    single-material thickness; multiplying by mu (output='mu') or delta
    (output='delta') gives line integrals, which are ramp-filtered and
    back-projected. The low-pass retrieval filter is what buys the noise
    robustness of this pipeline.
    """
    if sinogram.modality != "propagated_intensity":
        raise ValidationError("paganin_fbp expects a propagated_intensity sinogram")
    if output not in ("mu", "delta"):
        raise ValidationError(f"output must be 'mu' or 'delta', got {output!r}")

    rows = sinogram.rows if sinogram.stacked else sinogram.rows[:, np.newaxis, :]
    n_y = rows.shape[1]
    lin_rows = np.empty_like(rows)
    for i in range(rows.shape[0]):
        grid, values = _two_row_grid(rows[i], sinogram.pixel_size)
        thickness = paganin_retrieve(IntensityImage(grid, np.maximum(values, 0.0)), cfg)
        scale = cfg.mu if output == "mu" else cfg.delta
        lin_rows[i] = (scale * thickness)[:n_y]

    if not sinogram.stacked:
        lin_rows = lin_rows[:, 0, :]
    # rows now hold plain line integrals (of mu or of delta), so the
    # attenuation_log route reconstructs the integrand directly
    derived = Sinogram(
        sinogram.angles,
        lin_rows,
        sinogram.pixel_size,
        "attenuation_log",
        wavelength=sinogram.wavelength,
    )
    return fbp_reconstruct(derived, apodization=apodization)


def region_snr(recon: ReconSlice, signal_mask: np.ndarray, background_mask: np.ndarray) -> float:
    """(mean(signal) - mean(background)) / std(background).

    Masks are boolean pixel selections; they must be nonempty and
    disjoint. A noise-free background (zero standard deviation) returns
    +inf as a documented sentinel.
    """
    signal_mask = np.asarray(signal_mask, dtype=bool)
    background_mask = np.asarray(background_mask, dtype=bool)
    if signal_mask.shape != recon.values.shape or background_mask.shape != recon.values.shape:
        raise ValidationError("masks must match the reconstruction shape")
    if not signal_mask.any() or not background_mask.any():
        raise ValidationError("signal and background regions must be nonempty")
    if np.any(signal_mask & background_mask):
        raise ValidationError("signal and background regions must be disjoint")
    mean_signal = float(recon.values[signal_mask].mean())
    mean_background = float(recon.values[background_mask].mean())
    std_background = float(recon.values[background_mask].std())
    if std_background == 0.0:
        return float("inf") if mean_signal != mean_background else 0.0
    return (mean_signal - mean_background) / std_background
