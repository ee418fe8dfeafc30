"""Space-frequency description of partial coherence.

A partially coherent field at fixed angular frequency is represented by
a weighted ensemble of strictly monochromatic fields {psi_j, c_j}. Every
member propagates through a sample/system pipeline exactly as a coherent
field would, weights unchanged; ensemble averages then give the spectral
density (mean intensity), the two-point cross-spectral density, and,
integrated over frequency bins with the detector efficiency, the
detected intensity. Finite incoherent sources can instead be modelled
geometrically by penumbral blurring of width D*R2/R1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.integrate import trapezoid

from .errors import GridMismatchError, ValidationError
from .field import ComplexField, Grid2D, IntensityImage
from .propagation import LinearSystem, TransferFunction, apply_system, apply_transfer, fresnel_propagate
from .sample import TransmissionFunction, apply_sample

__all__ = [
    "ModeEnsemble",
    "PolyState",
    "SourceModel",
    "TiltedPlaneWaves",
    "RandomPhaseScreen",
    "PipelineStage",
    "apply_pipeline",
    "make_ensemble",
    "propagate_ensemble",
    "spectral_density",
    "spectral_density_stderr",
    "cross_spectral_density",
    "detected_intensity",
    "penumbral_blur",
]

WEIGHT_SUM_TOL = 1e-12

PipelineStage = Union[TransmissionFunction, TransferFunction, LinearSystem, float]


@dataclass(frozen=True)
class ModeEnsemble:
    """Weighted set of strictly monochromatic fields on one grid.

    Weights c_j lie in [0, 1] and sum to 1 (within 1e-12); all members
    share the grid and wavelength. The angular frequency omega is
    derived from the wavelength.
    """

    members: tuple[ComplexField, ...]
    weights: np.ndarray

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ValidationError("ensemble needs at least one member")
        grid = members[0].grid
        lam = members[0].wavelength
        for m in members[1:]:
            if m.grid != grid:
                raise GridMismatchError("ensemble members must share one grid")
            if m.wavelength != lam:
                raise ValidationError("ensemble members must share one wavelength")
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (len(members),):
            raise ValidationError(
                f"weights shape {w.shape} does not match member count {len(members)}"
            )
        if np.any(w < 0) or np.any(w > 1):
            raise ValidationError("weights must lie in [0, 1]")
        if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ValidationError(f"weights must sum to 1, got {w.sum()!r}")
        object.__setattr__(self, "members", members)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def grid(self) -> Grid2D:
        return self.members[0].grid

    @property
    def wavelength(self) -> float:
        return self.members[0].wavelength

    @property
    def omega(self) -> float:
        """Angular frequency 2*pi*c/lambda, rad/s."""
        return 2.0 * np.pi * SPEED_OF_LIGHT / self.wavelength

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class PolyState:
    """Polychromatic state: one ensemble per frequency bin plus detector efficiency.

    Bins must be strictly increasing in omega (i.e. strictly decreasing
    wavelength); efficiencies are dimensionless and nonnegative.
    """

    ensembles: tuple[ModeEnsemble, ...]
    detector_efficiency: np.ndarray

    def __post_init__(self):
        ens = tuple(self.ensembles)
        if not ens:
            raise ValidationError("need at least one frequency bin")
        eff = np.asarray(self.detector_efficiency, dtype=np.float64)
        if eff.shape != (len(ens),):
            raise ValidationError("one efficiency per frequency bin required")
        if np.any(eff < 0):
            raise ValidationError("detector efficiencies must be nonnegative")
        omegas = np.array([e.omega for e in ens])
        if np.any(np.diff(omegas) <= 0):
            raise ValidationError("frequency bins must be strictly increasing in omega")
        grid = ens[0].grid
        for e in ens[1:]:
            if e.grid != grid:
                raise GridMismatchError("all bins must share one grid")
        object.__setattr__(self, "ensembles", ens)
        eff.setflags(write=False)
        object.__setattr__(self, "detector_efficiency", eff)

    @property
    def omegas(self) -> np.ndarray:
        return np.array([e.omega for e in self.ensembles])


class SourceModel:
    """Base class for statistical source models realisable as mode ensembles."""


@dataclass(frozen=True)
class TiltedPlaneWaves(SourceModel):
    """Plane waves with propagation directions filling a narrow cone.

    Tilt directions are distributed uniformly over the solid-angle disc
    of the given half-angle. 'stratified' sampling (default) lays the
    tilts on a deterministic equal-area spiral, which converges to the
    uniform disc much faster than 'random' (seeded iid) sampling.
    Tilts are snapped to the grid's discrete Fourier lattice by default
    so each member is exactly periodic.
    """

    half_angle: float
    n_modes: int
    sampling: str = "stratified"
    seed: int = 0
    snap_to_grid: bool = True

    def __post_init__(self):
        if self.half_angle < 0 or self.half_angle >= 0.1:
            raise ValidationError("cone half-angle must be in [0, 0.1) rad (paraxial)")
        if self.n_modes < 1:
            raise ValidationError("need at least one mode")
        if self.sampling not in ("stratified", "random"):
            raise ValidationError(f"unknown sampling {self.sampling!r}")


@dataclass(frozen=True)
class RandomPhaseScreen(SourceModel):
    """Unit plane waves carrying Gaussian random phase screens.

    Each member is exp(i*phi_j) with phi_j a zero-mean Gaussian random
    field of Gaussian autocorrelation: rms excursion ``rms_phase`` and
    1/e correlation length ``correlation_length``. Deterministic under
    ``seed``.
    """

    correlation_length: float
    rms_phase: float
    n_modes: int
    seed: int = 0

    def __post_init__(self):
        if self.correlation_length <= 0:
            raise ValidationError("correlation length must be positive")
        if self.rms_phase < 0:
            raise ValidationError("rms phase must be nonnegative")
        if self.n_modes < 1:
            raise ValidationError("need at least one mode")


def _disc_points(n: int, sampling: str, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Unit-disc points, uniform in area; stratified uses the golden-angle spiral."""
    if sampling == "stratified":
        j = np.arange(n)
        radius = np.sqrt((j + 0.5) / n)
        azimuth = j * np.pi * (3.0 - np.sqrt(5.0))
    else:
        radius = np.sqrt(rng.uniform(size=n))
        azimuth = rng.uniform(0.0, 2.0 * np.pi, size=n)
    return radius * np.cos(azimuth), radius * np.sin(azimuth)


def _tilt_members(src: TiltedPlaneWaves, grid: Grid2D, wavelength: float, scale: float):
    k = 2.0 * np.pi / wavelength
    rng = np.random.default_rng(src.seed)
    ux, uy = _disc_points(src.n_modes, src.sampling, rng)
    qx = k * np.sin(src.half_angle * ux)
    qy = k * np.sin(src.half_angle * uy)
    if src.snap_to_grid:
        dkx = 2.0 * np.pi / grid.extent_x
        dky = 2.0 * np.pi / grid.extent_y
        qx = np.round(qx / dkx) * dkx
        qy = np.round(qy / dky) * dky
    x, y = grid.xy()
    members = []
    for j in range(src.n_modes):
        members.append(
            ComplexField(grid, scale * np.exp(1j * (qx[j] * x + qy[j] * y)), wavelength)
        )
    return members


def _screen_members(src: RandomPhaseScreen, grid: Grid2D, wavelength: float, scale: float):
    if src.rms_phase == 0.0:
        flat = scale * np.ones(grid.shape, dtype=np.complex128)
        return [ComplexField(grid, flat, wavelength) for _ in range(src.n_modes)]
    # Spectral synthesis: filter white noise with the root of the target
    # power spectrum S(k) = sigma^2 * pi * l^2 * exp(-k^2 l^2 / 4), the
    # transform of the Gaussian autocovariance sigma^2 exp(-r^2/l^2).
    length = src.correlation_length
    spectrum = (
        src.rms_phase**2 * np.pi * length**2 * np.exp(-grid.k_squared() * length**2 / 4.0)
    )
    filt = np.sqrt(spectrum / grid.pixel_area)
    rng = np.random.default_rng(src.seed)
    members = []
    for _ in range(src.n_modes):
        noise = rng.standard_normal(grid.shape)
        phase = np.fft.ifft2(filt * np.fft.fft2(noise)).real
        members.append(ComplexField(grid, scale * np.exp(1j * phase), wavelength))
    return members


def make_ensemble(
    src: SourceModel, grid: Grid2D, wavelength: float, amplitude: float = 1.0
) -> ModeEnsemble:
    """Realise a source model as an equal-weight mode ensemble.

    ``amplitude`` scales every member; the energy spectrum of a
    polychromatic source enters through this per-bin normalisation.
    """
    if isinstance(src, TiltedPlaneWaves):
        members = _tilt_members(src, grid, wavelength, amplitude)
    elif isinstance(src, RandomPhaseScreen):
        members = _screen_members(src, grid, wavelength, amplitude)
    else:
        raise ValidationError(f"unknown source model {type(src).__name__}")
    n = len(members)
    return ModeEnsemble(tuple(members), np.full(n, 1.0 / n))


def apply_pipeline(f: ComplexField, stages: Sequence[PipelineStage]) -> ComplexField:
    """Send a coherent field through an ordered list of imaging stages.

    Stages may be sample transmission functions, transfer functions,
    linear systems, or bare free-space distances in metres; the first
    listed acts first.
    """
    out = f
    for stage in stages:
        if isinstance(stage, TransmissionFunction):
            out = apply_sample(out, stage)
        elif isinstance(stage, TransferFunction):
            out = apply_transfer(out, stage)
        elif isinstance(stage, LinearSystem):
            out = apply_system(out, stage)
        elif isinstance(stage, (int, float)):
            out = fresnel_propagate(out, float(stage))
        else:
            raise ValidationError(f"unknown pipeline stage {type(stage).__name__}")
    return out


def propagate_ensemble(ensemble: ModeEnsemble, stages: Sequence[PipelineStage]) -> ModeEnsemble:
    """Propagate every member through the identical pipeline.

    Weights are unchanged; member norms may change through absorbing
    stages. A single-member ensemble reproduces the coherent computation
    exactly.
    """
    members = tuple(apply_pipeline(m, stages) for m in ensemble.members)
    return ModeEnsemble(members, ensemble.weights)


def spectral_density(ensemble: ModeEnsemble) -> IntensityImage:
    """Ensemble-averaged intensity S = sum_j c_j |psi_j|^2."""
    acc = np.zeros(ensemble.grid.shape, dtype=np.float64)
    for w, m in zip(ensemble.weights, ensemble.members):
        acc += w * (m.values.real**2 + m.values.imag**2)
    return IntensityImage(ensemble.grid, acc)


def spectral_density_stderr(ensemble: ModeEnsemble) -> np.ndarray:
    """Per-pixel Monte-Carlo standard error of the spectral density.

    Standard error of the weighted mean over members; lets callers judge
    whether their mode count N suffices instead of the toolkit choosing.
    """
    mean = spectral_density(ensemble).values
    var = np.zeros_like(mean)
    for w, m in zip(ensemble.weights, ensemble.members):
        intensity = m.values.real**2 + m.values.imag**2
        var += w * (intensity - mean) ** 2
    n_eff = 1.0 / np.sum(ensemble.weights**2)
    return np.sqrt(var / n_eff)


def cross_spectral_density(
    ensemble: ModeEnsemble, p1: tuple[int, int], p2: tuple[int, int]
) -> complex:
    """Two-point correlation W = sum_j c_j psi_j*(p1) psi_j(p2).

    Pixels are (iy, ix) indices. W(p, p) is the (real, nonnegative)
    spectral density at p, and W(p1, p2) = conj(W(p2, p1)).
    """
    grid = ensemble.grid
    for p in (p1, p2):
        if not (0 <= p[0] < grid.ny and 0 <= p[1] < grid.nx):
            raise ValidationError(f"pixel {p} outside grid {grid.ny}x{grid.nx}")
    acc = 0.0 + 0.0j
    for w, m in zip(ensemble.weights, ensemble.members):
        acc += w * np.conj(m.values[p1]) * m.values[p2]
    return complex(acc)


def detected_intensity(state: PolyState) -> IntensityImage:
    """Detector image: spectral density weighted by efficiency, integrated over omega.

    Uses trapezoidal quadrature across the frequency bins; a single bin
    reduces to the plain product S * efficiency (unit measure).
    """
    densities = [spectral_density(e).values for e in state.ensembles]
    if len(densities) == 1:
        return IntensityImage(state.ensembles[0].grid, densities[0] * state.detector_efficiency[0])
    stack = np.stack([s * a for s, a in zip(densities, state.detector_efficiency)], axis=0)
    integrated = trapezoid(stack, x=state.omegas, axis=0)
    return IntensityImage(state.ensembles[0].grid, integrated)


def _disc_kernel(grid: Grid2D, diameter: float, oversample: int = 8) -> np.ndarray:
    """Unit-mass uniform disc sampled on the grid, rim anti-aliased."""
    radius = diameter / 2.0
    x, y = grid.xy()
    r = np.sqrt(x * x + y * y)
    kernel = (r <= radius).astype(np.float64)
    band = max(grid.dx, grid.dy)
    rim = np.abs(r - radius) <= band
    if np.any(rim):
        iy, ix = np.nonzero(rim)
        offs = (np.arange(oversample) + 0.5) / oversample - 0.5
        sx = x[0, ix][:, None, None] + offs[None, :, None] * grid.dx
        sy = y[iy, 0][:, None, None] + offs[None, None, :] * grid.dy
        inside = (sx * sx + sy * sy) <= radius * radius
        kernel[iy, ix] = inside.mean(axis=(1, 2))
    total = kernel.sum()
    if total == 0.0:  # sub-pixel source: all mass in the centre pixel
        kernel[grid.ny // 2, grid.nx // 2] = 1.0
        total = 1.0
    return kernel / total


def _gaussian_kernel(grid: Grid2D, fwhm: float) -> np.ndarray:
    sigma = fwhm / (2.0 * np.sqrt(2.0 * np.log(2.0)))
    x, y = grid.xy()
    kernel = np.exp(-(x * x + y * y) / (2.0 * sigma * sigma))
    return kernel / kernel.sum()


def penumbral_blur(
    image: IntensityImage,
    source_diameter: float,
    r1: float,
    r2: float,
    shape: str = "disc",
) -> IntensityImage:
    """Geometric source-size blur of width D_eff = D * R2 / R1.

    Convolves the intensity with a unit-mass source-shaped kernel on the
    periodic domain: a uniform disc of diameter D_eff (default) or a
    Gaussian of FWHM D_eff. Total power is preserved. D = 0 or R2 = 0 is
    the identity.
    """
    if source_diameter < 0 or r1 <= 0 or r2 < 0:
        raise ValidationError("need source_diameter >= 0, R1 > 0, R2 >= 0")
    d_eff = source_diameter * r2 / r1
    if d_eff == 0.0:
        return IntensityImage(image.grid, image.values)
    if shape == "disc":
        kernel = _disc_kernel(image.grid, d_eff)
    elif shape == "gaussian":
        kernel = _gaussian_kernel(image.grid, d_eff)
    else:
        raise ValidationError(f"unknown source shape {shape!r}")
    blurred = np.fft.ifft2(np.fft.fft2(image.values) * np.fft.fft2(np.fft.ifftshift(kernel))).real
    return IntensityImage(image.grid, np.maximum(blurred, 0.0))
