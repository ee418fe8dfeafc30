"""Ready-made experiment pipelines built from the core modules.

``run_pipeline`` executes a validated ExperimentConfig: it realises the
source as one mode ensemble per spectral bin, sends every member through
the sample and the imaging stages, and reduces to per-bin spectral
densities and the detected intensity (optionally penumbrally blurred).

``sphere_sweep`` is the classic source-size versus propagation-distance
study of a solid sphere: a grid of images over (source diameter D,
object-to-detector distance R2) at fixed R1, each reduced to an
edge-fringe verdict by ``detect_rim_fringe`` (propagation-based phase
contrast shows up as a bright/dark fringe pair at the projected rim,
and survives only while penumbral blurring D*R2/R1 stays below the
fringe scale).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coherence import (
    ModeEnsemble,
    RandomPhaseScreen,
    TiltedPlaneWaves,
    detected_intensity,
    make_ensemble,
    penumbral_blur,
    propagate_ensemble,
    spectral_density,
    PolyState,
)
from .config import ExperimentConfig
from .errors import ValidationError
from .field import ComplexField, Grid2D, IntensityImage, extract_intensity
from .propagation import Custom, analyser_transfer, fresnel_propagate
from .sample import (
    Material,
    apply_sample,
    effective_geometry,
    project,
    sphere_phantom,
    transmission_function,
)

__all__ = ["PipelineResult", "run_pipeline", "detect_rim_fringe", "sphere_sweep", "SweepCell"]


@dataclass(frozen=True)
class PipelineResult:
    spectral_densities: tuple[IntensityImage, ...]
    detected: IntensityImage
    ensembles: tuple[ModeEnsemble, ...]


def _build_source(cfg: ExperimentConfig, wavelength: float, amplitude: float) -> ModeEnsemble:
    src = cfg.source
    kind = src["kind"]
    if kind == "plane":
        model = TiltedPlaneWaves(half_angle=0.0, n_modes=1, seed=cfg.seed)
    elif kind == "tilted_cone":
        model = TiltedPlaneWaves(
            half_angle=src["half_angle_rad"],
            n_modes=src["n_modes"],
            sampling=src.get("sampling", "stratified"),
            seed=cfg.seed,
            snap_to_grid=src.get("snap_to_grid", True),
        )
    else:
        model = RandomPhaseScreen(
            correlation_length=src["correlation_length_m"],
            rms_phase=src["rms_phase_rad"],
            n_modes=src["n_modes"],
            seed=cfg.seed,
        )
    return make_ensemble(model, cfg.grid, wavelength, amplitude=amplitude)


def _build_sample_stage(cfg: ExperimentConfig, wavelength: float):
    sample = cfg.sample
    if sample is None:
        return None
    if sample["kind"] == "sphere":
        material = Material(sample["delta"], sample["beta"], wavelength)
        return transmission_function(sphere_phantom(cfg.grid, sample["diameter_m"], material))
    from .fileio import load_volume

    volume = load_volume(sample["path"])
    return transmission_function(project(volume, wavelength))


def _build_stages(cfg: ExperimentConfig, wavelength: float) -> list:
    from .fileio import read_raster, read_rocking_curve

    stages = []
    k = 2.0 * np.pi / wavelength
    for spec in cfg.stages:
        kind = spec["kind"]
        if kind == "free_space":
            stages.append(float(spec["distance_m"]))
        elif kind == "analyser":
            curve = read_rocking_curve(spec["curve_path"])
            axis = spec.get("axis", "x")
            theta0 = spec.get("working_angle_rad", 0.0)
            k_axis = cfg.grid.kx() if axis == "x" else cfg.grid.ky()
            # plane-wave component at transverse frequency q meets the
            # analyser at angle theta0 + q/k; amplitude is root transmission
            profile = np.sqrt(np.clip(curve(theta0 + k_axis / k), 0.0, 1.0))
            stages.append(analyser_transfer(profile, axis))
        else:
            raster = read_raster(spec["raster_path"])
            if not isinstance(raster, ComplexField):
                raise ValidationError(
                    f"custom stage raster {spec['raster_path']} must be a complex field"
                )
            stages.append(Custom(raster.grid, raster.values))
    return stages


def run_pipeline(cfg: ExperimentConfig) -> PipelineResult:
    """Execute a config: source ensembles through sample and stages to detection."""
    propagated = []
    for bin_spec in cfg.spectrum:
        lam = bin_spec["wavelength_m"]
        ensemble = _build_source(cfg, lam, bin_spec["amplitude"])
        stages = []
        sample_stage = _build_sample_stage(cfg, lam)
        if sample_stage is not None:
            stages.append(sample_stage)
        stages.extend(_build_stages(cfg, lam))
        propagated.append(propagate_ensemble(ensemble, stages))

    densities = tuple(spectral_density(e) for e in propagated)
    efficiencies = np.array([b["efficiency"] for b in cfg.spectrum])
    if len(propagated) == 1:
        detected = IntensityImage(cfg.grid, densities[0].values * efficiencies[0])
    else:
        detected = detected_intensity(PolyState(tuple(propagated), efficiencies))
    if cfg.blur is not None:
        detected = penumbral_blur(
            detected,
            cfg.blur["source_diameter_m"],
            cfg.blur["r1_m"],
            cfg.blur["r2_m"],
            shape=cfg.blur.get("shape", "disc"),
        )
    return PipelineResult(densities, detected, tuple(propagated))


def detect_rim_fringe(
    profile: np.ndarray,
    rim_index: int,
    window: int = 20,
    prominence: float = 1e-3,
    max_separation: int = 12,
) -> bool:
    """Decide whether an intensity profile shows an edge fringe at the rim.

    Looks inside ``profile[rim_index-window : rim_index+window]`` for a
    strict interior local maximum adjacent (within ``max_separation``
    samples) to a strict interior local minimum, with the maximum
    overshooting the far-field level and the pair's swing exceeding
    ``prominence`` of it. Smooth absorption edges (blurred or not) are
    monotone through the rim and yield no interior extrema.
    """
    segment = profile[rim_index - window : rim_index + window + 1]
    if segment.size < 5:
        raise ValidationError("fringe window does not fit inside the profile")
    interior = np.arange(1, segment.size - 1)
    is_max = (segment[interior] > segment[interior - 1]) & (segment[interior] > segment[interior + 1])
    is_min = (segment[interior] < segment[interior - 1]) & (segment[interior] < segment[interior + 1])
    maxima = interior[is_max]
    minima = interior[is_min]
    if maxima.size == 0 or minima.size == 0:
        return False
    far_field = float(np.median(profile[-max(profile.size // 16, 8):]))
    best_max = maxima[np.argmax(segment[maxima])]
    best_min = minima[np.argmin(segment[minima])]
    if segment[best_max] < far_field * (1.0 + prominence):
        return False
    if segment[best_max] - segment[best_min] < prominence * far_field:
        return False
    return abs(int(best_max) - int(best_min)) <= max_separation


@dataclass(frozen=True)
class SweepCell:
    source_diameter: float
    distance: float
    image: IntensityImage
    fringe_detected: bool


def sphere_sweep(
    grid: Grid2D,
    sphere_diameter: float,
    material: Material,
    source_diameters: tuple[float, ...],
    distances: tuple[float, ...],
    r1: float,
) -> list[SweepCell]:
    """Image a solid sphere over a (source diameter, distance R2) grid.

    For every cell the cone-beam geometry is reduced to its parallel
    equivalent (magnification M, effective distance R2/M), the exit wave
    is Fresnel-propagated, blurred by the effective source width, and
    the central row is tested for rim fringes. Contact images (R2 = 0)
    carry absorption contrast only.
    """
    projected = sphere_phantom(grid, sphere_diameter, material)
    beam = ComplexField(grid, np.ones(grid.shape, dtype=np.complex128), material.wavelength)
    exit_field = apply_sample(beam, transmission_function(projected))
    rim_index = grid.nx // 2 + int(round(sphere_diameter / 2.0 / grid.dx))

    cells = []
    for diameter in source_diameters:
        for r2 in distances:
            _, d_eff = effective_geometry(r1, r2)
            if d_eff > 0:
                image = extract_intensity(fresnel_propagate(exit_field, d_eff))
                image = penumbral_blur(image, diameter, r1, d_eff)
            else:
                image = extract_intensity(exit_field)
            fringe = detect_rim_fringe(image.values[grid.ny // 2], rim_index)
            cells.append(SweepCell(diameter, r2, image, fringe))
    return cells
