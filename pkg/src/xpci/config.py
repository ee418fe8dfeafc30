"""Declarative experiment configuration: schema, validation, loading.

Configs are JSON objects. Validation is strict: unknown keys are
rejected and every error names the offending config path. All physical
quantities carry explicit SI units in their field names (``_m``,
``_rad``). See README for the full schema and examples.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import SchemaError
from .field import Grid2D

__all__ = ["ExperimentConfig", "load_config", "validate_config"]


def _type_name(value) -> str:
    return type(value).__name__


def _expect_object(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(f"{path}: expected an object, got {_type_name(value)}")
    return value


def _expect_list(value, path: str) -> list:
    if not isinstance(value, list):
        raise SchemaError(f"{path}: expected a list, got {_type_name(value)}")
    return value


def _expect_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{path}: expected a number, got {_type_name(value)}")
    return float(value)


def _expect_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"{path}: expected an integer, got {_type_name(value)}")
    return value


def _expect_str(value, path: str) -> str:
    if not isinstance(value, str):
        raise SchemaError(f"{path}: expected a string, got {_type_name(value)}")
    return value


def _check_keys(obj: dict, required: set[str], optional: set[str], path: str) -> None:
    missing = required - set(obj)
    if missing:
        raise SchemaError(f"{path}: missing required key(s) {sorted(missing)}")
    unknown = set(obj) - required - optional
    if unknown:
        raise SchemaError(f"{path}: unknown key(s) {sorted(unknown)}")


_SOURCE_SCHEMAS = {
    "plane": (set(), set()),
    "tilted_cone": ({"half_angle_rad", "n_modes"}, {"sampling", "snap_to_grid"}),
    "phase_screen": ({"correlation_length_m", "rms_phase_rad", "n_modes"}, set()),
}

_SAMPLE_SCHEMAS = {
    "sphere": ({"diameter_m", "delta", "beta"}, set()),
    "volume": ({"path"}, set()),
}

_STAGE_SCHEMAS = {
    "free_space": ({"distance_m"}, set()),
    "analyser": ({"curve_path"}, {"axis", "working_angle_rad"}),
    "custom": ({"raster_path"}, set()),
}

_RETRIEVAL_KEYS = ({"kind", "delta", "mu_per_m", "distance_m"}, {"flat_field", "regularization"})
_TOMOGRAPHY_KEYS = (
    {"n_angles", "modality"},
    {"distance_m", "noise_counts", "paganin", "quantity"},
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated in-memory form of a pipeline config."""

    seed: int
    grid: Grid2D
    spectrum: tuple[dict, ...]  # bins: wavelength_m, efficiency, amplitude
    source: dict
    sample: dict | None
    stages: tuple[dict, ...]
    blur: dict | None
    sweep: dict | None
    retrieval: dict | None
    tomography: dict | None
    output_prefix: str
    raw: dict = field(repr=False, default_factory=dict)


def validate_config(obj: dict) -> ExperimentConfig:
    """Validate a parsed JSON object into an ExperimentConfig.

    Raises SchemaError naming the offending config path on any problem.
    """
    root = _expect_object(obj, "config")
    _check_keys(
        root,
        {"seed", "grid", "spectrum", "source", "output_prefix"},
        {"sample", "stages", "blur", "sweep", "retrieval", "tomography"},
        "config",
    )
    seed = _expect_int(root["seed"], "config.seed")

    grid_obj = _expect_object(root["grid"], "config.grid")
    _check_keys(grid_obj, {"nx", "ny", "dx_m", "dy_m"}, set(), "config.grid")
    grid = Grid2D(
        _expect_int(grid_obj["nx"], "config.grid.nx"),
        _expect_int(grid_obj["ny"], "config.grid.ny"),
        _expect_number(grid_obj["dx_m"], "config.grid.dx_m"),
        _expect_number(grid_obj["dy_m"], "config.grid.dy_m"),
    )

    bins = _expect_list(root["spectrum"], "config.spectrum")
    if not bins:
        raise SchemaError("config.spectrum: needs at least one bin")
    spectrum = []
    for i, entry in enumerate(bins):
        path = f"config.spectrum[{i}]"
        entry = _expect_object(entry, path)
        _check_keys(entry, {"wavelength_m"}, {"efficiency", "amplitude"}, path)
        spectrum.append(
            {
                "wavelength_m": _expect_number(entry["wavelength_m"], path + ".wavelength_m"),
                "efficiency": _expect_number(entry.get("efficiency", 1.0), path + ".efficiency"),
                "amplitude": _expect_number(entry.get("amplitude", 1.0), path + ".amplitude"),
            }
        )
    lams = [b["wavelength_m"] for b in spectrum]
    if any(l2 >= l1 for l1, l2 in zip(lams, lams[1:])):
        raise SchemaError(
            "config.spectrum: bins must be strictly decreasing in wavelength "
            "(strictly increasing in omega)"
        )

    source = _expect_object(root["source"], "config.source")
    kind = _expect_str(source.get("kind", ""), "config.source.kind")
    if kind not in _SOURCE_SCHEMAS:
        raise SchemaError(
            f"config.source.kind: unknown source kind {kind!r} "
            f"(expected one of {sorted(_SOURCE_SCHEMAS)})"
        )
    required, optional = _SOURCE_SCHEMAS[kind]
    _check_keys(source, required | {"kind"}, optional, "config.source")

    sample = root.get("sample")
    if sample is not None:
        sample = _expect_object(sample, "config.sample")
        s_kind = _expect_str(sample.get("kind", ""), "config.sample.kind")
        if s_kind not in _SAMPLE_SCHEMAS:
            raise SchemaError(
                f"config.sample.kind: unknown sample kind {s_kind!r} "
                f"(expected one of {sorted(_SAMPLE_SCHEMAS)})"
            )
        required, optional = _SAMPLE_SCHEMAS[s_kind]
        _check_keys(sample, required | {"kind"}, optional, "config.sample")

    stages = []
    for i, stage in enumerate(_expect_list(root.get("stages", []), "config.stages")):
        path = f"config.stages[{i}]"
        stage = _expect_object(stage, path)
        st_kind = _expect_str(stage.get("kind", ""), path + ".kind")
        if st_kind not in _STAGE_SCHEMAS:
            raise SchemaError(
                f"{path}.kind: unknown stage kind {st_kind!r} "
                f"(expected one of {sorted(_STAGE_SCHEMAS)})"
            )
        required, optional = _STAGE_SCHEMAS[st_kind]
        _check_keys(stage, required | {"kind"}, optional, path)
        stages.append(stage)

    blur = root.get("blur")
    if blur is not None:
        blur = _expect_object(blur, "config.blur")
        _check_keys(blur, {"source_diameter_m", "r1_m", "r2_m"}, {"shape"}, "config.blur")

    sweep = root.get("sweep")
    if sweep is not None:
        sweep = _expect_object(sweep, "config.sweep")
        _check_keys(
            sweep,
            {"source_diameters_m", "distances_m", "r1_m", "diameter_m", "delta", "beta"},
            set(),
            "config.sweep",
        )
        _expect_list(sweep["source_diameters_m"], "config.sweep.source_diameters_m")
        _expect_list(sweep["distances_m"], "config.sweep.distances_m")

    retrieval = root.get("retrieval")
    if retrieval is not None:
        retrieval = _expect_object(retrieval, "config.retrieval")
        required, optional = _RETRIEVAL_KEYS
        _check_keys(retrieval, required, optional, "config.retrieval")
        if _expect_str(retrieval["kind"], "config.retrieval.kind") != "paganin":
            raise SchemaError(
                f"config.retrieval.kind: unknown retrieval kind {retrieval['kind']!r}"
            )

    tomography = root.get("tomography")
    if tomography is not None:
        tomography = _expect_object(tomography, "config.tomography")
        required, optional = _TOMOGRAPHY_KEYS
        _check_keys(tomography, required, optional, "config.tomography")
        if sample is None or sample.get("kind") != "volume":
            raise SchemaError(
                "config.tomography: requires config.sample of kind 'volume'"
            )

    prefix = _expect_str(root["output_prefix"], "config.output_prefix")
    return ExperimentConfig(
        seed=seed,
        grid=grid,
        spectrum=tuple(spectrum),
        source=source,
        sample=sample,
        stages=tuple(stages),
        blur=blur,
        sweep=sweep,
        retrieval=retrieval,
        tomography=tomography,
        output_prefix=prefix,
        raw=root,
    )


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            obj = json.load(handle)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"config {path} is not valid JSON: {exc}") from exc
    return validate_config(obj)
