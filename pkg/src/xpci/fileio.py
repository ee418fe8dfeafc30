"""Bit-exact file formats: raster payloads with text sidecars, curve files.

A raster is a pair of files sharing a base name: ``<base>.raw`` holds
little-endian IEEE-754 32-bit floats, row-major with x fastest (complex
data interleaved re, im), and ``<base>.json`` is a flat key-value text
sidecar recording the grid, dtype, wavelength where applicable, modality
tag, seed, toolkit version, payload byte count and SHA-256. Writes are
atomic (write-temp then rename); reads verify length and checksum and
report truncation, corruption and schema violations distinctly.

Rocking curves travel as two-column text (theta_rad, transmission) with
'#' comments; refractive volumes as numpy ``.npz`` archives.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from typing import NamedTuple

import numpy as np

from . import __version__
from .errors import ChecksumError, SchemaError, TruncatedPayloadError, ValidationError
from .field import ComplexField, Grid2D, IntensityImage, PhaseMap
from .gradient import RockingCurve
from .sample import RefractiveVolume
from .tomo import Sinogram

__all__ = [
    "GenericMap",
    "write_raster",
    "read_raster",
    "read_sidecar",
    "write_rocking_curve",
    "read_rocking_curve",
    "save_volume",
    "load_volume",
]

FORMAT_NAME = "xpci-raster"
FORMAT_VERSION = 1

_KINDS = ("complex_field", "intensity", "phase", "map", "sinogram")

# sidecar keys: name -> (required, type check)
_BASE_KEYS = {
    "format": str,
    "format_version": int,
    "kind": str,
    "nx": int,
    "ny": int,
    "dx_m": float,
    "dy_m": float,
    "dtype": str,
    "lambda_m": (float, type(None)),
    "modality": (str, type(None)),
    "seed": (int, type(None)),
    "toolkit_version": str,
    "payload_bytes": int,
    "sha256": str,
}
_SINOGRAM_KEYS = {
    "n_angles": int,
    "angles_rad": list,
    "distance_m": (float, type(None)),
    "stacked": bool,
}


class GenericMap(NamedTuple):
    """A plain real-valued 2D map with its grid (e.g. retrieved thickness)."""

    grid: Grid2D
    values: np.ndarray


def _base_path(path: str) -> str:
    for suffix in (".raw", ".json"):
        if path.endswith(suffix):
            return path[: -len(suffix)]
    return path


def _atomic_write(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _payload_and_meta(obj):
    if isinstance(obj, ComplexField):
        payload = np.ascontiguousarray(obj.values.astype(np.complex64)).tobytes()
        return payload, obj.grid, "complex_field", "complex64", obj.wavelength, None
    if isinstance(obj, IntensityImage):
        payload = np.ascontiguousarray(obj.values.astype(np.float32)).tobytes()
        return payload, obj.grid, "intensity", "real32", None, None
    if isinstance(obj, PhaseMap):
        payload = np.ascontiguousarray(obj.values.astype(np.float32)).tobytes()
        return payload, obj.grid, "phase", "real32", None, None
    if isinstance(obj, GenericMap):
        payload = np.ascontiguousarray(np.asarray(obj.values, dtype=np.float32)).tobytes()
        return payload, obj.grid, "map", "real32", None, None
    if isinstance(obj, Sinogram):
        payload = np.ascontiguousarray(obj.rows.astype(np.float32)).tobytes()
        ny = obj.rows.shape[1] if obj.stacked else 1
        grid = Grid2D(obj.rows.shape[-1], max(ny, 2), obj.pixel_size, obj.pixel_size)
        extras = {
            "n_angles": int(obj.n_angles),
            "angles_rad": [float(a) for a in obj.angles],
            "distance_m": None if obj.distance is None else float(obj.distance),
            "stacked": bool(obj.stacked),
            "_true_ny": ny,
        }
        return payload, grid, "sinogram", "real32", obj.wavelength, extras
    raise ValidationError(f"cannot serialise objects of type {type(obj).__name__}")


def write_raster(path: str, obj, seed: int | None = None, modality: str | None = None) -> str:
    """Write a field/image/map/sinogram as payload + sidecar; returns the base path."""
    base = _base_path(path)
    payload, grid, kind, dtype, lam, extras = _payload_and_meta(obj)
    if isinstance(obj, Sinogram):
        modality = obj.modality
        ny = extras.pop("_true_ny")
    else:
        ny = grid.ny
    sidecar = {
        "format": FORMAT_NAME,
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "nx": grid.nx,
        "ny": ny,
        "dx_m": grid.dx,
        "dy_m": grid.dy,
        "dtype": dtype,
        "lambda_m": lam,
        "modality": modality,
        "seed": seed,
        "toolkit_version": __version__,
        "payload_bytes": len(payload),
        "sha256": hashlib.sha256(payload).hexdigest(),
    }
    if extras:
        sidecar.update(extras)
    _atomic_write(base + ".raw", payload)
    _atomic_write(base + ".json", (json.dumps(sidecar, indent=1, sort_keys=True) + "\n").encode())
    return base


def _check_type(key: str, value, expected) -> None:
    if expected is float:
        expected = (int, float)
        if isinstance(value, bool):
            raise SchemaError(f"sidecar key '{key}' must be numeric, got bool")
    elif isinstance(expected, tuple) and float in expected:
        expected = tuple(t for t in expected if t is not float) + (int, float)
    if not isinstance(value, expected):
        raise SchemaError(
            f"sidecar key '{key}' has type {type(value).__name__}, expected {expected}"
        )


def read_sidecar(path: str) -> dict:
    """Parse and schema-validate a raster sidecar."""
    base = _base_path(path)
    try:
        with open(base + ".json", "r", encoding="utf-8") as handle:
            sidecar = json.load(handle)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"sidecar {base}.json is not valid JSON: {exc}") from exc
    if not isinstance(sidecar, dict):
        raise SchemaError("sidecar must be a JSON object")

    expected = dict(_BASE_KEYS)
    if sidecar.get("kind") == "sinogram":
        expected.update(_SINOGRAM_KEYS)
    for key, types in expected.items():
        if key not in sidecar:
            raise SchemaError(f"sidecar missing required key '{key}'")
        _check_type(key, sidecar[key], types)
    unknown = set(sidecar) - set(expected)
    if unknown:
        raise SchemaError(f"sidecar has unknown keys: {sorted(unknown)}")
    if sidecar["format"] != FORMAT_NAME or sidecar["format_version"] != FORMAT_VERSION:
        raise SchemaError(
            f"unsupported format {sidecar['format']!r} v{sidecar['format_version']}"
        )
    if sidecar["kind"] not in _KINDS:
        raise SchemaError(f"unknown raster kind {sidecar['kind']!r}")
    if sidecar["dtype"] not in ("real32", "complex64"):
        raise SchemaError(f"unknown dtype {sidecar['dtype']!r}")
    if sidecar["kind"] == "complex_field":
        if sidecar["dtype"] != "complex64":
            raise SchemaError("complex_field rasters must have dtype complex64")
        if sidecar["lambda_m"] is None:
            raise SchemaError("sidecar missing required key 'lambda_m' for a complex field")
    return sidecar


def read_raster(path: str):
    """Read a raster back into its typed object (byte-exact round trip)."""
    base = _base_path(path)
    sidecar = read_sidecar(base)
    with open(base + ".raw", "rb") as handle:
        payload = handle.read()
    if len(payload) != sidecar["payload_bytes"]:
        raise TruncatedPayloadError(
            f"payload {base}.raw has {len(payload)} bytes, sidecar declares "
            f"{sidecar['payload_bytes']}"
        )
    digest = hashlib.sha256(payload).hexdigest()
    if digest != sidecar["sha256"]:
        raise ChecksumError(
            f"payload {base}.raw sha256 {digest[:12]}... does not match sidecar "
            f"{sidecar['sha256'][:12]}..."
        )

    kind = sidecar["kind"]
    nx, ny = sidecar["nx"], sidecar["ny"]
    grid = Grid2D(nx, max(ny, 2) if kind == "sinogram" else ny, sidecar["dx_m"], sidecar["dy_m"])
    if kind == "sinogram":
        n_angles = sidecar["n_angles"]
        shape = (n_angles, ny, nx) if sidecar["stacked"] else (n_angles, nx)
        rows = np.frombuffer(payload, dtype="<f4").reshape(shape).astype(np.float64)
        return Sinogram(
            np.asarray(sidecar["angles_rad"], dtype=np.float64),
            rows,
            sidecar["dx_m"],
            sidecar["modality"],
            wavelength=sidecar["lambda_m"],
            distance=sidecar["distance_m"],
        )
    if kind == "complex_field":
        values = np.frombuffer(payload, dtype="<c8").reshape(ny, nx)
        return ComplexField(grid, values, sidecar["lambda_m"])
    values = np.frombuffer(payload, dtype="<f4").reshape(ny, nx).astype(np.float64)
    if kind == "intensity":
        return IntensityImage(grid, values)
    if kind == "phase":
        return PhaseMap(grid, values)
    return GenericMap(grid, values)


def write_rocking_curve(path: str, curve: RockingCurve) -> None:
    """Two-column text: theta (rad) and transmission, '#' comments."""
    header = "rocking curve: theta_rad  transmission" + (
        "  (periodic)" if curve.periodic else ""
    )
    data = np.column_stack([curve.theta, curve.t])
    buffer = "# " + header + "\n"
    buffer += "\n".join(f"{th:.17g} {tv:.17g}" for th, tv in data) + "\n"
    _atomic_write(path, buffer.encode())


def read_rocking_curve(path: str) -> RockingCurve:
    try:
        data = np.loadtxt(path, comments="#")
    except ValueError as exc:
        raise SchemaError(f"cannot parse rocking curve {path}: {exc}") from exc
    data = np.atleast_2d(data)
    if data.shape[1] != 2:
        raise SchemaError(f"rocking curve {path} must have two columns, got {data.shape[1]}")
    periodic = False
    with open(path, "r", encoding="utf-8") as handle:
        first = handle.readline()
        periodic = "(periodic)" in first
    return RockingCurve(data[:, 0], data[:, 1], periodic=periodic)


def save_volume(path: str, volume: RefractiveVolume) -> None:
    """Refractive volume as an .npz archive (delta, beta, pitches)."""
    np.savez(
        path,
        delta=volume.delta,
        beta=volume.beta,
        dz=volume.dz,
        dy=volume.dy,
        dx=volume.dx,
    )


def load_volume(path: str) -> RefractiveVolume:
    with np.load(path) as archive:
        for key in ("delta", "beta", "dz", "dy", "dx"):
            if key not in archive:
                raise SchemaError(f"volume archive {path} missing key '{key}'")
        return RefractiveVolume(
            archive["delta"],
            archive["beta"],
            float(archive["dz"]),
            float(archive["dy"]),
            float(archive["dx"]),
        )
