import json

import numpy as np
import pytest

from xpci import (
    ChecksumError,
    ComplexField,
    GenericMap,
    Grid2D,
    IntensityImage,
    PhaseMap,
    RefractiveVolume,
    RockingCurve,
    SchemaError,
    Sinogram,
    TruncatedPayloadError,
    load_volume,
    read_raster,
    read_rocking_curve,
    read_sidecar,
    save_volume,
    write_raster,
    write_rocking_curve,
)

from conftest import random_field


@pytest.fixture
def grid():
    return Grid2D(16, 12, 1e-6, 2e-6)


class TestRasterRoundTrip:
    def test_complex_field_byte_identical(self, tmp_path, grid):
        f = random_field(grid, 1.5e-10, seed=0)
        base = write_raster(str(tmp_path / "field"), f, seed=42)
        first_payload = (tmp_path / "field.raw").read_bytes()
        back = read_raster(base)
        assert isinstance(back, ComplexField)
        assert back.wavelength == 1.5e-10
        assert back.grid == grid
        write_raster(str(tmp_path / "copy"), back)
        assert (tmp_path / "copy.raw").read_bytes() == first_payload

    def test_intensity_round_trip(self, tmp_path, grid):
        image = IntensityImage(grid, np.random.default_rng(1).uniform(0, 2, grid.shape))
        base = write_raster(str(tmp_path / "img"), image)
        back = read_raster(base)
        assert isinstance(back, IntensityImage)
        assert np.allclose(back.values, image.values, rtol=1e-7)

    def test_phase_round_trip(self, tmp_path, grid):
        phase = PhaseMap(grid, np.random.default_rng(2).uniform(-np.pi, np.pi, grid.shape))
        back = read_raster(write_raster(str(tmp_path / "ph"), phase))
        assert isinstance(back, PhaseMap)

    def test_generic_map_round_trip(self, tmp_path, grid):
        m = GenericMap(grid, np.random.default_rng(3).normal(size=grid.shape))
        back = read_raster(write_raster(str(tmp_path / "map"), m, modality="thickness_m"))
        assert isinstance(back, GenericMap)

    def test_sinogram_round_trip_slice_mode(self, tmp_path):
        sino = Sinogram(
            np.array([0.0, 0.7, 1.9]),
            np.random.default_rng(4).uniform(0, 1, (3, 24)),
            2e-6,
            "propagated_intensity",
            wavelength=1e-10,
            distance=0.05,
        )
        back = read_raster(write_raster(str(tmp_path / "sino"), sino))
        assert isinstance(back, Sinogram)
        assert back.modality == "propagated_intensity"
        assert back.distance == 0.05
        assert back.rows.shape == (3, 24)
        assert np.array_equal(back.angles, sino.angles)

    def test_sinogram_round_trip_stacked(self, tmp_path):
        sino = Sinogram(
            np.array([0.0, 0.7]),
            np.random.default_rng(5).uniform(0, 1, (2, 4, 8)),
            1e-6,
            "attenuation_log",
        )
        back = read_raster(write_raster(str(tmp_path / "sino3"), sino))
        assert back.rows.shape == (2, 4, 8)

    def test_payload_is_little_endian_float32_x_fastest(self, tmp_path, grid):
        image = IntensityImage(grid, np.arange(grid.ny * grid.nx, dtype=float).reshape(grid.shape))
        write_raster(str(tmp_path / "order"), image)
        raw = np.frombuffer((tmp_path / "order.raw").read_bytes(), dtype="<f4")
        assert raw[1] == 1.0  # x varies fastest
        assert raw[grid.nx] == grid.nx  # then y

    def test_seed_and_version_recorded(self, tmp_path, grid):
        f = random_field(grid, 1e-10, seed=6)
        write_raster(str(tmp_path / "meta"), f, seed=123)
        sidecar = read_sidecar(str(tmp_path / "meta"))
        assert sidecar["seed"] == 123
        assert sidecar["toolkit_version"]
        assert sidecar["lambda_m"] == 1e-10


class TestRasterErrors:
    def _write(self, tmp_path, grid):
        f = random_field(grid, 1e-10, seed=7)
        return write_raster(str(tmp_path / "f"), f)

    def test_truncated_payload_reports_counts(self, tmp_path, grid):
        base = self._write(tmp_path, grid)
        payload = (tmp_path / "f.raw").read_bytes()
        (tmp_path / "f.raw").write_bytes(payload[:-4])
        with pytest.raises(TruncatedPayloadError, match=f"{len(payload) - 4}.*{len(payload)}"):
            read_raster(base)

    def test_checksum_mismatch(self, tmp_path, grid):
        base = self._write(tmp_path, grid)
        payload = bytearray((tmp_path / "f.raw").read_bytes())
        payload[0] ^= 0xFF
        (tmp_path / "f.raw").write_bytes(bytes(payload))
        with pytest.raises(ChecksumError, match="sha256"):
            read_raster(base)

    def test_missing_lambda_for_complex(self, tmp_path, grid):
        base = self._write(tmp_path, grid)
        sidecar = json.loads((tmp_path / "f.json").read_text())
        sidecar["lambda_m"] = None
        (tmp_path / "f.json").write_text(json.dumps(sidecar))
        with pytest.raises(SchemaError, match="lambda_m"):
            read_raster(base)

    def test_missing_required_key(self, tmp_path, grid):
        base = self._write(tmp_path, grid)
        sidecar = json.loads((tmp_path / "f.json").read_text())
        del sidecar["dx_m"]
        (tmp_path / "f.json").write_text(json.dumps(sidecar))
        with pytest.raises(SchemaError, match="dx_m"):
            read_raster(base)

    def test_unknown_key_rejected(self, tmp_path, grid):
        base = self._write(tmp_path, grid)
        sidecar = json.loads((tmp_path / "f.json").read_text())
        sidecar["surprise"] = 1
        (tmp_path / "f.json").write_text(json.dumps(sidecar))
        with pytest.raises(SchemaError, match="surprise"):
            read_raster(base)

    def test_invalid_json(self, tmp_path, grid):
        base = self._write(tmp_path, grid)
        (tmp_path / "f.json").write_text("{not json")
        with pytest.raises(SchemaError, match="JSON"):
            read_raster(base)


class TestRockingCurveIO:
    def test_round_trip(self, tmp_path):
        theta = np.linspace(-1e-5, 1e-5, 33)
        curve = RockingCurve(theta, np.exp(-(theta**2) / (2e-11)))
        path = str(tmp_path / "curve.txt")
        write_rocking_curve(path, curve)
        back = read_rocking_curve(path)
        assert np.allclose(back.theta, curve.theta, rtol=1e-15)
        assert np.allclose(back.t, curve.t, rtol=1e-15)
        assert not back.periodic

    def test_periodic_flag_round_trip(self, tmp_path):
        theta = np.linspace(0, 1e-5, 16)
        curve = RockingCurve(theta, 0.5 + 0.3 * np.sin(2 * np.pi * theta / 1e-5), periodic=True)
        path = str(tmp_path / "per.txt")
        write_rocking_curve(path, curve)
        assert read_rocking_curve(path).periodic

    def test_comments_ignored(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text("# header\n0.0 0.1\n# mid comment\n1.0 0.9\n")
        curve = read_rocking_curve(str(path))
        assert curve.theta.tolist() == [0.0, 1.0]

    def test_bad_columns(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("0.0 0.1 0.5\n1.0 0.9 0.5\n")
        with pytest.raises(SchemaError, match="two columns"):
            read_rocking_curve(str(path))


class TestVolumeIO:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(8)
        vol = RefractiveVolume(
            rng.uniform(0, 1e-7, (4, 6, 8)),
            rng.uniform(0, 1e-9, (4, 6, 8)),
            1e-6,
            2e-6,
            3e-6,
        )
        path = str(tmp_path / "vol.npz")
        save_volume(path, vol)
        back = load_volume(path)
        assert np.array_equal(back.delta, vol.delta)
        assert np.array_equal(back.beta, vol.beta)
        assert (back.dz, back.dy, back.dx) == (1e-6, 2e-6, 3e-6)

    def test_missing_key(self, tmp_path):
        path = str(tmp_path / "bad.npz")
        np.savez(path, delta=np.zeros((2, 2, 2)))
        with pytest.raises(SchemaError, match="beta"):
            load_volume(path)
