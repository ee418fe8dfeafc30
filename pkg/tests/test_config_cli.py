import json

import numpy as np
import pytest

from xpci import (
    ComplexField,
    GenericMap,
    Grid2D,
    IntensityImage,
    PhaseMap,
    RefractiveVolume,
    SchemaError,
    load_config,
    read_raster,
    save_volume,
    validate_config,
    write_raster,
)
from xpci.cli import main

from conftest import random_field


def minimal_config(prefix: str) -> dict:
    return {
        "seed": 7,
        "grid": {"nx": 32, "ny": 32, "dx_m": 1e-6, "dy_m": 1e-6},
        "spectrum": [{"wavelength_m": 1e-10}],
        "source": {"kind": "plane"},
        "output_prefix": prefix,
    }


class TestConfigValidation:
    def test_minimal_valid(self, tmp_path):
        cfg = validate_config(minimal_config(str(tmp_path / "out")))
        assert cfg.seed == 7
        assert cfg.grid == Grid2D(32, 32, 1e-6, 1e-6)

    def test_unknown_root_key_named(self, tmp_path):
        raw = minimal_config(str(tmp_path / "out"))
        raw["surprise"] = 1
        with pytest.raises(SchemaError, match="config.*surprise"):
            validate_config(raw)

    def test_missing_key_named(self, tmp_path):
        raw = minimal_config(str(tmp_path / "out"))
        del raw["seed"]
        with pytest.raises(SchemaError, match="seed"):
            validate_config(raw)

    def test_nested_path_in_error(self, tmp_path):
        raw = minimal_config(str(tmp_path / "out"))
        raw["grid"]["dx_m"] = "wide"
        with pytest.raises(SchemaError, match="config.grid.dx_m"):
            validate_config(raw)

    def test_unknown_source_kind(self, tmp_path):
        raw = minimal_config(str(tmp_path / "out"))
        raw["source"] = {"kind": "laser"}
        with pytest.raises(SchemaError, match="config.source.kind"):
            validate_config(raw)

    def test_stage_schema(self, tmp_path):
        raw = minimal_config(str(tmp_path / "out"))
        raw["stages"] = [{"kind": "free_space"}]
        with pytest.raises(SchemaError, match=r"config.stages\[0\]"):
            validate_config(raw)

    def test_spectrum_ordering(self, tmp_path):
        raw = minimal_config(str(tmp_path / "out"))
        raw["spectrum"] = [{"wavelength_m": 1e-10}, {"wavelength_m": 2e-10}]
        with pytest.raises(SchemaError, match="decreasing in wavelength"):
            validate_config(raw)

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(minimal_config(str(tmp_path / "out"))))
        assert load_config(str(path)).seed == 7

    def test_bad_json_reported(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("{")
        with pytest.raises(SchemaError, match="JSON"):
            load_config(str(path))


class TestCliValidity:
    def test_hand_value(self, capsys):
        rc = main(["validity", "--a_m", "1e-5", "--t_m", "1e-3", "--lambda_m", "1.5e-10"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "666.667" in out
        assert "valid" in out

    def test_bad_input_exit_code_two(self, capsys):
        rc = main(["validity", "--a_m", "-1", "--t_m", "1e-3", "--lambda_m", "1.5e-10"])
        assert rc == 2


class TestCliPropagate:
    def test_zero_distance_payload_byte_identical(self, tmp_path):
        grid = Grid2D(24, 24, 1e-6, 1e-6)
        f = random_field(grid, 1e-8, seed=1)
        src = str(tmp_path / "in")
        dst = str(tmp_path / "out")
        write_raster(src, f)
        rc = main(["propagate", "--input", src, "--distance_m", "0", "--output", dst])
        assert rc == 0
        assert (tmp_path / "in.raw").read_bytes() == (tmp_path / "out.raw").read_bytes()

    def test_manifest_written(self, tmp_path):
        grid = Grid2D(24, 24, 1e-6, 1e-6)
        write_raster(str(tmp_path / "in"), random_field(grid, 1e-8, seed=2))
        out = str(tmp_path / "out")
        main(["propagate", "--input", str(tmp_path / "in"), "--distance_m", "1e-5", "--output", out])
        manifest = json.loads((tmp_path / "out.manifest.json").read_text())
        assert manifest["command"] == "propagate"
        assert manifest["toolkit_version"]
        assert any(p.endswith("in.raw") for p in manifest["inputs"])

    def test_wrong_kind_exit_two(self, tmp_path):
        grid = Grid2D(24, 24, 1e-6, 1e-6)
        image = IntensityImage(grid, np.ones(grid.shape))
        write_raster(str(tmp_path / "img"), image)
        rc = main([
            "propagate", "--input", str(tmp_path / "img"), "--distance_m", "0",
            "--output", str(tmp_path / "out"),
        ])
        assert rc == 2


class TestCliRoundTrips:
    def test_transmit_then_retrieve_paganin(self, tmp_path):
        grid = Grid2D(64, 64, 2e-6, 2e-6)
        lam = 0.5e-10
        beam = ComplexField(grid, np.ones(grid.shape), lam)
        write_raster(str(tmp_path / "beam"), beam)
        rc = main([
            "transmit", "--input", str(tmp_path / "beam"),
            "--sphere-diameter-m", "6e-5", "--delta", "7.6e-7", "--beta", "2e-10",
            "--output", str(tmp_path / "exit"),
        ])
        assert rc == 0
        exit_field = read_raster(str(tmp_path / "exit"))
        intensity = IntensityImage(grid, np.abs(exit_field.values) ** 2)
        write_raster(str(tmp_path / "contact"), intensity)
        mu = 2 * (2 * np.pi / lam) * 2e-10
        rc = main([
            "retrieve-paganin", "--input", str(tmp_path / "contact"),
            "--delta", "7.6e-7", "--mu_per_m", str(mu), "--distance_m", "0",
            "--lambda_m", str(lam), "--output", str(tmp_path / "thickness"),
        ])
        assert rc == 0
        thickness = read_raster(str(tmp_path / "thickness"))
        assert isinstance(thickness, GenericMap)
        assert thickness.values.max() == pytest.approx(6e-5, rel=0.01)

    def test_multislice_empty_volume_matches_propagate(self, tmp_path):
        grid = Grid2D(32, 32, 1e-6, 1e-6)
        f = random_field(grid, 1e-8, seed=3)
        write_raster(str(tmp_path / "in"), f)
        vol = RefractiveVolume(np.zeros((4, 32, 32)), np.zeros((4, 32, 32)), 1e-5, 1e-6, 1e-6)
        save_volume(str(tmp_path / "vol.npz"), vol)
        main([
            "multislice", "--input", str(tmp_path / "in"), "--volume", str(tmp_path / "vol.npz"),
            "--output", str(tmp_path / "ms"),
        ])
        main([
            "propagate", "--input", str(tmp_path / "in"), "--distance_m", "4e-5",
            "--output", str(tmp_path / "fp"),
        ])
        a = read_raster(str(tmp_path / "ms"))
        b = read_raster(str(tmp_path / "fp"))
        assert np.allclose(a.values, b.values, rtol=1e-5, atol=1e-7)

    def test_tie_subcommand(self, tmp_path):
        grid = Grid2D(32, 32, 1e-6, 1e-6)
        write_raster(str(tmp_path / "i"), IntensityImage(grid, np.ones(grid.shape)))
        write_raster(str(tmp_path / "p"), PhaseMap(grid, np.zeros(grid.shape)))
        rc = main([
            "tie", "--intensity", str(tmp_path / "i"), "--phase", str(tmp_path / "p"),
            "--lambda_m", "1e-10", "--delta_z_m", "0.01",
            "--output", str(tmp_path / "out"), "--terms-output", str(tmp_path / "terms"),
        ])
        assert rc == 0
        out = read_raster(str(tmp_path / "out"))
        assert np.allclose(out.values, 1.0, atol=1e-6)

    def test_retrieve_schiske_and_exit_code_three(self, tmp_path):
        grid = Grid2D(32, 32, 1e-6, 1e-6)
        f = random_field(grid, 1e-8, seed=4)
        write_raster(str(tmp_path / "truth"), f)
        main(["propagate", "--input", str(tmp_path / "truth"), "--distance_m", "2e-5",
              "--output", str(tmp_path / "o1")])
        main(["propagate", "--input", str(tmp_path / "truth"), "--distance_m", "5e-5",
              "--output", str(tmp_path / "o2")])
        rc = main([
            "retrieve-schiske", "--inputs", str(tmp_path / "o1"), str(tmp_path / "o2"),
            "--distances-m", "2e-5", "5e-5", "--output", str(tmp_path / "rec"),
        ])
        assert rc == 0
        truth32 = read_raster(str(tmp_path / "truth"))
        rec = read_raster(str(tmp_path / "rec"))
        assert np.linalg.norm(rec.values - truth32.values) / np.linalg.norm(truth32.values) < 1e-6
        # mismatched list lengths: validation failure
        rc = main([
            "retrieve-schiske", "--inputs", str(tmp_path / "o1"),
            "--distances-m", "2e-5", "5e-5", "--output", str(tmp_path / "rec2"),
        ])
        assert rc == 2

    def test_gradient_retrieve_prints_moments(self, tmp_path, capsys):
        theta = np.linspace(-5e-5, 5e-5, 101)
        from xpci import AngularKernel, RockingCurve, convolution_forward, write_rocking_curve

        curve = RockingCurve(theta, np.exp(-(theta**2) / (2 * (1.2e-5) ** 2)))
        write_rocking_curve(str(tmp_path / "ref.txt"), curve)
        measured = convolution_forward(theta, curve.t, AngularKernel(0.9, 2e-6, 3e-6))
        write_rocking_curve(str(tmp_path / "meas.txt"), RockingCurve(theta, np.clip(measured, 0, 1)))
        rc = main([
            "gradient", "--mode", "retrieve", "--reference", str(tmp_path / "ref.txt"),
            "--measured", str(tmp_path / "meas.txt"), "--reg", "1e-9",
        ])
        out = capsys.readouterr().out
        assert rc == 0
        reported = float(out.splitlines()[0].split("=")[1])
        assert reported == pytest.approx(0.9, rel=0.01)

    def test_tomo_forward_then_recon(self, tmp_path):
        n = 64
        x = np.arange(n) - n // 2
        grid_x, grid_z = np.meshgrid(x, x, indexing="xy")
        mask = (grid_x**2 + grid_z**2) <= 8**2
        beta = np.zeros((n, 1, n))
        k = 2 * np.pi / 1e-10
        beta[:, 0, :] = np.where(mask, 100.0 / (2 * k), 0.0)
        vol = RefractiveVolume(np.zeros_like(beta), beta, 1e-6, 1e-6, 1e-6)
        save_volume(str(tmp_path / "vol.npz"), vol)
        rc = main([
            "tomo-forward", "--volume", str(tmp_path / "vol.npz"), "--n-angles", "90",
            "--modality", "attenuation_log", "--lambda_m", "1e-10",
            "--output", str(tmp_path / "sino"),
        ])
        assert rc == 0
        rc = main([
            "tomo-recon", "--input", str(tmp_path / "sino"), "--output", str(tmp_path / "rec"),
        ])
        assert rc == 0
        rec = read_raster(str(tmp_path / "rec"))
        interior = (grid_x**2 + grid_z**2) <= 5**2
        assert rec.values[interior].mean() == pytest.approx(100.0, rel=0.05)


class TestCliCoherenceAndDeterminism:
    def _config(self, tmp_path, prefix="run"):
        return {
            "seed": 99,
            "grid": {"nx": 32, "ny": 32, "dx_m": 1e-6, "dy_m": 1e-6},
            "spectrum": [{"wavelength_m": 1e-10}],
            "source": {"kind": "phase_screen", "correlation_length_m": 5e-6,
                        "rms_phase_rad": 0.4, "n_modes": 8},
            "stages": [{"kind": "free_space", "distance_m": 1e-3}],
            "output_prefix": str(tmp_path / prefix),
        }

    def test_coherence_run_and_reruns_byte_identical(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(self._config(tmp_path, "a/run")))
        rc = main(["coherence", "--config", str(cfg_path)])
        assert rc == 0
        first = (tmp_path / "a/run_detected.raw").read_bytes()
        rc = main(["coherence", "--config", str(cfg_path)])
        assert rc == 0
        assert (tmp_path / "a/run_detected.raw").read_bytes() == first

    def test_config_schema_failure_exit_two(self, tmp_path):
        raw = self._config(tmp_path)
        raw["unknown"] = True
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(raw))
        assert main(["coherence", "--config", str(cfg_path)]) == 2


class TestCliConfigRetrievalAndTomography:
    def test_retrieval_block_writes_thickness(self, tmp_path):
        config = {
            "seed": 3,
            "grid": {"nx": 64, "ny": 64, "dx_m": 2e-6, "dy_m": 2e-6},
            "spectrum": [{"wavelength_m": 0.5e-10}],
            "source": {"kind": "plane"},
            "sample": {"kind": "sphere", "diameter_m": 6e-5, "delta": 7.6e-7, "beta": 2e-10},
            "retrieval": {"kind": "paganin", "delta": 7.6e-7,
                           "mu_per_m": 2 * (2 * np.pi / 0.5e-10) * 2e-10, "distance_m": 0.0},
            "output_prefix": str(tmp_path / "ret" / "run"),
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(config))
        assert main(["coherence", "--config", str(cfg_path)]) == 0
        thickness = read_raster(str(tmp_path / "ret" / "run_thickness"))
        assert thickness.values.max() == pytest.approx(6e-5, rel=0.01)

    def test_tomography_block_requires_volume_sample(self, tmp_path):
        config = {
            "seed": 3,
            "grid": {"nx": 32, "ny": 32, "dx_m": 1e-6, "dy_m": 1e-6},
            "spectrum": [{"wavelength_m": 1e-10}],
            "source": {"kind": "plane"},
            "tomography": {"n_angles": 16, "modality": "attenuation_log"},
            "output_prefix": str(tmp_path / "t" / "run"),
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(config))
        assert main(["coherence", "--config", str(cfg_path)]) == 2

    def test_tomography_block_runs_forward_and_recon(self, tmp_path):
        n = 48
        x = np.arange(n) - n // 2
        gx, gz = np.meshgrid(x, x, indexing="xy")
        mask = (gx**2 + gz**2) <= 6**2
        k = 2 * np.pi / 1e-10
        beta = np.zeros((n, 1, n))
        beta[:, 0, :] = np.where(mask, 100.0 / (2 * k), 0.0)
        vol = RefractiveVolume(np.zeros_like(beta), beta, 1e-6, 1e-6, 1e-6)
        save_volume(str(tmp_path / "vol.npz"), vol)
        config = {
            "seed": 3,
            "grid": {"nx": n, "ny": 2, "dx_m": 1e-6, "dy_m": 1e-6},
            "spectrum": [{"wavelength_m": 1e-10}],
            "source": {"kind": "plane"},
            "sample": {"kind": "volume", "path": str(tmp_path / "vol.npz")},
            "tomography": {"n_angles": 60, "modality": "attenuation_log"},
            "output_prefix": str(tmp_path / "ct" / "run"),
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(config))
        assert main(["coherence", "--config", str(cfg_path)]) == 0
        recon = read_raster(str(tmp_path / "ct" / "run_slice"))
        interior = (gx**2 + gz**2) <= 4**2
        assert recon.values[interior].mean() == pytest.approx(100.0, rel=0.1)
