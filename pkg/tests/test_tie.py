import warnings

import numpy as np
import pytest

from xpci import (
    Grid2D,
    GridMismatchError,
    IntensityImage,
    PhaseMap,
    compose_field,
    extract_intensity,
    fresnel_propagate,
    tie_forward,
    tie_terms,
)

from conftest import rel_err

LAM = 1e-10
K = 2 * np.pi / LAM


class TestTieTerms:
    def test_flat_wave_all_zero(self, grid64):
        terms = tie_terms(
            IntensityImage(grid64, np.full(grid64.shape, 2.0)),
            PhaseMap(grid64, np.full(grid64.shape, 0.3)),
            K,
        )
        assert np.allclose(terms.gradient_term, 0.0, atol=1e-12)
        assert np.allclose(terms.laplacian_term, 0.0, atol=1e-12)
        assert np.allclose(terms.dIdz, 0.0, atol=1e-20)

    def test_tilted_plane_wave_no_change(self, grid64):
        # linear phase ramp: gradient and Laplacian terms both vanish for
        # uniform intensity (use fd mode; a ramp is not periodic)
        x, _ = grid64.xy()
        ramp = 1e3 * x * np.ones(grid64.shape)
        terms = tie_terms(
            IntensityImage(grid64, np.ones(grid64.shape)),
            PhaseMap(grid64, ramp),
            K,
            method="fd",
        )
        inner = np.s_[2:-2, 2:-2]
        assert np.all(terms.gradient_term[inner] == 0.0)
        # laplacian term is zero up to rounding amplified by 1/pitch^2
        assert np.allclose(terms.laplacian_term[inner], 0.0, atol=1e-4)
        assert np.allclose(terms.dIdz[inner], 0.0, atol=1e-14)

    def test_converging_parabola_sign_and_magnitude(self):
        # phase -c(x^2+y^2)/2 has Laplacian -2c exactly under central
        # differences, so dIdz = +2*I0*c/k away from the wrap seam
        g = Grid2D(128, 128, 1e-6, 1e-6)
        x, y = g.xy()
        c = 5e4
        i0 = 2.0
        terms = tie_terms(
            IntensityImage(g, np.full(g.shape, i0)),
            PhaseMap(g, -c * (x**2 + y**2) / 2.0),
            K,
            method="fd",
        )
        expected = 2 * i0 * c / K
        centre = terms.dIdz[32:96, 32:96]
        assert np.allclose(centre, expected, rtol=1e-6)
        assert expected > 0

    def test_diverging_parabola_negative(self):
        g = Grid2D(64, 64, 1e-6, 1e-6)
        x, y = g.xy()
        terms = tie_terms(
            IntensityImage(g, np.ones(g.shape)),
            PhaseMap(g, +3e4 * (x**2 + y**2) / 2.0),
            K,
            method="fd",
        )
        assert np.all(terms.dIdz[16:48, 16:48] < 0)

    def test_construction_identity(self, grid64):
        rng = np.random.default_rng(0)
        terms = tie_terms(
            IntensityImage(grid64, rng.uniform(0.5, 2.0, grid64.shape)),
            PhaseMap(grid64, rng.uniform(-0.5, 0.5, grid64.shape)),
            K,
        )
        assert np.array_equal(
            terms.dIdz, -(terms.gradient_term + terms.laplacian_term) / K
        )

    def test_global_power_conservation(self):
        g = Grid2D(96, 96, 1e-6, 1e-6)
        rng = np.random.default_rng(1)
        x, y = g.xy()
        intensity = 1.0 + 0.3 * np.cos(2 * np.pi * x / (32e-6)) * np.cos(2 * np.pi * y / (24e-6))
        phase = 0.5 * np.sin(2 * np.pi * (x + y) / (48e-6))
        for method in ("spectral", "fd"):
            terms = tie_terms(
                IntensityImage(g, intensity * np.ones(g.shape)),
                PhaseMap(g, phase * np.ones(g.shape)),
                K,
                method=method,
            )
            total = abs(terms.dIdz.sum()) / np.abs(terms.dIdz).sum()
            assert total < 1e-9

    def test_grid_mismatch(self, grid64, grid48x32):
        with pytest.raises(GridMismatchError):
            tie_terms(
                IntensityImage(grid64, np.ones(grid64.shape)),
                PhaseMap(grid48x32, np.zeros(grid48x32.shape)),
                K,
            )


def _smooth_scene(g):
    x, y = g.xy()
    sigma = 12e-6
    phase = 1.0 * np.exp(-(x**2 + y**2) / (2 * sigma**2))
    intensity = np.full(g.shape, 2.0)
    return IntensityImage(g, intensity), PhaseMap(g, phase)


class TestTieForward:
    def test_zero_step_identity(self, grid64):
        I = IntensityImage(grid64, np.random.default_rng(2).uniform(0.5, 2, grid64.shape))
        P = PhaseMap(grid64, np.random.default_rng(3).uniform(-1, 1, grid64.shape))
        out = tie_forward(I, P, K, 0.0)
        assert np.allclose(out.values, I.values, rtol=1e-15)

    def test_pure_absorber_identity(self, grid64):
        rng = np.random.default_rng(4)
        I = IntensityImage(grid64, rng.uniform(0.5, 2, grid64.shape))
        P = PhaseMap(grid64, np.full(grid64.shape, 0.7))
        out = tie_forward(I, P, K, 1e-2)
        assert rel_err(out.values, I.values) < 1e-12

    def test_matches_fresnel_in_validity_regime(self):
        g = Grid2D(256, 256, 1e-6, 1e-6)
        I, P = _smooth_scene(g)
        dz = 2e-3  # N_F(12um) = 720 >= 50
        f = compose_field(I, P, LAM)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            reference = extract_intensity(fresnel_propagate(f, dz)).values
        predicted = tie_forward(I, P, K, dz).values
        assert rel_err(predicted, reference) < 0.02

    def test_residual_shrinks_with_dz(self):
        g = Grid2D(128, 128, 1e-6, 1e-6)
        I, P = _smooth_scene(g)
        residuals = []
        for dz in (4e-3, 2e-3, 1e-3):
            f = compose_field(I, P, LAM)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                reference = extract_intensity(fresnel_propagate(f, dz)).values
            predicted = tie_forward(I, P, K, dz).values
            residuals.append(np.linalg.norm(predicted - reference))
        assert residuals[0] > residuals[1] > residuals[2]

    def test_negative_clamp_warns(self):
        g = Grid2D(64, 64, 1e-6, 1e-6)
        x, y = g.xy()
        I = IntensityImage(g, np.full(g.shape, 1e-3))
        P = PhaseMap(g, 5.0 * np.exp(-(x**2 + y**2) / (2 * (4e-6) ** 2)))
        with pytest.warns(RuntimeWarning, match="clamped"):
            out = tie_forward(I, P, K, 5.0)
        assert np.all(out.values >= 0)
