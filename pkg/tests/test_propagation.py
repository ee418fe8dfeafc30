import warnings

import numpy as np
import pytest

from xpci import (
    Analyser,
    ComplexField,
    Custom,
    FreeSpace,
    Grid2D,
    GridMismatchError,
    analyser_transfer,
    apply_system,
    apply_transfer,
    compose,
    extract_intensity,
    extract_phase,
    fresnel_propagate,
    total_power,
)

from conftest import random_field, rel_err

LAM = 10e-9  # keeps carrier phases k*d small enough for 1e-10 field identities


class TestFresnelPropagate:
    def test_zero_distance_exact_identity(self, grid64):
        f = random_field(grid64, LAM, seed=0)
        out = fresnel_propagate(f, 0.0)
        assert np.array_equal(out.values, f.values)

    def test_plane_wave_gets_carrier_phase(self, grid64):
        f = ComplexField(grid64, np.ones(grid64.shape), LAM)
        d = 5e-5
        out = fresnel_propagate(f, d)
        expected = np.exp(1j * f.k * d)
        assert np.allclose(out.values, expected, rtol=1e-12)
        assert np.allclose(extract_intensity(out).values, 1.0, rtol=1e-12)

    def test_gaussian_beam_width_law(self):
        g = Grid2D(256, 256, 1e-6, 1e-6)
        lam = 1e-10
        w0 = 12e-6
        x, y = g.xy()
        f = ComplexField(g, np.exp(-(x**2 + y**2) / w0**2), lam)
        d = 2 * w0**2 / lam  # N_F(w0) = 0.5, strongly diffracting
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            out = fresnel_propagate(f, d, pad=True)
        intensity = extract_intensity(out)
        w_true = w0 * np.sqrt(1 + (2 * d / (f.k * w0**2)) ** 2)
        tot = intensity.values.sum()
        r2 = ((x**2 + y**2) * intensity.values).sum() / tot
        w_meas = np.sqrt(2 * r2)
        assert abs(w_meas - w_true) / w_true < 0.01

    def test_power_conservation(self, grid64):
        f = random_field(grid64, LAM, seed=1)
        p0 = total_power(extract_intensity(f))
        for d in (1e-5, -3e-5, 7.3e-5):
            p1 = total_power(extract_intensity(fresnel_propagate(f, d)))
            assert abs(p1 - p0) / p0 < 1e-10

    def test_semigroup(self, grid64):
        f = random_field(grid64, LAM, seed=2)
        a = fresnel_propagate(fresnel_propagate(f, 3e-5), 7e-5)
        b = fresnel_propagate(f, 10e-5)
        assert rel_err(a.values, b.values) < 1e-10

    def test_two_sided_inverse(self, grid64):
        f = random_field(grid64, LAM, seed=3)
        back = fresnel_propagate(fresnel_propagate(f, 6e-5), -6e-5)
        assert rel_err(back.values, f.values) < 1e-10
        forward = fresnel_propagate(fresnel_propagate(f, -6e-5), 6e-5)
        assert rel_err(forward.values, f.values) < 1e-10

    def test_aliasing_guard_warns(self, grid64):
        f = random_field(grid64, LAM, seed=4)
        with pytest.warns(RuntimeWarning, match="quadratic-phase"):
            fresnel_propagate(f, 1.0)


class TestApplyTransfer:
    def test_unity_filter_is_identity(self, grid64):
        f = random_field(grid64, LAM, seed=5)
        T = Custom(grid64, np.ones(grid64.shape, dtype=complex))
        out = apply_transfer(f, T)
        assert rel_err(out.values, f.values) < 1e-12
        # the perfect imaging system yields no phase contrast
        assert rel_err(extract_intensity(out).values, extract_intensity(f).values) < 1e-12

    def test_freespace_matches_fresnel_bit_for_bit(self, grid64):
        f = random_field(grid64, LAM, seed=6)
        for d in (0.0, 4e-5, -2e-5):
            a = apply_transfer(f, FreeSpace(d))
            b = fresnel_propagate(f, d)
            assert np.array_equal(a.values, b.values)

    def test_spectral_laplacian_vs_finite_difference(self):
        # filter -(kx^2+ky^2) is spectral differentiation: F[lap f] = -k^2 F[f],
        # so the filtered field equals the transverse Laplacian of f
        g = Grid2D(256, 256, 1e-6, 1e-6)
        x, y = g.xy()
        sigma = 20e-6
        smooth = np.exp(-(x**2 + y**2) / (2 * sigma**2)).astype(complex)
        f = ComplexField(g, smooth, LAM)
        T = Custom(g, -(g.k_squared()).astype(complex))
        spectral = apply_transfer(f, T).values.real
        fd = (
            (np.roll(smooth.real, 1, 1) - 2 * smooth.real + np.roll(smooth.real, -1, 1)) / g.dx**2
            + (np.roll(smooth.real, 1, 0) - 2 * smooth.real + np.roll(smooth.real, -1, 0)) / g.dy**2
        )
        assert rel_err(spectral, fd) < 1e-3

    def test_custom_grid_mismatch_rejected(self, grid64, grid48x32):
        f = random_field(grid64, LAM, seed=7)
        T = Custom(grid48x32, np.ones(grid48x32.shape, dtype=complex))
        with pytest.raises(GridMismatchError):
            apply_transfer(f, T)

    def test_linearity(self, grid64):
        f = random_field(grid64, LAM, seed=8)
        g = random_field(grid64, LAM, seed=9)
        T = FreeSpace(3e-5)
        alpha, beta = 1.3 - 0.2j, -0.4 + 2.1j
        combined = apply_transfer(f.with_values(alpha * f.values + beta * g.values), T)
        separate = alpha * apply_transfer(f, T).values + beta * apply_transfer(g, T).values
        assert rel_err(combined.values, separate) < 1e-12

    def test_shift_covariance(self, grid64):
        f = random_field(grid64, LAM, seed=10)
        T = FreeSpace(2e-5)
        shifted_in = apply_transfer(f.with_values(np.roll(f.values, (5, -3), axis=(0, 1))), T)
        shifted_out = np.roll(apply_transfer(f, T).values, (5, -3), axis=(0, 1))
        assert rel_err(shifted_in.values, shifted_out) < 1e-12


class TestCompose:
    def test_two_freespace_stages_sum_distances(self, grid64):
        f = random_field(grid64, LAM, seed=11)
        system = compose([FreeSpace(1e-5), FreeSpace(2.5e-5)])
        a = apply_system(f, system)
        b = fresnel_propagate(f, 3.5e-5)
        assert rel_err(a.values, b.values) < 1e-10

    def test_inverse_pair_is_identity(self, grid64):
        f = random_field(grid64, LAM, seed=12)
        out = apply_system(f, compose([FreeSpace(4e-5), FreeSpace(-4e-5)]))
        assert rel_err(out.values, f.values) < 1e-10

    def test_empty_system_is_identity(self, grid64):
        f = random_field(grid64, LAM, seed=13)
        out = apply_system(f, compose([]))
        assert np.array_equal(out.values, f.values)

    def test_sequential_equals_product_filter(self, grid64):
        f = random_field(grid64, LAM, seed=14)
        rng = np.random.default_rng(20)
        t1 = Custom(grid64, rng.standard_normal(grid64.shape) + 1j * rng.standard_normal(grid64.shape))
        t2 = FreeSpace(2e-5)
        sequential = apply_system(f, compose([t1, t2]))
        product = Custom(
            grid64,
            t1.sample_on(grid64, LAM) * t2.sample_on(grid64, LAM),
        )
        fused = apply_transfer(f, product)
        assert rel_err(sequential.values, fused.values) < 1e-12


class TestAnalyser:
    def test_unity_profile_identity(self, grid64):
        f = random_field(grid64, LAM, seed=15)
        T = analyser_transfer(np.ones(grid64.nx))
        out = apply_transfer(f, T)
        assert rel_err(out.values, f.values) < 1e-12

    def test_tophat_bandlimits_x_only(self, grid64):
        f = random_field(grid64, LAM, seed=16)
        profile = (np.abs(grid64.kx()) < 0.4 * np.abs(grid64.kx()).max()).astype(complex)
        out = apply_transfer(f, analyser_transfer(profile, axis="x"))
        spectrum = np.fft.fft2(out.values)
        blocked = profile == 0
        assert np.abs(spectrum[:, blocked]).max() < 1e-12
        # power along ky within the passband is untouched
        in_spec = np.fft.fft2(f.values)
        passband = ~blocked
        assert rel_err(spectrum[:, passband], in_spec[:, passband]) < 1e-12

    def test_length_mismatch_rejected(self, grid64):
        f = random_field(grid64, LAM, seed=17)
        with pytest.raises(GridMismatchError):
            apply_transfer(f, analyser_transfer(np.ones(grid64.nx + 1)))

    def test_linear_ramp_gives_gradient_contrast(self):
        # A = g1 + g2*kx on a weak pure phase object: intensity contrast
        # tracks d(phase)/dx at first order
        g = Grid2D(256, 64, 1e-6, 1e-6)
        x, _ = g.xy()
        phase = 0.05 * np.sin(2 * np.pi * x / (64e-6)) * np.ones(g.shape)
        f = ComplexField(g, np.exp(1j * phase), LAM)
        g1, g2 = 1.0, 1e-8
        profile = g1 + g2 * g.kx()
        out = apply_transfer(f, analyser_transfer(profile.astype(complex)))
        contrast = (extract_intensity(out).values - g1**2) / g1**2
        dphase_dx = np.gradient(phase, g.dx, axis=1)
        predicted = 2 * (g2 / g1) * dphase_dx
        # first-order agreement over the interior
        assert rel_err(contrast[:, 8:-8], predicted[:, 8:-8]) < 0.02

    def test_axis_y_variant(self, grid48x32):
        f = random_field(grid48x32, LAM, seed=18)
        profile = np.exp(1j * np.linspace(0, 0.3, grid48x32.ny))
        out = apply_transfer(f, analyser_transfer(profile, axis="y"))
        expected = np.fft.ifft2(profile[:, None] * np.fft.fft2(f.values))
        assert rel_err(out.values, expected) < 1e-12


class TestGlobalPhaseRetained:
    def test_carrier_present_in_filter(self, grid64):
        d = 5e-5
        samples = FreeSpace(d).sample_on(grid64, LAM)
        k = 2 * np.pi / LAM
        assert samples[0, 0] == pytest.approx(np.exp(1j * k * d))
        assert np.allclose(np.abs(samples), 1.0, rtol=1e-12)

    def test_phase_level_identity_through_inverse(self, grid64):
        f = random_field(grid64, LAM, seed=19)
        round_trip = fresnel_propagate(fresnel_propagate(f, 2e-5), -2e-5)
        assert rel_err(
            extract_phase(round_trip).values, extract_phase(f).values
        ) < 1e-9
