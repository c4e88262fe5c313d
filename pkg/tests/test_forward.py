import numpy as np
import pytest

from conftest import random_density
from oracles import fourier_amplitudes, relativistic_quadratic_phase
from squirrels import (
    Coupling,
    SidebandState,
    SidebandWindow,
    add_poisson_noise,
    apply_dispersion,
    bessel_j,
    chi_from_geometry,
    measurement_window,
    modulate,
    phase_jitter_ensemble,
    simulate_spectrogram,
    two_color_amplitudes,
)
from squirrels.forward import DispersionParams


class TestModulate:
    def test_zero_coupling_is_noop(self):
        w = SidebandWindow(-6, 6)
        st = SidebandState.zero_loss(w)
        out = modulate(st, Coupling(0.0), 1.2)
        assert np.allclose(out.amplitudes, st.amplitudes)

    def test_second_harmonic_populations(self):
        # |g| = 1.85 at the second harmonic: even sidebands carry
        # J_{N/2}(3.70)^2, odd ones stay empty
        w = SidebandWindow(-22, 22, 2)
        out = modulate(SidebandState.zero_loss(w), Coupling(1.85, 0.0, 2))
        out.validate(atol=1e-10)
        pops = out.populations()
        for i, n in enumerate(w.indices()):
            if n % 2:
                assert pops[i] == 0.0
            else:
                assert pops[i] == pytest.approx(bessel_j(n // 2, 3.70) ** 2, abs=1e-12)

    def test_harmonics_commute_on_states(self):
        w = SidebandWindow(-26, 26)
        st = SidebandState.zero_loss(w)
        g1 = Coupling(1.1, 0.3, 1)
        g2 = Coupling(0.8, 0.0, 2)
        a = modulate(modulate(st, g1, 0.4), g2, 0.4)
        b = modulate(modulate(st, g2, 0.4), g1, 0.4)
        assert np.max(np.abs(a.amplitudes - b.amplitudes)) < 1e-10


class TestTwoColor:
    def test_reduces_to_single_color(self):
        w = SidebandWindow(-16, 16)
        th = 0.77
        st = two_color_amplitudes(Coupling(1.3), Coupling(0.0, 0.0, 2), th, w)
        for i, n in enumerate(w.indices()):
            expected = np.exp(1j * n * th) * bessel_j(n, 2.6)
            assert abs(st.amplitudes[i] - expected) < 1e-12

    def test_against_fourier_oracle(self):
        # strongest two-color setting in use
        g1, g2, th = 2.20, 0.76, 0.3
        w = SidebandWindow(-24, 24)
        st = two_color_amplitudes(Coupling(g1), Coupling(g2, 0.0, 2), th, w)
        oracle = fourier_amplitudes(g1, g2, th, 24)
        assert np.max(np.abs(st.amplitudes - oracle)) < 1e-10

    def test_first_moment_vanishes(self, rng):
        w = SidebandWindow(-30, 30)
        for _ in range(10):
            st = two_color_amplitudes(Coupling(rng.uniform(0, 2.4)),
                                      Coupling(rng.uniform(0, 1.9), 0.0, 2),
                                      rng.uniform(0, 2 * np.pi), w)
            moment = np.sum(w.indices() * st.populations())
            assert abs(moment) < 1e-8

    def test_asymmetry_flips_with_phase(self):
        # gain/loss asymmetry reverses when the second-harmonic field phase
        # advances by pi (one half-cycle of the wedge scan); equivalently the
        # spectrum at theta mirrors the one at pi - theta
        w = SidebandWindow(-26, 26)
        g1 = Coupling(2.20)
        th = 0.25

        def third_moment(theta, phi2):
            st = two_color_amplitudes(g1, Coupling(0.76, phi2, 2), theta, w)
            return np.sum(w.indices() ** 3 * st.populations())

        m0 = third_moment(th, 0.0)
        assert abs(m0) > 1e-3
        assert third_moment(th, np.pi) == pytest.approx(-m0, rel=1e-8)
        assert third_moment(th + np.pi / 2, 0.0) == pytest.approx(-m0, rel=1e-8)

    def test_populations_have_period_pi(self):
        # theta -> theta + pi multiplies c_N by (-1)^N, so the spectrum of the
        # prepared state repeats every half fundamental cycle
        w = SidebandWindow(-24, 24)
        a = two_color_amplitudes(Coupling(2.2), Coupling(0.76, 0.0, 2), 0.4, w)
        b = two_color_amplitudes(Coupling(2.2), Coupling(0.76, 0.0, 2), 0.4 + np.pi, w)
        assert np.max(np.abs(a.populations() - b.populations())) < 1e-12

    def test_window_too_small(self):
        from squirrels.ladder import WindowError
        with pytest.raises(WindowError):
            two_color_amplitudes(Coupling(2.2), Coupling(0.76, 0.0, 2), 0.0,
                                 SidebandWindow(-3, 3))


class TestDispersion:
    def test_chi_zero_for_zero_drift(self):
        assert chi_from_geometry(0.0) == 0.0

    def test_chi_linear_in_distance(self):
        assert chi_from_geometry(3.0e-3) == pytest.approx(2 * chi_from_geometry(1.5e-3), rel=1e-14)

    def test_chi_reference_value(self):
        # 1.5 mm drift, 800 nm, 120 keV
        chi = chi_from_geometry(1.5e-3)
        assert chi == pytest.approx(0.04698916, abs=2e-8)
        # finite-difference oracle on the exact relativistic wavenumber
        oracle = relativistic_quadratic_phase(1.5e-3, 800e-9, 120e3)
        assert chi == pytest.approx(oracle, rel=1e-9)

    def test_params_resolution(self):
        assert DispersionParams(chi=0.12).resolve() == 0.12
        assert DispersionParams(d=1.5e-3).resolve() == pytest.approx(chi_from_geometry(1.5e-3))
        with pytest.raises(ValueError):
            DispersionParams().resolve()
        with pytest.raises(ValueError):
            chi_from_geometry(1e-3, kinetic_energy=-5.0)

    def test_identity_and_diagonal_invariance(self, rng):
        w = SidebandWindow(-6, 6)
        rho = random_density(w, rng)
        assert np.allclose(apply_dispersion(rho, 0.0).entries, rho.entries)
        out = apply_dispersion(rho, 0.31)
        assert np.allclose(out.populations(), rho.populations())
        assert abs(out.purity() - rho.purity()) < 1e-12


class TestSimulateSpectrogram:
    def test_zero_loss_state_is_phase_independent(self):
        w = SidebandWindow(-2, 2)
        rho = SidebandState.zero_loss(w).density_matrix()
        probe = Coupling(0.9)
        meas = measurement_window(w, probe)
        spec = simulate_spectrogram(rho, probe, np.linspace(0, 2 * np.pi, 16, endpoint=False), meas)
        spec.validate()
        expected = np.array([bessel_j(n, 1.8) ** 2 for n in meas.indices()])
        for j in range(16):
            assert np.max(np.abs(spec.populations[:, j] - expected)) < 1e-12

    def test_even_support_has_period_pi(self):
        w = SidebandWindow(-14, 14, 2)
        rho = modulate(SidebandState.zero_loss(w), Coupling(0.9, 0.0, 2)).density_matrix()
        probe = Coupling(1.7)
        meas = measurement_window(w, probe)
        thetas = np.array([0.3, 0.9, 0.3 + np.pi, 0.9 + np.pi])
        spec = simulate_spectrogram(rho, probe, thetas, meas)
        assert np.max(np.abs(spec.populations[:, 0] - spec.populations[:, 2])) < 1e-9
        assert np.max(np.abs(spec.populations[:, 1] - spec.populations[:, 3])) < 1e-9

    def test_integer_support_has_period_two_pi(self):
        w = SidebandWindow(-12, 12)
        rho = modulate(SidebandState.zero_loss(w), Coupling(0.8)).density_matrix()
        probe = Coupling(1.0)
        meas = measurement_window(w, probe)
        thetas = np.array([0.5, 0.5 + np.pi, 0.5 + 2 * np.pi])
        spec = simulate_spectrogram(rho, probe, thetas, meas)
        assert np.max(np.abs(spec.populations[:, 0] - spec.populations[:, 2])) < 1e-9
        # and generally NOT period pi
        assert np.max(np.abs(spec.populations[:, 0] - spec.populations[:, 1])) > 1e-4

    def test_columns_normalized_and_mean_conserved(self, rng):
        w = SidebandWindow(-10, 10, 2)
        rho = random_density(w, rng)
        probe = Coupling(1.3)
        meas = measurement_window(w, probe)
        spec = simulate_spectrogram(rho, probe, np.linspace(0, np.pi, 12, endpoint=False), meas)
        spec.validate(col_tol=1e-9)
        mean_in = rho.mean_momentum()
        for j in range(12):
            mean_out = np.sum(meas.indices() * spec.populations[:, j])
            assert abs(mean_out - mean_in) < 1e-8


class TestPoissonNoise:
    def test_rejects_bad_counts(self):
        w = SidebandWindow(-2, 2)
        rho = SidebandState.zero_loss(w).density_matrix()
        spec = simulate_spectrogram(rho, Coupling(0.4), [0.0, 0.5], measurement_window(w, Coupling(0.4)))
        with pytest.raises(ValueError):
            add_poisson_noise(spec, 0.0, 1)

    def test_deterministic_per_seed(self):
        w = SidebandWindow(-14, 14, 2)
        rho = modulate(SidebandState.zero_loss(w), Coupling(0.7, 0.0, 2)).density_matrix()
        probe = Coupling(1.1)
        spec = simulate_spectrogram(rho, probe, np.linspace(0, np.pi, 8, endpoint=False),
                                    measurement_window(w, probe))
        a = add_poisson_noise(spec, 1e4, seed=42)
        b = add_poisson_noise(spec, 1e4, seed=42)
        c = add_poisson_noise(spec, 1e4, seed=43)
        assert np.array_equal(a.populations, b.populations)
        assert not np.array_equal(a.populations, c.populations)

    def test_large_count_limit(self):
        w = SidebandWindow(-14, 14, 2)
        rho = modulate(SidebandState.zero_loss(w), Coupling(0.7, 0.0, 2)).density_matrix()
        probe = Coupling(1.1)
        spec = simulate_spectrogram(rho, probe, np.linspace(0, np.pi, 6, endpoint=False),
                                    measurement_window(w, probe))
        noisy = add_poisson_noise(spec, 1e9, seed=7)
        assert np.max(np.abs(noisy.populations - spec.populations)) < 1e-3

    def test_noise_scale_matches_poisson_statistics(self):
        # column-wise rms perturbation ~ sqrt(p / counts)
        w = SidebandWindow(-14, 14, 2)
        rho = modulate(SidebandState.zero_loss(w), Coupling(0.63, 0.0, 2)).density_matrix()
        probe = Coupling(2.16)
        meas = measurement_window(w, probe)
        spec = simulate_spectrogram(rho, probe, np.linspace(0, np.pi, 4, endpoint=False), meas)
        counts = 1e3
        p = spec.populations[:, 0]
        devs = []
        for seed in range(100):
            noisy = add_poisson_noise(spec, counts, seed=seed)
            devs.append(noisy.populations[:, 0] - p)
        rms = np.sqrt(np.mean(np.array(devs) ** 2, axis=0))
        expected = np.sqrt(p / counts)
        big = p > 0.02
        assert np.all(np.abs(rms[big] - expected[big]) < 0.35 * expected[big])


class TestPhaseJitterEnsemble:
    def test_zero_sigma_is_pure(self):
        rho = phase_jitter_ensemble(Coupling(1.0, 0.0, 2), 0.0, 0.0)
        assert rho.purity() == pytest.approx(1.0, abs=1e-10)
        rho.validate()

    def test_purity_decreases_with_sigma(self):
        purities = [phase_jitter_ensemble(Coupling(1.0, 0.0, 2), 0.1, s).purity()
                    for s in (0.0, 0.1, 0.19, 0.5)]
        assert all(a > b for a, b in zip(purities, purities[1:]))

    def test_matches_gaussian_damping(self):
        # Gauss-Hermite average equals the analytic characteristic function
        g = Coupling(3.95, 0.0, 1)
        sigma = 0.189
        rho = phase_jitter_ensemble(g, 0.0, sigma)
        w = rho.window
        st = modulate(SidebandState.zero_loss(w), g)
        ns = w.indices()
        pure = np.outer(st.amplitudes, st.amplitudes.conj())
        damp = np.exp(-0.5 * (sigma * (ns[:, None] - ns[None, :])) ** 2)
        assert np.max(np.abs(rho.entries - pure * damp)) < 1e-8

    def test_output_is_valid_density_matrix(self):
        for sigma in (0.0, 0.19, 0.6):
            rho = phase_jitter_ensemble(Coupling(1.85, 0.0, 2), 0.12, sigma)
            rho.validate()
