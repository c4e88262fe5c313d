import numpy as np
import pytest

from oracles import bessel_decimal
from squirrels import (
    Coupling,
    DensityMatrix,
    SidebandState,
    SidebandWindow,
    apply_unitary,
    bessel_j,
    coupling_unitary,
    pad_window,
)
from squirrels.ladder import WindowError, bessel_j_array


class TestBessel:
    def test_identity_at_zero(self):
        assert bessel_j(0, 0.0) == 1.0
        assert bessel_j(3, 0.0) == 0.0

    def test_parity_symmetry(self):
        for x in (0.3, 2.0, 4.4, 17.5):
            assert bessel_j(-1, x) == -bessel_j(1, x)
            assert bessel_j(-2, x) == bessel_j(2, x)

    def test_reference_values(self):
        # 4.40 = 2|g| for the strongest single-color coupling in use
        assert bessel_j(0, 4.40) == pytest.approx(-0.3422567900038855, abs=1e-12)
        assert bessel_j(1, 2.0) == pytest.approx(0.5767248077568734, abs=1e-12)

    def test_against_decimal_series(self):
        for x in (0.05, 0.7, 2.0, 4.4, 7.9, 10.0, 20.0, 41.5):
            for n in (0, 1, 2, 5, 11, 24):
                assert bessel_j(n, x) == pytest.approx(bessel_decimal(n, x), abs=1e-12)

    def test_negative_argument(self):
        for n in (0, 1, 4, 7):
            assert bessel_j(n, -3.3) == pytest.approx(((-1) ** n) * bessel_j(n, 3.3), abs=1e-14)

    def test_closure(self):
        for x in np.linspace(0.0, 20.0, 9):
            js = bessel_j_array(int(x) + 40, x)
            total = js[0] ** 2 + 2.0 * np.sum(js[1:] ** 2)
            assert abs(total - 1.0) < 1e-10


class TestCouplingUnitary:
    def test_zero_coupling_is_identity(self):
        w = SidebandWindow(-8, 8)
        U = coupling_unitary(Coupling(0.0), 0.7, w)
        assert np.allclose(U, np.eye(w.size))

    def test_single_entry(self):
        w = SidebandWindow(-12, 12)
        U = coupling_unitary(Coupling(1.0), 0.0, w)
        assert U[w.position(1), w.position(0)] == pytest.approx(0.5767248077568734, abs=1e-12)

    def test_harmonic_two_ladder(self):
        w = SidebandWindow(-14, 14, 2)
        U = coupling_unitary(Coupling(1.2, 0.0, 2), 0.4, w)
        diff = w.indices()[:, None] - w.indices()[None, :]
        assert np.all(U[diff % 2 == 1] == 0)

    @pytest.mark.parametrize("mag,harmonic", [(0.0, 1), (0.5, 1), (2.2, 1),
                                              (3.95, 1), (5.0, 1), (1.85, 2), (5.0, 2)])
    @pytest.mark.parametrize("theta", [0.0, 1.1, 5.5])
    def test_unitarity_on_padded_window(self, mag, harmonic, theta):
        g = Coupling(mag, 0.3, harmonic)
        inner = SidebandWindow(-3, 3)
        big = pad_window(inner, g)
        U = coupling_unitary(g, theta, big)
        gram = U.conj().T @ U
        sl = big.crop_slice(inner)
        block = gram[sl, sl]
        assert np.max(np.abs(block - np.eye(inner.size))) < 1e-10

    def test_rejects_small_window(self):
        with pytest.raises(WindowError):
            coupling_unitary(Coupling(5.0), 0.0, SidebandWindow(-4, 4))

    def test_commutation_of_harmonics(self):
        # fundamental and second-harmonic modulations commute
        inner = SidebandWindow(-4, 4)
        g1 = Coupling(1.3, 0.2, 1)
        g2 = Coupling(0.9, 0.0, 2)
        big = pad_window(inner, g1, g2)
        U1 = coupling_unitary(g1, 0.8, big)
        U2 = coupling_unitary(g2, 0.8, big)
        sl = big.crop_slice(inner)
        assert np.max(np.abs((U1 @ U2 - U2 @ U1)[sl, sl])) < 1e-10


class TestApplyUnitary:
    def test_identity_leaves_state(self, rng):
        w = SidebandWindow(-5, 5)
        from conftest import random_density
        rho = random_density(w, rng)
        out = apply_unitary(np.eye(w.size), rho)
        assert np.allclose(out.entries, rho.entries)

    def test_zero_loss_populations_are_bessel_squares(self):
        g = Coupling(1.1)
        inner = SidebandWindow(-6, 6)
        big = pad_window(inner, g)
        rho = SidebandState.zero_loss(big).density_matrix()
        out = apply_unitary(coupling_unitary(g, 0.3, big), rho)
        pops = out.populations()[big.crop_slice(inner)]
        expected = np.array([bessel_j(n, 2.2) ** 2 for n in inner.indices()])
        assert np.max(np.abs(pops - expected)) < 1e-12

    def test_purity_and_trace_preserved(self, rng):
        from conftest import random_density
        g = Coupling(2.16)
        inner = SidebandWindow(-4, 4)
        big = pad_window(inner, g)
        rho_inner = random_density(inner, rng, rank=2)
        ent = np.zeros((big.size, big.size), dtype=complex)
        sl = big.crop_slice(inner)
        ent[sl, sl] = rho_inner.entries
        rho = DensityMatrix(big, ent)
        out = apply_unitary(coupling_unitary(g, 1.0, big), rho)
        assert abs(out.trace() - 1.0) < 1e-10
        assert abs(out.purity() - rho.purity()) < 1e-10
        ev_in = np.linalg.eigvalsh(rho.entries)
        ev_out = np.linalg.eigvalsh(out.entries)
        assert np.max(np.abs(ev_in - ev_out)) < 1e-10

    def test_dimension_mismatch(self):
        rho = SidebandState.zero_loss(SidebandWindow(-2, 2)).density_matrix()
        with pytest.raises(ValueError):
            apply_unitary(np.eye(4), rho)


def test_mean_momentum_conserved_for_uniform_density_states(rng):
    # any preparation of |0> by phase modulations has a flat temporal
    # density, so further modulation transfers no mean momentum
    for _ in range(20):
        mag1 = rng.uniform(0.0, 2.5)
        mag2 = rng.uniform(0.0, 2.0)
        th = rng.uniform(0, 2 * np.pi)
        from squirrels import two_color_amplitudes
        w = SidebandWindow(-30, 30)
        state = two_color_amplitudes(Coupling(mag1), Coupling(mag2, 0.0, 2), th, w)
        rho = state.density_matrix()
        before = rho.mean_momentum()
        g = Coupling(rng.uniform(0.0, 2.0), rng.uniform(0, np.pi))
        big = pad_window(w, g)
        ent = np.zeros((big.size, big.size), dtype=complex)
        sl = big.crop_slice(w)
        ent[sl, sl] = rho.entries
        out = apply_unitary(coupling_unitary(g, rng.uniform(0, np.pi), big),
                            DensityMatrix(big, ent))
        assert abs(out.mean_momentum() - before) < 1e-8


def test_window_invariants():
    with pytest.raises(WindowError):
        SidebandWindow(1, 5)
    with pytest.raises(WindowError):
        SidebandWindow(-5, -1)
    with pytest.raises(WindowError):
        SidebandWindow(-5, 5, 3)
    w = SidebandWindow(-4, 6, 2)
    assert list(w.support_indices()) == [-4, -2, 0, 2, 4, 6]
    assert w.position(0) == 4
