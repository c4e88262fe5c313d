"""State preparation and measurement simulation.

Single- and two-color phase modulation, dispersive free-space propagation,
phase-resolved sideband spectrograms, Poisson count noise, and incoherent
phase-jitter ensembles.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .ladder import (
    Coupling,
    DensityMatrix,
    SidebandState,
    SidebandWindow,
    WindowError,
    bessel_j_array,
    coupling_unitary,
    minimal_halfwidth,
    pad_rungs,
    pad_window,
)

__all__ = [
    "Spectrogram",
    "DispersionParams",
    "modulate",
    "two_color_amplitudes",
    "chi_from_geometry",
    "apply_dispersion",
    "simulate_spectrogram",
    "measurement_window",
    "add_poisson_noise",
    "phase_jitter_ensemble",
]

SPEED_OF_LIGHT = 299792458.0          # m/s
HBAR = 1.054571817e-34                # J s
ELEMENTARY_CHARGE = 1.602176634e-19   # C
DEFAULT_WAVELENGTH = 800e-9           # m
ELECTRON_REST_ENERGY_EV = 510998.95   # eV


@dataclass
class Spectrogram:
    """Sideband populations versus relative phase.

    ``populations[i, j]`` is the population of sideband ``window.indices()[i]``
    at phase ``theta_grid[j]``.  ``counts_per_spectrum`` records the Poisson
    scale when noise has been applied (None for noiseless data).
    """

    populations: np.ndarray
    theta_grid: np.ndarray
    probe: Coupling
    window: SidebandWindow
    counts_per_spectrum: Optional[float] = None

    def __post_init__(self):
        self.populations = np.asarray(self.populations, dtype=float)
        self.theta_grid = np.asarray(self.theta_grid, dtype=float)
        if self.populations.shape != (self.window.size, len(self.theta_grid)):
            raise ValueError(
                f"populations shape {self.populations.shape} does not match "
                f"window size {self.window.size} x {len(self.theta_grid)} phases")

    def validate(self, col_tol: float = 1e-9) -> None:
        if np.any(self.populations < -1e-12):
            raise ValueError("negative populations")
        if len(self.theta_grid) > 1 and np.any(np.diff(self.theta_grid) <= 0):
            raise ValueError("theta grid not strictly increasing")
        if self.counts_per_spectrum is None:
            dev = np.max(np.abs(self.populations.sum(axis=0) - 1.0))
            if dev > col_tol:
                raise ValueError(f"noiseless column sums deviate from 1 by {dev:.3e}")

    def column(self, j: int) -> np.ndarray:
        return self.populations[:, j]

    def stacked(self) -> np.ndarray:
        """Populations raveled theta-block by theta-block (column-major)."""
        return self.populations.T.ravel()


@dataclass
class DispersionParams:
    """Quadratic spectral phase per squared sideband index.

    Either give ``chi`` directly, or give a drift geometry (propagation
    length ``d`` in meters, fundamental ``wavelength``, electron
    ``kinetic_energy`` in eV) from which chi is derived.
    """

    chi: Optional[float] = None
    d: Optional[float] = None
    wavelength: float = DEFAULT_WAVELENGTH
    kinetic_energy: float = 120e3
    rest_energy: float = ELECTRON_REST_ENERGY_EV

    def resolve(self) -> float:
        if self.chi is not None:
            return float(self.chi)
        if self.d is None:
            raise ValueError("DispersionParams needs either chi or a drift length d")
        return chi_from_geometry(self.d, self.wavelength, self.kinetic_energy, self.rest_energy)


def chi_from_geometry(d: float, wavelength: float = DEFAULT_WAVELENGTH,
                      kinetic_energy: float = 120e3,
                      rest_energy: float = ELECTRON_REST_ENERGY_EV) -> float:
    """Dispersion coefficient chi accrued over a drift of length ``d``.

    Expanding the relativistic wavenumber k(E) to second order around the
    central energy gives d^2k/dE^2 = -1/(hbar m gamma^3 v^3), so a sideband
    N photon quanta away accumulates the quadratic phase -chi N^2 with

        chi = d hbar omega^2 / (2 m gamma^3 v^3).

    Parameters are the drift length in meters, the fundamental wavelength in
    meters, and energies in eV.
    """
    if d < 0:
        raise ValueError("drift length must be >= 0")
    if kinetic_energy <= 0:
        raise ValueError("kinetic energy must be positive")
    omega = 2.0 * np.pi * SPEED_OF_LIGHT / wavelength
    gamma = 1.0 + kinetic_energy / rest_energy
    v = SPEED_OF_LIGHT * np.sqrt(1.0 - 1.0 / gamma**2)
    mass = rest_energy * ELEMENTARY_CHARGE / SPEED_OF_LIGHT**2
    return d * HBAR * omega**2 / (2.0 * mass * gamma**3 * v**3)


def modulate(state: SidebandState, g: Coupling, theta: float = 0.0) -> SidebandState:
    """Apply one phase-modulation coupling to a pure state.

    The computation runs on an internally padded window and is cropped back
    to the state's window; the norm is preserved to better than 1e-10 as
    long as the state's own window can hold the modulated ladder.
    """
    big = pad_window(state.window, g)
    amps = np.zeros(big.size, dtype=complex)
    amps[big.crop_slice(state.window)] = state.amplitudes
    U = coupling_unitary(g, theta, big)
    out = (U @ amps)[big.crop_slice(state.window)]
    lost = abs(np.sum(np.abs(state.amplitudes) ** 2) - np.sum(np.abs(out) ** 2))
    if lost > 1e-9:
        warnings.warn(f"modulation leaks {lost:.2e} probability past the state window; "
                      "enlarge the window", stacklevel=2)
    return SidebandState(state.window, out)


def _signed_bessel(table: np.ndarray, s: np.ndarray) -> np.ndarray:
    """J_s from a table of J_0..J_max using J_{-n} = (-1)^n J_n."""
    v = table[np.abs(s)]
    return np.where((s < 0) & (np.abs(s) % 2 == 1), -v, v)


def two_color_amplitudes(g1: Coupling, g2: Coupling, theta: float,
                         window: SidebandWindow) -> SidebandState:
    """Amplitudes after simultaneous fundamental and second-harmonic
    modulation of the zero-loss state.

    c_N = sum_m exp(i (N - 2m)(theta + arg g1)) J_{N-2m}(2|g1|)
                exp(i m arg g2) J_m(2|g2|)

    ``theta`` is the relative two-color phase; the second-harmonic phase
    arg g2 = 0 is the reference.
    """
    if g1.harmonic != 1 or g2.harmonic != 2:
        raise ValueError("two_color_amplitudes expects g1 at harmonic 1 and g2 at harmonic 2")
    half1 = pad_rungs(g1)
    half2 = pad_rungs(g2)
    big = max(window.n_max, -window.n_min) + half1 + 2 * half2
    c = _two_color_vector(g1.magnitude, g2.magnitude, theta + g1.phase, g2.phase,
                          big, half2)
    out = c[big + window.n_min: big + window.n_max + 1]
    lost = abs(1.0 - np.sum(np.abs(out) ** 2))
    if lost > 1e-10:
        raise WindowError(
            f"window [{window.n_min}, {window.n_max}] too small for the two-color state "
            f"(probability {lost:.2e} outside)")
    return SidebandState(window, out)


def _two_color_vector(m1: float, m2: float, th1: float, th2: float,
                      half: int, half2: int) -> np.ndarray:
    """c_N over N = -half..half for fundamental phase th1 and 2w phase th2."""
    ns = np.arange(-half, half + 1)
    ms = np.arange(-half2, half2 + 1)
    a = ns[:, None] - 2 * ms[None, :]
    j1 = _signed_bessel(bessel_j_array(int(np.abs(a).max()), 2.0 * m1), a)
    j2 = _signed_bessel(bessel_j_array(half2, 2.0 * m2), ms)
    return np.einsum("nm,nm,m,m->n",
                     j1, np.exp(1j * a * th1), j2, np.exp(1j * ms * th2))


def apply_dispersion(rho: DensityMatrix, chi: float) -> DensityMatrix:
    """Free-drift shear: rho_kl -> rho_kl exp(-i chi (k^2 - l^2)).

    Populations (the diagonal) are invariant; only coherences rotate.
    """
    n = rho.window.indices()
    phase = np.exp(-1j * chi * (n[:, None] ** 2 - n[None, :] ** 2))
    return DensityMatrix(rho.window, rho.entries * phase)


def measurement_window(state_window: SidebandWindow, probe: Coupling,
                       tol: float = 1e-12) -> SidebandWindow:
    """Window wide enough that probed populations of a state supported on
    ``state_window`` sum to 1 up to ``tol``."""
    extra = minimal_halfwidth(probe, tol=tol) + 2
    return SidebandWindow(state_window.n_min - extra, state_window.n_max + extra,
                          state_window.support_stride)


def simulate_spectrogram(rho: DensityMatrix, probe: Coupling, theta_grid,
                         window: SidebandWindow) -> Spectrogram:
    """Phase-resolved sideband populations of ``rho`` probed by ``probe``.

    Column j holds diag(U(theta_j) rho U(theta_j)^dagger) on ``window``.
    The matrix elements of the probe unitary are exact, so the only
    truncation effect is leakage past ``window``; use
    :func:`measurement_window` to make columns sum to 1 within 1e-9.
    """
    theta_grid = np.asarray(theta_grid, dtype=float)
    if theta_grid.size == 0:
        raise ValueError("empty theta grid")
    ls = window.indices()
    ks = rho.window.indices()
    diff = ls[:, None] - ks[None, :]
    h = probe.harmonic
    on = diff % h == 0
    s = diff // h
    js = bessel_j_array(int(np.abs(s).max()), 2.0 * probe.magnitude)
    base = np.where(on, _signed_bessel(js, s), 0.0)

    pops = np.empty((len(ls), len(theta_grid)))
    for j, th in enumerate(theta_grid):
        V = base * np.exp(1j * s * (th + probe.phase))
        pops[:, j] = np.real(np.einsum("lk,kq,lq->l", V, rho.entries, V.conj()))
    pops = np.clip(pops, 0.0, None)
    return Spectrogram(pops, theta_grid, probe, window)


def add_poisson_noise(s: Spectrogram, counts_per_spectrum: float, seed: int) -> Spectrogram:
    """Poisson count noise at a given expected total count per phase column.

    Each column is scaled to ``counts_per_spectrum`` expected counts,
    sampled bin-wise, and rescaled to unit sum.  Sampling is seeded per
    (seed, column), so parallel and serial evaluation agree bit for bit.
    """
    if counts_per_spectrum <= 0:
        raise ValueError("counts_per_spectrum must be positive")
    noisy = np.empty_like(s.populations)
    for j in range(s.populations.shape[1]):
        rng = np.random.default_rng([int(seed), j])
        lam = np.clip(s.populations[:, j], 0.0, None) * counts_per_spectrum
        counts = rng.poisson(lam).astype(float)
        total = counts.sum()
        noisy[:, j] = counts / total if total > 0 else counts
    return Spectrogram(noisy, s.theta_grid.copy(), s.probe, s.window,
                       counts_per_spectrum=counts_per_spectrum)


def phase_jitter_ensemble(g_prep: Coupling, chi: float, sigma_phase: float,
                          n_samples: int = 21,
                          window: Optional[SidebandWindow] = None) -> DensityMatrix:
    """Incoherent ensemble of preparations with a jittered mutual phase.

    The preparation phase offset delta ~ N(0, sigma_phase^2) (radians of
    fundamental optical phase, i.e. a timing jitter of sigma_phase / omega)
    multiplies the sideband amplitudes by exp(i N delta).  The Gaussian
    average is taken by ``n_samples``-point Gauss-Hermite quadrature, then
    the ensemble is dispersed by ``chi``.
    """
    if sigma_phase < 0:
        raise ValueError("sigma_phase must be >= 0")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if window is None:
        half = minimal_halfwidth(g_prep, tol=1e-14)
        stride = 2 if g_prep.harmonic == 2 else 1
        window = SidebandWindow(-half, half, stride)
    base = modulate(SidebandState.zero_loss(window), g_prep, theta=0.0)
    ns = window.indices()
    if sigma_phase == 0.0:
        rho = np.outer(base.amplitudes, base.amplitudes.conj())
    else:
        nodes, weights = np.polynomial.hermite.hermgauss(n_samples)
        weights = weights / np.sqrt(np.pi)
        rho = np.zeros((window.size, window.size), dtype=complex)
        for x, w in zip(nodes, weights):
            delta = np.sqrt(2.0) * sigma_phase * x
            amps = base.amplitudes * np.exp(1j * ns * delta)
            rho += w * np.outer(amps, amps.conj())
    rho /= np.real(np.trace(rho))
    return apply_dispersion(DensityMatrix(window, rho), chi)
