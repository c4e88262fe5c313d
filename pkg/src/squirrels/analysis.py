"""State analysis: Wigner functions, temporal densities, pulse metrics.

The (energy, time) Wigner function of a sideband density matrix is defined
on the half-integer index comb

    W(j, t) = sum_m rho_{j+m, j-m} exp(-2 i m omega t),

where the sum runs over all m for which both j + m and j - m are integers
inside the window (integer m for integer j, half-odd m for half-integer j).
Hermiticity makes W real; its time marginal returns the populations and its
energy marginal returns the temporal density.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .forward import DEFAULT_WAVELENGTH, SPEED_OF_LIGHT
from .ladder import DensityMatrix

__all__ = [
    "OPTICAL_PERIOD",
    "OMEGA",
    "WignerGrid",
    "PulseMetrics",
    "wigner_from_density",
    "temporal_density",
    "density_period",
    "pulse_metrics",
    "state_distance",
]

OPTICAL_PERIOD = DEFAULT_WAVELENGTH / SPEED_OF_LIGHT      # one 800-nm cycle, ~2.67 fs
OMEGA = 2.0 * np.pi / OPTICAL_PERIOD


@dataclass
class WignerGrid:
    """Wigner function samples on (half-integer sideband index) x (time)."""

    energies: np.ndarray
    times: np.ndarray
    values: np.ndarray

    def time_marginal(self) -> np.ndarray:
        """Mean over the time axis; equals the populations on integer rows."""
        return self.values.mean(axis=1)

    def energy_marginal(self) -> np.ndarray:
        """Sum over the energy axis; equals the temporal density."""
        return self.values.sum(axis=0)


@dataclass
class PulseMetrics:
    baseline_fraction: float
    rms_width: float
    fwhm: float
    peak_time: float
    multi_peak: bool = False


def wigner_from_density(rho: DensityMatrix, n_time: int = 512) -> WignerGrid:
    """Wigner function of ``rho`` over one optical period.

    ``n_time`` uniform samples of [0, T).  For the discrete marginal
    identities to hold exactly, n_time must exceed twice the window span;
    the default is ample for any practical window.
    """
    w = rho.window
    if n_time <= 2 * (w.size - 1):
        raise ValueError(f"n_time={n_time} too small for window span {w.size - 1}")
    times = np.arange(n_time) / n_time * OPTICAL_PERIOD
    energies = np.arange(2 * w.n_min, 2 * w.n_max + 1) / 2.0
    values = np.zeros((len(energies), n_time))
    for i, j in enumerate(energies):
        two_j = int(round(2 * j))
        row = np.zeros(n_time, dtype=complex)
        # pairs (k, l) with k + l = 2j, both inside the window
        for k in range(max(w.n_min, two_j - w.n_max), min(w.n_max, two_j - w.n_min) + 1):
            l = two_j - k
            m = 0.5 * (k - l)
            row += rho.entries[w.position(k), w.position(l)] * np.exp(-2j * m * OMEGA * times)
        values[i] = np.real(row)
    return WignerGrid(energies, times, values)


def temporal_density(rho: DensityMatrix, times) -> np.ndarray:
    """n(t) = sum_kl rho_kl exp(-i (k - l) omega t); period-mean equals 1."""
    times = np.asarray(times, dtype=float)
    ns = rho.window.indices()
    V = np.exp(1j * np.outer(ns, OMEGA * times))
    return np.real(np.einsum("kt,kl,lt->t", V.conj(), rho.entries, V))


def density_period(rho: DensityMatrix, rel_tol: float = 1e-9) -> float:
    """Fundamental period of the temporal density of ``rho``.

    The density only contains harmonics at occupied-index differences, so
    a state on a strided lattice repeats faster than the optical period.
    """
    pops = rho.populations()
    occ = rho.window.indices()[pops > rel_tol * max(pops.max(), 1e-300)]
    if len(occ) < 2:
        return OPTICAL_PERIOD
    g = np.gcd.reduce(np.abs(np.diff(occ)).astype(int))
    return OPTICAL_PERIOD / g if g > 0 else OPTICAL_PERIOD


def pulse_metrics(density: np.ndarray, times: np.ndarray) -> PulseMetrics:
    """Attosecond pulse figures of a periodic temporal density.

    ``times`` must uniformly sample exactly one period of the signal.
    The baseline fraction is min/max.  The rms width uses circular first
    and second moments of the min-subtracted density, re-centered on the
    global maximum.  The FWHM is the width of the region around the main
    peak where the raw density exceeds half its maximum (linearly
    interpolated crossings); when several separated peaks exceed that
    level, ``multi_peak`` is set and the main peak alone is measured.
    """
    n = np.asarray(density, dtype=float)
    times = np.asarray(times, dtype=float)
    if n.shape != times.shape or n.ndim != 1:
        raise ValueError("density and times must be matching 1-d arrays")
    npts = len(n)
    dt = times[1] - times[0]
    period = npts * dt
    nmax = float(n.max())
    nmin = float(n.min())
    if nmax - nmin < 1e-12:
        raise ValueError("flat density: pulse metrics undefined")
    baseline = nmin / nmax

    q = n - nmin
    ip = int(np.argmax(q))
    tau = (np.arange(npts) - ip) * dt
    tau = (tau + period / 2.0) % period - period / 2.0
    wts = q / q.sum()
    mu = float(np.sum(wts * tau))
    rms = float(np.sqrt(np.sum(wts * (tau - mu) ** 2)))

    half = nmax / 2.0
    if nmin >= half:
        fwhm = period
        multi = False
    else:
        def crossing(direction):
            for step in range(1, npts):
                j = (ip + direction * step) % npts
                jp = (ip + direction * (step - 1)) % npts
                if n[j] < half <= n[jp]:
                    frac = (n[jp] - half) / (n[jp] - n[j])
                    return (step - 1 + frac) * dt
            return period / 2.0
        fwhm = crossing(+1) + crossing(-1)
        above = n >= half
        nseg = int(np.sum(above & ~np.roll(above, 1)))
        multi = nseg > 1

    return PulseMetrics(baseline_fraction=baseline, rms_width=rms, fwhm=float(fwhm),
                        peak_time=float(times[ip]), multi_peak=multi)


def state_distance(a: DensityMatrix, b: DensityMatrix) -> dict:
    """Frobenius distance, Uhlmann fidelity and purities of two states.

    When one argument is (numerically) rank one, the fidelity reduces to
    <psi| rho |psi>; otherwise the matrix-square-root formula
    (tr sqrt(sqrt(a) b sqrt(a)))^2 is evaluated by eigendecomposition.
    """
    if a.window.size != b.window.size:
        raise ValueError("states live on different windows")
    frob = float(np.linalg.norm(a.entries - b.entries))
    pa = a.purity()
    pb = b.purity()

    def _pure_vector(rho):
        vals, vecs = np.linalg.eigh(rho.entries)
        return vecs[:, -1]

    if pa > 1.0 - 1e-10:
        psi = _pure_vector(a)
        fid = float(np.real(psi.conj() @ b.entries @ psi))
    elif pb > 1.0 - 1e-10:
        psi = _pure_vector(b)
        fid = float(np.real(psi.conj() @ a.entries @ psi))
    else:
        # tr sqrt(sqrt(a) b sqrt(a)) equals the nuclear norm of
        # sqrt(a) sqrt(b), which is manifestly symmetric in (a, b)
        def _sqrt(rho):
            w, v = np.linalg.eigh(rho.entries)
            return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
        sv = np.linalg.svd(_sqrt(a) @ _sqrt(b), compute_uv=False)
        fid = float(np.sum(sv) ** 2)
    return {"frobenius": frob, "fidelity": fid, "purity_a": pa, "purity_b": pb}
