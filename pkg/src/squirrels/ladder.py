"""Discrete momentum-ladder primitives.

A free electron traversing an optical near-field exchanges photon quanta
with the light field, so its longitudinal momentum lives on a discrete
ladder of sidebands indexed by an integer N (positive for energy gain,
negative for loss; N = 0 is the zero-loss line).  This module provides the
index bookkeeping (windows, support lattices), Bessel functions of the
first kind, and the phase-modulation unitary that a single quasi-
monochromatic coupling imprints on that ladder.

All operations are pure functions on immutable values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SidebandWindow",
    "Coupling",
    "SidebandState",
    "DensityMatrix",
    "bessel_j",
    "bessel_j_array",
    "coupling_unitary",
    "apply_unitary",
    "pad_rungs",
    "pad_window",
    "ladder_halfwidth",
    "minimal_halfwidth",
]


class WindowError(ValueError):
    """Raised when a sideband window cannot hold the requested ladder."""


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SidebandWindow:
    """Contiguous range of integer sideband indices [n_min, n_max].

    ``support_stride = 2`` marks windows whose occupied states live on the
    even sublattice only (a second-harmonic preparation from the zero-loss
    state can reach even indices only); the probe unitary still connects
    all integer indices.
    """

    n_min: int
    n_max: int
    support_stride: int = 1

    def __post_init__(self):
        if not (self.n_min <= 0 <= self.n_max):
            raise WindowError(f"window [{self.n_min}, {self.n_max}] must contain index 0")
        if self.support_stride not in (1, 2):
            raise WindowError(f"support_stride must be 1 or 2, got {self.support_stride}")

    @property
    def size(self) -> int:
        return self.n_max - self.n_min + 1

    def indices(self) -> np.ndarray:
        """All integer sideband indices in the window."""
        return np.arange(self.n_min, self.n_max + 1)

    def support_indices(self) -> np.ndarray:
        """Indices on the occupation lattice (every ``support_stride``-th)."""
        idx = self.indices()
        return idx[idx % self.support_stride == 0]

    def position(self, n: int) -> int:
        """Array position of sideband index ``n``."""
        if not self.n_min <= n <= self.n_max:
            raise WindowError(f"index {n} outside window [{self.n_min}, {self.n_max}]")
        return n - self.n_min

    def padded(self, rungs: int) -> "SidebandWindow":
        """Window enlarged symmetrically by ``rungs`` indices on each side."""
        return SidebandWindow(self.n_min - rungs, self.n_max + rungs, self.support_stride)

    def crop_slice(self, inner: "SidebandWindow") -> slice:
        """Slice selecting ``inner`` from an array indexed by this window."""
        return slice(self.position(inner.n_min), self.position(inner.n_max) + 1)


@dataclass(frozen=True)
class Coupling:
    """One electron-light coupling: dimensionless strength |g|, phase arg g.

    ``harmonic`` is the sideband spacing of the interaction in units of the
    fundamental photon energy (1 for the fundamental, 2 for its second
    harmonic).
    """

    magnitude: float
    phase: float = 0.0
    harmonic: int = 1

    def __post_init__(self):
        if self.magnitude < 0:
            raise ValueError(f"coupling magnitude must be >= 0, got {self.magnitude}")
        if self.harmonic not in (1, 2):
            raise ValueError(f"harmonic must be 1 or 2, got {self.harmonic}")


@dataclass
class SidebandState:
    """Pure state: complex amplitudes over the window's integer indices."""

    window: SidebandWindow
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.window.size,):
            raise ValueError(
                f"amplitude vector has shape {self.amplitudes.shape}, window needs ({self.window.size},)")

    @classmethod
    def zero_loss(cls, window: SidebandWindow) -> "SidebandState":
        """The unmodulated electron |0>."""
        amps = np.zeros(window.size, dtype=complex)
        amps[window.position(0)] = 1.0
        return cls(window, amps)

    def norm_error(self) -> float:
        return abs(np.sum(np.abs(self.amplitudes) ** 2) - 1.0)

    def validate(self, atol: float = 1e-10) -> None:
        if self.norm_error() > atol:
            raise ValueError(f"state norm deviates from 1 by {self.norm_error():.3e}")

    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(self.window, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass
class DensityMatrix:
    """Hermitian trace-one PSD matrix over a sideband window."""

    window: SidebandWindow
    entries: np.ndarray

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        n = self.window.size
        if self.entries.shape != (n, n):
            raise ValueError(f"entries have shape {self.entries.shape}, window needs ({n}, {n})")

    @classmethod
    def maximally_mixed(cls, window: SidebandWindow) -> "DensityMatrix":
        """I/m on the support lattice of the window."""
        supp = window.support_indices()
        ent = np.zeros((window.size, window.size), dtype=complex)
        for n in supp:
            ent[window.position(n), window.position(n)] = 1.0 / len(supp)
        return cls(window, ent)

    def trace(self) -> float:
        return float(np.real(np.trace(self.entries)))

    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.entries))

    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))

    def mean_momentum(self) -> float:
        """First moment sum_N N * rho_NN."""
        return float(np.sum(self.window.indices() * self.populations()))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.entries + self.entries.conj().T))[0])

    def validate(self, herm_tol: float = 1e-12, trace_tol: float = 1e-10,
                 psd_tol: float = 1e-9) -> None:
        """Raise unless Hermitian, trace-one and PSD within tolerances."""
        he = self.hermiticity_error()
        if he > herm_tol:
            raise ValueError(f"not Hermitian: max deviation {he:.3e}")
        te = abs(self.trace() - 1.0)
        if te > trace_tol:
            raise ValueError(f"trace deviates from 1 by {te:.3e}")
        ev = self.min_eigenvalue()
        if ev < -psd_tol:
            raise ValueError(f"not PSD: min eigenvalue {ev:.3e}")


# ---------------------------------------------------------------------------
# Bessel functions of the first kind (integer order)
# ---------------------------------------------------------------------------

def _bessel_series(n: int, x: float) -> float:
    # power series sum_k (-1)^k (x/2)^{n+2k} / (k! (n+k)!), for small x
    half = 0.5 * x
    term = 1.0
    for k in range(1, n + 1):
        term *= half / k
    total = term
    k = 0
    while True:
        k += 1
        term *= -(half * half) / (k * (n + k))
        total += term
        if abs(term) < 1e-18 * max(abs(total), 1e-30) or k > 300:
            return total


def bessel_j_array(n_max: int, x: float) -> np.ndarray:
    """J_0(x) .. J_{n_max}(x) for x >= 0.

    Downward Miller recurrence normalized with the closure identity
    J_0 + 2 sum_k J_{2k} = 1; the recurrence is started far enough above
    both the order and the turning point that seeding errors decay away.
    """
    if x < 0:
        raise ValueError("bessel_j_array requires x >= 0")
    out = np.zeros(n_max + 1)
    if x == 0.0:
        out[0] = 1.0
        return out
    if x < 0.1:
        # Miller normalization loses accuracy when the sum is dominated by
        # J_0 alone; the series is exact and cheap here.
        for n in range(n_max + 1):
            out[n] = _bessel_series(n, x)
        return out
    start = int(max(n_max, np.ceil(x)) + 1.5 * np.ceil(np.sqrt(x)) + 40)
    if start % 2:
        start += 1
    jp = 0.0
    jc = 1e-300
    closure = 0.0
    for n in range(start, 0, -1):
        jm = (2.0 * n / x) * jc - jp
        jp, jc = jc, jm
        if n - 1 <= n_max:
            out[n - 1] = jc
        if (n - 1) % 2 == 0:
            closure += 2.0 * jc if n > 1 else jc
        if abs(jc) > 1e250:
            jc *= 1e-250
            jp *= 1e-250
            out *= 1e-250
            closure *= 1e-250
    return out / closure


def bessel_j(order: int, x: float) -> float:
    """Bessel function of the first kind J_order(x), |x| <= 50.

    Uses J_{-n}(x) = (-1)^n J_n(x) and J_n(-x) = (-1)^n J_n(x) to reduce
    to n >= 0, x >= 0.
    """
    sign = 1.0
    if x < 0:
        x = -x
        if order % 2:
            sign = -sign
    if order < 0:
        order = -order
        if order % 2:
            sign = -sign
    return sign * bessel_j_array(order, x)[order]


# ---------------------------------------------------------------------------
# window sizing
# ---------------------------------------------------------------------------

def ladder_halfwidth(g: Coupling) -> int:
    """Classical extent of the ladder driven by ``g``, in sideband indices."""
    return g.harmonic * int(np.ceil(2.0 * g.magnitude))


def pad_rungs(g: Coupling) -> int:
    """Rungs of padding (per side, in units of g.harmonic) that keep the
    truncated unitary's inner block orthonormal to better than 1e-10."""
    x = 2.0 * g.magnitude
    return int(np.ceil(x + 4.0 * x ** (1.0 / 3.0))) + 8 if x > 0 else 8


def pad_window(window: SidebandWindow, *couplings: Coupling) -> SidebandWindow:
    """Enlarge ``window`` so the listed couplings act without truncation error."""
    extra = sum(c.harmonic * pad_rungs(c) for c in couplings)
    return window.padded(extra)


def minimal_halfwidth(g: Coupling, tol: float = 1e-12) -> int:
    """Smallest half-extent (in sideband indices) such that the probability
    leaking past it after applying ``g`` to the zero-loss state is < tol."""
    x = 2.0 * g.magnitude
    if x == 0.0:
        return 0
    n_hi = int(np.ceil(x)) + 60
    js = bessel_j_array(n_hi, x)
    tail = np.cumsum((js ** 2)[::-1])[::-1]
    for s in range(1, n_hi):
        if 2.0 * tail[s + 1] < tol:
            return g.harmonic * s
    return g.harmonic * n_hi


# ---------------------------------------------------------------------------
# phase-modulation unitary
# ---------------------------------------------------------------------------

def coupling_unitary(g: Coupling, theta: float, window: SidebandWindow) -> np.ndarray:
    """Matrix of the phase-modulation unitary on ``window``.

    Entry (N, M) is exp(i s (theta + arg g)) J_s(2|g|) with s = (N - M) / h,
    nonzero only when the harmonic h divides N - M.  The entries are exact
    matrix elements of the infinite-dimensional operator; restricted to a
    finite window the matrix is unitary on its inner block provided the
    window is padded by :func:`pad_rungs` beyond the states of interest.

    Parameters
    ----------
    g : Coupling
        Interaction strength, phase and harmonic.
    theta : float
        Relative phase (radians) added to arg g.
    window : SidebandWindow
        Index range of the returned matrix.
    """
    half_needed = ladder_halfwidth(g)
    if window.n_max < half_needed or -window.n_min < half_needed:
        raise WindowError(
            f"window [{window.n_min}, {window.n_max}] too small for a coupling of "
            f"strength |g|={g.magnitude} at harmonic {g.harmonic} "
            f"(needs half-extent >= {half_needed} plus padding)")
    idx = window.indices()
    diff = idx[:, None] - idx[None, :]
    h = g.harmonic
    on_ladder = diff % h == 0
    s = diff // h
    smax = int(np.abs(s).max())
    js = bessel_j_array(smax, 2.0 * g.magnitude)
    mag = js[np.abs(s)]
    mag = np.where((s < 0) & (np.abs(s) % 2 == 1), -mag, mag)
    theta_eff = theta + g.phase
    return np.where(on_ladder, mag * np.exp(1j * s * theta_eff), 0.0)


def apply_unitary(U: np.ndarray, rho: DensityMatrix) -> DensityMatrix:
    """Conjugate a density matrix: U rho U^dagger.

    ``U`` must match the dimension of ``rho``; trace and spectrum are
    preserved to the extent that ``U`` is unitary on the occupied block.
    """
    n = rho.window.size
    if U.shape != (n, n):
        raise ValueError(f"unitary has shape {U.shape}, state needs ({n}, {n})")
    return DensityMatrix(rho.window, U @ rho.entries @ U.conj().T)
