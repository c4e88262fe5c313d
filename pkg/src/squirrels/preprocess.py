"""Reduction of raw electron energy spectra to sideband populations.

A measured spectrum is a comb of peaks separated by the photon energy on
top of a broad inelastic (plasmon) background.  The comb is fitted with
pseudo-Voigt profiles sharing one width and one Lorentzian fraction, the
background with an asymmetric Gaussian; peak amplitudes enter linearly and
are solved by nonnegative least squares, while the handful of shape
parameters is found by a coarse grid plus Nelder-Mead refinement.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, nnls

from .dataio import RawSpectrum

__all__ = ["SidebandExtraction", "extract_sidebands"]

_LN2x4 = 4.0 * np.log(2.0)


def _pseudo_voigt(x: np.ndarray, width: float, eta: float) -> np.ndarray:
    """Unit-height pseudo-Voigt; ``width`` is the FWHM of both components."""
    u = x / width
    lor = 1.0 / (1.0 + 4.0 * u * u)
    gau = np.exp(-_LN2x4 * u * u)
    return eta * lor + (1.0 - eta) * gau


def _asym_gaussian(x: np.ndarray, center: float, sig_lo: float, sig_hi: float) -> np.ndarray:
    """Unit-height Gaussian with different widths below/above the center."""
    d = x - center
    sig = np.where(d < 0, sig_lo, sig_hi)
    return np.exp(-0.5 * (d / sig) ** 2)


@dataclass
class SidebandExtraction:
    populations: np.ndarray
    orders: np.ndarray
    width: float
    eta: float
    comb_offset: float
    background: dict
    residual: float
    rel_residual: float
    warnings: list = field(default_factory=list)


def extract_sidebands(s: RawSpectrum, width_range=(0.1, 1.0), n_width: int = 20,
                      n_eta: int = 11, fit_background: bool = True,
                      residual_warn: float = 0.05) -> SidebandExtraction:
    """Fit the sideband comb of a raw spectrum and return normalized
    populations.

    Parameters
    ----------
    s : RawSpectrum
        Energy axis (eV, relative to the zero-loss line) and counts.
    width_range, n_width, n_eta
        Grid over the shared peak FWHM (eV) and Lorentzian fraction for
        the coarse search that seeds the Nelder-Mead refinement.
    fit_background : bool
        Include the asymmetric-Gaussian background component.
    residual_warn : float
        Relative rms residual above which a warning is attached.
    """
    E = s.energy_axis
    y = s.counts
    if len(E) == 0 or float(np.max(y, initial=0.0)) <= 0.0:
        raise ValueError("empty spectrum: no counts to fit")
    hw = s.photon_energy
    n_lo = int(np.ceil((E[0] - 0.25 * hw) / hw))
    n_hi = int(np.floor((E[-1] + 0.25 * hw) / hw))
    if n_hi < n_lo:
        raise ValueError("energy axis does not cover any sideband")
    orders = np.arange(n_lo, n_hi + 1)
    yn = y / y.max()

    def design(width, eta, offset, bg):
        cols = [_pseudo_voigt(E - n * hw - offset, width, eta) for n in orders]
        if bg is not None:
            cols.append(_asym_gaussian(E, *bg))
        return np.column_stack(cols)

    def sse(width, eta, offset, bg):
        if not (0.01 <= width <= 5.0 and 0.0 <= eta <= 1.0):
            return np.inf, None
        M = design(width, eta, offset, bg)
        amps, rnorm = nnls(M, yn)
        return rnorm ** 2, amps

    # stage 1: comb-only grid over (width, eta)
    widths = np.linspace(width_range[0], width_range[1], n_width)
    etas = np.linspace(0.0, 1.0, n_eta)
    best = (np.inf, widths[0], etas[0])
    for w in widths:
        for e in etas:
            v, _ = sse(w, e, 0.0, None)
            if v < best[0]:
                best = (v, w, e)
    _, w0, e0 = best

    # stage 2: background seed from the comb-fit residual
    bg0 = None
    if fit_background:
        M = design(w0, e0, 0.0, None)
        amps, _ = nnls(M, yn)
        resid = yn - M @ amps
        k = int(np.argmax(np.convolve(resid, np.ones(5) / 5.0, mode="same")))
        bg0 = (float(E[k]), max(2.0 * w0, 0.5), max(2.0 * w0, 0.5))

    # stage 3: Nelder-Mead over the shape parameters, amplitudes by NNLS
    if fit_background:
        def cost(q):
            w, e, off, mu, lsl, lsh = q
            v, _ = sse(w, min(max(e, 0.0), 1.0), off, (mu, np.exp(lsl), np.exp(lsh)))
            return v
        q0 = [w0, e0, 0.0, bg0[0], np.log(bg0[1]), np.log(bg0[2])]
    else:
        def cost(q):
            w, e, off = q
            v, _ = sse(w, min(max(e, 0.0), 1.0), off, None)
            return v
        q0 = [w0, e0, 0.0]
    opt = minimize(cost, q0, method="Nelder-Mead",
                   options={"xatol": 1e-6, "fatol": 1e-14, "maxiter": 4000})
    q = opt.x
    width, eta, offset = float(q[0]), float(min(max(q[1], 0.0), 1.0)), float(q[2])
    bg = (float(q[3]), float(np.exp(q[4])), float(np.exp(q[5]))) if fit_background else None
    _, amps = sse(width, eta, offset, bg)
    M = design(width, eta, offset, bg)
    resid = float(np.linalg.norm(yn - M @ amps))
    rel = resid / float(np.linalg.norm(yn))

    notes = []
    if rel > residual_warn:
        notes.append(f"comb fit residual is high: relative rms {rel:.3f}")
        warnings.warn(notes[-1], stacklevel=2)

    heights = amps[: len(orders)]
    total = heights.sum()
    if total <= 0:
        raise ValueError("comb fit found no sideband amplitude")
    background = {}
    if fit_background:
        background = {"amplitude": float(amps[-1]) * float(y.max()),
                      "center": bg[0], "sigma_below": bg[1], "sigma_above": bg[2]}
    return SidebandExtraction(
        populations=heights / total,
        orders=orders,
        width=width,
        eta=eta,
        comb_offset=offset,
        background=background,
        residual=resid * float(y.max()),
        rel_residual=rel,
        warnings=notes,
    )
