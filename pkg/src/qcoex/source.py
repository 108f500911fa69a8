"""Pulsed polarization-entangled pair source and energy-conserving channel pairs."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import DomainError
from .raman import C_NM_THZ

_FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


@dataclass(frozen=True)
class EppSource:
    pump_wavelength: float = 1300.0  # nm, degenerate point of the joint spectrum
    rep_rate: float = 416.7e6  # Hz
    pulse_fwhm: float = 80.0  # ps
    mu: float = 0.01  # mean pairs per pulse in the selected channel pair
    joint_fwhm: float = 40.0  # nm
    phase: float = 0.0  # rad, |HH> + e^{i phase}|VV>
    flat_spectrum: bool = False

    def __post_init__(self):
        if not self.mu >= 0:
            raise DomainError("mu must be >= 0")
        if not self.rep_rate > 0:
            raise DomainError("repetition rate must be > 0")
        if not self.joint_fwhm > 0:
            raise DomainError("joint spectrum FWHM must be > 0")

    @property
    def period_ps(self):
        return 1e12 / self.rep_rate


@dataclass(frozen=True)
class QuantumChannel:
    center: float  # nm
    bandwidth: float = 50.0  # GHz

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise DomainError("channel bandwidth must be > 0")
        if not 1260.0 <= self.center <= 1360.0:
            raise DomainError(f"channel {self.center} nm outside the O-band")

    @property
    def frequency(self):
        return C_NM_THZ / self.center

    @property
    def width_nm(self):
        return self.center ** 2 * self.bandwidth * 1e-3 / C_NM_THZ


def energy_mismatch_ghz(signal_nm, idler_nm, pump_nm):
    return (C_NM_THZ / signal_nm + C_NM_THZ / idler_nm - 2.0 * C_NM_THZ / pump_nm) * 1e3


@dataclass(frozen=True)
class ChannelPair:
    signal: QuantumChannel
    idler: QuantumChannel
    pump_wavelength: float = 1300.0

    def __post_init__(self):
        tol = max(self.signal.bandwidth, self.idler.bandwidth)
        mismatch = energy_mismatch_ghz(self.signal.center, self.idler.center, self.pump_wavelength)
        if abs(mismatch) > tol:
            raise DomainError(
                f"pair ({self.signal.center}, {self.idler.center}) nm violates energy "
                f"conservation by {mismatch:.1f} GHz")

    @classmethod
    def from_signal(cls, signal_nm, pump_nm=1300.0, bandwidth=50.0):
        idler = conjugate_wavelength(signal_nm, pump_nm)
        return cls(QuantumChannel(signal_nm, bandwidth), QuantumChannel(idler, bandwidth), pump_nm)

    def label(self):
        return f"{self.signal.center:.2f}/{self.idler.center:.2f}"


def conjugate_wavelength(signal, pump):
    """Energy-conserving partner wavelength ``1/(2/pump - 1/signal)``."""
    inv = 2.0 / pump - 1.0 / signal
    if not inv > 0:
        raise DomainError("conjugate frequency is not positive")
    return 1.0 / inv


def spectral_weight(source: EppSource, pair: ChannelPair):
    """Fraction of generated pairs whose signal photon falls in the signal filter."""
    lam = pair.signal.center
    half = 0.5 * pair.signal.width_nm
    sigma = source.joint_fwhm * _FWHM_TO_SIGMA
    if source.flat_spectrum:
        peak = 1.0 / (sigma * math.sqrt(2.0 * math.pi))
        return min(1.0, 2.0 * half * peak)
    z_hi = (lam + half - source.pump_wavelength) / sigma
    z_lo = (lam - half - source.pump_wavelength) / sigma
    return float(ndtr(z_hi) - ndtr(z_lo))


def channel_grid(band_start, band_end, spacing, pump=1300.0, bandwidth=50.0):
    """Energy-conjugate channel pairs on a frequency grid anchored at the pump.

    Signals sit on the short-wavelength side. Grid points ``nu_p + k*spacing``
    (k >= 1) are kept when both the signal and its conjugate are inside the
    band; a band wholly on one side keeps its own channels and places the
    conjugates on the other side.
    """
    lo, hi = sorted((float(band_start), float(band_end)))
    if hi <= lo or spacing <= 0:
        return []
    nu_p = C_NM_THZ / pump
    step = spacing * 1e-3
    nu_hi, nu_lo = C_NM_THZ / lo, C_NM_THZ / hi
    if lo < pump < hi:
        kmax = math.floor(min(nu_hi - nu_p, nu_p - nu_lo) / step + 1e-9)
        ks = range(1, kmax + 1)
    else:
        # detunings covered by the band, on whichever side it lies
        d_lo, d_hi = sorted((abs(nu_hi - nu_p), abs(nu_lo - nu_p)))
        ks = range(max(1, math.ceil(d_lo / step - 1e-9)), math.floor(d_hi / step + 1e-9) + 1)
    pairs = []
    for k in ks:
        sig = C_NM_THZ / (nu_p + k * step)
        idl = C_NM_THZ / (nu_p - k * step)
        pairs.append(ChannelPair(QuantumChannel(sig, bandwidth), QuantumChannel(idl, bandwidth), pump))
    return pairs


def relative_mu(source: EppSource, pair: ChannelPair, reference: ChannelPair):
    """mu in ``pair`` when the pump is fixed so that ``reference`` has ``source.mu``."""
    if source.flat_spectrum:
        return source.mu
    return source.mu * spectral_weight(source, pair) / spectral_weight(source, reference)


def grid_weights(source, pairs):
    return np.array([spectral_weight(source, p) for p in pairs])
