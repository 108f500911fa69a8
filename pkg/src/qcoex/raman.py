"""Raman gain spectrum, phonon occupation and spontaneous Raman noise rates.

Frequencies are in THz, wavelengths in nm, lengths in km, powers in mW
unless a name says otherwise. The gain spectrum is a sum of
intermediate-broadening (Voigt) vibrational lines, antisymmetrised so the
gain vanishes at zero offset.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, replace
from importlib import resources
from typing import Sequence

import numpy as np
from scipy import constants
from scipy.optimize import least_squares
from scipy.special import voigt_profile

from .errors import DomainError, RangeError, UnderdeterminedError, UnsupportedRegimeError
from .network import ClassicalChannel, FiberLink, alpha_natural, dbm_to_mw

MAX_OFFSET_THZ = 60.0
DEFAULT_TEMPERATURE_K = 295.0
_FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))
_H_OVER_K = constants.h / constants.k  # K s
C_NM_THZ = constants.c * 1e-3  # c in nm*THz


def frequency_thz(wavelength_nm):
    return C_NM_THZ / np.asarray(wavelength_nm, dtype=float)


def frequency_offset(quantum_nm, classical_nm):
    """Offset ``nu_quantum - nu_classical`` in THz (positive on the anti-Stokes side)."""
    return frequency_thz(quantum_nm) - frequency_thz(classical_nm)


@dataclass(frozen=True)
class VibrationalMode:
    center_shift: float  # THz
    gaussian_width: float  # THz, FWHM
    lorentzian_width: float  # THz, FWHM
    amplitude: float  # peak height of the isolated line

    def __post_init__(self):
        if not self.center_shift > 0:
            raise DomainError("mode center shift must be > 0")
        if not (self.gaussian_width > 0 and self.lorentzian_width > 0):
            raise DomainError("mode widths must be > 0")
        if not self.amplitude >= 0:
            raise DomainError("mode amplitude must be >= 0")

    def line(self, offset):
        sigma = self.gaussian_width * _FWHM_TO_SIGMA
        gamma = 0.5 * self.lorentzian_width
        peak = voigt_profile(0.0, sigma, gamma)
        return self.amplitude * (
            voigt_profile(offset - self.center_shift, sigma, gamma)
            - voigt_profile(offset + self.center_shift, sigma, gamma)
        ) / peak


@dataclass(frozen=True)
class RamanGainTable:
    modes: tuple
    temperature: float = DEFAULT_TEMPERATURE_K
    calibration_scale: float = 1.0  # photons s^-1 mW^-1 GHz^-1 km^-1
    version: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        if not self.temperature > 0:
            raise DomainError("temperature must be > 0 K")
        if not self.calibration_scale > 0:
            raise DomainError("calibration scale must be > 0")

    def with_scale(self, scale):
        return replace(self, calibration_scale=float(scale))

    def to_dict(self):
        return {
            "version": self.version,
            "temperature_K": self.temperature,
            "calibration_scale": self.calibration_scale,
            "modes": [
                {"center_THz": m.center_shift, "gw_THz": m.gaussian_width,
                 "lw_THz": m.lorentzian_width, "amp": m.amplitude}
                for m in self.modes
            ],
        }

    @classmethod
    def from_dict(cls, d):
        try:
            modes = tuple(
                VibrationalMode(float(m["center_THz"]), float(m["gw_THz"]),
                                float(m["lw_THz"]), float(m["amp"]))
                for m in d["modes"]
            )
            return cls(modes, float(d["temperature_K"]), float(d["calibration_scale"]),
                       str(d.get("version", "custom")))
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed gain table: {exc}") from exc

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def load_table(path):
    with open(path) as fh:
        return RamanGainTable.from_dict(json.load(fh))


def default_table():
    """The shipped table, or the one named by ``QCOEX_TABLE`` if set."""
    override = os.environ.get("QCOEX_TABLE")
    if override:
        return load_table(override)
    text = resources.files("qcoex.data").joinpath("raman_table_v1.json").read_text()
    return RamanGainTable.from_dict(json.loads(text))


def _check_offset(offset):
    w = np.asarray(offset, dtype=float)
    if np.any(~np.isfinite(w)) or np.any(w < 0) or np.any(w > MAX_OFFSET_THZ):
        raise RangeError(f"offset outside [0, {MAX_OFFSET_THZ}] THz: {offset}")
    return w


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def gain_density(table: RamanGainTable, offset):
    """Relative Raman gain at ``offset`` THz; accepts scalars or arrays."""
    w = _check_offset(offset)
    g = np.zeros_like(w)
    for mode in table.modes:
        g = g + mode.line(w)
    # antisymmetrised lines can round to -1e-17 far from any mode
    return _scalar(np.maximum(g, 0.0))


def phonon_occupation(offset, temperature):
    """Bose-Einstein occupation ``1/(exp(h*Omega/kT) - 1)``."""
    w = np.asarray(offset, dtype=float)
    if np.any(np.asarray(temperature) <= 0):
        raise DomainError("temperature must be > 0 K")
    if np.any(w <= 0):
        raise DomainError("phonon occupation diverges at zero offset")
    x = _H_OVER_K * w * 1e12 / np.asarray(temperature, dtype=float)
    return _scalar(1.0 / np.expm1(x))


def scattering_density(table: RamanGainTable, offset, side="anti-stokes"):
    g = np.asarray(gain_density(table, offset))
    w = np.asarray(offset, dtype=float)
    # below ~1 kHz the occupation overflows while the gain is already zero
    live = w > 1e-9
    safe = np.where(live, w, 1.0)
    n = np.where(live, phonon_occupation(safe, table.temperature), 0.0)
    if side == "anti-stokes":
        out = g * n
    elif side == "stokes":
        out = g * (n + 1.0)
    else:
        raise DomainError(f"unknown scattering side {side!r}")
    return _scalar(out)


def effective_length(alpha_q, alpha_c, length, direction="co"):
    """Effective interaction length (km) for noise generated along a span.

    ``alpha_*`` are in 1/km. Co-propagating noise exits at the far end,
    counter-propagating noise at the classical input end.
    """
    if length == 0:
        return 0.0
    if direction == "co":
        x = (alpha_q - alpha_c) * length
        # (e^{-a_q L} - e^{-a_c L})/(a_c - a_q) = L e^{-a_q L} expm1(x)/x
        ratio = 1.0 + 0.5 * x if abs(x) < 1e-8 else math.expm1(x) / x
        return length * math.exp(-alpha_q * length) * ratio
    if direction == "counter":
        s = (alpha_q + alpha_c) * length
        if s == 0:
            return length
        return -math.expm1(-s) / (alpha_q + alpha_c)
    raise DomainError(f"unknown propagation direction {direction!r}")


def sprs_rate(table: RamanGainTable, classical: ClassicalChannel, quantum_wavelength,
              filter_bandwidth, link: FiberLink, direction="co"):
    """Anti-Stokes noise photons/s in the quantum filter at the span output."""
    if quantum_wavelength >= classical.wavelength:
        raise UnsupportedRegimeError(
            f"quantum {quantum_wavelength} nm must be shorter than classical {classical.wavelength} nm")
    if classical.launch_power == -math.inf:
        return 0.0
    if filter_bandwidth < 0:
        raise DomainError("filter bandwidth must be >= 0")
    offset = float(frequency_offset(quantum_wavelength, classical.wavelength))
    density = scattering_density(table, offset, "anti-stokes")
    l_eff = effective_length(alpha_natural(link, quantum_wavelength),
                             alpha_natural(link, classical.wavelength), link.length, direction)
    return classical.power_mw * table.calibration_scale * density * filter_bandwidth * l_eff


def plan_sprs_rate(table, channels: Sequence[ClassicalChannel], quantum_wavelength,
                   filter_bandwidth, link, direction="co"):
    return float(sum(sprs_rate(table, c, quantum_wavelength, filter_bandwidth, link, direction)
                     for c in channels))


@dataclass(frozen=True)
class Observation:
    """A measured detector-referred noise rate for a classical launch.

    ``classical`` lists the launched wavelengths; ``launch_power`` (mW) is the
    aggregate, split evenly between them.
    """

    quantum_wavelength: float
    classical: tuple
    launch_power: float  # mW, aggregate
    link: FiberLink
    measured_cps: float
    detector_efficiency: float = 1.0
    filter_bandwidth: float = 50.0
    direction: str = "co"

    def channels(self):
        wl = tuple(np.atleast_1d(np.asarray(self.classical, dtype=float)))
        per_dbm = 10.0 * math.log10(self.launch_power / len(wl)) if self.launch_power > 0 else -math.inf
        return tuple(ClassicalChannel(w, per_dbm) for w in wl)


def predicted_detector_rate(table, obs: Observation):
    return obs.detector_efficiency * plan_sprs_rate(
        table, obs.channels(), obs.quantum_wavelength, obs.filter_bandwidth, obs.link, obs.direction)


@dataclass(frozen=True)
class CalibrationResult:
    table: RamanGainTable
    residuals: np.ndarray  # log(predicted / measured) per observation


def calibrate(table: RamanGainTable, observations: Sequence[Observation], fit_modes=()):
    """Fit the absolute scale (and optionally mode amplitudes) to measured rates.

    Minimises the squared log-residuals of predicted vs measured detector
    rates. ``fit_modes`` holds indices of modes whose amplitudes are freed.
    """
    obs = list(observations)
    if not obs:
        raise UnderdeterminedError("calibration needs at least one observation")
    for o in obs:
        if np.any(np.asarray(o.classical) <= o.quantum_wavelength):
            raise UnsupportedRegimeError("all observations must be anti-Stokes")
        if not (o.measured_cps > 0 and o.launch_power > 0):
            raise DomainError("observations need positive power and measured rate")
    fit_modes = tuple(int(i) for i in fit_modes)
    n_params = 1 + len(fit_modes)
    distinct = {(o.quantum_wavelength, tuple(np.atleast_1d(o.classical))) for o in obs}
    if n_params > 1 and len(distinct) < n_params:
        raise UnderdeterminedError(
            f"{n_params} parameters but only {len(distinct)} distinct wavelength configurations")

    measured = np.log([o.measured_cps for o in obs])

    def build(params):
        modes = list(table.modes)
        for idx, logamp in zip(fit_modes, params[1:]):
            modes[idx] = replace(modes[idx], amplitude=float(math.exp(logamp)))
        return replace(table, modes=tuple(modes), calibration_scale=1.0)

    def unit_logs(params):
        t = build(params)
        return np.log([predicted_detector_rate(t, o) for o in obs])

    if n_params == 1:
        log_scale = float(np.mean(measured - unit_logs([0.0])))
        fitted = table.with_scale(math.exp(log_scale))
    else:
        x0 = [0.0] + [math.log(max(table.modes[i].amplitude, 1e-12)) for i in fit_modes]

        def resid(p):
            return unit_logs(p) + p[0] - measured

        sol = least_squares(resid, x0, xtol=1e-14, ftol=1e-14, gtol=1e-14)
        fitted = replace(build(sol.x), calibration_scale=float(math.exp(sol.x[0])))
    residuals = np.log([predicted_detector_rate(fitted, o) for o in obs]) - measured
    return CalibrationResult(fitted, residuals)
