"""Analytic singles, coincidence, accidental and visibility predictions.

Each receiver is a two-output polarization analyzer. Noise and dark counts
are homogeneous Poisson processes, so accidentals between uncorrelated
detections are split evenly between the parallel and orthogonal output
combinations. Pair emission is Poissonian per pulse with independent |Phi+>
polarization, which puts ``M = (mu/2) * C`` multi-pair coincidences into each
class and gives ``V = 1/(1+mu)`` without noise.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, UndefinedVisibilityError
from .source import EppSource


@dataclass(frozen=True)
class DetectorModel:
    efficiency: float = 0.92
    dark_rate: float = 100.0  # cps
    jitter_fwhm: float = 50.0  # ps

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise DomainError("detector efficiency must be in [0, 1]")
        if not self.dark_rate >= 0:
            raise DomainError("dark rate must be >= 0")


@dataclass(frozen=True)
class CoincidenceConfig:
    window: float = 600.0  # ps, full width

    def __post_init__(self):
        if not self.window > 0:
            raise DomainError("coincidence window must be > 0")


@dataclass(frozen=True)
class ArmModel:
    """One photon's path: total loss before the detector and the Raman noise it collects."""

    loss_db: float
    noise_cps: float = 0.0  # photons/s at the fiber output, inside the filter
    detector: DetectorModel = DetectorModel()

    def __post_init__(self):
        if not self.loss_db >= 0:
            raise DomainError("arm loss must be >= 0 dB")
        if not self.noise_cps >= 0:
            raise DomainError("noise rate must be >= 0")

    @property
    def transmission(self):
        return arm_transmission(self.loss_db, self.detector)


@dataclass(frozen=True)
class RatePrediction:
    singles_signal: float
    singles_idler: float
    true_coincidences: float
    accidentals: float
    multipair_orthogonal: float
    visibility_HV: float
    car: float
    mu_effective: float
    mu: float = 0.0
    noise_signal: float = 0.0  # detector-referred noise counts
    noise_idler: float = 0.0

    @property
    def ccr(self):
        """All coincidences, both analyzer classes."""
        return self.true_coincidences + 2.0 * self.multipair_orthogonal + self.accidentals

    @property
    def parallel_rate(self):
        return self.true_coincidences + self.multipair_orthogonal + 0.5 * self.accidentals

    @property
    def orthogonal_rate(self):
        return self.multipair_orthogonal + 0.5 * self.accidentals

    @property
    def noise_fraction(self):
        """Weight of unpolarized coincidences, ``1 - V``."""
        return 1.0 - self.visibility_HV

    @property
    def delayed_window_accidentals(self):
        """Expected count rate in a window offset by one pulse period."""
        return self.accidentals + 2.0 * self.multipair_orthogonal

    def to_dict(self):
        d = asdict(self)
        d["ccr"] = self.ccr
        return d


def arm_transmission(loss_db, detector: DetectorModel):
    return detector.efficiency * 10.0 ** (-loss_db / 10.0)


def singles_rate(arm_loss_db, detector: DetectorModel, noise_cps, source: EppSource, pair_weight=1.0):
    """Detector singles: pair photons + detected noise + darks (cps)."""
    if arm_loss_db < 0:
        raise DomainError("arm loss must be >= 0 dB")
    mu_arm = source.mu * pair_weight
    return (source.rep_rate * mu_arm * arm_transmission(arm_loss_db, detector)
            + noise_cps * detector.efficiency + detector.dark_rate)


def coincidence_rates(source: EppSource, signal: ArmModel, idler: ArmModel,
                      coincidence: CoincidenceConfig = CoincidenceConfig(), pair_weight=1.0):
    mu = source.mu * pair_weight
    r = source.rep_rate
    eta_s, eta_i = signal.transmission, idler.transmission
    pairs_s, pairs_i = r * mu * eta_s, r * mu * eta_i
    s_s = singles_rate(signal.loss_db, signal.detector, signal.noise_cps, source, pair_weight)
    s_i = singles_rate(idler.loss_db, idler.detector, idler.noise_cps, source, pair_weight)
    tau = coincidence.window * 1e-12
    true = r * mu * eta_s * eta_i
    multi = 0.5 * mu * true
    # photons of one pulse only meet photons of another pulse when the window spans a period
    acc = (s_s * s_i - pairs_s * pairs_i) * tau
    total = true + 2.0 * multi + acc
    if total <= 0:
        raise UndefinedVisibilityError("no coincidences: visibility undefined")
    vis = true / total
    uncorrelated = multi + 0.5 * acc
    car = math.inf if uncorrelated == 0 else (true + uncorrelated) / uncorrelated
    mu_eff = math.inf if vis == 0 else 1.0 / vis - 1.0
    return RatePrediction(
        singles_signal=s_s, singles_idler=s_i, true_coincidences=true, accidentals=acc,
        multipair_orthogonal=multi, visibility_HV=vis, car=car, mu_effective=mu_eff, mu=mu,
        noise_signal=signal.noise_cps * signal.detector.efficiency,
        noise_idler=idler.noise_cps * idler.detector.efficiency,
    )


def mu_from_visibility(visibility):
    """Noiseless inversion ``mu = 1/V - 1``."""
    if not 0 < visibility <= 1:
        raise DomainError("visibility must be in (0, 1]")
    return 1.0 / visibility - 1.0


@dataclass(frozen=True)
class SweepPoint:
    mu: float
    ccr_ccps: float
    visibility: float
    car: float
    accidentals_ccps: float

    FIELDS = ("mu", "ccr_ccps", "visibility", "car", "accidentals_ccps")

    def row(self):
        return (self.mu, self.ccr_ccps, self.visibility, self.car, self.accidentals_ccps)


def visibility_vs_ccr_sweep(source: EppSource, signal: ArmModel, idler: ArmModel,
                            mus: Sequence[float], coincidence=CoincidenceConfig()):
    mus = np.asarray(mus, dtype=float)
    if mus.size and np.any(mus <= 0):
        raise DomainError("mu values must be positive")
    out = []
    for mu in np.sort(mus):
        p = coincidence_rates(_with_mu(source, mu), signal, idler, coincidence)
        out.append(SweepPoint(float(mu), p.ccr, p.visibility_HV, p.car, p.accidentals))
    return out


def _with_mu(source, mu):
    return replace(source, mu=float(mu))


def mu_for_ccr(source: EppSource, signal: ArmModel, idler: ArmModel, target_ccr,
               coincidence=CoincidenceConfig(), mu_max=1.0):
    """Pair number per pulse that yields ``target_ccr`` total coincidences."""

    def f(mu):
        return coincidence_rates(_with_mu(source, mu), signal, idler, coincidence).ccr - target_ccr

    lo = 1e-12
    if f(lo) >= 0:
        raise DomainError("noise alone exceeds the requested coincidence rate")
    if f(mu_max) < 0:
        raise DomainError("requested coincidence rate unreachable below mu_max")
    return brentq(f, lo, mu_max, xtol=1e-15, rtol=1e-13)


@dataclass(frozen=True)
class CascadeResult:
    rate: float  # n-fold accidentals before reduction
    reduced_rate: float
    reduction: float


def cascade_accidentals(singles: Sequence[float], window, reductions: Sequence[float] | None = None):
    """n-fold accidental rate ``S_1 * prod_j (S_j * tau)`` and its scaling.

    A coincidence is counted for every event of the first stream together
    with each combination of events of the others inside +-window/2.
    ``reductions`` divides the listed singles (1 leaves a stream unchanged).
    """
    s = np.asarray(singles, dtype=float)
    if s.size < 2:
        raise DomainError("n-fold accidentals need at least two streams")
    if np.any(s < 0):
        raise DomainError("singles must be >= 0")
    tau = window * 1e-12
    base = float(np.prod(s) * tau ** (s.size - 1))
    if reductions is None:
        return CascadeResult(base, base, 1.0)
    m = np.asarray(reductions, dtype=float)
    if m.shape != s.shape or np.any(m <= 0):
        raise DomainError("one positive reduction factor per stream required")
    reduced = float(np.prod(s / m) * tau ** (s.size - 1))
    return CascadeResult(base, reduced, float(np.prod(m)))


def filter_window_scaling(bw_from, bw_to, win_from, win_to):
    """Noise-accidental reduction from narrowing filters and the coincidence window."""
    for v in (bw_from, bw_to, win_from, win_to):
        if not v > 0:
            raise DomainError("bandwidths and windows must be positive")
    return (bw_from / bw_to) * (win_from / win_to)
