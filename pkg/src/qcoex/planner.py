"""Exhaustive search over channel pairs, switch routing and pair number.

Candidates are ranked by a total order so the winner does not depend on the
order they were generated in: objective score (higher first), then total
predicted Raman singles, then signal wavelength, then routing, then mu.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import tomo
from .errors import DomainError, InfeasibleError, UndefinedVisibilityError, UnsupportedRegimeError
from .network import ClassicalChannel, FiberLink, SwitchState
from .raman import RamanGainTable, sprs_rate
from .rates import RatePrediction
from .scenario import Scenario
from .source import ChannelPair

ROUTINGS = {
    "signal-lit": SwitchState("lit", "dark"),
    "idler-lit": SwitchState("dark", "lit"),
}
OBJECTIVES = ("max_visibility", "max_ccr_at_v", "max_fidelity")


def default_mu_grid(n=20, lo=1e-3, hi=0.2):
    return np.geomspace(lo, hi, n)


@dataclass(frozen=True)
class PlanConstraints:
    min_visibility: float = 0.707
    min_ccr: float = 0.0  # ccps
    max_mu: float = math.inf

    def __post_init__(self):
        if not 0.0 < self.min_visibility <= 1.0:
            raise DomainError("min visibility must be in (0, 1]")
        if self.min_ccr < 0 or not self.max_mu > 0:
            raise DomainError("min CCR must be >= 0 and max mu > 0")

    def violations(self, plan):
        out = []
        if plan.prediction.visibility_HV < self.min_visibility:
            out.append("min_visibility")
        if plan.prediction.ccr < self.min_ccr:
            out.append("min_ccr")
        if plan.mu > self.max_mu:
            out.append("max_mu")
        return out


@dataclass(frozen=True)
class CoexistencePlan:
    pair: ChannelPair
    routing: str  # "signal-lit" or "idler-lit"
    mu: float
    prediction: RatePrediction
    fidelity: float  # predicted fidelity to |Phi+>
    sprs_singles: float  # detector-referred Raman counts, both arms

    @property
    def visibility(self):
        return self.prediction.visibility_HV

    @property
    def ccr(self):
        return self.prediction.ccr

    def score(self, objective):
        if objective == "max_visibility":
            return self.prediction.visibility_HV
        if objective == "max_ccr_at_v":
            return self.prediction.ccr
        if objective == "max_fidelity":
            return self.fidelity
        raise DomainError(f"unknown objective {objective!r}")

    def sort_key(self, objective):
        return (-self.score(objective), self.sprs_singles, self.pair.signal.center,
                self.routing, self.mu)

    def to_dict(self, objective=None):
        d = {
            "signal_nm": self.pair.signal.center,
            "idler_nm": self.pair.idler.center,
            "routing": self.routing,
            "mu": self.mu,
            "visibility": self.prediction.visibility_HV,
            "ccr_ccps": self.prediction.ccr,
            "fidelity": self.fidelity,
            "sprs_singles_cps": self.sprs_singles,
        }
        if objective is not None:
            d["score"] = self.score(objective)
        return d


def score_candidate(scenario: Scenario, pair: ChannelPair, routing: str, mu: float):
    pred = scenario.predict(pair, ROUTINGS[routing], mu)
    try:
        rho, _ = tomo.coexistence_state(tomo.phi_plus(scenario.source.phase), pred)
        fid = tomo.fidelity(tomo.phi_plus(scenario.source.phase), rho)
    except UndefinedVisibilityError:
        fid = 0.0
    return CoexistencePlan(pair, routing, float(mu), pred, fid, pred.noise_signal + pred.noise_idler)


def enumerate_plans(grid: Sequence[ChannelPair], scenario: Scenario, mus=None,
                    routings=("signal-lit", "idler-lit")):
    """Score every pair x routing x mu combination."""
    if mus is None:
        mus = default_mu_grid()
    mus = [float(m) for m in mus]
    return [score_candidate(scenario, pair, r, mu)
            for pair in grid for r in routings for mu in mus]


def optimize(candidates: Sequence[CoexistencePlan], constraints: PlanConstraints = PlanConstraints(),
             objective="max_visibility"):
    """Best feasible candidate under the total order described in the module docstring."""
    if objective not in OBJECTIVES:
        raise DomainError(f"unknown objective {objective!r}")
    if not candidates:
        raise InfeasibleError("no candidates to choose from")
    feasible = [c for c in candidates if not constraints.violations(c)]
    if not feasible:
        counts = {}
        for c in candidates:
            for v in constraints.violations(c):
                counts[v] = counts.get(v, 0) + 1
        binding = sorted(counts, key=lambda k: (-counts[k], k))
        best_v = max(c.prediction.visibility_HV for c in candidates)
        best_ccr = max(c.prediction.ccr for c in candidates)
        raise InfeasibleError(
            f"no feasible plan among {len(candidates)} candidates; binding: {', '.join(binding)} "
            f"(best visibility {best_v:.4f}, best CCR {best_ccr:.3g} ccps)", binding)
    return min(feasible, key=lambda c: c.sort_key(objective))


def ranked(candidates, constraints=PlanConstraints(), objective="max_visibility"):
    feasible = [c for c in candidates if not constraints.violations(c)]
    return sorted(feasible, key=lambda c: c.sort_key(objective))


@dataclass(frozen=True)
class BandRanking:
    name: str
    wavelengths: tuple
    cps_per_mw: float


def classical_band_advisor(table: RamanGainTable, quantum_wavelength, bands, link: FiberLink,
                           filter_bandwidth=50.0):
    """Rank classical bands by Raman noise they put on one quantum channel.

    ``bands`` maps a name to a wavelength or a list of wavelengths; a band's
    figure is the mean fiber-output rate per mW of launched power over its
    wavelengths. Quietest first.
    """
    items = list(bands.items()) if isinstance(bands, dict) else list(bands)
    out = []
    for name, wl in items:
        wls = tuple(float(w) for w in np.atleast_1d(wl))
        if not wls:
            raise DomainError(f"band {name!r} is empty")
        if min(wls) <= quantum_wavelength:
            raise UnsupportedRegimeError(f"band {name!r} is not longer than {quantum_wavelength} nm")
        rate = np.mean([sprs_rate(table, ClassicalChannel(w, 0.0), quantum_wavelength,
                                  filter_bandwidth, link) for w in wls])
        out.append(BandRanking(str(name), wls, float(rate)))
    if len(out) <= 1:
        return out
    return sorted(out, key=lambda b: (b.cps_per_mw, b.name))
