"""Fiber links, classical WDM launch plans and 2x2-switch quantum routing."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import DomainError, RangeError, TopologyError

DB_PER_NEPER = 10.0 / math.log(10.0)


@dataclass(frozen=True)
class AttenuationTable:
    """Piecewise-linear attenuation in dB/km over wavelength knots in nm."""

    wavelengths: tuple
    values: tuple

    def __post_init__(self):
        wl = np.asarray(self.wavelengths, dtype=float)
        val = np.asarray(self.values, dtype=float)
        if wl.ndim != 1 or wl.shape != val.shape or wl.size < 2:
            raise DomainError("attenuation table needs >= 2 matching knots")
        if np.any(np.diff(wl) <= 0):
            raise DomainError("attenuation knots must be strictly increasing")
        if np.any(val <= 0):
            raise DomainError("attenuation values must be positive")
        object.__setattr__(self, "wavelengths", tuple(float(x) for x in wl))
        object.__setattr__(self, "values", tuple(float(x) for x in val))

    @property
    def support(self):
        return self.wavelengths[0], self.wavelengths[-1]

    def __call__(self, wavelength):
        lam = np.asarray(wavelength, dtype=float)
        lo, hi = self.support
        if np.any(lam < lo) or np.any(lam > hi):
            raise RangeError(f"wavelength {wavelength} nm outside attenuation table [{lo}, {hi}] nm")
        out = np.interp(lam, self.wavelengths, self.values)
        return float(out) if out.ndim == 0 else out

    def to_dict(self):
        return {"wavelengths_nm": list(self.wavelengths), "db_per_km": list(self.values)}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["wavelengths_nm"]), tuple(d["db_per_km"]))


# Generic single-mode fiber. O-band knots follow the usual ~0.33 dB/km at 1310 nm.
STANDARD_SMF = AttenuationTable(
    (1260.0, 1280.0, 1310.0, 1330.0, 1550.0, 1610.0, 1625.0),
    (0.37, 0.35, 0.33, 0.32, 0.19, 0.20, 0.21),
)

INSTALLED_LENGTH_KM = 47.9
# Measured end-to-end losses of the installed span.
INSTALLED_LOSS_1290_DB = 20.9
INSTALLED_LOSS_1310_DB = 19.7
INSTALLED_LOSS_CBAND_DB = 12.7


def _installed_table():
    # Excess loss is pinned by the 1310 nm knot; the 1280 nm knot and the flat
    # C/L-band value are solved so the span hits the measured losses exactly.
    excess = INSTALLED_LOSS_1310_DB - INSTALLED_LENGTH_KM * 0.33
    a1290 = (INSTALLED_LOSS_1290_DB - excess) / INSTALLED_LENGTH_KM
    a1280 = (a1290 - 0.33 / 3.0) * 1.5
    a_c = (INSTALLED_LOSS_CBAND_DB - excess) / INSTALLED_LENGTH_KM
    a1260 = a1280 + (a1280 - 0.33) * (20.0 / 30.0)
    table = AttenuationTable(
        (1260.0, 1280.0, 1310.0, 1330.0, 1550.0, 1610.0, 1625.0),
        (a1260, a1280, 0.33, 0.31, a_c, a_c, a_c),
    )
    return table, excess


INSTALLED_ATTENUATION, INSTALLED_EXCESS_DB = _installed_table()

NAMED_TABLES = {"standard": STANDARD_SMF, "installed": INSTALLED_ATTENUATION}


@dataclass(frozen=True)
class FiberLink:
    name: str
    length: float  # km
    attenuation: AttenuationTable = STANDARD_SMF
    excess_loss: float = 0.0  # dB, splices and connectors
    installed: bool = False
    a: str = ""
    b: str = ""

    def __post_init__(self):
        if not self.length >= 0:
            raise DomainError(f"link {self.name!r}: length must be >= 0")
        if not self.excess_loss >= 0:
            raise DomainError(f"link {self.name!r}: excess loss must be >= 0")


def default_installed_link(name="installed", a="src", b="lit_rx"):
    return FiberLink(name, INSTALLED_LENGTH_KM, INSTALLED_ATTENUATION,
                     INSTALLED_EXCESS_DB, True, a, b)


def default_dark_spool(name="spool", a="src", b="dark_rx"):
    return FiberLink(name, 5.4, STANDARD_SMF, 1.0, False, a, b)


def loss_db(link: FiberLink, wavelength):
    """Total span loss ``length * alpha(lambda) + excess`` in dB."""
    return link.length * link.attenuation(wavelength) + link.excess_loss


def path_loss_db(links: Sequence[FiberLink], wavelength):
    return sum((loss_db(l, wavelength) for l in links), 0.0)


def alpha_natural(link: FiberLink, wavelength):
    """Effective attenuation in 1/km with the excess loss spread along the span."""
    if link.length == 0:
        return 0.0
    return loss_db(link, wavelength) / (link.length * DB_PER_NEPER)


def dbm_to_mw(p):
    return 10.0 ** (np.asarray(p, dtype=float) / 10.0)


def mw_to_dbm(p):
    return 10.0 * np.log10(p)


def db_sum(dbm_values):
    """Aggregate power (dBm) of channels given in dBm."""
    vals = np.asarray(dbm_values, dtype=float)
    if vals.size == 0:
        return -math.inf
    return float(mw_to_dbm(np.sum(dbm_to_mw(vals))))


@dataclass(frozen=True)
class ClassicalChannel:
    wavelength: float  # nm
    launch_power: float  # dBm

    def __post_init__(self):
        if not math.isfinite(self.launch_power) and self.launch_power != -math.inf:
            raise DomainError("launch power must be finite dBm (or -inf for dark)")

    @property
    def power_mw(self):
        return float(dbm_to_mw(self.launch_power))


@dataclass(frozen=True)
class ClassicalWdmPlan:
    channels: tuple = ()
    links: tuple = ()
    direction: Mapping[str, str] = field(default_factory=dict)

    @classmethod
    def evenly_loaded(cls, wavelengths, aggregate_dbm, links=(), direction="co"):
        """Split ``aggregate_dbm`` equally over ``wavelengths``."""
        wl = [float(w) for w in wavelengths]
        if not wl:
            return cls((), tuple(links), {l: direction for l in links})
        per = aggregate_dbm - 10.0 * math.log10(len(wl))
        chans = tuple(ClassicalChannel(w, per) for w in wl)
        return cls(chans, tuple(links), {l: direction for l in links})

    @property
    def aggregate_launch_dbm(self):
        return db_sum([c.launch_power for c in self.channels])

    @property
    def aggregate_mw(self):
        return float(sum(c.power_mw for c in self.channels))

    def scaled_to(self, aggregate_dbm):
        if not self.channels:
            return self
        shift = aggregate_dbm - self.aggregate_launch_dbm
        chans = tuple(replace(c, launch_power=c.launch_power + shift) for c in self.channels)
        return replace(self, channels=chans)

    def direction_on(self, link_name):
        return self.direction.get(link_name, "co")


def wdm_grid(start_nm=1549.0, stop_nm=1565.0, count=11):
    return tuple(float(x) for x in np.linspace(start_nm, stop_nm, count))


def received_power(plan: ClassicalWdmPlan, link: FiberLink):
    """Per-channel received powers and their aggregate, both in dBm."""
    per = np.array([c.launch_power - loss_db(link, c.wavelength) for c in plan.channels])
    return per, db_sum(per)


@dataclass(frozen=True)
class Port:
    """One output of the source switch: a chain of links ending at a receiver."""

    links: tuple
    receiver: str
    extra_loss_db: float = 0.0


@dataclass(frozen=True)
class SwitchState:
    signal: str = "lit"
    idler: str = "dark"

    def flipped(self):
        return SwitchState(self.idler, self.signal)


@dataclass(frozen=True)
class NetworkTopology:
    nodes: tuple
    links: tuple
    ports: Mapping[str, Port]
    source: str = "src"
    receivers: tuple = ()
    allow_shared_ports: bool = False

    def link(self, name):
        for l in self.links:
            if l.name == name:
                return l
        raise TopologyError(f"unknown link {name!r}")


@dataclass(frozen=True)
class ArmRoute:
    port: str
    links: tuple  # FiberLink, in propagation order
    receiver: str
    extra_loss_db: float
    coexisting: Mapping[str, tuple]  # link name -> classical channels


def _walk(topology: NetworkTopology, port_name: str):
    port = topology.ports.get(port_name)
    if port is None:
        raise TopologyError(f"switch references unknown port {port_name!r}")
    if not port.links:
        raise TopologyError(f"port {port_name!r} has no links")
    node = topology.source
    seen = {node}
    path = []
    for name in port.links:
        link = topology.link(name)
        if link.a == link.b:
            raise TopologyError(f"link {name!r} is a self-loop")
        if node == link.a:
            node = link.b
        elif node == link.b:
            node = link.a
        else:
            raise TopologyError(f"link {name!r} does not continue from node {node!r}")
        if node in seen:
            raise TopologyError(f"path through port {port_name!r} revisits node {node!r}")
        seen.add(node)
        path.append(link)
    if node != port.receiver or (topology.receivers and node not in topology.receivers):
        raise TopologyError(f"port {port_name!r} ends at {node!r}, not a receiver")
    return port, tuple(path)


def route(topology: NetworkTopology, switch: SwitchState, plan: ClassicalWdmPlan | None = None):
    """Expand the switch assignment into per-arm link paths and coexisting channels."""
    if len(topology.nodes) < 2:
        raise TopologyError("topology needs at least a source and one receiver")
    if switch.signal == switch.idler and not topology.allow_shared_ports:
        raise TopologyError("signal and idler assigned to the same port")
    lit = set(plan.links) if plan is not None else set()
    routes = {}
    for arm, port_name in (("signal", switch.signal), ("idler", switch.idler)):
        port, path = _walk(topology, port_name)
        coex = {l.name: (plan.channels if l.name in lit else ()) for l in path}
        routes[arm] = ArmRoute(port_name, path, port.receiver, port.extra_loss_db, coex)
    return routes


def default_topology(lit_extra_db=0.0, dark_extra_db=0.0):
    installed = default_installed_link()
    spool = default_dark_spool()
    return NetworkTopology(
        nodes=("src", "lit_rx", "dark_rx"),
        links=(installed, spool),
        ports={
            "lit": Port(("installed",), "lit_rx", lit_extra_db),
            "dark": Port(("spool",), "dark_rx", dark_extra_db),
        },
        source="src",
        receivers=("lit_rx", "dark_rx"),
    )
