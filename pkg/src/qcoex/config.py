"""Run configuration: JSON loading, validation, defaults and model assembly."""
from __future__ import annotations

import copy
import hashlib
import json
import math
import os
from dataclasses import dataclass
from importlib import resources

import jsonschema

from .errors import ConfigError, DomainError
from .network import (NAMED_TABLES, AttenuationTable, ClassicalWdmPlan, FiberLink, NetworkTopology,
                      Port, SwitchState)
from .raman import default_table, load_table
from .rates import CoincidenceConfig, DetectorModel
from .scenario import Scenario
from .source import ChannelPair, EppSource, QuantumChannel, conjugate_wavelength

SCHEMA_VERSION = 1
BUILTIN = ("fig1a", "fig2", "fig3", "fig4")


def _resource(*parts):
    return resources.files("qcoex.data").joinpath(*parts).read_text()


def load_schema(name):
    return json.loads(_resource("schemas", f"{name}.schema.json"))


def builtin_config(name):
    if name not in BUILTIN:
        raise ConfigError(f"unknown builtin config {name!r}; choose from {', '.join(BUILTIN)}")
    return json.loads(_resource("configs", f"{name}.json"))


def _validate(doc, schema_name):
    try:
        jsonschema.validate(doc, load_schema(schema_name))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{schema_name}: {where}: {exc.message}") from exc


def validate_report(doc, command):
    _validate(doc, f"report_{command}")


@dataclass(frozen=True)
class RunConfig:
    data: dict
    source_path: str = "<builtin>"

    @property
    def name(self):
        return self.data.get("name", "unnamed")

    def section(self, key):
        sec = self.data.get(key)
        if sec is None:
            raise ConfigError(f"config {self.name!r} has no {key!r} section")
        return sec

    @property
    def seed(self):
        return int(self.data.get("seed", 0))

    def with_seed(self, seed):
        d = copy.deepcopy(self.data)
        d["seed"] = int(seed)
        return RunConfig(d, self.source_path)

    def canonical(self):
        return json.dumps(self.data, sort_keys=True, separators=(",", ":"))

    def hash(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()


def load_config(ref):
    """Load a config from a path or a builtin name and validate it."""
    if os.path.exists(ref):
        try:
            with open(ref) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{ref}: invalid JSON: {exc}") from exc
        path = os.path.abspath(ref)
    elif os.sep not in ref and not ref.endswith(".json"):
        data, path = builtin_config(ref), f"<builtin:{ref}>"
    else:
        raise ConfigError(f"config file {ref!r} not found")
    return parse_config(data, path)


def parse_config(data, path="<memory>"):
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    _validate(data, "config")
    cfg = RunConfig(data, path)
    build_topology(cfg)  # resolve cross-references early
    return cfg


def _attenuation(ref):
    if isinstance(ref, str):
        if ref not in NAMED_TABLES:
            raise ConfigError(f"unknown attenuation table {ref!r}")
        return NAMED_TABLES[ref]
    try:
        return AttenuationTable.from_dict(ref)
    except DomainError as exc:
        raise ConfigError(f"bad attenuation table: {exc}") from exc


def build_link(d):
    try:
        return FiberLink(d["name"], float(d["length_km"]), _attenuation(d.get("attenuation", "standard")),
                         float(d.get("excess_loss_db", 0.0)), bool(d.get("installed", False)),
                         d.get("a", ""), d.get("b", ""))
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc


def build_topology(cfg: RunConfig):
    net = cfg.section("network")
    links = tuple(build_link(l) for l in net["links"])
    names = [l.name for l in links]
    if len(set(names)) != len(names):
        raise ConfigError("duplicate link names")
    nodes = set()
    for l in links:
        nodes.update((l.a, l.b))
    ports = {}
    for pname, p in net["ports"].items():
        for ln in p["links"]:
            if ln not in names:
                raise ConfigError(f"port {pname!r} references unknown link {ln!r}")
        ports[pname] = Port(tuple(p["links"]), p["receiver"], float(p.get("extra_loss_db", 0.0)))
    receivers = tuple(net.get("receivers", sorted({p.receiver for p in ports.values()})))
    src = net.get("source_node", "src")
    for r in receivers + (src,):
        if r not in nodes:
            raise ConfigError(f"node {r!r} is not an endpoint of any link")
    sw = net.get("switch", {"signal": "lit", "idler": "dark"})
    for arm in ("signal", "idler"):
        if sw[arm] not in ports:
            raise ConfigError(f"switch sends {arm} to unknown port {sw[arm]!r}")
    return NetworkTopology(tuple(sorted(nodes)), links, ports, src, receivers,
                           bool(net.get("allow_shared_ports", False)))


def build_switch(cfg):
    sw = cfg.section("network").get("switch", {"signal": "lit", "idler": "dark"})
    return SwitchState(sw["signal"], sw["idler"])


def build_table(cfg):
    ref = cfg.data.get("raman_table")
    try:
        return load_table(ref) if ref else default_table()
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot load Raman table: {exc}") from exc


def build_source(cfg):
    s = cfg.data.get("source", {})
    return EppSource(
        pump_wavelength=float(s.get("pump_wavelength_nm", 1300.0)),
        rep_rate=float(s.get("rep_rate_hz", 416.7e6)),
        pulse_fwhm=float(s.get("pulse_fwhm_ps", 80.0)),
        mu=float(s.get("mu", 0.01)),
        joint_fwhm=float(s.get("joint_fwhm_nm", 40.0)),
        phase=float(s.get("phase_rad", 0.0)),
        flat_spectrum=bool(s.get("flat_spectrum", False)),
    )


def build_detector(cfg):
    d = cfg.data.get("detectors", {})
    return DetectorModel(float(d.get("efficiency", 0.92)), float(d.get("dark_cps", 100.0)),
                         float(d.get("jitter_fwhm_ps", 50.0)))


def build_plan(cfg, aggregate_dbm=None):
    c = cfg.data.get("classical")
    if not c:
        return ClassicalWdmPlan()
    power = c["aggregate_launch_dbm"] if aggregate_dbm is None else aggregate_dbm
    if power is None or power == -math.inf:
        return ClassicalWdmPlan((), tuple(c.get("links", ())))
    return ClassicalWdmPlan.evenly_loaded(c["wavelengths_nm"], float(power), tuple(c.get("links", ())),
                                          c.get("direction", "co"))


def build_pair(cfg):
    p = cfg.section("pair")
    pump = build_source(cfg).pump_wavelength
    bw = float(cfg.data.get("filter", {}).get("bandwidth_ghz", 50.0))
    sig = float(p["signal_nm"])
    idl = float(p["idler_nm"]) if "idler_nm" in p else conjugate_wavelength(sig, pump)
    return ChannelPair(QuantumChannel(sig, bw), QuantumChannel(idl, bw), pump)


def build_scenario(cfg, aggregate_dbm=None):
    f = cfg.data.get("filter", {})
    return Scenario(
        table=build_table(cfg),
        topology=build_topology(cfg),
        plan=build_plan(cfg, aggregate_dbm),
        source=build_source(cfg),
        detector=build_detector(cfg),
        coincidence=CoincidenceConfig(float(cfg.data.get("coincidence", {}).get("window_ps", 600.0))),
        filter_bandwidth=float(f.get("bandwidth_ghz", 50.0)),
        filter_loss_db=float(f.get("insertion_loss_db", 3.0)),
    )
