"""Compose the network, noise and source models into per-arm rate inputs."""
from __future__ import annotations

from dataclasses import dataclass, replace

from .network import ClassicalWdmPlan, NetworkTopology, SwitchState, path_loss_db, route
from .raman import RamanGainTable, plan_sprs_rate
from .rates import ArmModel, CoincidenceConfig, DetectorModel, coincidence_rates
from .source import ChannelPair, EppSource


@dataclass(frozen=True)
class Scenario:
    table: RamanGainTable
    topology: NetworkTopology
    plan: ClassicalWdmPlan
    source: EppSource = EppSource()
    detector: DetectorModel = DetectorModel()
    coincidence: CoincidenceConfig = CoincidenceConfig()
    filter_bandwidth: float = 50.0  # GHz
    filter_loss_db: float = 3.0

    def with_power(self, aggregate_dbm):
        return replace(self, plan=self.plan.scaled_to(aggregate_dbm))

    def with_mu(self, mu):
        return replace(self, source=replace(self.source, mu=float(mu)))

    def arm(self, arm_route, wavelength):
        loss = path_loss_db(arm_route.links, wavelength) + self.filter_loss_db + arm_route.extra_loss_db
        noise = 0.0
        for i, link in enumerate(arm_route.links):
            channels = arm_route.coexisting.get(link.name, ())
            if not channels:
                continue
            generated = plan_sprs_rate(self.table, channels, wavelength, self.filter_bandwidth,
                                       link, self.plan.direction_on(link.name))
            downstream = path_loss_db(arm_route.links[i + 1:], wavelength)
            noise += generated * 10.0 ** (-downstream / 10.0)
        return ArmModel(loss, noise, self.detector)

    def arms(self, pair: ChannelPair, switch: SwitchState):
        routes = route(self.topology, switch, self.plan)
        return (self.arm(routes["signal"], pair.signal.center),
                self.arm(routes["idler"], pair.idler.center))

    def predict(self, pair: ChannelPair, switch: SwitchState, mu=None):
        src = self.source if mu is None else replace(self.source, mu=float(mu))
        sig, idl = self.arms(pair, switch)
        return coincidence_rates(src, sig, idl, self.coincidence)
