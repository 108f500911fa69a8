"""Command-line entry point: ``qcoex <command> --config <path|name> ...``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import config as cfgmod
from . import mcsim, planner, tomo
from .errors import ConfigError, QcoexError
from .network import ClassicalChannel, SwitchState
from .raman import frequency_offset, sprs_rate
from .rates import mu_for_ccr, visibility_vs_ccr_sweep
from .source import channel_grid

COMMANDS = ("spectrum", "rates", "sweep", "plan", "tomo", "mc")


def _clean(obj):
    """JSON-safe copy: non-finite floats become null, numpy scalars become Python."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps_json(doc):
    return json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n"


def dumps_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(r[h]) for h in header])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


class Output:
    def __init__(self, out_dir, fmt):
        self.out_dir = out_dir
        self.fmt = fmt
        self.written = []

    def write(self, name, text):
        os.makedirs(self.out_dir, exist_ok=True)
        path = os.path.join(self.out_dir, name)
        with open(path, "w", newline="") as fh:
            fh.write(text)
        self.written.append(path)
        return path

    def report(self, command, doc, csv_tables):
        """Write the JSON report or the CSV tables, depending on the format."""
        if self.fmt == "json":
            cfgmod.validate_report(_clean(doc), command)
            self.write(f"{command}.json", dumps_json(doc))
        else:
            for name, (header, rows) in csv_tables.items():
                self.write(name, dumps_csv(header, rows))


def _header(cfg, command):
    return {"command": command, "config_name": cfg.name, "config_hash": cfg.hash(), "seed": cfg.seed}


def _routing_switch(routing):
    return planner.ROUTINGS[routing]


def _routing_name(switch):
    for name, sw in planner.ROUTINGS.items():
        if sw == switch:
            return name
    return f"signal-{switch.signal}"


def _power_label(p):
    return "dark" if p is None else f"{p:g}dBm"


# spectrum -----------------------------------------------------------------

SPECTRUM_FIELDS = ("pump_nm", "quantum_nm", "offset_thz", "sprs_cps", "detected_cps")


def cmd_spectrum(cfg, out):
    sec = cfg.section("spectrum")
    table = cfgmod.build_table(cfg)
    link = cfgmod.build_link(sec["link"])
    eta = cfgmod.build_detector(cfg).efficiency
    bw = float(cfg.data.get("filter", {}).get("bandwidth_ghz", 50.0))
    q = sec["quantum_nm"]
    grid = np.arange(q["start"], q["stop"] + 0.5 * q["step"], q["step"])
    rows = []
    for pump in sec["pumps_nm"]:
        chan = ClassicalChannel(float(pump), float(sec["launch_dbm"]))
        for lam in grid:
            lam = float(lam)
            if lam >= pump:
                continue
            r = sprs_rate(table, chan, lam, bw, link, sec.get("direction", "co"))
            rows.append({"pump_nm": float(pump), "quantum_nm": lam,
                         "offset_thz": float(frequency_offset(lam, pump)),
                         "sprs_cps": r, "detected_cps": r * eta})
    doc = _header(cfg, "spectrum")
    doc.update({"units": {"pump_nm": "nm", "quantum_nm": "nm", "offset_thz": "THz",
                          "sprs_cps": "cps at fiber output", "detected_cps": "cps"},
                "launch_dbm": sec["launch_dbm"], "rows": rows})
    out.report("spectrum", doc, {"spectrum.csv": (SPECTRUM_FIELDS, rows)})


# rates --------------------------------------------------------------------

RATE_FIELDS = ("signal_nm", "idler_nm", "lit_nm", "routing", "launch_dbm", "mu", "ccr", "visibility_HV",
               "car", "accidentals", "true_coincidences", "multipair_orthogonal",
               "singles_signal", "singles_idler", "noise_signal", "noise_idler")


def _rate_row(pair, routing, power, pred):
    lit = pair.signal.center if routing == "signal-lit" else pair.idler.center
    d = pred.to_dict()
    return {"signal_nm": pair.signal.center, "idler_nm": pair.idler.center, "lit_nm": lit,
            "routing": routing, "launch_dbm": power, "mu": pred.mu, "ccr": pred.ccr,
            **{k: d[k] for k in RATE_FIELDS[7:] if k in d}}


def cmd_rates(cfg, out):
    rows = []
    scan = cfg.data.get("scan")
    if scan:
        base = cfgmod.build_scenario(cfg)
        grid = channel_grid(scan["band_nm"][0], scan["band_nm"][1], scan.get("spacing_ghz", 50.0),
                            base.source.pump_wavelength, base.filter_bandwidth)
        for power in scan["powers_dbm"]:
            sc = cfgmod.build_scenario(cfg, power)
            for pair in grid:
                for routing in ("signal-lit", "idler-lit"):
                    sig, idl = sc.arms(pair, _routing_switch(routing))
                    mu = mu_for_ccr(sc.source, sig, idl, float(scan["target_ccr"]), sc.coincidence)
                    rows.append(_rate_row(pair, routing, power, sc.predict(pair, _routing_switch(routing), mu)))
    else:
        sc = cfgmod.build_scenario(cfg)
        pair = cfgmod.build_pair(cfg)
        switch = cfgmod.build_switch(cfg)
        power = cfg.data.get("classical", {}).get("aggregate_launch_dbm")
        rows.append(_rate_row(pair, _routing_name(switch), power, sc.predict(pair, switch)))
    doc = _header(cfg, "rates")
    doc.update({"units": {"wavelengths": "nm", "launch_dbm": "dBm", "rates": "cps / ccps"}, "rows": rows})
    out.report("rates", doc, {"rates.csv": (RATE_FIELDS, rows)})


# sweep --------------------------------------------------------------------

def cmd_sweep(cfg, out):
    sec = cfg.section("sweep")
    m = sec["mu"]
    mus = np.geomspace(m["start"], m["stop"], int(m["num"]))
    pair = cfgmod.build_pair(cfg)
    curves, tables = [], {}
    for power in sec["powers_dbm"]:
        sc = cfgmod.build_scenario(cfg, power)
        for c in sec["curves"]:
            sig, idl = sc.arms(pair, _routing_switch(c["routing"]))
            pts = visibility_vs_ccr_sweep(sc.source, sig, idl, mus, sc.coincidence)
            rows = [dict(zip(p.FIELDS, p.row())) for p in pts]
            curves.append({"label": c["label"], "routing": c["routing"], "launch_dbm": power, "points": rows})
            tables[f"sweep_{c['label']}_{_power_label(power)}.csv"] = (pts[0].FIELDS if pts else (), rows)
    doc = _header(cfg, "sweep")
    doc.update({"units": {"mu": "pairs/pulse", "ccr_ccps": "ccps", "accidentals_ccps": "ccps"},
                "signal_nm": pair.signal.center, "idler_nm": pair.idler.center, "curves": curves})
    out.report("sweep", doc, tables)


# plan ---------------------------------------------------------------------

def cmd_plan(cfg, out):
    sec = cfg.section("planner")
    power = sec.get("launch_dbm", cfg.data.get("classical", {}).get("aggregate_launch_dbm"))
    sc = cfgmod.build_scenario(cfg, power)
    band = sec.get("band_nm", [1282.0, 1318.0])
    grid = channel_grid(band[0], band[1], sec.get("spacing_ghz", 50.0), sc.source.pump_wavelength,
                        sc.filter_bandwidth)
    m = sec.get("mu_grid", {"start": 1e-3, "stop": 0.2, "num": 20})
    mus = np.geomspace(m["start"], m["stop"], int(m["num"]))
    cons = planner.PlanConstraints(**sec.get("constraints", {}))
    objective = sec.get("objective", "max_visibility")
    cands = planner.enumerate_plans(grid, sc, mus)
    best = planner.optimize(cands, cons, objective)
    order = planner.ranked(cands, cons, objective)
    runners = [c.to_dict(objective) for c in order[1:1 + int(sec.get("runners_up", 5))]]
    doc = _header(cfg, "plan")
    doc.update({"objective": objective, "launch_dbm": power, "n_candidates": len(cands),
                "constraints": {"min_visibility": cons.min_visibility, "min_ccr": cons.min_ccr,
                                "max_mu": cons.max_mu},
                "chosen": best.to_dict(objective), "runners_up": runners})
    bands = sec.get("classical_bands")
    if bands:
        lit = best.pair.signal.center if best.routing == "signal-lit" else best.pair.idler.center
        link = sc.topology.link(sc.topology.ports["lit"].links[0])
        ranking = planner.classical_band_advisor(sc.table, lit, bands, link, sc.filter_bandwidth)
        doc["band_ranking"] = [{"band": b.name, "wavelengths_nm": list(b.wavelengths),
                                "cps_per_mw": b.cps_per_mw, "quantum_nm": lit} for b in ranking]
    header = ("rank", "signal_nm", "idler_nm", "routing", "mu", "visibility", "ccr_ccps", "fidelity",
              "sprs_singles_cps", "score")
    rows = [dict(rank=i, **d) for i, d in enumerate([best.to_dict(objective)] + runners)]
    out.report("plan", doc, {"plan.csv": (header, rows)})


# tomo ---------------------------------------------------------------------

def _reconstruct(rho, total, seconds, seed):
    records = tomo.simulate_counts(rho, tomo.settings_for(rho.shape[0]), total, seed=seed, seconds=seconds)
    return records, tomo.mle_reconstruct(records, rho.shape[0])


def cmd_tomo(cfg, out):
    sec = cfg.section("tomo")
    pair = cfgmod.build_pair(cfg)
    switch = _routing_switch(sec.get("routing", "signal-lit"))
    target = float(sec["target_ccr"])
    seconds = float(sec.get("seconds_per_setting", 60.0))
    rebuild = bool(sec.get("reconstruct", True))
    seed = cfg.seed
    phi = tomo.phi_plus(cfgmod.build_source(cfg).phase)
    rho_dark = tomo.dephased_bell(float(sec["dark_fidelity"]), cfgmod.build_source(cfg).phase)
    files = {}
    dark = {"fidelity_to_phi_plus": tomo.fidelity(phi, rho_dark), "purity": tomo.purity(rho_dark),
            "density_matrix": tomo.density_to_dict(rho_dark)}
    dark_hat = None
    if rebuild:
        recs, dark_hat = _reconstruct(rho_dark, target * seconds, seconds, seed)
        files["counts_dark.csv"] = tomo.records_to_csv(recs)
        dark.update({"reconstructed_fidelity_to_phi_plus": tomo.fidelity(phi, dark_hat),
                     "reconstructed_purity": tomo.purity(dark_hat),
                     "reconstructed_density_matrix": tomo.density_to_dict(dark_hat)})
    states = []
    for k, power in enumerate(sec["powers_dbm"]):
        # a null power is a dark fiber, not the config default
        sc = cfgmod.build_scenario(cfg, -math.inf if power is None else power)
        sig, idl = sc.arms(pair, switch)
        mu = mu_for_ccr(sc.source, sig, idl, target, sc.coincidence)
        pred = sc.predict(pair, switch, mu)
        dark_pred = cfgmod.build_scenario(cfg, -math.inf).predict(pair, switch, mu)
        rho, eps = tomo.coexistence_state(rho_dark, pred, dark_pred)
        row = {"launch_dbm": power, "mu": mu, "ccr": pred.ccr, "visibility_HV": pred.visibility_HV,
               "epsilon": eps, "fidelity_to_dark": tomo.fidelity(rho_dark, rho),
               "fidelity_to_phi_plus": tomo.fidelity(phi, rho), "purity": tomo.purity(rho),
               "density_matrix": tomo.density_to_dict(rho)}
        if rebuild:
            recs, rho_hat = _reconstruct(rho, pred.ccr * seconds, seconds, seed + k + 1)
            files[f"counts_{_power_label(power)}.csv"] = tomo.records_to_csv(recs)
            row.update({"reconstructed_fidelity_to_dark": tomo.fidelity(dark_hat, rho_hat),
                        "reconstructed_purity": tomo.purity(rho_hat),
                        "reconstructed_density_matrix": tomo.density_to_dict(rho_hat)})
        states.append(row)
    doc = _header(cfg, "tomo")
    doc.update({"signal_nm": pair.signal.center, "idler_nm": pair.idler.center,
                "routing": _routing_name(switch), "target_ccr": target, "dark": dark, "states": states})
    nq = sec.get("noise_qubit")
    if nq:
        recs, rho_n = _reconstruct(tomo.maximally_mixed(2), float(nq["counts_per_setting"]), 1.0, seed + 1000)
        files["counts_noise_qubit.csv"] = tomo.records_to_csv(recs)
        doc["noise_qubit"] = {"purity": tomo.purity(rho_n), "density_matrix": tomo.density_to_dict(rho_n)}
    header = ("launch_dbm", "mu", "ccr", "visibility_HV", "epsilon", "fidelity_to_dark",
              "fidelity_to_phi_plus", "purity")
    if out.fmt == "csv":
        for name, text in files.items():
            out.write(name, text)
    out.report("tomo", doc, {"tomo.csv": (header, states)})


# mc -----------------------------------------------------------------------

def cmd_mc(cfg, out, workers=None, dump_events=None):
    sec = cfg.section("mc")
    sc = cfgmod.build_scenario(cfg)
    pair = cfgmod.build_pair(cfg)
    switch = _routing_switch(sec.get("routing", "signal-lit"))
    sig, idl = sc.arms(pair, switch)
    pred = sc.predict(pair, switch)
    sim = mcsim.SimConfig.from_arms(sc.source, sig, idl, sc.coincidence, int(sec["n_pulses"]), cfg.seed,
                                    statistics=sec.get("statistics", "thermal"),
                                    block_pulses=int(sec.get("block_pulses", 1 << 22)))
    run = mcsim.run(sim, workers or int(sec.get("workers", 1)))
    mc = run.to_dict()
    analytic = {"singles_signal": pred.singles_signal, "singles_idler": pred.singles_idler,
                "ccr": pred.ccr, "accidentals": pred.delayed_window_accidentals,
                "visibility": pred.visibility_HV}
    # counting quantities use the analytic Poisson sigma so an empty window still scores
    dur = sim.duration
    sigma = {k: math.sqrt(max(analytic[k], 1.0 / dur) / dur) for k in analytic if k != "visibility"}
    sigma["visibility"] = mc["visibility_stderr"]
    z = {k: (mc[k] - analytic[k]) / sigma[k] if sigma[k] and math.isfinite(sigma[k])
         and math.isfinite(mc[k]) else None for k in analytic}
    doc = _header(cfg, "mc")
    doc.update({"routing": _routing_name(switch), "signal_nm": pair.signal.center,
                "idler_nm": pair.idler.center, "mu": sc.source.mu,
                "monte_carlo": mc, "analytic": analytic, "z_scores": z})
    rows = [{"quantity": k, "monte_carlo": mc[k], "sigma": sigma[k], "analytic": analytic[k], "z": z[k]}
            for k in analytic]
    out.report("mc", doc, {"mc.csv": (("quantity", "monte_carlo", "sigma", "analytic", "z"), rows)})
    if dump_events is None:
        dump_events = sec.get("dump_events", False)
    if dump_events:
        out.write("events.csv", mcsim.events_csv(run.signal, run.idler))


HANDLERS = {"spectrum": cmd_spectrum, "rates": cmd_rates, "sweep": cmd_sweep, "plan": cmd_plan,
            "tomo": cmd_tomo, "mc": cmd_mc}


def build_parser():
    parser = argparse.ArgumentParser(prog="qcoex", description="Quantum/classical fiber coexistence engine.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="config file or builtin name (fig1a, fig2, fig3, fig4)")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--format", choices=("csv", "json"), default="json")
        if name == "mc":
            p.add_argument("--workers", type=int, default=None)
            p.add_argument("--dump-events", action="store_true", default=None)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = cfgmod.load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be >= 0")
            cfg = cfg.with_seed(args.seed)
        out = Output(args.out or cfg.data.get("output_dir", "."), args.format)
        if args.command == "mc":
            cmd_mc(cfg, out, args.workers, args.dump_events)
        else:
            HANDLERS[args.command](cfg, out)
    except QcoexError as exc:
        print(f"qcoex: error: {exc}", file=sys.stderr)
        return exc.exit_code
    for path in out.written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
