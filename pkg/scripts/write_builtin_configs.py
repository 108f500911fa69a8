"""Regenerate the shipped example configs under src/qcoex/data/configs."""
import copy
import json
import pathlib

OUT = pathlib.Path(__file__).resolve().parents[1] / "src" / "qcoex" / "data" / "configs"

WDM = [1549.0 + 1.6 * k for k in range(11)]

BASE = {
    "schema_version": 1,
    "seed": 0,
    "raman_table": None,
    "network": {
        "source_node": "src",
        "receivers": ["lit_rx", "dark_rx"],
        "links": [
            {"name": "installed", "a": "src", "b": "lit_rx", "length_km": 47.9,
             "attenuation": "installed", "excess_loss_db": 3.893, "installed": True},
            {"name": "spool", "a": "src", "b": "dark_rx", "length_km": 5.4,
             "attenuation": "standard", "excess_loss_db": 1.0, "installed": False},
        ],
        "ports": {
            "lit": {"links": ["installed"], "receiver": "lit_rx", "extra_loss_db": 18.3},
            "dark": {"links": ["spool"], "receiver": "dark_rx", "extra_loss_db": 5.0},
        },
        "switch": {"signal": "lit", "idler": "dark"},
        "allow_shared_ports": False,
    },
    "classical": {"wavelengths_nm": WDM, "aggregate_launch_dbm": 18.1,
                  "links": ["installed"], "direction": "co"},
    "source": {"pump_wavelength_nm": 1300.0, "rep_rate_hz": 416.7e6, "pulse_fwhm_ps": 80.0,
               "mu": 0.01, "joint_fwhm_nm": 40.0, "phase_rad": 0.0, "flat_spectrum": False},
    "detectors": {"efficiency": 0.92, "dark_cps": 100.0, "jitter_fwhm_ps": 50.0},
    "coincidence": {"window_ps": 600.0},
    "filter": {"bandwidth_ghz": 50.0, "insertion_loss_db": 3.0},
    "pair": {"signal_nm": 1287.0},
}


def variant(name, **sections):
    cfg = copy.deepcopy(BASE)
    cfg["name"] = name
    cfg.update(sections)
    return cfg


CONFIGS = {
    "fig1a": variant("fig1a", spectrum={
        "pumps_nm": [1530.0, 1550.0, 1565.0, 1580.0, 1617.0],
        "launch_dbm": 2.05,
        "link": {"name": "spool25", "a": "src", "b": "rx", "length_km": 25.0,
                 "attenuation": "standard", "excess_loss_db": 0.0},
        "quantum_nm": {"start": 1260.0, "stop": 1360.0, "step": 1.0},
        "direction": "co",
    }),
    "fig2": variant("fig2", scan={
        "band_nm": [1282.0, 1318.0], "spacing_ghz": 50.0,
        "powers_dbm": [14.0, 16.2, 18.1], "target_ccr": 44.3,
    }, planner={
        "band_nm": [1282.0, 1318.0], "spacing_ghz": 50.0,
        "mu_grid": {"start": 0.001, "stop": 0.2, "num": 20},
        "objective": "max_visibility",
        "constraints": {"min_visibility": 0.707, "min_ccr": 10.0},
        "runners_up": 5,
        "classical_bands": {"C 1550": [1550.0], "L 1580": [1580.0], "L 1617": [1617.0]},
    }),
    "fig3": variant("fig3", sweep={
        "curves": [{"label": "1287-lit", "routing": "signal-lit"},
                   {"label": "1313-lit", "routing": "idler-lit"}],
        "powers_dbm": [14.0, 16.2, 18.1],
        "mu": {"start": 0.001, "stop": 0.1, "num": 40},
    }, mc={"n_pulses": 1000000000, "routing": "signal-lit", "statistics": "poisson",
           "block_pulses": 4194304, "workers": 1, "dump_events": False}),
    "fig4": variant("fig4", tomo={
        "powers_dbm": [14.0, 16.2, 18.1], "target_ccr": 30.1, "routing": "signal-lit",
        "dark_fidelity": 0.977, "seconds_per_setting": 60.0, "reconstruct": True,
        "noise_qubit": {"counts_per_setting": 20000.0},
    }),
}

if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    for name, cfg in CONFIGS.items():
        (OUT / f"{name}.json").write_text(json.dumps(cfg, indent=2) + "\n")
        print("wrote", name)
