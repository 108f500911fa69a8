import copy
import csv
import io
import json
import os
import subprocess
import sys

import jsonschema
import pytest

from qcoex import cli, config, tomo
from qcoex.errors import ConvergenceError


def run(*args):
    return cli.main([str(a) for a in args])


def write_config(tmp_path, name, mutate):
    d = copy.deepcopy(config.builtin_config(name))
    mutate(d)
    path = tmp_path / f"{name}-custom.json"
    path.write_text(json.dumps(d))
    return path


def read_csv(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def report(path):
    doc = json.loads(path.read_text())
    jsonschema.validate(doc, config.load_schema(f"report_{doc['command']}"))
    return doc


class TestSpectrum:
    def test_csv_ordering_and_ratio(self, tmp_path):
        assert run("spectrum", "--config", "fig1a", "--out", tmp_path, "--format", "csv") == 0
        rows = read_csv(tmp_path / "spectrum.csv")
        keys = [(float(r["pump_nm"]), float(r["quantum_nm"])) for r in rows]
        assert keys == sorted(keys)
        c = {float(r["quantum_nm"]): float(r["sprs_cps"]) for r in rows if float(r["pump_nm"]) == 1550.0}
        assert 0.05 <= c[1290.0] / c[1310.0] <= 0.2
        assert all(float(r["offset_thz"]) > 0 for r in rows)

    def test_empty_pumps(self, tmp_path):
        path = write_config(tmp_path, "fig1a", lambda d: d["spectrum"].update(pumps_nm=[]))
        assert run("spectrum", "--config", path, "--out", tmp_path / "o", "--format", "csv") == 0
        assert (tmp_path / "o" / "spectrum.csv").read_text() == ",".join(cli.SPECTRUM_FIELDS) + "\n"

    def test_json_report(self, tmp_path):
        assert run("spectrum", "--config", "fig1a", "--out", tmp_path) == 0
        doc = report(tmp_path / "spectrum.json")
        assert doc["config_hash"] == config.load_config("fig1a").hash()
        assert doc["units"]["sprs_cps"]

    def test_table_override(self, tmp_path, monkeypatch, table):
        run("spectrum", "--config", "fig1a", "--out", tmp_path / "a")
        alt = tmp_path / "t.json"
        alt.write_text(table.with_scale(2 * table.calibration_scale).dumps())
        monkeypatch.setenv("QCOEX_TABLE", str(alt))
        run("spectrum", "--config", "fig1a", "--out", tmp_path / "b")
        a = json.loads((tmp_path / "a" / "spectrum.json").read_text())["rows"]
        b = json.loads((tmp_path / "b" / "spectrum.json").read_text())["rows"]
        assert b[0]["sprs_cps"] == pytest.approx(2 * a[0]["sprs_cps"])


class TestRatesSweep:
    def test_scan(self, tmp_path):
        assert run("rates", "--config", "fig2", "--out", tmp_path) == 0
        doc = report(tmp_path / "rates.json")
        powers = {r["launch_dbm"] for r in doc["rows"]}
        assert powers == {14.0, 16.2, 18.1}
        assert all(r["ccr"] == pytest.approx(44.3) for r in doc["rows"])

    def test_single_point(self, tmp_path):
        path = write_config(tmp_path, "fig3", lambda d: None)
        assert run("rates", "--config", path, "--out", tmp_path, "--format", "csv") == 0
        rows = read_csv(tmp_path / "rates.csv")
        assert len(rows) == 1 and rows[0]["routing"] == "signal-lit"

    def test_sweep_curves(self, tmp_path):
        assert run("sweep", "--config", "fig3", "--out", tmp_path, "--format", "csv") == 0
        files = sorted(p.name for p in tmp_path.glob("sweep_*.csv"))
        assert len(files) == 6
        for name in files:
            assert (tmp_path / name).read_text().splitlines()[0] == "mu,ccr_ccps,visibility,car,accidentals_ccps"
        assert run("sweep", "--config", "fig3", "--out", tmp_path) == 0
        doc = report(tmp_path / "sweep.json")
        labels = {c["label"] for c in doc["curves"]}
        assert labels == {"1287-lit", "1313-lit"}
        for p in (14.0, 16.2, 18.1):
            curves = {c["label"]: c["points"] for c in doc["curves"] if c["launch_dbm"] == p}
            for a, b in zip(curves["1287-lit"], curves["1313-lit"]):
                assert a["visibility"] > b["visibility"]


class TestPlan:
    def test_plan(self, tmp_path):
        assert run("plan", "--config", "fig2", "--out", tmp_path) == 0
        doc = report(tmp_path / "plan.json")
        chosen = doc["chosen"]
        lit = chosen["signal_nm"] if chosen["routing"] == "signal-lit" else chosen["idler_nm"]
        assert lit < 1300.0
        assert doc["band_ranking"][-1]["band"].startswith("C")

    def test_infeasible_exit(self, tmp_path, capsys):
        path = write_config(tmp_path, "fig2", lambda d: d["planner"]["constraints"].update(min_visibility=0.9999))
        assert run("plan", "--config", path, "--out", tmp_path) == 4
        assert "min_visibility" in capsys.readouterr().err


class TestTomo:
    def test_fig4(self, tmp_path):
        assert run("tomo", "--config", "fig4", "--out", tmp_path) == 0
        doc = report(tmp_path / "tomo.json")
        fids = [s["fidelity_to_dark"] for s in doc["states"]]
        assert fids[0] > fids[1] > fids[2]
        assert doc["noise_qubit"]["purity"] == pytest.approx(0.5, abs=0.01)

    def test_zero_power(self, tmp_path):
        path = write_config(tmp_path, "fig4", lambda d: d["tomo"].update(powers_dbm=[None], reconstruct=False))
        assert run("tomo", "--config", path, "--out", tmp_path) == 0
        state = report(tmp_path / "tomo.json")["states"][0]
        assert state["epsilon"] == 0.0 and state["fidelity_to_dark"] == pytest.approx(1.0, abs=1e-9)

    def test_csv_counts(self, tmp_path):
        assert run("tomo", "--config", "fig4", "--out", tmp_path, "--format", "csv") == 0
        recs = tomo.records_from_csv((tmp_path / "counts_dark.csv").read_text())
        assert len(recs) == 36

    def test_nonconvergence_exit(self, tmp_path, monkeypatch):
        def fail(*a, **k):
            raise ConvergenceError("stalled")

        monkeypatch.setattr(tomo, "mle_reconstruct", fail)
        assert run("tomo", "--config", "fig4", "--out", tmp_path) == 5


class TestMc:
    def test_agrees_with_rates(self, tmp_path):
        assert run("mc", "--config", "fig3", "--out", tmp_path) == 0
        doc = report(tmp_path / "mc.json")
        for key, z in doc["z_scores"].items():
            assert z is not None and abs(z) < 3.0, key

    def test_dump_events(self, tmp_path):
        path = write_config(tmp_path, "fig3", lambda d: d["mc"].update(n_pulses=1_000_000))
        assert run("mc", "--config", path, "--out", tmp_path, "--dump-events", "--format", "csv") == 0
        assert (tmp_path / "events.csv").read_text().startswith("arm,t_ps,tag,label\n")
        assert (tmp_path / "mc.csv").exists()


class TestErrors:
    def test_config_error(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"schema_version": 1}')
        assert run("rates", "--config", bad) == 2
        assert run("rates", "--config", tmp_path / "missing.json") == 2

    def test_domain_error(self, tmp_path):
        path = write_config(tmp_path, "fig3", lambda d: d["pair"].update(signal_nm=1200.0))
        assert run("rates", "--config", path, "--out", tmp_path) == 3

    def test_unreachable_ccr(self, tmp_path):
        path = write_config(tmp_path, "fig4", lambda d: d["tomo"].update(target_ccr=1e9))
        assert run("tomo", "--config", path, "--out", tmp_path) == 3

    def test_missing_section(self, tmp_path):
        assert run("tomo", "--config", "fig3", "--out", tmp_path) == 2

    def test_usage_errors(self):
        with pytest.raises(SystemExit) as err:
            cli.main(["rates", "--config", "fig3", "--format", "xml"])
        assert err.value.code == 2
        with pytest.raises(SystemExit):
            cli.main(["fly"])

    def test_negative_seed(self, tmp_path):
        assert run("mc", "--config", "fig3", "--seed", -1, "--out", tmp_path) == 2


def test_seed_recorded(tmp_path):
    path = write_config(tmp_path, "fig3", lambda d: d["mc"].update(n_pulses=1_000_000))
    assert run("mc", "--config", path, "--seed", 17, "--out", tmp_path) == 0
    doc = report(tmp_path / "mc.json")
    assert doc["seed"] == 17 and doc["monte_carlo"]["seed"] == 17
    assert doc["config_hash"] == config.load_config(str(path)).with_seed(17).hash()


def test_console_script_without_numba(tmp_path):
    env = dict(os.environ, QCOEX_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-m", "qcoex.cli", "sweep", "--config", "fig3", "--out", str(tmp_path)],
                         env=env, capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert (tmp_path / "sweep.json").exists()
