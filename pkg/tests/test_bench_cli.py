import csv
import io
import json
from unittest import mock

import numpy as np
import pytest

from gridsense import bench, cli, gamp
from gridsense.bench import (
    CSV_COLUMNS,
    RunConfig,
    bit_account,
    emit_report,
    read_csv_report,
    run_scenario,
    scenario_from_dict,
    worker_count,
)
from gridsense.exceptions import ConfigParseError, NumericBlowup
from gridsense.quantization import Full, Quantized, QuantizerSpec

BASE = {
    "network": "feeder69",
    "prior": {"magnitude_mean": 1.0, "phase_mean": 5.6e-4, "variance": 5.46e-7},
    "noise_variance": 0.02,
    "trials": 3,
    "seed": 42,
}


def scenario(**kw):
    return scenario_from_dict({**BASE, **kw})


@pytest.fixture(scope="module")
def small_report():
    return run_scenario(RunConfig(scenario(profile={"mode": "k_ladder", "k": 2, "bits": 2})))


def _tags(P, k, bits):
    return [Quantized(QuantizerSpec(bits, 1.0))] * k + [Full()] * (P - k)


def test_bit_accounting_headline_numbers():
    a = bit_account(_tags(76, 34, 6))
    assert (a.bits_total, a.baseline_bits, a.saved_pct) == (876, 1216, 27.96)
    assert bit_account(_tags(76, 42, 6)).saved_pct == 34.53
    assert a.component_bits == 1752
    assert bit_account([Full()] * 76).saved_pct == 0


def test_report_basics(small_report):
    r = small_report
    assert r.trials == 3 and [row.trials for row in r.rows] == [3, 3]
    assert r.seed == 42 and r.diverged == 0
    g = r.row("emswgamp")
    assert g.mse == pytest.approx(np.mean([o.mse for o in r.per_trial["emswgamp"]]), rel=1e-15)
    assert len(r.config["step_per_channel"]) == 76
    assert sum(s is not None for s in r.config["step_per_channel"]) == 2


def test_all_full_gamp_beats_lmmse():
    r = run_scenario(RunConfig(scenario(profile={"mode": "full"}, trials=4)))
    assert r.row("emswgamp").mse < r.row("lmmse").mse


def test_determinism():
    cfg = lambda: RunConfig(scenario(trials=1))
    a, b = run_scenario(cfg()), run_scenario(cfg())
    strip = lambda rep: [{k: v for k, v in r.items() if k != "secs_per_trial"}
                         for r in read_csv_report(emit_report(rep, "csv"))]
    assert repr(strip(a)) == repr(strip(b))  # repr so that nan fields compare equal
    assert a.per_trial["emswgamp"][0].iterations == b.per_trial["emswgamp"][0].iterations


def test_worker_count_does_not_change_results(monkeypatch):
    cfg = RunConfig(scenario(trials=4), ("emswgamp",))
    one = run_scenario(cfg, workers=1)
    monkeypatch.setenv("GRIDSENSE_THREADS", "3")
    many = run_scenario(cfg, workers=4)
    assert one.row("emswgamp").mse == many.row("emswgamp").mse


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("GRIDSENSE_THREADS", "2")
    assert worker_count(16) == 2
    monkeypatch.setenv("GRIDSENSE_THREADS", "x")
    with pytest.raises(ConfigParseError):
        worker_count(4)


def test_lmmse_only_builds_no_solver_state():
    with mock.patch.object(gamp, "init_state", side_effect=AssertionError("solver used")):
        r = run_scenario(RunConfig(scenario(trials=2), ("lmmse",)))
    assert [row.estimator for row in r.rows] == ["lmmse"]


def test_divergence_is_flagged(monkeypatch):
    monkeypatch.setattr(gamp, "run", mock.Mock(side_effect=NumericBlowup("boom")))
    r = run_scenario(RunConfig(scenario(trials=2)))
    assert r.row("emswgamp").diverged == 2 and r.row("lmmse").diverged == 0
    assert np.isnan(r.row("emswgamp").mse)


def test_csv_json_pretty(tmp_path, small_report):
    text = emit_report(small_report, "csv", tmp_path / "r.csv")
    header = next(csv.reader(io.StringIO(text)))
    assert header == CSV_COLUMNS
    recs = read_csv_report((tmp_path / "r.csv").read_text())
    assert recs[0]["mse"] == small_report.row("emswgamp").mse
    assert recs[0]["bits_total"] == 76 * 16 - 2 * 14
    doc = json.loads(emit_report(small_report, "json"))
    assert doc["columns"] == CSV_COLUMNS
    assert doc["rows"][0]["mse"] == small_report.row("emswgamp").mse
    assert doc["rows"][1]["nu_x_re"] is None
    assert set(doc["rows"][0]) == set(CSV_COLUMNS)
    table = emit_report(small_report, "pretty").strip().splitlines()
    assert len(table) == 2 + 2


@pytest.mark.parametrize("bad", [
    {"noise_variance": "x"},
    {"profile": {"mode": "weird"}},
    {"profile": {"mode": "k_ladder", "bits": 1}},
    {"profile": {"mode": "explicit", "channels": [1], "bits": 0}},
    {"network": "does-not-exist"},
    {"prior": "nope"},
])
def test_config_errors(bad):
    with pytest.raises(ConfigParseError):
        scenario_from_dict({**BASE, **bad})


def test_run_config_validation():
    with pytest.raises(ConfigParseError):
        RunConfig(scenario(), ())
    with pytest.raises(ConfigParseError):
        RunConfig(scenario(), ("wls",))


# -- command line


def _write(tmp_path, **kw):
    p = tmp_path / "scenario.json"
    p.write_text(json.dumps({**BASE, **kw}))
    return str(p)


def test_cli_validate(capsys):
    from gridsense.network import _DATA
    assert cli.main(["validate", str(_DATA / "six_bus.json")]) == 0
    assert "N=6" in capsys.readouterr().out


def test_cli_validate_bad_file(tmp_path, capsys):
    p = tmp_path / "net.json"
    p.write_text('{"buses": [{"id": 1}], "lines": [], "current_meters": [], "pmu_buses": [1]}')
    assert cli.main(["validate", str(p)]) == 1


def test_cli_run_csv(tmp_path, capsys):
    out = tmp_path / "r.csv"
    code = cli.main(["run", _write(tmp_path, trials=1), "--format", "csv", "-o", str(out), "--em", "off", "--seed", "5"])
    assert code == 0
    recs = read_csv_report(out.read_text())
    assert [r["estimator"] for r in recs] == ["emswgamp", "lmmse"] and recs[0]["seed"] == 5


def test_cli_config_error(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert cli.main(["run", str(p)]) == 1
    assert cli.main(["run", _write(tmp_path), "--damping", "3"]) == 1


def test_cli_diverged_exit_code(tmp_path, monkeypatch):
    monkeypatch.setattr(gamp, "run", mock.Mock(side_effect=NumericBlowup("boom")))
    assert cli.main(["run", _write(tmp_path, trials=1)]) == 2


def test_cli_sweep(tmp_path, capsys):
    code = cli.main(["sweep", "--k", "2,4", _write(tmp_path, trials=1), "--format", "csv",
                     "--estimators", "lmmse"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert [r["k"] for r in rows] == ["2", "4"]
    assert [int(r["bits_total"]) for r in rows] == [1216 - 2 * 15, 1216 - 4 * 15]
