import json

import numpy as np
import pytest

from dgopt.cli import main
from dgopt.network import bundled_path, dump_network, load_network, scale_loads
from dgopt.objective import evaluate
from dgopt.runner import (
    ConfigError,
    ScenarioConfig,
    build_scenario,
    compare,
    load_config,
    report_base_case,
    rows_to_csv,
    run_scenario,
)

SMALL = {"population": 8, "iterations": 3}


def write_config(tmp_path, name="cfg.json", **fields):
    doc = {"scenario": "load_profile", "lsa": SMALL, "pso": SMALL, "seeds": [0, 1], "output_dir": "out"}
    doc.update(fields)
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def test_missing_network_is_config_error(tmp_path):
    with pytest.raises(ConfigError, match="network"):
        load_config(write_config(tmp_path, network="nope.csv"))


@pytest.mark.parametrize(
    "fields",
    [
        {"scenario": "growth"},
        {"optimizer": "ga"},
        {"seeds": []},
        {"lsa": {"rho": 2.0}},
        {"pso": {"bogus": 1}},
        {"penalties": {"c_x": 1}},
        {"unknown_key": 1},
    ],
)
def test_invalid_configs(tmp_path, fields):
    with pytest.raises(ConfigError):
        load_config(write_config(tmp_path, **fields))


def test_bad_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(p)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.json")


def test_paths_relative_to_config(tmp_path):
    net = tmp_path / "data" / "feeder.json"
    net.parent.mkdir()
    dump_network(load_network(bundled_path("ieee33.csv")), net)
    cfg = load_config(write_config(tmp_path, network="data/feeder.json"))
    assert cfg.network == tmp_path / "data" / "feeder.json"
    assert cfg.output_dir == tmp_path / "out"


def test_constant_load_ignores_profile(tmp_path):
    bogus = tmp_path / "flat.csv"
    bogus.write_text("hour,value\n" + "".join(f"{h},0.1\n" for h in range(1, 25)))
    cfg = load_config(write_config(tmp_path, scenario="constant_load", load_profile="flat.csv"))
    scenario, base = build_scenario(cfg)
    assert np.all(scenario.multipliers == 1.0)
    assert base.total_loss_kwh == pytest.approx(24 * 202.677126456, rel=1e-9)


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("run")
    cfg = load_config(write_config(tmp))
    return cfg, run_scenario(cfg)


def test_report_contents(small_run):
    cfg, report = small_run
    out = cfg.output_dir
    assert json.loads((out / "report.json").read_text()) == report
    for name in (
        "trace_lsa_0.csv", "trace_lsa_1.csv", "trace_pso_0.csv", "trace_pso_1.csv",
        "lines_base.csv", "voltages_base.csv", "lines_lsa.csv", "voltages_pso.csv",
    ):
        assert (out / name).is_file(), name
    assert set(report["optimizers"]) == {"lsa", "pso"}
    lsa = report["optimizers"]["lsa"]
    assert len(lsa["per_seed"]) == 2 and all(r["monotone"] for r in lsa["per_seed"])
    assert lsa["best"]["objective"] == min(r["objective"] for r in lsa["per_seed"])


def test_report_internal_consistency(small_run, net33):
    cfg, report = small_run
    scenario, _ = build_scenario(cfg)
    base = report["base"]
    for res in report["optimizers"].values():
        best = res["best"]
        ev = evaluate(best["vector"], scenario)
        assert ev.objective == best["objective"]
        assert best["loss_reduction_pct"] == pytest.approx(
            100 * (base["loss_kwh"] - best["loss_kwh"]) / base["loss_kwh"], rel=1e-12)
        assert best["vdev_improvement_pct"] == pytest.approx(
            100 * (base["vdev_puh"] - best["vdev_puh"]) / base["vdev_puh"], rel=1e-12)
        assert best["loss_reduction_pct"] <= 100


def test_rerun_is_byte_identical(small_run, tmp_path):
    cfg, _ = small_run
    again = load_config(write_config(tmp_path))
    run_scenario(again)
    for f in sorted(cfg.output_dir.iterdir()):
        assert (again.output_dir / f.name).read_bytes() == f.read_bytes(), f.name


def test_workers_do_not_change_results(small_run, tmp_path):
    cfg, report = small_run
    par = load_config(write_config(tmp_path, workers=2))
    assert run_scenario(par)["optimizers"] == report["optimizers"]


def test_single_optimizer_single_seed(tmp_path):
    cfg = load_config(write_config(tmp_path, scenario="constant_load", optimizer="lsa", seeds=[3]))
    report = run_scenario(cfg)
    assert list(report["optimizers"]) == ["lsa"]
    assert report["optimizers"]["lsa"]["best"]["seed"] == 3
    assert "loss_reduction_pct" in report["optimizers"]["lsa"]["best"]


def test_base_case_report(tmp_path):
    cfg = load_config(write_config(tmp_path))
    m = report_base_case(cfg, tmp_path / "base")
    assert m["loss_kwh"] == pytest.approx(1618, rel=0.15)
    assert (m["max_line_loss_branch"], m["max_line_loss_hour"]) == (2, 19)
    assert (m["min_voltage_bus"], m["min_voltage_hour"]) == (18, 19)
    lines = (tmp_path / "base" / "lines_base.csv").read_text().splitlines()
    assert lines[0].split(",")[:3] == ["hour", "line_1", "line_2"] and len(lines) == 25
    volts = (tmp_path / "base" / "voltages_base.csv").read_text().splitlines()
    assert len(volts[0].split(",")) == 34 and len(volts) == 25


def test_base_case_zero_demand(tmp_path, net33):
    dump_network(scale_loads(net33, 0.0), tmp_path / "empty.csv")
    cfg = ScenarioConfig(network=tmp_path / "empty.csv", output_dir=tmp_path)
    m = report_base_case(cfg, tmp_path)
    assert m["loss_kwh"] == 0.0 and m["vdev_puh"] == 0.0
    rows = (tmp_path / "lines_base.csv").read_text().splitlines()[1:]
    assert len(rows) == 24
    assert all(float(x) == 0.0 for r in rows for x in r.split(",")[1:])


def test_compare_layout(small_run):
    _, report = small_run
    rows, text = compare([report, report])
    assert rows[0][2:6] == ["LSA", "LSA", "PSO", "PSO"]
    assert rows[1][2:4] == ["Location", "Size"]
    assert [r[0] for r in rows[2:5]] == ["PV", "WT", "FC"]
    # Identical reports give identical columns.
    for r in rows[2:5]:
        assert r[2:6] == r[6:10]
    assert "PV" in text and "Location" in text
    assert rows_to_csv(rows).count("\n") == len(rows)


def test_compare_scenario_mismatch(small_run):
    _, report = small_run
    other = dict(report, scenario="constant_load")
    with pytest.raises(ValueError, match="different scenarios"):
        compare([report, other])
    with pytest.raises(ValueError):
        compare([report])


def test_cli_exit_codes(tmp_path, capsys):
    good = write_config(tmp_path, optimizer="pso", seeds=[0])
    assert main(["run", "--config", str(good), "--out", str(tmp_path / "cli")]) == 0
    assert (tmp_path / "cli" / "report.json").is_file()
    assert main(["run", "--config", str(write_config(tmp_path, "b.json", network="x.csv"))]) == 1
    assert main(["basecase", "--config", str(good), "--out", str(tmp_path / "bc")]) == 0
    assert (tmp_path / "bc" / "lines_base.csv").is_file()
    rep = str(tmp_path / "cli" / "report.json")
    assert main(["compare", rep, rep, "--csv", str(tmp_path / "cmp.csv")]) == 0
    assert (tmp_path / "cmp.csv").is_file()
    assert main(["powerflow", "--network", str(bundled_path("ieee33.csv"))]) == 0
    assert "bus 18" in capsys.readouterr().out
    assert main(["powerflow", "--network", str(bundled_path("ieee33.csv")), "--hour", "all",
                 "--out", str(tmp_path / "pf")]) == 0
    assert (tmp_path / "pf" / "bus_voltages.csv").is_file()
    assert main(["powerflow", "--network", str(bundled_path("ieee33.csv")), "--hour", "25"]) == 1


def test_cli_computation_error(tmp_path, net33):
    dump_network(scale_loads(net33, 0.0), tmp_path / "empty.csv")
    cfg = write_config(tmp_path, network="empty.csv", seeds=[0])
    assert main(["run", "--config", str(cfg)]) == 2
