import csv
import json

import pytest

from ehfdr.cli import EXIT_CONFIG, EXIT_OK, main, render_csv, run
from ehfdr.config import load, parse_grid, parse_text, resolve
from ehfdr.errors import ConfigError
from ehfdr.experiments import ROW_FIELDS, Row


def test_grid_forms():
    assert parse_grid("10..50:10") == (10.0, 20.0, 30.0, 40.0, 50.0)
    assert parse_grid("-20..0:10") == (-20.0, -10.0, 0.0)
    assert parse_grid("0.1..0.3:0.1") == (0.1, 0.2, 0.3)
    assert parse_grid("1, 2.5,4") == (1.0, 2.5, 4.0)
    for bad in ["10..5:1", "1..5:0", "", "a,b"]:
        with pytest.raises(ConfigError):
            parse_grid(bad)


def test_defaults_reproduce_reference_parameters():
    p = resolve().system_params()
    assert p.gamma_th == pytest.approx(3.0)
    assert p.sigma_r2 == pytest.approx(10 ** -12.5)
    assert p.bandwidth_hz == 200e3
    assert p.rician_k == pytest.approx(10 ** 0.6)


def test_units_are_checked():
    cfg = resolve(overrides={"system.noise_relay_dbm": "-90 dBm", "system.d1_m": "12 m"})
    assert cfg["system.noise_relay_dbm"] == -90.0 and cfg["system.d1_m"] == 12.0
    with pytest.raises(ConfigError, match="unit"):
        resolve(overrides={"system.noise_relay_dbm": "-90 dB"})
    with pytest.raises(ConfigError, match="unit"):
        resolve(overrides={"system.eta": "0.5 dB"})


def test_flat_text_errors_carry_line_numbers():
    with pytest.raises(ConfigError, match="line 2: unknown key"):
        parse_text("system.eta = 0.5\nsystem.foo = 1\n")
    with pytest.raises(ConfigError, match="line 3"):
        parse_text("# comment\nrun.seed = 1\nrun.seed = 2\n")
    entries = parse_text("run.mode = delay_tolerant  # trailing comment\n")
    with pytest.raises(ConfigError, match="line 1"):
        resolve(parse_text("run.mode = sometimes\n"))
    assert resolve(entries)["run.mode"] == "delay_tolerant"


def test_value_validation():
    for key, value in [("run.alpha", "1.2"), ("run.n_blocks", "0"), ("run.n_blocks", "2.5"),
                       ("run.scheme", "best"), ("system.eta", "0"), ("sweep.placement", "0..1:0.5"),
                       ("run.kappa", "-0.1")]:
        with pytest.raises(ConfigError):
            resolve(overrides={key: value})
    with pytest.raises(ConfigError):
        resolve(overrides={"system.nope": "1"})


def test_gamma_hat_schedule():
    cfg = resolve()
    assert cfg.gamma_hat(30.0) == pytest.approx(10 ** 0.9)
    assert resolve(overrides={"run.gamma_hat_db": "12"}).gamma_hat(30.0) == pytest.approx(10 ** 1.2)


def test_file_loading(tmp_path):
    flat = tmp_path / "scenario.cfg"
    flat.write_text("run.seed = 5\nsystem.rsi_sigma02 = 0.4\n")
    assert load(flat)["run.seed"] == 5
    nested = tmp_path / "scenario.json"
    nested.write_text(json.dumps({"run": {"seed": 6}, "system": {"rsi_sigma02": 0.4}}))
    cfg = load(nested, {"run.seed": "7"})
    assert cfg["run.seed"] == 7 and cfg["system.rsi_sigma02"] == 0.4
    with pytest.raises(ConfigError):
        load(tmp_path / "missing.cfg")


def test_csv_rendering():
    text = render_csv([Row("ps_dbm", 10.0, "sinr", "outage", 1 / 3, "closed_form", 0.3333333333333, 1e-3, 10)])
    lines = list(csv.reader(text.splitlines()))
    assert tuple(lines[0]) == ROW_FIELDS
    assert lines[1][4] == "0.3333333333"
    assert lines[1][-1] == "ok"


def test_cli_exit_codes(tmp_path, capsys):
    out = tmp_path / "outage.csv"
    code = main(["outage", "--scheme", "sinr", "--ps-dbm", "10,20", "--n-blocks", "2000", "--out", str(out)])
    assert code == EXIT_OK
    rows = list(csv.DictReader(out.read_text().splitlines()))
    assert [r["axis_value"] for r in rows] == ["10", "20"]
    assert (tmp_path / "outage.manifest.json").exists()
    assert main(["outage", "--set", "run.bogus=1"]) == EXIT_CONFIG
    assert main(["outage", "--config", str(tmp_path / "none.cfg")]) == EXIT_CONFIG
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == EXIT_CONFIG


def test_manifest_reproduces_the_table(tmp_path):
    first = tmp_path / "a.csv"
    overrides = {"run.scheme": "maximum,target", "run.ps_dbm": "20,30", "run.n_blocks": "3000",
                 "run.alpha": "0.2", "output.path": str(first)}
    assert run("outage", overrides=overrides) == EXIT_OK
    manifest = tmp_path / "a.manifest.json"
    second = tmp_path / "b.csv"
    assert run("outage", manifest, {"output.path": str(second)}) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()


def test_stdout_output(capsys):
    assert main(["instantaneous", "--scheme", "sinr", "--ps-dbm", "30", "--out", "-"]) == EXIT_OK
    text = capsys.readouterr().out
    assert text.startswith(",".join(ROW_FIELDS))
    assert "ee_optimal_ps_dbm" in text
