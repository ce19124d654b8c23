import csv
import io
import json
import math
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from fcqkd import cli
from fcqkd.channel import FiberChannel
from fcqkd.config import (
    ConfigError,
    EveConfig,
    RunConfig,
    SessionConfig,
    emit_config,
    paper_config,
    parse_config,
    parse_quantity,
)
from fcqkd.security import SystemParams

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
PAPER_YAML = CONFIGS / "paper.yaml"


# -------------------------------------------------------------------- units


@pytest.mark.parametrize("text,kind,si", [
    ("1 ps^2/km", "gvd", 1e-27),
    ("1 ps**2/km", "gvd", 1e-27),
    ("100 km", "length", 1e5),
    ("1 GHz", "frequency", 1e9),
    ("1 THz", "frequency", 1e12),
    ("0.35 dB/km", "attenuation", 0.35),
    ("5000 ns/km", "slowness", 5e-9),
    (2.5, "length", 2500.0),
    ("1e15", "frequency", 1e15),
])
def test_parse_quantity(text, kind, si):
    assert parse_quantity(text, kind) == pytest.approx(si, rel=1e-15)


def test_cycles_convention():
    assert parse_quantity("1 GHz", "frequency", cycles=True) == pytest.approx(2 * math.pi * 1e9)
    assert parse_quantity("1e9 rad/s", "frequency", cycles=True) == 1e9


@pytest.mark.parametrize("bad", ["fast", "1 parsec", True, [1]])
def test_parse_quantity_errors(bad):
    with pytest.raises(ConfigError):
        parse_quantity(bad, "length", key="channel.length")


# ------------------------------------------------------------------ parsing


def test_minimal_document_defaults():
    cfg = parse_config("system:\n  delta_omega: 1 GHz\n")
    assert cfg.system.delta_omega == pytest.approx(1e9)
    assert cfg.system.omega0 == 1e15
    assert cfg.channel.beta_re == 1e-27
    assert cfg.channel.length == 1e5
    assert cfg.channel.loss_db_per_km == 0.35
    assert cfg.eve == EveConfig()
    assert cfg.run == RunConfig()


def test_empty_document():
    assert parse_config("") == parse_config("system: {}\n")


def test_beta_unit_conversion():
    assert parse_config("channel:\n  beta: 1 ps^2/km\n").channel.beta_re == 1e-27


def test_paper_file_matches_preset():
    cfg = cli.load_config(PAPER_YAML)
    ref = paper_config(length=100e3, master_seed=7)
    assert cfg.system == ref.system
    assert cfg.channel == ref.channel


def test_negative_loss_names_key():
    with pytest.raises(ConfigError) as exc:
        parse_config("channel:\n  loss: -0.2 dB/km\n")
    assert any(e.startswith("channel.loss") for e in exc.value.errors)


def test_every_error_reported():
    doc = ("channel:\n  loss: -1\n  length: -5 km\n  colour: red\n"
           "run:\n  efficiency: 2\n  priors: [1, 1, 1]\nextra: 1\n")
    with pytest.raises(ConfigError) as exc:
        parse_config(doc)
    keys = {e.split(":")[0] for e in exc.value.errors}
    assert {"channel.loss", "channel.length", "channel.colour", "run.efficiency",
            "run.priors", "extra"} <= keys


def test_parse_error_location():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config("system:\n  sigma1: 1 GHz: 2\n")


def test_inconsistent_frequencies():
    with pytest.raises(ConfigError, match="delta_omega"):
        parse_config("system:\n  omega1: 1e15\n  omega2: 1.000001e15\n  delta_omega: 5 GHz\n")


def test_eve_outside_channel():
    with pytest.raises(ConfigError, match="eve.x_e"):
        parse_config("channel:\n  length: 10 km\neve:\n  x_e: 20 km\n")


finite = st.floats(allow_nan=False, allow_infinity=False)


@st.composite
def session_configs(draw):
    omega0 = draw(st.floats(1e14, 1e16))
    sig = st.floats(1e6, 1e13)
    system = SystemParams(
        omega1=omega0 - draw(st.floats(1e6, 1e12)), omega2=omega0 + draw(st.floats(1e6, 1e12)),
        omega0=omega0, sigma1=draw(sig), sigma2=draw(sig), sigma_inf=draw(sig),
        gamma1=draw(sig), gamma2=draw(sig), gamma_inf=draw(sig),
        margin_kappa=draw(st.floats(1, 100)),
    )
    length = draw(st.floats(0, 5e6))
    channel = FiberChannel(length=length, alpha=draw(st.floats(1e-10, 1e-7)),
                           beta_re=draw(st.floats(-1e-25, 1e-25)), beta_im=draw(st.floats(0, 1e-26)),
                           loss_db_per_km=draw(st.floats(0, 2)))
    eve = EveConfig(enabled=draw(st.booleans()), x_e=draw(st.floats(0, 1)) * length,
                    intercept_probability=draw(st.floats(0, 1)),
                    which=draw(st.sampled_from([None, 1, 2])))
    a = draw(st.floats(0, 1))
    b = draw(st.floats(0, 1 - a))
    run = RunConfig(n_rounds=draw(st.integers(0, 10**7)), master_seed=draw(st.integers(0, 2**32)),
                    min_check_rounds=draw(st.integers(1, 1000)), threshold_k=draw(st.floats(0.1, 10)),
                    threshold_f=draw(st.floats(0, 1)), priors=(a, b, 1 - a - b),
                    efficiency=draw(st.floats(0, 1)),
                    emission_period=draw(st.one_of(st.none(), st.floats(1e-12, 1.0))))
    return SessionConfig(system, channel, eve, run)


@settings(max_examples=200, deadline=None)
@given(session_configs())
def test_round_trip(cfg):
    assert parse_config(emit_config(cfg)) == cfg


# ---------------------------------------------------------------- commands


def test_bound_text():
    code, text = cli.cmd_bound(cli.load_config(PAPER_YAML))
    assert code == cli.EXIT_OK
    assert "x_B (paper form): 1000 km" in text.splitlines()


def test_bound_structured_margin():
    doc = json.loads(cli.cmd_bound(cli.load_config(PAPER_YAML), "structured")[1])
    assert doc["bound"]["x_b_paper_m"] == 1e6
    assert doc["bound"]["secrecy_margin"] > 1
    assert doc["config"]["channel"]["beta"] == "1e-27 s^2/m"


def test_bound_zero_dispersion():
    cfg = cli.load_config(PAPER_YAML).with_channel(beta_re=0.0)
    assert "x_B (paper form): unbounded" in cli.cmd_bound(cfg)[1]
    assert json.loads(cli.cmd_bound(cfg, "structured")[1])["bound"]["x_b_paper_m"] == "inf"


def test_validate_exit_codes():
    cfg = cli.load_config(PAPER_YAML)
    assert cli.cmd_validate(cfg)[0] == cli.EXIT_OK
    bad = cfg.with_system(sigma1=2e8, sigma2=2e8)
    code, text = cli.cmd_validate(bad)
    assert code == cli.EXIT_INVALID
    assert "0.8333" in text
    assert cli.cmd_simulate(bad)[0] == cli.EXIT_INVALID


def test_simulate_verdicts():
    cfg = cli.load_config(PAPER_YAML)
    code, text = cli.cmd_simulate(cfg, "structured")
    assert code == cli.EXIT_OK
    doc = json.loads(text)
    assert doc["verdict"] == "Clean"
    assert doc["master_seed"] == 7
    assert set(doc) >= {"qber", "margins", "discard_breakdown", "timing", "config"}
    code, text = cli.cmd_simulate(cfg.with_eve(True), "structured")
    assert code == cli.EXIT_DETECTED
    assert json.loads(text)["verdict"] == "EavesdropperDetected"
    assert cli.cmd_simulate(cfg.with_run(n_rounds=10))[0] == cli.EXIT_INCONCLUSIVE


def test_simulate_byte_identical(tmp_path):
    cfg = cli.load_config(PAPER_YAML).with_eve(True, intercept_probability=0.5)
    cli.cmd_simulate(cfg, out=tmp_path / "a.json")
    cli.cmd_simulate(cfg, out=tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_round_log(tmp_path):
    cfg = cli.load_config(PAPER_YAML).with_run(n_rounds=500).with_eve(True)
    log = tmp_path / "rounds.csv"
    _, with_log = cli.cmd_simulate(cfg, "structured", log=log)
    _, without = cli.cmd_simulate(cfg, "structured")
    assert with_log == without
    rows = list(csv.reader(io.StringIO(log.read_text())))
    assert rows[0] == ["index", "alice_kind", "bob_kind", "clicked", "t_A_s", "t_B_s",
                       "residual_s", "kept", "bit_A", "bit_B", "eve_intercepted"]
    assert len(rows) == 501
    for r in rows[1:]:
        assert (r[5] == "") == (r[3] == "0")


def _sweep(cfg, axis, values):
    rows = list(csv.DictReader(io.StringIO(cli.cmd_sweep(cfg, axis, values)[1])))
    return rows


def test_sweep_length_margin_decreasing():
    cfg = cli.load_config(PAPER_YAML)
    rows = _sweep(cfg, "length", cli.sweep_values("length", "0 km", "1000 km", 21, False))
    m = [float(r["margin"]) for r in rows]
    assert all(a > b for a, b in zip(m, m[1:]))


def test_sweep_delta_omega_inverse():
    cfg = cli.load_config(PAPER_YAML)
    rows = _sweep(cfg, "delta_omega", [1e9, 2e9, 4e9])
    xb = [float(r["x_b_paper_m"]) for r in rows]
    assert xb == [1e6, 5e5, 2.5e5]


def test_sweep_beta_values():
    cfg = cli.load_config(PAPER_YAML)
    vals = [parse_quantity(v, "gvd") for v in ("0.5 ps^2/km", "1 ps^2/km", "2 ps^2/km")]
    rows = _sweep(cfg, "beta", vals)
    assert [float(r["x_b_paper_m"]) for r in rows] == pytest.approx([2e6, 1e6, 5e5], rel=1e-15)


def test_sweep_unknown_axis():
    with pytest.raises(ValueError):
        cli.cmd_sweep(cli.load_config(PAPER_YAML), "colour", [1.0])


# --------------------------------------------------------------------- main


def test_main_bound(capsys):
    assert cli.main(["bound", "--config", str(PAPER_YAML)]) == 0
    assert "x_B (paper form): 1000 km" in capsys.readouterr().out


def test_main_simulate_flags(capsys, tmp_path):
    out = tmp_path / "r.json"
    code = cli.main(["--backend", "numpy", "simulate", "--config", str(PAPER_YAML), "--eve",
                     "--seed", "3", "--rounds", "20000", "--out", str(out)])
    assert code == cli.EXIT_DETECTED
    doc = json.loads(out.read_text())
    assert doc["master_seed"] == 3 and doc["rounds"] == 20000
    assert "verdict: EavesdropperDetected" in capsys.readouterr().out


def test_main_sweep_values(capsys):
    code = cli.main(["sweep", "--config", str(PAPER_YAML), "--axis", "beta",
                     "--values", "0.5 ps^2/km,1 ps^2/km,2 ps^2/km"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert [float(r["x_b_paper_m"]) / 1e3 for r in rows] == pytest.approx([2000, 1000, 500])


def test_main_sweep_mc(capsys):
    code = cli.main(["sweep", "--config", str(PAPER_YAML), "--axis", "length", "--values",
                     "10 km,100 km", "--mc", "--mc-sessions", "5"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert all(0 <= float(r["mc_power"]) <= 1 for r in rows)


def test_main_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("channel:\n  loss: -1\n  length: -1\n")
    assert cli.main(["bound", "--config", str(bad)]) == cli.EXIT_CONFIG
    err = capsys.readouterr().err
    assert "channel.loss" in err and "channel.length" in err
    assert cli.main(["bound", "--config", str(tmp_path / "missing.yaml")]) == cli.EXIT_CONFIG


def test_main_usage_error():
    with pytest.raises(SystemExit) as exc:
        cli.main(["bound"])
    assert exc.value.code == cli.EXIT_USAGE


def test_lossy_config_runs():
    cfg = cli.load_config(CONFIGS / "lossy.yaml")
    assert cfg.channel.beta_im == pytest.approx(1e-29)
    assert cli.cmd_bound(cfg)[0] == cli.EXIT_OK


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "fcqkd", "validate", "--config", str(PAPER_YAML)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "overall: pass" in proc.stdout
