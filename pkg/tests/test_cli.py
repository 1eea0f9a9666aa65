import csv
import io

import numpy as np
import pytest

from catbell import cli
from catbell.bell import TSIRELSON
from catbell.errors import ConfigError
from catbell.experiment import (
    CSV_HEADER,
    FIGURES,
    ExperimentConfig,
    eval_number,
    format_csv,
    gnuplot_script,
    load_config,
    parse_grid,
    preset_names,
    run_points,
    run_sweep,
    with_overrides,
)
from catbell.postmarkov import PostMarkovModel

SPINSTAR_INI = """
[experiment]
channel = spinstar
D = 2
grid = linspace(0, pi, 5)
output = star.csv

[channel]
n_spins = 2

[optimizer]
restarts = 4
"""


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_parse_grid_forms():
    assert parse_grid("linspace(0, 1, 3)") == (0.0, 0.5, 1.0)
    assert parse_grid("geomspace(1, 100, 3)") == pytest.approx((1.0, 10.0, 100.0))
    assert parse_grid("0, 0.5, pi/2") == pytest.approx((0.0, 0.5, np.pi / 2))
    assert parse_grid("") == ()
    with pytest.raises(ConfigError):
        parse_grid("linspace(0, 1)")


def test_eval_number():
    assert eval_number("pi") == pytest.approx(np.pi)
    assert eval_number("2*pi") == pytest.approx(2 * np.pi)
    assert eval_number("pi/4") == pytest.approx(np.pi / 4)
    assert eval_number("-1.5e-3") == -1.5e-3
    with pytest.raises(ConfigError):
        eval_number("banana")


def test_load_config_from_string_and_overrides():
    cfg = load_config(SPINSTAR_INI, {"channel.n_spins": "5", "optimizer.restarts": "2"})
    assert cfg.channel == "spinstar"
    assert cfg.params == {"n_spins": 5}
    assert cfg.optimizer.restarts == 2
    assert cfg.sweep_name == "tau_s" and cfg.sweeps_dynamical
    assert len(cfg.grid) == 5


@pytest.mark.parametrize("bad", [
    {"experiment.grid": ""},
    {"experiment.grid": "1, 0.5"},
    {"experiment.channel": "nope"},
    {"channel.colour": "red"},
    {"optimizer.restarts": "0"},
    {"experiment.workers": "0"},
    {"experiment.sweep": "gamma"},
    {"channel.n_spins": "0"},
    {"experiment.extra": "1"},
])
def test_invalid_configs(bad):
    with pytest.raises(ConfigError):
        load_config(SPINSTAR_INI, bad)


def test_missing_sections_and_sources():
    with pytest.raises(ConfigError):
        load_config("[channel]\nn_spins = 2\n")
    with pytest.raises(ConfigError):
        load_config("no_such_preset")


def test_every_preset_loads():
    names = preset_names()
    for fig in FIGURES.values():
        assert set(fig) <= set(names)
    for name in names:
        load_config(name)


def test_figure_presets_carry_caption_parameters():
    for name in FIGURES["fig2"]:
        cfg = load_config(name)
        assert cfg.params["kT"] == 25 and cfg.D == 2
    assert {load_config(n).params["g"] for n in FIGURES["fig2"][:3]} == {0.3, 0.1, 0.05}
    assert load_config("fig2_x0.2_g0.05").params["x"] == 0.2
    for r in ("0.05", "1", "10"):
        cfg = load_config(f"fig3_postmarkov_r{r}")
        assert cfg.params["nbar"] == 0 and cfg.params["ratio"] == float(r)
    inset = load_config("fig3_inset_r10")
    assert inset.sweep_name == "nbar" and inset.t == 1.6
    m = inset.model_at(1.25)
    assert isinstance(m, PostMarkovModel) and m.p.nbar == 1.25
    assert m.p.gamma0 / m.p.gamma == pytest.approx(10.0)


def test_with_overrides():
    cfg = with_overrides(load_config(SPINSTAR_INI), points=3, restarts=1, workers=2)
    assert cfg.grid == pytest.approx((0.0, np.pi / 2, np.pi))
    assert cfg.optimizer.restarts == 1 and cfg.workers == 2
    with pytest.raises(ConfigError):
        with_overrides(cfg, points=0)


def test_csv_format_and_revival(tmp_path):
    cfg = load_config(SPINSTAR_INI)
    path = run_sweep(cfg, tmp_path)
    raw = path.read_bytes()
    assert b"\r" not in raw
    rows = _rows(path)
    assert rows[0] == CSV_HEADER
    assert len(rows) == 1 + len(cfg.grid)
    mb = np.array([float(r[1]) for r in rows[1:]])
    # full revival at pi/2 and pi
    assert mb[2] == pytest.approx(mb[0], abs=1e-6)
    assert mb[4] == pytest.approx(mb[0], abs=1e-6)
    assert np.all((mb >= 0) & (mb <= TSIRELSON + 1e-6))
    # 17 significant digits round-trip
    assert float(rows[1][1]) == run_points(cfg)[0].max_bell


def test_csv_byte_identical_across_runs_and_workers(tmp_path):
    a = run_sweep(load_config(SPINSTAR_INI), tmp_path / "a")
    b = run_sweep(load_config(SPINSTAR_INI, {"experiment.workers": "3"}), tmp_path / "b")
    assert a.read_bytes() == b.read_bytes()


def test_ad_spin_sweep_nonincreasing(tmp_path):
    cfg = with_overrides(load_config("fig1_ad_spin"), restarts=4)
    rows = _rows(run_sweep(cfg, tmp_path))
    mb = np.array([float(r[1]) for r in rows[1:]])
    assert len(mb) == 21
    assert np.all(np.diff(mb) <= 1e-8)


def test_parameter_sweep(tmp_path):
    cfg = with_overrides(load_config("fig3_inset_r10"), points=3, restarts=4)
    rows = _rows(run_sweep(cfg, tmp_path))
    mb = [float(r[1]) for r in rows[1:]]
    assert mb[0] > 2 > mb[-1]


def test_format_csv_matches_header():
    cfg = load_config(SPINSTAR_INI, {"experiment.grid": "0"})
    text = format_csv(cfg.grid, run_points(cfg))
    lines = text.split("\n")
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines[1].split(",")) == len(CSV_HEADER)
    assert text.endswith("\n")


def test_gnuplot_script_references_csvs(tmp_path):
    a = tmp_path / "fig3_spinstar_n2.csv"
    b = tmp_path / "fig3_trace_distance_n2.csv"
    s = gnuplot_script([a, b], "fig3")
    assert "'fig3_spinstar_n2.csv'" in s and "'fig3_trace_distance_n2.csv'" in s


# -- command line ---------------------------------------------------------------

def test_cli_sweep(tmp_path, capsys):
    ini = tmp_path / "s.ini"
    ini.write_text(SPINSTAR_INI)
    code = cli.main(["sweep", str(ini), "--outdir", str(tmp_path), "--points", "3", "--set",
                     "channel.n_spins=3"])
    assert code == 0
    assert (tmp_path / "star.csv").is_file()
    assert len(_rows(tmp_path / "star.csv")) == 4


def test_cli_outdir_from_environment(tmp_path, monkeypatch):
    ini = tmp_path / "s.ini"
    ini.write_text(SPINSTAR_INI)
    out = tmp_path / "env"
    monkeypatch.setenv(cli.OUTDIR_ENV, str(out))
    assert cli.main(["sweep", str(ini), "--points", "2", "--output", "x.csv"]) == 0
    assert (out / "x.csv").is_file()


def test_cli_empty_grid_exit_code(tmp_path):
    ini = tmp_path / "s.ini"
    ini.write_text(SPINSTAR_INI)
    assert cli.main(["sweep", str(ini), "--set", "experiment.grid="]) == cli.EXIT_CONFIG


def test_cli_usage_errors():
    assert cli.main(["nonsense"]) == cli.EXIT_CONFIG
    assert cli.main(["sweep", "no_such_preset"]) == cli.EXIT_CONFIG
    assert cli.main(["sweep", "fig1_ad_spin", "--set", "broken"]) == cli.EXIT_CONFIG
    assert cli.main(["validate", "nope"]) == cli.EXIT_CONFIG
    assert cli.main(["figures", "fig9"]) == cli.EXIT_CONFIG


def test_cli_validate_single_channel(capsys):
    assert cli.main(["validate", "spinstar", "--points", "10"]) == cli.EXIT_OK
    out = capsys.readouterr().out
    lines = [l for l in out.splitlines() if "PASS" in l or "FAIL" in l]
    assert len(lines) == 10
    assert all(l.startswith("spinstar") for l in lines)


def test_cli_validate_failure_exit_code(monkeypatch, capsys):
    from catbell import validation
    monkeypatch.setitem(validation.TOLERANCES, "pure", 0.0)
    monkeypatch.setattr(validation, "pure_state_correlation", lambda t, b, D: 5.0)
    assert cli.main(["validate", "pure", "--points", "3"]) == cli.EXIT_VALIDATION
    assert "FAIL" in capsys.readouterr().out


def test_cli_model_error_exit_code(tmp_path, capsys):
    # n_max = 40 is below the D^2 + 10 D cutoff needed at D = 4
    ini = tmp_path / "b.ini"
    ini.write_text("""
[experiment]
channel = pd_cv
D = 4
grid = 0, 0.5
[channel]
n_max = 40
""")
    assert cli.main(["sweep", str(ini), "--outdir", str(tmp_path)]) == cli.EXIT_MODEL
    assert "model error" in capsys.readouterr().err


def test_cli_threshold(capsys):
    assert cli.main(["threshold", "fig3_inset_r10", "--lo", "0", "--hi", "4", "--tol", "0.01",
                     "--restarts", "4"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("nbar = ")
    assert float(out.split("=")[1]) == pytest.approx(1.634, abs=0.05)
    assert cli.main(["threshold", "fig1_ad_spin", "--lo", "0", "--hi", "1"]) == cli.EXIT_CONFIG


def test_cli_list(capsys):
    assert cli.main(["list"]) == 0
    assert "fig1_ad_spin" in capsys.readouterr().out


def test_cli_figures_small(tmp_path):
    code = cli.main(["figures", "fig3", "--outdir", str(tmp_path), "--points", "3", "--restarts", "2"])
    assert code == 0
    csvs = sorted(p.name for p in tmp_path.glob("*.csv"))
    star = [n for n in csvs if "spinstar" in n]
    pm = [n for n in csvs if "postmarkov" in n]
    td = [n for n in csvs if "trace_distance" in n]
    inset = [n for n in csvs if "inset" in n]
    assert (len(star), len(pm), len(inset)) == (3, 3, 2)
    assert len(td) == 3
    script = (tmp_path / "fig3.gp").read_text()
    for n in csvs:
        assert n in script
    td_rows = _rows(tmp_path / "fig3_trace_distance_n2.csv")
    assert td_rows[0] == ["sweep_value", "trace_distance"]
    assert float(td_rows[1][1]) == 1.0


def test_fig2_curve_set():
    names = FIGURES["fig2"]
    x10 = [n for n in names if "x10" in n]
    assert len(x10) == 3 and len(names) == 4


def test_experiment_config_direct_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(channel="spinstar", grid=()).validate()
    cfg = ExperimentConfig(channel="pure", grid=(0.0,)).validate()
    assert cfg.sweep_name == "t"
