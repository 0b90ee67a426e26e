import copy
import json

import pytest

from thinheat.cli import main
from thinheat.config import from_dict, load, parse_expression, validate
from thinheat.errors import ConfigError

from conftest import CONFIGS

BASE = {
    "experiment": {"kind": "sharpness", "name": "t", "t_end": 1.0},
    "curve": {"family": "circle", "radius": "1"},
    "profiles": {"g0": "0", "g1": "1"},
    "physics": {"k_d": 1.0},
    "grid": {"n_theta": 32, "n_s": 4, "n_steps": 10},
    "sweep": {"epsilons": [0.1, 0.05, 0.025]},
}


def _cfg(**over):
    d = copy.deepcopy(BASE)
    for path, val in over.items():
        sec, key = path.split("__")
        d[sec][key] = val
    return from_dict(d)


def test_presets_validate():
    for path in sorted(CONFIGS.glob("*.toml")):
        assert validate(load(path)) == [], path.name


def test_epsilon_beyond_tubular_radius():
    diags = validate(_cfg(curve__radius="0.5", sweep__epsilons=[0.5, 0.2, 0.1]))
    assert any("epsilon exceeds admissible eps0" in d for d in diags)


def test_profile_positivity():
    diags = validate(_cfg(profiles__g1="0.5*cos(theta)"))
    assert any("profile positivity violated" in d for d in diags)


@pytest.mark.parametrize("over, key", [
    ({"sweep__epsilons": [0.1, 0.2, 0.05]}, "sweep.epsilons"),
    ({"sweep__epsilons": [0.1, 0.05]}, "sweep.epsilons"),
    ({"grid__n_theta": 30}, "grid.n_theta"),
    ({"grid__scheme": "rk4"}, "grid.scheme"),
    ({"physics__k_d": -1.0}, "physics.k_d"),
    ({"experiment__t_end": 0.0}, "experiment.t_end"),
])
def test_validation_diagnostics(over, key):
    assert any(d.startswith(key) for d in validate(_cfg(**over)))


def test_structural_errors():
    d = copy.deepcopy(BASE)
    del d["profiles"]
    with pytest.raises(ConfigError, match="missing section"):
        from_dict(d)
    with pytest.raises(ConfigError):
        _cfg(experiment__kind="nope")
    with pytest.raises(ConfigError):
        parse_expression("cos(phi)")
    with pytest.raises(ConfigError):
        load("/nonexistent.toml")


def test_cli_list(capsys):
    assert main(["run", "--exp", "list"]) == 0
    assert "convergence" in capsys.readouterr().out.split()


def test_cli_bad_config_writes_nothing(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text('[experiment]\nkind = "sharpness"\n')
    out = tmp_path / "out"
    assert main(["run", "--config", str(bad), "--out", str(out)]) == 2
    assert not out.exists()
    assert main(["validate", str(bad)]) == 2


def test_cli_run_overwrite_and_validate(tmp_path, capsys):
    out = tmp_path / "out"
    cfg = str(CONFIGS / "mms_limit.toml")
    assert main(["validate", cfg]) == 0
    assert main(["run", "--config", cfg, "--out", str(out)]) == 0
    target = out / "mms_limit"
    for name in ("report.json", "rows.csv", "plot.txt", "timings.json"):
        assert (target / name).is_file()
    assert json.loads((target / "report.json").read_text())["passed"] is True
    assert "PASS" in capsys.readouterr().out
    assert main(["run", "--config", cfg, "--out", str(out)]) == 2
    assert main(["run", "--config", cfg, "--out", str(out), "--overwrite"]) == 0


def test_cli_budget_partial(tmp_path):
    out = tmp_path / "out"
    code = main(["run", "--config", str(CONFIGS / "uniform_ratio.toml"), "--out", str(out),
                 "--budget-seconds", "0.5"])
    assert code == 3
    rep = json.loads((out / "uniform_ratio" / "report.json").read_text())
    assert rep["complete"] is False and rep["passed"] is False
