import json

import pytest

from ftlab.harness import (
    COMMANDS, EXIT_ERROR, EXIT_FAIL, EXIT_OK, EXIT_USAGE, ConfigError, ExperimentConfig,
    _fmt, _int_list, main, run,
)

SMALL = {
    "threshold-sweep": {"m": "3,4", "eps_grid": "0.01,0.1", "k_max": "2", "trials": "70000"},
    "faultpath-verify": {"models": "3", "steps": "3", "eta_samples": "2"},
    "cbit-immunity": {"nprime": "4", "subsets": "40", "codewords": "5"},
    "cbit-impossibility": {"code": "random", "n": "3", "codes": "6"},
    "cphase-separation": {"codes": "40"},
    "kalai-tail": {"trials": "140000"},
}


def _render(name, workers, fmt="csv", seed=11):
    return run(ExperimentConfig(name, SMALL[name], seed, None, fmt, workers)).render()


@pytest.mark.parametrize("name", sorted(SMALL))
def test_reports_independent_of_workers(name):
    outs = {_render(name, w) for w in (1, 4, 16)}
    assert len(outs) == 1


def test_seed_changes_stochastic_output():
    assert _render("cphase-separation", 1, seed=1) != _render("cphase-separation", 1, seed=2)


def test_json_report_shape():
    obj = json.loads(_render("kalai-tail", 2, fmt="json"))
    assert set(obj) == {"config", "rows", "summary"}
    assert obj["config"]["seed"] == 11 and "workers" not in obj["config"]
    assert obj["summary"]["passed"] is True


def test_csv_float_round_trip():
    for x in (0.1, 1 / 3, 2.5e-300, 123456789.123456789):
        assert float(_fmt(x)) == x
    assert _fmt(True) == "true" and _fmt(None) == ""


def test_int_list_ranges():
    assert _int_list("2..5") == [2, 3, 4, 5]
    assert _int_list("3,4,5") == [3, 4, 5]


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig("threshold-sweep", {}, None)
    with pytest.raises(ConfigError):
        ExperimentConfig("threshold-sweep", {"bogus": "1"}, 1)
    with pytest.raises(ConfigError):
        ExperimentConfig("nope")
    with pytest.raises(ConfigError):
        ExperimentConfig("shor-demo", format="xml")
    with pytest.raises(ConfigError):
        ExperimentConfig("kalai-tail", {"n": "eight"}, 1).resolved()


def test_every_command_registered_with_help():
    assert set(COMMANDS) == {
        "shor-demo", "threshold-sweep", "nonmarkov-threshold", "faultpath-verify", "cbit-immunity",
        "cbit-impossibility", "cphase-separation", "kalai-tail", "repetition-demo"}
    assert all(c.help for c in COMMANDS.values())


def test_main_exit_codes(tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert main(["repetition-demo", "--out", str(out)]) == EXIT_OK
    assert out.read_text().startswith("p,level,failure\n")
    with pytest.raises(SystemExit) as exc:
        main(["kalai-tail"])
    assert exc.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main(["kalai-tail", "--seed", "1", "--n", "x"])
    assert exc.value.code == EXIT_USAGE
    assert main(["kalai-tail", "--seed", "1", "--dist", "twopoint:0", "--trials", "1000"]) == EXIT_ERROR
    assert main(["nonmarkov-threshold", "--A-grid", "3", "--eta", "0.01", "--L", "10",
                 "--delta", "1e-4"]) == EXIT_OK
    capsys.readouterr()


def test_main_fail_exit(monkeypatch):
    from ftlab import harness

    cmd = harness.COMMANDS["repetition-demo"]
    monkeypatch.setitem(harness.COMMANDS, "repetition-demo",
                        harness.Command(cmd.help, cmd.params, lambda c, p: ([], {"passed": False}),
                                        stochastic=False))
    assert main(["repetition-demo"]) == EXIT_FAIL


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# small run\nseed = 5\ncodes = 12\nformat = json\n")
    assert main(["cphase-separation", "--config", str(cfg), "--codes", "8"]) == EXIT_OK
    obj = json.loads(capsys.readouterr().out)
    assert obj["config"]["seed"] == 5 and len(obj["rows"]) == 8
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    with pytest.raises(SystemExit) as exc:
        main(["cphase-separation", "--config", str(bad), "--seed", "1"])
    assert exc.value.code == EXIT_USAGE
