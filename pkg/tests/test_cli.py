import json
import subprocess
import sys

import numpy as np
import pytest

from sample_prophet import __version__, cli
from sample_prophet.exact_analysis import random_table
from sample_prophet.serialization import table_to_json

KSG = {"command": "simulate", "instance": "ksg", "epsilon": [0.01], "trials": 20_000, "seed": 7}
CONFIGS = {
    "verify": {"command": "verify", "n_range": [1, 4], "trials": 30, "seed": 3},
    "simulate": KSG,
    "mechanism": {"command": "mechanism", "specs": [{"family": "uniform_interval", "params": {"lower": 0, "upper": 1}}],
                  "n_range": [2, 3], "trials": 20_000, "seed": 11},
    "counterexample": {"command": "counterexample", "instance": "scaled_gap", "n_range": [4, 6]},
}


def write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


class TestParseConfig:
    def test_minimal_verify(self):
        cfg = cli.parse_config('{"command": "verify", "n_range": [1, 8], "seed": 1}')
        assert cfg.command == "verify" and cfg.n_range == (1, 8)

    def test_missing_seed_is_named(self):
        with pytest.raises(cli.ConfigError) as info:
            cli.parse_config('{"command": "simulate", "instance": "constant", "trials": 1000000}')
        assert info.value.field == "seed"

    def test_unsupported_family(self):
        doc = {"command": "mechanism", "seed": 1, "specs": [{"family": "gaussian", "params": {"mean": 0}}]}
        with pytest.raises(cli.ConfigError, match="unsupported family"):
            cli.parse_config(json.dumps(doc))

    @pytest.mark.parametrize(
        "doc, field",
        [
            ({"command": "bake"}, "command"),
            ({"command": "verify", "seed": 1, "n_range": [1, 21]}, "n_range"),
            ({"command": "verify", "seed": 1, "n_range": [3, 2]}, "n_range"),
            ({"command": "verify", "seed": -1}, "seed"),
            ({"command": "verify", "seed": 2**64}, "seed"),
            ({"command": "verify", "seed": 1, "colour": "red"}, "colour"),
            ({"command": "simulate", "seed": 1, "instance": "ksg"}, "epsilon"),
            ({"command": "simulate", "seed": 1, "instance": "ksg", "epsilon": [1]}, "epsilon"),
            ({"command": "simulate", "seed": 1, "instance": "constant", "c": 0}, "c"),
            ({"command": "simulate", "seed": 1, "instance": "constant", "adversary": "oracle"}, "adversary"),
            ({"command": "mechanism", "seed": 1}, "specs"),
            ({"command": "counterexample", "specs": [{"family": "exponential", "params": {"rate": 1}}]}, "specs"),
            ({"command": "counterexample", "instance": "scaled_gap", "n_range": [1, 3]}, "n_range"),
            ({"command": "mechanism", "seed": 1, "specs": [{"family": "exponential", "params": {"rate": -1}}]}, "specs[0]"),
        ],
    )
    def test_diagnostics_name_the_field(self, doc, field):
        with pytest.raises(cli.ConfigError) as info:
            cli.config_from_dict(doc)
        assert info.value.field == field

    def test_invalid_json(self):
        with pytest.raises(cli.ConfigError):
            cli.parse_config("{not json")

    def test_decimal_epsilon_is_exact(self):
        cfg = cli.parse_config(json.dumps(KSG))
        assert cfg.epsilon == [cli.Fraction(1, 100)]

    def test_echo_reparses(self):
        for doc in CONFIGS.values():
            cfg = cli.config_from_dict(doc)
            assert cli.config_from_dict(cfg.to_json()) == cfg


class TestRunExperiment:
    @pytest.mark.parametrize("command", list(CONFIGS))
    def test_byte_identical_reruns(self, command, tmp_path):
        cfg_path = write(tmp_path, CONFIGS[command])
        outs = []
        for k in range(2):
            out = tmp_path / f"report{k}.json"
            assert cli.main([command, "--config", cfg_path, "--out", str(out)]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
        report = json.loads(outs[0])
        assert report["version"] == __version__ and report["pass"] is True
        assert report["seed"] == CONFIGS[command].get("seed")

    @pytest.mark.parametrize("command", list(CONFIGS))
    def test_report_alone_reproduces_itself(self, command):
        _, text = cli.run_experiment(cli.config_from_dict(CONFIGS[command]))
        echo = json.loads(text)["config"]
        _, again = cli.run_experiment(cli.config_from_dict(echo))
        assert again == text

    def test_verify_counts(self):
        status, text = cli.run_experiment(cli.config_from_dict(CONFIGS["verify"]))
        res = json.loads(text)["results"]
        assert status == 0 and res["failures"] == 0
        assert [row["n"] for row in res["sweep"]] == [1, 2, 3, 4]
        assert all(row["tables"] == 30 for row in res["sweep"])

    def test_verify_fixture_tables_need_no_seed(self):
        tables = [table_to_json(random_table(3, np.random.default_rng(k))) for k in range(3)]
        status, text = cli.run_experiment(cli.config_from_dict({"command": "verify", "tables": tables}))
        assert status == 0 and json.loads(text)["results"]["sweep"][0]["tables"] == 3

    def test_simulate_reports_exact_block(self):
        _, text = cli.run_experiment(cli.config_from_dict(KSG))
        run = json.loads(text)["results"]["runs"][0]
        assert run["exact"]["ratio"] == {"num": "1", "den": "2"}
        assert run["pass"]["ratio_at_least_half"]

    def test_counterexample_checks(self):
        _, text = cli.run_experiment(cli.config_from_dict(CONFIGS["counterexample"]))
        checks = json.loads(text)["results"]["checks"]
        assert checks["ratio_strictly_decreasing"] and len(checks) == 4

    def test_csv(self):
        status, text = cli.run_experiment(cli.config_from_dict({**CONFIGS["counterexample"], "format": "csv"}))
        lines = text.splitlines()
        assert status == 0
        assert json.loads(lines[0][2:])["config"]["format"] == "csv"
        assert lines[1] == "# pass=true"
        assert lines[2] == "instance,parameter,c,ratio_num,ratio_den,ratio_float"
        assert len(lines) == 6


class TestExitCodes:
    def test_invariant_failure_exits_one(self, tmp_path, monkeypatch):
        real = cli.verify_instance

        def broken(table):
            rep = real(table)
            return type(rep)(**{**rep.__dict__, "checks": {**rep.checks, "dyadic": False}})

        monkeypatch.setattr(cli, "verify_instance", broken)
        out = tmp_path / "r.json"
        assert cli.main(["verify", "--config", write(tmp_path, CONFIGS["verify"]), "--out", str(out)]) == 1
        res = json.loads(out.read_text())["results"]
        assert res["failures"] == 120 and len(res["failed_reports"]) == cli.MAX_REPORTED_FAILURES

    def test_config_error_exits_two(self, tmp_path, capsys):
        path = write(tmp_path, {"command": "simulate", "instance": "constant", "trials": 10**6})
        assert cli.main(["simulate", "--config", path]) == 2
        assert "seed" in capsys.readouterr().err

    def test_command_mismatch_exits_two(self, tmp_path):
        assert cli.main(["mechanism", "--config", write(tmp_path, CONFIGS["verify"])]) == 2

    def test_missing_file_exits_two(self, tmp_path):
        assert cli.main(["verify", "--config", str(tmp_path / "nope.json")]) == 2

    def test_seed_flag_overrides(self, tmp_path):
        out = tmp_path / "r.json"
        cli.main(["verify", "--config", write(tmp_path, CONFIGS["verify"]), "--seed", "99", "--out", str(out)])
        assert json.loads(out.read_text())["seed"] == 99

    def test_bad_subcommand_exits_two(self):
        with pytest.raises(SystemExit) as info:
            cli.main(["bake"])
        assert info.value.code == 2

    def test_module_entry_point(self, tmp_path):
        path = write(tmp_path, CONFIGS["counterexample"])
        proc = subprocess.run(
            [sys.executable, "-m", "sample_prophet", "counterexample", "--config", path, "--format", "csv"],
            capture_output=True, text=True, check=False,
        )
        assert proc.returncode == 0 and proc.stdout.startswith("# {")
