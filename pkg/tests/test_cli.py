"""Command-line surface: exit codes, file formats, determinism."""

import json
import math

import pytest

from sdpoisson.cli import EX_FAIL, EX_OK, EX_USAGE, RunConfig, main
from sdpoisson.exponential import ModelParams
from sdpoisson.pmf import joint_pmf


def run(args):
    return main(args)


class TestExitCodes:
    def test_corrupted_parameter(self, tmp_path, capsys):
        code = run(["pmf", "--a", "1.5", "--m", "0", "--n", "0", "--s", "1", "--t", "0.4",
                    "--output", str(tmp_path / "x.csv")])
        assert code == EX_USAGE
        assert "usage error" in capsys.readouterr().err

    def test_unknown_flag(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            run(["pmf", "--m", "0", "--n", "0", "--s", "1", "--t", "0.4", "--frobnicate", "1"])
        assert exc.value.code == EX_USAGE

    def test_missing_subcommand(self):
        with pytest.raises(SystemExit) as exc:
            run([])
        assert exc.value.code == EX_USAGE

    def test_unwritable_output(self, tmp_path):
        code = run(["pmf", "--m", "0", "--n", "0", "--s", "1", "--t", "0.4",
                    "--output", str(tmp_path / "no" / "such" / "dir" / "x.csv")])
        assert code == EX_FAIL


class TestPmfCommand:
    def test_value_matches_library(self, tmp_path):
        out = tmp_path / "pmf.csv"
        assert run(["pmf", "--m", "1", "--n", "1", "--s", "1", "--t", "0.4",
                    "--output", str(out)]) == EX_OK
        header, row = out.read_text().strip().split("\n")
        assert header == "m,n,s,t,probability,raw,method"
        fields = row.split(",")
        expected = joint_pmf(ModelParams(1.0, 1.0, 0.5), 1, 1, 1.0, 0.4).value
        assert float(fields[4]) == pytest.approx(expected, rel=1e-15)

    def test_lemma_cell_reports_exact_method(self, tmp_path):
        out = tmp_path / "pmf.csv"
        run(["pmf", "--m", "0", "--n", "2", "--s", "1", "--t", "0.4", "--output", str(out)])
        row = out.read_text().strip().split("\n")[1].split(",")
        assert float(row[4]) == 0.0
        assert row[6] == "lemma-exact"

    def test_json_layout(self, tmp_path):
        out = tmp_path / "pmf.json"
        run(["pmf", "--m", "0", "--n", "0", "--s", "1", "--t", "0.4",
            "--format", "json", "--output", str(out)])
        payload = json.loads(out.read_text())
        assert set(payload) == {"config", "results", "checks"}
        assert payload["results"]["probability"] == pytest.approx(math.exp(-1.0))


class TestSimulateCommand:
    def test_deterministic_bytes(self, tmp_path):
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        for out in (out1, out2):
            assert run(["simulate", "--n", "500", "--seed", "42",
                        "--output", str(out)]) == EX_OK
        assert out1.read_bytes() == out2.read_bytes()
        assert (tmp_path / "a_compensated.csv").read_bytes() == (
            tmp_path / "b_compensated.csv"
        ).read_bytes()

    def test_weak_coupling_statistics(self, tmp_path):
        out = tmp_path / "weak.csv"
        run(["simulate", "--n", "1000", "--a", "0.01", "--seed", "1", "--output", str(out)])
        stats = json.loads((tmp_path / "weak_summary.json").read_text())
        assert abs(stats["results"]["sample_corr_xy"] - 0.01) < 0.12

    def test_strong_coupling_chains_align(self, tmp_path):
        out = tmp_path / "strong.csv"
        run(["simulate", "--n", "1000", "--a", "0.99", "--seed", "1", "--output", str(out)])
        stats = json.loads((tmp_path / "strong_summary.json").read_text())
        gap = abs(stats["results"]["final_t"] - stats["results"]["final_s"])
        assert gap / stats["results"]["final_t"] < 0.05
        assert stats["results"]["sample_corr_xy"] > 0.95

    def test_renewal_file_layout(self, tmp_path):
        out = tmp_path / "sim.csv"
        run(["simulate", "--n", "10", "--seed", "0", "--output", str(out)])
        lines = out.read_text().split("\n")
        assert lines[0] == "k,x,y,t_n,s_n,t_centered,s_centered"
        assert len([ln for ln in lines if ln]) == 11  # header + 10 renewals


class TestTableCommand:
    def test_outputs_and_summary(self, tmp_path):
        out = tmp_path / "table.csv"
        assert run(["table", "--s", "1", "--t", "1", "--m-max", "8", "--n-max", "8",
                    "--output", str(out)]) == EX_OK
        rows = out.read_text().strip().split("\n")
        assert rows[0].startswith("m,p_0,")
        assert len(rows) == 10
        summary = json.loads((tmp_path / "table_summary.json").read_text())
        assert summary["results"]["deficit"] <= summary["results"]["tail_bound"] + 1e-9
        colsums = (tmp_path / "table_colsums.csv").read_text().strip().split("\n")
        assert colsums[0] == "n,col_sum,poisson_col"

    def test_json_matrix(self, tmp_path):
        out = tmp_path / "table.json"
        run(["table", "--s", "1", "--t", "0.4", "--m-max", "3", "--n-max", "3",
             "--format", "json", "--output", str(out)])
        payload = json.loads(out.read_text())
        pmf = payload["results"]["pmf"]
        assert len(pmf) == 4 and len(pmf[0]) == 4
        assert pmf[0][0] == pytest.approx(math.exp(-1.0))
        assert pmf[0][1] == 0.0  # empty region


class TestCopulaCommand:
    def test_grid_within_bounds(self, tmp_path):
        out = tmp_path / "cop.csv"
        assert run(["copula", "--copula", "sd", "--a", "0.6", "--grid", "11",
                    "--output", str(out)]) == EX_OK
        rows = out.read_text().strip().split("\n")[1:]
        assert len(rows) == 121
        for row in rows:
            u, v, value, lower, upper = map(float, row.split(","))
            assert lower - 1e-14 <= value <= upper + 1e-14

    def test_all_families_run(self, tmp_path):
        for kind in ("gumbel", "marshall-olkin", "raftery", "frechet-lower",
                     "frechet-upper", "independence"):
            out = tmp_path / f"{kind}.csv"
            assert run(["copula", "--copula", kind, "--grid", "5",
                        "--output", str(out)]) == EX_OK


class TestVerifyCommand:
    def test_default_suite_passes(self, tmp_path, capsys):
        out = tmp_path / "verify.json"
        code = run(["verify", "--samples", "50000", "--format", "json",
                    "--output", str(out)])
        assert code == EX_OK
        payload = json.loads(out.read_text())
        assert all(c["verdict"] == "pass" for c in payload["checks"])
        printed = capsys.readouterr().out
        assert printed.count("[PASS") == len(payload["checks"])

    def test_report_bytes_deterministic(self, tmp_path):
        out = tmp_path / "verify.json"
        run(["verify", "--samples", "20000", "--format", "json", "--output", str(out)])
        first = out.read_bytes()
        out.unlink()
        run(["verify", "--samples", "20000", "--format", "json", "--output", str(out)])
        assert out.read_bytes() == first

    def test_exit_code_mapping(self, tmp_path, monkeypatch, capsys):
        import sdpoisson.cli as cli_mod

        def fake_checks(verdicts):
            return [{"name": f"c{i}", "verdict": v, "detail": ""} for i, v in enumerate(verdicts)]

        base = ["verify", "--output", str(tmp_path / "v.csv")]
        monkeypatch.setattr(cli_mod, "_verify_checks", lambda cfg: fake_checks(["pass", "fail"]))
        assert run(base) == 1
        monkeypatch.setattr(
            cli_mod, "_verify_checks", lambda cfg: fake_checks(["pass", "inconclusive"])
        )
        assert run(base) == 2
        monkeypatch.setattr(
            cli_mod, "_verify_checks", lambda cfg: fake_checks(["fail", "inconclusive"])
        )
        assert run(base) == 1  # fail dominates inconclusive


class TestConfigPlumbing:
    def test_config_file_overlay(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("a=0.25\nseed=9\n# comment\nmu=2.0\n")
        out = tmp_path / "pmf.json"
        run(["pmf", "--m", "0", "--n", "0", "--s", "1", "--t", "0.1",
             "--config", str(cfg), "--format", "json", "--output", str(out)])
        payload = json.loads(out.read_text())
        assert payload["config"]["a"] == 0.25
        assert payload["config"]["mu"] == 2.0
        assert payload["config"]["seed"] == 9

    def test_explicit_flag_beats_config(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("a=0.25\n")
        out = tmp_path / "pmf.json"
        run(["pmf", "--m", "0", "--n", "0", "--s", "1", "--t", "0.1", "--a", "0.7",
             "--config", str(cfg), "--format", "json", "--output", str(out)])
        payload = json.loads(out.read_text())
        assert payload["config"]["a"] == 0.7

    def test_unknown_config_key_is_usage_error(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("bogus=1\n")
        code = run(["pmf", "--m", "0", "--n", "0", "--s", "1", "--t", "0.1",
                    "--config", str(cfg)])
        assert code == EX_USAGE

    def test_runconfig_round_trip(self):
        config = RunConfig(
            command="pmf", lam=1.5, mu=0.5, a=0.3, seed=11, output="out.csv",
            fmt="csv", options={"m": 2, "n": 1, "s": 1.0, "t": 0.5, "method": "auto"},
        )
        assert RunConfig.from_dict(config.to_dict()) == config
