"""Tests for the command-line experiment runner."""

import csv
import json

import numpy as np
import pytest

from equivax.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestEstimateCommands:
    def test_estimate_location_prints_mean(self, capsys):
        code, out, _ = run(capsys, "estimate-location", "--family", "gaussian-iid",
                           "--data", "1,3")
        assert code == 0
        assert float(out) == pytest.approx(2.0, abs=1e-8)

    def test_estimate_location_bayes_k(self, capsys):
        code, out, _ = run(capsys, "estimate-location", "--family", "gaussian-iid",
                           "--data", "2", "--k", "1")
        assert code == 0
        assert float(out) == pytest.approx(1.0, abs=1e-8)

    def test_estimate_scale(self, capsys):
        code, out, _ = run(capsys, "estimate-scale", "--family", "exponential-iid",
                           "--data", "1,2,3")
        assert code == 0
        assert float(out) == pytest.approx(2.0, abs=1e-8)

    def test_estimate_scale_power(self, capsys):
        code, out, _ = run(capsys, "estimate-scale", "--family", "halfnormal-iid",
                           "--data", "1,2", "--c", "2")
        assert code == 0
        assert float(out) == pytest.approx(2.5, abs=1e-6)

    def test_estimate_cov_sigma0(self, capsys):
        code, out, _ = run(capsys, "estimate-cov", "--n", "4", "--v", "[[4.0]]")
        assert code == 0
        assert json.loads(out) == [[1.0]]

    def test_estimate_cov_packed_factor(self, capsys):
        code, out, _ = run(capsys, "estimate-cov", "--n", "5",
                           "--t", '{"p": 2, "packed": [1, 0, 1]}',
                           "--estimator", "mle")
        assert code == 0
        np.testing.assert_allclose(json.loads(out), np.eye(2) / 5.0)

    def test_estimate_cov_bayes_k(self, capsys):
        code, out, err = run(capsys, "estimate-cov", "--n", "4", "--v", "[[4.0]]",
                             "--estimator", "bayes-k", "--k", "20",
                             "--draws", "100000", "--seed", "5")
        assert code == 0
        assert json.loads(out)[0][0] == pytest.approx(1.0, abs=0.1)
        assert "ess" in err

    def test_data_from_csv_file(self, capsys, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("x,y\n1.0,9\n3.0,9\n")
        code, out, _ = run(capsys, "estimate-location", "--family", "gaussian-iid",
                           "--data", str(path), "--data-column", "x")
        assert code == 0
        assert float(out) == pytest.approx(2.0, abs=1e-8)


class TestValidation:
    def test_unknown_flag_exits_2(self):
        with pytest.raises(SystemExit) as err:
            main(["estimate-location", "--bogus", "1"])
        assert err.value.code == 2

    def test_wrong_family_kind(self, capsys):
        code, _, err = run(capsys, "estimate-scale", "--family", "gaussian-iid",
                           "--data", "1,2")
        assert code == 2
        assert "family" in err

    def test_missing_data(self, capsys):
        code, _, err = run(capsys, "estimate-location", "--family", "gaussian-iid")
        assert code == 2
        assert "data" in err

    def test_covariance_requires_p(self, capsys):
        code, _, err = run(capsys, "risk", "--problem", "covariance", "--n", "4",
                           "--reps", "100")
        assert code == 2
        assert "'p'" in err

    def test_p_rejected_for_location(self, capsys):
        code, _, err = run(capsys, "risk", "--problem", "location", "--family",
                           "gaussian-iid", "--n", "2", "--p", "2", "--reps", "100")
        assert code == 2
        assert "'p'" in err

    def test_numerical_failure_exits_3(self, capsys):
        code, _, err = run(capsys, "estimate-location", "--family", "uniform01-iid",
                           "--data", "0.1,1.9")
        assert code == 3
        assert "numerical failure" in err

    def test_config_unknown_key(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{"volume": 11}')
        code, _, err = run(capsys, "estimate-location", "--config", str(cfg),
                           "--family", "gaussian-iid", "--data", "1,3")
        assert code == 2
        assert "volume" in err


class TestConfig:
    def test_config_supplies_values(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"family": "gaussian-iid", "data": "1,3"}))
        code, out, _ = run(capsys, "estimate-location", "--config", str(cfg))
        assert code == 0
        assert float(out) == pytest.approx(2.0, abs=1e-8)

    def test_flags_override_config(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"family": "gaussian-iid", "data": "1,3"}))
        code, out, _ = run(capsys, "estimate-location", "--config", str(cfg),
                           "--data", "2,6")
        assert code == 0
        assert float(out) == pytest.approx(4.0, abs=1e-8)


class TestSeedHandling:
    def test_env_fallback(self, capsys, monkeypatch, tmp_path):
        out_a = tmp_path / "a.csv"
        out_b = tmp_path / "b.csv"
        monkeypatch.setenv("EQUIVAX_SEED", "123")
        code, _, _ = run(capsys, "risk", "--problem", "covariance", "--p", "1",
                         "--n", "4", "--reps", "200", "--out", str(out_a))
        assert code == 0
        monkeypatch.delenv("EQUIVAX_SEED")
        code, _, _ = run(capsys, "risk", "--problem", "covariance", "--p", "1",
                         "--n", "4", "--reps", "200", "--seed", "123",
                         "--out", str(out_b))
        assert code == 0
        assert out_a.read_text() == out_b.read_text()


class TestRiskCommands:
    def test_risk_covariance_value(self, capsys):
        code, out, _ = run(capsys, "risk", "--problem", "covariance", "--p", "1",
                           "--n", "4", "--estimator", "sigma0", "--reps", "4000",
                           "--seed", "7")
        assert code == 0
        risk = float(out.split("risk=")[1].split()[0])
        assert risk == pytest.approx(0.2704, abs=0.02)

    def test_risk_location_csv(self, capsys, tmp_path):
        out_path = tmp_path / "r.csv"
        code, _, _ = run(capsys, "risk", "--problem", "location", "--family",
                         "gaussian-iid", "--n", "4", "--reps", "400", "--seed",
                         "7", "--out", str(out_path))
        assert code == 0
        with open(out_path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert list(rows[0]) == ["problem", "k", "estimator", "reps", "seed",
                                 "risk", "stderr"]
        assert rows[0]["estimator"] == "pitman"
        assert float(rows[0]["risk"]) == pytest.approx(0.25, abs=0.05)

    def test_bayes_risk_conjugate(self, capsys):
        code, out, _ = run(capsys, "bayes-risk", "--problem", "location",
                           "--family", "gaussian-iid", "--n", "1",
                           "--estimator", "bayes-k", "--k", "1",
                           "--reps", "2000", "--seed", "3")
        assert code == 0
        risk = float(out.split("risk=")[1].split()[0])
        assert risk == pytest.approx(0.5, abs=0.06)


class TestSweepCommand:
    def test_sweep_gaps_and_artifacts(self, capsys, tmp_path):
        out_csv = tmp_path / "sweep.csv"
        out_json = tmp_path / "sweep.json"
        code, out, _ = run(capsys, "sweep", "--problem", "location", "--family",
                           "gaussian-iid", "--n", "1", "--k", "1,2,4",
                           "--reps", "3000", "--seed", "7",
                           "--out", str(out_csv), "--json-out", str(out_json))
        assert code == 0
        blob = json.loads(out_json.read_text())
        assert [entry["k"] for entry in blob["sweep"]] == [1.0, 2.0, 4.0]
        for entry in blob["sweep"]:
            want = 1.0 / (entry["k"] ** 2 + 1.0)
            assert entry["gap"] == pytest.approx(
                want, abs=3.0 * entry["combined_stderr"]
            )
        with open(out_csv, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 4  # R0 row plus one per k

    def test_artifacts_regenerate_bit_identically(self, capsys, tmp_path):
        args = ["sweep", "--problem", "location", "--family", "gaussian-iid",
                "--n", "1", "--k", "1,2", "--reps", "300", "--seed", "9"]
        a_csv, a_json = tmp_path / "a.csv", tmp_path / "a.json"
        b_csv, b_json = tmp_path / "b.csv", tmp_path / "b.json"
        assert main(args + ["--out", str(a_csv), "--json-out", str(a_json)]) == 0
        assert main(args + ["--out", str(b_csv), "--json-out", str(b_json)]) == 0
        capsys.readouterr()
        assert a_csv.read_bytes() == b_csv.read_bytes()
        assert a_json.read_bytes() == b_json.read_bytes()


class TestCheckCommand:
    def test_check_location(self, capsys):
        code, out, _ = run(capsys, "check", "--problem", "location", "--family",
                           "gaussian-iid", "--n", "3", "--reps", "800",
                           "--seed", "5", "--cases", "5")
        assert code == 0
        assert "PASS: constant risk across truths" in out
        assert "PASS: location shift equivariance" in out

    def test_check_covariance(self, capsys):
        code, out, _ = run(capsys, "check", "--problem", "covariance", "--p", "2",
                           "--n", "5", "--reps", "800", "--seed", "5",
                           "--cases", "10")
        assert code == 0
        assert "PASS: triangular-group equivariance" in out


def test_help_covers_every_flag(capsys):
    for cmd in ("estimate-location", "estimate-scale", "estimate-cov", "risk",
                "bayes-risk", "sweep", "check"):
        with pytest.raises(SystemExit) as err:
            main([cmd, "--help"])
        assert err.value.code == 0
        out = capsys.readouterr().out
        assert "--seed" in out
        assert "--config" in out
