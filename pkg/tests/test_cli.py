import json

import numpy as np
import pytest

from latentid.cli import run
from latentid.modelio import save_model
from latentid.sampling import (
    random_graph_mixture,
    random_hmm,
    random_latent_class,
    random_nonparametric_mixture,
    trial_rng,
)


@pytest.fixture
def lc3_file(tmp_path):
    path = tmp_path / "lc3.json"
    save_model(random_latent_class(trial_rng(70, 0), 3, (3, 3, 3)), path)
    return str(path)


@pytest.fixture
def lc5_file(tmp_path):
    path = tmp_path / "lc5.json"
    save_model(random_latent_class(trial_rng(70, 1), 2, (2, 2, 2, 2, 2)), path)
    return str(path)


@pytest.fixture
def hmm_file(tmp_path):
    path = tmp_path / "hmm.json"
    save_model(random_hmm(trial_rng(70, 2), 2, 2), path)
    return str(path)


@pytest.fixture
def graph_file(tmp_path):
    path = tmp_path / "graph.json"
    save_model(random_graph_mixture(trial_rng(70, 3)), path)
    return str(path)


@pytest.fixture
def npm_file(tmp_path):
    path = tmp_path / "npm.json"
    save_model(random_nonparametric_mixture(trial_rng(70, 4), 2, 3), path)
    return str(path)


def run_json(capsys, argv):
    code = run(argv + ["--json"])
    out = capsys.readouterr().out.strip()
    return code, json.loads(out)


class TestCertificates:
    def test_bound(self, capsys):
        code, report = run_json(capsys, ["bound", "--r", "5", "--kappa", "2"])
        assert code == 0
        assert report["result"]["min_variables"] == 7

    def test_goodman_search_not_certified(self, capsys):
        code, report = run_json(
            capsys, ["search-tripartition", "--r", "3", "--kappas", "2,2,2,2"]
        )
        assert code == 1
        assert report["result"]["holds"] is False
        assert report["result"]["rank_sum"] == 7

    def test_search_certified(self, capsys):
        code, report = run_json(
            capsys, ["search-tripartition", "--r", "3", "--kappas", "2,2,2,2,2"]
        )
        assert code == 0
        assert report["result"]["holds"] is True

    def test_certify_lc(self, capsys, lc3_file):
        code, report = run_json(capsys, ["certify-lc", "--model", lc3_file])
        assert code == 0
        assert report["result"]["holds"] is True

    def test_hmm_window(self, capsys):
        code, report = run_json(capsys, ["hmm-window", "--r", "4", "--kappa", "2"])
        assert code == 0
        assert report["result"]["k"] == 3
        assert report["result"]["window"] == 7

    def test_hmm_certify(self, capsys, hmm_file):
        code, report = run_json(capsys, ["hmm-certify", "--model", hmm_file])
        assert code == 0
        assert report["result"]["holds"] is True

    def test_graph_certify(self, capsys, graph_file):
        code, report = run_json(
            capsys, ["graph-certify", "--model", graph_file, "--m", "4"]
        )
        assert code == 0
        assert report["result"]["group_matrix_rank"] == 16


class TestRecovery:
    def test_recover_lc_three_variables(self, capsys, lc3_file):
        code, report = run_json(capsys, ["recover-lc", "--model", lc3_file])
        assert code == 0
        assert report["result"]["alignment_error"] <= 1e-8

    def test_recover_lc_with_tripartition(self, capsys, lc5_file):
        code, report = run_json(
            capsys,
            ["recover-lc", "--model", lc5_file, "--tripartition", "0,1|2,3|4"],
        )
        assert code == 0
        assert report["result"]["alignment_error"] <= 1e-8

    def test_hmm_recover(self, capsys, hmm_file):
        code, report = run_json(
            capsys, ["hmm-recover", "--model", hmm_file, "--tol", "1e-6"]
        )
        assert code == 0
        assert report["result"]["alignment_error"] <= 1e-6

    def test_graph_extract(self, capsys, graph_file):
        code, report = run_json(capsys, ["graph-extract", "--model", graph_file])
        assert code == 0
        assert report["result"]["match_error"] <= 1e-8

    def test_nonparam_cuts(self, capsys, npm_file):
        code, report = run_json(capsys, ["nonparam-cuts", "--model", npm_file])
        assert code == 0
        assert len(report["result"]["cuts"]) == 3

    def test_nonparam_recover(self, capsys, npm_file):
        code, report = run_json(
            capsys, ["nonparam-recover", "--model", npm_file, "--tol", "1e-6"]
        )
        assert code == 0
        assert report["result"]["alignment_error"] <= 1e-6


class TestSimulate:
    def test_latent_class_trials(self, capsys):
        code, report = run_json(
            capsys,
            ["simulate", "--family", "latent-class", "--r", "3",
             "--kappas", "3,3,3", "--trials", "5"],
        )
        assert code == 0
        assert report["result"]["failures"] == 0
        assert report["result"]["max_error"] <= 1e-8

    def test_hmm_trials(self, capsys):
        code, report = run_json(
            capsys,
            ["simulate", "--family", "hmm", "--r", "2", "--kappa", "2",
             "--trials", "5", "--tol", "1e-6"],
        )
        assert code == 0
        assert report["result"]["max_error"] <= 1e-6

    def test_graph_trials_both_branches(self, capsys):
        code, report = run_json(
            capsys,
            ["simulate", "--family", "graph", "--trials", "5", "--tol", "1e-9"],
        )
        assert code == 0
        code, report = run_json(
            capsys,
            ["simulate", "--family", "graph", "--equal-mixing", "--trials", "5",
             "--tol", "1e-9"],
        )
        assert code == 0


class TestReportContract:
    def test_json_reports_are_byte_identical(self, capsys, lc3_file):
        argv = ["recover-lc", "--model", lc3_file, "--seed", "7", "--json"]
        run(argv)
        first = capsys.readouterr().out
        run(argv)
        second = capsys.readouterr().out
        assert first == second

    def test_usage_error_exits_2(self, capsys):
        assert run(["bound", "--r", "5"]) == 2  # missing --kappa
        assert run(["no-such-command"]) == 2

    def test_missing_file_exits_2(self, capsys):
        assert run(["certify-lc", "--model", "/nonexistent.json"]) == 2

    def test_wrong_model_type_exits_2(self, capsys, hmm_file):
        assert run(["certify-lc", "--model", hmm_file]) == 2

    def test_honest_negative_exits_1(self, capsys, tmp_path):
        # a latent-class model whose third variable cannot separate classes
        from latentid.latent_class import LatentClassModel

        dup = np.array([[0.3, 0.7], [0.3, 0.7]])
        eye = np.eye(2)
        model = LatentClassModel(pi=np.array([0.5, 0.5]), emissions=(eye, eye, dup))
        path = tmp_path / "bad.json"
        save_model(model, path)
        assert run(["certify-lc", "--model", str(path)]) == 1
