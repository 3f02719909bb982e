import json

import pytest

from conftest import SOC, table2_dataset
from test_occupation import _flat_dataset
from wageimpute.cli import main
from wageimpute.io import read_dataset, write_dataset

SMALL = {"n_establishments": 400, "response_rate": 0.8}


def _files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.is_file()}


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    (root / "cfg.json").write_text(json.dumps(SMALL))
    assert main(["synth", "--config", str(root / "cfg.json"), "--out", str(root / "pop"), "--seed", "2"]) == 0
    assert main(["fit", "--data", str(root / "pop"), "--out", str(root / "model.json"), "--min-leaf", "30"]) == 0
    return root


class TestSynth:
    def test_writes_four_files(self, workspace):
        assert sorted(_files(workspace / "pop")) == ["establishments.csv", "grid.csv", "panels.csv", "params.json"]

    def test_defaults_without_config(self, tmp_path):
        assert main(["synth", "--out", str(tmp_path / "d"), "--seed", "0"]) == 0
        assert len(read_dataset(tmp_path / "d").establishments) == 4600

    def test_unwritable_directory(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert main(["synth", "--out", str(blocker / "sub")]) == 2

    def test_bad_config(self, tmp_path, capsys):
        (tmp_path / "bad.json").write_text('{"n_establishments": -3}')
        assert main(["synth", "--config", str(tmp_path / "bad.json"), "--out", str(tmp_path / "o")]) == 2
        assert "error" in capsys.readouterr().err


class TestFit:
    def test_model_json(self, workspace):
        model = json.loads((workspace / "model.json").read_text())
        assert model["hazard"]["fit_report"]["converged"] is True
        assert model["tree"] and model["winsor_cuts"]
        assert set(model["hazard"]["beta"]) == set(model["hazard"]["columns"])

    def test_no_avewage(self, workspace, tmp_path):
        out = tmp_path / "m.json"
        assert main(["fit", "--data", str(workspace / "pop"), "--model-spec", "NO-AVEWAGE",
                     "--out", str(out)]) == 0
        assert not any("avewage" in c for c in json.loads(out.read_text())["hazard"]["columns"])

    def test_constant_covariate_fails(self, tmp_path, capsys):
        write_dataset(_flat_dataset(empl=True), tmp_path / "flat")
        assert main(["fit", "--data", str(tmp_path / "flat"), "--out", str(tmp_path / "m.json")]) == 3
        assert "SingularDesign" in capsys.readouterr().err

    def test_invalid_dataset_is_config_error(self, tmp_path):
        assert main(["fit", "--data", str(tmp_path / "nothing"), "--out", str(tmp_path / "m.json")]) == 2


class TestImpute:
    def test_model_imputation(self, workspace, tmp_path):
        assert main(["impute", "--data", str(workspace / "pop"), "--models", str(workspace / "model.json"),
                     "--seed", "4", "--out", str(tmp_path / "done")]) == 0
        done = read_dataset(tmp_path / "done")
        assert not any(p.absent for p in done.panels)
        assert "model_imputed" in {p.provenance for p in done.panels}

    def test_missing_model_exit_4(self, workspace, tmp_path):
        assert main(["impute", "--data", str(workspace / "pop"), "--out", str(tmp_path / "x")]) == 4

    def test_complete_data_is_a_no_op(self, tmp_path, small_population):
        ds, _ = small_population
        write_dataset(ds, tmp_path / "in")
        assert main(["impute", "--data", str(tmp_path / "in"), "--out", str(tmp_path / "out")]) == 0
        assert read_dataset(tmp_path / "out").panels == ds.panels

    def test_model_and_neighbor_differ_on_table2(self, workspace, tmp_path):
        write_dataset(table2_dataset(), tmp_path / "t2")
        model = json.loads((workspace / "model.json").read_text())
        model["soc"] = SOC
        (tmp_path / "m.json").write_text(json.dumps(model))
        assert main(["impute", "--data", str(tmp_path / "t2"), "--models", str(tmp_path / "m.json"),
                     "--seed", "1", "--out", str(tmp_path / "model")]) == 0
        assert main(["impute", "--data", str(tmp_path / "t2"), "--method", "neighbor",
                     "--out", str(tmp_path / "nb")]) == 0
        by_id = lambda d: {p.estab_id: p.counts for p in read_dataset(d).panels}  # noqa: E731
        nb, md = by_id(tmp_path / "nb"), by_id(tmp_path / "model")
        assert sum(nb["2"][10:]) == 0
        assert nb["2"] != md["2"] or nb["4"] != md["4"]


@pytest.fixture(scope="module")
def done(workspace):
    out = workspace / "done"
    main(["impute", "--data", str(workspace / "pop"), "--models", str(workspace / "model.json"),
          "--seed", "4", "--out", str(out)])
    return out


class TestEstimate:
    def test_report_rows(self, workspace, done, tmp_path):
        out = tmp_path / "est.csv"
        assert main(["estimate", "--data", str(done), "--models", str(workspace / "model.json"),
                     "--by", "industry-class", "--out", str(out), "--curves", str(tmp_path / "f.csv")]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "domain,n,prop_observed,employment,mean,p10,p25,p50,p75,p90"
        assert lines[1].startswith("overall,400,")
        assert any(l.startswith("class=") for l in lines)
        assert len((tmp_path / "f.csv").read_text().splitlines()) == 4

    def test_annual(self, done, tmp_path):
        main(["estimate", "--data", str(done), "--out", str(tmp_path / "h.csv")])
        main(["estimate", "--data", str(done), "--annual", "--out", str(tmp_path / "a.csv")])
        h = float((tmp_path / "h.csv").read_text().splitlines()[1].split(",")[4])
        a = float((tmp_path / "a.csv").read_text().splitlines()[1].split(",")[4])
        assert a == pytest.approx(2080 * h)

    def test_empty_domain_exit_5(self, done, tmp_path):
        assert main(["estimate", "--data", str(done), "--msa", "nowhere", "--out", str(tmp_path / "e.csv")]) == 5

    def test_needs_imputation(self, workspace, tmp_path):
        assert main(["estimate", "--data", str(workspace / "pop"), "--out", str(tmp_path / "e.csv")]) == 2

    def test_class_filter_needs_model(self, done, tmp_path):
        assert main(["estimate", "--data", str(done), "--industry-class", "0",
                     "--out", str(tmp_path / "e.csv")]) == 2


class TestSimulate:
    def test_outputs(self, tmp_path, small_population):
        ds, _ = small_population
        write_dataset(ds, tmp_path / "pop")
        assert main(["simulate", "--data", str(tmp_path / "pop"), "--scenario", "MAR1", "--model-spec", "FULL",
                     "--replications", "2", "--target-rate", "0.2", "--min-leaf", "40",
                     "--out", str(tmp_path / "sim")]) == 0
        files = _files(tmp_path / "sim")
        assert sorted(files) == ["replicates.csv", "simulation.json", "summary.csv"]
        assert len(files["replicates.csv"].decode().splitlines()) == 3
        meta = json.loads(files["simulation.json"])
        assert meta["tree"] == "refit per replicate on responders"

    def test_json_config(self, tmp_path, small_population):
        ds, _ = small_population
        write_dataset(ds, tmp_path / "pop")
        cfg = {"alphas": [0, 0.1, 1.0, 0, 0], "scenario": "mine", "model_spec": "NO-AVEWAGE",
               "replications": 1, "seed": 3, "target_rate": 0.1}
        (tmp_path / "c.json").write_text(json.dumps(cfg))
        assert main(["simulate", "--data", str(tmp_path / "pop"), "--config", str(tmp_path / "c.json"),
                     "--out", str(tmp_path / "sim")]) == 0
        summary = (tmp_path / "sim" / "summary.csv").read_text()
        assert "mine,NO-AVEWAGE,mean_bias,1,0," in summary

    def test_incomplete_population(self, workspace, tmp_path):
        assert main(["simulate", "--data", str(workspace / "pop"), "--out", str(tmp_path / "s")]) == 2

    def test_unknown_scenario(self, tmp_path, small_population):
        ds, _ = small_population
        write_dataset(ds, tmp_path / "pop")
        assert main(["simulate", "--data", str(tmp_path / "pop"), "--scenario", "MAR9",
                     "--out", str(tmp_path / "s")]) == 2

    def test_every_replicate_failing_exit_6(self, tmp_path):
        write_dataset(_flat_dataset(empl=True), tmp_path / "flat")
        assert main(["simulate", "--data", str(tmp_path / "flat"), "--replications", "2",
                     "--model-spec", "FULL", "--target-rate", "0.3", "--out", str(tmp_path / "s")]) == 6
