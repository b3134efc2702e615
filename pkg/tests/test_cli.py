import json

import numpy as np
import pandas as pd
import pytest
import yaml

from napeeg.cli import main


@pytest.fixture(scope="module")
def study_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli_study")
    template = {
        "n_subjects": 3,
        "seed": 17,
        "nap_minutes": 1.5,
        "trim_s": 15.0,
        "word_items": 8,
        "vis_items": 6,
    }
    tpl_path = root / "template.yaml"
    tpl_path.write_text(yaml.safe_dump(template), encoding="utf-8")
    out = root / "study"
    assert main(["synth", "--config", str(tpl_path), "--out", str(out)]) == 0
    return out


class TestSynth:
    def test_creates_manifest_and_subjects(self, study_dir):
        assert (study_dir / "study.yaml").exists()
        assert (study_dir / "sub-01" / "nap.csv").exists()
        assert (study_dir / "sub-03" / "responses.csv").exists()

    def test_unknown_template_key_is_validation_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.yaml"
        bad.write_text("not_a_real_key: 5\n", encoding="utf-8")
        code = main(["synth", "--config", str(bad), "--out", str(tmp_path / "x")])
        assert code == 1


class TestPreprocessPsdWpli:
    def test_chain(self, study_dir, tmp_path):
        pre_out = tmp_path / "pre"
        code = main(
            ["preprocess", "--config", str(study_dir / "study.yaml"), "--out", str(pre_out)]
        )
        assert code == 0
        epochs_csv = pre_out / "sub-01" / "nap_epochs.csv"
        assert epochs_csv.exists()

        psd_out = tmp_path / "psd"
        assert main(["psd", "--epochs", str(epochs_csv), "--out", str(psd_out)]) == 0
        table = pd.read_csv(psd_out / "psd_band_region.csv")
        assert table.shape == (6, 6)  # band column + 5 regions
        long = pd.read_csv(psd_out / "psd_channel_long.csv")
        assert set(long.columns) == {"channel", "band", "db"}
        assert len(long) == 60  # 10 channels x 6 bands

        wpli_out = tmp_path / "wpli"
        assert main(["wpli", "--epochs", str(epochs_csv), "--out", str(wpli_out)]) == 0
        wtable = pd.read_csv(wpli_out / "wpli_band_region_pair.csv")
        assert wtable.shape == (6, 16)  # band column + 15 pairs
        pairs = pd.read_csv(wpli_out / "wpli_channel_pairs.csv")
        assert len(pairs) == 6 * 45  # 6 bands x C(10, 2)
        edges = json.loads((wpli_out / "wpli_edges.json").read_text())
        assert len(edges["edges"]) == 6
        assert len(edges["edges"]["alpha"]) == 15


class TestScore:
    def test_scores_from_responses(self, study_dir, tmp_path, capsys):
        out_csv = tmp_path / "scores.csv"
        code = main(
            [
                "score",
                "--responses",
                str(study_dir / "sub-01" / "responses.csv"),
                "--out",
                str(out_csv),
            ]
        )
        assert code == 0
        frame = pd.read_csv(out_csv)
        assert set(frame["task"]) == {"word_pairs", "picture", "location"}
        assert set(frame["session"]) == {"immediate", "delayed"}
        assert len(frame) == 6

    def test_adjudication_file_applied(self, tmp_path):
        resp = tmp_path / "resp.csv"
        resp.write_text(
            "task,session,stimulus_id,truth,response,quadrant_truth,quadrant_answer\n"
            "word_pairs,immediate,event,festival,completelywrong,,\n"
            "word_pairs,delayed,event,festival,festival,,\n",
            encoding="utf-8",
        )
        adj = tmp_path / "adj.csv"
        adj.write_text(
            "cue,response,adjudication\nevent,completelywrong,accept\n",
            encoding="utf-8",
        )
        out_csv = tmp_path / "scores.csv"
        code = main(
            ["score", "--responses", str(resp), "--adjudication", str(adj), "--out", str(out_csv)]
        )
        assert code == 0
        frame = pd.read_csv(out_csv).set_index("session")
        assert frame.loc["immediate", "value"] == 1.0  # accepted override


class TestStats:
    def _write_long(self, path, groups):
        rows = ["unit,group,value"]
        for name, values in groups.items():
            for i, v in enumerate(values):
                rows.append(f"u{i},{name},{v}")
        path.write_text("\n".join(rows) + "\n", encoding="utf-8")

    def test_perm(self, tmp_path):
        data = tmp_path / "long.csv"
        self._write_long(
            data, {"a": [2, 3, 4, 5, 6, 7, 8], "b": [1, 2, 3, 4, 5, 6, 7]}
        )
        out = tmp_path / "result.csv"
        code = main(
            ["stats", "--test", "perm", "--data", str(data), "--out", str(out), "--seed", "7"]
        )
        assert code == 0
        frame = pd.read_csv(out)
        assert frame.loc[0, "test"] == "perm_paired"
        assert frame.loc[0, "p_value"] == pytest.approx(2 / 128)
        assert frame.loc[0, "seed"] == 7
        assert frame.loc[0, "algorithm"] == "pcg64"

    def test_pearson(self, tmp_path):
        data = tmp_path / "long.csv"
        x = np.arange(8.0)
        self._write_long(data, {"a": x, "b": 3 * x + 1})
        code = main(["stats", "--test", "pearson", "--data", str(data)])
        assert code == 0

    def test_kruskal(self, tmp_path, capsys):
        data = tmp_path / "long.csv"
        self._write_long(data, {"a": [1, 2, 3], "b": [4, 5, 6], "c": [7, 8, 9]})
        out = tmp_path / "result.csv"
        code = main(["stats", "--test", "kruskal", "--data", str(data), "--out", str(out)])
        assert code == 0
        frame = pd.read_csv(out)
        assert frame.loc[0, "statistic"] == pytest.approx(7.2)

    def test_missing_columns_exit_one(self, tmp_path):
        data = tmp_path / "bad.csv"
        data.write_text("foo,bar\n1,2\n", encoding="utf-8")
        assert main(["stats", "--test", "perm", "--data", str(data)]) == 1


class TestRunAll:
    def test_full_run_and_exit_codes(self, study_dir, tmp_path):
        out = tmp_path / "report"
        code = main(
            ["run-all", "--config", str(study_dir / "study.yaml"), "--out", str(out)]
        )
        assert code == 0
        assert (out / "performance.csv").exists()
        assert (out / "provenance.json").exists()
        grid = pd.read_csv(out / "nap_feature_correlation.csv")
        assert len(grid) == 360

    def test_missing_config_is_validation_error(self, tmp_path):
        code = main(["run-all", "--config", str(tmp_path / "nope.yaml")])
        assert code == 1

    def test_missing_subject_files_is_validation_error(self, tmp_path):
        cfg = tmp_path / "study.yaml"
        cfg.write_text(
            yaml.safe_dump({"subjects": [{"id": "sub-01", "dir": "sub-01"}]}),
            encoding="utf-8",
        )
        assert main(["run-all", "--config", str(cfg)]) == 1

    def test_bad_usage_exit_code(self):
        assert main(["definitely-not-a-command"]) == 1

    def test_runtime_error_exit_code(self, study_dir, tmp_path):
        # amplifying a nap recording 1000x rejects every epoch, tripping
        # the >50% rejection guard at run time
        import shutil

        study_copy = tmp_path / "study"
        shutil.copytree(study_dir, study_copy)
        sub = study_copy / "sub-01"
        frame = pd.read_csv(sub / "nap.csv", float_precision="round_trip")
        (frame * 1000.0).to_csv(sub / "nap.csv", index=False, lineterminator="\n")
        code = main(
            [
                "run-all",
                "--config",
                str(study_copy / "study.yaml"),
                "--out",
                str(tmp_path / "report"),
            ]
        )
        assert code == 2

    def test_parallel_jobs_match_serial(self, study_dir, tmp_path):
        serial = tmp_path / "serial"
        parallel = tmp_path / "parallel"
        cfg = str(study_dir / "study.yaml")
        assert main(["run-all", "--config", cfg, "--out", str(serial)]) == 0
        assert main(["run-all", "--config", cfg, "--out", str(parallel), "--jobs", "2"]) == 0
        for name in (
            "performance.csv",
            "nap_feature_correlation.csv",
            "recall_prepost.csv",
            "recall_feature_correlation.csv",
        ):
            assert (serial / name).read_bytes() == (parallel / name).read_bytes()


class TestSubjectMetadata:
    def test_sidecar_records_subject_id(self, study_dir):
        meta = yaml.safe_load((study_dir / "sub-01" / "nap.meta.yaml").read_text())
        assert meta["subject_id"] == "sub-01"
        assert meta["units"] == "uV"

    def test_questionnaires_loaded(self, study_dir):
        from napeeg.config import load_config
        from napeeg.pipeline import load_subject

        config = load_config(study_dir / "study.yaml")
        session = load_subject(config.subjects[0], config)
        assert {"psqi", "sss_pre", "sss_post"} <= set(session.questionnaires)


class TestPrecleanedSwitch:
    def test_clean_files_preferred_when_enabled(self, study_dir, tmp_path):
        import shutil

        from napeeg.config import load_config

        study_copy = tmp_path / "study"
        shutil.copytree(study_dir, study_copy)
        manifest = study_copy / "study.yaml"
        raw = yaml.safe_load(manifest.read_text())
        raw["preprocessing"]["use_precleaned"] = True
        manifest.write_text(yaml.safe_dump(raw), encoding="utf-8")

        # plant a recognizable pre-cleaned nap for sub-01
        sub = study_copy / "sub-01"
        frame = pd.read_csv(sub / "nap.csv", float_precision="round_trip")
        (frame * 0.0).to_csv(sub / "nap.clean.csv", index=False, lineterminator="\n")

        config = load_config(manifest)
        nap_csv, _ = config.subjects[0].nap()
        assert nap_csv.name == "nap.clean.csv"
        other_csv, _ = config.subjects[1].nap()
        assert other_csv.name == "nap.csv"  # falls back when absent

        config_off = load_config(study_dir / "study.yaml")
        assert config_off.subjects[0].nap()[0].name == "nap.csv"
