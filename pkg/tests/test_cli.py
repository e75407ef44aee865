import os

import pytest

from psyscale.cli import main
from psyscale.report import read_scores

BASE_SYNTH = """
[output]
dir = {out}

[synth]
seed = 21
n_subjects = 1
n_docs = 4
sentences_per_doc = 60
words_per_sentence = 5
latent_dim = 8
noise_sigma = 0.5
feature_widths = 8,32,128
signal_leak = 0.3
trained_signal_leak = 0.6

[data]
kind = fmri_sentence
response_table = {out}/synth_responses.tsv

[partition]
mode = three_way
seed = 7

[regression]
ridge_lambda = 0
solver = auto

[evaluate]
dataset_id = synth
table = {out}/preprocessed_responses.tsv
partition = {out}/partition.tsv
bundles = {out}/bundles/synth_d*_step0.vbun
{evaluate_extra}

[residualize]
dataset_id = synth
table = {out}/preprocessed_responses.tsv
partition = {out}/partition.tsv
pairs = {out}/bundles/synth_d8_step0.vbun:{out}/bundles/synth_d8_step143000.vbun, {out}/bundles/synth_d32_step0.vbun:{out}/bundles/synth_d32_step143000.vbun, {out}/bundles/synth_d128_step0.vbun:{out}/bundles/synth_d128_step143000.vbun

[scaling]
scores = {out}/{scores_file}
n_permutations = 1000
seed = 99
"""


def write_config(tmp_path, name="run.ini", scores_file="scores.tsv",
                 evaluate_extra=""):
    out = tmp_path / "out"
    cfg = tmp_path / name
    cfg.write_text(BASE_SYNTH.format(out=out, scores_file=scores_file,
                                     evaluate_extra=evaluate_extra),
                   encoding="utf-8")
    return str(cfg), out


def run_pipeline(cfg):
    for command in ("synth", "preprocess", "evaluate", "residualize",
                    "scaling"):
        assert main([command, "--config", cfg]) == 0


class TestPipeline:
    def test_full_pipeline_outputs(self, tmp_path):
        cfg, out = write_config(tmp_path)
        run_pipeline(cfg)
        for name in ("synth_responses.tsv", "preprocessed_responses.tsv",
                     "partition.tsv", "preprocess_audit.txt", "scores.tsv",
                     "residual_scores.tsv", "scaling_summary.tsv",
                     "scaling_points.tsv", "scaling.svg"):
            assert (out / name).exists(), name

    def test_raw_scores_scale_up_residual_scores_do_not(self, tmp_path):
        cfg, out = write_config(tmp_path)
        run_pipeline(cfg)
        raw = {s.parameter_count: s.pearson_r
               for s in read_scores(out / "scores.tsv")}
        assert raw[8] < raw[32] < raw[128]
        # rerun scaling over the residualized scores: no positive trend
        cfg2, _ = write_config(tmp_path, name="run2.ini",
                               scores_file="residual_scores.tsv")
        assert main(["scaling", "--config", cfg2]) == 0
        summary = (out / "scaling_summary.tsv").read_text().splitlines()[1]
        slope = float(summary.split("\t")[0])
        assert slope < 0.0

    def test_evaluate_ceiling_normalization(self, tmp_path):
        cfg, out = write_config(tmp_path, evaluate_extra="ceiling = 0.32")
        for command in ("synth", "preprocess", "evaluate"):
            assert main([command, "--config", cfg]) == 0
        for score in read_scores(out / "scores.tsv"):
            assert score.normalized_r == pytest.approx(
                score.pearson_r / 0.32, rel=1e-9)

    def test_rerun_byte_identical(self, tmp_path):
        cfg, out = write_config(tmp_path)
        run_pipeline(cfg)
        first = {name: (out / name).read_bytes()
                 for name in ("synth_responses.tsv", "partition.tsv",
                              "scores.tsv", "residual_scores.tsv",
                              "scaling_summary.tsv", "scaling_points.tsv")}
        run_pipeline(cfg)
        for name, blob in first.items():
            assert (out / name).read_bytes() == blob, name

    def test_workers_do_not_change_results(self, tmp_path):
        cfg, out = write_config(tmp_path)
        for command in ("synth", "preprocess"):
            assert main([command, "--config", cfg]) == 0
        assert main(["evaluate", "--config", cfg]) == 0
        serial = (out / "scores.tsv").read_bytes()
        assert main(["evaluate", "--config", cfg, "--workers", "4"]) == 0
        assert (out / "scores.tsv").read_bytes() == serial


AUDIT_SPR = """
[output]
dir = {out}

[data]
kind = spr
response_table = {table}
comprehension_scores = {scores}

[partition]
mode = three_way
seed = 5
"""


class TestPreprocessCommand:
    def test_audit_log_counts_window_exclusion(self, tmp_path):
        table = tmp_path / "spr.tsv"
        table.write_text(
            "subject_id\tdoc_id\tsentence_id\tword_index\tword_text\tresponse\n"
            "s1\td1\t0\t1\ta\t200\n"
            "s1\td1\t0\t2\tb\t99\n"
            "s1\td1\t1\t1\tc\t500\n",
            encoding="utf-8")
        scores = tmp_path / "comp.tsv"
        scores.write_text("subject_id\tcorrect_answers\ns1\t6\n",
                          encoding="utf-8")
        cfg = tmp_path / "pre.ini"
        out = tmp_path / "out"
        cfg.write_text(AUDIT_SPR.format(out=out, table=table, scores=scores),
                       encoding="utf-8")
        assert main(["preprocess", "--config", str(cfg)]) == 0
        audit = (out / "preprocess_audit.txt").read_text()
        assert "rt_window: 1" in audit
        assert "retained: 2" in audit

    def test_preprocess_rerun_identical(self, tmp_path):
        table = tmp_path / "spr.tsv"
        rows = ["subject_id\tdoc_id\tsentence_id\tword_index\tword_text\tresponse"]
        for sent in range(50):
            rows.append(f"s1\td1\t{sent}\t1\tw\t{150 + sent}")
        table.write_text("\n".join(rows) + "\n", encoding="utf-8")
        scores = tmp_path / "comp.tsv"
        scores.write_text("subject_id\tcorrect_answers\ns1\t6\n",
                          encoding="utf-8")
        cfg = tmp_path / "pre.ini"
        out = tmp_path / "out"
        cfg.write_text(AUDIT_SPR.format(out=out, table=table, scores=scores),
                       encoding="utf-8")
        assert main(["preprocess", "--config", str(cfg)]) == 0
        first = (out / "partition.tsv").read_bytes()
        assert main(["preprocess", "--config", str(cfg)]) == 0
        assert (out / "partition.tsv").read_bytes() == first


class TestExitCodes:
    def test_missing_config_is_config_error(self, tmp_path):
        assert main(["synth", "--config", str(tmp_path / "nope.ini")]) == 2

    def test_empty_bundle_list_is_config_error(self, tmp_path):
        cfg, out = write_config(tmp_path)
        # mangle: blank bundles key
        text = (tmp_path / "run.ini").read_text().replace(
            "bundles = ", "bundles = \n; was: ")
        (tmp_path / "run.ini").write_text(text, encoding="utf-8")
        for command in ("synth", "preprocess"):
            assert main([command, "--config", cfg]) == 0
        assert main(["evaluate", "--config", cfg]) == 2

    def test_missing_data_file_is_data_error(self, tmp_path):
        cfg, out = write_config(tmp_path)
        assert main(["synth", "--config", cfg]) == 0
        os.remove(out / "synth_responses.tsv")
        assert main(["preprocess", "--config", cfg]) == 3

    def test_scores_file_missing_is_data_error(self, tmp_path):
        cfg, _ = write_config(tmp_path)
        assert main(["scaling", "--config", cfg]) == 3
