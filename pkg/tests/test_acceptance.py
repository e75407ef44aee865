"""Acceptance suite: one test per release criterion, each printing a
PASS line (visible with `pytest -s` or in the captured-output report)."""

import os
import time

import numpy as np
import pytest

from psyscale.cli import main as cli_main
from psyscale.corpus import (
    PartitionAssignment,
    PartitionLabel,
    PartitionMode,
    ResponseKind,
    read_response_table,
)
from psyscale.experiments import permutation_test_slope, residual_contribution
from psyscale.features import HrfKernel, hrf_convolve
from psyscale.preprocess import (
    attach_go_past,
    compute_go_past,
    filter_et,
    filter_spr,
    partition,
    read_comprehension_scores,
    read_fixations,
)
from psyscale.regression import fit_linear, normalize_ceiling, pearson, predict
from psyscale.synth import SynthSpec, gen_latent_regression, gen_random_feature_bundle

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


def ok(name):
    print(f"PASS: {name}")


class TestRegressionOracles:
    def test_oracle_equivalence(self):
        start = time.time()
        rng = np.random.default_rng(101)
        for _ in range(200):
            n = int(rng.integers(9, 51))
            d = int(rng.integers(1, 9))
            X = rng.standard_normal((n, d))
            y = rng.standard_normal(n)
            m = fit_linear(X, y)
            Xc = X - X.mean(axis=0)
            yc = y - y.mean()
            w = np.linalg.solve(Xc.T @ Xc, Xc.T @ yc)
            assert np.max(np.abs(m.weights - w)) < 1e-8
            assert abs(m.intercept - (y.mean() - X.mean(axis=0) @ w)) < 1e-8
        for _ in range(50):
            n, d, r = 20, 8, int(rng.integers(1, 5))
            X = rng.standard_normal((n, r)) @ rng.standard_normal((r, d))
            y = rng.standard_normal(n)
            m = fit_linear(X, y)
            w = np.linalg.pinv(X - X.mean(axis=0)) @ (y - y.mean())
            assert np.max(np.abs(m.weights - w)) < 1e-6
        elapsed = time.time() - start
        assert elapsed < 10.0
        ok(f"regression oracle equivalence (250 instances, {elapsed:.1f}s)")

    def test_dual_primal_agreement(self):
        rng = np.random.default_rng(102)
        X = rng.standard_normal((308, 2048))
        y = rng.standard_normal(308)
        svd = fit_linear(X, y, solver="svd")
        gram = fit_linear(X, y, solver="gram")
        assert np.max(np.abs(svd.weights - gram.weights)) < 1e-6
        assert abs(svd.intercept - gram.intercept) < 1e-6
        ok("dual/primal solver agreement on 308x2048")


class TestPearsonUnits:
    def test_unit_cases(self):
        assert pearson(np.array([1.0, 2, 3]),
                       np.array([1.0, 2, 3])).pearson_r == pytest.approx(
                           1.0, abs=1e-12)
        assert pearson(np.array([1.0, 2, 3]),
                       np.array([3.0, 2, 1])).pearson_r == pytest.approx(
                           -1.0, abs=1e-12)
        assert pearson(np.array([1.0, 2, 3, 4]),
                       np.array([1.0, 3, 2, 4])).pearson_r == pytest.approx(
                           0.8, abs=1e-12)
        ok("pearson unit cases (identity, reversal, 4-point hand case)")


class TestHrfAcceptance:
    def test_impulse_and_properties(self):
        import math

        def oracle(t, peak=6.0, under=16.0, disp=1.0, ratio=6.0):
            if t <= 0:
                return 0.0
            def g(x, a, s):
                return x ** (a - 1) * math.exp(-x / s) / (math.gamma(a) * s ** a)
            return g(t, peak / disp, disp) - g(t, under / disp, disp) / ratio

        scan_times = np.arange(0.0, 32.0, 2.0)  # TR = 2
        out = hrf_convolve(np.ones((1, 1)), [0.0], scan_times)
        expected = np.array([oracle(t) for t in scan_times])
        assert np.max(np.abs(out[:, 0] - expected)) < 1e-6

        rng = np.random.default_rng(103)
        for _ in range(100):
            n, d = 6, 2
            onsets = np.sort(rng.uniform(0, 25, n))
            X = rng.standard_normal((n, d))
            Y = rng.standard_normal((n, d))
            a, b = rng.standard_normal(2)
            lhs = hrf_convolve(a * X + b * Y, onsets, scan_times)
            rhs = (a * hrf_convolve(X, onsets, scan_times)
                   + b * hrf_convolve(Y, onsets, scan_times))
            assert np.max(np.abs(lhs - rhs)) < 1e-9
            # causality: zero the latest event, earlier scans unchanged
            cut = onsets[-1]
            Xz = X.copy()
            Xz[-1] = 0.0
            full = hrf_convolve(X, onsets, scan_times)
            zeroed = hrf_convolve(Xz, onsets, scan_times)
            early = scan_times <= cut
            assert np.max(np.abs(full[early] - zeroed[early])) < 1e-9
        ok("HRF impulse matches closed form; linearity and causality hold")


class TestDegreesOfFreedom:
    def test_width_scaling(self):
        start = time.time()
        spec = SynthSpec(n_subjects=1, n_docs=8, sentences_per_doc=150,
                         words_per_sentence=5, latent_dim=8, noise_sigma=0.5,
                         seed=9)
        data = gen_latent_regression(spec)
        assignment = partition(data.table, PartitionMode.THREE_WAY, seed=7)
        fit_mask = assignment.mask(PartitionLabel.FIT)
        held_mask = assignment.mask(PartitionLabel.HELDOUT)
        y = data.table.responses()
        # index word events once; features align with table rows directly
        key_index = {key: i for i, key in enumerate(data.word_keys)}
        row_index = np.array([key_index[r.word_key] for r in data.table])

        widths = (8, 32, 128, 512)
        points = []
        medians = []
        for width in widths:
            rs = []
            for seed in range(20):
                bundle = gen_random_feature_bundle(
                    data.word_keys, data.word_latents, width,
                    seed=1000 + seed, signal_leak=0.3)
                feats = np.stack([t.vector for t in bundle.tokens]).astype(
                    np.float64)[row_index]
                model = fit_linear(feats[fit_mask], y[fit_mask])
                r = pearson(predict(model, feats[held_mask]),
                            y[held_mask]).pearson_r
                rs.append(r)
                points.append((np.log10(width), r))
            medians.append(float(np.median(rs)))
        assert medians[0] < medians[1] < medians[2] < medians[3], medians
        p_pos, _ = permutation_test_slope(points, n=1000, seed=77)
        assert p_pos < 0.05
        elapsed = time.time() - start
        assert elapsed < 120.0
        ok(f"degrees-of-freedom width scaling (medians {medians}, "
           f"p={p_pos:.4g}, {elapsed:.0f}s)")


class TestResidualizationControl:
    @staticmethod
    def three_way(n, seed):
        rng = np.random.default_rng(seed)
        labels = tuple(rng.choice(
            [PartitionLabel.FIT, PartitionLabel.FIT, PartitionLabel.EXPLORE,
             PartitionLabel.HELDOUT], size=n))
        keys = tuple(("d", 0, i, "s", None) for i in range(n))
        return PartitionAssignment(PartitionMode.THREE_WAY, keys, labels=labels)

    def test_signal_null_and_identical(self):
        n, k, d = 1200, 8, 32
        signal_hits = 0
        null_hits = 0
        for seed in range(20):
            rng = np.random.default_rng(seed)
            Z = rng.standard_normal((n, k))
            w = rng.standard_normal(k)
            w /= np.linalg.norm(w)
            signal = Z @ w
            y = signal + 0.5 * rng.standard_normal(n)
            untrained = rng.standard_normal((n, d))
            assignment = self.three_way(n, 100 + seed)
            n_held = assignment.mask(PartitionLabel.HELDOUT).sum()
            threshold = 3.0 / np.sqrt(n_held)

            trained = np.hstack([untrained, signal[:, None]])
            score = residual_contribution(untrained, trained, y, assignment)
            if score.pearson_r is not None and score.pearson_r > threshold:
                signal_hits += 1

            y_null = rng.standard_normal(n)
            trained_null = rng.standard_normal((n, d))
            score = residual_contribution(untrained, trained_null, y_null,
                                          assignment)
            if score.pearson_r is not None \
                    and abs(score.pearson_r) < threshold:
                null_hits += 1

            identical = residual_contribution(untrained, untrained.copy(), y,
                                              assignment)
            assert identical.pearson_r is None

        assert signal_hits >= 18
        assert null_hits >= 17
        ok(f"residualization control (signal {signal_hits}/20, "
           f"null {null_hits}/20, identical UNDEFINED)")


class TestPermutationCalibration:
    def test_calibration_and_extreme_rank(self):
        rng = np.random.default_rng(2024)
        x = np.arange(10.0)
        hits = 0
        trials = 500
        for _ in range(trials):
            r = rng.standard_normal(10)
            p_pos, _ = permutation_test_slope(
                list(zip(x, r)), n=999, seed=int(rng.integers(1 << 31)))
            hits += p_pos < 0.05
        fraction = hits / trials
        assert 0.03 <= fraction <= 0.07

        points = [(float(i), 0.05 * i) for i in range(10)]
        p_pos, _ = permutation_test_slope(points, n=1000, seed=42)
        assert p_pos == pytest.approx(1.0 / 1001.0, abs=1e-15)
        ok(f"permutation calibration (null fraction {fraction:.3f}, "
           f"extreme p = 1/1001)")


class TestPreprocessingGoldens:
    def test_spr_golden(self):
        table = read_response_table(os.path.join(DATA_DIR, "spr_30.tsv"),
                                    ResponseKind.SPR)
        assert len(table) == 30
        scores = read_comprehension_scores(
            os.path.join(DATA_DIR, "spr_comprehension.tsv"))
        result = filter_spr(table, scores)
        retained = {(r.subject_id, r.sentence_id, r.word_index)
                    for r in result.table}
        expected = {("s1", 0, 2), ("s1", 0, 3), ("s1", 0, 4),
                    ("s1", 1, 2), ("s1", 1, 3),
                    ("s1", 2, 1), ("s1", 2, 2), ("s1", 2, 4),
                    ("s1", 3, 1)}
        assert retained == expected
        assert result.excluded == {"sentence_boundary": 10,
                                   "comprehension": 7,
                                   "rt_window": 4}
        ok("SPR golden fixture (window, comprehension, boundaries)")

    def test_et_golden(self):
        table = read_response_table(os.path.join(DATA_DIR, "et_30.tsv"),
                                    ResponseKind.ET)
        assert len(table) == 30
        fixations = read_fixations(os.path.join(DATA_DIR, "et_fixations.tsv"))
        go_past = compute_go_past(fixations)
        # hand-traced go-past values for the fixture stream
        expected_go_past = {1: 200.0, 2: 180.0, 3: 120.0, 4: 270.0, 5: 210.0,
                            11: 160.0, 12: 140.0, 13: 130.0}
        assert {r.word_position: r.response
                for r in go_past} == expected_go_past
        result = filter_et(attach_go_past(table, go_past), fixations)
        retained = {r.word_position: r.response for r in result.table}
        assert retained == {1: 200.0, 2: 180.0, 3: 120.0, 4: 270.0, 12: 140.0}
        assert result.excluded == {"unfixated": 22, "skip": 1,
                                   "sentence_doc_boundary": 1,
                                   "line_screen_boundary": 1}
        ok("ET golden fixture (go-past, >4-word skips, line boundaries)")

    def test_partition_proportions_and_ceiling(self):
        from psyscale.corpus import ResponseRecord, ResponseTable
        records = [ResponseRecord("s1", f"d{i % 10}", i // 10, 0, "w", 200.0)
                   for i in range(10_000)]
        table = ResponseTable(records, ResponseKind.SPR)
        assignment = partition(table, PartitionMode.THREE_WAY, seed=11)
        fractions = [assignment.mask(label).mean()
                     for label in (PartitionLabel.FIT, PartitionLabel.EXPLORE,
                                   PartitionLabel.HELDOUT)]
        assert abs(fractions[0] - 0.50) < 0.02
        assert abs(fractions[1] - 0.25) < 0.02
        assert abs(fractions[2] - 0.25) < 0.02
        assert normalize_ceiling(0.16, 0.32) == 0.5
        assert normalize_ceiling(0.32, 0.32) == 1.0
        ok(f"partition proportions {[round(f, 3) for f in fractions]}; "
           "ceiling normalization exact")


E2E_CONFIG = """
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
bundles = {out}/bundles/synth_d8_step0.vbun, {out}/bundles/synth_d32_step0.vbun, {out}/bundles/synth_d128_step0.vbun

[scaling]
scores = {out}/scores.tsv
n_permutations = 1000
seed = 99
"""


class TestEndToEndDeterminism:
    def test_scaling_reruns_byte_identical(self, tmp_path):
        out = tmp_path / "run"
        cfg = tmp_path / "e2e.ini"
        cfg.write_text(E2E_CONFIG.format(out=out), encoding="utf-8")
        for command in ("synth", "preprocess", "evaluate"):
            assert cli_main([command, "--config", str(cfg)]) == 0
        assert cli_main(["scaling", "--config", str(cfg)]) == 0
        tables = ("scaling_summary.tsv", "scaling_points.tsv", "scores.tsv")
        first = {name: (out / name).read_bytes() for name in tables}
        assert cli_main(["scaling", "--config", str(cfg)]) == 0
        assert cli_main(["evaluate", "--config", str(cfg)]) == 0
        assert cli_main(["scaling", "--config", str(cfg)]) == 0
        for name in tables:
            assert (out / name).read_bytes() == first[name], name
        ok("end-to-end scaling reruns are byte-identical")
