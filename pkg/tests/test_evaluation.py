"""Scoring harness: FS metrics, map classifiers, trial bookkeeping and method dispatch."""
import time

import numpy as np
import pytest

from fsbench.commands.bench import BASELINE, Source, run_trial, trial_value
from fsbench.errors import ValidationError
from fsbench.models.schemas import (
    BenchCell,
    Classifier,
    ClassifyConfig,
    FwgsomConfig,
    GsomConfig,
    Method,
    RunConfig,
    SomConfig,
    SuiteSpec,
)
from fsbench.services.dataset import RelevanceTruth
from fsbench.services.evaluation import (
    RssMonitor,
    classify_eval,
    fit_classifier,
    fs_metrics,
    predict,
    run_selection,
    run_trials,
    stratified_split,
    summarize,
    timed,
)
from fsbench.services.rng import SeededRng
from fsbench.services.synth import generate_preset

D2_CLASS1 = RelevanceTruth({1: {1, 2, 3}, 2: {4, 5, 6, 7}}, n_features=28)
SMALL_MAPS = ClassifyConfig(som=SomConfig(rows=4, cols=4, iterations=20), gsom=GsomConfig(iterations=20))


class TestFsMetrics:
    def test_exact_recovery(self):
        row = fs_metrics({1: [1, 2, 3]}, D2_CLASS1)[0]
        assert (row.SF, row.CSF, row.NF, row.AF) == (3, 3, 0, 0)
        assert row.fs_accuracy == 1.0

    def test_one_noise_feature(self):
        row = fs_metrics({1: [1, 2, 3, 9]}, D2_CLASS1)[0]
        assert (row.SF, row.CSF, row.NF, row.AF) == (4, 3, 1, 0)
        assert row.fs_accuracy == pytest.approx(3 / 4)

    def test_feature_of_another_class(self):
        row = fs_metrics({1: [1, 2, 5]}, D2_CLASS1)[0]
        assert (row.CSF, row.NF, row.AF) == (2, 0, 1)

    def test_empty_selection(self):
        rows = fs_metrics({}, D2_CLASS1)
        assert [(r.SF, r.CSF, r.NF, r.AF, r.fs_accuracy) for r in rows] == [(0, 0, 0, 0, 0.0)] * 2

    def test_partial_recovery_without_errors(self):
        row = fs_metrics({2: [4, 5]}, D2_CLASS1)[1]
        assert row.fs_accuracy == pytest.approx(0.5)

    def test_partition_holds(self):
        gen = np.random.default_rng(0)
        for _ in range(20):
            chosen = gen.choice(np.arange(1, 29), size=gen.integers(0, 10), replace=False)
            for row in fs_metrics({1: chosen, 2: chosen}, D2_CLASS1):
                assert row.SF == row.CSF + row.NF + row.AF
                assert 0.0 <= row.fs_accuracy <= 1.0

    def test_out_of_range_selection(self):
        with pytest.raises(ValidationError):
            fs_metrics({1: [29]}, D2_CLASS1)


class TestSplitAndClassify:
    def test_stratified_split_keeps_every_class(self, two_blobs):
        train, test = stratified_split(two_blobs, 0.3, SeededRng(1))
        assert train.n_samples + test.n_samples == two_blobs.n_samples
        assert test.class_counts().tolist() == [18, 18]

    @pytest.mark.parametrize("kind", [Classifier.SOM, Classifier.GSOM])
    def test_separable_blobs(self, kind, two_blobs):
        train, test = stratified_split(two_blobs, 0.3, SeededRng(2))
        assert classify_eval(kind, train, test, [1, 2], SMALL_MAPS, SeededRng(3)) >= 0.99

    def test_deterministic(self, two_blobs):
        train, test = stratified_split(two_blobs, 0.3, SeededRng(2))
        a = classify_eval(Classifier.SOM, train, test, [1, 2, 3], SMALL_MAPS, SeededRng(8))
        b = classify_eval(Classifier.SOM, train, test, [1, 2, 3], SMALL_MAPS, SeededRng(8))
        assert a == b

    def test_predict_labels_every_sample(self, two_blobs):
        classifier = fit_classifier(Classifier.SOM, two_blobs, [1, 2], SMALL_MAPS, SeededRng(4))
        labels = predict(classifier, two_blobs)
        assert set(labels.tolist()) <= {1, 2}
        assert np.all(classifier.resolved_labels > 0)

    def test_needs_a_feature(self, two_blobs):
        with pytest.raises(ValidationError):
            fit_classifier(Classifier.SOM, two_blobs, [], SMALL_MAPS)


class TestTrials:
    def test_summarize_two_values(self):
        mean, std = summarize([0.9, 1.0])
        assert mean == pytest.approx(0.95)
        assert std == pytest.approx(0.0707107, abs=1e-6)

    def test_constant_outcome(self):
        assert summarize([0.5, 0.5, 0.5]) == (0.5, 0.0)

    def test_fifteen_seeds_recorded(self):
        run = run_trials(lambda seed: float(seed % 2), 15, base_seed=100, method="m", dataset="d")
        assert run.summary.seeds == list(range(100, 115))
        assert len(run.summary.values) == 15
        assert run.summary.trials == 15
        assert run.summary.failures == {}

    def test_failures_are_recorded(self):
        def task(seed):
            if seed == 11:
                raise RuntimeError("boom")
            return 1.0

        run = run_trials(task, 3, base_seed=10)
        assert run.summary.values == [1.0, 1.0]
        assert "boom" in run.summary.failures[11]
        assert sorted(run.outcomes) == [10, 12]

    def test_zero_trials_rejected(self):
        with pytest.raises(ValidationError):
            run_trials(float, 0, base_seed=1)

    def test_timed(self):
        result = timed(sum, [1, 2, 3])
        assert result.result == 6
        assert result.seconds >= 0.0
        assert result.peak_memory_mb >= 0.0

    def test_timed_sees_a_large_allocation(self):
        def allocate():
            block = np.ones(64 * 2**20 // 8)
            time.sleep(0.1)
            return float(block.sum())

        result = timed(allocate)
        assert result.result == 64 * 2**20 // 8
        assert result.peak_memory_mb >= 32.0

    def test_timed_reraises(self):
        def fail():
            raise RuntimeError("boom")

        with pytest.raises(RuntimeError):
            timed(fail)

    def test_monitor_thread_stops(self):
        with RssMonitor(interval_sec=0.01) as monitor:
            time.sleep(0.03)
        assert not monitor._thread.is_alive()
        assert monitor.rss_peak >= monitor.rss0 > 0


class TestRunSelection:
    def test_filter_global_and_per_class(self, two_blobs):
        outcome = run_selection(Method.FSCORE, two_blobs)
        assert outcome.selected[1] == outcome.selected[2] == outcome.payload.selected
        per_class = run_selection(Method.FSCORE, two_blobs, per_class=True)
        assert per_class.selected[1] == per_class.payload.per_class[1].selected
        assert per_class.network is None

    def test_fwgsom(self, two_blobs):
        config = FwgsomConfig(max_iterations=2, gsom=GsomConfig(iterations=10))
        outcome = run_selection("fwgsom", two_blobs, fwgsom=config, rng=SeededRng(6), export_hits=True)
        assert set(outcome.selected) == {1, 2}
        assert outcome.payload.hits is not None
        assert outcome.payload.runtime_seconds == outcome.seconds
        assert outcome.network is not None
        assert outcome.union() == sorted(set(outcome.selected[1]) | set(outcome.selected[2]))


@pytest.mark.slow
class TestBenchAcceptance:
    @pytest.mark.parametrize("method", [Method.MI, Method.FSCORE, Method.RELIEFF, Method.FWGSOM])
    def test_noiseless_blobs_select_the_informative_features(self, method):
        exact = 0
        for seed in range(15):
            data = generate_preset("blobs", SeededRng(seed), noise_level=0)
            outcome = run_selection(method, data.dataset, rng=SeededRng(seed))
            exact += outcome.union() == [1, 2, 3, 4, 5, 6]
        assert exact >= 13

    def test_selected_features_beat_all_features_on_d4(self):
        spec = SuiteSpec(cells=[BenchCell(preset="d4")], classify=[Classifier.GSOM], baseline=True,
                         value="clf_accuracy")
        config = RunConfig(command="bench", seed=0)
        source = Source("d4", cell=BenchCell(preset="d4"))
        selected, everything = [], []
        for seed in range(15):
            for method, values in ((Method.FWGSOM, selected), (BASELINE, everything)):
                values.append(trial_value(spec, run_trial(seed, source, method, spec, config)))
        assert np.mean(selected) >= 0.98
        assert sum(s > a for s, a in zip(selected, everything)) >= 13

    def test_runtime_ordering_on_wide_blobs(self):
        for features in (100, 250, 500, 1000):
            data = generate_preset("blobs-xl", SeededRng(0), features=features)
            seconds = {m: run_selection(m, data.dataset).seconds for m in (Method.FSCORE, Method.MI, Method.RELIEFF)}
            assert seconds[Method.FSCORE] < seconds[Method.MI] < seconds[Method.RELIEFF], (features, seconds)
        assert run_selection(Method.FWGSOM, data.dataset, rng=SeededRng(0)).seconds < 15 * 60
