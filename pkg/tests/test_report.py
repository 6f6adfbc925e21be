"""Report serialization and the bench bundle layout."""
import json

import numpy as np
import pandas as pd

from fsbench.models.schemas import FsClassMetrics, RunConfig
from fsbench.services.report import RESULT_COLUMNS, ReportBundle, metric_rows, to_json, without_timing


class TestJson:
    def test_sorted_and_stable(self):
        data = {"b": np.float64(0.1), "a": {"z": 1, "y": 2}, "c": np.arange(2)}
        assert to_json(data) == to_json(dict(reversed(list(data.items()))))
        assert json.loads(to_json({"x": frozenset({3, 1})})) == {"x": [1, 3]}

    def test_floats_round_trip(self):
        value = 0.1 + 0.2
        assert json.loads(to_json({"v": value}))["v"] == value

    def test_without_timing_scrubs_measurements(self):
        data = {"runtime_seconds": 1.5, "footprint": {"co2_g": 3.0, "co2_display": "3.00", "params": {"t": 0.1}},
                "accuracy": 0.9, "trials": [{"runtime_s": 2.0, "seed": 4}]}
        scrubbed = without_timing(data)
        assert scrubbed["runtime_seconds"] == 0.0
        assert scrubbed["footprint"] == {"co2_g": 0.0, "co2_display": "0.0", "params": {"t": 0.0}}
        assert scrubbed["accuracy"] == 0.9
        assert scrubbed["trials"] == [{"runtime_s": 0.0, "seed": 4}]

    def test_timing_flag(self):
        assert json.loads(to_json({"seconds": 2.5}, timing=False)) == {"seconds": 0.0}


class TestMetricRows:
    def test_rows_from_metrics(self):
        metrics = [FsClassMetrics(class_id=1, SF=4, CSF=3, NF=1, AF=0, fs_accuracy=0.75)]
        rows = metric_rows("d2", "fwgsom", 7, metrics, {1: [1, 2, 3, 9]}, runtime_s=1.0)
        assert rows == [{
            "dataset": "d2", "method": "fwgsom", "seed": 7, "runtime_s": 1.0, "energy_kwh": None,
            "co2_g": None, "clf_accuracy_mean": None, "clf_accuracy_std": None, "class": 1,
            "SF": 4, "CSF": 3, "NF": 1, "AF": 0, "fs_accuracy": 0.75,
        }]

    def test_rows_without_truth(self):
        rows = metric_rows("glass", "mi", 1, None, {2: [1], 1: [1, 4]})
        assert [(r["class"], r["SF"], r["CSF"]) for r in rows] == [(1, 2, None), (2, 1, None)]

    def test_rows_without_truth_leave_partition_empty(self):
        for row in metric_rows("glass", "fscore", 3, None, {1: [2, 5, 7]}):
            assert row["SF"] == 3
            assert [row[k] for k in ("CSF", "NF", "AF", "fs_accuracy")] == [None] * 4


class TestReportBundle:
    def _bundle(self, root, timing=True):
        config = RunConfig(command="bench", seed=2**64 - 1, out=str(root))
        return ReportBundle(root, config, timing=timing)

    def test_layout_and_csv(self, tmp_path):
        bundle = self._bundle(tmp_path)
        bundle.write_cell("d2", "mi", {"trials": []}, {"mean": 1.0}, {"co2_g": 0.1})
        metrics = [FsClassMetrics(class_id=1, SF=3, CSF=3, NF=0, AF=0, fs_accuracy=1.0)]
        bundle.add_rows(metric_rows("d2", "mi", 2**64 - 1, metrics, {1: [1, 2, 3]}, runtime_s=0.5))
        csv_path = bundle.finalize()

        for name in ("trials.json", "summary.json", "footprint.json"):
            assert (tmp_path / "d2" / "mi" / name).exists()
        assert (tmp_path / "run_config.json").exists()
        assert not (tmp_path / "failures.json").exists()
        provenance = json.loads((tmp_path / "provenance.json").read_text())
        assert provenance["cells"] == ["d2/mi"]

        frame = pd.read_csv(csv_path, dtype={"seed": "string"})
        assert list(frame.columns) == RESULT_COLUMNS
        assert frame.loc[0, "seed"] == str(2**64 - 1)
        assert frame.loc[0, "SF"] == frame.loc[0, "CSF"] + frame.loc[0, "NF"] + frame.loc[0, "AF"]

    def test_failures_file(self, tmp_path):
        bundle = self._bundle(tmp_path)
        bundle.fail_cell("moons-n30", "relieff", "MethodError: boom")
        bundle.finalize()
        assert json.loads((tmp_path / "failures.json").read_text()) == {"moons-n30/relieff": "MethodError: boom"}

    def test_no_timing_rows(self, tmp_path):
        bundle = self._bundle(tmp_path, timing=False)
        bundle.add_rows(metric_rows("d1", "mi", 1, None, {1: [1]}, runtime_s=3.0, energy_kwh=1.0, co2_g=2.0))
        assert bundle.rows[0]["runtime_s"] == 0.0
        assert bundle.rows[0]["co2_g"] == 0.0
