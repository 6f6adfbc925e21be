"""Report bundle writer for fsbench.

Writes report/<dataset>/<method>/{trials,summary,footprint}.json, a flat
all_results.csv, the run configuration and a provenance sidecar. Timestamps
only ever go into provenance files so everything else is byte-reproducible.
"""
import json
import logging
import platform
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel

from .. import __version__
from ..models.schemas import RunConfig

logger = logging.getLogger(__name__)

RESULT_COLUMNS = [
    "dataset", "method", "class", "SF", "CSF", "NF", "AF", "fs_accuracy",
    "clf_accuracy_mean", "clf_accuracy_std", "runtime_s", "energy_kwh", "co2_g", "seed",
]
# measured quantities; zeroed when a run asks for timing-free output
TIMING_KEYS = {"runtime_seconds", "runtime_s", "seconds", "energy_kwh", "co2_g", "peak_memory_mb", "t"}


def _plain(data: Any) -> Any:
    if isinstance(data, BaseModel):
        return data.model_dump(mode="json")
    if isinstance(data, dict):
        return {str(k): _plain(v) for k, v in data.items()}
    if isinstance(data, (list, tuple)):
        return [_plain(v) for v in data]
    if isinstance(data, (frozenset, set)):
        return sorted(_plain(v) for v in data)
    if isinstance(data, np.ndarray):
        return data.tolist()
    if isinstance(data, np.generic):
        return data.item()
    return data


def without_timing(data: Any) -> Any:
    """Zero every measured timing/energy field, recursively."""
    if isinstance(data, dict):
        cleaned = {}
        for k, v in data.items():
            if k in TIMING_KEYS and isinstance(v, (int, float)) and not isinstance(v, bool):
                cleaned[k] = 0.0
            elif k == "co2_display":
                cleaned[k] = "0.0"
            else:
                cleaned[k] = without_timing(v)
        return cleaned
    if isinstance(data, list):
        return [without_timing(v) for v in data]
    return data


def to_json(data: Any, timing: bool = True) -> str:
    """Deterministic JSON text: sorted keys, shortest round-trip floats, no NaN."""
    payload = _plain(data)
    if not timing:
        payload = without_timing(payload)
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False)


def write_json(path: str | Path, data: Any, timing: bool = True) -> Path:
    filepath = Path(path)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    with open(filepath, "w", encoding="utf-8") as f:
        f.write(to_json(data, timing))
        f.write("\n")
    logger.debug("Wrote %s", filepath)
    return filepath


def provenance(run_config: Optional[RunConfig] = None, started: Optional[datetime] = None,
               extra: Optional[dict] = None) -> dict:
    """Timestamps, versions and platform for a run."""
    info = {
        "fsbench_version": __version__,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "pandas": pd.__version__,
        "platform": platform.platform(),
        "machine": platform.machine(),
        "started": (started or datetime.now(timezone.utc)).isoformat(),
        "finished": datetime.now(timezone.utc).isoformat(),
    }
    if run_config is not None:
        info["run_config"] = run_config.model_dump(mode="json")
    if extra:
        info.update(extra)
    return info


class ReportBundle:
    """Collects per-cell outputs and result rows for one bench run."""

    def __init__(self, root: str | Path, run_config: RunConfig, timing: bool = True):
        self.root = Path(root)
        self.run_config = run_config
        self.timing = timing
        self.rows: List[Dict[str, Any]] = []
        self.started = datetime.now(timezone.utc)
        self.cells: List[str] = []
        self.failed: Dict[str, str] = {}

    def cell_dir(self, dataset: str, method: str) -> Path:
        return self.root / dataset / method

    def write_cell(self, dataset: str, method: str, trials: Any, summary: Any, footprint: Any) -> Path:
        directory = self.cell_dir(dataset, method)
        write_json(directory / "trials.json", trials, self.timing)
        write_json(directory / "summary.json", summary, self.timing)
        write_json(directory / "footprint.json", footprint, self.timing)
        self.cells.append(f"{dataset}/{method}")
        return directory

    def fail_cell(self, dataset: str, method: str, reason: str) -> None:
        logger.error("Cell %s/%s failed: %s", dataset, method, reason)
        self.failed[f"{dataset}/{method}"] = reason

    def add_rows(self, rows: List[Dict[str, Any]]) -> None:
        for row in rows:
            if not self.timing:
                row = {**row, **{k: 0.0 for k in ("runtime_s", "energy_kwh", "co2_g") if row.get(k) is not None}}
            self.rows.append(row)

    def results_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=RESULT_COLUMNS)

    def finalize(self) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        csv_path = self.root / "all_results.csv"
        frame = self.results_frame()
        for col in ("SF", "CSF", "NF", "AF"):
            frame[col] = frame[col].astype("Int64")
        frame["seed"] = frame["seed"].astype("UInt64")
        frame.to_csv(csv_path, index=False, float_format="%.17g", lineterminator="\n")
        write_json(self.root / "run_config.json", self.run_config)
        if self.failed:
            write_json(self.root / "failures.json", self.failed)
        extra = {"cells": self.cells, "failed": sorted(self.failed)}
        write_json(self.root / "provenance.json", provenance(self.run_config, self.started, extra))
        logger.info("Report bundle written to %s (%d cells, %d rows)", self.root, len(self.cells), len(self.rows))
        return csv_path


def metric_rows(dataset: str, method: str, seed: int, metrics: Optional[List[Any]],
                selected: Dict[int, List[int]], runtime_s: Optional[float] = None,
                energy_kwh: Optional[float] = None, co2_g: Optional[float] = None,
                clf_mean: Optional[float] = None, clf_std: Optional[float] = None) -> List[Dict[str, Any]]:
    """One row per class.

    Without ground truth SF is the selected-set size and CSF, NF, AF and
    fs_accuracy stay empty, since the partition needs the relevant sets.
    """
    base = {
        "dataset": dataset, "method": method, "seed": seed, "runtime_s": runtime_s,
        "energy_kwh": energy_kwh, "co2_g": co2_g,
        "clf_accuracy_mean": clf_mean, "clf_accuracy_std": clf_std,
    }
    rows = []
    if metrics:
        for m in metrics:
            m = _plain(m)
            rows.append({**base, "class": m["class_id"], "SF": m["SF"], "CSF": m["CSF"], "NF": m["NF"],
                         "AF": m["AF"], "fs_accuracy": m["fs_accuracy"]})
    else:
        for cls, feats in sorted(selected.items()):
            rows.append({**base, "class": cls, "SF": len(feats), "CSF": None, "NF": None, "AF": None,
                         "fs_accuracy": None})
    return rows
