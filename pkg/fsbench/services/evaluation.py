"""Scoring harness: class-level FS metrics, SOM/GSOM classification, repeated trials, timing."""
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np
import psutil
from joblib import Parallel, delayed
from sklearn.model_selection import train_test_split
from tqdm import tqdm

from ..errors import ValidationError
from ..models.schemas import (
    Classifier,
    ClassifyConfig,
    FilterParams,
    FsClassMetrics,
    FwgsomConfig,
    Method,
    TrialSummary,
)
from .dataset import Dataset, RelevanceTruth, apply_min_max, normalize_min_max
from .filters import select
from .fwgsom import fwgsom_run
from .rng import SeededRng
from .som import LatticeMap, assign, hit_matrix, train_gsom, train_som

logger = logging.getLogger(__name__)


def fs_metrics(selected: Mapping[int, Iterable[int]], truth: RelevanceTruth,
               noise: Optional[Iterable[int]] = None) -> List[FsClassMetrics]:
    """SF/CSF/NF/AF per class against the ground truth."""
    noise = frozenset(noise) if noise is not None else truth.noise_features()
    union = truth.relevant_union()
    rows = []
    for cls, relevant in truth.per_class.items():
        chosen = {int(f) for f in selected.get(cls, ())}
        bad = [f for f in chosen if not 1 <= f <= truth.n_features]
        if bad:
            raise ValidationError(f"Selected feature {bad[0]} outside 1..{truth.n_features}")
        csf = len(chosen & relevant)
        nf = len(chosen & noise)
        af = len(chosen & (union - relevant))
        if not relevant:
            accuracy = 1.0 if not chosen else 0.0
        elif nf == 0 and af == 0:
            accuracy = csf / len(relevant)
        else:
            accuracy = csf / (len(relevant) + nf + af)
        rows.append(FsClassMetrics(class_id=cls, SF=len(chosen), CSF=csf, NF=nf, AF=af, fs_accuracy=accuracy))
    return rows


def stratified_split(dataset: Dataset, test_fraction: float, rng: SeededRng) -> Tuple[Dataset, Dataset]:
    try:
        train_rows, test_rows = train_test_split(
            np.arange(dataset.n_samples),
            test_size=test_fraction,
            stratify=dataset.labels,
            random_state=rng.sklearn_seed(),
        )
    except ValueError as e:
        raise ValidationError(f"Cannot split {dataset.name}: {e}")
    return dataset.subset(np.sort(train_rows)), dataset.subset(np.sort(test_rows))


@dataclass
class MapClassifier:
    """A trained map whose nodes carry class labels; empty nodes defer to the nearest labelled node."""

    kind: Classifier
    network: LatticeMap
    features: List[int]
    column_min: np.ndarray
    column_max: np.ndarray
    node_labels: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self):
        labelled = np.flatnonzero(self.node_labels > 0)
        resolved = self.node_labels.copy()
        for j in np.flatnonzero(self.node_labels == 0):
            d = ((self.network.weights[labelled] - self.network.weights[j]) ** 2).sum(axis=1)
            resolved[j] = self.node_labels[labelled[int(np.argmin(d))]]
        self.resolved_labels = resolved


def fit_classifier(kind: Classifier, train: Dataset, selected: Iterable[int],
                   config: Optional[ClassifyConfig] = None, rng: Optional[SeededRng] = None) -> MapClassifier:
    config = config or ClassifyConfig()
    rng = rng or SeededRng(0)
    features = sorted({int(f) for f in selected})
    if not features:
        raise ValidationError("Classification needs at least one selected feature")
    projected = normalize_min_max(train.project(features))
    if Classifier(kind) == Classifier.SOM:
        network = train_som(projected, config.som, rng)
    else:
        network = train_gsom(projected, config.gsom, rng)
    hits = hit_matrix(network, projected)
    return MapClassifier(
        kind=Classifier(kind),
        network=network,
        features=features,
        column_min=projected.column_min,
        column_max=projected.column_max,
        node_labels=hits.node_majority(),
    )


def predict(classifier: MapClassifier, dataset: Dataset) -> np.ndarray:
    """Class id per sample of ``dataset`` (raw features, same schema as training)."""
    projected = apply_min_max(dataset.project(classifier.features), classifier.column_min, classifier.column_max)
    bmus, _ = assign(classifier.network, projected.features)
    return classifier.resolved_labels[bmus]


def classify_eval(kind: Classifier, train: Dataset, test: Dataset, selected: Iterable[int],
                  config: Optional[ClassifyConfig] = None, rng: Optional[SeededRng] = None) -> float:
    """Accuracy of a SOM/GSOM classifier trained on the selected-feature projection."""
    classifier = fit_classifier(kind, train, selected, config, rng)
    accuracy = float(np.mean(predict(classifier, test) == test.labels))
    logger.debug("%s accuracy on %d features: %.4f", classifier.kind.value, len(classifier.features), accuracy)
    return accuracy


@dataclass
class TimedResult:
    result: Any
    seconds: float
    peak_memory_mb: float


class RssMonitor:
    """Peak resident set size of this process, sampled in a background thread."""

    def __init__(self, interval_sec: float = 0.02):
        self.interval_sec = float(interval_sec)
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None
        self.rss0: int = 0
        self.rss_peak: int = 0

    def __enter__(self) -> "RssMonitor":
        proc = psutil.Process(os.getpid())
        self.rss0 = int(proc.memory_info().rss)
        self.rss_peak = self.rss0

        def _run():
            while not self._stop.is_set():
                rss = int(proc.memory_info().rss)
                if rss > self.rss_peak:
                    self.rss_peak = rss
                self._stop.wait(self.interval_sec)

        self._thread = threading.Thread(target=_run, daemon=True)
        self._thread.start()
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=1.0)
        self.rss_peak = max(self.rss_peak, int(psutil.Process(os.getpid()).memory_info().rss))

    @property
    def peak_growth_mb(self) -> float:
        return max(self.rss_peak - self.rss0, 0) / 2**20


def timed(fn: Callable[..., Any], *args, **kwargs) -> TimedResult:
    """Run ``fn`` under a monotonic clock.

    Memory is the growth of the process RSS peak over its value at entry,
    sampled from a separate thread so the timed code runs uninstrumented.
    """
    with RssMonitor() as monitor:
        started = time.perf_counter()
        try:
            result = fn(*args, **kwargs)
        finally:
            seconds = time.perf_counter() - started
    return TimedResult(result=result, seconds=seconds, peak_memory_mb=monitor.peak_growth_mb)


@dataclass
class TrialRun:
    """Per-seed outcomes of a repeated task, plus the statistics over successful trials."""

    summary: TrialSummary
    outcomes: Dict[int, Any]


def _guarded(task: Callable[[int], Any], seed: int):
    try:
        return True, task(seed)
    except Exception as e:  # noqa: BLE001 - a failing trial must not abort the others
        return False, f"{type(e).__name__}: {e}"


def summarize(values: List[float]) -> Tuple[float, float]:
    """Mean and sample standard deviation (n - 1); std is 0 for a single value."""
    if not values:
        return 0.0, 0.0
    arr = np.asarray(values, dtype=np.float64)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return float(arr.mean()), std


def run_trials(task: Callable[[int], Any], trials: int, base_seed: int, method: str = "", dataset: str = "",
               jobs: int = 1, value: Callable[[Any], float] = float, progress: bool = False) -> TrialRun:
    """Run ``task(seed)`` for seeds base_seed .. base_seed + trials - 1, reduced in seed order."""
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    seeds = [base_seed + i for i in range(trials)]
    desc = f"{dataset}/{method}" if dataset or method else "trials"
    results = Parallel(n_jobs=jobs)(
        delayed(_guarded)(task, seed) for seed in tqdm(seeds, desc=desc, disable=not progress, leave=False)
    )
    outcomes, values, failures = {}, [], {}
    for seed, (ok, payload) in zip(seeds, results):
        if ok:
            outcomes[seed] = payload
            values.append(float(value(payload)))
        else:
            failures[seed] = payload
            logger.warning("Trial %s seed %d failed: %s", desc, seed, payload)
    mean, std = summarize(values)
    summary = TrialSummary(
        method=method, dataset=dataset, values=values, seeds=seeds,
        mean=mean, std=std, trials=trials, failures=failures,
    )
    logger.info("%s: %d/%d trials ok, mean %.4f, std %.4f", desc, len(values), trials, mean, std)
    return TrialRun(summary=summary, outcomes=outcomes)


@dataclass
class SelectionOutcome:
    """Per-class selected features of one method run, with its timing."""

    method: Method
    selected: Dict[int, List[int]]
    payload: Any
    seconds: float
    peak_memory_mb: float
    network: Optional[LatticeMap] = None

    def union(self) -> List[int]:
        return sorted(set().union(*self.selected.values()))


def run_selection(method, dataset: Dataset, filters: Optional[FilterParams] = None,
                  fwgsom: Optional[FwgsomConfig] = None, rng: Optional[SeededRng] = None,
                  per_class: bool = False, export_hits: bool = False) -> SelectionOutcome:
    """Run FWGSOM or a filter on a raw dataset.

    Filters report their global selection for every class unless ``per_class``
    asks for their one-vs-rest selections.
    """
    method = Method(method)
    rng = rng or SeededRng(0)
    if method == Method.FWGSOM:
        data = dataset if dataset.normalized else normalize_min_max(dataset)
        run = timed(fwgsom_run, data, fwgsom, rng)
        report = run.result.to_report(export_hits=export_hits)
        report.runtime_seconds = run.seconds
        selected = {c: list(r.relevant) for c, r in run.result.classes.items()}
        return SelectionOutcome(method, selected, report, run.seconds, run.peak_memory_mb, run.result.network)

    run = timed(select, method, dataset, filters, rng)
    scores = run.result
    scores.runtime_seconds = run.seconds
    selected = {
        c: list(scores.per_class[c].selected) if per_class and c in scores.per_class else list(scores.selected)
        for c in dataset.classes
    }
    return SelectionOutcome(method, selected, scores, run.seconds, run.peak_memory_mb)
