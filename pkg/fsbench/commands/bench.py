"""bench: run a suite of (dataset, method) cells over seeded trials into a report bundle."""
import functools
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from tqdm import tqdm

from ..config import get_output_dir, get_suites
from ..errors import FsBenchError
from ..models.schemas import BenchCell, Method, RunConfig, Suite, SuiteSpec
from ..services.dataset import Dataset, RelevanceTruth, load_csv, load_truth
from ..services.evaluation import (
    TrialRun,
    classify_eval,
    fs_metrics,
    run_selection,
    run_trials,
    stratified_split,
    summarize,
    timed,
)
from ..services.footprint import estimate, format_co2
from ..services.report import ReportBundle, metric_rows
from ..services.rng import SeededRng
from ..services.synth import generate_preset, preset_label
from . import EXIT_OK, EXIT_USAGE, CommandError, translate_errors

logger = logging.getLogger(__name__)

# pseudo-method selecting every feature; the reference in classification suites
BASELINE = "all"
SUITE_ORDER = (Suite.GLOBAL, Suite.CLASSLEVEL, Suite.INTERCLASS, Suite.FOOTPRINT, Suite.REALWORLD)

MethodId = Union[Method, str]


@dataclass(frozen=True)
class Source:
    """Data behind a cell: a preset variant regenerated per trial seed, or a fixed loaded CSV."""

    label: str
    cell: Optional[BenchCell] = None
    dataset: Optional[Dataset] = None
    truth: Optional[RelevanceTruth] = None

    def materialize(self, rng: SeededRng) -> Tuple[Dataset, Optional[RelevanceTruth]]:
        if self.cell is None:
            return self.dataset, self.truth
        generated = generate_preset(self.cell.preset, rng, self.cell.noise_level, self.cell.features)
        return generated.dataset, generated.truth


def _method_label(method: MethodId) -> str:
    return method.value if isinstance(method, Method) else str(method)


def run_trial(seed: int, source: Source, method: MethodId, spec: SuiteSpec, config: RunConfig) -> Dict[str, Any]:
    """One seeded trial: data, optional split, selection, metrics, classification.

    The classifier stream is split off before selection runs, so every
    method sharing a seed trains its classifiers on the same split and draws.
    """
    rng = SeededRng(seed)
    dataset, truth = source.materialize(rng)
    train, test = dataset, None
    if spec.classify:
        train, test = stratified_split(dataset, config.classify.test_fraction, rng)
    clf_rng = rng.spawn()

    if method == BASELINE:
        everything = list(range(1, dataset.n_features + 1))
        selected = {c: everything for c in dataset.classes}
        seconds, peak = 0.0, None
    else:
        outcome = run_selection(method, train, config.filters, config.fwgsom, rng,
                                per_class=config.baseline_per_class)
        selected, seconds, peak = outcome.selected, outcome.seconds, outcome.peak_memory_mb

    trial: Dict[str, Any] = {
        "seed": seed,
        "selected": selected,
        "runtime_s": seconds,
        "footprint": estimate(seconds, config.footprint, peak),
    }
    if truth is not None:
        trial["metrics"] = fs_metrics(selected, truth)
    if spec.classify:
        union = sorted(set().union(*selected.values()))
        trial["classification"] = {}
        for kind in spec.classify:
            run = timed(classify_eval, kind, train, test, union, config.classify, clf_rng.spawn())
            trial["classification"][kind.value] = {
                "accuracy": run.result,
                "runtime_s": run.seconds,
                "footprint": estimate(run.seconds, config.footprint, run.peak_memory_mb),
            }
    return trial


def trial_value(spec: SuiteSpec, trial: Dict[str, Any]) -> float:
    """The scalar a suite summarizes per trial."""
    if spec.value == "runtime":
        return trial["runtime_s"]
    if spec.value == "clf_accuracy":
        return trial["classification"][spec.classify[0].value]["accuracy"]
    metrics = trial.get("metrics")
    if not metrics:
        raise FsBenchError("fs_accuracy needs ground truth")
    return sum(m.fs_accuracy for m in metrics) / len(metrics)


def _stats(values: List[float]) -> Dict[str, float]:
    mean, std = summarize(values)
    return {"mean": mean, "std": std, "n": len(values)}


def cell_summary(run: TrialRun, trials: List[Dict[str, Any]], spec: SuiteSpec) -> Dict[str, Any]:
    summary: Dict[str, Any] = {
        "trials": run.summary,
        "value": spec.value,
        "runtime_s": _stats([t["runtime_s"] for t in trials]),
    }
    with_metrics = [t for t in trials if t.get("metrics")]
    if with_metrics:
        per_class = {}
        for cls in sorted({m.class_id for t in with_metrics for m in t["metrics"]}):
            rows = [m for t in with_metrics for m in t["metrics"] if m.class_id == cls]
            per_class[cls] = {
                "fs_accuracy": _stats([m.fs_accuracy for m in rows]),
                "exact": sum(1 for m in rows if m.NF == 0 and m.AF == 0 and m.fs_accuracy == 1.0),
                **{key: _stats([float(getattr(m, key)) for m in rows]) for key in ("SF", "CSF", "NF", "AF")},
            }
        summary["classes"] = per_class
    if spec.classify:
        summary["classification"] = {
            kind.value: _stats([t["classification"][kind.value]["accuracy"] for t in trials])
            for kind in spec.classify
        }
    return summary


def cell_footprint(trials: List[Dict[str, Any]]) -> Dict[str, Any]:
    energy = [t["footprint"].energy_kwh for t in trials]
    co2 = [t["footprint"].co2_g for t in trials]
    mean_co2 = summarize(co2)[0]
    return {
        "per_trial": {t["seed"]: t["footprint"] for t in trials},
        "energy_kwh": _stats(energy),
        "co2_g": _stats(co2),
        "co2_display": format_co2(mean_co2),
    }


def run_cell(bundle: ReportBundle, source: Source, method: MethodId, spec: SuiteSpec, config: RunConfig) -> None:
    label = _method_label(method)
    task = functools.partial(run_trial, source=source, method=method, spec=spec, config=config)
    run = run_trials(task, config.trials, config.seed, label, source.label, config.jobs,
                     value=functools.partial(trial_value, spec))
    trials = [run.outcomes[s] for s in run.summary.seeds if s in run.outcomes]
    summary = cell_summary(run, trials, spec)
    bundle.write_cell(source.label, label, trials, summary, cell_footprint(trials))
    if run.summary.failures:
        bundle.fail_cell(source.label, label, f"{len(run.summary.failures)}/{config.trials} trials failed")

    clf = summary["classification"][spec.classify[0].value] if spec.classify else None
    for t in trials:
        bundle.add_rows(metric_rows(
            source.label, label, t["seed"], t.get("metrics"), t["selected"],
            runtime_s=t["runtime_s"], energy_kwh=t["footprint"].energy_kwh, co2_g=t["footprint"].co2_g,
            clf_mean=clf["mean"] if clf else None, clf_std=clf["std"] if clf else None,
        ))


def suite_sources(spec: SuiteSpec, config: RunConfig, bundle: ReportBundle) -> List[Source]:
    if not spec.uses_data:
        return [Source(preset_label(c.preset, c.noise_level, c.features), cell=c) for c in spec.cells]
    sources = []
    for path in config.data:
        try:
            dataset = load_csv(path, config.label_column)
            truth = None
            if config.truth and len(config.data) == 1:
                truth = load_truth(config.truth, dataset.n_features)
                truth.check_covers(dataset)
        except FsBenchError as e:
            bundle.fail_cell(Path(path).stem, "*", str(e))
            continue
        sources.append(Source(dataset.name, dataset=dataset, truth=truth))
    return sources


def resolve_suites(config: RunConfig) -> List[Tuple[Suite, SuiteSpec]]:
    if config.suite is None:
        raise CommandError(EXIT_USAGE, "bench requires --suite")
    table = get_suites()
    names = SUITE_ORDER if config.suite == Suite.ALL else (config.suite,)
    suites = []
    for name in names:
        if name.value not in table:
            raise CommandError(EXIT_USAGE, f"Suite {name.value} is not defined in the defaults file")
        spec = SuiteSpec(**table[name.value])
        if spec.uses_data and not config.data:
            if config.suite == Suite.ALL:
                logger.info("Skipping %s suite: no --data given", name.value)
                continue
            raise CommandError(EXIT_USAGE, f"{name.value} suite needs --data FILE")
        suites.append((name, spec))
    return suites


def bench(config: RunConfig, progress: bool = True) -> Path:
    """Run every cell of the configured suite(s) and finalize the bundle; returns the CSV path."""
    with translate_errors():
        suites = resolve_suites(config)
    methods: List[MethodId] = list(config.methods or list(Method))
    bundle = ReportBundle(get_output_dir(config.out), config, config.timing)

    cells = []
    for suite, spec in suites:
        with translate_errors():
            sources = suite_sources(spec, config, bundle)
        for source in sources:
            for method in methods + ([BASELINE] if spec.baseline else []):
                cells.append((suite, source, method, spec))
    logger.info("Bench: %d cells x %d trials from seed %d", len(cells), config.trials, config.seed)

    with translate_errors():
        for suite, source, method, spec in tqdm(cells, desc="bench", disable=not progress):
            try:
                run_cell(bundle, source, method, spec, config)
            except FsBenchError as e:
                bundle.fail_cell(source.label, _method_label(method), str(e))
        return bundle.finalize()


def run(config: RunConfig, progress: bool = True) -> int:
    csv_path = bench(config, progress)
    print(csv_path)
    return EXIT_OK
