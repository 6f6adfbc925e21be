"""select: one feature-selection run on a CSV or a generated preset."""
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from ..models.schemas import Method, RunConfig
from ..services.evaluation import fs_metrics, run_selection
from ..services.footprint import estimate
from ..services.report import provenance, to_json, write_json
from ..services.rng import SeededRng, draw_seed
from ..services.som import save_network
from . import EXIT_OK, EXIT_USAGE, CommandError, load_source, translate_errors

logger = logging.getLogger(__name__)


def _output_path(out: str, dataset: str, method: Method) -> Path:
    """``--out`` naming a .json file is used as is; anything else is a directory."""
    path = Path(out)
    if path.suffix == ".json":
        return path
    return path / f"{dataset}.{method.value}.json"


def select_features(config: RunConfig) -> dict:
    """Run the configured method and assemble the result payload."""
    if len(config.methods) != 1:
        raise CommandError(EXIT_USAGE, "select takes exactly one --method")
    method = config.methods[0]
    if config.seed is None:
        config = config.model_copy(update={"seed": draw_seed()})
        logger.info("No --seed given; drew %d", config.seed)
    rng = SeededRng(config.seed)

    with translate_errors():
        dataset, truth, name, _ = load_source(config, rng)
        logger.info(
            "Loaded %s: %d samples, %d features, %d classes",
            name, dataset.n_samples, dataset.n_features, dataset.n_classes,
        )
        outcome = run_selection(
            method, dataset, config.filters, config.fwgsom, rng,
            per_class=config.baseline_per_class, export_hits=config.export_hits,
        )
        metrics = fs_metrics(outcome.selected, truth) if truth is not None else None
        footprint = estimate(outcome.seconds, config.footprint, outcome.peak_memory_mb)
        if config.save_network:
            if outcome.network is None:
                raise CommandError(EXIT_USAGE, f"--save-network needs a map-based method, not {method.value}")
            logger.info("Saved network to %s", save_network(outcome.network, config.save_network))

    return {
        "dataset": name,
        "method": method.value,
        "seed": config.seed,
        "selected": outcome.selected,
        "result": outcome.payload,
        "metrics": metrics,
        "footprint": footprint,
        "run_config": config,
    }


def run(config: RunConfig, started: Optional[datetime] = None) -> int:
    started = started or datetime.now(timezone.utc)
    payload = select_features(config)
    if not config.out:
        print(to_json(payload, config.timing))
        return EXIT_OK
    with translate_errors():
        path = _output_path(config.out, payload["dataset"], Method(payload["method"]))
        write_json(path, payload, config.timing)
        write_json(path.with_name(f"{path.stem}.provenance.json"), provenance(payload["run_config"], started))
    logger.info("Wrote %s", path)
    print(path)
    return EXIT_OK
