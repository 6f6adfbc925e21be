"""gen: materialize a synthetic preset as CSV + ground truth."""
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import List

from ..config import get_output_dir
from ..models.schemas import RunConfig
from ..services.dataset import save_csv, save_truth
from ..services.report import provenance, write_json
from ..services.rng import SeededRng, draw_seed
from ..services.synth import generate_preset, load_preset
from . import EXIT_OK, translate_errors

logger = logging.getLogger(__name__)


def generate(config: RunConfig) -> List[Path]:
    """Write <label>.csv, .truth.json, .config.json, .provenance.json and, for d4, .distances.json."""
    started = datetime.now(timezone.utc)
    if config.seed is None:
        config = config.model_copy(update={"seed": draw_seed()})
        logger.info("No --seed given; drew %d", config.seed)
    out = get_output_dir(config.out)
    features = config.features[0] if config.features else None

    with translate_errors():
        preset = load_preset(config.preset)
        generated = generate_preset(config.preset, SeededRng(config.seed), config.noise_level, features)
        label = generated.dataset.name
        written = [
            save_csv(generated.dataset, out / f"{label}.csv"),
            save_truth(generated.truth, out / f"{label}.truth.json"),
        ]
        if generated.distances is not None:
            written.append(write_json(out / f"{label}.distances.json", generated.distances.to_dict()))
        written.append(write_json(out / f"{label}.config.json", {
            "preset": config.preset,
            "label": label,
            "seed": config.seed,
            "noise_level": config.noise_level,
            "features": features,
            "generator": preset,
        }))
        written.append(write_json(out / f"{label}.provenance.json", provenance(config, started)))

    for path in written:
        logger.info("Wrote %s", path)
    return written


def run(config: RunConfig) -> int:
    for path in generate(config):
        print(path)
    return EXIT_OK
