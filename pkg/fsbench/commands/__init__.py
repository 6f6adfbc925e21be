"""Command layer: turns RunConfig objects into service calls and files on disk."""
import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Optional, Tuple

import pydantic

from ..errors import FsBenchError, ValidationError
from ..models.schemas import RunConfig
from ..services.dataset import Dataset, RelevanceTruth, load_csv, load_truth
from ..services.rng import SeededRng
from ..services.synth import DistanceTable, generate_preset

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class CommandError(Exception):
    """Raised by commands; ``exit_code`` is the process exit status main() returns."""

    def __init__(self, exit_code: int = EXIT_FAILURE, detail: Optional[str] = None):
        super().__init__(detail or "")
        self.exit_code = exit_code
        self.detail = detail or ""


@contextmanager
def translate_errors():
    """Re-raise service errors as CommandError with the matching exit code."""
    try:
        yield
    except CommandError:
        raise
    except (ValidationError, pydantic.ValidationError) as e:
        raise CommandError(EXIT_USAGE, str(e))
    except FsBenchError as e:
        raise CommandError(EXIT_FAILURE, str(e))
    except OSError as e:
        raise CommandError(EXIT_FAILURE, f"{e.filename or ''}: {e.strerror or e}".lstrip(": "))


def load_source(config: RunConfig, rng: SeededRng) -> Tuple[Dataset, Optional[RelevanceTruth], str, Optional[DistanceTable]]:
    """Dataset, optional truth, display name and distance table for a select/bench source."""
    if config.preset:
        features = config.features[0] if config.features else None
        generated = generate_preset(config.preset, rng, config.noise_level, features)
        return generated.dataset, generated.truth, generated.dataset.name, generated.distances

    path = Path(config.data[0])
    dataset = load_csv(path, config.label_column)
    truth = None
    if config.truth:
        truth = load_truth(config.truth, dataset.n_features)
        truth.check_covers(dataset)
    return dataset, truth, dataset.name, None
