"""Synthetic benchmark datasets with known per-class feature relevance."""
import logging
from dataclasses import dataclass
from typing import Annotated, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import Field, TypeAdapter
from scipy.spatial.distance import cdist
from sklearn.datasets import make_blobs, make_circles, make_moons

from ..config import get_presets
from ..errors import ValidationError
from ..models.schemas import (
    ClassSpec,
    InterclassPreset,
    NoiseModel,
    Shape,
    ShapePreset,
    StructuredPreset,
    WaveformPreset,
)
from .dataset import Dataset, RelevanceTruth
from .rng import SeededRng

logger = logging.getLogger(__name__)

# gaussian irrelevant features match the variance of U[0, 1]
GAUSSIAN_NOISE_SD = 1.0 / np.sqrt(12.0)
# characteristic scale of each shape, the reference for noise_level percentages
SHAPE_SCALE = {Shape.MOONS: 1.0, Shape.CIRCLES: 1.0, Shape.BLOBS: 1.0}
WAVEFORM_FEATURES = 21

PresetModel = Annotated[
    Union[StructuredPreset, ShapePreset, InterclassPreset, WaveformPreset],
    Field(discriminator="kind"),
]


@dataclass(frozen=True)
class DistanceTable:
    """Mean between-class Euclidean distances (symmetric, zero diagonal)."""

    matrix: np.ndarray
    classes: Tuple[int, ...]

    def between(self, a: int, b: int) -> float:
        return float(self.matrix[a - 1, b - 1])

    def adjacent(self) -> List[float]:
        return [float(self.matrix[i, i + 1]) for i in range(len(self.classes) - 1)]

    def to_dict(self) -> dict:
        return {"classes": list(self.classes), "matrix": self.matrix.tolist()}


@dataclass(frozen=True)
class GeneratedData:
    dataset: Dataset
    truth: RelevanceTruth
    distances: Optional[DistanceTable] = None


def _noise(rng: SeededRng, model: NoiseModel, size) -> np.ndarray:
    if model == NoiseModel.GAUSSIAN:
        return rng.normal(0.5, GAUSSIAN_NOISE_SD, size)
    return rng.uniform(0.0, 1.0, size)


def _warn_overlaps(specs: Sequence[ClassSpec]) -> None:
    for i, a in enumerate(specs):
        for b in specs[i + 1:]:
            if sorted(a.relevant) != sorted(b.relevant):
                continue
            ma = dict(zip(a.relevant, a.means))
            mb = dict(zip(b.relevant, b.means))
            gap = max(abs(ma[f] - mb[f]) for f in ma)
            if gap < 2.0 * max(a.sd, b.sd):
                logger.warning(
                    "Classes %d and %d share relevant features %s with means closer than 2 sd; "
                    "they may be inseparable", a.class_id, b.class_id, sorted(a.relevant),
                )


def gen_structured(specs: Sequence[ClassSpec], total_features: int, rng: SeededRng,
                   name: str = "structured") -> GeneratedData:
    """Relevant features ~ N(mean, sd) per class; every other feature follows the class's noise model."""
    ids = sorted(s.class_id for s in specs)
    if ids != list(range(1, len(specs) + 1)):
        raise ValidationError("Class ids must be 1..K with one spec each")
    widest = max((max(s.relevant) for s in specs if s.relevant), default=0)
    if widest > total_features:
        raise ValidationError(f"Relevant index {widest} exceeds total_features {total_features}")
    _warn_overlaps(specs)

    blocks, labels = [], []
    for spec in sorted(specs, key=lambda s: s.class_id):
        block = _noise(rng, spec.noise, (spec.samples, total_features))
        for f, mean in zip(spec.relevant, spec.means):
            block[:, f - 1] = rng.normal(mean, spec.sd, spec.samples)
        blocks.append(block)
        labels.append(np.full(spec.samples, spec.class_id))
    dataset = Dataset(features=np.vstack(blocks), labels=np.concatenate(labels), feature_names=(), name=name)
    truth = RelevanceTruth({s.class_id: frozenset(s.relevant) for s in specs}, total_features)
    return GeneratedData(dataset, truth)


def gen_shapes(shape: Shape, n: int, noise_features: int, noise_level: float, rng: SeededRng,
               centers: int = 4, informative: int = 6, imbalance: Tuple[int, int] = (3, 4),
               base_scale: Optional[float] = None, name: Optional[str] = None) -> GeneratedData:
    """Moons/circles (2 informative features) or blobs, plus uniform noise columns.

    noise_level is a percentage: jitter sd = noise_level / 100 * base_scale.
    """
    shape = Shape(shape)
    if n <= 0:
        raise ValidationError("Sample count must be positive")
    seed = rng.sklearn_seed()
    if shape == Shape.MOONS:
        x, y = make_moons(n_samples=n, noise=None, shuffle=True, random_state=seed)
    elif shape == Shape.CIRCLES:
        outer = int(round(n * imbalance[0] / sum(imbalance)))
        x, y = make_circles(n_samples=(outer, n - outer), noise=None, shuffle=True, random_state=seed)
    else:
        x, y = make_blobs(n_samples=n, n_features=informative, centers=centers, cluster_std=1.0,
                          shuffle=True, random_state=seed)
    scale = base_scale if base_scale is not None else SHAPE_SCALE[shape]
    if noise_level > 0:
        x = x + rng.normal(0.0, noise_level / 100.0 * scale, x.shape)
    width = x.shape[1]
    features = np.hstack([x, rng.uniform(0.0, 1.0, (n, noise_features))])
    labels = y.astype(np.int64) + 1
    dataset = Dataset(features=features, labels=labels, feature_names=(), name=name or shape.value)
    relevant = frozenset(range(1, width + 1))
    truth = RelevanceTruth({c: relevant for c in dataset.classes}, width + noise_features)
    return GeneratedData(dataset, truth)


def gen_interclass(preset: InterclassPreset, rng: SeededRng, name: str = "d4") -> GeneratedData:
    """Class centroids on the diagonal of the relevant subspace, with one pair squeezed.

    The first class of ``squeeze`` moves toward the second until their gap is
    spacing / (1 + 2 * factor); factor 0 leaves the spacing equal.
    """
    if preset.factor < 0:
        raise ValidationError("Squeeze factor must be >= 0")
    a, b = preset.squeeze
    if not (1 <= a <= preset.classes and 1 <= b <= preset.classes) or a == b:
        raise ValidationError(f"Invalid squeeze pair {preset.squeeze}")
    direction = np.ones(preset.relevant_features) / np.sqrt(preset.relevant_features)
    centroids = np.outer(np.arange(preset.classes) * preset.spacing, direction)
    gap = float(np.linalg.norm(centroids[a - 1] - centroids[b - 1]))
    target = gap / (1.0 + 2.0 * preset.factor)
    if not np.isfinite(target) or target < 1e-9 * preset.spacing:
        raise ValidationError("Squeeze factor makes the class centroids coincide")
    centroids[a - 1] = centroids[b - 1] + (centroids[a - 1] - centroids[b - 1]) * (target / gap)

    m = preset.samples_per_class
    blocks = [
        np.hstack([
            rng.normal(centroids[k], preset.sd, (m, preset.relevant_features)),
            rng.uniform(0.0, 1.0, (m, preset.irrelevant_features)),
        ])
        for k in range(preset.classes)
    ]
    labels = np.repeat(np.arange(1, preset.classes + 1), m)
    dataset = Dataset(features=np.vstack(blocks), labels=labels, feature_names=(), name=name)
    total = preset.relevant_features + preset.irrelevant_features
    relevant = frozenset(range(1, preset.relevant_features + 1))
    truth = RelevanceTruth({c: relevant for c in dataset.classes}, total)
    return GeneratedData(dataset, truth, distance_table(dataset))


def _waveform_bases() -> np.ndarray:
    i = np.arange(1, WAVEFORM_FEATURES + 1)
    h1 = np.maximum(6 - np.abs(i - 11), 0).astype(np.float64)
    h2 = np.maximum(6 - np.abs(i - 15), 0).astype(np.float64)
    h3 = np.maximum(6 - np.abs(i - 7), 0).astype(np.float64)
    return np.vstack([h1, h2, h3])


def gen_waveform(samples: int, noise_features: int, rng: SeededRng, name: str = "waveform") -> GeneratedData:
    """Three classes, each a random convex mix of two of three triangular waves plus N(0, 1) noise."""
    h = _waveform_bases()
    pairs = ((0, 1), (0, 2), (1, 2))
    sizes = [samples // 3 + (1 if k < samples % 3 else 0) for k in range(3)]
    blocks = []
    for (p, q), m in zip(pairs, sizes):
        u = rng.uniform(0.0, 1.0, (m, 1))
        wave = u * h[p] + (1.0 - u) * h[q] + rng.normal(0.0, 1.0, (m, WAVEFORM_FEATURES))
        blocks.append(np.hstack([wave, rng.normal(0.0, 1.0, (m, noise_features))]))
    labels = np.repeat([1, 2, 3], sizes)
    dataset = Dataset(features=np.vstack(blocks), labels=labels, feature_names=(), name=name)
    relevant = frozenset(range(1, WAVEFORM_FEATURES + 1))
    truth = RelevanceTruth({c: relevant for c in (1, 2, 3)}, WAVEFORM_FEATURES + noise_features)
    return GeneratedData(dataset, truth)


def distance_table(dataset: Dataset) -> DistanceTable:
    """Mean Euclidean distance over all cross-class sample pairs, on raw features."""
    if dataset.n_classes < 2:
        raise ValidationError("Distance table needs at least two classes")
    k = dataset.n_classes
    rows = [dataset.class_rows(c) for c in dataset.classes]
    matrix = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            value = float(cdist(dataset.features[rows[i]], dataset.features[rows[j]]).mean())
            matrix[i, j] = matrix[j, i] = value
    return DistanceTable(matrix=matrix, classes=dataset.classes)


def preset_names() -> List[str]:
    return sorted(get_presets())


def load_preset(name: str):
    """Validated preset model from the defaults table."""
    presets = get_presets()
    if name not in presets:
        raise ValidationError(f"Unknown preset: {name} (known: {', '.join(sorted(presets))})")
    return TypeAdapter(PresetModel).validate_python(presets[name])


def preset_label(name: str, noise_level: Optional[float] = None, features: Optional[int] = None) -> str:
    """Dataset name for a preset variant, e.g. moons-n30 or blobs-xl-f250."""
    label = name
    if noise_level is not None:
        label += f"-n{noise_level:g}"
    if features is not None:
        label += f"-f{features}"
    return label


def generate_preset(name: str, rng: SeededRng, noise_level: Optional[float] = None,
                    features: Optional[int] = None) -> GeneratedData:
    """Materialize a named preset.

    ``noise_level`` applies to shape presets; ``features`` sets the total
    feature count of shape presets (the blobs-xl sweep).
    """
    preset = load_preset(name)
    label = preset_label(name, noise_level, features)
    if not isinstance(preset, ShapePreset) and (noise_level is not None or features is not None):
        raise ValidationError(f"Noise level and feature count apply to shape presets only, not {name}")
    if isinstance(preset, ShapePreset):
        update = {}
        if noise_level is not None:
            update["noise_level"] = noise_level
        if features is not None:
            width = preset.informative if preset.shape == Shape.BLOBS else 2
            if features < width:
                raise ValidationError(f"{name} needs at least {width} features")
            update["noise_features"] = features - width
        preset = preset.model_copy(update=update)
        data = gen_shapes(
            preset.shape, preset.samples, preset.noise_features, preset.noise_level, rng,
            centers=preset.centers, informative=preset.informative, imbalance=preset.imbalance,
            base_scale=preset.base_scale, name=label,
        )
    elif isinstance(preset, StructuredPreset):
        data = gen_structured(preset.classes, preset.total_features, rng, name=label)
    elif isinstance(preset, InterclassPreset):
        data = gen_interclass(preset, rng, name=label)
    else:
        data = gen_waveform(preset.samples, preset.noise_features, rng, name=label)
    logger.info(
        "Generated %s: %d samples, %d features, %d classes",
        label, data.dataset.n_samples, data.dataset.n_features, data.dataset.n_classes,
    )
    return data
