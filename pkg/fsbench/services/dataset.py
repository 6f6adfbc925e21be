"""Dataset representation, CSV ingestion and ground-truth relevance."""
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..errors import DataError, ValidationError

logger = logging.getLogger(__name__)

LABEL_HEADER = "class"


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Dataset:
    """Numeric sample matrix plus contiguous class labels 1..K.

    Immutable after construction; safe to share between concurrent trials.
    ``original_labels[k - 1]`` is the label as it appeared in the source for class ``k``.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: Tuple[str, ...]
    normalized: bool = False
    original_labels: Tuple[str, ...] = ()
    column_min: Optional[np.ndarray] = field(default=None, repr=False)
    column_max: Optional[np.ndarray] = field(default=None, repr=False)
    name: str = "dataset"

    def __post_init__(self):
        features = np.array(self.features, dtype=np.float64, copy=True)
        labels = np.array(self.labels, dtype=np.int64, copy=True)
        if features.ndim != 2:
            raise DataError("Feature matrix must be two-dimensional")
        if features.shape[0] != labels.shape[0]:
            raise DataError(
                f"Row count {features.shape[0]} does not match label count {labels.shape[0]}"
            )
        if features.shape[0] == 0:
            raise DataError("Dataset has no samples")
        if not np.all(np.isfinite(features)):
            raise DataError("Feature matrix contains non-finite values")
        k = int(labels.max())
        if labels.min() < 1 or set(np.unique(labels).tolist()) != set(range(1, k + 1)):
            raise DataError("Labels must be contiguous integers 1..K with no empty class")
        if self.normalized and (features.min() < 0.0 or features.max() > 1.0):
            raise DataError("Normalized dataset has values outside [0, 1]")
        names = tuple(self.feature_names) or tuple(f"f{i}" for i in range(1, features.shape[1] + 1))
        if len(names) != features.shape[1]:
            raise DataError(f"Expected {features.shape[1]} feature names, got {len(names)}")
        originals = tuple(self.original_labels) or tuple(str(c) for c in range(1, k + 1))
        if len(originals) != k:
            raise DataError(f"Expected {k} original labels, got {len(originals)}")

        object.__setattr__(self, "features", _readonly(features))
        object.__setattr__(self, "labels", _readonly(labels))
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "original_labels", originals)
        for attr in ("column_min", "column_max"):
            value = getattr(self, attr)
            if value is not None:
                object.__setattr__(self, attr, _readonly(np.array(value, dtype=np.float64)))

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return int(self.labels.max())

    @property
    def classes(self) -> Tuple[int, ...]:
        return tuple(range(1, self.n_classes + 1))

    def class_counts(self) -> np.ndarray:
        """Samples per class, indexed by class id - 1."""
        return np.bincount(self.labels, minlength=self.n_classes + 1)[1:]

    def class_rows(self, cls: int) -> np.ndarray:
        return np.flatnonzero(self.labels == cls)

    def subset(self, rows: Sequence[int]) -> "Dataset":
        """Rows subset. Classes absent from the subset are dropped and ids re-packed."""
        rows = np.asarray(rows, dtype=np.int64)
        if rows.size == 0:
            raise DataError("Empty row subset")
        labels = self.labels[rows]
        present = np.unique(labels)
        remap = np.zeros(self.n_classes + 1, dtype=np.int64)
        remap[present] = np.arange(1, present.size + 1)
        return replace(
            self,
            features=self.features[rows],
            labels=remap[labels],
            original_labels=tuple(self.original_labels[c - 1] for c in present),
        )

    def project(self, columns: Iterable[int]) -> "Dataset":
        """Keep only the given 1-based feature columns, in ascending order."""
        idx = sorted({int(c) for c in columns})
        if not idx:
            raise ValidationError("Projection needs at least one feature")
        if idx[0] < 1 or idx[-1] > self.n_features:
            raise ValidationError(f"Feature index out of range 1..{self.n_features}")
        zero_based = [c - 1 for c in idx]
        return replace(
            self,
            features=self.features[:, zero_based],
            feature_names=tuple(self.feature_names[c] for c in zero_based),
            column_min=None if self.column_min is None else self.column_min[zero_based],
            column_max=None if self.column_max is None else self.column_max[zero_based],
        )

    def denormalize(self) -> "Dataset":
        """Invert normalize_min_max using the retained per-column ranges."""
        if not self.normalized or self.column_min is None or self.column_max is None:
            return self
        span = self.column_max - self.column_min
        return replace(
            self,
            features=self.features * span + self.column_min,
            normalized=False,
            column_min=None,
            column_max=None,
        )


@dataclass(frozen=True)
class RelevanceTruth:
    """Ground-truth relevant features per class (1-based feature indices)."""

    per_class: Dict[int, FrozenSet[int]]
    n_features: int

    def __post_init__(self):
        cleaned = {}
        for cls, feats in self.per_class.items():
            feats = frozenset(int(f) for f in feats)
            bad = [f for f in feats if not 1 <= f <= self.n_features]
            if bad:
                raise DataError(
                    f"Relevant index {bad[0]} of class {cls} outside 1..{self.n_features}"
                )
            cleaned[int(cls)] = feats
        object.__setattr__(self, "per_class", dict(sorted(cleaned.items())))

    @property
    def classes(self) -> Tuple[int, ...]:
        return tuple(self.per_class)

    def relevant_union(self) -> FrozenSet[int]:
        return frozenset().union(*self.per_class.values()) if self.per_class else frozenset()

    def noise_features(self) -> FrozenSet[int]:
        """Features relevant for no class."""
        return frozenset(range(1, self.n_features + 1)) - self.relevant_union()

    def check_covers(self, dataset: Dataset) -> None:
        if self.n_features != dataset.n_features:
            raise DataError(
                f"Truth describes {self.n_features} features, dataset has {dataset.n_features}"
            )
        missing = [c for c in dataset.classes if c not in self.per_class]
        if missing:
            raise DataError(f"Truth has no entry for class {missing[0]}")

    def to_dict(self) -> dict:
        return {
            "classes": {str(c): sorted(f) for c, f in self.per_class.items()},
            "n_features": self.n_features,
        }


def load_csv(path: str | Path, label_column: str = "last", name: Optional[str] = None) -> Dataset:
    """Read a UTF-8, comma-separated file with a header row into a Dataset."""
    filepath = Path(path)
    if not filepath.exists():
        raise DataError(f"File not found: {filepath}")
    try:
        frame = pd.read_csv(filepath, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise DataError(f"Empty file: {filepath}")
    except pd.errors.ParserError as e:
        raise DataError(f"Inconsistent column count in {filepath}: {e}")
    if frame.empty:
        raise DataError(f"No data rows in {filepath}")
    if frame.isna().any().any():
        row, col = next(
            (r, c) for c in frame.columns for r in np.flatnonzero(frame[c].isna().to_numpy())
        )
        raise DataError("Inconsistent column count", row=int(row) + 1, column=str(col))

    label_name = frame.columns[-1] if label_column == "last" else label_column
    if label_name not in frame.columns:
        raise DataError(f"Label column {label_name!r} not found in {filepath}")
    feature_cols = [c for c in frame.columns if c != label_name]
    if not feature_cols:
        raise DataError(f"No feature columns in {filepath}")

    columns = []
    for col in feature_cols:
        cells = frame[col].str.strip()
        parsed = pd.to_numeric(cells, errors="coerce").to_numpy(dtype=np.float64)
        bad = np.flatnonzero(~np.isfinite(parsed))
        if bad.size:
            r = int(bad[0])
            raise DataError(
                f"Cannot parse {frame[col].iloc[r]!r} as a finite number", row=r + 1, column=col
            )
        # float() on each cell is correctly rounded, so written values reload bit-exactly
        columns.append(cells.astype(np.float64).to_numpy())

    labels, originals = _encode_labels(frame[label_name].str.strip().tolist())
    if len(originals) < 2:
        logger.warning("%s holds a single class; feature selection on it is degenerate", filepath)

    dataset = Dataset(
        features=np.column_stack(columns),
        labels=labels,
        feature_names=tuple(feature_cols),
        original_labels=originals,
        name=name or filepath.stem,
    )
    logger.info(
        "Loaded %s: %d samples, %d features, %d classes",
        filepath, dataset.n_samples, dataset.n_features, dataset.n_classes,
    )
    return dataset


def _encode_labels(cells: Sequence[str]) -> Tuple[np.ndarray, Tuple[str, ...]]:
    """Integer labels keep numeric order; text labels are numbered by first appearance."""
    try:
        numeric = [int(c) for c in cells]
    except ValueError:
        order = list(dict.fromkeys(cells))
        lookup = {label: i + 1 for i, label in enumerate(order)}
        return np.array([lookup[c] for c in cells], dtype=np.int64), tuple(order)
    distinct = sorted(set(numeric))
    lookup = {label: i + 1 for i, label in enumerate(distinct)}
    return np.array([lookup[c] for c in numeric], dtype=np.int64), tuple(str(v) for v in distinct)


def save_csv(dataset: Dataset, path: str | Path) -> Path:
    """Write the dataset with its original labels in a trailing ``class`` column."""
    filepath = Path(path)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(dataset.features, columns=list(dataset.feature_names))
    label_header = LABEL_HEADER
    while label_header in frame.columns:
        label_header = f"_{label_header}"
    frame[label_header] = [dataset.original_labels[c - 1] for c in dataset.labels]
    frame.to_csv(filepath, index=False, float_format="%.17g", lineterminator="\n")
    return filepath


def normalize_min_max(dataset: Dataset) -> Dataset:
    """Map every column to [0, 1]; constant columns become 0.0."""
    x = dataset.features
    lo = x.min(axis=0)
    hi = x.max(axis=0)
    span = hi - lo
    constant = span == 0
    scaled = np.where(constant, 0.0, (x - lo) / np.where(constant, 1.0, span))
    logger.debug("Normalized %s (%d constant columns)", dataset.name, int(constant.sum()))
    return replace(
        dataset,
        features=np.clip(scaled, 0.0, 1.0),
        normalized=True,
        column_min=lo,
        column_max=hi,
    )


def apply_min_max(dataset: Dataset, column_min: np.ndarray, column_max: np.ndarray) -> Dataset:
    """Scale with ranges fitted elsewhere (e.g. on a training split); values are clipped to [0, 1]."""
    span = column_max - column_min
    constant = span == 0
    scaled = np.where(constant, 0.0, (dataset.features - column_min) / np.where(constant, 1.0, span))
    return replace(
        dataset,
        features=np.clip(scaled, 0.0, 1.0),
        normalized=True,
        column_min=column_min,
        column_max=column_max,
    )


def class_mean(dataset: Dataset, cls: int, rows: Optional[Sequence[int]] = None) -> np.ndarray:
    """Per-feature mean over the samples of ``cls``, optionally restricted to ``rows``."""
    if cls not in dataset.classes:
        raise ValidationError(f"Unknown class {cls}")
    if rows is None:
        selection = dataset.class_rows(cls)
    else:
        selection = np.asarray(rows, dtype=np.int64)
        if selection.size and np.any(dataset.labels[selection] != cls):
            raise ValidationError(f"Row subset contains samples not of class {cls}")
    if selection.size == 0:
        raise ValidationError(f"Empty selection for class {cls}")
    return dataset.features[selection].mean(axis=0)


def load_truth(path: str | Path, n_features: Optional[int] = None) -> RelevanceTruth:
    """Read {"classes": {"1": [1, 2, 3], ...}} with 1-based feature indices."""
    filepath = Path(path)
    if not filepath.exists():
        raise DataError(f"Truth file not found: {filepath}")
    try:
        with open(filepath, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise DataError(f"Invalid truth JSON in {filepath}: {e}")
    classes = data.get("classes")
    if not isinstance(classes, dict):
        raise DataError(f"Truth file {filepath} has no 'classes' object")
    width = n_features or data.get("n_features")
    if width is None:
        width = max((max(v) for v in classes.values() if v), default=0)
    return RelevanceTruth(per_class={int(k): v for k, v in classes.items()}, n_features=int(width))


def save_truth(truth: RelevanceTruth, path: str | Path) -> Path:
    filepath = Path(path)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    with open(filepath, "w", encoding="utf-8") as f:
        json.dump(truth.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
    return filepath
