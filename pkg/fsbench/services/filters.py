"""Filter feature-selection baselines: Pearson, mutual information, F-score, ReliefF.

Every scorer returns FeatureScores with 1-based selected indices chosen by
``score > mean(scores)`` (or the top-k override), plus one-vs-rest per-class
scores so class-level metrics can be produced for the baselines too.
"""
import logging
import time
from typing import Callable, Dict, Optional

import numpy as np
from scipy.spatial.distance import cdist
from scipy.stats import entropy as _entropy
from scipy.stats import rankdata

from ..config import settings
from ..errors import FsBenchError, MethodError, ValidationError
from ..models.schemas import ClassScores, FeatureScores, FilterParams, Method
from .dataset import Dataset, normalize_min_max
from .rng import SeededRng

logger = logging.getLogger(__name__)

MI_TOLERANCE = 1e-9
# rows of the sample-distance matrix computed per cdist call
RELIEF_CHUNK = 512


def _selected(scores: np.ndarray, top_k: Optional[int] = None):
    """Apply the selection rule; returns (threshold or None, sorted 1-based indices)."""
    if top_k is not None:
        order = np.argsort(-scores, kind="stable")[: min(top_k, scores.size)]
        return None, sorted(int(f) + 1 for f in order)
    threshold = float(scores.mean())
    return threshold, [int(f) + 1 for f in np.flatnonzero(scores > threshold)]


def _result(method: Method, scores: np.ndarray, per_class: Dict[int, np.ndarray],
            top_k: Optional[int] = None) -> FeatureScores:
    threshold, selected = _selected(scores, top_k)
    classes = {}
    for cls, values in per_class.items():
        cls_threshold, cls_selected = _selected(values, top_k)
        classes[cls] = ClassScores(scores=values.tolist(), threshold=cls_threshold, selected=cls_selected)
    return FeatureScores(
        method=method,
        scores=scores.tolist(),
        threshold=threshold,
        selected=selected,
        rule="top_k" if top_k is not None else "mean_threshold",
        per_class=classes,
    )


# Pearson correlation
def _abs_correlation(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """|rho| between every column of x and the vector y; 0 when either side is constant."""
    xc = x - x.mean(axis=0)
    yc = y - y.mean()
    var_x = (xc * xc).mean(axis=0)
    var_y = float((yc * yc).mean())
    if var_y <= settings.VARIANCE_FLOOR:
        return np.zeros(x.shape[1])
    constant = var_x <= settings.VARIANCE_FLOOR
    num = xc.T @ yc
    den = np.sqrt((xc * xc).sum(axis=0) * float((yc * yc).sum()))
    rho = np.where(constant, 0.0, num / np.where(constant, 1.0, den))
    return np.minimum(np.abs(rho), 1.0)


def pearson_scores(dataset: Dataset, top_k: Optional[int] = None) -> FeatureScores:
    if dataset.n_samples < 2:
        raise MethodError("Pearson correlation needs at least 2 samples")
    x = dataset.features
    scores = _abs_correlation(x, dataset.labels.astype(np.float64))
    per_class = {
        c: _abs_correlation(x, (dataset.labels == c).astype(np.float64)) for c in dataset.classes
    }
    return _result(Method.PEARSON, scores, per_class, top_k)


# Mutual information
def discretize(column: np.ndarray, bins: int = 10) -> np.ndarray:
    """Equal-frequency bin codes 0..bins-1; tied values always share a bin."""
    column = np.asarray(column)
    n = column.size
    ranks = rankdata(column, method="min")
    return np.floor((ranks - 1) * bins / n).astype(np.int64)


def joint_table(x_codes: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Joint probability table p(x, y) over the observed code values."""
    _, xi = np.unique(x_codes, return_inverse=True)
    _, yi = np.unique(y, return_inverse=True)
    counts = np.zeros((xi.max() + 1, yi.max() + 1))
    np.add.at(counts, (xi, yi), 1.0)
    return counts / counts.sum()


def entropy(p) -> float:
    """Shannon entropy in nats of a probability (or count) vector."""
    p = np.asarray(p, dtype=np.float64).ravel()
    if p.sum() == 0:
        return 0.0
    return float(_entropy(p))


def conditional_entropy(table: np.ndarray) -> float:
    """H(Y | X) from a joint table with X on rows."""
    px = table.sum(axis=1)
    return float(sum(px[i] * entropy(table[i]) for i in range(table.shape[0]) if px[i] > 0))


def information_gain(table: np.ndarray) -> float:
    """H(Y) - H(Y | X)."""
    return entropy(table.sum(axis=0)) - conditional_entropy(table)


def mutual_information(table: np.ndarray) -> float:
    """Sum of p(x,y) ln(p(x,y) / (p(x) p(y))) over non-zero cells."""
    table = np.asarray(table, dtype=np.float64)
    table = table / table.sum()
    outer = np.outer(table.sum(axis=1), table.sum(axis=0))
    nz = table > 0
    return float(np.sum(table[nz] * np.log(table[nz] / outer[nz])))


def _checked_mi(x_codes: np.ndarray, y: np.ndarray) -> float:
    table = joint_table(x_codes, y)
    joint = mutual_information(table)
    gain = information_gain(table)
    if abs(joint - gain) > MI_TOLERANCE:
        raise FsBenchError(f"Mutual information paths disagree: {joint!r} vs {gain!r}")
    return max(joint, 0.0)


def mutual_information_scores(dataset: Dataset, bins: int = 10, top_k: Optional[int] = None) -> FeatureScores:
    if bins < 2:
        raise ValidationError("Mutual information needs bins >= 2")
    codes = [discretize(dataset.features[:, f], bins) for f in range(dataset.n_features)]
    scores = np.array([_checked_mi(c, dataset.labels) for c in codes])
    per_class = {
        cls: np.array([_checked_mi(c, (dataset.labels == cls).astype(np.int64)) for c in codes])
        for cls in dataset.classes
    }
    return _result(Method.MI, scores, per_class, top_k)


# F-score
def _binary_f_score(pos: np.ndarray, neg: np.ndarray) -> np.ndarray:
    """F-score of each column for a positive/negative sample split."""
    mean_all = np.vstack([pos, neg]).mean(axis=0)
    mean_pos = pos.mean(axis=0)
    mean_neg = neg.mean(axis=0)
    numerator = (mean_pos - mean_all) ** 2 + (mean_neg - mean_all) ** 2
    denominator = pos.var(axis=0, ddof=1) + neg.var(axis=0, ddof=1)
    scores = numerator / np.maximum(denominator, settings.VARIANCE_FLOOR)
    return np.minimum(scores, settings.SCORE_CAP)


def f_scores(dataset: Dataset, top_k: Optional[int] = None) -> FeatureScores:
    """One-vs-rest F-score per class; the global score is their mean."""
    x = dataset.features
    per_class = {}
    for cls in dataset.classes:
        mask = dataset.labels == cls
        if mask.sum() < 2 or (~mask).sum() < 2:
            logger.warning("F-score: class %d split has a group with fewer than 2 samples; skipped", cls)
            continue
        per_class[cls] = _binary_f_score(x[mask], x[~mask])
    if not per_class:
        raise MethodError("F-score needs at least one class split with 2+ samples on each side")
    scores = np.mean(np.vstack(list(per_class.values())), axis=0)
    return _result(Method.FSCORE, scores, per_class, top_k)


# ReliefF
class _Labelling:
    """Neighbour pools, k per class and class priors for one labelling of the samples."""

    def __init__(self, labels: np.ndarray, k_neighbors: int):
        self.labels = labels
        classes, counts = np.unique(labels, return_counts=True)
        n = labels.size
        self.rows_of = {int(c): np.flatnonzero(labels == c) for c in classes}
        self.k_of = {int(c): max(1, min(k_neighbors, int(m))) for c, m in zip(classes, counts)}
        self.prior = {int(c): m / n for c, m in zip(classes, counts)}

    def update(self, x: np.ndarray, i: int, dist_row: np.ndarray) -> np.ndarray:
        """Weight change contributed by sample ``i``: minus its hits, plus prior-weighted misses."""
        n = x.shape[0]
        own = int(self.labels[i])
        update = np.zeros(x.shape[1])
        for cls, idx in self.rows_of.items():
            if cls == own:
                idx = idx[idx != i]
                k = min(self.k_of[cls], idx.size)
            else:
                k = self.k_of[cls]
            if k == 0:
                continue
            nearest = idx[np.argsort(dist_row[idx], kind="stable")[:k]]
            diff = np.abs(x[nearest] - x[i]).sum(axis=0) / (n * k)
            if cls == own:
                update -= diff
            else:
                update += self.prior[cls] / (1.0 - self.prior[own]) * diff
        return update


def relieff_scores(dataset: Dataset, k_neighbors: int = 10, rng: Optional[SeededRng] = None,
                   top_k: Optional[int] = None) -> FeatureScores:
    """ReliefF over every sample (no sampling), Euclidean neighbours on normalized data.

    The global scores use the full multi-class labelling. Per-class scores are
    ReliefF on the binary labelling ``class == c`` against the rest, sharing the
    sample distances with the global pass.

    ``rng`` is accepted for interface symmetry; with m = all samples the result is deterministic.
    """
    if dataset.n_classes < 2:
        raise MethodError("ReliefF needs at least two classes (no misses exist)")
    data = dataset if dataset.normalized else normalize_min_max(dataset)
    x = data.features
    labels = data.labels
    n = data.n_samples
    counts = data.class_counts()
    if any(counts[c - 1] < k_neighbors + 1 for c in data.classes):
        logger.debug("ReliefF: k=%d clipped for small classes %s", k_neighbors, counts.tolist())

    labellings = {0: _Labelling(labels, k_neighbors)}
    for cls in data.classes:
        labellings[cls] = _Labelling(np.where(labels == cls, 1, 2), k_neighbors)
    totals = {key: np.zeros(data.n_features) for key in labellings}
    for start in range(0, n, RELIEF_CHUNK):
        dist = cdist(x[start:start + RELIEF_CHUNK], x)
        for r, i in enumerate(range(start, min(start + RELIEF_CHUNK, n))):
            for key, labelling in labellings.items():
                totals[key] += labelling.update(x, i, dist[r])

    scores = totals.pop(0)
    return _result(Method.RELIEFF, scores, totals, top_k)


SCORERS: Dict[Method, Callable[[Dataset, FilterParams, Optional[SeededRng]], FeatureScores]] = {
    Method.PEARSON: lambda d, p, rng: pearson_scores(d, p.top_k),
    Method.MI: lambda d, p, rng: mutual_information_scores(d, p.bins, p.top_k),
    Method.FSCORE: lambda d, p, rng: f_scores(d, p.top_k),
    Method.RELIEFF: lambda d, p, rng: relieff_scores(d, p.k_neighbors, rng, p.top_k),
}


def select(method, dataset: Dataset, params: Optional[FilterParams] = None,
           rng: Optional[SeededRng] = None) -> FeatureScores:
    """Run one filter by id and attach its wall-clock runtime."""
    try:
        method = Method(method)
    except ValueError:
        raise ValidationError(f"Unknown method: {method}")
    if method not in SCORERS:
        raise ValidationError(f"{method.value} is not a filter method")
    params = params or FilterParams()
    started = time.perf_counter()
    result = SCORERS[method](dataset, params, rng)
    result.runtime_seconds = time.perf_counter() - started
    logger.info("%s on %s selected %s", method.value, dataset.name, result.selected)
    return result
