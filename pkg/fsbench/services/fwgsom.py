"""Class-level feature relevance over a trained GSOM, and the re-weighting loop.

For each class the hit matrix splits nodes into the lead (most samples of the
class), associates (some samples) and dissociates (none). Per feature, the
spread of lead/associate class means around the lead weights (similarity) is
compared with the spread of dissociate weights around the lead's class mean
(dissimilarity); a feature is relevant for the class when dissimilarity
spread exceeds similarity spread.

Both spreads are measured through the lead node's feature mask, so a feature
already weighted out at the lead has zero spread on both sides and stays out.
"""
import logging
import time
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np

from ..errors import DataError, NotSeparableError, ValidationError
from ..models.schemas import (
    ClassStatus,
    FwgsomClassResult,
    FwgsomConfig,
    FwgsomReport,
    TraceEntry,
    WeightingPolicy,
)
from .dataset import Dataset
from .rng import SeededRng
from .som import GsomNetwork, HitMatrix, LatticeMap, assign, hit_matrix, train_gsom

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClassNodeRoles:
    class_id: int
    lead: int
    associates: Tuple[int, ...]
    dissociates: Tuple[int, ...]

    @property
    def members(self) -> Tuple[int, ...]:
        """Lead first, then associates in node order."""
        return (self.lead,) + self.associates


@dataclass(frozen=True)
class SpreadMatrix:
    """Per-node, per-feature absolute differences and their variance across nodes."""

    nodes: Tuple[int, ...]
    values: np.ndarray
    variance: np.ndarray


@dataclass(frozen=True)
class ClassFeatureAnalysis:
    class_id: int
    sim: np.ndarray
    dis: np.ndarray
    delta: np.ndarray
    relevant: FrozenSet[int]


def class_roles(hits: HitMatrix, cls: int) -> ClassNodeRoles:
    column = hits.class_column(cls)
    if column.sum() == 0:
        raise ValidationError(f"Class {cls} has no samples in the hit matrix")
    lead = int(np.argmax(column))
    holding = np.flatnonzero(column > 0)
    return ClassNodeRoles(
        class_id=cls,
        lead=lead,
        associates=tuple(int(j) for j in holding if j != lead),
        dissociates=tuple(int(j) for j in np.flatnonzero(column == 0)),
    )


def _node_class_mean(dataset: Dataset, bmus: np.ndarray, node: int, cls: int) -> np.ndarray:
    rows = np.flatnonzero((bmus == node) & (dataset.labels == cls))
    if rows.size == 0:
        raise DataError(f"Node {node} holds no samples of class {cls}")
    return dataset.features[rows].mean(axis=0)


def similarity_matrix(network: LatticeMap, dataset: Dataset, roles: ClassNodeRoles,
                      bmus: Optional[np.ndarray] = None) -> SpreadMatrix:
    """|class mean at node m - lead weights| for m in lead + associates, scaled by the lead mask."""
    if bmus is None:
        bmus, _ = assign(network, dataset.features)
    lead_w = network.weights[roles.lead]
    lead_mask = network.masks[roles.lead]
    values = np.vstack([
        lead_mask * np.abs(_node_class_mean(dataset, bmus, m, roles.class_id) - lead_w) for m in roles.members
    ])
    if not roles.associates:
        variance = np.zeros(network.n_features)
    else:
        variance = values.var(axis=0)
    return SpreadMatrix(nodes=roles.members, values=values, variance=variance)


def dissimilarity_matrix(network: LatticeMap, dataset: Dataset, roles: ClassNodeRoles,
                         bmus: Optional[np.ndarray] = None) -> SpreadMatrix:
    """|class mean at the lead - dissociate weights| for every dissociate node."""
    if not roles.dissociates:
        raise NotSeparableError(f"Class {roles.class_id} is present on every node")
    if bmus is None:
        bmus, _ = assign(network, dataset.features)
    lead_mean = _node_class_mean(dataset, bmus, roles.lead, roles.class_id)
    values = network.masks[roles.lead] * np.abs(lead_mean - network.weights[list(roles.dissociates)])
    return SpreadMatrix(nodes=roles.dissociates, values=values, variance=values.var(axis=0))


def percentage_change(sim_var: np.ndarray, dis_var: np.ndarray,
                      epsilon: float = 1e-12) -> Tuple[np.ndarray, FrozenSet[int]]:
    """Relative variance gap per feature; relevant features (1-based) have delta > 0.

    Only the denominator is floored at epsilon, so the sign of delta is always
    the sign of dis_var - sim_var.
    """
    sim_var = np.asarray(sim_var, dtype=np.float64)
    dis_var = np.asarray(dis_var, dtype=np.float64)
    if sim_var.shape != dis_var.shape:
        raise ValidationError("Similarity and dissimilarity variances differ in length")
    delta = 100.0 * (dis_var - sim_var) / np.maximum(sim_var, epsilon)
    return delta, frozenset(int(f) + 1 for f in np.flatnonzero(delta > 0))


def analyse_class(network: LatticeMap, dataset: Dataset, hits: HitMatrix, cls: int,
                  bmus: np.ndarray, epsilon: float = 1e-12) -> Tuple[ClassNodeRoles, ClassFeatureAnalysis]:
    roles = class_roles(hits, cls)
    sim = similarity_matrix(network, dataset, roles, bmus)
    dis = dissimilarity_matrix(network, dataset, roles, bmus)
    delta, relevant = percentage_change(sim.variance, dis.variance, epsilon)
    return roles, ClassFeatureAnalysis(cls, sim.variance, dis.variance, delta, relevant)


def apply_weights(network: LatticeMap, roles: ClassNodeRoles, relevant, policy: WeightingPolicy = WeightingPolicy.BINARY,
                  attenuation: float = 0.5, owners: Optional[np.ndarray] = None) -> LatticeMap:
    """Return a copy with the class's lead/associate masks set from ``relevant`` (1-based).

    With ``owners`` (majority class per node) only nodes the class owns are touched.
    """
    updated = network.copy()
    relevant = {int(f) for f in relevant}
    if not relevant:
        logger.warning("Class %d has no relevant features; masks left unchanged", roles.class_id)
        return updated
    keep = np.zeros(network.n_features, dtype=bool)
    keep[[f - 1 for f in relevant]] = True
    nodes = [j for j in roles.members if owners is None or owners[j] == roles.class_id]
    for j in nodes:
        if policy == WeightingPolicy.BINARY:
            updated.masks[j] = keep.astype(np.float64)
        else:
            updated.masks[j, ~keep] *= attenuation
    return updated


def diagnosis_accuracy(hits: HitMatrix) -> Tuple[Dict[int, float], float]:
    """Majority-class node labelling; fraction of each class landing on its own nodes."""
    majority = hits.node_majority()
    per_class = {}
    correct = 0
    for cls in hits.classes:
        column = hits.class_column(cls)
        hit = int(column[majority == cls].sum())
        total = int(column.sum())
        per_class[cls] = hit / total if total else 0.0
        correct += hit
    total = int(hits.counts.sum())
    return per_class, (correct / total if total else 0.0)


@dataclass
class FwgsomResult:
    network: GsomNetwork
    classes: Dict[int, FwgsomClassResult]
    class_accuracy: Dict[int, float]
    overall_accuracy: float
    iterations: int
    seed: int
    trace: List[TraceEntry] = field(default_factory=list)
    hits: Optional[HitMatrix] = None
    runtime_seconds: float = 0.0

    def relevant_sets(self) -> Dict[int, FrozenSet[int]]:
        return {c: frozenset(r.relevant) for c, r in self.classes.items()}

    def selected_union(self) -> List[int]:
        return sorted(set().union(*(r.relevant for r in self.classes.values())))

    def to_report(self, export_hits: bool = False) -> FwgsomReport:
        """Report with the final node masks; the final hit matrix only on request."""
        return FwgsomReport(
            classes=self.classes,
            overall_accuracy=self.overall_accuracy,
            iterations=self.iterations,
            seed=self.seed,
            trace=self.trace,
            node_masks=self.network.masks.tolist(),
            hits=self.hits.to_list() if (export_hits and self.hits is not None) else None,
            runtime_seconds=self.runtime_seconds,
        )


def _all_features(n: int) -> List[int]:
    return list(range(1, n + 1))


def fwgsom_run(dataset: Dataset, config: Optional[FwgsomConfig] = None,
               rng: Optional[SeededRng] = None) -> FwgsomResult:
    """Train a GSOM, then alternate relevance analysis and mask weighting.

    Every class is analysed on every pass. A class without associates still
    reports its relevant set and deltas but does not re-weight any mask. The
    loop stops once overall accuracy reaches the target, after
    ``max_iterations`` passes, or when a weighting pass leaves every mask
    unchanged. If the freshly trained map already meets the target, one
    analysis pass runs without weighting.
    """
    config = config or FwgsomConfig()
    rng = rng or SeededRng(0)
    started = time.perf_counter()
    net = train_gsom(dataset, config.gsom, rng)
    net.scale_masks = config.scale_masks
    bmus, _ = assign(net, dataset.features)
    hits = hit_matrix(net, dataset, bmus)
    class_acc, overall = diagnosis_accuracy(hits)
    n = dataset.n_features

    if dataset.n_classes == 1:
        outcome = FwgsomClassResult(
            relevant=_all_features(n), delta=None, accuracy=1.0, status=ClassStatus.SINGLE_CLASS,
            lead=int(np.argmax(hits.class_column(1))),
        )
        entry = TraceEntry(iteration=1, weighted=False, classes={1: outcome}, class_accuracy={1: 1.0},
                           overall_accuracy=1.0, hits=hits.to_list())
        return FwgsomResult(net, {1: outcome}, {1: 1.0}, 1.0, 1, rng.seed, [entry], hits,
                            time.perf_counter() - started)

    trace: List[TraceEntry] = []
    outcomes: Dict[int, FwgsomClassResult] = {}
    iteration = 0
    while True:
        iteration += 1
        weighting = overall < config.target_accuracy
        owners = hits.node_majority()
        updates = []
        outcomes = {}
        for cls in dataset.classes:
            try:
                roles, analysis = analyse_class(net, dataset, hits, cls, bmus, config.epsilon)
            except NotSeparableError:
                roles = class_roles(hits, cls)
                relevant, delta = _all_features(n), None
                status = ClassStatus.NOT_SEPARABLE
            else:
                relevant = sorted(analysis.relevant)
                delta = [float(v) for v in analysis.delta]
                if not roles.associates:
                    status = ClassStatus.NO_ASSOCIATES
                elif weighting:
                    status = ClassStatus.WEIGHTED
                    updates.append((roles, relevant))
                else:
                    status = ClassStatus.ANALYSED
            outcomes[cls] = FwgsomClassResult(
                relevant=relevant, delta=delta, accuracy=class_acc[cls], status=status,
                lead=roles.lead, associates=list(roles.associates),
            )

        before = net.masks.copy()
        for roles, relevant in updates:
            net = apply_weights(net, roles, relevant, config.policy, config.attenuation, owners)
        changed = not np.array_equal(before, net.masks)
        if changed:
            bmus, _ = assign(net, dataset.features)
            hits = hit_matrix(net, dataset, bmus)
            class_acc, overall = diagnosis_accuracy(hits)
            for cls, outcome in outcomes.items():
                outcomes[cls] = outcome.model_copy(update={"accuracy": class_acc[cls]})

        trace.append(TraceEntry(
            iteration=iteration, weighted=changed, classes=outcomes,
            class_accuracy=class_acc, overall_accuracy=overall, hits=hits.to_list(),
        ))
        logger.info(
            "FWGSOM iteration %d: accuracy %.4f, relevant counts %s",
            iteration, overall, {c: len(o.relevant) for c, o in outcomes.items()},
        )
        if weighting and not changed:
            logger.info("FWGSOM masks settled after %d iterations", iteration)
        if overall >= config.target_accuracy or iteration >= config.max_iterations or not changed:
            break

    return FwgsomResult(
        network=net,
        classes=outcomes,
        class_accuracy=class_acc,
        overall_accuracy=overall,
        iterations=iteration,
        seed=rng.seed,
        trace=trace,
        hits=hits,
        runtime_seconds=time.perf_counter() - started,
    )
