"""Self-organising map engines: fixed-grid SOM and growing GSOM.

Both keep node state in dense arrays (one row per node, in creation order) and
share the same masked distance:

    d_j(x) = sum_k mask[j, k] * (x[k] - w[j, k]) ** 2

A map with ``scale_masks`` set rescales each node's mask to sum to the feature
count before taking that sum, so nodes with few active features are compared
with fully weighted nodes on the same scale. Full masks are unaffected.

Ties between nodes always resolve to the lowest creation index (np.argmin).
"""
import json
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..errors import DataError, ValidationError
from ..models.schemas import GsomConfig, NeighborhoodSchedule, SomConfig
from .dataset import Dataset
from .rng import SeededRng

logger = logging.getLogger(__name__)

# left, right, down, up
LATTICE_STEPS = ((-1, 0), (1, 0), (0, -1), (0, 1))
# upper bound on chunk * nodes * features floats held at once in batch distance passes
CHUNK_BUDGET = 2_000_000
MASK_FLOOR = 1e-12


@dataclass(frozen=True)
class Node:
    index: int
    weights: np.ndarray
    feature_mask: np.ndarray
    grid_pos: Tuple[int, int]
    error: float


class LatticeMap:
    """Nodes on an integer 2-D lattice with per-node feature masks."""

    kind = "lattice"

    def __init__(self, weights: np.ndarray, positions: np.ndarray, masks: Optional[np.ndarray] = None,
                 errors: Optional[np.ndarray] = None, seed: Optional[int] = None, scale_masks: bool = False):
        self.weights = np.array(weights, dtype=np.float64)
        self.positions = np.array(positions, dtype=np.int64).reshape(-1, 2)
        m, d = self.weights.shape
        self.masks = np.ones((m, d)) if masks is None else np.array(masks, dtype=np.float64)
        self.errors = np.zeros(m) if errors is None else np.array(errors, dtype=np.float64)
        self.seed = seed
        self.scale_masks = scale_masks
        self.position_index: Dict[Tuple[int, int], int] = {}
        for j, pos in enumerate(map(tuple, self.positions.tolist())):
            if pos in self.position_index:
                raise ValidationError(f"Duplicate lattice position {pos}")
            self.position_index[pos] = j
        self._grid_d2: Optional[np.ndarray] = None

    @property
    def n_nodes(self) -> int:
        return self.weights.shape[0]

    @property
    def n_features(self) -> int:
        return self.weights.shape[1]

    def node(self, j: int) -> Node:
        return Node(
            index=j,
            weights=self.weights[j].copy(),
            feature_mask=self.masks[j].copy(),
            grid_pos=tuple(self.positions[j].tolist()),
            error=float(self.errors[j]),
        )

    @property
    def nodes(self) -> List[Node]:
        return [self.node(j) for j in range(self.n_nodes)]

    def grid_d2(self) -> np.ndarray:
        """Squared lattice distances between all node pairs (cached until the lattice changes)."""
        if self._grid_d2 is None:
            diff = self.positions[:, None, :] - self.positions[None, :, :]
            self._grid_d2 = (diff ** 2).sum(axis=2).astype(np.float64)
        return self._grid_d2

    def distance_masks(self) -> np.ndarray:
        """Per-node feature weights as the distance applies them."""
        if not self.scale_masks:
            return self.masks
        totals = self.masks.sum(axis=1, keepdims=True)
        return self.masks * (self.n_features / np.maximum(totals, MASK_FLOOR))

    def lattice_diagonal(self) -> float:
        extent = self.positions.max(axis=0) - self.positions.min(axis=0)
        return float(math.hypot(*extent))

    def neighbors(self, j: int) -> List[int]:
        x, y = self.positions[j]
        return [
            self.position_index[(x + dx, y + dy)]
            for dx, dy in LATTICE_STEPS
            if (x + dx, y + dy) in self.position_index
        ]

    def free_positions(self, j: int) -> List[Tuple[int, int]]:
        x, y = (int(v) for v in self.positions[j])
        return [(x + dx, y + dy) for dx, dy in LATTICE_STEPS if (x + dx, y + dy) not in self.position_index]

    def is_boundary(self, j: int) -> bool:
        return bool(self.free_positions(j))

    def check_lattice(self) -> None:
        """Raise if positions collide or the lattice is not 4-connected."""
        if len(self.position_index) != self.n_nodes:
            raise ValidationError("Lattice positions are not unique")
        seen = {0}
        queue = deque([0])
        while queue:
            for nb in self.neighbors(queue.popleft()):
                if nb not in seen:
                    seen.add(nb)
                    queue.append(nb)
        if len(seen) != self.n_nodes:
            raise ValidationError(f"Lattice is disconnected ({len(seen)} of {self.n_nodes} reachable)")

    def copy(self):
        clone = self.__class__.__new__(self.__class__)
        clone.__dict__.update(self.__dict__)
        clone.weights = self.weights.copy()
        clone.positions = self.positions.copy()
        clone.masks = self.masks.copy()
        clone.errors = self.errors.copy()
        clone.position_index = dict(self.position_index)
        clone._grid_d2 = None
        return clone

    def _add_node(self, pos: Tuple[int, int], weights: np.ndarray) -> int:
        j = self.n_nodes
        self.weights = np.vstack([self.weights, weights])
        self.positions = np.vstack([self.positions, np.asarray(pos, dtype=np.int64)])
        self.masks = np.vstack([self.masks, np.ones(self.n_features)])
        self.errors = np.append(self.errors, 0.0)
        self.position_index[pos] = j
        self._grid_d2 = None
        return j

    def _config_dict(self) -> dict:
        return {}

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "scale_masks": self.scale_masks,
            "config": self._config_dict(),
            "nodes": [
                {
                    "grid_pos": [int(v) for v in self.positions[j]],
                    "weights": [float(v) for v in self.weights[j]],
                    "feature_mask": [float(v) for v in self.masks[j]],
                    "error": float(self.errors[j]),
                }
                for j in range(self.n_nodes)
            ],
        }


class SomMap(LatticeMap):
    """Fixed rows x cols Kohonen map."""

    kind = "som"

    def __init__(self, weights, positions, rows: int, cols: int, iterations: int = 100,
                 schedule: Optional[NeighborhoodSchedule] = None, **kwargs):
        super().__init__(weights, positions, **kwargs)
        self.rows = rows
        self.cols = cols
        self.iterations = iterations
        self.schedule = schedule or NeighborhoodSchedule()

    def _config_dict(self) -> dict:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "iterations": self.iterations,
            "schedule": self.schedule.model_dump(),
        }


class GsomNetwork(LatticeMap):
    """Growing SOM: starts as a 2x2 block and grows at boundary nodes.

    Growth threshold GT = -D * ln(spread_factor) for D input features.
    """

    kind = "gsom"

    def __init__(self, weights, positions, config: Optional[GsomConfig] = None,
                 max_nodes: Optional[int] = None, **kwargs):
        super().__init__(weights, positions, **kwargs)
        self.config = config or GsomConfig()
        self.spread_factor = self.config.spread_factor
        self.growth_threshold = -self.n_features * math.log(self.spread_factor)
        self.max_nodes = max_nodes if max_nodes is not None else self.config.node_cap(1)
        self.history: Dict[str, list] = {"epoch_qe": [], "node_count": [], "growth_events": []}

    def _config_dict(self) -> dict:
        return {
            "spread_factor": self.spread_factor,
            "growth_threshold": self.growth_threshold,
            "max_nodes": self.max_nodes,
            "gsom": self.config.model_dump(mode="json"),
        }


@dataclass
class HitMatrix:
    """Node x class sample counts (column c - 1 holds class c)."""

    counts: np.ndarray
    classes: Tuple[int, ...] = field(default=())

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if not self.classes:
            self.classes = tuple(range(1, self.counts.shape[1] + 1))

    @property
    def n_nodes(self) -> int:
        return self.counts.shape[0]

    def class_column(self, cls: int) -> np.ndarray:
        return self.counts[:, cls - 1]

    def class_totals(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    def node_majority(self) -> np.ndarray:
        """Majority class per node (lowest class id on ties), 0 for empty nodes."""
        majority = self.counts.argmax(axis=1) + 1
        majority[self.counts.sum(axis=1) == 0] = 0
        return majority

    def to_list(self) -> List[List[int]]:
        return self.counts.tolist()


def masked_distances(x: np.ndarray, weights: np.ndarray, masks: np.ndarray) -> np.ndarray:
    diff = x - weights
    return np.einsum("ij,ij->i", diff * diff, masks)


def bmu(network: LatticeMap, x: np.ndarray) -> Tuple[int, float]:
    """Best matching unit of one sample under each node's feature mask."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (network.n_features,):
        raise ValidationError(f"Sample has {x.size} features, network expects {network.n_features}")
    dist = masked_distances(x, network.weights, network.distance_masks())
    j = int(np.argmin(dist))
    return j, float(dist[j])


def assign(network: LatticeMap, features: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """BMU index and masked squared distance for every row of ``features``."""
    features = np.asarray(features, dtype=np.float64)
    n = features.shape[0]
    chunk = max(1, CHUNK_BUDGET // max(1, network.n_nodes * network.n_features))
    masks = network.distance_masks()
    bmus = np.empty(n, dtype=np.int64)
    dists = np.empty(n)
    for start in range(0, n, chunk):
        block = features[start:start + chunk]
        diff = block[:, None, :] - network.weights[None, :, :]
        d = np.einsum("nmk,nmk,mk->nm", diff, diff, masks)
        idx = d.argmin(axis=1)
        bmus[start:start + chunk] = idx
        dists[start:start + chunk] = d[np.arange(block.shape[0]), idx]
    return bmus, dists


def hit_matrix(network: LatticeMap, dataset: Dataset, bmus: Optional[np.ndarray] = None) -> HitMatrix:
    if bmus is None:
        bmus, _ = assign(network, dataset.features)
    counts = np.zeros((network.n_nodes, dataset.n_classes), dtype=np.int64)
    np.add.at(counts, (bmus, dataset.labels - 1), 1)
    return HitMatrix(counts=counts, classes=dataset.classes)


def node_quantization_errors(network: LatticeMap, dataset: Dataset) -> np.ndarray:
    """Per-node error E_i accumulated sample by sample."""
    errors = np.zeros(network.n_nodes)
    for x in dataset.features:
        j, dist = bmu(network, x)
        errors[j] += dist
    return errors


def quantization_error(network: LatticeMap, dataset: Dataset) -> float:
    """Total QE: sum over samples of the masked squared distance to the BMU."""
    _, dists = assign(network, dataset.features)
    return float(dists.sum())


def _present(network: LatticeMap, x: np.ndarray, lr: float, width: float) -> Tuple[int, float]:
    """One online update: find the BMU, pull every node toward x under the Gaussian kernel."""
    diff = x - network.weights
    dist = np.einsum("ij,ij->i", diff * diff, network.distance_masks())
    j = int(np.argmin(dist))
    kernel = np.exp(network.grid_d2()[j] * (-0.5 / (width * width)))
    network.weights += (lr * kernel)[:, None] * diff
    return j, float(dist[j])


def _require_normalized(dataset: Dataset) -> None:
    if not dataset.normalized:
        raise DataError("Training requires a min-max normalized dataset")


def train_som(dataset: Dataset, config: Optional[SomConfig] = None, rng: Optional[SeededRng] = None) -> SomMap:
    """Online SOM over a rows x cols grid: iterations passes over shuffled samples."""
    _require_normalized(dataset)
    config = config or SomConfig()
    rng = rng or SeededRng(0)
    positions = [(c, r) for r in range(config.rows) for c in range(config.cols)]
    net = SomMap(
        weights=rng.uniform(0.0, 1.0, (len(positions), dataset.n_features)),
        positions=positions,
        rows=config.rows,
        cols=config.cols,
        iterations=config.iterations,
        schedule=config.schedule,
        seed=rng.seed,
    )
    x = dataset.features
    total = config.iterations * dataset.n_samples
    start_width = config.schedule.start_width(net.lattice_diagonal())
    t = 0
    for _ in range(config.iterations):
        for i in rng.permutation(dataset.n_samples):
            lr = config.schedule.learning_rate(t, total)
            _present(net, x[i], lr, config.schedule.width(t, total, start_width))
            t += 1
    logger.debug("Trained %dx%d SOM on %s (%d steps)", config.rows, config.cols, dataset.name, total)
    return net


def _grown_weights(net: GsomNetwork, parent: int, pos: Tuple[int, int], rng: SeededRng,
                   noise: float) -> np.ndarray:
    px, py = (int(v) for v in net.positions[parent])
    dx, dy = pos[0] - px, pos[1] - py
    opposite = net.position_index.get((px - dx, py - dy))
    if opposite is not None:
        return 2.0 * net.weights[parent] - net.weights[opposite]
    around = [
        net.position_index[(pos[0] + sx, pos[1] + sy)]
        for sx, sy in LATTICE_STEPS
        if (pos[0] + sx, pos[1] + sy) in net.position_index
        and net.position_index[(pos[0] + sx, pos[1] + sy)] != parent
    ]
    if around:
        return 0.5 * (net.weights[parent] + net.weights[min(around)])
    return net.weights[parent] + rng.uniform(-noise, noise, net.n_features)


def _grow(net: GsomNetwork, j: int, rng: SeededRng, box: Tuple[np.ndarray, np.ndarray]) -> int:
    """Grow every free neighbour of boundary node j, or spread an interior node's error."""
    free = net.free_positions(j)
    if not free:
        share = net.errors[j] / 2.0
        net.errors[j] -= share
        neighbours = net.neighbors(j)
        net.errors[neighbours] += share / len(neighbours)
        return 0
    grown = []
    for pos in free:
        if net.n_nodes >= net.max_nodes:
            break
        weights = np.clip(_grown_weights(net, j, pos, rng, net.config.growth_noise), *box)
        grown.append(net._add_node(pos, weights))
    if grown:
        share = net.errors[j] / 2.0
        net.errors[j] -= share
        net.errors[grown] += share / len(grown)
    return len(grown)


def train_gsom(dataset: Dataset, config: Optional[GsomConfig] = None, rng: Optional[SeededRng] = None,
               n_classes: Optional[int] = None) -> GsomNetwork:
    """Grow a GSOM on normalized data, then smooth it with a reduced learning rate.

    Node errors hold the current growing epoch's quantization error (they are
    zeroed when an epoch starts; growth only moves error between nodes), and
    the kernel's starting width follows the lattice as it grows.
    """
    _require_normalized(dataset)
    config = config or GsomConfig()
    rng = rng or SeededRng(0)
    net = GsomNetwork(
        weights=rng.uniform(0.0, 1.0, (4, dataset.n_features)),
        positions=[(0, 0), (1, 0), (0, 1), (1, 1)],
        config=config,
        max_nodes=config.node_cap(n_classes or dataset.n_classes),
        seed=rng.seed,
    )
    x = dataset.features
    box = (np.minimum(net.weights.min(axis=0), x.min(axis=0)),
           np.maximum(net.weights.max(axis=0), x.max(axis=0)))
    schedule = config.schedule
    smoothing_epochs = min(int(round(config.smoothing_fraction * config.iterations)), config.iterations - 1)
    growing_epochs = config.iterations - smoothing_epochs
    total = config.iterations * dataset.n_samples
    start_width = schedule.start_width(net.lattice_diagonal())
    capped = False
    t = 0

    for epoch in range(config.iterations):
        growing = epoch < growing_epochs
        lr_factor = 1.0 if growing else config.smoothing_lr_factor
        epoch_qe = 0.0
        if growing:
            net.errors[:] = 0.0
        for i in rng.permutation(dataset.n_samples):
            lr = schedule.learning_rate(t, total) * lr_factor
            j, dist = _present(net, x[i], lr, schedule.width(t, total, start_width))
            t += 1
            epoch_qe += dist
            if not growing:
                continue
            net.errors[j] += dist
            if net.errors[j] <= net.growth_threshold:
                continue
            if net.n_nodes >= net.max_nodes and net.is_boundary(j):
                if not capped:
                    logger.warning("GSOM reached the node cap (%d); growth stopped", net.max_nodes)
                    capped = True
                continue
            if _grow(net, j, rng, box):
                start_width = schedule.start_width(net.lattice_diagonal())
                net.history["growth_events"].append(
                    {"step": t, "nodes": net.n_nodes, "qe": epoch_qe, "width": start_width}
                )
        if growing:
            net.history["epoch_qe"].append(epoch_qe)
        net.history["node_count"].append(net.n_nodes)
        logger.debug("GSOM epoch %d: %d nodes, QE %.6g", epoch, net.n_nodes, epoch_qe)

    logger.info("Trained GSOM on %s: %d nodes (GT %.4g)", dataset.name, net.n_nodes, net.growth_threshold)
    return net


def network_from_dict(data: dict) -> LatticeMap:
    nodes = data.get("nodes") or []
    if not nodes:
        raise DataError("Network JSON has no nodes")
    arrays = dict(
        weights=[n["weights"] for n in nodes],
        positions=[n["grid_pos"] for n in nodes],
        masks=[n["feature_mask"] for n in nodes],
        errors=[n["error"] for n in nodes],
        seed=data.get("seed"),
        scale_masks=bool(data.get("scale_masks", False)),
    )
    cfg = data.get("config", {})
    if data.get("kind") == "som":
        return SomMap(
            rows=cfg["rows"], cols=cfg["cols"], iterations=cfg.get("iterations", 100),
            schedule=NeighborhoodSchedule(**cfg.get("schedule", {})), **arrays,
        )
    if data.get("kind") == "gsom":
        return GsomNetwork(config=GsomConfig(**cfg.get("gsom", {})), max_nodes=cfg.get("max_nodes"), **arrays)
    return LatticeMap(**arrays)


def save_network(network: LatticeMap, path: str | Path) -> Path:
    """Write the network as JSON; floats use the shortest round-tripping repr."""
    filepath = Path(path)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    with open(filepath, "w", encoding="utf-8") as f:
        json.dump(network.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
    return filepath


def load_network(path: str | Path) -> LatticeMap:
    with open(path, "r", encoding="utf-8") as f:
        return network_from_dict(json.load(f))
