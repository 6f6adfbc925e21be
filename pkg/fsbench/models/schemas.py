"""Pydantic schemas for fsbench."""
import math
from enum import Enum
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Method(str, Enum):
    FWGSOM = "fwgsom"
    PEARSON = "pearson"
    MI = "mi"
    FSCORE = "fscore"
    RELIEFF = "relieff"


FILTER_METHODS = (Method.PEARSON, Method.MI, Method.FSCORE, Method.RELIEFF)


class Classifier(str, Enum):
    SOM = "som"
    GSOM = "gsom"


class WeightingPolicy(str, Enum):
    BINARY = "binary"
    ATTENUATE = "attenuate"


class Suite(str, Enum):
    GLOBAL = "global"
    CLASSLEVEL = "classlevel"
    INTERCLASS = "interclass"
    REALWORLD = "realworld"
    FOOTPRINT = "footprint"
    ALL = "all"


class NoiseModel(str, Enum):
    UNIFORM = "uniform"
    GAUSSIAN = "gaussian"


class Shape(str, Enum):
    MOONS = "moons"
    CIRCLES = "circles"
    BLOBS = "blobs"


class ClassStatus(str, Enum):
    """Outcome of the relevance analysis for one class in one iteration."""

    WEIGHTED = "weighted"
    ANALYSED = "analysed"
    NO_ASSOCIATES = "no_associates"
    NOT_SEPARABLE = "not_separable"
    SINGLE_CLASS = "single_class"


# Training schemas
class NeighborhoodSchedule(BaseModel):
    """Learning-rate and Gaussian-kernel width decay over training steps.

    Both decay exponentially: lr from ``initial_learning_rate`` to
    ``initial_learning_rate * final_learning_rate_ratio``, width from
    ``initial_width`` (half the lattice diagonal when unset) to ``final_width``.
    """

    model_config = ConfigDict(frozen=True)

    initial_learning_rate: float = Field(0.7, gt=0.0, le=1.0)
    final_learning_rate_ratio: float = Field(0.01, gt=0.0, le=1.0)
    initial_width: Optional[float] = Field(None, gt=0.0)
    final_width: float = Field(0.5, gt=0.0)

    def start_width(self, lattice_diagonal: float) -> float:
        width = self.initial_width if self.initial_width is not None else lattice_diagonal / 2.0
        # the width must still have room to decay
        return max(width, self.final_width * 2.0)

    def learning_rate(self, t: int, total: int) -> float:
        if total <= 1:
            return self.initial_learning_rate
        return self.initial_learning_rate * self.final_learning_rate_ratio ** (t / (total - 1))

    def width(self, t: int, total: int, start: float) -> float:
        if total <= 1:
            return start
        return start * (self.final_width / start) ** (t / (total - 1))


class SomConfig(BaseModel):
    rows: int = Field(8, ge=1)
    cols: int = Field(8, ge=1)
    iterations: int = Field(100, ge=1)
    schedule: NeighborhoodSchedule = NeighborhoodSchedule()


class GsomConfig(BaseModel):
    spread_factor: float = Field(0.9, gt=0.0, lt=1.0)
    iterations: int = Field(100, ge=1)
    schedule: NeighborhoodSchedule = NeighborhoodSchedule()
    smoothing_fraction: float = Field(0.2, ge=0.0, lt=1.0)
    smoothing_lr_factor: float = Field(0.1, gt=0.0, le=1.0)
    max_nodes: Optional[int] = Field(None, ge=4)
    growth_noise: float = Field(0.05, ge=0.0)

    def node_cap(self, n_classes: int) -> int:
        return self.max_nodes if self.max_nodes is not None else 4 * max(n_classes, 1) * 16


class FwgsomConfig(BaseModel):
    max_iterations: int = Field(10, ge=1)
    target_accuracy: float = Field(1.0, gt=0.0, le=1.0)
    policy: WeightingPolicy = WeightingPolicy.BINARY
    attenuation: float = Field(0.5, gt=0.0, lt=1.0)
    epsilon: float = Field(1e-12, gt=0.0)
    # compare masked distances per active feature when re-evaluating BMUs
    scale_masks: bool = True
    gsom: GsomConfig = GsomConfig()


class FilterParams(BaseModel):
    bins: int = Field(10, ge=2)
    k_neighbors: int = Field(10, ge=1)
    top_k: Optional[int] = Field(None, ge=1)


class ClassifyConfig(BaseModel):
    test_fraction: float = Field(0.3, gt=0.0, lt=1.0)
    som: SomConfig = SomConfig()
    gsom: GsomConfig = GsomConfig()


# Footprint schemas
class FootprintParams(BaseModel):
    """Green-algorithms energy model inputs."""

    t: float = Field(0.0, ge=0.0, description="runtime in hours")
    n_c: float = Field(1.0, ge=0.0, description="number of cores")
    P_c: float = Field(12.0, ge=0.0, description="power draw per core (W)")
    u_c: float = Field(1.0, ge=0.0, le=1.0, description="core usage factor")
    n_m: float = Field(4.0, ge=0.0, description="memory available (GB)")
    P_m: float = Field(0.3725, ge=0.0, description="memory power draw (W per GB)")
    PUE: float = Field(1.67, ge=1.0, description="data-centre efficiency coefficient")
    CI: float = Field(475.0, ge=0.0, description="carbon intensity (gCO2e/kWh)")

    @field_validator("*")
    @classmethod
    def _finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("must be finite")
        return v


class FootprintEstimate(BaseModel):
    runtime_seconds: float
    energy_kwh: float
    co2_g: float
    co2_display: str
    peak_memory_mb: Optional[float] = None
    params: FootprintParams


# Feature-selection result schemas
class ClassScores(BaseModel):
    scores: List[float]
    threshold: Optional[float]
    selected: List[int]


class FeatureScores(BaseModel):
    method: Method
    scores: List[float]
    threshold: Optional[float]
    selected: List[int]
    rule: Literal["mean_threshold", "top_k"] = "mean_threshold"
    per_class: Dict[int, ClassScores] = {}
    runtime_seconds: float = 0.0


class FsClassMetrics(BaseModel):
    class_id: int
    SF: int = Field(..., ge=0)
    CSF: int = Field(..., ge=0)
    NF: int = Field(..., ge=0)
    AF: int = Field(..., ge=0)
    fs_accuracy: float = Field(..., ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _partition(self):
        if self.SF != self.CSF + self.NF + self.AF:
            raise ValueError("SF must equal CSF + NF + AF")
        return self


class FwgsomClassResult(BaseModel):
    relevant: List[int]
    delta: Optional[List[float]]
    accuracy: float
    status: ClassStatus
    lead: Optional[int] = None
    associates: List[int] = []


class TraceEntry(BaseModel):
    iteration: int
    weighted: bool
    classes: Dict[int, FwgsomClassResult]
    class_accuracy: Dict[int, float]
    overall_accuracy: float
    hits: List[List[int]]


class FwgsomReport(BaseModel):
    classes: Dict[int, FwgsomClassResult]
    overall_accuracy: float
    iterations: int
    seed: int
    trace: List[TraceEntry]
    node_masks: Optional[List[List[float]]] = None
    hits: Optional[List[List[int]]] = None
    runtime_seconds: float = 0.0


# Trial schemas
class TrialSummary(BaseModel):
    method: str
    dataset: str
    values: List[float]
    seeds: List[int]
    mean: float
    std: float
    trials: int = Field(..., ge=1)
    failures: Dict[int, str] = {}


# Synthetic dataset schemas
class ClassSpec(BaseModel):
    class_id: int = Field(..., ge=1)
    samples: int = Field(..., gt=0)
    relevant: List[int]
    means: List[float]
    sd: float = Field(0.03, ge=0.0)
    noise: NoiseModel = NoiseModel.UNIFORM

    @model_validator(mode="after")
    def _aligned(self):
        if len(self.means) != len(self.relevant):
            raise ValueError("means must align with relevant features")
        if any(f < 1 for f in self.relevant):
            raise ValueError("relevant features are 1-based")
        return self


class StructuredPreset(BaseModel):
    kind: Literal["structured"]
    total_features: int = Field(..., ge=1)
    classes: List[ClassSpec]


class ShapePreset(BaseModel):
    kind: Literal["shape"]
    shape: Shape
    samples: int = Field(..., gt=0)
    noise_features: int = Field(..., ge=0)
    noise_level: float = Field(0.0, ge=0.0)
    centers: int = Field(4, ge=2)
    informative: int = Field(6, ge=1)
    imbalance: Tuple[int, int] = (3, 4)
    base_scale: Optional[float] = Field(None, gt=0.0)


class InterclassPreset(BaseModel):
    kind: Literal["interclass"]
    classes: int = Field(6, ge=2)
    samples_per_class: int = Field(200, gt=0)
    relevant_features: int = Field(12, ge=1)
    irrelevant_features: int = Field(4, ge=0)
    spacing: float = Field(16.0, gt=0.0)
    sd: float = Field(0.2, ge=0.0)
    squeeze: Tuple[int, int] = (1, 2)
    factor: float = Field(2.0, ge=0.0)


class WaveformPreset(BaseModel):
    kind: Literal["waveform"]
    samples: int = Field(5000, gt=0)
    noise_features: int = Field(19, ge=0)


# Bench suite schemas
class BenchCell(BaseModel):
    """One dataset variant of a suite: a preset, optionally with a noise level or feature count."""

    preset: str
    noise_level: Optional[float] = Field(None, ge=0.0)
    features: Optional[int] = Field(None, ge=1)


class SuiteSpec(BaseModel):
    cells: List[BenchCell] = []
    classify: List[Classifier] = []
    baseline: bool = False
    value: Literal["fs_accuracy", "clf_accuracy", "runtime"] = "fs_accuracy"
    uses_data: bool = False


# Run configuration
class RunConfig(BaseModel):
    """Validated command configuration; serialized verbatim into every output bundle."""

    command: Literal["gen", "select", "bench", "footprint"]
    preset: Optional[str] = None
    data: List[str] = []
    truth: Optional[str] = None
    label_column: str = "last"
    methods: List[Method] = []
    suite: Optional[Suite] = None
    trials: int = Field(15, ge=1)
    seed: Optional[int] = Field(None, ge=0, le=2**64 - 1)
    out: Optional[str] = None
    jobs: int = Field(1, ge=1)
    timing: bool = True
    save_network: Optional[str] = None
    export_hits: bool = False
    baseline_per_class: bool = False
    json_output: bool = False
    noise_level: Optional[float] = Field(None, ge=0.0)
    features: List[int] = []
    filters: FilterParams = FilterParams()
    fwgsom: FwgsomConfig = FwgsomConfig()
    classify: ClassifyConfig = ClassifyConfig()
    footprint: FootprintParams = FootprintParams()

    @model_validator(mode="after")
    def _per_command(self):
        if self.command == "bench" and self.seed is None:
            raise ValueError("bench requires --seed")
        if self.command == "gen" and not self.preset:
            raise ValueError("gen requires --preset")
        if self.command == "select" and not (self.preset or self.data):
            raise ValueError("select requires --data or --preset")
        return self
