"""Evaluation and training report schemas."""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class ClusterScores(BaseModel):
    """Flat clustering scores of one prediction against one ground truth."""

    acc: float = Field(..., description="Hungarian-matched accuracy")
    majority_acc: float = Field(..., description="Many-to-one majority-mapped accuracy")
    nmi: float
    ami: float
    ari: float
    n_clusters: int = Field(..., description="Distinct predicted clusters")
    n_classes: int = Field(..., description="Distinct ground-truth classes")


class LevelMetrics(BaseModel):
    """Scores after rolling ground truth up to one hierarchy level."""

    level: str
    scores: ClusterScores


class HeadMetrics(BaseModel):
    """Scores of one classification head."""

    head: int
    n_classes: int
    scores: ClusterScores
    levels: List[LevelMetrics] = Field(default_factory=list)


class EvalReport(BaseModel):
    """Metrics of a model on a dataset."""

    n_samples: int
    base_head: int
    heads: List[HeadMetrics]
    knn_accuracy: Optional[float] = None
    knn_k: Optional[int] = None

    @property
    def base(self) -> HeadMetrics:
        return self.heads[self.base_head]


class EpochRecord(BaseModel):
    """Diagnostics of one completed epoch."""

    epoch: int = Field(..., ge=1)
    loss: float = Field(..., description="Mean loss over the epoch's steps")
    lr: float = Field(..., description="Learning rate of the last step")
    entropy: List[float] = Field(..., description="Class-marginal entropy per head, nats")
    queue_fill: float
    collapse_alarm: bool = False
    acc: Optional[List[float]] = Field(None, description="Per-head ACC when evaluated this epoch")


class RunReport(BaseModel):
    """Everything a training run produced, minus the parameters."""

    config: Dict[str, Any]
    epochs: List[EpochRecord] = Field(default_factory=list)
    final: EvalReport
    collapse_alarms: List[int] = Field(default_factory=list, description="Epochs that raised the alarm")
    wall_time_s: float = Field(0.0, exclude=True)


class GradCheckBlock(BaseModel):
    """Analytic vs finite-difference agreement of one parameter block."""

    name: str
    size: int
    max_rel_error: float
    passed: bool


class GradCheckReport(BaseModel):
    tolerance: float
    blocks: List[GradCheckBlock]

    @property
    def passed(self) -> bool:
        return all(block.passed for block in self.blocks)

    @property
    def max_rel_error(self) -> float:
        return max((block.max_rel_error for block in self.blocks), default=0.0)
