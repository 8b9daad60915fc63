"""Run configuration schemas."""

from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Type

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from selfclassifier.config import settings
from selfclassifier.exceptions import ConfigurationError

RECOMMENDED_TEMPERATURE_RATIO = (2.0, 3.5)
REFERENCE_BATCH_SIZE = 4096
DEFAULT_BASE_CLASSES = 4


class LossKind(str, Enum):
    """Which per-pair loss drives training."""

    SELF_CLASSIFIER = "self_classifier"
    NAIVE = "naive"


class HeadMode(str, Enum):
    """Whether classification heads are optimized."""

    LEARNABLE = "learnable"
    FIXED = "fixed"


class LossConfig(BaseModel):
    """Temperatures and shape expectations of the Self-Classifier loss."""

    model_config = ConfigDict(extra="forbid")

    tau_row: float = Field(0.1, gt=0, description="Row (class) softmax temperature")
    tau_col: float = Field(0.05, gt=0, description="Column (batch) softmax temperature")
    n_batch: Optional[int] = Field(None, ge=1, description="Expected N; None accepts any")
    n_classes: Optional[int] = Field(None, ge=1, description="Expected C; None accepts any")
    kind: LossKind = LossKind.SELF_CLASSIFIER
    class_prior: Optional[List[float]] = Field(
        None, description="Target class distribution p(y); None means uniform"
    )

    @model_validator(mode="after")
    def check_prior_and_ratio(self) -> "LossConfig":
        if self.class_prior is not None:
            prior = self.class_prior
            if any(p <= 0 for p in prior):
                raise ValueError("class_prior entries must be positive")
            if abs(sum(prior) - 1.0) > 1e-9:
                raise ValueError(f"class_prior must sum to 1, sums to {sum(prior)}")
            if self.n_classes is not None and len(prior) != self.n_classes:
                raise ValueError(
                    f"class_prior has {len(prior)} entries but n_classes={self.n_classes}"
                )

        low, high = RECOMMENDED_TEMPERATURE_RATIO
        ratio = self.tau_row / self.tau_col
        if not low <= ratio <= high:
            logger.warning(
                f"tau_row/tau_col = {ratio:.2f} is outside the robust range [{low}, {high}]; "
                "training may not converge"
            )
        return self

    def for_head(self, n_classes: int) -> "LossConfig":
        """Copy bound to one head's class count; a prior of another length is dropped."""
        prior = self.class_prior
        if prior is not None and len(prior) != n_classes:
            prior = None
        return self.model_copy(update={"n_classes": n_classes, "class_prior": prior})


class ModelConfig(BaseModel):
    """Encoder MLP, projection head and classification heads."""

    model_config = ConfigDict(extra="forbid")

    input_dim: Optional[int] = Field(None, ge=1, description="Filled from the dataset when None")
    encoder_layers: List[int] = Field(default_factory=lambda: [64, 64])
    proj_hidden: int = Field(128, ge=1)
    proj_hidden_layers: int = Field(1, ge=0)
    proj_out: int = Field(32, ge=2)
    head_sizes: List[int] = Field(default_factory=list)
    base_classes: Optional[int] = Field(None, ge=2)
    head_mode: HeadMode = HeadMode.LEARNABLE
    leaky_slope: float = Field(0.01, ge=0)
    bn_eps: float = Field(1e-5, gt=0)
    bn_momentum: float = Field(0.1, gt=0, le=1)

    @model_validator(mode="after")
    def expand_heads(self) -> "ModelConfig":
        if not self.head_sizes:
            if self.base_classes is None:
                raise ValueError("head_sizes is empty and base_classes is not set")
            c = self.base_classes
            self.head_sizes = [c, 2 * c, 4 * c, 8 * c]
        if any(size < 2 for size in self.head_sizes):
            raise ValueError(f"every head needs >= 2 classes, got {self.head_sizes}")
        if any(width < 1 for width in self.encoder_layers):
            raise ValueError(f"encoder widths must be >= 1, got {self.encoder_layers}")
        return self

    @property
    def base_head(self) -> int:
        """Index of the head with the fewest classes."""
        return min(range(len(self.head_sizes)), key=lambda h: self.head_sizes[h])


class OptimConfig(BaseModel):
    """LARS optimizer and warmup + cosine schedule."""

    model_config = ConfigDict(extra="forbid")

    base_lr: float = Field(4.8, ge=0)
    warmup_start_lr: float = Field(0.3, ge=0)
    final_lr: float = Field(0.0048, ge=0)
    warmup_epochs: int = Field(10, ge=0)
    total_epochs: int = Field(800, ge=1)
    weight_decay: float = Field(1e-6, ge=0)
    momentum: float = Field(0.9, ge=0, lt=1)
    lars_eta: float = Field(0.001, ge=0)
    lars_eps: float = Field(1e-9, ge=0)

    @model_validator(mode="after")
    def check_schedule(self) -> "OptimConfig":
        if not 0 <= self.warmup_epochs < self.total_epochs:
            raise ValueError(
                f"warmup_epochs must be in [0, total_epochs), got {self.warmup_epochs}/{self.total_epochs}"
            )
        return self

    def scaled_for_batch(self, batch_size: int) -> "OptimConfig":
        """Rescale every learning rate linearly by batch_size / 4096."""
        factor = batch_size / REFERENCE_BATCH_SIZE
        return self.model_copy(
            update={
                "base_lr": self.base_lr * factor,
                "warmup_start_lr": self.warmup_start_lr * factor,
                "final_lr": self.final_lr * factor,
            }
        )


class AugmentConfig(BaseModel):
    """Multi-view and nearest-neighbor augmentation."""

    model_config = ConfigDict(extra="forbid")

    n_global: int = Field(2, ge=1)
    n_local: int = Field(2, ge=0)
    sigma_global: float = Field(0.5, ge=0)
    sigma_local: float = Field(0.5, ge=0)
    keep_fraction: float = Field(0.6, gt=0, le=1)
    nn_enabled: bool = True
    queue_capacity: int = Field(4096, ge=1)
    nn_warmup_epochs: int = Field(1, ge=0)

    @model_validator(mode="after")
    def check_views(self) -> "AugmentConfig":
        if self.n_global + self.n_local < 2:
            raise ValueError("the loss needs at least two views per sample")
        return self


class DataSourceConfig(BaseModel):
    """Dataset file, or the Gaussian-mixture generator settings used when no file is given."""

    model_config = ConfigDict(extra="forbid")

    data_path: Optional[str] = None
    data_seed: int = 0
    data_classes: int = Field(4, ge=2)
    data_dim: int = Field(16, ge=1)
    data_samples: int = Field(2000, ge=2)
    data_separation: float = Field(10.0, ge=0)
    data_balanced: bool = True


SECTIONS: Dict[str, Type[BaseModel]] = {
    "data": DataSourceConfig,
    "model": ModelConfig,
    "loss": LossConfig,
    "optim": OptimConfig,
    "augment": AugmentConfig,
}

# Derived per head / per batch by the trainer, never set from a file
DERIVED_KEYS = {"n_batch", "n_classes"}


class RunConfig(BaseModel):
    """Everything a training run needs."""

    model_config = ConfigDict(extra="forbid")

    data: DataSourceConfig = Field(default_factory=DataSourceConfig)
    model: ModelConfig = Field(default_factory=lambda: ModelConfig(base_classes=DEFAULT_BASE_CLASSES))
    loss: LossConfig = Field(default_factory=LossConfig)
    optim: OptimConfig = Field(default_factory=OptimConfig)
    augment: AugmentConfig = Field(default_factory=AugmentConfig)
    batch_size: int = Field(256, ge=2)
    epochs: int = Field(200, ge=0)
    eval_every: int = Field(10, ge=0, description="0 evaluates only at the end")
    seed: int = 0
    output_dir: str = Field(default_factory=lambda: settings.OUTPUT_DIR)
    collapse_threshold: float = Field(0.5, ge=0, le=1)
    collapse_grace_epochs: int = Field(5, ge=0)

    @model_validator(mode="after")
    def sync_schedule(self) -> "RunConfig":
        if self.epochs > 0 and "total_epochs" not in self.optim.model_fields_set:
            update: Dict[str, Any] = {"total_epochs": self.epochs}
            if "warmup_epochs" not in self.optim.model_fields_set:
                update["warmup_epochs"] = min(self.optim.warmup_epochs, self.epochs - 1)
            self.optim = OptimConfig(**{**self.optim.model_dump(), **update})
        if self.epochs > self.optim.total_epochs:
            raise ValueError(
                f"epochs={self.epochs} runs past the schedule end total_epochs={self.optim.total_epochs}"
            )
        return self

    @classmethod
    def desk_preset(cls, **overrides: Any) -> "RunConfig":
        """Standard 4-class mixture run with learning rates rescaled to the batch size."""
        batch_size = overrides.pop("batch_size", 256)
        base = cls(
            data=DataSourceConfig(),
            model=ModelConfig(head_sizes=[4, 8, 16]),
            loss=LossConfig(),
            optim=OptimConfig(total_epochs=200, warmup_epochs=10).scaled_for_batch(batch_size),
            augment=AugmentConfig(),
            batch_size=batch_size,
            epochs=200,
        )
        if not overrides:
            return base
        return cls.from_flat({**base.to_flat(), **overrides})

    def to_flat(self) -> Dict[str, Any]:
        """Flat key -> value view, the inverse of from_flat."""
        flat: Dict[str, Any] = {}
        for section in SECTIONS:
            for key, value in getattr(self, section).model_dump(mode="json").items():
                if key not in DERIVED_KEYS:
                    flat[key] = value
        for key in type(self).model_fields:
            if key not in SECTIONS:
                flat[key] = getattr(self, key)
        return flat

    @classmethod
    def from_flat(cls, values: Mapping[str, Any]) -> "RunConfig":
        """
        Build a RunConfig from flat leaf-field keys.

        Args:
            values: key -> raw value; list fields accept comma-separated strings

        Returns:
            Validated RunConfig

        Raises:
            ConfigurationError: On unknown keys or invalid values
        """
        owners = flat_key_owners()
        grouped: Dict[str, Dict[str, Any]] = {section: {} for section in SECTIONS}
        top: Dict[str, Any] = {}
        for key, value in values.items():
            owner = owners.get(key)
            if owner is None:
                raise ConfigurationError(f"Unknown config key: {key}")
            if owner == "":
                top[key] = value
            else:
                grouped[owner][key] = _split_list(SECTIONS[owner], key, value)
        if not grouped["model"].get("head_sizes") and grouped["model"].get("base_classes") is None:
            grouped["model"]["base_classes"] = DEFAULT_BASE_CLASSES
        try:
            sections = {name: SECTIONS[name](**fields) for name, fields in grouped.items()}
            return cls(**sections, **top)
        except ValidationError as e:
            raise ConfigurationError(str(e)) from e


def flat_key_owners() -> Dict[str, str]:
    """Map every settable flat key to its section name ('' for top-level keys)."""
    owners: Dict[str, str] = {}
    for name, model in SECTIONS.items():
        for key in model.model_fields:
            if key not in DERIVED_KEYS:
                owners[key] = name
    for key in RunConfig.model_fields:
        if key not in SECTIONS:
            owners[key] = ""
    return owners


def _split_list(model: Type[BaseModel], key: str, value: Any) -> Any:
    annotation = str(model.model_fields[key].annotation).lower()
    if isinstance(value, str) and "list" in annotation:
        return [item.strip() for item in value.split(",") if item.strip()]
    return value

