"""Training loop: multi-view augmentation, NN substitution, LARS steps and diagnostics."""

import math
import time
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from loguru import logger
from scipy.special import softmax
from scipy.stats import entropy

from selfclassifier.config import settings
from selfclassifier.core import ops
from selfclassifier.core.loss import ViewKind, ViewLogits, multihead_loss
from selfclassifier.core.model import (
    ModelParams,
    forward,
    head_logits,
    init_params,
    trainable_parameters,
)
from selfclassifier.core.ops import Mode
from selfclassifier.core.optim import OptimState, lars_step, lr_at
from selfclassifier.core.tensor import Graph, Tensor, backward
from selfclassifier.exceptions import (
    ConfigurationError,
    DegenerateSliceError,
    DomainError,
    NaNLossError,
    NonFiniteError,
)
from selfclassifier.schemas.config import RunConfig
from selfclassifier.schemas.report import EpochRecord, EvalReport, RunReport
from selfclassifier.services.data_synth import Dataset, augment_batch, generate_from_config
from selfclassifier.services.evaluation import evaluate
from selfclassifier.services.nn_queue import NNQueue
from selfclassifier.storage.datasets import read_dataset
from selfclassifier.utils.seeding import make_streams


@dataclass
class TrainResult:
    report: RunReport
    params: ModelParams


class CollapseMonitor:
    """Running mean of row-softmax predictions per head."""

    def __init__(self, n_heads: int, tau_row: float):
        self.tau_row = tau_row
        self._sums: List[Optional[np.ndarray]] = [None] * n_heads
        self._count = 0

    def update(self, per_head_logits: Sequence[np.ndarray]) -> None:
        for h, logits in enumerate(per_head_logits):
            probs = softmax(np.asarray(logits, dtype=np.float64) / self.tau_row, axis=1).sum(axis=0)
            self._sums[h] = probs if self._sums[h] is None else self._sums[h] + probs
        self._count += np.asarray(per_head_logits[0]).shape[0]

    def entropies(self) -> List[float]:
        """Entropy in nats of the mean predicted class distribution, per head."""
        if self._count == 0:
            raise ValueError("collapse monitor has not observed any batch")
        return [float(entropy(total / self._count)) for total in self._sums]


def collapse_monitor(logits_history: Sequence[Sequence[np.ndarray]], tau_row: float = 0.1) -> List[float]:
    """
    Per-head entropy of the mean row softmax over every observed batch.

    Args:
        logits_history: One entry per batch, each a list of N x C_h logits per head
        tau_row: Row softmax temperature

    Returns:
        Entropy per head, in [0, ln C_h]
    """
    if not logits_history:
        raise ValueError("collapse_monitor needs at least one batch")
    monitor = CollapseMonitor(len(logits_history[0]), tau_row)
    for per_head in logits_history:
        monitor.update(per_head)
    return monitor.entropies()


def load_training_data(cfg: RunConfig) -> Dataset:
    """Dataset file when configured, otherwise the configured Gaussian mixture."""
    if cfg.data.data_path:
        return read_dataset(cfg.data.data_path)
    return generate_from_config(cfg.data)


def bind_input_dim(cfg: RunConfig, dataset: Dataset) -> RunConfig:
    """
    Fill model.input_dim from the dataset.

    Raises:
        ConfigurationError: If a configured input_dim disagrees with the data
    """
    if cfg.model.input_dim is None:
        model = cfg.model.model_copy(update={"input_dim": dataset.dim})
        return cfg.model_copy(update={"model": model})
    if cfg.model.input_dim != dataset.dim:
        raise ConfigurationError(f"model.input_dim={cfg.model.input_dim} but data has {dataset.dim} features")
    return cfg


def batch_indices(order: np.ndarray, batch_size: int) -> List[np.ndarray]:
    """Consecutive batches of a permutation; a trailing single row joins the previous batch."""
    batches = [order[i : i + batch_size] for i in range(0, len(order), batch_size)]
    if len(batches) > 1 and len(batches[-1]) < 2:
        tail = batches.pop()
        batches[-1] = np.concatenate([batches[-1], tail])
    return batches


def _logits_stats(per_view: Sequence[Sequence[Tensor]]) -> str:
    lines = []
    for v, heads in enumerate(per_view):
        for h, logits in enumerate(heads):
            data = logits.data
            finite = np.isfinite(data)
            lines.append(
                f"view {v} head {h}: min={np.nanmin(data):.6g} max={np.nanmax(data):.6g} "
                f"mean={np.nanmean(data):.6g} std={np.nanstd(data):.6g} non_finite={int((~finite).sum())}"
            )
    return "\n".join(lines)


class Trainer:
    """
    Owns the model, optimizer state and NN queue of one run.

    Args:
        cfg: Run configuration
        dataset: Training data; input_dim is bound from it
    """

    def __init__(self, cfg: RunConfig, dataset: Dataset):
        self.cfg = bind_input_dim(cfg, dataset)
        self.dataset = dataset
        model_cfg = self.cfg.model
        aug = self.cfg.augment

        self.params: ModelParams = init_params(model_cfg, self.cfg.seed)
        self.trainable = trainable_parameters(self.params)
        self.lars_exempt = self.params.bn_param_names()
        self.state = OptimState()
        self.queue = NNQueue(aug.queue_capacity, model_cfg.proj_out)
        self.streams = make_streams(self.cfg.seed)

        self.view_kinds = [ViewKind.GLOBAL] * aug.n_global + [ViewKind.LOCAL] * aug.n_local
        self.target_view = min(1, aug.n_global - 1)
        self.head_losses = [self.cfg.loss.for_head(c) for c in model_cfg.head_sizes]
        self._last_lr = 0.0

    def _nn_active(self, epoch: int) -> bool:
        return self.cfg.augment.nn_enabled and epoch >= self.cfg.augment.nn_warmup_epochs

    def step(self, points: np.ndarray, epoch_fraction: float, use_nn: bool, monitor: CollapseMonitor) -> float:
        """
        One optimization step on a batch of raw points.

        Raises:
            NaNLossError: If the forward pass or loss becomes non-finite
        """
        rng = self.streams["augment"]
        views = [augment_batch(points, kind, rng, self.cfg.augment) for kind in self.view_kinds]
        n_heads = len(self.cfg.model.head_sizes)

        embeddings: List[Tensor] = []
        per_view: List[List[Tensor]] = []
        with Graph():
            try:
                for view in views:
                    embedding, logits = forward(self.params, Tensor(view), Mode.TRAIN)
                    embeddings.append(embedding)
                    per_view.append(logits)

                targets: List[List[Optional[Tensor]]] = [[None] * len(views) for _ in range(n_heads)]
                if use_nn:
                    neighbors = self.queue.lookup(embeddings[self.target_view].data)
                    for h, logits in enumerate(head_logits(self.params, ops.constant(neighbors))):
                        targets[h][self.target_view] = logits

                per_head = [
                    ViewLogits([heads[h] for heads in per_view], self.view_kinds, targets[h])
                    for h in range(n_heads)
                ]
                loss = multihead_loss(per_head, self.head_losses)
            except (NonFiniteError, DegenerateSliceError, DomainError) as e:
                stats = _logits_stats(per_view)
                logger.error(f"Non-finite training step at epoch {epoch_fraction:.4f}: {e}\n{stats}")
                raise NaNLossError(f"{e}; logits statistics:\n{stats}") from e

            value = loss.item()
            if not math.isfinite(value):
                stats = _logits_stats(per_view)
                logger.error(f"Loss is {value} at epoch {epoch_fraction:.4f}\n{stats}")
                raise NaNLossError(f"loss is {value}; logits statistics:\n{stats}")

            self.params.zero_grad()
            backward(loss)

        lr = lr_at(self.cfg.optim, epoch_fraction)
        lars_step(self.trainable, self.state, self.cfg.optim, lr, exclude=self.lars_exempt)

        if self.cfg.augment.nn_enabled:
            for i, kind in enumerate(self.view_kinds):
                if kind is ViewKind.GLOBAL:
                    self.queue.push(embeddings[i].data)
        monitor.update([logits.data for logits in per_view[0]])
        self._last_lr = lr
        return value

    def run_epoch(self, epoch: int) -> EpochRecord:
        """Train one pass over the shuffled data; epoch is 0-based."""
        order = self.streams["shuffle"].permutation(self.dataset.size)
        batches = batch_indices(order, self.cfg.batch_size)
        monitor = CollapseMonitor(len(self.cfg.model.head_sizes), self.cfg.loss.tau_row)
        use_nn = self._nn_active(epoch)

        losses = []
        for b, index in enumerate(batches):
            fraction = epoch + b / len(batches)
            losses.append(self.step(self.dataset.points[index], fraction, use_nn, monitor))

        self.state.epoch = epoch + 1
        entropies = monitor.entropies()
        record = EpochRecord(
            epoch=epoch + 1,
            loss=float(np.mean(losses)),
            lr=self._last_lr,
            entropy=entropies,
            queue_fill=self.queue.fill,
        )
        if record.epoch > self.cfg.collapse_grace_epochs:
            collapsed = [
                h
                for h, (value, c) in enumerate(zip(entropies, self.cfg.model.head_sizes))
                if value < self.cfg.collapse_threshold * math.log(c)
            ]
            if collapsed:
                record.collapse_alarm = True
                logger.warning(
                    f"Collapse alarm at epoch {record.epoch}: heads {collapsed} "
                    f"below {self.cfg.collapse_threshold}·ln C (entropies {entropies})"
                )
        return record

    def evaluate(self, knn: bool = False) -> EvalReport:
        return evaluate(
            self.params,
            self.dataset,
            knn_k=settings.KNN_K if knn else None,
        )

    def fit(self) -> RunReport:
        """
        Run every epoch, evaluating every eval_every epochs and once at the end.

        Returns:
            RunReport; wall_time_s is set but not serialized
        """
        started = time.perf_counter()
        records: List[EpochRecord] = []
        logger.info(
            f"Training {self.cfg.epochs} epochs on {self.dataset.size} points, "
            f"heads {self.cfg.model.head_sizes}, batch {self.cfg.batch_size}"
        )

        for epoch in range(self.cfg.epochs):
            record = self.run_epoch(epoch)
            if self.cfg.eval_every and record.epoch % self.cfg.eval_every == 0:
                report = self.evaluate()
                record.acc = [head.scores.acc for head in report.heads]
            records.append(record)
            logger.info(
                f"epoch {record.epoch}/{self.cfg.epochs} loss={record.loss:.5f} lr={record.lr:.5g} "
                f"entropy={[round(e, 4) for e in record.entropy]} queue={record.queue_fill:.2f}"
                + (f" acc={[round(a, 4) for a in record.acc]}" if record.acc else "")
            )

        final = self.evaluate(knn=True)
        if records and records[-1].acc is None:
            records[-1].acc = [head.scores.acc for head in final.heads]

        return RunReport(
            config=self.cfg.model_dump(mode="json"),
            epochs=records,
            final=final,
            collapse_alarms=[r.epoch for r in records if r.collapse_alarm],
            wall_time_s=time.perf_counter() - started,
        )


def train(cfg: RunConfig, dataset: Optional[Dataset] = None) -> TrainResult:
    """
    Train a model for cfg and return the report with the final parameters.

    Args:
        cfg: Run configuration
        dataset: Training data; loaded from cfg.data when None

    Returns:
        TrainResult with the report and the trained parameters
    """
    dataset = dataset if dataset is not None else load_training_data(cfg)
    trainer = Trainer(cfg, dataset)
    report = trainer.fit()
    return TrainResult(report=report, params=trainer.params)
