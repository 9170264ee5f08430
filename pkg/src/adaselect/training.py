"""Training loops: full-batch baseline, standalone subsampling, adaptive combined.

All subsampling strategies share one loop shape: a probe forward pass
collects per-sample losses (and gradient norms when a gradient-consuming
strategy is active), the strategy picks a subset, and the picks accumulate
in a buffer of one full batch. Each time the buffer fills, the update pass
recomputes forward/backward on the buffered samples under the current
parameters and applies one SGD step. The full strategy bypasses all of
this and updates on every batch directly.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .combiner import (
    AccumulationBuffer,
    AdaSelectConfig,
    CombinerState,
    init_state,
    select,
    subset_size,
)
from .data import MiniBatch, PerSampleStats
from .datasets import Dataset
from .models import (
    GradNormMode,
    LossKind,
    Model,
    evaluate,
    forward_per_sample_losses,
    mean_gradient,
    probe_batch,
)
from .rng import RngStream
from .scorers import ScorerKind, select_standalone

# Stream labels under the per-run seed, so every randomness consumer gets an
# independent reproducible stream.
_STREAM_SHUFFLE = 1
_STREAM_SELECT = 2


class DivergenceError(RuntimeError):
    """Raised when gradients or parameters stop being finite."""


@dataclass
class SGDMomentum:
    """SGD-with-momentum hyperparameters plus the velocity state vector."""

    learning_rate: float
    momentum: float = 0.0
    velocity: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")


def sgd_momentum_step(
    model: Model, opt: SGDMomentum, batch: MiniBatch, loss: LossKind
) -> tuple[Model, SGDMomentum]:
    """One momentum step on the mean gradient of the batch, in place."""
    grad, _ = mean_gradient(model, batch.features, batch.targets, loss)
    if not np.all(np.isfinite(grad)):
        raise DivergenceError("divergence detected")
    if opt.velocity is None:
        opt.velocity = np.zeros_like(model.params)
    elif opt.velocity.shape != model.params.shape:
        raise ValueError("velocity shape must equal parameter shape")
    opt.velocity *= opt.momentum
    opt.velocity += grad
    model.params -= opt.learning_rate * opt.velocity
    if not np.all(np.isfinite(model.params)):
        raise DivergenceError("divergence detected")
    return model, opt


@dataclass(frozen=True)
class FullTraining:
    """No subsampling; every batch is used for the update."""

    token = "full"


@dataclass(frozen=True)
class StandaloneStrategy:
    """A single baseline strategy selecting its own subset each batch."""

    kind: ScorerKind

    @property
    def token(self) -> str:
        return self.kind.value


@dataclass(frozen=True)
class AdaSelectStrategy:
    """The adaptive combiner over a candidate pool."""

    config: AdaSelectConfig

    token = "adaselect"


Strategy = FullTraining | StandaloneStrategy | AdaSelectStrategy


def strategy_from_token(
    token: str,
    candidates: tuple[str, ...] = ("big_loss", "small_loss", "uniform"),
    sampling_rate: float = 0.2,
    beta: float = 0.5,
    kappa: float = -0.5,
    curriculum_enabled: bool = True,
    softmax_temperature: float = 1.0,
) -> Strategy:
    """Build a strategy from its CLI token; extra knobs only affect adaselect."""
    token = token.strip().lower()
    if token == "full":
        return FullTraining()
    if token == "adaselect":
        config = AdaSelectConfig(
            candidates=tuple(ScorerKind.from_token(c) for c in candidates),
            sampling_rate=sampling_rate,
            beta=beta,
            kappa=kappa,
            curriculum_enabled=curriculum_enabled,
            softmax_temperature=softmax_temperature,
        )
        return AdaSelectStrategy(config)
    return StandaloneStrategy(ScorerKind.from_token(token))


def needs_grad_norms(strategy: Strategy) -> bool:
    if isinstance(strategy, StandaloneStrategy):
        return strategy.kind is ScorerKind.GRAD_NORM
    if isinstance(strategy, AdaSelectStrategy):
        return ScorerKind.GRAD_NORM in strategy.config.candidates
    return False


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    test_loss: float
    test_accuracy: float | None
    backward_samples: int
    wall_ms: float
    select_ms: float


@dataclass(frozen=True)
class WeightTraceRow:
    """One method's trust weight and subset loss at one iteration."""

    t: int
    method: str
    weight: float
    avg_subset_loss: float
    chosen_size: int


@dataclass
class TrainReport:
    """Per-epoch metrics plus the combiner's weight evolution, if any."""

    epochs: list[EpochStats] = field(default_factory=list)
    weight_trace: list[WeightTraceRow] = field(default_factory=list)

    @property
    def final(self) -> EpochStats:
        if not self.epochs:
            raise ValueError("empty report")
        return self.epochs[-1]

    def total_backward_samples(self) -> int:
        return sum(e.backward_samples for e in self.epochs)

    def total_wall_ms(self) -> float:
        return sum(e.wall_ms for e in self.epochs)

    def total_select_ms(self) -> float:
        return sum(e.select_ms for e in self.epochs)


def train(
    strategy: Strategy,
    dataset: Dataset,
    model: Model,
    loss: LossKind,
    opt: SGDMomentum,
    epochs: int,
    sampling_rate: float,
    seed: int,
    batch_size: int = 100,
    grad_norm_mode: GradNormMode = GradNormMode.EXACT,
) -> TrainReport:
    """Run one training job and return its per-epoch report.

    Deterministic: identical arguments (including seed) give bit-identical
    parameter trajectories and reports, wall-clock timings aside. Ragged
    trailing batches are dropped so subset accounting stays exact.
    """
    if epochs < 1:
        raise ValueError("epochs must be a positive integer")
    if not 0.0 < sampling_rate <= 1.0:
        raise ValueError("sampling_rate must lie in (0, 1]")
    x_train, y_train = dataset.x_train, dataset.y_train
    n = len(x_train)
    if n == 0:
        raise ValueError("empty dataset")
    batch_size = min(batch_size, n)
    num_batches = n // batch_size

    base = RngStream(seed)
    shuffle_stream = base.derive(_STREAM_SHUFFLE)
    select_gen = base.derive(_STREAM_SELECT).generator()

    k = subset_size(batch_size, sampling_rate)
    buffer = AccumulationBuffer(batch_size)
    state: CombinerState | None = None
    eff_config: AdaSelectConfig | None = None
    if isinstance(strategy, AdaSelectStrategy):
        eff_config = replace(strategy.config, sampling_rate=sampling_rate)
        state = init_state(eff_config)
    probe_grads = needs_grad_norms(strategy)

    report = TrainReport()
    iteration = 0
    for epoch in range(epochs):
        ep_start = time.perf_counter()
        select_s = 0.0
        loss_sum = 0.0
        loss_count = 0
        backward_samples = 0
        perm = shuffle_stream.derive(epoch).generator().permutation(n)
        for bi in range(num_batches):
            idx = perm[bi * batch_size : (bi + 1) * batch_size]
            batch = MiniBatch(x_train[idx], y_train[idx], ids=idx, iteration_tag=iteration)
            if isinstance(strategy, FullTraining):
                # train_loss is measured at batch arrival, like the probe path
                batch_losses = forward_per_sample_losses(model, batch, loss)
                loss_sum += float(batch_losses.sum())
                loss_count += batch_size
                sgd_momentum_step(model, opt, batch, loss)
                backward_samples += batch_size
                iteration += 1
                continue

            losses, grad_norms = probe_batch(
                model, batch, loss, want_grad_norms=probe_grads, mode=grad_norm_mode
            )
            stats = PerSampleStats(losses=losses, grad_norms=grad_norms)
            loss_sum += float(losses.sum())
            loss_count += batch_size

            sel_start = time.perf_counter()
            if isinstance(strategy, StandaloneStrategy):
                chosen = select_standalone(strategy.kind, stats, k, select_gen)
            else:
                assert state is not None and eff_config is not None
                result, state = select(state, batch, stats, eff_config, select_gen)
                chosen = result.chosen
            selected_ids = idx[chosen]
            flushes = []
            start = 0
            while start < len(selected_ids):
                take = min(len(selected_ids) - start, buffer.remaining)
                flushed = buffer.push(selected_ids[start : start + take])
                start += take
                if flushed is not None:
                    flushes.append(flushed)
            select_s += time.perf_counter() - sel_start
            if isinstance(strategy, AdaSelectStrategy):
                assert state is not None and eff_config is not None
                for m, kind in enumerate(eff_config.candidates):
                    report.weight_trace.append(
                        WeightTraceRow(
                            t=state.t - 1,
                            method=kind.value,
                            weight=float(state.weights[m]),
                            avg_subset_loss=float(state.prev_avg_loss[m]),
                            chosen_size=len(chosen),
                        )
                    )

            for flushed in flushes:
                # positional ids: buffer carryover across epochs can repeat a
                # sample, and update batches do not need the global ids
                update_batch = MiniBatch(
                    x_train[flushed], y_train[flushed], ids=np.arange(len(flushed)),
                    iteration_tag=iteration,
                )
                sgd_momentum_step(model, opt, update_batch, loss)
                backward_samples += len(flushed)
            iteration += 1

        test_loss, test_acc = evaluate(model, dataset.x_test, dataset.y_test, loss)
        wall_ms = (time.perf_counter() - ep_start) * 1000.0
        report.epochs.append(
            EpochStats(
                epoch=epoch,
                train_loss=loss_sum / max(loss_count, 1),
                test_loss=test_loss,
                test_accuracy=test_acc,
                backward_samples=backward_samples,
                wall_ms=wall_ms,
                select_ms=select_s * 1000.0,
            )
        )
    return report
