"""Adaptive combination of subsampling strategies.

The combiner keeps a trust weight per candidate strategy and blends their
per-sample importance vectors into one score. After every batch each
strategy's weight is scaled by exp(beta * relative change of the average
loss over the subset that strategy would have kept), so strategies whose
subsets sit on fast-moving losses gain or lose trust depending on the sign
of beta. A curriculum multiplier can additionally favor low-loss samples
early in training, decaying toward uniformity as the iteration count grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import MiniBatch, PerSampleStats
from .ranking import _top_k_unchecked
from .rng import RngStream, as_generator
from .scorers import ScorerKind, score, select_standalone

# Guard for relative-variation denominators when the previous loss is zero.
EPS_PREV_LOSS = 1e-12


def subset_size(batch_size: int, sampling_rate: float) -> int:
    """Number of samples kept from a batch, floor(b * rate) but at least 1."""
    return max(1, int(math.floor(batch_size * sampling_rate)))


@dataclass(frozen=True)
class AdaSelectConfig:
    """Configuration of the adaptive combiner.

    beta controls how strongly strategy weights react to loss variation
    (positive: variation gains trust; negative: variation loses trust;
    zero: weights frozen). kappa is the curriculum exponent: the reward
    multiplier uses t**kappa, so negative kappa decays the curriculum
    toward fairness as training proceeds.
    """

    candidates: tuple[ScorerKind, ...]
    sampling_rate: float = 0.2
    beta: float = 0.5
    curriculum_enabled: bool = True
    kappa: float = -0.5
    softmax_temperature: float = 1.0

    def __post_init__(self) -> None:
        candidates = tuple(self.candidates)
        object.__setattr__(self, "candidates", candidates)
        if not candidates:
            raise ValueError("no candidates")
        if len(set(candidates)) != len(candidates):
            raise ValueError("candidates must be distinct")
        if not -1.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [-1, 1]")
        if not 0.0 < self.sampling_rate <= 1.0:
            raise ValueError("sampling_rate must lie in (0, 1]")
        if self.softmax_temperature <= 0:
            raise ValueError("softmax_temperature must be positive")


@dataclass(frozen=True)
class CombinerState:
    """Trust weights over candidates plus the previous per-method losses."""

    weights: np.ndarray
    prev_avg_loss: np.ndarray | None
    t: int

    def __post_init__(self) -> None:
        weights = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "weights", weights)
        if weights.size == 0:
            raise ValueError("no candidates")
        if np.any(weights <= 0) or abs(weights.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be positive and sum to 1")
        if self.t < 1:
            raise ValueError("iteration counter starts at 1")


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of one combined selection over a batch."""

    chosen: np.ndarray
    scores: np.ndarray
    indicators: np.ndarray
    per_method_alpha: np.ndarray
    reward: np.ndarray


def init_state(config: AdaSelectConfig) -> CombinerState:
    """Uniform trust over candidates; no loss history yet."""
    m = len(config.candidates)
    if m == 0:
        raise ValueError("no candidates")
    return CombinerState(weights=np.full(m, 1.0 / m), prev_avg_loss=None, t=1)


def curriculum_reward(
    losses: np.ndarray, t: int, kappa: float, enabled: bool = True
) -> np.ndarray:
    """Per-sample curriculum multiplier in (0, 1].

    r_i = exp(-t**kappa * l_i / sum_j l_j**2). Smaller losses earn larger
    rewards, biasing selection toward easy samples; with kappa < 0 the bias
    vanishes as t grows. Returns all-ones when disabled or when every loss
    is zero.
    """
    losses = np.asarray(losses, dtype=np.float64)
    if t < 1:
        raise ValueError("iteration counter starts at 1")
    if not enabled:
        return np.ones_like(losses)
    denom = float(np.square(losses).sum())
    if denom == 0.0:
        return np.ones_like(losses)
    return np.exp(-(t**kappa) * losses / denom)


def update_method_weights(
    state: CombinerState, avg_loss_now: np.ndarray, beta: float
) -> CombinerState:
    """One multiplicative trust update from per-method average losses.

    Each weight is scaled by exp(beta * |l_now - l_prev| / max(l_prev, eps))
    and the vector is renormalized to the simplex. The first call only
    records the losses; there is no previous value to compare against.
    """
    avg_loss_now = np.asarray(avg_loss_now, dtype=np.float64)
    if avg_loss_now.shape != state.weights.shape:
        raise ValueError("method count changed")
    if not np.all(np.isfinite(avg_loss_now)):
        raise ValueError("non-finite score")
    if state.prev_avg_loss is None:
        weights = state.weights
    else:
        variation = np.abs(avg_loss_now - state.prev_avg_loss) / np.maximum(
            state.prev_avg_loss, EPS_PREV_LOSS
        )
        exponent = beta * variation
        if np.all(exponent == 0.0):
            # exp(0) = 1 for every method; keep the weights bit-identical.
            weights = state.weights
        else:
            # Log-space evaluation of w * exp(exponent), renormalized. The
            # variation is unbounded (a near-zero previous loss inflates it),
            # so the direct product can overflow float64; shifting by the max
            # log-weight keeps the update finite with identical ratios.
            log_w = np.log(state.weights) + exponent
            log_w -= log_w.max()
            weights = np.exp(log_w)
            weights /= weights.sum()
            if np.any(weights == 0.0):
                # Total underflow of a dominated method; keep weights positive.
                weights = np.maximum(weights, 1e-300)
                weights /= weights.sum()
    return CombinerState(weights=weights, prev_avg_loss=avg_loss_now, t=state.t + 1)


def combined_scores(
    per_method_alpha: np.ndarray, weights: np.ndarray, reward: np.ndarray
) -> np.ndarray:
    """Blend importance vectors: s_i = r_i * sum_m w_m * alpha_m_i."""
    per_method_alpha = np.atleast_2d(np.asarray(per_method_alpha, dtype=np.float64))
    weights = np.asarray(weights, dtype=np.float64)
    reward = np.asarray(reward, dtype=np.float64)
    if per_method_alpha.shape[0] != weights.size:
        raise ValueError("method count changed")
    if per_method_alpha.shape[1] != reward.size:
        raise ValueError("importance vectors and reward must have equal length")
    return reward * (weights @ per_method_alpha)


def select(
    state: CombinerState,
    batch: MiniBatch,
    stats: PerSampleStats,
    config: AdaSelectConfig,
    rng: RngStream | np.random.Generator,
) -> tuple[SelectionResult, CombinerState]:
    """Score the batch with all candidates and keep the combined top-k.

    Per-method average losses are measured over the subset each candidate
    would keep standalone, so the trust update can tell the methods apart.
    Trust weights are refreshed with the current batch's losses before
    scoring; the curriculum reward uses the pre-advance iteration index.
    The returned state is advanced by one iteration.
    """
    if len(batch) != len(stats):
        raise ValueError("stats inconsistent with batch")
    losses = stats.losses
    b = losses.size
    k = subset_size(b, config.sampling_rate)
    m = len(config.candidates)
    if state.weights.size != m:
        raise ValueError("method count changed")

    gen = as_generator(rng)
    alphas = np.empty((m, b))
    avg_loss_now = np.empty(m)
    for i, kind in enumerate(config.candidates):
        alphas[i] = score(kind, stats, temperature=config.softmax_temperature)
        subset = select_standalone(kind, stats, k, gen)
        avg_loss_now[i] = losses[subset].mean()

    new_state = update_method_weights(state, avg_loss_now, config.beta)
    reward = curriculum_reward(losses, state.t, config.kappa, config.curriculum_enabled)
    scores = reward * (new_state.weights @ alphas)
    chosen = _top_k_unchecked(scores, k)
    indicators = np.zeros(b, dtype=np.int8)
    indicators[chosen] = 1
    result = SelectionResult(
        chosen=chosen,
        scores=scores,
        indicators=indicators,
        per_method_alpha=alphas,
        reward=reward,
    )
    return result, new_state


@dataclass
class AccumulationBuffer:
    """Holds selected sample ids until a full batch is gathered.

    The flush fires exactly when the held count reaches capacity; callers
    must split pushes that would overflow.
    """

    capacity: int
    _held: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.capacity < 1:
            raise ValueError("capacity must be a positive integer")

    def __len__(self) -> int:
        return len(self._held)

    @property
    def remaining(self) -> int:
        return self.capacity - len(self._held)

    def push(self, selected: np.ndarray) -> np.ndarray | None:
        """Append ids; return the full batch and reset when capacity is hit."""
        selected = np.asarray(selected, dtype=np.int64)
        if selected.size > self.remaining:
            raise ValueError("push exceeds remaining capacity; split the push")
        self._held.extend(selected.tolist())
        if len(self._held) == self.capacity:
            flushed = np.asarray(self._held, dtype=np.int64)
            self._held = []
            return flushed
        return None
