"""Baseline subsampling strategies.

Each strategy has two faces: an importance vector over the batch (a
probability vector usable by the adaptive combiner) and a standalone
selection of the k samples it would keep on its own. For loss-ranked
strategies the two agree: the standalone selection is exactly the top-k of
the importance vector.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .data import PerSampleStats
from .ranking import (
    _softmax_unchecked,
    _top_k_unchecked,
    normalize_losses_unit,
)
from .rng import RngStream, as_generator


class ScorerKind(str, Enum):
    """The candidate subsampling strategies.

    The string values double as CLI tokens.
    """

    UNIFORM = "uniform"
    BIG_LOSS = "big_loss"
    SMALL_LOSS = "small_loss"
    GRAD_NORM = "grad_norm"
    ADABOOST = "adaboost"
    CORESET_MIX = "coreset_mix"
    CORESET_MEAN = "coreset_mean"

    @classmethod
    def from_token(cls, token: str) -> "ScorerKind":
        try:
            return cls(token.strip().lower())
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown scorer {token!r}; expected one of: {valid}") from None


SCORER_TOKENS = tuple(kind.value for kind in ScorerKind)


def adaboost_weights(losses: np.ndarray) -> np.ndarray:
    """Boosting-style emphasis weights from per-sample losses.

    Losses are first squashed onto [0.01, 0.99] so the log-odds transform
    w = 0.5 * log((1 + l) / (1 - l)) stays finite; the result is strictly
    increasing in the normalized loss.
    """
    unit = normalize_losses_unit(losses)
    return 0.5 * np.log((1.0 + unit) / (1.0 - unit))


def _require_grad_norms(stats: PerSampleStats) -> np.ndarray:
    if stats.grad_norms is None:
        raise ValueError("gradient norms unavailable")
    return stats.grad_norms


def score(
    kind: ScorerKind,
    stats: PerSampleStats,
    rng: RngStream | np.random.Generator | None = None,
    temperature: float = 1.0,
) -> np.ndarray:
    """Importance vector of one strategy over the batch.

    Always a probability vector (nonnegative, sums to 1). ``rng`` is part of
    the shared signature but no current strategy draws randomness here; the
    uniform strategy's importance is the constant vector 1/b.
    """
    del rng  # reserved for stochastic scorers
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    losses = stats.losses
    b = losses.size
    if kind is ScorerKind.UNIFORM:
        return np.full(b, 1.0 / b)
    if kind is ScorerKind.BIG_LOSS:
        return _softmax_unchecked(losses, temperature)
    if kind is ScorerKind.SMALL_LOSS:
        return _softmax_unchecked(-losses, temperature)
    if kind is ScorerKind.GRAD_NORM:
        norms = _require_grad_norms(stats)
        total = norms.sum()
        if total == 0.0:
            # Legitimate at a perfect fit: every gradient vanishes.
            return np.full(b, 1.0 / b)
        return norms / total
    if kind is ScorerKind.ADABOOST:
        weights = adaboost_weights(losses)
        return weights / weights.sum()
    if kind is ScorerKind.CORESET_MIX:
        return 0.5 * _softmax_unchecked(losses, temperature) + 0.5 * _softmax_unchecked(
            -losses, temperature
        )
    if kind is ScorerKind.CORESET_MEAN:
        return _softmax_unchecked(-np.abs(losses - losses.mean()), temperature)
    raise ValueError(f"unknown scorer kind {kind!r}")


def _coreset_mix_indices(losses: np.ndarray, k: int) -> np.ndarray:
    """Half highest-loss, half lowest-loss picks, de-duplicated.

    Takes ceil(k/2) from the high end and floor(k/2) from the low end. When
    ties make the two ends collide, the deficit is filled from the
    next-most-extreme untaken index, high side first.
    """
    desc = np.argsort(-losses, kind="stable")
    asc = np.argsort(losses, kind="stable")
    n_hi = (k + 1) // 2
    taken = np.zeros(losses.size, dtype=bool)
    chosen = list(desc[:n_hi])
    taken[chosen] = True
    need = k - n_hi
    for idx in asc:
        if need == 0:
            break
        if not taken[idx]:
            taken[idx] = True
            chosen.append(idx)
            need -= 1
    for idx in desc[n_hi:]:
        if need == 0:
            break
        if not taken[idx]:
            taken[idx] = True
            chosen.append(idx)
            need -= 1
    out = np.asarray(chosen, dtype=np.int64)
    out.sort()
    return out


def select_standalone(
    kind: ScorerKind,
    stats: PerSampleStats,
    k: int,
    rng: RngStream | np.random.Generator | None = None,
) -> np.ndarray:
    """Indices the strategy keeps when used on its own, ascending.

    Loss-ranked strategies reduce to a top-k over their ranking statistic;
    uniform draws k indices without replacement from ``rng``.
    """
    losses = stats.losses
    b = losses.size
    if k < 1:
        raise ValueError("k must be a positive integer")
    if k > b:
        raise ValueError("subset exceeds batch")
    if kind is ScorerKind.UNIFORM:
        if rng is None:
            raise ValueError("uniform selection requires an rng")
        gen = as_generator(rng)
        chosen = gen.choice(b, size=k, replace=False).astype(np.int64)
        chosen.sort()
        return chosen
    if kind is ScorerKind.BIG_LOSS:
        return _top_k_unchecked(losses, k)
    if kind is ScorerKind.SMALL_LOSS:
        return _top_k_unchecked(-losses, k)
    if kind is ScorerKind.GRAD_NORM:
        return _top_k_unchecked(_require_grad_norms(stats), k)
    if kind is ScorerKind.ADABOOST:
        return _top_k_unchecked(adaboost_weights(losses), k)
    if kind is ScorerKind.CORESET_MIX:
        return _coreset_mix_indices(losses, k)
    if kind is ScorerKind.CORESET_MEAN:
        return _top_k_unchecked(-np.abs(losses - losses.mean()), k)
    raise ValueError(f"unknown scorer kind {kind!r}")
