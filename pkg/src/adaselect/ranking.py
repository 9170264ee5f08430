"""Shared ranking primitives: top-k selection, softmax, and loss normalization."""

from __future__ import annotations

import numpy as np

# Range used when mapping raw losses onto the open unit interval. Keeping
# clear of 0 and 1 keeps log((1+x)/(1-x)) style transforms finite.
UNIT_LO = 0.01
UNIT_HI = 0.99


def _top_k_unchecked(values: np.ndarray, k: int) -> np.ndarray:
    """top_k_indices without input validation, for pre-validated hot paths."""
    # Stable sort of the negated values: descending by value, ties keep the
    # original (ascending) index order.
    order = np.argsort(-values, kind="stable")
    chosen = order[:k]
    chosen.sort()
    return chosen


def top_k_indices(values: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest entries, ascending by index.

    Ties are broken in favor of the smaller original index, so the result is
    a deterministic function of the input. If k exceeds the input length all
    indices are returned.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("empty batch")
    if k < 1:
        raise ValueError("k must be a positive integer")
    if not np.all(np.isfinite(values)):
        raise ValueError("non-finite score")
    return _top_k_unchecked(values, min(k, values.size))


def _softmax_unchecked(values: np.ndarray, temperature: float) -> np.ndarray:
    """softmax without input validation, for pre-validated hot paths."""
    scaled = values / temperature
    exps = np.exp(scaled - scaled.max())
    return exps / exps.sum()


def softmax(values: np.ndarray, temperature: float = 1.0) -> np.ndarray:
    """Probability vector proportional to exp(values / temperature).

    Computed with max subtraction so large inputs cannot overflow; the argmax
    of the output always equals the argmax of the input.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("empty batch")
    if not np.all(np.isfinite(values)):
        raise ValueError("non-finite score")
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    return _softmax_unchecked(values, temperature)


def normalize_losses_unit(losses: np.ndarray) -> np.ndarray:
    """Affine map of a loss vector onto [UNIT_LO, UNIT_HI] by batch min/max.

    A constant batch maps every entry to the midpoint 0.5.
    """
    losses = np.asarray(losses, dtype=np.float64)
    if losses.size == 0:
        raise ValueError("empty batch")
    if not np.all(np.isfinite(losses)):
        raise ValueError("non-finite score")
    if np.any(losses < 0):
        raise ValueError("losses must be nonnegative")
    lo, hi = losses.min(), losses.max()
    if hi == lo:
        return np.full_like(losses, 0.5)
    return UNIT_LO + (losses - lo) * (UNIT_HI - UNIT_LO) / (hi - lo)


def is_importance_vector(weights: np.ndarray, tol: float = 1e-9) -> bool:
    """True when weights form a probability vector (nonnegative, sums to 1)."""
    weights = np.asarray(weights, dtype=np.float64)
    return (
        weights.ndim == 1
        and weights.size > 0
        and bool(np.all(weights >= 0))
        and abs(float(weights.sum()) - 1.0) <= tol
    )
