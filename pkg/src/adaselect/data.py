"""Core data containers: samples, minibatches, and per-sample probe statistics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Sample:
    """One training example with a stable nonnegative id."""

    features: np.ndarray
    target: float | int
    id: int

    def __post_init__(self) -> None:
        feats = np.asarray(self.features, dtype=np.float64)
        object.__setattr__(self, "features", feats)
        if feats.size == 0:
            raise ValueError("sample features must be nonempty")
        if not np.all(np.isfinite(feats)):
            raise ValueError("sample features must be finite")
        if self.id < 0:
            raise ValueError("sample id must be nonnegative")


@dataclass(frozen=True)
class MiniBatch:
    """A fixed group of samples processed in one iteration.

    Stored struct-of-arrays for vectorized math: ``features`` is (b, d),
    ``targets`` is (b,) and ``ids`` holds the stable per-sample ids. Ids
    within a batch must be distinct.
    """

    features: np.ndarray
    targets: np.ndarray
    ids: np.ndarray
    iteration_tag: int = 0

    def __post_init__(self) -> None:
        feats = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        targets = np.asarray(self.targets)
        ids = np.asarray(self.ids, dtype=np.int64)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "ids", ids)
        if len(feats) == 0:
            raise ValueError("empty batch")
        if not (len(feats) == len(targets) == len(ids)):
            raise ValueError("features, targets and ids must have equal length")
        if len(np.unique(ids)) != len(ids):
            raise ValueError("sample ids within a batch must be distinct")
        if self.iteration_tag < 0:
            raise ValueError("iteration_tag must be nonnegative")

    def __len__(self) -> int:
        return len(self.ids)

    @classmethod
    def from_samples(cls, samples: list[Sample], iteration_tag: int = 0) -> "MiniBatch":
        if not samples:
            raise ValueError("empty batch")
        return cls(
            features=np.stack([s.features for s in samples]),
            targets=np.asarray([s.target for s in samples]),
            ids=np.asarray([s.id for s in samples], dtype=np.int64),
            iteration_tag=iteration_tag,
        )

    @property
    def samples(self) -> list[Sample]:
        return [
            Sample(features=f, target=t.item() if hasattr(t, "item") else t, id=int(i))
            for f, t, i in zip(self.features, self.targets, self.ids)
        ]


@dataclass(frozen=True)
class PerSampleStats:
    """Per-sample loss (and optionally gradient norm) from one probe pass.

    ``grad_norms`` is present only when a gradient-consuming selection
    strategy is active; probing gradients costs an extra backward pass.
    """

    losses: np.ndarray
    grad_norms: np.ndarray | None = field(default=None)

    def __post_init__(self) -> None:
        losses = np.asarray(self.losses, dtype=np.float64)
        object.__setattr__(self, "losses", losses)
        if losses.ndim != 1 or losses.size == 0:
            raise ValueError("empty batch")
        if not np.all(np.isfinite(losses)):
            raise ValueError("losses must be finite")
        if np.any(losses < 0):
            raise ValueError("losses must be nonnegative")
        if self.grad_norms is not None:
            norms = np.asarray(self.grad_norms, dtype=np.float64)
            object.__setattr__(self, "grad_norms", norms)
            if norms.shape != losses.shape:
                raise ValueError("grad_norms must match losses in length")
            if not np.all(np.isfinite(norms)) or np.any(norms < 0):
                raise ValueError("grad_norms must be finite and nonnegative")

    def __len__(self) -> int:
        return len(self.losses)
