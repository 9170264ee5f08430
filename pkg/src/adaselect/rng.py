"""Deterministic, platform-stable random number streams.

Every source of randomness in this package flows through an
:class:`RngStream`, a (seed, stream_id) pair backed by the counter-based
Philox bit generator. Identical pairs produce identical draw sequences on
every platform and across runs; independent streams are obtained by
deriving new stream ids, never by sharing a generator mid-sequence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_U64 = 0xFFFFFFFFFFFFFFFF


def _splitmix64(x: int) -> int:
    """One round of the SplitMix64 mixer, used to derive stream ids."""
    z = (x + 0x9E3779B97F4A7C15) & _U64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _U64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _U64
    return (z ^ (z >> 31)) & _U64


@dataclass(frozen=True)
class RngStream:
    """Identity of one reproducible random stream.

    The stream itself is materialized by :meth:`generator`; the dataclass is
    immutable so a stream identity can be stored, logged, or passed between
    threads. Never share one live generator between concurrent consumers;
    call :meth:`derive` to get an independent stream instead.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        if self.stream_id < 0:
            raise ValueError("stream_id must be nonnegative")

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        ss = np.random.SeedSequence(
            entropy=self.seed & _U64, spawn_key=(self.stream_id,)
        )
        return np.random.Generator(np.random.Philox(ss))

    def derive(self, label: int) -> "RngStream":
        """Independent child stream, deterministic in (self, label)."""
        mixed = _splitmix64((self.stream_id ^ _splitmix64(label & _U64)) & _U64)
        return RngStream(self.seed, mixed)


def as_generator(rng: "RngStream | np.random.Generator") -> np.random.Generator:
    """Accept either a stream identity or a live generator."""
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng)!r}")
