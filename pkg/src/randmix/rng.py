"""Seeded, independent random number streams.

A stream is identified by a (seed, stream_id) pair. Identical pairs
reproduce identical draws; distinct pairs give statistically independent
generators (numpy SeedSequence spawn keys). Library code derives private
sub-streams through child(); user-facing ids stay flat integers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["RngStream"]


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0
    # internal derivation path, extended by child(); not part of the public id
    lane: tuple = field(default=())

    def __post_init__(self):
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if not isinstance(self.stream_id, (int, np.integer)) or self.stream_id < 0:
            raise ValueError("stream_id must be a non-negative integer")

    def _spawn_key(self) -> tuple:
        # spawn_key entries are uint32; split wide stream ids
        sid = int(self.stream_id)
        return (sid & 0xFFFFFFFF, sid >> 32) + tuple(int(k) for k in self.lane)

    def generator(self) -> np.random.Generator:
        """Fresh generator for this stream; same stream, same draws."""
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=self._spawn_key())
        return np.random.default_rng(ss)

    def child(self, k: int) -> "RngStream":
        """Derived independent sub-stream (used to fan one seed out per purpose)."""
        return RngStream(self.seed, self.stream_id, self.lane + (int(k),))
