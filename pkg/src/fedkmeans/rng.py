"""Seeded random streams.

All randomness in a run flows from one master seed through labelled
sub-streams (per client, server round, mask round, data generator), so
results are reproducible and independent of scheduling or worker count.
Streams use Philox, a counter-based generator whose state serializes to
plain ints (needed for byte-identical checkpoint resume).
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

# Stream purpose tags. Distinct leading ints keep sub-streams disjoint.
CLIENT = 1
SERVER = 2
MASKS = 3
DATAGEN = 4
EVAL = 5


def seed_sequence(master_seed: int, *labels: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=(int(master_seed),) + tuple(int(x) for x in labels))


def derive_generator(master_seed: int, *labels: int) -> np.random.Generator:
    """Independent Generator for the sub-stream named by ``labels``."""
    return np.random.Generator(np.random.Philox(seed_sequence(master_seed, *labels)))


class CountingGenerator:
    """numpy Generator wrapper that counts scalar draws.

    The draw counter is how tests verify that the server consumes zero
    randomness on skip-path unlearning rounds.
    """

    def __init__(self, generator: np.random.Generator, draws: int = 0):
        self._gen = generator
        self.draws = int(draws)

    @classmethod
    def from_seed(cls, master_seed: int, *labels: int) -> "CountingGenerator":
        return cls(derive_generator(master_seed, *labels))

    def random(self, size=None) -> np.ndarray | float:
        self.draws += int(np.prod(size)) if size is not None else 1
        return self._gen.random(size)

    def integers(self, low, high=None, size=None) -> np.ndarray | int:
        self.draws += int(np.prod(size)) if size is not None else 1
        return self._gen.integers(low, high, size=size)

    def state(self) -> dict:
        """JSON-serializable snapshot (generator state plus draw count)."""
        raw = self._gen.bit_generator.state
        return {
            "bit_generator": raw["bit_generator"],
            "state": {
                "counter": [int(x) for x in raw["state"]["counter"]],
                "key": [int(x) for x in raw["state"]["key"]],
            },
            "buffer": [int(x) for x in raw["buffer"]],
            "buffer_pos": int(raw["buffer_pos"]),
            "has_uint32": int(raw["has_uint32"]),
            "uinteger": int(raw["uinteger"]),
            "draws": self.draws,
        }

    @classmethod
    def from_state(cls, state: dict) -> "CountingGenerator":
        bg = np.random.Philox()
        bg.state = {
            "bit_generator": state["bit_generator"],
            "state": {
                "counter": np.array(state["state"]["counter"], dtype=np.uint64),
                "key": np.array(state["state"]["key"], dtype=np.uint64),
            },
            "buffer": np.array(state["buffer"], dtype=np.uint64),
            "buffer_pos": state["buffer_pos"],
            "has_uint32": state["has_uint32"],
            "uinteger": state["uinteger"],
        }
        return cls(np.random.Generator(bg), draws=state["draws"])
