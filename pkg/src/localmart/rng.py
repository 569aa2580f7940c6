"""Counter-based random streams, one independent stream per path.

Every path draws from a Philox generator whose 128-bit key is derived
from (master_seed, scenario id) and whose 256-bit counter is offset by
``path_index * PATH_STRIDE``. Path i therefore sees the same bytes no
matter how paths are batched across workers or in what order batches
run, which is what makes ensembles reproducible under parallelism.
"""

from __future__ import annotations

import hashlib

import numpy as np

# Philox blocks reserved per path; each block yields 4 uint64 draws.
PATH_STRIDE = 1 << 40

_MASK64 = (1 << 64) - 1


def stream_key(master_seed: int, scenario_id: str) -> int:
    """128-bit Philox key from the master seed and the scenario identity."""
    digest = hashlib.blake2b(scenario_id.encode("utf-8"), digest_size=8).digest()
    return ((int(master_seed) & _MASK64) << 64) | int.from_bytes(digest, "little")


class PathStreams:
    """Reusable per-path generators for one (master_seed, scenario) pair.

    Not thread-safe: each worker must own its own instance. Instances
    over the same key yield identical streams for identical path indices.
    """

    def __init__(self, master_seed: int, scenario_id: str):
        self.key = stream_key(master_seed, scenario_id)
        self._bitgen = np.random.Philox(key=self.key)
        self._gen = np.random.Generator(self._bitgen)
        self._state = self._bitgen.state

    def rng(self, path_index: int) -> np.random.Generator:
        """Generator positioned at the start of path `path_index`'s stream."""
        offset = path_index * PATH_STRIDE
        st = self._state
        counter = st["state"]["counter"]
        counter[0] = offset & _MASK64
        counter[1] = offset >> 64
        counter[2] = 0
        counter[3] = 0
        st["buffer_pos"] = 4  # discard any buffered draws
        st["has_uint32"] = 0
        st["uinteger"] = 0
        self._bitgen.state = st
        return self._gen


def path_rng(master_seed: int, scenario_id: str, path_index: int) -> np.random.Generator:
    """One-shot variant of :class:`PathStreams` for tests and spot checks."""
    bitgen = np.random.Philox(key=stream_key(master_seed, scenario_id))
    bitgen.advance(path_index * PATH_STRIDE)
    return np.random.Generator(bitgen)
