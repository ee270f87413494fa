"""
QSS Collusion Lab - Randomness Service
Counter-based splitting of one master seed into independent sub-streams
"""
from typing import Dict, Tuple, Union

import numpy as np

from qss.exceptions import InvalidArgumentError
from qss.models.protocol import PartyId

_MASK_64 = (1 << 64) - 1

_PARTY_CODES = {party: code for code, party in enumerate(PartyId)}

# Purpose codes for the per-party streams
_PURPOSES = {
    "labels": 0,
    "secret": 1,
    "angles": 2,
    "positions": 3,
    "basis": 4,
    "measure": 5,
    "publish-order": 6,
}

StreamKey = Tuple[int, ...]


def derive_trial_seed(master_seed: int, trial: int) -> int:
    """Per-trial 64-bit seed from (master seed, trial index); stable under trial-count changes."""
    sequence = np.random.SeedSequence(entropy=master_seed & _MASK_64, spawn_key=(trial,))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


class RandomStreams:
    """
    Independent generators keyed by (party, purpose[, position]).

    Asking twice for the same key returns the same generator, which then
    continues where it left off.
    """

    def __init__(self, seed: int):
        self.seed = seed & _MASK_64
        self._streams: Dict[StreamKey, np.random.Generator] = {}

    def stream(self, party: PartyId, purpose: str, position: Union[int, None] = None) -> np.random.Generator:
        if purpose not in _PURPOSES:
            raise InvalidArgumentError(f"Unknown random stream purpose {purpose!r}")
        key: StreamKey = (_PARTY_CODES[party], _PURPOSES[purpose])
        if position is not None:
            key += (position,)
        generator = self._streams.get(key)
        if generator is None:
            sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=key)
            generator = np.random.Generator(np.random.PCG64(sequence))
            self._streams[key] = generator
        return generator
