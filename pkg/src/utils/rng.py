"""
Seeded random streams for reproducible simulations.

Every trial draws from its own generator derived from (master seed, trial
index, attempt), so a trial's scene does not depend on which worker runs it
or in what order.
"""

from typing import Optional

import numpy as np


class TrialStreams:
    """Spawns independent per-trial generators from one master seed"""

    def __init__(self, seed: Optional[int] = None):
        if seed is None:
            seed = int(np.random.SeedSequence().entropy % (2**63))
        self._seed = int(seed)

    @property
    def seed(self) -> int:
        """Master seed"""
        return self._seed

    def stream(self, trial: int, attempt: int = 0) -> np.random.Generator:
        """Generator for one trial (and one rejection-sampling attempt)"""
        sequence = np.random.SeedSequence(entropy=self._seed, spawn_key=(int(trial), int(attempt)))
        return np.random.Generator(np.random.PCG64(sequence))
