"""Counter-based sampling: each sample's stream depends only on (seed, check id, index).

Sample ``i`` of a check is the same no matter how many samples are drawn or
in which order they are evaluated, so nested sample sets and parallel runs
reproduce exactly.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .geometry import Chart


class Sampler:
    def __init__(self, seed: int):
        self.seed = int(seed)

    def key(self, check_id: str) -> int:
        digest = hashlib.sha256(f"{self.seed}\x00{check_id}".encode()).digest()
        return int.from_bytes(digest[:16], "little")

    def rng(self, check_id: str, index: int) -> np.random.Generator:
        # The high counter word carries the sample index, leaving 2**128 blocks per sample.
        return np.random.Generator(np.random.Philox(key=self.key(check_id), counter=int(index) << 128))

    def point(self, chart: Chart, check_id: str, index: int) -> np.ndarray:
        return chart.sample_point(self.rng(check_id, index))

    def points(self, chart: Chart, check_id: str, count: int) -> list[np.ndarray]:
        return [self.point(chart, check_id, i) for i in range(count)]
