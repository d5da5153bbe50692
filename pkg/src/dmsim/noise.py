"""Seeded measurement-noise model shared by the moment and camera pipelines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NoiseModel:
    """Multiplicative Gaussian error per measurement, averaged over ``trials``.

    ``relative_sigma`` is the one-shot relative error of an expectation value
    (laser-intensity drift is frame-global, so one factor per frame).
    """

    relative_sigma: float = 0.05
    trials: int = 10
    seed: int = 0
    background_level: float = 0.0

    def __post_init__(self):
        if self.relative_sigma < 0:
            raise ValueError("relative_sigma must be >= 0")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")

    def rng(self, *stream: int) -> np.random.Generator:
        """Independent generator for a sub-stream, e.g. (point index, element index)."""
        return np.random.default_rng([self.seed % 2**64, *stream])

    def frame_factors(self, rng: np.random.Generator, size=None) -> np.ndarray:
        shape = (self.trials,) if size is None else (self.trials, *np.atleast_1d(size))
        return 1 + self.relative_sigma * rng.standard_normal(shape)


def perturb(values, noise: NoiseModel | None, rng: np.random.Generator | None = None) -> np.ndarray:
    """Average of ``noise.trials`` independently perturbed copies of ``values``."""
    values = np.asarray(values, dtype=float)
    if noise is None:
        return values
    rng = noise.rng() if rng is None else rng
    factors = noise.frame_factors(rng, values.shape)
    return (factors * values).mean(axis=0)
