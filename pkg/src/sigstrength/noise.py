"""Zero-mean symmetric noise models.

The quantity of interest everywhere is the two-sided band probability
N(x) = Pr[|n| <= x] and its inverse, the smallest x >= 0 reaching a given
probability. For the gaussian model both come from library-quality error
functions; the empirical model uses order statistics of |samples| with
linear interpolation between them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special


@dataclass(frozen=True)
class NoiseModel:
    """kind is one of 'gaussian', 'empirical', 'zero'.

    gaussian uses sigma; empirical uses the raw sample set (treated as a
    symmetric zero-mean distribution). The algorithms in security assume a
    gaussian fit, so empirical models are an extension and are flagged as
    such in reports.
    """

    kind: str
    sigma: float = 0.0
    samples: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "empirical", "zero"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.kind == "empirical":
            if self.samples is None or len(self.samples) == 0:
                raise ValueError("empirical noise model requires samples")
            samples = np.asarray(self.samples, dtype=np.float64).copy()
            samples.setflags(write=False)
            object.__setattr__(self, "samples", samples)
            object.__setattr__(self, "sigma", float(np.std(samples)))

    @classmethod
    def gaussian(cls, sigma: float) -> "NoiseModel":
        return cls("gaussian", sigma=float(sigma))

    @classmethod
    def zero(cls) -> "NoiseModel":
        return cls("zero")

    @classmethod
    def empirical(cls, samples) -> "NoiseModel":
        return cls("empirical", samples=np.asarray(samples, dtype=np.float64))

    def cdf_band(self, x: float) -> float:
        """Probability that |n| <= x."""
        if x < 0:
            raise ValueError("cdf_band requires x >= 0")
        if self.kind == "zero":
            return 1.0
        if self.kind == "gaussian":
            if self.sigma == 0:
                return 1.0
            return float(special.erf(x / (self.sigma * np.sqrt(2.0))))
        return float(np.mean(np.abs(self.samples) <= x))

    def inverse(self, eps: float) -> float:
        """Smallest x >= 0 with cdf_band(x) = eps."""
        if not 0 <= eps < 1:
            raise ValueError("inverse requires 0 <= eps < 1")
        if self.kind == "zero" or (self.kind == "gaussian" and self.sigma == 0):
            return 0.0
        if self.kind == "gaussian":
            # 2*Phi(x/sigma) - 1 = eps  =>  x = sigma * ndtri((1+eps)/2)
            return float(self.sigma * special.ndtri((1.0 + eps) / 2.0))
        return float(np.quantile(np.abs(self.samples), eps, method="linear"))

    def ppf(self, p: float) -> float:
        """Percentile point function for p >= 0.5.

        Satisfies inverse(eps) == ppf((1 + eps) / 2); p < 0.5 would be
        negative under the symmetric zero-mean convention and is rejected.
        """
        if not 0.5 <= p < 1:
            raise ValueError("ppf requires 0.5 <= p < 1")
        return self.inverse(2.0 * p - 1.0)

    def draw(self, count: int, seed) -> np.ndarray:
        """Deterministic noise sequence of the given length for a seed."""
        if count < 1:
            raise ValueError("count must be >= 1")
        rng = np.random.default_rng(seed)
        if self.kind == "zero":
            return np.zeros(count)
        if self.kind == "gaussian":
            return rng.normal(0.0, self.sigma, size=count)
        return rng.choice(self.samples, size=count, replace=True)
