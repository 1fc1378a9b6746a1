"""Design-weighted prevalence estimators over weighted observation multisets.

Every estimator reduces to a ratio of exact integer sums (weights are put
over a common denominator first), so the returned float is the correctly
rounded value of the exact rational estimate. Consequences relied on
elsewhere: results are independent of observation order, expanding a
multiplicity-m observation into m unit copies changes nothing, rescaling
all degrees by a constant leaves the degree-weighted estimate bit-identical,
and equal-degree samples collapse exactly to the plain sample mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError

__all__ = [
    "WeightedSample",
    "PopulationTotals",
    "sample_mean",
    "ipw_estimate",
    "vh_estimate",
]


@dataclass
class WeightedSample:
    """Multiset of (z, degree) observations with integer multiplicities."""

    z: np.ndarray
    degree: np.ndarray
    multiplicity: np.ndarray

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=np.float64)
        self.degree = np.asarray(self.degree, dtype=np.int64)
        self.multiplicity = np.asarray(self.multiplicity, dtype=np.int64)
        if not (self.z.shape == self.degree.shape == self.multiplicity.shape):
            raise DataError("z, degree, multiplicity must have equal length")
        if self.z.size:
            if not np.isin(self.z, (0.0, 1.0)).all():
                raise DataError("z values must be 0 or 1")
            if int(self.degree.min()) < 1:
                raise DataError("degrees must be >= 1")
            if int(self.multiplicity.min()) < 1:
                raise DataError("multiplicities must be >= 1")

    @classmethod
    def from_pairs(cls, pairs) -> "WeightedSample":
        """Build from (z, degree) or (z, degree, multiplicity) tuples."""
        rows = [(p[0], p[1], p[2] if len(p) > 2 else 1) for p in pairs]
        z, d, m = zip(*rows) if rows else ((), (), ())
        return cls(np.array(z), np.array(d), np.array(m))

    @property
    def n_effective(self) -> int:
        return int(self.multiplicity.sum())


@dataclass(frozen=True)
class PopulationTotals:
    """Known population size and total degree (the weighting denominators)."""

    n_population: int
    total_degree: int

    def __post_init__(self):
        if self.n_population < 1:
            raise DataError("population size must be positive")
        if self.total_degree < self.n_population:
            raise DataError("total degree below population size (needs all degrees >= 1)")


def _require_nonempty(ws: WeightedSample) -> None:
    if ws.z.size == 0:
        raise DataError("empty sample")


def _inverse_weights(degrees: np.ndarray) -> list[int]:
    """Integer weights proportional to 1/d: lcm(d) // d per observation."""
    distinct = sorted(set(int(d) for d in degrees))
    lcm = math.lcm(*distinct)
    per_value = {d: lcm // d for d in distinct}
    return [per_value[int(d)] for d in degrees]


def sample_mean(ws: WeightedSample) -> float:
    """Multiplicity-weighted mean of z."""
    _require_nonempty(ws)
    zi = ws.z.astype(np.int64)
    num = int((ws.multiplicity * zi).sum())
    return num / ws.n_effective


def ipw_estimate(ws: WeightedSample, totals: PopulationTotals) -> float:
    """Inverse-probability-weighted prevalence.

    Inclusion probability of a node is degree / total_degree; the
    population-size factor normalizes the weighted sum to target the
    population proportion.
    """
    _require_nonempty(ws)
    w = _inverse_weights(ws.degree)
    lcm = w[0] * int(ws.degree[0])
    num = 0
    for zv, m, wi in zip(ws.z, ws.multiplicity, w):
        if zv:
            num += int(m) * wi
    num *= int(totals.total_degree)
    den = lcm * ws.n_effective * int(totals.n_population)
    return num / den


def vh_estimate(ws: WeightedSample) -> float:
    """Inverse-degree-weighted ratio estimate of prevalence.

    Computed in the cancelled ratio form (sum z/d) / (sum 1/d); the
    mean-degree factor of the usual estimated-weight formulation cancels.
    """
    _require_nonempty(ws)
    w = _inverse_weights(ws.degree)
    num = 0
    den = 0
    for zv, m, wi in zip(ws.z, ws.multiplicity, w):
        t = int(m) * wi
        den += t
        if zv:
            num += t
    return num / den
