"""Bootstrap resampling of recruitment forests.

Two methods:

* ``neighbourhood`` -- draw n_r individuals with replacement from the
  selection pool (the recruiters by default) and take the multiset of the
  drawn individuals' recruits as the bootstrap sample.
* ``tree`` -- hierarchical resampling: draw the seeds (with replacement by
  default), then for every drawn occurrence of a participant draw k times
  with replacement from its k recruits, recursing down the tree. The
  bootstrap sample is the multiset of all drawn occurrences, seeds
  included.

Both methods are implemented through per-entry draw counts. For the tree
method the counts propagate level by level: m occurrences of a recruiter
with k recruits spawn m*k independent uniform child draws, i.e. the child
counts are multinomial(m*k, uniform) -- the same random object as the
recursive description, grouped by node.

Multiplicities are accumulated rather than materializing duplicate
records. Replicate b of a bootstrap distribution draws from the derived
substream (root, b), so the replicate loop can run in any order or split
across workers without changing the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .estimators import PopulationTotals, WeightedSample, ipw_estimate, sample_mean, vh_estimate
from .rng import RngStream, generator
from .simulate import RecruitmentForest

__all__ = [
    "BootstrapConfig",
    "BootstrapDistribution",
    "MonteCarloMoments",
    "neighbourhood_resample",
    "tree_resample",
    "bootstrap_distribution",
    "bootstrap_distributions",
    "percentile_ci",
    "bootstrap_variance",
    "mc_bootstrap_moments",
]

METHODS = ("neighbourhood", "tree")
POOLS = ("recruiters_only", "all_participants")
SEED_MODES = ("with_replacement", "without_replacement")
ESTIMATORS = ("sample_mean", "vh", "ipw")


@dataclass(frozen=True)
class BootstrapConfig:
    method: str
    n_replicates: int
    selection_pool: str = "recruiters_only"
    tree_seed_mode: str = "with_replacement"
    estimator: str = "vh"

    def __post_init__(self):
        if self.method not in METHODS:
            raise DataError(f"unknown bootstrap method: {self.method!r}")
        if self.selection_pool not in POOLS:
            raise DataError(f"unknown selection pool: {self.selection_pool!r}")
        if self.tree_seed_mode not in SEED_MODES:
            raise DataError(f"unknown tree seed mode: {self.tree_seed_mode!r}")
        if self.estimator not in ESTIMATORS:
            raise DataError(f"unknown estimator: {self.estimator!r}")
        if self.n_replicates < 2:
            raise DataError("need at least 2 bootstrap replicates")


@dataclass
class BootstrapDistribution:
    """B bootstrap estimates (in replicate order) plus the original-sample estimate."""

    estimates: np.ndarray
    estimator_on_original: float

    def __post_init__(self):
        self.estimates = np.asarray(self.estimates, dtype=np.float64)

    @property
    def n_replicates(self) -> int:
        return int(self.estimates.shape[0])


def _as_z(forest: RecruitmentForest, z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (forest.n,):
        raise DataError(f"z must have one value per forest entry ({forest.n}), got {z.shape}")
    if z.size and not np.isin(z, (0.0, 1.0)).all():
        raise DataError("z values must be 0 or 1")
    return z


def _nb_pool(forest: RecruitmentForest, pool: str) -> tuple[np.ndarray, int]:
    """(pool entry indices, n_r). n_r is the number of draws for either pool."""
    recruiters = forest.recruiter_entries()
    n_r = int(recruiters.size)
    if n_r == 0:
        raise DataError("degenerate forest: no recruiters to resample")
    if pool == "recruiters_only":
        return recruiters, n_r
    return np.arange(forest.n, dtype=np.int64), n_r


def _nb_counts_batch(
    forest: RecruitmentForest, pool: str, rng: RngStream, size: int
) -> tuple[np.ndarray, np.ndarray]:
    """Draw counts over the pool for ``size`` replicates, shape (size, p).

    Replicates whose drawn individuals have no recruits at all (possible
    only with the all_participants pool) are redrawn, i.e. the bootstrap
    law is conditioned on producing at least one observation.
    """
    pool_entries, n_r = _nb_pool(forest, pool)
    p = int(pool_entries.size)
    kids = forest.out_degree()[pool_entries]
    draws = rng.integers(0, p, size=(size, n_r))
    offsets = np.arange(size, dtype=np.int64)[:, None] * p
    counts = np.bincount((draws + offsets).ravel(), minlength=size * p).reshape(size, p)
    if pool == "all_participants":
        empty = counts @ kids == 0
        while empty.any():
            redraw = rng.integers(0, p, size=(int(empty.sum()), n_r))
            off = np.arange(redraw.shape[0], dtype=np.int64)[:, None] * p
            counts[empty] = np.bincount(
                (redraw + off).ravel(), minlength=redraw.shape[0] * p
            ).reshape(-1, p)
            empty = counts @ kids == 0
    return counts.astype(np.int64), pool_entries


def _nb_counts_one(forest: RecruitmentForest, pool: str, rng: RngStream) -> tuple[np.ndarray, np.ndarray]:
    pool_entries, n_r = _nb_pool(forest, pool)
    p = int(pool_entries.size)
    kids = forest.out_degree()[pool_entries]
    while True:
        counts = np.bincount(rng.integers(0, p, size=n_r), minlength=p)
        if int(counts @ kids) > 0:
            return counts.astype(np.int64), pool_entries


def neighbourhood_resample(
    forest: RecruitmentForest, z, rng: RngStream, pool: str = "recruiters_only"
) -> WeightedSample:
    """One neighbourhood bootstrap sample: the recruits of n_r drawn individuals.

    A recruit's multiplicity is the number of times its recruiter was
    drawn. Seeds are nobody's recruit and therefore never appear in the
    returned sample.
    """
    z = _as_z(forest, z)
    counts, pool_entries = _nb_counts_one(forest, pool, rng)
    indptr, children = forest.children_csr()
    mult = np.zeros(forest.n, dtype=np.int64)
    for e, c in zip(pool_entries, counts):
        if c > 0:
            mult[children[indptr[e] : indptr[e + 1]]] = c
    picked = np.flatnonzero(mult)
    return WeightedSample(z[picked], forest.degree[picked], mult[picked])


def _tree_plan(forest: RecruitmentForest):
    """Internal-node traversal plan: [(entry, child slice, uniform pvals)] in BFS order."""
    indptr, children = forest.children_csr()
    plan = []
    pvals_cache: dict[int, np.ndarray] = {}
    for u in forest.bfs_order():
        lo, hi = int(indptr[u]), int(indptr[u + 1])
        k = hi - lo
        if k == 0:
            continue
        if k not in pvals_cache:
            pvals_cache[k] = np.full(k, 1.0 / k)
        plan.append((int(u), children[lo:hi], pvals_cache[k]))
    return plan


def _tree_counts_batch(
    forest: RecruitmentForest, seed_mode: str, rng: RngStream, size: int
) -> np.ndarray:
    """Occurrence counts per entry for ``size`` tree-bootstrap replicates, shape (size, n)."""
    seeds = forest.seed_entries()
    s = int(seeds.size)
    counts = np.zeros((size, forest.n), dtype=np.int64)
    if seed_mode == "with_replacement":
        counts[:, seeds] = rng.multinomial(s, np.full(s, 1.0 / s), size=size)
    else:
        counts[:, seeds] = 1
    for u, kid, pvals in _tree_plan(forest):
        counts[:, kid] = rng.multinomial(counts[:, u] * kid.size, pvals)
    return counts


def _tree_counts_one(
    forest: RecruitmentForest, seed_mode: str, rng: RngStream, plan=None
) -> np.ndarray:
    seeds = forest.seed_entries()
    s = int(seeds.size)
    counts = np.zeros(forest.n, dtype=np.int64)
    if seed_mode == "with_replacement":
        counts[seeds] = rng.multinomial(s, np.full(s, 1.0 / s))
    else:
        counts[seeds] = 1
    for u, kid, pvals in plan if plan is not None else _tree_plan(forest):
        m = int(counts[u])
        if m == 0:
            continue
        counts[kid] = rng.multinomial(m * kid.size, pvals)
    return counts


def tree_resample(
    forest: RecruitmentForest, z, rng: RngStream, seed_mode: str = "with_replacement"
) -> WeightedSample:
    """One tree bootstrap sample: every drawn occurrence, seeds included."""
    z = _as_z(forest, z)
    if forest.n == 0:
        raise DataError("empty forest")
    counts = _tree_counts_one(forest, seed_mode, rng)
    picked = np.flatnonzero(counts)
    return WeightedSample(z[picked], forest.degree[picked], counts[picked])


@dataclass
class _EstimatorTerms:
    """Per-unit numerator/denominator term arrays so an estimate is
    (counts @ num) / ((counts @ den) * scale)."""

    num: np.ndarray
    den: np.ndarray
    scale: float


def _entry_terms(forest: RecruitmentForest, z: np.ndarray, estimator: str, totals) -> _EstimatorTerms:
    d = forest.degree.astype(np.float64)
    if estimator == "sample_mean":
        return _EstimatorTerms(z.copy(), np.ones(forest.n), 1.0)
    if estimator == "vh":
        g = int(np.gcd.reduce(forest.degree)) if forest.n else 1
        dn = (forest.degree // g).astype(np.float64)
        return _EstimatorTerms(z / dn, 1.0 / dn, 1.0)
    if estimator == "ipw":
        if totals is None:
            raise DataError("ipw estimator requires population totals")
        return _EstimatorTerms(z * (float(totals.total_degree) / d), np.ones(forest.n), float(totals.n_population))
    raise DataError(f"unknown estimator: {estimator!r}")


def _pool_terms(terms: _EstimatorTerms, forest: RecruitmentForest, pool_entries: np.ndarray) -> _EstimatorTerms:
    """Aggregate entry terms over each pool member's recruits."""
    indptr, children = forest.children_csr()
    num = np.zeros(pool_entries.size)
    den = np.zeros(pool_entries.size)
    for j, e in enumerate(pool_entries):
        kid = children[indptr[e] : indptr[e + 1]]
        num[j] = terms.num[kid].sum()
        den[j] = terms.den[kid].sum()
    return _EstimatorTerms(num, den, terms.scale)


def _estimate_from_counts(counts: np.ndarray, terms: _EstimatorTerms) -> np.ndarray | float:
    num = counts @ terms.num
    den = (counts @ terms.den) * terms.scale
    return num / den


def _point_estimate(forest: RecruitmentForest, z: np.ndarray, estimator: str, totals) -> float:
    ws = WeightedSample(z, forest.degree, np.ones(forest.n, dtype=np.int64))
    if estimator == "sample_mean":
        return sample_mean(ws)
    if estimator == "vh":
        return vh_estimate(ws)
    return ipw_estimate(ws, totals)


def bootstrap_distributions(
    forest: RecruitmentForest,
    cfg: BootstrapConfig,
    columns: dict[str, np.ndarray],
    totals: PopulationTotals | None = None,
    root: int | np.random.SeedSequence = 0,
) -> dict[str, BootstrapDistribution]:
    """Bootstrap distributions for several attribute columns at once.

    One resample per replicate serves every column: the drawn node multiset
    is attribute-agnostic. Replicate b draws from substream (root, b).
    """
    if cfg.estimator == "ipw" and totals is None:
        raise DataError("ipw estimator requires population totals")
    cols = {name: _as_z(forest, zc) for name, zc in columns.items()}
    terms = {name: _entry_terms(forest, zc, cfg.estimator, totals) for name, zc in cols.items()}
    B = cfg.n_replicates
    est = {name: np.empty(B) for name in cols}
    if cfg.method == "neighbourhood":
        pool_entries, n_r = _nb_pool(forest, cfg.selection_pool)
        terms = {name: _pool_terms(t, forest, pool_entries) for name, t in terms.items()}
        p = int(pool_entries.size)
        kids = forest.out_degree()[pool_entries]
        need_redraw = cfg.selection_pool == "all_participants"
        for b in range(B):
            rng = generator(root, b)
            while True:
                counts = np.bincount(rng.integers(0, p, size=n_r), minlength=p)
                if not need_redraw or int(counts @ kids) > 0:
                    break
            for name, t in terms.items():
                est[name][b] = _estimate_from_counts(counts, t)
    else:
        plan = _tree_plan(forest)
        for b in range(B):
            rng = generator(root, b)
            counts = _tree_counts_one(forest, cfg.tree_seed_mode, rng, plan)
            for name, t in terms.items():
                est[name][b] = _estimate_from_counts(counts, t)
    return {
        name: BootstrapDistribution(est[name], _point_estimate(forest, cols[name], cfg.estimator, totals))
        for name in cols
    }


def bootstrap_distribution(
    forest: RecruitmentForest,
    cfg: BootstrapConfig,
    z,
    totals: PopulationTotals | None = None,
    root: int | np.random.SeedSequence = 0,
) -> BootstrapDistribution:
    """Bootstrap distribution of the configured estimator for one attribute."""
    return bootstrap_distributions(forest, cfg, {"z": z}, totals, root)["z"]


def percentile_ci(dist: BootstrapDistribution, level: float) -> tuple[float, float]:
    """Nearest-rank percentile interval at the given coverage level.

    rank = ceil(q * B) clamped to [1, B]; the ceiling is guarded against
    float noise in q * B (e.g. 0.9 * 100 slightly above 90) so ranks match
    the exact-rational definition.
    """
    if not (0.0 < level < 1.0):
        raise DataError(f"confidence level must be in (0, 1), got {level!r}")
    B = dist.n_replicates
    if B < 2:
        raise DataError("need at least 2 bootstrap estimates")
    alpha = 1.0 - level
    ordered = np.sort(dist.estimates)

    def rank(q: float) -> int:
        r = math.ceil(q * B - 1e-9)
        return min(max(r, 1), B)

    return float(ordered[rank(alpha / 2.0) - 1]), float(ordered[rank(1.0 - alpha / 2.0) - 1])


def bootstrap_variance(dist: BootstrapDistribution) -> float:
    """Unbiased sample variance (divisor B-1) of the bootstrap estimates."""
    B = dist.n_replicates
    if B < 2:
        raise DataError("need at least 2 bootstrap estimates")
    mean = math.fsum(dist.estimates) / B
    return math.fsum((e - mean) ** 2 for e in dist.estimates) / (B - 1)


@dataclass(frozen=True)
class MonteCarloMoments:
    """Monte Carlo estimate of bootstrap mean/variance with standard errors."""

    mean: float
    variance: float
    se_mean: float
    se_variance: float
    n_replicates: int


def mc_bootstrap_moments(
    forest: RecruitmentForest,
    z,
    method: str,
    estimator: str,
    B: int,
    rng: RngStream,
    pool: str = "recruiters_only",
    seed_mode: str = "with_replacement",
    totals: PopulationTotals | None = None,
) -> MonteCarloMoments:
    """Vectorized Monte Carlo moments of a bootstrap estimator.

    Draws all B replicates from the single supplied stream (batched, so
    large B stays cheap) and evaluates the same estimator formulas through
    matrix products. Intended for cross-checking against exhaustive
    enumeration and as the fallback its budget error advises.
    """
    z = _as_z(forest, z)
    terms = _entry_terms(forest, z, estimator, totals)
    if method == "neighbourhood":
        counts, pool_entries = _nb_counts_batch(forest, pool, rng, B)
        terms = _pool_terms(terms, forest, pool_entries)
    elif method == "tree":
        counts = _tree_counts_batch(forest, seed_mode, rng, B)
    else:
        raise DataError(f"unknown bootstrap method: {method!r}")
    est = np.asarray(_estimate_from_counts(counts, terms), dtype=np.float64)
    mean = float(est.mean())
    centered = est - mean
    variance = float((centered @ centered) / (B - 1))
    m4 = float(np.mean(centered**4))
    se_mean = math.sqrt(variance / B)
    se_variance = math.sqrt(max(m4 - variance**2, 0.0) / B)
    return MonteCarloMoments(mean, variance, se_mean, se_variance, B)
