"""Fairness and utility metrics over realized group samples, plus the Monte
Carlo violation-probability estimator.

All position-weighted metrics are evaluated at the checkpoint set
K = {5, 10, 15, ...} capped at n, weighted by 1/log k, and normalized by the
attainable extreme so values land in [0, 1] with 1 most fair.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import GroupSample, Instance, Ranking, utility, xlog
from .errors import DimensionMismatch, EmptyCheckpointSet, ValidationError, ZeroGroupSize
from .lpsolve import unconstrained_optimal
from .rng import SeedLike, make_rng


def checkpoints(n: int) -> np.ndarray:
    """K = {5, 10, ...} intersected with [n]; requires n >= 5."""
    if n < 5:
        raise EmptyCheckpointSet("position-weighted metrics need n >= 5")
    return np.arange(5, n + 1, 5)


@dataclass(frozen=True)
class MetricReport:
    rd: float
    sl: float
    prop_rd: Optional[float]
    ndcg: Optional[float]
    raw_utility: float
    checkpoints: tuple[int, ...]

    def __post_init__(self):
        for name in ("rd", "sl", "prop_rd", "ndcg"):
            val = getattr(self, name)
            if val is not None and not (-1e-9 <= val <= 1 + 1e-9):
                raise ValidationError(f"{name}={val} outside [0, 1]")

    def to_dict(self) -> dict:
        return {
            "rd": self.rd,
            "sl": self.sl,
            "prop_rd": self.prop_rd,
            "ndcg": self.ndcg,
            "raw_utility": self.raw_utility,
            "checkpoints": list(self.checkpoints),
        }


def _counts(r: Ranking, truth: GroupSample, ks: np.ndarray) -> np.ndarray:
    """|K| x p group counts at each checkpoint."""
    if truth.m != r.m:
        raise DimensionMismatch("group sample does not cover the ranked items")
    return r.prefix_counts(truth)[ks - 1, :]


def weighted_rd(r: Ranking, truth: GroupSample, n: int | None = None) -> float:
    """1 - normalized log-discounted maximum pairwise prefix-count gap.

    Normalizer Z = sum_k k / log k, the gap attained when one group fills
    every checkpoint prefix.
    """
    n = n or r.n
    ks = checkpoints(n)
    counts = _counts(r, truth, ks)
    gaps = counts.max(axis=1) - counts.min(axis=1)
    Z = float((ks / xlog(ks)).sum())
    return float(1.0 - (gaps / xlog(ks)).sum() / Z)


def weighted_sl(r: Ranking, truth: GroupSample, n: int | None = None) -> float:
    """Normalized log-discounted minimum pairwise prefix-count ratio (zero
    when some group is absent, one when all checkpoint counts are equal)."""
    n = n or r.n
    ks = checkpoints(n)
    counts = _counts(r, truth, ks)
    hi = counts.max(axis=1)
    lo = counts.min(axis=1)
    ratios = np.where(hi > 0, lo / np.maximum(hi, 1e-300), 1.0)
    Z = float((1.0 / xlog(ks)).sum())
    return float((ratios / xlog(ks)).sum() / Z)


def prop_rd(
    r: Ranking, truth: GroupSample, group_sizes, n: int | None = None
) -> float:
    """Risk difference with counts rescaled by n / |G_l|, so exact
    proportionality scores one.  Normalized by the maximum attainable
    rescaled gap (the smallest group filling each checkpoint)."""
    n = n or r.n
    sizes = np.asarray(group_sizes, dtype=float)
    if (sizes <= 0).any():
        raise ZeroGroupSize("group sizes must be positive")
    ks = checkpoints(n)
    counts = _counts(r, truth, ks)
    scaled = counts * (n / sizes)[None, :]
    gaps = scaled.max(axis=1) - scaled.min(axis=1)
    worst = n * np.minimum(ks, sizes.min()) / sizes.min()
    Z = float((worst / xlog(ks)).sum())
    return float(1.0 - (gaps / xlog(ks)).sum() / Z)


def ndcg(r: Ranking, inst: Instance) -> float:
    """Utility of r divided by the maximum achievable utility."""
    best = unconstrained_optimal(inst)[1]
    if best <= 0:
        return 1.0
    return float(utility(r, inst.W) / best)


def report(
    r: Ranking,
    inst: Instance,
    truth: GroupSample,
    group_sizes=None,
) -> MetricReport:
    """All metrics at once; prop_rd only when group sizes are available
    (defaulting to the realized sizes in the truth sample)."""
    sizes = (
        np.asarray(group_sizes, dtype=float)
        if group_sizes is not None
        else truth.membership.sum(axis=0).astype(float)
    )
    pr = prop_rd(r, truth, sizes) if (sizes > 0).all() else None
    return MetricReport(
        rd=weighted_rd(r, truth),
        sl=weighted_sl(r, truth),
        prop_rd=pr,
        ndcg=ndcg(r, inst),
        raw_utility=utility(r, inst.W),
        checkpoints=tuple(int(k) for k in checkpoints(r.n)),
    )


@dataclass(frozen=True)
class ViolationProbe:
    """Monte Carlo estimate of the probability that some prefix bound is
    exceeded beyond its (1 + epsilon_k) relaxation."""

    epsilon: np.ndarray
    trials: int
    delta_hat: float
    std_error: float
    worst_position: tuple[int, int]
    worst_frequency: float

    def to_dict(self) -> dict:
        return {
            "epsilon": np.asarray(self.epsilon).tolist(),
            "trials": self.trials,
            "delta_hat": self.delta_hat,
            "std_error": self.std_error,
            "worst_position": [self.worst_position[0] + 1, self.worst_position[1] + 1],
            "worst_frequency": self.worst_frequency,
        }


def violation_probe(
    r: Ranking,
    P: np.ndarray,
    U: np.ndarray,
    epsilon: np.ndarray | float,
    trials: int,
    seed: SeedLike,
    structure: str = "disjoint",
    v: np.ndarray | None = None,
) -> ViolationProbe:
    """Estimate Pr[exists (k, l): Z_#(r, l, k) > U[k, l] (1 + eps_k)] over
    sampled group memberships.

    The discounted variant weights each position j by v[j].  Standard error
    is the binomial estimate sqrt(d (1 - d) / trials).
    """
    from .noiselab import sample_groups

    if trials < 100:
        raise ValidationError("need at least 100 trials")
    n = r.n
    U = np.asarray(U, dtype=float)[:n, :]
    eps = np.broadcast_to(np.asarray(epsilon, dtype=float), (n,))
    limits = U * (1.0 + eps[:, None])
    weights = np.ones(n) if v is None else np.asarray(v, dtype=float)[:n]
    rng = make_rng(seed)
    P = np.asarray(P, dtype=float)
    slots = list(r.slots)
    hits = 0
    per_position = np.zeros(U.shape)
    batch = max(1, min(trials, 200_000 // max(1, r.m)))
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        mem = np.stack(
            [sample_groups(P, structure, rng).membership[slots, :] for _ in range(b)]
        ).astype(float)  # (b, n, p)
        zz = np.cumsum(mem * weights[None, :, None], axis=1)
        viol = zz > limits[None, :, :] + 1e-9
        hits += int(viol.any(axis=(1, 2)).sum())
        per_position += viol.sum(axis=0)
        done += b
    delta_hat = hits / trials
    per_position /= trials
    k, l = np.unravel_index(int(per_position.argmax()), per_position.shape)
    return ViolationProbe(
        epsilon=np.asarray(eps),
        trials=trials,
        delta_hat=float(delta_hat),
        std_error=float(np.sqrt(delta_hat * (1 - delta_hat) / trials)),
        worst_position=(int(k), int(l)),
        worst_frequency=float(per_position[k, l]),
    )
