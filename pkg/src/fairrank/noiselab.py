"""Noise model and instance generators: group sampling, randomized response,
FDR-controlled synthetic data, intersectional products, and the adversarial
and pathological constructions used by the property tests.

Every generator is deterministic given its seed and returns objects that
pass full validation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal, Optional, Sequence

import numpy as np

from .core import GroupSample, Instance, Structure, validate_instance
from .errors import (
    DimensionMismatch,
    EmptyNoisyGroup,
    EtaTooLarge,
    FamilyConditionViolated,
    ValidationError,
)
from .rng import SeedLike, make_rng

# ---------------------------------------------------------------------------
# Group sampling (the noise model itself)
# ---------------------------------------------------------------------------


def sample_groups(P: np.ndarray, structure: Structure, seed: SeedLike) -> GroupSample:
    """Draw group memberships: Pr[item i in group l] = P[i, l], independent
    across items.

    ``disjoint`` draws one categorical label per row; ``independent-marginals``
    draws each membership as an independent Bernoulli.  An explicit joint
    distribution would need more than marginals, so that structure is not
    samplable here.
    """
    P = np.asarray(P, dtype=float)
    rng = make_rng(seed)
    m, p = P.shape
    if structure == "disjoint":
        cum = np.cumsum(P, axis=1)
        cum[:, -1] = np.maximum(cum[:, -1], 1.0)  # guard rounding in the last bin
        u = rng.random(m)
        labels = (u[:, None] >= cum).sum(axis=1)
        return GroupSample.from_labels(labels, p)
    if structure == "independent-marginals":
        draws = rng.random((m, p)) < P
        return GroupSample(draws.astype(np.uint8))
    raise ValidationError(
        f"structure {structure!r} cannot be sampled from marginals alone"
    )


# ---------------------------------------------------------------------------
# Randomized response
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RandomizedResponseParams:
    """Flip probability for two groups, or a row-stochastic per-pair flip
    matrix for more.  flip_matrix[a, b] is the probability that true label a
    is reported as b."""

    eta: float = 0.0
    flip_matrix: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.flip_matrix is None:
            if not (0 <= self.eta < 0.5):
                raise EtaTooLarge("eta must lie in [0, 1/2)")
        else:
            F = np.asarray(self.flip_matrix, dtype=float)
            if F.ndim != 2 or F.shape[0] != F.shape[1]:
                raise DimensionMismatch("flip matrix must be square")
            if (F < 0).any() or np.abs(F.sum(axis=1) - 1).max() > 1e-9:
                raise ValidationError("flip matrix must be row-stochastic")
            object.__setattr__(self, "flip_matrix", F)

    def matrix(self, p: int) -> np.ndarray:
        if self.flip_matrix is not None:
            if self.flip_matrix.shape[0] != p:
                raise DimensionMismatch("flip matrix size disagrees with p")
            return self.flip_matrix
        if p == 2:
            e = self.eta
            return np.array([[1 - e, e], [e, 1 - e]])
        # uniform randomized response: flip to each other label with eta/(p-1)
        e = self.eta
        F = np.full((p, p), e / (p - 1))
        np.fill_diagonal(F, 1 - e)
        return F


def randomized_response(
    truth: GroupSample,
    params: RandomizedResponseParams,
    seed: SeedLike,
    group_sizes: Optional[Sequence[float]] = None,
) -> tuple[GroupSample, np.ndarray]:
    """Flip each item's label independently and derive the posterior
    probability matrix.

    For two groups the posterior for an item reported in N_1 is
    (1 - eta) |G_1| / |N_1| (and symmetrically for N_2).  ``group_sizes``
    substitutes estimates for the true |G_l| (e.g. from
    :func:`estimate_group_size`); entries are clamped into [0, 1] because
    realized noisy-group sizes can make the ratio exceed one.
    """
    labels = truth.labels()
    m, p = truth.m, truth.p
    F = params.matrix(p)
    rng = make_rng(seed)
    u = rng.random(m)
    cum = np.cumsum(F[labels], axis=1)
    noisy_labels = (u[:, None] >= cum).sum(axis=1)
    noisy = GroupSample.from_labels(noisy_labels, p)
    sizes = (
        np.bincount(labels, minlength=p).astype(float)
        if group_sizes is None
        else np.asarray(group_sizes, dtype=float)
    )
    return noisy, posterior_from_noisy(noisy, params, sizes)


def posterior_from_noisy(
    noisy: GroupSample,
    params: RandomizedResponseParams,
    group_sizes: Sequence[float],
) -> np.ndarray:
    """Posterior membership probabilities given reported (noisy) labels and
    (true or estimated) group sizes."""
    labels = noisy.labels()
    m, p = noisy.m, noisy.p
    F = params.matrix(p)
    counts = np.bincount(labels, minlength=p).astype(float)
    if (counts == 0).any():
        raise EmptyNoisyGroup("a noisy group is empty; posterior undefined")
    sizes = np.asarray(group_sizes, dtype=float)
    P_hat = np.zeros((m, p))
    if p == 2 and params.flip_matrix is None:
        # closed form: reported group b keeps mass (1 - eta) |G_b| / |N_b|
        for b in (0, 1):
            idx = labels == b
            own = float(np.clip((1 - params.eta) * sizes[b] / counts[b], 0.0, 1.0))
            P_hat[idx, b] = own
            P_hat[idx, 1 - b] = 1.0 - own
    else:
        # posterior Pr[true = a | noisy = b] = F[a, b] |G_a| / sum_c F[c, b] |G_c|,
        # renormalized so rows stay distributions under estimated sizes
        for b in range(p):
            idx = labels == b
            post = np.clip(F[:, b] * sizes / counts[b], 0.0, None)
            tot = post.sum()
            if tot <= 0:
                raise EmptyNoisyGroup("degenerate posterior for a noisy group")
            P_hat[idx] = post / tot
    return P_hat


def estimate_group_size(size_n1: float, size_n2: float, eta: float) -> float:
    """Estimate of the first group's numerator mass from noisy counts:

        alpha_1 = ((1 - eta) / (1 - 2 eta)) * ((1 - eta) |N_1| - eta |N_2|)

    The inner factor is an unbiased estimate of (1 - 2 eta) |G_1|, so alpha_1
    concentrates around (1 - eta) |G_1| -- exactly the numerator of the
    posterior formula, which is how the varying-noise protocol consumes it.
    """
    if not (0 <= eta < 0.5):
        raise EtaTooLarge("eta must lie in [0, 1/2)")
    return ((1 - eta) / (1 - 2 * eta)) * ((1 - eta) * size_n1 - eta * size_n2)


# ---------------------------------------------------------------------------
# FDR-controlled synthetic generators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FdrSynthSpec:
    """Two-group synthetic data whose imputed attributes have unequal
    false-discovery rates, controlled by the interpolation parameter tau.

    The first component's mean moves from mu1 to shift1 as tau goes 0 -> 1
    and the second from mu2 to shift2 (both shifts are explicit because the
    source construction is stated with two different drift conventions).
    """

    m: int = 500
    n: int = 25
    tau: float = 0.25
    mu1: float = 0.95
    mu2: float = 0.45
    sigma1: float = 0.02
    sigma2: float = 0.1
    weight: float = 0.6
    shift1: float = 1.0
    shift2: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.tau <= 1.0):
            raise ValidationError("tau must lie in [0, 1]")
        if not (0.0 < self.weight < 1.0):
            raise ValidationError("mixture weight must lie in (0, 1)")


def _mixture_p1(spec: FdrSynthSpec, rng: np.random.Generator, m: int) -> np.ndarray:
    tau = spec.tau
    comp1 = rng.random(m) < spec.weight
    mean1 = (1 - tau) * spec.mu1 + tau * spec.shift1
    mean2 = (1 - tau) * spec.mu2 + tau * spec.shift2
    p1 = np.where(
        comp1,
        rng.normal(mean1, (1 - tau) * spec.sigma1, m),
        rng.normal(mean2, (1 - tau) * spec.sigma2, m),
    )
    return np.clip(p1, 0.0, 1.0)


def synth_nonuniform_fdr(spec: FdrSynthSpec, seed: SeedLike) -> Instance:
    """Uniform intrinsic values; P from the tau-interpolated two-component
    Gaussian mixture; ground truth sampled from P."""
    rng = make_rng(seed)
    w = rng.random(spec.m)
    p1 = _mixture_p1(spec, rng, spec.m)
    P = np.column_stack([p1, 1.0 - p1])
    truth = sample_groups(P, "disjoint", rng)
    return Instance.from_values(w, spec.n, P, structure="disjoint", truth=truth)


def impute_most_likely(P: np.ndarray) -> np.ndarray:
    """Labels of the most-likely group per row (ties to the lowest index)."""
    return np.argmax(np.asarray(P, dtype=float), axis=1)


def component_fdr_gap(spec: FdrSynthSpec) -> float:
    """Closed-form FDR gap Delta(tau) when items are attributed to their
    mixture component: the high component errs at rate 1 - mean1 and the low
    one at rate mean2, so Delta = mean2 - (1 - mean1).

    This is the gap the construction is specified by (0.4 at tau = 0, 0 at
    tau = 1 with the default parameters); most-likely imputation measured
    after the fact differs slightly because each Gaussian tail crosses the
    1/2 threshold.
    """
    tau = spec.tau
    mean1 = (1 - tau) * spec.mu1 + tau * spec.shift1
    mean2 = (1 - tau) * spec.mu2 + tau * spec.shift2
    return float(np.clip(mean2, 0, 1) - (1 - np.clip(mean1, 0, 1)))


def expected_bayes_fdr(P: np.ndarray) -> np.ndarray:
    """Per-group expected false-discovery rate of most-likely imputation
    when the truth is drawn from P itself: mean of (1 - P[i, l]) over items
    imputed to l.  Groups with no imputed member get NaN."""
    P = np.asarray(P, dtype=float)
    labels = impute_most_likely(P)
    p = P.shape[1]
    out = np.full(p, np.nan)
    for l in range(p):
        idx = labels == l
        if idx.any():
            out[l] = float((1.0 - P[idx, l]).mean())
    return out


def measured_fdr(P: np.ndarray, truth: GroupSample) -> np.ndarray:
    """Empirical per-group FDR of most-likely imputation against a realized
    group sample."""
    labels = impute_most_likely(P)
    true_labels = truth.labels()
    p = P.shape[1]
    out = np.full(p, np.nan)
    for l in range(p):
        idx = labels == l
        if idx.any():
            out[l] = float((true_labels[idx] != l).mean())
    return out


def calibrate_tau(
    target_gap: float,
    spec: FdrSynthSpec | None = None,
    tol: float = 1e-6,
) -> float:
    """Bisect tau so the component FDR gap Delta(tau) hits ``target_gap``.
    Delta decreases from 0.4 at tau = 0 to 0 at tau = 1 with the default
    parameters."""
    base = spec or FdrSynthSpec()
    lo, hi = 0.0, 1.0
    if target_gap > component_fdr_gap(replace(base, tau=0.0)):
        return 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if component_fdr_gap(replace(base, tau=mid)) > target_gap:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def synth_multigroup(
    m: int,
    p: int,
    n: int = 25,
    fdr_low: float = 0.10,
    fdr_high: float = 0.40,
    seed: SeedLike = 0,
) -> Instance:
    """p equal-size planted groups whose imputation FDRs are spread at equal
    intervals over [fdr_low, fdr_high].

    Item i of planted group l gets P[i, l] = q drawn from the tau_l-blended
    Gaussian and P[i, z] = 1 - q for one uniformly random other group z, so
    every row has at most two nonzeros and sums to one.
    """
    if not (4 <= p <= 10):
        raise ValidationError("the multi-group construction is defined for p in 4..10")
    mu1, mu2 = 0.95, 0.55
    s1, s2 = 0.02, 0.10
    rng = make_rng(seed)
    targets = fdr_low + (np.arange(p) / (p - 1)) * (fdr_high - fdr_low)

    def build_P(taus: np.ndarray, size: int, gen: np.random.Generator) -> np.ndarray:
        planted = np.arange(size) % p
        tau_i = taus[planted]
        q = gen.normal((1 - tau_i) * mu1 + tau_i * mu2, (1 - tau_i) * s1 + tau_i * s2)
        q = np.clip(q, 0.0, 1.0)
        others = gen.integers(0, p - 1, size=size)
        z = np.where(others >= planted, others + 1, others)
        P = np.zeros((size, p))
        P[np.arange(size), planted] = q
        P[np.arange(size), z] = 1.0 - q
        return P

    # calibrate tau per group against the expected imputation FDR on a large
    # probe; groups leak into each other (an item whose own-group probability
    # dips below 1/2 is imputed to its alternative group), so iterate
    taus = np.clip((targets - (1 - mu1)) / (mu1 - mu2), 0.0, 1.0)
    lo = np.zeros(p)
    hi = np.ones(p)
    probe_gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(0xFD0)))
    probe_m = 60 * p * (p - 1)  # reused uniforms keep the probe deterministic
    probe_state = probe_gen.bit_generator.state
    for _ in range(30):
        probe_gen.bit_generator.state = probe_state
        fdr = expected_bayes_fdr(build_P(taus, probe_m * 10, probe_gen))
        high = fdr > targets
        hi = np.where(high, taus, hi)
        lo = np.where(high, lo, taus)
        taus = 0.5 * (lo + hi)

    P = build_P(taus, m, rng)
    w = rng.random(m)
    truth = sample_groups(P, "disjoint", rng)
    return Instance.from_values(w, n, P, structure="disjoint", truth=truth)


# ---------------------------------------------------------------------------
# Intersectional products and adversarial constructions
# ---------------------------------------------------------------------------


def intersect_marginals(marginals: Sequence[np.ndarray]) -> np.ndarray:
    """Joint membership probabilities over the 2^A product groups of A
    independent binary attributes.

    Group g's bit t selects attribute t's "no" side; bit 0 varies fastest,
    so two attributes (a, b) give rows (a b, (1-a) b, a (1-b), (1-a)(1-b)).
    """
    margs = [np.asarray(v, dtype=float) for v in marginals]
    if not margs:
        raise DimensionMismatch("need at least one attribute")
    m = margs[0].shape[0]
    for v in margs:
        if v.shape != (m,):
            raise DimensionMismatch("marginals must share the item count")
        if (v < 0).any() or (v > 1).any():
            raise ValidationError("marginals must lie in [0, 1]")
    A = len(margs)
    P = np.ones((m, 2**A))
    for g in range(2**A):
        for tbit in range(A):
            P[:, g] *= (1 - margs[tbit]) if (g >> tbit) & 1 else margs[tbit]
    return P


def adversarial_lower_bound_instance(U: np.ndarray, k: int, m: int, n: int) -> np.ndarray:
    """The impossibility family's probability matrix for position k
    (1-based): a witness group l with U[k, l] <= k/4 gets P[i, l] = U[k, l]/k
    while group 1 absorbs the rest; other columns are zero."""
    U = np.asarray(U, dtype=float)
    nn, p = U.shape
    if not (1 <= k <= nn) or n > nn or n > m:
        raise DimensionMismatch("inconsistent k, m, n")
    row = U[k - 1]
    witnesses = [l for l in range(1, p) if row[l] <= k / 4.0]
    if not witnesses:
        raise FamilyConditionViolated(
            f"no group l >= 2 with U[k, l] <= k/4 at position k={k}"
        )
    l = witnesses[0]
    P = np.zeros((m, p))
    P[:, l] = row[l] / k
    P[:, 0] = 1.0 - row[0] / k
    return P


ImputationKind = Literal["bayes", "independent"]


def imputation_failure_instance(
    kind: ImputationKind,
    n: int,
    beta: float = 0.01,
    phi: float = 0.05,
) -> Instance:
    """Instances on which imputation-then-rank provably misbehaves.

    ``bayes``: three item types (m = 3n/2).  Type A is surely group 2 with
    unit utility, type B is group 1 with probability 1/2 + beta and unit
    utility, type C is surely group 1 with zero utility.  Most-likely
    imputation lumps B with C, and the resulting "balanced" ranking
    overfills true group 2 by a factor 11/10 with probability > 1/2.

    ``independent``: many borderline items (type A, group 1 w.p. phi, unit
    utility) plus n sure items of each group with zero utility; independent
    rounding then concentrates per set, but some size-n set still deviates.
    """
    if n % 2:
        raise ValidationError("n must be even")
    if beta <= 0 or not (0 < phi < 1):
        raise ValidationError("beta must be positive and phi in (0, 1)")
    if kind == "bayes":
        m = 3 * n // 2
        P1 = np.concatenate(
            [np.zeros(n // 2), np.full(n // 2, 0.5 + beta), np.ones(n // 2)]
        )
        W = np.zeros((m, n))
        W[: n, :] = 1.0
    elif kind == "independent":
        m_a = int(np.ceil(np.log(n / beta) * n / np.log(1.0 / (1.0 - phi))))
        m = m_a + 2 * n
        P1 = np.concatenate([np.full(m_a, phi), np.ones(n), np.zeros(n)])
        W = np.zeros((m, n))
        W[:m_a, :] = 1.0
    else:
        raise ValidationError(f"unknown kind {kind!r}")
    P = np.column_stack([P1, 1.0 - P1])
    inst = Instance(m=m, n=n, p=2, W=W, P=P, structure="disjoint")
    return validate_instance(inst)


def half_half_instance(m: int, p: int = 2) -> np.ndarray:
    """The all-1/2 probability matrix under which uniform relaxation of the
    prefix bounds is unachievable at small positions."""
    if m < 2:
        raise ValidationError("need at least two items")
    return np.full((m, p), 0.5)


def exp_constraint_gap_instance(m: int, n: int) -> Instance:
    """Instance where hard expected-count bounds force zero utility: only
    the last item carries utility, but it is surely in group 1, so every
    prefix containing it exceeds the expected-count bound k/2."""
    if m <= n:
        raise ValidationError("need m > n")
    P1 = np.full(m, 0.5)
    P1[m - 1] = 1.0
    P = np.column_stack([P1, 1.0 - P1])
    W = np.zeros((m, n))
    W[m - 1, :] = 1.0
    inst = Instance(m=m, n=n, p=2, W=W, P=P, structure="disjoint")
    return validate_instance(inst)
