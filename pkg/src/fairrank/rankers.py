"""End-to-end ranking algorithms.

* ``nresilient``   -- LP relaxation of the noise-resilient program, BvN
                      decomposition, dependent swap rounding.
* ``uncons``       -- utility-maximizing ranking, no fairness constraints.
* ``csv_greedy``   -- prefix-constrained greedy over imputed groups.
* ``gak_detgreedy``-- proportion-driven deterministic greedy.
* ``sj_sample``    -- constrained LP over imputed groups, BvN, sample a term.
* ``mc_baseline``  -- expected-count-constrained subset selection at the last
                      position only, then sort by value.

Imputation strategies (``impute_bayes``, ``impute_independent``) convert a
probability matrix into hard groups for the baselines that need them.
"""

from __future__ import annotations

import numpy as np

from .core import FairnessSpec, GroupSample, Instance, Ranking
from .decompose import bvn_decompose
from .errors import DimensionMismatch, InfeasibleProgram, Stuck, ValidationError
from .fairspec import build_constraints, relaxation_factor
from .lpsolve import Method, solve_relaxation, unconstrained_optimal
from .noiselab import impute_most_likely
from .rng import SeedLike, make_rng
from .swapround import DEFAULT_T, swap_round


def _values(inst: Instance) -> np.ndarray:
    """Per-item values used by greedy baselines: intrinsic values when
    available, else first-column utilities."""
    return inst.w if inst.w is not None else inst.W[:, 0]


def nresilient(
    inst: Instance,
    spec: FairnessSpec,
    seed: SeedLike,
    t: int = DEFAULT_T,
    method: Method = "auto",
) -> Ranking:
    """The noise-resilient pipeline: build constraints, solve the relaxation,
    decompose, swap-round.  Raises InfeasibleProgram when the relaxed
    program has no fractional solution."""
    constraints = build_constraints(inst.P, spec)
    sol = solve_relaxation(inst, constraints, method=method)
    if not sol.optimal:
        raise InfeasibleProgram("relaxed fair-ranking program is infeasible")
    comb = bvn_decompose(sol.assignment)
    return swap_round(comb, t=t, rng=make_rng(seed))


def uncons(inst: Instance) -> Ranking:
    """Highest-value items in decreasing order (ties to the lower index);
    exact for position-monotone utilities, and verified exact in general via
    the assignment oracle in tests."""
    if inst.w is not None:
        order = np.lexsort((np.arange(inst.m), -inst.w))[: inst.n]
        return Ranking(slots=tuple(int(i) for i in order), m=inst.m)
    return unconstrained_optimal(inst)[0]


def impute_bayes(P: np.ndarray) -> GroupSample:
    """Assign each item to its most likely group, ties to the lowest index."""
    P = np.asarray(P, dtype=float)
    return GroupSample.from_labels(impute_most_likely(P), P.shape[1])


def impute_independent(P: np.ndarray, structure: str, seed: SeedLike) -> GroupSample:
    """Draw each item's group from its own row distribution, independently
    across items (categorical for disjoint, Bernoulli per attribute for
    independent marginals)."""
    from .noiselab import sample_groups

    return sample_groups(P, structure, seed)


def csv_greedy(inst: Instance, groups: GroupSample, U: np.ndarray) -> Ranking:
    """For each slot, place the highest-value unplaced item whose group's
    prefix count stays within U; since U is nondecreasing in the position,
    checking the current slot suffices.  Raises Stuck when no item fits."""
    U = np.asarray(U, dtype=float)
    labels = groups.labels()
    vals = _values(inst)
    order = np.lexsort((np.arange(inst.m), -vals))
    counts = np.zeros(inst.p)
    used = np.zeros(inst.m, dtype=bool)
    slots: list[int] = []
    for k in range(inst.n):
        placed = False
        for i in order:
            if used[i]:
                continue
            g = labels[i]
            if counts[g] + 1 <= U[k, g] + 1e-9:
                slots.append(int(i))
                used[i] = True
                counts[g] += 1
                placed = True
                break
        if not placed:
            raise Stuck(f"no feasible item for slot {k + 1}")
    return Ranking(slots=tuple(slots), m=inst.m)


def gak_detgreedy(inst: Instance, groups: GroupSample, proportions) -> Ranking:
    """Deterministic greedy with per-group target proportions: groups below
    their floor(alpha_l k) minimum are served first, otherwise the best
    candidate among groups still below ceil(alpha_l k)."""
    alphas = np.asarray(proportions, dtype=float)
    if abs(alphas.sum() - 1.0) > 1e-9 or (alphas < 0).any():
        raise ValidationError("proportions must be nonnegative and sum to 1")
    p = alphas.shape[0]
    if p != groups.p:
        raise DimensionMismatch("one proportion per group is required")
    labels = groups.labels()
    vals = _values(inst)
    counts = np.zeros(p)
    used = np.zeros(inst.m, dtype=bool)
    # per-group value-sorted queues
    queues = [
        [int(i) for i in np.lexsort((np.arange(inst.m), -vals)) if labels[i] == g]
        for g in range(p)
    ]
    heads = [0] * p
    slots: list[int] = []

    def head_value(g: int) -> float | None:
        while heads[g] < len(queues[g]) and used[queues[g][heads[g]]]:
            heads[g] += 1
        if heads[g] >= len(queues[g]):
            return None
        return float(vals[queues[g][heads[g]]])

    for k in range(1, inst.n + 1):
        below_min = [
            g for g in range(p) if counts[g] < np.floor(alphas[g] * k) - 1e-9
        ]
        candidates = below_min or [
            g for g in range(p) if counts[g] < np.ceil(alphas[g] * k) + 1e-9
        ]
        best_g, best_v = None, None
        for g in candidates:
            hv = head_value(g)
            if hv is None:
                if below_min:
                    raise Stuck(f"group {g + 1} is below its floor but exhausted")
                continue
            if best_v is None or hv > best_v:
                best_g, best_v = g, hv
        if best_g is None:
            raise Stuck(f"no feasible item for slot {k}")
        i = queues[best_g][heads[best_g]]
        used[i] = True
        counts[best_g] += 1
        slots.append(i)
    return Ranking(slots=tuple(slots), m=inst.m)


def sj_sample(
    inst: Instance,
    groups: GroupSample,
    U: np.ndarray,
    seed: SeedLike,
    method: Method = "auto",
) -> Ranking:
    """Solve the prefix-constrained LP over hard group memberships (zero
    relaxation), decompose, and sample one ranking with probability equal to
    its decomposition weight."""
    U = np.asarray(U, dtype=float)
    spec = FairnessSpec(
        U=U, gamma=np.zeros(inst.n), gamma_mode="explicit", c=2.0, delta=0.5, d=4.0
    )
    membership = groups.membership.astype(float)
    constraints = build_constraints(membership, spec)
    sol = solve_relaxation(inst, constraints, method=method)
    if not sol.optimal:
        raise InfeasibleProgram("hard-constrained LP is infeasible")
    return sample_from_combination(bvn_decompose(sol.assignment), seed)


def sample_from_combination(comb, seed: SeedLike) -> Ranking:
    """One ranking drawn with probability equal to its combination weight."""
    rng = make_rng(seed)
    weights = np.array([wt for wt, _ in comb.terms])
    idx = int(rng.choice(len(weights), p=weights / weights.sum()))
    return comb.terms[idx][1]


def mc_baseline(
    inst: Instance,
    spec: FairnessSpec,
    phi: float,
    seed: SeedLike,
    method: Method = "auto",
) -> Ranking:
    """Subset selection via the last-position-only restriction of the
    noise-resilient program: expected count per group at most
    (phi/p) n * (1 + (1 - 1/(2 sqrt(c))) gamma_n), then the chosen items are
    ranked by value.

    The selection LP's vertex has at most p + 1 fractional items; the best
    feasible completion over that support is chosen by enumeration.  When no
    completion meets the bound exactly (typical at phi = 1, where the bounds
    sum to exactly n), the completion with the smallest worst-group excess is
    used instead, provided the excess stays below one item's worth of
    probability -- the rounding slack of a single fractional item.
    """
    from itertools import combinations

    import scipy.sparse as sp
    from scipy.optimize import linprog

    m, n, p = inst.m, inst.n, inst.p
    vals = _values(inst)
    bound = (phi / p * n) * relaxation_factor(spec.c, float(spec.gamma[n - 1]))
    A_ub = sp.csr_matrix(np.asarray(inst.P, dtype=float).T)
    A_eq = sp.csr_matrix(np.ones((1, m)))
    res = linprog(
        -vals,
        A_ub=A_ub,
        b_ub=np.full(p, bound),
        A_eq=A_eq,
        b_eq=np.array([float(n)]),
        bounds=(0, 1),
        method="highs",
    )
    if res.status == 2:
        raise InfeasibleProgram("subset-selection program is infeasible")
    if res.status != 0:
        raise InfeasibleProgram(f"subset selection failed: {res.message}")
    x = res.x
    whole = np.flatnonzero(x >= 1 - 1e-7)
    frac = np.flatnonzero((x > 1e-7) & (x < 1 - 1e-7))
    need = n - whole.size
    P = np.asarray(inst.P, dtype=float)
    base_load = P[whole].sum(axis=0)
    best: tuple[float, float, tuple[int, ...]] | None = None  # (-excess, value, combo)
    if need == 0:
        best = (0.0, float(vals[whole].sum()), tuple())
    else:
        for combo in combinations(sorted(int(i) for i in frac), need):
            load = base_load + P[list(combo)].sum(axis=0)
            excess = float(np.maximum(load - bound, 0.0).max())
            v = float(vals[list(combo)].sum())
            key = (-excess, v, combo)
            if best is None or key[:2] > best[:2]:
                best = key
    if best is None or -best[0] > 1.0:
        raise InfeasibleProgram("no integral completion within the rounding slack")
    chosen = np.concatenate([whole, np.array(best[2], dtype=int)]) if best[2] else whole
    order = chosen[np.lexsort((chosen, -vals[chosen]))]
    return Ranking(slots=tuple(int(i) for i in order), m=m)


def relaxed_bounds(spec: FairnessSpec) -> np.ndarray:
    """The program's effective bounds U[k, l] * (1 + (1 - 1/(2 sqrt(c))) gamma_k)."""
    factors = np.array([relaxation_factor(spec.c, g) for g in spec.gamma])
    return spec.U * factors[:, None]
