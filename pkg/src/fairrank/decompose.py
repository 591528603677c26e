"""Birkhoff-von-Neumann decomposition of a fractional assignment into a
convex combination of rankings.

A fractional assignment is rectangular (m items, n slots), so it is first
padded to a square doubly stochastic matrix: items with positive row mass
keep their rows, each row's slack 1 - sum_j X[i, j] is spread over dummy
slot columns by a greedy northwest-corner fill, and items with zero mass are
dropped (they can never appear in a decomposition term).  Permutations of
the padded matrix are then peeled off by repeatedly finding a perfect
matching on the positive support and subtracting the minimum matched entry;
dummy-column assignments are projected away, leaving a valid ranking per
term.
"""

from __future__ import annotations

import numpy as np

from .core import ConvexCombination, FractionalAssignment, Ranking
from .errors import NotDecomposable

SUPPORT_TOL = 1e-9


def _perfect_matching(mat: np.ndarray, support_tol: float) -> list[int] | None:
    """Row index matched to each column of a square nonnegative matrix's
    positive support, via augmenting paths (Kuhn's algorithm); columns and
    rows are scanned in ascending order so the result is deterministic."""
    size = mat.shape[0]
    match_of_col = [-1] * size
    match_of_row = [-1] * size
    adj = [np.flatnonzero(mat[:, j] > support_tol) for j in range(size)]

    def augment(j: int, seen: list[bool]) -> bool:
        for i in adj[j]:
            if not seen[i]:
                seen[i] = True
                if match_of_row[i] == -1 or augment(match_of_row[i], seen):
                    match_of_row[i] = j
                    match_of_col[j] = i
                    return True
        return False

    for j in range(size):
        if not augment(j, [False] * size):
            return None
    return match_of_col


def _pad_square(X: np.ndarray, support_tol: float) -> tuple[np.ndarray, np.ndarray, int]:
    """Keep rows with positive mass and append dummy columns carrying each
    kept row's slack (northwest-corner fill).  Returns (padded matrix,
    original row indices, n)."""
    m, n = X.shape
    active = np.flatnonzero(X.sum(axis=1) > support_tol)
    if active.size < n:
        raise NotDecomposable("fewer active items than slots")
    A = X[active, :]
    size = active.size
    ndummy = size - n
    out = np.zeros((size, size))
    out[:, :n] = A
    slack = 1.0 - A.sum(axis=1)
    slack[slack < 0] = 0.0
    col = 0
    cap = np.ones(ndummy)
    for i in range(size):
        s = slack[i]
        while s > support_tol:
            if col >= ndummy:
                raise NotDecomposable("row slack exceeds dummy capacity")
            take = min(s, cap[col])
            out[i, n + col] += take
            cap[col] -= take
            s -= take
            if cap[col] <= support_tol:
                col += 1
    return out, active, n


def bvn_decompose(assignment: FractionalAssignment) -> ConvexCombination:
    """Decompose into at most nnz(X) - n + 1 rankings whose weighted sum
    reconstructs X entrywise within 1e-7."""
    X = np.asarray(assignment.X, dtype=float)
    m, n = X.shape
    work, active, _ = _pad_square(X, SUPPORT_TOL)
    size = work.shape[0]
    terms: dict[tuple[int, ...], float] = {}
    max_rounds = int((work > SUPPORT_TOL).sum()) + size + 1
    for _ in range(max_rounds):
        if work.max() <= SUPPORT_TOL:
            break
        cols = _perfect_matching(work, SUPPORT_TOL)
        if cols is None:
            raise NotDecomposable("no perfect matching on the positive support")
        theta = float(min(work[cols[j], j] for j in range(size)))
        if theta <= SUPPORT_TOL:
            raise NotDecomposable("degenerate matching weight")
        slots = tuple(int(active[cols[j]]) for j in range(n))
        terms[slots] = terms.get(slots, 0.0) + theta
        for j in range(size):
            work[cols[j], j] -= theta
            if work[cols[j], j] < SUPPORT_TOL:
                work[cols[j], j] = 0.0
    else:
        raise NotDecomposable("decomposition failed to terminate")
    # fold the leftover numerical dust into the largest weight so the
    # weights sum to one exactly
    total = sum(terms.values())
    top = max(terms, key=lambda s: (terms[s], s))
    terms[top] += 1.0 - total
    combo = ConvexCombination(
        terms=tuple((wt, Ranking(slots=slots, m=m)) for slots, wt in sorted(terms.items()))
    )
    if not combo.reconstructs(X):
        raise NotDecomposable("reconstruction error above tolerance")
    return combo
