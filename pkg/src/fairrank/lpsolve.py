"""Continuous relaxation of the fair-ranking program, plus a brute-force
integral oracle for tests.

The LP is

    max <W, X>   s.t.  column sums 1, row sums <= 1, fairness constraints,
                        0 <= X

Two interchangeable backends solve it:

* ``simplex`` -- a self-contained dense two-phase simplex with Bland's rule
  as an anti-cycling fallback and lowest-index tie-breaking, so results are
  bit-for-bit reproducible.  Intended for small and medium instances.
* ``highs`` -- scipy's HiGHS interface.  Prefix-structured constraint
  families are rewritten with cumulative auxiliary variables (one chain per
  family), which shrinks the nonzero count by an order of magnitude and is
  what makes desk-scale experiment sweeps practical.

``method="auto"`` picks simplex below :data:`AUTO_SIMPLEX_LIMIT` variables
and HiGHS above.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .core import FairnessSpec, FractionalAssignment, Instance, Ranking, utility
from .errors import (
    DimensionMismatch,
    InfeasibleProgram,
    NumericalFailure,
    TooLarge,
    ValidationError,
)
from .fairspec import LinearConstraint, build_constraints
from .rng import SeedLike, make_rng

#: "auto" switches from the dense simplex to HiGHS above this variable count.
AUTO_SIMPLEX_LIMIT = 600

FEAS_TOL = 1e-7
RESIDUAL_TOL = 1e-6

Method = Literal["auto", "simplex", "highs"]


@dataclass(frozen=True)
class LpSolution:
    assignment: Optional[FractionalAssignment]
    objective: float
    status: Literal["Optimal", "Infeasible"]

    @property
    def optimal(self) -> bool:
        return self.status == "Optimal"


# ---------------------------------------------------------------------------
# Dense two-phase simplex
# ---------------------------------------------------------------------------


def _pivot(T: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    colvals = T[:, col].copy()
    colvals[row] = 0.0
    T -= np.outer(colvals, T[row])
    basis[row] = col


def _simplex_phase(
    T: np.ndarray, basis: np.ndarray, ncols: int, tol: float, max_iter: int
) -> bool:
    """Minimize the objective embedded in T's last row over columns
    [0, ncols).  Returns False when the iteration cap is hit."""
    stall = 0
    for _ in range(max_iter):
        red = T[-1, :ncols]
        if stall < 40:
            col = int(np.argmin(red))
            if red[col] >= -tol:
                return True
        else:  # Bland's rule: first improving column, guarantees no cycling
            neg = np.flatnonzero(red < -tol)
            if neg.size == 0:
                return True
            col = int(neg[0])
        ratios = np.full(T.shape[0] - 1, np.inf)
        pos = T[:-1, col] > tol
        ratios[pos] = T[:-1, -1][pos] / T[:-1, col][pos]
        row = int(np.argmin(ratios))
        if not np.isfinite(ratios[row]):
            raise NumericalFailure("LP is unbounded")
        # degenerate tie: lowest basis index, deterministic output
        ties = np.flatnonzero(np.abs(ratios - ratios[row]) <= tol * (1 + abs(ratios[row])))
        if ties.size > 1:
            row = int(ties[np.argmin(basis[ties])])
        if abs(ratios[row]) <= tol:
            stall += 1
        else:
            stall = 0
        _pivot(T, basis, row, col)
    return False


def dense_simplex(
    c: np.ndarray,
    A_ub: np.ndarray | None,
    b_ub: np.ndarray | None,
    A_eq: np.ndarray | None,
    b_eq: np.ndarray | None,
    tol: float = 1e-9,
    max_iter: int = 50_000,
) -> tuple[np.ndarray | None, float, str]:
    """Maximize c @ x subject to A_ub x <= b_ub, A_eq x = b_eq, x >= 0.

    Returns (x, objective, status) with status "Optimal" or "Infeasible".
    """
    c = np.asarray(c, dtype=float)
    nvar = c.size
    blocks = []
    rhs = []
    if A_ub is not None and len(A_ub):
        blocks.append((np.asarray(A_ub, dtype=float), np.asarray(b_ub, dtype=float), True))
    if A_eq is not None and len(A_eq):
        blocks.append((np.asarray(A_eq, dtype=float), np.asarray(b_eq, dtype=float), False))
    rows = sum(b.shape[0] for b, _, _ in blocks)
    nslack = sum(b.shape[0] for b, _, is_ub in blocks if is_ub)
    # flip rows with negative rhs so the slack/artificial start is feasible
    ncols = nvar + nslack + rows  # real + slack + artificial
    T = np.zeros((rows + 1, ncols + 1))
    basis = np.zeros(rows, dtype=int)
    r = 0
    s = nvar
    art_rows = []
    for A, b, is_ub in blocks:
        for i in range(A.shape[0]):
            row = A[i].copy()
            bi = float(b[i])
            sign = 1.0
            if bi < 0:
                row, bi, sign = -row, -bi, -1.0
            T[r, :nvar] = row
            T[r, -1] = bi
            if is_ub:
                T[r, s] = sign
                if sign > 0:
                    basis[r] = s
                else:  # flipped <= row needs an artificial
                    T[r, nvar + nslack + r] = 1.0
                    basis[r] = nvar + nslack + r
                    art_rows.append(r)
                s += 1
            else:
                T[r, nvar + nslack + r] = 1.0
                basis[r] = nvar + nslack + r
                art_rows.append(r)
            r += 1
    # Phase 1: minimize sum of artificials
    if art_rows:
        T[-1, nvar + nslack : nvar + nslack + rows] = 0.0
        obj = np.zeros(ncols + 1)
        for rr in art_rows:
            obj[: ] -= np.concatenate([T[rr, :ncols], [T[rr, -1]]])
        T[-1, :] = obj
        T[-1, nvar + nslack : nvar + nslack + rows] = 0.0
        if not _simplex_phase(T, basis, nvar + nslack, tol, max_iter):
            raise NumericalFailure("phase-1 iteration cap exceeded")
        if -T[-1, -1] > 1e-7:
            return None, 0.0, "Infeasible"
        # drive leftover artificials out of the basis where possible
        for rr in range(rows):
            if basis[rr] >= nvar + nslack:
                piv = np.flatnonzero(np.abs(T[rr, : nvar + nslack]) > tol)
                if piv.size:
                    _pivot(T, basis, rr, int(piv[0]))
    # Phase 2
    T[-1, :] = 0.0
    T[-1, :nvar] = -c
    for rr in range(rows):
        if basis[rr] < nvar + nslack:
            T[-1, :] -= T[-1, basis[rr]] * T[rr, :]
    T[:, nvar + nslack : nvar + nslack + rows] = 0.0  # forbid artificials
    if not _simplex_phase(T, basis, nvar + nslack, tol, max_iter):
        raise NumericalFailure("phase-2 iteration cap exceeded")
    x = np.zeros(ncols)
    x[basis] = T[:-1, -1]
    xr = x[:nvar]
    return xr, float(c @ xr), "Optimal"


# ---------------------------------------------------------------------------
# LP assembly
# ---------------------------------------------------------------------------


def _group_families(constraints: list[LinearConstraint], m: int, n: int):
    """Group constraints into prefix families sharing item and position
    weights, for the cumulative rewrite.  Returns (families, generic) where a
    family is (item_weights, pos_values, bounds-by-k dict)."""
    families: dict[int, dict] = {}
    generic: list[LinearConstraint] = []
    for con in constraints:
        if con.item_weights.shape[0] != m or con.pos_weights.shape[0] != n:
            raise DimensionMismatch("constraint dimensions disagree with the instance")
        k, l = con.tag
        fam = families.setdefault(l, {"iw": con.item_weights, "v": None, "bounds": {}})
        if fam["iw"] is not con.item_weights and not np.array_equal(fam["iw"], con.item_weights):
            generic.append(con)
            continue
        v_full = np.zeros(n)
        v_full[: k + 1] = con.pos_weights[: k + 1]
        if fam["v"] is None:
            fam["v"] = v_full
            fam["vk"] = k
        else:
            kk = min(k, fam["vk"])
            if not np.allclose(fam["v"][: kk + 1], v_full[: kk + 1]):
                generic.append(con)
                continue
            if k > fam["vk"]:
                fam["v"], fam["vk"] = v_full, k
        if k in fam["bounds"]:
            fam["bounds"][k] = min(fam["bounds"][k], con.bound)
        else:
            fam["bounds"][k] = con.bound
    out = [
        (fam["iw"], fam["v"], fam["bounds"])
        for fam in families.values()
        if fam["bounds"]
    ]
    return out, generic


def _solve_highs(W, constraints, m, n):
    nv = m * n
    families, generic = _group_families(constraints, m, n)
    nY = sum(max(b.keys()) + 1 for _, _, b in families)
    rows_r, cols_r, vals_r = [], [], []
    # column sums = 1
    rows_r.append(np.tile(np.arange(n), m))
    cols_r.append(np.arange(nv))
    vals_r.append(np.ones(nv))
    r0 = n
    ybounds: list[tuple[float, float | None]] = []
    yoff = nv
    for iw, v, bounds in families:
        kmax = max(bounds.keys())
        for k in range(kmax + 1):
            r = r0 + k
            rows_r.append(np.full(m, r))
            cols_r.append(np.arange(m) * n + k)
            vals_r.append(-iw * v[k])
            rows_r.append(np.array([r]))
            cols_r.append(np.array([yoff + k]))
            vals_r.append(np.array([1.0]))
            if k > 0:
                rows_r.append(np.array([r]))
                cols_r.append(np.array([yoff + k - 1]))
                vals_r.append(np.array([-1.0]))
            ybounds.append((0.0, bounds.get(k)))
        r0 += kmax + 1
        yoff += kmax + 1
    ntot = nv + nY
    A_eq = sp.csr_matrix(
        (np.concatenate(vals_r), (np.concatenate(rows_r), np.concatenate(cols_r))),
        shape=(r0, ntot),
    )
    b_eq = np.zeros(r0)
    b_eq[:n] = 1.0
    # inequality rows: item row sums plus generic constraints
    rows_u = [np.repeat(np.arange(m), n)]
    cols_u = [np.arange(nv)]
    vals_u = [np.ones(nv)]
    b_ub = [np.ones(m)]
    ru = m
    for con in generic:
        coef = con.coeff()
        ii, jj = np.nonzero(coef)
        rows_u.append(np.full(ii.size, ru))
        cols_u.append(ii * n + jj)
        vals_u.append(coef[ii, jj])
        b_ub.append(np.array([con.bound]))
        ru += 1
    A_ub = sp.csr_matrix(
        (np.concatenate(vals_u), (np.concatenate(rows_u), np.concatenate(cols_u))),
        shape=(ru, ntot),
    )
    bounds = [(0.0, 1.0)] * nv + ybounds
    cvec = np.concatenate([-np.asarray(W, dtype=float).ravel(), np.zeros(nY)])
    res = linprog(
        cvec,
        A_ub=A_ub,
        b_ub=np.concatenate(b_ub),
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=bounds,
        method="highs",
    )
    if res.status == 2:
        return None, 0.0, "Infeasible"
    if res.status != 0:
        raise NumericalFailure(f"HiGHS failed: {res.message}")
    return res.x[:nv].reshape(m, n), float(-res.fun), "Optimal"


def _solve_simplex_dense(W, constraints, m, n):
    nv = m * n
    A_eq = np.zeros((n, nv))
    for j in range(n):
        A_eq[j, j::n] = 1.0
    b_eq = np.ones(n)
    A_ub = np.zeros((m + len(constraints), nv))
    for i in range(m):
        A_ub[i, i * n : (i + 1) * n] = 1.0
    b_ub = np.ones(m + len(constraints))
    for t, con in enumerate(constraints):
        A_ub[m + t] = con.coeff().ravel()
        b_ub[m + t] = con.bound
    x, obj, status = dense_simplex(np.asarray(W, dtype=float).ravel(), A_ub, b_ub, A_eq, b_eq)
    if status != "Optimal":
        return None, 0.0, status
    return x.reshape(m, n), obj, "Optimal"


def solve_relaxation(
    inst: Instance,
    constraints: list[LinearConstraint],
    method: Method = "auto",
) -> LpSolution:
    """Solve the continuous relaxation; returns an Optimal solution whose
    residuals are verified, or an Infeasible status."""
    m, n = inst.m, inst.n
    if method == "auto":
        method = "simplex" if m * n <= AUTO_SIMPLEX_LIMIT else "highs"
    if method == "highs":
        X, obj, status = _solve_highs(inst.W, constraints, m, n)
    elif method == "simplex":
        X, obj, status = _solve_simplex_dense(inst.W, constraints, m, n)
    else:
        raise ValidationError(f"unknown method {method!r}")
    if status == "Infeasible":
        return LpSolution(assignment=None, objective=float("-inf"), status="Infeasible")
    X = np.clip(X, 0.0, 1.0)
    assignment = FractionalAssignment(X)
    for con in constraints:
        resid = con.value(X) - con.bound
        if resid > RESIDUAL_TOL * (1.0 + abs(con.bound)):
            raise NumericalFailure(
                f"constraint {con.tag} violated by {resid:.3g} in the LP solution"
            )
    inner = float((inst.W * X).sum())
    if abs(inner - obj) > RESIDUAL_TOL * (1.0 + abs(obj)):
        raise NumericalFailure("objective disagrees with the returned assignment")
    return LpSolution(assignment=assignment, objective=inner, status="Optimal")


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------

BRUTE_FORCE_MAX_M = 8
BRUTE_FORCE_MAX_N = 4


def _enumerate_rankings(m: int, n: int):
    for perm in itertools.permutations(range(m), n):
        yield perm


def brute_force_optimal(
    inst: Instance,
    spec: FairnessSpec,
    mode: Literal["expected", "epsilon-delta"] = "expected",
    *,
    epsilon: np.ndarray | float | None = None,
    trials: int = 1000,
    seed: SeedLike = 0,
) -> tuple[Ranking, float]:
    """Enumerate all m!/(m-n)! rankings and return the maximum-utility one
    satisfying the requested constraint, with its utility.

    ``expected`` mode enforces the program's expected-count constraints;
    ``epsilon-delta`` mode estimates the violation probability at the given
    epsilon by Monte Carlo over group samples and requires it <= spec.delta.
    """
    m, n = inst.m, inst.n
    if m > BRUTE_FORCE_MAX_M or n > BRUTE_FORCE_MAX_N:
        raise TooLarge(f"brute force limited to m<={BRUTE_FORCE_MAX_M}, n<={BRUTE_FORCE_MAX_N}")
    best: tuple[float, tuple[int, ...]] | None = None
    if mode == "expected":
        cons = build_constraints(inst.P, spec)
        for perm in _enumerate_rankings(m, n):
            R = np.zeros((m, n))
            R[list(perm), np.arange(n)] = 1.0
            if all(con.value(R) <= con.bound + 1e-9 for con in cons):
                u = float(inst.W[list(perm), np.arange(n)].sum())
                if best is None or u > best[0] + 1e-15:
                    best = (u, perm)
    elif mode == "epsilon-delta":
        if epsilon is None:
            raise ValidationError("epsilon-delta mode needs epsilon")
        eps = np.broadcast_to(np.asarray(epsilon, dtype=float), (n,))
        from .noiselab import sample_groups

        rng = make_rng(seed)
        samples = np.stack(
            [sample_groups(inst.P, inst.structure, rng).membership for _ in range(trials)]
        ).astype(float)  # (trials, m, p)
        limit = spec.U[:n, :] * (1.0 + eps[:, None])
        for perm in _enumerate_rankings(m, n):
            picked = samples[:, list(perm), :]  # (trials, n, p)
            counts = np.cumsum(picked, axis=1)
            viol = (counts > limit[None, :, :] + 1e-9).any(axis=(1, 2))
            if viol.mean() <= spec.delta:
                u = float(inst.W[list(perm), np.arange(n)].sum())
                if best is None or u > best[0] + 1e-15:
                    best = (u, perm)
    else:
        raise ValidationError(f"unknown oracle mode {mode!r}")
    if best is None:
        raise InfeasibleProgram("no ranking satisfies the requested constraint")
    u, perm = best
    return Ranking(slots=perm, m=m), u


def unconstrained_optimal(inst: Instance) -> tuple[Ranking, float]:
    """Exact utility-maximizing ranking (rectangular assignment problem)."""
    from scipy.optimize import linear_sum_assignment

    cost = -np.asarray(inst.W, dtype=float)
    rows, cols = linear_sum_assignment(cost)
    slots = np.empty(inst.n, dtype=int)
    slots[cols] = rows
    r = Ranking(slots=tuple(int(i) for i in slots), m=inst.m)
    return r, utility(r, inst.W)
