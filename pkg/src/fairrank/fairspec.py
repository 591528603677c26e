"""Upper-bound matrices, relaxation vectors, and the linear fairness
constraints of the noise-resilient ranking program.

The constraint for position k and group l bounds the discounted expected
group count:

    sum_{i in [m], j <= k} v_j * P[i, l] * x[i, j]
        <= U[k, l] * (1 + (1 - 1/(2 sqrt(c))) * gamma_k)

with v_j = 1 when no position discounts are supplied.  Each constraint's
coefficient matrix is the rank-one prefix product item_weights[i] *
pos_weights[j], which the LP layer exploits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import FairnessSpec, xlog
from .errors import (
    DeltaOutOfRange,
    DimensionMismatch,
    PhiOutOfRange,
    PsiAssumptionViolated,
    ValidationError,
    ZeroGroupSize,
)

#: Leading constant of the theoretical relaxation formula; exposed because the
#: proof only needs a factor of 8 while the stated formula uses 12.
THEORETICAL_CONSTANT = 12.0


# ---------------------------------------------------------------------------
# Upper-bound matrices
# ---------------------------------------------------------------------------


def u_equal_representation(n: int, p: int) -> np.ndarray:
    """U[k, l] = ceil((k+1) / p): at most a 1/p share in every prefix."""
    if n < 1 or p < 2:
        raise DimensionMismatch("need n >= 1 and p >= 2")
    k = np.arange(1, n + 1, dtype=float)
    return np.tile(np.ceil(k / p)[:, None], (1, p))


def u_proportional(n: int, group_sizes, m: int) -> np.ndarray:
    """U[k, l] = ceil(k * |G_l| / m): prefix share proportional to group size."""
    sizes = np.asarray(group_sizes, dtype=float)
    if (sizes <= 0).any():
        raise ZeroGroupSize("every group size must be positive")
    if sizes.sum() < m:
        raise ValidationError("group sizes must cover all m items")
    k = np.arange(1, n + 1, dtype=float)
    return np.ceil(np.outer(k, sizes / m))


def u_phi(n: int, p: int, phi: float) -> np.ndarray:
    """U[k, l] = ceil((phi/p) * k); phi = p is unconstrained, phi = 1 is
    equal representation."""
    if not (1.0 <= phi <= p):
        raise PhiOutOfRange(f"phi={phi} outside [1, {p}]")
    k = np.arange(1, n + 1, dtype=float)
    return np.tile(np.ceil(phi / p * k)[:, None], (1, p))


# ---------------------------------------------------------------------------
# Relaxation vectors
# ---------------------------------------------------------------------------


def _check_delta(delta: float) -> None:
    if not (0 < delta <= 0.5):
        raise DeltaOutOfRange(f"delta={delta} outside (0, 1/2]")


def gamma_theoretical(
    U: np.ndarray, n: int, p: int, delta: float, constant: float = THEORETICAL_CONSTANT
) -> np.ndarray:
    """gamma_k = constant * log(2np/delta) * max_l sqrt(1 / U[k, l])."""
    _check_delta(delta)
    U = np.asarray(U, dtype=float)
    if (U <= 0).any():
        raise ValidationError("U must be positive")
    return constant * xlog(2.0 * n * p / delta) * np.sqrt(1.0 / U).max(axis=1)


def gamma_improved(U: np.ndarray, psi: float, n: int, p: int, delta: float) -> np.ndarray:
    """gamma_k = max_l sqrt(log(2np/delta) / (2 psi U[k, l])).

    Valid when U[k, l] >= psi * k for every k and l; the better delta
    dependence comes from bounded-difference tail bounds.
    """
    _check_delta(delta)
    U = np.asarray(U, dtype=float)
    _check_psi(U, psi)
    return np.sqrt(xlog(2.0 * n * p / delta) / (2.0 * psi * U)).max(axis=1)


def gamma_position_weighted(U: np.ndarray, psi: float, n: int, p: int, delta: float) -> np.ndarray:
    """gamma_k = (1/psi) * log(2np/delta) * max_l sqrt(1 / U[k, l]) for the
    position-discounted constraint family."""
    _check_delta(delta)
    U = np.asarray(U, dtype=float)
    _check_psi(U, psi)
    return (1.0 / psi) * xlog(2.0 * n * p / delta) * np.sqrt(1.0 / U).max(axis=1)


def gamma_heuristic(U: np.ndarray) -> np.ndarray:
    """The simulation heuristic gamma_k = (1/20) max_l sqrt(1 / U[k, l])."""
    U = np.asarray(U, dtype=float)
    if (U <= 0).any():
        raise ValidationError("U must be positive")
    return 0.05 * np.sqrt(1.0 / U).max(axis=1)


def _check_psi(U: np.ndarray, psi: float) -> None:
    if psi <= 0:
        raise PsiAssumptionViolated("psi must be positive")
    k = np.arange(1, U.shape[0] + 1, dtype=float)
    bad = U < psi * k[:, None] - 1e-12
    if bad.any():
        kk, ll = np.argwhere(bad)[0]
        raise PsiAssumptionViolated(
            f"U[{kk + 1}, {ll + 1}]={U[kk, ll]} < psi*k={psi * (kk + 1)}"
        )


GAMMA_MODES = ("theoretical", "improved", "position-weighted", "heuristic", "explicit")


def make_fairness_spec(
    U: np.ndarray,
    gamma_mode: str = "heuristic",
    *,
    c: float = 1.5,
    delta: float = 0.1,
    d: float = 4.0,
    psi: float | None = None,
    gamma: np.ndarray | None = None,
    v: np.ndarray | None = None,
) -> FairnessSpec:
    """Assemble a FairnessSpec, deriving gamma from the requested mode."""
    U = np.asarray(U, dtype=float)
    n, p = U.shape
    if gamma_mode == "theoretical":
        g = gamma_theoretical(U, n, p, delta)
    elif gamma_mode == "improved":
        if psi is None:
            raise ValidationError("improved gamma needs psi")
        g = gamma_improved(U, psi, n, p, delta)
    elif gamma_mode == "position-weighted":
        if psi is None:
            raise ValidationError("position-weighted gamma needs psi")
        g = gamma_position_weighted(U, psi, n, p, delta)
    elif gamma_mode == "heuristic":
        g = gamma_heuristic(U)
    elif gamma_mode == "explicit":
        if gamma is None:
            raise ValidationError("explicit gamma mode needs a gamma vector")
        g = np.asarray(gamma, dtype=float)
    else:
        raise ValidationError(f"unknown gamma mode {gamma_mode!r}; valid: {GAMMA_MODES}")
    return FairnessSpec(U=U, gamma=g, gamma_mode=gamma_mode, c=c, delta=delta, d=d, v=v)


# ---------------------------------------------------------------------------
# Linear constraints
# ---------------------------------------------------------------------------


def relaxation_factor(c: float, gamma_k: float) -> float:
    """The bound multiplier 1 + (1 - 1/(2 sqrt(c))) * gamma_k."""
    return 1.0 + (1.0 - 1.0 / (2.0 * math.sqrt(c))) * gamma_k


@dataclass(frozen=True)
class LinearConstraint:
    """One prefix constraint: <coeff, X> <= bound with
    coeff[i, j] = item_weights[i] * pos_weights[j] and pos_weights zero
    beyond position k (tag records (k, l), 0-based)."""

    item_weights: np.ndarray
    pos_weights: np.ndarray
    bound: float
    tag: tuple[int, int]

    def __post_init__(self):
        iw = np.asarray(self.item_weights, dtype=float)
        pw = np.asarray(self.pos_weights, dtype=float)
        if self.bound < 0:
            raise ValidationError("constraint bound must be nonnegative")
        k = self.tag[0]
        if (pw[k + 1 :] != 0).any():
            raise ValidationError("positions beyond k must have zero weight")
        iw.flags.writeable = False
        pw.flags.writeable = False
        object.__setattr__(self, "item_weights", iw)
        object.__setattr__(self, "pos_weights", pw)

    @property
    def m(self) -> int:
        return self.item_weights.shape[0]

    @property
    def n(self) -> int:
        return self.pos_weights.shape[0]

    def coeff(self) -> np.ndarray:
        """Materialize the (dense) m x n coefficient matrix."""
        return np.outer(self.item_weights, self.pos_weights)

    def value(self, X: np.ndarray) -> float:
        """Evaluate <coeff, X>."""
        return float(self.item_weights @ np.asarray(X) @ self.pos_weights)


def build_constraints(P: np.ndarray, spec: FairnessSpec) -> list[LinearConstraint]:
    """One constraint per (position k, group l); n*p constraints in total."""
    P = np.asarray(P, dtype=float)
    n, p = spec.n, spec.p
    if P.ndim != 2 or P.shape[1] != p:
        raise DimensionMismatch(f"P has shape {P.shape}, expected (m, {p})")
    v = spec.v if spec.v is not None else np.ones(n)
    out: list[LinearConstraint] = []
    for k in range(n):
        factor = relaxation_factor(spec.c, float(spec.gamma[k]))
        pw_k = np.zeros(n)
        pw_k[: k + 1] = v[: k + 1]
        for l in range(p):
            out.append(
                LinearConstraint(
                    item_weights=P[:, l].copy(),
                    pos_weights=pw_k,
                    bound=float(spec.U[k, l]) * factor,
                    tag=(k, l),
                )
            )
    return out
