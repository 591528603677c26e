"""Core domain types: instances, rankings, fractional assignments, fairness
specifications, group samples, and convex combinations.

Conventions
-----------
* Item and slot indices are 0-based in memory and 1-based in all file formats
  and CLI output.
* All logarithms (DCG discounts, metric weights, relaxation formulas) use the
  base configured by :data:`LOG_BASE`, natural by default.
* All core types are immutable after validation (arrays are marked
  read-only), so they are safe to share across threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Literal, Optional, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    IoError,
    NegativeUtility,
    ProbabilityOutOfRange,
    RowSumViolation,
    ValidationError,
)

#: Base for every logarithm in the package.  ``math.e`` means natural log.
LOG_BASE: float = math.e

#: Tolerances pinned by the type invariants.
PROb_TOL = 1e-9
ROW_SUM_TOL = 1e-9
DCG_TOL = 1e-12
ENTRY_TOL = 1e-9
COL_SUM_TOL = 1e-7
ROW_LE_TOL = 1e-7
WEIGHT_SUM_TOL = 1e-9
RECONSTRUCT_TOL = 1e-7

Structure = Literal["disjoint", "independent-marginals", "explicit-joint"]
STRUCTURES = ("disjoint", "independent-marginals", "explicit-joint")


def xlog(x):
    """Logarithm in the configured base (natural unless LOG_BASE changed)."""
    if LOG_BASE == math.e:
        return np.log(x)
    return np.log(x) / math.log(LOG_BASE)


def dcg_matrix(w: np.ndarray, n: int) -> np.ndarray:
    """Position-discounted utility matrix W[i, j] = w[i] / log(j + 2).

    Slot j is 0-based here; with 1-based positions this is w_i / log(j + 1).
    """
    w = np.asarray(w, dtype=float)
    discounts = xlog(np.arange(2, n + 2, dtype=float))
    return w[:, None] / discounts[None, :]


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class GroupSample:
    """A realized draw of group memberships: membership[i, l] = 1 iff item i
    belongs to group l."""

    membership: np.ndarray

    def __post_init__(self):
        mem = np.asarray(self.membership)
        if mem.ndim != 2:
            raise DimensionMismatch("membership must be an m x p matrix")
        if not np.isin(mem, (0, 1)).all():
            raise ValidationError("membership entries must be 0/1")
        out = mem.astype(np.uint8)
        out.flags.writeable = False
        object.__setattr__(self, "membership", out)

    @property
    def m(self) -> int:
        return self.membership.shape[0]

    @property
    def p(self) -> int:
        return self.membership.shape[1]

    def labels(self) -> np.ndarray:
        """Disjoint-group labels (argmax per row); rows must have one 1."""
        if not (self.membership.sum(axis=1) == 1).all():
            raise ValidationError("labels() requires disjoint membership")
        return self.membership.argmax(axis=1)

    @staticmethod
    def from_labels(labels: Sequence[int], p: int) -> "GroupSample":
        labels = np.asarray(labels, dtype=int)
        mem = np.zeros((labels.size, p), dtype=np.uint8)
        mem[np.arange(labels.size), labels] = 1
        return GroupSample(mem)


@dataclass(frozen=True)
class Instance:
    """A ranking instance: utilities plus a probabilistic group model.

    ``W`` is the m x n utility matrix.  When ``w`` is present the DCG
    relationship W[i, j] = w[i] / log(j + 2) must hold to 1e-12.  ``P`` holds
    membership probabilities; under the ``disjoint`` structure each row of P
    sums to one.
    """

    m: int
    n: int
    p: int
    W: np.ndarray
    P: np.ndarray
    structure: Structure = "disjoint"
    w: Optional[np.ndarray] = None
    truth: Optional[GroupSample] = None

    def __post_init__(self):
        object.__setattr__(self, "W", _readonly(self.W))
        object.__setattr__(self, "P", _readonly(self.P))
        if self.w is not None:
            object.__setattr__(self, "w", _readonly(self.w))

    @staticmethod
    def from_values(
        w: np.ndarray,
        n: int,
        P: np.ndarray,
        structure: Structure = "disjoint",
        truth: Optional[GroupSample] = None,
    ) -> "Instance":
        """Build an instance with DCG utilities from intrinsic values."""
        w = np.asarray(w, dtype=float)
        P = np.asarray(P, dtype=float)
        inst = Instance(
            m=w.size,
            n=n,
            p=P.shape[1],
            W=dcg_matrix(w, n),
            P=P,
            structure=structure,
            w=w,
            truth=truth,
        )
        return validate_instance(inst)


def validate_instance(inst: Instance) -> Instance:
    """Check every Instance invariant; return the instance unchanged.

    Raises DimensionMismatch, ProbabilityOutOfRange, NegativeUtility, or
    RowSumViolation.
    """
    if inst.m < 1 or inst.n < 1:
        raise DimensionMismatch("m and n must be positive")
    if inst.n > inst.m:
        raise DimensionMismatch(f"n={inst.n} exceeds m={inst.m}")
    if inst.p < 2:
        raise DimensionMismatch("group count p must be at least 2")
    if inst.structure not in STRUCTURES:
        raise ValidationError(f"unknown structure {inst.structure!r}")
    if inst.W.shape != (inst.m, inst.n):
        raise DimensionMismatch(f"W has shape {inst.W.shape}, expected {(inst.m, inst.n)}")
    if inst.P.shape != (inst.m, inst.p):
        raise DimensionMismatch(f"P has shape {inst.P.shape}, expected {(inst.m, inst.p)}")
    if not np.isfinite(inst.W).all():
        raise NegativeUtility("W contains non-finite entries")
    if (inst.W < 0).any():
        raise NegativeUtility("W contains negative utilities")
    if not np.isfinite(inst.P).all():
        raise ProbabilityOutOfRange("P contains non-finite entries")
    if (inst.P < -PROb_TOL).any() or (inst.P > 1 + PROb_TOL).any():
        raise ProbabilityOutOfRange("P entries must lie in [0, 1]")
    if inst.structure == "disjoint":
        dev = np.abs(inst.P.sum(axis=1) - 1.0)
        if (dev > ROW_SUM_TOL).any():
            i = int(dev.argmax())
            raise RowSumViolation(
                f"disjoint structure requires unit row sums; row {i} sums to {inst.P[i].sum():.12g}"
            )
    if inst.w is not None:
        if inst.w.shape != (inst.m,):
            raise DimensionMismatch("w must have length m")
        if (inst.w < 0).any():
            raise NegativeUtility("w contains negative values")
        if np.abs(inst.W - dcg_matrix(inst.w, inst.n)).max() > DCG_TOL:
            raise ValidationError("W does not match the DCG discounting of w")
    if inst.truth is not None:
        if inst.truth.membership.shape != (inst.m, inst.p):
            raise DimensionMismatch("truth has wrong shape")
        if inst.structure == "disjoint" and not (inst.truth.membership.sum(axis=1) == 1).all():
            raise RowSumViolation("disjoint truth must have exactly one group per item")
    return inst


@dataclass(frozen=True)
class Ranking:
    """An injective assignment of n slots to items; slots[j] is the item in
    slot j (0-based)."""

    slots: tuple[int, ...]
    m: int

    def __post_init__(self):
        object.__setattr__(self, "slots", tuple(int(s) for s in self.slots))
        if len(self.slots) == 0:
            raise DimensionMismatch("ranking must fill at least one slot")
        if len(set(self.slots)) != len(self.slots):
            raise ValidationError("ranking repeats an item")
        if min(self.slots) < 0 or max(self.slots) >= self.m:
            raise DimensionMismatch("ranking refers to an item outside [m]")

    @property
    def n(self) -> int:
        return len(self.slots)

    def matrix(self) -> np.ndarray:
        R = np.zeros((self.m, self.n))
        R[list(self.slots), np.arange(self.n)] = 1.0
        return R

    @staticmethod
    def from_matrix(R: np.ndarray) -> "Ranking":
        R = np.asarray(R)
        if not np.isin(R, (0, 1)).all():
            raise ValidationError("assignment matrix must be 0/1")
        if not (R.sum(axis=0) == 1).all():
            raise ValidationError("every slot must hold exactly one item")
        if (R.sum(axis=1) > 1).any():
            raise ValidationError("an item may occupy at most one slot")
        return Ranking(slots=tuple(int(i) for i in R.argmax(axis=0)), m=R.shape[0])

    def prefix_counts(self, sample: GroupSample) -> np.ndarray:
        """n x p matrix whose (k, l) entry counts group-l items in the first
        k+1 slots of this ranking under the given group sample."""
        picked = sample.membership[list(self.slots), :].astype(float)
        return np.cumsum(picked, axis=0)


def utility(r: Ranking, W: np.ndarray) -> float:
    """Total utility sum_j W[slots[j], j] of a ranking."""
    W = np.asarray(W, dtype=float)
    if r.m != W.shape[0] or r.n > W.shape[1]:
        raise DimensionMismatch(
            f"ranking (m={r.m}, n={r.n}) incompatible with W of shape {W.shape}"
        )
    return float(W[list(r.slots), np.arange(r.n)].sum())


@dataclass(frozen=True)
class FractionalAssignment:
    """A real m x n matrix with unit column sums and row sums at most one."""

    X: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2:
            raise DimensionMismatch("X must be a matrix")
        if (X < -ENTRY_TOL).any() or (X > 1 + ENTRY_TOL).any():
            raise ValidationError("entries must lie in [0, 1] within 1e-9")
        if np.abs(X.sum(axis=0) - 1.0).max() > COL_SUM_TOL:
            raise ValidationError("column sums must equal 1 within 1e-7")
        if (X.sum(axis=1) > 1 + ROW_LE_TOL).any():
            raise ValidationError("row sums must not exceed 1 within 1e-7")
        object.__setattr__(self, "X", _readonly(X))

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class ConvexCombination:
    """A convex combination of rankings, typically from a BvN decomposition."""

    terms: tuple[tuple[float, Ranking], ...]

    def __post_init__(self):
        terms = tuple((float(a), r) for a, r in self.terms)
        if not terms:
            raise ValidationError("combination needs at least one term")
        if any(a <= 0 for a, _ in terms):
            raise ValidationError("weights must be strictly positive")
        total = sum(a for a, _ in terms)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValidationError(f"weights sum to {total:.12g}, expected 1")
        shapes = {(r.m, r.n) for _, r in terms}
        if len(shapes) != 1:
            raise DimensionMismatch("all rankings in a combination must share dimensions")
        object.__setattr__(self, "terms", terms)

    @property
    def m(self) -> int:
        return self.terms[0][1].m

    @property
    def n(self) -> int:
        return self.terms[0][1].n

    def mean_matrix(self) -> np.ndarray:
        out = np.zeros((self.m, self.n))
        for a, r in self.terms:
            out[list(r.slots), np.arange(self.n)] += a
        return out

    def reconstructs(self, X: np.ndarray, tol: float = RECONSTRUCT_TOL) -> bool:
        return bool(np.abs(self.mean_matrix() - np.asarray(X)).max() <= tol)


@dataclass(frozen=True)
class FairnessSpec:
    """Upper bounds, relaxation vector, and the program's constants.

    gamma_mode records how ``gamma`` was produced (theoretical, improved,
    position-weighted, heuristic, or explicit); ``c`` scales the relaxation
    budget, ``delta`` is the failure probability, ``d`` the rounding
    parameter (alpha = 1/d), and ``v`` optional nonincreasing position
    discounts for the position-weighted constraint family.
    """

    U: np.ndarray
    gamma: np.ndarray
    gamma_mode: str = "explicit"
    c: float = 1.5
    delta: float = 0.1
    d: float = 4.0
    v: Optional[np.ndarray] = None

    def __post_init__(self):
        U = np.asarray(self.U, dtype=float)
        gamma = np.asarray(self.gamma, dtype=float)
        if U.ndim != 2:
            raise DimensionMismatch("U must be an n x p matrix")
        n, p = U.shape
        if gamma.shape != (n,):
            raise DimensionMismatch("gamma must have length n")
        if (U < 1).any():
            raise ValidationError("upper bounds must be at least 1")
        if np.abs(U - np.round(U)).max() > 1e-9:
            raise ValidationError("upper bounds must be integral")
        if (np.diff(U, axis=0) < 0).any():
            raise ValidationError("U must be nondecreasing in the position index")
        if (gamma < 0).any():
            raise ValidationError("gamma must be nonnegative")
        if not self.c > 1:
            raise ValidationError("c must exceed 1")
        if not (0 < self.delta <= 0.5):
            raise ValidationError("delta must lie in (0, 1/2]")
        if not self.d > 2:
            raise ValidationError("rounding parameter d must exceed 2")
        if self.v is not None:
            v = np.asarray(self.v, dtype=float)
            if v.shape != (n,):
                raise DimensionMismatch("v must have length n")
            if (v <= 0).any():
                raise ValidationError("position discounts must be positive")
            if (np.diff(v) > 1e-12).any():
                raise ValidationError("position discounts must be nonincreasing")
            object.__setattr__(self, "v", _readonly(v))
        object.__setattr__(self, "U", _readonly(np.round(U)))
        object.__setattr__(self, "gamma", _readonly(gamma))

    @property
    def n(self) -> int:
        return self.U.shape[0]

    @property
    def p(self) -> int:
        return self.U.shape[1]

    def with_gamma(self, gamma: np.ndarray, mode: str) -> "FairnessSpec":
        return replace(self, gamma=np.asarray(gamma, dtype=float), gamma_mode=mode)


# ---------------------------------------------------------------------------
# JSON file formats (indices are 1-based on disk)
# ---------------------------------------------------------------------------


def instance_to_dict(inst: Instance) -> dict:
    out: dict = {
        "m": inst.m,
        "n": inst.n,
        "p": inst.p,
        "structure": inst.structure,
        "P": inst.P.tolist(),
    }
    if inst.w is not None:
        out["w"] = inst.w.tolist()
    else:
        out["W"] = inst.W.tolist()
    if inst.truth is not None:
        out["truth"] = inst.truth.membership.tolist()
    return out


def instance_from_dict(data: dict) -> Instance:
    try:
        m, n, p = int(data["m"]), int(data["n"]), int(data["p"])
        structure = data.get("structure", "disjoint")
        P = np.asarray(data["P"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed instance payload: {exc}") from exc
    truth = None
    if data.get("truth") is not None:
        truth = GroupSample(np.asarray(data["truth"]))
    if "w" in data and data["w"] is not None:
        w = np.asarray(data["w"], dtype=float)
        if w.shape != (m,):
            raise DimensionMismatch("w must have length m")
        inst = Instance(m=m, n=n, p=p, W=dcg_matrix(w, n), P=P, structure=structure, w=w, truth=truth)
    elif "W" in data and data["W"] is not None:
        inst = Instance(
            m=m, n=n, p=p, W=np.asarray(data["W"], dtype=float), P=P, structure=structure, truth=truth
        )
    else:
        raise ValidationError("instance payload needs either 'w' or 'W'")
    return validate_instance(inst)


def load_instance(path: str) -> Instance:
    """Read an instance from a JSON file (also the loader for externally
    produced probability matrices)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise IoError(f"cannot read instance file {path}: {exc}") from exc
    return instance_from_dict(data)


def save_instance(inst: Instance, path: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(instance_to_dict(inst), fh)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write instance file {path}: {exc}") from exc


def ranking_to_dict(r: Ranking) -> dict:
    return {"m": r.m, "n": r.n, "slots": [s + 1 for s in r.slots]}


def ranking_from_dict(data: dict) -> Ranking:
    try:
        slots = [int(s) - 1 for s in data["slots"]]
        m = int(data["m"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed ranking payload: {exc}") from exc
    return Ranking(slots=tuple(slots), m=m)


def load_ranking(path: str) -> Ranking:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return ranking_from_dict(json.load(fh))
    except (OSError, json.JSONDecodeError) as exc:
        raise IoError(f"cannot read ranking file {path}: {exc}") from exc


def save_ranking(r: Ranking, path: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(ranking_to_dict(r), fh)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write ranking file {path}: {exc}") from exc
