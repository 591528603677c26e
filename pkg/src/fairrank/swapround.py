"""Dependent rounding of a convex combination of rankings into a single
ranking by iterated pairwise merging of matchings.

``merge`` repeatedly partitions the symmetric difference of two matchings
into swap units (``get_paths``) and moves one side toward the other, so that
every edge survives with probability proportional to its side's weight:

    Pr[e in K] ~= (alpha * [e in M] + beta * [e in N]) / (alpha + beta)

Applying a unit must keep both sides valid matchings, so units are applied
at the granularity of whole alternating paths/cycles (the connected
components of the symmetric difference); the subsets returned by
``get_paths`` select which component flips.  The side-selection weights
rho = (t-1)/|P| and sigma = t/|P'| skew the ideal probability by a factor
t/(t-1), which is far inside the Monte Carlo tolerance at the default
t = 100.

Unlike independent per-entry rounding, the output is always a complete
ranking, and prefix statistics concentrate around their fractional values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ConvexCombination, Ranking
from .errors import DimensionMismatch, IterationCapExceeded, ValidationError
from .rng import SeedLike, make_rng

#: Default chunking parameter of the merge procedure.
DEFAULT_T = 100

Edge = tuple[int, int]  # (item, slot)


@dataclass(frozen=True)
class Matching:
    """A slot-perfect matching between items and slots: items[j] occupies
    slot j.  Equivalent to a Ranking."""

    items: tuple[int, ...]
    m: int

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(int(i) for i in self.items))
        if len(set(self.items)) != len(self.items):
            raise ValidationError("matching repeats an item")

    @property
    def n(self) -> int:
        return len(self.items)

    @property
    def edges(self) -> frozenset[Edge]:
        return frozenset((item, slot) for slot, item in enumerate(self.items))

    def to_ranking(self) -> Ranking:
        return Ranking(slots=self.items, m=self.m)

    @staticmethod
    def from_ranking(r: Ranking) -> "Matching":
        return Matching(items=r.slots, m=r.m)


def _apply_unit(M: Matching, other: Matching, unit: frozenset[Edge]) -> Matching:
    """Flip M to the other side's edges on the slots covered by ``unit``."""
    items = list(M.items)
    for item, slot in unit:
        if items[slot] != other.items[slot]:
            items[slot] = other.items[slot]
    return Matching(items=tuple(items), m=M.m)


def _components(M: Matching, N: Matching) -> list[tuple[str, list[tuple[Edge, str]]]]:
    """Connected components of the symmetric difference M delta N, each as
    ("path" | "cycle", ordered alternating edge walk) with every edge tagged
    by its side ('M' or 'N').

    Slots where the matchings differ contribute one M-edge and one N-edge;
    consecutive edges of a walk alternately share a slot and an item.  Paths
    start at an item matched on one side only; cycles start at the M-edge of
    their smallest slot.  Ordering is deterministic.
    """
    if M.n != N.n or M.m != N.m:
        raise DimensionMismatch("matchings must cover the same items and slots")
    diff_slots = [j for j in range(M.n) if M.items[j] != N.items[j]]
    by_item: dict[int, list[tuple[int, str]]] = {}
    for j in diff_slots:
        by_item.setdefault(M.items[j], []).append((j, "M"))
        by_item.setdefault(N.items[j], []).append((j, "N"))
    seen_slots: set[int] = set()
    comps: list[tuple[str, list[tuple[Edge, str]]]] = []

    def walk(start_slot: int, start_side: str) -> list[tuple[Edge, str]]:
        out: list[tuple[Edge, str]] = []
        slot, side = start_slot, start_side
        while True:
            item = M.items[slot] if side == "M" else N.items[slot]
            out.append(((item, slot), side))
            seen_slots.add(slot)
            # cross the slot to the other side's edge
            other_side = "N" if side == "M" else "M"
            other_item = N.items[slot] if side == "M" else M.items[slot]
            out.append(((other_item, slot), other_side))
            # continue through other_item's remaining incident edge, if any
            nxt = [
                (j, s)
                for (j, s) in by_item.get(other_item, [])
                if not (j == slot and s == other_side)
            ]
            if not nxt:
                return out  # path ends at an item matched on one side only
            (slot, side) = nxt[0]
            if slot in seen_slots:
                return out  # closed the cycle

    # paths first: start at degree-one items (deterministic order)
    endpoints = sorted(
        (edges[0][0], item) for item, edges in by_item.items() if len(edges) == 1
    )
    for start_slot, item in endpoints:
        if start_slot in seen_slots:
            continue
        side = "M" if M.items[start_slot] == item else "N"
        comps.append(("path", walk(start_slot, side)))
    for j in diff_slots:  # remaining components are cycles
        if j not in seen_slots:
            comps.append(("cycle", walk(j, "M")))
    return comps


def get_paths(M: Matching, N: Matching, t: int) -> list[frozenset[Edge]]:
    """Split the symmetric difference M delta N into swap units.

    Three shapes: when |M delta N| <= 2t the whole difference is one unit;
    a single long path is cut into windows of 2t consecutive edges (offset
    so windows open on an N-side edge); a single long cycle yields one
    2t-edge window starting at every N-side edge, wrapping around.  With
    several long components each is split independently.  The union of the
    returned subsets always covers M delta N.
    """
    if t < 1:
        raise ValidationError("t must be a positive integer")
    comps = _components(M, N)
    if not comps:
        return []
    total = sum(len(walk) for _, walk in comps)
    if total <= 2 * t:
        return [frozenset(e for _, walk in comps for (e, _) in walk)]
    units: list[frozenset[Edge]] = []
    for kind, walk in comps:
        L = len(walk)
        edges = [e for (e, _) in walk]
        sides = [s for (_, s) in walk]
        if L <= 2 * t:
            units.append(frozenset(edges))
        elif kind == "path":
            offset = 1 if sides[0] == "N" else 0
            windows = []
            start = offset
            while start < L:
                windows.append(frozenset(edges[start : start + 2 * t]))
                start += 2 * t
            if offset == 1:  # keep the leading edge covered
                windows[0] = windows[0] | {edges[0]}
            units.extend(windows)
        else:
            for i in range(L):
                if sides[i] == "N":
                    units.append(
                        frozenset(edges[(i + j) % L] for j in range(2 * t))
                    )
    return units


def merge(
    alpha: float,
    M: Matching,
    beta: float,
    N: Matching,
    t: int = DEFAULT_T,
    rng: SeedLike = None,
    iteration_cap: int | None = None,
) -> Matching:
    """Merge two matchings with side weights alpha (for M) and beta (for N).

    Every swap resolves at least one component of the symmetric difference,
    so the loop terminates within the component count; the hard cap guards
    against a corrupted state and raises IterationCapExceeded.
    """
    if alpha <= 0 or beta <= 0:
        raise ValidationError("alpha and beta must be positive")
    if t < 2:
        raise ValidationError("merge needs t >= 2 (t = 1 degenerates the side weights)")
    gen = make_rng(rng)
    cap = iteration_cap if iteration_cap is not None else 10 * M.n + 100
    for _ in range(cap):
        if M.items == N.items:
            return M
        P = get_paths(M, N, t)
        P2 = get_paths(N, M, t)
        rho = (t - 1) / len(P)
        sigma = t / len(P2)
        p = beta * sigma / (alpha * rho + beta * sigma)
        comps = _components(M, N)
        comp_of = {}
        for ci, (_, walk) in enumerate(comps):
            for e, _ in walk:
                comp_of[e] = ci
        if gen.random() <= p:
            unit = P[int(gen.integers(len(P)))]
            closure = _closure(unit, comps, comp_of)
            M = _apply_unit(M, N, closure)
        else:
            unit = P2[int(gen.integers(len(P2)))]
            closure = _closure(unit, comps, comp_of)
            N = _apply_unit(N, M, closure)
    raise IterationCapExceeded("merge failed to converge within its cap")


def _closure(unit: frozenset[Edge], comps, comp_of) -> frozenset[Edge]:
    """Extend a swap unit to the full component(s) it touches, so applying
    it preserves matching validity."""
    ids = {comp_of[e] for e in unit if e in comp_of}
    out: set[Edge] = set()
    for ci in ids:
        out.update(e for e, _ in comps[ci][1])
    return frozenset(out)


def swap_round(
    comb: ConvexCombination,
    t: int = DEFAULT_T,
    rng: SeedLike = None,
) -> Ranking:
    """Round a convex combination of rankings to one ranking, preserving the
    per-entry marginals E[matrix(R)] = sum_t alpha_t matrix(R_t)."""
    gen = make_rng(rng)
    terms = list(comb.terms)
    acc = Matching.from_ranking(terms[0][1])
    cum = terms[0][0]
    for weight, ranking in terms[1:]:
        acc = merge(weight, Matching.from_ranking(ranking), cum, acc, t=t, rng=gen)
        cum += weight
    return acc.to_ranking()
