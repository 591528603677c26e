import numpy as np
import pytest

from conftest import random_instance
from fairrank.core import FairnessSpec, Instance
from fairrank.errors import InfeasibleProgram, TooLarge
from fairrank.fairspec import (
    LinearConstraint,
    build_constraints,
    make_fairness_spec,
    u_equal_representation,
    u_phi,
)
from fairrank.lpsolve import (
    brute_force_optimal,
    dense_simplex,
    solve_relaxation,
    unconstrained_optimal,
)
from oracles import all_rankings, best_ranking, prefix_group_counts, ranking_utility

METHODS = ("simplex", "highs")


def _spec(n, p, gamma=0.0, c=1.5):
    U = u_equal_representation(n, p)
    return FairnessSpec(U=U, gamma=np.full(n, gamma), c=c, delta=0.1, d=3.0)


class TestDenseSimplex:
    def test_tiny_lp(self):
        # max x + y st x + y <= 1.5, x <= 1, y <= 1
        x, obj, status = dense_simplex(
            np.array([1.0, 1.0]),
            np.array([[1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]),
            np.array([1.5, 1.0, 1.0]),
            None,
            None,
        )
        assert status == "Optimal"
        assert obj == pytest.approx(1.5)

    def test_equality_and_infeasible(self):
        # x + y = 2 with x, y <= 0.5 is infeasible
        _, _, status = dense_simplex(
            np.array([1.0, 0.0]),
            np.array([[1.0, 0.0], [0.0, 1.0]]),
            np.array([0.5, 0.5]),
            np.array([[1.0, 1.0]]),
            np.array([2.0]),
        )
        assert status == "Infeasible"

    def test_matches_scipy_on_random_lps(self, rng):
        from scipy.optimize import linprog

        for _ in range(30):
            nvar = int(rng.integers(2, 7))
            nub = int(rng.integers(1, 5))
            c = rng.random(nvar)
            A = rng.random((nub, nvar))
            b = rng.random(nub) + 0.5
            Aeq = np.ones((1, nvar))
            beq = np.array([1.0])
            mine = dense_simplex(c, A, b, Aeq, beq)
            ref = linprog(-c, A_ub=A, b_ub=b, A_eq=Aeq, b_eq=beq, method="highs")
            if ref.status == 2:
                assert mine[2] == "Infeasible"
            else:
                assert mine[2] == "Optimal"
                assert mine[1] == pytest.approx(-ref.fun, abs=1e-7)


class TestSolveRelaxation:
    @pytest.mark.parametrize("method", METHODS)
    def test_single_cell(self, method):
        inst = Instance(m=1, n=1, p=2, W=np.array([[1.0]]), P=np.array([[0.5, 0.5]]))
        sol = solve_relaxation(inst, [], method=method)
        assert sol.status == "Optimal"
        assert sol.objective == pytest.approx(1.0)
        assert sol.assignment.X[0, 0] == pytest.approx(1.0)

    @pytest.mark.parametrize("method", METHODS)
    def test_contradictory_constraints_infeasible(self, method):
        inst = Instance(
            m=2, n=1, p=2, W=np.ones((2, 1)), P=np.full((2, 2), 0.5)
        )
        con = LinearConstraint(
            item_weights=np.ones(2), pos_weights=np.ones(1), bound=0.0, tag=(0, 0)
        )
        sol = solve_relaxation(inst, [con], method=method)
        assert sol.status == "Infeasible"

    @pytest.mark.parametrize("method", METHODS)
    def test_lp_dominates_integral_oracle(self, method, rng):
        for trial in range(15):
            inst = random_instance(rng, m=4, n=2, p=2)
            spec = _spec(2, 2, gamma=float(rng.random() * 0.5))
            cons = build_constraints(inst.P, spec)
            sol = solve_relaxation(inst, cons, method=method)

            def feasible(slots):
                R = np.zeros((4, 2))
                R[list(slots), np.arange(2)] = 1.0
                return all(c.value(R) <= c.bound + 1e-9 for c in cons)

            oracle = best_ranking(inst.W, 4, 2, feasible)
            if oracle is None:
                continue
            assert sol.status == "Optimal"
            assert sol.objective >= oracle[1] - 1e-6

    def test_backends_agree(self, rng):
        for _ in range(10):
            inst = random_instance(rng, m=5, n=3, p=2)
            cons = build_constraints(inst.P, _spec(3, 2, gamma=0.2))
            s1 = solve_relaxation(inst, cons, method="simplex")
            s2 = solve_relaxation(inst, cons, method="highs")
            assert s1.status == s2.status == "Optimal"
            assert s1.objective == pytest.approx(s2.objective, abs=1e-7)

    def test_solution_feasibility_invariants(self, rng):
        inst = random_instance(rng, m=8, n=4, p=2)
        cons = build_constraints(inst.P, _spec(4, 2))
        sol = solve_relaxation(inst, cons, method="highs")
        X = sol.assignment.X
        assert np.abs(X.sum(axis=0) - 1).max() <= 1e-7
        assert X.sum(axis=1).max() <= 1 + 1e-7
        assert X.min() >= -1e-9

    def test_monotone_in_bounds(self, rng):
        inst = random_instance(rng, m=6, n=3, p=2)
        tight = build_constraints(inst.P, _spec(3, 2, gamma=0.0))
        loose = build_constraints(inst.P, _spec(3, 2, gamma=0.8))
        obj_tight = solve_relaxation(inst, tight, method="highs").objective
        obj_loose = solve_relaxation(inst, loose, method="highs").objective
        assert obj_loose >= obj_tight - 1e-9

    def test_hard_groups_match_classic_program(self, rng):
        # gamma = 0 with a 0/1 disjoint P reduces to the classic constrained LP
        for _ in range(8):
            m, n, p = 6, 3, 2
            labels = rng.integers(0, p, size=m)
            P = np.zeros((m, p))
            P[np.arange(m), labels] = 1.0
            w = rng.random(m)
            inst = Instance.from_values(w, n, P)
            spec = _spec(n, p, gamma=0.0)
            cons = build_constraints(P, spec)
            sol = solve_relaxation(inst, cons, method="highs")

            def feasible(slots):
                counts = prefix_group_counts(slots, labels, p)
                return (counts <= spec.U + 1e-9).all()

            oracle = best_ranking(inst.W, m, n, feasible)
            assert sol.objective >= oracle[1] - 1e-6


class TestBruteForce:
    def test_single_ranking(self):
        inst = Instance(m=1, n=1, p=2, W=np.array([[2.0]]), P=np.array([[0.5, 0.5]]))
        spec = FairnessSpec(U=np.ones((1, 2)), gamma=np.zeros(1), c=1.5, delta=0.1, d=3.0)
        r, u = brute_force_optimal(inst, spec, "expected")
        assert r.slots == (0,) and u == pytest.approx(2.0)

    def test_slack_constraints_reduce_to_sorting(self, rng):
        inst = random_instance(rng, m=3, n=2, p=2)
        spec = _spec(2, 2, gamma=100.0)
        r, u = brute_force_optimal(inst, spec, "expected")
        expected = best_ranking(inst.W, 3, 2)
        assert u == pytest.approx(expected[1])

    def test_matches_independent_enumeration(self, rng):
        inst = random_instance(rng, m=4, n=2, p=2)
        spec = _spec(2, 2, gamma=0.3)
        cons = build_constraints(inst.P, spec)
        r, u = brute_force_optimal(inst, spec, "expected")

        def feasible(slots):
            R = np.zeros((4, 2))
            R[list(slots), np.arange(2)] = 1.0
            return all(c.value(R) <= c.bound + 1e-9 for c in cons)

        oracle = best_ranking(inst.W, 4, 2, feasible)
        assert u == pytest.approx(oracle[1])

    def test_too_large(self, rng):
        inst = random_instance(rng, m=9, n=2, p=2)
        with pytest.raises(TooLarge):
            brute_force_optimal(inst, _spec(2, 2), "expected")

    def test_epsilon_delta_mode_runs(self, rng):
        inst = random_instance(rng, m=4, n=2, p=2)
        spec = _spec(2, 2)
        r, u = brute_force_optimal(
            inst, spec, "epsilon-delta", epsilon=2.0, trials=200, seed=1
        )
        assert u <= best_ranking(inst.W, 4, 2)[1] + 1e-12

    def test_epsilon_delta_infeasible(self):
        # all items surely in group 1 and a zero-relaxation bound of one:
        # the prefix of length 2 always has two group-1 items
        P = np.zeros((4, 2))
        P[:, 0] = 1.0
        inst = Instance(m=4, n=2, p=2, W=np.ones((4, 2)), P=P)
        spec = FairnessSpec(U=np.ones((2, 2)), gamma=np.zeros(2), c=1.5, delta=0.1, d=3.0)
        with pytest.raises(InfeasibleProgram):
            brute_force_optimal(inst, spec, "epsilon-delta", epsilon=0.0, trials=200, seed=0)


def test_unconstrained_optimal_is_exhaustive_max(rng):
    for _ in range(10):
        inst = random_instance(rng, m=5, n=3, p=2)
        r, u = unconstrained_optimal(inst)
        assert u == pytest.approx(best_ranking(inst.W, 5, 3)[1])
