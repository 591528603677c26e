import math

import numpy as np
import pytest

from conftest import random_instance
from fairrank.core import (
    ConvexCombination,
    FairnessSpec,
    GroupSample,
    Instance,
    Ranking,
    utility,
)
from fairrank.errors import InfeasibleProgram, Stuck
from fairrank.fairspec import (
    build_constraints,
    make_fairness_spec,
    relaxation_factor,
    u_equal_representation,
    u_phi,
)
from fairrank.lpsolve import brute_force_optimal
from fairrank.noiselab import half_half_instance, imputation_failure_instance
from fairrank.rankers import (
    csv_greedy,
    gak_detgreedy,
    impute_bayes,
    impute_independent,
    mc_baseline,
    nresilient,
    sample_from_combination,
    sj_sample,
    uncons,
)
from oracles import best_ranking, prefix_group_counts


def _hard_instance(w, labels, n):
    """Instance with 0/1 membership probabilities from disjoint labels."""
    labels = np.asarray(labels)
    p = int(labels.max()) + 1 if labels.max() >= 1 else 2
    P = np.zeros((len(w), p))
    P[np.arange(len(w)), labels] = 1.0
    return Instance.from_values(np.asarray(w, dtype=float), n, P), GroupSample.from_labels(
        labels, p
    )


class TestUncons:
    def test_sorting_example(self):
        inst = Instance.from_values(np.array([3.0, 1.0, 2.0]), 2, np.full((3, 2), 0.5))
        assert uncons(inst).slots == (0, 2)

    def test_ties_broken_by_lower_index(self):
        inst = Instance.from_values(np.array([1.0, 1.0, 1.0]), 2, np.full((3, 2), 0.5))
        assert uncons(inst).slots == (0, 1)

    def test_matches_enumeration(self, rng):
        for _ in range(10):
            inst = random_instance(rng, m=6, n=3)
            assert utility(uncons(inst), inst.W) == pytest.approx(
                best_ranking(inst.W, 6, 3)[1]
            )


class TestImputation:
    def test_bayes_most_likely(self):
        P = np.array([[0.9, 0.1], [0.2, 0.8]])
        assert impute_bayes(P).labels().tolist() == [0, 1]

    def test_bayes_tie_lowest_index(self):
        P = np.array([[0.5, 0.5]])
        assert impute_bayes(P).labels().tolist() == [0]

    def test_bayes_borderline_rows(self):
        beta = 0.01
        P = np.array([[0.5 + beta, 0.5 - beta]] * 4)
        assert (impute_bayes(P).labels() == 0).all()

    def test_independent_certain(self):
        P = np.array([[1.0, 0.0]] * 6)
        gs = impute_independent(P, "disjoint", 0)
        assert (gs.labels() == 0).all()

    def test_independent_frequency(self):
        P = np.array([[0.5, 0.5]])
        hits = sum(
            impute_independent(P, "disjoint", s).labels()[0] == 0 for s in range(10_000)
        )
        assert hits / 10_000 == pytest.approx(0.5, abs=0.01)

    def test_independent_cross_item_independence(self):
        P = np.full((2, 2), 0.5)
        a = np.empty(5000)
        b = np.empty(5000)
        for s in range(5000):
            lab = impute_independent(P, "disjoint", s).labels()
            a[s], b[s] = lab
        assert abs(np.corrcoef(a, b)[0, 1]) < 3 / math.sqrt(5000) + 0.01


class TestCsvGreedy:
    def test_slack_bounds_reduce_to_uncons(self, rng):
        inst = random_instance(rng, m=6, n=3)
        groups = impute_bayes(inst.P)
        U = np.full((3, 2), 3.0)
        assert csv_greedy(inst, groups, U).slots == uncons(inst).slots

    def test_alternation_after_bound_binds(self):
        inst, groups = _hard_instance([4.0, 3.0, 2.0, 1.0], [0, 0, 1, 1], 4)
        U = u_equal_representation(4, 2)
        assert csv_greedy(inst, groups, U).slots == (0, 2, 1, 3)

    def test_stuck_when_no_headroom(self):
        inst, groups = _hard_instance([1.0, 1.0], [0, 1], 1)
        with pytest.raises(Stuck):
            csv_greedy(inst, groups, np.zeros((1, 2)))

    def test_prefix_constraints_hold(self, rng):
        for _ in range(10):
            inst = random_instance(rng, m=8, n=4)
            groups = impute_bayes(inst.P)
            U = u_phi(4, 2, float(rng.uniform(1, 2)))
            try:
                r = csv_greedy(inst, groups, U)
            except Stuck:
                continue
            counts = prefix_group_counts(r.slots, groups.labels(), 2)
            assert (counts <= U + 1e-9).all()


class TestGakDetGreedy:
    def test_single_group_is_uncons(self, rng):
        inst = random_instance(rng, m=5, n=3)
        groups = GroupSample.from_labels([0] * 5, 1)
        assert gak_detgreedy(inst, groups, [1.0]).slots == uncons(inst).slots

    def test_even_positions_balanced(self):
        inst, groups = _hard_instance([8.0, 7.0, 6.0, 5.0, 2.0, 1.0], [0, 0, 0, 1, 1, 1], 6)
        r = gak_detgreedy(inst, groups, [0.5, 0.5])
        counts = prefix_group_counts(r.slots, groups.labels(), 2)
        for k in (2, 4, 6):
            assert counts[k - 1, 0] == counts[k - 1, 1] == k / 2

    def test_stuck_on_empty_group_with_floor(self):
        inst, _ = _hard_instance([2.0, 1.0], [0, 0], 2)
        groups = GroupSample.from_labels([0, 0], 2)
        with pytest.raises(Stuck):
            gak_detgreedy(inst, groups, [0.5, 0.5])


class TestSjSample:
    def test_integral_lp_deterministic(self):
        inst, groups = _hard_instance([4.0, 3.0, 2.0, 1.0], [0, 0, 1, 1], 4)
        U = u_equal_representation(4, 2)
        outs = {sj_sample(inst, groups, U, s).slots for s in range(10)}
        assert len(outs) == 1

    def test_sampling_proportional_to_weights(self):
        r1 = Ranking(slots=(0, 1), m=2)
        r2 = Ranking(slots=(1, 0), m=2)
        comb = ConvexCombination(terms=((0.5, r1), (0.5, r2)))
        hits = sum(sample_from_combination(comb, s) == r1 for s in range(10_000))
        assert hits / 10_000 == pytest.approx(0.5, abs=0.02)

    def test_expected_prefix_counts_match_combination(self):
        r1 = Ranking(slots=(0, 2), m=4)
        r2 = Ranking(slots=(1, 3), m=4)
        comb = ConvexCombination(terms=((0.25, r1), (0.75, r2)))
        freq = np.zeros((4, 2))
        trials = 8000
        for s in range(trials):
            out = sample_from_combination(comb, s)
            freq[list(out.slots), np.arange(2)] += 1
        freq /= trials
        assert np.abs(freq - comb.mean_matrix()).max() < 0.02

    def test_respects_constraints(self, rng):
        inst, groups = _hard_instance(rng.random(6), rng.integers(0, 2, 6), 4)
        U = u_equal_representation(4, 2)
        try:
            r = sj_sample(inst, groups, U, 3)
        except InfeasibleProgram:
            return
        counts = prefix_group_counts(r.slots, groups.labels(), 2)
        assert (counts <= U + 1e-9).all()


class TestMcBaseline:
    def _spec(self, n, p):
        return make_fairness_spec(u_phi(n, p, 1.5), "heuristic", c=1.5)

    def test_slack_bound_reduces_to_uncons(self, rng):
        inst = random_instance(rng, m=6, n=3)
        spec = make_fairness_spec(u_phi(3, 2, 2.0), "heuristic")
        assert mc_baseline(inst, spec, 2.0, 0).slots == uncons(inst).slots

    def test_selected_set_respects_bound(self, rng):
        for trial in range(5):
            inst = random_instance(rng, m=12, n=4)
            phi = 1.5
            spec = make_fairness_spec(u_phi(4, 2, phi), "heuristic")
            r = mc_baseline(inst, spec, phi, trial)
            bound = phi / 2 * 4 * relaxation_factor(spec.c, float(spec.gamma[3]))
            load = inst.P[list(r.slots)].sum(axis=0)
            assert (load <= bound + 1e-6).all()

    def test_prefix_violation_witness(self):
        # all high-value items in one group: the last-position bound holds
        # but the k = 2 prefix bound is violated
        inst, groups = _hard_instance(
            [9.0, 8.0, 7.0, 6.0, 2.0, 1.0], [0, 0, 0, 0, 1, 1], 4
        )
        phi = 1.0
        spec = make_fairness_spec(u_phi(4, 2, phi), "heuristic")
        r = mc_baseline(inst, spec, phi, 0)
        counts = prefix_group_counts(r.slots, groups.labels(), 2)
        U = u_phi(4, 2, phi)
        assert counts[1, 0] > U[1, 0]  # violated at position 2
        bound = phi / 2 * 4 * relaxation_factor(spec.c, float(spec.gamma[3]))
        assert counts[3, 0] <= bound + 1e-9  # held at position n

    def test_infeasible(self):
        P = np.zeros((4, 2))
        P[:, 0] = 1.0
        inst = Instance(m=4, n=2, p=2, W=np.ones((4, 2)), P=P)
        spec = make_fairness_spec(u_phi(2, 2, 1.0), "explicit", gamma=np.zeros(2))
        with pytest.raises(InfeasibleProgram):
            mc_baseline(inst, spec, 0.5 if False else 1.0, 0)


class TestNResilient:
    def test_slack_gamma_matches_uncons_utility(self, rng):
        inst = random_instance(rng, m=8, n=4)
        spec = make_fairness_spec(
            u_equal_representation(4, 2), "explicit", gamma=np.full(4, 100.0)
        )
        r = nresilient(inst, spec, seed=1)
        assert utility(r, inst.W) == pytest.approx(utility(uncons(inst), inst.W))

    def test_output_valid_and_seed_deterministic(self, rng):
        inst = random_instance(rng, m=10, n=5)
        spec = make_fairness_spec(u_equal_representation(5, 2), "heuristic")
        r1 = nresilient(inst, spec, seed=7)
        r2 = nresilient(inst, spec, seed=7)
        assert r1 == r2
        assert len(set(r1.slots)) == 5

    def test_utility_against_epsilon_delta_oracle(self, rng):
        # Over seeds, mean utility must clear (1 - 1/d) V - slack where V is
        # the best utility at the ((c - sqrt(c)) gamma, delta)-constraint
        inst = random_instance(rng, m=4, n=2)
        n, p, c, delta, d = 2, 2, 1.5, 0.1, 3.0
        spec = make_fairness_spec(
            u_equal_representation(n, p), "theoretical", c=c, delta=delta, d=d
        )
        eps = (c - math.sqrt(c)) * spec.gamma
        _, V = brute_force_optimal(
            inst, spec, "epsilon-delta", epsilon=eps, trials=400, seed=0
        )
        utils = [utility(nresilient(inst, spec, seed=s), inst.W) for s in range(20)]
        slack = math.sqrt(d * n * math.log(2 * n * p / delta))
        assert np.mean(utils) >= (1 - 1 / d) * V - slack

    def test_runs_on_half_half_instance(self):
        # uniform probabilities admit no tight high-probability bound, yet
        # the relaxed program stays feasible and rounds to a valid ranking
        m, n = 12, 6
        P = half_half_instance(m)
        inst = Instance.from_values(np.linspace(1, 0.5, m), n, P)
        spec = make_fairness_spec(u_equal_representation(n, 2), "theoretical", c=1.5, delta=0.1)
        r = nresilient(inst, spec, seed=2)
        assert len(set(r.slots)) == n

    def test_infeasible_propagates(self):
        P = np.zeros((4, 2))
        P[:, 0] = 1.0
        inst = Instance(m=4, n=2, p=2, W=np.ones((4, 2)), P=P)
        spec = make_fairness_spec(
            u_equal_representation(2, 2), "explicit", gamma=np.zeros(2)
        )
        with pytest.raises(InfeasibleProgram):
            nresilient(inst, spec, seed=0)


class TestImputationFailureDemonstration:
    def test_bayes_imputation_misleads_greedy(self):
        # the borderline items are imputed with the sure group-1 items, so
        # the greedy "balanced" ranking overfills true group 2 at factor
        # 11/10 with probability > 1/2
        n = 20
        inst = imputation_failure_instance("bayes", n, beta=0.01)
        groups = impute_bayes(inst.P)
        U = u_equal_representation(n, 2)
        r = csv_greedy(inst, groups, U)
        # ranking alternates sure-group-2 (type A) and borderline (type B)
        assert set(r.slots) == set(range(n))
        from fairrank.metrics import violation_probe

        probe = violation_probe(r, inst.P, U, epsilon=0.1, trials=4000, seed=0)
        sigma = math.sqrt(0.25 / 4000)
        assert probe.delta_hat > 0.5 - 3 * sigma

    def test_independent_kind_has_safe_ranking(self):
        inst = imputation_failure_instance("independent", 6, beta=0.05, phi=0.05)
        # alternating the two sure blocks keeps every prefix within bounds
        sure1 = list(range(inst.m - 12, inst.m - 6))
        sure2 = list(range(inst.m - 6, inst.m))
        slots = tuple(x for pair in zip(sure2, sure1) for x in pair)[: inst.n]
        r = Ranking(slots=slots, m=inst.m)
        from fairrank.metrics import violation_probe

        U = u_equal_representation(inst.n, 2)
        probe = violation_probe(r, inst.P, U, epsilon=0.0, trials=300, seed=0)
        assert probe.delta_hat == 0.0


class TestPositionWeightedConstraints:
    def test_discounted_pipeline_end_to_end(self, rng):
        # Appendix-style position discounts flow through constraint
        # construction, the LP, and rounding
        n, p = 6, 2
        inst = random_instance(rng, m=12, n=n, p=p)
        v = 1.0 / np.log(np.arange(2, n + 2))
        U = u_equal_representation(n, p)
        spec = make_fairness_spec(
            U, "position-weighted", psi=0.5, c=1.5, delta=0.1, d=4.0, v=v
        )
        r = nresilient(inst, spec, seed=4)
        assert len(set(r.slots)) == n
        # the discounted expected counts respect the relaxed bounds
        from fairrank.fairspec import build_constraints
        cons = build_constraints(inst.P, spec)
        R = r.matrix()
        for con in cons:
            assert con.value(R) <= con.bound + con.item_weights.max() * v.max() + 1e-9

    def test_discounted_probe_consistency(self, rng):
        inst = random_instance(rng, m=10, n=6, p=2)
        v = np.full(6, 0.5)
        r = uncons(inst)
        from fairrank.metrics import violation_probe
        U = u_equal_representation(6, 2) * 2
        probe = violation_probe(r, inst.P, U, 0.0, trials=400, seed=0, v=v)
        # halved discounts on doubled bounds can never trip
        assert probe.delta_hat == 0.0


class TestViolationGuaranteeByGammaMode:
    """The high-probability fairness guarantee is a property of the
    theorem's own relaxation vector.  The simulation heuristic trades that
    guarantee for tight prefix balance: at epsilon = c * gamma_heuristic the
    bound sits essentially at the hard cap and is exceeded almost surely.
    """

    def _probe(self, mode, seed=11):
        from fairrank.metrics import violation_probe
        from fairrank.noiselab import FdrSynthSpec, synth_nonuniform_fdr

        inst = synth_nonuniform_fdr(FdrSynthSpec(m=120, n=10, tau=0.25, weight=0.45), seed)
        U = u_equal_representation(10, 2)
        spec = make_fairness_spec(U, mode, c=1.5, delta=0.1, d=4.0)
        r = nresilient(inst, spec, seed=seed, method="highs")
        return violation_probe(r, inst.P, U, epsilon=1.5 * spec.gamma, trials=600, seed=3)

    def test_theoretical_gamma_meets_delta(self):
        probe = self._probe("theoretical")
        assert probe.delta_hat <= 0.1 + 3 * math.sqrt(0.1 * 0.9 / 600)

    def test_heuristic_gamma_forfeits_the_guarantee(self):
        probe = self._probe("heuristic")
        assert 0.0 <= probe.delta_hat <= 1.0
        # no delta-threshold assertion: the heuristic relaxation is far
        # below the theorem's requirement, and measured violation rates at
        # its own c*gamma are near one on binding instances
