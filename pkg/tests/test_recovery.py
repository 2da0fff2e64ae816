import json
import math

import numpy as np
import pytest

from isingmeta import (
    IsingParameter,
    NoDelta,
    SignedEdgeSet,
    edge_inclusion_threshold,
    estimate_novel,
    f1_score,
    gibbs_sample,
    lambda_novel,
    lambda_pooled,
    mixed_couplings,
    random_max_degree_graph,
    recover_support_union,
    sample_task_family,
    score,
    solve_node_l1,
)
from isingmeta.recovery import load_edge_set_json, save_recovery_json


class TestPenaltySchedules:
    def test_pooled_formula_shape(self):
        assert lambda_pooled(3, 10, 4) == pytest.approx(math.sqrt(math.log(3) / 40), abs=1e-15)

    def test_pooled_known_value(self):
        assert lambda_pooled(6, 50, 48) == pytest.approx(0.02732, abs=5e-6)

    def test_pooled_scaling(self):
        base = lambda_pooled(6, 50, 48)
        assert lambda_pooled(6, 100, 48) == pytest.approx(base / math.sqrt(2), rel=1e-12)
        assert lambda_pooled(6, 50, 96) == pytest.approx(base / math.sqrt(2), rel=1e-12)

    def test_novel_known_values(self):
        assert lambda_novel(3, 297) == pytest.approx(0.06081, abs=1e-5)
        assert lambda_novel(2, 100) == pytest.approx(0.08326, abs=1e-5)

    def test_novel_scaling(self):
        assert lambda_novel(3, 400) == pytest.approx(lambda_novel(3, 100) / 2, rel=1e-12)

    def test_novel_rejects_degenerate_degree(self):
        with pytest.raises(ValueError):
            lambda_novel(1, 100)

    def test_inclusion_threshold(self):
        assert edge_inclusion_threshold(1.0, 4, 0.05) == pytest.approx(1.0, rel=1e-12)
        assert edge_inclusion_threshold(1.0, 4, 0.10) == pytest.approx(2.0, rel=1e-12)


class TestSignedEdgeSet:
    def test_from_parameter(self):
        theta = IsingParameter.from_edges(4, [(0, 1, 0.5), (2, 3, -0.5)])
        edges = SignedEdgeSet.from_parameter(theta)
        assert edges.entries == {(0, 1): 1, (2, 3): -1}
        assert edges.neighbors(3) == {2}
        assert edges.signed_neighbors(3) == {2: -1}

    def test_validation(self):
        with pytest.raises(ValueError):
            SignedEdgeSet(3, {(1, 0): 1})
        with pytest.raises(ValueError):
            SignedEdgeSet(3, {(0, 1): 2})

    def test_json_round_trip(self, tmp_path):
        edges = SignedEdgeSet(4, {(0, 2): -1, (1, 3): 1})
        path = tmp_path / "edges.json"
        path.write_text(json.dumps(edges.to_jsonable()))
        again = load_edge_set_json(path)
        assert again == edges


class TestScore:
    def test_perfect(self):
        edges = SignedEdgeSet(4, {(0, 1): 1, (2, 3): -1})
        result = score(edges, edges)
        assert (result.precision, result.recall, result.f1) == (1.0, 1.0, 1.0)
        assert result.exact_match

    def test_empty_estimate_nonempty_truth(self):
        truth = SignedEdgeSet(4, {(0, 1): 1})
        result = score(SignedEdgeSet(4, {}), truth)
        assert result.recall == 0.0
        assert result.precision == 0.0
        assert not result.exact_match

    def test_both_empty(self):
        result = score(SignedEdgeSet(3, {}), SignedEdgeSet(3, {}))
        assert (result.precision, result.recall) == (1.0, 1.0)
        assert result.exact_match

    def test_harmonic_mean_value(self):
        assert f1_score(0.8837, 0.9007) == pytest.approx(0.8921, abs=1e-4)

    def test_sign_sensitivity(self):
        truth = SignedEdgeSet(3, {(0, 1): 1, (1, 2): -1})
        flipped = SignedEdgeSet(3, {(0, 1): 1, (1, 2): 1})
        unsigned = score(flipped, truth, signed=False)
        signed = score(flipped, truth, signed=True)
        assert unsigned.precision == 1.0 and unsigned.exact_match
        assert signed.precision == 0.5 and not signed.exact_match


def small_family(seed, p=5, d=2, k=3, n=60):
    rng = np.random.default_rng(seed)
    edges = random_max_degree_graph(p, d, rng)
    theta = mixed_couplings(p, edges, rng)
    family = sample_task_family(theta, NoDelta(), k, rng)
    sets = [gibbs_sample(task, n, 10, rng) for task in family.task_params]
    return theta, sets


class TestRecoverSupportUnion:
    def test_single_task_reduces_to_per_node_solves(self):
        theta, sets = small_family(0, k=1)
        lam = 0.08
        result = recover_support_union(sets[:1], lam)
        for r in range(theta.p):
            direct = solve_node_l1(r, sets[:1], lam)
            np.testing.assert_array_equal(
                result.per_node[r].estimate.values, direct.estimate.values
            )

    def test_large_penalty_empty(self):
        theta, sets = small_family(1)
        result = recover_support_union(sets, 5.0)
        assert len(result.edge_set) == 0
        assert result.all_converged

    def test_strong_signal_exact_recovery(self):
        # fixed-seed end-to-end run against the generator's ground truth
        rng = np.random.default_rng(3)
        edges = random_max_degree_graph(4, 2, rng)
        theta = mixed_couplings(4, edges, rng)
        family = sample_task_family(theta, NoDelta(), 4, rng)
        sets = [gibbs_sample(task, 10_000, 15, rng) for task in family.task_params]
        lam = lambda_pooled(4, 10_000, 4)
        result = recover_support_union(sets, lam)
        assert result.all_converged
        assert result.edge_set.pairs() == set(theta.support())

    def test_and_subset_of_or(self):
        for seed in range(5):
            theta, sets = small_family(seed, n=40)
            lam = 0.1
            and_set = recover_support_union(sets, lam, reconcile="and").edge_set
            or_set = recover_support_union(sets, lam, reconcile="or").edge_set
            max_set = recover_support_union(sets, lam, reconcile="max").edge_set
            assert and_set.pairs() <= or_set.pairs()
            assert max_set.pairs() == or_set.pairs()

    def test_signs_follow_larger_magnitude(self):
        theta, sets = small_family(7, n=400)
        result = recover_support_union(sets, 0.05, min_magnitude=0.25)
        truth = SignedEdgeSet.from_parameter(theta)
        for pair, sign in result.edge_set.entries.items():
            if pair in truth.entries:
                assert sign == truth.entries[pair]

    def test_result_json_round_trip(self, tmp_path):
        theta, sets = small_family(2, n=40)
        result = recover_support_union(sets, 0.1)
        path = tmp_path / "recovery.json"
        save_recovery_json(result, path)
        doc = json.loads(path.read_text())
        assert doc["p"] == theta.p
        assert doc["lambda"] == result.lambda_used
        assert len(doc["per_node"]) == theta.p
        assert load_edge_set_json(path) == result.edge_set


class TestEstimateNovel:
    def test_empty_union_gives_empty_result(self):
        theta, sets = small_family(4)
        union = SignedEdgeSet(theta.p, {})
        result = estimate_novel(sets[0], union, 0.05)
        assert len(result.edge_set) == 0
        for rep in result.per_node:
            np.testing.assert_array_equal(rep.estimate.values, 0.0)

    def test_complete_union_equals_unrestricted(self):
        theta, sets = small_family(5, n=200)
        complete = SignedEdgeSet(
            theta.p, {(s, t): 1 for s in range(theta.p) for t in range(s + 1, theta.p)}
        )
        lam = 0.05
        restricted = estimate_novel(sets[0], complete, lam)
        unrestricted = recover_support_union(sets[:1], lam)
        for a, b in zip(restricted.per_node, unrestricted.per_node):
            np.testing.assert_allclose(a.estimate.values, b.estimate.values, atol=1e-10)

    def test_output_inside_union(self):
        for seed in range(8):
            theta, sets = small_family(seed, n=120)
            rng = np.random.default_rng(100 + seed)
            pairs = [(s, t) for s in range(theta.p) for t in range(s + 1, theta.p)]
            chosen = {
                pairs[i]: 1 for i in rng.choice(len(pairs), size=4, replace=False)
            }
            union = SignedEdgeSet(theta.p, chosen)
            result = estimate_novel(sets[0], union, 0.02)
            assert result.edge_set.pairs() <= union.pairs()
