import numpy as np
import pytest

from isingmeta import (
    BracketingError,
    FiniteSupportDelta,
    IsingParameter,
    NoDelta,
    dependency_check,
    find_zero_bias_coupling,
    incoherence_check,
    pooled_score_bias,
    pooled_score_bias_norm,
    population_fisher,
    sample_fisher,
    sample_task_family,
    triangle_two_edge_family,
)
from isingmeta.core import pair_count, sample_exact
from isingmeta.diagnostics import SingularMatrixError, save_fisher_json


def random_parameter(p, rng, scale=0.6):
    return IsingParameter(p, rng.normal(scale=scale, size=pair_count(p)))


def random_spins(p, n, rng):
    return rng.choice([-1.0, 1.0], size=(n, p))


def complex_step_hessian(theta_eval, sample_sets, r, h=1e-10):
    """Oracle: Hessian of the pooled node loss by complex-step differentiation
    of an independently coded analytic gradient."""
    mats = [np.asarray(m, dtype=float) for m in sample_sets]
    p = mats[0].shape[1]
    w0 = theta_eval.node_view(r).values.astype(complex)

    def grad(w):
        g = np.zeros(p - 1, dtype=complex)
        for x in mats:
            y = x[:, r]
            a = np.delete(x, r, axis=1)
            omega = a @ w
            g += -(a.T @ (y - np.tanh(omega))) / (y.size * len(mats))
        return g

    hess = np.zeros((p - 1, p - 1))
    for j in range(p - 1):
        bumped = w0.copy()
        bumped[j] += 1j * h
        hess[:, j] = grad(bumped).imag / h
    return hess


class TestSampleFisher:
    def test_zero_parameter_gives_second_moment(self):
        rng = np.random.default_rng(0)
        x = random_spins(4, 200, rng)
        report = sample_fisher(IsingParameter.zeros(4), [x], 1)
        x_nr = np.delete(x, 1, axis=1)
        np.testing.assert_allclose(report.q, x_nr.T @ x_nr / 200, atol=1e-14)
        np.testing.assert_allclose(np.diag(report.q), 1.0, atol=1e-14)

    def test_matches_complex_step_hessian(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            p = int(rng.integers(3, 6))
            theta = random_parameter(p, rng)
            sets = [random_spins(p, int(rng.integers(20, 80)), rng) for _ in range(3)]
            r = int(rng.integers(p))
            report = sample_fisher(theta, sets, r)
            oracle = complex_step_hessian(theta, sets, r)
            np.testing.assert_allclose(report.q, oracle, atol=1e-10)

    def test_positive_semidefinite(self):
        rng = np.random.default_rng(2)
        theta = random_parameter(5, rng)
        report = sample_fisher(theta, [random_spins(5, 60, rng)], 0)
        assert np.linalg.eigvalsh(report.q).min() >= -1e-10


class TestPopulationFisher:
    def test_independent_uniform_gives_identity(self):
        report = population_fisher(IsingParameter.zeros(4), NoDelta(), 2)
        np.testing.assert_allclose(report.q, np.eye(3), atol=1e-14)
        np.testing.assert_allclose(report.second_moment, np.eye(3), atol=1e-14)

    def test_triangle_family_positive_definite(self):
        theta_bar, spec = triangle_two_edge_family(1.75)
        report = population_fisher(theta_bar, spec, 0)
        assert np.linalg.eigvalsh(report.q).min() > 0

    def test_no_delta_reduces_to_single_model(self):
        rng = np.random.default_rng(3)
        theta = random_parameter(4, rng)
        single_atom = FiniteSupportDelta((np.zeros(pair_count(4)),), (1.0,))
        a = population_fisher(theta, NoDelta(), 1)
        b = population_fisher(theta, single_atom, 1)
        np.testing.assert_allclose(a.q, b.q, atol=1e-14)

    def test_sample_converges_to_population(self):
        theta_bar, spec = triangle_two_edge_family(1.75)
        target = population_fisher(theta_bar, spec, 0)
        distances = []
        for k, n in ((10, 100), (100, 1000)):
            rng = np.random.default_rng(4)
            family = sample_task_family(theta_bar, spec, k, rng)
            sets = [sample_exact(task, n, rng) for task in family.task_params]
            report = sample_fisher(theta_bar, sets, 0)
            distances.append(np.linalg.norm(report.q - target.q))
        assert distances[1] < distances[0]


class TestConditionChecks:
    def test_zero_population_conditions(self):
        theta = IsingParameter.from_edges(4, [(0, 1, 0.0)])
        report = population_fisher(theta, NoDelta(), 0, support_nodes=[1, 2, 3])
        c_min, d_max = dependency_check(report)
        assert c_min == pytest.approx(1.0, abs=1e-12)
        assert d_max == pytest.approx(1.0, abs=1e-12)
        assert incoherence_check(report) == 0.0

    def test_empty_support_conventions(self):
        report = population_fisher(IsingParameter.zeros(4), NoDelta(), 0)
        assert report.s_nodes == ()
        c_min, d_max = dependency_check(report)
        assert c_min == np.inf
        assert incoherence_check(report) == 0.0

    def test_full_support_incoherence_zero(self):
        theta_bar, spec = triangle_two_edge_family(1.2)
        report = population_fisher(theta_bar, spec, 0)  # S = {1, 2}, S^c empty
        assert report.s_nodes == (1, 2)
        assert incoherence_check(report) == 0.0

    def test_c_min_bounded_by_d_max(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            theta = random_parameter(4, rng)
            report = sample_fisher(theta, [random_spins(4, 80, rng)], 0, support_nodes=[1, 2])
            c_min, d_max = dependency_check(report)
            assert c_min <= d_max + 1e-12  # eta weights never exceed 1

    def test_incoherence_below_one_on_sparse_support(self):
        # support {1}: the remaining covariates must not load too hard on it
        theta = IsingParameter.from_edges(4, [(0, 1, 0.5)])
        report = population_fisher(theta, NoDelta(), 0)
        assert report.s_nodes == (1,)
        value = incoherence_check(report)
        assert 0.0 <= value < 1.0

    def test_singular_error_carries_condition(self):
        # duplicated covariate columns make Q_SS exactly singular
        x = np.ones((50, 4))
        x[::2] *= -1
        theta = IsingParameter.zeros(4)
        report = sample_fisher(theta, [x], 0, support_nodes=[1, 2])
        with pytest.raises(SingularMatrixError) as err:
            incoherence_check(report)
        assert err.value.condition > 1e12

    def test_json_emission(self, tmp_path):
        theta_bar, spec = triangle_two_edge_family(1.75)
        report = population_fisher(theta_bar, spec, 0)
        path = tmp_path / "fisher.json"
        save_fisher_json(report, path)
        text = path.read_text()
        assert '"c_min"' in text and '"incoherence"' in text


class TestPooledScoreBias:
    def test_zero_for_degenerate_perturbation(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            p = int(rng.integers(2, 6))
            theta = random_parameter(p, rng)
            r = int(rng.integers(p))
            assert pooled_score_bias_norm(theta, NoDelta(), r) == 0.0

    def test_small_near_balance_point(self):
        theta_bar, spec = triangle_two_edge_family(1.75)
        assert pooled_score_bias_norm(theta_bar, spec, 0) < 1e-2

    def test_positive_away_from_balance(self):
        theta_bar, spec = triangle_two_edge_family(1.0)
        assert pooled_score_bias_norm(theta_bar, spec, 0) > 0.05

    def test_coordinates_symmetric(self):
        theta_bar, spec = triangle_two_edge_family(1.3)
        bias = pooled_score_bias(theta_bar, spec, 0)
        assert bias[0] == pytest.approx(bias[1], abs=1e-14)


class TestZeroBiasRoot:
    def test_root_is_found_and_certified(self):
        root = find_zero_bias_coupling(triangle_two_edge_family, (1.0, 2.5), 0)
        theta_bar, spec = triangle_two_edge_family(root)
        assert abs(pooled_score_bias(theta_bar, spec, 0)[0]) <= 1e-8

    def test_root_same_for_all_nodes(self):
        roots = [
            find_zero_bias_coupling(triangle_two_edge_family, (1.0, 2.5), r)
            for r in range(3)
        ]
        assert max(roots) - min(roots) < 1e-6

    def test_bad_bracket_raises(self):
        with pytest.raises(BracketingError):
            find_zero_bias_coupling(triangle_two_edge_family, (0.0, 0.5), 0)
