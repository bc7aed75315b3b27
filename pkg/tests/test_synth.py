import math

import numpy as np
import pytest

from tpgraph.graph import Graph, graph_from_precision
from tpgraph.synth import (
    GeneratorSpec,
    condition_report,
    generate_chain,
    generate_grid,
    generate_random,
    grid_adjacency,
    largest_eigenvalue,
    random_weights,
)

from conftest import chain_sigma


def check_normalized(model):
    np.testing.assert_allclose(np.diag(model.sigma), 1.0, atol=1e-8)
    off = model.theta - np.diag(np.diag(model.theta))
    assert off.max() <= 0.0
    assert np.all(np.linalg.eigvalsh(model.theta) > 0)
    assert model.is_m_matrix


class TestSpec:
    def test_grid_square(self):
        with pytest.raises(ValueError, match="perfect square"):
            GeneratorSpec("grid", 5)

    def test_density_and_r(self):
        with pytest.raises(ValueError):
            GeneratorSpec("random", 10, density=0.0)
        with pytest.raises(ValueError):
            GeneratorSpec("chain", 10, r=1.0)
        with pytest.raises(ValueError):
            GeneratorSpec("torus", 9)

    def test_build_dispatch(self):
        assert GeneratorSpec("chain", 3).build().p == 3
        assert GeneratorSpec("grid", 9).build().p == 9
        assert GeneratorSpec("random", 6, density=0.5, seed=2).build().p == 6


class TestEigenvalue:
    @pytest.mark.parametrize("side", [2, 3, 5, 10])
    def test_grid_matches_closed_form(self, side):
        expected = 4 * math.cos(math.pi / (side + 1))
        assert largest_eigenvalue(grid_adjacency(side)) == pytest.approx(expected, rel=1e-10)

    def test_random_matches_eigvalsh(self):
        for seed in range(5):
            B = random_weights(30, 0.2, seed)
            assert largest_eigenvalue(B) == pytest.approx(np.linalg.eigvalsh(B)[-1], rel=1e-10)

    def test_zero(self):
        assert largest_eigenvalue(np.zeros((4, 4))) == 0.0


class TestGrid:
    def test_p4_cycle(self):
        model = generate_grid(4)
        check_normalized(model)
        assert graph_from_precision(model) == Graph(4, [(0, 1), (0, 2), (1, 3), (2, 3)])
        # independent inverse of theta reproduces the unit diagonal
        np.testing.assert_allclose(np.diag(np.linalg.solve(model.theta, np.eye(4))), 1.0, atol=1e-8)

    @pytest.mark.parametrize("p", [9, 16, 49, 100])
    def test_contracts(self, p):
        model = generate_grid(p)
        check_normalized(model)
        side = math.isqrt(p)
        assert graph_from_precision(model).n_edges == 2 * side * (side - 1)


class TestRandom:
    def test_empty_support_is_identity(self):
        model = generate_random(5, 1e-9, 0)
        np.testing.assert_array_equal(model.theta, np.eye(5))

    def test_support_matches_b(self):
        for seed in range(10):
            B = random_weights(20, 0.2, seed)
            model = generate_random(20, 0.2, seed)
            check_normalized(model)
            assert np.array_equal(np.abs(model.theta) > 1e-10, (B > 0) | np.eye(20, dtype=bool))

    def test_values_in_unit_interval(self):
        B = random_weights(40, 0.3, 1)
        vals = B[np.triu_indices(40, 1)]
        vals = vals[vals > 0]
        assert vals.max() <= 1.0 and vals.min() > 0.0
        np.testing.assert_array_equal(B, B.T)

    def test_p100_edge_count(self):
        counts = [int(np.count_nonzero(np.triu(random_weights(100, 0.01, s), 1))) for s in range(200)]
        inside = sum(20 <= c <= 90 for c in counts)
        assert inside >= 198
        assert abs(np.mean(counts) - 49.5) < 2.0

    def test_deterministic(self):
        np.testing.assert_array_equal(generate_random(15, 0.2, 4).theta, generate_random(15, 0.2, 4).theta)


class TestChain:
    def test_p3_closed_form(self):
        r = 0.9
        model = generate_chain(3, r)
        expected = np.array([
            [1, -r, 0],
            [-r, 1 + r * r, -r],
            [0, -r, 1],
        ]) / (1 - r * r)
        np.testing.assert_allclose(model.theta, expected, atol=1e-8)
        np.testing.assert_allclose(model.theta, np.linalg.solve(chain_sigma(3, r), np.eye(3)), atol=1e-8)
        assert model.theta[0, 0] == pytest.approx(5.2632, abs=1e-4)
        assert model.theta[0, 1] == pytest.approx(-4.7368, abs=1e-4)
        assert model.theta[1, 1] == pytest.approx(9.5263, abs=1e-4)

    def test_r0_identity(self):
        np.testing.assert_array_equal(generate_chain(6, 0.0).theta, np.eye(6))

    @pytest.mark.parametrize("p", [2, 5, 10, 50])
    def test_banded_against_oracle(self, p):
        oracle = np.linalg.solve(chain_sigma(p, 0.9), np.eye(p))
        far = np.abs(np.subtract.outer(np.arange(p), np.arange(p))) >= 2
        assert np.all(np.abs(oracle[far]) < 1e-10)
        np.testing.assert_allclose(generate_chain(p, 0.9).theta, np.where(far, 0.0, oracle), atol=1e-8)

    @pytest.mark.parametrize("r", [0.1, 0.5, 0.9, 0.99])
    def test_path_graph(self, r):
        for p in (2, 7, 50):
            assert graph_from_precision(generate_chain(p, r)) == Graph(p, [(k, k + 1) for k in range(p - 1)])


class TestConditionReport:
    def test_identity_not_applicable(self):
        from tpgraph.stats import PrecisionModel
        rep = condition_report(PrecisionModel.from_precision(np.eye(4)), 0, 1000)
        assert rep["min_edge_partial_correlation"] is None
        assert rep["implied_c_rho"] is None
        assert rep["sigma_min"] == pytest.approx(1.0) and rep["sigma_max"] == pytest.approx(1.0)

    def test_chain_p3(self):
        rep = condition_report(generate_chain(3, 0.9), 1, 1000)
        assert rep["min_edge_partial_correlation"] == pytest.approx(4.7368 / math.sqrt(5.2632 * 9.5263), abs=1e-4)
        assert rep["min_edge_partial_correlation"] == pytest.approx(0.6690, abs=1e-4)
        assert rep["exhaustive"]

    def test_size_condition(self):
        rep = condition_report(generate_chain(100, 0.9), 2, 1000, subset_samples=20, seed=1)
        assert rep["size_bound"] == pytest.approx(1000 ** 0.125 + 4, abs=1e-12)
        assert rep["size_bound"] == pytest.approx(6.37, abs=0.01)
        assert rep["size_condition"] is True
        assert not rep["exhaustive"] and rep["subsets_checked"] == 20

    def test_subset_samples_positive(self):
        with pytest.raises(ValueError):
            condition_report(generate_chain(3), 1, 10, subset_samples=0)
