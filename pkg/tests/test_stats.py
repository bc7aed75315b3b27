import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tpgraph.oracle import partial_correlation_oracle
from tpgraph.stats import (
    CovarianceMatrix,
    DataError,
    ObservationMatrix,
    PrecisionModel,
    SingularMatrixError,
    empirical_covariance,
    partial_correlation,
    sample_gaussian,
    spd_inverse,
)
from tpgraph.synth import generate_chain, generate_random

from conftest import chain_sigma, random_spd


class TestObservationMatrix:
    def test_rejects_nonfinite(self):
        with pytest.raises(DataError, match="non-finite"):
            ObservationMatrix([[1.0, np.nan], [0.0, 1.0]])

    def test_rejects_single_column(self):
        with pytest.raises(DataError):
            ObservationMatrix([[1.0], [2.0]])

    def test_column_names_unique(self):
        with pytest.raises(DataError, match="unique"):
            ObservationMatrix([[1.0, 2.0]], ["a", "a"])

    def test_csv_round_trip(self, tmp_path, rng):
        obs = ObservationMatrix(rng.standard_normal((7, 3)), ["a", "b", "c"])
        obs.write_csv(tmp_path / "x.csv")
        back = ObservationMatrix.read_csv(tmp_path / "x.csv")
        assert back.column_names == ("a", "b", "c")
        np.testing.assert_array_equal(back.data, obs.data)

    def test_csv_without_header(self, tmp_path):
        (tmp_path / "x.csv").write_text("1,2\n3,4\n")
        obs = ObservationMatrix.read_csv(tmp_path / "x.csv")
        assert obs.column_names is None and obs.n_rows == 2

    def test_csv_ragged(self, tmp_path):
        (tmp_path / "x.csv").write_text("a,b\n1,2\n3\n")
        with pytest.raises(DataError, match="ragged"):
            ObservationMatrix.read_csv(tmp_path / "x.csv")


class TestEmpiricalCovariance:
    def test_single_sample_outer_product(self):
        cov = empirical_covariance(ObservationMatrix([[1.0, 2.0]]))
        np.testing.assert_array_equal(cov.values, [[1.0, 2.0], [2.0, 4.0]])

    def test_centering_constant_rows(self):
        cov = empirical_covariance(np.tile([3.0, -1.0, 2.0], (5, 1)), centered=True)
        np.testing.assert_array_equal(cov.values, np.zeros((3, 3)))

    def test_centered_divisor_is_row_count(self):
        x = np.array([[1.0, 0.0], [3.0, 0.0], [2.0, 1.0]])
        cov = empirical_covariance(x, centered=True)
        d = x - x.mean(axis=0)
        np.testing.assert_allclose(cov.values, d.T @ d / 3)

    def test_errors(self):
        x = np.ones((4, 3))
        with pytest.raises(DataError, match="empty"):
            empirical_covariance(x, rows=[])
        with pytest.raises(DataError, match="duplicate"):
            empirical_covariance(x, columns=[0, 0])
        with pytest.raises(DataError):
            empirical_covariance(x, rows=[1], centered=True)

    @pytest.mark.slow
    def test_monte_carlo_chain(self):
        target = chain_sigma(3, 0.9)
        data = sample_gaussian(PrecisionModel.from_covariance(target), 10**6, 11)
        np.testing.assert_allclose(empirical_covariance(data).values, target, atol=0.01)

    def test_row_permutation_invariance(self, rng):
        x = rng.standard_normal((40, 4))
        perm = rng.permutation(40)
        a = empirical_covariance(x, rows=np.arange(40)).values
        b = empirical_covariance(x, rows=perm).values
        np.testing.assert_allclose(a, b, atol=1e-14)

    def test_column_permutation(self, rng):
        x = rng.standard_normal((40, 4))
        cols = [2, 0, 3]
        cov = empirical_covariance(x, columns=cols)
        full = empirical_covariance(x).values
        np.testing.assert_allclose(cov.values, full[np.ix_(cols, cols)], atol=1e-14)
        assert cov.variables == (2, 0, 3)


class TestPartialCorrelation:
    def test_identity(self):
        for i, j, s in [(0, 1, ()), (0, 2, (1,)), (1, 2, (0,))]:
            assert partial_correlation(np.eye(3), i, j, s) == 0.0

    def test_chain_markov(self):
        sigma = chain_sigma(3, 0.9)
        # oracle: invert the full 3x3 by linear solve
        K = np.linalg.solve(sigma, np.eye(3))
        assert abs(-K[0, 2] / np.sqrt(K[0, 0] * K[2, 2])) < 1e-12
        assert abs(partial_correlation(sigma, 0, 2, [1])) < 1e-12

    def test_chain_marginal(self):
        sigma = chain_sigma(3, 0.9)
        K = np.linalg.solve(sigma[:2, :2], np.eye(2))
        expected = -K[0, 1] / np.sqrt(K[0, 0] * K[1, 1])
        assert expected == pytest.approx(0.9, abs=1e-14)
        assert partial_correlation(sigma, 0, 1) == pytest.approx(0.9, abs=1e-14)

    def test_uses_only_submatrix(self, rng):
        C = random_spd(rng, 5)
        cov = CovarianceMatrix(C[np.ix_([1, 3, 4], [1, 3, 4])], variables=(1, 3, 4))
        assert partial_correlation(cov, 1, 4, [3]) == pytest.approx(partial_correlation(C, 1, 4, [3]), abs=1e-14)

    def test_singular_submatrix(self):
        C = np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        with pytest.raises(SingularMatrixError):
            partial_correlation(C, 0, 1, [2])

    def test_precondition_errors(self):
        with pytest.raises(DataError):
            partial_correlation(np.eye(3), 0, 0)
        with pytest.raises(DataError):
            partial_correlation(np.eye(3), 0, 1, [1])
        with pytest.raises(DataError):
            partial_correlation(CovarianceMatrix(np.eye(2), (0, 1)), 0, 5)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(3, 6), st.integers(0, 2**32 - 1))
    def test_symmetric_and_matches_oracle(self, q, seed):
        rng = np.random.default_rng(seed)
        C = random_spd(rng, q)
        for i, j in itertools.combinations(range(q), 2):
            rest = [v for v in range(q) if v not in (i, j)]
            for size in range(len(rest) + 1):
                for s in itertools.combinations(rest, size):
                    a = partial_correlation(C, i, j, s)
                    assert a == partial_correlation(C, j, i, s)
                    assert a == pytest.approx(partial_correlation_oracle(C, i, j, s), abs=1e-8)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(3, 7), st.integers(0, 2**32 - 1))
    def test_m_matrix_sign(self, p, seed):
        model = generate_random(p, 0.6, seed)
        for i, j in itertools.combinations(range(p), 2):
            rest = [v for v in range(p) if v not in (i, j)]
            for size in range(len(rest) + 1):
                for s in itertools.combinations(rest, size):
                    assert partial_correlation(model.sigma, i, j, s) >= -1e-10


class TestSpdInverse:
    def test_identity(self):
        np.testing.assert_array_equal(spd_inverse(np.eye(4)), np.eye(4))

    def test_diagonal(self):
        np.testing.assert_allclose(spd_inverse(np.diag([2.0, 4.0])), np.diag([0.5, 0.25]), rtol=1e-15, atol=0)

    def test_random_spd(self, rng):
        for _ in range(20):
            A = random_spd(rng, 5)
            inv = spd_inverse(A)
            np.testing.assert_allclose(A @ inv, np.eye(5), atol=1e-8)
            assert np.array_equal(inv, inv.T)

    def test_singular_reports_pivot(self):
        A = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 1.0], [0.0, 1.0, 1.0]])
        with pytest.raises(SingularMatrixError) as info:
            spd_inverse(A)
        assert info.value.pivot == 2


class TestSampleGaussian:
    def test_deterministic(self):
        model = PrecisionModel.from_precision(np.eye(3))
        a = sample_gaussian(model, 1, 5).data
        b = sample_gaussian(model, 1, 5).data
        assert a.tobytes() == b.tobytes()

    def test_seeds_differ(self):
        model = PrecisionModel.from_precision(np.eye(3))
        assert not np.array_equal(sample_gaussian(model, 4, 1).data, sample_gaussian(model, 4, 2).data)

    def test_correlated_covariance(self):
        target = np.array([[1.0, 0.5], [0.5, 1.0]])
        data = sample_gaussian(PrecisionModel.from_covariance(target), 10**5, 3)
        np.testing.assert_allclose(empirical_covariance(data).values, target, atol=0.02)

    def test_identity_variances(self):
        data = sample_gaussian(PrecisionModel.from_precision(np.eye(4)), 10**5, 4)
        var = np.diag(empirical_covariance(data).values)
        assert np.all((var >= 0.97) & (var <= 1.03))

    def test_chain_model_samples(self):
        model = generate_chain(4, 0.9)
        data = sample_gaussian(model, 2000, 0)
        assert data.data.shape == (2000, 4)


class TestPrecisionModel:
    def test_rejects_positive_offdiagonal_when_flagged(self):
        theta = np.array([[2.0, 0.5], [0.5, 2.0]])
        with pytest.raises(DataError):
            PrecisionModel(theta, np.linalg.inv(theta), True)

    def test_not_spd(self):
        with pytest.raises(SingularMatrixError):
            PrecisionModel.from_precision(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_flag_inferred(self):
        assert PrecisionModel.from_precision(np.array([[2.0, -1.0], [-1.0, 2.0]])).is_m_matrix
        assert not PrecisionModel.from_precision(np.array([[2.0, 1.0], [1.0, 2.0]])).is_m_matrix
