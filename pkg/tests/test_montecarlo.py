"""Path simulation, coefficient extraction, empirical moment checks.

Statistical assertions run at fixed seeds chosen once; they are
deterministic regressions of true 3-standard-error statements, not
random trials.
"""

import numpy as np
import pytest

from klspec import (
    ArgumentError,
    Constant,
    InsufficientSampleError,
    Partition,
    Polynomial,
    RandomSource,
    closed_form_brownian_basis,
    empirical_integral_variance,
    extract_coefficients,
    iter_path_blocks,
    mercer_reconstruct,
    simulate_paths,
    streamed_integral_variance,
    streamed_integral_variances,
    truncation_error,
)


@pytest.fixture(scope="module")
def small_basis():
    return closed_form_brownian_basis(64, "mixed", np.linspace(0.0, 1.0, 129))


@pytest.fixture(scope="module")
def big_ensemble(small_basis):
    """200k paths, 64 modes; reused by the statistical checks."""
    return simulate_paths(small_basis, 64, 200_000, RandomSource(60))


class TestRandomSource:
    def test_same_key_same_stream(self):
        a = RandomSource(7, 3).generator().standard_normal(8)
        b = RandomSource(7, 3).generator().standard_normal(8)
        np.testing.assert_array_equal(a, b)

    def test_distinct_streams_differ(self):
        a = RandomSource(7, 0).generator().standard_normal(8)
        b = RandomSource(7, 1).generator().standard_normal(8)
        assert not np.array_equal(a, b)

    def test_stream_offset(self):
        assert RandomSource(7, 2).stream(3) == RandomSource(7, 5)


class TestSimulatePaths:
    def test_deterministic(self, small_basis):
        e1 = simulate_paths(small_basis, 32, 5000, RandomSource(5))
        e2 = simulate_paths(small_basis, 32, 5000, RandomSource(5))
        assert np.array_equal(e1.paths, e2.paths)
        assert np.array_equal(e1.coefficients, e2.coefficients)

    def test_thread_count_invariant(self, small_basis):
        e1 = simulate_paths(small_basis, 32, 9000, RandomSource(5), threads=1)
        e4 = simulate_paths(small_basis, 32, 9000, RandomSource(5), threads=4)
        assert np.array_equal(e1.paths, e4.paths)

    def test_paths_are_exact_expansion(self, small_basis):
        ens = simulate_paths(small_basis, 16, 100, RandomSource(2))
        mix = np.sqrt(small_basis.eigenvalues[:16])[:, None] * small_basis.eigenfunctions[:16]
        np.testing.assert_array_equal(ens.paths, ens.coefficients @ mix)

    def test_zero_modes_gives_zero_paths(self, small_basis):
        ens = simulate_paths(small_basis, 0, 10, RandomSource(1))
        assert not ens.paths.any()

    def test_argument_validation(self, small_basis):
        with pytest.raises(ArgumentError):
            simulate_paths(small_basis, 16, 0, RandomSource(1))
        with pytest.raises(ArgumentError):
            simulate_paths(small_basis, -1, 10, RandomSource(1))
        with pytest.raises(ArgumentError):
            simulate_paths(small_basis, 65, 10, RandomSource(1))

    def test_mean_zero_at_grid_points(self, big_ensemble):
        m = big_ensemble.n_paths
        mean = big_ensemble.paths.mean(axis=0)
        sd = big_ensemble.paths.std(axis=0, ddof=1)
        active = sd > 0  # the t = 0 node is identically zero
        assert np.all(np.abs(mean[active]) <= 3.0 * sd[active] / np.sqrt(m))

    def test_sample_covariance_matches_reconstruction(self, small_basis, big_ensemble):
        i, j = 32, 96  # t = 0.25 and t = 0.75
        prod = big_ensemble.paths[:, i] * big_ensemble.paths[:, j]
        se = prod.std(ddof=1) / np.sqrt(big_ensemble.n_paths)
        oracle = mercer_reconstruct(small_basis, 0.25, 0.75, 64)
        assert abs(prod.mean() - oracle) <= 3.0 * se


class TestExtractCoefficients:
    def test_round_trip(self, small_basis):
        ens = simulate_paths(small_basis, 64, 2000, RandomSource(9))
        back = extract_coefficients(ens, small_basis, 64)
        assert np.max(np.abs(back - ens.coefficients)) <= 1e-8

    def test_zero_paths_zero_coefficients(self, small_basis):
        ens = simulate_paths(small_basis, 0, 10, RandomSource(1))
        back = extract_coefficients(ens, small_basis, 8)
        assert not back.any()

    def test_grid_mismatch_rejected(self, small_basis):
        other = closed_form_brownian_basis(8, "mixed", np.linspace(0.0, 1.0, 65))
        ens = simulate_paths(other, 8, 10, RandomSource(1))
        with pytest.raises(ArgumentError):
            extract_coefficients(ens, small_basis, 8)

    def test_coefficient_gram_near_identity(self, small_basis, big_ensemble):
        m = big_ensemble.n_paths
        z = extract_coefficients(big_ensemble, small_basis, 16)
        gram = z.T @ z / m
        se = np.full((16, 16), 1.0 / np.sqrt(m))
        np.fill_diagonal(se, np.sqrt(2.0 / m))
        assert np.all(np.abs(gram - np.eye(16)) <= 3.0 * se)


class TestEmpiricalVariance:
    def test_brownian_unit_integrand(self, small_basis, big_ensemble):
        est = empirical_integral_variance(
            Constant(1.0), big_ensemble, Partition.uniform(0.0, 1.0, 64)
        )
        oracle = float(np.sum(small_basis.eigenvalues[:64] * 2.0))  # truncated variance of X_1
        assert abs(est.estimate - oracle) <= 3.0 * est.std_error

    def test_matches_truncated_quadratic_form(self, small_basis, big_ensemble):
        f = Polynomial([0.0, 1.0])
        part = Partition.uniform(0.0, 1.0, 32)
        est = empirical_integral_variance(f, big_ensemble, part)
        idx = np.arange(0, 129, 4)
        phi = small_basis.eigenfunctions[:, idx]
        m_trunc = phi.T @ (small_basis.eigenvalues[:, None] * phi)
        c = m_trunc[1:, 1:] - m_trunc[1:, :-1] - m_trunc[:-1, 1:] + m_trunc[:-1, :-1]
        v = np.asarray(f(part.points[:-1]))
        oracle = float(v @ c @ v)
        assert abs(est.estimate - oracle) <= 3.0 * est.std_error

    def test_zero_integrand(self, small_basis):
        ens = simulate_paths(small_basis, 16, 50, RandomSource(3))
        est = empirical_integral_variance(Constant(0.0), ens, Partition.uniform(0, 1, 16))
        assert est.estimate == 0.0
        assert est.std_error == 0.0

    def test_needs_two_paths(self, small_basis):
        ens = simulate_paths(small_basis, 16, 1, RandomSource(3))
        with pytest.raises(InsufficientSampleError):
            empirical_integral_variance(Constant(1.0), ens, Partition.uniform(0, 1, 16))

    def test_partition_must_hit_grid(self, small_basis):
        ens = simulate_paths(small_basis, 16, 10, RandomSource(3))
        with pytest.raises(ArgumentError):
            empirical_integral_variance(Constant(1.0), ens, Partition([0.0, 0.3333, 1.0]))

    def test_streamed_equals_materialized(self, small_basis):
        # same seeds, same streams; routes differ only by reassociated
        # matrix products, so agreement is at roundoff level
        part = Partition.uniform(0.0, 1.0, 32)
        f = Polynomial([0.0, 1.0])
        ens = simulate_paths(small_basis, 48, 9000, RandomSource(21))
        direct = empirical_integral_variance(f, ens, part)
        streamed = streamed_integral_variance(f, small_basis, 48, part, 9000, RandomSource(21))
        assert direct.estimate == pytest.approx(streamed.estimate, rel=1e-12)
        assert direct.std_error == pytest.approx(streamed.std_error, rel=1e-12)
        rerun = streamed_integral_variance(f, small_basis, 48, part, 9000, RandomSource(21))
        assert rerun.estimate == streamed.estimate

    def test_streamed_batch_consistent(self, small_basis):
        part = Partition.uniform(0.0, 1.0, 32)
        fs = [Constant(1.0), Polynomial([0.0, 1.0])]
        batch = streamed_integral_variances(fs, small_basis, 48, part, 5000, RandomSource(4))
        singles = [
            streamed_integral_variance(f, small_basis, 48, part, 5000, RandomSource(4))
            for f in fs
        ]
        for got, want in zip(batch, singles):
            assert got.estimate == want.estimate


class TestTruncation:
    def test_full_trace(self, mixed_2000_fine):
        assert truncation_error(mixed_2000_fine, 0) == pytest.approx(0.5, abs=1e-3)

    def test_empty_tail(self, small_basis):
        assert truncation_error(small_basis, 64) == 0.0
        assert truncation_error(small_basis, 100) == 0.0

    def test_negative_rejected(self, small_basis):
        with pytest.raises(ArgumentError):
            truncation_error(small_basis, -1)

    def test_tail_matches_empirical_l2_error(self, small_basis):
        # truncate at N = 16 and compare the mean squared remainder norm
        n_cut, m = 16, 40_000
        tail = truncation_error(small_basis, n_cut)
        w = small_basis.rule.weights
        mix_head = (
            np.sqrt(small_basis.eigenvalues[:n_cut])[:, None]
            * small_basis.eigenfunctions[:n_cut]
        )
        vals = []
        for _start, z, paths in iter_path_blocks(small_basis, 64, m, RandomSource(13)):
            remainder = paths - z[:, :n_cut] @ mix_head
            vals.append((remainder * remainder) @ w)
        vals = np.concatenate(vals)
        se = vals.std(ddof=1) / np.sqrt(m)
        assert abs(vals.mean() - tail) <= 3.0 * se
