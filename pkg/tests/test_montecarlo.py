import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from tomoloss import (
    BlochVector,
    SimulationPlan,
    SphericalCoords,
    bloch_from_spherical,
    boundary_threshold,
    crb_hs_xyz,
    empirical_expected_loss,
    expected_hs_mixed,
    fisher_matrix,
    gaussian_projection_oracle,
    gaussian_sampler,
    mixed_state_infidelity_loss,
    probabilities,
    project_to_tangent,
    sample_counts,
    sequence_stream,
    squared_hs_loss,
    xyz_povm,
)
from tomoloss.boundary import ApproxLossInputs, expected_if_mixed
from tomoloss.exceptions import DomainError, SingularMatrixError
from tomoloss.losses import hesse_if
from tomoloss.montecarlo import CATEGORICAL_SAMPLING_MAX

QUARTER_PI = math.pi / 4
POVM = xyz_povm()


def sph(r, theta=QUARTER_PI, phi=QUARTER_PI):
    return bloch_from_spherical(SphericalCoords(r, theta, phi))


class TestSampleCounts:
    def test_single_trial(self):
        counts = sample_counts(POVM, BlochVector(0.2, 0, 0), 1, sequence_stream(1, 0, 0))
        assert counts.n == 1
        assert sum(1 for c in counts.counts if c == 1) == 1

    def test_zero_probability_outcome_never_fires(self):
        s = BlochVector(0, 0, 1)
        idx = POVM.index_of("3-")
        for i in range(50):
            counts = sample_counts(POVM, s, 40, sequence_stream(2, 0, i))
            assert counts.counts[idx] == 0

    def test_law_of_large_numbers(self):
        s = BlochVector(0.3, -0.4, 0.5)
        n = 10 ** 6
        counts = sample_counts(POVM, s, n, sequence_stream(3, 0, 0))
        p = probabilities(POVM, s)
        for k in range(6):
            sigma = math.sqrt(n * p[k] * (1 - p[k]))
            assert abs(counts.counts[k] - n * p[k]) < 4 * sigma

    def test_both_sampling_paths_same_distribution(self):
        # categorical draws vs binomial decomposition, chi-square homogeneity
        s = BlochVector(0.3, 0.1, -0.2)
        n_small = CATEGORICAL_SAMPLING_MAX          # categorical path
        n_large = CATEGORICAL_SAMPLING_MAX + 1      # decomposition path
        reps = 300
        total_small = np.zeros(6)
        total_large = np.zeros(6)
        for i in range(reps):
            total_small += sample_counts(POVM, s, n_small, sequence_stream(4, 0, i)).as_array()
            total_large += sample_counts(POVM, s, n_large, sequence_stream(4, 1, i)).as_array()
        table = np.vstack([total_small, total_large])
        _, p_value, _, _ = stats.chi2_contingency(table)
        assert p_value > 0.001

    def test_trial_count_validated(self):
        with pytest.raises(DomainError):
            sample_counts(POVM, BlochVector(0, 0, 0), 0, sequence_stream(5, 0, 0))


class TestGaussianSampler:
    def test_identity_covariance_moments(self):
        stream = sequence_stream(6, 0, 0)
        pts = gaussian_sampler((0, 0, 0), np.eye(3), stream, size=10 ** 6)
        m = 10 ** 6
        # var estimator sd ~ sqrt(2/m); mean estimator sd = 1/sqrt(m)
        assert np.max(np.abs(pts.mean(axis=0))) < 4 / math.sqrt(m)
        assert np.max(np.abs(pts.var(axis=0, ddof=1) - 1)) < 4 * math.sqrt(2 / m)

    def test_anisotropic_diagonal(self):
        stream = sequence_stream(7, 0, 0)
        pts = gaussian_sampler((0, 0, 0), np.diag([4.0, 1.0, 1.0]), stream, size=200_000)
        assert pts[:, 0].std(ddof=1) == pytest.approx(2.0, rel=0.02)

    def test_correlated_covariance(self):
        cov = np.array([[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 1.0]])
        stream = sequence_stream(8, 0, 0)
        m = 10 ** 6
        pts = gaussian_sampler((0.5, -0.5, 0.1), cov, stream, size=m)
        emp = np.cov(pts.T)
        for i in range(3):
            for j in range(3):
                sd = math.sqrt((cov[i, i] * cov[j, j] + cov[i, j] ** 2) / m)
                assert abs(emp[i, j] - cov[i, j]) < 4 * sd

    def test_single_draw_shape(self):
        assert gaussian_sampler((0, 0, 0), np.eye(3), sequence_stream(9, 0, 0)).shape == (3,)

    def test_non_spd_rejected(self):
        with pytest.raises(SingularMatrixError):
            gaussian_sampler((0, 0, 0), np.diag([1.0, -1.0, 1.0]), sequence_stream(10, 0, 0))


class TestEmpiricalExpectedLoss:
    def test_deterministic_given_seed(self):
        plan = SimulationPlan(POVM, sph(0.9), (20, 80), sequences=64, seed=99)
        a = empirical_expected_loss(plan)
        b = empirical_expected_loss(plan)
        for kind in plan.losses:
            for x, y in zip(a[kind], b[kind]):
                assert x.mean == y.mean and x.std_error == y.std_error

    def test_worker_count_does_not_change_results(self):
        plan = SimulationPlan(POVM, sph(0.9), (30,), sequences=48, seed=7)
        serial = empirical_expected_loss(plan, workers=1)
        parallel = empirical_expected_loss(plan, workers=2)
        for kind in plan.losses:
            for x, y in zip(serial[kind], parallel[kind]):
                assert x.mean == y.mean
                assert x.std_error == y.std_error

    def test_seed_changes_results(self):
        plan_a = SimulationPlan(POVM, sph(0.9), (50,), sequences=32, seed=1)
        plan_b = SimulationPlan(POVM, sph(0.9), (50,), sequences=32, seed=2)
        assert (empirical_expected_loss(plan_a)["hs"][0].mean
                != empirical_expected_loss(plan_b)["hs"][0].mean)

    def test_single_sequence_has_no_stderr(self):
        plan = SimulationPlan(POVM, sph(0.5), (40,), sequences=1, seed=3)
        out = empirical_expected_loss(plan)
        assert math.isnan(out["hs"][0].std_error)
        assert out["hs"][0].sequences == 1

    def test_interior_state_matches_crb(self):
        # deep interior, boundary negligible: mean within 3 MC errors of the bound
        s = BlochVector(0, 0, 0)
        plan = SimulationPlan(POVM, s, (3000,), sequences=3000, seed=11, losses=("hs",))
        est = empirical_expected_loss(plan)["hs"][0]
        crb = 9 / 4 / 3000
        assert abs(est.mean - crb) < 3 * est.std_error

    def test_plan_validation(self):
        with pytest.raises(DomainError):
            SimulationPlan(POVM, sph(0.5), (100, 100), sequences=10, seed=0)
        with pytest.raises(DomainError):
            SimulationPlan(POVM, sph(0.5), (100,), sequences=0, seed=0)
        with pytest.raises(DomainError):
            SimulationPlan(POVM, sph(0.5), (100,), sequences=10, seed=0, losses=("bogus",))


class TestGaussianProjectionOracle:
    def test_matches_crb_when_boundary_is_far(self):
        s = sph(0.9)
        f = fisher_matrix(POVM, s)
        n = 100 * boundary_threshold(s, f)
        est = gaussian_projection_oracle(s, f, n, 200_000, squared_hs_loss(s),
                                         sequence_stream(12, 0, 0))
        assert abs(est.mean - crb_hs_xyz(s, n)) < 3 * est.std_error

    def test_projection_rate_half_at_pure_state(self):
        s = sph(1.0)
        f = fisher_matrix(POVM, s)
        m = 400_000
        hits = {}

        def counting_loss(points, projected):
            hits["rate"] = projected.mean()
            return np.zeros(len(points))

        gaussian_projection_oracle(s, f, 10 ** 4, m, counting_loss, sequence_stream(13, 0, 0))
        assert abs(hits["rate"] - 0.5) < 4 * math.sqrt(0.25 / m)

    def test_matches_mixed_hs_closed_form(self):
        s = sph(0.99)
        f = fisher_matrix(POVM, s)
        n = boundary_threshold(s, f)
        est = gaussian_projection_oracle(s, f, n, 400_000, squared_hs_loss(s),
                                         sequence_stream(14, 0, 0))
        closed = expected_hs_mixed(ApproxLossInputs(s, f, n))
        assert abs(est.mean - closed) < 3 * est.std_error

    def test_matches_mixed_if_closed_form(self):
        s = sph(0.9)
        f = fisher_matrix(POVM, s)
        n = boundary_threshold(s, f)
        loss = mixed_state_infidelity_loss(s, hesse_if(s))
        est = gaussian_projection_oracle(s, f, n, 400_000, loss, sequence_stream(15, 0, 0))
        closed = expected_if_mixed(ApproxLossInputs(s, f, n))
        assert abs(est.mean - closed) < 3 * est.std_error

    def test_batch_projection_matches_single(self):
        s = sph(0.9)
        f = fisher_matrix(POVM, s)
        pts = gaussian_sampler(s.as_array(), f.inverse / 50.0, sequence_stream(16, 0, 0), size=200)
        e = s.unit()
        overshoot = pts @ e
        projected = overshoot > 1.0 + 1e-12
        batch = pts.copy()
        finv_e = f.inverse @ e
        batch[projected] -= np.outer((overshoot[projected] - 1.0) / float(e @ finv_e), finv_e)
        for row, brow in zip(pts, batch):
            assert_allclose(project_to_tangent(row, s, f), brow, atol=1e-14)

    def test_radial_variance_interpretation(self):
        # e.F^-1 e is the variance of the model distribution along the
        # radial direction (times N)
        s = sph(0.9)
        f = fisher_matrix(POVM, s)
        n = 40.0
        m = 10 ** 6
        pts = gaussian_sampler(s.as_array(), f.inverse / n, sequence_stream(17, 0, 0), size=m)
        radial = pts @ s.unit()
        target = float(s.unit() @ f.inverse @ s.unit())
        emp = radial.var(ddof=1) * n
        assert abs(emp - target) < 4 * target * math.sqrt(2 / m)
