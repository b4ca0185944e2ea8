import numpy as np
import pytest
from numpy.testing import assert_allclose

from tomoloss import (
    BlochVector,
    hesse_hs,
    hesse_if,
    hs_distance,
    infidelity,
    infidelity_quadratic,
)
from tomoloss.exceptions import SingularityError, UnphysicalStateError


def random_physical(rng, rmax=1.0):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v) * rng.uniform(0, rmax)


class TestHsDistance:
    def test_zero_on_diagonal(self):
        assert hs_distance((0.3, -0.1, 0.5), (0.3, -0.1, 0.5)) == 0.0

    def test_quarter(self):
        assert hs_distance((0, 0, 0), (0, 0, 1)) == pytest.approx(0.25)

    def test_antipodal(self):
        assert hs_distance((1, 0, 0), (-1, 0, 0)) == pytest.approx(1.0)

    def test_accepts_unphysical_points(self):
        # raw linear estimates can land outside the ball and must be scorable
        assert hs_distance((3, 0, 0), (1, 0, 0)) == pytest.approx(1.0)


class TestInfidelity:
    def test_zero_on_diagonal(self):
        assert infidelity((0.3, -0.1, 0.5), (0.3, -0.1, 0.5)) == pytest.approx(0, abs=1e-15)

    def test_orthogonal_pure_states(self):
        assert infidelity((0, 0, 1), (0, 0, -1)) == pytest.approx(1.0)

    def test_pure_vs_maximally_mixed(self):
        assert infidelity((0, 0, 1), (0, 0, 0)) == pytest.approx(0.5)

    def test_rejects_unphysical(self):
        with pytest.raises(UnphysicalStateError):
            infidelity((1.5, 0, 0), (0, 0, 0))
        with pytest.raises(UnphysicalStateError):
            infidelity((0, 0, 0), (1.5, 0, 0))

    def test_loss_axioms(self):
        rng = np.random.default_rng(21)
        for _ in range(300):
            a, b = random_physical(rng), random_physical(rng)
            fa = infidelity(a, b)
            assert 0.0 <= fa <= 1.0
            assert fa == pytest.approx(infidelity(b, a), abs=1e-14)
            assert infidelity(a, a) == pytest.approx(0, abs=1e-12)
            assert hs_distance(a, b) >= 0.0
            assert hs_distance(a, b) == pytest.approx(hs_distance(b, a), abs=1e-15)


class TestHessians:
    def test_hs_hessian_is_quarter_identity(self):
        h = hesse_hs().h
        assert_allclose(h, 0.25 * np.eye(3))
        assert np.trace(h) == pytest.approx(0.75)
        assert_allclose(np.linalg.eigvalsh(h), [0.25, 0.25, 0.25])

    def test_if_hessian_at_origin(self):
        assert_allclose(hesse_if((0, 0, 0)).h, 0.25 * np.eye(3))

    def test_if_hessian_axis_state(self):
        h = hesse_if((0.9, 0, 0)).h
        assert_allclose(h, np.diag([0.25 * (1 + 0.81 / 0.19), 0.25, 0.25]), rtol=1e-12)
        assert h[0, 0] == pytest.approx(1.3157894736842106)

    def test_if_hessian_singular_on_boundary(self):
        with pytest.raises(SingularityError):
            hesse_if((0, 0, 1))

    def test_if_dominates_hs(self):
        # the rank-one radial correction is nonnegative
        rng = np.random.default_rng(22)
        for _ in range(200):
            s = random_physical(rng, rmax=0.999)
            gap = hesse_if(s).h - hesse_hs().h
            assert np.min(np.linalg.eigvalsh(gap)) >= -1e-12

    def test_finite_difference_hessian(self):
        # the numerical Hessian of t -> infidelity(s, t) at t = s is twice
        # the stored curvature matrix
        rng = np.random.default_rng(23)
        h = 1e-4
        for _ in range(25):
            s = random_physical(rng, rmax=0.9)
            exact = 2.0 * hesse_if(s).h
            num = np.empty((3, 3))
            eye = np.eye(3)
            for i in range(3):
                for j in range(3):
                    fpp = infidelity(s, s + h * eye[i] + h * eye[j])
                    fpm = infidelity(s, s + h * eye[i] - h * eye[j])
                    fmp = infidelity(s, s - h * eye[i] + h * eye[j])
                    fmm = infidelity(s, s - h * eye[i] - h * eye[j])
                    num[i, j] = (fpp - fpm - fmp + fmm) / (4 * h * h)
            assert np.max(np.abs(num - exact)) <= 1e-5 * max(1.0, np.max(np.abs(exact)))


class TestQuadraticExpansion:
    def test_zero_at_center(self):
        assert infidelity_quadratic((0.5, 0, 0), (0.5, 0, 0)) == 0.0

    def test_origin_matches_exact_to_third_order(self):
        delta = 1e-3
        quad = infidelity_quadratic((0, 0, 0), (delta, 0, 0))
        assert quad == pytest.approx(delta ** 2 / 4, rel=1e-12)
        assert abs(infidelity((0, 0, 0), (delta, 0, 0)) - quad) < delta ** 3

    def test_small_step_agreement(self):
        s, t = (0.5, 0, 0), (0.51, 0, 0)
        gap = abs(infidelity_quadratic(s, t) - infidelity(s, t))
        assert gap <= 10 * 0.01 ** 3

    def test_third_order_convergence(self):
        rng = np.random.default_rng(24)
        for _ in range(20):
            s = random_physical(rng, rmax=0.95)
            d = rng.normal(size=3)
            d /= np.linalg.norm(d)
            ratios = []
            for h in (1e-2, 1e-3, 1e-4):
                t = np.asarray(s) + h * d
                if np.linalg.norm(t) > 1:
                    t = np.asarray(s) - h * d
                gap = abs(infidelity(s, t) - infidelity_quadratic(s, t))
                ratios.append(gap / h ** 3)
            # the h^-3 normalized gap stays bounded as h -> 0
            bound = 10 * (ratios[0] + 1.0)
            assert ratios[1] <= bound and ratios[2] <= bound
