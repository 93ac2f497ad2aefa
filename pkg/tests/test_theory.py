import math

import numpy as np
import pytest

from pcveil import theory
from pcveil.errors import InvalidParameterError
from pcveil.transforms import rotation_matrix


def normal_cdf_series_oracle(x):
    """Phi(x) via the Maclaurin series Phi(x) = 1/2 + pdf(x) * sum x^(2k+1)/(2k+1)!!."""
    pdf = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    term = x
    total = 0.0
    for k in range(200):
        total += term
        term *= x * x / (2 * k + 3)
        if abs(term) < 1e-18:
            break
    return 0.5 + pdf * total


def demo_transforms(mu):
    return theory.search_unlearnable_config(mu)


DEMO_MU = np.array([1.5, 0.0, 0.0])


class TestCleanAccuracy:
    def test_zero_mean_is_half(self):
        assert theory.clean_accuracy_closed_form(np.zeros(3)) == 0.5

    def test_unit_norm_matches_series_oracle(self):
        got = theory.clean_accuracy_closed_form(np.array([1.0, 0.0, 0.0]))
        assert abs(got - normal_cdf_series_oracle(1.0)) < 1e-12
        assert abs(got - 0.8413447460685429) < 1e-12

    @pytest.mark.parametrize("norm", [0.25, 0.5, 1.0, 1.5, 2.0])
    def test_matches_series_oracle(self, norm):
        mu = np.zeros(4)
        mu[1] = norm
        assert abs(theory.clean_accuracy_closed_form(mu) - normal_cdf_series_oracle(norm)) < 1e-12

    def test_monotone_in_norm(self):
        values = [theory.clean_accuracy_closed_form([n, 0.0]) for n in (0.0, 0.5, 1.0, 2.0)]
        assert values == sorted(values)


class TestSampleGmm:
    def test_deterministic(self):
        a = theory.sample_gmm([1.0, 0.0], 100, seed=3)
        b = theory.sample_gmm([1.0, 0.0], 100, seed=3)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])

    def test_class_means(self):
        mu = np.array([0.7, -0.3, 0.2])
        x, y = theory.sample_gmm(mu, 100_000, seed=23)
        tol = 4.0 / math.sqrt(50_000)
        assert np.max(np.abs(x[y == 1].mean(axis=0) - mu)) < tol
        assert np.max(np.abs(x[y == -1].mean(axis=0) + mu)) < tol

    def test_zero_mean_centered(self):
        x, y = theory.sample_gmm(np.zeros(3), 100_000, seed=23)
        assert np.max(np.abs(x.mean(axis=0))) < 4.0 / math.sqrt(100_000)
        assert abs(y.mean()) < 4.0 / math.sqrt(100_000)


class TestTransformGmm:
    def test_identity_transform_is_noop(self):
        x, y = theory.sample_gmm([1.0, 0.0, 0.0], 100, seed=1)
        out = theory.transform_gmm(x, y, theory.ClassTransform.identity(3))
        assert np.array_equal(out, x)

    def test_moments_match_closure_claim(self):
        # transformed class y has mean y*T_y*mu and isotropic variance lam_y^2
        mu = np.array([0.8, -0.2, 0.5])
        ct = theory.ClassTransform(
            lam_pos=0.8, rot_pos=rotation_matrix(0.1, 0.2, 0.3),
            lam_neg=0.6, rot_neg=rotation_matrix(0.3, 0.2, 0.1),
        )
        n = 100_000
        x, y = theory.sample_gmm(mu, 2 * n, seed=23)
        out = theory.transform_gmm(x, y, ct)
        for label, lam, rot in ((1, 0.8, ct.rot_pos), (-1, 0.6, ct.rot_neg)):
            cls = out[y == label]
            m = cls.shape[0]
            mean_tol = 5.0 * lam / math.sqrt(m) * math.sqrt(3)
            var_tol = 5.0 * lam * lam * math.sqrt(2.0 / m)
            assert np.max(np.abs(cls.mean(axis=0) - label * lam * (rot @ mu))) < mean_tol
            assert np.max(np.abs(cls.var(axis=0) - lam * lam)) < var_tol

    def test_deterministic(self):
        x, y = theory.sample_gmm([1.0, 0.0, 0.0], 50, seed=2)
        ct = demo_transforms(DEMO_MU)
        assert np.array_equal(theory.transform_gmm(x, y, ct), theory.transform_gmm(x, y, ct))


class TestUnlearnableBoundary:
    def test_identity_transforms_recover_clean_rule(self):
        mu = np.array([0.5, -1.0, 0.25])
        boundary = theory.unlearnable_boundary(mu, theory.ClassTransform.identity(3))
        assert boundary.quad == 0.0
        assert boundary.const == 0.0
        assert np.array_equal(boundary.linear, 4.0 * mu)
        assert boundary.degenerate
        x, _ = theory.sample_gmm(mu, 500, seed=9)
        assert np.array_equal(boundary.classify(x), np.where(x @ mu < 0, -1, 1))

    def test_constant_term_formula(self):
        # lam_pos=0.6, lam_neg=0.8, d=3: const is 3*ln(0.64/0.36)
        ct = theory.ClassTransform(0.6, np.eye(3), 0.8, np.eye(3))
        boundary = theory.unlearnable_boundary([1.0, 0.0, 0.0], ct)
        assert math.isclose(boundary.const, 3.0 * math.log(0.64 / 0.36), rel_tol=1e-12)

    def test_degenerate_normalization_rejected(self):
        boundary = theory.unlearnable_boundary([1.0, 0.0], theory.ClassTransform.identity(2))
        with pytest.raises(InvalidParameterError):
            boundary.normalized()

    def test_beats_linear_rules_on_transformed_data(self):
        # Bayes optimality spot check on one million transformed draws
        mu = DEMO_MU
        ct = demo_transforms(mu)
        boundary = theory.unlearnable_boundary(mu, ct)
        x, y = theory.sample_gmm(mu, 1_000_000, seed=77)
        xt = theory.transform_gmm(x, y, ct)
        bayes_acc = float(np.mean(boundary.classify(xt) == y))
        linear_rules = [
            theory.clean_boundary(mu),
            theory.QuadraticBoundary(0.0, boundary.linear, boundary.const),
            theory.QuadraticBoundary(0.0, -boundary.linear, 0.0),
            theory.QuadraticBoundary(0.0, np.array([0.0, 1.0, 0.0]), 0.2),
        ]
        for rule in linear_rules:
            assert bayes_acc >= float(np.mean(rule.classify(xt) == y))

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(InvalidParameterError):
            theory.unlearnable_boundary([1.0, 0.0], theory.ClassTransform.identity(3))


class TestMcAccuracy:
    @pytest.mark.parametrize("norm", [0.0, 0.5, 1.0, 2.0])
    def test_clean_boundary_matches_closed_form(self, norm):
        mu = np.array([norm, 0.0, 0.0])
        acc, se = theory.mc_accuracy(theory.clean_boundary(mu), mu, 200_000, seed=23)
        assert abs(acc - theory.clean_accuracy_closed_form(mu)) <= 3.0 * max(se, 1e-12) + 1e-6

    def test_deterministic(self):
        mu = np.array([1.0, 0.0, 0.0])
        a = theory.mc_accuracy(theory.clean_boundary(mu), mu, 50_000, seed=5)
        assert a == theory.mc_accuracy(theory.clean_boundary(mu), mu, 50_000, seed=5)


class TestChernoffBound:
    def test_t_zero_gives_exactly_one(self):
        assert theory.chernoff_tail_bound(np.array([1.0, 2.0, 3.0]), 0.7, 3, 10.0, 0.0) == 1.0

    def test_direct_evaluation_oracle(self):
        # b=0, c=0, d=3, gamma=10, t=0.3
        expected = math.exp(-0.3 * 13.0) / (1.0 - 0.6) ** 1.5
        got = theory.chernoff_tail_bound(np.zeros(3), 0.0, 3, 10.0, 0.3)
        assert math.isclose(got, expected, rel_tol=1e-12)
        b = np.array([1.0, -2.0, 0.5])
        expected = math.exp(0.2**2 * float(b @ b) / (2 * 0.6) - 0.2 * (5.0 + 3.0)) / 0.6**1.5
        assert math.isclose(theory.chernoff_tail_bound(b, 1.0, 3, 5.0, 0.2), expected, rel_tol=1e-12)

    def test_invalid_t_rejected(self):
        with pytest.raises(InvalidParameterError):
            theory.chernoff_tail_bound(np.zeros(3), 0.0, 3, 1.0, 0.5)
        with pytest.raises(InvalidParameterError):
            theory.chernoff_tail_bound(np.zeros(3), 0.0, 3, 1.0, -0.1)

    def test_dominates_empirical_tail(self):
        b = np.array([1.0, 0.0, 0.0])
        for gamma, t in ((5.0, 0.2), (10.0, 0.3)):
            bound = theory.chernoff_tail_bound(b, 0.0, 3, gamma, t)
            freq, se = theory.mc_tail_frequency(b, 3, gamma, 200_000, seed=23)
            assert freq <= bound + 3.0 * se


class TestBoundTerm:
    @pytest.mark.parametrize("alpha,beta", [(0.5, -4.0), (1 / 3, -10.0), (2.0, 1.0)])
    def test_half_at_t_zero(self, alpha, beta):
        assert theory.bound_term(alpha, beta, 3, 0.0) == 0.5

    @pytest.mark.parametrize(
        "alpha,beta,t,expected",
        [
            (0.5, -4.0, 0.3, 0.287),
            (0.5, -4.0, 0.4, 1.214),
            (0.5, -10.0, 0.3, -1.513),
            (0.5, -10.0, 0.4, -1.186),
            (1 / 3, -4.0, 0.3, 0.249),
            (1 / 3, -4.0, 0.4, 1.081),
        ],
    )
    def test_reference_exponents(self, alpha, beta, t, expected):
        assert abs(theory.bound_exponent(alpha, beta, 3, t) - expected) < 1e-3

    def test_full_reference_table(self):
        for (alpha, beta, t), expected in theory.BOUND_EXPONENT_REFERENCE.items():
            assert abs(theory.bound_exponent(alpha, beta, 3, t) - expected) < 1e-3


class TestOptimalT:
    def test_strongly_negative_beta_has_interior_minimum(self):
        t = theory.optimal_t(0.5, -4.0, 3)
        assert t is not None and 0.0 < t < 0.5
        assert theory.bound_term(0.5, -4.0, 3, t) < 0.5

    def test_matches_grid_minimization_oracle(self):
        grid = np.linspace(0.0, 0.4999, 20_001)
        for alpha, beta in ((0.5, -4.0), (0.5, -12.0), (2.0, -7.0), (9.0, -3.5)):
            t = theory.optimal_t(alpha, beta, 3)
            assert t is not None
            best_grid = min(theory.bound_exponent(alpha, beta, 3, g) for g in grid)
            assert theory.bound_exponent(alpha, beta, 3, t) <= best_grid + 1e-9

    def test_mild_beta_has_no_interior_minimum(self):
        assert theory.optimal_t(0.5, -1.0, 3) is None
        assert theory.optimal_t(0.5, -3.0, 3) is None  # beta == -d sits on the boundary
        assert theory.optimal_t(0.5, 0.0, 3) is None

    def test_positive_beta_region(self):
        # scan: no (alpha, 0<beta<d) pair yields an interior stationary pair
        for alpha in (0.1, 0.5, 1.0, 2.0, 5.0):
            for beta in (0.5, 1.0, 2.0, 2.9):
                t = theory.optimal_t(alpha, beta, 3)
                assert t is None or 0.0 < t < 0.5

    def test_requires_positive_alpha(self):
        with pytest.raises(InvalidParameterError):
            theory.optimal_t(0.0, -4.0, 3)


class TestAccuracyBoundReport:
    def test_identity_transforms(self):
        mu = np.array([1.0, 0.0, 0.0])
        report = theory.accuracy_bound_report(mu, theory.ClassTransform.identity(3), n=100_000)
        assert report.degenerate
        assert not report.conditions_met
        assert report.bound == 1.0
        assert report.p1 == 0.5 and report.p2 == 0.5
        clean = theory.clean_accuracy_closed_form(mu)
        assert abs(report.mc_tau_pu - clean) <= 3.0 * report.mc_tau_se + 1e-6

    def test_searched_configuration_is_unlearnable(self):
        report = theory.accuracy_bound_report(DEMO_MU, demo_transforms(DEMO_MU), n=200_000, seed=23)
        assert report.quad_positive
        assert report.conditions_met
        assert report.beta1 < -3 and report.beta2 < -3
        assert report.bound < 1.0
        assert report.t1_status == "optimal" and report.t2_status == "optimal"
        assert report.mc_tau_pu < report.clean_tau - 6.0 * report.mc_tau_se
        assert report.mc_tau_pu <= report.bound + 3.0 * report.mc_tau_se

    def test_fixed_t_values_respected(self):
        report = theory.accuracy_bound_report(DEMO_MU, demo_transforms(DEMO_MU), t1=0.0, t2=0.0, n=10_000)
        assert report.p1 == 0.5 and report.p2 == 0.5 and report.bound == 1.0
        assert report.t1_status == "fixed"

    def test_search_requires_nonzero_mu(self):
        with pytest.raises(InvalidParameterError):
            theory.search_unlearnable_config(np.zeros(3))


class TestFitEmpiricalBoundary:
    def exact_moment_samples(self, ct, mu):
        """A finite sample whose mean and variance equal the model moments."""
        d = len(mu)
        xs, ys = [], []
        for label in (1, -1):
            lam = ct.lam_pos if label == 1 else ct.lam_neg
            center = label * (ct.matrix(label) @ mu)
            for axis in range(d):
                offset = np.zeros(d)
                offset[axis] = lam * math.sqrt(d)
                xs.extend([center + offset, center - offset])
                ys.extend([label, label])
        return np.array(xs), np.array(ys)

    def test_exact_moments_recover_coefficients(self):
        mu = np.array([0.9, -0.4, 0.3])
        ct = theory.ClassTransform(0.8, rotation_matrix(0.2, 0.1, 0.5), 0.6, rotation_matrix(0.4, 0.3, 0.2))
        want = theory.unlearnable_boundary(mu, ct)
        x, y = self.exact_moment_samples(ct, mu)
        got = theory.fit_empirical_boundary(x, y)
        assert abs(got.quad - want.quad) < 1e-9
        assert np.max(np.abs(got.linear - want.linear)) < 1e-9
        assert abs(got.const - want.const) < 1e-9

    def test_transfer_direction(self):
        # trained on transformed draws: near-Bayes on transformed data,
        # far worse on clean data
        mu = DEMO_MU
        ct = demo_transforms(mu)
        x, y = theory.sample_gmm(mu, 100_000, seed=11)
        fitted = theory.fit_empirical_boundary(theory.transform_gmm(x, y, ct), y)
        held_x, held_y = theory.sample_gmm(mu, 200_000, seed=12)
        held_t = theory.transform_gmm(held_x, held_y, ct)
        bayes = theory.unlearnable_boundary(mu, ct)
        acc_fit = float(np.mean(fitted.classify(held_t) == held_y))
        acc_bayes = float(np.mean(bayes.classify(held_t) == held_y))
        assert acc_fit > 0.9 * acc_bayes
        acc_clean = float(np.mean(fitted.classify(held_x) == held_y))
        se = math.sqrt(acc_fit * (1 - acc_fit) / len(held_y)) + 1e-9
        assert acc_clean < acc_fit - 6.0 * se

    def test_single_class_rejected(self):
        x = np.ones((5, 3))
        with pytest.raises(InvalidParameterError):
            theory.fit_empirical_boundary(x, np.ones(5))


class TestOrthogonalHelpers:
    @pytest.mark.parametrize("d", [2, 3, 8])
    def test_random_orthogonal(self, d):
        m = theory.random_orthogonal(d, seed=23)
        assert np.max(np.abs(m @ m.T - np.eye(d))) < 1e-12
        assert abs(np.linalg.det(m) - 1.0) < 1e-10

    def test_plane_rotation_rotates_by_angle(self):
        direction = np.array([1.0, 2.0, -1.0, 0.5])
        angle = 2.0
        rot = theory.plane_rotation(direction, angle)
        assert np.max(np.abs(rot @ rot.T - np.eye(4))) < 1e-12
        u = direction / np.linalg.norm(direction)
        assert math.isclose(float(u @ (rot @ u)), math.cos(angle), abs_tol=1e-12)

    def test_class_transform_validation(self):
        with pytest.raises(InvalidParameterError):
            theory.ClassTransform(0.0, np.eye(3), 1.0, np.eye(3))
        skew = np.eye(3)
        skew[0, 1] = 0.5
        with pytest.raises(InvalidParameterError):
            theory.ClassTransform(1.0, skew, 1.0, np.eye(3))


class TestHigherDimension:
    def test_closure_and_bound_at_d8(self):
        d = 8
        mu = np.zeros(d)
        mu[0] = 1.5
        rot = theory.random_orthogonal(d, seed=4)
        ct = theory.ClassTransform(0.8, rot, 0.6, rot)
        x, y = theory.sample_gmm(mu, 50_000, seed=6)
        out = theory.transform_gmm(x, y, ct)
        pos = out[y == 1]
        tol = 5.0 * 0.8 / math.sqrt(len(pos)) * math.sqrt(d)
        assert np.max(np.abs(pos.mean(axis=0) - 0.8 * (rot @ mu))) < tol
        report = theory.accuracy_bound_report(mu, ct, n=100_000, seed=3)
        assert not report.degenerate
        assert report.mc_tau_pu <= 1.0
