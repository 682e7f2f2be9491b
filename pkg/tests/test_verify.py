"""
Tests for the numerical certificate checks.
"""

import numpy as np
import pytest

from relative_descent.bregman import Box, FullSpace, PositiveOrthant, ReferenceFunction, Simplex
from relative_descent.config import VerifySettings
from relative_descent.errors import DomainError
from relative_descent.problems import EsoCertificate
from relative_descent.sampling import Sampling, make_rng
from relative_descent.verify import (
    check_eso,
    check_gradient_fd,
    check_relative_smoothness,
    check_relative_strong_convexity,
    check_three_point,
    check_unbiased_oracle,
    run_suite,
    sample_pairs,
)

FAST = VerifySettings(n_pairs=200, n_mc=500)


class TestSamplePairs:
    """Test problem-aware pair sampling."""

    def test_pairs_lie_in_domain(self, regularized_poisson_small, d_optimal_small, rng):
        for p, _ in (regularized_poisson_small, d_optimal_small):
            X, Y = sample_pairs(p, 50, rng)
            assert X.shape == Y.shape == (50, p.n)
            assert np.all(X > 0) and np.all(Y > 0)
        X, _ = sample_pairs(d_optimal_small[0], 20, rng)
        assert np.allclose(X.sum(axis=1), 1.0)


class TestShippedCertificates:
    """Test every builder's certificates pass their own checks."""

    @pytest.mark.parametrize("fixture", ["quad_quartic_small", "regularized_poisson_small", "d_optimal_small"])
    def test_relative_smoothness(self, fixture, request):
        p, _ = request.getfixturevalue(fixture)

        report = check_relative_smoothness(p, rng=make_rng(1), settings=FAST)

        assert report.passed, report.detail
        assert report.n_samples == 200

    @pytest.mark.parametrize("fixture", ["quad_quartic_small", "regularized_poisson_small", "d_optimal_small"])
    def test_relative_strong_convexity(self, fixture, request):
        p, _ = request.getfixturevalue(fixture)

        report = check_relative_strong_convexity(p, rng=make_rng(2), settings=FAST)

        assert report.passed, report.detail

    def test_scaled_smoothness_fails_with_witness(self, quad_quartic_small):
        """Test L/10 is caught and the offending pair is returned."""
        p, _ = quad_quartic_small

        report = check_relative_smoothness(p, p.L / 10, rng=make_rng(3), settings=FAST)

        assert not report.passed
        assert report.worst_slack < 0
        assert len(report.witness["x"]) == 20 and len(report.witness["y"]) == 20

    def test_witness_reproduces_violation(self, quad_quartic_small):
        p, _ = quad_quartic_small
        report = check_relative_smoothness(p, p.L / 10, rng=make_rng(3), settings=FAST)
        x, y = np.array(report.witness["x"]), np.array(report.witness["y"])

        again = check_relative_smoothness(p, p.L / 10, pairs=(x[None], y[None]), settings=FAST)

        assert not again.passed
        assert again.worst_slack == pytest.approx(report.worst_slack)

    def test_overstated_strong_convexity_fails(self, regularized_poisson_small):
        p, _ = regularized_poisson_small

        report = check_relative_strong_convexity(p, mu=10.0 * p.L, rng=make_rng(4), settings=FAST)

        assert not report.passed

    def test_pairs_outside_domain_rejected(self, poisson_small):
        p, _ = poisson_small

        with pytest.raises(DomainError):
            check_relative_smoothness(p, pairs=(-np.ones((1, 10)), np.ones((1, 10))))


class TestGradientChecks:
    def test_wrong_gradient_detected(self, quad_quartic_small, rng):
        """Test a perturbed analytic gradient fails the finite-difference check."""
        p, _ = quad_quartic_small

        class Broken(type(p)):
            def gradient(self, x):
                return super().gradient(x) + 1e-2

        broken = Broken(p.M, p.a)

        assert not check_gradient_fd(broken, [rng.normal(size=20)]).passed

    def test_unbiased_oracle(self, regularized_poisson_small, rng):
        p, x0 = regularized_poisson_small

        report = check_unbiased_oracle(p, x0, n_draws=2000, rng=rng, tau=2)

        assert report.passed, report.detail
        assert report.n_samples == 10


class TestESO:
    """Test sampled ESO inequalities."""

    def test_spectral_vector_passes(self, rng):
        from relative_descent.problems import quad_quartic_random

        p, _ = quad_quartic_random(n=8, a=0.1, seed=5, x0_scale=1.0)
        cert = p.eso_certificate(Sampling(8, 1))
        for _ in range(20):
            x, q = rng.normal(0.0, 3.0, 8), rng.normal(0.0, 3.0, 8)
            report = check_eso(p, cert, x, q)
            assert report.passed, report.detail
            assert report.n_samples == 8

    def test_spectral_vector_passes_for_larger_subsets(self, rng):
        from relative_descent.problems import quad_quartic_random

        p, _ = quad_quartic_random(n=8, a=0.1, seed=5, x0_scale=1.0)
        cert = p.eso_certificate(Sampling(8, 3))
        for _ in range(20):
            report = check_eso(p, cert, rng.normal(0.0, 3.0, 8), rng.normal(0.0, 3.0, 8))
            assert report.passed, report.detail

    def test_diagonal_vector_fails_on_large_iterates(self):
        """Test the uncertified max(a, M_ii) vector is violated where the quartic dominates."""
        from relative_descent.problems import quad_quartic_random

        p, _ = quad_quartic_random(n=8, a=0.1, seed=5, x0_scale=1.0)
        cert = p.eso_certificate(Sampling(8, 1), rule="diagonal")

        report = check_eso(p, cert, np.full(8, 10.0), np.ones(8))

        assert not report.passed
        assert report.witness["lhs_rhs"][0] > report.witness["lhs_rhs"][1]

    def test_halved_vector_fails_along_top_eigenvector(self):
        from relative_descent.problems import quad_quartic_random

        p, _ = quad_quartic_random(n=8, a=0.1, seed=5, x0_scale=1.0)
        cert = p.eso_certificate(Sampling(8, 8))
        halved = EsoCertificate(cert.sampling, 0.5 * cert.v, cert.w)
        top = np.linalg.eigh(p.M)[1][:, -1]

        assert check_eso(p, cert, np.zeros(8), top).passed
        assert not check_eso(p, halved, np.zeros(8), top).passed

    def test_monte_carlo_path(self, rng):
        """Test large supports fall back to Monte Carlo."""
        from relative_descent.problems import quad_quartic_random

        p, _ = quad_quartic_random(n=30, a=0.1, seed=6, x0_scale=1.0)
        cert = p.eso_certificate(Sampling(30, 10))

        report = check_eso(p, cert, rng.normal(size=30), rng.normal(size=30), n_mc=400, rng=rng)

        assert report.n_samples == 400
        assert "Monte Carlo" in report.detail
        assert report.passed


class TestThreePoint:
    """Test the three-point property of mirror steps."""

    @pytest.mark.parametrize(
        "h,Q,z",
        [
            (ReferenceFunction.quadratic_quartic(4, 0.2), FullSpace(), np.array([1.0, -2.0, 0.5, 3.0])),
            (ReferenceFunction.burg(4), PositiveOrthant(), np.array([0.5, 1.0, 2.0, 4.0])),
            (ReferenceFunction.burg(4), Simplex(), np.array([0.1, 0.2, 0.3, 0.4])),
            (ReferenceFunction.squared_half(4), Box.uniform(4, -1.0, 1.0), np.array([0.0, 0.5, -0.5, 0.9])),
        ],
    )
    def test_three_point(self, h, Q, z, rng):
        c = 0.1 * rng.uniform(-1.0, 1.0, 4)
        if isinstance(Q, Simplex):
            points = [rng.dirichlet(np.ones(4)) for _ in range(50)]
        elif isinstance(Q, PositiveOrthant):
            points = [np.exp(rng.uniform(-2, 2, 4)) for _ in range(50)]
        elif isinstance(Q, Box):
            points = [rng.uniform(-1, 1, 4) for _ in range(50)]
        else:
            points = [rng.normal(size=4) for _ in range(50)]

        report = check_three_point(h, Q, z, c, points)

        assert report.passed, report.detail

    def test_weighted_three_point(self, rng):
        h = ReferenceFunction.quadratic_quartic(3, 0.1)
        points = [rng.normal(size=3) for _ in range(30)]

        report = check_three_point(h, FullSpace(), np.ones(3), rng.normal(size=3), points, v=[1.0, 2.0, 5.0])

        assert report.name == "three_point_weighted"
        assert report.passed


class TestSuite:
    """Test the full verification suite."""

    def test_quad_quartic_suite(self, quad_quartic_small):
        p, x0 = quad_quartic_small
        cert = p.eso_certificate(Sampling(20, 1))

        reports = run_suite(p, x0, make_rng(0), certificates=[cert], settings=FAST)

        names = [r.name for r in reports]
        assert names[:4] == ["gradient_fd", "relative_smoothness", "relative_strong_convexity", "three_point"]
        assert names.count("eso") == 5
        assert "unbiased_oracle" not in names
        assert all(r.passed for r in reports)

    def test_poisson_suite_includes_oracle(self, regularized_poisson_small):
        p, x0 = regularized_poisson_small

        reports = run_suite(p, x0, make_rng(0), settings=FAST)

        assert reports[-1].name == "unbiased_oracle"
        assert all(r.passed for r in reports), [r.name for r in reports if not r.passed]

    def test_scaled_smoothness_in_suite(self, quad_quartic_small):
        p, x0 = quad_quartic_small

        reports = run_suite(p, x0, make_rng(0), L=p.L / 10, settings=FAST)

        failed = {r.name for r in reports if not r.passed}
        assert failed == {"relative_smoothness"}
