"""
Tests for the benchmark problems, their oracles and certificates.
"""

import numpy as np
import pytest

from relative_descent.bregman import FullSpace, PositiveOrthant, Simplex, mirror_step
from relative_descent.errors import (
    CertificateError,
    DataError,
    DimensionMismatch,
    DomainError,
    OracleUnavailable,
)
from relative_descent.problems import (
    EsoCertificate,
    d_optimal_design,
    euclidean_view,
    estimate_sigma2,
    from_instance,
    full_step_point,
    normalized_gram,
    poisson_kl,
    quad_quartic,
    regularized_poisson,
    restricted_gd_smoothness,
    stochastic_grad,
)
from relative_descent.sampling import Sampling, make_rng
from relative_descent.verify import check_gradient_fd


class TestQuadQuartic:
    """Test the quadratic-plus-quartic problem."""

    def test_certificates(self, quad_quartic_small):
        p, x0 = quad_quartic_small

        assert p.L == 1.0
        assert p.mu == 0.0
        assert p.f_star == 0.0
        assert np.array_equal(p.x_star, np.zeros(20))
        assert isinstance(p.Q, FullSpace)
        assert p.value(p.x_star) == 0.0

    def test_normalized_spectrum(self, quad_quartic_small):
        p, _ = quad_quartic_small

        assert p.lambda_max == pytest.approx(1.0, abs=1e-12)
        assert np.max(np.diag(p.M)) <= 1.0

    def test_gradient_matches_finite_differences(self, quad_quartic_small, rng):
        p, _ = quad_quartic_small

        report = check_gradient_fd(p, [rng.normal(size=20) for _ in range(5)])

        assert report.passed, report.detail

    def test_partial_gradient(self, quad_quartic_small, rng):
        p, _ = quad_quartic_small
        x = rng.normal(size=20)

        assert np.allclose(p.partial_gradient(x, [3, 7]), p.gradient(x)[[3, 7]])

    def test_rejects_nonsymmetric(self):
        with pytest.raises(DataError):
            quad_quartic(np.array([[0.5, 0.1], [0.0, 0.5]]), 0.1)

    def test_rejects_large_diagonal(self):
        with pytest.raises(CertificateError):
            quad_quartic(2.0 * np.eye(2), 0.1)

    def test_rejects_large_eigenvalue(self):
        """Test unit diagonal with eigenvalue 2 is rejected."""
        with pytest.raises(CertificateError):
            quad_quartic(np.ones((2, 2)), 0.1)

    def test_rejects_nonpositive_a(self):
        with pytest.raises(DataError):
            quad_quartic(np.eye(2), 0.0)

    def test_eso_spectral_serial(self, quad_quartic_small):
        """Test the single-coordinate ESO vector is all ones for a normalized M."""
        p, _ = quad_quartic_small

        cert = p.eso_certificate(Sampling(20, 1))

        assert np.array_equal(cert.v, np.ones(20))
        assert cert.certified
        assert cert.delta == 0.0

    def test_eso_spectral_full(self, quad_quartic_small):
        p, _ = quad_quartic_small

        cert = p.eso_certificate(Sampling(20, 20))

        assert np.allclose(cert.v, 1.0)

    def test_eso_diagonal_is_uncertified(self, quad_quartic_small):
        p, _ = quad_quartic_small

        cert = p.eso_certificate(Sampling(20, 1), rule="diagonal")

        assert not cert.certified
        assert cert.rule == "diagonal"
        assert np.allclose(cert.v, np.maximum(0.1, np.diag(p.M)))

    def test_unknown_eso_rule(self, quad_quartic_small):
        p, _ = quad_quartic_small

        with pytest.raises(ValueError):
            p.eso_certificate(Sampling(20, 1), rule="guess")

    def test_restricted_gd_smoothness(self, quad_quartic_small):
        p, x0 = quad_quartic_small

        expected = 1.0 + 24.0 * 0.1 * np.max(np.abs(x0)) ** 2

        assert restricted_gd_smoothness(p, x0) == pytest.approx(expected)

    def test_no_stochastic_oracle(self, quad_quartic_small, rng):
        p, x0 = quad_quartic_small

        with pytest.raises(OracleUnavailable):
            stochastic_grad(p, x0, 1, rng)


class TestNormalizedGram:
    def test_largest_eigenvalue_is_one(self, rng):
        M = normalized_gram(rng.standard_normal((6, 6)))

        assert np.allclose(M, M.T)
        assert np.linalg.eigvalsh(M)[-1] == pytest.approx(1.0)


class TestPoisson:
    """Test Poisson/KL regression."""

    def test_certificates(self, poisson_small):
        p, x0 = poisson_small

        assert p.kind == "poisson_kl"
        assert p.L == pytest.approx(float(np.sum(p.b)))
        assert p.mu == 0.0
        assert p.f_star is None
        assert isinstance(p.Q, PositiveOrthant)
        assert p.n_components == 30

    def test_regularized_certificates(self, regularized_poisson_small):
        p, _ = regularized_poisson_small

        assert p.kind == "regularized_poisson"
        assert p.mu == pytest.approx(0.1)
        assert p.L == pytest.approx(float(np.sum(p.b)) + 0.1)

    def test_gradient_matches_finite_differences(self, regularized_poisson_small, rng):
        p, _ = regularized_poisson_small

        report = check_gradient_fd(p, [np.exp(rng.uniform(-1, 1, 10)) for _ in range(5)])

        assert report.passed, report.detail

    def test_component_average_is_gradient(self, regularized_poisson_small):
        """Test the m oracle outcomes average exactly to the gradient."""
        p, x0 = regularized_poisson_small

        mean = np.mean([p.component_gradient(x0, i) for i in range(p.n_components)], axis=0)

        assert np.allclose(mean, p.gradient(x0), rtol=1e-12, atol=1e-12)

    def test_minibatch_shape(self, poisson_small, rng):
        p, x0 = poisson_small

        assert stochastic_grad(p, x0, 5, rng).shape == (10,)
        with pytest.raises(ValueError):
            stochastic_grad(p, x0, 0, rng)

    def test_rejects_negative_matrix(self):
        with pytest.raises(DataError):
            poisson_kl(np.array([[1.0, -1.0]]), np.array([1.0]))

    def test_rejects_nonpositive_b(self):
        with pytest.raises(DataError):
            poisson_kl(np.ones((2, 2)), np.array([1.0, 0.0]))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            poisson_kl(np.ones((2, 2)), np.ones(3))

    def test_regularized_needs_positive_weight(self):
        with pytest.raises(DataError):
            regularized_poisson(np.ones((2, 2)), np.ones(2), 0.0)

    def test_sigma2_estimate_is_heuristic(self, poisson_small):
        """Test Burg geometry flags the noise estimate as heuristic."""
        p, x0 = poisson_small

        value, heuristic = estimate_sigma2(p, x0, n_draws=200, rng=make_rng(0))

        assert value > 0
        assert heuristic

    def test_value_outside_domain(self, poisson_small):
        p, _ = poisson_small

        with pytest.raises(DomainError):
            p.value(np.zeros(10))


class TestDOptimal:
    """Test the D-optimal design problem."""

    def test_geometry(self, d_optimal_small):
        p, x0 = d_optimal_small

        assert isinstance(p.Q, Simplex)
        assert p.L == 1.0
        assert x0.sum() == pytest.approx(1.0)

    def test_euler_identity(self, d_optimal_small, rng):
        """Test <grad f(x), x> = -m, since f is -log-homogeneous of degree m."""
        p, _ = d_optimal_small
        for _ in range(10):
            x = rng.dirichlet(np.ones(10))
            assert p.gradient(x) @ x == pytest.approx(-3.0, rel=1e-10)

    def test_gradient_matches_finite_differences(self, d_optimal_small, rng):
        p, _ = d_optimal_small

        report = check_gradient_fd(p, [rng.dirichlet(np.ones(10)) for _ in range(5)])

        assert report.passed, report.detail

    def test_needs_enough_columns(self):
        with pytest.raises(DataError):
            d_optimal_design(np.eye(3))

    def test_needs_full_row_rank(self):
        with pytest.raises(DataError):
            d_optimal_design(np.ones((2, 4)))


class TestEuclideanView:
    def test_same_objective_new_geometry(self, quad_quartic_small, rng):
        p, _ = quad_quartic_small
        view = euclidean_view(p, 50.0)
        x = rng.normal(size=20)

        assert view.h.is_squared_half
        assert view.L == 50.0
        assert view.value(x) == p.value(x)
        assert np.array_equal(view.gradient(x), p.gradient(x))
        assert view.f_star == 0.0

    def test_constrained_problem_rejected(self, poisson_small):
        p, _ = poisson_small

        with pytest.raises(DomainError):
            euclidean_view(p, 10.0)

    def test_restricted_smoothness_needs_quad_quartic(self, poisson_small):
        p, x0 = poisson_small

        with pytest.raises(TypeError):
            restricted_gd_smoothness(p, x0)


class TestCertificates:
    """Test certificate overrides and ESO certificates."""

    def test_with_certificates(self, poisson_small):
        p, _ = poisson_small

        q = p.with_certificates(L=100.0, f_star=1.5, sigma2=None)

        assert q.L == 100.0 and q.f_star == 1.5
        assert p.L != 100.0 and p.f_star is None

    def test_with_certificates_mu_sets_w(self, poisson_small):
        p, _ = poisson_small

        q = p.with_certificates(mu=0.2)

        assert np.allclose(q.w, 0.2)

    def test_unknown_certificate(self, poisson_small):
        p, _ = poisson_small

        with pytest.raises(KeyError):
            p.with_certificates(kappa=1.0)

    def test_eso_delta(self):
        cert = EsoCertificate(Sampling(2, 1), np.array([2.0, 4.0]), np.array([1.0, 1.0]))

        assert cert.delta == pytest.approx(0.25)
        assert cert.p0 == 0.5

    def test_eso_rejects_nonpositive_v(self):
        with pytest.raises(CertificateError):
            EsoCertificate(Sampling(2, 1), np.array([1.0, 0.0]))

    def test_eso_rejects_wrong_shape(self):
        with pytest.raises(DimensionMismatch):
            EsoCertificate(Sampling(3, 1), np.ones(2))


class TestHelpers:
    def test_full_step_point(self, poisson_small):
        p, x0 = poisson_small

        expected = mirror_step(p.h, p.Q, x0, p.gradient(x0), p.L)

        assert np.array_equal(full_step_point(p, x0, p.L), expected)

    @pytest.mark.parametrize("fixture", ["quad_quartic_small", "regularized_poisson_small", "d_optimal_small"])
    def test_instance_roundtrip(self, fixture, request):
        """Test a problem rebuilt from its instance document evaluates identically."""
        p, x0 = request.getfixturevalue(fixture)

        q, y0 = from_instance(p.to_instance(x0))

        assert q.kind == p.kind
        assert q.L == p.L
        assert np.array_equal(y0, x0)
        assert q.value(x0) == pytest.approx(p.value(x0), rel=1e-14)
