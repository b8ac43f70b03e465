import math

import numpy as np
import pytest
from wave_stability.core.elliptic import complete_K
from wave_stability.core.errors import (
    DegenerateFamilyError,
    DomainError,
    NotInvertibleError,
)
from wave_stability.core.profiles import (
    change_of_variables,
    check_relations,
    cubic_profile,
    first_integral_residual,
    monotonicity_closed_form,
    peakon_phi,
    peakon_profile,
    profile_residual,
    quadratic_profile,
    sample_profile,
    scale_quadratic,
)
from wave_stability.core.schemas import Normalization, WaveModel


### 🔹 TESTS FOR quadratic_profile ###
@pytest.mark.parametrize("k", [0.1, 0.5, 0.8, 0.95])
def test_quadratic_profile_relations(k):
    """Test the parameter relations and the speed normalization."""
    profile = quadratic_profile(k)
    assert check_relations(profile) < 1e-13
    assert profile.c == pytest.approx(1.0 / (4.0 * math.sqrt(1 - k * k + k**4)))
    assert profile.period == pytest.approx(2.0 * complete_K(k))


@pytest.mark.parametrize("k", [0.3, 0.7, 0.95])
def test_quadratic_profile_solves_ode(k):
    """Test c^2 Phi'' = Phi (Phi - c) under spectral differentiation."""
    assert profile_residual(quadratic_profile(k), 256) < 1e-9


def test_quadratic_profile_first_integral():
    """Test Phi'^2 = F(Phi) on a grid and at the crest."""
    profile = quadratic_profile(0.6)
    assert first_integral_residual(profile) < 1e-12
    assert first_integral_residual(profile, 1) < 1e-12


def test_quadratic_profile_derivatives():
    """Test dphi and d2phi against central differences."""
    profile = quadratic_profile(0.5)
    y, h = np.linspace(-1.0, 1.0, 11), 1e-5
    fd1 = (profile.phi(y + h) - profile.phi(y - h)) / (2 * h)
    fd2 = (profile.phi(y + h) - 2 * profile.phi(y) + profile.phi(y - h)) / h**2
    np.testing.assert_allclose(profile.dphi(y), fd1, atol=1e-9)
    np.testing.assert_allclose(profile.d2phi(y), fd2, atol=1e-5)


@pytest.mark.parametrize("k", [0.0, 1.0])
def test_quadratic_profile_degenerate(k):
    """Test that the degenerate moduli are refused."""
    with pytest.raises(DegenerateFamilyError):
        quadratic_profile(k)


def test_scale_quadratic_keeps_family_relation():
    """Test a rescaled member of the (alpha, c) family."""
    scaled = scale_quadratic(quadratic_profile(0.4), 2.0)
    assert scaled.normalization == Normalization.PHYSICAL
    assert check_relations(scaled) < 1e-13
    assert profile_residual(scaled, 256) < 1e-9


def test_scale_quadratic_invalid():
    """Test rescaling errors."""
    with pytest.raises(DomainError, match="positive"):
        scale_quadratic(quadratic_profile(0.4), -1.0)
    with pytest.raises(DomainError, match="quadratic"):
        scale_quadratic(cubic_profile(0.4), 2.0)


### 🔹 TESTS FOR cubic_profile ###
@pytest.mark.parametrize("k", [0.2, 0.6, 0.9])
def test_cubic_canonical_profile(k):
    """Test Phi = sn on [-2K, 2K) with the rescaled potential."""
    profile = cubic_profile(k)
    y = profile.grid(64)
    assert profile.period == pytest.approx(4.0 * complete_K(k))
    np.testing.assert_allclose(profile.roots[2], 1.0)
    np.testing.assert_allclose(
        profile.potential(y), 2 * k * k * profile.phi(y) ** 2 - (1 + k * k), atol=1e-13
    )
    assert profile_residual(profile, 256) < 1e-9


def test_cubic_physical_profile():
    """Test the physical snoidal wave for a given speed."""
    profile = cubic_profile(0.5, Normalization.PHYSICAL, c=2.0)
    assert check_relations(profile) < 1e-14
    assert profile_residual(profile, 256) < 1e-9
    assert first_integral_residual(profile) < 1e-12


def test_cubic_physical_needs_speed():
    """Test that a physical cubic profile needs c > 0."""
    with pytest.raises(DomainError, match="speed c > 0"):
        cubic_profile(0.5, Normalization.PHYSICAL)


### 🔹 TESTS FOR change_of_variables ###
@pytest.mark.parametrize("k", [0.2, 0.6, 0.9])
def test_change_of_variables_margin_matches_closed_form(k):
    """Test the monotonicity margin of quadratic waves."""
    profile = quadratic_profile(k)
    cov = change_of_variables(profile)
    closed = monotonicity_closed_form(profile, profile.grid(1024))
    assert cov.monotonicity_margin > 0.0
    assert cov.monotonicity_margin == pytest.approx(np.min(closed), rel=1e-12)


def test_change_of_variables_slope():
    """Test that dXi/deta is the derivative of Xi."""
    cov = change_of_variables(cubic_profile(0.5, Normalization.PHYSICAL, c=1.0))
    eta, h = np.linspace(-2.0, 2.0, 9), 1e-5
    fd = (cov.xi(eta + h) - cov.xi(eta - h)) / (2 * h)
    np.testing.assert_allclose(cov.dxi(eta), fd, atol=1e-8)
    assert cov.xi(0.0) == pytest.approx(0.0, abs=1e-14)


def test_change_of_variables_not_invertible(mocker):
    """Test that a non-positive margin is reported."""
    profile = quadratic_profile(0.5)
    mocker.patch.object(type(profile), "phi", lambda self, y: np.full(np.shape(y), 2.0 * self.c))
    with pytest.raises(NotInvertibleError, match="not strictly monotone"):
        change_of_variables(profile)


def test_monotonicity_closed_form_quadratic_only():
    """Test that the closed-form margin is refused for cubic waves."""
    with pytest.raises(DomainError):
        monotonicity_closed_form(cubic_profile(0.5), 0.0)


### 🔹 TESTS FOR peakon_profile ###
@pytest.mark.parametrize("L", [1.0, 3.0])
def test_peakon_profile_identities(L):
    """Test Phi(eta) = phi(Xi(eta)) and the speed c = L^2 / 9."""
    profile, cov = peakon_profile(L)
    eta = np.linspace(-4.0 * L, 4.0 * L, 41)
    assert profile.c == pytest.approx(L * L / 9.0)
    np.testing.assert_allclose(profile.phi(eta), peakon_phi(cov.xi(eta), L), atol=1e-13)
    np.testing.assert_allclose(cov.dxi(eta), 1.0 - profile.phi(eta) / profile.c, atol=1e-13)
    assert np.all(np.abs(cov.xi(eta)) < L)


@pytest.mark.parametrize("L", [0.0, -2.0, math.inf])
def test_peakon_profile_invalid(L):
    """Test that L must be positive and finite."""
    with pytest.raises(DomainError):
        peakon_profile(L)


### 🔹 TESTS FOR sample_profile ###
def test_sample_profile_columns():
    """Test the (y, phi, dphi) sample layout."""
    profile = quadratic_profile(0.5)
    samples = sample_profile(profile, 32)
    assert samples.shape == (32, 3)
    np.testing.assert_allclose(samples[:, 0], profile.grid(32))
    np.testing.assert_allclose(samples[:, 2], profile.dphi(samples[:, 0]))


def test_sample_profile_peakon_window():
    """Test peakon samples on a symmetric window."""
    profile, _ = peakon_profile(2.0)
    samples = sample_profile(profile, 11, half_width=5.0)
    assert samples[0, 0] == -5.0 and samples[-1, 0] == 5.0
    assert samples[:, 0].size == 11
    assert profile.model == WaveModel.PEAKON
