import math

import numpy as np
import pytest
from scipy.special import ellipe, ellipj, ellipkm1
from wave_stability.core.elliptic import (
    check_modulus,
    complementary_modulus,
    complete_E,
    complete_K,
    complete_integrals,
    jacobi,
)
from wave_stability.core.errors import DomainError


### 🔹 TESTS FOR check_modulus ###
@pytest.mark.parametrize("k", [-0.1, 1.5, math.nan, math.inf])
def test_check_modulus_out_of_range(k):
    """Test that moduli outside [0, 1] are rejected."""
    with pytest.raises(DomainError):
        check_modulus(k)


def test_check_modulus_endpoints():
    """Test the optional exclusion of k = 0 and k = 1."""
    assert check_modulus(0.0) == 0.0
    with pytest.raises(DomainError, match="k=0"):
        check_modulus(0.0, allow_zero=False)
    with pytest.raises(DomainError, match="k=1"):
        check_modulus(1.0, allow_one=False)


def test_complementary_modulus_near_one():
    """Test k' without cancellation close to k = 1."""
    k = 1.0 - 1e-10
    assert complementary_modulus(k) == pytest.approx(math.sqrt(2e-10), rel=1e-9)


### 🔹 TESTS FOR complete integrals ###
@pytest.mark.parametrize("k", [0.0, 0.1, 0.5, 0.9, 0.999, 1.0 - 1e-8])
def test_complete_K_matches_scipy(k):
    """Test K(k) against scipy, with 1 - m = (1 - k)(1 + k) formed without cancellation."""
    assert complete_K(k) == pytest.approx(ellipkm1((1.0 - k) * (1.0 + k)), rel=1e-13)


@pytest.mark.parametrize("k", [0.0, 0.1, 0.5, 0.9, 0.999])
def test_complete_E_matches_scipy(k):
    """Test E(k) against scipy (which takes m = k^2)."""
    assert complete_E(k) == pytest.approx(ellipe(k * k), rel=1e-13)


def test_complete_K_diverges_at_one():
    """Test that K(1) is refused and E(1) = 1."""
    with pytest.raises(DomainError, match="diverges"):
        complete_K(1.0)
    assert complete_E(1.0) == 1.0


def test_complete_integrals_legendre_relation():
    """Test Legendre's relation E K' + E' K - K K' = pi / 2."""
    k = 0.6
    kp = complementary_modulus(k)
    K, E = complete_integrals(k)
    Kp, Ep = complete_integrals(kp)
    assert E * Kp + Ep * K - K * Kp == pytest.approx(math.pi / 2.0, rel=1e-13)


### 🔹 TESTS FOR jacobi ###
@pytest.mark.parametrize("k", [0.2, 0.5, 0.8, 0.99])
def test_jacobi_matches_scipy(k):
    """Test sn, cn, dn against scipy.special.ellipj over several periods."""
    x = np.linspace(-12.0, 12.0, 97)
    sn, cn, dn = jacobi(x, k)
    ref_sn, ref_cn, ref_dn, _ = ellipj(x, k * k)
    np.testing.assert_allclose(sn, ref_sn, atol=1e-12)
    np.testing.assert_allclose(cn, ref_cn, atol=1e-12)
    np.testing.assert_allclose(dn, ref_dn, atol=1e-12)


def test_jacobi_identities():
    """Test sn^2 + cn^2 = 1 and dn^2 + k^2 sn^2 = 1."""
    k = 0.7
    sn, cn, dn = jacobi(np.linspace(0.0, 10.0, 51), k)
    np.testing.assert_allclose(sn**2 + cn**2, 1.0, atol=1e-14)
    np.testing.assert_allclose(dn**2 + k * k * sn**2, 1.0, atol=1e-14)


def test_jacobi_derivatives():
    """Test central differences of sn, cn, dn against their derivative formulas."""
    k, h = 0.6, 1e-5
    x = np.linspace(-3.0, 3.0, 31)
    sn, cn, dn = jacobi(x, k)
    plus = jacobi(x + h, k)
    minus = jacobi(x - h, k)
    np.testing.assert_allclose((plus.sn - minus.sn) / (2 * h), cn * dn, atol=1e-9)
    np.testing.assert_allclose((plus.cn - minus.cn) / (2 * h), -sn * dn, atol=1e-9)
    np.testing.assert_allclose((plus.dn - minus.dn) / (2 * h), -k * k * sn * cn, atol=1e-9)


@pytest.mark.parametrize(
    "k, expected",
    [
        (0.0, (math.sin(0.4), math.cos(0.4), 1.0)),
        (1.0, (math.tanh(0.4), 1.0 / math.cosh(0.4), 1.0 / math.cosh(0.4))),
    ],
)
def test_jacobi_degenerate_limits(k, expected):
    """Test the trigonometric and hyperbolic limits for scalar input."""
    values = jacobi(0.4, k)
    assert isinstance(values.sn, float)
    assert values == pytest.approx(expected, abs=1e-15)


def test_jacobi_quarter_period():
    """Test sn(K) = 1, cn(K) = 0, dn(K) = k'."""
    k = 0.8
    values = jacobi(complete_K(k), k)
    assert values == pytest.approx((1.0, 0.0, 0.6), abs=1e-13)


def test_jacobi_rejects_non_finite():
    """Test that non-finite arguments raise."""
    with pytest.raises(DomainError, match="finite"):
        jacobi(np.array([0.0, np.nan]), 0.5)
