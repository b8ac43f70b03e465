import math

import numpy as np
import pytest
from wave_stability.core.elliptic import complete_E, complete_K
from wave_stability.core.errors import (
    CertificateError,
    CrossValidationError,
    DegenerateFamilyError,
    DegenerateWronskianError,
    DomainError,
    OrthogonalityError,
)
from wave_stability.core.greens import (
    build_tilde_system,
    d_matrix_cubic,
    index_closed_form,
    index_cubic,
    index_quadratic,
    invert_on_complement,
    limit_targets,
    psi_cubic,
    psi_quadratic,
    stability_index,
    unit_modulus_limit,
    wronskian_closed_form,
)
from wave_stability.core.hillop import hill_operator
from wave_stability.core.schemas import Tolerances, WaveModel
from wave_stability.core.spectral import periodic_grid


### 🔹 TESTS FOR the rescaled quadratic system ###
@pytest.mark.parametrize("k", [0.2, 0.5, 0.9])
def test_tilde_system_kernel(k):
    """Test L~ Phi~ = 0 and gamma = -4 s."""
    ts = build_tilde_system(k)
    op = ts.operator(256)
    assert np.max(np.abs(op.apply(ts.phi_tilde(op.grid)))) < 1e-9
    assert ts.gamma == pytest.approx(-4.0 * math.sqrt(1 - k * k + k**4))
    assert ts.period == pytest.approx(2.0 * complete_K(k))


@pytest.mark.parametrize("k", [0.0, 1.0])
def test_tilde_system_degenerate(k):
    """Test that the degenerate moduli are refused."""
    with pytest.raises(DegenerateFamilyError):
        build_tilde_system(k)


def test_wronskian_closed_form_positive():
    """Test that the Wronskian is positive inside (0, 1)."""
    assert all(wronskian_closed_form(k) > 0.0 for k in np.linspace(0.01, 0.99, 50))


@pytest.mark.parametrize("k", [0.05, 0.3, 0.6, 0.9, 0.99])
def test_psi_quadratic_wronskian(k):
    """Test the numerical Wronskian against its closed form."""
    pair = psi_quadratic(build_tilde_system(k), 256)
    closed = wronskian_closed_form(k)
    assert abs(pair.wronskian - closed) / closed <= 1e-9
    assert pair.wronskian_spread / closed <= 1e-9


def test_psi_quadratic_is_odd_solution():
    """Test that Psi~ is odd and solves L~ Psi~ = 0."""
    pair = psi_quadratic(build_tilde_system(0.6), 256)
    mirror = (-np.arange(256)) % 256
    np.testing.assert_allclose(pair.psi[mirror][1:], -pair.psi[1:], atol=1e-10)
    assert pair.residual < 1e-7


### 🔹 TESTS FOR the cubic companion solution ###
@pytest.mark.parametrize("k", [0.1, 0.5, 0.9])
def test_psi_cubic_unit_wronskian(k):
    """Test W = 1 uniformly over the grid."""
    pair = psi_cubic(k, 64)
    assert abs(pair.wronskian - 1.0) < 1e-12
    assert pair.wronskian_spread < 1e-12


def test_psi_cubic_boundary_values():
    """Test Psi(+-2K) = 1 and the odd jump of Psi'."""
    pair = psi_cubic(0.7, 128)
    assert pair.psi[0] == pytest.approx(1.0, abs=1e-13)
    assert pair.psi_boundary[0] == 1.0
    assert pair.dpsi[0] == pytest.approx(-pair.psi_boundary[1], rel=1e-10)
    assert pair.residual < 1e-7


def test_psi_cubic_degenerate_wronskian():
    """Test that a Wronskian below the floor raises."""
    with pytest.raises(DegenerateWronskianError, match="numerically zero"):
        psi_cubic(0.5, 64, Tolerances(wronskian_floor=2.0))


### 🔹 TESTS FOR invert_on_complement ###
def test_invert_on_complement_with_kernel():
    """Test -u'' = cos x with u orthogonal to constants."""
    n = 32
    x = periodic_grid(n, 2.0 * math.pi)
    op = hill_operator(np.zeros(n), 2.0 * math.pi)
    u = invert_on_complement(op, np.cos(x))
    np.testing.assert_allclose(u, np.cos(x), atol=1e-12)


def test_invert_on_complement_without_kernel():
    """Test (-d^2 + 1) u = cos x."""
    n = 32
    x = periodic_grid(n, 2.0 * math.pi)
    op = hill_operator(np.ones(n), 2.0 * math.pi)
    np.testing.assert_allclose(invert_on_complement(op, np.cos(x)), 0.5 * np.cos(x), atol=1e-12)


def test_invert_on_complement_rejects_kernel_component():
    """Test that a right-hand side with a mean raises OrthogonalityError."""
    n = 32
    x = periodic_grid(n, 2.0 * math.pi)
    op = hill_operator(np.zeros(n), 2.0 * math.pi)
    with pytest.raises(OrthogonalityError, match="kernel component"):
        invert_on_complement(op, 1.0 + np.cos(x))


def test_invert_on_complement_known_kernel():
    """Test deflation against given kernel samples."""
    n = 32
    x = periodic_grid(n, 2.0 * math.pi)
    op = hill_operator(np.zeros(n), 2.0 * math.pi)
    u = invert_on_complement(op, np.sin(2.0 * x), kernel=np.ones(n))
    np.testing.assert_allclose(u, 0.25 * np.sin(2.0 * x), atol=1e-12)
    with pytest.raises(OrthogonalityError, match="kernel component"):
        invert_on_complement(op, 1.0 + np.sin(x), kernel=np.ones(n))


@pytest.mark.parametrize("k", [0.01, 0.02, 0.5])
def test_invert_on_complement_small_modulus_kernel(k):
    """Test that the odd right-hand side stays clear of the even kernel as k -> 0."""
    ts = build_tilde_system(k)
    op = ts.operator(512)
    f = ts.dphi_tilde(op.grid)
    kernel = ts.phi_tilde(op.grid)
    u = invert_on_complement(op, f, kernel=kernel)
    assert abs(u @ kernel) <= 1e-8 * np.linalg.norm(u) * np.linalg.norm(kernel)
    assert np.all(np.isfinite(u))
    assert op.weight * (u @ f) < 0.0


def test_invert_on_complement_zero_rhs():
    """Test that f = 0 returns zeros."""
    op = hill_operator(np.zeros(16), 1.0)
    np.testing.assert_array_equal(invert_on_complement(op, np.zeros(16)), np.zeros(16))


### 🔹 TESTS FOR the stability indices ###
@pytest.mark.parametrize("k", [0.2, 0.5, 0.8])
def test_index_quadratic(k):
    """Test negativity and agreement of both routes."""
    index = index_quadratic(k)
    assert index.value_greens < 0.0
    assert index.discrepancy <= 1e-6
    assert not index.flagged
    assert set(index.components) == {"I1", "I2", "h", "W", "C"}


@pytest.mark.parametrize("k", [0.01, 0.02])
def test_index_quadratic_small_modulus(k):
    """Test the k -> 0 anchor and the flagged refinement."""
    index = index_quadratic(k)
    assert index.flagged
    assert index.n_quad == 512
    assert abs(index.value_greens + 24.0 * math.pi) / (24.0 * math.pi) < 0.01


def test_index_quadratic_needs_fine_grid():
    """Test that coarse quadrature grids are refused."""
    with pytest.raises(DomainError, match="at least 256"):
        index_quadratic(0.5, 128)


def test_index_quadratic_cross_validation_failure(mocker):
    """Test that disagreeing routes raise CrossValidationError."""
    mocker.patch("wave_stability.core.greens.invert_on_complement", return_value=np.zeros(256))
    with pytest.raises(CrossValidationError) as exc_info:
        index_quadratic(0.5)
    assert exc_info.value.details["value_spectral"] == 0.0


@pytest.mark.parametrize("k", [0.2, 0.5, 0.8, 0.95])
def test_index_cubic(k):
    """Test int Psi Phi' = -2K, negativity and agreement of both routes."""
    index = index_cubic(k)
    K = complete_K(k)
    assert abs(index.components["int_psi_dphi"] + 2.0 * K) / (2.0 * K) <= 1e-8
    assert index.value_greens < 0.0
    assert index.discrepancy <= 1e-6
    assert index.components["half_normalized"] == pytest.approx(0.5 * index.value_greens)
    assert index.components["derivative_mismatch"] == pytest.approx(0.0, abs=1e-12)


def test_stability_index_dispatch():
    """Test model dispatch and the peakon refusal."""
    assert stability_index("cubic", 0.5).model == WaveModel.CUBIC
    with pytest.raises(DomainError):
        stability_index(WaveModel.PEAKON, 0.5)


def test_index_closed_form_limits():
    """Test the closed forms against the known limits."""
    assert abs(index_closed_form("quadratic", 0.01) + 24.0 * math.pi) / (24.0 * math.pi) < 0.01
    assert abs(index_closed_form("cubic", 1.0 - 1e-12) + 2.0) / 2.0 < 0.1


@pytest.mark.parametrize("model, target", [("quadratic", -24.0), ("cubic", -2.0)])
def test_unit_modulus_limit(model, target):
    """Test the extrapolated k -> 1 limit within 1%."""
    estimate = unit_modulus_limit(model)
    assert abs(estimate.limit - target) / abs(target) < 0.01
    assert np.all(np.diff(estimate.values) > 0.0)
    assert limit_targets(model)["k_to_1"] == target


### 🔹 TESTS FOR d_matrix_cubic ###
@pytest.mark.parametrize("k", [0.2, 0.5, 0.9])
def test_d_matrix_cubic(k):
    """Test the diagonal, negative-definite D-matrix of the cubic wave."""
    report = d_matrix_cubic(k)
    D = np.asarray(report.matrix)
    assert max(abs(D[0, 1]), abs(D[1, 0])) < 1e-9
    assert D[0, 0] < 0.0 and D[1, 1] < 0.0
    assert report.negative_definite
    K, E = complete_K(k), complete_E(k)
    assert D[1, 1] == pytest.approx(4.0 * K * (1 - k * k) - 8.0 * E, rel=1e-9)
    assert report.d22_closed_form == pytest.approx(D[1, 1], rel=1e-9)


def test_d_matrix_cubic_certificate_failure(mocker):
    """Test that a failed verdict raises CertificateError."""
    mocker.patch("wave_stability.core.greens.neg_def_2x2", return_value=False)
    with pytest.raises(CertificateError, match="not negative definite"):
        d_matrix_cubic(0.5)
