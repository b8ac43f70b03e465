import math

import numpy as np
import pytest
import scipy.linalg
from wave_stability.core.errors import (
    DegenerateFamilyError,
    DomainError,
    ModelViolationError,
    NumericalError,
)
from wave_stability.core.hillop import (
    assemble,
    eig_sym,
    ground_state_alignment,
    hill_operator,
    kernel_check,
    kernel_samples,
    lame_check,
    lame_closed_forms,
    parity_basis,
    reflection,
    rescaled_operator,
    spectrum_dump,
)
from wave_stability.core.profiles import cubic_profile, peakon_profile, quadratic_profile
from wave_stability.core.schemas import WaveModel


### 🔹 TESTS FOR hill_operator ###
def test_hill_operator_constant_potential():
    """Test -d^2 + 1 on period 2 pi against its exact spectrum."""
    op = hill_operator(np.ones(32), 2.0 * math.pi)
    report = eig_sym(op, want_vectors=False)
    expected = np.sort(np.concatenate(([1.0], np.repeat(np.arange(1, 16) ** 2 + 1.0, 2), [257.0])))
    np.testing.assert_allclose(report.eigenvalues, expected, rtol=1e-10)
    assert report.gap == pytest.approx(1.0)


@pytest.mark.parametrize("n", [15, 8])
def test_hill_operator_invalid_grid(n):
    """Test that odd or too small grids raise."""
    with pytest.raises(DomainError):
        hill_operator(np.ones(n), 1.0)


def test_assemble_rejects_peakon():
    """Test that peakons have no periodic operator."""
    profile, _ = peakon_profile(3.0)
    with pytest.raises(DomainError, match="Peakons"):
        assemble(profile, 64)


def test_assemble_annihilates_phi():
    """Test L Phi = 0 for the physical quadratic operator."""
    profile = quadratic_profile(0.6)
    op = assemble(profile, 128)
    assert np.max(np.abs(op.apply(profile.phi(op.grid)))) < 1e-9
    assert op.weight == pytest.approx(profile.period / 128)


### 🔹 TESTS FOR eig_sym ###
def test_eig_sym_sign_convention():
    """Test that the largest component of every eigenvector is positive."""
    rng = np.random.default_rng(1)
    A = rng.standard_normal((6, 6))
    report = eig_sym(A + A.T)
    pivots = np.argmax(np.abs(report.eigenvectors), axis=0)
    assert np.all(report.eigenvectors[pivots, np.arange(6)] > 0.0)
    assert np.all(np.diff(report.eigenvalues) >= 0.0)


def test_eig_sym_kernel_and_negative_count():
    """Test kernel detection and negative counting."""
    report = eig_sym(np.diag([-2.0, -1.0, 1e-12, 3.0]))
    assert report.kernel_index() == 2
    assert report.negative_count() == 2
    assert report.gap == 3.0
    assert eig_sym(np.diag([-1.0, 2.0])).kernel_index() is None


def test_eig_sym_matches_independent_solvers():
    """Test a random 50x50 symmetric matrix against eigvalsh and LDL^T inertia counts."""
    rng = np.random.default_rng(4)
    A = rng.standard_normal((50, 50))
    A = A + A.T
    report = eig_sym(A)
    np.testing.assert_allclose(report.eigenvalues, np.linalg.eigvalsh(A), atol=1e-10)
    np.testing.assert_allclose(
        A @ report.eigenvectors, report.eigenvectors * report.eigenvalues, atol=1e-9
    )
    for shift in (-5.0, -0.5, 0.0, 1.3, 7.0):
        _, D, _ = scipy.linalg.ldl(A - shift * np.eye(50))
        below = int(np.count_nonzero(np.linalg.eigvalsh(D) < 0.0))
        assert below == int(np.count_nonzero(report.eigenvalues < shift))


def test_eig_sym_failure(mocker):
    """Test that LAPACK failures surface as NumericalError."""
    mocker.patch(
        "wave_stability.core.hillop.scipy.linalg.eigh",
        side_effect=scipy.linalg.LinAlgError("no convergence"),
    )
    with pytest.raises(NumericalError, match="did not converge"):
        eig_sym(np.eye(3))


### 🔹 TESTS FOR Lame spectra ###
@pytest.mark.parametrize("k", [0.3, 0.5, 0.7, 0.9])
def test_lame_check(k):
    """Test the lowest Lame eigenvalues against their closed forms."""
    report = lame_check(k, 256)
    assert report.max_rel_err <= 1e-8
    assert report.eps_closed == pytest.approx([k * k, 1.0, 1.0 + k * k])


def test_lame_closed_forms_small_modulus():
    """Test the k -> 0 limit of the closed forms."""
    forms = lame_closed_forms(1e-4)
    assert forms["nu"] == pytest.approx([0.0, 4.0, 4.0], abs=1e-6)


@pytest.mark.parametrize("k", [0.0, 1.0])
def test_lame_check_degenerate(k):
    """Test that degenerate moduli are refused."""
    with pytest.raises(DegenerateFamilyError):
        lame_check(k)


### 🔹 TESTS FOR kernel_check ###
@pytest.mark.parametrize(
    "profile",
    [quadratic_profile(0.3), quadratic_profile(0.8), cubic_profile(0.3), cubic_profile(0.8)],
)
def test_kernel_check(profile):
    """Test the kernel residual and the two-negative, one-zero signature."""
    report = kernel_check(profile, 256)
    assert report.residual < 1e-8
    assert report.n_negative == 2
    assert report.kernel_alignment == pytest.approx(1.0, abs=1e-8)


def test_kernel_check_signature_violation(mocker):
    """Test that a wrong signature raises ModelViolationError."""
    profile = cubic_profile(0.5)
    mocker.patch(
        "wave_stability.core.hillop.rescaled_operator",
        return_value=hill_operator(np.ones(32), 2.0 * math.pi),
    )
    mocker.patch("wave_stability.core.hillop.kernel_samples", return_value=np.zeros(32))
    with pytest.raises(ModelViolationError, match="two negative"):
        kernel_check(profile, 32)


def test_rescaled_operator_quadratic_is_lame_shift():
    """Test that the rescaled quadratic operator is -d^2 + 6k^2 sn^2 up to a constant."""
    k = 0.5
    profile = quadratic_profile(k)
    op = rescaled_operator(profile, 128)
    nu = lame_closed_forms(k)["nu"]
    values = eig_sym(op, want_vectors=False).eigenvalues[:3]
    np.testing.assert_allclose(np.diff(values), np.diff(nu), rtol=1e-9)
    assert np.max(np.abs(op.apply(kernel_samples(profile, op)))) < 1e-8


def test_rescaled_operator_physical_cubic():
    """Test that physical cubic profiles are refused."""
    with pytest.raises(DomainError):
        rescaled_operator(cubic_profile(0.5, "physical", c=1.0), 64)


### 🔹 TESTS FOR ground state and parity ###
@pytest.mark.parametrize("k", [0.3, 0.7])
def test_ground_state_alignment(k):
    """Test that the ground state is Phi minus a constant."""
    assert ground_state_alignment(quadratic_profile(k), 128) == pytest.approx(1.0, abs=1e-10)


def test_parity_basis():
    """Test orthonormality, dimensions and parity of the bases."""
    n = 16
    even, odd = parity_basis(n, "even"), parity_basis(n, "odd")
    assert even.shape == (n, n // 2 + 1)
    assert odd.shape == (n, n // 2 - 1)
    np.testing.assert_allclose(np.hstack((even, odd)).T @ np.hstack((even, odd)), np.eye(n), atol=1e-14)
    mirror = reflection(n)
    np.testing.assert_allclose(odd[mirror], -odd)
    np.testing.assert_allclose(even[mirror], even)


def test_parity_basis_unknown():
    """Test that only even and odd parities exist."""
    with pytest.raises(DomainError, match="Unknown parity"):
        parity_basis(8, "twisted")


def test_spectrum_dump():
    """Test the JSON-ready spectrum dump."""
    dump = spectrum_dump(WaveModel.CUBIC, 0.5, 64, np.array([1.0, 2.0]), {"eps": [0.25]}, 1e-12)
    assert dump == {
        "k": 0.5,
        "model": "cubic",
        "n": 64,
        "eigenvalues": [1.0, 2.0],
        "closed_form": {"eps": [0.25]},
        "max_rel_err": 1e-12,
    }
