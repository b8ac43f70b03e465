"""
The pencil L Z = mu Z' of the linearized problem, the orthogonality
constraints of its eigenfunctions, and the explicit unstable mode of the
parabolic peakon.
"""

import warnings
from typing import Dict, List, Optional, Sequence

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import expit

from wave_stability.core.errors import (
    DomainError,
    NumericalError,
    ShiftError,
    VerificationError,
)
from wave_stability.core.hillop import HillOperator, assemble
from wave_stability.core.logger import logger
from wave_stability.core.profiles import (
    WaveProfile,
    cubic_profile,
    peakon_phi,
    peakon_profile,
    quadratic_profile,
)
from wave_stability.core.schemas import (
    Normalization,
    RecordStatus,
    SweepRecord,
    Tolerances,
    WaveModel,
)
from wave_stability.core.spectral import (
    fourier_d1,
    periodic_grid,
    spectral_derivative,
)
from wave_stability.core.sweep import run_sweep

DEFAULT_TOLERANCES = Tolerances()
DEFAULT_SHIFT = complex(0.3, 0.0)
MAX_SHIFT_ATTEMPTS = 4
PEAKON_MU1 = 2.0
RESCALING_CONSTANT = 54.0


class PencilSpectrum(BaseModel):
    """
    Finite eigenvalues of L Z = mu D Z, in the variable of the operator.

    Eigenvalues of modulus below the kernel-cluster threshold come from the
    discretized Jordan block at 0 and are kept apart in `kernel_mus`.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int
    shift: complex
    mus: np.ndarray
    eigenvectors: Optional[np.ndarray] = Field(None, exclude=True)
    kernel_mus: np.ndarray
    max_re: float
    kernel_max_re: float
    residual: float
    pairing_defect: float
    attempts: int = 1

    @property
    def kernel_count(self) -> int:
        return int(len(self.kernel_mus))


class ConstraintReport(BaseModel):
    """Largest cosines between eigenfunctions and each constraint function."""

    cosines: Dict[str, float]
    checked: int
    passed: bool


class PeakonModeReport(BaseModel):
    L_domain: float
    x_max: float
    n: int
    mu1: float
    mu: float
    mu_unscaled: float
    residual_q: float
    residual_f: float
    left_limit: float
    right_limit: float
    jump: float


class PeakonChainReport(BaseModel):
    L_domain: float
    slope_residual: float
    potential_residual: float
    profile_residual: float
    rescaled_residual: float
    center_slope: float
    tail_slope: float


class MarginSweep(BaseModel):
    model: WaveModel
    n: int
    records: List[SweepRecord]
    stable: bool


def _solve_shifted(L: np.ndarray, D: np.ndarray, sigma: complex) -> np.ndarray:
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        return scipy.linalg.solve(L - sigma * D, D.astype(complex))


def _shifted_operator(L, D, shift: complex, seed: int):
    rng = np.random.default_rng(seed)
    sigma = complex(shift)
    for attempt in range(1, MAX_SHIFT_ATTEMPTS + 1):
        try:
            return _solve_shifted(L, D, sigma), sigma, attempt
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as e:
            logger.warning(
                f"🔄 Shift {sigma:.4g} singular ({e}), attempt {attempt}/{MAX_SHIFT_ATTEMPTS}"
            )
            sigma = complex(shift) + complex(*rng.uniform(-0.1, 0.1, 2))
    raise ShiftError(
        "L - sigma D stayed singular after retries.",
        {"shift": [complex(shift).real, complex(shift).imag], "attempts": MAX_SHIFT_ATTEMPTS},
    )


def _pairing_defect(mus: np.ndarray) -> float:
    if mus.size == 0:
        return 0.0
    distances = np.abs(mus[:, None] + mus[None, :]).min(axis=1)
    return float(np.max(distances / np.maximum(1.0, np.abs(mus))))


def pencil_spectrum(
    H: HillOperator,
    shift: complex = DEFAULT_SHIFT,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    seed: int = 0,
) -> PencilSpectrum:
    """
    Eigenvalues of L Z = mu D Z by shift-invert.

    The eigenvalues rho of M = (L - sigma D)^-1 D map to mu = sigma + 1/rho;
    rho ~ 0 is the infinite eigenvalue carried by the kernel of D (constants
    and the sawtooth mode) and is discarded. A singular shift is retried with
    a seeded random perturbation.

    Args:
        H (HillOperator): Operator on one period.
        shift (complex): Initial shift sigma.
        tolerances (Tolerances): Infinite-eigenvalue and kernel-cluster thresholds.
        seed (int): Seed of the shift perturbations.

    Returns:
        PencilSpectrum: Finite eigenvalues, sorted by imaginary part.

    Raises:
        ShiftError: If every shift is numerically singular.
        NumericalError: If the nonsymmetric eigensolver fails.
    """
    L = H.matrix
    D = fourier_d1(H.n, H.period)
    M, sigma, attempts = _shifted_operator(L, D, shift, seed)
    try:
        rho, vectors = scipy.linalg.eig(M)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise NumericalError("Nonsymmetric eigensolver failed.", {"n": H.n}) from exc

    finite = np.abs(rho) > tolerances.infinite_eigenvalue * max(1.0, float(np.max(np.abs(rho))))
    mus = sigma + 1.0 / rho[finite]
    vectors = vectors[:, finite]

    scale_L = np.linalg.norm(L, 2)
    scale_D = np.linalg.norm(D, 2)
    residuals = np.linalg.norm(L @ vectors - (D @ vectors) * mus, axis=0) / (
        scale_L + np.abs(mus) * scale_D
    )

    in_cluster = np.abs(mus) < tolerances.kernel_cluster
    outer = mus[~in_cluster]
    order = np.lexsort((outer.real, outer.imag))
    spectrum = PencilSpectrum(
        n=H.n,
        shift=sigma,
        mus=outer[order],
        eigenvectors=vectors[:, ~in_cluster][:, order],
        kernel_mus=mus[in_cluster],
        max_re=float(np.max(np.abs(outer.real))) if outer.size else 0.0,
        kernel_max_re=float(np.max(np.abs(mus[in_cluster].real))) if np.any(in_cluster) else 0.0,
        residual=float(np.max(residuals)) if residuals.size else 0.0,
        pairing_defect=_pairing_defect(mus),
        attempts=attempts,
    )
    logger.debug(
        f"🔹 Pencil n={H.n}: {outer.size} finite, {spectrum.kernel_count} near 0, "
        f"max_re={spectrum.max_re:.3e}"
    )
    return spectrum


def constraint_functions(profile: WaveProfile, op: HillOperator) -> Dict[str, np.ndarray]:
    """Functions every eigenfunction with mu != 0 is orthogonal to."""
    y = op.grid
    functions = {"L1": op.potential_samples, "dphi": profile.dphi(y)}
    if profile.model == WaveModel.QUADRATIC:
        # chi0 = Phi - c0 with c0 equal to the wave speed
        functions["chi0"] = profile.phi(y) - profile.c
    return functions


def constraint_check(
    spectrum: PencilSpectrum,
    profile: WaveProfile,
    op: HillOperator,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> ConstraintReport:
    """
    Cosines |<Z, g>| / (||Z|| ||g||) for every eigenpair outside the kernel
    cluster and every constraint g: L[1] and Phi' (plus chi0 for the
    quadratic model).
    """
    if spectrum.eigenvectors is None:
        raise DomainError("Constraint checks need the eigenvectors.", {})
    vectors = spectrum.eigenvectors
    norms = np.linalg.norm(vectors, axis=0)
    cosines = {}
    for name, g in constraint_functions(profile, op).items():
        products = np.abs(g @ vectors) / (np.linalg.norm(g) * norms)
        cosines[name] = float(np.max(products)) if products.size else 0.0
    passed = all(value < tolerances.constraint for value in cosines.values())
    if not passed:
        logger.warning(f"⚠️ Constraint violation, discretization inconsistent: {cosines}")
    return ConstraintReport(cosines=cosines, checked=vectors.shape[1], passed=passed)


def pencil_profile(model: WaveModel, k: float) -> WaveProfile:
    if WaveModel(model) == WaveModel.QUADRATIC:
        return quadratic_profile(k)
    if WaveModel(model) == WaveModel.CUBIC:
        return cubic_profile(k, Normalization.CANONICAL)
    raise DomainError("The periodic pencil exists for the elliptic models only.", {})


def pencil_dump(
    model: WaveModel, k: float, spectrum: PencilSpectrum, constraints: ConstraintReport
) -> Dict:
    return {
        "model": WaveModel(model).value,
        "k": k,
        "n": spectrum.n,
        "shift": {"re": spectrum.shift.real, "im": spectrum.shift.imag},
        "max_re": spectrum.max_re,
        "mus": [{"re": float(mu.real), "im": float(mu.imag)} for mu in spectrum.mus],
        "kernel_mus": [
            {"re": float(mu.real), "im": float(mu.imag)} for mu in spectrum.kernel_mus
        ],
        "constraints": constraints.model_dump(),
    }


def _margin_record(
    model: WaveModel, k: float, n: int, shift: complex, tolerances: Tolerances
) -> SweepRecord:
    profile = pencil_profile(model, k)
    op = assemble(profile, n)
    spectrum = pencil_spectrum(op, shift, tolerances)
    constraints = constraint_check(spectrum, profile, op, tolerances)
    stable = spectrum.max_re < tolerances.imaginary_axis
    status = RecordStatus.OK if stable and constraints.passed else RecordStatus.FAIL
    message = "" if status == RecordStatus.OK else (
        "max_re above tolerance" if not stable else "constraint violation"
    )
    return SweepRecord(
        k=k,
        values={
            "max_re": spectrum.max_re,
            "kernel_max_re": spectrum.kernel_max_re,
            "max_constraint": max(constraints.cosines.values()),
            "residual": spectrum.residual,
            "pairing_defect": spectrum.pairing_defect,
        },
        status=status,
        message=message,
    )


def stability_margin_sweep(
    model: WaveModel,
    k_grid: Sequence[float],
    n: int = 128,
    shift: complex = DEFAULT_SHIFT,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    workers: Optional[int] = None,
) -> MarginSweep:
    """Per-k max|Re mu|; the sweep is stable iff every row is below the imaginary-axis tolerance."""
    model = WaveModel(model)
    records = run_sweep(
        lambda k: _margin_record(model, k, n, shift, tolerances), k_grid, workers
    )
    stable = all(record.status == RecordStatus.OK for record in records)
    logger.info(f"{'✅' if stable else '❌'} {model.value} margin sweep over {len(records)} moduli")
    return MarginSweep(model=model, n=n, records=records, stable=stable)


def _sech_parts(x: np.ndarray):
    sech = 1.0 / np.cosh(x)
    return sech, np.tanh(x)


def peakon_mode(x) -> Dict[str, np.ndarray]:
    """
    q1 = sech tanh with its derivatives, and f = e^-x q1 with its derivatives.

    e^-x sech(x) = 2 expit(-2x) keeps f finite on the left half-line.
    """
    x = np.asarray(x, dtype=float)
    sech, tanh = _sech_parts(x)
    weight = 2.0 * expit(-2.0 * x)
    q1 = sech * tanh
    dq1 = sech * (2.0 * sech**2 - 1.0)
    d2q1 = sech * tanh * (1.0 - 6.0 * sech**2)
    f = weight * tanh
    df = weight * (2.0 * sech**2 - 1.0 - tanh)
    d2f = weight * (tanh * (1.0 - 6.0 * sech**2) - 2.0 * (2.0 * sech**2 - 1.0) + tanh)
    return {"q1": q1, "dq1": dq1, "d2q1": d2q1, "f": f, "df": df, "d2f": d2f}


def peakon_mode_check(
    L_domain: float,
    x_max: float = 15.0,
    n: int = 1024,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> PeakonModeReport:
    """
    Verify the smooth unstable mode of the parabolic peakon on [-x_max, x_max].

    residual_q: -q1'' - 6 sech^2 q1 + q1 with q1'' from spectral differentiation
    on a periodic grid padded until q1 is below roundoff.
    residual_f: -f'' - 6 sech^2 f - mu1 f' with mu1 = 2.
    The growth rate is mu = mu1 L / 54 = L / 27 (and mu L^2 before the
    operator is divided by L^2).

    Raises:
        DomainError: On L <= 0, x_max < 15 or n < 512.
        VerificationError: If a residual or a boundary limit misses its tolerance.
    """
    if not L_domain > 0.0:
        raise DomainError(f"L_domain must be positive, got {L_domain}.", {"L_domain": L_domain})
    if x_max < 15.0 or n < 512 or n % 2:
        raise DomainError("Need x_max >= 15 and an even n >= 512.", {"x_max": x_max, "n": n})

    half_width = x_max + 25.0
    x = periodic_grid(n, 2.0 * half_width, -half_width)
    mode = peakon_mode(x)
    sech2 = 1.0 / np.cosh(x) ** 2
    d2q1 = spectral_derivative(mode["q1"], 2.0 * half_width, 2)
    inside = np.abs(x) <= x_max
    residual_q = float(np.max(np.abs(-d2q1 - 6.0 * sech2 * mode["q1"] + mode["q1"])[inside]))
    residual_f = float(
        np.max(
            np.abs(-mode["d2f"] - 6.0 * sech2 * mode["f"] - PEAKON_MU1 * mode["df"])[inside]
        )
    )
    edges = peakon_mode(np.array([-x_max, x_max]))["f"]
    mu = PEAKON_MU1 * L_domain / RESCALING_CONSTANT
    report = PeakonModeReport(
        L_domain=L_domain,
        x_max=x_max,
        n=n,
        mu1=PEAKON_MU1,
        mu=mu,
        mu_unscaled=mu * L_domain**2,
        residual_q=residual_q,
        residual_f=residual_f,
        left_limit=float(edges[0]),
        right_limit=float(edges[1]),
        jump=float(abs(edges[0] - edges[1])),
    )

    failures = {
        "residual_q": residual_q > tolerances.peakon_residual,
        "residual_f": residual_f > tolerances.peakon_residual,
        "left_limit": abs(report.left_limit + 2.0) > tolerances.peakon_residual,
        "right_limit": abs(report.right_limit) > tolerances.peakon_residual,
    }
    if any(failures.values()):
        logger.error(f"❌ Peakon mode check failed: {failures}")
        raise VerificationError("Peakon mode verification failed.", report.model_dump())
    logger.info(f"✅ Peakon mode verified, mu={mu:.6g} for L={L_domain}")
    return report


def peakon_chain_check(
    L_domain: float,
    x_max: float = 15.0,
    points: int = 2001,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> PeakonChainReport:
    """
    Check the change of variables behind the peakon mode.

    - dXi/deta from a complex-step derivative of Xi and from 1 - Phi/c both
      equal (3 / (2L^2)) (L^2 - Xi^2);
    - -c + Phi(eta) = -(L^2/6) sech^2(3 eta / (2L)) and Phi = phi(Xi(eta));
    - Z(eta) = f(3 eta / (2L)) solves
      -(L^2/81) Z'' - (1/6) sech^2(3 eta / (2L)) Z = mu Z' with mu = L/27.

    Raises:
        VerificationError: If any identity misses its tolerance.
    """
    profile, cov = peakon_profile(L_domain)
    L = profile.L_domain
    scale = 1.5 / L
    eta = np.linspace(-x_max / scale, x_max / scale, points)

    step = 1e-20
    slope_cs = np.imag(cov.xi_fn(eta + 1j * step)) / step
    target = 1.5 / L**2 * (L**2 - cov.xi(eta) ** 2)
    slope_residual = float(
        max(np.max(np.abs(slope_cs - target)), np.max(np.abs(cov.dxi(eta) - target)))
    )

    sech2 = 1.0 / np.cosh(scale * eta) ** 2
    potential_residual = float(
        np.max(np.abs(-profile.c + profile.phi(eta) + L**2 / 6.0 * sech2)) / max(1.0, L**2)
    )
    profile_residual = float(
        np.max(np.abs(profile.phi(eta) - peakon_phi(cov.xi(eta), L))) / max(1.0, L**2)
    )

    mode = peakon_mode(scale * eta)
    mu = PEAKON_MU1 * L / RESCALING_CONSTANT
    Z, dZ, d2Z = mode["f"], scale * mode["df"], scale**2 * mode["d2f"]
    rescaled_residual = float(np.max(np.abs(-(L**2) / 81.0 * d2Z - sech2 / 6.0 * Z - mu * dZ)))

    report = PeakonChainReport(
        L_domain=L,
        slope_residual=slope_residual,
        potential_residual=potential_residual,
        profile_residual=profile_residual,
        rescaled_residual=rescaled_residual,
        center_slope=float(cov.dxi(0.0)),
        tail_slope=float(max(cov.dxi(eta[0]), cov.dxi(eta[-1]))),
    )
    if (
        slope_residual > 1e-10
        or potential_residual > 1e-12
        or profile_residual > 1e-12
        or rescaled_residual > tolerances.peakon_residual
    ):
        logger.error(f"❌ Peakon chain check failed for L={L}")
        raise VerificationError("Peakon change-of-variables chain failed.", report.model_dump())
    return report


def constant_coefficient_mus(n_max: int) -> np.ndarray:
    """mu_m = -i (m^2 + 1) / m, m = +-1..+-n_max, for L = -d^2 + 1 on period 2 pi."""
    m = np.concatenate((-np.arange(n_max, 0, -1), np.arange(1, n_max + 1))).astype(float)
    return -1j * (m**2 + 1.0) / m
