"""
Green's-function inversion of the Hill operators and the stability indices
<L^-1 Phi', Phi'> of the quadratic and cubic waves.

Each index is computed twice: from the second kernel solution and the
Wronskian, and from a spectral pseudo-inverse on the complement of the kernel.
"""

import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field

from wave_stability.core.elliptic import (
    check_modulus,
    complementary_modulus,
    complete_E,
    complete_K,
    jacobi,
)
from wave_stability.core.errors import (
    CertificateError,
    CrossValidationError,
    DegenerateFamilyError,
    DegenerateWronskianError,
    DomainError,
    NumericalError,
    OrthogonalityError,
)
from wave_stability.core.hillop import HillOperator, assemble, hill_operator
from wave_stability.core.logger import logger
from wave_stability.core.positivity import neg_def_2x2
from wave_stability.core.profiles import cubic_profile
from wave_stability.core.schemas import Normalization, Tolerances, WaveModel
from wave_stability.core.spectral import (
    check_grid_size,
    first_moment,
    periodic_grid,
    running_integral,
    spectral_derivative,
    trapezoid,
    wavenumbers,
)

DEFAULT_TOLERANCES = Tolerances()


def _open_modulus(k: float) -> float:
    k = check_modulus(k)
    if k in (0.0, 1.0):
        raise DegenerateFamilyError(f"Need 0 < k < 1, got k={k}.", {"k": k})
    return k


class TildeSystem(BaseModel):
    """L~ = -d^2 + gamma + Phi~ on [-K, K) with Phi~ = 6k^2 sn^2 - 6k^2/beta."""

    model_config = ConfigDict(frozen=True)

    k: float
    beta: float
    gamma: float
    K: float
    E: float

    @property
    def period(self) -> float:
        return 2.0 * self.K

    def grid(self, n: int) -> np.ndarray:
        return periodic_grid(n, self.period, -self.K)

    def phi_tilde(self, y):
        sn = jacobi(y, self.k).sn
        return 6.0 * self.k**2 * (sn**2 - 1.0 / self.beta)

    def dphi_tilde(self, y):
        sn, cn, dn = jacobi(y, self.k)
        return 12.0 * self.k**2 * sn * cn * dn

    def d2phi_tilde(self, y):
        sn, cn, dn = jacobi(y, self.k)
        k2 = self.k**2
        return 12.0 * k2 * (cn**2 * dn**2 - sn**2 * dn**2 - k2 * sn**2 * cn**2)

    def operator(self, n: int) -> HillOperator:
        y = self.grid(n)
        return hill_operator(self.gamma + self.phi_tilde(y), self.period, 1.0, -self.K)


class GreensPair(BaseModel):
    """Kernel solution phi, companion psi and their Wronskian, sampled on one period."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    model: WaveModel
    k: float
    period: float
    start: float
    grid: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    psi: np.ndarray
    dpsi: np.ndarray
    wronskian: float
    wronskian_spread: float
    psi_boundary: Tuple[float, float]
    residual: float = Field(..., description="max |L psi| over the grid")


class StabilityIndex(BaseModel):
    model: WaveModel
    k: float
    n_quad: int
    value_greens: float
    value_spectral: float
    discrepancy: float
    components: Dict[str, float]
    flagged: bool = False


class DMatrixReport(BaseModel):
    k: float
    n: int
    matrix: List[List[float]]
    d22_closed_form: float
    negative_definite: bool


class LimitEstimate(BaseModel):
    model: WaveModel
    moduli: List[float]
    quarter_periods: List[float]
    values: List[float]
    limit: float


def build_tilde_system(k: float) -> TildeSystem:
    """beta = 1 + k^2 + s, gamma = 6k^2/beta - 2 beta for 0 < k < 1."""
    k = _open_modulus(k)
    s = math.sqrt(1.0 - k * k + k**4)
    beta = 1.0 + k * k + s
    return TildeSystem(
        k=k,
        beta=beta,
        gamma=6.0 * k * k / beta - 2.0 * beta,
        K=complete_K(k),
        E=complete_E(k),
    )


def wronskian_closed_form(k: float) -> float:
    """W[k] = 16(2(s-1) + k^4(2s + 3 - 2k^2) - 2k^2 s + 3k^2), s = sqrt(k^4 - k^2 + 1)."""
    k = check_modulus(k)
    k2 = k * k
    s = math.sqrt(k2 * k2 - k2 + 1.0)
    return 16.0 * (
        2.0 * (s - 1.0) + k2 * k2 * (2.0 * s + 3.0 - 2.0 * k2) - 2.0 * k2 * s + 3.0 * k2
    )


def _companion_residual(
    periodic_part: np.ndarray,
    slope: float,
    base: Tuple[np.ndarray, np.ndarray, np.ndarray],
    potential: np.ndarray,
    y: np.ndarray,
    period: float,
) -> float:
    """max |L psi| for psi = periodic_part + slope * y * f, with L = -d^2 + V."""
    f, df, d2f = base
    per = -spectral_derivative(periodic_part, period, 2) + potential * periodic_part
    lin = -(2.0 * df + y * d2f) + potential * y * f
    return float(np.max(np.abs(per + slope * lin)))


def _wronskian_stats(values: np.ndarray, floor: float) -> Tuple[float, float]:
    mean = float(np.mean(values))
    if abs(mean) < floor:
        raise DegenerateWronskianError(
            "Wronskian is numerically zero.", {"wronskian": mean}
        )
    return mean, float(np.max(values) - np.min(values))


def psi_quadratic(
    ts: TildeSystem, n: int = 256, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> GreensPair:
    """
    Companion solution Psi~ = Phi~ int_0^x Phi~ - 3 Phi~' of L~ on [-K, K).

    Raises:
        DegenerateWronskianError: If the Wronskian is below the floor.
    """
    n = check_grid_size(n, minimum=16)
    y = ts.grid(n)
    phi = ts.phi_tilde(y)
    dphi = ts.dphi_tilde(y)
    d2phi = ts.d2phi_tilde(y)
    running = running_integral(phi, ts.period, start=-ts.K, origin=0.0)
    psi = phi * running - 3.0 * dphi
    dpsi = dphi * running + phi**2 - 3.0 * d2phi
    wronskian, spread = _wronskian_stats(dpsi * phi - dphi * psi, tolerances.wronskian_floor)

    slope = float(np.mean(phi))
    periodic_part = phi * (running - slope * y) - 3.0 * dphi
    residual = _companion_residual(
        periodic_part, slope, (phi, dphi, d2phi), ts.gamma + phi, y, ts.period
    )

    half_mass = 0.5 * trapezoid(phi, ts.period)
    phi_K = float(ts.phi_tilde(ts.K))
    psi_K = phi_K * half_mass
    dpsi_K = phi_K**2 - 3.0 * float(ts.d2phi_tilde(ts.K))
    return GreensPair(
        model=WaveModel.QUADRATIC,
        k=ts.k,
        period=ts.period,
        start=-ts.K,
        grid=y,
        phi=phi,
        dphi=dphi,
        psi=psi,
        dpsi=dpsi,
        wronskian=wronskian,
        wronskian_spread=spread,
        psi_boundary=(psi_K, dpsi_K),
        residual=residual,
    )


def psi_cubic(
    k: float, n: int = 256, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> GreensPair:
    """
    Companion solution Psi = -cn/dn + k^2 sn int_0^x cn^2/dn^2 of the canonical
    cubic operator on [-2K, 2K).

    Psi takes equal values at +-2K while Psi' does not; W = 1.
    """
    k = _open_modulus(k)
    n = check_grid_size(n, minimum=16)
    K = complete_K(k)
    period = 4.0 * K
    y = periodic_grid(n, period, -2.0 * K)
    sn, cn, dn = jacobi(y, k)
    k2 = k * k
    kp2 = complementary_modulus(k) ** 2

    ratio = cn**2 / dn**2
    running = running_integral(ratio, period, start=-2.0 * K, origin=0.0)
    psi = -cn / dn + k2 * sn * running
    dpsi = kp2 * sn / dn**2 + k2 * cn * dn * running + k2 * sn * ratio
    dphi = cn * dn
    wronskian, spread = _wronskian_stats(dpsi * sn - psi * dphi, tolerances.wronskian_floor)

    rho = float(np.mean(ratio))
    periodic_part = -cn / dn + k2 * sn * (running - rho * y)
    d2phi = -sn * (dn**2 + k2 * cn**2)
    potential = 2.0 * k2 * sn**2 - (1.0 + k2)
    residual = _companion_residual(
        periodic_part, k2 * rho, (sn, dphi, d2phi), potential, y, period
    )

    # Psi(2K) = 1 and Psi'(2K) = -k^2 R(2K) with R(2K) = 2K * mean(cn^2/dn^2)
    return GreensPair(
        model=WaveModel.CUBIC,
        k=k,
        period=period,
        start=-2.0 * K,
        grid=y,
        phi=sn,
        dphi=dphi,
        psi=psi,
        dpsi=dpsi,
        wronskian=wronskian,
        wronskian_spread=spread,
        psi_boundary=(1.0, -k2 * 2.0 * K * rho),
        residual=residual,
    )


def _congruence_scaling(op: HillOperator, power: float = -0.5) -> np.ndarray:
    """Symmetric S = (1 - a d^2)^power as a circulant matrix."""
    omega = wavenumbers(op.n, op.period)
    symbol = (1.0 + op.scale * omega**2) ** power
    return scipy.linalg.circulant(np.real(np.fft.ifft(symbol)))


def invert_on_complement(
    H: HillOperator,
    f: np.ndarray,
    kernel_tol: float = 1e-6,
    orthogonality_tol: float = 1e-8,
    kernel: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Solve H u = f with u orthogonal to the kernel of H.

    The eigendecomposition is taken of the congruent matrix S H S with
    S = (1 - a d^2)^(-1/2), whose norm stays O(max|V|). Without `kernel`, the
    eigenvalue of minimum modulus is the kernel if it is below
    kernel_tol * ||S H S||. With `kernel`, the given samples span the kernel
    and S H S is deflated against S^-1 kernel before the decomposition; this
    keeps the kernel apart from nearly degenerate modes at small moduli.

    Args:
        H (HillOperator): Operator on one period.
        f (np.ndarray): Right-hand side samples.
        kernel_tol (float): Relative zero-eigenvalue threshold.
        orthogonality_tol (float): Allowed relative kernel component of f.
        kernel (Optional[np.ndarray]): Known kernel samples, if any.

    Returns:
        np.ndarray: u on the grid.

    Raises:
        OrthogonalityError: If f has a kernel component above tolerance.
        NumericalError: If the eigensolver fails.
    """
    f = np.asarray(f, dtype=float)
    f_norm = float(np.linalg.norm(f))
    if f_norm == 0.0:
        return np.zeros_like(f)

    S = _congruence_scaling(H)
    A = S @ H.matrix @ S
    basis = None
    if kernel is not None:
        kernel = np.asarray(kernel, dtype=float)
        kernel = kernel / np.linalg.norm(kernel)
        seed = _congruence_scaling(H, 0.5) @ kernel
        basis = scipy.linalg.null_space((seed / np.linalg.norm(seed))[None, :])
        A = basis.T @ A @ basis

    try:
        mu, vectors = scipy.linalg.eigh(A)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise NumericalError("Eigensolver failed in pseudo-inverse.", {"n": H.n}) from exc

    keep = np.ones(len(mu), dtype=bool)
    if kernel is None:
        idx = int(np.argmin(np.abs(mu)))
        if abs(mu[idx]) < kernel_tol * max(float(np.max(np.abs(mu))), 1.0):
            keep[idx] = False
            kernel = S @ vectors[:, idx]
            kernel /= np.linalg.norm(kernel)
    else:
        vectors = basis @ vectors

    if kernel is not None:
        component = float(kernel @ f) / f_norm
        if abs(component) > orthogonality_tol:
            raise OrthogonalityError(
                "Right-hand side has a kernel component.",
                {"component": component, "tolerance": orthogonality_tol},
            )
        f = f - (kernel @ f) * kernel

    coeffs = vectors[:, keep].T @ (S @ f)
    u = S @ (vectors[:, keep] @ (coeffs / mu[keep]))
    if kernel is not None:
        u = u - (kernel @ u) * kernel
    return u


def _check_agreement(
    model: WaveModel, k: float, greens: float, spectral: float, tolerance: float
) -> float:
    discrepancy = abs(greens - spectral) / max(1.0, abs(greens))
    if discrepancy >= tolerance:
        logger.error(
            f"❌ {model.value} index k={k}: greens={greens:.12g} spectral={spectral:.12g}"
        )
        raise CrossValidationError(
            "Green's-function and spectral indices disagree.",
            {
                "model": model.value,
                "k": k,
                "value_greens": greens,
                "value_spectral": spectral,
                "discrepancy": discrepancy,
                "tolerance": tolerance,
            },
        )
    return discrepancy


def index_quadratic(
    k: float, n_quad: int = 256, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> StabilityIndex:
    """
    <L~^-1 Phi~', Phi~'> over one period [-K, K].

    Green's route: value = 2 h / W with
        I1 = -3 int_0^K Phi~'^2 - 1/2 int_0^K Phi~^3 + Phi~(K)^2/2 int_0^K Phi~,
        I2 = -3 int_0^K Phi~^2 Phi~'^2 - 1/4 int_0^K Phi~^5 + Phi~(K)^4/4 int_0^K Phi~,
        h  = Phi~(K)^2 I1 - I2 - Phi~(K)/Psi~(K) I1^2.
    Spectral route: pseudo-inverse of the collocated L~.

    Moduli below tolerances.small_modulus use a doubled grid, a relaxed
    agreement tolerance, and are flagged.

    Raises:
        CrossValidationError: If the two routes disagree.
    """
    k = _open_modulus(k)
    if n_quad < 256:
        raise DomainError(f"n_quad must be at least 256, got {n_quad}.", {"n_quad": n_quad})
    flagged = k < tolerances.small_modulus
    n = 2 * n_quad if flagged else n_quad

    ts = build_tilde_system(k)
    pair = psi_quadratic(ts, n, tolerances)
    phi, dphi = pair.phi, pair.dphi
    phi_K = float(ts.phi_tilde(ts.K))
    psi_K = pair.psi_boundary[0]

    def half(values):
        return 0.5 * trapezoid(values, ts.period)

    mass = half(phi)
    I1 = -3.0 * half(dphi**2) - 0.5 * half(phi**3) + 0.5 * phi_K**2 * mass
    I2 = -3.0 * half(phi**2 * dphi**2) - 0.25 * half(phi**5) + 0.25 * phi_K**4 * mass
    h = phi_K**2 * I1 - I2 - (phi_K / psi_K) * I1**2
    W = pair.wronskian
    value_greens = 2.0 * h / W

    op = ts.operator(n)
    u = invert_on_complement(
        op,
        dphi,
        tolerances.hill_kernel,
        tolerances.kernel_orthogonality,
        kernel=ts.phi_tilde(op.grid),
    )
    value_spectral = float(op.weight * (u @ dphi))

    tolerance = (
        tolerances.small_modulus_cross_validation if flagged else tolerances.cross_validation
    )
    discrepancy = _check_agreement(WaveModel.QUADRATIC, k, value_greens, value_spectral, tolerance)
    if flagged:
        logger.warning(f"⚠️ Small modulus k={k}: index computed on n={n}, flagged")

    return StabilityIndex(
        model=WaveModel.QUADRATIC,
        k=k,
        n_quad=n,
        value_greens=value_greens,
        value_spectral=value_spectral,
        discrepancy=discrepancy,
        components={
            "I1": I1,
            "I2": I2,
            "h": h,
            "W": W,
            "C": -phi_K * I1 / (W * psi_K),
        },
        flagged=flagged,
    )


def index_cubic(
    k: float, n_quad: int = 256, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> StabilityIndex:
    """
    <L^-1 Phi', Phi'> for the canonical cubic wave Phi = sn on [-2K, 2K].

    With W = 1, L^-1 f = Phi int Psi f - Psi int Phi f + C_f Psi, and the
    derivative-periodicity condition gives C_Phi' = (int Psi Phi') / (2 Psi'(2K)).
    The index is -int Phi^2 Phi' Psi + C_Phi' int Psi Phi'. The component
    `half_normalized` is the same expression with a 1/2 prefactor on the
    particular solution.

    Raises:
        CrossValidationError: If the two routes disagree.
    """
    k = _open_modulus(k)
    pair = psi_cubic(k, n_quad, tolerances)
    y, phi, dphi, psi = pair.grid, pair.phi, pair.dphi, pair.psi
    K = pair.period / 4.0
    _, cn, dn = jacobi(y, k)
    slope = k * k * float(np.mean(cn**2 / dn**2))
    periodic_psi = psi - slope * y * phi

    def psi_integral(g):
        # int Psi g for periodic g, with the linear part of Psi integrated exactly
        return trapezoid(periodic_psi * g, pair.period) + slope * first_moment(
            phi * g, pair.period, pair.start
        )

    int_psi_dphi = psi_integral(dphi)
    int_phi2_dphi_psi = psi_integral(phi**2 * dphi)
    dpsi_2K = pair.psi_boundary[1]
    C = int_psi_dphi / (2.0 * dpsi_2K)
    value_greens = -int_phi2_dphi_psi + C * int_psi_dphi
    # u'(2K) - u'(-2K) with Phi'(2K) = -1 and Psi' odd
    mismatch = -int_psi_dphi + C * 2.0 * dpsi_2K

    op = assemble(cubic_profile(k, Normalization.CANONICAL), n_quad)
    u = invert_on_complement(op, dphi, tolerances.hill_kernel, tolerances.kernel_orthogonality)
    value_spectral = float(op.weight * (u @ dphi))
    discrepancy = _check_agreement(
        WaveModel.CUBIC, k, value_greens, value_spectral, tolerances.cross_validation
    )

    return StabilityIndex(
        model=WaveModel.CUBIC,
        k=k,
        n_quad=n_quad,
        value_greens=value_greens,
        value_spectral=value_spectral,
        discrepancy=discrepancy,
        components={
            "int_phi2_dphi_psi": int_phi2_dphi_psi,
            "int_psi_dphi": int_psi_dphi,
            "dpsi_2K": dpsi_2K,
            "C": C,
            "half_normalized": -0.5 * int_phi2_dphi_psi + 0.5 * C * int_psi_dphi,
            "derivative_mismatch": mismatch,
            "W": pair.wronskian,
            "K": K,
        },
    )


def stability_index(
    model: WaveModel, k: float, n_quad: int = 256, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> StabilityIndex:
    if WaveModel(model) == WaveModel.QUADRATIC:
        return index_quadratic(k, n_quad, tolerances)
    if WaveModel(model) == WaveModel.CUBIC:
        return index_cubic(k, n_quad, tolerances)
    raise DomainError("Stability indices exist for the elliptic models only.", {})


def index_closed_form(model: WaveModel, k: float) -> float:
    """
    Reduced closed forms of the indices.

    Quadratic: -(gamma P^2 + W K^2) / (2P) with gamma = -4s and
    P = int_0^K Phi~ = 6(K - E) - 6k^2 K / beta.
    Cubic: (K - E)/k^2 - K^2/(K - E).
    """
    k = _open_modulus(k)
    K, E = complete_K(k), complete_E(k)
    if WaveModel(model) == WaveModel.QUADRATIC:
        s = math.sqrt(1.0 - k * k + k**4)
        beta = 1.0 + k * k + s
        P = 6.0 * (K - E) - 6.0 * k * k * K / beta
        gamma = -4.0 * s
        return -(gamma * P * P + wronskian_closed_form(k) * K * K) / (2.0 * P)
    return (K - E) / (k * k) - K * K / (K - E)


def unit_modulus_limit(
    model: WaveModel,
    exponents: Sequence[int] = (6, 8, 10),
    n_quad: int = 512,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> LimitEstimate:
    """
    Extrapolate the index to k -> 1.

    The index approaches its limit like 1/K(k); values at k = 1 - 10^-e are
    fitted by a polynomial in 1/K and evaluated at 1/K = 0.
    """
    moduli = [1.0 - 10.0 ** (-e) for e in exponents]
    values = [stability_index(model, k, n_quad, tolerances).value_greens for k in moduli]
    quarter = [complete_K(k) for k in moduli]
    coeffs = np.polyfit(1.0 / np.asarray(quarter), np.asarray(values), len(moduli) - 1)
    limit = float(coeffs[-1])
    logger.info(f"✅ {WaveModel(model).value} index limit k->1 estimated at {limit:.8g}")
    return LimitEstimate(
        model=model, moduli=moduli, quarter_periods=quarter, values=values, limit=limit
    )


def d_matrix_cubic(
    k: float, n: int = 256, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> DMatrixReport:
    """
    D_ij = <L^-1 eta_i, eta_j> for eta_1 = Phi', eta_2 = L[1] on the canonical cubic wave.

    Raises:
        CertificateError: If an off-diagonal entry is not negligible or D is
            not negative definite.
    """
    k = _open_modulus(k)
    profile = cubic_profile(k, Normalization.CANONICAL)
    op = assemble(profile, n)
    y = op.grid
    etas = [profile.dphi(y), op.potential_samples]
    solves = [
        invert_on_complement(op, eta, tolerances.hill_kernel, tolerances.kernel_orthogonality)
        for eta in etas
    ]
    D = np.array([[op.weight * (u @ eta) for eta in etas] for u in solves])

    K, E = complete_K(k), complete_E(k)
    closed = 4.0 * K * (1.0 - k * k) - 8.0 * E
    verdict = neg_def_2x2(D)
    report = DMatrixReport(
        k=k,
        n=n,
        matrix=D.tolist(),
        d22_closed_form=closed,
        negative_definite=verdict,
    )
    off_diagonal = max(abs(D[0, 1]), abs(D[1, 0]))
    if off_diagonal >= 1e-9 or not (D[0, 0] < 0.0 and D[1, 1] < 0.0) or not verdict:
        logger.error(f"❌ Cubic D-matrix certificate failed at k={k}: {D.tolist()}")
        raise CertificateError("D-matrix is not negative definite.", report.model_dump())
    return report


def limit_targets(model: WaveModel) -> Dict[str, float]:
    """Known limits of the index (and of its half-normalized variant)."""
    if WaveModel(model) == WaveModel.QUADRATIC:
        return {"k_to_0": -24.0 * math.pi, "k_to_1": -24.0}
    return {"k_to_1": -2.0, "k_to_1_half_normalized": -1.0}
