import math
from typing import Dict, List, Optional

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field

from wave_stability.core.elliptic import check_modulus, complete_K, jacobi
from wave_stability.core.errors import (
    DegenerateFamilyError,
    DomainError,
    ModelViolationError,
    NumericalError,
)
from wave_stability.core.logger import logger
from wave_stability.core.profiles import WaveProfile
from wave_stability.core.schemas import WaveModel
from wave_stability.core.spectral import check_grid_size, fourier_d2, periodic_grid

HILL_KERNEL_TOL = 1e-6


class HillOperator(BaseModel):
    """Collocation matrix of -a d^2/dy^2 + V(y) on one period."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int
    period: float
    start: float
    scale: float = Field(..., description="Coefficient a of -d^2/dy^2.")
    matrix: np.ndarray
    potential_samples: np.ndarray

    @property
    def grid(self) -> np.ndarray:
        return periodic_grid(self.n, self.period, self.start)

    @property
    def weight(self) -> float:
        return self.period / self.n

    def apply(self, samples: np.ndarray) -> np.ndarray:
        return self.matrix @ samples


class SpectrumReport(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray] = None
    gap: float

    @property
    def norm(self) -> float:
        return float(np.max(np.abs(self.eigenvalues)))

    def kernel_index(self, rel_tol: float = HILL_KERNEL_TOL) -> Optional[int]:
        """Index of the eigenvalue of minimum modulus if it counts as zero."""
        idx = int(np.argmin(np.abs(self.eigenvalues)))
        if abs(self.eigenvalues[idx]) < rel_tol * max(self.norm, 1.0):
            return idx
        return None

    def negative_count(self, rel_tol: float = HILL_KERNEL_TOL) -> int:
        kernel = self.kernel_index(rel_tol)
        mask = self.eigenvalues < 0.0
        if kernel is not None:
            mask[kernel] = False
        return int(np.count_nonzero(mask))


class LameReport(BaseModel):
    k: float
    n: int
    nu: List[float]
    nu_closed: List[float]
    eps: List[float]
    eps_closed: List[float]
    max_rel_err: float


class KernelReport(BaseModel):
    model: WaveModel
    k: float
    n: int
    residual: float
    kernel_eigenvalue: float
    n_negative: int
    kernel_alignment: float


def hill_operator(
    potential_samples: np.ndarray, period: float, scale: float = 1.0, start: float = 0.0
) -> HillOperator:
    """
    Assemble -a D2 + diag(V) from potential samples on a uniform periodic grid.

    Raises:
        DomainError: If the number of samples is odd or below 16.
    """
    potential_samples = np.asarray(potential_samples, dtype=float)
    n = check_grid_size(len(potential_samples), minimum=16)
    matrix = -scale * fourier_d2(n, period) + np.diag(potential_samples)
    return HillOperator(
        n=n,
        period=float(period),
        start=float(start),
        scale=float(scale),
        matrix=matrix,
        potential_samples=potential_samples,
    )


def assemble(profile: WaveProfile, n: int) -> HillOperator:
    """
    Discretize L = -a d^2/dy^2 + L[1] of an elliptic profile over one period.

    Quadratic: -c^2 d^2 - c + Phi on [-K, K). Cubic: -c^2 d^2 - c + Phi^2
    (physical) or -d^2 + 2k^2 sn^2 - (1+k^2) on [-2K, 2K) (canonical).
    """
    if profile.model == WaveModel.PEAKON:
        raise DomainError("Peakons have no periodic Hill operator.", {})
    n = check_grid_size(n, minimum=16)
    y = profile.grid(n)
    return hill_operator(
        profile.potential(y), profile.period, profile.operator_scale, profile.grid_start
    )


def rescaled_operator(profile: WaveProfile, n: int) -> HillOperator:
    """L / (c^2 alpha^2) in the elliptic argument: -d^2 + 6k^2 sn^2 - 2 beta, or the canonical cubic form."""
    if profile.model == WaveModel.QUADRATIC:
        divisor = (profile.c * profile.alpha) ** 2
        period = profile.period * profile.alpha
        y = periodic_grid(n, period, -period / 2.0)
        return hill_operator(profile.potential(y / profile.alpha) / divisor, period, 1.0, -period / 2.0)
    if profile.is_rescaled:
        return assemble(profile, n)
    raise DomainError("Rescaled cubic operators use the canonical profile.", {})


def kernel_samples(profile: WaveProfile, op: HillOperator) -> np.ndarray:
    """Kernel function of the rescaled operator on its grid: Phi~ or sn."""
    y = op.grid
    if profile.model == WaveModel.QUADRATIC:
        return profile.phi(y / profile.alpha) / (profile.c * profile.alpha) ** 2
    return profile.phi(y)


def eig_sym(H, want_vectors: bool = True, kernel_tol: float = HILL_KERNEL_TOL) -> SpectrumReport:
    """
    Full spectrum of a real symmetric matrix (or HillOperator).

    Eigenvalues ascend; each eigenvector is signed so that its largest
    component is positive.

    Raises:
        NumericalError: If LAPACK fails to converge.
    """
    matrix = H.matrix if isinstance(H, HillOperator) else np.asarray(H, dtype=float)
    try:
        if want_vectors:
            values, vectors = scipy.linalg.eigh(matrix)
        else:
            values, vectors = scipy.linalg.eigh(matrix, eigvals_only=True), None
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, ValueError) as exc:
        logger.error(f"❌ Symmetric eigensolver failed: {exc}")
        raise NumericalError(
            "Symmetric eigensolver did not converge.",
            {"shape": list(matrix.shape), "reason": str(exc)},
        ) from exc

    if vectors is not None:
        pivots = np.argmax(np.abs(vectors), axis=0)
        signs = np.sign(vectors[pivots, np.arange(vectors.shape[1])])
        signs[signs == 0.0] = 1.0
        vectors = vectors * signs

    scale = max(float(np.max(np.abs(values))), 1.0)
    positive = values[values > kernel_tol * scale]
    gap = float(positive[0]) if positive.size else 0.0
    return SpectrumReport(eigenvalues=values, eigenvectors=vectors, gap=gap)


def lame_closed_forms(k: float) -> Dict[str, List[float]]:
    """Lowest periodic eigenvalues of -d^2 + 6k^2 sn^2 (period 2K) and -d^2 + 2k^2 sn^2 (period 4K)."""
    k2 = k * k
    s = math.sqrt(1.0 - k2 + k2 * k2)
    return {
        "nu": [2.0 + 2.0 * k2 - 2.0 * s, 4.0 + k2, 2.0 + 2.0 * k2 + 2.0 * s],
        "eps": [k2, 1.0, 1.0 + k2],
    }


def lame_operators(k: float, n: int):
    """The two Lame operators on their periods, as (Lambda1, Lambda2)."""
    K = complete_K(k)
    y1 = periodic_grid(n, 2.0 * K, -K)
    y2 = periodic_grid(n, 4.0 * K, -2.0 * K)
    sn1 = jacobi(y1, k).sn
    sn2 = jacobi(y2, k).sn
    lam1 = hill_operator(6.0 * k * k * sn1**2, 2.0 * K, 1.0, -K)
    lam2 = hill_operator(2.0 * k * k * sn2**2, 4.0 * K, 1.0, -2.0 * K)
    return lam1, lam2


def lame_check(k: float, n: int = 256) -> LameReport:
    """Compare the lowest three periodic Lame eigenvalues with their closed forms."""
    k = check_modulus(k)
    if k in (0.0, 1.0):
        raise DegenerateFamilyError(f"Lame check needs 0 < k < 1, got k={k}.", {"k": k})
    lam1, lam2 = lame_operators(k, n)
    nu = eig_sym(lam1, want_vectors=False).eigenvalues[:3]
    eps = eig_sym(lam2, want_vectors=False).eigenvalues[:3]
    closed = lame_closed_forms(k)
    errors = [
        abs(a - b) / abs(b)
        for a, b in zip(np.concatenate((nu, eps)), closed["nu"] + closed["eps"])
    ]
    report = LameReport(
        k=k,
        n=n,
        nu=[float(v) for v in nu],
        nu_closed=closed["nu"],
        eps=[float(v) for v in eps],
        eps_closed=closed["eps"],
        max_rel_err=float(max(errors)),
    )
    logger.debug(f"🔹 Lame check k={k}: max_rel_err={report.max_rel_err:.3e}")
    return report


def kernel_check(profile: WaveProfile, n: int = 256, kernel_tol: float = HILL_KERNEL_TOL) -> KernelReport:
    """
    Kernel residual and eigenvalue signature of the rescaled operator.

    Returns the residual ||L~ Phi~|| (quadratic) or ||L[sn]|| (canonical
    cubic) and checks two negative eigenvalues, one zero, the rest positive.

    Raises:
        ModelViolationError: On a signature mismatch.
    """
    op = rescaled_operator(profile, n)
    kernel = kernel_samples(profile, op)
    residual = float(np.max(np.abs(op.apply(kernel))))

    report = eig_sym(op, kernel_tol=kernel_tol)
    idx = report.kernel_index(kernel_tol)
    n_neg = report.negative_count(kernel_tol)
    if idx is None or n_neg != 2:
        logger.error(f"❌ Signature mismatch for {profile.model.value} k={profile.k}: n_neg={n_neg}")
        raise ModelViolationError(
            "Expected two negative eigenvalues and a simple zero.",
            {
                "k": profile.k,
                "n_negative": n_neg,
                "lowest": [float(v) for v in report.eigenvalues[:4]],
            },
        )
    vector = report.eigenvectors[:, idx]
    alignment = abs(vector @ kernel) / np.linalg.norm(kernel)
    return KernelReport(
        model=profile.model,
        k=profile.k,
        n=n,
        residual=residual,
        kernel_eigenvalue=float(report.eigenvalues[idx]),
        n_negative=n_neg,
        kernel_alignment=float(alignment),
    )


def ground_state_constant(profile: WaveProfile) -> float:
    """c0 with chi0 = Phi - c0, from matching Phi to 1 - (1 + k^2 - s) sn^2."""
    if profile.model != WaveModel.QUADRATIC:
        raise DomainError("chi0 is defined for the quadratic model.", {})
    k2 = profile.k**2
    phi0, phi1, _ = profile.roots
    return phi0 + (phi1 - phi0) / (1.0 + k2 - math.sqrt(1.0 - k2 + k2 * k2))


def ground_state_alignment(profile: WaveProfile, n: int = 256) -> float:
    """|cos| of the angle between the ground state of L and samples of Phi - c0."""
    op = assemble(profile, n)
    ground = eig_sym(op).eigenvectors[:, 0]
    chi0 = profile.phi(op.grid) - ground_state_constant(profile)
    return float(abs(ground @ chi0) / np.linalg.norm(chi0))


def reflection(n: int) -> np.ndarray:
    """Index map of y -> -y on a symmetric periodic grid starting at -period/2."""
    return (-np.arange(n)) % n


def parity_basis(n: int, parity: str) -> np.ndarray:
    """Orthonormal basis (columns) of the even or odd grid functions."""
    if parity not in ("even", "odd"):
        raise DomainError(f"Unknown parity {parity!r}.", {})
    mirror = reflection(n)
    columns = []
    for j in range(n):
        m = mirror[j]
        if m < j:
            continue
        vec = np.zeros(n)
        if m == j:
            if parity == "odd":
                continue
            vec[j] = 1.0
        else:
            vec[j] = 1.0
            vec[m] = 1.0 if parity == "even" else -1.0
            vec /= math.sqrt(2.0)
        columns.append(vec)
    return np.column_stack(columns)


def spectrum_dump(
    model: WaveModel, k: float, n: int, eigenvalues, closed_form: Dict, max_rel_err: float
) -> Dict:
    return {
        "k": k,
        "model": model.value,
        "n": n,
        "eigenvalues": [float(v) for v in eigenvalues],
        "closed_form": closed_form,
        "max_rel_err": max_rel_err,
    }
