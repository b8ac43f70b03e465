"""
Positivity of a symmetric operator on a subspace of finite codimension.

Finite-dimensional checks of two results: an operator with one negative
eigenvalue is non-negative on xi0^perp whenever <H^-1 xi0, xi0> < 0, and an
operator with k negative eigenvalues is non-negative on Z^perp whenever the
Gram matrix <H^-1 z_i, z_j> is negative definite.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field

from wave_stability.core.errors import DimensionError, DomainError, NumericalError
from wave_stability.core.hillop import assemble, parity_basis
from wave_stability.core.logger import logger
from wave_stability.core.profiles import cubic_profile, quadratic_profile
from wave_stability.core.schemas import Normalization, Tolerances, Verdict, WaveModel

DEFAULT_TOLERANCES = Tolerances()
BASIS_ORTHONORMALITY_TOL = 1e-12


class SubspaceCheck(BaseModel):
    """Outcome of a positivity check; `reasons` lists the failed hypotheses."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    H: np.ndarray = Field(..., exclude=True)
    Z_basis: np.ndarray = Field(..., exclude=True)
    delta0: float
    n_neg: int
    kernel_dim: int
    gap: float
    g_max_eig: Optional[float] = None
    conclusion_min_eig: Optional[float] = None
    verdict: Verdict
    reasons: List[str] = Field(default_factory=list)


class InstanceSummary(BaseModel):
    """Aggregate of a batch of random instances."""

    theorem: str
    trials: int
    counts: Dict[str, int]
    converse_failures: int = 0


def _symmetric(H: np.ndarray) -> np.ndarray:
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DomainError("H must be a square matrix.", {"shape": list(H.shape)})
    scale = max(float(np.max(np.abs(H))), 1.0)
    if np.max(np.abs(H - H.T)) > 1e-12 * scale:
        raise DomainError("H must be symmetric.", {})
    return 0.5 * (H + H.T)


def _eigh(H: np.ndarray):
    try:
        return scipy.linalg.eigh(H)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise NumericalError("Symmetric eigensolver failed.", {"reason": str(exc)}) from exc


def _split(values: np.ndarray, tolerances: Tolerances):
    norm = max(float(np.max(np.abs(values))), 1.0)
    kernel = np.abs(values) < tolerances.positivity_kernel * norm
    negative = (values < 0.0) & ~kernel
    positive = (values > 0.0) & ~kernel
    gap = float(np.min(values[positive])) if np.any(positive) else float("inf")
    return norm, kernel, negative, positive, gap


def _gram(values, vectors, kernel, Z: np.ndarray) -> np.ndarray:
    """<H^+ z_i, z_j> with H^+ the inverse on the kernel complement."""
    coeffs = vectors[:, ~kernel].T @ Z
    return coeffs.T @ (coeffs / values[~kernel, None])


def _projected_min_eig(H: np.ndarray, Z: np.ndarray) -> float:
    complement = scipy.linalg.null_space(Z.T)
    if complement.shape[1] == 0:
        return float("inf")
    restricted = complement.T @ H @ complement
    return float(scipy.linalg.eigvalsh(0.5 * (restricted + restricted.T))[0])


def _kernel_leak(vectors, kernel, Z: np.ndarray) -> float:
    if not np.any(kernel):
        return 0.0
    return float(np.max(np.abs(vectors[:, kernel].T @ Z)))


def _conclude(H, Z, norm, tolerances: Tolerances):
    min_eig = _projected_min_eig(H, Z)
    holds = min_eig >= -tolerances.conclusion * norm
    return min_eig, Verdict.CONCLUSION_HOLDS if holds else Verdict.CONCLUSION_FAILS


def check_codim_one(
    H: np.ndarray,
    xi0: np.ndarray,
    delta0: float = 0.0,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> SubspaceCheck:
    """
    Verify the hypotheses of the codimension-one positivity lemma and, when
    they hold, test H >= 0 on xi0^perp by brute force.

    Hypotheses: exactly one negative eigenvalue, a positive gap of at least
    delta0, xi0 orthogonal to ker H, and <H^-1 xi0, xi0> < 0.

    Args:
        H (np.ndarray): Real symmetric matrix.
        xi0 (np.ndarray): Constraint vector.
        delta0 (float): Required lower bound of the positive spectrum.
        tolerances (Tolerances): Kernel and conclusion thresholds.

    Returns:
        SubspaceCheck: The verdict with the measured quantities.

    Raises:
        DomainError: If H is not symmetric or xi0 vanishes.
    """
    H = _symmetric(H)
    xi0 = np.asarray(xi0, dtype=float).reshape(-1)
    length = float(np.linalg.norm(xi0))
    if length == 0.0:
        raise DomainError("xi0 must be nonzero.", {})
    Z = (xi0 / length)[:, None]

    values, vectors = _eigh(H)
    norm, kernel, negative, _, gap = _split(values, tolerances)
    n_neg = int(np.count_nonzero(negative))
    g_value = float(_gram(values, vectors, kernel, Z)[0, 0])

    reasons = []
    if n_neg != 1:
        reasons.append(f"expected one negative eigenvalue, found {n_neg}")
    if gap < delta0:
        reasons.append(f"positive gap {gap:.3e} below delta0={delta0:.3e}")
    leak = _kernel_leak(vectors, kernel, Z)
    if leak > 1e-10:
        reasons.append(f"xi0 has a kernel component {leak:.3e}")
    if not g_value < 0.0:
        reasons.append(f"<H^-1 xi0, xi0> = {g_value:.6g} is not negative")

    check = dict(
        H=H,
        Z_basis=Z,
        delta0=delta0,
        n_neg=n_neg,
        kernel_dim=int(np.count_nonzero(kernel)),
        gap=gap,
        g_max_eig=g_value,
    )
    if reasons:
        return SubspaceCheck(**check, verdict=Verdict.HYPOTHESES_FAIL, reasons=reasons)
    min_eig, verdict = _conclude(H, Z, norm, tolerances)
    return SubspaceCheck(**check, conclusion_min_eig=min_eig, verdict=verdict)


def check_codim_k(
    H: np.ndarray,
    Z_basis: np.ndarray,
    delta0: float = 0.0,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> SubspaceCheck:
    """
    Verify G = <H^-1 z_i, z_j> <= -delta0 I on an orthonormalized Z and, when
    it holds, test H >= 0 on Z^perp.

    Raises:
        DomainError: If H is not symmetric.
        DimensionError: If dim Z is smaller than the number of negative eigenvalues.
    """
    H = _symmetric(H)
    Z_in = np.asarray(Z_basis, dtype=float)
    if Z_in.ndim == 1:
        Z_in = Z_in[:, None]
    Z = scipy.linalg.orth(Z_in)
    if np.max(np.abs(Z.T @ Z - np.eye(Z.shape[1]))) > BASIS_ORTHONORMALITY_TOL:
        raise NumericalError("Could not orthonormalize the constraint basis.", {})

    values, vectors = _eigh(H)
    norm, kernel, negative, _, gap = _split(values, tolerances)
    n_neg = int(np.count_nonzero(negative))
    if Z.shape[1] < n_neg:
        raise DimensionError(
            f"dim Z = {Z.shape[1]} is smaller than the negative index {n_neg}.",
            {"dim_z": Z.shape[1], "n_neg": n_neg},
        )

    G = _gram(values, vectors, kernel, Z)
    g_max = float(scipy.linalg.eigvalsh(0.5 * (G + G.T))[-1])
    reasons = []
    if g_max > -delta0 + 1e-12:
        reasons.append(f"Gram matrix max eigenvalue {g_max:.6g} exceeds -delta0={-delta0:.6g}")
    leak = _kernel_leak(vectors, kernel, Z)
    if leak > 1e-10:
        reasons.append(f"Z has a kernel component {leak:.3e}")

    check = dict(
        H=H,
        Z_basis=Z,
        delta0=delta0,
        n_neg=n_neg,
        kernel_dim=int(np.count_nonzero(kernel)),
        gap=gap,
        g_max_eig=g_max,
    )
    if reasons:
        return SubspaceCheck(**check, verdict=Verdict.HYPOTHESES_FAIL, reasons=reasons)
    min_eig, verdict = _conclude(H, Z, norm, tolerances)
    return SubspaceCheck(**check, conclusion_min_eig=min_eig, verdict=verdict)


def neg_def_2x2(D: np.ndarray) -> bool:
    """D11 < 0 and det D > 0, cross-checked against the eigenvalues of D."""
    D = np.asarray(D, dtype=float)
    if D.shape != (2, 2):
        raise DomainError("neg_def_2x2 needs a 2x2 matrix.", {"shape": list(D.shape)})
    D = 0.5 * (D + D.T)
    criterion = bool(D[0, 0] < 0.0 and np.linalg.det(D) > 0.0)
    by_eigenvalues = bool(np.all(scipy.linalg.eigvalsh(D) < 0.0))
    if criterion != by_eigenvalues:
        logger.warning(f"⚠️ 2x2 criterion and eigenvalues disagree for {D.tolist()}")
    return criterion


def certify_hill(
    model: WaveModel,
    k: float,
    n: int = 256,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> SubspaceCheck:
    """
    Positivity certificate for the discretized Hill operator.

    Quadratic: L restricted to odd grid functions, with xi0 = Phi'.
    Cubic (canonical): L on the full space with Z = span{Phi', L[1]}.
    """
    model = WaveModel(model)
    if model == WaveModel.QUADRATIC:
        profile = quadratic_profile(k)
        op = assemble(profile, n)
        basis = parity_basis(op.n, "odd")
        H = basis.T @ op.matrix @ basis
        check = check_codim_one(H, basis.T @ profile.dphi(op.grid), 0.0, tolerances)
    elif model == WaveModel.CUBIC:
        profile = cubic_profile(k, Normalization.CANONICAL)
        op = assemble(profile, n)
        Z = np.column_stack((profile.dphi(op.grid), op.potential_samples))
        check = check_codim_k(op.matrix, Z, 0.0, tolerances)
    else:
        raise DomainError("Certificates exist for the elliptic models only.", {})

    if check.verdict == Verdict.CONCLUSION_HOLDS:
        logger.info(f"✅ {model.value} k={k}: positivity certificate holds")
    else:
        logger.warning(f"⚠️ {model.value} k={k}: {check.verdict.value} {check.reasons}")
    return check


def certificate_dump(model: WaveModel, k: float, n: int, check: SubspaceCheck) -> Dict:
    return {
        "model": WaveModel(model).value,
        "k": k,
        "n": n,
        "hypotheses": {
            "n_neg": check.n_neg,
            "gap": check.gap,
            "G_max_eig": check.g_max_eig,
        },
        "conclusion_min_eig": check.conclusion_min_eig,
        "verdict": check.verdict.value,
    }


def _random_orthogonal(rng: np.random.Generator, size: int) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((size, size)))
    return Q * np.sign(np.diag(R))


def random_codim_one_instance(rng: np.random.Generator, size: int = 8, converse: bool = False):
    """
    H with one negative eigenvalue and xi0 satisfying <H^-1 xi0, xi0> < 0,
    or violating it when `converse` is set.
    """
    spectrum = np.concatenate(([-rng.uniform(0.5, 3.0)], rng.uniform(0.5, 5.0, size - 1)))
    Q = _random_orthogonal(rng, size)
    H = (Q * spectrum) @ Q.T
    while True:
        coeffs = rng.standard_normal(size)
        g = float(np.sum(coeffs**2 / spectrum))
        if (g > 0.0) == converse:
            return 0.5 * (H + H.T), Q @ coeffs


def random_codim_k_instance(
    rng: np.random.Generator, size: int = 10, converse: bool = False
):
    """
    H with 2 or 3 negative eigenvalues and Z spanned by rotated negative
    eigenvectors mixed with a small positive part, keeping G negative definite
    (or, with `converse`, with enough positive part to break it).
    """
    n_neg = int(rng.integers(2, 4))
    spectrum = np.concatenate(
        (-rng.uniform(0.5, 3.0, n_neg), rng.uniform(0.5, 5.0, size - n_neg))
    )
    Q = _random_orthogonal(rng, size)
    H = (Q * spectrum) @ Q.T
    rotation = _random_orthogonal(rng, n_neg)
    while True:
        mix = rng.standard_normal((size - n_neg, n_neg)) * (3.0 if converse else 0.3)
        coeffs = np.vstack((rotation, mix))
        G = coeffs.T @ (coeffs / spectrum[:, None])
        negative_definite = bool(np.all(scipy.linalg.eigvalsh(0.5 * (G + G.T)) < 0.0))
        if negative_definite != converse:
            return 0.5 * (H + H.T), Q @ coeffs


def _run_trial(theorem: str, seed: int, converse: bool, tolerances: Tolerances):
    """Verdict of one seeded instance and whether H >= 0 fails on the constrained subspace."""
    rng = np.random.default_rng(seed)
    if theorem == "codim_one":
        H, xi0 = random_codim_one_instance(rng, converse=converse)
        check = check_codim_one(H, xi0, 0.0, tolerances)
    else:
        H, Z = random_codim_k_instance(rng, converse=converse)
        check = check_codim_k(H, Z, 0.0, tolerances)
    norm = max(float(np.max(np.abs(scipy.linalg.eigvalsh(check.H)))), 1.0)
    fails = _projected_min_eig(check.H, check.Z_basis) < -tolerances.conclusion * norm
    return check.verdict, fails


def sample_instances(
    theorem: str,
    trials: int = 1000,
    seed: int = 0,
    converse: bool = False,
    workers: int = 1,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> InstanceSummary:
    """
    Run random instances concurrently; trial i uses seed `seed + i`.

    Converse batches sample instances whose hypotheses fail and count how often
    the conclusion fails as well.
    """
    if theorem not in ("codim_one", "codim_k"):
        raise DomainError(f"Unknown theorem {theorem!r}.", {})
    seeds = [seed + i for i in range(trials)]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(
            pool.map(lambda s: _run_trial(theorem, s, converse, tolerances), seeds)
        )

    counts = {verdict.value: 0 for verdict in Verdict}
    for verdict, _ in results:
        counts[verdict.value] += 1
    converse_failures = sum(1 for _, fails in results if fails) if converse else 0

    summary = InstanceSummary(
        theorem=theorem, trials=trials, counts=counts, converse_failures=converse_failures
    )
    logger.info(f"🔹 {theorem} sampling ({'converse' if converse else 'direct'}): {counts}")
    return summary
