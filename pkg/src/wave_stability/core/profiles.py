import math
from typing import Callable, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from wave_stability.core.elliptic import check_modulus, complete_K, jacobi
from wave_stability.core.errors import (
    DegenerateFamilyError,
    DomainError,
    NotInvertibleError,
)
from wave_stability.core.logger import logger
from wave_stability.core.schemas import Normalization, WaveModel
from wave_stability.core.spectral import (
    periodic_grid,
    running_integral,
    spectral_derivative,
)


def _lame_root(k: float) -> float:
    """s(k) = sqrt(1 - k^2 + k^4)."""
    return math.sqrt(1.0 - k * k + k**4)


class WaveProfile(BaseModel):
    """
    A periodic (or peakon) traveling wave.

    Evaluators work in the profile's own variable y. For physical profiles y is
    the physical coordinate x; for the canonical cubic profile y = alpha * x and
    the operator is divided by c^2 alpha^2.
    """

    model_config = ConfigDict(frozen=True)

    model: WaveModel
    normalization: Normalization
    k: Optional[float] = Field(None, description="Elliptic modulus; absent for peakons.")
    c: float = Field(..., description="Wave speed.")
    alpha: float = Field(..., description="Spatial scale of the elliptic argument.")
    roots: Tuple[float, float, float]
    half_period: float = Field(..., description="Half of the profile period in y.")
    A: float = Field(..., description="First-integral constant.")
    L_domain: Optional[float] = Field(None, description="Peakon half-length.")

    @property
    def period(self) -> float:
        return 2.0 * self.half_period

    @property
    def power(self) -> int:
        """Nonlinearity exponent p in L[1] = -c + Phi^p."""
        return 2 if self.model == WaveModel.CUBIC else 1

    @property
    def is_rescaled(self) -> bool:
        return (
            self.model == WaveModel.CUBIC
            and self.normalization == Normalization.CANONICAL
        )

    @property
    def variable_scale(self) -> float:
        """Factor s with y = s * x."""
        return self.alpha if self.is_rescaled else 1.0

    @property
    def operator_divisor(self) -> float:
        return (self.c * self.alpha) ** 2 if self.is_rescaled else 1.0

    @property
    def operator_scale(self) -> float:
        """Coefficient a of -d^2/dy^2 in L."""
        return 1.0 if self.is_rescaled else self.c**2

    @property
    def grid_start(self) -> float:
        return -self.half_period

    def grid(self, n: int) -> np.ndarray:
        return periodic_grid(n, self.period, self.grid_start)

    def _argument(self, y):
        # argument of the Jacobi functions
        return (1.0 if self.is_rescaled else self.alpha) * np.asarray(y, dtype=float)

    def phi(self, y):
        """Profile Phi(y)."""
        if self.model == WaveModel.PEAKON:
            theta = self.alpha * np.asarray(y, dtype=float)
            return self.c * (1.0 - 1.5 / np.cosh(theta) ** 2)
        sn, _, _ = jacobi(self._argument(y), self.k)
        if self.model == WaveModel.QUADRATIC:
            phi0, phi1, _ = self.roots
            return phi0 + (phi1 - phi0) * sn**2
        return self.roots[2] * sn

    def dphi(self, y):
        """First derivative of Phi with respect to y."""
        if self.model == WaveModel.PEAKON:
            theta = self.alpha * np.asarray(y, dtype=float)
            sech2 = 1.0 / np.cosh(theta) ** 2
            return 3.0 * self.c * self.alpha * sech2 * np.tanh(theta)
        s = 1.0 if self.is_rescaled else self.alpha
        sn, cn, dn = jacobi(self._argument(y), self.k)
        if self.model == WaveModel.QUADRATIC:
            phi0, phi1, _ = self.roots
            return 2.0 * (phi1 - phi0) * s * sn * cn * dn
        return self.roots[2] * s * cn * dn

    def d2phi(self, y):
        """Second derivative of Phi with respect to y."""
        if self.model == WaveModel.PEAKON:
            theta = self.alpha * np.asarray(y, dtype=float)
            sech2 = 1.0 / np.cosh(theta) ** 2
            return 3.0 * self.c * self.alpha**2 * sech2 * (3.0 * sech2 - 2.0)
        s = 1.0 if self.is_rescaled else self.alpha
        k2 = self.k**2
        sn, cn, dn = jacobi(self._argument(y), self.k)
        if self.model == WaveModel.QUADRATIC:
            phi0, phi1, _ = self.roots
            return (
                2.0
                * (phi1 - phi0)
                * s**2
                * (cn**2 * dn**2 - sn**2 * dn**2 - k2 * sn**2 * cn**2)
            )
        return -self.roots[2] * s**2 * sn * (dn**2 + k2 * cn**2)

    def potential(self, y):
        """V(y) = L[1], i.e. (-c + Phi^p) divided by the operator divisor."""
        return (-self.c + self.phi(y) ** self.power) / self.operator_divisor

    def first_integral(self, values):
        """F(Phi) with Phi'^2 = F(Phi) in the profile's own variable."""
        phi = np.asarray(values, dtype=float)
        if self.model == WaveModel.CUBIC:
            F = (phi**4 - 2.0 * self.c * phi**2 + self.A) / (2.0 * self.c**2)
            return F / self.variable_scale**2
        return 2.0 / (3.0 * self.c**2) * (phi**3 - 1.5 * self.c * phi**2 + self.A)


def _require_elliptic_modulus(k: float) -> float:
    k = check_modulus(k)
    if k in (0.0, 1.0):
        raise DegenerateFamilyError(
            f"Elliptic profiles need 0 < k < 1, got k={k}.", {"k": k}
        )
    return k


def _quadratic_roots(k: float, c: float, alpha: float) -> Tuple[float, float, float]:
    k2 = k * k
    ca2 = c * c * alpha * alpha
    phi0 = c / 2.0 - 2.0 * ca2 * (1.0 + k2)
    phi1 = c / 2.0 + 2.0 * ca2 * (2.0 * k2 - 1.0)
    phi2 = c / 2.0 + 2.0 * ca2 * (2.0 - k2)
    return phi0, phi1, phi2


def _quadratic(k: float, alpha: float, normalization: Normalization) -> WaveProfile:
    c = 1.0 / (4.0 * alpha**2 * _lame_root(k))
    roots = _quadratic_roots(k, c, alpha)
    return WaveProfile(
        model=WaveModel.QUADRATIC,
        normalization=normalization,
        k=k,
        c=c,
        alpha=alpha,
        roots=roots,
        half_period=complete_K(k) / alpha,
        A=-roots[0] * roots[1] * roots[2],
    )


def quadratic_profile(k: float) -> WaveProfile:
    """
    Cnoidal-type wave of the quadratic model in the normalization alpha = 1.

    Phi(y) = Phi0 + (Phi1 - Phi0) sn^2(y, k), c = 1 / (4 sqrt(1 - k^2 + k^4)),
    one period is [-K(k), K(k)).

    Raises:
        DegenerateFamilyError: If k is 0 or 1.
    """
    k = _require_elliptic_modulus(k)
    profile = _quadratic(k, 1.0, Normalization.CANONICAL)
    logger.debug(f"🔹 Quadratic profile k={k}: c={profile.c:.12g}")
    return profile


def scale_quadratic(profile: WaveProfile, alpha: float) -> WaveProfile:
    """Member of the (alpha, c) family 16 c^2 alpha^4 (1 - k^2 + k^4) = 1 with the same k."""
    if profile.model != WaveModel.QUADRATIC:
        raise DomainError("Only quadratic profiles can be rescaled.", {})
    if not alpha > 0.0:
        raise DomainError(f"Scale alpha must be positive, got {alpha}.", {"alpha": alpha})
    return _quadratic(profile.k, float(alpha), Normalization.PHYSICAL)


def cubic_profile(
    k: float,
    normalization: Normalization = Normalization.CANONICAL,
    c: Optional[float] = None,
) -> WaveProfile:
    """
    Snoidal wave of the cubic model.

    Physical: Phi(x) = Phi2 sn(alpha x, k) with Phi1^2 = 2c/(1+k^2),
    Phi2^2 = 2ck^2/(1+k^2), alpha^2 = 1/((1+k^2)c).
    Canonical: Phi(y) = sn(y, k), the physical wave with c = (1+k^2)/(2k^2)
    (so Phi2 = 1) written in y = alpha x, paired with
    L = -d^2/dy^2 + 2k^2 sn^2 - (1+k^2).

    Raises:
        DegenerateFamilyError: If k is 0 or 1.
        DomainError: If a physical profile is requested without c > 0.
    """
    k = _require_elliptic_modulus(k)
    normalization = Normalization(normalization)
    k2 = k * k
    if normalization == Normalization.PHYSICAL:
        if c is None or not c > 0.0:
            raise DomainError("Physical cubic profiles need a speed c > 0.", {"c": c})
        c = float(c)
    else:
        c = (1.0 + k2) / (2.0 * k2)

    phi1 = math.sqrt(2.0 * c / (1.0 + k2))
    phi2 = math.sqrt(2.0 * c * k2 / (1.0 + k2))
    alpha = 1.0 / math.sqrt((1.0 + k2) * c)
    K = complete_K(k)
    half_period = 2.0 * K if normalization == Normalization.CANONICAL else 2.0 * K / alpha
    return WaveProfile(
        model=WaveModel.CUBIC,
        normalization=normalization,
        k=k,
        c=c,
        alpha=alpha,
        roots=(0.0, phi1, phi2),
        half_period=half_period,
        A=(phi1 * phi2) ** 2,
    )


def check_relations(profile: WaveProfile) -> float:
    """Max relative deviation from the parameter relations of the profile's family."""
    k2 = profile.k**2
    c, alpha = profile.c, profile.alpha
    if profile.model == WaveModel.QUADRATIC:
        phi0, phi1, phi2 = profile.roots
        ca2 = c * c * alpha * alpha
        pairs = [
            (phi1 - phi0, 6.0 * ca2 * k2),
            (phi0, c / 2.0 - 2.0 * ca2 * (1.0 + k2)),
            (phi1, c / 2.0 + 2.0 * ca2 * (2.0 * k2 - 1.0)),
            (phi0 + phi1 + phi2, 1.5 * c),
            (16.0 * c * c * alpha**4 * (1.0 - k2 + k2 * k2), 1.0),
        ]
    elif profile.model == WaveModel.CUBIC:
        _, phi1, phi2 = profile.roots
        pairs = [
            (phi1**2, 2.0 * c / (1.0 + k2)),
            (phi2**2, 2.0 * c * k2 / (1.0 + k2)),
            (alpha**2, 1.0 / ((1.0 + k2) * c)),
        ]
    else:
        raise DomainError("Peakons carry no elliptic parameter relations.", {})
    return max(abs(a - b) / max(abs(b), 1e-300) for a, b in pairs)


def profile_residual(profile: WaveProfile, n: int = 256) -> float:
    """
    Max over one period of |a Phi'' - V Phi| under spectral differentiation.

    For the quadratic model this is |c^2 Phi'' - Phi (Phi - c)|.
    """
    y = profile.grid(n)
    values = profile.phi(y)
    second = spectral_derivative(values, profile.period, order=2)
    residual = profile.operator_scale * second - profile.potential(y) * values
    return float(np.max(np.abs(residual)))


def first_integral_residual(profile: WaveProfile, n_samples: int = 256) -> float:
    """
    Max over samples of |Phi'^2 - F(Phi)|.

    With n_samples = 1 the single sample is the crest Phi(0) of the quadratic
    wave or the crest Phi(K) of the cubic wave, where both sides vanish.
    """
    if profile.model == WaveModel.PEAKON:
        raise DomainError("The first-integral check applies to elliptic profiles.", {})
    if n_samples == 1:
        y = np.array([0.0 if profile.model == WaveModel.QUADRATIC else profile.half_period / 2.0])
    else:
        y = profile.grid(n_samples)
    values = profile.phi(y)
    slopes = profile.dphi(y)
    return float(np.max(np.abs(slopes**2 - profile.first_integral(values))))


def sample_profile(
    profile: WaveProfile, n: int, half_width: Optional[float] = None
) -> np.ndarray:
    """
    Columns (y, phi, dphi) for CSV output.

    Elliptic profiles are sampled over one period; peakons on n points of
    [-half_width, half_width], by default ten domain half-lengths.
    """
    if profile.model == WaveModel.PEAKON:
        half_width = half_width or 10.0 * profile.L_domain
        y = np.linspace(-half_width, half_width, n)
    else:
        y = profile.grid(n)
    return np.column_stack((y, profile.phi(y), profile.dphi(y)))


class ChangeOfVariables(BaseModel):
    """
    The map xi = Xi(eta) = eta - Psi(eta)/c with Psi' = Phi^p and Psi(0) = 0.

    Evaluators take the physical coordinate eta.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    profile: WaveProfile
    monotonicity_margin: float
    xi_fn: Callable = Field(..., exclude=True)
    dxi_fn: Callable = Field(..., exclude=True)

    def xi(self, eta):
        return self.xi_fn(np.asarray(eta, dtype=float))

    def dxi(self, eta):
        return self.dxi_fn(np.asarray(eta, dtype=float))


def monotonicity_closed_form(profile: WaveProfile, eta) -> np.ndarray:
    """1 - Phi/c = 2 alpha^2 c (1 - 2k^2 + s + 3k^2 cn^2(alpha eta)) for quadratic waves."""
    if profile.model != WaveModel.QUADRATIC:
        raise DomainError("The closed-form margin exists for quadratic waves only.", {})
    k2 = profile.k**2
    _, cn, _ = jacobi(profile.alpha * np.asarray(eta, dtype=float), profile.k)
    return (
        2.0
        * profile.alpha**2
        * profile.c
        * (1.0 - 2.0 * k2 + _lame_root(profile.k) + 3.0 * k2 * cn**2)
    )


def change_of_variables(profile: WaveProfile, n: int = 1024) -> ChangeOfVariables:
    """
    Build Xi for an elliptic profile.

    Psi is the running integral of Phi^p by periodic spectral quadrature; the
    monotonicity margin is the minimum of 1 - Phi^p/c over a grid of n points
    that contains the extrema of Phi.

    Raises:
        DomainError: For peakon profiles or c == 0.
        NotInvertibleError: If the margin is not positive.
    """
    if profile.model == WaveModel.PEAKON:
        raise DomainError("Use peakon_profile for the peakon change of variables.", {})
    if profile.c == 0.0:
        raise DomainError("The change of variables needs c != 0.", {"c": 0.0})

    n = 4 * max(n // 4, 4)
    y = profile.grid(n)
    density = profile.phi(y) ** profile.power
    dxi_samples = 1.0 - density / profile.c
    margin = float(np.min(dxi_samples))
    if margin <= 0.0:
        logger.error(f"❌ Change of variables not invertible, margin={margin:.3e}")
        raise NotInvertibleError(
            "Xi is not strictly monotone; the wave is inadmissible.",
            {"margin": margin, "k": profile.k},
        )

    s = profile.variable_scale
    period, start, c = profile.period, profile.grid_start, profile.c

    def xi_fn(eta):
        psi = running_integral(
            density, period, start=start, origin=0.0, points=np.ravel(s * eta)
        )
        return (eta - np.reshape(psi, np.shape(eta)) / (s * c))

    def dxi_fn(eta):
        return 1.0 - profile.phi(s * eta) ** profile.power / c

    return ChangeOfVariables(
        profile=profile, monotonicity_margin=margin, xi_fn=xi_fn, dxi_fn=dxi_fn
    )


def peakon_profile(L: float) -> Tuple[WaveProfile, ChangeOfVariables]:
    """
    Parabolic peakon on (-L, L).

    phi(xi) = xi^2/6 - c/2 with c = L^2/9, Xi(eta) = L tanh(3 eta / (2L)) and
    Phi(eta) = (L^2/9)(1 - (3/2) sech^2(3 eta / (2L))).

    Raises:
        DomainError: If L <= 0.
    """
    L = float(L)
    if not (math.isfinite(L) and L > 0.0):
        raise DomainError(f"Peakon half-length must be positive, got L={L}.", {"L": L})
    c = L * L / 9.0
    alpha = 3.0 / (2.0 * L)
    profile = WaveProfile(
        model=WaveModel.PEAKON,
        normalization=Normalization.PHYSICAL,
        k=None,
        c=c,
        alpha=alpha,
        roots=(-c / 2.0, c, c),
        half_period=math.inf,
        A=c**3 / 2.0,
        L_domain=L,
    )

    def xi_fn(eta):
        return L * np.tanh(alpha * eta)

    def dxi_fn(eta):
        return 1.5 / np.cosh(alpha * eta) ** 2

    window = np.linspace(-10.0 * L, 10.0 * L, 2001)
    cov = ChangeOfVariables(
        profile=profile,
        monotonicity_margin=float(np.min(dxi_fn(window))),
        xi_fn=xi_fn,
        dxi_fn=dxi_fn,
    )
    return profile, cov


def peakon_phi(xi, L: float):
    """phi(xi) = xi^2/6 - c/2 on [-L, L]."""
    return np.asarray(xi, dtype=float) ** 2 / 6.0 - L * L / 18.0
