"""
Jacobi elliptic functions and complete elliptic integrals.

Every function takes the modulus k, never the parameter m = k**2.
"""

import math
from typing import NamedTuple, Tuple, Union

import numpy as np

from wave_stability.core.errors import DomainError

ArrayLike = Union[float, np.ndarray]

# Above this modulus the AGM amplitude recovery loses digits.
HYPERBOLIC_THRESHOLD = 1.0 - 1e-12

_AGM_MAX_STEPS = 64
_AGM_RTOL = 1e-17


class EllipticValues(NamedTuple):
    sn: ArrayLike
    cn: ArrayLike
    dn: ArrayLike


class CompleteIntegrals(NamedTuple):
    K: float
    E: float


def check_modulus(k: float, allow_zero: bool = True, allow_one: bool = True) -> float:
    """
    Validate an elliptic modulus.

    Args:
        k (float): Candidate modulus.
        allow_zero (bool): Whether k = 0 is admissible.
        allow_one (bool): Whether k = 1 is admissible.

    Returns:
        float: The modulus as a float.

    Raises:
        DomainError: If k is not finite or lies outside the admissible range.
    """
    k = float(k)
    if not math.isfinite(k) or k < 0.0 or k > 1.0:
        raise DomainError(f"Modulus k={k} outside [0, 1].", {"k": k})
    if k == 0.0 and not allow_zero:
        raise DomainError("Modulus k=0 is not admissible here.", {"k": k})
    if k == 1.0 and not allow_one:
        raise DomainError("Modulus k=1 is not admissible here.", {"k": k})
    return k


def complementary_modulus(k: float) -> float:
    """k' = sqrt(1 - k^2), evaluated without cancellation near k = 1."""
    return math.sqrt((1.0 - k) * (1.0 + k))


def _agm_sequence(k: float) -> Tuple[np.ndarray, np.ndarray]:
    """Descending Landen sequences (a_n, c_n) started from (1, k', k)."""
    a, b, c = 1.0, complementary_modulus(k), k
    a_seq, c_seq = [a], [c]
    for _ in range(_AGM_MAX_STEPS):
        if abs(c) <= _AGM_RTOL * a:
            break
        a, b, c = 0.5 * (a + b), math.sqrt(a * b), 0.5 * (a - b)
        a_seq.append(a)
        c_seq.append(c)
    return np.asarray(a_seq), np.asarray(c_seq)


def complete_K(k: float) -> float:
    """
    Complete elliptic integral of the first kind, K(k) = pi / (2 AGM(1, k')).

    Raises:
        DomainError: If k is outside [0, 1) (K diverges at k = 1).
    """
    k = check_modulus(k)
    if k == 1.0:
        raise DomainError("K(k) diverges at k=1.", {"k": k})
    a_seq, _ = _agm_sequence(k)
    return math.pi / (2.0 * a_seq[-1])


def complete_E(k: float) -> float:
    """
    Complete elliptic integral of the second kind.

    Uses E = K (1 - sum_n 2^(n-1) c_n^2) over the descending Landen sequence.
    """
    k = check_modulus(k)
    if k == 1.0:
        return 1.0
    a_seq, c_seq = _agm_sequence(k)
    weights = 2.0 ** (np.arange(len(c_seq)) - 1.0)
    K = math.pi / (2.0 * a_seq[-1])
    return K * (1.0 - float(np.sum(weights * c_seq**2)))


def complete_integrals(k: float) -> CompleteIntegrals:
    return CompleteIntegrals(K=complete_K(k), E=complete_E(k))


def jacobi(x: ArrayLike, k: float) -> EllipticValues:
    """
    Jacobi elliptic functions sn, cn, dn at argument(s) x and modulus k.

    The argument is reduced into [-2K, 2K) before the descending Landen
    recursion for the amplitude. For k >= HYPERBOLIC_THRESHOLD the hyperbolic
    limit (tanh, sech, sech) is returned.

    Args:
        x (ArrayLike): Scalar or array of finite arguments.
        k (float): Modulus in [0, 1].

    Returns:
        EllipticValues: (sn, cn, dn) with the shape of x.

    Raises:
        DomainError: If k is outside [0, 1] or x is not finite.
    """
    k = check_modulus(k)
    x_arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x_arr)):
        raise DomainError("Jacobi functions need finite arguments.", {"k": k})

    if k == 0.0:
        values = EllipticValues(np.sin(x_arr), np.cos(x_arr), np.ones_like(x_arr))
    elif k >= HYPERBOLIC_THRESHOLD:
        sech = 1.0 / np.cosh(x_arr)
        values = EllipticValues(np.tanh(x_arr), sech, sech.copy())
    else:
        a_seq, c_seq = _agm_sequence(k)
        quarter = math.pi / (2.0 * a_seq[-1])
        reduced = np.mod(x_arr + 2.0 * quarter, 4.0 * quarter) - 2.0 * quarter

        N = len(a_seq) - 1
        phi = (2.0**N) * a_seq[N] * reduced
        for n in range(N, 0, -1):
            ratio = np.clip(c_seq[n] / a_seq[n] * np.sin(phi), -1.0, 1.0)
            phi = 0.5 * (phi + np.arcsin(ratio))

        sn = np.sin(phi)
        cn = np.cos(phi)
        kp = complementary_modulus(k)
        dn = np.sqrt(kp * kp + k * k * cn * cn)
        values = EllipticValues(sn, cn, dn)

    if np.ndim(x) == 0:
        return EllipticValues(*(float(v) for v in values))
    return values
