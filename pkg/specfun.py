"""
Gamma-ratio constants for weighted Bergman spaces

Basis normalisation and spectral prefactors for H^2_alpha(B^n), always formed
as sums and differences of log-gamma values and exponentiated once, so that
degrees in the hundreds never overflow.
"""

import logging
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.special import gammaln

from multiindex import MAX_DIMENSION, degree, validate_multi_index

logger = logging.getLogger(__name__)

LOG_2 = math.log(2.0)
MAX_LOG_FLOAT = math.log(np.finfo(float).max)


class WeightParamError(ValueError):
    """Raised for alpha <= -1, invalid dimensions or nonpositive gamma arguments."""


@dataclass(frozen=True)
class WeightParam:
    """
    Weight of the measure dv_alpha = c_alpha (1 - |z|^2)^alpha dv on B^n.

    Args:
        alpha (float): Weight exponent, alpha > -1
        n (int): Complex dimension
    """
    alpha: float
    n: int

    def __post_init__(self):
        alpha = float(self.alpha)
        if not math.isfinite(alpha) or alpha <= -1.0:
            raise WeightParamError(f"alpha must be a finite real > -1, got {self.alpha}")
        if int(self.n) != self.n or not 1 <= int(self.n) <= MAX_DIMENSION:
            raise WeightParamError(f"n must be an integer in [1, {MAX_DIMENSION}], got {self.n}")
        object.__setattr__(self, 'alpha', alpha)
        object.__setattr__(self, 'n', int(self.n))

    @property
    def log_c_alpha(self) -> float:
        return float(gammaln(self.n + self.alpha + 1) - gammaln(self.n + 1) - gammaln(self.alpha + 1))

    @property
    def c_alpha(self) -> float:
        """Gamma(n+alpha+1) / (n! Gamma(alpha+1)), chosen so that v_alpha(B^n) = 1."""
        return math.exp(self.log_c_alpha)


def log_gamma(x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """
    ln Gamma(x) for x > 0.

    Args:
        x (float or ndarray): Positive argument(s)

    Returns:
        float or ndarray: ln Gamma(x), same shape as x
    """
    values = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(values)) or np.any(values <= 0):
        raise WeightParamError(f"log_gamma requires positive finite arguments, got {x!r}")
    result = gammaln(values)
    return float(result) if result.ndim == 0 else result


def log_multi_factorial(m: Sequence[int]) -> float:
    """ln m! computed as sum of ln Gamma(m_k + 1)."""
    return float(np.sum(gammaln(np.asarray(m, dtype=float) + 1.0)))


def _checked(m: Sequence[int], w: WeightParam):
    m = validate_multi_index(m)
    if len(m) != w.n:
        raise WeightParamError(f"Multi-index {m} does not match dimension n={w.n}")
    return m


def log_monomial_norm_sq(m: Sequence[int], w: WeightParam) -> float:
    m = _checked(m, w)
    return (log_multi_factorial(m) + log_gamma(w.n + w.alpha + 1)
            - log_gamma(w.n + degree(m) + w.alpha + 1))


def monomial_norm_sq(m: Sequence[int], w: WeightParam) -> float:
    """<z^m, z^m>_alpha = m! Gamma(n+alpha+1) / Gamma(n+|m|+alpha+1)."""
    return math.exp(log_monomial_norm_sq(m, w))


def basis_coefficient(m: Sequence[int], w: WeightParam) -> float:
    """Coefficient of z^m in the orthonormal basis vector e_m."""
    return math.exp(-0.5 * log_monomial_norm_sq(m, w))


def log_spectral_prefactor(m: Sequence[int], w: WeightParam) -> float:
    m = _checked(m, w)
    return (w.n * LOG_2 + log_gamma(w.n + degree(m) + w.alpha + 1)
            - log_multi_factorial(m) - log_gamma(w.alpha + 1))


def spectral_prefactor(m: Sequence[int], w: WeightParam) -> float:
    """
    Q(m) = 2^n Gamma(n+|m|+alpha+1) / (m! Gamma(alpha+1)).

    With this constant, Q(m) * integral over tau(B^n) of
    a(r) r^(2m) (1-|r|^2)^alpha prod r_k dr_k equals <a e_m, e_m>_alpha,
    so the symbol a = 1 has gamma identically 1.

    Raises:
        WeightParamError: Q(m) exceeds the float range (log Q > ~709); use
            log_spectral_prefactor, which stays finite for every |m| <= 500, n <= 12
    """
    log_q = log_spectral_prefactor(m, w)
    if log_q > MAX_LOG_FLOAT:
        raise WeightParamError(f"Q{tuple(m)} = exp({log_q:.2f}) overflows a float; use log_spectral_prefactor")
    return math.exp(log_q)

