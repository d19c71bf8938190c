"""
Integration over tau(B^n) and the standard simplex

All integrals of separately radial integrands are moved onto the simplex
Delta^n = {u in (0,1)^n : sum u_k < 1} by u_k = r_k^2, where the target is

    I[g] = integral over Delta^n of g(u) (1 - sum u)^alpha du

and the tau(B^n) integral of f(r) (1-|r|^2)^alpha prod r_k dr_k equals
I[u -> f(sqrt(u))] / 2^n.

Three channels are provided:
- closed form (Dirichlet integral) for monomial integrands
- tensor-product Gauss-Jacobi rule through the stick-breaking map
- Monte Carlo with Dirichlet(1, ..., 1, alpha+1) samples
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, List, Sequence, Tuple

import numpy as np
from scipy.special import gammaln, roots_jacobi

from multiindex import MAX_DIMENSION

logger = logging.getLogger(__name__)

ERROR_ORDER_DROP = 5
MC_BLOCK_SIZE = 1 << 16
MIN_MC_SAMPLES = 1000

Integrand = Callable[[np.ndarray], np.ndarray]


class QuadratureError(ValueError):
    """Raised for out-of-range parameters and non-finite integrand values."""


class Method(str, Enum):
    CLOSED_FORM = 'closed_form'
    TENSOR_RULE = 'tensor_rule'
    MONTE_CARLO = 'monte_carlo'


@dataclass(frozen=True)
class Estimate:
    """
    A value with an a-posteriori error estimate.

    ``error_bound`` is heuristic: a rule difference for the tensor rule,
    three standard errors for Monte Carlo, zero for closed forms.
    """
    value: float
    error_bound: float
    method: Method

    def scaled(self, factor: float) -> 'Estimate':
        return Estimate(self.value * factor, self.error_bound * abs(factor), self.method)

    def __add__(self, other: 'Estimate') -> 'Estimate':
        method = self.method if self.method == other.method else Method.TENSOR_RULE
        return Estimate(self.value + other.value, self.error_bound + other.error_bound, method)


@dataclass(frozen=True)
class SimplexDomain:
    """Delta^n with the Jacobi weight (1 - sum u)^alpha."""
    n: int
    alpha: float

    def __post_init__(self):
        if int(self.n) != self.n or not 1 <= int(self.n) <= MAX_DIMENSION:
            raise QuadratureError(f"n must be an integer in [1, {MAX_DIMENSION}], got {self.n}")
        if not math.isfinite(float(self.alpha)) or float(self.alpha) <= -1:
            raise QuadratureError(f"alpha must be > -1, got {self.alpha}")
        object.__setattr__(self, 'n', int(self.n))
        object.__setattr__(self, 'alpha', float(self.alpha))

    @classmethod
    def from_weight(cls, w) -> 'SimplexDomain':
        return cls(n=w.n, alpha=w.alpha)

    @property
    def mass(self) -> float:
        """I[1] = Gamma(alpha+1) / Gamma(n+alpha+1)."""
        return dirichlet_closed([0.0] * self.n, self.alpha)


def log_dirichlet_closed(exponents: Sequence[float], alpha: float) -> float:
    """log of ``dirichlet_closed``; finite for exponents far beyond the float range of the integral."""
    a = np.asarray(exponents, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise QuadratureError(f"Exponents must be a nonempty 1-D sequence, got {exponents!r}")
    if np.any(~np.isfinite(a)) or np.any(a <= -1) or not alpha > -1:
        raise QuadratureError(f"Dirichlet integral needs exponents > -1 and alpha > -1, got {exponents!r}, {alpha}")
    return float(np.sum(gammaln(a + 1.0)) + gammaln(alpha + 1.0) - gammaln(a.sum() + a.size + alpha + 1.0))


def dirichlet_closed(exponents: Sequence[float], alpha: float) -> float:
    """
    Integral over Delta^n of prod u_k^a_k (1 - sum u)^alpha du.

    Args:
        exponents (Sequence[float]): a_1, ..., a_n, each > -1
        alpha (float): Weight exponent, > -1

    Returns:
        float: prod Gamma(a_k+1) Gamma(alpha+1) / Gamma(sum a_k + n + alpha + 1)
    """
    return math.exp(log_dirichlet_closed(exponents, alpha))


def _jacobi_unit(order: int, power: float) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Jacobi nodes/weights on [0,1] for the weight (1-t)^power."""
    x, w = roots_jacobi(order, power, 0.0)
    return (1.0 + x) / 2.0, w / 2.0 ** (power + 1.0)


@dataclass(frozen=True)
class SimplexRule:
    """Tensor Gauss-Jacobi rule mapped onto Delta^n; integrates g against (1 - sum u)^alpha."""
    n: int
    alpha: float
    order: int
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


@lru_cache(maxsize=64)
def simplex_rule(n: int, alpha: float, order: int) -> SimplexRule:
    """
    Build the conical-product rule of the given order.

    The stick-breaking map u_1 = t_1, u_j = t_j (1 - u_1 - ... - u_{j-1})
    turns the weight (1 - sum u)^alpha du into prod_j (1-t_j)^(alpha+n-j) dt,
    so coordinate j gets a Gauss-Jacobi rule with that exponent. Exact for
    polynomial g of total degree <= 2*order - 1.
    """
    if order < 1:
        raise QuadratureError(f"Quadrature order must be positive, got {order}")
    axes = [_jacobi_unit(order, alpha + n - j) for j in range(1, n + 1)]

    t = np.array(np.meshgrid(*[ax[0] for ax in axes], indexing='ij')).reshape(n, -1).T
    weights = np.ones(t.shape[0])
    for grid in np.meshgrid(*[ax[1] for ax in axes], indexing='ij'):
        weights = weights * grid.ravel()

    u = np.empty_like(t)
    remaining = np.ones(t.shape[0])
    for j in range(n):
        u[:, j] = t[:, j] * remaining
        remaining = remaining * (1.0 - t[:, j])

    u.flags.writeable = False
    weights.flags.writeable = False
    logger.debug(f"Built simplex rule n={n}, alpha={alpha}, order={order} with {len(weights)} nodes")
    return SimplexRule(n=n, alpha=alpha, order=order, nodes=u, weights=weights)


def rule_pair(domain: SimplexDomain, order: int) -> Tuple[SimplexRule, SimplexRule]:
    """The rule of the requested order and the lower-order rule used for the error estimate."""
    if order < 2:
        raise QuadratureError(f"Quadrature order must be at least 2, got {order}")
    low = max(order - ERROR_ORDER_DROP, 1)
    return simplex_rule(domain.n, domain.alpha, order), simplex_rule(domain.n, domain.alpha, low)


def _evaluate(g: Integrand, nodes: np.ndarray) -> np.ndarray:
    values = np.asarray(g(nodes), dtype=float)
    values = np.broadcast_to(values, (nodes.shape[0],))
    if not np.all(np.isfinite(values)):
        raise QuadratureError("Integrand returned non-finite values on the simplex")
    return values


def integrate_simplex(g: Integrand, domain: SimplexDomain, order: int) -> Estimate:
    """
    Tensor-rule estimate of I[g].

    Args:
        g (Callable): Vectorised integrand, maps an (N, n) array of u to N values
        domain (SimplexDomain): Dimension and alpha
        order (int): Nodes per coordinate, >= 2

    Returns:
        Estimate: value with error_bound = |I_order - I_(order-5)|
    """
    high, low = rule_pair(domain, order)
    value = high.integrate(_evaluate(g, high.nodes))
    coarse = low.integrate(_evaluate(g, low.nodes))
    return Estimate(value, abs(value - coarse), Method.TENSOR_RULE)


def integrate_tau(f: Integrand, domain: SimplexDomain, order: int) -> Estimate:
    """Integral over tau(B^n) of f(r) (1-|r|^2)^alpha prod r_k dr_k, via u = r^2."""
    estimate = integrate_simplex(lambda u: f(np.sqrt(u)), domain, order)
    return estimate.scaled(0.5 ** domain.n)


def _mc_block(g: Integrand, domain: SimplexDomain, size: int, seed_seq: np.random.SeedSequence):
    rng = np.random.default_rng(seed_seq)
    concentration = np.ones(domain.n + 1)
    concentration[-1] = domain.alpha + 1.0
    u = rng.dirichlet(concentration, size=size)[:, :domain.n]
    values = _evaluate(g, u)
    mean = float(values.mean())
    m2 = float(np.sum((values - mean) ** 2))
    return size, mean, m2


def mc_integrate(g: Integrand, domain: SimplexDomain, samples: int, seed: int,
                 workers: int = 1) -> Estimate:
    """
    Monte Carlo estimate of I[g] with error_bound = 3 standard errors.

    Samples are drawn in fixed-size blocks, each with its own child of
    SeedSequence(seed), and combined in block order, so the value does not
    depend on ``workers``.
    """
    if samples < MIN_MC_SAMPLES:
        raise QuadratureError(f"Monte Carlo needs at least {MIN_MC_SAMPLES} samples, got {samples}")
    sizes = [MC_BLOCK_SIZE] * (samples // MC_BLOCK_SIZE)
    if samples % MC_BLOCK_SIZE:
        sizes.append(samples % MC_BLOCK_SIZE)
    children = np.random.SeedSequence(seed).spawn(len(sizes))

    def run(k: int):
        return _mc_block(g, domain, sizes[k], children[k])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks: List[Tuple[int, float, float]] = list(pool.map(run, range(len(sizes))))
    else:
        blocks = [run(k) for k in range(len(sizes))]

    count, mean, m2 = 0, 0.0, 0.0
    for size, block_mean, block_m2 in blocks:
        total = count + size
        delta = block_mean - mean
        mean += delta * size / total
        m2 += block_m2 + delta * delta * count * size / total
        count = total

    standard_error = math.sqrt(m2 / (count - 1) / count)
    mass = domain.mass
    return Estimate(mass * mean, 3.0 * mass * standard_error, Method.MONTE_CARLO)
