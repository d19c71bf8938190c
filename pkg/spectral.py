"""
Spectral functions of Toeplitz operators with separately radial symbols

gamma_a(m) = <a e_m, e_m>_alpha is the eigenvalue of T_a on the orthonormal
monomial e_m. For group-invariant symbols it is constant on orbits (symmetric
symbols) or on the even/odd halves of strictly decreasing orbits (alternating
symbols), so R T_a R* is a direct sum of scalar blocks.

Features:
- gamma at a single multi-index by tensor quadrature, closed form or Monte Carlo
- one-dimensional reduction for radial symbols
- tables with exactly one evaluation per (orbit, branch)
- the diagonal multiplier acting on coefficient sequences
- block structure of l^2(Z_+^n) and the a = a+ + a- decomposition
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.special import gammaln, roots_jacobi
from tqdm import tqdm

from multiindex import (BRANCH_MINUS, BRANCH_PLUS, BRANCH_WHOLE, MultiIndex, Orbit,
                        Permutation, all_indices, canonicalize, default_odd_permutation,
                        degree, enumerate_canonical, orbit_of, validate_multi_index)
from quadrature import (ERROR_ORDER_DROP, Estimate, Method, SimplexDomain, integrate_tau, log_dirichlet_closed,
                        mc_integrate, rule_pair)
from specfun import WeightParam, log_spectral_prefactor
from symbols import (SymbolClass, SymbolClassError, SymbolExpr, classify_by_sampling,
                     monomial_exponents, symmetrize_pair)

logger = logging.getLogger(__name__)

BRANCH_ORDER = {BRANCH_WHOLE: 0, BRANCH_PLUS: 1, BRANCH_MINUS: 2}

LAYOUT_ORBIT = 'orbit'
LAYOUT_SPLIT = 'split'

TableKey = Tuple[MultiIndex, str]
CoefficientSequence = Dict[MultiIndex, complex]


class SpectralError(ValueError):
    """Raised for lookups beyond a table's degree cut-off and malformed coefficient data."""


def default_order(max_degree: int) -> int:
    """12 + 2*max_degree: polynomial symbols up to degree 2*max_degree in u integrate exactly."""
    return 12 + 2 * max_degree


def _log_monomial(u: np.ndarray, m: MultiIndex) -> np.ndarray:
    """sum_k m_k log u_k, skipping m_k = 0 so that u_k = 0 never produces 0 * (-inf)."""
    total = np.zeros(u.shape[0])
    with np.errstate(divide='ignore'):
        for k, power in enumerate(m):
            if power:
                total = total + power * np.log(u[:, k])
    return total


def _log_gamma_scale(m: MultiIndex, w: WeightParam) -> float:
    """log of Q(m) / 2^n = Gamma(n+|m|+alpha+1) / (m! Gamma(alpha+1))."""
    return log_spectral_prefactor(m, w) - w.n * math.log(2.0)


class SpectralEngine:
    """
    Evaluates gamma_a(m) for one symbol and weight on a fixed pair of rules.

    The symbol is evaluated once per rule node; each gamma is then a weighted
    sum against Q(m) r^(2m), formed in log space.
    """

    def __init__(self, a: SymbolExpr, w: WeightParam, order: int):
        """
        Args:
            a (SymbolExpr): Separately radial symbol
            w (WeightParam): Weight and dimension (must match a.n)
            order (int): Gauss-Jacobi nodes per coordinate
        """
        if a.n != w.n:
            raise SpectralError(f"Symbol dimension {a.n} does not match weight dimension {w.n}")
        self.symbol = a
        self.weight = w
        self.order = order
        self.domain = SimplexDomain.from_weight(w)
        self._rules = rule_pair(self.domain, order)
        self._symbol_values = [self._symbol_on(rule.nodes) for rule in self._rules]

    def _symbol_on(self, u: np.ndarray) -> np.ndarray:
        values = np.asarray(self.symbol.evaluate(np.sqrt(u)), dtype=float)
        if not np.all(np.isfinite(values)):
            raise SpectralError(f"Symbol '{self.symbol.text}' is not finite on tau(B^{self.weight.n})")
        return values

    def gamma(self, m: Sequence[int]) -> Estimate:
        m = validate_multi_index(m)
        if len(m) != self.weight.n:
            raise SpectralError(f"Multi-index {m} does not match n={self.weight.n}")
        scale = _log_gamma_scale(m, self.weight)
        sums = []
        for rule, values in zip(self._rules, self._symbol_values):
            kernel = np.exp(_log_monomial(rule.nodes, m) + scale)
            sums.append(float(np.dot(rule.weights, values * kernel)))
        return Estimate(sums[0], abs(sums[0] - sums[1]), Method.TENSOR_RULE)


def gamma_point(a: SymbolExpr, m: Sequence[int], w: WeightParam, order: Optional[int] = None) -> Estimate:
    """
    gamma_a(m) = Q(m) * integral over tau(B^n) of a(r) r^(2m) (1-|r|^2)^alpha prod r_k dr_k.

    Args:
        a (SymbolExpr): Separately radial symbol
        m (Sequence[int]): Multi-index
        w (WeightParam): Weight parameter
        order (int, optional): Quadrature order, default 12 + 2|m|

    Returns:
        Estimate: gamma with the rule-difference error estimate
    """
    m = validate_multi_index(m)
    order = order or default_order(degree(m))
    log_scale = _log_gamma_scale(m, w)

    def integrand(r: np.ndarray) -> np.ndarray:
        return a.evaluate(r) * np.exp(_log_monomial(r * r, m) + log_scale + w.n * math.log(2.0))

    return integrate_tau(integrand, SimplexDomain.from_weight(w), order)


def gamma_monomial_closed(beta: Sequence[int], m: Sequence[int], w: WeightParam) -> float:
    """
    gamma of a(r) = r^(2 beta) in closed form.

    prod_k Gamma(m_k+beta_k+1)/Gamma(m_k+1) * Gamma(n+|m|+alpha+1)/Gamma(n+|m|+|beta|+alpha+1)
    """
    m = validate_multi_index(m)
    b = np.asarray(beta, dtype=float)
    if b.shape != (len(m),) or np.any(b < 0):
        raise SpectralError(f"beta must be {len(m)} nonnegative exponents, got {beta!r}")
    mk = np.asarray(m, dtype=float)
    n, alpha = w.n, w.alpha
    log_value = (np.sum(gammaln(mk + b + 1.0) - gammaln(mk + 1.0))
                 + gammaln(n + mk.sum() + alpha + 1.0) - gammaln(n + mk.sum() + b.sum() + alpha + 1.0))
    return float(np.exp(log_value))


def gamma_mc(a: SymbolExpr, m: Sequence[int], w: WeightParam, samples: int, seed: int,
             workers: int = 1) -> Estimate:
    """Monte Carlo channel for gamma_a(m): Dirichlet samples of the weighted simplex."""
    m = validate_multi_index(m)
    log_scale = _log_gamma_scale(m, w)

    def integrand(u: np.ndarray) -> np.ndarray:
        return a.evaluate(np.sqrt(u)) * np.exp(_log_monomial(u, m) + log_scale)

    return mc_integrate(integrand, SimplexDomain.from_weight(w), samples, seed, workers=workers)


def _jacobi_01(order: int, alpha: float, power: float) -> Tuple[np.ndarray, np.ndarray]:
    x, weights = roots_jacobi(order, alpha, power)
    return (1.0 + x) / 2.0, weights / 2.0 ** (alpha + power + 1.0)


def gamma_radial(profile: Callable[[np.ndarray], np.ndarray], degree_m: int, w: WeightParam,
                 order: int = 40) -> Estimate:
    """
    gamma for a radial symbol a(z) = profile(|z|), which depends only on |m|.

    Gamma(n+|m|+alpha+1) / (Gamma(alpha+1) Gamma(|m|+n)) *
    integral_0^1 profile(sqrt(s)) s^(|m|+n-1) (1-s)^alpha ds, by 1-D Gauss-Jacobi.
    """
    if degree_m < 0:
        raise SpectralError(f"Degree must be nonnegative, got {degree_m}")
    if order < 2:
        raise SpectralError(f"Quadrature order must be at least 2, got {order}")
    power = degree_m + w.n - 1.0
    log_scale = gammaln(w.n + degree_m + w.alpha + 1.0) - gammaln(w.alpha + 1.0) - gammaln(degree_m + w.n)

    def integral(k: int) -> float:
        s, weights = _jacobi_01(k, w.alpha, power)
        values = np.asarray(profile(np.sqrt(s)), dtype=float)
        return float(np.dot(weights, np.broadcast_to(values, s.shape)) * math.exp(log_scale))

    value = integral(order)
    coarse = integral(max(order - ERROR_ORDER_DROP, 1))
    return Estimate(value, abs(value - coarse), Method.TENSOR_RULE)


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralTable:
    """
    The diagonal form of T_a up to a degree cut-off.

    ``entries`` maps (canonical iota, branch) to gamma. With the orbit layout
    every orbit has one 'whole' entry; with the split layout strictly
    decreasing orbits carry 'plus' (gamma at iota) and 'minus' (gamma at
    sigma(iota) for the fixed odd sigma) entries.
    """
    weight: WeightParam
    symbol_class: SymbolClass
    entries: Dict[TableKey, Estimate]
    max_degree: int
    layout: str = LAYOUT_ORBIT
    symbol_text: str = ''
    order: int = 0
    odd_permutation: Optional[Permutation] = None
    orbits: Tuple[Orbit, ...] = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if not self.orbits:
            object.__setattr__(self, 'orbits', tuple(enumerate_canonical(self.weight.n, self.max_degree)))

    @property
    def n(self) -> int:
        return self.weight.n

    def key_for(self, m: Sequence[int]) -> TableKey:
        m = validate_multi_index(m)
        if len(m) != self.n:
            raise SpectralError(f"Multi-index {m} does not match n={self.n}")
        if degree(m) > self.max_degree:
            raise SpectralError(f"Multi-index {m} exceeds the table degree {self.max_degree}")
        iota = canonicalize(m)
        if (iota, BRANCH_WHOLE) in self.entries:
            return iota, BRANCH_WHOLE
        return iota, orbit_of(iota).branch_of(m)

    def estimate_of(self, m: Sequence[int]) -> Estimate:
        return self.entries[self.key_for(m)]

    def gamma_of(self, m: Sequence[int]) -> float:
        return self.estimate_of(m).value

    def representative(self, key: TableKey) -> MultiIndex:
        """The multi-index at which an entry is evaluated: iota, or sigma(iota) on minus branches."""
        iota, branch = key
        if branch == BRANCH_MINUS:
            return (self.odd_permutation or default_odd_permutation(self.n))(iota)
        return iota

    def sorted_keys(self) -> List[TableKey]:
        return sorted(self.entries, key=lambda k: (degree(k[0]), tuple(-x for x in k[0]), BRANCH_ORDER[k[1]]))

    def to_frame(self) -> pd.DataFrame:
        """One row per (orbit, branch), sorted by (degree, lex descending, branch)."""
        rows = []
        for key in self.sorted_keys():
            iota, branch = key
            orbit = orbit_of(iota)
            estimate = self.entries[key]
            row = {f"i{k}": v for k, v in enumerate(iota, 1)}
            row.update({
                'degree': degree(iota),
                'orbit_size': orbit.size,
                'class': orbit.orbit_class.value,
                'branch': branch,
                'gamma': estimate.value,
                'error_bound': estimate.error_bound,
                'method': estimate.method.value,
            })
            rows.append(row)
        columns = [f"i{k}" for k in range(1, self.n + 1)] + [
            'degree', 'orbit_size', 'class', 'branch', 'gamma', 'error_bound', 'method']
        return pd.DataFrame(rows, columns=columns)

    def metadata(self) -> Dict:
        return {
            'n': self.n,
            'alpha': self.weight.alpha,
            'max_degree': self.max_degree,
            'symbol': self.symbol_text,
            'symbol_class': self.symbol_class.value,
            'layout': self.layout,
            'order': self.order,
        }


def read_table_frame(frame: pd.DataFrame, weight: WeightParam, symbol_class: SymbolClass,
                     max_degree: int, layout: str = LAYOUT_ORBIT, symbol_text: str = '',
                     order: int = 0) -> SpectralTable:
    """Rebuild a SpectralTable from the frame produced by ``to_frame``."""
    missing = {'branch', 'gamma', 'error_bound', 'method'} - set(frame.columns)
    index_columns = [f"i{k}" for k in range(1, weight.n + 1)]
    missing |= set(index_columns) - set(frame.columns)
    if missing:
        raise SpectralError(f"Table frame is missing columns: {sorted(missing)}")
    entries = {}
    for record in frame.to_dict('records'):
        iota = tuple(int(record[c]) for c in index_columns)
        entries[(iota, str(record['branch']))] = Estimate(
            float(record['gamma']), float(record['error_bound']), Method(record['method']))
    return SpectralTable(weight=weight, symbol_class=symbol_class, entries=entries, max_degree=max_degree,
                         layout=layout, symbol_text=symbol_text, order=order)


def table_keys(orbits: Sequence[Orbit], layout: str) -> List[TableKey]:
    keys = []
    for orbit in orbits:
        if layout == LAYOUT_SPLIT and orbit.is_split:
            keys += [(orbit.canonical, BRANCH_PLUS), (orbit.canonical, BRANCH_MINUS)]
        else:
            keys.append((orbit.canonical, BRANCH_WHOLE))
    return keys


def layout_for(symbol_class: SymbolClass) -> str:
    if symbol_class is SymbolClass.SEP_RADIAL:
        raise SymbolClassError("Symbols that are only separately radial have no orbit block structure")
    return LAYOUT_ORBIT if symbol_class.is_symmetric else LAYOUT_SPLIT


def build_table(a: SymbolExpr, w: WeightParam, max_degree: int, order: Optional[int] = None,
                symbol_class: Optional[SymbolClass] = None, layout: Optional[str] = None,
                workers: int = 1, progress: bool = False, closed_form: bool = True) -> SpectralTable:
    """
    Tabulate gamma_a with one evaluation per (orbit, branch).

    Args:
        a (SymbolExpr): Symbol; classified by sampling unless ``symbol_class`` is given
        w (WeightParam): Weight parameter
        max_degree (int): Degree cut-off
        order (int, optional): Quadrature order, default 12 + 2*max_degree
        layout (str, optional): 'orbit' or 'split', default from the class
        workers (int): Threads evaluating orbit representatives
        progress (bool): Show a tqdm bar
        closed_form (bool): Use the Gamma-ratio formula when a is c * prod r_k^(2 beta_k)

    Returns:
        SpectralTable: Immutable table
    """
    if max_degree < 0:
        raise SpectralError(f"max_degree must be nonnegative, got {max_degree}")
    symbol_class = symbol_class or classify_by_sampling(a)
    layout = layout or layout_for(symbol_class)
    order = order or default_order(max_degree)
    sigma = default_odd_permutation(w.n) if w.n >= 2 else None

    orbits = enumerate_canonical(w.n, max_degree)
    keys = table_keys(orbits, layout)
    monomial = monomial_exponents(a) if closed_form else None
    engine = SpectralEngine(a, w, order) if monomial is None else None

    def evaluate(key: TableKey) -> Estimate:
        iota, branch = key
        m = sigma(iota) if branch == BRANCH_MINUS else iota
        if monomial is not None:
            coefficient, beta = monomial
            return Estimate(coefficient * gamma_monomial_closed(beta, m, w), 0.0, Method.CLOSED_FORM)
        return engine.gamma(m)

    logger.info(f"📊 Tabulating '{a.text}' ({symbol_class.value}) n={w.n}, alpha={w.alpha}, "
                f"max_degree={max_degree}: {len(keys)} evaluations over {len(orbits)} orbits")
    bar = tqdm(total=len(keys), desc='gamma', unit='entry', disable=not progress, leave=False)
    results: List[Optional[Estimate]] = [None] * len(keys)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for k, estimate in enumerate(pool.map(evaluate, keys)):
                results[k] = estimate
                bar.update()
    else:
        for k, key in enumerate(keys):
            results[k] = evaluate(key)
            bar.update()
    bar.close()

    return SpectralTable(weight=w, symbol_class=symbol_class, entries=dict(zip(keys, results)),
                         max_degree=max_degree, layout=layout, symbol_text=a.text, order=order,
                         odd_permutation=sigma, orbits=tuple(orbits))


def expand_table(table: SpectralTable) -> Dict[MultiIndex, float]:
    """gamma(m) for every m with |m| <= max_degree: the full diagonal of R T_a R*."""
    return {m: table.gamma_of(m) for m in all_indices(table.n, table.max_degree)}


def expanded_frame(table: SpectralTable) -> pd.DataFrame:
    rows = []
    for m in all_indices(table.n, table.max_degree):
        iota, branch = table.key_for(m)
        row = {f"m{k}": v for k, v in enumerate(m, 1)}
        row.update({'degree': degree(m), 'canonical': ' '.join(map(str, iota)), 'branch': branch,
                    'gamma': table.entries[(iota, branch)].value})
        rows.append(row)
    return pd.DataFrame(rows)


def apply_multiplier(table: SpectralTable, c: CoefficientSequence) -> CoefficientSequence:
    """(R T_a R* c)_m = gamma(m) c_m for every m in the support of c."""
    result = {}
    for m, value in c.items():
        m = validate_multi_index(m)
        if degree(m) > table.max_degree:
            raise SpectralError(f"Coefficient at {m} exceeds the table degree {table.max_degree}")
        result[m] = table.gamma_of(m) * complex(value)
    return result


@dataclass(frozen=True)
class Block:
    """One scalar block gamma * I on l^2 of an index set."""
    canonical: MultiIndex
    branch: str
    indices: Tuple[MultiIndex, ...]
    gamma: float
    error_bound: float

    @property
    def multiplicity(self) -> int:
        return len(self.indices)


def block_structure(table: SpectralTable) -> List[Block]:
    """Decomposition of l^2(Z_+^n) (truncated) into blocks on which R T_a R* is scalar."""
    blocks = []
    for key in table.sorted_keys():
        iota, branch = key
        orbit = orbit_of(iota)
        indices = orbit.elements if branch == BRANCH_WHOLE else orbit.branches()[branch]
        estimate = table.entries[key]
        blocks.append(Block(iota, branch, indices, estimate.value, estimate.error_bound))
    return blocks


def blocks_frame(blocks: Sequence[Block]) -> pd.DataFrame:
    return pd.DataFrame([{
        'canonical': ' '.join(map(str, b.canonical)),
        'degree': degree(b.canonical),
        'branch': b.branch,
        'multiplicity': b.multiplicity,
        'gamma': b.gamma,
        'error_bound': b.error_bound,
        'indices': ';'.join(' '.join(map(str, m)) for m in b.indices),
    } for b in blocks])


# ---------------------------------------------------------------------------
# a = a+ + a-
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Decomposition:
    """Tables of a, a+ and a- on the split layout, with the additivity residual per entry."""
    table: SpectralTable
    plus_table: SpectralTable
    minus_table: SpectralTable
    a_plus: SymbolExpr
    a_minus: SymbolExpr

    def residuals(self) -> Dict[TableKey, float]:
        return {key: self.table.entries[key].value
                - (self.plus_table.entries[key].value + self.minus_table.entries[key].value)
                for key in self.table.entries}

    @property
    def max_residual(self) -> float:
        return max((abs(r) for r in self.residuals().values()), default=0.0)

    def to_frame(self) -> pd.DataFrame:
        residuals = self.residuals()
        frames = []
        for part, table in (('a_plus', self.plus_table), ('a_minus', self.minus_table)):
            frame = table.to_frame()
            frame.insert(0, 'part', part)
            frame['additivity_residual'] = [residuals[key] for key in table.sorted_keys()]
            frames.append(frame)
        return pd.concat(frames, ignore_index=True)


def decompose_tables(a: SymbolExpr, w: WeightParam, max_degree: int, order: Optional[int] = None,
                     symbol_class: Optional[SymbolClass] = None, workers: int = 1,
                     progress: bool = False) -> Decomposition:
    """
    Spectral tables of a+ = (a + a_sigma)/2 and a- = (a - a_sigma)/2 next to the table of a.

    All three use the split layout so entries line up key by key; a+ is
    symmetric and a- anti-symmetric by construction.
    """
    symbol_class = symbol_class or classify_by_sampling(a)
    if not symbol_class.is_alternating:
        raise SymbolClassError(f"'{a.text}' is {symbol_class.value}; the decomposition needs an alternating symbol")
    a_plus, a_minus = symmetrize_pair(a)
    common = dict(w=w, max_degree=max_degree, order=order, layout=LAYOUT_SPLIT, workers=workers, progress=progress)
    table = build_table(a, symbol_class=symbol_class, **common)
    plus_table = build_table(a_plus, symbol_class=SymbolClass.SYMMETRIC, **common)
    minus_table = build_table(a_minus, symbol_class=SymbolClass.ANTISYMMETRIC, **common)
    return Decomposition(table, plus_table, minus_table, a_plus, a_minus)


def closed_form_table_check(table: SpectralTable, beta: Sequence[int], coefficient: float = 1.0) -> float:
    """Worst |gamma - c * gamma_closed(beta)| over the entries of a monomial symbol's table."""
    worst = 0.0
    for key, estimate in table.entries.items():
        m = table.representative(key)
        worst = max(worst, abs(estimate.value - coefficient * gamma_monomial_closed(beta, m, table.weight)))
    return worst


def normalization_residual(m: Sequence[int], w: WeightParam) -> float:
    """|Q(m) * Dirichlet(m, alpha) / 2^n - 1|: the closed-form statement gamma_1 = 1, in log space."""
    m = validate_multi_index(m)
    log_value = _log_gamma_scale(m, w) + log_dirichlet_closed(m, w.alpha)
    return abs(math.expm1(log_value))
