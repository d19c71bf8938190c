"""
Theorem-level checks for spectral tables

Independent oracles for the block structure of Toeplitz operators with
group-invariant separately radial symbols. Every check produces a CheckReport
whose residual is compared against a tolerance widened by the quadrature
error estimates of the values involved.

Features:
- permutation representation matrices on monomial bases
- intertwining residuals of the diagonal against S_n or A_n
- three-channel cross-validation (closed form, tensor rule, Monte Carlo)
- the theorem suite over the built-in symbol library with fault injection
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from multiindex import (BRANCH_MINUS, BRANCH_PLUS, MultiIndex, MultiIndexError,
                        OrbitClass, Permutation, all_indices, all_permutations, degree,
                        even_permutations, generators, orbit_of)
from spectral import (SpectralEngine, SpectralError, SpectralTable, build_table,
                      decompose_tables, default_order, expand_table, gamma_mc,
                      gamma_monomial_closed, gamma_point, gamma_radial, normalization_residual)
from specfun import WeightParam
from symbols import (LibrarySymbol, SymbolClass, SymbolExpr, builtin_library, classify_by_sampling,
                     library_symbols, monomial_exponents, parse_symbol, radial_profile)

logger = logging.getLogger(__name__)

GROUP_SYMMETRIC = 'symmetric'
GROUP_ALTERNATING = 'alternating'
FULL_GROUP_MAX_N = 5

FAULT_OFFSET = 1e-2
FAULT_NAMES = ('orbit', 'branch', 'zero', 'sign', 'additivity', 'radial',
               'normalization', 'monomial', 'intertwining')

DEFAULT_MC_SAMPLES = 100_000
MC_COVERAGE_SEEDS = 20
# at most one miss in 20 seeds
MC_MISS_TOLERANCE = 0.05


class VerificationError(ValueError):
    """Raised for unknown groups, unknown fault names and out-of-range suite parameters."""


@dataclass(frozen=True)
class CheckReport:
    """
    Outcome of one check.

    ``tol`` is the effective tolerance (requested tol plus the error bounds of
    the compared values); ``passed`` is always ``residual <= tol``.
    """
    name: str
    params: Dict[str, object]
    residual: float
    tol: float
    witness: Optional[str] = None
    passed: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, 'passed', bool(self.residual <= self.tol))

    def to_dict(self) -> Dict:
        record = {'name': self.name, **self.params, 'residual': self.residual, 'tol': self.tol,
                  'passed': self.passed, 'witness': self.witness or ''}
        return record


def reports_frame(reports: Sequence[CheckReport]) -> pd.DataFrame:
    return pd.DataFrame([report.to_dict() for report in reports])


def _params(w: WeightParam, max_degree: int, seed: int, tol: float) -> Dict[str, object]:
    return {'n': w.n, 'alpha': w.alpha, 'max_degree': max_degree, 'seed': seed, 'tol': tol}


@dataclass
class _Comparison:
    """value vs reference at a witness, with the error bound both carry."""
    witness: str
    value: float
    reference: float
    bound: float = 0.0


def _compare(name: str, params: Dict, comparisons: List[_Comparison], tol: float,
             fault: Optional[str] = None) -> CheckReport:
    """Worst |value - reference| over the comparisons; the named fault offsets the first value."""
    if fault == name and comparisons:
        comparisons[0].value += FAULT_OFFSET
        logger.warning(f"⚠️ Injected fault into check '{name}' at {comparisons[0].witness}")
    residual, witness, bound = 0.0, None, 0.0
    for c in comparisons:
        deviation = abs(c.value - c.reference)
        bound = max(bound, c.bound)
        if deviation > residual:
            residual, witness = deviation, f"{c.witness}: {c.value!r} vs {c.reference!r}"
    failed = residual > tol + bound
    return CheckReport(name, params, residual, tol + bound, witness if failed else None)


# ---------------------------------------------------------------------------
# Permutation representation and intertwining
# ---------------------------------------------------------------------------

def _permutation_indices(sigma: Permutation, basis: Sequence[MultiIndex]) -> np.ndarray:
    """rows[j] = position of sigma(basis[j]) in the basis."""
    position = {m: k for k, m in enumerate(basis)}
    try:
        return np.array([position[sigma(m)] for m in basis], dtype=int)
    except KeyError as exc:
        raise MultiIndexError(f"Basis is not closed under {sigma}: {exc.args[0]} is missing") from exc


def permutation_matrix(sigma: Permutation, basis: Sequence[MultiIndex]) -> np.ndarray:
    """
    0/1 matrix of sigma on span{z^m : m in basis}.

    P[index of sigma(m), index of m] = 1, so P(sigma o tau) = P(sigma) P(tau).
    """
    basis = [tuple(m) for m in basis]
    rows = _permutation_indices(sigma, basis)
    matrix = np.zeros((len(basis), len(basis)), dtype=int)
    matrix[rows, np.arange(len(basis))] = 1
    return matrix


def group_elements(n: int, group: str) -> List[Permutation]:
    """Elements tested for a group: all of them for n <= 5, generators beyond."""
    if group == GROUP_SYMMETRIC:
        return all_permutations(n) if n <= FULL_GROUP_MAX_N else generators(n)
    if group == GROUP_ALTERNATING:
        if n <= FULL_GROUP_MAX_N:
            return even_permutations(n)
        return [Permutation.cycle(n, 1, 2, k) for k in range(3, n + 1)]
    raise VerificationError(f"Unknown group '{group}', expected '{GROUP_SYMMETRIC}' or '{GROUP_ALTERNATING}'")


def intertwining_residual(table: SpectralTable, group: str, max_degree: Optional[int] = None,
                          tol: float = 1e-9, seed: int = 0,
                          perturb: Optional[MultiIndex] = None) -> CheckReport:
    """
    max over sigma in the group of max |D P(sigma) - P(sigma) D| for D = diag(gamma).

    Args:
        table (SpectralTable): Table to expand into the diagonal
        group (str): 'symmetric' (S_n) or 'alternating' (A_n)
        max_degree (int, optional): Basis cut-off, at most the table's
        perturb (MultiIndex, optional): Offset gamma at this single index (negative control)
    """
    max_degree = table.max_degree if max_degree is None else max_degree
    if max_degree > table.max_degree:
        raise SpectralError(f"Table covers degree {table.max_degree}, asked for {max_degree}")
    diagonal = {m: g for m, g in expand_table(table).items() if degree(m) <= max_degree}
    if perturb is not None:
        diagonal[tuple(perturb)] += FAULT_OFFSET
    basis = list(diagonal)
    gamma = np.array([diagonal[m] for m in basis])

    residual, witness = 0.0, None
    for sigma in group_elements(table.n, group):
        rows = _permutation_indices(sigma, basis)
        # (D P - P D)[rows[j], j] = gamma[rows[j]] - gamma[j]
        deviation = np.abs(gamma[rows] - gamma)
        j = int(np.argmax(deviation))
        if deviation[j] > residual:
            residual = float(deviation[j])
            witness = f"sigma={sigma}: gamma{basis[rows[j]]} != gamma{basis[j]}"
    bound = max((e.error_bound for e in table.entries.values()), default=0.0)
    params = _params(table.weight, max_degree, seed, tol)
    effective = tol + 2 * bound
    return CheckReport(f"intertwining_{group}", params, residual, effective,
                       witness if residual > effective else None)


# ---------------------------------------------------------------------------
# Cross-validation and standalone checks
# ---------------------------------------------------------------------------

def crossvalidate_gamma(a: SymbolExpr, m: Sequence[int], w: WeightParam, seed: int = 0,
                        samples: int = DEFAULT_MC_SAMPLES, order: Optional[int] = None,
                        tol: float = 1e-9) -> CheckReport:
    """
    Agreement of gamma_a(m) across the closed form (monomial symbols only),
    the tensor rule and Monte Carlo.

    The residual is the worst excess of a pairwise difference over the sum
    of the two error bounds.
    """
    m = tuple(m)
    channels: List[Tuple[str, float, float]] = []
    monomial = monomial_exponents(a)
    if monomial is not None:
        coefficient, beta = monomial
        channels.append(('closed_form', coefficient * gamma_monomial_closed(beta, m, w), 0.0))
    tensor = gamma_point(a, m, w, order)
    channels.append(('tensor_rule', tensor.value, tensor.error_bound))
    mc = gamma_mc(a, m, w, samples, seed)
    channels.append(('monte_carlo', mc.value, mc.error_bound))

    residual, witness = 0.0, None
    for i in range(len(channels)):
        for j in range(i + 1, len(channels)):
            (name_i, v_i, e_i), (name_j, v_j, e_j) = channels[i], channels[j]
            excess = abs(v_i - v_j) - (e_i + e_j)
            if excess > residual:
                residual, witness = excess, f"m={m}: {name_i}={v_i!r} vs {name_j}={v_j!r}"
    params = {'n': w.n, 'alpha': w.alpha, 'max_degree': degree(m), 'seed': seed, 'tol': tol}
    report = CheckReport('crossvalidation', params, residual, tol, witness)
    logger.debug(f"Cross-validation of '{a.text}' at {m}: " + ', '.join(f"{c[0]}={c[1]:.12g}" for c in channels))
    return report


def class_chain_check(n: int, samples: int = 256, seed: int = 0) -> CheckReport:
    """Classify every library symbol and count the ones that land outside their expected class."""
    mismatches = []
    for entry in builtin_library(n):
        found = classify_by_sampling(entry.parse(n), samples=samples, seed=seed)
        if found is not entry.expected:
            mismatches.append(f"{entry.name}: expected {entry.expected.value}, got {found.value}")
    params = {'n': n, 'alpha': None, 'max_degree': None, 'seed': seed, 'tol': 0.0}
    return CheckReport('class_chain', params, float(len(mismatches)), 0.0,
                       '; '.join(mismatches) or None)


def example1_gamma(k: Sequence[int], alpha: float) -> float:
    """gamma of r1^2 r2^2 at k in n=2: (k1+1)(k2+1) / ((|k|+alpha+4)(|k|+alpha+3))."""
    k1, k2 = k
    total = k1 + k2 + alpha
    return (k1 + 1) * (k2 + 1) / ((total + 4) * (total + 3))


def example1_strictness(w: WeightParam, max_sum: int) -> CheckReport:
    """
    gamma(k1, k2) < gamma(k3, k3) whenever k1 > k2 and k1 + k2 = 2*k3 <= max_sum.

    The symbol r1^2 r2^2 separates indices that share the same degree, so
    T_a is not diagonal with respect to the radial decomposition alone.
    """
    if w.n != 2:
        raise VerificationError(f"Example-1 strictness is defined for n=2, got n={w.n}")
    violations = []
    for k3 in range(max_sum // 2 + 1):
        balanced = gamma_monomial_closed((1, 1), (k3, k3), w)
        for j in range(1, k3 + 1):
            k = (k3 + j, k3 - j)
            value = gamma_monomial_closed((1, 1), k, w)
            if not value < balanced:
                violations.append(f"gamma{k}={value!r} >= gamma{(k3, k3)}={balanced!r}")
    params = {'n': 2, 'alpha': w.alpha, 'max_degree': max_sum, 'seed': None, 'tol': 0.0}
    return CheckReport('example1_strictness', params, float(len(violations)), 0.0,
                       violations[0] if violations else None)


def mc_coverage(n: int, w: WeightParam, seeds: Iterable[int], samples: int = DEFAULT_MC_SAMPLES,
                m: Optional[Sequence[int]] = None) -> CheckReport:
    """Fraction of seeds whose Monte Carlo 3-sigma band misses the closed value of gamma_{En}(m)."""
    if n != w.n:
        raise VerificationError(f"Dimension {n} does not match the weight's n={w.n}")
    m = tuple(m) if m is not None else (1,) + (0,) * (n - 1)
    a = parse_symbol(f"E{n}", n)
    exact = gamma_monomial_closed((1,) * n, m, w)
    seeds = list(seeds)
    misses = []
    for seed in seeds:
        estimate = gamma_mc(a, m, w, samples, seed)
        if abs(estimate.value - exact) > estimate.error_bound:
            misses.append(f"seed={seed}: {estimate.value!r} +- {estimate.error_bound!r} vs {exact!r}")
    params = {'n': n, 'alpha': w.alpha, 'max_degree': degree(m), 'seed': seeds[0] if seeds else None,
              'tol': MC_MISS_TOLERANCE}
    return CheckReport('mc_coverage', params, len(misses) / max(len(seeds), 1), MC_MISS_TOLERANCE,
                       misses[0] if misses else None)


# ---------------------------------------------------------------------------
# Theorem suite
# ---------------------------------------------------------------------------

def _fmt(m: MultiIndex) -> str:
    return '(' + ','.join(map(str, m)) + ')'


class TheoremSuite:
    """
    Runs every check over the built-in symbol library for one (n, alpha, max_degree).

    Tables are built once per library symbol and shared between checks.
    """

    def __init__(self, w: WeightParam, max_degree: int, seed: int = 0, tol: float = 1e-9,
                 order: Optional[int] = None, mc_samples: int = DEFAULT_MC_SAMPLES,
                 inject_fault: Optional[str] = None, workers: int = 1, progress: bool = False):
        if inject_fault is not None and inject_fault not in FAULT_NAMES:
            raise VerificationError(f"Unknown fault '{inject_fault}', expected one of {', '.join(FAULT_NAMES)}")
        self.weight = w
        self.max_degree = max_degree
        self.seed = seed
        self.tol = tol
        self.order = order or default_order(max_degree)
        self.mc_samples = mc_samples
        self.fault = inject_fault
        self.workers = workers
        self.progress = progress
        self.params = _params(w, max_degree, seed, tol)
        self.library = [e for e in builtin_library(w.n) if e.expected is not SymbolClass.SEP_RADIAL]
        self._tables: Dict[str, SpectralTable] = {}
        self._engines: Dict[str, SpectralEngine] = {}

    @property
    def n(self) -> int:
        return self.weight.n

    def table(self, entry: LibrarySymbol) -> SpectralTable:
        if entry.name not in self._tables:
            self._tables[entry.name] = build_table(entry.parse(self.n), self.weight, self.max_degree,
                                                   order=self.order, symbol_class=entry.expected,
                                                   workers=self.workers, closed_form=False)
        return self._tables[entry.name]

    def engine(self, entry: LibrarySymbol) -> SpectralEngine:
        if entry.name not in self._engines:
            self._engines[entry.name] = SpectralEngine(entry.parse(self.n), self.weight, self.order)
        return self._engines[entry.name]

    def _role(self, role: str) -> List[LibrarySymbol]:
        return [e for e in library_symbols(self.n, role) if e.expected is not SymbolClass.SEP_RADIAL]

    def _compare(self, name: str, comparisons: List[_Comparison]) -> CheckReport:
        return _compare(name, self.params, comparisons, self.tol, self.fault)

    # Checks -----------------------------------------------------------------

    def check_normalization(self) -> CheckReport:
        """gamma_1 = 1 on every orbit, in closed form and through the tensor rule."""
        unit = next(e for e in self.library if e.name == 'unit')
        table = self.table(unit)
        comparisons = []
        for (iota, branch), estimate in table.entries.items():
            comparisons.append(_Comparison(f"unit at {_fmt(iota)}", estimate.value, 1.0, estimate.error_bound))
            comparisons.append(_Comparison(f"closed form at {_fmt(iota)}",
                                           1.0 + normalization_residual(iota, self.weight), 1.0))
        return self._compare('normalization', comparisons)

    def check_monomial(self) -> CheckReport:
        """Table of E_n = prod r_k^2 against the closed Gamma-ratio (and the Example-1 formula for n=2)."""
        a = parse_symbol(f"E{self.n}", self.n)
        table = build_table(a, self.weight, self.max_degree, order=self.order,
                            symbol_class=SymbolClass.RADIAL if self.n == 1 else SymbolClass.SYMMETRIC,
                            workers=self.workers, closed_form=False)
        beta = (1,) * self.n
        comparisons = []
        for key in table.sorted_keys():
            m = table.representative(key)
            estimate = table.entries[key]
            reference = (example1_gamma(m, self.weight.alpha) if self.n == 2
                         else gamma_monomial_closed(beta, m, self.weight))
            comparisons.append(_Comparison(f"E{self.n} at {_fmt(m)}", estimate.value, reference, estimate.error_bound))
        return self._compare('monomial', comparisons)

    def _constancy(self, name: str, entries: List[LibrarySymbol]) -> CheckReport:
        comparisons = []
        for entry in entries:
            table, engine = self.table(entry), self.engine(entry)
            for m in all_indices(self.n, self.max_degree):
                key = table.key_for(m)
                estimate, stored = engine.gamma(m), table.entries[key]
                comparisons.append(_Comparison(f"{entry.name} m={_fmt(m)} in {key[1]} block of {_fmt(key[0])}",
                                               estimate.value, stored.value,
                                               estimate.error_bound + stored.error_bound))
        return self._compare(name, comparisons)

    def check_orbit(self) -> CheckReport:
        """Symmetric symbols: gamma is constant on every orbit."""
        return self._constancy('orbit', self._role('symmetric'))

    def check_branch(self) -> CheckReport:
        """Alternating symbols: gamma is constant on the even and odd halves of each orbit."""
        return self._constancy('branch', self._role('alternating'))

    def check_zero(self) -> CheckReport:
        """Anti-symmetric symbols vanish on orbits with repeated entries."""
        comparisons = []
        for entry in self._role('antisymmetric'):
            for (iota, branch), estimate in self.table(entry).entries.items():
                if orbit_of(iota).orbit_class is OrbitClass.I0:
                    comparisons.append(_Comparison(f"{entry.name} at {_fmt(iota)}", estimate.value, 0.0,
                                                   estimate.error_bound))
        return self._compare('zero', comparisons)

    def check_sign(self) -> CheckReport:
        """Anti-symmetric symbols: gamma(sigma(iota)) = -gamma(iota) for odd sigma."""
        comparisons = []
        for entry in self._role('antisymmetric'):
            table = self.table(entry)
            for iota, branch in table.sorted_keys():
                if branch != BRANCH_PLUS:
                    continue
                plus, minus = table.entries[(iota, BRANCH_PLUS)], table.entries[(iota, BRANCH_MINUS)]
                comparisons.append(_Comparison(f"{entry.name} at {_fmt(iota)}", minus.value, -plus.value,
                                               plus.error_bound + minus.error_bound))
        return self._compare('sign', comparisons)

    def check_additivity(self) -> CheckReport:
        """gamma_a = gamma_{a+} + gamma_{a-} entrywise for alternating symbols."""
        comparisons = []
        for entry in self._role('alternating'):
            decomposition = decompose_tables(entry.parse(self.n), self.weight, self.max_degree,
                                             order=self.order, symbol_class=entry.expected,
                                             workers=self.workers)
            for key, estimate in decomposition.table.entries.items():
                plus, minus = decomposition.plus_table.entries[key], decomposition.minus_table.entries[key]
                comparisons.append(_Comparison(
                    f"{entry.name} at {_fmt(key[0])} {key[1]}", estimate.value, plus.value + minus.value,
                    estimate.error_bound + plus.error_bound + minus.error_bound))
        return self._compare('additivity', comparisons)

    def check_radial(self) -> CheckReport:
        """Radial symbols: the table matches the one-dimensional integral in |m|."""
        comparisons = []
        for entry in self._role('radial'):
            profile = radial_profile(entry.parse(self.n))
            for (iota, branch), estimate in self.table(entry).entries.items():
                radial = gamma_radial(profile, degree(iota), self.weight, order=self.order)
                comparisons.append(_Comparison(f"{entry.name} at {_fmt(iota)}", estimate.value, radial.value,
                                               estimate.error_bound + radial.error_bound))
        return self._compare('radial', comparisons)

    def check_intertwining(self) -> List[CheckReport]:
        """Diagonal commutes with P(sigma): S_n for symmetric symbols, A_n for alternating ones."""
        perturb = None
        if self.fault == 'intertwining':
            perturb = next((m for m in all_indices(self.n, self.max_degree) if orbit_of(m).size > 1), None)
            if perturb is None:
                logger.warning("⚠️ No orbit with more than one element: the intertwining fault has no effect")
            else:
                logger.warning(f"⚠️ Injected fault into check 'intertwining' at {perturb}")
        reports = []
        for group, role in ((GROUP_SYMMETRIC, 'symmetric'), (GROUP_ALTERNATING, 'alternating')):
            worst = None
            for entry in self._role(role):
                report = intertwining_residual(self.table(entry), group, self.max_degree, self.tol,
                                               self.seed, perturb=perturb)
                if worst is None or report.residual - report.tol > worst.residual - worst.tol:
                    worst = report
            if worst is not None:
                reports.append(worst)
        return reports

    def check_crossvalidation(self) -> CheckReport:
        """E_n at a low index through all three channels."""
        m = (3, 1) + (0,) * (self.n - 2) if self.n >= 2 else (3,)
        report = crossvalidate_gamma(parse_symbol(f"E{self.n}", self.n), m, self.weight, self.seed,
                                     self.mc_samples, self.order, self.tol)
        return CheckReport(report.name, self.params, report.residual, report.tol, report.witness)

    def run(self) -> List[CheckReport]:
        checks = [self.check_normalization, self.check_monomial, self.check_orbit, self.check_radial]
        if self.n >= 2:
            checks += [self.check_branch, self.check_zero, self.check_sign, self.check_additivity]
        checks += [self.check_intertwining, self.check_crossvalidation,
                   lambda: class_chain_check(self.n, seed=self.seed)]
        if self.n == 2:
            checks.append(lambda: example1_strictness(self.weight, self.max_degree))
        checks.append(lambda: mc_coverage(self.n, self.weight, range(self.seed, self.seed + MC_COVERAGE_SEEDS),
                                          self.mc_samples))
        if self.fault in ('branch', 'zero', 'sign', 'additivity') and self.n < 2:
            logger.warning(f"⚠️ Check '{self.fault}' does not run for n=1: the injected fault has no effect")

        reports: List[CheckReport] = []
        for check in tqdm(checks, desc='checks', unit='check', disable=not self.progress, leave=False):
            result = check()
            for report in (result if isinstance(result, list) else [result]):
                glyph = '✅' if report.passed else '❌'
                logger.info(f"{glyph} {report.name}: residual {report.residual:.3e} (tol {report.tol:.3e})")
                reports.append(report)
        return reports


def theorem_suite(n: int, w: WeightParam, max_degree: int, seed: int = 0, tol: float = 1e-9,
                  order: Optional[int] = None, mc_samples: int = DEFAULT_MC_SAMPLES,
                  inject_fault: Optional[str] = None, workers: int = 1,
                  progress: bool = False) -> List[CheckReport]:
    """
    Run every theorem-level check for one parameter set.

    Sized for n <= 4 and max_degree <= 10. Larger values are accepted and run
    the same checks (cmd_verify only warns): every check stays valid, the cost
    grows with the number of orbits and the n-dimensional rule. Permutation
    groups above n = 5 are tested through generators.

    Args:
        n (int): Dimension (must equal w.n)
        w (WeightParam): Weight parameter
        max_degree (int): Degree cut-off of every table
        seed (int): Seed for classification sampling and Monte Carlo
        tol (float): Base tolerance, widened per comparison by error bounds
        inject_fault (str, optional): Name of a check to corrupt (negative control)

    Returns:
        List[CheckReport]: One report per check, in a fixed order
    """
    if n != w.n:
        raise VerificationError(f"Dimension {n} does not match the weight's n={w.n}")
    if tol <= 0:
        raise VerificationError(f"tol must be positive, got {tol}")
    suite = TheoremSuite(w, max_degree, seed=seed, tol=tol, order=order, mc_samples=mc_samples,
                         inject_fault=inject_fault, workers=workers, progress=progress)
    return suite.run()
