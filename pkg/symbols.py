"""
Separately radial symbols a(r_1, ..., r_n)

A small expression language for symbols of Toeplitz operators that depend on
z only through (|z_1|, ..., |z_n|):

    expr   := term (('+'|'-') term)*
    term   := unary (('*'|'/') unary)*
    unary  := ('-'|'+') unary | factor
    factor := base ('^' integer)?
    base   := number | 'r' index | macro | func '(' expr ')' | '(' expr ')'
    macro  := 'S' | 'E' index | 'V'
    func   := 'sin' | 'cos' | 'exp' | 'abs' | 'sign' | 'sqrt'

Macros: S = sum r_k^2, Ek = k-th elementary symmetric polynomial of
(r_1^2, ..., r_n^2), V = prod_{i<j} (r_i^2 - r_j^2).

Parsed symbols are immutable, evaluate vectorised over numpy arrays and are
classified (radial / symmetric / anti-symmetric / alternating / separately
radial only) by sampling invariance under permutations of the coordinates.
"""

import logging
import re
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from multiindex import (Permutation, all_permutations, default_odd_permutation,
                        even_permutations, generators)

logger = logging.getLogger(__name__)

FUNCTIONS = {
    'sin': np.sin,
    'cos': np.cos,
    'exp': np.exp,
    'abs': np.abs,
    'sign': np.sign,
    'sqrt': np.sqrt,
}

DEFAULT_SAMPLES = 256
DEFAULT_TOL = 1e-9
MIN_SAMPLES = 100
FULL_GROUP_MAX_N = 6


class SymbolSyntaxError(ValueError):
    """Malformed symbol text; ``position`` is the 0-based offset of the problem."""

    def __init__(self, message: str, position: int, text: str = ''):
        self.position = position
        self.text = text
        pointer = f"\n  {text}\n  {' ' * position}^" if text else ''
        super().__init__(f"{message} at position {position}{pointer}")


class SymbolDomainError(ValueError):
    """A symbol could not be evaluated (division by zero, sqrt of a negative, overflow)."""

    def __init__(self, message: str, subexpression: str):
        self.subexpression = subexpression
        super().__init__(f"{message} in '{subexpression}'")


class SymbolClassError(ValueError):
    """A symbol does not belong to the class an operation requires."""


class SymbolClass(str, Enum):
    RADIAL = 'Radial'
    SYMMETRIC = 'SymmetricSepRadial'
    ANTISYMMETRIC = 'AntiSymmetricSepRadial'
    ALTERNATING = 'AlternatingSepRadial'
    SEP_RADIAL = 'SepRadialOnly'

    @property
    def is_symmetric(self) -> bool:
        return self in (SymbolClass.RADIAL, SymbolClass.SYMMETRIC)

    @property
    def is_alternating(self) -> bool:
        return self is not SymbolClass.SEP_RADIAL

    def satisfies(self, other: 'SymbolClass') -> bool:
        """True when every symbol of this class also belongs to ``other``."""
        if other is SymbolClass.SEP_RADIAL:
            return True
        if other is SymbolClass.ALTERNATING:
            return self.is_alternating
        if other is SymbolClass.SYMMETRIC:
            return self.is_symmetric
        if other is SymbolClass.ANTISYMMETRIC:
            return self is SymbolClass.ANTISYMMETRIC
        return self is SymbolClass.RADIAL


# ---------------------------------------------------------------------------
# Syntax tree
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Macro:
    name: str
    index: int = 0


@dataclass(frozen=True)
class Neg:
    operand: 'Node'


@dataclass(frozen=True)
class BinOp:
    op: str
    left: 'Node'
    right: 'Node'


@dataclass(frozen=True)
class Pow:
    base: 'Node'
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: 'Node'


Node = Union[Num, Var, Macro, Neg, BinOp, Pow, Call]


def _format(node: Node, top: bool = False) -> str:
    if isinstance(node, Num):
        return repr(float(node.value)) if node.value >= 0 else f"(-{repr(-float(node.value))})"
    if isinstance(node, Var):
        return f"r{node.index}"
    if isinstance(node, Macro):
        return f"E{node.index}" if node.name == 'E' else node.name
    if isinstance(node, Neg):
        inner = _format(node.operand)
        return f"-({inner})" if isinstance(node.operand, Neg) else f"-{inner}"
    if isinstance(node, BinOp):
        text = f"{_format(node.left)} {node.op} {_format(node.right)}"
        return text if top else f"({text})"
    if isinstance(node, Pow):
        base = _format(node.base)
        if isinstance(node.base, (Neg, Pow)):
            base = f"({base})"
        return f"{base}^{node.exponent}"
    if isinstance(node, Call):
        return f"{node.func}({_format(node.arg, top=True)})"
    raise TypeError(f"Unknown node {node!r}")


# ---------------------------------------------------------------------------
# Tokenizer and parser
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<space>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_]+\d*)
  | (?P<op>[-+*/^()])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    position: int


def tokenize(text: str) -> List[Token]:
    tokens = []
    position = 0
    while position < len(text):
        match = _TOKEN.match(text, position)
        if match is None:
            raise SymbolSyntaxError(f"Unexpected character {text[position]!r}", position, text)
        if match.lastgroup != 'space':
            tokens.append(Token(match.lastgroup, match.group(), position))
        position = match.end()
    tokens.append(Token('end', '', len(text)))
    return tokens


class _Parser:
    """Recursive-descent parser over the token list, one method per grammar rule."""

    def __init__(self, text: str, n: int):
        self.text = text
        self.n = n
        self.tokens = tokenize(text)
        self.pos = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def _error(self, message: str, token: Optional[Token] = None) -> SymbolSyntaxError:
        token = token or self.current
        return SymbolSyntaxError(message, token.position, self.text)

    def _accept(self, *ops: str) -> Optional[Token]:
        token = self.current
        if token.kind == 'op' and token.text in ops:
            self.pos += 1
            return token
        return None

    def _expect(self, op: str) -> Token:
        token = self._accept(op)
        if token is None:
            found = self.current.text or 'end of input'
            raise self._error(f"Expected '{op}' but found '{found}'")
        return token

    def parse(self) -> Node:
        if self.current.kind == 'end':
            raise self._error("Empty symbol")
        node = self.expr()
        if self.current.kind != 'end':
            raise self._error(f"Unexpected '{self.current.text}'")
        return node

    def expr(self) -> Node:
        node = self.term()
        while True:
            token = self._accept('+', '-')
            if token is None:
                return node
            node = BinOp(token.text, node, self.term())

    def term(self) -> Node:
        node = self.unary()
        while True:
            token = self._accept('*', '/')
            if token is None:
                return node
            node = BinOp(token.text, node, self.unary())

    def unary(self) -> Node:
        if self._accept('-'):
            return Neg(self.unary())
        if self._accept('+'):
            return self.unary()
        return self.factor()

    def factor(self) -> Node:
        node = self.base()
        if self._accept('^'):
            sign = -1 if self._accept('-') else 1
            if sign == 1:
                self._accept('+')
            token = self.current
            if token.kind != 'number' or not token.text.isdigit():
                raise self._error("Exponent must be an integer")
            self.pos += 1
            node = Pow(node, sign * int(token.text))
        return node

    def base(self) -> Node:
        token = self.current
        if token.kind == 'number':
            value = float(token.text)
            if not np.isfinite(value):
                raise self._error(f"Number '{token.text}' is not a finite float")
            self.pos += 1
            return Num(value)
        if token.kind == 'name':
            self.pos += 1
            return self._name(token)
        if self._accept('('):
            node = self.expr()
            self._expect(')')
            return node
        found = token.text or 'end of input'
        raise self._error(f"Expected a number, variable, macro or '(' but found '{found}'")

    def _index(self, token: Token, prefix: str) -> int:
        digits = token.text[len(prefix):]
        if not digits:
            raise self._error(f"'{prefix}' needs a 1-based index", token)
        index = int(digits)
        if not 1 <= index <= self.n:
            raise self._error(f"Unknown variable '{token.text}' for n={self.n}", token)
        return index

    def _name(self, token: Token) -> Node:
        name = token.text
        if name in FUNCTIONS:
            self._expect('(')
            arg = self.expr()
            self._expect(')')
            return Call(name, arg)
        if name in ('S', 'V'):
            return Macro(name)
        if re.fullmatch(r'E\d*', name):
            return Macro('E', self._index(token, 'E'))
        if re.fullmatch(r'r\d*', name):
            return Var(self._index(token, 'r'))
        raise self._error(f"Unknown name '{name}'", token)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _elementary(squares: np.ndarray, k: int) -> np.ndarray:
    """k-th elementary symmetric polynomial of the columns of ``squares``."""
    e = [np.ones(squares.shape[0])] + [np.zeros(squares.shape[0]) for _ in range(k)]
    for column in squares.T:
        for j in range(k, 0, -1):
            e[j] = e[j] + column * e[j - 1]
    return e[k]


def _vandermonde(squares: np.ndarray) -> np.ndarray:
    result = np.ones(squares.shape[0])
    n = squares.shape[1]
    for i in range(n):
        for j in range(i + 1, n):
            result = result * (squares[:, i] - squares[:, j])
    return result


def _eval(node: Node, r: np.ndarray) -> np.ndarray:
    if isinstance(node, Num):
        return np.full(r.shape[0], node.value)
    if isinstance(node, Var):
        return r[:, node.index - 1]
    try:
        if isinstance(node, Macro):
            squares = r * r
            if node.name == 'S':
                return squares.sum(axis=1)
            if node.name == 'E':
                return _elementary(squares, node.index)
            return _vandermonde(squares)
        if isinstance(node, Neg):
            return -_eval(node.operand, r)
        if isinstance(node, BinOp):
            left, right = _eval(node.left, r), _eval(node.right, r)
            if node.op == '+':
                return left + right
            if node.op == '-':
                return left - right
            if node.op == '*':
                return left * right
            return left / right
        if isinstance(node, Pow):
            base = _eval(node.base, r)
            if node.exponent < 0:
                return 1.0 / base ** (-node.exponent)
            return base ** node.exponent
        if isinstance(node, Call):
            return FUNCTIONS[node.func](_eval(node.arg, r))
    except FloatingPointError as e:
        raise SymbolDomainError(f"Cannot evaluate ({e})", _format(node, top=True)) from e
    raise TypeError(f"Unknown node {node!r}")


@dataclass(frozen=True)
class SymbolExpr:
    """
    A parsed separately radial symbol.

    Calling the object evaluates it: a (k, n) array of radius vectors gives k
    values, a single length-n point gives a float.
    """
    ast: Node
    n: int

    @property
    def text(self) -> str:
        return format_symbol(self)

    def evaluate(self, r: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(r, dtype=float))
        if points.shape[1] != self.n:
            raise SymbolDomainError(f"Expected points with {self.n} coordinates, got {points.shape[1]}", self.text)
        with np.errstate(divide='raise', invalid='raise', over='raise'):
            values = _eval(self.ast, points)
        return np.broadcast_to(values, (points.shape[0],))

    def __call__(self, r):
        values = self.evaluate(r)
        return float(values[0]) if np.ndim(r) == 1 else values

    def __str__(self) -> str:
        return self.text


def parse_symbol(text: str, n: int) -> SymbolExpr:
    """
    Parse symbol text for dimension n.

    Args:
        text (str): Symbol in the grammar above, e.g. "r1^2*r2^2"
        n (int): Dimension; variables r_k and macros E_k need k <= n

    Returns:
        SymbolExpr: The immutable parsed symbol
    """
    if n < 1:
        raise SymbolSyntaxError(f"Dimension must be positive, got {n}", 0, text)
    return SymbolExpr(_Parser(text, n).parse(), n)


def format_symbol(a: SymbolExpr) -> str:
    """Canonical text; parse_symbol(format_symbol(a), a.n) == a."""
    return _format(a.ast, top=True)


def eval_symbol(a: SymbolExpr, r: Sequence[float]) -> float:
    """Value of a at a single point r of tau(B^n)."""
    return float(a.evaluate(np.asarray(r, dtype=float).reshape(1, -1))[0])


# ---------------------------------------------------------------------------
# Structure: permutation, monomials, radial profile
# ---------------------------------------------------------------------------

def _permute(node: Node, sigma: Permutation) -> Node:
    if isinstance(node, Var):
        return Var(sigma.images[node.index - 1] + 1)
    if isinstance(node, Macro):
        if node.name == 'V' and sigma.parity == -1:
            return Neg(node)
        return node
    if isinstance(node, Neg):
        return Neg(_permute(node.operand, sigma))
    if isinstance(node, BinOp):
        return BinOp(node.op, _permute(node.left, sigma), _permute(node.right, sigma))
    if isinstance(node, Pow):
        return Pow(_permute(node.base, sigma), node.exponent)
    if isinstance(node, Call):
        return Call(node.func, _permute(node.arg, sigma))
    return node


def permute_symbol(a: SymbolExpr, sigma: Permutation) -> SymbolExpr:
    """a_sigma with a_sigma(r) = a(sigma(r)); S and Ek are invariant, V picks up Sgn(sigma)."""
    if sigma.n != a.n:
        raise SymbolClassError(f"Permutation of {sigma.n} applied to a symbol in n={a.n}")
    return SymbolExpr(_permute(a.ast, sigma), a.n)


def _monomial(node: Node, n: int) -> Optional[Tuple[float, Tuple[int, ...]]]:
    zero = (0,) * n
    if isinstance(node, Num):
        return node.value, zero
    if isinstance(node, Macro) and node.name == 'E' and node.index == n:
        return 1.0, (1,) * n
    if isinstance(node, Pow) and node.exponent >= 0:
        if isinstance(node.base, Var) and node.exponent % 2 == 0:
            beta = [0] * n
            beta[node.base.index - 1] = node.exponent // 2
            return 1.0, tuple(beta)
        inner = _monomial(node.base, n)
        if inner is None:
            return None
        return inner[0] ** node.exponent, tuple(b * node.exponent for b in inner[1])
    if isinstance(node, Neg):
        inner = _monomial(node.operand, n)
        return None if inner is None else (-inner[0], inner[1])
    if isinstance(node, BinOp) and node.op == '*':
        left, right = _monomial(node.left, n), _monomial(node.right, n)
        if left is None or right is None:
            return None
        return left[0] * right[0], tuple(x + y for x, y in zip(left[1], right[1]))
    if isinstance(node, BinOp) and node.op == '/' and isinstance(node.right, Num) and node.right.value != 0:
        left = _monomial(node.left, n)
        return None if left is None else (left[0] / node.right.value, left[1])
    return None


def monomial_exponents(a: SymbolExpr) -> Optional[Tuple[float, Tuple[int, ...]]]:
    """(c, beta) when a = c * prod r_k^(2 beta_k), otherwise None."""
    return _monomial(a.ast, a.n)


def radial_profile(a: SymbolExpr) -> Callable[[np.ndarray], np.ndarray]:
    """rho -> a(rho, 0, ..., 0); equals a on |r| = rho when a is radial."""
    def profile(rho):
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        points = np.zeros((rho.shape[0], a.n))
        points[:, 0] = rho
        return a.evaluate(points)
    return profile


# ---------------------------------------------------------------------------
# Classification and symmetrisation
# ---------------------------------------------------------------------------

def sample_tau(n: int, samples: int, seed: int) -> np.ndarray:
    """Points of tau(B^n): square roots of uniform points of the (n+1)-part simplex."""
    rng = np.random.default_rng(seed)
    u = rng.dirichlet(np.ones(n + 1), size=samples)[:, :n]
    return np.sqrt(u)


def _test_permutations(n: int) -> Tuple[List[Permutation], List[Permutation]]:
    """(S_n test set, A_n test set): whole groups for small n, generators otherwise."""
    if n <= FULL_GROUP_MAX_N:
        return all_permutations(n), even_permutations(n)
    full = generators(n)
    alternating = [Permutation.cycle(n, 1, 2, k) for k in range(3, n + 1)]
    return full, alternating


def _max_deviation(a: SymbolExpr, points: np.ndarray, values: np.ndarray,
                   perms: Sequence[Permutation], signed: bool) -> Tuple[float, Optional[np.ndarray]]:
    worst, witness = 0.0, None
    for sigma in perms:
        moved = points[:, list(sigma.images)]
        target = values * sigma.parity if signed else values
        deviation = np.abs(a.evaluate(moved) - target)
        k = int(np.argmax(deviation))
        if deviation[k] > worst:
            worst, witness = float(deviation[k]), points[k]
    return worst, witness


def classify_by_sampling(a: SymbolExpr, samples: int = DEFAULT_SAMPLES, seed: int = 0,
                         tol: float = DEFAULT_TOL) -> SymbolClass:
    """
    Most specific invariance class of a, certified on sampled points.

    A sampling certificate, not a proof: the symbol passes a test when the
    deviation stays within tol * max(1, max|a|) on every sampled point.
    """
    if samples < MIN_SAMPLES:
        raise SymbolClassError(f"Classification needs at least {MIN_SAMPLES} samples, got {samples}")
    points = sample_tau(a.n, samples, seed)
    values = a.evaluate(points)
    threshold = tol * max(1.0, float(np.max(np.abs(values))))
    full, alternating = _test_permutations(a.n)

    symmetric = _max_deviation(a, points, values, full, signed=False)[0] <= threshold
    if symmetric:
        rng = np.random.default_rng(seed + 1)
        directions = np.sqrt(rng.dirichlet(np.ones(a.n), size=samples))
        norms = np.linalg.norm(points, axis=1, keepdims=True)
        radial = float(np.max(np.abs(a.evaluate(norms * directions) - values))) <= threshold
        symbol_class = SymbolClass.RADIAL if radial else SymbolClass.SYMMETRIC
    elif _max_deviation(a, points, values, full, signed=True)[0] <= threshold:
        symbol_class = SymbolClass.ANTISYMMETRIC
    elif _max_deviation(a, points, values, alternating, signed=False)[0] <= threshold:
        symbol_class = SymbolClass.ALTERNATING
    else:
        symbol_class = SymbolClass.SEP_RADIAL
    logger.debug(f"Classified '{a.text}' (n={a.n}) as {symbol_class.value}")
    return symbol_class


def symmetrize_pair(a: SymbolExpr, sigma: Optional[Permutation] = None,
                    samples: int = DEFAULT_SAMPLES, seed: int = 0,
                    tol: float = DEFAULT_TOL) -> Tuple[SymbolExpr, SymbolExpr]:
    """
    Split an alternating symbol into a+ = (a + a_sigma)/2 and a- = (a - a_sigma)/2.

    Args:
        a (SymbolExpr): Alternating separately radial symbol
        sigma (Permutation, optional): Odd permutation, default swap of coordinates 1 and 2

    Returns:
        Tuple[SymbolExpr, SymbolExpr]: (a_plus, a_minus); a_plus is symmetric, a_minus anti-symmetric
    """
    if sigma is None:
        if a.n < 2:
            raise SymbolClassError("Decomposition needs n >= 2: there is no odd permutation of one coordinate")
        sigma = default_odd_permutation(a.n)
    if sigma.parity != -1:
        raise SymbolClassError(f"Decomposition needs an odd permutation, got {sigma}")
    points = sample_tau(a.n, samples, seed)
    values = a.evaluate(points)
    threshold = tol * max(1.0, float(np.max(np.abs(values))))
    deviation, witness = _max_deviation(a, points, values, _test_permutations(a.n)[1], signed=False)
    if deviation > threshold:
        raise SymbolClassError(
            f"'{a.text}' is not alternating: deviation {deviation:.3e} under an even permutation "
            f"at r={np.array2string(witness, precision=6)}")

    a_sigma = permute_symbol(a, sigma).ast
    a_plus = BinOp('/', BinOp('+', a.ast, a_sigma), Num(2.0))
    a_minus = BinOp('/', BinOp('-', a.ast, a_sigma), Num(2.0))
    return SymbolExpr(a_plus, a.n), SymbolExpr(a_minus, a.n)


# ---------------------------------------------------------------------------
# Built-in library
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LibrarySymbol:
    name: str
    text: str
    expected: SymbolClass
    roles: Tuple[str, ...] = ()

    def parse(self, n: int) -> SymbolExpr:
        return parse_symbol(self.text, n)


def builtin_library(n: int) -> List[LibrarySymbol]:
    """
    Reference symbols for dimension n with their expected classes.

    Roles tag what each entry is used for: 'radial', 'symmetric',
    'antisymmetric', 'alternating', 'example1', and 'chain' for the witnesses
    of the inclusions A_U(n) < A_Sn < A_An < A_Tn.
    """
    library = [
        LibrarySymbol('unit', '1', SymbolClass.RADIAL, ('radial', 'symmetric')),
        LibrarySymbol('radial_square', 'S', SymbolClass.RADIAL, ('radial', 'symmetric', 'chain')),
        LibrarySymbol('radial_gaussian', 'exp(-S)', SymbolClass.RADIAL, ('radial', 'symmetric')),
    ]
    if n >= 2:
        library += [
            LibrarySymbol('product_squares', f'E{n}', SymbolClass.SYMMETRIC, ('symmetric', 'example1', 'chain')),
            LibrarySymbol('symmetric_mix', 'E2 + 0.5*S', SymbolClass.SYMMETRIC, ('symmetric',)),
            LibrarySymbol('odd_of_antisymmetric', 'sin(V)', SymbolClass.ANTISYMMETRIC, ('antisymmetric', 'alternating')),
            LibrarySymbol('antisymmetric_polynomial', 'V*E1', SymbolClass.ANTISYMMETRIC, ('antisymmetric', 'alternating')),
            LibrarySymbol('alternating_mix', 'sin(V) + E2', SymbolClass.ALTERNATING, ('alternating',)),
            LibrarySymbol('alternating_exp', 'exp(V)', SymbolClass.ALTERNATING, ('alternating', 'chain')),
        ]
    if n == 1:
        first = SymbolClass.RADIAL
    elif n == 2:
        first = SymbolClass.ALTERNATING
    else:
        first = SymbolClass.SEP_RADIAL
    library.append(LibrarySymbol('first_coordinate', 'r1^2', first, ('chain',) if n >= 3 else ()))
    return library


def library_symbols(n: int, role: str) -> List[LibrarySymbol]:
    return [entry for entry in builtin_library(n) if role in entry.roles]
