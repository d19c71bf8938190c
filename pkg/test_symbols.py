#!/usr/bin/env python3
"""
Tests for the symbol language: parsing, evaluation, structure and classification.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multiindex import Permutation
from symbols import (SymbolClass, SymbolClassError, SymbolDomainError, SymbolSyntaxError, builtin_library,
                     classify_by_sampling, eval_symbol, format_symbol, library_symbols, monomial_exponents,
                     parse_symbol, permute_symbol, radial_profile, sample_tau, symmetrize_pair)


@pytest.mark.parametrize("text, n, point, expected", [
    ("r1^2*r2^2", 2, (0.5, 0.5), 0.0625),
    ("1", 3, (0.1, 0.2, 0.3), 1.0),
    ("S", 3, (0.1, 0.2, 0.3), 0.14),
    ("E2", 3, (0.1, 0.2, 0.3), 0.01 * 0.04 + 0.01 * 0.09 + 0.04 * 0.09),
    ("V", 2, (0.5, 0.1), 0.25 - 0.01),
    ("-r1^2 + 2*r2", 2, (0.5, 0.25), 0.25),
    ("exp(-S) / 2", 2, (0.0, 0.0), 0.5),
    ("r1^-2", 1, (0.5,), 4.0),
    ("sqrt(abs(sign(r1 - 0.5)))", 1, (0.2,), 1.0),
])
def test_evaluate(text, n, point, expected):
    assert eval_symbol(parse_symbol(text, n), point) == pytest.approx(expected, rel=1e-14, abs=1e-15)


def test_vectorised_evaluation():
    a = parse_symbol("r1^2 + r2^2", 2)
    points = np.array([[0.1, 0.2], [0.3, 0.4]])
    np.testing.assert_allclose(a(points), [0.05, 0.25], rtol=1e-14)


@pytest.mark.parametrize("text, n, position", [
    ("r1^2 +* r2", 2, 6),
    ("r3", 2, 0),
    ("r1 + foo(r2)", 2, 5),
    ("(r1 + r2", 2, 8),
    ("r1^1.5", 1, 3),
    ("r1 $ 2", 1, 3),
    ("", 1, 0),
    ("E0", 2, 0),
    ("1e400", 1, 0),
    ("r1 + 2e308 * S", 1, 5),
])
def test_syntax_errors_carry_position(text, n, position):
    with pytest.raises(SymbolSyntaxError) as excinfo:
        parse_symbol(text, n)
    assert excinfo.value.position == position


def test_domain_errors_name_the_subexpression():
    with pytest.raises(SymbolDomainError) as excinfo:
        eval_symbol(parse_symbol("1 + sqrt(r1 - 1)", 1), (0.5,))
    assert excinfo.value.subexpression.startswith("sqrt(")
    with pytest.raises(SymbolDomainError):
        eval_symbol(parse_symbol("1/r1", 2), (0.0, 0.3))


@pytest.mark.parametrize("text, n", [
    ("r1^2*r2^2", 2),
    ("-(r1 - r2)^3 / 4", 2),
    ("sin(V) + E2", 3),
    ("exp(-S) * cos(r1)^2 - 1e-05", 2),
    ("--r1", 1),
])
def test_format_parse_fixed_point(text, n):
    a = parse_symbol(text, n)
    assert parse_symbol(format_symbol(a), n) == a
    assert format_symbol(parse_symbol(format_symbol(a), n)) == format_symbol(a)


def test_permute_symbol_acts_on_coordinates():
    a = parse_symbol("r1^2 + 2*r2^2 + 3*r3", 3)
    sigma = Permutation.cycle(3, 1, 2, 3)
    r = np.array([0.1, 0.3, 0.5])
    assert eval_symbol(permute_symbol(a, sigma), r) == pytest.approx(eval_symbol(a, sigma(r)), rel=1e-14)


def test_permute_symbol_flips_vandermonde_for_odd_permutations():
    a = parse_symbol("V", 3)
    r = (0.2, 0.5, 0.3)
    swap = Permutation.transposition(3, 1, 3)
    assert eval_symbol(permute_symbol(a, swap), r) == pytest.approx(-eval_symbol(a, r), rel=1e-14)
    assert eval_symbol(permute_symbol(a, Permutation.cycle(3, 1, 2, 3)), r) == pytest.approx(eval_symbol(a, r))


@pytest.mark.parametrize("text, n, expected", [
    ("r1^2*r2^4", 2, (1.0, (1, 2))),
    ("E2", 2, (1.0, (1, 1))),
    ("3*r1^2", 2, (3.0, (1, 0))),
    ("(r1^2*r3^2)^2 / 2", 3, (0.5, (2, 0, 2))),
    ("1", 2, (1.0, (0, 0))),
    ("sin(r1)", 2, None),
    ("r1^3", 2, None),
    ("r1^2 + r2^2", 2, None),
])
def test_monomial_exponents(text, n, expected):
    assert monomial_exponents(parse_symbol(text, n)) == expected


def test_radial_profile():
    profile = radial_profile(parse_symbol("exp(-S)", 3))
    np.testing.assert_allclose(profile(np.array([0.0, 0.5])), [1.0, np.exp(-0.25)], rtol=1e-14)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_builtin_library_classifies_as_expected(n):
    for entry in builtin_library(n):
        assert classify_by_sampling(entry.parse(n)) is entry.expected, entry.name


@pytest.mark.parametrize("text, n, expected", [
    ("1", 2, SymbolClass.RADIAL),
    ("exp(-S)", 3, SymbolClass.RADIAL),
    ("E3", 3, SymbolClass.SYMMETRIC),
    ("sin(V)", 3, SymbolClass.ANTISYMMETRIC),
    ("V*E1", 3, SymbolClass.ANTISYMMETRIC),
    ("sin(V) + E2", 3, SymbolClass.ALTERNATING),
    ("r1^2", 3, SymbolClass.SEP_RADIAL),
    ("r1^2", 2, SymbolClass.ALTERNATING),
    ("r1^2*r2^2*r3^2*r4^2*r5^2*r6^2*r7^2", 7, SymbolClass.SYMMETRIC),
])
def test_classification(text, n, expected):
    assert classify_by_sampling(parse_symbol(text, n)) is expected


def test_class_inclusions():
    assert SymbolClass.RADIAL.satisfies(SymbolClass.SYMMETRIC)
    assert SymbolClass.SYMMETRIC.satisfies(SymbolClass.ALTERNATING)
    assert SymbolClass.ANTISYMMETRIC.satisfies(SymbolClass.ALTERNATING)
    assert not SymbolClass.ALTERNATING.satisfies(SymbolClass.SYMMETRIC)
    assert not SymbolClass.SEP_RADIAL.satisfies(SymbolClass.ALTERNATING)
    assert all(c.satisfies(SymbolClass.SEP_RADIAL) for c in SymbolClass)


def test_library_roles():
    assert [e.name for e in library_symbols(1, 'example1')] == []
    assert [e.text for e in library_symbols(3, 'example1')] == ['E3']
    chain = {e.expected for e in library_symbols(3, 'chain')}
    assert chain == {SymbolClass.RADIAL, SymbolClass.SYMMETRIC, SymbolClass.ALTERNATING, SymbolClass.SEP_RADIAL}


def test_classification_needs_enough_samples():
    with pytest.raises(SymbolClassError):
        classify_by_sampling(parse_symbol("S", 2), samples=10)


def test_symmetrize_pair_parts():
    a = parse_symbol("sin(V) + E2", 3)
    a_plus, a_minus = symmetrize_pair(a)
    points = sample_tau(3, 50, seed=3)
    np.testing.assert_allclose(a_plus(points), parse_symbol("E2", 3)(points), rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(a_minus(points), parse_symbol("sin(V)", 3)(points), rtol=1e-12, atol=1e-15)
    assert classify_by_sampling(a_plus) is SymbolClass.SYMMETRIC
    assert classify_by_sampling(a_minus) is SymbolClass.ANTISYMMETRIC


@pytest.mark.parametrize("text, n", [("r1^2", 3), ("S", 1)])
def test_symmetrize_pair_preconditions(text, n):
    with pytest.raises(SymbolClassError):
        symmetrize_pair(parse_symbol(text, n))


def test_symmetrize_pair_rejects_even_sigma():
    with pytest.raises(SymbolClassError):
        symmetrize_pair(parse_symbol("exp(V)", 3), sigma=Permutation.cycle(3, 1, 2, 3))


@given(st.sampled_from([("sin(V) + E2", 3), ("exp(V)", 3), ("r1^2 + 3*r2^4", 2), ("V*E1 + S", 4)]),
       st.integers(min_value=0, max_value=10_000))
@settings(max_examples=40, deadline=None)
def test_symmetrize_pair_sums_back(case, seed):
    text, n = case
    a = parse_symbol(text, n)
    a_plus, a_minus = symmetrize_pair(a)
    points = sample_tau(n, 20, seed)
    np.testing.assert_allclose(a_plus(points) + a_minus(points), a(points), rtol=1e-12, atol=1e-14)
