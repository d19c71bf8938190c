#!/usr/bin/env python3
"""
Tests for spectral functions, tables, multipliers and the a = a+ + a- split.

Usage:
    pytest test_spectral.py -v
    pytest test_spectral.py -v -m "not slow"
"""

import io
import math

import pandas as pd
import pytest

from multiindex import BRANCH_MINUS, BRANCH_PLUS, BRANCH_WHOLE, OrbitClass, all_indices, orbit_of
from quadrature import Method
from specfun import WeightParam
from spectral import (LAYOUT_SPLIT, SpectralError, apply_multiplier, block_structure, build_table,
                      closed_form_table_check, decompose_tables, default_order, expand_table,
                      expanded_frame, gamma_mc, gamma_monomial_closed, gamma_point, gamma_radial,
                      normalization_residual, read_table_frame)
from symbols import SymbolClass, SymbolClassError, parse_symbol, radial_profile


def example1(k, alpha):
    """gamma of r1^2 r2^2 in n=2."""
    total = sum(k) + alpha
    return (k[0] + 1) * (k[1] + 1) / ((total + 4) * (total + 3))


def test_example1_row_at_11():
    table = build_table(parse_symbol("r1^2*r2^2", 2), WeightParam(0.0, 2), max_degree=4)
    estimate = table.estimate_of((1, 1))
    assert estimate.value == pytest.approx(4 / 30, rel=1e-14)
    assert estimate.method is Method.CLOSED_FORM


@pytest.mark.parametrize("alpha", [0.0, 0.5, 2.0, -0.5])
@pytest.mark.parametrize("k", [(0, 0), (1, 1), (3, 1), (1, 3), (6, 2)])
def test_gamma_point_matches_example1(alpha, k):
    estimate = gamma_point(parse_symbol("r1^2*r2^2", 2), k, WeightParam(alpha, 2))
    assert estimate.value == pytest.approx(example1(k, alpha), rel=1e-11)
    assert estimate.error_bound < 1e-12


@pytest.mark.parametrize("beta, m, alpha", [
    ((1, 1), (3, 1), 1.5),
    ((2, 0, 1), (0, 4, 1), 0.0),
    ((0,), (7,), 3.0),
    ((1, 1, 1, 1), (2, 1, 0, 0), -0.5),
])
def test_closed_form_agrees_with_quadrature(beta, m, alpha):
    text = '*'.join(f"r{k}^{2 * b}" for k, b in enumerate(beta, 1) if b) or '1'
    w = WeightParam(alpha, len(m))
    assert gamma_point(parse_symbol(text, len(m)), m, w).value == pytest.approx(
        gamma_monomial_closed(beta, m, w), rel=1e-11)


def test_closed_form_at_high_degree_stays_finite():
    value = gamma_monomial_closed((1, 1), (250, 250), WeightParam(0.0, 2))
    assert value == pytest.approx(example1((250, 250), 0.0), rel=1e-11)


@pytest.mark.parametrize("alpha", [0.0, 1.5])
@pytest.mark.parametrize("k", [(k1, k2) for k1 in range(9) for k2 in range(9 - k1)])
def test_example1_over_degree_eight(alpha, k):
    estimate = gamma_point(parse_symbol("r1^2*r2^2", 2), k, WeightParam(alpha, 2))
    assert estimate.value == pytest.approx(example1(k, alpha), rel=1e-9)


@pytest.mark.parametrize("n", [1, 2, 3, pytest.param(4, marks=pytest.mark.slow)])
@pytest.mark.parametrize("alpha", [0.0, 1.0, 2.5])
def test_unit_symbol_normalization_grid(n, alpha):
    w = WeightParam(alpha, n)
    indices = all_indices(n, 10)
    assert max(normalization_residual(m, w) for m in indices) <= 1e-12
    assert all(gamma_monomial_closed((0,) * n, m, w) == pytest.approx(1.0, abs=1e-12) for m in indices)
    table = build_table(parse_symbol("1", n), w, max_degree=10, closed_form=False)
    assert max(abs(e.value - 1.0) for e in table.entries.values()) <= 1e-9


@pytest.mark.parametrize("m, alpha", [
    ((500,), 0.0),
    ((250, 250), 1.0),
    ((500, 0, 0), -0.5),
    ((84, 84, 83, 83, 83, 83), 2.5),
    ((42,) * 8 + (41,) * 4, 0.0),
    ((42,) * 8 + (41,) * 4, 2.5),
])
def test_normalization_stays_in_log_space_at_degree_500(m, alpha):
    assert normalization_residual(m, WeightParam(alpha, len(m))) <= 1e-10


def test_unit_symbol_has_gamma_one_everywhere():
    w = WeightParam(1.0, 3)
    table = build_table(parse_symbol("1", 3), w, max_degree=4, closed_form=False)
    assert all(e.value == pytest.approx(1.0, rel=1e-12) for e in table.entries.values())
    assert max(normalization_residual(m, w) for m in all_indices(3, 4)) < 1e-12


@pytest.mark.parametrize("n, alpha, d", [(1, 0.0, 0), (2, 1.0, 5), (3, -0.5, 12), (4, 2.0, 40)])
def test_radial_reduction_for_squared_radius(n, alpha, d):
    w = WeightParam(alpha, n)
    estimate = gamma_radial(radial_profile(parse_symbol("S", n)), d, w)
    assert estimate.value == pytest.approx((d + n) / (n + d + alpha + 1), rel=1e-12)


def test_radial_reduction_matches_tensor_table():
    w = WeightParam(0.5, 3)
    a = parse_symbol("exp(-S)", 3)
    table = build_table(a, w, max_degree=5)
    profile = radial_profile(a)
    for (iota, _), estimate in table.entries.items():
        assert estimate.value == pytest.approx(gamma_radial(profile, sum(iota), w).value, rel=1e-10)


def test_mc_channel_agrees_with_closed_form():
    w = WeightParam(0.0, 2)
    estimate = gamma_mc(parse_symbol("E2", 2), (1, 0), w, samples=200_000, seed=11)
    assert estimate.method is Method.MONTE_CARLO
    assert abs(estimate.value - 0.1) <= 2 * estimate.error_bound
    assert estimate == gamma_mc(parse_symbol("E2", 2), (1, 0), w, samples=200_000, seed=11, workers=4)


def test_symmetric_table_has_one_entry_per_orbit():
    w = WeightParam(0.0, 3)
    table = build_table(parse_symbol("E2 + 0.5*S", 3), w, max_degree=4)
    assert table.symbol_class is SymbolClass.SYMMETRIC
    assert len(table.entries) == 11
    assert {branch for _, branch in table.entries} == {BRANCH_WHOLE}
    assert table.order == default_order(4)


def test_antisymmetric_table_vanishes_on_i0_and_flips_sign():
    w = WeightParam(1.0, 3)
    table = build_table(parse_symbol("sin(V)", 3), w, max_degree=6, symbol_class=SymbolClass.ANTISYMMETRIC)
    for (iota, branch), estimate in table.entries.items():
        if orbit_of(iota).orbit_class is OrbitClass.I0:
            assert abs(estimate.value) <= 1e-9
        elif branch == BRANCH_PLUS:
            minus = table.entries[(iota, BRANCH_MINUS)]
            assert minus.value == pytest.approx(-estimate.value, rel=1e-9, abs=1e-12)
    assert table.gamma_of((2, 1, 0)) != pytest.approx(0.0, abs=1e-12)


def test_alternating_lookup_uses_branch():
    w = WeightParam(0.0, 3)
    table = build_table(parse_symbol("sin(V) + E2", 3), w, max_degree=3)
    assert table.layout == LAYOUT_SPLIT
    assert table.key_for((1, 0, 2)) == ((2, 1, 0), BRANCH_PLUS)
    assert table.key_for((0, 1, 2)) == ((2, 1, 0), BRANCH_MINUS)
    assert table.key_for((1, 1, 0)) == ((1, 1, 0), BRANCH_WHOLE)
    assert table.gamma_of((2, 1, 0)) != pytest.approx(table.gamma_of((1, 2, 0)), abs=1e-9)


def test_sep_radial_only_symbols_cannot_be_tabulated():
    with pytest.raises(SymbolClassError):
        build_table(parse_symbol("r1^2", 3), WeightParam(0.0, 3), max_degree=2)


def test_table_is_independent_of_worker_count():
    w = WeightParam(0.5, 2)
    a = parse_symbol("exp(V) * cos(S)", 2)
    single = build_table(a, w, max_degree=6, workers=1)
    threaded = build_table(a, w, max_degree=6, workers=4)
    assert single.entries == threaded.entries


def test_table_frame_layout_and_round_trip():
    w = WeightParam(0.5, 3)
    table = build_table(parse_symbol("exp(V) + S", 3), w, max_degree=4)
    frame = table.to_frame()
    assert list(frame.columns) == ['i1', 'i2', 'i3', 'degree', 'orbit_size', 'class', 'branch',
                                   'gamma', 'error_bound', 'method']
    assert list(frame['degree']) == sorted(frame['degree'])
    text = frame.to_csv(index=False, float_format='%.17g')
    parsed = pd.read_csv(io.StringIO(text), float_precision='round_trip')
    rebuilt = read_table_frame(parsed, w, table.symbol_class, table.max_degree, layout=table.layout)
    assert rebuilt.entries == table.entries


def test_read_table_frame_rejects_missing_columns():
    with pytest.raises(SpectralError):
        read_table_frame(pd.DataFrame({'i1': [0]}), WeightParam(0.0, 1), SymbolClass.RADIAL, 0)


def test_expand_table_covers_every_index():
    table = build_table(parse_symbol("E3", 3), WeightParam(0.0, 3), max_degree=4)
    diagonal = expand_table(table)
    assert len(diagonal) == math.comb(4 + 3, 3)
    assert diagonal[(0, 2, 1)] == diagonal[(2, 1, 0)] == diagonal[(1, 0, 2)]
    assert len(expanded_frame(table)) == len(diagonal)


def test_lookup_beyond_degree_raises():
    table = build_table(parse_symbol("S", 2), WeightParam(0.0, 2), max_degree=3)
    with pytest.raises(SpectralError):
        table.gamma_of((4, 0))
    with pytest.raises(SpectralError):
        table.gamma_of((1, 0, 0))


def test_apply_multiplier():
    table = build_table(parse_symbol("r1^2*r2^2", 2), WeightParam(0.0, 2), max_degree=4)
    result = apply_multiplier(table, {(0, 0): 1.0, (1, 2): 2 - 1j})
    assert result[(0, 0)] == pytest.approx(1 / 12, rel=1e-14)
    assert result[(1, 2)] == pytest.approx((2 - 1j) * example1((1, 2), 0.0), rel=1e-14)
    with pytest.raises(SpectralError):
        apply_multiplier(table, {(3, 2): 1.0})


def test_apply_multiplier_is_linear():
    table = build_table(parse_symbol("sin(V) + E2", 2), WeightParam(0.5, 2), max_degree=5)
    c = {(1, 0): 0.5, (2, 3): -1.25j, (0, 4): 3.0}
    d = {(1, 0): 2.0 + 1j, (2, 3): 0.75, (0, 4): -1.0}
    combined = {m: 2 * c[m] - 3 * d[m] for m in c}
    tc, td, tcombined = (apply_multiplier(table, x) for x in (c, d, combined))
    for m in c:
        assert tcombined[m] == pytest.approx(2 * tc[m] - 3 * td[m], rel=1e-13, abs=1e-15)


def test_block_structure_tiles_the_index_set():
    table = build_table(parse_symbol("exp(V)", 3), WeightParam(0.0, 3), max_degree=4)
    blocks = block_structure(table)
    indices = [m for block in blocks for m in block.indices]
    assert len(indices) == len(set(indices)) == math.comb(4 + 3, 3)
    split = [b for b in blocks if b.branch != BRANCH_WHOLE]
    assert {b.multiplicity for b in split} == {3}
    for block in blocks:
        assert all(table.gamma_of(m) == block.gamma for m in block.indices)


def test_decomposition_is_additive():
    w = WeightParam(0.0, 3)
    decomposition = decompose_tables(parse_symbol("sin(V) + E2", 3), w, max_degree=4)
    assert decomposition.max_residual <= 1e-12
    plus, minus = decomposition.plus_table, decomposition.minus_table
    for (iota, branch), estimate in plus.entries.items():
        if branch == BRANCH_PLUS:
            assert plus.entries[(iota, BRANCH_MINUS)].value == pytest.approx(estimate.value, rel=1e-10)
    for (iota, branch), estimate in minus.entries.items():
        if branch == BRANCH_WHOLE:
            assert abs(estimate.value) <= 1e-12
    frame = decomposition.to_frame()
    assert set(frame['part']) == {'a_plus', 'a_minus'}
    assert frame['additivity_residual'].abs().max() <= 1e-12


def test_decomposition_requires_alternating_symbol():
    with pytest.raises(SymbolClassError):
        decompose_tables(parse_symbol("r1^2", 3), WeightParam(0.0, 3), max_degree=2)


def test_closed_form_table_check_on_quadrature_table():
    table = build_table(parse_symbol("E2", 2), WeightParam(0.25, 2), max_degree=10, closed_form=False)
    assert closed_form_table_check(table, (1, 1)) < 1e-12


@pytest.mark.slow
def test_acceptance_scale_tables_n3_degree8():
    w = WeightParam(1.0, 3)
    table = build_table(parse_symbol("E3", 3), w, max_degree=8, closed_form=False)
    assert closed_form_table_check(table, (1, 1, 1)) < 1e-12
    anti = build_table(parse_symbol("V*E1", 3), w, max_degree=8, symbol_class=SymbolClass.ANTISYMMETRIC)
    for (iota, branch), estimate in anti.entries.items():
        if branch == BRANCH_WHOLE:
            assert abs(estimate.value) <= 1e-12
