import json
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from lfmaxwell.coeffs import (
    SchemeCoefficients, c_k, coefficient_table, composition_sum, compositions, gamma_composition,
    gamma_series, parse_json, render_json, render_text, tanh_taylor,
)

even_orders = st.integers(min_value=1, max_value=16).map(lambda k: 2 * k)


def test_lf6_values():
    assert gamma_series(6) == [Fraction(1), Fraction(-1, 12), Fraction(1, 120)]


def test_gamma3():
    assert gamma_series(8)[3] == Fraction(-17, 20160)


def test_tanh_taylor_known_terms():
    # tanh x = x - x^3/3 + 2x^5/15 - 17x^7/315
    assert tanh_taylor(4) == [Fraction(1), Fraction(-1, 3), Fraction(2, 15), Fraction(-17, 315)]


def test_r2_single_term():
    assert gamma_series(2) == [Fraction(1)]


@pytest.mark.parametrize("R", [0, 1, 3, 5, 34, -2, 2.0, "6", True])
def test_invalid_order(R):
    with pytest.raises(ValueError):
        gamma_series(R)


@settings(deadline=None, max_examples=20)
@given(even_orders)
def test_routes_agree(R):
    assert gamma_series(R) == gamma_composition(R)


@given(even_orders)
def test_signs_alternate(R):
    g = gamma_series(R)
    assert all((gs > 0) == (s % 2 == 0) for s, gs in enumerate(g))


@given(st.integers(min_value=1, max_value=15).map(lambda k: 2 * k))
def test_prefix_stable(R):
    # raising the order only appends terms
    assert gamma_series(R + 2)[: R // 2] == gamma_series(R)


def test_unsigned_reading_rejected():
    unsigned = gamma_composition(6, signed=False)
    assert abs(unsigned[2]) == Fraction(1, 80)
    assert unsigned != gamma_series(6)


def test_composition_counts():
    for s in range(1, 9):
        assert len(list(compositions(s))) == 2 ** (s - 1)


def test_signed_sum_is_minus_scaled_tanh():
    t = tanh_taylor(10)
    for s in range(1, 10):
        assert composition_sum(s) == -t[s]


def test_c_k():
    assert c_k(1) == Fraction(1, 3)
    assert c_k(2) == Fraction(1, 30)


def test_bootstrap_multipliers_lf6():
    dt = 0.3
    m = SchemeCoefficients.for_order(6).bootstrap_multipliers(dt)
    assert m["p_coupling"][1] == pytest.approx(-(1 / 8) * dt**2 / 12, rel=1e-15)
    assert m["p_coupling"][2] == pytest.approx((1 / 32) * dt**4 / 120, rel=1e-15)
    assert m["e_row_h_coupling"][1] == pytest.approx(-(1 / 4) * dt**2 / 12, rel=1e-15)
    assert m["e_row_h_coupling"][2] == pytest.approx((1 / 16) * dt**4 / 120, rel=1e-15)


def test_interior_multipliers_lf6():
    dt = 0.1
    m = SchemeCoefficients.for_order(6).interior_multipliers(dt)
    assert abs(m[1]) / dt**2 == pytest.approx(1 / 12)
    assert abs(m[2]) / dt**4 == pytest.approx(1 / 120)


@settings(deadline=None, max_examples=10)
@given(even_orders)
def test_table_json_roundtrip(R):
    table = coefficient_table(R)
    back = parse_json(render_json(table))
    assert back == json.loads(json.dumps(table))
    assert [Fraction(r["gamma"]) for r in back["rows"]] == gamma_series(R)
    assert back["routes_agree"] is True


def test_text_table():
    text = render_text(coefficient_table(6))
    assert "-1/12" in text and "1/120" in text and "OK" in text
