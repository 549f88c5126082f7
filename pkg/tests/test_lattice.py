from __future__ import annotations

import math

import sympy
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy.matrices.normalforms import smith_normal_form

from prequantum.lattice import hermite_rows, in_row_span, lcm, smith_invariants, xgcd

small = st.integers(-40, 40)
matrices = st.integers(1, 4).flatmap(
    lambda c: st.lists(st.lists(small, min_size=c, max_size=c), min_size=1, max_size=4))


def sympy_invariants(rows):
    d = smith_normal_form(sympy.Matrix(rows), domain=sympy.ZZ)
    return [abs(int(d[i, i])) for i in range(min(d.shape)) if d[i, i] != 0]


@given(small, small)
def test_xgcd_bezout(a, b):
    g, x, y = xgcd(a, b)
    assert g == math.gcd(a, b)
    assert a * x + b * y == g


@given(matrices)
@settings(max_examples=150, deadline=None)
def test_smith_matches_sympy(rows):
    assert smith_invariants(rows) == sympy_invariants(rows)


@given(matrices)
@settings(max_examples=150, deadline=None)
def test_hermite_spans_same_lattice(rows):
    h = hermite_rows(rows)
    assert len(h) == sympy.Matrix(rows).rank()
    for r in rows:
        assert in_row_span(h, r)
    for r in h:
        assert in_row_span(hermite_rows(rows + [r]), r)
    # idempotent, and invariant under reordering the input
    assert hermite_rows(h) == h
    assert hermite_rows(list(reversed(rows))) == h


def test_hermite_example():
    assert hermite_rows([[2, 4], [3, 6], [0, 5]]) == [[1, 2], [0, 5]]
    assert not in_row_span([[1, 2], [0, 5]], [0, 1])


def test_smith_examples():
    assert smith_invariants([[3]]) == [3]
    assert smith_invariants([[0, 2]]) == [2]
    assert smith_invariants([[2, 4], [6, 8]]) == [2, 4]
    assert smith_invariants([[0, 0]]) == []


def test_lcm():
    assert lcm(4, 6) == 12
    assert lcm(256, 384) == 768
