from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prequantum.errors import BasisMismatch
from prequantum.periods import (
    AbelianInvariants,
    BasisConstants,
    ExactReal,
    PeriodGroup,
    SnapTable,
    TorusElement,
    characters_h1,
    generate,
    moduli_ext,
    torus_distance,
)

ONE = BasisConstants()
SQ2 = BasisConstants(("one", "alpha"), (1.0, math.sqrt(2)))
fracs = st.fractions(min_value=-20, max_value=20, max_denominator=12)


def q(x) -> ExactReal:
    return ExactReal.rational(ONE, x)


def test_parse_and_format():
    b = BasisConstants(("one", "s1"), (1.0, 4.0))
    x = ExactReal.parse(b, "1/3 s1")
    assert str(x) == "1/3*s1"
    assert float(x) == pytest.approx(4 / 3)
    y = ExactReal.parse(b, "3 - 2*s1")
    assert str(y) == "3 - 2*s1"
    assert ExactReal.parse(b, str(y)) == y
    with pytest.raises(ValueError):
        ExactReal.parse(b, "3 + gamma")


def test_basis_mismatch():
    with pytest.raises(BasisMismatch):
        generate([q(1), ExactReal.symbol(SQ2, "alpha")])


@given(st.lists(fracs, min_size=1, max_size=5))
@settings(max_examples=100, deadline=None)
def test_rational_groups_are_cyclic(gens):
    """Oracle: a finitely generated subgroup of Q is (gcd of numerators / lcm of denominators) Z."""
    P = generate([q(g) for g in gens], ONE)
    nz = [Fraction(g) for g in gens if g]
    if not nz:
        assert P.is_trivial
        return
    den = math.lcm(*(f.denominator for f in nz))
    num = math.gcd(*(int(f * den) for f in nz))
    assert P.discrete and P.rank == 1
    assert P == generate([q(Fraction(num, den))])
    assert P.canonical_generator == q(Fraction(num, den))


def test_discreteness():
    assert generate([q(1), q("1/3")]).discrete
    P = generate([ExactReal.rational(SQ2, 1), ExactReal.symbol(SQ2, "alpha")])
    assert not P.discrete
    assert P.describe() == "Z + alpha·Z"
    assert generate([], ONE).describe() == "{0}"
    assert generate([q(1)]).torus_label() == "R/Z"


@given(fracs, fracs, st.integers(-5, 5))
@settings(max_examples=100, deadline=None)
def test_torus_congruence(a, b, k):
    P = generate([q("1/2")])
    x = TorusElement(q(a), P)
    y = TorusElement(q(a) + q(Fraction(k, 2)), P)
    assert x == y
    assert (x + TorusElement(q(b), P)) - TorusElement(q(b), P) == x
    assert x.canonical() == x
    assert x.canonical().canonical().rep == x.canonical().rep
    assert 0 <= float(x.canonical().rep) < 0.5
    assert x.distance(y) == 0.0


def test_torus_distance():
    P = generate([q(1)])
    assert torus_distance(P, 0.9) == pytest.approx(0.1)
    assert torus_distance(generate([], ONE), -0.25) == 0.25


def test_snapping():
    b = BasisConstants(("one", "s1"), (1.0, 4 * math.pi))
    table = SnapTable((ExactReal.symbol(b, "s1"),))
    snapped = table.snap(4 * math.pi / 3 + 2e-6, b)
    assert snapped == ExactReal.symbol(b, "s1", "1/3")
    assert table.snap(1e-7, b).is_zero()
    assert table.snap(1.2345, b) is None
    # tight tolerance keeps information below the period scale
    assert table.snap_value(3e-6, b, tol=1e-10) == ExactReal.from_float(b, 3e-6)
    exact, nb, warning = table.snap_period(1.2345, b, "p")
    assert "p_1" in nb.names and warning


def test_moduli_descriptors():
    Z = generate([q(1)])
    assert moduli_ext(AbelianInvariants(2, ()), Z).trivial
    assert moduli_ext(AbelianInvariants.from_relation_matrix(1, [[3]]), Z).torsion == (3,)
    Z2 = generate([ExactReal.rational(SQ2, 1), ExactReal.symbol(SQ2, "alpha")])
    ext = moduli_ext(AbelianInvariants.from_relation_matrix(2, [[0, 2]]), Z2)
    assert ext.torsion == (2, 2)
    h1 = characters_h1(AbelianInvariants(1, ()), generate([], ONE))
    assert h1.describe() == "T_ω"
    assert characters_h1(AbelianInvariants.from_relation_matrix(1, [[6]]), Z).torsion == (6,)


def test_period_group_equality_is_lattice_equality():
    assert generate([q(2), q(3)]) == generate([q(1)])
    assert generate([q(2), q(4)]) != generate([q(1)])
    assert isinstance(generate([q(1)]), PeriodGroup)
