import pytest

from algebroid_pbw import AdaptedPair, Algebroid
from algebroid_pbw.algebroid import pair_validate, quotient_action
from algebroid_pbw.errors import ContractError, StructuralError
from algebroid_pbw.ring import Derivation, PolynomialRing, rational_field

from conftest import E, F, H, borel, sl2


def test_abelian_rank_two_is_valid():
    L = Algebroid.from_constants(rational_field(), 2, {})
    assert L.validate().ok


def test_sl2_is_valid():
    assert sl2().validate().ok


def test_corrupted_jacobi_is_reported():
    L = sl2({(H, E): {E: 2}, (H, F): {F: -2}, (E, F): {E: 1}})
    rep = L.validate()
    assert "jacobi" in rep.axioms()
    assert rep.violations[0].witness


def test_non_antisymmetric_table_is_reported():
    L = Algebroid.from_constants(rational_field(), 2, {(0, 1): {0: 1}, (1, 0): {0: 1}})
    assert "antisymmetry" in L.validate().axioms()


def test_anchor_must_be_a_lie_morphism():
    R = PolynomialRing(["x"])
    # [l0, l1] = 0 but rho(l0) = d/dx, rho(l1) = x d/dx do not commute
    L = Algebroid.from_constants(R, 2, {}, [Derivation(R, [R.one]), Derivation(R, [R.parse("x")])])
    assert "anchor-morphism" in L.validate().axioms()


def test_leibniz_bracket_on_functions():
    R = PolynomialRing(["x"])
    L = Algebroid.from_constants(R, 1, {}, [Derivation(R, [R.one])])
    x = R.parse("x")
    # [x d, d] = -d
    assert L.bracket((x,), (R.one,)) == (-R.one,)
    assert L.bracket((x,), (x,)) == (R.zero,)


def test_sl2_bracket_value():
    L = sl2()
    assert L.bracket(L.gen(H), L.gen(E)) == L.gen(E, L.ring.scalar(2))


def test_pairs():
    assert pair_validate(borel()).ok
    # span(e, f) is not closed: [e, f] = h
    Q = rational_field()
    L = Algebroid.from_constants(Q, 3, {(0, 1): {2: 1}, (2, 0): {0: 2}, (2, 1): {1: -2}}, names=["e", "f", "h"])
    rep = pair_validate(AdaptedPair(L, 2))
    assert "closure" in rep.axioms()
    with pytest.raises(ContractError):
        AdaptedPair(L, 2).sub
    assert pair_validate(AdaptedPair(sl2(), 0)).ok


def test_sub_rank_out_of_range():
    with pytest.raises(StructuralError):
        AdaptedPair(sl2(), 4)


def test_quotient_action_borel():
    pair = borel()
    Q = pair.ring
    h = (Q.one, Q.zero)
    e = (Q.zero, Q.one)
    fbar = (Q.one,)
    assert quotient_action(pair, h, fbar) == (Q.scalar(-2),)
    # [e, f] = h lies in A
    assert quotient_action(pair, e, fbar) == (Q.zero,)


def test_quotient_action_is_r_linear_on_polynomial_pair():
    R = PolynomialRing(["x", "y"])
    dx = Derivation(R, [R.one, R.zero])
    dy = Derivation(R, [R.zero, R.one])
    L = Algebroid.from_constants(R, 2, {}, [dx, dy], names=["dx", "dy"])
    pair = AdaptedPair(L, 1)
    r = R.parse("x*y + 1")
    a = (R.parse("y"),)
    c = (R.parse("x^2"),)
    lhs = quotient_action(pair, (r * a[0],), c)
    rhs = tuple(r * v for v in quotient_action(pair, a, c))
    assert lhs == rhs
