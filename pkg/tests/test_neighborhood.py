import random

import pytest

from algebroid_pbw import AdaptedPair, Algebroid
from algebroid_pbw.envelope import InducedModule
from algebroid_pbw.errors import ContractError, StructuralError, TruncationError
from algebroid_pbw.modcat import quotient_module, unit_module
from algebroid_pbw.neighborhood import (
    BulletAction,
    QuotientRewriter,
    a1_quotient,
    bullet_action,
    bullet_identity_defects,
    elimination_quotient,
    filtration_extension,
    free_degree_ranks,
    free_envelope_normalize,
    oracle_compare,
    phi_map,
    tensor_words_module,
)
from algebroid_pbw.obstruction import ConnectionLift, alpha_vanishing, promote_to_neighbourhood, split_test
from algebroid_pbw.registry import list_fixtures, load_fixture, module_names
from algebroid_pbw.ring import Derivation, PolynomialRing, rational_field

from conftest import borel, sl2, weyl

FINITE = [n for n in list_fixtures() if load_fixture(n).ring.finite]


def _lift(P, E=None):
    E = E if E is not None else quotient_module(P.pair)
    rep = alpha_vanishing(P.pair, E, P.options.get("bound"))
    return promote_to_neighbourhood(P.pair, E, rep) if rep.vanishes else None


# free envelope ----------------------------------------------------------------


def test_free_letter_past_function():
    pair = weyl()
    L = pair.ambient
    R = L.ring
    x = R.parse("x^2")
    u = free_envelope_normalize(L, [0, x], 3)
    assert u.terms == {(0,): x, (): R.parse("2*x")}


def test_free_words_are_not_reordered():
    L = sl2()
    u = free_envelope_normalize(L, [2, 0], 2)
    assert u.terms == {(2, 0): L.ring.one}


def test_free_ranks_are_tensor_ranks():
    R = PolynomialRing(["x"])
    L = Algebroid.from_constants(R, 2, {}, [Derivation(R, [R.one]), Derivation.zero(R)])
    assert free_degree_ranks(L, 3) == [1, 2, 4, 8]
    assert free_degree_ranks(Algebroid.from_constants(rational_field(), 2, {}), 3) == [1, 2, 4, 8]


def test_free_truncation():
    with pytest.raises(TruncationError):
        free_envelope_normalize(sl2(), [0, 1, 2], 2)


# the quotient by rewriting and by elimination ---------------------------------


def test_zero_sub_gives_all_tensor_words():
    quot = a1_quotient(AdaptedPair(sl2(), 0), 3)
    assert quot.ranks == [1, 3, 9, 27]


def test_full_sub_gives_the_ring():
    quot = a1_quotient(AdaptedPair(sl2(), 3), 3)
    assert quot.ranks == [1, 0, 0, 0]


def test_borel_ranks_and_critical_pairs():
    quot = a1_quotient(borel(), 3)
    assert quot.ranks == [1, 1, 1, 1]
    assert quot.critical_pairs == 4
    h = quot.module.matrices[0]
    assert [str(h[i][i]) for i in range(4)] == ["0", "-2", "-4", "-6"]


@pytest.mark.parametrize("name", FINITE)
def test_rewriting_agrees_with_elimination(name):
    P = load_fixture(name)
    N = min(P.options.get("N", 3), 3)
    for mod in module_names(P):
        E = P.module(mod)
        quot = a1_quotient(P.pair, N, E)
        orc = elimination_quotient(P.pair, N, E)
        assert oracle_compare(quot, orc) == []
        assert quot.ranks == [P.pair.q ** k * E.rank for k in range(N + 1)]


def test_injected_fault_is_caught(monkeypatch):
    P = load_fixture("sl2_h")
    original = QuotientRewriter.act_basis

    def faulty(self, g, w, s):
        out = dict(original(self, g, w, s))
        if g == 0 and len(w) == 2:
            out[(w, s)] = out.get((w, s), self.pair.ring.zero) + self.pair.ring.one
        return out

    monkeypatch.setattr(QuotientRewriter, "act_basis", faulty)
    quot = a1_quotient(P.pair, 2)
    diff = oracle_compare(quot, elimination_quotient(P.pair, 2))
    assert diff and diff[0]["what"] == "action"


def test_oracle_needs_finite_ring():
    P = load_fixture("poly_xy")
    with pytest.raises(StructuralError):
        elimination_quotient(P.pair, 2)


@pytest.mark.parametrize("name", FINITE)
def test_induced_oracle_matches_induced_module(name):
    P = load_fixture(name)
    E = unit_module(P.pair.sub)
    ind = InducedModule(P.pair, E, 2)
    orc = elimination_quotient(P.pair, 2, E, mode="induced")
    assert [ind.degrees.count(k) for k in range(3)] == list(orc.ranks)
    for a in range(P.pair.p):
        assert orc.express(ind.basis, a) == [list(r) for r in ind.module().matrices[a]]


@pytest.mark.parametrize("name", FINITE)
def test_second_filtration_step_splits_exactly_when_alpha_vanishes(name):
    P = load_fixture(name)
    if P.pair.q == 0:
        return
    ind = InducedModule(P.pair, unit_module(P.pair.sub), 2)
    ext = filtration_extension(ind.module(), ind.degrees, 2)
    split = split_test(ext).kind == "primitive"
    assert split == alpha_vanishing(P.pair, quotient_module(P.pair)).vanishes


# the bullet action --------------------------------------------------------------


def test_bullet_restricts_to_the_derivation_action():
    P = load_fixture("sl2_h")
    lift = _lift(P)
    b = BulletAction(P.pair, lift, 3)
    T, basis, _ = tensor_words_module(P.pair, unit_module(P.pair.sub), 3)
    for j, (w, s) in enumerate(basis[:8]):
        for a in range(P.pair.p):
            got = b.act_basis(a, w, s)
            col = {basis[i]: T.matrices[a][i][j] for i in range(len(basis)) if T.matrices[a][i][j]}
            assert got == col


def test_bullet_on_one_appends_the_letter():
    P = load_fixture("abelian")
    lift = _lift(P)
    n = P.pair.p
    got = bullet_action(P.pair, lift, P.algebroid.gen(n), {(): P.ring.one}, 2)
    assert got == {(n,): P.ring.one}


def test_bullet_leibniz_in_functions():
    P = load_fixture("poly_xy")
    lift = _lift(P)
    b = BulletAction(P.pair, lift, 3)
    R = P.ring
    rng = random.Random(2)
    for _ in range(5):
        r = R.sample(rng)
        w = tuple(P.pair.p for _ in range(rng.randint(0, 2)))
        for l in range(P.algebroid.rank):
            st = {(w, 0): R.one}
            left = {k: r * c for k, c in b.act(l, st).items()}
            right = b.act(l, {(w, 0): r})
            rhs_expected = {(w, 0): -P.algebroid.anchor[l](r)}
            diff = dict(left)
            for k, c in right.items():
                diff[k] = diff.get(k, R.zero) - c
            diff = {k: c for k, c in diff.items() if c}
            assert diff == {k: c for k, c in rhs_expected.items() if c}


def test_bullet_needs_certified_lift():
    pair = borel()
    with pytest.raises(ContractError):
        BulletAction(pair, ConnectionLift.zero_lift(pair, quotient_module(pair)), 2)


@pytest.mark.parametrize("name", list_fixtures())
def test_bullet_is_an_action_of_the_neighbourhood(name):
    P = load_fixture(name)
    lift = _lift(P)
    if lift is None:
        return
    assert bullet_identity_defects(BulletAction(P.pair, lift, 3), 2) == []


# phi ----------------------------------------------------------------------------


def test_phi_is_tautological_for_zero_sub():
    P = load_fixture("zero_sub")
    rep = phi_map(P.pair, _lift(P), 3)
    n = len(rep.matrix)
    assert rep.ok
    assert all(rep.matrix[i][j] == (P.ring.one if i == j else P.ring.zero) for i in range(n) for j in range(n))


@pytest.mark.parametrize("name", list_fixtures())
def test_phi_is_a_filtered_bijection_when_alpha_vanishes(name):
    P = load_fixture(name)
    lift = _lift(P)
    if lift is None:
        pytest.skip("alpha does not vanish; no certified lift to build the bullet action from")
    rep = phi_map(P.pair, lift, 3)
    assert rep.verdicts() == {"a_linear": True, "filtered": True, "bijective_per_degree": True, "gr_identity": True}


def test_phi_with_coefficients():
    P = load_fixture("abelian")
    for name in ("E1", "E2"):
        E = P.module(name)
        rep = phi_map(P.pair, _lift(P), 3, E, _lift(P, E))
        assert rep.ok
    with pytest.raises(ContractError):
        phi_map(P.pair, _lift(P), 2, P.module("E1"))
