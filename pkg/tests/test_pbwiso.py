import random
from fractions import Fraction

import pytest

from algebroid_pbw.envelope import Envelope, InducedModule, straighten
from algebroid_pbw.errors import ContractError
from algebroid_pbw.modcat import quotient_module, unit_module
from algebroid_pbw.obstruction import alpha_vanishing, promote_to_neighbourhood
from algebroid_pbw.pbwiso import (
    Exists,
    NotExists,
    SearchInconclusive,
    eta_map,
    filtered_iso_search,
    pbw_composite,
    project_symmetric,
    recheck_not_exists,
    symmetric_module,
    symmetrize,
)
from algebroid_pbw.registry import expected_verdicts, list_fixtures, load_fixture, module_names

GREEN = {"a_linear": True, "filtered": True, "bijective_per_degree": True, "gr_identity": True}


def _lift(P, E):
    rep = alpha_vanishing(P.pair, E, P.options.get("bound"))
    return promote_to_neighbourhood(P.pair, E, rep) if rep.vanishes else None


def test_symmetrize_two_letters():
    assert symmetrize((3, 4)) == {(3, 4): Fraction(1, 2), (4, 3): Fraction(1, 2)}
    assert symmetrize((3, 3)) == {(3, 3): Fraction(1)}
    assert symmetrize(()) == {(): Fraction(1)}


def test_projection_is_a_left_inverse():
    rng = random.Random(9)
    for _ in range(20):
        w = tuple(sorted(rng.choice([1, 2, 3]) for _ in range(3)))
        assert project_symmetric(symmetrize(w)) == {w: Fraction(1)}


def test_eta_on_unit_module_is_the_identity():
    P = load_fixture("sl2_h")
    E = unit_module(P.pair.sub)
    rep = eta_map(P.pair, E, _lift(P, E), 3)
    n = len(rep.matrix)
    assert rep.ok
    assert all(rep.matrix[i][j] == (P.ring.one if i == j else P.ring.zero) for i in range(n) for j in range(n))


@pytest.mark.parametrize("name", ["abelian", "dual_numbers", "poly_xy", "sl2_h"])
def test_eta_is_bijective_and_well_defined(name):
    P = load_fixture(name)
    for mod in module_names(P):
        E = P.module(mod)
        lift_E = _lift(P, E)
        if lift_E is None or not E.rank:
            continue
        rep = eta_map(P.pair, E, lift_E, 3)
        assert rep.verdicts() == GREEN
        assert rep.notes["well_defined"]


def test_zero_sub_composite_is_classical_symmetrization():
    P = load_fixture("zero_sub")
    E = unit_module(P.pair.sub)
    rep = pbw_composite(P.pair, E, _lift(P, quotient_module(P.pair)), 3)
    assert rep.verdicts() == GREEN
    # with A = 0 each column is the normal form of the averaged word
    env = Envelope.for_pair(P.pair)
    ind = InducedModule(P.pair, E, 3)
    S, sbasis, _ = symmetric_module(P.pair, E, 3)
    for j, (w, _) in enumerate(sbasis):
        want = [P.ring.zero] * len(ind.basis)
        for v, c in symmetrize(w).items():
            for u, r in straighten(env, list(v)).terms.items():
                want[ind.index[(u, 0)]] += r * P.ring.scalar(c)
        assert [row[j] for row in rep.matrix] == want


def test_abelian_composite_at_n4():
    P = load_fixture("abelian")
    rep = pbw_composite(P.pair, None, _lift(P, quotient_module(P.pair)), 4)
    assert rep.verdicts() == GREEN
    assert rep.to_json()["source_dims"] == [1, 1, 1, 1, 1]


@pytest.mark.parametrize("name,mod", [("abelian", "E1"), ("abelian", "E2"), ("poly_xy", "E1"), ("poly_xy", "E2")])
def test_composite_with_coefficients(name, mod):
    P = load_fixture(name)
    E = P.module(mod)
    rep = pbw_composite(P.pair, E, _lift(P, quotient_module(P.pair)), 3, lift_E=_lift(P, E))
    assert rep.verdicts() == GREEN


def test_composite_requires_certified_lifts():
    P = load_fixture("abelian")
    with pytest.raises(ContractError):
        pbw_composite(P.pair, None, None, 2)
    with pytest.raises(ContractError):
        pbw_composite(P.pair, P.module("E1"), _lift(P, quotient_module(P.pair)), 2)


def test_polynomial_unit_search_at_bound_two():
    P = load_fixture("poly_xy")
    res = filtered_iso_search(P.pair, None, 3, bound=2)
    assert isinstance(res, Exists)
    assert res.report.verdicts() == GREEN


def test_polynomial_search_is_inconclusive_when_underbounded():
    P = load_fixture("poly_xy")
    E = P.module("E1")
    assert isinstance(filtered_iso_search(P.pair, E, 3, bound=2), SearchInconclusive)
    assert isinstance(filtered_iso_search(P.pair, E, 3, bound=3), Exists)


def test_full_sub_is_trivially_exists():
    P = load_fixture("full_sub")
    res = filtered_iso_search(P.pair, None, 3)
    assert isinstance(res, Exists)
    assert res.report.to_json()["source_dims"] == [1]


def test_borel_has_no_filtered_iso():
    P = load_fixture("sl2_borel")
    # the F2/F0 piece is only a diagnostic: with the twisted character it splits
    expected_split = {"unit": "no-solution", "quotient": "no-solution", "char1": "primitive"}
    for mod, split in expected_split.items():
        res = filtered_iso_search(P.pair, P.module(mod), 2)
        assert isinstance(res, NotExists)
        assert res.splitting == split
        assert recheck_not_exists(P.pair, P.module(mod), 2, res.certificate)
        bad = {k: 0 * v for k, v in res.certificate.items()}
        assert not recheck_not_exists(P.pair, P.module(mod), 2, bad)


@pytest.mark.parametrize("name", list_fixtures())
def test_search_agrees_with_frozen_verdicts(name):
    P = load_fixture(name)
    frozen = expected_verdicts()[name]["modules"]
    for mod in module_names(P):
        E = P.module(mod)
        if not E.rank:
            continue
        res = filtered_iso_search(P.pair, E, P.options.get("N", 3), P.options.get("bound"))
        assert res.kind == frozen[mod]["filtered_iso"]


@pytest.mark.parametrize("name", list_fixtures())
def test_search_and_composite_agree(name):
    P = load_fixture(name)
    lift = _lift(P, quotient_module(P.pair))
    E = unit_module(P.pair.sub)
    res = filtered_iso_search(P.pair, E, 3)
    if lift is None:
        assert not isinstance(res, Exists)
        return
    comp = pbw_composite(P.pair, E, lift, 3)
    assert comp.ok
    assert isinstance(res, Exists)
