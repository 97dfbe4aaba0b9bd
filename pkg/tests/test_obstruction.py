import json
import random

import pytest

from algebroid_pbw.errors import ContractError
from algebroid_pbw.modcat import Cochain, ce_differential, module_validate, quotient_module, unit_module
from algebroid_pbw.obstruction import (
    NONVANISHING,
    VANISHES,
    ConnectionLift,
    alpha_vanishing,
    atiyah_cocycle,
    certificate_from_json,
    certificate_to_json,
    compare_classes,
    extension_middle,
    jet_one,
    kappa,
    promote_to_neighbourhood,
    tilde_vanishing,
    verify_splitting,
)
from algebroid_pbw.registry import expected_verdicts, load_fixture, module_names

from conftest import borel


def _modules(P):
    return [(name, P.module(name)) for name in module_names(P)]


def test_extensions_are_exact(fixture_problem):
    for _, E in _modules(fixture_problem):
        for ext in (extension_middle(fixture_problem.pair, E), jet_one(fixture_problem.pair, E)):
            assert ext.exactness_defects() == []
            assert ext.middle.rank == ext.sub.rank + ext.quot.rank
            assert module_validate(ext.middle).ok


def test_zero_sub_always_vanishes():
    P = load_fixture("zero_sub")
    for _, E in _modules(P):
        assert alpha_vanishing(P.pair, E).verdict == VANISHES
        assert tilde_vanishing(P.pair, E).verdict == VANISHES


def test_abelian_unit_vanishes_with_certificate():
    P = load_fixture("abelian")
    rep = alpha_vanishing(P.pair, P.module("unit"))
    assert rep.vanishes and rep.primitive is not None
    assert verify_splitting(rep)


def test_borel_quotient_is_nonsplit():
    P = load_fixture("sl2_borel")
    rep = alpha_vanishing(P.pair, P.module("quotient"))
    assert rep.verdict == NONVANISHING
    assert rep.augmented_rank == rep.rank + 1
    assert verify_splitting(rep)
    assert tilde_vanishing(P.pair, P.module("quotient")).verdict == NONVANISHING


def test_tampered_certificate_is_rejected():
    P = load_fixture("sl2_borel")
    rep = alpha_vanishing(P.pair, P.module("quotient"))
    good = dict(rep.certificate)
    # scaling keeps a certificate valid; zeroing it or moving it to another row must not
    rep.certificate = {k: 3 * v for k, v in good.items()}
    assert verify_splitting(rep)
    rep.certificate = {k: 0 * v for k, v in good.items()}
    assert not verify_splitting(rep)
    rep.certificate = {(0, 0, 0): v for v in good.values()}
    assert not verify_splitting(rep)


def test_tampered_primitive_is_rejected():
    P = load_fixture("sl2_h")
    rep = alpha_vanishing(P.pair, P.module("quotient"))
    assert rep.vanishes
    ring = P.ring
    rep.primitive = tuple(x + ring.one for x in rep.primitive)
    assert not verify_splitting(rep)


def test_certificate_json_round_trip():
    P = load_fixture("sl2_borel")
    rep = alpha_vanishing(P.pair, P.module("quotient"))
    text = json.dumps(certificate_to_json(rep.certificate))
    assert certificate_from_json(json.loads(text)) == rep.certificate


def test_verdicts_match_frozen_table(fixture_problem):
    P = fixture_problem
    frozen = expected_verdicts()[P.name]["modules"]
    bound = P.options.get("bound")
    for name, E in _modules(P):
        assert alpha_vanishing(P.pair, E, bound).verdict == frozen[name]["alpha_E"]
        assert tilde_vanishing(P.pair, E, bound).verdict == frozen[name]["tilde_E"]


def test_promoted_lift_is_a_neighbourhood_connection(fixture_problem):
    P = fixture_problem
    for _, E in _modules(P):
        rep = alpha_vanishing(P.pair, E, P.options.get("bound"))
        if not rep.vanishes:
            with pytest.raises(ContractError):
                promote_to_neighbourhood(P.pair, E, rep)
            continue
        lift = promote_to_neighbourhood(P.pair, E, rep)
        assert all(lift.flags.values())
        assert atiyah_cocycle(P.pair, E, lift).is_zero()
        rt = tilde_vanishing(P.pair, E, P.options.get("bound"))
        lift2 = promote_to_neighbourhood(P.pair, E, rt)
        assert atiyah_cocycle(P.pair, E, lift2).is_zero()


def test_abelian_lift_commutes():
    P = load_fixture("abelian")
    for name in ("E1", "E2"):
        E = P.module(name)
        lift = promote_to_neighbourhood(P.pair, E, alpha_vanishing(P.pair, E))
        assert lift.neighbourhood_defects() == []


def test_genuine_module_has_zero_cocycle():
    # over Q with zero anchor the zero connection is an honest L-module on 1_A
    P = load_fixture("sl2_e")
    E = unit_module(P.pair.sub)
    assert atiyah_cocycle(P.pair, E).is_zero()


def test_zero_lift_cocycle_is_the_extension_cocycle(fixture_problem):
    P = fixture_problem
    for _, E in _modules(P):
        assert atiyah_cocycle(P.pair, E) == extension_middle(P.pair, E).cocycle()


def test_two_lifts_differ_by_a_coboundary():
    pair = borel()
    E = quotient_module(pair)
    ring = pair.ring
    rng = random.Random(4)
    for _ in range(5):
        D = ring.sample(rng)
        c0 = atiyah_cocycle(pair, E)
        c1 = atiyah_cocycle(pair, E, ConnectionLift(pair, E, [[[D]]]))
        b = Cochain.zero_cochain(c0.module, (D,))
        assert c0 - c1 == ce_differential(b)


def test_borel_cocycle_value():
    P = load_fixture("sl2_borel")
    c = atiyah_cocycle(P.pair, P.module("quotient"))
    # generators (h, e, f): [e, f] = h and h acts on f~ by -2
    assert [str(x) for x in c(1)] == ["-2"]
    assert [str(x) for x in c(0)] == ["0"]


def test_two_cocycles_are_related_by_kappa(fixture_problem):
    P = fixture_problem
    for _, E in _modules(P):
        ca = extension_middle(P.pair, E).cocycle()
        ct = jet_one(P.pair, E).cocycle()
        for a in range(P.pair.p):
            assert kappa(P.pair, E, ca(a)) == tuple(-v for v in ct(a))


def test_compare_classes_all_flags(fixture_problem):
    P = fixture_problem
    for _, E in _modules(P):
        rep = compare_classes(P.pair, E, P.options.get("bound"))
        assert rep.ok, rep.to_json()
