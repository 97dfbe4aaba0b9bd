import pytest

from algebroid_pbw import AdaptedPair, Algebroid
from algebroid_pbw.registry import list_fixtures, load_fixture
from algebroid_pbw.ring import Derivation, PolynomialRing, dual_numbers, rational_field

E, H, F = 0, 1, 2


def sl2(constants=None):
    """sl2 with basis (e, h, f) over Q; pass ``constants`` to corrupt the table."""
    Q = rational_field()
    if constants is None:
        constants = {(H, E): {E: 2}, (H, F): {F: -2}, (E, F): {H: 1}}
    return Algebroid.from_constants(Q, 3, constants, names=["e", "h", "f"])


def borel():
    """Borel pair span(h, e) < sl2, generators reordered so A comes first."""
    Q = rational_field()
    # order (h, e, f): [h,e]=2e, [h,f]=-2f, [e,f]=h
    L = Algebroid.from_constants(Q, 3, {(0, 1): {1: 2}, (0, 2): {2: -2}, (1, 2): {0: 1}}, names=["h", "e", "f"])
    return AdaptedPair(L, 2)


def weyl():
    """R = Q[x], L = R d/dx, with A = 0."""
    R = PolynomialRing(["x"])
    d = Derivation(R, [R.one])
    L = Algebroid.from_constants(R, 1, {}, [d], names=["d"])
    return AdaptedPair(L, 0)


def dual():
    return dual_numbers()


@pytest.fixture(params=list_fixtures())
def fixture_problem(request):
    return load_fixture(request.param)


@pytest.fixture
def finite_fixture_names():
    return [n for n in list_fixtures() if load_fixture(n).ring.finite]


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
