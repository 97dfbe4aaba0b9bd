"""Filtered A-module isomorphisms ``S_R(L/A) (x) E -> U(L) (x)_{U(A)} E``.

Two independent routes:

* constructive: symmetrize, invert ``phi_E`` on the neighbourhood quotient,
  then push forward to the induced module (needs certified lifts);
* search: solve for lower-order corrections of the canonical word map that
  make it A-linear, with a certificate when none exist.
"""

from __future__ import annotations

import itertools
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .algebroid import AdaptedPair
from .envelope import InducedModule
from .errors import ContractError, InternalConsistencyError, StructuralError
from .filtered import FilteredMapReport, filtered_map_report, matmul, unitriangular_inverse
from .modcat import (
    Connection,
    FlatModule,
    Inconclusive,
    NoSolution,
    apply_matrix,
    quotient_module,
    solve_equivariant,
    equivariance_system,
    tensor_module,
    unit_module,
)
from .neighborhood import (
    BulletAction,
    NeighborhoodQuotient,
    QuotientRewriter,
    a1_quotient,
    filtration_extension,
    phi_map,
    tensor_words_module,
)
from .obstruction import ConnectionLift, split_test


def _add(out: dict, key, c) -> None:
    if not c:
        return
    v = out.get(key)
    v = c if v is None else v + c
    if v:
        out[key] = v
    else:
        out.pop(key, None)


# ---------------------------------------------------------------------------
# symmetric side


def symmetrize(word: Sequence[int]) -> dict:
    """Average of all orderings of ``word``: ``{tensor word: Fraction}``."""
    word = tuple(word)
    k = len(word)
    total = math.factorial(k)
    counts = Counter(itertools.permutations(word))
    return {w: Fraction(c, total) for w, c in sorted(counts.items())}


def project_symmetric(terms: dict) -> dict:
    """T -> S: sort each word."""
    out: dict = {}
    for w, c in terms.items():
        key = tuple(sorted(w))
        v = out.get(key, 0) + c
        if v:
            out[key] = v
        else:
            out.pop(key, None)
    return out


def symmetric_words(pair: AdaptedPair, N: int) -> list:
    letters = range(pair.p, pair.p + pair.q)
    return [w for k in range(N + 1) for w in itertools.combinations_with_replacement(letters, k)]


def symmetric_module(pair: AdaptedPair, E: Connection, N: int) -> tuple[FlatModule, list, list]:
    """``S^{<=N}_R(L/A) (x) E`` with A acting by derivations; basis ``(sorted word, s)``."""
    Q = quotient_module(pair)
    p = pair.p
    basis = [(w, s) for w in symmetric_words(pair, N) for s in range(E.rank)]
    index = {b: i for i, b in enumerate(basis)}
    ring = pair.ring
    n = len(basis)
    mats = []
    for a in range(p):
        M = [[ring.zero] * n for _ in range(n)]
        Qa, Ea = Q.matrices[a], E.matrices[a]
        for j, (w, s) in enumerate(basis):
            for pos, letter in enumerate(w):
                for u in range(pair.q):
                    c = Qa[u][letter - p]
                    if c:
                        key = (tuple(sorted(w[:pos] + (p + u,) + w[pos + 1:])), s)
                        M[index[key]][j] = M[index[key]][j] + c
            for t in range(E.rank):
                if Ea[t][s]:
                    M[index[(w, t)]][j] = M[index[(w, t)]][j] + Ea[t][s]
        mats.append(M)
    labels = ["".join(pair.ambient.names[i] for i in w) + f"|{E.labels[s]}" if w else f"1|{E.labels[s]}"
              for w, s in basis]
    return FlatModule(pair.sub, n, mats, labels=labels), basis, [len(w) for w, _ in basis]


def induced_target(pair: AdaptedPair, E: Connection, N: int, budget=None) -> InducedModule:
    return InducedModule(pair, E, N, budget)


# ---------------------------------------------------------------------------
# eta and the constructive composite


def _require_lift(lift, what: str):
    if lift is None or not getattr(lift, "flags", None) or not all(lift.flags.values()):
        raise ContractError(f"{what} must be a certified lift (from promote_to_neighbourhood)")


def eta_map(pair: AdaptedPair, E: Connection, lift_E: ConnectionLift, N: int,
            quotient: NeighborhoodQuotient | None = None, unit_quotient: NeighborhoodQuotient | None = None,
            samples: int = 8) -> FilteredMapReport:
    """``P (x) e |-> P . (1 (x) e)`` from ``j*j_!(E)`` to ``j*j_!(1_A) (x)_R E``."""
    _require_lift(lift_E, "lift_E")
    ring = pair.ring
    QE = quotient if quotient is not None else a1_quotient(pair, N, E)
    Q1 = unit_quotient if unit_quotient is not None else a1_quotient(pair, N)
    target = tensor_module(Q1.module, E)
    tbasis = [(w, s) for (w, _) in Q1.basis for s in range(E.rank)]
    tindex = {b: i for i, b in enumerate(tbasis)}
    rw1 = Q1.rewriter
    nab = lift_E.matrices

    def act(g, state):
        rho = pair.ambient.anchor[g]
        out: dict = {}
        for (w, s), c in state.items():
            _add(out, (w, s), rho(c))
            for (w2, _), c2 in rw1.act_basis(g, w, 0).items():
                _add(out, (w2, s), c * c2)
            for t in range(E.rank):
                if nab[g][t][s]:
                    _add(out, (w, t), c * nab[g][t][s])
        return out

    def apply(word, state):
        for g in reversed(list(word)):
            state = act(g, state)
        return state

    H = [[ring.zero] * len(QE.basis) for _ in range(len(tbasis))]
    for j, (w, s) in enumerate(QE.basis):
        for key, c in apply(w, {((), s): ring.one}).items():
            H[tindex[key]][j] = c
    rep = filtered_map_report(
        "eta", N, QE.module, target, H, QE.degrees, [len(w) for w, _ in tbasis],
        gr_expected=lambda j: {tindex[QE.basis[j]]: ring.one},
        representative="P (x) e |-> P.(1 (x) e)",
    )
    # (P a).(1 (x) e) = P.(1 (x) a.e) on random samples
    rng = random.Random(7)
    words = [w for (w, s) in QE.basis if s == 0 and len(w) < N]
    well_defined = True
    for _ in range(samples if pair.p and words else 0):
        w = rng.choice(words)
        a = rng.randrange(pair.p)
        s = rng.randrange(E.rank)
        lhs = apply(tuple(w) + (a,), {((), s): ring.one})
        ae = E.act(a, E.basis_vector(s))
        rhs: dict = {}
        for t, c in enumerate(ae):
            for key, c2 in apply(w, {((), t): c}).items():
                _add(rhs, key, c2)
        if lhs != rhs:
            well_defined = False
    rep.notes["well_defined"] = well_defined
    return rep


def _composite_columns(pair, E, N, lift, lift_E, budget=None):
    ring = pair.ring
    QE = a1_quotient(pair, N, E, budget=budget)
    phiE = phi_map(pair, lift, N, E, lift_E, quotient=QE, strict=False)
    if not phiE.ok:
        raise InternalConsistencyError(f"phi_E verdicts failed: {phiE.verdicts()}")
    # phi_E has identity gr on matching bases, so it is unitriangular
    inv = unitriangular_inverse(phiE.matrix, ring)
    T, tbasis, _ = tensor_words_module(pair, E, N)
    tindex = {b: i for i, b in enumerate(tbasis)}
    S, sbasis, sdeg = symmetric_module(pair, E, N)
    ind = induced_target(pair, E, N, budget)
    target = ind.module()
    # quotient map j*j_!(E) -> i*i_!(E) on coset words
    push = [[ring.zero] * len(QE.basis) for _ in range(len(ind.basis))]
    for j, (w, s) in enumerate(QE.basis):
        elem = ind.env.word_times(w, {(): ring.one})
        for key, c in ind.reduce(elem, E.basis_vector(s)).items():
            push[ind.index[key]][j] = c
    sym = [[ring.zero] * len(sbasis) for _ in range(len(tbasis))]
    for j, (w, s) in enumerate(sbasis):
        for tw, c in symmetrize(w).items():
            sym[tindex[(tw, s)]][j] = ring.scalar(c)
    composite = matmul(push, matmul(inv, sym, ring), ring)
    return S, sbasis, sdeg, ind, target, composite, phiE


def pbw_composite(pair: AdaptedPair, E: Connection | None, lift: ConnectionLift, N: int,
                  lift_E: ConnectionLift | None = None, budget=None, strict: bool = True) -> FilteredMapReport:
    """``S (x) E -> T (x) E -> j*j_!(E) -> i*i_!(E)`` with its four verdicts."""
    _require_lift(lift, "lift on L/A")
    E = E if E is not None else unit_module(pair.sub)
    if E.rank == 0:
        raise ContractError("E must be a nonzero free module")
    if lift_E is None and any(c for M in E.matrices for row in M for c in row):
        raise ContractError("a certified lift of E is required unless E is the unit module")
    if lift_E is not None:
        _require_lift(lift_E, "lift_E")
    S, sbasis, sdeg, ind, target, composite, phiE = _composite_columns(pair, E, N, lift, lift_E, budget)
    ring = pair.ring
    rep = filtered_map_report(
        "pbw_composite", N, S, target, composite, sdeg, ind.degrees,
        gr_expected=lambda j: {ind.index[sbasis[j]]: ring.one},
        representative="symmetrize, then phi_E^{-1}, then the quotient j*j_!(E) -> i*i_!(E)",
    )
    if strict and not rep.ok:
        raise InternalConsistencyError(f"pbw composite verdicts failed: {rep.verdicts()}")
    return rep


# ---------------------------------------------------------------------------
# direct search


@dataclass
class Exists:
    report: FilteredMapReport
    kind: str = "Exists"


@dataclass
class NotExists:
    certificate: dict
    rank: int
    augmented_rank: int
    N: int
    splitting: str | None = None  # verdict of the F^2/F^0 splitting test
    kind: str = "NotExists"


@dataclass
class SearchInconclusive:
    bound: int
    N: int
    kind: str = "Inconclusive"


def canonical_map(sbasis, ind: InducedModule, ring) -> list:
    Phi0 = [[ring.zero] * len(sbasis) for _ in range(len(ind.basis))]
    for j, key in enumerate(sbasis):
        Phi0[ind.index[key]][j] = ring.one
    return Phi0


def lower_support(sdeg, tdeg) -> list:
    return [(i, j) for j, dj in enumerate(sdeg) for i, di in enumerate(tdeg) if di < dj]


def filtered_iso_search(pair: AdaptedPair, E: Connection | None, N: int, bound=None, budget=None):
    """Search for a filtered A-linear map ``S^{<=N} (x) E -> (U(L) (x)_{U(A)} E)^{<=N}``
    whose gr is the canonical word map; any such map is bijective.
    """
    E = E if E is not None else unit_module(pair.sub)
    ring = pair.ring
    S, sbasis, sdeg = symmetric_module(pair, E, N)
    ind = induced_target(pair, E, N, budget)
    target = ind.module()
    Phi0 = canonical_map(sbasis, ind, ring)
    support = lower_support(sdeg, ind.degrees)
    Phi, verdict = solve_equivariant(S, target, Phi0, support, bound)
    if Phi is not None:
        rep = filtered_map_report(
            "filtered_iso_search", N, S, target, Phi, sdeg, ind.degrees,
            gr_expected=lambda j: {ind.index[sbasis[j]]: ring.one},
            representative="canonical word map plus solved lower-order corrections",
        )
        if not rep.ok:
            raise InternalConsistencyError(f"solved map fails verdicts: {rep.verdicts()}")
        return Exists(rep)
    if isinstance(verdict, NoSolution):
        split = None
        if N >= 2:
            ext = filtration_extension(target, ind.degrees, 2)
            split = split_test(ext).kind
        return NotExists(verdict.certificate, verdict.rank, verdict.augmented_rank, N, split)
    return SearchInconclusive(verdict.bound, N)


def recheck_not_exists(pair: AdaptedPair, E: Connection | None, N: int, certificate: dict, bound=None) -> bool:
    """Rebuild the linear system and check the inconsistency certificate (no solving)."""
    from .linalg import check_certificate

    E = E if E is not None else unit_module(pair.sub)
    S, sbasis, sdeg = symmetric_module(pair, E, N)
    ind = induced_target(pair, E, N)
    target = ind.module()
    Phi0 = canonical_map(sbasis, ind, pair.ring)
    columns, tvec, _ = equivariance_system(S, target, Phi0, lower_support(sdeg, ind.degrees), bound)
    return check_certificate(columns, tvec, certificate)
