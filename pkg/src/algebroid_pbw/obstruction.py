"""Obstruction classes for extending an A-module structure along A < L.

Two extensions of A-modules carry the class:

* the degree-one part of the induced module,
  ``0 -> E -> (U(L) (x)_{U(A)} E)^{<=1} -> (L/A) (x) E -> 0``;
* the first jet module, ``0 -> Hom_R(L/A, E) -> J^1(E) -> E -> 0``.

Both are handled by the generic :class:`Extension`, whose class is the
cohomology class of an explicit 1-cocycle with values in ``Hom_R(quot, sub)``.
A primitive of that cocycle is the same thing as an A-linear splitting.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence

from .algebroid import AdaptedPair, is_zero, vadd, vscale, vsub
from .envelope import InducedModule
from .errors import ContractError, InternalConsistencyError, StructuralError
from .linalg import check_certificate
from .modcat import (
    Cochain,
    Connection,
    FlatModule,
    Inconclusive,
    NoSolution,
    Primitive,
    apply_matrix,
    coboundary_solve,
    coboundary_system,
    ce_differential,
    hom_module,
    is_equivariant,
    quotient_module,
    tensor_module,
)

VANISHES = "Vanishes"
NONVANISHING = "NonVanishing"
INCONCLUSIVE = "Inconclusive"


# ---------------------------------------------------------------------------
# extensions


@dataclass
class Extension:
    """``0 -> sub -> middle -> quot -> 0`` with the middle basis ordered sub first."""

    sub: Connection
    quot: Connection
    middle: Connection
    name: str = "extension"

    def __post_init__(self):
        k, m = self.sub.rank, self.quot.rank
        if self.middle.rank != k + m:
            raise StructuralError("middle rank must be rank(sub) + rank(quot)")

    @property
    def inclusion(self) -> list:
        ring = self.middle.ring
        k = self.sub.rank
        return [[ring.one if i == j else ring.zero for j in range(k)] for i in range(self.middle.rank)]

    @property
    def projection(self) -> list:
        ring = self.middle.ring
        k, m = self.sub.rank, self.quot.rank
        return [[ring.one if j == k + i else ring.zero for j in range(k + m)] for i in range(m)]

    def exactness_defects(self) -> list:
        """Blocks of the middle action that disagree with sub/quot (should be empty)."""
        k, m = self.sub.rank, self.quot.rank
        bad = []
        for g, M in enumerate(self.middle.matrices):
            for i in range(k + m):
                for j in range(k + m):
                    if i < k and j < k:
                        want = self.sub.matrices[g][i][j]
                    elif i >= k and j >= k:
                        want = self.quot.matrices[g][i - k][j - k]
                    elif i >= k and j < k:
                        want = self.middle.ring.zero
                    else:
                        continue
                    if M[i][j] != want:
                        bad.append((g, i, j))
        return bad

    def hom(self) -> FlatModule:
        return hom_module(self.quot, self.sub)

    def cocycle(self) -> Cochain:
        """``c(a)(x) = a . sigma(x) - sigma(a . x)`` for the coordinate section sigma."""
        H = self.hom()
        k, m = self.sub.rank, self.quot.rank
        values = {}
        for g, M in enumerate(self.middle.matrices):
            values[(g,)] = tuple(M[t][k + s] for t in range(k) for s in range(m))
        return Cochain(H, 1, values)

    def section(self, b) -> list:
        """Matrix of ``tau = sigma - iota b`` (middle x quot) for a primitive ``b``."""
        ring = self.middle.ring
        k, m = self.sub.rank, self.quot.rank
        T = [[ring.zero] * m for _ in range(k + m)]
        for t in range(k):
            for s in range(m):
                T[t][s] = -b[t * m + s]
        for s in range(m):
            T[k + s][s] = ring.one
        return T

    def retraction(self, b) -> list:
        """Matrix of the A-linear retraction ``[I | b]`` (sub x middle)."""
        ring = self.middle.ring
        k, m = self.sub.rank, self.quot.rank
        S = [[ring.zero] * (k + m) for _ in range(k)]
        for t in range(k):
            S[t][t] = ring.one
            for s in range(m):
                S[t][k + s] = b[t * m + s]
        return S


def split_test(ext: Extension, bound=None):
    """Primitive / NoSolution / Inconclusive for the class of ``ext``."""
    return coboundary_solve(ext.cocycle(), bound)


def extension_middle(pair: AdaptedPair, E: Connection) -> Extension:
    """The degree-one induced module as an extension of ``(L/A) (x) E`` by ``E``.

    Basis: ``1 (x) e_s`` (s < m) followed by ``n_t (x) e_s`` at ``m + t*m + s``,
    matching :func:`tensor_module` on ``(L/A, E)``.
    """
    ind = InducedModule(pair, E, 1)
    middle = ind.module()
    Q = quotient_module(pair)
    return Extension(E, tensor_module(Q, E), middle, name="induced")


def anchor_vec(pair: AdaptedPair, t: int, x) -> tuple:
    """``n_t`` applied to the coefficients of ``x`` (no module action)."""
    rho = pair.ambient.anchor[pair.p + t]
    return tuple(rho(r) for r in x)


def jet_action(pair: AdaptedPair, E: Connection, a: int, x, yprime) -> tuple:
    """``a * phi`` for the jet with value ``x`` at 1 and reduced values ``y'_t``.

    ``y'_t = phi(n_t) - n_t(x)`` are R-linear coordinates for the ``*``
    module structure ``(P * phi)(Q) = phi(QP)``.  Uses
    ``(a*phi)(1) = a.x`` and ``(a*phi)(n_t) = a.phi(n_t) - phi([a, n_t])``.
    """
    L, p, q = pair.ambient, pair.p, pair.q
    y = [vadd(yprime[t], anchor_vec(pair, t, x)) for t in range(q)]
    X = E.act(a, x)
    Y = []
    for t in range(q):
        br = L.brackets[a][p + t]
        val = E.act(a, y[t])
        for k in range(p):
            if br[k]:
                val = vsub(val, vscale(br[k], E.act(k, x)))
        for u in range(q):
            if br[p + u]:
                val = vsub(val, vscale(br[p + u], y[u]))
        Y.append(vsub(val, anchor_vec(pair, t, X)))
    return X, Y


def jet_one(pair: AdaptedPair, E: Connection) -> Extension:
    """``J^1(E)`` as an extension of ``E`` by ``Hom_R(L/A, E)``.

    Sub basis: ``phi^(u,t)`` (x = 0, y'_t = e_u) at ``u*q + t``, matching
    :func:`hom_module` on ``(L/A, E)``; then ``phi0^(s)`` (x = e_s, y' = 0).
    """
    A = pair.sub
    ring = pair.ring
    m, q = E.rank, pair.q
    n = m * q + m
    zero = E.zero()

    def coords(X, Y):
        out = [ring.zero] * n
        for u in range(m):
            for t in range(q):
                out[u * q + t] = Y[t][u]
        for s in range(m):
            out[m * q + s] = X[s]
        return out

    basis = []
    for u in range(m):
        for t in range(q):
            basis.append((zero, [E.basis_vector(u) if tt == t else zero for tt in range(q)]))
    for s in range(m):
        basis.append((E.basis_vector(s), [zero] * q))
    mats = []
    for a in range(A.rank):
        cols = [coords(*jet_action(pair, E, a, x, yp)) for x, yp in basis]
        mats.append([[cols[j][i] for j in range(n)] for i in range(n)])
    labels = [f"d{pair.coset_names()[t]}->{E.labels[u]}" for u in range(m) for t in range(q)]
    labels += [f"j({E.labels[s]})" for s in range(m)]
    middle = FlatModule(A, n, mats, labels=labels)
    return Extension(hom_module(quotient_module(pair), E), E, middle, name="jet")


# ---------------------------------------------------------------------------
# lifts of the A-action to L-connections


class ConnectionLift(Connection):
    """An L-connection on E whose A-part is E's action."""

    def __init__(self, pair: AdaptedPair, E: Connection, coset_matrices: Sequence, flags=None):
        if len(coset_matrices) != pair.q:
            raise StructuralError("one matrix per coset generator")
        super().__init__(pair.ambient, E.rank, list(E.matrices) + list(coset_matrices), labels=E.labels)
        self.pair = pair
        self.base = E
        self.flags = dict(flags or {})

    @classmethod
    def zero_lift(cls, pair: AdaptedPair, E: Connection) -> "ConnectionLift":
        ring = pair.ring
        z = [[ring.zero] * E.rank for _ in range(E.rank)]
        return cls(pair, E, [z] * pair.q)

    def restriction_defects(self) -> list:
        return [g for g in range(self.pair.p) if self.matrices[g] != self.base.matrices[g]]

    def neighbourhood_defects(self) -> list:
        """``(a, l, s)`` where ``[nabla_a, nabla_l] e_s != nabla_{[a,l]} e_s``."""
        bad = []
        for a in range(self.pair.p):
            for l in range(self.pair.ambient.rank):
                for s in range(self.rank):
                    if not is_zero(self.curvature(a, l, s)):
                        bad.append((a, l, s))
        return bad


def atiyah_cocycle(pair: AdaptedPair, E: Connection, lift: ConnectionLift | None = None) -> Cochain:
    """``c(a)(n_t (x) e) = nabla_{[a,n_t]} e - a.(nabla_{n_t} e) + nabla_{n_t}(a.e)``.

    Values in ``Hom_R((L/A) (x) E, E)``.  With the zero lift this is
    literally the cocycle of :func:`extension_middle`.
    """
    if lift is None:
        lift = ConnectionLift.zero_lift(pair, E)
    if lift.restriction_defects():
        raise ContractError("lift does not restrict to the A-action of E")
    L, p, q, m = pair.ambient, pair.p, pair.q, E.rank
    H = hom_module(tensor_module(quotient_module(pair), E), E)
    values = {}
    for a in range(p):
        val = [pair.ring.zero] * (m * q * m)
        for t in range(q):
            for s in range(m):
                e = E.basis_vector(s)
                v = lift.act_element(L.brackets[a][p + t], e)
                v = vsub(v, E.act(a, lift.act(p + t, e)))
                v = vadd(v, lift.act(p + t, E.act(a, e)))
                for u in range(m):
                    val[u * (q * m) + t * m + s] = v[u]
        values[(a,)] = tuple(val)
    return Cochain(H, 1, values)


# ---------------------------------------------------------------------------
# vanishing tests


@dataclass
class ObstructionReport:
    kind: str  # "alpha" or "tilde"
    extension: Extension
    cocycle: Cochain
    verdict: str
    primitive: tuple | None = None
    certificate: dict | None = None
    bound: int | None = None
    rank: int = 0
    augmented_rank: int = 0

    @property
    def vanishes(self) -> bool:
        return self.verdict == VANISHES

    def section(self):
        return None if self.primitive is None else self.extension.section(self.primitive)

    def to_json(self) -> dict:
        out = {
            "kind": self.kind,
            "verdict": self.verdict,
            "cocycle": self.cocycle.to_json(),
            "bound": self.bound,
            "rank": self.rank,
            "augmented_rank": self.augmented_rank,
        }
        if self.primitive is not None:
            out["primitive"] = [str(x) for x in self.primitive]
        if self.certificate is not None:
            out["certificate"] = certificate_to_json(self.certificate)
        return out


def certificate_to_json(cert: dict) -> list:
    return [{"key": _jsonable(k), "value": str(v)} for k, v in sorted(cert.items(), key=lambda kv: repr(kv[0]))]


def certificate_from_json(items) -> dict:
    from fractions import Fraction

    return {_tupled(d["key"]): Fraction(d["value"]) for d in items}


def _jsonable(k):
    if isinstance(k, tuple):
        return [_jsonable(x) for x in k]
    return k


def _tupled(k):
    if isinstance(k, list):
        return tuple(_tupled(x) for x in k)
    return k


def _report(kind: str, ext: Extension, bound) -> ObstructionReport:
    c = ext.cocycle()
    res = coboundary_solve(c, bound)
    if isinstance(res, Primitive):
        rep = ObstructionReport(kind, ext, c, VANISHES, primitive=res.primitive, bound=bound)
    elif isinstance(res, NoSolution):
        rep = ObstructionReport(kind, ext, c, NONVANISHING, certificate=res.certificate,
                                rank=res.rank, augmented_rank=res.augmented_rank, bound=bound)
    else:
        rep = ObstructionReport(kind, ext, c, INCONCLUSIVE, bound=res.bound,
                                rank=res.rank, augmented_rank=res.augmented_rank)
    if rep.verdict != INCONCLUSIVE and not verify_splitting(rep):
        raise InternalConsistencyError(f"{kind} certificate failed re-verification")
    return rep


def alpha_vanishing(pair: AdaptedPair, E: Connection, bound=None) -> ObstructionReport:
    """Does ``0 -> E -> (U(L) (x) E)^{<=1} -> (L/A) (x) E -> 0`` split A-linearly?"""
    return _report("alpha", extension_middle(pair, E), bound)


def tilde_vanishing(pair: AdaptedPair, E: Connection, bound=None) -> ObstructionReport:
    """Does ``0 -> Hom(L/A, E) -> J^1(E) -> E -> 0`` split A-linearly?"""
    return _report("tilde", jet_one(pair, E), bound)


def verify_splitting(report: ObstructionReport) -> bool:
    """Re-check the certificate of ``report`` without solving anything."""
    ext = report.extension
    if report.verdict == VANISHES:
        b = report.primitive
        if ce_differential(Cochain.zero_cochain(ext.hom(), b)) != report.cocycle:
            return False
        tau = ext.section(b)
        if is_equivariant(ext.quot, ext.middle, tau):
            return False
        S = ext.retraction(b)
        if is_equivariant(ext.middle, ext.sub, S):
            return False
        # s o iota = id
        for j in range(ext.sub.rank):
            col = apply_matrix(S, tuple(row[j] for row in ext.inclusion))
            if col != ext.sub.basis_vector(j):
                return False
        return True
    if report.verdict == NONVANISHING:
        columns, target, _ = coboundary_system(report.cocycle, report.bound)
        return check_certificate(columns, target, report.certificate)
    return False


# ---------------------------------------------------------------------------
# from a splitting to an L-connection


def promote_to_neighbourhood(pair: AdaptedPair, E: Connection, report: ObstructionReport) -> ConnectionLift:
    """The L-connection determined by a splitting, with its identities verified.

    From the induced extension, ``nabla_l e = s(l . (1 (x) e))`` for the
    retraction ``s``; from the jet extension, ``nabla_l e = tau(e)(l)``.
    """
    if report.verdict != VANISHES:
        raise ContractError("no splitting to promote")
    if not verify_splitting(report):
        raise ContractError("splitting does not verify")
    ring = pair.ring
    m, q = E.rank, pair.q
    b = report.primitive
    mats = []
    for t in range(q):
        N = [[ring.zero] * m for _ in range(m)]
        for u in range(m):
            for s in range(m):
                if report.kind == "alpha":
                    N[u][s] = b[u * (q * m) + t * m + s]
                else:
                    N[u][s] = -b[(u * q + t) * m + s]
        mats.append(N)
    lift = ConnectionLift(pair, E, mats)
    flags = _lift_flags(lift)
    lift.flags = flags
    if not all(flags.values()):
        raise InternalConsistencyError(f"promoted connection fails identities: {flags}")
    return lift


def _lift_flags(lift: ConnectionLift, samples: int = 4) -> dict:
    pair, E = lift.pair, lift.base
    ring = pair.ring
    rng = random.Random(0)
    L = pair.ambient
    restriction = not lift.restriction_defects()
    # nabla_{rl} = r nabla_l and nabla_l(r e) = l(r) e + r nabla_l e, on samples
    r_linear = leibniz = True
    for _ in range(samples):
        r = ring.sample(rng)
        for l in range(L.rank):
            for s in range(E.rank):
                e = E.basis_vector(s)
                if lift.act_element(L.gen(l, r), e) != vscale(r, lift.act(l, e)):
                    r_linear = False
                lhs = vsub(lift.act(l, vscale(r, e)), vscale(r, lift.act(l, e)))
                if lhs != vscale(L.anchor[l](r), e):
                    leibniz = False
    neighbourhood = not lift.neighbourhood_defects()
    zero = atiyah_cocycle(pair, E, lift).is_zero()
    return {
        "restricts": restriction,
        "r_linear": r_linear,
        "leibniz": leibniz,
        "neighbourhood": neighbourhood,
        "atiyah_zero": zero,
    }


# ---------------------------------------------------------------------------
# comparing the two constructions


@dataclass
class ComparisonReport:
    ell_equivariant: bool
    ell_kills_A: bool
    kernel_identified: bool
    mutually_inverse: bool
    cocycles_related: bool
    verdicts_agree: bool
    alpha: str
    tilde: str
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all([self.ell_equivariant, self.ell_kills_A, self.kernel_identified,
                    self.mutually_inverse, self.cocycles_related, self.verdicts_agree])

    def to_json(self) -> dict:
        return {
            "ell_equivariant": self.ell_equivariant,
            "ell_kills_A": self.ell_kills_A,
            "kernel_identified": self.kernel_identified,
            "mutually_inverse": self.mutually_inverse,
            "cocycles_related": self.cocycles_related,
            "verdicts_agree": self.verdicts_agree,
            "alpha": self.alpha,
            "tilde": self.tilde,
        }


def ell_matrix(pair: AdaptedPair, E: Connection, ind: Extension, jet: Extension) -> list:
    """``ell(phi)(n_t) = n_t (x) phi(1) - 1 (x) phi(n_t)`` as a matrix J^1 -> Hom_R(L/A, B).

    In reduced coordinates this is ``sum_s x_s [n_t (x) e_s] - y'_t``.
    Hom_R(L/A, B) is indexed ``row * q + t`` (row in B).
    """
    ring = pair.ring
    m, q = E.rank, pair.q
    B = ind.middle.rank
    n = jet.middle.rank
    ell = [[ring.zero] * n for _ in range(B * q)]
    for j in range(n):
        if j < m * q:
            u, t = divmod(j, q)
            ell[u * q + t][j] = -ring.one
        else:
            s = j - m * q
            for t in range(q):
                ell[(m + t * m + s) * q + t][j] = ring.one
    return ell


def ell_inverse(pair: AdaptedPair, E: Connection, psi, x) -> tuple:
    """Inverse of ``(ell, ev_1)`` on the kernel of the difference map.

    ``psi`` is a Hom_R(L/A, B) vector with ``pi o psi = (n -> n (x) x)``;
    returns the jet coordinates with ``y'_t = -(E-part of psi(n_t) - n_t (x) x)``.
    The function ``n |-> -(E-part of psi(n) - n (x) x)`` is the map written
    ``phi_{e,f}`` in the comparison of the two classes.
    """
    ring = pair.ring
    m, q = E.rank, pair.q
    out = [ring.zero] * (m * q + m)
    for u in range(m):
        for t in range(q):
            out[u * q + t] = -psi[u * q + t]
    for s in range(m):
        out[m * q + s] = x[s]
    return tuple(out)


def difference_map(pair: AdaptedPair, E: Connection, psi, x) -> tuple:
    """``pi o psi - (n -> n (x) x)`` in Hom_R(L/A, (L/A) (x) E), indexed ``(t2*m + s)*q + t``."""
    m, q = E.rank, pair.q
    out = []
    for idx in range(q * m):
        t2, s = divmod(idx, m)
        for t in range(q):
            v = psi[(m + idx) * q + t]
            if t == t2:
                v = v - x[s]
            out.append(v)
    return tuple(out)


def kappa(pair: AdaptedPair, E: Connection, f) -> tuple:
    """Hom_R((L/A) (x) E, E) -> Hom_R(E, Hom_R(L/A, E)), ``kappa(f)(e)(n) = f(n (x) e)``."""
    m, q = E.rank, pair.q
    out = [None] * (m * q * m)
    for u in range(m):
        for t in range(q):
            for s in range(m):
                out[(u * q + t) * m + s] = f[u * (q * m) + t * m + s]
    return tuple(out)


def compare_classes(pair: AdaptedPair, E: Connection, bound=None, samples: int = 3) -> ComparisonReport:
    ind = extension_middle(pair, E)
    jet = jet_one(pair, E)
    ring = pair.ring
    m, q, p = E.rank, pair.q, pair.p
    ell = ell_matrix(pair, E, ind, jet)
    QA = quotient_module(pair)
    HomB = hom_module(QA, ind.middle)
    equivariant = not is_equivariant(jet.middle, HomB, ell)
    # ell(phi)(a) = a (x) x - 1 (x) a.x, computed in B directly
    kills = True
    for j in range(jet.middle.rank):
        x = tuple(jet.middle.basis_vector(j)[m * q + s] for s in range(m))
        for a in range(p):
            left = ind.middle.act(a, tuple(x) + (ring.zero,) * (m * q))
            right = E.act(a, x) + (ring.zero,) * (m * q)
            if left != right:
                kills = False
    rng = random.Random(1)
    kernel_ok = inverse_ok = True
    for _ in range(samples):
        coords = tuple(ring.sample(rng) for _ in range(jet.middle.rank))
        psi = apply_matrix(ell, coords)
        x = coords[m * q:]
        if any(difference_map(pair, E, psi, x)):
            kernel_ok = False
        if ell_inverse(pair, E, psi, x) != coords:
            inverse_ok = False
        # kernel element -> jet -> kernel element
        y = tuple(ring.sample(rng) for _ in range(m * q))
        x2 = tuple(ring.sample(rng) for _ in range(m))
        psi2 = [ring.zero] * (ind.middle.rank * q)
        for u in range(m):
            for t in range(q):
                psi2[u * q + t] = y[u * q + t]
        for t in range(q):
            for s in range(m):
                psi2[(m + t * m + s) * q + t] = x2[s]
        if any(difference_map(pair, E, psi2, x2)):
            kernel_ok = False
        back = apply_matrix(ell, ell_inverse(pair, E, psi2, x2))
        if tuple(back) != tuple(psi2):
            inverse_ok = False
    ca = ind.cocycle()
    ct = jet.cocycle()
    related = all(
        kappa(pair, E, ca(a)) == tuple(-v for v in ct(a)) for a in range(p)
    )
    ra = alpha_vanishing(pair, E, bound)
    rt = tilde_vanishing(pair, E, bound)
    return ComparisonReport(
        ell_equivariant=equivariant,
        ell_kills_A=kills,
        kernel_identified=kernel_ok,
        mutually_inverse=inverse_ok,
        cocycles_related=related,
        verdicts_agree=ra.verdict == rt.verdict,
        alpha=ra.verdict,
        tilde=rt.verdict,
    )
