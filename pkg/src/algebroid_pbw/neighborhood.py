"""The first infinitesimal neighbourhood of A in L, through its envelope quotient.

``U(FR(L))`` is the free R-ring on the letters of L: words are never
reordered and coefficients move left by ``m r = r m + m(r)``.  Imposing
``a l - l a = [a, l]_L`` for ``a`` in A and killing the left ideal generated
by A gives ``j*j_!(1_A)``; tensoring with E gives ``j*j_!(E)``.

Two independent routes compute the truncation ``F^N``:

* rewriting: push A-letters to the right with ``a n -> n a + [a, n]_L`` and let
  them act on E at the end; the result lives on coset words (x) E.
* elimination (finite rings only): the span of all relations inside the
  space of words of length ``<= N + 1`` is eliminated directly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .algebroid import AdaptedPair, Algebroid
from .errors import (
    ContractError,
    InternalConsistencyError,
    ResourceError,
    StructuralError,
    TruncationError,
)
from .filtered import FilteredMapReport, filtered_map_report
from .linalg import Eliminator, _sort_key
from .modcat import Connection, FlatModule, is_zero, quotient_module, unit_module
from .obstruction import ConnectionLift
from .ring import Ring, RingElement


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
# the free envelope


class FreeEnvelopeElement:
    """``{word: left coefficient}`` in U(FR(L)); words are arbitrary letter tuples."""

    __slots__ = ("L", "terms")

    def __init__(self, L: Algebroid, terms: dict):
        self.L = L
        self.terms = {w: c for w, c in terms.items() if c}

    def degree(self) -> int:
        return max((len(w) for w in self.terms), default=-1)

    def __eq__(self, other):
        return isinstance(other, FreeEnvelopeElement) and self.terms == other.terms

    def __repr__(self):
        names = self.L.names
        parts = []
        for w in sorted(self.terms, key=lambda w: (len(w), w)):
            parts.append(f"({self.terms[w]})*{'*'.join(names[i] for i in w) or '1'}")
        return " + ".join(parts) or "0"


def free_letter_mul(L: Algebroid, g: int, terms: dict) -> dict:
    """``l_g * sum c_w w`` with ``l_g c = c l_g + l_g(c)``."""
    out: dict = {}
    rho = L.anchor[g]
    for w, c in terms.items():
        _add(out, (g,) + w, c)
        _add(out, w, rho(c))
    return out


def free_envelope_normalize(L: Algebroid, expression: Sequence, N: int) -> FreeEnvelopeElement:
    """Normal form of a product of ring elements and letters, words of length ``<= N``."""
    ring = L.ring
    terms = {(): ring.one}
    for item in reversed(list(expression)):
        if isinstance(item, RingElement):
            terms = {w: item * c for w, c in terms.items() if item * c}
        else:
            terms = free_letter_mul(L, item, terms)
            if any(len(w) > N for w in terms):
                raise TruncationError(f"word length exceeds truncation N={N}")
    return FreeEnvelopeElement(L, terms)


def free_degree_ranks(L: Algebroid, N: int) -> list:
    """R-rank of each graded piece of U(FR(L)) up to N, from normalised word products."""
    ring = L.ring
    scalars = [ring.basis_element(k) for k in ring.ansatz_keys(0)] if ring.finite else [ring.one]
    dim = ring.dim if ring.finite else 1
    out = []
    for k in range(N + 1):
        elim = Eliminator()
        for word in itertools.product(range(L.rank), repeat=k):
            top = {w: c for w, c in free_envelope_normalize(L, word, N).terms.items() if len(w) == k}
            for b in scalars:
                v = {}
                for w, c in top.items():
                    for key, x in (b * c).terms.items():
                        v[(w, key)] = x
                if v:
                    elim.add(v)
        out.append(elim.rank // dim)
    return out


# ---------------------------------------------------------------------------
# route (i): rewriting on coset words (x) E


class QuotientRewriter:
    """Left action of letters of L on ``j*j_!(E)`` written on coset words (x) e_s.

    A state is ``{(coset word, s): left coefficient}``.  Coset letters are
    prepended; an A-letter is moved right past each coset letter with
    ``a n = n a + [a, n]_L`` and finally acts on E.
    """

    def __init__(self, pair: AdaptedPair, E: Connection, N: int, budget: int | None = None):
        self.pair = pair
        self.E = E
        self.N = N
        self.budget = budget
        self.steps = 0
        self._memo: dict = {}

    def _tick(self):
        self.steps += 1
        if self.budget is not None and self.steps > self.budget:
            raise ResourceError(f"rewriting budget {self.budget} exceeded", partial={"steps": self.steps})

    def act(self, g: int, state: dict) -> dict:
        L = self.pair.ambient
        rho = L.anchor[g]
        out: dict = {}
        for (w, s), c in state.items():
            for key, c2 in self.act_basis(g, w, s).items():
                _add(out, key, c * c2)
            _add(out, (w, s), rho(c))
        return out

    def act_basis(self, g: int, w: tuple, s: int) -> dict:
        key = (g, w, s)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        self._tick()
        p = self.pair.p
        ring = self.pair.ring
        if g >= p:
            if len(w) + 1 > self.N:
                raise TruncationError(f"coset word longer than N={self.N}")
            out = {((g,) + w, s): ring.one}
        elif not w:
            col = self.E.matrices[g]
            out = {((), t): col[t][s] for t in range(self.E.rank) if col[t][s]}
        else:
            n, rest = w[0], w[1:]
            out = {}
            inner = self.act_basis(g, rest, s)
            for k2, c in self.act(n, inner).items():
                _add(out, k2, c)
            br = self.pair.ambient.brackets[g][n]
            for k, gamma in enumerate(br):
                if gamma:
                    for k2, c in self.act_basis(k, rest, s).items():
                        _add(out, k2, gamma * c)
        self._memo[key] = out
        return out

    def word(self, word: Sequence[int], s: int = 0) -> dict:
        """``xi``: the class of ``word (x) e_s``."""
        state = {((), s): self.pair.ring.one}
        for g in reversed(list(word)):
            state = self.act(g, state)
        return state


def coset_words(pair: AdaptedPair, N: int) -> list:
    letters = range(pair.p, pair.p + pair.q)
    return [w for k in range(N + 1) for w in itertools.product(letters, repeat=k)]


@dataclass
class NeighborhoodQuotient:
    pair: AdaptedPair
    E: Connection
    N: int
    basis: list  # (coset word, s)
    degrees: list
    module: FlatModule
    rewriter: QuotientRewriter
    ranks: list
    critical_pairs: int = 0
    notes: dict = field(default_factory=dict)

    @property
    def index(self) -> dict:
        return {b: i for i, b in enumerate(self.basis)}

    def xi(self, word: Sequence[int], s: int = 0) -> tuple:
        return self.vector(self.rewriter.word(word, s))

    def vector(self, state: dict) -> tuple:
        ring = self.pair.ring
        idx = self.index
        v = [ring.zero] * len(self.basis)
        for key, c in state.items():
            v[idx[key]] = v[idx[key]] + c
        return tuple(v)

    def tensor_rank(self, k: int) -> int:
        return self.pair.q ** k * self.E.rank

    def dims_table(self) -> dict:
        return {
            "N": self.N,
            "ranks": self.ranks,
            "tensor_ranks": [self.tensor_rank(k) for k in range(self.N + 1)],
        }


def a1_quotient(pair: AdaptedPair, N: int, E: Connection | None = None, budget: int | None = None) -> NeighborhoodQuotient:
    """``F^N j*j_!(E)`` by rewriting, with every critical pair ``a b`` checked.

    The only overlaps of the rules are ``a b (word)`` with ``a, b`` in A;
    they resolve iff the computed A-action is flat.  An unresolved pair
    would need extra degree-lowering relations and is reported as an
    internal inconsistency.
    """
    if E is None:
        E = unit_module(pair.sub)
    rw = QuotientRewriter(pair, E, N, budget)
    words = coset_words(pair, N)
    basis = [(w, s) for w in words for s in range(E.rank)]
    index = {b: i for i, b in enumerate(basis)}
    ring = pair.ring
    n = len(basis)
    mats = []
    try:
        for a in range(pair.p):
            M = [[ring.zero] * n for _ in range(n)]
            for j, (w, s) in enumerate(basis):
                for key, c in rw.act_basis(a, w, s).items():
                    M[index[key]][j] = c
            mats.append(M)
    except ResourceError as exc:
        exc.partial = {"N": N, "basis_size": n, "rows_done": len(mats), "steps": rw.steps}
        raise
    labels = ["*".join(pair.ambient.names[i] for i in w) + f"(x){E.labels[s]}" if w else f"1(x){E.labels[s]}"
              for w, s in basis]
    module = FlatModule(pair.sub, n, mats, labels=labels)
    checked = 0
    for i, j in itertools.combinations(range(pair.p), 2):
        for col in range(n):
            checked += 1
            if not is_zero(module.curvature(i, j, col)):
                raise InternalConsistencyError(
                    f"critical pair ({pair.ambient.names[i]}, {pair.ambient.names[j]}) on {labels[col]} does not resolve"
                )
    degrees = [len(w) for w, _ in basis]
    ranks = [sum(1 for d in degrees if d == k) for k in range(N + 1)]
    return NeighborhoodQuotient(pair, E, N, basis, degrees, module, rw, ranks, critical_pairs=checked)


# ---------------------------------------------------------------------------
# route (ii): elimination oracle


@dataclass
class OracleQuotient:
    """Words (x) E modulo the span of relations, by plain elimination."""

    pair: AdaptedPair
    E: Connection
    N: int
    depth: int
    mode: str
    relations: Eliminator
    ranks: list
    qdims: list

    def _vec(self, terms: dict, s_terms) -> dict:
        """``{(word, s): RingElement}`` -> Q-vector keyed ``(word, s, ringkey)``."""
        out: dict = {}
        for (w, s), c in terms.items():
            for key, x in c.terms.items():
                k = (w, s, key)
                y = out.get(k, 0) + x
                if y:
                    out[k] = y
                else:
                    out.pop(k, None)
        return out

    def reduce(self, terms: dict) -> dict:
        return self.relations.reduce(self._vec(terms, None))

    def express(self, basis: list, a: int) -> list:
        """Matrix of ``a`` on the candidate ``basis`` of coset words (x) e_s."""
        ring = self.pair.ring
        L = self.pair.ambient
        keys = ring.ansatz_keys()
        span = Eliminator(track=True, order=_order)
        for j, (w, s) in enumerate(basis):
            for key in keys:
                b = ring.basis_element(key)
                span.add(self.reduce({(w, s): b}), label=(j, key))
        n = len(basis)
        M = [[ring.zero] * n for _ in range(n)]
        for j, (w, s) in enumerate(basis):
            elem = free_envelope_normalize(L, [a, *w], self.depth)
            r = self.reduce({(w2, s): c for w2, c in elem.terms.items()})
            combo: dict = {}
            rem = span.reduce(r, combo)
            if rem:
                raise InternalConsistencyError("candidate basis does not span the oracle quotient")
            for (i, key), x in combo.items():
                M[i][j] = M[i][j] + ring.basis_element(key) * (-x)
        return M


def _order(key):
    w, s, rk = key
    return (len(w), _sort_key(w), s, _sort_key(rk))


def elimination_quotient(pair: AdaptedPair, N: int, E: Connection | None = None,
                         mode: str = "neighbourhood", depth: int | None = None) -> OracleQuotient:
    """Relation span inside words of length ``<= depth`` (default ``N + 1``) tensored with E.

    ``mode="neighbourhood"`` imposes ``a l - l a - [a, l]`` for ``a`` in A;
    ``mode="induced"`` imposes it for all pairs of letters (giving U(L)).
    Both kill ``P a (x) e - P (x) a.e``.
    """
    ring = pair.ring
    if not ring.finite:
        raise StructuralError("elimination oracle needs a finite-dimensional coefficient ring")
    if E is None:
        E = unit_module(pair.sub)
    L = pair.ambient
    D = N + 1 if depth is None else depth
    n, p = L.rank, pair.p
    keys = ring.ansatz_keys()
    scalars = [ring.basis_element(k) for k in keys]
    elim = Eliminator(order=_order)

    def add_terms(terms: dict):
        v: dict = {}
        for (w, s), c in terms.items():
            for key, x in c.terms.items():
                k = (w, s, key)
                y = v.get(k, 0) + x
                if y:
                    v[k] = y
                else:
                    v.pop(k, None)
        if v:
            elim.add(v)

    def norm(expr) -> dict:
        return free_envelope_normalize(L, expr, D).terms

    if mode == "neighbourhood":
        pairs = [(x, y) for x in range(p) for y in range(n) if not (y < p and y <= x)]
    elif mode == "induced":
        pairs = [(x, y) for x in range(n) for y in range(x + 1, n)]
    else:
        raise StructuralError(f"unknown oracle mode {mode!r}")
    words_by_len = {k: list(itertools.product(range(n), repeat=k)) for k in range(D + 1)}
    for total in range(D - 1):
        for lp in range(total + 1):
            for P in words_by_len[lp]:
                for Qw in words_by_len[total - lp]:
                    for x, y in pairs:
                        br = L.brackets[x][y]
                        for b in scalars:
                            rel: dict = {}
                            for w, c in norm([b, *P, x, y, *Qw]).items():
                                _add(rel, w, c)
                            for w, c in norm([b, *P, y, x, *Qw]).items():
                                _add(rel, w, -c)
                            for k, gamma in enumerate(br):
                                if gamma:
                                    for w, c in norm([b, *P, gamma, k, *Qw]).items():
                                        _add(rel, w, -c)
                            for s in range(E.rank):
                                add_terms({(w, s): c for w, c in rel.items()})
    for lp in range(D):
        for P in words_by_len[lp]:
            for a in range(p):
                M = E.matrices[a]
                for b in scalars:
                    for s in range(E.rank):
                        terms: dict = {}
                        for w, c in norm([b, *P, a]).items():
                            _add(terms, (w, s), c)
                        for t in range(E.rank):
                            if M[t][s]:
                                for w, c in norm([b, *P, M[t][s]]).items():
                                    _add(terms, (w, t), -c)
                        add_terms(terms)
    # filtration ranks
    dim = len(keys)
    span = Eliminator(order=_order)
    qdims = []
    prev = 0
    for k in range(N + 1):
        for w in words_by_len[k]:
            for s in range(E.rank):
                for b in scalars:
                    v = elim.reduce({(w, s, key): x for key, x in b.terms.items()})
                    if v:
                        span.add(v)
        qdims.append(span.rank - prev)
        prev = span.rank
    ranks = [Fraction(d, dim) if d % dim else d // dim for d in qdims]
    return OracleQuotient(pair, E, N, D, mode, elim, ranks, qdims)


def oracle_compare(quot: NeighborhoodQuotient, oracle: OracleQuotient) -> list:
    """Differences between rewriting and elimination (empty when they agree)."""
    diff = []
    if list(quot.ranks) != list(oracle.ranks):
        diff.append({"what": "ranks", "rewriting": list(quot.ranks), "elimination": [str(r) for r in oracle.ranks]})
        return diff
    for a in range(quot.pair.p):
        M = oracle.express(quot.basis, a)
        R = quot.module.matrices[a]
        for i in range(len(M)):
            for j in range(len(M)):
                if M[i][j] != R[i][j]:
                    diff.append({"what": "action", "generator": a, "row": i, "col": j,
                                 "rewriting": str(R[i][j]), "elimination": str(M[i][j])})
    return diff


# ---------------------------------------------------------------------------
# the filtration pieces and the degree-two extension


def filtration_extension(module: Connection, degrees: Sequence[int], k: int):
    """``0 -> F^{k-1}/F^{k-2} -> F^k/F^{k-2} -> F^k/F^{k-1} -> 0`` as an Extension."""
    from .obstruction import Extension

    lo = [i for i, d in enumerate(degrees) if d == k - 1]
    hi = [i for i, d in enumerate(degrees) if d == k]
    order = lo + hi
    A = module.algebroid

    def block(rows, cols):
        return [[[M[i][j] for j in cols] for i in rows] for M in module.matrices]

    labels = [module.labels[i] for i in order]
    sub = FlatModule(A, len(lo), block(lo, lo), labels=[module.labels[i] for i in lo])
    quot = FlatModule(A, len(hi), block(hi, hi), labels=[module.labels[i] for i in hi])
    middle = FlatModule(A, len(order), block(order, order), labels=labels)
    return Extension(sub, quot, middle, name=f"F{k}/F{k - 2}")


# ---------------------------------------------------------------------------
# tensor words over L/A and the bullet action


def tensor_words_module(pair: AdaptedPair, E: Connection, N: int) -> tuple[FlatModule, list, list]:
    """``T^{<=N}_R(L/A) (x) E`` with the A-action by derivations; basis ``(word, s)``.

    Words use ambient coset letter indices so they match :func:`coset_words`.
    """
    Q = quotient_module(pair)
    p = pair.p
    words = coset_words(pair, N)
    basis = [(w, s) for w in words for s in range(E.rank)]
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
                        key = (w[:pos] + (p + u,) + w[pos + 1:], s)
                        M[index[key]][j] = M[index[key]][j] + c
            for t in range(E.rank):
                if Ea[t][s]:
                    M[index[(w, t)]][j] = M[index[(w, t)]][j] + Ea[t][s]
        mats.append(M)
    labels = ["(x)".join(pair.ambient.names[i] for i in w) + f"|{E.labels[s]}" if w else f"1|{E.labels[s]}"
              for w, s in basis]
    return FlatModule(pair.sub, n, mats, labels=labels), basis, [len(w) for w, _ in basis]


class BulletAction:
    """``l . (P (x) e) = (l.P + lbar (x) P) (x) e + P (x) nabla^E_l e`` on T(L/A) (x) E.

    ``l.P`` is the lift ``nabla`` on L/A extended to tensor words as a
    derivation, with the anchor acting on coefficients.
    """

    def __init__(self, pair: AdaptedPair, lift: ConnectionLift, N: int,
                 E: Connection | None = None, lift_E: ConnectionLift | None = None):
        if not getattr(lift, "flags", None) or not all(lift.flags.values()):
            raise ContractError("bullet action needs a certified lift on L/A")
        if lift_E is not None and (not lift_E.flags or not all(lift_E.flags.values())):
            raise ContractError("bullet action needs a certified lift on E")
        self.pair = pair
        self.lift = lift
        self.N = N
        self.E = E if E is not None else unit_module(pair.sub)
        self.lift_E = lift_E
        self._memo: dict = {}

    def _nabla_E(self, g: int, s: int) -> dict:
        if self.lift_E is not None:
            M = self.lift_E.matrices[g]
        elif g < self.pair.p:
            M = self.E.matrices[g]
        else:
            return {}
        return {t: M[t][s] for t in range(self.E.rank) if M[t][s]}

    def act_basis(self, g: int, w: tuple, s: int) -> dict:
        key = (g, w, s)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        p, q = self.pair.p, self.pair.q
        M = self.lift.matrices[g]
        out: dict = {}
        for pos, letter in enumerate(w):
            for u in range(q):
                c = M[u][letter - p]
                if c:
                    _add(out, (w[:pos] + (p + u,) + w[pos + 1:], s), c)
        if g >= p:
            if len(w) + 1 > self.N:
                raise TruncationError(f"tensor word longer than N={self.N}")
            _add(out, ((g,) + w, s), self.pair.ring.one)
        for t, c in self._nabla_E(g, s).items():
            _add(out, (w, t), c)
        self._memo[key] = out
        return out

    def act(self, g: int, state: dict) -> dict:
        rho = self.pair.ambient.anchor[g]
        out: dict = {}
        for (w, s), c in state.items():
            for k2, c2 in self.act_basis(g, w, s).items():
                _add(out, k2, c * c2)
            _add(out, (w, s), rho(c))
        return out

    def act_element(self, l: Sequence, state: dict) -> dict:
        """``l`` given by coordinates in L."""
        out: dict = {}
        for g, c in enumerate(l):
            if c:
                for k2, c2 in self.act(g, state).items():
                    _add(out, k2, c * c2)
        return out

    def word(self, word: Sequence[int], s: int = 0) -> dict:
        """``word . (1 (x) e_s)``."""
        state = {((), s): self.pair.ring.one}
        for g in reversed(list(word)):
            state = self.act(g, state)
        return state


def bullet_action(pair: AdaptedPair, lift: ConnectionLift, l: Sequence, P: dict, N: int) -> dict:
    """``l . P`` for a tensor expression ``P = {word: coeff}`` (E = 1_A)."""
    b = BulletAction(pair, lift, N)
    state = {(w, 0): c for w, c in P.items()}
    return {w: c for (w, _), c in b.act_element(l, state).items()}


def bullet_identity_defects(bullet: BulletAction, max_len: int) -> list:
    """Where ``[a, l]_L . P != a.(l.P) - l.(a.P)`` for generators and words up to ``max_len``."""
    pair = bullet.pair
    L = pair.ambient
    bad = []
    for w in coset_words(pair, max_len):
        for s in range(bullet.E.rank):
            st = {(w, s): pair.ring.one}
            for a in range(pair.p):
                for l in range(L.rank):
                    lhs = bullet.act_element(L.brackets[a][l], st)
                    rhs = dict(bullet.act(a, bullet.act(l, st)))
                    for k2, c in bullet.act(l, bullet.act(a, st)).items():
                        _add(rhs, k2, -c)
                    if lhs != rhs:
                        bad.append((a, l, w, s))
    return bad


def phi_map(pair: AdaptedPair, lift: ConnectionLift, N: int, E: Connection | None = None,
            lift_E: ConnectionLift | None = None, quotient: NeighborhoodQuotient | None = None,
            strict: bool = True) -> FilteredMapReport:
    """``P (x) e |-> P . (1 (x) e)`` from ``F^N j*j_!(E)`` to ``T^{<=N}(L/A) (x) E``."""
    E = E if E is not None else unit_module(pair.sub)
    if lift_E is None and any(c for M in E.matrices for row in M for c in row):
        raise ContractError("a certified lift of E is required unless E is the unit module")
    quot = quotient if quotient is not None else a1_quotient(pair, N, E)
    bullet = BulletAction(pair, lift, N, E, lift_E)
    T, tbasis, tdeg = tensor_words_module(pair, E, N)
    tindex = {b: i for i, b in enumerate(tbasis)}
    ring = pair.ring
    n = len(tbasis)
    Phi = [[ring.zero] * len(quot.basis) for _ in range(n)]
    for j, (w, s) in enumerate(quot.basis):
        for key, c in bullet.word(w, s).items():
            Phi[tindex[key]][j] = c
    rep = filtered_map_report(
        "phi" if E.rank == 1 and lift_E is None else "phi_E", N, quot.module, T, Phi, quot.degrees, tdeg,
        gr_expected=lambda j: {tindex[quot.basis[j]]: ring.one},
        representative="P |-> P.(1 (x) e) through the bullet action of the certified lift",
    )
    if strict and not rep.ok:
        raise InternalConsistencyError(f"phi verdicts failed: {rep.verdicts()}")
    return rep
