"""Lie algebroids over a coefficient ring, presented on a free basis.

An element of ``L`` is a tuple of ring elements (coordinates on the basis
``l_0, ..., l_{n-1}``).  The bracket of general elements is the bilinear
extension of the structure functions corrected by the anchor terms of the
Leibniz rule.
"""

from __future__ import annotations

import itertools
from functools import cached_property
from typing import Sequence

from .errors import ContractError, StructuralError, ValidationReport
from .ring import Derivation, Ring, RingElement, derivation_bracket, derivation_validate

Vec = tuple  # tuple[RingElement, ...]


def vzero(ring: Ring, n: int) -> Vec:
    return (ring.zero,) * n


def vadd(u: Vec, v: Vec) -> Vec:
    return tuple(a + b for a, b in zip(u, v))


def vsub(u: Vec, v: Vec) -> Vec:
    return tuple(a - b for a, b in zip(u, v))


def vscale(r, u: Vec) -> Vec:
    return tuple(r * a for a in u)


def unit(ring: Ring, n: int, i: int, coeff=None) -> Vec:
    v = [ring.zero] * n
    v[i] = ring.one if coeff is None else coeff
    return tuple(v)


def is_zero(u: Vec) -> bool:
    return all(not a for a in u)


class Algebroid:
    """A Lie-Rinehart algebra free of rank ``rank`` over ``ring``.

    ``brackets[i][j]`` is the coordinate vector of ``[l_i, l_j]`` and
    ``anchor[i]`` the derivation ``rho(l_i)``.
    """

    def __init__(self, ring: Ring, brackets, anchor: Sequence[Derivation], names=None):
        n = len(anchor)
        self.ring = ring
        self.rank = n
        if len(brackets) != n or any(len(row) != n for row in brackets):
            raise StructuralError(f"bracket table must be {n}x{n}")
        self.brackets = tuple(tuple(tuple(v) for v in row) for row in brackets)
        for row in self.brackets:
            for v in row:
                if len(v) != n:
                    raise StructuralError("bracket values must have one coordinate per generator")
        self.anchor = tuple(anchor)
        self.names = tuple(names) if names else tuple(f"l{i}" for i in range(n))
        if len(self.names) != n:
            raise StructuralError("one name per generator")

    @classmethod
    def from_constants(cls, ring: Ring, rank: int, constants: dict, anchor=None, names=None,
                       antisymmetrize: bool = True) -> "Algebroid":
        """Build from ``{(i, j): {k: coeff}}``; missing ``(j, i)`` entries are mirrored."""
        table = [[[ring.zero] * rank for _ in range(rank)] for _ in range(rank)]
        for (i, j), vals in constants.items():
            for k, c in vals.items():
                table[i][j][k] = c if isinstance(c, RingElement) else ring.parse(str(c))
        if antisymmetrize:
            for (i, j) in list(constants):
                if (j, i) not in constants:
                    table[j][i] = [-c for c in table[i][j]]
        if anchor is None:
            anchor = [Derivation.zero(ring) for _ in range(rank)]
        return cls(ring, table, anchor, names)

    def __repr__(self):
        return f"Algebroid({', '.join(self.names)} over {self.ring!r})"

    # elements ---------------------------------------------------------------
    def zero(self) -> Vec:
        return vzero(self.ring, self.rank)

    def gen(self, i: int, coeff=None) -> Vec:
        return unit(self.ring, self.rank, i, coeff)

    def anchor_of(self, u: Vec) -> Derivation:
        d = Derivation.zero(self.ring)
        for c, rho in zip(u, self.anchor):
            if c:
                d = d + rho.scaled(c)
        return d

    def apply_anchor(self, u: Vec, r: RingElement) -> RingElement:
        out = self.ring.zero
        for c, rho in zip(u, self.anchor):
            if c:
                out = out + c * rho(r)
        return out

    def bracket(self, u: Vec, v: Vec) -> Vec:
        return bracket_eval(self, u, v)

    def structure_degree(self) -> int:
        degs = [c.degree() for row in self.brackets for v in row for c in v if c]
        degs += [im.degree() for rho in self.anchor for im in rho.images if im]
        return max(degs, default=0)

    # validation ---------------------------------------------------------------
    def validate(self) -> ValidationReport:
        return algebroid_validate(self)


def bracket_eval(L: Algebroid, u: Vec, v: Vec) -> Vec:
    """``[sum u_i l_i, sum v_j l_j]`` by bilinearity plus the anchor/Leibniz terms."""
    n = L.rank
    out = [L.ring.zero] * n
    for i, ui in enumerate(u):
        if not ui:
            continue
        rho_i = L.anchor[i]
        for j, vj in enumerate(v):
            if not vj:
                continue
            uv = ui * vj
            for k, g in enumerate(L.brackets[i][j]):
                if g:
                    out[k] = out[k] + uv * g
            # u_i l_i (v_j) l_j
            dv = rho_i(vj)
            if dv:
                out[j] = out[j] + ui * dv
            # - v_j l_j (u_i) l_i
            du = L.anchor[j](ui)
            if du:
                out[i] = out[i] - vj * du
    return tuple(out)


def algebroid_validate(L: Algebroid) -> ValidationReport:
    report = ValidationReport(f"algebroid {L.names}")
    n = L.rank
    for rho in L.anchor:
        report.extend(derivation_validate(rho))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if L.brackets[i][j][k] != -L.brackets[j][i][k]:
                    report.add("antisymmetry", (i, j, k))
    gens = [L.gen(i) for i in range(n)]
    for i, j, k in itertools.combinations_with_replacement(range(n), 3):
        a, b, c = gens[i], gens[j], gens[k]
        jac = vadd(
            vadd(bracket_eval(L, a, bracket_eval(L, b, c)), bracket_eval(L, b, bracket_eval(L, c, a))),
            bracket_eval(L, c, bracket_eval(L, a, b)),
        )
        if not is_zero(jac):
            report.add("jacobi", (i, j, k), f"cyclic sum = {[str(x) for x in jac]}")
    for i, j in itertools.combinations(range(n), 2):
        lhs = L.anchor_of(L.brackets[i][j])
        rhs = derivation_bracket(L.anchor[i], L.anchor[j])
        if lhs != rhs:
            report.add("anchor-morphism", (i, j), f"{lhs!r} != {rhs!r}")
    return report


class AdaptedPair:
    """An inclusion ``A < L`` where ``A`` is spanned by ``l_0 .. l_{p-1}``.

    The cosets of ``l_p .. l_{n-1}`` form the basis ``n_0 .. n_{q-1}`` of ``L/A``.
    """

    def __init__(self, ambient: Algebroid, sub_rank: int):
        if not 0 <= sub_rank <= ambient.rank:
            raise StructuralError(f"sub_rank {sub_rank} outside 0..{ambient.rank}")
        self.ambient = ambient
        self.p = sub_rank
        self.q = ambient.rank - sub_rank

    @property
    def ring(self) -> Ring:
        return self.ambient.ring

    @property
    def sub_rank(self) -> int:
        return self.p

    def coset_index(self, t: int) -> int:
        return self.p + t

    def is_sub(self, i: int) -> bool:
        return i < self.p

    def __repr__(self):
        return f"AdaptedPair({self.ambient.names[:self.p]} < {self.ambient.names})"

    @cached_property
    def sub(self) -> Algebroid:
        """``A`` as an algebroid in its own right (requires closure)."""
        L, p = self.ambient, self.p
        for i in range(p):
            for j in range(p):
                if not is_zero(L.brackets[i][j][p:]):
                    raise ContractError(f"[{L.names[i]}, {L.names[j]}] leaves the subalgebroid")
        table = [[L.brackets[i][j][:p] for j in range(p)] for i in range(p)]
        return Algebroid(L.ring, table, L.anchor[:p], L.names[:p])

    def include(self, a: Vec) -> Vec:
        return tuple(a) + (self.ring.zero,) * self.q

    def project(self, l: Vec) -> Vec:
        return tuple(l[self.p:])

    def lift(self, c: Vec) -> Vec:
        return (self.ring.zero,) * self.p + tuple(c)

    def coset_names(self) -> tuple:
        return self.ambient.names[self.p:]

    def validate(self) -> ValidationReport:
        return pair_validate(self)


def pair_validate(pair: AdaptedPair) -> ValidationReport:
    L, p = pair.ambient, pair.p
    report = ValidationReport(f"pair {pair!r}")
    for i, j in itertools.combinations(range(p), 2):
        out = L.brackets[i][j][p:]
        if not is_zero(out):
            report.add("closure", (i, j), f"[{L.names[i]},{L.names[j]}] has coset part {[str(x) for x in out]}")
    return report


def quotient_action(pair: AdaptedPair, a: Vec, c: Vec) -> Vec:
    """``a . (l + A) = [a, l] + A`` for ``a`` in ``A`` (coordinates length p)."""
    if len(a) != pair.p or len(c) != pair.q:
        raise StructuralError("quotient_action expects an A-element and a coset")
    return pair.project(bracket_eval(pair.ambient, pair.include(a), pair.lift(c)))
