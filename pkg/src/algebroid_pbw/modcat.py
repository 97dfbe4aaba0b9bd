"""Modules over an algebroid presented as connections, and their cohomology.

A module of rank ``m`` is free over R with basis ``e_0 .. e_{m-1}``; the
generator ``g`` acts by

    g . (sum_s r_s e_s) = sum_s g(r_s) e_s + r_s M_g e_s,

so only the matrices ``M_g`` (``M_g[t][s]`` = coefficient of ``e_t`` in
``g . e_s``) are stored.  Flatness is checked, never assumed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

from .algebroid import AdaptedPair, Algebroid, is_zero, vadd, vscale, vsub
from .errors import ContractError, StructuralError, ValidationReport
from .linalg import SolveResult, solve
from .ring import Ring, RingElement


class Connection:
    """An (not necessarily flat) action of ``algebroid`` on a free module."""

    def __init__(self, algebroid: Algebroid, rank: int, matrices: Sequence, labels=None):
        self.algebroid = algebroid
        self.ring: Ring = algebroid.ring
        self.rank = rank
        if len(matrices) != algebroid.rank:
            raise StructuralError(f"need one matrix per generator ({algebroid.rank}), got {len(matrices)}")
        mats = []
        for M in matrices:
            if len(M) != rank or any(len(row) != rank for row in M):
                raise StructuralError(f"action matrices must be {rank}x{rank}")
            mats.append(tuple(tuple(row) for row in M))
        self.matrices = tuple(mats)
        # column-sparse copy for fast action
        self._cols = tuple(
            tuple(tuple((t, M[t][s]) for t in range(rank) if M[t][s]) for s in range(rank))
            for M in self.matrices
        )
        self.labels = list(labels) if labels else [f"e{s}" for s in range(rank)]

    def __repr__(self):
        return f"{type(self).__name__}(rank={self.rank} over {self.algebroid!r})"

    def zero(self) -> tuple:
        return (self.ring.zero,) * self.rank

    def basis_vector(self, s: int, coeff=None) -> tuple:
        v = [self.ring.zero] * self.rank
        v[s] = self.ring.one if coeff is None else coeff
        return tuple(v)

    def act(self, g: int, vec) -> tuple:
        rho = self.algebroid.anchor[g]
        out = [rho(r) if r else r for r in vec]
        for s, r in enumerate(vec):
            if not r:
                continue
            for t, c in self._cols[g][s]:
                out[t] = out[t] + r * c
        return tuple(out)

    def act_element(self, u, vec) -> tuple:
        out = self.zero()
        for g, c in enumerate(u):
            if c:
                out = vadd(out, vscale(c, self.act(g, vec)))
        return out

    def curvature(self, i: int, j: int, s: int) -> tuple:
        e = self.basis_vector(s)
        lhs = vsub(self.act(i, self.act(j, e)), self.act(j, self.act(i, e)))
        return vsub(lhs, self.act_element(self.algebroid.brackets[i][j], e))

    def validate(self) -> ValidationReport:
        return module_validate(self)

    def max_degree(self) -> int:
        return max((c.degree() for M in self.matrices for row in M for c in row if c), default=0)


class FlatModule(Connection):
    """A module over ``algebroid`` (flat connection)."""


def module_validate(E: Connection) -> ValidationReport:
    report = ValidationReport(f"module {E!r}")
    n = E.algebroid.rank
    for i, j in itertools.combinations(range(n), 2):
        for s in range(E.rank):
            defect = E.curvature(i, j, s)
            if not is_zero(defect):
                report.add("flatness", (i, j, s), f"curvature {[str(x) for x in defect]}")
    return report


def unit_module(A: Algebroid) -> FlatModule:
    """``1_A``: R with the anchor action."""
    ring = A.ring
    return FlatModule(A, 1, [[[ring.zero]] for _ in range(A.rank)], labels=["1"])


def quotient_module(pair: AdaptedPair) -> FlatModule:
    """``L/A`` with ``a . (l + A) = [a, l] + A``."""
    L, p, q = pair.ambient, pair.p, pair.q
    mats = []
    for a in range(p):
        mats.append([[L.brackets[a][p + s][p + t] for s in range(q)] for t in range(q)])
    return FlatModule(pair.sub, q, mats, labels=[f"{n}~" for n in pair.coset_names()])


def tensor_module(M: Connection, N: Connection) -> FlatModule:
    """``M (x)_R N`` with basis ``(i, j) -> i * N.rank + j`` and the coproduct action."""
    if M.algebroid is not N.algebroid:
        raise StructuralError("tensor factors act through different algebroids")
    ring = M.ring
    m, n = M.rank, N.rank
    mats = []
    for g in range(M.algebroid.rank):
        A, B = M.matrices[g], N.matrices[g]
        T = [[ring.zero] * (m * n) for _ in range(m * n)]
        for i in range(m):
            for j in range(n):
                col = i * n + j
                for i2 in range(m):
                    if A[i2][i]:
                        T[i2 * n + j][col] = T[i2 * n + j][col] + A[i2][i]
                for j2 in range(n):
                    if B[j2][j]:
                        T[i * n + j2][col] = T[i * n + j2][col] + B[j2][j]
        mats.append(T)
    labels = [f"{a}(x){b}" for a in M.labels for b in N.labels]
    return FlatModule(M.algebroid, m * n, mats, labels=labels)


def hom_module(M: Connection, N: Connection) -> FlatModule:
    """``Hom_R(M, N)``; ``psi`` is flattened as ``psi[t][s]`` at index ``t * M.rank + s``."""
    if M.algebroid is not N.algebroid:
        raise StructuralError("Hom arguments act through different algebroids")
    ring = M.ring
    m, n = M.rank, N.rank
    mats = []
    for g in range(M.algebroid.rank):
        A, B = M.matrices[g], N.matrices[g]
        H = [[ring.zero] * (m * n) for _ in range(m * n)]
        for t0 in range(n):
            for s0 in range(m):
                col = t0 * m + s0
                for t in range(n):  # a . f_{t0} placed at e_{s0}
                    if B[t][t0]:
                        H[t * m + s0][col] = H[t * m + s0][col] + B[t][t0]
                for s in range(m):  # - psi(a . e_s)
                    if A[s0][s]:
                        H[t0 * m + s][col] = H[t0 * m + s][col] - A[s0][s]
        mats.append(H)
    labels = [f"{b}<-{a}" for b in N.labels for a in M.labels]
    return FlatModule(M.algebroid, m * n, mats, labels=labels)


def act_tensor(E: Connection, F: Connection, a: int, x) -> tuple:
    return tensor_module(E, F).act(a, x)


def act_hom(E: Connection, F: Connection, a: int, psi) -> tuple:
    return hom_module(E, F).act(a, psi)


def hom_matrix(psi, m: int, n: int) -> list:
    """Unflatten a Hom_R(M, N) vector to an ``n x m`` matrix."""
    return [list(psi[t * m:(t + 1) * m]) for t in range(n)]


def hom_vector(matrix) -> tuple:
    return tuple(c for row in matrix for c in row)


def apply_matrix(Phi, vec) -> tuple:
    """R-linear map with matrix ``Phi`` (rows = target basis) applied to ``vec``."""
    ring = vec[0].ring if vec else None
    out = [None] * len(Phi)
    for i, row in enumerate(Phi):
        acc = ring.zero if ring else None
        for c, r in zip(row, vec):
            if c and r:
                acc = acc + c * r
        out[i] = acc
    return tuple(out)


def is_equivariant(source: Connection, target: Connection, Phi) -> list:
    """Return the list of ``(generator, column)`` where ``a . Phi != 0``."""
    bad = []
    for a in range(source.algebroid.rank):
        for j in range(source.rank):
            col = tuple(Phi[i][j] for i in range(target.rank))
            lhs = target.act(a, col)
            rhs = apply_matrix(Phi, source.act(a, source.basis_vector(j)))
            if not is_zero(vsub(lhs, rhs)):
                bad.append((a, j))
    return bad


# ---------------------------------------------------------------------------
# Chevalley-Eilenberg cochains


def _sort_sign(idx: tuple):
    idx = list(idx)
    sign = 1
    for i in range(len(idx)):
        for j in range(len(idx) - 1 - i):
            if idx[j] > idx[j + 1]:
                idx[j], idx[j + 1] = idx[j + 1], idx[j]
                sign = -sign
    if len(set(idx)) != len(idx):
        return 0, tuple(idx)
    return sign, tuple(idx)


@dataclass
class Cochain:
    """Alternating R-multilinear map ``A^n -> E``, stored on increasing generator tuples."""

    module: Connection
    degree: int
    values: dict = field(default_factory=dict)

    def __call__(self, *idx) -> tuple:
        sign, key = _sort_sign(idx)
        if not sign:
            return self.module.zero()
        v = self.values.get(key)
        if v is None:
            return self.module.zero()
        return v if sign == 1 else tuple(-x for x in v)

    def is_zero(self) -> bool:
        return all(is_zero(v) for v in self.values.values())

    def __sub__(self, other: "Cochain") -> "Cochain":
        keys = set(self.values) | set(other.values)
        return Cochain(self.module, self.degree, {k: vsub(self(*k), other(*k)) for k in keys})

    def __eq__(self, other):
        if not isinstance(other, Cochain) or self.degree != other.degree:
            return NotImplemented
        return (self - other).is_zero()

    @classmethod
    def zero_cochain(cls, module: Connection, vec) -> "Cochain":
        return cls(module, 0, {(): tuple(vec)})

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "values": [
                {"args": list(k), "value": [str(x) for x in v]}
                for k, v in sorted(self.values.items())
            ],
        }


def ce_differential(omega: Cochain) -> Cochain:
    """d(w)(l_0..l_n) = sum_i (-1)^i l_i w(..^i..) + sum_{i<j} (-1)^{i+j} w([l_i,l_j], ..^i..^j..)."""
    E = omega.module
    A = E.algebroid
    n = omega.degree
    out = {}
    for T in itertools.combinations(range(A.rank), n + 1):
        acc = E.zero()
        for i in range(n + 1):
            rest = T[:i] + T[i + 1:]
            term = E.act(T[i], omega(*rest))
            acc = vadd(acc, term) if i % 2 == 0 else vsub(acc, term)
        for i, j in itertools.combinations(range(n + 1), 2):
            rest = tuple(x for k, x in enumerate(T) if k not in (i, j))
            br = A.brackets[T[i]][T[j]]
            val = E.zero()
            for k, g in enumerate(br):
                if g:
                    val = vadd(val, vscale(g, omega(k, *rest)))
            acc = vadd(acc, val) if (i + j) % 2 == 0 else vsub(acc, val)
        out[T] = acc
    return Cochain(E, n + 1, out)


def cochain_from_generators(E: Connection, values: Sequence) -> Cochain:
    """A 1-cochain from its values on each generator."""
    return Cochain(E, 1, {(i,): tuple(v) for i, v in enumerate(values)})


# ---------------------------------------------------------------------------
# linear solves


@dataclass
class Primitive:
    primitive: tuple
    kind: str = "primitive"


@dataclass
class NoSolution:
    certificate: dict
    rank: int
    augmented_rank: int
    kind: str = "no-solution"


@dataclass
class Inconclusive:
    bound: int
    rank: int = 0
    augmented_rank: int = 0
    kind: str = "inconclusive"


def default_bound(*modules: Connection) -> int:
    deg = 0
    for M in modules:
        deg = max(deg, M.max_degree(), M.algebroid.structure_degree())
    return 2 * deg + 2


def _flatten(ring: Ring, vecs: dict) -> dict:
    """``{label: vector of RingElements}`` -> ``{(label, slot, key): Fraction}``."""
    out = {}
    for label, v in vecs.items():
        for slot, r in enumerate(v):
            for key, c in r.terms.items():
                out[(label, slot, key)] = c
    return out


def coboundary_system(c: Cochain, bound: int | None = None):
    """Columns ``d(r e_s)`` for ansatz coefficients ``r`` and target ``c``."""
    E = c.module
    ring = E.ring
    if not ring.finite and bound is None:
        bound = default_bound(E)
    keys = ring.ansatz_keys(bound)
    columns = {}
    for s in range(E.rank):
        for key in keys:
            b = E.basis_vector(s, ring.basis_element(key))
            columns[(s, key)] = _flatten(ring, {i: E.act(i, b) for i in range(E.algebroid.rank)})
    target = _flatten(ring, {i: c(i) for i in range(E.algebroid.rank)})
    return columns, target, bound


def coboundary_solve(c: Cochain, bound: int | None = None):
    """Find a 0-cochain ``b`` with ``d(b) = c``.

    Finite rings give :class:`Primitive` or a certified :class:`NoSolution`;
    polynomial rings search entries of total degree ``<= bound`` and report
    :class:`Inconclusive` when that ansatz fails.
    """
    if c.degree != 1:
        raise ContractError("coboundary_solve expects a 1-cochain")
    if not ce_differential(c).is_zero():
        raise ContractError("input is not a cocycle")
    E = c.module
    ring = E.ring
    columns, target, bound = coboundary_system(c, bound)
    res: SolveResult = solve(columns, target)
    if res.solvable:
        b = [ring.zero] * E.rank
        for (s, key), x in res.solution.items():
            b[s] = b[s] + ring.basis_element(key) * x
        b = tuple(b)
        if ce_differential(Cochain.zero_cochain(E, b)) != c:
            raise AssertionError("solver returned a wrong primitive")
        return Primitive(b)
    if ring.finite:
        return NoSolution(res.certificate, res.rank, res.augmented_rank)
    return Inconclusive(bound, res.rank, res.augmented_rank)


def equivariance_system(source: Connection, target: Connection, fixed, support, bound=None):
    """Linear system for ``X`` supported on ``support`` with ``fixed + X`` A-linear."""
    ring = source.ring
    A = source.algebroid
    if not ring.finite and bound is None:
        bound = default_bound(source, target)
    keys = ring.ansatz_keys(bound)
    rhs = {}
    for a in range(A.rank):
        for j in range(source.rank):
            col = tuple(fixed[i][j] for i in range(target.rank))
            val = vsub(target.act(a, col), apply_matrix(fixed, source.act(a, source.basis_vector(j))))
            rhs[(a, j)] = tuple(-x for x in val)
    target_vec = _flatten(ring, rhs)
    Ms = source.matrices
    columns = {}
    for (r, c) in support:
        for key in keys:
            b = ring.basis_element(key)
            vecs = {}
            for a in range(A.rank):
                vecs[(a, c)] = target.act(a, target.basis_vector(r, b))
                for j in range(source.rank):
                    m = Ms[a][c][j]
                    if m:
                        prev = vecs.get((a, j), target.zero())
                        vecs[(a, j)] = vsub(prev, target.basis_vector(r, m * b))
            columns[(r, c, key)] = _flatten(ring, vecs)
    return columns, target_vec, bound


def solve_equivariant(source: Connection, target: Connection, fixed, support, bound=None):
    """Complete ``fixed`` by entries on ``support`` to an A-linear map, if possible.

    Returns ``(matrix, None)`` on success or ``(None, verdict)`` where the
    verdict is :class:`NoSolution` (finite rings) or :class:`Inconclusive`.
    """
    ring = source.ring
    columns, tvec, bound = equivariance_system(source, target, fixed, support, bound)
    res = solve(columns, tvec)
    if res.solvable:
        Phi = [list(row) for row in fixed]
        for (r, c, key), x in res.solution.items():
            Phi[r][c] = Phi[r][c] + ring.basis_element(key) * x
        if is_equivariant(source, target, Phi):
            raise AssertionError("solver returned a non-equivariant map")
        return Phi, None
    if ring.finite:
        return None, NoSolution(res.certificate, res.rank, res.augmented_rank)
    return None, Inconclusive(bound, res.rank, res.augmented_rank)
