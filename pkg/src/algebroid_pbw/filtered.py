"""Reports on filtered maps between filtered modules with graded word bases."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .linalg import rank as qrank
from .modcat import Connection, is_equivariant


@dataclass
class FilteredMapReport:
    name: str
    N: int
    matrix: list  # rows = target basis
    source_degrees: list
    target_degrees: list
    a_linear: bool
    filtered: bool
    bijective: bool
    gr_identity: bool
    representative: str = ""
    notes: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.a_linear and self.filtered and self.bijective and self.gr_identity

    def verdicts(self) -> dict:
        return {
            "a_linear": self.a_linear,
            "filtered": self.filtered,
            "bijective_per_degree": self.bijective,
            "gr_identity": self.gr_identity,
        }

    def degree_blocks(self) -> dict:
        out = {}
        for k in sorted(set(self.source_degrees)):
            cols = [j for j, d in enumerate(self.source_degrees) if d == k]
            rows = [i for i, d in enumerate(self.target_degrees) if d == k]
            out[k] = [[self.matrix[i][j] for j in cols] for i in rows]
        return out

    def to_json(self, with_matrix: bool = True) -> dict:
        out = {
            "name": self.name,
            "N": self.N,
            "verdicts": self.verdicts(),
            "representative": self.representative,
            "source_dims": _dims(self.source_degrees),
            "target_dims": _dims(self.target_degrees),
        }
        if with_matrix:
            out["matrix"] = [[str(c) for c in row] for row in self.matrix]
        out.update(self.notes)
        return out


def _dims(degrees) -> list:
    top = max(degrees, default=-1)
    return [sum(1 for d in degrees if d == k) for k in range(top + 1)]


def _block_bijective(block, ring) -> bool:
    if not block:
        return True
    n = len(block)
    if any(len(row) != n for row in block):
        return False
    if ring.finite:
        keys = ring.ansatz_keys()
        vecs = []
        for j in range(n):
            for key in keys:
                b = ring.basis_element(key)
                v = {}
                for i in range(n):
                    for k2, c in (block[i][j] * b).terms.items():
                        v[(i, k2)] = c
                vecs.append(v)
        return qrank(vecs) == n * len(keys)
    # polynomial coefficients: accept monomial matrices with rational unit entries
    seen = set()
    for j in range(n):
        nz = [i for i in range(n) if block[i][j]]
        if len(nz) != 1 or nz[0] in seen or block[nz[0]][j].degree() != 0:
            return False
        seen.add(nz[0])
    return True


def filtered_map_report(name: str, N: int, source: Connection, target: Connection, matrix,
                        source_degrees, target_degrees,
                        gr_expected: Callable[[int], dict], representative: str = "") -> FilteredMapReport:
    """Compute the four verdicts of ``matrix`` from scratch.

    ``gr_expected(j)`` gives the expected top-degree column ``{row: coeff}``.
    """
    ring = source.ring
    a_linear = not is_equivariant(source, target, matrix)
    filtered = all(
        not matrix[i][j]
        for j, dj in enumerate(source_degrees)
        for i, di in enumerate(target_degrees)
        if di > dj
    )
    gr_ok = True
    for j, dj in enumerate(source_degrees):
        want = gr_expected(j)
        for i, di in enumerate(target_degrees):
            if di != dj:
                continue
            w = want.get(i)
            got = matrix[i][j]
            if (w is None and got) or (w is not None and got != w):
                gr_ok = False
    blocks = FilteredMapReport(name, N, matrix, list(source_degrees), list(target_degrees),
                               a_linear, filtered, False, gr_ok).degree_blocks()
    bij = all(_block_bijective(b, ring) for b in blocks.values())
    if _dims(source_degrees) != _dims(target_degrees):
        bij = False
    return FilteredMapReport(name, N, [list(r) for r in matrix], list(source_degrees),
                             list(target_degrees), a_linear, filtered, bij, gr_ok, representative)


def unitriangular_inverse(matrix, ring) -> list:
    """Inverse of ``I + Nil`` with ``Nil`` strictly filtration-lowering, as ``sum (-Nil)^k``."""
    n = len(matrix)
    nil = [[matrix[i][j] - (ring.one if i == j else ring.zero) for j in range(n)] for i in range(n)]
    inv = [[ring.one if i == j else ring.zero for j in range(n)] for i in range(n)]
    power = [row[:] for row in inv]
    for _ in range(n):
        power = _matmul(power, nil, ring)
        power = [[-c for c in row] for row in power]
        if all(not c for row in power for c in row):
            break
        inv = [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(inv, power)]
    return inv


def _matmul(X, Y, ring) -> list:
    n, k, m = len(X), len(Y), len(Y[0]) if Y else 0
    out = [[ring.zero] * m for _ in range(n)]
    for i in range(n):
        for l in range(k):
            x = X[i][l]
            if not x:
                continue
            row = Y[l]
            for j in range(m):
                if row[j]:
                    out[i][j] = out[i][j] + x * row[j]
    return out


matmul = _matmul
