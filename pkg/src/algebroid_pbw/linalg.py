"""Exact sparse linear algebra over Q.

Vectors are dicts ``{key: Fraction}`` over arbitrary hashable keys.  The
eliminator keeps a reduced row echelon basis whose pivots are the *largest*
key under a caller-supplied order; with a degree-first order this makes the
span intersected with a filtration piece easy to read off.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Mapping

Vector = dict


def vec_add(u: Mapping, v: Mapping, scale=1) -> dict:
    out = dict(u)
    for k, c in v.items():
        x = out.get(k, 0) + scale * c
        if x:
            out[k] = x
        else:
            out.pop(k, None)
    return out


def dot(u: Mapping, v: Mapping):
    if len(u) > len(v):
        u, v = v, u
    return sum((c * v[k] for k, c in u.items() if k in v), Fraction(0))


class Eliminator:
    """Incremental reduced row echelon form.

    ``order`` maps a key to a sortable value; the pivot of each stored row is
    its maximal key.  If ``track`` is set, each row remembers which inserted
    vectors (by label) it is a combination of.
    """

    def __init__(self, order: Callable[[Hashable], object] | None = None, track: bool = False):
        self.order = order or (lambda k: k)
        self.track = track
        self.rows: dict = {}  # pivot -> row (pivot coefficient 1)
        self.combos: dict = {}  # pivot -> {label: coeff}

    @property
    def rank(self) -> int:
        return len(self.rows)

    def pivots(self) -> set:
        return set(self.rows)

    def _pivot(self, v: Mapping):
        return max(v, key=self.order)

    def reduce(self, v: Mapping, combo: dict | None = None) -> dict:
        """Remainder of ``v`` modulo the span; optional ``combo`` is updated in place."""
        v = dict(v)
        rows = self.rows
        # single pass suffices: rows are fully reduced against each other
        for k in [k for k in v if k in rows]:
            c = v.get(k)
            if not c:
                continue
            v = vec_add(v, rows[k], -c)
            if combo is not None and self.track:
                for lab, x in self.combos[k].items():
                    y = combo.get(lab, 0) - c * x
                    if y:
                        combo[lab] = y
                    else:
                        combo.pop(lab, None)
        return v

    def add(self, v: Mapping, label=None) -> bool:
        """Insert ``v``; return True if it enlarged the span."""
        combo = {label: Fraction(1)} if self.track else None
        r = self.reduce(v, combo)
        if not r:
            return False
        p = self._pivot(r)
        inv = 1 / r[p]
        r = {k: c * inv for k, c in r.items()}
        if combo is not None:
            combo = {lab: c * inv for lab, c in combo.items()}
        for q, row in list(self.rows.items()):
            c = row.get(p)
            if c:
                self.rows[q] = vec_add(row, r, -c)
                if self.track:
                    self.combos[q] = vec_add(self.combos[q], combo, -c)
        self.rows[p] = r
        if self.track:
            self.combos[p] = combo
        return True

    def contains(self, v: Mapping) -> bool:
        return not self.reduce(v)

    def annihilator(self, remainder: Mapping) -> dict:
        """A functional vanishing on the span and equal to 1 on ``remainder``.

        ``remainder`` must be a nonzero output of :meth:`reduce`.
        """
        k = self._pivot(remainder)
        scale = 1 / remainder[k]
        y = {k: scale}
        for p, row in self.rows.items():
            c = row.get(k)
            if c:
                y[p] = -c * scale
        return y


@dataclass
class SolveResult:
    solvable: bool
    solution: dict = field(default_factory=dict)  # column label -> Fraction
    rank: int = 0
    augmented_rank: int = 0
    certificate: dict | None = None  # functional y: y(col) = 0 for all cols, y(target) = 1


def solve(columns: Mapping[Hashable, Mapping], target: Mapping) -> SolveResult:
    """Find x with ``sum_j x_j columns[j] == target`` exactly."""
    elim = Eliminator(track=True, order=_stable_order)
    for label, col in columns.items():
        elim.add(col, label)
    combo: dict = {}
    rem = elim.reduce(target, combo)
    if rem:
        y = elim.annihilator(rem)
        return SolveResult(False, rank=elim.rank, augmented_rank=elim.rank + 1, certificate=y)
    # target - sum(rows used) = 0, and combo tracks -(combination); negate
    solution = {lab: -c for lab, c in combo.items() if c}
    return SolveResult(True, solution=solution, rank=elim.rank, augmented_rank=elim.rank)


def check_certificate(columns: Mapping[Hashable, Mapping], target: Mapping, y: Mapping) -> bool:
    """Verify an inconsistency certificate without solving anything."""
    if any(dot(y, col) for col in columns.values()):
        return False
    return dot(y, target) != 0


def rank(vectors: Iterable[Mapping], order=None) -> int:
    elim = Eliminator(order=order or _stable_order)
    for v in vectors:
        elim.add(v)
    return elim.rank


def _stable_order(key):
    return _sort_key(key)


def _sort_key(key):
    """Total order on heterogeneous nested tuples of ints/strings."""
    if isinstance(key, tuple):
        return (2, tuple(_sort_key(k) for k in key))
    if isinstance(key, str):
        return (1, key)
    return (0, key)
