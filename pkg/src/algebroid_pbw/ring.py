"""Exact commutative coefficient rings and their derivations.

Two backends share one element type:

* :class:`FiniteAlgebra` -- a finite-dimensional commutative Q-algebra given by
  structure constants on a basis whose first element is the unit.  The
  rational field is the one-dimensional case.
* :class:`PolynomialRing` -- Q[x_1, ..., x_m] with sparse exponent-vector keys.

Elements are immutable; equality is equality of canonical (zero-free) term maps.
"""

from __future__ import annotations

import itertools
import re
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

from .errors import RingMismatchError, StructuralError, ValidationReport

Scalar = Fraction


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value.strip())
    return Fraction(value)


class RingElement:
    """An element of a :class:`Ring`, stored as ``{key: Fraction}`` without zeros."""

    __slots__ = ("ring", "terms", "_hash")

    def __init__(self, ring: "Ring", terms: Mapping):
        self.ring = ring
        self.terms = terms
        self._hash = None

    # arithmetic -----------------------------------------------------------
    def _coerce(self, other) -> "RingElement":
        if isinstance(other, RingElement):
            if other.ring is not self.ring and other.ring != self.ring:
                raise RingMismatchError(f"{self.ring!r} vs {other.ring!r}")
            return other
        return self.ring.scalar(other)

    def __add__(self, other):
        other = self._coerce(other)
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for k, c in other.terms.items():
            v = out.get(k, 0) + c
            if v:
                out[k] = v
            else:
                out.pop(k, None)
        return RingElement(self.ring, out)

    __radd__ = __add__

    def __neg__(self):
        return RingElement(self.ring, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if not other:
                return self.ring.zero
            return RingElement(self.ring, {k: c * other for k, c in self.terms.items()})
        other = self._coerce(other)
        return self.ring.mul(self, other)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = self.ring.one
        for _ in range(n):
            out = out * self
        return out

    # comparison -----------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, RingElement):
            return self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self == self.ring.scalar(other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, key) -> Fraction:
        return self.terms.get(key, Fraction(0))

    def constant(self) -> Fraction:
        return self.terms.get(self.ring.unit_key, Fraction(0))

    def degree(self) -> int:
        return self.ring.element_degree(self)

    def __str__(self):
        return self.ring.format(self)

    def __repr__(self):
        return f"RingElement({self})"


class Ring:
    kind: str = ""
    finite: bool = False
    unit_key = None

    def __init__(self):
        self.zero = RingElement(self, {})
        self.one = RingElement(self, {self.unit_key: Fraction(1)})

    def element(self, terms: Mapping) -> RingElement:
        clean = {}
        for k, c in terms.items():
            c = as_fraction(c)
            if c:
                clean[k] = c
        return RingElement(self, clean)

    def scalar(self, c) -> RingElement:
        c = as_fraction(c)
        return RingElement(self, {self.unit_key: c} if c else {})

    def basis_element(self, key) -> RingElement:
        return RingElement(self, {key: Fraction(1)})

    def canonicalize(self, r: RingElement) -> RingElement:
        return self.element(r.terms)

    # subclasses implement: mul, generators, format, parse helpers, ansatz_keys
    def mul(self, r: RingElement, s: RingElement) -> RingElement:  # pragma: no cover
        raise NotImplementedError

    def element_degree(self, r: RingElement) -> int:
        return 0

    def sample(self, rng, size: int = 2) -> RingElement:
        raise NotImplementedError

    def parse(self, text) -> RingElement:
        return _parse_expression(self, str(text))


class FiniteAlgebra(Ring):
    """Commutative Q-algebra with basis ``labels`` (``labels[0]`` is the unit).

    ``table[i][j]`` maps basis indices to the coordinates of ``b_i * b_j``.
    ``nilpotent`` lists labels the presenter claims are nilpotent; the claim
    is checked by :func:`ring_validate`.
    """

    kind = "finite-dim-algebra"
    finite = True
    unit_key = 0

    def __init__(self, labels: Iterable[str], table, nilpotent: Iterable[str] = ()):
        self.labels = tuple(labels)
        d = len(self.labels)
        if d == 0:
            raise StructuralError("finite-dim algebra needs at least the unit")
        if len(table) != d or any(len(row) != d for row in table):
            raise StructuralError(f"multiplication table must be {d}x{d}")
        self.table = tuple(
            tuple({k: as_fraction(c) for k, c in entry.items() if as_fraction(c)} for entry in row)
            for row in table
        )
        for row in self.table:
            for entry in row:
                for k in entry:
                    if not 0 <= k < d:
                        raise StructuralError(f"basis index {k} out of range")
        self.nilpotent = tuple(nilpotent)
        for lab in self.nilpotent:
            if lab not in self.labels:
                raise StructuralError(f"unknown nilpotent label {lab!r}")
        self.dim = d
        super().__init__()

    @property
    def is_rational_field(self) -> bool:
        return self.dim == 1

    def __eq__(self, other):
        return (
            isinstance(other, FiniteAlgebra)
            and self.labels == other.labels
            and self.table == other.table
        )

    def __hash__(self):
        return hash(self.labels)

    def __repr__(self):
        if self.dim == 1:
            return "QQ"
        return f"FiniteAlgebra({', '.join(self.labels)})"

    def generators(self) -> list:
        """Keys on which derivations are specified (all basis elements)."""
        return list(range(self.dim))

    def generator_labels(self) -> list[str]:
        return list(self.labels)

    def mul(self, r, s):
        if not r.terms or not s.terms:
            return self.zero
        if self.dim == 1:
            return RingElement(self, {0: r.terms[0] * s.terms[0]})
        out: dict = {}
        for i, a in r.terms.items():
            row = self.table[i]
            for j, b in s.terms.items():
                ab = a * b
                for k, c in row[j].items():
                    out[k] = out.get(k, 0) + ab * c
        return RingElement(self, {k: c for k, c in out.items() if c})

    def ansatz_keys(self, bound=None) -> list:
        return list(range(self.dim))

    def format(self, r):
        if not r.terms:
            return "0"
        parts = []
        for k in sorted(r.terms):
            c = r.terms[k]
            lab = self.labels[k]
            if k == 0:
                parts.append(str(c))
            elif c == 1:
                parts.append(lab)
            elif c == -1:
                parts.append(f"-{lab}")
            else:
                parts.append(f"{c}*{lab}")
        return _join_terms(parts)

    def name_value(self, name: str) -> RingElement:
        if name in self.labels:
            return self.basis_element(self.labels.index(name))
        raise StructuralError(f"unknown basis label {name!r}")

    def sample(self, rng, size: int = 2) -> RingElement:
        return self.element({k: Fraction(rng.randint(-size, size)) for k in range(self.dim)})


class PolynomialRing(Ring):
    """Q[variables] with keys exponent tuples; printed in total-degree-then-lex order."""

    kind = "polynomial-ring"
    finite = False

    def __init__(self, variables: Iterable[str]):
        self.variables = tuple(variables)
        if len(set(self.variables)) != len(self.variables):
            raise StructuralError("duplicate polynomial variables")
        self.nvars = len(self.variables)
        self.unit_key = (0,) * self.nvars
        super().__init__()

    def __eq__(self, other):
        return isinstance(other, PolynomialRing) and self.variables == other.variables

    def __hash__(self):
        return hash(self.variables)

    def __repr__(self):
        return f"QQ[{', '.join(self.variables)}]"

    def generators(self) -> list:
        return list(range(self.nvars))

    def generator_labels(self) -> list[str]:
        return list(self.variables)

    def variable(self, i: int) -> RingElement:
        e = [0] * self.nvars
        e[i] = 1
        return self.basis_element(tuple(e))

    def mul(self, r, s):
        if not r.terms or not s.terms:
            return self.zero
        out: dict = {}
        for e1, a in r.terms.items():
            for e2, b in s.terms.items():
                e = tuple(x + y for x, y in zip(e1, e2))
                out[e] = out.get(e, 0) + a * b
        return RingElement(self, {k: c for k, c in out.items() if c})

    def element_degree(self, r) -> int:
        return max((sum(e) for e in r.terms), default=0)

    def ansatz_keys(self, bound: int) -> list:
        keys = []
        for total in range(bound + 1):
            for combo in itertools.combinations_with_replacement(range(self.nvars), total):
                e = [0] * self.nvars
                for v in combo:
                    e[v] += 1
                keys.append(tuple(e))
        return keys

    def format(self, r):
        if not r.terms:
            return "0"
        parts = []
        for e in sorted(r.terms, key=lambda e: (-sum(e), tuple(-x for x in e))):
            c = r.terms[e]
            mono = "*".join(
                v if k == 1 else f"{v}^{k}" for v, k in zip(self.variables, e) if k
            )
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append(f"-{mono}")
            else:
                parts.append(f"{c}*{mono}")
        return _join_terms(parts)

    def name_value(self, name: str) -> RingElement:
        if name in self.variables:
            return self.variable(self.variables.index(name))
        raise StructuralError(f"unknown variable {name!r}")

    def sample(self, rng, size: int = 2) -> RingElement:
        keys = self.ansatz_keys(2)
        return self.element({k: Fraction(rng.randint(-size, size)) for k in rng.sample(keys, min(3, len(keys)))})


def rational_field() -> FiniteAlgebra:
    return FiniteAlgebra(["1"], [[{0: 1}]])


def dual_numbers(label: str = "eps") -> FiniteAlgebra:
    return FiniteAlgebra(["1", label], [[{0: 1}, {1: 1}], [{1: 1}, {}]], nilpotent=[label])


def _join_terms(parts: list[str]) -> str:
    out = parts[0]
    for p in parts[1:]:
        out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
    return out


_TOKEN = re.compile(r"\s*(?:(\d+(?:/\d+)?)|([A-Za-z_][A-Za-z_0-9]*)|(\S))")


def _parse_expression(ring: Ring, text: str) -> RingElement:
    """Parse sums of products like ``"3/2*x^2*y - eps + 1"``; parentheses allowed."""
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            break
        num, name, sym = m.groups()
        if num is not None:
            tokens.append(("num", num))
        elif name is not None:
            tokens.append(("name", name))
        else:
            tokens.append(("sym", sym))
        pos = m.end()
    if not tokens:
        raise StructuralError("empty ring expression")
    idx = 0

    def peek():
        return tokens[idx] if idx < len(tokens) else (None, None)

    def take():
        nonlocal idx
        tok = peek()
        idx += 1
        return tok

    def expr():
        sign = 1
        if peek() == ("sym", "-"):
            take()
            sign = -1
        elif peek() == ("sym", "+"):
            take()
        val = term() * sign
        while peek() in (("sym", "+"), ("sym", "-")):
            op = take()[1]
            t = term()
            val = val + t if op == "+" else val - t
        return val

    def term():
        val = power()
        while True:
            if peek() == ("sym", "*"):
                take()
                val = val * power()
            elif peek() == ("sym", "/"):
                take()
                kind, tok = take()
                if kind != "num":
                    raise StructuralError(f"can only divide by numbers in {text!r}")
                val = val * (1 / as_fraction(tok))
            else:
                return val

    def power():
        base = atom()
        if peek() == ("sym", "^"):
            take()
            kind, tok = take()
            if kind != "num" or "/" in tok:
                raise StructuralError(f"bad exponent in {text!r}")
            base = base ** int(tok)
        return base

    def atom():
        kind, tok = take()
        if kind == "num":
            return ring.scalar(as_fraction(tok))
        if kind == "name":
            return ring.name_value(tok)
        if tok == "(":
            val = expr()
            if take() != ("sym", ")"):
                raise StructuralError(f"unbalanced parentheses in {text!r}")
            return val
        if tok == "-":
            return -atom()
        raise StructuralError(f"unexpected token {tok!r} in {text!r}")

    value = expr()
    if idx != len(tokens):
        raise StructuralError(f"trailing input in {text!r}")
    return value


# ---------------------------------------------------------------------------
# derivations


class Derivation:
    """A Q-linear derivation of a ring, fixed by its values on ``ring.generators()``.

    For a finite algebra the generators are all basis elements (the derivation
    is then literally a linear map); for a polynomial ring they are the
    variables and the value on a monomial follows from the Leibniz rule.
    """

    __slots__ = ("ring", "images", "_cache")

    def __init__(self, ring: Ring, images):
        images = tuple(images)
        if len(images) != len(ring.generators()):
            raise StructuralError("derivation needs one image per ring generator")
        for im in images:
            if im.ring != ring:
                raise RingMismatchError("derivation image over another ring")
        self.ring = ring
        self.images = images
        self._cache: dict = {}

    @classmethod
    def zero(cls, ring: Ring) -> "Derivation":
        return cls(ring, [ring.zero] * len(ring.generators()))

    def is_zero(self) -> bool:
        return all(im.is_zero() for im in self.images)

    def __call__(self, r: RingElement) -> RingElement:
        return derivation_apply(self, r)

    def __eq__(self, other):
        return isinstance(other, Derivation) and self.images == other.images

    def __hash__(self):
        return hash(self.images)

    def __add__(self, other: "Derivation") -> "Derivation":
        return Derivation(self.ring, [a + b for a, b in zip(self.images, other.images)])

    def __sub__(self, other: "Derivation") -> "Derivation":
        return Derivation(self.ring, [a - b for a, b in zip(self.images, other.images)])

    def scaled(self, r: RingElement) -> "Derivation":
        """The derivation ``r * self``."""
        return Derivation(self.ring, [r * im for im in self.images])

    def __repr__(self):
        labels = self.ring.generator_labels()
        inner = ", ".join(f"{l}->{im}" for l, im in zip(labels, self.images) if im)
        return f"Derivation({inner or '0'})"


def derivation_apply(delta: Derivation, r: RingElement) -> RingElement:
    ring = delta.ring
    if r.ring is not ring and r.ring != ring:
        raise RingMismatchError("derivation and element live over different rings")
    if not r.terms:
        return ring.zero
    if ring.finite:
        out = ring.zero
        for k, c in r.terms.items():
            im = delta.images[k]
            if im.terms:
                out = out + im * c
        return out
    out = ring.zero
    cache = delta._cache
    for e, c in r.terms.items():
        v = cache.get(e)
        if v is None:
            v = ring.zero
            for i, k in enumerate(e):
                if k and delta.images[i].terms:
                    lower = list(e)
                    lower[i] -= 1
                    v = v + ring.basis_element(tuple(lower)) * delta.images[i] * k
            cache[e] = v
        if v.terms:
            out = out + v * c
    return out


def derivation_bracket(d1: Derivation, d2: Derivation) -> Derivation:
    """The commutator ``d1 d2 - d2 d1`` evaluated on ring generators."""
    if d1.ring != d2.ring:
        raise RingMismatchError("derivations over different rings")
    ring = d1.ring
    gens = [ring.basis_element(k) for k in ring.generators()] if ring.finite else [
        ring.variable(i) for i in ring.generators()
    ]
    return Derivation(ring, [d1(d2(g)) - d2(d1(g)) for g in gens])


def ring_mul(r: RingElement, s: RingElement) -> RingElement:
    if r.ring != s.ring:
        raise RingMismatchError("elements over different rings")
    return r.ring.mul(r, s)


def ring_validate(ring: Ring) -> ValidationReport:
    """Check unit, commutativity, associativity and declared nilpotency by enumeration."""
    report = ValidationReport(f"ring {ring!r}")
    if not isinstance(ring, FiniteAlgebra):
        return report
    d = ring.dim
    b = [ring.basis_element(i) for i in range(d)]
    for i in range(d):
        if ring.mul(b[0], b[i]) != b[i] or ring.mul(b[i], b[0]) != b[i]:
            report.add("unit", (0, i), f"1*{ring.labels[i]} != {ring.labels[i]}")
    for i, j in itertools.combinations(range(d), 2):
        if ring.mul(b[i], b[j]) != ring.mul(b[j], b[i]):
            report.add("commutativity", (i, j))
    for i, j, k in itertools.product(range(d), repeat=3):
        if ring.mul(ring.mul(b[i], b[j]), b[k]) != ring.mul(b[i], ring.mul(b[j], b[k])):
            report.add("associativity", (i, j, k))
    for lab in ring.nilpotent:
        x = ring.name_value(lab)
        p = x
        for _ in range(d):
            p = ring.mul(p, x)
        if p:
            report.add("nilpotency", (ring.labels.index(lab),), f"{lab}^{d + 1} = {p}")
    return report


def derivation_validate(delta: Derivation) -> ValidationReport:
    """Leibniz rule on all basis pairs (finite algebras); delta(1) = 0 always."""
    ring = delta.ring
    report = ValidationReport(f"derivation {delta!r}")
    if delta(ring.one):
        report.add("unit", (0,), "derivation does not kill 1")
    if ring.finite:
        d = ring.dim
        b = [ring.basis_element(i) for i in range(d)]
        for i in range(d):
            for j in range(i, d):
                lhs = delta(b[i] * b[j])
                rhs = delta(b[i]) * b[j] + b[i] * delta(b[j])
                if lhs != rhs:
                    report.add("leibniz", (i, j), f"{lhs} != {rhs}")
    return report


def iter_basis(ring: Ring, bound: int = 1) -> Iterator[RingElement]:
    for key in ring.ansatz_keys(bound):
        yield ring.basis_element(key)
