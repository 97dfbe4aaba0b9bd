"""The universal enveloping algebra U(L) in PBW normal form.

Normal words are tuples of generator indices, nondecreasing for a chosen
letter order; coefficients sit on the left.  Straightening uses the two
rewriting rules

    l_j l_i -> l_i l_j + [l_j, l_i]     (l_j after l_i in the order)
    l r     -> r l + l(r)

implemented as memoised left multiplication by a single generator.
"""

from __future__ import annotations

import itertools
import math
import random
from typing import Iterable, Sequence, Union

from .algebroid import AdaptedPair, Algebroid
from .errors import ResourceError, StructuralError
from .ring import Ring, RingElement

Word = tuple


def _add_into(out: dict, key, coeff) -> None:
    if not coeff:
        return
    v = out.get(key)
    v = coeff if v is None else v + coeff
    if v:
        out[key] = v
    else:
        out.pop(key, None)


class EnvelopeElement:
    """A normal-form element of U(L): ``{word: left coefficient}``."""

    __slots__ = ("env", "terms")

    def __init__(self, env: "Envelope", terms: dict):
        self.env = env
        self.terms = {w: c for w, c in terms.items() if c}

    def degree(self) -> int:
        return max((len(w) for w in self.terms), default=-1)

    def component(self, k: int) -> "EnvelopeElement":
        return EnvelopeElement(self.env, {w: c for w, c in self.terms.items() if len(w) == k})

    def __add__(self, other):
        out = dict(self.terms)
        for w, c in self.env.coerce(other).terms.items():
            _add_into(out, w, c)
        return EnvelopeElement(self.env, out)

    __radd__ = __add__

    def __neg__(self):
        return EnvelopeElement(self.env, {w: -c for w, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self.env.coerce(other))

    def __mul__(self, other):
        return envelope_mul(self, self.env.coerce(other))

    def __rmul__(self, other):
        return envelope_mul(self.env.coerce(other), self)

    def __eq__(self, other):
        if isinstance(other, EnvelopeElement):
            return self.terms == other.terms
        return self == self.env.coerce(other)

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        return f"EnvelopeElement({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        names = self.env.L.names
        parts = []
        for w in sorted(self.terms, key=lambda w: (-len(w), [self.env.rank_of[i] for i in w])):
            word = "*".join(names[i] for i in w)
            c = str(self.terms[w])
            if not word:
                parts.append(c)
            elif c == "1":
                parts.append(word)
            else:
                parts.append(f"({c})*{word}")
        return " + ".join(parts)


class Envelope:
    """U(L) for an algebroid ``L`` with letter order ``order`` (smallest first)."""

    def __init__(self, L: Algebroid, order: Sequence[int] | None = None, budget: int | None = None):
        self.L = L
        self.ring: Ring = L.ring
        order = list(range(L.rank)) if order is None else list(order)
        if sorted(order) != list(range(L.rank)):
            raise StructuralError("letter order must be a permutation of the generators")
        self.order = tuple(order)
        self.rank_of = {g: pos for pos, g in enumerate(order)}
        self.budget = budget
        self.steps = 0
        self._memo: dict = {}

    @classmethod
    def for_pair(cls, pair: AdaptedPair, budget=None) -> "Envelope":
        """Coset letters first, A-letters last, so U(L)A is spanned by A-tailed words."""
        L = pair.ambient
        order = list(range(pair.p, L.rank)) + list(range(pair.p))
        return cls(L, order, budget)

    # construction -------------------------------------------------------------
    def element(self, terms: dict) -> EnvelopeElement:
        return EnvelopeElement(self, terms)

    def one(self) -> EnvelopeElement:
        return EnvelopeElement(self, {(): self.ring.one})

    def scalar(self, r) -> EnvelopeElement:
        if not isinstance(r, RingElement):
            r = self.ring.scalar(r)
        return EnvelopeElement(self, {(): r})

    def gen(self, i: int) -> EnvelopeElement:
        return EnvelopeElement(self, {(i,): self.ring.one})

    def from_vector(self, v) -> EnvelopeElement:
        return EnvelopeElement(self, {(i,): c for i, c in enumerate(v) if c})

    def coerce(self, x) -> EnvelopeElement:
        if isinstance(x, EnvelopeElement):
            return x
        return self.scalar(x)

    def is_normal(self, word: Word) -> bool:
        r = [self.rank_of[g] for g in word]
        return all(a <= b for a, b in zip(r, r[1:]))

    # core rewriting -------------------------------------------------------------
    def _tick(self):
        self.steps += 1
        if self.budget is not None and self.steps > self.budget:
            raise ResourceError(f"straightening budget {self.budget} exceeded")

    def left_mul_word(self, g: int, word: Word) -> dict:
        """Normal form of ``l_g * word`` for a normal ``word`` (returns ``{word: coeff}``)."""
        key = (g, word)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        self._tick()
        if not word or self.rank_of[g] <= self.rank_of[word[0]]:
            out = {(g,) + word: self.ring.one}
        else:
            h, rest = word[0], word[1:]
            # l_g h rest = h (l_g rest) + [l_g, h] rest
            out: dict = {}
            inner = self.left_mul_word(g, rest)
            for w, c in self.left_mul_terms(h, inner).items():
                _add_into(out, w, c)
            br = self.L.brackets[g][h]
            for k, coeff in enumerate(br):
                if coeff:
                    for w, c in self.left_mul_word(k, rest).items():
                        _add_into(out, w, coeff * c)
        self._memo[key] = out
        return out

    def left_mul_terms(self, g: int, terms: dict) -> dict:
        """``l_g * sum c_w w`` using ``l_g c = c l_g + l_g(c)``."""
        out: dict = {}
        rho = self.L.anchor[g]
        for w, c in terms.items():
            for w2, c2 in self.left_mul_word(g, w).items():
                _add_into(out, w2, c * c2)
            dc = rho(c)
            if dc:
                _add_into(out, w, dc)
        return out

    def word_times(self, word: Word, terms: dict) -> dict:
        """``word * terms`` for an arbitrary (possibly unsorted) word."""
        for g in reversed(word):
            terms = self.left_mul_terms(g, terms)
        return terms


Item = Union[int, RingElement]


def straighten(env: Envelope, expression: Iterable[Item]) -> EnvelopeElement:
    """Normal form of a product of ring elements and generator indices."""
    terms = {(): env.ring.one}
    for item in reversed(list(expression)):
        if isinstance(item, RingElement):
            terms = {w: item * c for w, c in terms.items() if item * c}
        else:
            terms = env.left_mul_terms(item, terms)
    return EnvelopeElement(env, terms)


def envelope_mul(u: EnvelopeElement, v: EnvelopeElement) -> EnvelopeElement:
    env = u.env
    out: dict = {}
    for w, c in u.terms.items():
        for w2, c2 in env.word_times(w, v.terms).items():
            _add_into(out, w2, c * c2)
    return EnvelopeElement(env, out)


def anchor_apply(u: EnvelopeElement, r: RingElement) -> RingElement:
    """Action of U(L) on R: ring elements multiply, generators act through the anchor."""
    L = u.env.L
    out = r.ring.zero
    for w, c in u.terms.items():
        val = r
        for g in reversed(w):
            val = L.anchor[g](val)
            if not val:
                break
        out = out + c * val
    return out


def counit(u: EnvelopeElement) -> RingElement:
    return anchor_apply(u, u.env.ring.one)


def normal_words(letters: Sequence[int], k: int) -> list[Word]:
    """Nondecreasing words of length ``k`` in ``letters`` (given in increasing order)."""
    return [tuple(c) for c in itertools.combinations_with_replacement(letters, k)]


def gr_rank(L: Algebroid, k: int) -> tuple[int, list[Word]]:
    """R-rank of gr^k U(L) and a word basis, measured from straightened products.

    Every length-``k`` word is straightened; the degree-``k`` parts are
    collected and the rank of their span is computed over Q (divided by the
    ring dimension for finite algebras).  Freeness predicts ``C(n+k-1, k)``.
    """
    from .linalg import Eliminator

    env = Envelope(L)
    ring = L.ring
    scalars = [ring.basis_element(key) for key in ring.ansatz_keys(0)] if ring.finite else [ring.one]
    elim = Eliminator()
    tops = set()
    for word in itertools.product(range(L.rank), repeat=k):
        top = straighten(env, word).component(k)
        for b in scalars:
            vec = {}
            for w, c in top.terms.items():
                for key, x in (b * c).terms.items():
                    vec[(w, key)] = x
            if vec:
                elim.add(vec)
        tops.update(top.terms)
    dim = ring.dim if ring.finite else 1
    basis = sorted(tops)
    return elim.rank // dim, basis


def multiset_count(n: int, k: int) -> int:
    """Number of multisets of size ``k`` drawn from ``n`` letters."""
    if n == 0:
        return 1 if k == 0 else 0
    return math.comb(n + k - 1, k)


# ---------------------------------------------------------------------------
# independent rewriting by random redex choice (confluence checks)


def rewrite_randomly(env: Envelope, expression: Sequence[Item], rng: random.Random) -> EnvelopeElement:
    """Normalise by applying single rewriting steps at randomly chosen positions.

    Works on raw terms ``(coeff, items)`` and never touches the memoised
    left-multiplication path, so agreement with :func:`straighten` is a
    genuine order-independence check.
    """
    ring = env.ring
    L = env.L
    pending = [(ring.one, tuple(expression))]
    done: dict = {}
    while pending:
        coeff, items = pending.pop()
        if not coeff:
            continue
        redexes = []
        for pos in range(len(items) - 1):
            a, b = items[pos], items[pos + 1]
            if isinstance(b, RingElement):
                redexes.append(pos)
            elif not isinstance(a, RingElement) and env.rank_of[a] > env.rank_of[b]:
                redexes.append(pos)
        if items and isinstance(items[0], RingElement):
            redexes.append(-1)
        if not redexes:
            _add_into(done, tuple(items), coeff)
            continue
        pos = rng.choice(redexes)
        if pos == -1:
            pending.append((coeff * items[0], items[1:]))
            continue
        a, b = items[pos], items[pos + 1]
        head, tail = items[:pos], items[pos + 2:]
        if isinstance(b, RingElement):
            if isinstance(a, RingElement):
                pending.append((coeff, head + (a * b,) + tail))
            else:
                pending.append((coeff, head + (b, a) + tail))
                da = L.anchor[a](b)
                if da:
                    pending.append((coeff, head + (da,) + tail))
        else:
            pending.append((coeff, head + (b, a) + tail))
            for k, g in enumerate(L.brackets[a][b]):
                if g:
                    pending.append((coeff, head + (g, k) + tail))
    return EnvelopeElement(env, done)


# ---------------------------------------------------------------------------
# the induced module U(L) (x)_{U(A)} E truncated by word length


class InducedModule:
    """``(U(L) (x)_{U(A)} E)^{<= N}`` on the basis ``w (x) e_s`` (w a normal coset word).

    With ``E = 1_A`` this is the left quotient ``U(L)/U(L)A``.  Basis index
    order is by word length, then word, then ``s``.
    """

    def __init__(self, pair: AdaptedPair, E, N: int, budget: int | None = None):
        self.pair = pair
        self.E = E
        self.N = N
        self.env = Envelope.for_pair(pair, budget)
        q, p = pair.q, pair.p
        letters = list(range(p, p + q))
        self.words = [w for k in range(N + 1) for w in normal_words(letters, k)]
        self.word_index = {w: i for i, w in enumerate(self.words)}
        m = E.rank
        self.basis = [(w, s) for w in self.words for s in range(m)]
        self.index = {b: i for i, b in enumerate(self.basis)}
        self.degrees = [len(w) for w, _ in self.basis]
        self._module = None

    def split_word(self, word: Word) -> tuple[Word, Word]:
        p = self.pair.p
        cut = len(word)
        while cut and word[cut - 1] < p:
            cut -= 1
        return word[:cut], word[cut:]

    def reduce(self, element: EnvelopeElement | dict, vec) -> dict:
        """Coordinates of ``element (x) vec`` as ``{(coset word, s): coeff}``."""
        terms = element.terms if isinstance(element, EnvelopeElement) else element
        E = self.E
        out: dict = {}
        for word, c in terms.items():
            head, tail = self.split_word(word)
            e = tuple(vec)
            for a in reversed(tail):
                e = E.act(a, e)
            for s, r in enumerate(e):
                if not r:
                    continue
                # head * r: coefficients move left, letters stay coset letters
                for w2, c2 in self.env.word_times(head, {(): r}).items():
                    _add_into(out, (w2, s), c * c2)
        return out

    def act_generator(self, a: int, w: Word, s: int) -> dict:
        elem = self.env.left_mul_word(a, w)
        return self.reduce(elem, _unit_vec(self.E, s))

    def module(self):
        """The truncated induced module as a :class:`~algebroid_pbw.modcat.FlatModule` over A."""
        if self._module is not None:
            return self._module
        from .modcat import FlatModule

        pair = self.pair
        ring = pair.ring
        dim = len(self.basis)
        mats = []
        for a in range(pair.p):
            M = [[ring.zero] * dim for _ in range(dim)]
            for j, (w, s) in enumerate(self.basis):
                for key, c in self.act_generator(a, w, s).items():
                    i = self.index.get(key)
                    if i is None:
                        raise StructuralError("A-action left the truncation")  # filtration violated
                    M[i][j] = c
            mats.append(M)
        labels = [_word_label(pair.ambient.names, w) + f"(x)e{s}" for w, s in self.basis]
        self._module = FlatModule(pair.sub, dim, mats, labels=labels)
        return self._module


def _unit_vec(E, s):
    ring = E.ring
    return tuple(ring.one if i == s else ring.zero for i in range(E.rank))


def _word_label(names, w) -> str:
    return "*".join(names[i] for i in w) or "1"


def left_quotient(pair: AdaptedPair, N: int, budget=None) -> InducedModule:
    """``(U(L)/U(L)A)^{<= N}`` with its A-action (the induced module of ``1_A``)."""
    from .modcat import unit_module

    return InducedModule(pair, unit_module(pair.sub), N, budget)
