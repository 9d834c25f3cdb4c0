r"""Symbolic unital *-algebra over abstract hermitian generators phi(i) with
the exchange relation

    phi(j) phi(i)  =  phi(i) phi(j) - i E_ij 1        (j > i),

where E is an antisymmetric real pairing on generator indices.  Elements are
finite linear combinations of words over the generator alphabet; the canonical
representative of an element has every word sorted in non-decreasing index
order, and ``normal_form`` computes it by confluent rewriting.  Scalars come
in two modes: exact complex rationals (the default for identity checking) and
ordinary complex floats.

>>> E = PairingForm({(1, 2): 1})
>>> a = AlgebraElement.generator(2) * AlgebraElement.generator(1)
>>> print(element_to_text(normal_form(a, E)))
0/1+-1/1*i + 1/1+0/1*i*phi(1)phi(2)

That is phi(2)phi(1) = phi(1)phi(2) - i, the single-swap case of the
relation.  Star reverses words and conjugates coefficients; the generators
themselves are hermitian, so no index decoration is needed.
"""

from __future__ import annotations

import json
import re as _re
from fractions import Fraction
from itertools import product as _cartesian

from .errors import (
    ArityError,
    InvalidSymmetryError,
    ScalarModeMismatchError,
    ValidationError,
)

__all__ = [
    "ExactComplex",
    "AlgebraElement",
    "PairingForm",
    "InducedMap",
    "multiply",
    "star",
    "normal_form",
    "commutator",
    "induced_map",
    "simplicity_probe",
    "find_simplicity_witness",
    "element_to_text",
    "element_from_text",
]

EXACT = "exact"
FLOAT = "float"


class ExactComplex:
    """Complex number with Fraction real and imaginary parts.

    Immutable; arithmetic never rounds.
    """

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", Fraction(re))
        object.__setattr__(self, "im", Fraction(im))

    def __setattr__(self, name, value):
        raise AttributeError("ExactComplex is immutable")

    def __add__(self, other):
        other = _as_exact(other)
        return ExactComplex(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = _as_exact(other)
        return ExactComplex(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return _as_exact(other) - self

    def __mul__(self, other):
        other = _as_exact(other)
        return ExactComplex(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __neg__(self):
        return ExactComplex(-self.re, -self.im)

    def conjugate(self):
        return ExactComplex(self.re, -self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = ExactComplex(other)
        if not isinstance(other, ExactComplex):
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"ExactComplex({self.re!r}, {self.im!r})"


def _as_exact(x):
    if isinstance(x, ExactComplex):
        return x
    if isinstance(x, (int, Fraction)):
        return ExactComplex(x)
    raise ScalarModeMismatchError(
        f"cannot use {type(x).__name__} in exact-mode arithmetic"
    )


def _coerce_scalar(x, mode):
    """Coerce x into the scalar type of the given mode, or raise."""
    if mode == EXACT:
        return _as_exact(x)
    if isinstance(x, ExactComplex):
        raise ScalarModeMismatchError("exact scalar used in float mode")
    return complex(x)


def _conj(c):
    return c.conjugate()


def _is_zero(c):
    return not c if isinstance(c, ExactComplex) else c == 0


class AlgebraElement:
    """Finite linear combination of generator words plus the unit.

    terms maps words (tuples of generator indices) to nonzero scalars; the
    empty word is the unit.  mode is "exact" or "float" and is fixed per
    element; operations between elements require equal modes.
    """

    __slots__ = ("terms", "mode")

    def __init__(self, terms=None, mode=EXACT):
        if mode not in (EXACT, FLOAT):
            raise ValidationError(f"unknown scalar mode {mode!r}")
        clean = {}
        for word, coeff in (terms or {}).items():
            word = tuple(int(g) for g in word)
            if any(g < 0 for g in word):
                raise ValidationError("generator indices must be non-negative")
            coeff = _coerce_scalar(coeff, mode)
            if not _is_zero(coeff):
                clean[word] = clean.get(word, _zero_scalar(mode)) + coeff
                if _is_zero(clean[word]):
                    del clean[word]
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "mode", mode)

    def __setattr__(self, name, value):
        raise AttributeError("AlgebraElement is immutable")

    # constructors

    @classmethod
    def zero(cls, mode=EXACT):
        return cls({}, mode)

    @classmethod
    def unit(cls, mode=EXACT):
        return cls({(): 1}, mode)

    @classmethod
    def generator(cls, index, mode=EXACT):
        return cls({(int(index),): 1}, mode)

    @classmethod
    def from_vector(cls, vector, mode=EXACT):
        """Degree-one element sum_g vector[g] * phi(g) from a dict."""
        return cls({(int(g),): c for g, c in vector.items()}, mode)

    # queries

    @property
    def degree(self):
        """Filtration degree: longest word length, 0 for scalars and zero."""
        return max((len(w) for w in self.terms), default=0)

    def is_zero(self):
        return not self.terms

    def coefficient(self, word):
        return self.terms.get(tuple(word), _zero_scalar(self.mode))

    def unit_coefficient(self):
        return self.coefficient(())

    # arithmetic

    def _check_mode(self, other):
        if self.mode != other.mode:
            raise ScalarModeMismatchError(
                f"cannot combine {self.mode} and {other.mode} elements"
            )

    def __add__(self, other):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        self._check_mode(other)
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, _zero_scalar(self.mode)) + c
        return AlgebraElement(out, self.mode)

    def __sub__(self, other):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        return self + other.scale(-1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, c):
        c = _coerce_scalar(c, self.mode)
        return AlgebraElement(
            {w: coeff * c for w, coeff in self.terms.items()}, self.mode
        )

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            return multiply(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def star(self):
        return star(self)

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        return self.mode == other.mode and self.terms == other.terms

    def __hash__(self):
        return hash((self.mode, frozenset(self.terms.items())))

    def __repr__(self):
        return f"<AlgebraElement {element_to_text(self)!r} ({self.mode})>"


def _zero_scalar(mode):
    return ExactComplex() if mode == EXACT else 0j


def _imag_unit(mode):
    return ExactComplex(0, 1) if mode == EXACT else 1j


class PairingForm:
    """Antisymmetric real pairing E on generator indices.

    Stored triangularly: entries[(i, j)] = E_ij for i < j.  Missing pairs are
    zero.  Entry values may be Fraction/int (usable in both scalar modes) or
    float (float mode only).
    """

    __slots__ = ("entries",)

    def __init__(self, entries=None):
        clean = {}
        for (i, j), v in (entries or {}).items():
            i, j = int(i), int(j)
            if i == j:
                if v:
                    raise ValidationError("diagonal pairing entries must vanish")
                continue
            if i > j:
                i, j, v = j, i, -v
            if v:
                clean[(i, j)] = v
        object.__setattr__(self, "entries", clean)

    def __setattr__(self, name, value):
        raise AttributeError("PairingForm is immutable")

    def value(self, i, j):
        """E(i, j), antisymmetric in the arguments."""
        i, j = int(i), int(j)
        if i == j:
            return 0
        if i < j:
            return self.entries.get((i, j), 0)
        return -self.entries.get((j, i), 0)

    def matrix(self, generators):
        """Float matrix of E restricted to an ordered generator list."""
        import numpy as np

        gens = list(generators)
        n = len(gens)
        out = np.zeros((n, n))
        for p in range(n):
            for q in range(n):
                out[p, q] = float(self.value(gens[p], gens[q]))
        return out

    def is_weakly_nondegenerate(self, generators, tol=1e-10):
        """True iff E restricted to the generators has full rank."""
        import numpy as np

        mat = self.matrix(generators)
        if mat.size == 0:
            return True
        rank = np.linalg.matrix_rank(mat, tol=tol * max(1.0, abs(mat).max()))
        return rank == len(list(generators))

    def to_json(self):
        rows = []
        for (i, j), v in sorted(self.entries.items()):
            if isinstance(v, Fraction):
                rows.append([i, j, str(v)])
            else:
                rows.append([i, j, v])
        return json.dumps({"pairing": rows}, sort_keys=True)

    @classmethod
    def from_json(cls, text, exact=True):
        data = json.loads(text)
        entries = {}
        for i, j, v in data["pairing"]:
            if exact:
                entries[(i, j)] = Fraction(v) if isinstance(v, str) else Fraction(v)
            else:
                entries[(i, j)] = float(Fraction(v)) if isinstance(v, str) else float(v)
        return cls(entries)

    def __eq__(self, other):
        if not isinstance(other, PairingForm):
            return NotImplemented
        return self.entries == other.entries

    def __repr__(self):
        return f"PairingForm({self.entries!r})"


def _pairing_scalar(E, i, j, mode):
    # -i * E_ij as a scalar of the right mode; exact mode rejects float entries
    e = E.value(i, j)
    if mode == EXACT:
        if isinstance(e, float):
            raise ScalarModeMismatchError(
                "pairing form has float entries; exact elements need rational E"
            )
        return ExactComplex(0, -Fraction(e))
    return complex(0.0, -float(e))


def multiply(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    """Concatenation product, bilinear over the stored terms."""
    if not isinstance(a, AlgebraElement) or not isinstance(b, AlgebraElement):
        raise ValidationError("multiply expects AlgebraElement operands")
    a._check_mode(b)
    out = {}
    zero = _zero_scalar(a.mode)
    for wa, ca in a.terms.items():
        for wb, cb in b.terms.items():
            w = wa + wb
            out[w] = out.get(w, zero) + ca * cb
    return AlgebraElement(out, a.mode)


def star(a: AlgebraElement) -> AlgebraElement:
    """Involution: reverse every word, conjugate every coefficient."""
    return AlgebraElement(
        {tuple(reversed(w)): _conj(c) for w, c in a.terms.items()}, a.mode
    )


def _first_inversion(word):
    for pos in range(len(word) - 1):
        if word[pos] > word[pos + 1]:
            return pos
    return None


def normal_form(a: AlgebraElement, E: PairingForm) -> AlgebraElement:
    """Canonical representative with all words sorted non-decreasingly.

    Repeatedly applies phi(j)phi(i) -> phi(i)phi(j) - i E_ij 1 (j > i) to the
    leftmost inversion of each word.  Every swap strictly lowers the inversion
    count at fixed degree and emits a remainder two degrees down, so the
    rewriting terminates; merging coefficients by word keeps it from
    re-deriving duplicates.
    """
    pending = dict(a.terms)
    done = {}
    zero = _zero_scalar(a.mode)
    while pending:
        word, coeff = pending.popitem()
        if _is_zero(coeff):
            continue
        pos = _first_inversion(word)
        if pos is None:
            done[word] = done.get(word, zero) + coeff
            continue
        i, j = word[pos + 1], word[pos]
        swapped = word[:pos] + (i, j) + word[pos + 2 :]
        pending[swapped] = pending.get(swapped, zero) + coeff
        factor = _pairing_scalar(E, i, j, a.mode)
        if not _is_zero(factor):
            shorter = word[:pos] + word[pos + 2 :]
            pending[shorter] = pending.get(shorter, zero) + coeff * factor
    return AlgebraElement(done, a.mode)


def commutator(a: AlgebraElement, b: AlgebraElement, E: PairingForm) -> AlgebraElement:
    """normal_form(ab - ba, E)."""
    return normal_form(multiply(a, b) - multiply(b, a), E)


class InducedMap:
    """(Anti-)homomorphism phi(g_j) -> sum_i sigma[i, j] phi(g_i).

    parity "preserving" gives a linear *-homomorphism; "reversing" gives the
    anti-linear variant that conjugates scalars.  Word order is kept either
    way; only the coefficients see the difference.
    """

    def __init__(self, sigma, generators, E, parity, tol=1e-9):
        import numpy as np

        gens = [int(g) for g in generators]
        mat = np.asarray(
            [[float(Fraction(x) if not isinstance(x, float) else x) for x in row]
             for row in sigma]
        )
        n = len(gens)
        if mat.shape != (n, n):
            raise ValidationError("sigma must be square over the generator list")
        if parity not in ("preserving", "reversing"):
            raise ValidationError("parity must be 'preserving' or 'reversing'")
        Emat = E.matrix(gens)
        scale = max(1.0, abs(Emat).max())
        transported = mat.T @ Emat @ mat
        if parity == "preserving":
            residual = abs(transported - Emat).max()
        else:
            residual = abs(transported + Emat).max()
        if residual > tol * scale:
            raise InvalidSymmetryError(
                f"sigma does not {parity.rstrip('ing')}e E: residual {residual:.3e}"
            )
        self.sigma = sigma
        self.generators = gens
        self.parity = parity
        self._column = {
            g: [(gens[i], row) for i, row in enumerate(col) if row]
            for g, col in zip(gens, (tuple(c) for c in zip(*sigma)))
        }

    def _image_of_generator(self, g, mode):
        if g not in self._column:
            raise ValidationError(f"generator {g} outside the map's span")
        terms = {}
        for target, entry in self._column[g]:
            terms[(target,)] = _convert_entry(entry, mode)
        return AlgebraElement(terms, mode)

    def __call__(self, a: AlgebraElement) -> AlgebraElement:
        out = AlgebraElement.zero(a.mode)
        for word, coeff in a.terms.items():
            if self.parity == "reversing":
                coeff = _conj(coeff)
            piece = AlgebraElement({(): coeff}, a.mode)
            for g in word:
                piece = multiply(piece, self._image_of_generator(g, a.mode))
            out = out + piece
        return out


def _convert_entry(entry, mode):
    if mode == EXACT:
        if isinstance(entry, float):
            raise ScalarModeMismatchError(
                "sigma has float entries; exact elements need rational sigma"
            )
        return ExactComplex(Fraction(entry))
    return complex(float(entry))


def induced_map(sigma, generators, E: PairingForm, parity: str, tol=1e-9) -> InducedMap:
    """Build the endomorphism induced by sigma; parity is checked against E."""
    return InducedMap(sigma, generators, E, parity, tol=tol)


def simplicity_probe(a: AlgebraElement, probes, E: PairingForm):
    """Coefficient of the unit in [...[a, phi(u_1)], ..., phi(u_k)].

    probes is a list of generator-span vectors (dicts index -> coefficient)
    whose length must equal the top degree of a; multiples of the unit accept
    any probe list and give zero.
    """
    k = a.degree
    if k > 0 and len(probes) != k:
        raise ArityError(
            f"element of degree {k} needs exactly {k} probes, got {len(probes)}"
        )
    x = a
    for u in probes:
        x = commutator(x, AlgebraElement.from_vector(u, a.mode), E)
    return x.unit_coefficient()


def find_simplicity_witness(a: AlgebraElement, E: PairingForm, generators):
    """Search standard-basis probe tuples until the probe scalar is nonzero.

    Returns (probes, value) or None.  For weakly non-degenerate E and a not
    proportional to the unit this search succeeds on small generator sets;
    with degenerate E it may legitimately fail.
    """
    k = a.degree
    if k == 0:
        return None
    gens = list(generators)
    for combo in _cartesian(gens, repeat=k):
        probes = [{g: 1} for g in combo]
        value = simplicity_probe(a, probes, E)
        if not _is_zero(value):
            return probes, value
    return None


# ---------------------------------------------------------------- text form

def _format_scalar(c):
    if isinstance(c, ExactComplex):
        re_, im_ = c.re, c.im
        return (
            f"{re_.numerator}/{re_.denominator}"
            f"+{im_.numerator}/{im_.denominator}*i"
        )
    return f"{c.real!r}+{c.imag!r}*i"


_EXACT_COEFF = _re.compile(r"^(-?\d+)/(\d+)\+(-?\d+)/(\d+)\*i$")
_TERM = _re.compile(r"^(?P<coeff>.+?)(?P<word>(?:\*phi\(\d+\))(?:phi\(\d+\))*)?$")
_GEN = _re.compile(r"phi\((\d+)\)")


def element_to_text(a: AlgebraElement) -> str:
    """Canonical text form: sum of coeff*phi(i1)...phi(ik) terms.

    Terms are ordered by (word length, word); the unit term is a bare
    coefficient.  Exact coefficients print as p/q+r/s*i.
    """
    if not a.terms:
        return "0"
    parts = []
    for word in sorted(a.terms, key=lambda w: (len(w), w)):
        coeff = _format_scalar(a.terms[word])
        if word:
            gens = "".join(f"phi({g})" for g in word)
            parts.append(f"{coeff}*{gens}")
        else:
            parts.append(coeff)
    return " + ".join(parts)


def _parse_scalar(text, mode):
    m = _EXACT_COEFF.match(text)
    if m:
        re_ = Fraction(int(m.group(1)), int(m.group(2)))
        im_ = Fraction(int(m.group(3)), int(m.group(4)))
        if mode == EXACT:
            return ExactComplex(re_, im_)
        return complex(float(re_), float(im_))
    if mode == EXACT:
        raise ValidationError(f"coefficient {text!r} is not in p/q+r/s*i form")
    pieces = _re.split(r"(?<![eE])\+", text)
    if len(pieces) != 2 or not pieces[1].endswith("*i"):
        raise ValidationError(f"cannot parse float coefficient {text!r}")
    return complex(float(pieces[0]), float(pieces[1][:-2]))


def element_from_text(text: str, mode=EXACT) -> AlgebraElement:
    """Inverse of element_to_text."""
    text = text.strip()
    if text == "0":
        return AlgebraElement.zero(mode)
    terms = {}
    for chunk in text.split(" + "):
        chunk = chunk.strip()
        if "*phi(" in chunk:
            coeff_text, _, word_text = chunk.partition("*phi(")
            word_text = "phi(" + word_text
            word = tuple(int(g) for g in _GEN.findall(word_text))
        else:
            coeff_text, word = chunk, ()
        coeff = _parse_scalar(coeff_text, mode)
        zero = _zero_scalar(mode)
        terms[word] = terms.get(word, zero) + coeff
    return AlgebraElement(terms, mode)
