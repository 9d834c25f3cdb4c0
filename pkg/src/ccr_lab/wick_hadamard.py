"""Normal ordering, Wick products, ordering-change maps, and the
point-split stress tensor.

An ordering kernel kappa assigns a contraction value to every ordered
generator pair.  Its antisymmetric part must equal (i/2)E for the ambient
pairing form E; under that constraint the ordered monomials
:phi(i1)...phi(in): are symmetric in their arguments, so sorted words are
canonical labels, and commutators come out the same for every admissible
kappa.

Tensor-level operations (WickTensor, DifferenceKernel, alpha_map) work over
a finite generator basis of at most 8 labels.  Exact tensors hold
ExactComplex entries in object arrays; float tensors are complex128.

The stress tensor block at the bottom uses the mostly-plus flat metric
diag(-1, 1, 1, 1), evaluates second derivatives of a smooth symmetric
two-point kernel by 4th order central differences at two step sizes, and
combines them with one Richardson pass.  The wave-operator combination
entering the trace fix is m^2 - box, the operator that annihilates plane
waves in this signature.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .ccr_core import (
    EXACT,
    FLOAT,
    AlgebraElement,
    ExactComplex,
    PairingForm,
    _coerce_scalar,
    _conj,
    _is_zero,
    _zero_scalar,
    multiply,
    normal_form,
)
from .errors import (
    DegreeGuardError,
    InternalInconsistencyError,
    InvalidDifferenceError,
    InvalidSymmetryError,
    OrderingKernelInvalidError,
    ResolutionError,
    ScalarModeMismatchError,
    ValidationError,
)
from .minkowski_kernel import (
    KernelParams,
    SeparationPoint,
    _extrapolate_to_zero,
    remainder_w,
)

__all__ = [
    "OrderingKernel",
    "NormalOrderedElement",
    "normal_order",
    "unorder",
    "wick_product",
    "WickTensor",
    "DifferenceKernel",
    "alpha_map",
    "word_tensor",
    "element_to_tensors",
    "tensors_to_element",
    "tensor_to_json",
    "tensor_from_json",
    "phi2_H_expectation",
    "TwoPointTable",
    "StressEnergyResult",
    "stress_energy",
]

KERNEL_TAGS = ("state-kernel", "hadamard")

_WICK_DEGREE_GUARD = 4
_TENSOR_DEGREE_GUARD = 6
_BASIS_GUARD = 8


def _exact_capable(v):
    return isinstance(v, (ExactComplex, Fraction, int))


def _kernel_scalar(v, mode):
    # float table entries cannot enter exact arithmetic
    if mode == EXACT and not _exact_capable(v):
        raise ScalarModeMismatchError(
            "ordering kernel has float entries; exact elements need rational ones"
        )
    return _coerce_scalar(v, mode)


class OrderingKernel:
    """Reference contraction table for normal ordering.

    ``table`` maps ordered generator pairs (i, j) to kappa(i, j); missing
    entries read as zero.  ``pairing`` is the ambient antisymmetric form E.
    The constructor enforces kappa(i, j) - kappa(j, i) = i E(i, j) on every
    pair seen in either structure, exactly for rational entries and to
    1e-12 otherwise.  ``tag`` records what the kernel is: the two-point
    table of a state, or a regularized parametrix table.
    """

    __slots__ = ("entries", "pairing", "tag")

    def __init__(self, table, pairing, tag="state-kernel"):
        if tag not in KERNEL_TAGS:
            raise ValidationError(
                f"unknown ordering-kernel tag {tag!r}; expected one of {KERNEL_TAGS}"
            )
        if not isinstance(pairing, PairingForm):
            raise ValidationError("pairing must be a PairingForm")
        entries = {}
        for (i, j), v in dict(table).items():
            key = (int(i), int(j))
            if isinstance(v, (complex, float)) and v == 0:
                continue
            if _exact_capable(v) and not v:
                continue
            entries[key] = v
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "pairing", pairing)
        object.__setattr__(self, "tag", tag)
        self._check_antisymmetric_part()

    def __setattr__(self, name, value):
        raise AttributeError("OrderingKernel is immutable")

    def _check_antisymmetric_part(self):
        seen = set()
        for (i, j) in self.entries:
            seen.add((min(i, j), max(i, j)))
        for (i, j) in self.pairing.entries:
            seen.add((i, j))
        for (i, j) in sorted(seen):
            if i == j:
                continue
            a = self.value(i, j)
            b = self.value(j, i)
            e = self.pairing.value(i, j)
            if _exact_capable(a) and _exact_capable(b) and not isinstance(e, float):
                delta = (
                    _coerce_scalar(a, EXACT)
                    - _coerce_scalar(b, EXACT)
                    - ExactComplex(0, Fraction(e))
                )
                bad = bool(delta)
            else:
                delta = complex(a) - complex(b) - 1j * float(e)
                scale = max(1.0, abs(complex(a)), abs(complex(b)), abs(float(e)))
                bad = abs(delta) > 1e-12 * scale
            if bad:
                raise OrderingKernelInvalidError(
                    f"kappa({i},{j}) - kappa({j},{i}) != i E({i},{j}); "
                    "commutators would depend on the ordering kernel"
                )

    def value(self, i, j):
        """kappa(i, j) as stored, zero when absent."""
        return self.entries.get((int(i), int(j)), 0)

    def scalar(self, i, j, mode):
        """kappa(i, j) coerced to the requested scalar mode."""
        return _kernel_scalar(self.value(i, j), mode)

    @classmethod
    def from_symmetric_part(cls, symmetric, pairing, tag="state-kernel"):
        """Build kappa = S + (i/2)E from a symmetric table S.

        S entries may be given for one orientation only; the mirror is
        filled in.  Rational S and E entries produce an exact kernel.
        """
        sym = {}
        for (i, j), v in dict(symmetric).items():
            key = (int(i), int(j))
            rkey = (key[1], key[0])
            if rkey in sym and sym[rkey] != v:
                raise ValidationError(
                    f"symmetric part disagrees with itself at {key}"
                )
            sym[key] = v
            sym[rkey] = v
        gens = sorted(
            {g for pair in sym for g in pair}
            | {g for pair in pairing.entries for g in pair}
        )
        entries = {}
        for i in gens:
            for j in gens:
                s = sym.get((i, j), 0)
                e = pairing.value(i, j)
                if _exact_capable(s) and not isinstance(e, float):
                    s = _coerce_scalar(s, EXACT)
                    val = s + ExactComplex(0, Fraction(e) / 2)
                else:
                    val = complex(s) + 0.5j * float(e)
                entries[(i, j)] = val
        return cls(entries, pairing, tag)

    @classmethod
    def from_state_kernel(cls, kernel, tag="state-kernel"):
        """Wrap a two-point table exposing generators/value/pairing_form."""
        entries = {
            (i, j): kernel.value(i, j)
            for i in kernel.generators
            for j in kernel.generators
        }
        return cls(entries, kernel.pairing_form(), tag)

    def __repr__(self):
        return f"OrderingKernel({len(self.entries)} entries, tag={self.tag!r})"


class NormalOrderedElement:
    """Finite combination of ordered monomials.

    ``terms`` maps sorted generator words to scalars; the word (i1, ..., in)
    labels :phi(i1)...phi(in): with respect to whichever kernel produced the
    expansion.  The empty word is the unit.  Scalars follow the same
    exact/float mode split as AlgebraElement.
    """

    __slots__ = ("terms", "mode")

    def __init__(self, terms, mode=EXACT):
        if mode not in (EXACT, FLOAT):
            raise ValidationError(f"unknown scalar mode {mode!r}")
        clean = {}
        for w, c in dict(terms).items():
            word = tuple(sorted(int(g) for g in w))
            c = _coerce_scalar(c, mode)
            if word in clean:
                c = clean[word] + c
            clean[word] = c
        clean = {w: c for w, c in clean.items() if not _is_zero(c)}
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "mode", mode)

    def __setattr__(self, name, value):
        raise AttributeError("NormalOrderedElement is immutable")

    @classmethod
    def zero(cls, mode=EXACT):
        return cls({}, mode)

    @classmethod
    def unit(cls, mode=EXACT):
        return cls({(): 1}, mode)

    @classmethod
    def monomial(cls, word, mode=EXACT, coefficient=1):
        return cls({tuple(word): coefficient}, mode)

    @property
    def degree(self):
        return max((len(w) for w in self.terms), default=0)

    def coefficient(self, word):
        key = tuple(sorted(int(g) for g in word))
        return self.terms.get(key, _zero_scalar(self.mode))

    def unit_coefficient(self):
        return self.terms.get((), _zero_scalar(self.mode))

    def _check_mode(self, other):
        if self.mode != other.mode:
            raise ScalarModeMismatchError(
                f"cannot combine {self.mode} and {other.mode} elements"
            )

    def __add__(self, other):
        if not isinstance(other, NormalOrderedElement):
            return NotImplemented
        self._check_mode(other)
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, _zero_scalar(self.mode)) + c
        return NormalOrderedElement(out, self.mode)

    def __sub__(self, other):
        if not isinstance(other, NormalOrderedElement):
            return NotImplemented
        return self + other.scale(-1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, c):
        c = _coerce_scalar(c, self.mode)
        return NormalOrderedElement(
            {w: coeff * c for w, coeff in self.terms.items()}, self.mode
        )

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, NormalOrderedElement):
            return NotImplemented
        return self.mode == other.mode and self.terms == other.terms

    def __hash__(self):
        return hash((self.mode, frozenset(self.terms.items())))

    def __repr__(self):
        body = ", ".join(f"{w}: {c!r}" for w, c in sorted(self.terms.items()))
        return f"NormalOrderedElement({{{body}}}, mode={self.mode!r})"


def _accumulate(table, word, value):
    if word in table:
        value = table[word] + value
    if _is_zero(value):
        table.pop(word, None)
    else:
        table[word] = value


def _push_generator(table, g, kernel, mode):
    # :w: phi(g) = :w g: + sum over positions l of kappa(w_l, g) :w minus l:
    out = {}
    for w, c in table.items():
        grown = tuple(sorted(w + (g,)))
        _accumulate(out, grown, c)
        for l in range(len(w)):
            k = kernel.scalar(w[l], g, mode)
            if _is_zero(k):
                continue
            _accumulate(out, w[:l] + w[l + 1 :], c * k)
    return out


def normal_order(a: AlgebraElement, kernel: OrderingKernel) -> NormalOrderedElement:
    """Expand an algebra element in the ordered-monomial basis of ``kernel``.

    Works one generator at a time with the right-multiplication rule quoted
    above _push_generator; exact input stays exact.
    """
    if not isinstance(a, AlgebraElement):
        raise ValidationError("normal_order expects an AlgebraElement")
    out = {}
    for word, coeff in a.terms.items():
        table = {(): coeff}
        for g in word:
            table = _push_generator(table, g, kernel, a.mode)
        for w, c in table.items():
            _accumulate(out, w, c)
    return NormalOrderedElement(out, a.mode)


def unorder(a: NormalOrderedElement, kernel: OrderingKernel) -> AlgebraElement:
    """Inverse of normal_order: rewrite ordered monomials as plain products.

    Uses :W phi(g): = :W: phi(g) - sum_l kappa(w_l, g) :W minus l: read
    right to left, with memoization over sorted subwords, then puts the
    result in normal form against the kernel's pairing.
    """
    if not isinstance(a, NormalOrderedElement):
        raise ValidationError("unorder expects a NormalOrderedElement")
    mode = a.mode
    memo = {}

    def plain(word):
        if word in memo:
            return memo[word]
        if not word:
            res = AlgebraElement.unit(mode)
        else:
            head, g = word[:-1], word[-1]
            res = multiply(plain(head), AlgebraElement.generator(g, mode))
            for l in range(len(head)):
                k = kernel.scalar(head[l], g, mode)
                if not _is_zero(k):
                    res = res - plain(head[:l] + head[l + 1 :]).scale(k)
        res = normal_form(res, kernel.pairing)
        memo[word] = res
        return res

    total = AlgebraElement.zero(mode)
    for w, c in a.terms.items():
        total = total + plain(w).scale(c)
    return normal_form(total, kernel.pairing)


def wick_product(
    a: NormalOrderedElement, b: NormalOrderedElement, kernel: OrderingKernel
) -> NormalOrderedElement:
    """Product of two ordered elements, re-expanded in the ordered basis.

    Routes through the plain algebra (unorder, multiply, reorder), which is
    exact in rational mode.  Inputs above degree 4 are rejected.
    """
    if a.degree > _WICK_DEGREE_GUARD or b.degree > _WICK_DEGREE_GUARD:
        raise DegreeGuardError(
            f"wick_product degree guard is {_WICK_DEGREE_GUARD}; "
            f"got {a.degree} and {b.degree}"
        )
    a._check_mode(b)
    prod = multiply(unorder(a, kernel), unorder(b, kernel))
    return normal_order(prod, kernel)


# tensors over a finite basis


def _is_object_exact(arr):
    return arr.dtype == object


def _coerce_tensor(array, mode):
    arr = np.asarray(array)
    if mode is None:
        mode = EXACT if arr.dtype == object else FLOAT
    if mode == EXACT:
        flat = np.empty(arr.size, dtype=object)
        src = arr.reshape(-1)
        for p in range(arr.size):
            flat[p] = _coerce_scalar(src[p], EXACT)
        return flat.reshape(arr.shape), EXACT
    return arr.astype(complex), FLOAT


def _tensor_scale(arr, mode):
    if mode == FLOAT:
        return float(np.abs(arr).max()) if arr.size else 0.0
    return max((abs(complex(v)) for v in arr.reshape(-1)), default=0.0)


def _check_symmetry(arr, mode, what):
    # adjacent transpositions generate the full symmetric group
    n = arr.ndim
    for axis in range(n - 1):
        perm = list(range(n))
        perm[axis], perm[axis + 1] = perm[axis + 1], perm[axis]
        swapped = arr.transpose(perm)
        if mode == EXACT:
            if not (arr == swapped).all():
                raise InvalidSymmetryError(
                    f"{what} is not symmetric under slot exchange"
                )
        else:
            scale = max(1.0, _tensor_scale(arr, mode))
            if arr.size and np.abs(arr - swapped).max() > 1e-12 * scale:
                raise InvalidSymmetryError(
                    f"{what} is not symmetric under slot exchange to 1e-12"
                )


class WickTensor:
    """Symmetric coefficient tensor of a smeared ordered monomial.

    The rank-n array over ``basis`` holds the coefficient of
    :phi(b_{i1})...phi(b_{in}): at index (i1, ..., in).  Degree 0 is a 0-d
    array holding a multiple of the unit.
    """

    __slots__ = ("basis", "array", "mode")

    def __init__(self, basis, array, mode=None):
        basis = tuple(int(b) for b in basis)
        if not 0 < len(basis) <= _BASIS_GUARD:
            raise ValidationError(
                f"basis size must be between 1 and {_BASIS_GUARD}"
            )
        if len(set(basis)) != len(basis):
            raise ValidationError("basis labels must be distinct")
        arr, mode = _coerce_tensor(array, mode)
        if arr.ndim > _TENSOR_DEGREE_GUARD:
            raise ValidationError(
                f"tensor degree {arr.ndim} exceeds guard {_TENSOR_DEGREE_GUARD}"
            )
        if any(d != len(basis) for d in arr.shape):
            raise ValidationError(
                f"tensor shape {arr.shape} does not match basis size {len(basis)}"
            )
        _check_symmetry(arr, mode, "coefficient tensor")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "array", arr)
        object.__setattr__(self, "mode", mode)

    def __setattr__(self, name, value):
        raise AttributeError("WickTensor is immutable")

    @property
    def degree(self):
        return self.array.ndim

    def star(self):
        """Entrywise conjugate, the coefficient tensor of the adjoint."""
        if self.mode == EXACT:
            flat = np.empty(self.array.size, dtype=object)
            src = self.array.reshape(-1)
            for p in range(self.array.size):
                flat[p] = _conj(src[p])
            return WickTensor(self.basis, flat.reshape(self.array.shape), EXACT)
        return WickTensor(self.basis, np.conj(self.array), FLOAT)

    def _check_compatible(self, other):
        if self.basis != other.basis:
            raise ValidationError("tensors live over different bases")
        if self.mode != other.mode:
            raise ScalarModeMismatchError(
                f"cannot combine {self.mode} and {other.mode} tensors"
            )
        if self.degree != other.degree:
            raise ValidationError("cannot add tensors of different degree")

    def __add__(self, other):
        if not isinstance(other, WickTensor):
            return NotImplemented
        self._check_compatible(other)
        return WickTensor(self.basis, self.array + other.array, self.mode)

    def __sub__(self, other):
        if not isinstance(other, WickTensor):
            return NotImplemented
        self._check_compatible(other)
        return WickTensor(self.basis, self.array - other.array, self.mode)

    def scale(self, c):
        if self.mode == EXACT:
            c = _coerce_scalar(c, EXACT)
        else:
            c = complex(c)
        return WickTensor(self.basis, self.array * c, self.mode)

    def is_zero(self):
        if self.mode == EXACT:
            return not any(bool(v) for v in self.array.reshape(-1))
        return bool(self.array.size == 0 or np.abs(self.array).max() == 0.0)

    def __eq__(self, other):
        if not isinstance(other, WickTensor):
            return NotImplemented
        return (
            self.basis == other.basis
            and self.mode == other.mode
            and self.degree == other.degree
            and bool((self.array == other.array).all())
        )

    def __repr__(self):
        return (
            f"WickTensor(degree={self.degree}, basis={self.basis}, "
            f"mode={self.mode!r})"
        )


class DifferenceKernel:
    """Symmetric difference table between two ordering kernels.

    Only the symmetric part of a kernel difference acts on ordered
    monomials (the antisymmetric parts agree by the E constraint and
    cancel), so symmetry is enforced here rather than assumed downstream.
    Float entries must be finite.
    """

    __slots__ = ("basis", "matrix", "mode")

    def __init__(self, basis, matrix, mode=None):
        basis = tuple(int(b) for b in basis)
        if not 0 < len(basis) <= _BASIS_GUARD:
            raise ValidationError(
                f"basis size must be between 1 and {_BASIS_GUARD}"
            )
        if len(set(basis)) != len(basis):
            raise ValidationError("basis labels must be distinct")
        arr, mode = _coerce_tensor(matrix, mode)
        if arr.shape != (len(basis), len(basis)):
            raise ValidationError(
                f"difference table shape {arr.shape} does not match basis"
            )
        try:
            _check_symmetry(arr, mode, "difference table")
        except InvalidSymmetryError as exc:
            raise InvalidDifferenceError(str(exc)) from None
        if mode == FLOAT and not np.isfinite(arr.view(float)).all():
            raise InvalidDifferenceError("difference table has non-finite entries")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "matrix", arr)
        object.__setattr__(self, "mode", mode)

    def __setattr__(self, name, value):
        raise AttributeError("DifferenceKernel is immutable")

    @classmethod
    def from_orderings(cls, kernel_new, kernel_old, basis):
        """Symmetric part of kappa_new - kappa_old over ``basis``.

        This is the difference that alpha_map needs to re-expand
        kernel_old-ordered monomials in the kernel_new basis.
        """
        basis = tuple(int(b) for b in basis)
        size = len(basis)
        exact = all(
            _exact_capable(kernel_new.value(i, j)) and _exact_capable(kernel_old.value(i, j))
            for i in basis
            for j in basis
        )
        arr = np.empty((size, size), dtype=object if exact else complex)
        for p, i in enumerate(basis):
            for q, j in enumerate(basis):
                if exact:
                    dij = _coerce_scalar(kernel_new.value(i, j), EXACT) - _coerce_scalar(
                        kernel_old.value(i, j), EXACT
                    )
                    dji = _coerce_scalar(kernel_new.value(j, i), EXACT) - _coerce_scalar(
                        kernel_old.value(j, i), EXACT
                    )
                    arr[p, q] = (dij + dji) * Fraction(1, 2)
                else:
                    dij = complex(kernel_new.value(i, j)) - complex(kernel_old.value(i, j))
                    dji = complex(kernel_new.value(j, i)) - complex(kernel_old.value(j, i))
                    arr[p, q] = 0.5 * (dij + dji)
        return cls(basis, arr)

    def __add__(self, other):
        if not isinstance(other, DifferenceKernel):
            return NotImplemented
        if self.basis != other.basis:
            raise ValidationError("difference tables live over different bases")
        if self.mode != other.mode:
            raise ScalarModeMismatchError(
                f"cannot combine {self.mode} and {other.mode} tables"
            )
        return DifferenceKernel(self.basis, self.matrix + other.matrix, self.mode)

    def scale(self, c):
        if self.mode == EXACT:
            c = _coerce_scalar(c, EXACT)
        else:
            c = complex(c)
        return DifferenceKernel(self.basis, self.matrix * c, self.mode)

    def __repr__(self):
        return f"DifferenceKernel(basis={self.basis}, mode={self.mode!r})"


def _hermite_coefficient(n, k):
    # number of ways to mark k disjoint pairs in n slots
    return Fraction(
        math.factorial(n),
        math.factorial(k) * math.factorial(n - 2 * k) * 2**k,
    )


def alpha_map(d: DifferenceKernel, w: WickTensor) -> dict:
    """Change-of-ordering image of one tensor monomial.

    Returns a dict mapping degree n - 2k to the tensor obtained by
    contracting k copies of d into w's slots, weighted by the pair-marking
    count n!/(k! (n-2k)! 2^k).  With d = 0 this is the identity
    {n: w}.  Exact input with an exact difference stays exact, which is
    what makes the composition law and the normal_order cross-check exact
    statements rather than tolerances.
    """
    if not isinstance(d, DifferenceKernel) or not isinstance(w, WickTensor):
        raise ValidationError("alpha_map expects (DifferenceKernel, WickTensor)")
    if d.basis != w.basis:
        raise ValidationError("difference table and tensor bases differ")
    if d.mode != w.mode:
        raise ScalarModeMismatchError(
            f"cannot mix {d.mode} difference with {w.mode} tensor"
        )
    n = w.degree
    out = {}
    contracted = w.array
    for k in range(n // 2 + 1):
        coeff = _hermite_coefficient(n, k)
        if w.mode == EXACT:
            scaled = contracted * _coerce_scalar(coeff, EXACT)
        else:
            scaled = contracted * float(coeff)
        piece = WickTensor(w.basis, scaled, w.mode)
        if k == 0 or not piece.is_zero():
            out[n - 2 * k] = piece
        if 2 * (k + 1) <= n:
            contracted = np.asarray(
                np.tensordot(d.matrix, contracted, axes=([0, 1], [0, 1]))
            )
    return out


def word_tensor(word, basis, mode=EXACT):
    """Symmetric tensor t with W(t) equal to the single ordered monomial.

    Every distinct permutation of the word's index tuple carries the weight
    prod(mult!) / n!, so summing over all index tuples reproduces the
    monomial with coefficient one.
    """
    basis = tuple(int(b) for b in basis)
    word = tuple(int(g) for g in word)
    index_of = {b: p for p, b in enumerate(basis)}
    try:
        positions = tuple(index_of[g] for g in word)
    except KeyError as exc:
        raise ValidationError(f"word uses generator {exc.args[0]} outside the basis")
    n = len(word)
    if n > _TENSOR_DEGREE_GUARD:
        raise ValidationError(
            f"word length {n} exceeds tensor degree guard {_TENSOR_DEGREE_GUARD}"
        )
    counts = Counter(word)
    weight = Fraction(
        math.prod(math.factorial(c) for c in counts.values()), math.factorial(n)
    )
    size = len(basis)
    if mode == EXACT:
        arr = np.empty((size,) * n, dtype=object)
        arr.fill(ExactComplex())
        val = _coerce_scalar(weight, EXACT)
    else:
        arr = np.zeros((size,) * n, dtype=complex)
        val = complex(weight)
    for perm in set(itertools.permutations(positions)):
        arr[perm] = val
    return WickTensor(basis, arr, mode)


def element_to_tensors(a: NormalOrderedElement, basis) -> dict:
    """Split an ordered element into homogeneous coefficient tensors."""
    basis = tuple(int(b) for b in basis)
    out = {}
    for w, c in a.terms.items():
        piece = word_tensor(w, basis, a.mode).scale(c)
        n = len(w)
        out[n] = out[n] + piece if n in out else piece
    return out


def tensors_to_element(parts, mode=None) -> NormalOrderedElement:
    """Resum homogeneous coefficient tensors into an ordered element.

    ``parts`` is any iterable of WickTensors (a dict from alpha_map works:
    its values are used).  The inverse weight n!/prod(mult!) undoes
    word_tensor's normalization.
    """
    if isinstance(parts, dict):
        parts = list(parts.values())
    else:
        parts = list(parts)
    if not parts:
        return NormalOrderedElement.zero(mode or EXACT)
    if mode is None:
        mode = parts[0].mode
    terms = {}
    for w in parts:
        if w.mode != mode:
            raise ScalarModeMismatchError("mixed scalar modes in tensor list")
        n = w.degree
        size = len(w.basis)
        for combo in itertools.combinations_with_replacement(range(size), n):
            entry = w.array[combo] if n else w.array[()]
            if _is_zero(entry):
                continue
            counts = Counter(combo)
            mult = Fraction(
                math.factorial(n),
                math.prod(math.factorial(c) for c in counts.values()),
            )
            word = tuple(w.basis[p] for p in combo)
            coeff = entry * (_coerce_scalar(mult, EXACT) if mode == EXACT else float(mult))
            if word in terms:
                coeff = terms[word] + coeff
            terms[word] = coeff
    return NormalOrderedElement(terms, mode)


def tensor_to_json(w: WickTensor) -> str:
    """JSON form of a tensor: nonzero entries only, rationals as strings."""
    rows = []
    it = np.ndindex(*w.array.shape) if w.degree else [()]
    for idx in it:
        v = w.array[idx]
        if _is_zero(_coerce_scalar(v, w.mode) if w.mode == EXACT else complex(v)):
            continue
        if w.mode == EXACT:
            v = _coerce_scalar(v, EXACT)
            rows.append([list(idx), str(v.re), str(v.im)])
        else:
            v = complex(v)
            rows.append([list(idx), float(v.real), float(v.imag)])
    return json.dumps(
        {
            "schema": "ccr-lab/1",
            "kind": "wick-tensor",
            "degree": w.degree,
            "basis": list(w.basis),
            "mode": w.mode,
            "entries": rows,
        },
        sort_keys=True,
    )


def tensor_from_json(text: str) -> WickTensor:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"tensor json does not parse: {exc}") from None
    for key in ("kind", "degree", "basis", "mode", "entries"):
        if key not in data:
            raise ValidationError(f"tensor json is missing key {key!r}")
    if data["kind"] != "wick-tensor":
        raise ValidationError(f"unexpected kind {data['kind']!r}")
    basis = tuple(int(b) for b in data["basis"])
    n = int(data["degree"])
    mode = data["mode"]
    if mode not in (EXACT, FLOAT):
        raise ValidationError(f"unknown scalar mode {mode!r}")
    size = len(basis)
    if mode == EXACT:
        arr = np.empty((size,) * n, dtype=object)
        arr.fill(ExactComplex())
    else:
        arr = np.zeros((size,) * n, dtype=complex)
    for idx, re, im in data["entries"]:
        idx = tuple(int(i) for i in idx)
        if len(idx) != n or any(not 0 <= i < size for i in idx):
            raise ValidationError(f"entry index {idx} is out of range")
        if mode == EXACT:
            arr[idx] = ExactComplex(Fraction(re), Fraction(im))
        else:
            arr[idx] = complex(float(re), float(im))
    return WickTensor(basis, arr, mode)


# coincidence limits


def phi2_H_expectation(params: KernelParams, x=None, perturbation=None) -> float:
    """Expectation of the ordered square against the parametrix subtraction.

    The value is the coincidence limit of the two-point remainder along an
    equal-time ladder r = 2^-j / m, Richardson-extrapolated in r^2.  It does
    not depend on the spacetime point x for the translation-invariant
    vacuum; a smooth symmetric perturbation kernel (a callable s(x, y))
    shifts the value by its own diagonal s(x, x).
    """
    if not isinstance(params, KernelParams):
        raise ValidationError("phi2_H_expectation expects KernelParams")
    if params.m <= 0:
        raise ValidationError("the coincidence remainder needs m > 0")
    if params.eps != 0:
        raise ValidationError("state values require eps = 0, not a regulator")
    radii = [2.0**-j / params.m for j in range(4, 12)]
    sigmas, values = [], []
    for r in radii:
        v = remainder_w(SeparationPoint(0.0, r), params)
        if abs(v.imag) > 1e-8 * (1.0 + abs(v.real)):
            raise InternalInconsistencyError(
                f"equal-time remainder has imaginary part {v.imag:.3e}"
            )
        sigmas.append(r * r)
        values.append(v.real)
    base = float(_extrapolate_to_zero(sigmas, values))
    if x is None:
        x = (0.0, 0.0, 0.0, 0.0)
    x = tuple(float(c) for c in x)
    if len(x) != 4:
        raise ValidationError("x must have 4 components")
    if perturbation is not None:
        base += float(np.real(perturbation(x, x)))
    return base


# point-split stress tensor, flat metric diag(-1, 1, 1, 1)

_ETA = np.diag([-1.0, 1.0, 1.0, 1.0])


class TwoPointTable:
    """Translation-invariant two-point kernel sampled on a uniform 4-d grid.

    Stores samples of W(x - y) on the product of four uniform, strictly
    increasing axes, each symmetric about zero; W must be even under
    negation of the separation (that is the kernel symmetry w(x, y) =
    w(y, x)).  Evaluation interpolates with separable cubic Lagrange
    polynomials.  ``grid_spacing`` is what stress_energy checks its
    difference step against.
    """

    def __init__(self, axes, values):
        axes = tuple(np.asarray(a, dtype=float) for a in axes)
        if len(axes) != 4:
            raise ValidationError("need exactly 4 separation axes")
        spacings = []
        for a in axes:
            if a.ndim != 1 or a.size < 4:
                raise ValidationError("each axis needs at least 4 samples")
            steps = np.diff(a)
            if steps.min() <= 0:
                raise ValidationError("axes must be strictly increasing")
            if steps.max() - steps.min() > 1e-9 * steps.max():
                raise ValidationError("axes must be uniform")
            if np.abs(a + a[::-1]).max() > 1e-9 * max(1.0, np.abs(a).max()):
                raise ValidationError("axes must be symmetric about zero")
            spacings.append(float(steps.mean()))
        values = np.asarray(values, dtype=float)
        if values.shape != tuple(a.size for a in axes):
            raise ValidationError(
                f"value array shape {values.shape} does not match the axes"
            )
        if not np.isfinite(values).all():
            raise ValidationError("table values must be finite")
        flipped = values[::-1, ::-1, ::-1, ::-1]
        scale = max(1.0, float(np.abs(values).max()))
        if np.abs(values - flipped).max() > 1e-10 * scale:
            raise ValidationError(
                "table is not even in the separation; the kernel would not be symmetric"
            )
        self.axes = axes
        self.values = values
        self.spacings = tuple(spacings)
        self.grid_spacing = max(spacings)

    def _axis_weights(self, axis_index, t):
        a = self.axes[axis_index]
        s = self.spacings[axis_index]
        u = (t - a[0]) / s
        if u < -1e-9 or u > a.size - 1 + 1e-9:
            raise ValidationError(
                f"separation component {t} is outside the table range"
            )
        i0 = int(np.floor(u)) - 1
        i0 = min(max(i0, 0), a.size - 4)
        v = u - i0
        w = np.empty(4)
        for mnode in range(4):
            prod = 1.0
            for p in range(4):
                if p != mnode:
                    prod *= (v - p) / (mnode - p)
            w[mnode] = prod
        return i0, w

    def __call__(self, xp, yp):
        delta = np.asarray(xp, dtype=float) - np.asarray(yp, dtype=float)
        if delta.shape != (4,):
            raise ValidationError("points must have 4 components")
        starts, weights = [], []
        for d in range(4):
            i0, w = self._axis_weights(d, delta[d])
            starts.append(i0)
            weights.append(w)
        block = self.values[
            starts[0] : starts[0] + 4,
            starts[1] : starts[1] + 4,
            starts[2] : starts[2] + 4,
            starts[3] : starts[3] + 4,
        ]
        return float(
            np.einsum(
                "a,b,c,d,abcd->",
                weights[0],
                weights[1],
                weights[2],
                weights[3],
                block,
            )
        )


@dataclass(frozen=True)
class StressEnergyResult:
    """Point-split stress tensor and the pieces acceptance checks need.

    tensor: the symmetric 4x4 component array T_ab.
    trace: eta^{ab} T_ab.
    kg_diagonal: (m^2 - box_x) w at coincidence, the scalar whose -1/3
        g_ab multiple is the conservation fix.
    step: the coarse difference step actually used.
    """

    tensor: np.ndarray
    trace: float
    kg_diagonal: float
    step: float


def _second_blocks(w, x, h):
    # value, both-x second derivatives, mixed x/y second derivatives
    def f(dx, dy):
        return float(w(x + dx, x + dy))

    zero = np.zeros(4)
    f0 = f(zero, zero)

    def dir2(ex, ey):
        # 4th order second derivative along the (ex, ey) displacement
        return (
            -f(-2 * h * ex, -2 * h * ey)
            + 16.0 * f(-h * ex, -h * ey)
            - 30.0 * f0
            + 16.0 * f(h * ex, h * ey)
            - f(2 * h * ex, 2 * h * ey)
        ) / (12.0 * h * h)

    eye = np.eye(4)
    xdiag = np.array([dir2(eye[a], zero) for a in range(4)])
    ydiag = np.array([dir2(zero, eye[a]) for a in range(4)])
    xx = np.zeros((4, 4))
    xy = np.zeros((4, 4))
    for a in range(4):
        xx[a, a] = xdiag[a]
        for b in range(a + 1, 4):
            both = dir2(eye[a] + eye[b], zero)
            xx[a, b] = xx[b, a] = 0.5 * (both - xdiag[a] - xdiag[b])
    for a in range(4):
        for b in range(4):
            both = dir2(eye[a], eye[b])
            xy[a, b] = 0.5 * (both - xdiag[a] - ydiag[b])
    return f0, xx, xy


def stress_energy(
    w, x, mass, xi=0.0, step=0.05, kg_term=True
) -> StressEnergyResult:
    """Stress tensor of a smooth symmetric two-point kernel at a point.

    ``w`` is a callable w(x4, y4) -> real, or a TwoPointTable.  The operator
    applied before the coincidence limit is, with g = diag(-1,1,1,1) and
    unprimed/primed derivatives acting on the first/second slot,

        (1 - 2 xi) d_a d'_b  -  2 xi d_a d_b
        + g_ab (2 xi box_x + (2 xi - 1/2) g^{cd} d_c d'_d + m^2 / 2)
        - (1/3) g_ab (m^2 - box_x)        [dropped when kg_term is false]

    The Einstein-tensor term of the curved-space operator vanishes here.
    Derivatives use 4th order central stencils at ``step`` and half of it,
    Richardson-combined; a gridded kernel must resolve the finer stencil,
    else the resolution guard fires.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (4,):
        raise ValidationError("x must have 4 components")
    mass = float(mass)
    if mass < 0:
        raise ValidationError("mass must be >= 0")
    xi = float(xi)
    step = float(step)
    if step <= 0:
        raise ValidationError("difference step must be positive")
    spacing = getattr(w, "grid_spacing", None)
    if spacing is not None and step < 2.0 * float(spacing):
        raise ResolutionError(
            f"difference step {step} needs at least two grid spacings "
            f"(grid has {spacing})"
        )
    if not callable(w):
        raise ValidationError("w must be callable or a TwoPointTable")

    v_c, xx_c, xy_c = _second_blocks(w, x, step)
    v_f, xx_f, xy_f = _second_blocks(w, x, step / 2.0)
    # one Richardson pass on the 4th order stencils
    value = v_f
    xx = (16.0 * xx_f - xx_c) / 15.0
    xy = (16.0 * xy_f - xy_c) / 15.0
    xy = 0.5 * (xy + xy.T)

    box_x = -xx[0, 0] + xx[1, 1] + xx[2, 2] + xx[3, 3]
    cross = -xy[0, 0] + xy[1, 1] + xy[2, 2] + xy[3, 3]
    kg_diag = mass * mass * value - box_x

    tensor = (
        (1.0 - 2.0 * xi) * xy
        - 2.0 * xi * xx
        + _ETA * (2.0 * xi * box_x + (2.0 * xi - 0.5) * cross + 0.5 * mass * mass * value)
    )
    if kg_term:
        tensor = tensor - (_ETA / 3.0) * kg_diag
    tensor = 0.5 * (tensor + tensor.T)
    trace = float(-tensor[0, 0] + tensor[1, 1] + tensor[2, 2] + tensor[3, 3])
    return StressEnergyResult(
        tensor=tensor, trace=trace, kg_diagonal=float(kg_diag), step=step
    )
