"""Gaussian (quasifree) states over the commutation-relation algebra.

A state here is determined by its two-point kernel; higher moments come from
the pairing expansion, odd moments vanish.  Evaluation works on elements in
any word order because the kernel's antisymmetric part carries the
commutator, so no normal-forming is required first.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .ccr_core import FLOAT, AlgebraElement, PairingForm, normal_form, star
from .errors import (
    DegreeGuardError,
    IncompleteKernelError,
    KernelInconsistencyError,
    ParityError,
    ValidationError,
)

__all__ = [
    "TwoPointKernel",
    "QuasifreeState",
    "GramReport",
    "enumerate_pairings",
    "npoint",
    "evaluate",
    "gram_positivity",
    "npoint_csv",
]

PAIRING_GUARD = 16


def enumerate_pairings(n, max_n=PAIRING_GUARD):
    """All perfect matchings of {1, ..., n} as tuples of ascending pairs.

    The order is deterministic: the smallest unmatched label is paired with
    each larger one in turn, recursively.  Count is (n-1)!!.

    Parameters
    ----------
    n : even int
    max_n : guard against double-factorial blowup; raise to override.

    Returns
    -------
    list of pairings; each pairing is a tuple of (a, b) pairs with a < b.
    """
    n = int(n)
    if n < 0:
        raise ValidationError("pairing size must be non-negative")
    if n % 2:
        raise ParityError(f"no perfect matchings of an odd set (n={n})")
    if n > max_n:
        raise ValidationError(
            f"n={n} exceeds the pairing guard {max_n}; pass max_n to override"
        )
    return _pairings(tuple(range(1, n + 1)))


def _pairings(labels):
    if not labels:
        return [()]
    first = labels[0]
    out = []
    for k in range(1, len(labels)):
        rest = labels[1:k] + labels[k + 1 :]
        pair = (first, labels[k])
        for tail in _pairings(rest):
            out.append((pair,) + tail)
    return out


class TwoPointKernel:
    """Complex two-point table over a finite generator set.

    Accepts either a dict over ordered index pairs or a callable plus a
    generator list; the callable is tabulated once at construction.  The
    construction checks, with tolerance `tol` relative to the largest entry:

    * the real part is symmetric and the imaginary part antisymmetric
      (equivalently, the kernel differs from its transpose by i times a real
      antisymmetric form);
    * the diagonal is real and non-negative;
    * if an expected pairing form is supplied, twice the imaginary part
      reproduces it entry for entry.
    """

    def __init__(self, table, generators=None, pairing=None, tol=1e-10):
        if callable(table):
            if generators is None:
                raise ValidationError("a kernel callback needs a generator list")
            gens = tuple(int(g) for g in generators)
            entries = {
                (i, j): complex(table(i, j)) for i in gens for j in gens
            }
        else:
            entries = {
                (int(i), int(j)): complex(v) for (i, j), v in dict(table).items()
            }
            gens = tuple(sorted({i for pair in entries for i in pair}))
            if generators is not None:
                gens = tuple(int(g) for g in generators)
        self.generators = gens
        self.entries = entries
        self.tol = float(tol)
        self._verify(pairing)

    def _verify(self, pairing):
        scale = max([abs(v) for v in self.entries.values()], default=0.0)
        scale = max(scale, 1.0)
        for i in self.generators:
            for j in self.generators:
                a = self._get(i, j)
                b = self._get(j, i)
                if abs(a.real - b.real) > self.tol * scale:
                    raise KernelInconsistencyError(
                        f"real part not symmetric at ({i},{j}): "
                        f"{a.real!r} vs {b.real!r}"
                    )
                if abs(a.imag + b.imag) > self.tol * scale:
                    raise KernelInconsistencyError(
                        f"imaginary part not antisymmetric at ({i},{j})"
                    )
                if pairing is not None:
                    e = float(pairing.value(i, j))
                    if abs(2.0 * a.imag - e) > self.tol * max(scale, abs(e)):
                        raise KernelInconsistencyError(
                            f"2 Im omega2({i},{j}) = {2 * a.imag!r} does not "
                            f"match the declared pairing {e!r}"
                        )
            d = self._get(i, i)
            if abs(d.imag) > self.tol * scale or d.real < -self.tol * scale:
                raise KernelInconsistencyError(
                    f"diagonal entry ({i},{i}) = {d!r} must be real and >= 0"
                )

    def _get(self, i, j):
        try:
            return self.entries[(i, j)]
        except KeyError:
            raise IncompleteKernelError(
                f"two-point kernel has no entry for ({i}, {j})"
            ) from None

    def value(self, i, j):
        """omega_2(i, j)."""
        return self._get(int(i), int(j))

    def pairing_value(self, i, j):
        """The antisymmetric form recovered as twice the imaginary part."""
        return 2.0 * self.value(i, j).imag

    def pairing_form(self):
        entries = {}
        for a, i in enumerate(self.generators):
            for j in self.generators[a + 1 :]:
                v = self.pairing_value(i, j)
                if v:
                    entries[(i, j)] = v
        return PairingForm(entries)


class QuasifreeState:
    """Quasifree state for a two-point kernel.

    check=True additionally enforces the pair bound
    |E(f,g)|^2 / 4 <= omega2(f,f) omega2(g,g) on every stored pair, a
    necessary condition for positivity.  Positivity itself is only ever
    certified on explicit finite families via gram_positivity.
    """

    def __init__(self, kernel: TwoPointKernel, check=True, tol=1e-10):
        self.kernel = kernel
        self.tol = float(tol)
        if check:
            bad = self.cauchy_schwarz_violations()
            if bad:
                i, j, lhs, rhs = bad[0]
                raise KernelInconsistencyError(
                    f"pair bound fails at ({i},{j}): |E|^2/4 = {lhs:.6g} "
                    f"> {rhs:.6g} = omega2(f,f) omega2(g,g)"
                )

    def cauchy_schwarz_violations(self):
        """Pairs violating |E(f,g)|^2/4 <= omega2(f,f) omega2(g,g)."""
        out = []
        gens = self.kernel.generators
        scale = max(
            [abs(v) for v in self.kernel.entries.values()], default=0.0
        )
        slack = self.tol * max(scale, 1.0) ** 2
        for a, i in enumerate(gens):
            for j in gens[a + 1 :]:
                lhs = abs(self.kernel.pairing_value(i, j)) ** 2 / 4.0
                rhs = self.kernel.value(i, i).real * self.kernel.value(j, j).real
                if lhs > rhs + slack:
                    out.append((i, j, lhs, rhs))
        return out

    def npoint(self, indices, max_n=PAIRING_GUARD):
        return npoint(self, indices, max_n=max_n)

    def evaluate(self, element, max_n=PAIRING_GUARD):
        return evaluate(self, element, max_n=max_n)


def npoint(state, indices, max_n=PAIRING_GUARD):
    """Moment of the state on an ordered index list.

    Zero for odd length, one for the empty list, otherwise the sum over
    perfect matchings of products of two-point values taken in slot order.
    """
    idx = [int(i) for i in indices]
    n = len(idx)
    if n == 0:
        return 1.0 + 0.0j
    if n % 2:
        return 0.0 + 0.0j
    kernel = state.kernel
    total = 0.0 + 0.0j
    for pairing in enumerate_pairings(n, max_n=max_n):
        term = 1.0 + 0.0j
        for a, b in pairing:
            term *= kernel.value(idx[a - 1], idx[b - 1])
        total += term
    return total


def evaluate(state, element: AlgebraElement, max_n=PAIRING_GUARD):
    """Linear extension of the moments to a full algebra element."""
    total = 0.0 + 0.0j
    for word, coeff in element.terms.items():
        total += complex(coeff) * npoint(state, word, max_n=max_n)
    return total


@dataclass(frozen=True)
class GramReport:
    min_eigenvalue: float
    threshold: float
    psd: bool
    gram: object
    hermiticity_residual: float

    def to_json(self):
        return json.dumps(
            {
                "verdict": "psd" if self.psd else "not-psd",
                "min_eigenvalue": self.min_eigenvalue,
                "threshold": self.threshold,
                "hermiticity_residual": self.hermiticity_residual,
            },
            sort_keys=True,
        )


def gram_positivity(state, elements, tol=1e-10, max_degree=4):
    """Gram-matrix positivity certificate on a finite element family.

    G_ij is the state value of star(a_i) a_j after normal-forming against the
    kernel's own antisymmetric form.  The matrix must be hermitian within a
    relative 1e-8; its minimal eigenvalue is compared against -tol times the
    trace.
    """
    elems = [_as_float_element(a) for a in elements]
    for a in elems:
        if a.degree > max_degree:
            raise DegreeGuardError(
                f"family contains degree {a.degree} > guard {max_degree}"
            )
    E = state.kernel.pairing_form()
    n = len(elems)
    G = np.zeros((n, n), dtype=complex)
    for r in range(n):
        for c in range(n):
            prod = normal_form(star(elems[r]) * elems[c], E)
            G[r, c] = evaluate(state, prod)
    scale = max(1.0, np.abs(G).max()) if G.size else 1.0
    herm = np.abs(G - G.conj().T).max() if G.size else 0.0
    if herm > 1e-8 * scale:
        raise KernelInconsistencyError(
            f"Gram matrix is not hermitian (residual {herm:.3e}); "
            "the two-point kernel violates its exchange relation"
        )
    if n == 0:
        return GramReport(0.0, 0.0, True, G, float(herm))
    sym = (G + G.conj().T) / 2.0
    eigs = np.linalg.eigvalsh(sym)
    trace = float(np.trace(sym).real)
    threshold = -tol * trace
    min_eig = float(eigs[0])
    return GramReport(min_eig, threshold, min_eig >= threshold, G, float(herm))


def _as_float_element(a: AlgebraElement) -> AlgebraElement:
    if a.mode == FLOAT:
        return a
    return AlgebraElement({w: complex(c) for w, c in a.terms.items()}, FLOAT)


def npoint_csv(state, families, max_n=PAIRING_GUARD):
    """CSV rows `indices,re,im` for a list of index families."""
    lines = ["indices,re,im"]
    for fam in families:
        v = npoint(state, fam, max_n=max_n)
        label = " ".join(str(int(i)) for i in fam)
        lines.append(f"{label},{v.real:.17g},{v.imag:.17g}")
    return "\n".join(lines) + "\n"
