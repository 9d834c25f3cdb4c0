"""Tests for ordering kernels, Wick expansion, ordering changes, and the
point-split stress tensor."""

from __future__ import annotations

import itertools
import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccr_lab.ccr_core import (
    EXACT,
    FLOAT,
    AlgebraElement,
    ExactComplex,
    PairingForm,
    multiply,
    normal_form,
)
from ccr_lab.errors import (
    DegreeGuardError,
    InvalidDifferenceError,
    InvalidSymmetryError,
    OrderingKernelInvalidError,
    ResolutionError,
    ScalarModeMismatchError,
    ValidationError,
)
from ccr_lab.minkowski_kernel import KernelParams
from ccr_lab.quasifree import TwoPointKernel
from ccr_lab.wick_hadamard import (
    DifferenceKernel,
    NormalOrderedElement,
    OrderingKernel,
    TwoPointTable,
    WickTensor,
    alpha_map,
    element_to_tensors,
    normal_order,
    phi2_H_expectation,
    stress_energy,
    tensor_from_json,
    tensor_to_json,
    tensors_to_element,
    unorder,
    wick_product,
    word_tensor,
)

from oracles import (
    coincidence_remainder,
    hadamard_v_coefficients,
    hermite_alpha_coeff,
    normal_order_oracle,
    unorder_oracle,
)

GENS = (1, 2, 3, 4)
E4 = PairingForm(
    {
        (1, 2): Fraction(1),
        (1, 3): Fraction(1, 2),
        (2, 4): Fraction(-1, 3),
        (3, 4): Fraction(2),
    }
)


def exact(re, im=0):
    return ExactComplex(Fraction(re), Fraction(im))


def gen(i):
    return AlgebraElement.generator(i, mode=EXACT)


ONE = ExactComplex(1)

# a fixed exact kernel used by the example tests
KAPPA = OrderingKernel.from_symmetric_part(
    {
        (1, 1): exact(1),
        (2, 2): exact(1, 0),
        (3, 3): exact(2),
        (4, 4): exact(1, 0),
        (1, 2): exact(1, 3),
        (1, 3): exact(-1, 2),
        (1, 4): exact(0),
        (2, 3): exact(Fraction(2, 3)),
        (2, 4): exact(0, 1),
        (3, 4): exact(Fraction(-1, 2), Fraction(1, 5)),
    },
    E4,
)


# ------------------------------------------------------------ strategies

fracs = st.fractions(min_value=-2, max_value=2, max_denominator=3)
scalars = st.builds(exact, fracs, fracs)
words6 = st.lists(st.integers(min_value=1, max_value=4), max_size=6).map(tuple)
words4 = st.lists(st.integers(min_value=1, max_value=4), max_size=4).map(tuple)
elements6 = st.dictionaries(words6, scalars, max_size=3).map(
    lambda terms: AlgebraElement(terms, mode=EXACT)
)


@st.composite
def exact_kernels(draw):
    table = {}
    for p, i in enumerate(GENS):
        for j in GENS[p:]:
            table[(i, j)] = ExactComplex(draw(fracs), draw(fracs))
    return OrderingKernel.from_symmetric_part(table, E4)


@st.composite
def difference_tables(draw, real_only=False):
    arr = np.empty((len(GENS), len(GENS)), dtype=object)
    for p in range(len(GENS)):
        for q in range(p, len(GENS)):
            v = ExactComplex(draw(fracs), 0 if real_only else draw(fracs))
            arr[p, q] = v
            arr[q, p] = v
    return DifferenceKernel(GENS, arr)


def kappa_fn(kernel):
    return lambda i, j: kernel.scalar(i, j, EXACT)


# --------------------------------------------------- ordering kernel type

def test_kernel_rejects_unknown_tag():
    with pytest.raises(ValidationError):
        OrderingKernel({}, E4, tag="feynman")


def test_kernel_rejects_wrong_antisymmetric_part():
    # zero kernel cannot match a nonzero pairing form
    with pytest.raises(OrderingKernelInvalidError):
        OrderingKernel({}, E4)
    # float table with the wrong imaginary split
    with pytest.raises(OrderingKernelInvalidError):
        OrderingKernel({(1, 2): 0.3 + 0.2j, (2, 1): 0.3 - 0.2j}, PairingForm({(1, 2): 1.0}))


def test_float_kernel_with_correct_split_passes():
    k = OrderingKernel(
        {(1, 2): 0.3 + 0.5j, (2, 1): 0.3 - 0.5j}, PairingForm({(1, 2): 1.0})
    )
    assert k.value(1, 2) == 0.3 + 0.5j
    assert k.tag == "state-kernel"


def test_kernel_tags_accept_hadamard():
    k = OrderingKernel.from_symmetric_part({(1, 2): exact(5)}, E4, tag="hadamard")
    assert k.tag == "hadamard"


def test_from_symmetric_part_splits_exactly():
    val = KAPPA.value(1, 2)
    assert val - KAPPA.value(2, 1) == ExactComplex(0, Fraction(1))
    assert KAPPA.scalar(1, 2, EXACT) == exact(1, 3) + ExactComplex(0, Fraction(1, 2))


def test_from_state_kernel_wraps_quasifree_table():
    table = {
        (1, 1): 1.0,
        (2, 2): 1.0,
        (1, 2): 0.2 + 0.5j,
        (2, 1): 0.2 - 0.5j,
    }
    tp = TwoPointKernel(table)
    k = OrderingKernel.from_state_kernel(tp)
    assert k.value(1, 2) == 0.2 + 0.5j
    assert k.pairing.value(1, 2) == pytest.approx(1.0)


def test_exact_elements_reject_float_kernel():
    k = OrderingKernel(
        {(1, 2): 0.25 + 0.5j, (2, 1): 0.25 - 0.5j}, PairingForm({(1, 2): 1.0})
    )
    with pytest.raises(ScalarModeMismatchError):
        normal_order(multiply(gen(1), gen(2)), k)


def test_kernel_is_immutable():
    with pytest.raises(AttributeError):
        KAPPA.tag = "hadamard"


# -------------------------------------------------- ordering and inverse

def test_pair_expansion_both_directions():
    k12 = KAPPA.scalar(1, 2, EXACT)
    ordered = normal_order(multiply(gen(1), gen(2)), KAPPA)
    assert ordered.terms == {(1, 2): ONE, (): k12}
    back = unorder(NormalOrderedElement.monomial((1, 2)), KAPPA)
    assert back == normal_form(
        multiply(gen(1), gen(2)) - AlgebraElement.unit(EXACT).scale(k12), E4
    )


def test_ordered_monomial_is_permutation_symmetric():
    # phi2 phi1 - kappa(2,1) and phi1 phi2 - kappa(1,2) are the same element
    k = KAPPA
    a = multiply(gen(2), gen(1)) - AlgebraElement.unit(EXACT).scale(
        k.scalar(2, 1, EXACT)
    )
    b = multiply(gen(1), gen(2)) - AlgebraElement.unit(EXACT).scale(
        k.scalar(1, 2, EXACT)
    )
    assert normal_form(a, E4) == normal_form(b, E4)
    assert unorder(NormalOrderedElement.monomial((1, 2)), k) == normal_form(a, E4)


@given(words6, exact_kernels())
@settings(max_examples=60, deadline=None)
def test_normal_order_matches_matching_oracle(word, kernel):
    a = AlgebraElement({word: ONE}, EXACT)
    got = normal_order(a, kernel)
    assert got.terms == normal_order_oracle(word, kappa_fn(kernel), ONE)


@given(words6, exact_kernels())
@settings(max_examples=60, deadline=None)
def test_unorder_matches_inverse_oracle(word, kernel):
    sorted_word = tuple(sorted(word))
    got = unorder(NormalOrderedElement.monomial(sorted_word), kernel)
    raw = unorder_oracle(sorted_word, kappa_fn(kernel), ONE)
    expect = normal_form(AlgebraElement(raw, EXACT), kernel.pairing)
    assert got == expect


@given(elements6, exact_kernels())
@settings(max_examples=50, deadline=None)
def test_round_trip_from_algebra(a, kernel):
    noe = normal_order(a, kernel)
    assert unorder(noe, kernel) == normal_form(a, kernel.pairing)


@given(st.dictionaries(words6, scalars, max_size=3), exact_kernels())
@settings(max_examples=50, deadline=None)
def test_round_trip_from_ordered_basis(terms, kernel):
    noe = NormalOrderedElement(terms, EXACT)
    assert normal_order(unorder(noe, kernel), kernel) == noe


def test_degree_four_generating_expansion():
    """The order-4 coefficient of the exponential identity.

    exp(phi(t)) = exp(kappa(t,t)/2) :exp(phi(t)):, truncated at fourth
    order, gives phi(t)^4 = sum over k of 4!/(k! (4-2k)! 2^k)
    kappa(t,t)^k :phi(t)^(4-2k):, an expansion assembled here without the
    recursion under test.
    """
    t = {1: Fraction(1), 2: Fraction(-1, 2), 3: Fraction(1, 3), 4: Fraction(2)}
    lin = AlgebraElement.from_vector(
        {g: ExactComplex(v) for g, v in t.items()}, EXACT
    )
    a = multiply(multiply(lin, lin), multiply(lin, lin))
    got = normal_order(a, KAPPA)

    ktt = ExactComplex()
    for i in GENS:
        for j in GENS:
            ktt = ktt + KAPPA.scalar(i, j, EXACT) * ExactComplex(t[i] * t[j])
    expected = {}
    for k in range(3):
        n = 4 - 2 * k
        coeff = ExactComplex(hermite_alpha_coeff(4, k))
        for _ in range(k):
            coeff = coeff * ktt
        for combo in itertools.combinations_with_replacement(GENS, n):
            counts = Counter(combo)
            multinom = Fraction(
                math.factorial(n),
                math.prod(math.factorial(c) for c in counts.values()),
            )
            tprod = Fraction(1)
            for g in combo:
                tprod *= t[g]
            c = coeff * ExactComplex(multinom * tprod)
            if combo in expected:
                c = expected[combo] + c
            expected[combo] = c
    expected = {w: c for w, c in expected.items() if c}
    assert got.terms == expected


# ----------------------------------------------------------- wick product

def test_single_contraction_example():
    a = NormalOrderedElement.monomial((1,))
    b = NormalOrderedElement.monomial((2,))
    prod = wick_product(a, b, KAPPA)
    assert prod.terms == {(1, 2): ONE, (): KAPPA.scalar(1, 2, EXACT)}


def test_vacuum_expectation_of_product_is_kernel_value():
    # with the state's own kernel the scalar part is omega2(f, g) itself
    a = NormalOrderedElement.monomial((1,))
    b = NormalOrderedElement.monomial((3,))
    prod = wick_product(a, b, KAPPA)
    assert prod.unit_coefficient() == KAPPA.scalar(1, 3, EXACT)


def _cross_contraction_oracle(wa, wb, kernel):
    """Wick product of :wa: and :wb: by enumerating left-right matchings."""
    out = {}
    na, nb = len(wa), len(wb)
    for r in range(min(na, nb) + 1):
        for asub in itertools.combinations(range(na), r):
            for bsub in itertools.permutations(range(nb), r):
                coeff = ONE
                for s in range(r):
                    coeff = coeff * kernel.scalar(wa[asub[s]], wb[bsub[s]], EXACT)
                rest = tuple(
                    sorted(
                        [wa[p] for p in range(na) if p not in asub]
                        + [wb[p] for p in range(nb) if p not in bsub]
                    )
                )
                if rest in out:
                    coeff = out[rest] + coeff
                out[rest] = coeff
    return {w: c for w, c in out.items() if c}


@given(
    st.lists(st.integers(1, 4), max_size=3).map(lambda w: tuple(sorted(w))),
    st.lists(st.integers(1, 4), max_size=3).map(lambda w: tuple(sorted(w))),
    exact_kernels(),
)
@settings(max_examples=40, deadline=None)
def test_wick_product_matches_cross_contractions(wa, wb, kernel):
    got = wick_product(
        NormalOrderedElement.monomial(wa),
        NormalOrderedElement.monomial(wb),
        kernel,
    )
    assert got.terms == _cross_contraction_oracle(wa, wb, kernel)


@given(exact_kernels(), exact_kernels())
@settings(max_examples=30, deadline=None)
def test_commutator_is_kernel_independent(k1, k2):
    # both kernels share E4, so commutators must agree after unordering
    f = NormalOrderedElement.monomial((1,))
    g = NormalOrderedElement.monomial((2, 3))
    for kernel in (k1, k2):
        comm = wick_product(f, g, kernel) - wick_product(g, f, kernel)
        plain = unorder(comm, kernel)
        ref = normal_form(
            multiply(gen(1), multiply(gen(2), gen(3)))
            - multiply(multiply(gen(2), gen(3)), gen(1)),
            E4,
        )
        assert plain == ref


def test_degree_one_commutator_is_central():
    comm = wick_product(
        NormalOrderedElement.monomial((1,)),
        NormalOrderedElement.monomial((2,)),
        KAPPA,
    ) - wick_product(
        NormalOrderedElement.monomial((2,)),
        NormalOrderedElement.monomial((1,)),
        KAPPA,
    )
    assert comm.terms == {(): ExactComplex(0, Fraction(1))}


def test_wick_product_degree_guard():
    big = NormalOrderedElement.monomial((1, 1, 2, 2, 3))
    small = NormalOrderedElement.monomial((1,))
    with pytest.raises(DegreeGuardError):
        wick_product(big, small, KAPPA)


# ------------------------------------------------ tensors over the basis

def test_wick_tensor_validation():
    bad = np.zeros((4, 4), dtype=complex)
    bad[0, 1] = 1.0
    with pytest.raises(InvalidSymmetryError):
        WickTensor(GENS, bad)
    with pytest.raises(ValidationError):
        WickTensor((1, 1, 2), np.zeros((3, 3)))
    with pytest.raises(ValidationError):
        WickTensor(GENS, np.zeros((4, 3)))
    with pytest.raises(ValidationError):
        WickTensor(tuple(range(9)), np.zeros((9,)))
    with pytest.raises(ValidationError):
        WickTensor(GENS, np.zeros((4,) * 7))


def test_wick_tensor_exact_symmetry_is_strict():
    arr = np.empty((4, 4), dtype=object)
    arr.fill(ExactComplex())
    arr[0, 1] = exact(1)
    with pytest.raises(InvalidSymmetryError):
        WickTensor(GENS, arr)


def test_difference_kernel_rejects_asymmetry_and_nonfinite():
    bad = np.zeros((4, 4), dtype=complex)
    bad[2, 0] = 1.0
    with pytest.raises(InvalidDifferenceError):
        DifferenceKernel(GENS, bad)
    nan = np.zeros((4, 4), dtype=complex)
    nan[1, 1] = complex("nan")
    with pytest.raises(InvalidDifferenceError):
        DifferenceKernel(GENS, nan)


def test_word_tensor_normalization():
    w = word_tensor((1, 1, 2), GENS)
    # entries 2!/3! = 1/3 on the three distinct permutations of (0,0,1)
    third = ExactComplex(Fraction(1, 3))
    assert w.array[0, 0, 1] == third
    assert w.array[0, 1, 0] == third
    assert w.array[1, 0, 0] == third
    assert w.array[0, 0, 0] == ExactComplex()
    assert tensors_to_element({3: w}).terms == {(1, 1, 2): ONE}


@given(st.dictionaries(words4, scalars, max_size=3))
@settings(max_examples=50, deadline=None)
def test_tensor_element_round_trip(terms):
    noe = NormalOrderedElement(terms, EXACT)
    parts = element_to_tensors(noe, GENS)
    assert tensors_to_element(parts, EXACT) == noe


def test_alpha_identity_up_to_degree_six():
    zero_d = DifferenceKernel(GENS, np.zeros((4, 4)))
    zero_exact = DifferenceKernel(
        GENS, np.array([[exact(0)] * 4] * 4, dtype=object)
    )
    for n, word in enumerate([(), (1,), (1, 2), (1, 2, 2), (1, 2, 3, 4), (1,) * 5, (1, 2) * 3]):
        w = word_tensor(word, GENS)
        out = alpha_map(zero_exact, w)
        assert set(out) == {n}
        assert out[n] == w
    wf = word_tensor((1, 2), GENS, mode=FLOAT)
    out = alpha_map(zero_d, wf)
    assert set(out) == {2}
    assert out[2] == wf


def test_alpha_pair_example():
    # n = 2, t = f (x) f: the image is W2 plus <d, f(x)f> times the unit
    f = [Fraction(1), Fraction(-2), Fraction(1, 2), Fraction(3)]
    arr = np.empty((4, 4), dtype=object)
    for p in range(4):
        for q in range(4):
            arr[p, q] = ExactComplex(f[p] * f[q])
    w = WickTensor(GENS, arr)
    d = DifferenceKernel(
        GENS,
        np.array(
            [[exact(Fraction(1, 2) * (p + q), (p * q) % 2) for q in range(4)] for p in range(4)],
            dtype=object,
        ),
    )
    out = alpha_map(d, w)
    expect = ExactComplex()
    for p in range(4):
        for q in range(4):
            expect = expect + d.matrix[p, q] * arr[p, q]
    assert set(out) == {2, 0}
    assert out[2] == w
    assert complex(out[0].array[()]) == complex(expect)
    assert out[0].array[()] == expect


@given(difference_tables(), difference_tables(), words4, scalars)
@settings(max_examples=40, deadline=None)
def test_alpha_composition_law(d1, d2, word, c):
    w = word_tensor(word, GENS).scale(c)
    once = alpha_map(d1, w)
    composed = {}
    for part in once.values():
        for n, piece in alpha_map(d2, part).items():
            composed[n] = composed[n] + piece if n in composed else piece
    direct = alpha_map(d1 + d2, w)
    for n in set(composed) | set(direct):
        a = composed.get(n)
        b = direct.get(n)
        if a is None:
            assert b.is_zero()
        elif b is None:
            assert a.is_zero()
        else:
            assert a == b


def test_alpha_fully_contracted_coefficient_matches_double_contraction():
    # degree-4 monomial, scalar piece: 3 pair partitions of four slots
    word = (1, 2, 3, 4)
    w = word_tensor(word, GENS)
    d = DifferenceKernel(
        GENS,
        np.array(
            [[exact(Fraction(p + q + 1, 3)) for q in range(4)] for p in range(4)],
            dtype=object,
        ),
    )
    out = alpha_map(d, w)
    t = w.array
    scalar = ExactComplex()
    for i in range(4):
        for j in range(4):
            for k in range(4):
                for l in range(4):
                    scalar = scalar + d.matrix[i, j] * d.matrix[k, l] * t[i, j, k, l]
    assert out[0].array[()] == scalar * ExactComplex(hermite_alpha_coeff(4, 2))


@given(difference_tables(real_only=True), words4, scalars)
@settings(max_examples=40, deadline=None)
def test_alpha_commutes_with_star_for_real_difference(d, word, c):
    w = word_tensor(word, GENS).scale(c)
    starred = alpha_map(d, w.star())
    mapped = alpha_map(d, w)
    assert set(starred) == set(mapped)
    for n in mapped:
        assert starred[n] == mapped[n].star()


@given(exact_kernels(), exact_kernels(), words4)
@settings(max_examples=40, deadline=None)
def test_ordering_change_equals_alpha(k_old, k_new, word):
    sorted_word = tuple(sorted(word))
    noe = NormalOrderedElement.monomial(sorted_word)
    routed = normal_order(unorder(noe, k_old), k_new)
    d = DifferenceKernel.from_orderings(k_new, k_old, GENS)
    mapped = tensors_to_element(
        alpha_map(d, word_tensor(sorted_word, GENS)), EXACT
    )
    assert routed == mapped


def test_tensor_json_round_trip():
    w = word_tensor((1, 2, 2), GENS).scale(exact(Fraction(3, 7), -1))
    back = tensor_from_json(tensor_to_json(w))
    assert back == w
    wf = word_tensor((1, 4), GENS, mode=FLOAT).scale(0.25 - 1.5j)
    backf = tensor_from_json(tensor_to_json(wf))
    assert backf.mode == FLOAT
    assert np.abs(backf.array - wf.array).max() == 0.0
    with pytest.raises(ValidationError):
        tensor_from_json("{not json")
    with pytest.raises(ValidationError):
        tensor_from_json("{}")


# --------------------------------------------------- coincidence limits

def test_phi2_vacuum_matches_coincidence_oracle():
    m = 1.3
    params = KernelParams(m=m, lam=1.0 / m)
    value = phi2_H_expectation(params)
    assert value == pytest.approx(coincidence_remainder(m, 1.0 / m), abs=1e-6)
    # translation invariance: the point argument does not change the vacuum value
    assert phi2_H_expectation(params, x=(3.0, -1.0, 0.5, 2.0)) == value


def test_phi2_lambda_shift():
    m = 1.0
    lam = 1.0 / m
    lam2 = 2.5 / m
    v0 = hadamard_v_coefficients(m, 0)[0]
    a = phi2_H_expectation(KernelParams(m=m, lam=lam))
    b = phi2_H_expectation(KernelParams(m=m, lam=lam2))
    predicted = -v0 * math.log(lam**2 / lam2**2)
    assert b - a == pytest.approx(predicted, abs=1e-10)


def test_phi2_smooth_perturbation_shifts_by_diagonal():
    params = KernelParams(m=2.0, lam=0.5)
    base = phi2_H_expectation(params)

    def s(x, y):
        dx = np.asarray(x) - np.asarray(y)
        mid = 0.5 * (np.asarray(x) + np.asarray(y))
        return math.exp(-float(dx @ dx)) * (0.3 + 0.1 * float(mid[1]))

    x = (0.7, -0.2, 1.1, 0.0)
    shifted = phi2_H_expectation(params, x=x, perturbation=s)
    assert shifted == pytest.approx(base + s(x, x), rel=1e-12)


def test_phi2_guards():
    with pytest.raises(ValidationError):
        phi2_H_expectation(KernelParams(m=0.0))
    with pytest.raises(ValidationError):
        phi2_H_expectation(KernelParams(m=1.0, eps=1e-3))
    with pytest.raises(ValidationError):
        phi2_H_expectation(KernelParams(m=1.0), x=(0.0, 0.0))


# ------------------------------------------------- stress tensor, flat

ETA = np.diag([-1.0, 1.0, 1.0, 1.0])


def test_constant_kernel_closed_form():
    c = 0.75
    m = 1.4
    res = stress_energy(lambda x, y: c, np.zeros(4), mass=m, xi=0.0)
    expect = ETA * (m * m * c / 6.0)
    assert np.abs(res.tensor - expect).max() < 1e-10
    # xi drops out when all derivatives vanish
    res_xi = stress_energy(lambda x, y: c, np.zeros(4), mass=m, xi=0.17)
    assert np.abs(res_xi.tensor - expect).max() < 1e-10
    assert res.kg_diagonal == pytest.approx(m * m * c, abs=1e-10)


def test_zero_kernel_gives_zero():
    res = stress_energy(lambda x, y: 0.0, np.zeros(4), mass=1.0)
    assert np.abs(res.tensor).max() == 0.0
    assert res.trace == 0.0


def test_gaussian_kernel_closed_form():
    # w = exp(-|x-y|^2) with all four components squared positively:
    # d_a d'_b w|_diag = 2 delta_ab, d_a d_b w|_diag = -2 delta_ab
    def w(x, y):
        d = np.asarray(x) - np.asarray(y)
        return float(np.exp(-(d @ d)))

    m = 1.0
    res = stress_energy(w, np.array([0.3, -0.1, 0.7, 0.0]), mass=m, xi=0.0, step=0.04)
    expect = 2.0 * np.eye(4) - ETA * (19.0 / 6.0)
    assert np.abs(res.tensor - expect).max() < 1e-6
    assert res.kg_diagonal == pytest.approx(5.0, abs=1e-6)
    assert res.trace == pytest.approx(-52.0 / 6.0, abs=1e-5)


def test_trace_shift_of_kg_term():
    def w(x, y):
        d = np.asarray(x) - np.asarray(y)
        return float(np.cos(d[0]) * np.exp(-(d[1] ** 2 + d[2] ** 2 + d[3] ** 2)))

    x = np.zeros(4)
    full = stress_energy(w, x, mass=1.2, xi=0.1)
    bare = stress_energy(w, x, mass=1.2, xi=0.1, kg_term=False)
    # componentwise the removed piece is -(1/3) g_ab (P_x w)|_diag
    removed = full.tensor - bare.tensor
    assert np.abs(removed - (-ETA / 3.0) * full.kg_diagonal).max() < 1e-12
    assert full.trace - bare.trace == pytest.approx(
        -4.0 / 3.0 * full.kg_diagonal, rel=1e-12
    )


def test_translation_invariant_kernel_has_constant_tensor():
    def w(x, y):
        d = np.asarray(x) - np.asarray(y)
        q = float(d @ d)
        return math.exp(-q) + 0.2 * math.cos(d[0] + 0.5 * d[2])

    base = stress_energy(w, np.zeros(4), mass=1.0, xi=0.05)
    h = 0.11
    for a in range(4):
        for sign in (1.0, -1.0):
            x = np.zeros(4)
            x[a] = sign * h
            shifted = stress_energy(w, x, mass=1.0, xi=0.05)
            # rounding in (x+dx)-(x+dy) moves the last ulp, nothing more
            assert np.abs(shifted.tensor - base.tensor).max() < 1e-12
    # central-difference divergence of a near-constant field vanishes
    div = np.zeros(4)
    for b in range(4):
        for a in range(4):
            xp = np.zeros(4)
            xm = np.zeros(4)
            xp[a] = h
            xm[a] = -h
            da = (
                stress_energy(w, xp, mass=1.0, xi=0.05).tensor[a, b]
                - stress_energy(w, xm, mass=1.0, xi=0.05).tensor[a, b]
            ) / (2 * h)
            div[b] += ETA[a, a] * da
    assert np.abs(div).max() <= 1e-8


def test_symmetry_of_result():
    def w(x, y):
        d = np.asarray(x) - np.asarray(y)
        return float(np.exp(-(d @ d)) * (1.0 + 0.3 * d[1] * d[2]))

    res = stress_energy(w, np.zeros(4), mass=0.7, xi=0.21)
    assert np.array_equal(res.tensor, res.tensor.T)


def _gaussian_table(spacing=0.05, half=8):
    axis = spacing * np.arange(-half, half + 1)
    g = np.exp(-(axis**2))
    vals = np.einsum("a,b,c,d->abcd", g, g, g, g)
    return TwoPointTable((axis, axis, axis, axis), vals)


def test_table_interpolation_accuracy():
    table = _gaussian_table()
    x = np.array([0.013, -0.021, 0.034, 0.008])
    y = np.array([-0.011, 0.007, -0.019, 0.027])
    d = x - y
    exact_val = float(np.exp(-(d @ d)))
    # cubic windows in four axes: error ~ 4 * f'''' * h^4 / 24 ~ 1e-5
    assert table(x, y) == pytest.approx(exact_val, abs=2e-5)


def test_table_stress_matches_callable():
    table = _gaussian_table()

    def w(x, y):
        d = np.asarray(x) - np.asarray(y)
        return float(np.exp(-(d @ d)))

    res_t = stress_energy(table, np.zeros(4), mass=1.0, step=0.1)
    res_c = stress_energy(w, np.zeros(4), mass=1.0, step=0.1)
    assert np.abs(res_t.tensor - res_c.tensor).max() < 5e-3


def test_table_resolution_guard():
    table = _gaussian_table(spacing=0.05)
    with pytest.raises(ResolutionError):
        stress_energy(table, np.zeros(4), mass=1.0, step=0.05)


def test_table_validation():
    axis = 0.05 * np.arange(-8, 9)
    good = np.einsum(
        "a,b,c,d->abcd",
        np.exp(-(axis**2)),
        np.exp(-(axis**2)),
        np.exp(-(axis**2)),
        np.exp(-(axis**2)),
    )
    with pytest.raises(ValidationError):
        TwoPointTable((axis, axis, axis), good)
    with pytest.raises(ValidationError):
        TwoPointTable((axis, axis, axis, axis + 0.2), good)
    ragged = np.concatenate([axis[:4], axis[5:]])
    with pytest.raises(ValidationError):
        TwoPointTable((ragged, ragged, ragged, ragged), good[:16, :16, :16, :16])
    odd = good.copy()
    odd[3, 4, 5, 6] += 1.0
    with pytest.raises(ValidationError):
        TwoPointTable((axis, axis, axis, axis), odd)
    table = TwoPointTable((axis, axis, axis, axis), good)
    with pytest.raises(ValidationError):
        table(np.array([5.0, 0.0, 0.0, 0.0]), np.zeros(4))


def test_stress_argument_guards():
    with pytest.raises(ValidationError):
        stress_energy(lambda x, y: 0.0, np.zeros(3), mass=1.0)
    with pytest.raises(ValidationError):
        stress_energy(lambda x, y: 0.0, np.zeros(4), mass=-1.0)
    with pytest.raises(ValidationError):
        stress_energy(lambda x, y: 0.0, np.zeros(4), mass=1.0, step=0.0)
    with pytest.raises(ValidationError):
        stress_energy(3.5, np.zeros(4), mass=1.0)
