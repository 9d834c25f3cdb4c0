"""Finite-mode Gaussian phase-space toolkit.

Conventions, fixed here once: phase vectors are real of length 2N ordered as
(q_1..q_N, p_1..p_N) unless a different antisymmetric form is supplied
explicitly; the covariance convention is the one in which the standard
oscillator ground state has mu = I/2 against tau = [[0, I], [-I, 0]].
Smearing is symplectic: the observable attached to a phase vector x pairs
with the field through tau(x, .), so a single-mode ground state at frequency
omega has covariance diag(omega/2, 1/(2*omega)) on (q, p).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InternalInconsistencyError,
    InvalidCovarianceError,
    SpectrumNotGappedError,
    TruncationInsufficientError,
    ValidationError,
)

__all__ = [
    "OperatorJ",
    "OneParticleStructure",
    "PurityReport",
    "EquivalenceReport",
    "FockRepresentation",
    "validate_mu_tau",
    "one_particle",
    "intertwiner",
    "purity",
    "ground_state_mu",
    "lattice_energy_form",
    "standard_symplectic_form",
    "fock_represent",
    "equivalence_probe",
]


def standard_symplectic_form(n_modes):
    """tau matrix [[0, I], [-I, 0]] in (q_1..q_N, p_1..p_N) ordering."""
    n = int(n_modes)
    T = np.zeros((2 * n, 2 * n))
    T[:n, n:] = np.eye(n)
    T[n:, :n] = -np.eye(n)
    return T


def _check_square_pair(mu, tau):
    mu = np.asarray(mu, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if mu.ndim != 2 or mu.shape[0] != mu.shape[1]:
        raise ValidationError("mu must be a square matrix")
    if tau.shape != mu.shape:
        raise ValidationError("tau must match mu's shape")
    scale = max(1.0, np.abs(mu).max(), np.abs(tau).max())
    if np.abs(mu - mu.T).max() > 1e-12 * scale:
        raise ValidationError("mu must be symmetric")
    if np.abs(tau + tau.T).max() > 1e-12 * scale:
        raise ValidationError("tau must be antisymmetric")
    return mu, tau


def _cholesky_pd(mu, what="mu"):
    try:
        return np.linalg.cholesky(mu)
    except np.linalg.LinAlgError:
        raise InvalidCovarianceError(f"{what} is not positive definite") from None


@dataclass(frozen=True)
class OperatorJ:
    """Map J with mu(x, J y) = tau(x, y) / 2, plus its mu-operator norm."""

    J: np.ndarray
    mu: np.ndarray
    tau: np.ndarray
    mu_norm: float


def validate_mu_tau(mu, tau, tol=1e-9):
    """Admit a covariance pair and return its J operator.

    Checks mu symmetric positive definite, tau antisymmetric, the
    mu-antisymmetry of J, and the bound ||J||_mu <= 1 + tol.  The bound is
    the matrix form of the requirement that |tau(x,y)|^2 / 4 never exceeds
    mu(x,x) mu(y,y).
    """
    mu, tau = _check_square_pair(mu, tau)
    L = _cholesky_pd(mu)
    J = np.linalg.solve(mu, tau / 2.0)
    # J in the mu-orthonormal frame; antisymmetric there iff J* = -J
    Jt = L.T @ J @ np.linalg.inv(L.T)
    scale = max(1.0, np.abs(Jt).max())
    if np.abs(Jt + Jt.T).max() > 1e-8 * scale:
        raise InvalidCovarianceError("J is not mu-antisymmetric")
    norm = float(np.linalg.norm(Jt, 2))
    if norm > 1.0 + tol:
        raise InvalidCovarianceError(
            f"|J|_mu = {norm:.12g} exceeds 1: the pair bound fails"
        )
    return OperatorJ(J=J, mu=mu, tau=tau, mu_norm=norm)


@dataclass(frozen=True)
class OneParticleStructure:
    """Real-linear map K into C^M with <Kx|Ky> = mu(x,y) + (i/2) tau(x,y)."""

    K: np.ndarray
    mu: np.ndarray
    tau: np.ndarray
    dim: int

    def inner(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return complex(np.vdot(self.K @ x, self.K @ y))


def one_particle(mu, tau, tol=1e-9, rank_tol=1e-10):
    """Spectral construction of a one-particle structure for (mu, tau).

    In the mu-orthonormal frame the hermitian matrix I + i J has spectrum in
    [0, 2]; its strictly positive eigenspaces carry the representation.  Pure
    directions contribute one dimension per mode, mixed directions two (the
    doubling that keeps the complex span dense).
    """
    opj = validate_mu_tau(mu, tau, tol=tol)
    mu, tau = opj.mu, opj.tau
    L = np.linalg.cholesky(mu)
    Jt = L.T @ opj.J @ np.linalg.inv(L.T)
    Jt = (Jt - Jt.T) / 2.0
    C = np.eye(len(mu)) + 1j * Jt
    w, U = np.linalg.eigh(C)
    keep = w > rank_tol * max(1.0, w.max(initial=0.0))
    w_pos = w[keep]
    U_pos = U[:, keep]
    K = (np.sqrt(w_pos)[:, None] * U_pos.conj().T) @ L.T
    structure = OneParticleStructure(K=K, mu=mu, tau=tau, dim=int(keep.sum()))
    _verify_reconstruction(structure, tol=1e-12)
    return structure


def _verify_reconstruction(s, tol):
    target = s.mu + 0.5j * s.tau
    got = s.K.conj().T @ s.K
    scale = max(1.0, np.abs(target).max())
    resid = np.abs(got - target).max()
    if resid > tol * scale * 10:
        raise InternalInconsistencyError(
            f"one-particle reconstruction residual {resid:.3e}"
        )


def intertwiner(s1: OneParticleStructure, s2: OneParticleStructure, tol=1e-10):
    """Unitary V with V K1 = K2 for two structures of the same pair."""
    if s1.dim != s2.dim:
        raise ValidationError("structures have different dimensions")
    K1, K2 = s1.K, s2.K
    gram = K1 @ K1.conj().T
    V = K2 @ K1.conj().T @ np.linalg.inv(gram)
    scale = max(1.0, np.abs(K2).max())
    if np.abs(V @ K1 - K2).max() > tol * scale * 100:
        raise InternalInconsistencyError("intertwiner does not map K1 to K2")
    if np.abs(V.conj().T @ V - np.eye(s1.dim)).max() > tol * 100:
        raise InternalInconsistencyError("intertwiner is not unitary")
    return V


@dataclass(frozen=True)
class PurityReport:
    pure: bool
    j_square_residual: float
    variational_residual: float

    @property
    def verdict(self):
        return "pure" if self.pure else "mixed"


def purity(mu, tau, tol_square=1e-10, tol_variational=1e-8):
    """Two independent purity tests that must agree.

    Test A: J^2 = -I within tol_square.  Test B: the variational
    characterization, which reduces to the generalized eigenproblem
    (1/4) tau^T mu^{-1} tau v = lambda mu v having all lambda equal to 1;
    the sup over the Rayleigh quotient is attained there.  Disagreement
    raises, since both express the same purity condition.
    """
    opj = validate_mu_tau(mu, tau)
    mu, tau = opj.mu, opj.tau
    n = len(mu)
    r_square = float(np.abs(opj.J @ opj.J + np.eye(n)).max())
    pure_a = r_square <= tol_square

    quarter = 0.25 * tau.T @ np.linalg.solve(mu, tau)
    L = np.linalg.cholesky(mu)
    B = np.linalg.solve(L, np.linalg.solve(L, quarter.T).T)
    lams = np.linalg.eigvalsh((B + B.T) / 2.0)
    r_var = float(np.abs(lams - 1.0).max()) if n else 0.0
    pure_b = r_var <= tol_variational

    if pure_a != pure_b:
        raise InternalInconsistencyError(
            f"purity checks disagree: |J^2+I| = {r_square:.3e}, "
            f"eigenvalue residual = {r_var:.3e}"
        )
    return PurityReport(pure=pure_a, j_square_residual=r_square,
                        variational_residual=r_var)


def ground_state_mu(energy_form, tau=None, gap_tol=1e-10):
    """Ground-state covariance of a quadratic Hamiltonian.

    Parameters
    ----------
    energy_form : symmetric positive definite 2N x 2N matrix A; the energy is
        x^T A x / 2 on phase vectors.
    tau : antisymmetric form fixing the dynamics; defaults to the standard
        block form.  The flow is x' = T A x with T tau's matrix.
    gap_tol : relative spectral gap below which the system is rejected.

    Returns the unique flow-invariant pure covariance. The construction
    diagonalizes the frequency operator in the energy metric: with
    G = A^{1/2} T A^{1/2} and (h_k, w_k) the positive-frequency eigenpairs
    of iG,

        mu = Re( A^{1/2} W diag(h)^{-1} W^H A^{1/2} ),

    which keeps positive frequencies only; the normalization is the one
    under which a pure pair saturates the validation bound.  A zero mode
    (massless periodic chain) makes the inverse blow up and is rejected
    instead.
    """
    A = np.asarray(energy_form, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] % 2:
        raise ValidationError("energy form must be square of even dimension")
    if tau is None:
        tau = standard_symplectic_form(A.shape[0] // 2)
    A, T = _check_square_pair(A, tau)
    scale = max(1.0, np.abs(A).max())
    wA, VA = np.linalg.eigh((A + A.T) / 2.0)
    if wA.min() < -1e-10 * scale:
        raise InvalidCovarianceError("energy form must be positive")
    if wA.min() <= 1e-12 * scale:
        # zero-energy direction: the frequency spectrum touches zero
        raise SpectrumNotGappedError(
            "energy form has a null direction; no gapped ground state"
        )
    root = (VA * np.sqrt(wA)) @ VA.T

    G = root @ T @ root
    H = 1j * (G - G.T) / 2.0
    h, W = np.linalg.eigh(H)
    h_max = float(np.abs(h).max())
    if h_max == 0.0 or float(np.abs(h).min()) < gap_tol * h_max:
        raise SpectrumNotGappedError(
            "frequency spectrum touches zero; no gapped ground state"
        )
    pos = h > 0
    Wp = W[:, pos]
    hp = h[pos]
    mu = (root @ Wp) @ np.diag(1.0 / hp) @ (root @ Wp).conj().T
    return np.real((mu + mu.conj().T) / 2.0)


def lattice_energy_form(n_sites, spacing, mass):
    """Energy form of the periodic 1D Klein-Gordon chain.

    Site fields are scaled by sqrt(spacing) so that (q, p) are canonically
    conjugate with the standard form; the potential block is
    m^2 I + (2 I - S - S^T) / a^2 with S the cyclic shift.  Mode
    frequencies are omega(k)^2 = m^2 + (4/a^2) sin^2(k a / 2).

    Returns (A, tau).
    """
    n = int(n_sites)
    a = float(spacing)
    if n < 1 or a <= 0:
        raise ValidationError("need at least one site and positive spacing")
    S = np.roll(np.eye(n), 1, axis=1)
    V = mass * mass * np.eye(n) + (2 * np.eye(n) - S - S.T) / (a * a)
    A = np.zeros((2 * n, 2 * n))
    A[:n, :n] = V
    A[n:, n:] = np.eye(n)
    return A, standard_symplectic_form(n)


# ------------------------------------------------------------------- Fock

class FockRepresentation:
    """Dense matrices on the total-occupation-truncated symmetric Fock space.

    Basis states are occupation tuples over the one-particle dimension with
    total occupation <= cutoff, ordered lexicographically.
    """

    def __init__(self, structure: OneParticleStructure, cutoff: int):
        M = structure.dim
        if M > 4:
            raise ValidationError(f"one-particle dimension {M} exceeds guard 4")
        if not (0 < cutoff <= 6):
            raise ValidationError("cutoff must lie in 1..6")
        self.structure = structure
        self.cutoff = int(cutoff)
        self.basis = [
            occ
            for occ in itertools.product(range(cutoff + 1), repeat=M)
            if sum(occ) <= cutoff
        ]
        self.basis.sort()
        self.index = {occ: k for k, occ in enumerate(self.basis)}
        self.dim = len(self.basis)
        self._lower = [self._annihilator(j) for j in range(M)]

    def _annihilator(self, j):
        out = np.zeros((self.dim, self.dim))
        for occ, col in self.index.items():
            if occ[j] == 0:
                continue
            target = list(occ)
            target[j] -= 1
            out[self.index[tuple(target)], col] = math.sqrt(occ[j])
        return out

    def annihilator(self, xi):
        """a(xi): anti-linear in the one-particle argument."""
        xi = np.asarray(xi, dtype=complex)
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for j, mat in enumerate(self._lower):
            out += np.conj(xi[j]) * mat
        return out

    def creator(self, xi):
        return self.annihilator(xi).conj().T

    def field(self, x):
        """Represented field on a real phase vector."""
        xi = self.structure.K @ np.asarray(x, dtype=float)
        return self.annihilator(xi) + self.creator(xi)

    def vacuum(self):
        v = np.zeros(self.dim)
        v[self.index[(0,) * self.structure.dim]] = 1.0
        return v

    def sector_projector(self, max_total):
        d = np.array([1.0 if sum(occ) <= max_total else 0.0 for occ in self.basis])
        return np.diag(d)

    def commutator_residual(self, psi, xi):
        """Max deviation of [a(psi), a+(xi)] from <K psi|K xi> I on the
        sector with total occupation <= cutoff - 1."""
        A = self.annihilator(self.structure.K @ np.asarray(psi, dtype=float))
        Cr = self.creator(self.structure.K @ np.asarray(xi, dtype=float))
        comm = A @ Cr - Cr @ A
        expected = self.structure.inner(psi, xi) * np.eye(self.dim)
        P = self.sector_projector(self.cutoff - 1)
        return float(np.abs(P @ (comm - expected) @ P).max())

    def vacuum_npoint(self, vectors):
        """Vacuum expectation of a product of represented fields.

        Contributing intermediate states reach occupation at most n/2 for an
        n-fold product starting and ending in the vacuum, so cutoff >= n is
        comfortably sufficient and is required.
        """
        n = len(vectors)
        if n > self.cutoff:
            raise TruncationInsufficientError(
                f"{n}-point at cutoff {self.cutoff}: raise the cutoff"
            )
        v = self.vacuum().astype(complex)
        for x in reversed(vectors):
            v = self.field(x) @ v
        return complex(self.vacuum() @ v)


def fock_represent(structure, cutoff):
    """Truncated Fock representation of a one-particle structure."""
    return FockRepresentation(structure, cutoff)


# ----------------------------------------------------------- equivalence

@dataclass(frozen=True)
class EquivalenceReport:
    truncations: tuple
    hs_norms: tuple
    c_mins: tuple
    c_maxs: tuple
    verdict: str
    Q: np.ndarray = field(repr=False, default=None)

    def to_json(self):
        return json.dumps(
            {
                "c_min": self.c_mins[-1],
                "c_max": self.c_maxs[-1],
                "hs_norms": list(self.hs_norms),
                "truncations": list(self.truncations),
                "verdict": self.verdict,
            },
            sort_keys=True,
        )


def equivalence_probe(mu1, mu2, tau=None, truncations=None, tol=1e-12):
    """Truncation-ladder probe for unitary equivalence of two covariances.

    For each mode count N in the ladder the leading 2N x 2N blocks are
    compared: c_min, c_max are the extreme generalized eigenvalues of
    mu2 v = c mu1 v, and the Hilbert-Schmidt norm is that of Q with
    mu1 Q = mu2 - mu1, computed in the mu1 geometry.  In finite dimension
    every Q is Hilbert-Schmidt, so only the growth trend along the ladder is
    reported: hs growing at least like N^0.4 reads divergent, essentially
    flat reads bounded, anything else inconclusive.
    """
    mu1 = np.asarray(mu1, dtype=float)
    mu2 = np.asarray(mu2, dtype=float)
    if mu1.shape != mu2.shape or mu1.ndim != 2:
        raise ValidationError("covariances must share a square shape")
    total_modes = mu1.shape[0] // 2
    if truncations is None:
        truncations = [total_modes]
    truncs = []
    hs_norms = []
    c_mins = []
    c_maxs = []
    Q_last = None
    for n_modes in truncations:
        n = 2 * int(n_modes)
        if n > mu1.shape[0]:
            raise ValidationError(
                f"truncation {n_modes} exceeds available modes {total_modes}"
            )
        m1 = mu1[:n, :n]
        m2 = mu2[:n, :n]
        L = _cholesky_pd(m1, "mu1 block")
        if tau is not None:
            t = np.asarray(tau, dtype=float)[:n, :n]
            validate_mu_tau(m1, t)
            validate_mu_tau(m2, t)
        delta = m2 - m1
        B = np.linalg.solve(L, np.linalg.solve(L, delta.T).T)
        B = (B + B.T) / 2.0
        lams = np.linalg.eigvalsh(B)
        hs = float(np.sqrt(np.sum(lams**2)))
        truncs.append(int(n_modes))
        hs_norms.append(hs)
        c_mins.append(float(1.0 + lams.min()))
        c_maxs.append(float(1.0 + lams.max()))
        Q_last = np.linalg.solve(m1, delta)
    verdict = _trend_verdict(truncs, hs_norms, tol)
    return EquivalenceReport(
        truncations=tuple(truncs),
        hs_norms=tuple(hs_norms),
        c_mins=tuple(c_mins),
        c_maxs=tuple(c_maxs),
        verdict=verdict,
        Q=Q_last,
    )


def _trend_verdict(truncs, hs_norms, tol):
    if all(h <= tol for h in hs_norms):
        return "bounded-trend"
    if len(truncs) < 2 or truncs[-1] == truncs[0]:
        return "inconclusive"
    first = max(hs_norms[0], tol)
    slope = math.log(hs_norms[-1] / first) / math.log(truncs[-1] / truncs[0])
    if slope >= 0.4:
        return "divergent-trend"
    if abs(slope) <= 0.1:
        return "bounded-trend"
    return "inconclusive"
