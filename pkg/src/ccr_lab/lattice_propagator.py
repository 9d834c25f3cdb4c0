"""1+1 dimensional Klein-Gordon lattice: leapfrog propagators, the causal
bilinear pairing in volume and surface form, Cauchy solving, and time-window
support compression.

Grid layout: values[n, j] is the field at time step n and site j, with
t = n*dt and x = j*spacing.  The discrete wave operator applies the centered
second difference in time and the nearest-neighbor Laplacian in space; a
solution satisfies it exactly on interior rows, which is what makes the
pairing identities below hold to roundoff rather than to discretization
order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    CausalContaminationError,
    InternalInconsistencyError,
    InvalidSliceError,
    ValidationError,
    WindowTooThinError,
)

__all__ = [
    "LatticeConfig",
    "LatticeField",
    "CauchyData",
    "fundamental",
    "retarded",
    "advanced",
    "causal_E",
    "apply_kg",
    "pair_E",
    "solve_cauchy",
    "extract_cauchy",
    "slice_compress",
    "save_field",
    "load_field_values",
]

BOUNDARIES = ("periodic", "absorbing-pad")


@dataclass(frozen=True)
class LatticeConfig:
    n_x: int
    spacing: float
    dt: float
    n_steps: int
    mass: float
    boundary: str = "periodic"

    def __post_init__(self):
        if self.n_x < 4 or self.n_steps < 4:
            raise ValidationError("grid needs at least 4 sites and 4 steps")
        if self.spacing <= 0 or self.dt <= 0:
            raise ValidationError("spacing and dt must be positive")
        if self.mass < 0:
            raise ValidationError("mass must be non-negative")
        if self.boundary not in BOUNDARIES:
            raise ValidationError(
                f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}"
            )
        if self.dt > self.spacing:
            raise ValidationError(
                f"CFL violated: dt = {self.dt} exceeds spacing = {self.spacing}"
            )
        # massive leapfrog stability is slightly tighter than bare CFL
        top = self.dt * math.sqrt(
            self.mass**2 + 4.0 / (self.spacing * self.spacing)
        )
        if top > 2.0:
            raise ValidationError(
                f"unstable step: dt*sqrt(m^2 + 4/a^2) = {top:.6g} > 2"
            )


@dataclass(frozen=True)
class LatticeField:
    config: LatticeConfig
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.config.n_steps, self.config.n_x):
            raise ValidationError(
                f"field shape {v.shape} does not match grid "
                f"({self.config.n_steps}, {self.config.n_x})"
            )
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def support_box(self, tol=0.0):
        """(n_min, n_max, j_min, j_max) of entries with |value| > tol,
        or None for an all-zero field."""
        mask = np.abs(self.values) > tol
        if not mask.any():
            return None
        rows = np.nonzero(mask.any(axis=1))[0]
        cols = np.nonzero(mask.any(axis=0))[0]
        return int(rows[0]), int(rows[-1]), int(cols[0]), int(cols[-1])

    def norm(self):
        return float(np.abs(self.values).max())


@dataclass(frozen=True)
class CauchyData:
    """Field value and time derivative on one constant-time slice."""

    config: LatticeConfig
    slice_index: int
    psi: np.ndarray
    dpsi: np.ndarray

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=float)
        dpsi = np.asarray(self.dpsi, dtype=float)
        if psi.shape != (self.config.n_x,) or dpsi.shape != (self.config.n_x,):
            raise ValidationError("Cauchy arrays must have one entry per site")
        if not 0 <= self.slice_index < self.config.n_steps:
            raise ValidationError("slice index outside the grid")
        object.__setattr__(self, "psi", psi.copy())
        object.__setattr__(self, "dpsi", dpsi.copy())


def _laplacian(row, config):
    a2 = config.spacing * config.spacing
    if config.boundary == "periodic":
        return (np.roll(row, 1) + np.roll(row, -1) - 2.0 * row) / a2
    out = -2.0 * row.copy()
    out[:-1] += row[1:]
    out[1:] += row[:-1]
    return out / a2


def _march(values_f, config, forward=True):
    """Leapfrog sweep.  Source rows enter with weight dt^2; the returned
    array is zero at the two starting rows on the quiet side."""
    T, N = values_f.shape
    dt2 = config.dt * config.dt
    m2 = config.mass * config.mass
    psi = np.zeros((T, N))
    steps = range(1, T - 1) if forward else range(T - 2, 0, -1)
    for n in steps:
        prev = psi[n - 1] if forward else psi[n + 1]
        nxt = (
            2.0 * psi[n]
            - prev
            + dt2 * (_laplacian(psi[n], config) - m2 * psi[n] + values_f[n])
        )
        if forward:
            psi[n + 1] = nxt
        else:
            psi[n - 1] = nxt
    return psi


def _require_interior_source(f: LatticeField):
    box = f.support_box()
    if box is None:
        return None
    n0, n1, j0, j1 = box
    T = f.config.n_steps
    if n0 < 1 or n1 > T - 2:
        raise ValidationError(
            "source must vanish on the first and last time rows"
        )
    return box


def _check_contamination(box, config, which):
    if box is None or config.boundary == "periodic":
        return
    n0, n1, j0, j1 = box
    run = (config.n_steps - 1 - n0) if which == "retarded" else n1
    if j0 - run < 1 or j1 + run > config.n_x - 2:
        raise CausalContaminationError(
            "the causal cone of the source reaches the padded boundary; "
            "enlarge the pad or shorten the evolution"
        )


def fundamental(f: LatticeField, which="retarded"):
    """Leapfrog fundamental solution with zero data in the far past
    (retarded) or far future (advanced)."""
    if which not in ("retarded", "advanced"):
        raise ValidationError("which must be 'retarded' or 'advanced'")
    box = _require_interior_source(f)
    _check_contamination(box, f.config, which)
    psi = _march(f.values, f.config, forward=(which == "retarded"))
    return LatticeField(f.config, psi)


def retarded(f: LatticeField):
    return fundamental(f, "retarded")


def advanced(f: LatticeField):
    return fundamental(f, "advanced")


def causal_E(f: LatticeField):
    """Advanced minus retarded solution of the source."""
    adv = fundamental(f, "advanced")
    ret = fundamental(f, "retarded")
    return LatticeField(f.config, adv.values - ret.values)


def apply_kg(field: LatticeField):
    """Discrete Klein-Gordon operator on interior rows; first and last rows
    of the result are zero by convention."""
    cfg = field.config
    v = field.values
    out = np.zeros_like(v)
    dt2 = cfg.dt * cfg.dt
    m2 = cfg.mass * cfg.mass
    for n in range(1, cfg.n_steps - 1):
        lap = _laplacian(v[n], cfg)
        out[n] = (v[n + 1] - 2.0 * v[n] + v[n - 1]) / dt2 - lap + m2 * v[n]
    return LatticeField(cfg, out)


def pair_E(f: LatticeField, g: LatticeField, method="volume", slice_index=None):
    """Causal pairing of two sources.

    volume: cell-weighted sum of f times the causal solution of g;
    antisymmetric to machine precision by the discrete adjoint relation
    between the two fundamental solutions.

    surface: centered Wronskian of the two causal solutions on one
    source-free time slice; slice rows n-1, n, n+1 must carry no source.
    The value is slice independent because the half-step Wronskian is an
    exact invariant of the leapfrog update away from sources.
    """
    if f.config != g.config:
        raise ValidationError("fields live on different grids")
    cfg = f.config
    if method == "volume":
        Eg = causal_E(g)
        return float(cfg.spacing * cfg.dt * np.sum(f.values * Eg.values))
    if method != "surface":
        raise ValidationError("method must be 'volume' or 'surface'")
    psi_f = causal_E(f)
    psi_g = causal_E(g)
    n = _pick_slice(f, g, slice_index)
    uf, ug = psi_f.values, psi_g.values
    w = (
        uf[n] * (ug[n + 1] - ug[n - 1]) - ug[n] * (uf[n + 1] - uf[n - 1])
    ).sum() * cfg.spacing / (2.0 * cfg.dt)
    return float(w)


def _pick_slice(f, g, slice_index):
    cfg = f.config
    source_rows = np.zeros(cfg.n_steps, dtype=bool)
    for field in (f, g):
        source_rows |= np.abs(field.values).max(axis=1) > 0
    def ok(n):
        return (
            1 <= n <= cfg.n_steps - 2
            and not source_rows[n - 1 : n + 2].any()
        )
    if slice_index is not None:
        n = int(slice_index)
        if not ok(n):
            raise InvalidSliceError(
                f"slice {n} touches a source row or the grid edge"
            )
        return n
    mid = cfg.n_steps // 2
    for offset in range(cfg.n_steps):
        for n in (mid + offset, mid - offset):
            if ok(n):
                return n
    raise InvalidSliceError("no source-free slice exists on this grid")


def solve_cauchy(data: CauchyData):
    """March initial data to the whole grid.

    The first step away from the slice is the second-order Taylor start
    psi +- dt dpsi + (dt^2/2)(Lap - m^2) psi; after that, plain leapfrog in
    both directions.
    """
    cfg = data.config
    T, N = cfg.n_steps, cfg.n_x
    dt, dt2 = cfg.dt, cfg.dt * cfg.dt
    m2 = cfg.mass * cfg.mass
    psi = np.zeros((T, N))
    n0 = data.slice_index
    psi[n0] = data.psi
    accel = _laplacian(data.psi, cfg) - m2 * data.psi
    if n0 + 1 < T:
        psi[n0 + 1] = data.psi + dt * data.dpsi + 0.5 * dt2 * accel
    if n0 - 1 >= 0:
        psi[n0 - 1] = data.psi - dt * data.dpsi + 0.5 * dt2 * accel
    for n in range(n0 + 1, T - 1):
        psi[n + 1] = 2 * psi[n] - psi[n - 1] + dt2 * (
            _laplacian(psi[n], cfg) - m2 * psi[n]
        )
    for n in range(n0 - 1, 0, -1):
        psi[n - 1] = 2 * psi[n] - psi[n + 1] + dt2 * (
            _laplacian(psi[n], cfg) - m2 * psi[n]
        )
    return LatticeField(cfg, psi)


def extract_cauchy(field: LatticeField, slice_index):
    """Read (psi, dpsi) off a solution with the centered time derivative."""
    n = int(slice_index)
    cfg = field.config
    if not 1 <= n <= cfg.n_steps - 2:
        raise ValidationError("need interior slice for the centered derivative")
    psi = field.values[n]
    dpsi = (field.values[n + 1] - field.values[n - 1]) / (2.0 * cfg.dt)
    return CauchyData(cfg, n, psi, dpsi)


def _smoothstep(u):
    # quintic transition: C^2 at both ends, monotone
    u = np.clip(u, 0.0, 1.0)
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u))


def slice_compress(data: CauchyData, window):
    """Compress a solution into a source supported in a time window.

    chi drops smoothly from 1 (past of the window) to 0 (future of it);
    the returned source is the discrete wave operator applied to chi times
    the solution through `data`.  Its causal solution reproduces the
    original solution exactly up to roundoff, which is verified before
    returning.
    """
    cfg = data.config
    n_lo, n_hi = int(window[0]), int(window[1])
    if n_hi - n_lo < 4:
        raise WindowTooThinError(
            f"window [{n_lo}, {n_hi}] has fewer than 4 steps"
        )
    if n_lo < 2 or n_hi > cfg.n_steps - 3:
        raise ValidationError("window must sit strictly inside the grid")
    psi = solve_cauchy(data)
    steps = np.arange(cfg.n_steps)
    u = (steps - n_lo) / float(n_hi - n_lo)
    chi = 1.0 - _smoothstep(u)
    windowed = LatticeField(cfg, chi[:, None] * psi.values)
    f = apply_kg(windowed)
    rec = causal_E(f)
    scale = max(psi.norm(), 1e-300)
    resid = float(np.abs(rec.values - psi.values).max()) / scale
    if resid > 1e-8:
        raise InternalInconsistencyError(
            f"window compression failed to reproduce the solution "
            f"(relative error {resid:.3e})"
        )
    return f


def save_field(field: LatticeField, path):
    """Write the raw grid as a binary64 row-major array with a shape header."""
    np.save(path, np.asarray(field.values, dtype=np.float64))


def load_field_values(path):
    return np.load(path)
