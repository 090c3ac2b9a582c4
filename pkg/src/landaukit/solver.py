"""Time integration in divergence and nondivergence forms, plus pair runs.

The divergence form div(A[f] grad f - f grad a[f]) is used for stepping
(its discrete integral is exactly zero, so mass is conserved to round-off);
the nondivergence form A[f] : hess f + f^2 is exposed for audits.

Time step rule: dt = cfl_safety * dv^2 / max(lambda_max(A[f]), eps), with
lambda_max the largest eigenvalue of the diffusion matrix over the grid,
recomputed every step.  For explicit_rk2 the rule carries the extra factor
2/(3 pi^2), the exact stability bound of the spectral Laplacian under Heun's
method: without it cfl_safety = 0.25 sits ~3.7x outside the stable region
and blows up by step 38 on a plain Maxwellian.  imex_diffusion (backward
Euler on a frozen mean-diffusivity Laplacian, explicit remainder) is stable
at the undamped rule and keeps it.

Random initial data is indexed by integer mode vectors drawn from one
counter-based stream in a fixed order, so a seed names the same continuum
function on every grid that resolves the band limit.  Perturbations are
applied inside the reference envelope, f0 * (1 + eps * noise), which keeps
the state nonnegative and the mass exactly equal to the reference mass; an
additive band-limited bump would go negative in the Maxwellian tails and
violate the positivity invariant at t = 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .functionals import DiagnosticsRow, diagnostics_row, l2_norm, m_diff_norm
from .operators import A_of, bessel, eig_range_A, grad_a, weight_table
from .spectral import Field, GridSpec, SpectralPlan, SymMatField, VecField, get_plan

__all__ = [
    "SolverAbort",
    "StepScheme",
    "SolverState",
    "PairSample",
    "make_state",
    "rhs_divergence",
    "rhs_nondivergence",
    "stable_dt",
    "step",
    "evolve",
    "pair_steps",
    "evolve_pair",
    "maxwellian",
    "anisotropic_gaussian",
    "two_bump",
    "band_limited_field",
    "perturbed",
    "initial_data",
]

SCHEME_KINDS = ("explicit_rk2", "imex_diffusion")

# Heun + spectral Laplacian stability constant: dt <= 2 dv^2/(3 pi^2 lam).
RK2_STABILITY = 2.0 / (3.0 * np.pi**2)
EPS_LAMBDA = 1e-12
DT_FLOOR = 1e-14


class SolverAbort(RuntimeError):
    """Raised when a run cannot continue; carries a diagnostic dump."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class StepScheme:
    """Time stepping scheme selector.

    undershoot_tol is the relative positivity slack: a step producing
    min f < -undershoot_tol * max f aborts the run.  The default is the
    measured ringing floor of the schemes on the benchmark suite (two-bump
    rings at ~1.5e-6 relative at n = 32; smooth equilibria sit at ~1e-12);
    genuine blow-ups overshoot it by orders of magnitude.
    """

    kind: str = "explicit_rk2"
    cfl_safety: float = 0.25
    undershoot_tol: float = 1e-5

    def __post_init__(self) -> None:
        if self.kind not in SCHEME_KINDS:
            raise ValueError(
                f"unknown scheme kind {self.kind!r}; expected one of {SCHEME_KINDS}")
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ValueError(
                f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")


@dataclass
class SolverState:
    """One time level of a run; cfl_bound is lambda_max(A[f]) over the grid."""

    time: float
    f: Field
    step_count: int
    last_dt: float
    cfl_bound: float


def _lambda_max(A: SymMatField) -> float:
    return float(np.max(eig_range_A(A)[1]))


def make_state(f: Field, time: float = 0.0) -> SolverState:
    if not np.all(np.isfinite(f.values)):
        raise ValueError("initial state contains non-finite values")
    return SolverState(
        time=float(time),
        f=f.copy(),
        step_count=0,
        last_dt=0.0,
        cfl_bound=_lambda_max(A_of(f)),
    )


# ---------------------------------------------------------------------------
# Right-hand sides
# ---------------------------------------------------------------------------


def _rhs_divergence_from(A: SymMatField, f: Field, plan: SpectralPlan) -> Field:
    flux = A.matvec(plan.gradient(f)) - grad_a(f, plan).scale(f)
    return plan.divergence(flux)


def rhs_divergence(f: Field, plan: SpectralPlan | None = None) -> Field:
    """Conservative form div(A[f] grad f - f grad a[f])."""
    plan = plan or get_plan(f.grid)
    return _rhs_divergence_from(A_of(f, plan), f, plan)


def rhs_nondivergence(f: Field, plan: SpectralPlan | None = None) -> Field:
    """Expanded form A[f] : hess f + f^2."""
    plan = plan or get_plan(f.grid)
    A = A_of(f, plan)
    H = plan.hessian(f)
    contract = np.zeros_like(f.values)
    for c, w in enumerate((1.0, 1.0, 1.0, 2.0, 2.0, 2.0)):
        contract += w * A.values[c] * H.values[c]
    return Field(contract + f.values**2, f.grid)


# ---------------------------------------------------------------------------
# Stepping
# ---------------------------------------------------------------------------


def stable_dt(scheme: StepScheme, grid: GridSpec, lam_max: float) -> float:
    if not np.isfinite(lam_max):
        raise SolverAbort("diffusion bound is not finite",
                          {"lambda_max": lam_max})
    factor = RK2_STABILITY if scheme.kind == "explicit_rk2" else 1.0
    dt = scheme.cfl_safety * factor * grid.dv**2 / max(lam_max, EPS_LAMBDA)
    if dt < DT_FLOOR:
        raise SolverAbort(
            f"time step underflow: dt = {dt:.3e} with lambda_max = {lam_max:.3e}",
            {"dt": dt, "lambda_max": lam_max})
    return dt


def _advance(f: Field, A: SymMatField, dt: float, scheme: StepScheme,
             plan: SpectralPlan) -> Field:
    """One step of the chosen scheme from a precomputed diffusion matrix."""
    if scheme.kind == "explicit_rk2":
        k1 = _rhs_divergence_from(A, f, plan)
        f1 = Field(f.values + dt * k1.values, f.grid)
        k2 = rhs_divergence(f1, plan)
        return Field(f.values + 0.5 * dt * (k1.values + k2.values), f.grid)

    # imex_diffusion: freeze the scalar mean diffusivity lam_bar (mass-
    # weighted average of tr A / 3), treat lam_bar * lap implicitly by
    # backward Euler, and the full remainder explicitly.
    wts = np.maximum(f.values, 0.0)
    denom = float(np.sum(wts))
    lam_bar = float(np.sum(wts * A.trace().values)) / (3.0 * denom) \
        if denom > 0 else 0.0
    expl = _rhs_divergence_from(A, f, plan).values \
        - lam_bar * plan.laplacian(f).values
    num = np.fft.rfftn(f.values + dt * expl)
    new = np.fft.irfftn(num / (1.0 + dt * lam_bar * plan.xi_sq),
                        s=f.values.shape, axes=(-3, -2, -1))
    return Field(new, f.grid)


def _dump(state: SolverState, f_new: np.ndarray, dt: float) -> dict:
    return {
        "time": state.time,
        "step_count": state.step_count,
        "dt": dt,
        "min": float(np.nanmin(f_new)),
        "max": float(np.nanmax(f_new)),
        "nan_count": int(np.sum(~np.isfinite(f_new))),
        "mass": float(np.nansum(f_new)) * state.f.grid.cell_volume,
    }


def _check_advanced(state: SolverState, f_new: np.ndarray, dt: float,
                    scheme: StepScheme) -> None:
    if not np.all(np.isfinite(f_new)):
        raise SolverAbort(
            f"non-finite values after step {state.step_count + 1} "
            f"at t = {state.time + dt:.6g}", _dump(state, f_new, dt))
    fmax = float(np.max(f_new))
    fmin = float(np.min(f_new))
    if fmin < -scheme.undershoot_tol * max(fmax, 1e-300):
        raise SolverAbort(
            f"positivity lost after step {state.step_count + 1}: "
            f"min f = {fmin:.3e} vs tolerance "
            f"{-scheme.undershoot_tol * fmax:.3e}", _dump(state, f_new, dt))


def step(state: SolverState, scheme: StepScheme,
         plan: SpectralPlan | None = None,
         dt_cap: float | None = None) -> SolverState:
    """Advance one step; dt from the CFL rule, optionally capped."""
    plan = plan or get_plan(state.f.grid)
    A = A_of(state.f, plan)
    lam = _lambda_max(A)
    dt = stable_dt(scheme, state.f.grid, lam)
    if dt_cap is not None:
        dt = min(dt, dt_cap)
    f_new = _advance(state.f, A, dt, scheme, plan)
    _check_advanced(state, f_new.values, dt, scheme)
    return SolverState(
        time=state.time + dt,
        f=f_new,
        step_count=state.step_count + 1,
        last_dt=dt,
        cfl_bound=lam,
    )


def evolve(f0: Field, T: float, scheme: StepScheme,
           sample_every: int = 1, k0: float = 5.0,
           plan: SpectralPlan | None = None,
           on_sample: Callable[[SolverState], None] | None = None,
           ) -> tuple[SolverState, list[DiagnosticsRow]]:
    """Run to time T; returns the final state and sampled diagnostics.

    The last step is shortened to land on T exactly.  Rows are collected at
    t = 0, every sample_every-th step, and at T.
    """
    if not T > 0:
        raise ValueError(f"final time must be positive, got {T}")
    plan = plan or get_plan(f0.grid)
    state = make_state(f0)
    rows = [diagnostics_row(state.f, state.time, k0)]
    if on_sample is not None:
        on_sample(state)
    while state.time < T * (1.0 - 1e-12):
        state = step(state, scheme, plan, dt_cap=T - state.time)
        if state.step_count % sample_every == 0 or state.time >= T * (1.0 - 1e-12):
            rows.append(diagnostics_row(state.f, state.time, k0))
            if on_sample is not None:
                on_sample(state)
    return state, rows


# ---------------------------------------------------------------------------
# Pair runs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairSample:
    """One sampled time of a pair run."""

    time: float
    row_f: DiagnosticsRow
    row_g: DiagnosticsRow
    m_diff: float
    m_diff_grad: float


def pair_steps(f0: Field, g0: Field, T: float, scheme: StepScheme,
               plan: SpectralPlan | None = None,
               ) -> Iterator[tuple[SolverState, SolverState]]:
    """Advance a pair with one synchronized dt; yields every time level.

    The first yield is the initial pair at t = 0.  dt is the smaller of the
    two states' stable steps (capped to land on T), so both trajectories see
    the same time levels.
    """
    if f0.grid != g0.grid:
        raise ValueError("pair states live on different grids")
    if not T > 0:
        raise ValueError(f"final time must be positive, got {T}")
    plan = plan or get_plan(f0.grid)
    sf = make_state(f0)
    sg = make_state(g0)
    yield sf, sg
    while sf.time < T * (1.0 - 1e-12):
        Af = A_of(sf.f, plan)
        Ag = A_of(sg.f, plan)
        lam_f = _lambda_max(Af)
        lam_g = _lambda_max(Ag)
        dt = min(stable_dt(scheme, f0.grid, lam_f),
                 stable_dt(scheme, f0.grid, lam_g),
                 T - sf.time)
        f_new = _advance(sf.f, Af, dt, scheme, plan)
        g_new = _advance(sg.f, Ag, dt, scheme, plan)
        _check_advanced(sf, f_new.values, dt, scheme)
        _check_advanced(sg, g_new.values, dt, scheme)
        sf = SolverState(sf.time + dt, f_new, sf.step_count + 1, dt, lam_f)
        sg = SolverState(sg.time + dt, g_new, sg.step_count + 1, dt, lam_g)
        yield sf, sg


def _pair_sample(sf: SolverState, sg: SolverState, k0: float,
                 plan: SpectralPlan) -> PairSample:
    grid = sf.f.grid
    w2 = weight_table(grid, 2.0)
    w = Field(w2 * (sf.f.values - sg.f.values), grid)
    mw = bessel(w, 1.0, plan=plan)
    gmw = plan.gradient(mw)
    wm32 = weight_table(grid, -1.5)
    grad_norm = float(np.sqrt(np.sum(
        (wm32**2) * np.einsum("cijk,cijk->ijk", gmw.values, gmw.values))
        * grid.cell_volume))
    return PairSample(
        time=sf.time,
        row_f=diagnostics_row(sf.f, sf.time, k0),
        row_g=diagnostics_row(sg.f, sg.time, k0),
        m_diff=l2_norm(mw.values, grid.cell_volume),
        m_diff_grad=grad_norm,
    )


def evolve_pair(f0: Field, g0: Field, T: float, scheme: StepScheme,
                sample_every: int = 1, k0: float = 5.0,
                plan: SpectralPlan | None = None) -> list[PairSample]:
    """Advance (f, g) together and sample difference diagnostics.

    Sampling happens at t = 0, every sample_every-th step, and at T.
    """
    plan = plan or get_plan(f0.grid)
    series: list[PairSample] = []
    for sf, sg in pair_steps(f0, g0, T, scheme, plan):
        at_end = sf.time >= T * (1.0 - 1e-12)
        if sf.step_count % sample_every == 0 or at_end:
            series.append(_pair_sample(sf, sg, k0, plan))
    return series


# ---------------------------------------------------------------------------
# Initial data
# ---------------------------------------------------------------------------


def maxwellian(grid: GridSpec, temperature: float = 1.0) -> Field:
    """Unit-mass isotropic Maxwellian."""
    if not temperature > 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    r2 = grid.radius_sq()
    vals = np.exp(-r2 / (2.0 * temperature)) / (2.0 * np.pi * temperature) ** 1.5
    return Field(vals, grid)


def anisotropic_gaussian(grid: GridSpec,
                         temperatures: tuple[float, float, float] = (0.6, 1.0, 1.4),
                         ) -> Field:
    """Unit-mass Gaussian with distinct axis temperatures."""
    if any(t <= 0 for t in temperatures):
        raise ValueError(f"temperatures must be positive, got {temperatures}")
    v1, v2, v3 = grid.coords()
    t1, t2, t3 = temperatures
    vals = (np.exp(-v1**2 / (2 * t1) - v2**2 / (2 * t2) - v3**2 / (2 * t3))
            / np.sqrt((2 * np.pi) ** 3 * t1 * t2 * t3))
    return Field(vals, grid)


def two_bump(grid: GridSpec, offset: float = 1.5,
             widths: tuple[float, float] = (1.0, 1.4),
             second_height: float = 0.8) -> Field:
    """Two shifted Gaussian bumps, discretely renormalized to unit mass."""
    v1, v2, v3 = grid.coords()
    b1 = np.exp(-((v1 - offset) ** 2 + v2**2 + v3**2) / widths[0])
    b2 = np.exp(-((v1 + offset) ** 2 + v2**2 + v3**2) / widths[1])
    vals = b1 + second_height * b2
    return Field(vals / (vals.sum() * grid.cell_volume), grid)


def _band_modes(grid: GridSpec, max_freq: float) -> list[tuple[int, int, int]]:
    """Integer mode vectors with 0 < |xi| <= max_freq, representatives only.

    One of each conjugate pair (m, -m), in a fixed lexicographic order that
    does not depend on n, so a seed names the same function on every grid
    that resolves the band.
    """
    unit = np.pi / grid.L
    mmax = int(np.floor(max_freq / unit))
    modes = []
    for m1 in range(-mmax, mmax + 1):
        for m2 in range(-mmax, mmax + 1):
            for m3 in range(-mmax, mmax + 1):
                m = (m1, m2, m3)
                if m == (0, 0, 0):
                    continue
                if (m1**2 + m2**2 + m3**2) * unit**2 > max_freq**2:
                    continue
                if m < (0, 0, 0):
                    continue
                modes.append(m)
    return modes


def band_limited_field(grid: GridSpec, seed: int, max_freq: float = 4.0) -> Field:
    """Seeded random band-limited field: zero mass, unit discrete L2 norm.

    Coefficients come from one counter-based stream (Philox) in mode order.
    """
    modes = _band_modes(grid, max_freq)
    n = grid.n
    if 2 * max(abs(c) for m in modes for c in m) >= n:
        raise ValueError(
            f"grid n = {n} cannot resolve the band |xi| <= {max_freq}")
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    coef = rng.standard_normal(2 * len(modes))
    spec = np.zeros((n, n, n), dtype=np.complex128)
    for i, m in enumerate(modes):
        c = coef[2 * i] + 1j * coef[2 * i + 1]
        idx = tuple(mi % n for mi in m)
        cidx = tuple(-mi % n for mi in m)
        spec[idx] = c
        spec[cidx] = np.conj(c)
    vals = np.fft.ifftn(spec).real
    norm = np.sqrt(np.sum(vals**2) * grid.cell_volume)
    return Field(vals / norm, grid)


def perturbed(f0: Field, eps: float, seed: int, max_freq: float = 4.0) -> Field:
    """Envelope-multiplicative perturbation f0 * (1 + eps * noise).

    The band-limited noise is recentred so its f0-weighted mean vanishes
    (mass is preserved exactly) and renormalized to unit L2.  Raises if the
    amplitude would break nonnegativity.
    """
    p = band_limited_field(f0.grid, seed, max_freq).values
    wsum = float(np.sum(f0.values))
    if wsum <= 0:
        raise ValueError("perturbation envelope must have positive mass")
    p = p - float(np.sum(f0.values * p)) / wsum
    p /= np.sqrt(np.sum(p**2) * f0.grid.cell_volume)
    amp = eps * float(np.max(np.abs(p)))
    if amp >= 1.0:
        raise ValueError(
            f"perturbation amplitude {amp:.3f} >= 1 would break nonnegativity")
    return Field(f0.values * (1.0 + eps * p), f0.grid)


INITIAL_KINDS = ("maxwellian", "anisotropic", "two_bump", "band_limited")


def initial_data(kind: str, grid: GridSpec, seed: int = 0,
                 params: dict | None = None) -> Field:
    """Named initial-data library used by the experiment driver."""
    params = dict(params or {})
    if kind == "maxwellian":
        return maxwellian(grid, params.get("temperature", 1.0))
    if kind == "anisotropic":
        temps = params.get("temperatures", (0.6, 1.0, 1.4))
        return anisotropic_gaussian(grid, tuple(temps))
    if kind == "two_bump":
        return two_bump(grid, params.get("offset", 1.5))
    if kind == "band_limited":
        base = maxwellian(grid, params.get("temperature", 1.0))
        return perturbed(base, params.get("amplitude", 0.1), seed,
                         params.get("max_freq", 4.0))
    raise ValueError(
        f"unknown initial data kind {kind!r}; expected one of {INITIAL_KINDS}")
