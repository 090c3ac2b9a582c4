"""Nonlocal coefficients, Bessel smoothing, weights, and mollification.

The two convolution coefficients of the collision operator,

    diffusion matrix  A[f] = P(z)/(8*pi*|z|) * f,   P(z) = I - z (x) z/|z|^2,
    potential         a[f] = 1/(4*pi*|z|)   * f  =  Tr A[f],

are free-space convolutions (zero-padded FFT, see spectral.py).  The
smoothing operator M = (I - lap)^{-1} and its relatives are periodic
multipliers (1 + eps*|xi|^2)^{-beta}; the physical kernel e^{-r}/(4*pi*r)
decays fast enough that periodization error is far below scheme error for
L >= 8, and the physical-space route survives as a test oracle.

Exact discrete identities maintained here (not just approximations):
Tr A_of(f) = a_of(f) pointwise, A_of linear, A_of(f) v = A_of(v f),
(I - lap) bessel(h, 1) = h, A_of(w0) = A_of(M w0) - A_of(lap M w0), and
div(A_of(f)) = grad_a(f).  The last one holds because grad_a is not the
periodic gradient of the potential (potentials decay too slowly for that to
converge); it is the row divergence of the matrix-kernel spectra on the
padded grid, the same multiplier both sides share.  grad_A uses the matching
padded-grid derivative tables for the same reason.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .spectral import (
    Field,
    GridSpec,
    SpectralPlan,
    SymMatField,
    VecField,
    get_plan,
)

__all__ = [
    "WeightOrder",
    "MollifierSpec",
    "a_of",
    "A_of",
    "grad_a",
    "grad_A",
    "bessel",
    "inv_bessel",
    "weight",
    "weight_table",
    "mollify",
    "decompose_A",
    "coercivity_scan",
    "A_times_v_identity",
    "eig_range_A",
]

MAX_WEIGHT_ORDER = 64.0


@dataclass(frozen=True)
class WeightOrder:
    """Order k of the polynomial weight <v>^k = (1+|v|^2)^{k/2}."""

    exponent: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.exponent) or abs(self.exponent) > MAX_WEIGHT_ORDER:
            raise ValueError(
                f"weight order must satisfy |k| <= {MAX_WEIGHT_ORDER}, "
                f"got {self.exponent}")


def _bump_profile(z: np.ndarray) -> np.ndarray:
    """Standard unit-ball bump exp(-1/(1-|z|^2)), unnormalized."""
    out = np.zeros_like(z)
    inside = np.abs(z) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - z[inside] ** 2))
    return out


@dataclass(frozen=True)
class MollifierSpec:
    """Rescaled bump eta_delta = delta^{-3} eta0(z/delta), unit discrete mass.

    profile takes |z|/delta in [0, inf) and must vanish for argument >= 1.
    """

    delta: float
    profile: Callable[[np.ndarray], np.ndarray] = field(default=_bump_profile)

    def __post_init__(self) -> None:
        if not np.isfinite(self.delta) or self.delta <= 0:
            raise ValueError(f"mollifier radius must be positive, got {self.delta}")

    def validate_for(self, grid: GridSpec) -> None:
        if self.delta > grid.L / 4.0:
            raise ValueError(
                f"mollifier radius {self.delta} too large for grid "
                f"(must be <= half_width/4 = {grid.L / 4.0})")
        cells_across = 2.0 * self.delta / grid.dv
        if cells_across < 4.0 - 1e-12:
            raise ValueError(
                f"mollifier radius {self.delta} unresolved on grid: support "
                f"spans {cells_across:.2f} cells, need at least 4")


# ---------------------------------------------------------------------------
# Convolution coefficients
# ---------------------------------------------------------------------------


def a_of(f: Field, plan: SpectralPlan | None = None) -> Field:
    """Newtonian potential a[f] = (1/(4 pi |z|)) * f."""
    plan = plan or get_plan(f.grid)
    return plan.free_conv(f, "newton")


def A_of(f: Field, plan: SpectralPlan | None = None) -> SymMatField:
    """Diffusion matrix A[f], six convolutions with P(z)/(8 pi |z|)."""
    plan = plan or get_plan(f.grid)
    return plan.free_conv(f, "landau_jk")


def grad_a(f: Field, plan: SpectralPlan | None = None) -> VecField:
    """Gradient of the Newtonian potential, padded-grid route.

    Identical multiplier to div(A_of(f)); see the module docstring.
    """
    plan = plan or get_plan(f.grid)
    return VecField(plan.conv_padded_multi(f, plan.grad_coulomb_spectrum()),
                    f.grid)


def grad_A(f: Field, plan: SpectralPlan | None = None) -> tuple[SymMatField, ...]:
    """Partial derivatives (d/dv_i) A[f], i = 1..3, padded-grid route."""
    plan = plan or get_plan(f.grid)
    grid = f.grid
    n = grid.n
    ka6 = plan.kernel_spectrum("landau_jk")
    fspec = plan._padded_spectrum(f)
    out = []
    for i in range(3):
        comp = np.empty((6, n, n, n))
        for c in range(6):
            # Multiplier formed per component to avoid caching 18 padded
            # tables (they outgrow memory at n = 64).
            prod = (1j * plan.xi_pad[i] * ka6[c]) * fspec
            comp[c] = np.fft.irfftn(prod, s=(2 * n,) * 3,
                                    axes=(0, 1, 2))[:n, :n, :n]
        comp *= grid.cell_volume
        out.append(SymMatField(comp, grid))
    return tuple(out)


# ---------------------------------------------------------------------------
# Bessel smoothing
# ---------------------------------------------------------------------------


def bessel(h: Field, beta: float = 1.0, eps: float = 1.0,
           plan: SpectralPlan | None = None) -> Field:
    """Smoothing multiplier (1 + eps |xi|^2)^{-beta}; beta=eps=1 is M."""
    if beta < 0:
        raise ValueError(f"bessel order beta must be >= 0, got {beta}")
    if not eps > 0:
        raise ValueError(f"bessel eps must be > 0, got {eps}")
    plan = plan or get_plan(h.grid)
    mult = (1.0 + eps * plan.xi_sq) ** (-beta)
    return plan.from_spectrum(mult * plan.to_spectrum(h))


def inv_bessel(h: Field, plan: SpectralPlan | None = None) -> Field:
    """Multiplier (1 + |xi|^2), the inverse of bessel(., 1); equals I - lap."""
    plan = plan or get_plan(h.grid)
    return plan.from_spectrum((1.0 + plan.xi_sq) * plan.to_spectrum(h))


# ---------------------------------------------------------------------------
# Weights
# ---------------------------------------------------------------------------

_WEIGHT_CACHE: dict[tuple[int, float, float], np.ndarray] = {}


def weight_table(grid: GridSpec, k: float) -> np.ndarray:
    """<v>^k on the grid (cached)."""
    if abs(k) > MAX_WEIGHT_ORDER:
        raise ValueError(f"weight order must satisfy |k| <= {MAX_WEIGHT_ORDER}")
    key = (grid.n, grid.L, k)
    if key not in _WEIGHT_CACHE:
        _WEIGHT_CACHE[key] = (1.0 + grid.radius_sq()) ** (0.5 * k)
    return _WEIGHT_CACHE[key]


def weight(h: Field, k: WeightOrder | float) -> Field:
    """Pointwise multiply by <v>^k."""
    kk = k.exponent if isinstance(k, WeightOrder) else float(k)
    return Field(h.values * weight_table(h.grid, kk), h.grid)


# ---------------------------------------------------------------------------
# Mollification
# ---------------------------------------------------------------------------

_MOLL_CACHE: dict[tuple, np.ndarray] = {}


def _mollifier_spectrum(m: MollifierSpec, grid: GridSpec) -> np.ndarray:
    key = (grid.n, grid.L, m.delta, id(m.profile))
    if key not in _MOLL_CACHE:
        n_pad = 2 * grid.n
        idx = np.arange(n_pad)
        z = grid.dv * ((idx + grid.n) % n_pad - grid.n)
        z1 = z[:, None, None]
        z2 = z[None, :, None]
        z3 = z[None, None, :]
        r = np.sqrt(z1**2 + z2**2 + z3**2) / m.delta
        kern = m.profile(r)
        total = kern.sum() * grid.cell_volume
        if total <= 0:
            raise ValueError("mollifier profile has nonpositive discrete mass")
        kern /= total
        _MOLL_CACHE[key] = np.fft.rfftn(kern).real
    return _MOLL_CACHE[key]


def mollify(h: Field, m: MollifierSpec, plan: SpectralPlan | None = None) -> Field:
    """Zero-padded convolution with the normalized discrete mollifier."""
    m.validate_for(h.grid)
    plan = plan or get_plan(h.grid)
    kspec = _mollifier_spectrum(m, h.grid)
    return Field(plan._conv_with_spectrum(h, kspec), h.grid)


# ---------------------------------------------------------------------------
# Reformulation identities and coercivity
# ---------------------------------------------------------------------------


def decompose_A(w0: Field, plan: SpectralPlan | None = None) -> dict:
    """Constituents of the smoothed splitting of A[w0] and grad a[w0].

    Returns A_Mw0 = A[M w0], A_DeltaMw0 = A[lap M w0],
    A1 = grad a[M w0], and grad_Mw0 = grad(M w0), satisfying
    A[w0] = A_Mw0 - A_DeltaMw0 (exactly, by linearity of the convolution and
    (I - lap) M = I) and grad a[w0] = A1 + grad_Mw0 (up to discretization).
    """
    plan = plan or get_plan(w0.grid)
    mw0 = bessel(w0, 1.0, plan=plan)
    lap_mw0 = plan.laplacian(mw0)
    return {
        "A_Mw0": A_of(mw0, plan),
        "A_DeltaMw0": A_of(lap_mw0, plan),
        "A1": grad_a(mw0, plan),
        "grad_Mw0": plan.gradient(mw0),
    }


def eig_range_A(A: SymMatField) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise (lambda_min, lambda_max) of the 3x3 matrices."""
    mats = A.as_matrices()
    eigs = np.linalg.eigvalsh(mats)
    return eigs[..., 0], eigs[..., 2]


def coercivity_scan(f: Field, plan: SpectralPlan | None = None) -> dict:
    """Empirical ellipticity constant: min over grid of <v>^3 lambda_min(A[f]).

    Checks the admissibility preconditions (nonnegative density, positive
    mass) and reports the minimizer location alongside the raw eigenvalue
    range.
    """
    plan = plan or get_plan(f.grid)
    fmax = float(np.max(np.abs(f.values))) or 1.0
    if float(np.min(f.values)) < -1e-8 * fmax:
        raise ValueError("coercivity scan requires a nonnegative density")
    mass = float(np.sum(f.values)) * f.grid.cell_volume
    if mass <= 0:
        raise ValueError("coercivity scan requires positive mass")
    A = A_of(f, plan)
    lam_min, lam_max = eig_range_A(A)
    w3 = weight_table(f.grid, 3.0)
    scaled = w3 * lam_min
    arg = int(np.argmin(scaled))
    idx = np.unravel_index(arg, lam_min.shape)
    return {
        "c0_hat": float(scaled[idx]),
        "argmin_point": tuple(int(i) for i in idx),
        "lambda_min": float(lam_min[idx]),
        "lambda_max_global": float(np.max(lam_max)),
        "mass": mass,
    }


def A_times_v_identity(f: Field, plan: SpectralPlan | None = None) -> float:
    """Relative L2 residual of A[f] v = A[v f] (radial annihilation)."""
    plan = plan or get_plan(f.grid)
    grid = f.grid
    A = A_of(f, plan)
    v1, v2, v3 = grid.coords()
    coords = (np.broadcast_to(v1, f.values.shape),
              np.broadcast_to(v2, f.values.shape),
              np.broadcast_to(v3, f.values.shape))
    vf_parts = [A_of(Field(c * f.values, grid), plan) for c in coords]
    lhs = A.matvec(VecField(np.stack(coords), grid))
    rhs = np.stack([
        vf_parts[0].values[0] + vf_parts[1].values[3] + vf_parts[2].values[4],
        vf_parts[0].values[3] + vf_parts[1].values[1] + vf_parts[2].values[5],
        vf_parts[0].values[4] + vf_parts[1].values[5] + vf_parts[2].values[2],
    ])
    num = np.sqrt(np.sum((lhs.values - rhs) ** 2))
    den = np.sqrt(np.sum(rhs**2))
    return float(num / den) if den > 0 else 0.0
