"""Smoothing multipliers, weights, mollification, and coefficient splits.

Identities that hold exactly on the grid (resolvent pair, linear splits,
radial annihilation, trace coherence of the derivative tables) are asserted
at round-off.  Quantities limited by kernel sampling are pinned in
test_verification against frozen measured levels instead.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from landaukit.operators import (
    A_of,
    A_times_v_identity,
    MollifierSpec,
    WeightOrder,
    bessel,
    coercivity_scan,
    decompose_A,
    eig_range_A,
    grad_A,
    grad_a,
    inv_bessel,
    mollify,
    weight,
    weight_table,
)
from landaukit.spectral import Field, get_plan
from landaukit.solver import maxwellian

# Measured once at n = 16, L = 8; guards the kernel calibration and the
# eigenvalue scan together.
FROZEN_C0_HAT_16 = 0.021398898346770348


# ---------------------------------------------------------------------------
# Weights
# ---------------------------------------------------------------------------


def test_weight_order_bounds():
    WeightOrder(64.0)
    WeightOrder(-64.0)
    for bad in (65.0, -64.5, float("nan"), float("inf")):
        with pytest.raises(ValueError):
            WeightOrder(bad)


def test_weight_matches_closed_form(grid16, rand_field):
    h = rand_field(grid16, 0)
    w = weight(h, WeightOrder(3.0))
    expect = h.values * (1.0 + grid16.radius_sq()) ** 1.5
    assert np.allclose(w.values, expect, rtol=1e-14)
    assert np.allclose(weight(h, -2.0).values,
                       h.values / (1.0 + grid16.radius_sq()), rtol=1e-14)


def test_weight_table_rejects_extreme_order(grid16):
    with pytest.raises(ValueError):
        weight_table(grid16, 64.5)


# ---------------------------------------------------------------------------
# Bessel smoothing
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("beta,eps", [(1.0, 1.0), (0.5, 2.0), (2.0, 0.25)])
def test_bessel_is_diagonal_on_plane_waves(grid16, beta, eps):
    k = np.pi / grid16.L * np.array([2.0, 1.0, 0.0])
    x = grid16.axis_coords()
    phase = (k[0] * x[:, None, None] + k[1] * x[None, :, None]
             + k[2] * x[None, None, :])
    h = Field(np.cos(phase), grid16)
    out = bessel(h, beta, eps)
    gain = (1.0 + eps * float(k @ k)) ** (-beta)
    assert np.allclose(out.values, gain * h.values, atol=1e-13)


def test_bessel_validates_parameters(grid16, rand_field):
    h = rand_field(grid16, 1)
    with pytest.raises(ValueError):
        bessel(h, -0.5)
    with pytest.raises(ValueError):
        bessel(h, 1.0, 0.0)
    with pytest.raises(ValueError):
        bessel(h, 1.0, -1.0)


def test_bessel_beta_zero_is_identity(grid16, rand_field):
    h = rand_field(grid16, 2)
    assert np.allclose(bessel(h, 0.0).values, h.values, atol=1e-14)


def test_resolvent_pair_round_trips(grid16, plan16, rand_field):
    # (I - lap) bessel(h) = h both as the inverse multiplier and as the
    # literal identity-minus-laplacian.
    h = rand_field(grid16, 3)
    mh = bessel(h, 1.0)
    assert np.allclose(inv_bessel(mh).values, h.values, atol=1e-12)
    direct = mh.values - plan16.laplacian(mh).values
    assert np.allclose(direct, h.values, atol=1e-12)


# ---------------------------------------------------------------------------
# Mollifier
# ---------------------------------------------------------------------------


def test_mollifier_spec_rejects_bad_radius():
    for bad in (0.0, -1.0, float("nan")):
        with pytest.raises(ValueError):
            MollifierSpec(bad)


def test_mollifier_validate_for_grid(grid16):
    # L = 8, dv = 1: radius above L/4 is too wide, below 2 dv unresolved.
    with pytest.raises(ValueError, match="too large"):
        MollifierSpec(2.5).validate_for(grid16)
    with pytest.raises(ValueError, match="unresolved"):
        MollifierSpec(1.5).validate_for(grid16)
    MollifierSpec(2.0).validate_for(grid16)


def test_mollify_rejects_unresolved_radius(grid16, maxwellian16):
    with pytest.raises(ValueError, match="unresolved"):
        mollify(maxwellian16, MollifierSpec(1.0))


def test_mollify_preserves_mass_and_sign(maxwellian16):
    out = mollify(maxwellian16, MollifierSpec(2.0))
    assert np.isclose(np.sum(out.values), np.sum(maxwellian16.values),
                      rtol=1e-13)
    assert float(out.values.min()) > -1e-15


def test_mollify_fixes_constants_away_from_faces(grid16):
    # Unit discrete mass: interior cells reproduce a constant exactly; the
    # zero padding only bites within one support radius of the faces.
    ones = Field(np.ones((16, 16, 16)), grid16)
    out = mollify(ones, MollifierSpec(2.0))
    assert np.isclose(out.values[8, 8, 8], 1.0, rtol=1e-13)
    assert out.values[0, 8, 8] < 1.0


@settings(max_examples=10, deadline=None)
@given(delta=st.floats(1.0, 2.0))
def test_mollify_mass_invariant_across_radii(grid32, maxwellian32, delta):
    out = mollify(maxwellian32, MollifierSpec(delta))
    assert np.isclose(np.sum(out.values), np.sum(maxwellian32.values),
                      rtol=1e-12)


# ---------------------------------------------------------------------------
# Coefficient splits and coercivity
# ---------------------------------------------------------------------------


def test_decompose_A_split_is_exact(grid16, plan16, rand_field):
    # w0 = (I - lap) M w0 termwise, and A_of is linear, so the matrix split
    # closes at round-off for any field.
    w0 = rand_field(grid16, 4)
    parts = decompose_A(w0, plan16)
    recon = parts["A_Mw0"].values - parts["A_DeltaMw0"].values
    direct = A_of(w0, plan16)
    scale = float(np.max(np.abs(direct.values)))
    assert np.max(np.abs(recon - direct.values)) < 1e-13 * scale


def test_grad_A_traces_to_scalar_table(grid16, plan16, maxwellian16):
    # Tr d_i A[f] must equal the i xi_i-times-scalar-kernel route exactly:
    # the diagonal matrix tables sum to the scalar table by construction.
    parts = grad_A(maxwellian16, plan16)
    alt = plan16.conv_padded_multi(maxwellian16,
                                   plan16.grad_newton_spectrum())
    for i in range(3):
        tr = parts[i].trace()
        assert np.allclose(tr.values, alt[i], atol=1e-14)


def test_grad_a_matches_matrix_row_divergence_table(grid16, plan16,
                                                    maxwellian16):
    # Shared-multiplier identity: div A_of(f) = grad_a(f) with zero residual
    # because both sides read the same padded tables.
    ga = grad_a(maxwellian16, plan16)
    A = A_of(maxwellian16, plan16)
    rows = plan16.conv_padded_multi(maxwellian16,
                                    plan16.grad_coulomb_spectrum())
    assert np.allclose(ga.values, rows, atol=0.0)
    assert A.values.shape == (6, 16, 16, 16)


def test_radial_annihilation(maxwellian16):
    # P(z) z = 0 holds algebraically at every lattice offset, so the
    # discrete identity is exact.
    assert A_times_v_identity(maxwellian16) < 1e-13


def test_eig_range_positive_for_maxwellian(maxwellian16):
    lam_min, lam_max = eig_range_A(A_of(maxwellian16))
    assert np.all(lam_min > 0.0)
    assert np.all(lam_max >= lam_min)


def test_coercivity_scan_frozen_level(maxwellian16):
    scan = coercivity_scan(maxwellian16)
    assert np.isclose(scan["c0_hat"], FROZEN_C0_HAT_16, rtol=1e-12)
    assert scan["c0_hat"] > 0.0
    assert scan["argmin_point"] == (8, 8, 8)
    # dv = 1 quadrature of the Gaussian: mass is 1 up to truncation error.
    assert np.isclose(scan["mass"], 1.0, rtol=1e-7)
    assert scan["lambda_max_global"] >= scan["lambda_min"]


def test_coercivity_scan_is_linear_in_f(maxwellian16):
    one = coercivity_scan(maxwellian16)
    two = coercivity_scan(Field(2.0 * maxwellian16.values, maxwellian16.grid))
    assert np.isclose(two["c0_hat"], 2.0 * one["c0_hat"], rtol=1e-12)


def test_coercivity_scan_validates_density(grid16, maxwellian16):
    bad = Field(maxwellian16.values - 0.5 * float(np.max(maxwellian16.values)),
                grid16)
    with pytest.raises(ValueError, match="nonnegative"):
        coercivity_scan(bad)
    with pytest.raises(ValueError, match="positive mass"):
        coercivity_scan(Field(np.zeros((16, 16, 16)), grid16))
