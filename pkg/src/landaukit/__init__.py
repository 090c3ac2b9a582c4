"""Pseudo-spectral Landau-Coulomb solver and verification suite.

Modules:
  spectral     grid, transforms, derivatives, free-space convolution
  operators    A[f], a[f], Bessel smoothing, weights, mollifier, coercivity
  functionals  moments, entropy, weighted norms, difference norms
  solver       time stepping for single states and pairs, initial data
  verification identity/energy/contraction/mollifier/ratio audits
  cli          landau-lab driver, config grammar, LCF1 snapshots
"""

__version__ = "0.1.0"

from .spectral import (
    Field,
    GridSpec,
    SpectralPlan,
    SymMatField,
    VecField,
    divergence,
    free_conv,
    get_plan,
    gradient,
    hessian,
    laplacian,
    make_plan,
)
from .operators import (
    A_of,
    MollifierSpec,
    WeightOrder,
    a_of,
    bessel,
    coercivity_scan,
    decompose_A,
    grad_A,
    grad_a,
    inv_bessel,
    mollify,
    weight,
)
from .functionals import (
    DiagnosticsRow,
    boundary_mass_fraction,
    diagnostics_row,
    entropy,
    grad34,
    l2_norm,
    m_diff_norm,
    moments,
    weighted_lp,
)
from .solver import (
    RK2_STABILITY,
    SolverAbort,
    SolverState,
    StepScheme,
    anisotropic_gaussian,
    band_limited_field,
    evolve,
    evolve_pair,
    initial_data,
    maxwellian,
    pair_steps,
    perturbed,
    rhs_divergence,
    rhs_nondivergence,
    stable_dt,
    step,
    two_bump,
)
from .verification import (
    AuditCase,
    AuditReport,
    amplification_vs_T,
    apriori_grad_estimate,
    contraction_experiment,
    energy_decomposition_audit,
    h_defect_decay,
    identity_residuals,
    identity_samples,
    identity_suite,
    lemma_bound_suite,
    mollifier_smallness,
    w_equation_residual,
)
