"""Spectral toolkit for a renormalized random Schrodinger operator on a 2D box.

The package builds, calibrates and exercises the operator Delta + xi + eta
with white-noise potential on the periodic square, via paracontrolled
calculus on a dyadic Littlewood-Paley frame: noise sampling and Wick
renormalization, the paracontrolled operator with its resolvent and square
root, functional-inequality and commutator checks, and NLS/NLW integrators
driven by the regularized operator.
"""

from .spectral import (
    Field,
    GridSpec,
    apply_multiplier,
    batch_fft2,
    batch_ifft2,
    bessel_inverse,
    convolve,
    field_from_function,
    gradient,
    inner,
    japanese_bracket,
    l2_norm,
    laplacian,
    lp_norm,
    multiply,
    set_fft_workers,
    sobolev_norm,
    weighted_norm,
)
from .dyadic import (
    DyadicPartition,
    bernstein_check,
    besov_norm,
    block,
    block_stack,
    build_partition,
    chi_profile,
    cutoff,
    rho_profile,
    scaling_slope,
)
from .products import (
    bilinear_D,
    commutator_C,
    commutator_CN,
    para_geq,
    para_gt,
    para_leq,
    para_lt,
    resonant,
)
from .noise import (
    DecompositionParams,
    MollifierSigma,
    NoiseRealization,
    decompose,
    mollify,
    regularity_diagnostic,
    sample_white_noise,
    space_weights,
)
from .renorm import (
    EnhancedNoise,
    RenormFunction,
    build_enhanced,
    convergence_study,
    renorm_exact,
    renorm_frozen,
    renorm_mc,
    renorm_stationary,
    zero_renorm,
)
from .operator import (
    OperatorContext,
    ParacontrolledFunction,
    apply_T,
    apply_shifted,
    b_xi,
    build_context,
    calibrate_shift,
    dense_operator,
    direct_apply,
    embedding_checks,
    energy_norm,
    eta_truncated,
    faris_lavine_check,
    faris_lavine_constant,
    faris_lavine_gaussian_reference,
    gamma_map,
    localize_and_formula_check,
    norm_resolvent_study,
    operator_function_apply,
    random_probe,
    resolvent_solve,
    select_cutoff,
    smooth_bump,
    sqrt_apply,
    w2inf_norm,
    zero_enhanced,
)
from .solvers import (
    NLSState,
    NLWState,
    SolverConfig,
    make_nls_state,
    make_nlw_state,
    nls_checks,
    nls_energy,
    nls_envelope,
    nls_eps_study,
    nls_initial,
    nls_integrate,
    nls_mass,
    nlw_checks,
    nlw_eps_study,
    nlw_initial,
    nlw_initial_study,
    nlw_integrate,
    nlw_integrate_trig,
    nlw_richardson,
    nlw_time_reversal,
    plain_function_apply,
    plain_resolve,
    plain_shifted_apply,
    shared_ladder_contexts,
    spectral_radius_bound,
    support_radius,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
