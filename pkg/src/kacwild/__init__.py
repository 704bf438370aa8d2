"""Numerical laboratory for the one-dimensional Kac kinetic equation.

Solves the equation in Fourier space (Bobylev form and Wild series),
samples the collision-tree representation by Monte Carlo, and verifies
the sharp convergence-rate predictions empirically.
"""

__version__ = "0.1.0"

from .angular import AngularMoment, alpha, alpha_value, decay_exponent
from .cumulants import (
    EdgeworthSpec,
    cumulants_to_moments,
    eta_approximant,
    moments_to_cumulants,
    ptilde_polynomials,
    remainder_epsilon_k,
    y0_threshold,
)
from .initial_data import (
    InitialDatum,
    SignedPerturbation,
    check_tail_condition,
    datum_from_config,
    from_table,
    gaussian,
    kappa4_symmetrized,
    laplace,
    make_odd_perturbed_gaussian,
    make_zero_kurtosis_mixture,
    symmetrize,
    two_point,
    uniform,
)
from .spectral import (
    CFGrid,
    DensityGrid,
    GridParams,
    bobylev_evolve,
    invert_to_density,
    sup_cf_distance,
    tv_distance,
    wild_product,
    wild_series,
)
from .mckean import (
    McKeanTree,
    SampleBatch,
    empirical_cf,
    power_sum_stats,
    sample_tree,
    sample_velocity,
    velocity_batch,
    weight_power_sum,
)
from .bounds import BaseAnalysis, BoundCertificate, compute_C4_star, psi_n, verify_lemma, window_A
from .rates import (
    DecaySeries,
    ExperimentConfig,
    RateFit,
    fit_rate,
    predicted_rate,
    run_experiment,
    theorem_verdict,
)
