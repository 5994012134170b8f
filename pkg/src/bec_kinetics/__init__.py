"""Numerical toolkit for the effective collision/absorption dynamics of
thermal fluctuations around a Bose-Einstein condensate: lattice and continuum
collision operators, quasifree-state moments, a first-principles Wick
oracle, and lattice-vs-continuum error studies."""

__version__ = "0.1.0"

from .dispersion import (DegeneratePointError, DispersionContext, RadialProfile,
                         free_energy, gaussian_bump_profile, profile_from_name,
                         zero_profile)
from .lattice import (MomentumLattice, check_distribution_field, continuum_integral,
                      field_values, lattice_sum, norm_1cap_infty, norm_sobolev_c)
from .quasifree import (FloorViolationError, GeneratorK, bose_density,
                        bose_density_field, cumulant, cumulant_polynomial,
                        number_moment)
from .collision import (GTermSpec, KineticParams, bol1_d, bol1_d_time_integral,
                        bol2_d, bol2_d_time_integral, delta_cub,
                        detailed_balance_factor, finite_phase_integral, gterm_eval,
                        gterm_time_integral, q_mollified_d, q_mollified_d_path_pointwise,
                        q_mollified_d_pointwise,
                        q_mollified_d_time_integral, simplex_phase, sinc_kernel)
from .continuum import (HypersurfaceQuadrature, dirac_seq, pair_integral_radial,
                        q_energy_conserving, q_mollified_c, q_mollified_vs_sharp)
from .evolution import (DEFAULT_G_TERMS, EvolutionState, UnconfiguredGTermsError,
                        evolve_F, evolve_G, evolve_psi)
from .wick import (OperatorWord, Symbol, all_pairings, duhamel_f_second_order,
                   duhamel_g_second_order, eval_phase_terms, matching_count,
                   pair_value, second_order_boltzmann_graded,
                   second_order_commutator, second_order_phase_terms,
                   wick_expectation)
from .studies import (bump_chi, gaussian_chi, ols_loglog, oscillatory_disc_error,
                      poisson_error_scan, talbot_scan)
