"""Greedy sparse approximation in finite-dimensional l_p spaces (p >= 2):
pursuit algorithms, dictionary certifiers, and a Monte Carlo recovery harness."""

from .analysis import (CertificateReport, RipEstimate, SparseSignal,
                       best_m_term_oracle, coherence, d_norm,
                       incoherence_constant, n_of_x, nikolskii_constant,
                       rip_constant_exhaustive, rip_doubling_check,
                       rip_lower_bound_sampled, riesz_to_unconditionality)
from .errors import BudgetExceededError, ConvergenceError, DegenerateSystemError
from .experiments import (BudgetDiagnostic, DecayReport, LebesgueReport,
                          McConfig, McResult, QogaDnormReport, TrialRecord,
                          decay_check, gen_instance, lebesgue_check, mc_recovery,
                          mix_seed, omp_budget_diagnostic, qoga_dnorm_check,
                          small_coeff_check, wilson_interval)
from .greedy import (GreedyConfig, GreedyTrace, chebyshev_project, run_wcga,
                     run_womp, run_wqoga, select_atom, trace_gamma_sizes)
from .space import (Dictionary, NormingFunctional, SpaceSpec, atom_functionals,
                    lp_norm, norming_functional, normalize_dictionary,
                    smoothness_gamma)

__version__ = "0.1.0"
