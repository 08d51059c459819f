"""Critical branching processes of index 1+alpha: exact recursions,
moving-window maximal-progeny Monte Carlo, and scaling-limit functionals."""

from .laws import (DEFAULT_SEED, OffspringLaw, RngStream, binary_law,
                   geometric_law, law_from_spec, stable_law, validate,
                   zipf_law)
from .exact import (IterateTable, TruncatedSeries, dwass_pmf,
                    dwass_probability, extinction_iterates,
                    extinct_progeny_series, restricted_means,
                    derivative_products, survival_probability, survival_root,
                    tail_constants, total_progeny_pmf, window_tail_enum)
from .simulate import (EstimatorResult, Trajectory, conditioned_final_sizes,
                       conditioned_paths, conditioned_trajectory,
                       estimate_mean_window_max, estimate_window_tail,
                       simulate_generations, window_max, window_sums)
from .limit import (LimitPathGrid, PsiResult, WindowFunctional,
                    csbp_alpha1_transition, csbp_alpha1_vstar, estimate_phi,
                    estimate_peak_mean, estimate_psi, gw_limit_path,
                    peak_mean_profile, vstar_of_path)
from .bounds import (BoundReport, check_bound, check_grid, default_y0,
                     doob_rhs, running_max_scaling,
                     truncated_variance_bound_gap, vah1_rhs)

__version__ = "0.1.0"
