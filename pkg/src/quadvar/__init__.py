"""Exact-arithmetic higher-order Fourier analysis over F_p^n.

Gowers U^2/U^3 norms, additive-pattern censuses, subspace systems, bilinear
form fitting, synthetic instances, and end-to-end recovery of exact quadratic
varieties from approximate ones.
"""

from ._kernels import BACKEND, set_num_threads
from .group import (ContextMismatchError, GroupElement, GSubset, SetFormatError,
                    VectorSpaceCtx, element_add, element_neg, element_scale,
                    read_set, subset_from_predicate, write_set)
from .linalg import (AffineMap, LinearMap, PreconditionError, Subspace,
                     log_p_ceil, quadruple_isomorphisms, repair_to_isomorphism,
                     uniqueness_defect_bound_check)
from .fourier import (FourierTable, RealTable, balanced_indicator, convolve,
                      fourier, indicator, inverse_fourier, iterated_convolution,
                      restricted_fourier_max, spectral_max, u2_norm, u3_norm)
from .counting import (Config10SubspaceCensus, PatternCensus, RegularityReport,
                       claim_translate_statistic, cube_completion_probability,
                       cube_count, cube_count_naive, config10_count,
                       config10_count_naive, config10_subspace_census,
                       pattern_census, popular_difference_set, quadruple_count,
                       quadruple_count_naive, regularity_classify,
                       seven_point_count)
from .forms import (ApproxVarietyReport, BilinearMap, QuadraticVariety,
                    approx_variety_verdict, bias, bias_character_sum,
                    rank_of_direction, symmetrize, variety_membership,
                    variety_size)
from .generators import (GeneratorSpec, gen_layer_variety, gen_polynomial_pullback,
                         gen_random, gen_sidon_counterexample, perturb,
                         random_coset_probability, random_coset_probability_mc,
                         random_symmetric_bilinear)
from .recovery import (RecoveryConfig, RecoveryResult, StageError, SubspaceFamily,
                       recover, step1_build_family, step2_fit_bilinear,
                       step2_good_quadruple_census, step3_extract_variety)

__version__ = "0.1.0"
