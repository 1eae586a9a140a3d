"""Rank selection and de-biased spike estimation for high-dimensional
reduced-rank regression ``Y = X A + U``."""

__version__ = "0.1.0"

from .ensembles import (Dataset, ModelConfig, SignalConvention, SignalFactors,
                        jacobi_parameters, make_rng, sample_jacobi_spectrum,
                        simulate_model)
from .estimation import (CorrectionFunction, CorrectionKind, EstimateRecord,
                         clt_parameters, correction_from_A, correction_from_Y,
                         d_function_A, d_function_Y, empirical_correction,
                         estimate_thetas_from_A, estimate_thetas_from_Y,
                         spike_threshold_Y, studentized_error, threshold_A,
                         threshold_Y)
from .estimators import ReducedRankRegression
from .exceptions import *  # noqa: F401,F403
from .perturbation import SecularFunction, det_identity_check, secular_eval, secular_zeros
from .ranktests import (Algorithm, select_rank, stat_coefficients, stat_fitted,
                        stat_responses)
from .regression import fit, ols_coefficients, singular_values
from .spectra import AbLaw, MpLaw, ks_distance, stieltjes_ab, stieltjes_mp
from .tracywidom import tw_cdf, tw_quantile
