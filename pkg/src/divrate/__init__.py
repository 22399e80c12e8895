"""KL divergence and entropy estimation for discrete distributions on large alphabets."""
from .approx import (ApproxPolynomial, ConvergenceError, DomainWarning, FactorialCoeffs, RescaledPoly,
                     drop_zero_degree, eval_factorial_estimator, gl_coefficients, glprime_coefficients,
                     remez_xlogx, rescale_gamma)
from .distributions import (BoundedRatioPair, DiscreteDistribution, InvalidParameterError, SampleHistogram,
                            SplitMode, SplitSamples, density_ratio_max, entropy, kl_divergence, make_split,
                            make_inconsistency_pair, make_twopoint_variance_m, make_twopoint_variance_n,
                            make_uniform, make_worst_case_pair, make_worst_case_pair_bias_I,
                            make_worst_case_pair_bias_II, make_zipf, rng_from_seed, sample_histogram,
                            sample_poissonized)
from .estimators import (DivergenceEstimate, EstimatorConfig, aplugin_kl, opt_cross_part, opt_entropy_part,
                         opt_kl, plugin_entropy, plugin_kl)
from .oracle import exact_estimator_moments, exact_gl_expectation, rate_aplugin, rate_minimax

__version__ = "0.1.0"
