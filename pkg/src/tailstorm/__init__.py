"""Simulation and checking toolkit for spectral tail processes and the max-stable processes built from them."""

from .core import (
    SUP, Anchor, CoverageError, NormSpec, Outside, SpectralWindow, alpha_norm, anchor, check_alpha, lift,
    signed_to_nonneg,
)
from .estimate import (
    AnchoredPattern, ExceedanceSet, anchor_pattern, attractor_check, cluster_conditional_sample,
    empirical_spectral_tail, tail_factorization_check,
)
from .general import estimate_qj_mass, q_membership, simulate_general
from .m3 import fdd_cdf, limit_measure_probe, max_stability_check, simulate_m3
from .models import (
    CATALOG, SpectralModel, build_model, model_broken, model_delta, model_finite_table, model_mma, model_periodic,
)
from .poisson import PathBatch, PathWindow, StopPolicy, TruncationError
from .stats import TestReport, binomial_band, energy_test, ks_one_sample, ks_two_sample
from .streams import derive_stream
from .tcf import (
    TestFunction, default_f_family, random_shift, rs_invariance_test, sc_diagnostic, tcf_battery, tcf_residual,
)

__version__ = "0.1.0"
