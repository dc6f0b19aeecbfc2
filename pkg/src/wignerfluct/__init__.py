"""Fluctuations of matrix entries of smooth functions of Wigner matrices.

Closed-form limit laws (semicircle quantities, variance functionals, resolvent
field covariances) together with a Monte Carlo harness that checks them.
"""

from .cltcore import QuadraticFormSpec, decoupling_check, qf_clt_experiment, quadratic_form_stat
from .ensembles import (
    EnsembleSpec,
    MarginalDistribution,
    gaussian,
    goe,
    gue,
    rademacher,
    sample_wigner,
    shifted_exponential,
    three_point,
    uniform,
)
from .fluctlaw import (
    EntryFluctuationLaw,
    ResolventFieldLaw,
    law_cdf,
    predict_entry_law,
    predict_resolvent_cov,
)
from .functionals import TestFunction, alpha, beta, d2, functional_report, make_function, omega2, v1sq, v2sq
from .matrixfn import apply_function_entries, hs_reconstruct_entries, resolvent_block, schur_blocks
from .semicircle import SpectralParams, density, phi, stieltjes_g, stieltjes_g_prime

__version__ = "0.1.0"

__all__ = [
    "EnsembleSpec",
    "EntryFluctuationLaw",
    "MarginalDistribution",
    "QuadraticFormSpec",
    "ResolventFieldLaw",
    "SpectralParams",
    "TestFunction",
    "alpha",
    "apply_function_entries",
    "beta",
    "d2",
    "decoupling_check",
    "density",
    "functional_report",
    "gaussian",
    "goe",
    "gue",
    "hs_reconstruct_entries",
    "law_cdf",
    "make_function",
    "omega2",
    "phi",
    "predict_entry_law",
    "predict_resolvent_cov",
    "qf_clt_experiment",
    "quadratic_form_stat",
    "rademacher",
    "resolvent_block",
    "sample_wigner",
    "schur_blocks",
    "shifted_exponential",
    "stieltjes_g",
    "stieltjes_g_prime",
    "three_point",
    "uniform",
    "v1sq",
    "v2sq",
]
