"""Robust kernel (cross-)covariance operators, kernel CCA, and
influence-function diagnostics, with synthetic benchmarks and a CLI."""

from .estimators import KernelCCA, RobustKernelCCA
from .influence import (
    InfluenceReport,
    eif_kcca,
    eif_kernel_cco,
    eif_kernel_mean,
    if_robust_cco,
    influence_report,
    robustness_summaries,
)
from .kcca import CcaModel, Projection, fit_robust_kcca, fit_standard_kcca, project
from .kernels import KernelSpec, WeightedCenteredGram, center, center_test, gram, median_bandwidth
from .losses import RobustLoss
from .robust_cov import CovOperatorFit, fit_robust_cov, hs_distance_sq, residual_vector
from .robust_mean import RobustMeanFit, fit_robust_mean
from .synth import Dataset, gen_mgsd, gen_scfsd, gen_sfsd, gen_smsd, gen_tcsd

__all__ = [
    "CcaModel",
    "CovOperatorFit",
    "Dataset",
    "InfluenceReport",
    "KernelCCA",
    "KernelSpec",
    "Projection",
    "RobustKernelCCA",
    "RobustLoss",
    "RobustMeanFit",
    "WeightedCenteredGram",
    "center",
    "center_test",
    "eif_kcca",
    "eif_kernel_cco",
    "eif_kernel_mean",
    "fit_robust_cov",
    "fit_robust_kcca",
    "fit_robust_mean",
    "fit_standard_kcca",
    "gen_mgsd",
    "gen_scfsd",
    "gen_sfsd",
    "gen_smsd",
    "gen_tcsd",
    "gram",
    "hs_distance_sq",
    "if_robust_cco",
    "influence_report",
    "median_bandwidth",
    "project",
    "residual_vector",
    "robustness_summaries",
]

__version__ = "0.1.0"
