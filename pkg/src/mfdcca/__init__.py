"""Multifractal detrended (MF-X-DFA) and detrending moving-average (MF-X-DMA) cross-correlation analysis."""

from .errors import ConfigError, DataError, DegenerateError, MfdccaError
from .estimators import (
    DEFAULT_Q,
    EstimatorConfig,
    FluctuationMatrix,
    box_covariance,
    default_scale_grid,
    fluctuation_function,
    partition_boxes,
    run,
    run_mfxdfa,
    run_mfxdma,
)
from .generators import (
    ArfimaSpec,
    BinomialSpec,
    FbmSpec,
    SeriesPair,
    arfima_weights,
    binomial_theory,
    constant_theory,
    gen_binomial_measure,
    gen_binomial_pair,
    gen_common_noise_arfima,
    gen_correlated_fbm_pair,
    gen_fgn_circulant,
    gen_two_component_arfima,
)
from .highdim import (
    HDConfig,
    cumulate,
    difference_matrix_2d,
    difference_matrix_3d,
    mfxdma_2d,
    run_mfxdma_2d,
)
from .profile import (
    MAWindow,
    build_profile,
    dma_residual_pair,
    moving_average,
    polyfit_residuals,
)
from .scaling import (
    FitRange,
    ScalingResult,
    exponent_delta,
    fit_scaling_exponents,
    half_sum_check,
    legendre_spectrum,
    mass_exponents,
    scaling_result,
)

__version__ = "0.1.0"
