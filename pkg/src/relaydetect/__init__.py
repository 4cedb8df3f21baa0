"""Byzantine relay detection for a Gaussian two-way relay channel."""

__version__ = "0.1.0"

from .analysis import (
    M_functional,
    W0,
    deconvolution_check,
    delta_F_max,
    estimate_lambda,
    non_manip_witness,
    theta_bound,
)
from .attacks import (
    AdditiveOffset,
    BlockSwitch,
    CustomKernel,
    Identity,
    PartialGarble,
    ResampleMarginal,
    SignFlip,
    WMatrix,
    apply_attack,
    marginal_of_attack,
)
from .channel import ChannelModel, cond_cdf_u, cond_pdf_u, posterior, sample_batch
from .detector import (
    DetectionResult,
    ThresholdProfile,
    calibrate_threshold,
    decision_statistic,
    detect,
    epsilon_threshold,
    mu_prime,
)
from .empirics import cond_cdf_matrix, empirical_cdf_given_x1, maliciousness_R, typicality_check
from .quantizer import QuantizerGrid, choose_grid, quantize
