"""Ornstein-Uhlenbeck bridge: Karhunen-Loeve expansion, simulation and functional quantization."""

from .bridge_sim import (
    IndefiniteCovarianceError,
    StabilityError,
    reduce_random_start,
    simulate_bridge,
    simulate_euler,
    simulate_exact,
)
from .grid import BridgePath, TimeGrid
from .kl_solver import FrequencyCase, KlBasis, KlMode, RootFindingError, kl_basis, solve_frequencies
from .oracle import DenseKernel, conditioned_kernel, empirical_cov, nystrom_eigen
from .ou_model import (
    BridgeSpec,
    DomainError,
    OuParams,
    QuadratureError,
    bridge_cov,
    bridge_mean,
    process_cov,
    total_bridge_variance,
)
from .quantizer import (
    Codebook,
    FunctionalQuantizer,
    clvq,
    distortion,
    functional_quantizer,
    lloyd,
    lloyd_1d,
    rate_check,
)

__version__ = "0.1.0"
