"""Constant-weight coded links over diffusive molecular channels.

A library and CLI for strongly constant-weight (SCW) codebooks, CSI-free
maximum-likelihood detection, closed-form codeword error bounds, a physical
Poisson observation channel, and seeded Monte Carlo link experiments.
"""

__version__ = "0.1.0"

from .codebook import (
    Codebook,
    CodebookError,
    CodeRateReport,
    EnumerationCapError,
    SymbolAlphabet,
    WeightVector,
    code_rate,
    codebook_size,
    distance_spectrum,
    enumerate_full_scw,
    sample_partial_codebook,
    validate_scw,
)
from .channel import (
    Csi,
    CsiMixture,
    DeterministicCsi,
    PhysicalParams,
    RandomPhysicalCsi,
    cir_expected_count,
    csi_from_params,
    default_random_csi_model,
    sample_csi,
    transmit,
)
from .detect import (
    DetectionResult,
    detect_binary_cw_csi_free,
    detect_coherent_ml,
    detect_noncoherent_ml,
    detect_scw_csi_free,
    detect_symbolwise_coherent,
    log_likelihood,
)
from .bounds import (
    BoundReport,
    chernoff_union_bound,
    optimize_chernoff_t,
    orderstat_bounds,
    poisson_cdf,
    poisson_pmf,
    skellam_pmf,
    skellam_union_bound,
)
from .sim import (
    BitMapping,
    ChannelSpec,
    ExperimentConfig,
    MetricPoint,
    MetricSeries,
    estimate_interval,
    run_ber_experiment,
    run_cer_experiment,
)
