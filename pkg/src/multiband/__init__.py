"""Sampling multiple correlated stochastic signals at density B/N.

Correlated channels ``X = U A`` are generated by ``M`` uncorrelated WSS
latents. Splitting the latent spectra into subbands with a constant set of
active sources, sampling ``|active|`` well-chosen channels of each subband
at the subband's width, and lifting back through ``U`` recovers every
channel from exactly ``B`` samples, ``B`` being the summed latent bandwidth.
"""
from .errors import MultibandError
from .estimation import (
    EstimationResult,
    empirical_psd,
    estimate_latents,
    prepare_real_pipeline,
    threshold_support,
)
from .metrics import (
    ExperimentReport,
    check_correlatedness_premises,
    nmse_db,
    rate_comparison,
    verify_density_bound,
)
from .reconstruction import (
    SpatialInterpolator,
    TemporalInterpolator,
    reconstruct,
    spatial_interpolate,
    temporal_interpolate,
)
from .sampling import (
    RowSelection,
    SampleSet,
    acquire,
    sampling_density,
    select_rows,
    separate_baseline,
    subband_component,
    temporal_positions,
)
from .spectral import (
    FrequencyGrid,
    PsdSpec,
    Subband,
    SubbandPlan,
    build_psd_spec,
    partition_subbands,
    random_psd_spec,
    total_bandwidth,
)
from .synthesis import (
    MixingMatrix,
    PhaseDraw,
    SignalEnsemble,
    derive_seed,
    empirical_cross_correlation,
    mix,
    random_mixing_matrix,
    synthesize_latent,
    synthesize_latents,
)

__version__ = "0.1.0"
