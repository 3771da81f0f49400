"""Streaming sample coverage estimation with a modified CVM sampler."""

from .coverage import (
    CoverageEstimate,
    CoverageOracle,
    DenominatorPolicy,
    EmptySample,
    TrueCoverage,
    count_singletons,
    estimate_coverage,
    true_coverage,
)
from .distinct import DistinctCounter, estimate_distinct
from .ingestion import NormalizationPolicy, StreamStats, stream_stats, tokenize
from .rng import RNG_ALGORITHM, derive_seed
from .sampler import (
    CoverageSampler,
    Dyadic,
    RetentionFailure,
    SampleResult,
    SamplerClosed,
    SamplerConfig,
    inclusion_probability,
    sample_stream,
)

__version__ = "0.1.0"
