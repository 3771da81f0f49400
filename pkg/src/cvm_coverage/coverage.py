"""Good's singleton coverage estimate and the exact coverage it estimates."""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .sampler import SampleResult


class EmptySample(ValueError):
    pass


class DenominatorPolicy(str, enum.Enum):
    """What to divide the singleton count by.

    ``REALIZED`` uses the number of entries actually in the sample.
    ``CAPACITY`` uses the buffer capacity, which overstates coverage whenever
    the final buffer is not full.
    """

    REALIZED = "realized"
    CAPACITY = "capacity"


@dataclass(frozen=True)
class CoverageEstimate:
    singletons: int
    denominator: int
    policy: DenominatorPolicy

    @property
    def exact(self) -> Fraction:
        return 1 - Fraction(self.singletons, self.denominator)

    @property
    def estimate(self) -> float:
        return float(self.exact)


@dataclass(frozen=True)
class TrueCoverage:
    covered_count: int
    stream_length: int

    @property
    def exact(self) -> Fraction:
        return Fraction(self.covered_count, self.stream_length)

    @property
    def value(self) -> float:
        return float(self.exact)


def count_singletons(sample: SampleResult | Iterable) -> int:
    """Number of labels occurring exactly once in the sample."""
    tokens = sample.tokens if isinstance(sample, SampleResult) else sample
    return sum(1 for c in Counter(tokens).values() if c == 1)


def estimate_coverage(
    sample: SampleResult,
    policy: DenominatorPolicy | str = DenominatorPolicy.REALIZED,
) -> CoverageEstimate:
    """Estimate coverage as ``1 - singletons / denominator``.

    Only the sample itself is consulted; stream frequencies never are.

    Raises:
        EmptySample: under the realized-size policy when the sample is empty.
    """
    policy = DenominatorPolicy(policy)
    if policy is DenominatorPolicy.REALIZED:
        denominator = sample.realized_size
        if denominator == 0:
            raise EmptySample("cannot estimate coverage from an empty sample")
    else:
        denominator = sample.capacity
    return CoverageEstimate(count_singletons(sample), denominator, policy)


def true_coverage(stream: Iterable, sample: SampleResult | Iterable) -> TrueCoverage:
    """Fraction of stream positions whose label appears in the sample.

    This rescans ``stream``, so it must be re-iterable (or fresh) and it is
    not a streaming computation.
    """
    tokens = sample.tokens if isinstance(sample, SampleResult) else sample
    labels = set(tokens)
    covered = 0
    length = 0
    for token in stream:
        length += 1
        if token in labels:
            covered += 1
    if length == 0:
        raise ValueError("true coverage is undefined for an empty stream")
    return TrueCoverage(covered, length)


class CoverageOracle:
    """Exact coverage for many samples of the same stream.

    Builds the label histogram once; each query then costs one lookup per
    distinct sampled label instead of a full rescan.
    """

    def __init__(self, stream: Iterable):
        self.counts = Counter(stream)
        self.length = sum(self.counts.values())
        if self.length == 0:
            raise ValueError("true coverage is undefined for an empty stream")

    def __call__(self, sample: SampleResult | Iterable) -> TrueCoverage:
        tokens = sample.tokens if isinstance(sample, SampleResult) else sample
        covered = sum(self.counts.get(label, 0) for label in set(tokens))
        return TrueCoverage(covered, self.length)
