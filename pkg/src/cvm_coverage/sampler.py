"""Fixed-memory uniform sampling from a stream of unknown length.

Every incoming element is admitted to the buffer with the current probability
``p = 2**-level``.  Whenever the buffer reaches its capacity, each entry
(including the one that just arrived) is independently kept with probability
1/2 and ``level`` increases by one.  After any prefix of the stream, each
element seen so far is in the buffer with probability exactly ``2**-level``.

Unlike the distinct-count variant in :mod:`cvm_coverage.distinct`, repeated
labels are never collapsed: the buffer is a multiset, which is what makes the
singleton count of the final sample meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import compress, islice
from typing import Hashable, Iterable

import numpy as np

from .rng import RNG_ALGORITHM, WordStream, check_seed

Token = Hashable

_CHUNK = 1 << 16


class RetentionFailure(Exception):
    """A halving step removed nothing, so the buffer is still full.

    The sampler that raised it is dead; rerun with a larger capacity or
    another seed.
    """

    def __init__(self, index: int, level: int, capacity: int):
        self.index = index
        self.level = level
        self.capacity = capacity
        super().__init__(
            f"retention failure (⊥) at stream index {index}: halving to level "
            f"{level} kept all {capacity} entries"
        )


class SamplerClosed(RuntimeError):
    pass


@dataclass(frozen=True)
class SamplerConfig:
    capacity: int
    seed: int

    def __post_init__(self):
        if isinstance(self.capacity, bool) or not isinstance(self.capacity, int):
            raise TypeError("capacity must be an integer")
        if self.capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {self.capacity}")
        object.__setattr__(self, "seed", check_seed(self.seed))


@dataclass(frozen=True)
class Dyadic:
    """The exact probability ``1 / 2**exponent``."""

    exponent: int

    numerator = 1

    def as_fraction(self) -> Fraction:
        return Fraction(1, 1 << self.exponent)

    def __float__(self) -> float:
        return math.ldexp(1.0, -self.exponent)

    def __str__(self) -> str:
        return "1" if self.exponent == 0 else f"2^-{self.exponent}"


@dataclass(frozen=True)
class SampleResult:
    """The final buffer of a sampler.

    ``positions[i]`` is the 0-based stream index that ``tokens[i]`` came from;
    it is diagnostic only.
    """

    tokens: tuple
    positions: tuple[int, ...]
    level: int
    observed: int
    capacity: int
    seed: int

    @property
    def realized_size(self) -> int:
        return len(self.tokens)

    def inclusion_probability(self) -> Dyadic:
        return Dyadic(self.level)


class CoverageSampler:
    """Uniform fixed-capacity sampler over a stream of labels.

    Args:
        capacity: Maximum number of buffered entries (``n``).
        seed: 64-bit seed; the whole run is a function of the seed and the
            stream.

    Example::

        sampler = CoverageSampler(capacity=500, seed=42)
        sampler.observe_all(tokens)
        sample = sampler.finalize()
    """

    def __init__(self, capacity: int, seed: int):
        self.config = SamplerConfig(capacity, seed)
        self.capacity = self.config.capacity
        self.level = 0
        self.observed = 0
        self.peak_size = 0
        self._words = WordStream(self.config.seed)
        self._tokens: list = []
        self._positions: list[int] = []
        self._state = "live"

    @classmethod
    def from_config(cls, config: SamplerConfig) -> CoverageSampler:
        return cls(config.capacity, config.seed)

    rng_algorithm = RNG_ALGORITHM

    def __len__(self) -> int:
        return len(self._tokens)

    @property
    def buffer(self) -> tuple:
        return tuple(self._tokens)

    def inclusion_probability(self) -> Dyadic:
        return Dyadic(self.level)

    def _check_live(self) -> None:
        if self._state != "live":
            raise SamplerClosed(f"sampler is {self._state}")

    def _halve(self) -> None:
        keep = (self._words.take(len(self._tokens)) & np.uint64(1)) == 0
        keep = keep.tolist()
        self._tokens = list(compress(self._tokens, keep))
        self._positions = list(compress(self._positions, keep))
        self.level += 1
        if len(self._tokens) == self.capacity:
            self._state = "failed"
            raise RetentionFailure(self.observed - 1, self.level, self.capacity)

    def observe(self, token: Token) -> None:
        """Process one stream element.

        Raises:
            RetentionFailure: if the halving this element triggered kept
                every entry.
        """
        self._check_live()
        self.observed += 1
        if self._words.heads(self.level):
            self._tokens.append(token)
            self._positions.append(self.observed - 1)
            if len(self._tokens) > self.peak_size:
                self.peak_size = len(self._tokens)
            if len(self._tokens) == self.capacity:
                self._halve()

    def observe_all(self, tokens: Iterable[Token]) -> None:
        """Process a stream left to right, equivalent to repeated :meth:`observe`.

        Input is consumed in bounded chunks, so iterators of any length are
        fine.  Stops at the first :class:`RetentionFailure`, whose ``index``
        is the offending stream position.
        """
        self._check_live()
        it = iter(tokens)
        while True:
            chunk = list(islice(it, _CHUNK))
            if not chunk:
                return
            self._feed(chunk)

    def _admit(self, chunk: list, offsets: list[int], base: int) -> None:
        self._tokens.extend([chunk[o] for o in offsets])
        self._positions.extend([base + o for o in offsets])
        if len(self._tokens) > self.peak_size:
            self.peak_size = len(self._tokens)

    def _feed(self, chunk: list) -> None:
        # Same word consumption as observe(): one word per element while
        # level is in 1..64, none at level 0.
        n = len(chunk)
        base = self.observed
        i = 0
        while i < n:
            k = self.level
            room = self.capacity - len(self._tokens)
            if k == 0:
                t = min(room, n - i)
                self._admit(chunk, list(range(i, i + t)), base)
                i += t
                self.observed = base + i
                if len(self._tokens) == self.capacity:
                    self._halve()
            elif k > 64:
                self.observe(chunk[i])
                i += 1
            else:
                words = self._words.peek(n - i)
                mask = np.uint64((1 << k) - 1)
                hits = np.flatnonzero((words & mask) == 0)
                if len(hits) < room:
                    self._admit(chunk, (hits + i).tolist(), base)
                    self._words.skip(n - i)
                    i = n
                    self.observed = base + n
                else:
                    take = (hits[:room] + i).tolist()
                    self._admit(chunk, take, base)
                    self._words.skip(take[-1] + 1 - i)
                    i = take[-1] + 1
                    self.observed = base + i
                    self._halve()

    def finalize(self) -> SampleResult:
        """Return the sample and retire the sampler."""
        self._check_live()
        self._state = "finalized"
        return SampleResult(
            tokens=tuple(self._tokens),
            positions=tuple(self._positions),
            level=self.level,
            observed=self.observed,
            capacity=self.capacity,
            seed=self.config.seed,
        )


def inclusion_probability(obj: CoverageSampler | SampleResult) -> Dyadic:
    return Dyadic(obj.level)


def sample_stream(tokens: Iterable[Token], capacity: int, seed: int) -> SampleResult:
    """Run a fresh sampler over ``tokens`` and return its final sample."""
    sampler = CoverageSampler(capacity, seed)
    sampler.observe_all(tokens)
    return sampler.finalize()
