"""The original CVM distinct-elements estimator.

Keeps a set of at most ``capacity`` labels.  A label that arrives while a copy
is already buffered loses its old slot and then re-enters with the current
probability ``2**-level``, so every distinct label is buffered with
probability ``2**-level`` and ``len(buffer) * 2**level`` is unbiased for the
number of distinct labels.

By default a halving that removes nothing is a :class:`RetentionFailure`, as
in :class:`~cvm_coverage.sampler.CoverageSampler`.  Averaging only the runs
that did not fail is biased low at small capacities.  ``on_full="rehalve"``
keeps halving until the buffer has room instead, which never fails and keeps
the estimate unbiased.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .rng import WordStream
from .sampler import RetentionFailure, SamplerClosed, SamplerConfig, Token


ON_FULL = ("fail", "rehalve")


class DistinctCounter:
    def __init__(self, capacity: int, seed: int, on_full: str = "fail"):
        if on_full not in ON_FULL:
            raise ValueError(f"on_full must be one of {ON_FULL}, got {on_full!r}")
        self.on_full = on_full
        self.config = SamplerConfig(capacity, seed)
        self.capacity = self.config.capacity
        self.level = 0
        self.observed = 0
        self._words = WordStream(self.config.seed)
        # dict preserves insertion order, which fixes the halving flip order
        self._buffer: dict = {}
        self._state = "live"

    def __len__(self) -> int:
        return len(self._buffer)

    @property
    def buffer(self) -> tuple:
        return tuple(self._buffer)

    def observe(self, token: Token) -> None:
        if self._state != "live":
            raise SamplerClosed(f"counter is {self._state}")
        self.observed += 1
        self._buffer.pop(token, None)
        if not self._words.heads(self.level):
            return
        self._buffer[token] = None
        while len(self._buffer) == self.capacity:
            keep = ((self._words.take(len(self._buffer)) & np.uint64(1)) == 0).tolist()
            self._buffer = {t: None for t, k in zip(self._buffer, keep) if k}
            self.level += 1
            if len(self._buffer) == self.capacity and self.on_full == "fail":
                self._state = "failed"
                raise RetentionFailure(self.observed - 1, self.level, self.capacity)

    def observe_all(self, tokens: Iterable[Token]) -> None:
        for token in tokens:
            self.observe(token)

    def estimate(self) -> int:
        """``len(buffer) * 2**level``, exact."""
        return len(self._buffer) << self.level


def estimate_distinct(tokens: Iterable[Token], capacity: int, seed: int, on_full: str = "fail") -> int:
    counter = DistinctCounter(capacity, seed, on_full)
    counter.observe_all(tokens)
    return counter.estimate()
