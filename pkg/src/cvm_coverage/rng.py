"""Reproducible random words for the samplers.

Every random decision a sampler makes is read from a single sequential stream
of 64-bit words produced by Philox-4x64-10 keyed directly with the user seed
(counter starting at zero).  Philox is counter based, so the word sequence is
identical on every platform and independent of how the words are fetched in
blocks.

Word consumption rules (shared by all samplers):

* admission at level ``k``: ``k == 0`` consumes nothing and always admits;
  otherwise ``ceil(k / 64)`` words are consumed and the element is admitted
  iff the low ``k`` bits of their concatenation are all zero ("k heads").
* halving: one word per buffer entry, in buffer order; the entry is retained
  iff the word's lowest bit is zero.
"""

from __future__ import annotations

import numpy as np

RNG_ALGORITHM = "philox4x64-10/key=seed/counter=0/uint64-words"

MASK64 = (1 << 64) - 1

_FIRST_BLOCK = 16
_MAX_BLOCK = 1 << 16


def splitmix64(x: int) -> int:
    """One SplitMix64 output step for state ``x``."""
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(base_seed: int, *path: int) -> int:
    """Mix a base seed with integer coordinates into an independent 64-bit seed.

    ``derive_seed(b, i, j) == splitmix64(splitmix64(splitmix64(b) ^ i) ^ j)``.
    The result depends only on its arguments, so replications can be run in
    any order or in parallel.
    """
    z = splitmix64(base_seed & MASK64)
    for p in path:
        z = splitmix64(z ^ (p & MASK64))
    return z


def check_seed(seed: int) -> int:
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    seed = int(seed)
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
    return seed


class WordStream:
    """Sequential uint64 words from a Philox generator.

    Words can be consumed one at a time (:meth:`next_word`), in bulk
    (:meth:`take`), or inspected ahead of consumption (:meth:`peek` then
    :meth:`skip`).  All three views address the same underlying sequence.
    """

    __slots__ = ("seed", "_bitgen", "_buf", "_pos", "_block", "consumed")

    def __init__(self, seed: int):
        self.seed = check_seed(seed)
        self._bitgen = np.random.Philox(key=self.seed)
        self._buf = np.empty(0, dtype=np.uint64)
        self._pos = 0
        self._block = _FIRST_BLOCK
        self.consumed = 0

    def _ensure(self, n: int) -> None:
        avail = len(self._buf) - self._pos
        if avail >= n:
            return
        # refills grow geometrically so short runs stay cheap
        fresh = self._bitgen.random_raw(max(n - avail, self._block))
        self._block = min(self._block * 2, _MAX_BLOCK)
        if avail:
            self._buf = np.concatenate((self._buf[self._pos:], fresh))
        else:
            self._buf = fresh
        self._pos = 0

    def next_word(self) -> int:
        if self._pos >= len(self._buf):
            self._ensure(1)
        w = int(self._buf[self._pos])
        self._pos += 1
        self.consumed += 1
        return w

    def peek(self, n: int) -> np.ndarray:
        """The next ``n`` words, without consuming them."""
        self._ensure(n)
        return self._buf[self._pos:self._pos + n]

    def skip(self, n: int) -> None:
        self._ensure(n)
        self._pos += n
        self.consumed += n

    def take(self, n: int) -> np.ndarray:
        words = self.peek(n).copy()
        self._pos += n
        self.consumed += n
        return words

    def heads(self, k: int) -> bool:
        """Consume the words for one admission draw at level ``k``."""
        if k == 0:
            return True
        if k <= 64:
            return self.next_word() & ((1 << k) - 1) == 0
        hit = True
        full, rest = divmod(k, 64)
        for _ in range(full):
            hit &= self.next_word() == 0
        if rest:
            hit &= self.next_word() & ((1 << rest) - 1) == 0
        return hit
