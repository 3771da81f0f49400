"""Turning text into token streams.

Two input formats are supported:

* raw text, split on Unicode whitespace and normalized per
  :class:`NormalizationPolicy`;
* pre-tokenized text, one label per line, taken verbatim (blank lines are
  skipped).

Both readers are generators over fixed-size byte chunks, so memory use does
not grow with the input.
"""

from __future__ import annotations

import codecs
import gzip
import io
import sys
import unicodedata
from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass
from importlib import resources
from typing import BinaryIO, Iterable, Iterator

_READ_SIZE = 1 << 16

BUNDLED_CORPUS = "canterbury_literary.txt.gz"
BUNDLED_CORPUS_DESCRIPTION = (
    "Alice's Adventures in Wonderland (Carroll), As You Like It (Shakespeare) "
    "and Paradise Lost (Milton); public-domain texts from the Canterbury corpus"
)


class DecodeError(ValueError):
    def __init__(self, offset: int, reason: str):
        self.offset = offset
        super().__init__(f"invalid UTF-8 at byte offset {offset}: {reason}")


@dataclass(frozen=True)
class NormalizationPolicy:
    lowercase: bool = True
    strip_punctuation: bool = True
    unicode_nfc: bool = True

    def describe(self) -> str:
        return (
            f"lowercase={int(self.lowercase)},"
            f"strip_punctuation={int(self.strip_punctuation)},"
            f"unicode_nfc={int(self.unicode_nfc)}"
        )

    def apply(self, word: str) -> str:
        if self.unicode_nfc:
            word = unicodedata.normalize("NFC", word)
        if self.lowercase:
            word = word.lower()
        if self.strip_punctuation:
            word = _strip_punct(word)
        return word


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _strip_punct(word: str) -> str:
    start, end = 0, len(word)
    while start < end and _is_punct(word[start]):
        start += 1
    while end > start and _is_punct(word[end - 1]):
        end -= 1
    return word[start:end]


def _decoded_chunks(stream: BinaryIO) -> Iterator[str]:
    decoder = codecs.getincrementaldecoder("utf-8")("strict")
    offset = 0
    while True:
        raw = stream.read(_READ_SIZE)
        final = not raw
        pending = len(decoder.getstate()[0])
        try:
            text = decoder.decode(raw, final=final)
        except UnicodeDecodeError as exc:
            raise DecodeError(offset - pending + exc.start, exc.reason) from None
        offset += len(raw)
        if text:
            yield text
        if final:
            return


def tokenize(stream: BinaryIO, policy: NormalizationPolicy = NormalizationPolicy()) -> Iterator[str]:
    """Yield normalized word tokens from a UTF-8 byte stream.

    Raises:
        DecodeError: on malformed UTF-8, with the byte offset of the problem.
    """
    carry = ""
    for text in _decoded_chunks(stream):
        text = carry + text
        words = text.split()
        # a word touching the end of the chunk may continue in the next one
        if words and not text[-1].isspace():
            carry = words.pop()
        else:
            carry = ""
        for word in words:
            word = policy.apply(word)
            if word:
                yield word
    if carry:
        word = policy.apply(carry)
        if word:
            yield word


def read_pretokenized(stream: BinaryIO) -> Iterator[str]:
    """Yield one label per line; only the line terminator is removed."""
    carry = ""
    for text in _decoded_chunks(stream):
        lines = (carry + text).split("\n")
        carry = lines.pop()
        for line in lines:
            if line.endswith("\r"):
                line = line[:-1]
            if line:
                yield line
    if carry.endswith("\r"):
        carry = carry[:-1]
    if carry:
        yield carry


def tokenize_text(text: str, policy: NormalizationPolicy = NormalizationPolicy()) -> list[str]:
    return list(tokenize(io.BytesIO(text.encode("utf-8")), policy))


@contextmanager
def open_input(path: str):
    """Open a path (``-`` for stdin) as a binary stream; ``.gz`` is decompressed."""
    if path == "-":
        yield sys.stdin.buffer
        return
    with open(path, "rb") as fh:
        if path.endswith(".gz"):
            with gzip.GzipFile(fileobj=fh) as gz:
                yield gz
        else:
            yield fh


def iter_tokens(
    path: str,
    pretokenized: bool = False,
    policy: NormalizationPolicy = NormalizationPolicy(),
) -> Iterator[str]:
    with open_input(path) as fh:
        if pretokenized:
            yield from read_pretokenized(fh)
        else:
            yield from tokenize(fh, policy)


@contextmanager
def bundled_corpus_path():
    ref = resources.files("cvm_coverage") / "data" / BUNDLED_CORPUS
    with resources.as_file(ref) as path:
        yield str(path)


def load_bundled_corpus(policy: NormalizationPolicy = NormalizationPolicy()) -> list[str]:
    with bundled_corpus_path() as path:
        return list(iter_tokens(path, policy=policy))


@dataclass(frozen=True)
class StreamStats:
    length: int
    distinct: int
    top_frequencies: tuple[tuple[str, int], ...] = ()


def stream_stats(tokens: Iterable[str], top: int = 0) -> StreamStats:
    counts = Counter(tokens)
    length = sum(counts.values())
    return StreamStats(length, len(counts), tuple(counts.most_common(top)) if top else ())
