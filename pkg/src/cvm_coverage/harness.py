"""Monte-Carlo experiment: estimated vs. true coverage across buffer sizes.

For buffer size ``sizes[i]`` and replication ``j`` the sampler seed is
``derive_seed(base_seed, i, j)``, so every row is a pure function of the
configuration and the corpus, whatever order (or process) computes it.
"""

from __future__ import annotations

import csv
import io
import math
import os
import statistics
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

from .coverage import CoverageOracle, DenominatorPolicy, estimate_coverage
from .ingestion import NormalizationPolicy
from .rng import RNG_ALGORITHM, check_seed, derive_seed
from .sampler import CoverageSampler, RetentionFailure

DEFAULT_SIZES = (100, 250, 500, 1000, 2000)

ROW_COLUMNS = (
    "buffer_size",
    "replication",
    "seed",
    "estimate",
    "true_coverage",
    "difference",
    "retention_failure",
)

SUMMARY_COLUMNS = (
    "buffer_size",
    "replications",
    "mean_difference",
    "sd_difference",
    "mean_abs_difference",
    "mean_estimate",
    "true_coverage",
    "failure_count",
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    buffer_sizes: tuple[int, ...] = DEFAULT_SIZES
    replications: int = 1000
    base_seed: int = 0
    denominator: DenominatorPolicy = DenominatorPolicy.REALIZED
    normalization: NormalizationPolicy = field(default_factory=NormalizationPolicy)
    corpus: str = "bundled"
    pretokenized: bool = False

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.buffer_sizes)
        if not sizes:
            raise ConfigError("buffer_sizes must not be empty")
        if any(n < 1 for n in sizes):
            raise ConfigError("buffer sizes must be positive")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ConfigError("buffer sizes must be strictly increasing")
        if self.replications < 1:
            raise ConfigError("replications must be positive")
        object.__setattr__(self, "buffer_sizes", sizes)
        object.__setattr__(self, "base_seed", check_seed(self.base_seed))
        object.__setattr__(self, "denominator", DenominatorPolicy(self.denominator))

    def check_corpus_length(self, length: int) -> None:
        if length == 0:
            raise ConfigError("corpus is empty")
        too_big = [n for n in self.buffer_sizes if n >= length]
        if too_big:
            # never halves: the sample is the whole corpus
            warnings.warn(
                f"buffer sizes {too_big} are not smaller than the corpus ({length} tokens)",
                stacklevel=3,
            )

    def items(self) -> list[tuple[str, str]]:
        """Flat key/value form, as accepted by :func:`parse_config`."""
        return [
            ("sizes", ",".join(map(str, self.buffer_sizes))),
            ("reps", str(self.replications)),
            ("seed", str(self.base_seed)),
            ("denominator", self.denominator.value),
            ("lowercase", str(int(self.normalization.lowercase))),
            ("strip_punctuation", str(int(self.normalization.strip_punctuation))),
            ("unicode_nfc", str(int(self.normalization.unicode_nfc))),
            ("input", self.corpus),
            ("pretokenized", str(int(self.pretokenized))),
            ("rng", RNG_ALGORITHM),
            ("seed_derivation", "splitmix64(splitmix64(splitmix64(seed)^size_index)^replication)"),
        ]


_BOOL = {"1": True, "true": True, "yes": True, "on": True,
         "0": False, "false": False, "no": False, "off": False}


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Parse a flat ``key=value`` config (``#`` comments, blank lines ok).

    Keys are those written by :meth:`ExperimentConfig.items`; ``rng`` and
    ``seed_derivation`` are informational and must match this build.
    """
    base = base or ExperimentConfig()
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = value

    def flag(key: str, default: bool) -> bool:
        if key not in values:
            return default
        try:
            return _BOOL[values.pop(key).lower()]
        except KeyError:
            raise ConfigError(f"{key}: expected a boolean") from None

    try:
        sizes = base.buffer_sizes
        if "sizes" in values:
            sizes = parse_sizes(values.pop("sizes"))
        reps = int(values.pop("reps", base.replications))
        seed = int(values.pop("seed", base.base_seed))
        denominator = values.pop("denominator", base.denominator)
        norm = NormalizationPolicy(
            lowercase=flag("lowercase", base.normalization.lowercase),
            strip_punctuation=flag("strip_punctuation", base.normalization.strip_punctuation),
            unicode_nfc=flag("unicode_nfc", base.normalization.unicode_nfc),
        )
        pretok = flag("pretokenized", base.pretokenized)
        corpus = values.pop("input", base.corpus)
        rng = values.pop("rng", RNG_ALGORITHM)
        values.pop("seed_derivation", None)
        if rng != RNG_ALGORITHM:
            raise ConfigError(f"config was produced with rng {rng!r}, this build uses {RNG_ALGORITHM!r}")
        if values:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(values))}")
        return ExperimentConfig(sizes, reps, seed, denominator, norm, corpus, pretok)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


def parse_sizes(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise ConfigError(f"bad size list {text!r}") from None


@dataclass(frozen=True)
class ExperimentRow:
    buffer_size: int
    replication: int
    seed: int
    estimate: float
    true_coverage: float
    difference: float
    retention_failure: bool


@dataclass(frozen=True)
class SummaryRow:
    buffer_size: int
    replications: int
    mean_difference: float | None
    sd_difference: float | None
    mean_abs_difference: float | None
    mean_estimate: float | None
    true_coverage: float | None
    failure_count: int


def run_replication(
    tokens: Sequence,
    oracle: CoverageOracle,
    buffer_size: int,
    size_index: int,
    replication: int,
    base_seed: int,
    denominator: DenominatorPolicy = DenominatorPolicy.REALIZED,
) -> ExperimentRow:
    seed = derive_seed(base_seed, size_index, replication)
    sampler = CoverageSampler(buffer_size, seed)
    try:
        sampler.observe_all(tokens)
    except RetentionFailure:
        nan = math.nan
        return ExperimentRow(buffer_size, replication, seed, nan, nan, nan, True)
    sample = sampler.finalize()
    estimate = estimate_coverage(sample, denominator).estimate
    true = oracle(sample).value
    return ExperimentRow(buffer_size, replication, seed, estimate, true, estimate - true, False)


# per-process corpus for the worker pool
_worker: dict = {}


def _init_worker(tokens: Sequence) -> None:
    _worker["tokens"] = tokens
    _worker["oracle"] = CoverageOracle(tokens)


def _run_block(args) -> list[ExperimentRow]:
    size_index, buffer_size, reps, base_seed, denominator = args
    tokens, oracle = _worker["tokens"], _worker["oracle"]
    return [
        run_replication(tokens, oracle, buffer_size, size_index, j, base_seed, denominator)
        for j in reps
    ]


def run_experiment(
    config: ExperimentConfig,
    tokens: Sequence,
    workers: int = 1,
    progress=None,
) -> list[ExperimentRow]:
    """Run every (buffer size, replication) pair over ``tokens``.

    Rows come back ordered by buffer size, then replication, and are
    identical for any ``workers`` count.  Replications that hit a retention
    failure are kept as flagged rows.

    Args:
        config: Experiment settings.
        tokens: The already-tokenized corpus, shared read-only.
        workers: Process count; 1 runs in-process.
        progress: Optional callable invoked with each finished buffer size.
    """
    tokens = list(tokens)
    config.check_corpus_length(len(tokens))
    blocks = []
    step = max(1, config.replications // max(1, 4 * workers))
    for i, n in enumerate(config.buffer_sizes):
        for start in range(0, config.replications, step):
            reps = range(start, min(start + step, config.replications))
            blocks.append((i, n, reps, config.base_seed, config.denominator))

    rows: list[ExperimentRow] = []
    if workers <= 1:
        _init_worker(tokens)
        try:
            for block in blocks:
                rows.extend(_run_block(block))
                if progress and block[2].stop == config.replications:
                    progress(block[1])
        finally:
            _worker.clear()
    else:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(tokens,)) as pool:
            for block, block_rows in zip(blocks, pool.map(_run_block, blocks)):
                rows.extend(block_rows)
                if progress and block[2].stop == config.replications:
                    progress(block[1])
    return rows


def default_workers() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def summarize(rows: Iterable[ExperimentRow]) -> list[SummaryRow]:
    """Per-size statistics over the non-failed replications.

    The standard deviation uses the ``R - 1`` divisor and is ``None`` with
    fewer than two successful replications; every statistic is ``None`` when
    all replications failed.
    """
    by_size: dict[int, list[ExperimentRow]] = {}
    for row in rows:
        by_size.setdefault(row.buffer_size, []).append(row)
    if not by_size:
        raise ValueError("no rows to summarize")
    out = []
    for n in sorted(by_size):
        group = by_size[n]
        ok = [r for r in group if not r.retention_failure]
        failures = len(group) - len(ok)
        if not ok:
            out.append(SummaryRow(n, len(group), None, None, None, None, None, failures))
            continue
        diffs = [r.difference for r in ok]
        out.append(
            SummaryRow(
                buffer_size=n,
                replications=len(group),
                mean_difference=statistics.fmean(diffs),
                sd_difference=statistics.stdev(diffs) if len(diffs) > 1 else None,
                mean_abs_difference=statistics.fmean(abs(d) for d in diffs),
                mean_estimate=statistics.fmean(r.estimate for r in ok),
                true_coverage=statistics.fmean(r.true_coverage for r in ok),
                failure_count=failures,
            )
        )
    return out


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return "" if math.isnan(value) else format(value, ".10g")
    return str(value)


def emit_csv(records: Iterable[ExperimentRow | SummaryRow], out: TextIO, kind: str | None = None) -> None:
    """Write rows (or summary rows) as CSV with a header line.

    Floats carry 10 significant digits; missing values are empty fields.
    ``kind`` ("rows" or "summary") picks the header for an empty input.
    """
    records = list(records)
    if kind is None:
        kind = "summary" if records and isinstance(records[0], SummaryRow) else "rows"
    columns = SUMMARY_COLUMNS if kind == "summary" else ROW_COLUMNS
    writer = csv.writer(out, lineterminator="\r\n")
    writer.writerow(columns)
    for rec in records:
        writer.writerow([_fmt(getattr(rec, c)) for c in columns])


def csv_text(records, kind: str | None = None) -> str:
    buf = io.StringIO()
    emit_csv(records, buf, kind)
    return buf.getvalue()


def read_rows_csv(src: TextIO) -> list[ExperimentRow]:
    reader = csv.DictReader(src)
    if tuple(reader.fieldnames or ()) != ROW_COLUMNS:
        raise ValueError(f"unexpected columns {reader.fieldnames}")

    def num(s: str) -> float:
        return float(s) if s else math.nan

    return [
        ExperimentRow(
            buffer_size=int(r["buffer_size"]),
            replication=int(r["replication"]),
            seed=int(r["seed"]),
            estimate=num(r["estimate"]),
            true_coverage=num(r["true_coverage"]),
            difference=num(r["difference"]),
            retention_failure=r["retention_failure"] == "1",
        )
        for r in reader
    ]


def summary_table(summary: Sequence[SummaryRow]) -> str:
    """Fixed-width text table for terminals."""
    header = ("n", "reps", "mean diff", "sd diff", "mean |diff|", "mean est", "true C", "fail")
    lines = ["{:>6} {:>5} {:>11} {:>10} {:>11} {:>9} {:>9} {:>5}".format(*header)]

    def f(x, spec):
        return "-" if x is None else format(x, spec)

    for s in summary:
        lines.append(
            "{:>6} {:>5} {:>11} {:>10} {:>11} {:>9} {:>9} {:>5}".format(
                s.buffer_size, s.replications, f(s.mean_difference, "+.5f"),
                f(s.sd_difference, ".5f"), f(s.mean_abs_difference, ".5f"),
                f(s.mean_estimate, ".5f"), f(s.true_coverage, ".5f"), s.failure_count,
            )
        )
    return "\n".join(lines)


__all__ = [
    "ExperimentConfig", "ExperimentRow", "SummaryRow", "run_experiment", "summarize",
    "emit_csv", "read_rows_csv", "parse_config", "summary_table",
]
