"""Command-line interface.

Exit codes: 0 success, 1 input/config error, 2 retention failure (⊥),
3 empty sample.
"""

from __future__ import annotations

import argparse
import secrets
import shutil
import sys
import tempfile
from contextlib import contextmanager

from .coverage import DenominatorPolicy, EmptySample, estimate_coverage, true_coverage
from .distinct import DistinctCounter
from .harness import (
    ConfigError,
    ExperimentConfig,
    emit_csv,
    parse_config,
    parse_sizes,
    run_experiment,
    summarize,
    summary_table,
)
from .ingestion import (
    BUNDLED_CORPUS,
    DecodeError,
    NormalizationPolicy,
    bundled_corpus_path,
    iter_tokens,
)
from .plot import KINDS, emit_plot
from .rng import MASK64, RNG_ALGORITHM
from .sampler import CoverageSampler, RetentionFailure

EXIT_OK, EXIT_INPUT, EXIT_FAILURE, EXIT_EMPTY = 0, 1, 2, 3


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value <= MASK64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _sizes(text: str) -> tuple[int, ...]:
    try:
        return parse_sizes(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvm-coverage",
        description="Estimate sample coverage of a token stream in fixed memory.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, input_default, denominator_default) -> argparse.ArgumentParser:
        p.add_argument("--input", default=input_default, metavar="PATH",
                       help="input file, '-' for stdin; .gz is decompressed")
        p.add_argument("--pretokenized", action="store_true",
                       help="input holds one label per line, used verbatim")
        p.add_argument("--seed", type=_u64, help="64-bit RNG seed (default: random, printed to stderr)")
        p.add_argument("--denominator", choices=[d.value for d in DenominatorPolicy],
                       default=denominator_default,
                       help="divide singletons by the realized sample size (default) or the capacity")
        p.add_argument("--no-lowercase", action="store_true")
        p.add_argument("--keep-punctuation", action="store_true")
        p.add_argument("--no-nfc", action="store_true", help="skip Unicode NFC normalization")
        return p

    helps = {
        "estimate": "single-pass coverage estimate of the input stream",
        "distinct": "single-pass CVM estimate of the number of distinct tokens",
        "oracle": "estimate plus exact true coverage (two passes; not streaming)",
    }
    for name, text in helps.items():
        p = common(sub.add_parser(name, help=text), "-", DenominatorPolicy.REALIZED.value)
        p.add_argument("--capacity", type=_positive, required=True, metavar="N", help="buffer size")
        if name == "distinct":
            p.add_argument("--rehalve", action="store_true",
                           help="halve again instead of failing when a halving frees nothing")

    # simulate leaves input/denominator unset so a --config file can supply them
    sim = common(sub.add_parser("simulate", help="repeated-sampling experiment over buffer sizes"),
                 None, None)
    sim.add_argument("--config", metavar="PATH", help="flat key=value config file; flags override it")
    sim.add_argument("--sizes", type=_sizes, help="comma-separated buffer sizes (default 100,250,500,1000,2000)")
    sim.add_argument("--reps", type=_positive, help="replications per size (default 1000)")
    sim.add_argument("--csv", metavar="PATH", help="write per-replication rows here")
    sim.add_argument("--summary-csv", metavar="PATH", help="write per-size summary here")
    sim.add_argument("--plot", metavar="PATH", help="write an SVG chart here")
    sim.add_argument("--plot-kind", choices=KINDS, default="error_bars")
    sim.add_argument("--workers", type=_positive, default=1, help="worker processes (default 1)")
    return parser


def _policy(args) -> NormalizationPolicy:
    return NormalizationPolicy(
        lowercase=not args.no_lowercase,
        strip_punctuation=not args.keep_punctuation,
        unicode_nfc=not args.no_nfc,
    )


def _seed(args) -> int:
    if args.seed is None:
        args.seed = secrets.randbits(64)
        print(f"generated seed: {args.seed}", file=sys.stderr)
    return args.seed


def _report(pairs) -> None:
    for key, value in pairs:
        print(f"{key}: {value}")


def _header(args, command: str) -> list[tuple[str, object]]:
    return [
        ("command", command),
        ("input", args.input),
        ("format", "pretokenized" if args.pretokenized else "text"),
        ("normalization", "verbatim" if args.pretokenized else _policy(args).describe()),
        ("capacity", args.capacity),
        ("seed", args.seed),
        ("rng", RNG_ALGORITHM),
    ]


def _num(x: float) -> str:
    return format(x, ".10g")


def _retention_failure(exc: RetentionFailure) -> int:
    print(f"⊥ {exc}; try a larger --capacity or another --seed", file=sys.stderr)
    return EXIT_FAILURE


def _sample(args, path: str):
    sampler = CoverageSampler(args.capacity, args.seed)
    sampler.observe_all(iter_tokens(path, args.pretokenized, _policy(args)))
    peak = sampler.peak_size
    return sampler.finalize(), peak


def cmd_estimate(args) -> int:
    _seed(args)
    _report(_header(args, "estimate") + [("denominator", args.denominator)])
    try:
        sample, peak = _sample(args, args.input)
    except RetentionFailure as exc:
        return _retention_failure(exc)
    _report([
        ("observed", sample.observed),
        ("level", sample.level),
        ("inclusion_probability", sample.inclusion_probability()),
        ("realized_size", sample.realized_size),
        ("peak_buffer", peak),
    ])
    est = estimate_coverage(sample, args.denominator)
    _report([
        ("singletons", est.singletons),
        ("denominator_value", est.denominator),
        ("coverage_estimate", _num(est.estimate)),
    ])
    return EXIT_OK


def cmd_distinct(args) -> int:
    _seed(args)
    on_full = "rehalve" if args.rehalve else "fail"
    _report(_header(args, "distinct") + [("on_full", on_full)])
    counter = DistinctCounter(args.capacity, args.seed, on_full)
    try:
        counter.observe_all(iter_tokens(args.input, args.pretokenized, _policy(args)))
    except RetentionFailure as exc:
        return _retention_failure(exc)
    _report([
        ("observed", counter.observed),
        ("level", counter.level),
        ("buffer_size", len(counter)),
        ("distinct_estimate", counter.estimate()),
    ])
    return EXIT_OK


@contextmanager
def _rereadable(path: str):
    """Yield a path that can be read twice, spilling stdin to a temp file."""
    if path != "-":
        yield path
        return
    with tempfile.NamedTemporaryFile(prefix="cvm-coverage-", suffix=".spill") as tmp:
        shutil.copyfileobj(sys.stdin.buffer, tmp)
        tmp.flush()
        yield tmp.name


def cmd_oracle(args) -> int:
    _seed(args)
    _report(_header(args, "oracle") + [("denominator", args.denominator)])
    with _rereadable(args.input) as path:
        try:
            sample, _ = _sample(args, path)
        except RetentionFailure as exc:
            return _retention_failure(exc)
        est = estimate_coverage(sample, args.denominator)
        truth = true_coverage(iter_tokens(path, args.pretokenized, _policy(args)), sample)
    _report([
        ("observed", sample.observed),
        ("level", sample.level),
        ("realized_size", sample.realized_size),
        ("singletons", est.singletons),
        ("coverage_estimate", _num(est.estimate)),
        ("true_coverage", _num(truth.value)),
        ("covered_positions", truth.covered_count),
        ("difference", _num(est.estimate - truth.value)),
    ])
    return EXIT_OK


def _experiment_config(args) -> ExperimentConfig:
    config = ExperimentConfig()
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            config = parse_config(fh.read())
    explicit = {}
    if args.sizes is not None:
        explicit["sizes"] = ",".join(map(str, args.sizes))
    if args.reps is not None:
        explicit["reps"] = str(args.reps)
    if args.seed is not None or not args.config:
        explicit["seed"] = str(_seed(args))
    if args.input is not None:
        explicit["input"] = args.input
    if args.pretokenized:
        explicit["pretokenized"] = "1"
    if args.denominator is not None:
        explicit["denominator"] = args.denominator
    if args.no_lowercase:
        explicit["lowercase"] = "0"
    if args.keep_punctuation:
        explicit["strip_punctuation"] = "0"
    if args.no_nfc:
        explicit["unicode_nfc"] = "0"
    text = "\n".join(f"{k}={v}" for k, v in explicit.items())
    return parse_config(text, base=config)


def _load_corpus(config: ExperimentConfig) -> list[str]:
    if config.corpus == "bundled":
        with bundled_corpus_path() as path:
            return list(iter_tokens(path, policy=config.normalization))
    return list(iter_tokens(config.corpus, config.pretokenized, config.normalization))


def cmd_simulate(args) -> int:
    config = _experiment_config(args)
    tokens = _load_corpus(config)
    _report([(k, v) for k, v in config.items()])
    if config.corpus == "bundled":
        _report([("corpus", BUNDLED_CORPUS)])
    _report([("corpus_tokens", len(tokens))])
    rows = run_experiment(config, tokens, workers=args.workers)
    summary = summarize(rows)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            emit_csv(rows, fh, kind="rows")
        with open(args.csv + ".meta", "w", encoding="utf-8") as fh:
            fh.write("".join(f"{k}={v}\n" for k, v in config.items()))
    if args.summary_csv:
        with open(args.summary_csv, "w", encoding="utf-8", newline="") as fh:
            emit_csv(summary, fh, kind="summary")
    if args.plot:
        emit_plot(summary, args.plot_kind, args.plot)
    print(summary_table(summary))
    return EXIT_OK


COMMANDS = {
    "estimate": cmd_estimate,
    "distinct": cmd_distinct,
    "oracle": cmd_oracle,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except EmptySample as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except (OSError, DecodeError, ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
