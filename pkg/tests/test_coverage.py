from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cvm_coverage.coverage import (
    CoverageOracle,
    DenominatorPolicy,
    EmptySample,
    count_singletons,
    estimate_coverage,
    true_coverage,
)
from cvm_coverage.sampler import SampleResult, sample_stream

from oracles import brute_coverage, singleton_recount


def _sample(tokens, capacity=None):
    tokens = tuple(tokens)
    return SampleResult(tokens, tuple(range(len(tokens))), 0, len(tokens),
                        capacity or max(len(tokens), 1), 0)


@pytest.mark.parametrize("tokens, expected", [("aabc", 2), ("", 0), ("aaa", 0)])
def test_count_singletons(tokens, expected):
    assert count_singletons(_sample(tokens)) == expected


def test_estimate_realized():
    est = estimate_coverage(_sample("aabc"))
    assert (est.singletons, est.denominator, est.estimate) == (2, 4, 0.5)
    assert est.policy is DenominatorPolicy.REALIZED


def test_estimate_capacity_policy():
    est = estimate_coverage(_sample("aabc", capacity=10), "capacity")
    assert est.denominator == 10 and est.exact == Fraction(4, 5)


def test_empty_sample():
    with pytest.raises(EmptySample):
        estimate_coverage(_sample(""))
    assert estimate_coverage(_sample("", capacity=5), DenominatorPolicy.CAPACITY).estimate == 1.0


def test_single_class_stream():
    stream = ["z"] * 9
    r = sample_stream(stream, 10, 3)
    assert estimate_coverage(r).estimate == 1.0
    assert true_coverage(stream, r).value == 1.0


def test_all_singletons():
    stream = [str(i) for i in range(12)]
    r = sample_stream(stream, 12 + 1, 3)
    est = estimate_coverage(r)
    assert (est.singletons, est.denominator, est.estimate) == (12, 12, 0.0)


def test_true_coverage_hand_example():
    stream = "abacba"
    tc = true_coverage(stream, "ab")
    assert (tc.covered_count, tc.stream_length) == (5, 6)
    assert tc.exact == Fraction(5, 6)


def test_true_coverage_edges():
    assert true_coverage("abacba", "abc").value == 1
    assert true_coverage("abacba", "").value == 0
    with pytest.raises(ValueError):
        true_coverage("", "a")
    with pytest.raises(ValueError):
        CoverageOracle([])


def test_membership_ignores_multiplicity():
    assert true_coverage("abacba", "aaaab") == true_coverage("abacba", "ab")


def test_true_coverage_exhaustive_small():
    # every stream up to length 6 over 4 labels, every label subset
    subsets = [tuple(c for c, bit in zip("abcd", bits) if bit) for bits in product((0, 1), repeat=4)]
    for length in range(1, 7):
        for stream in product("abcd", repeat=length):
            oracle = CoverageOracle(stream)
            for sub in subsets:
                expected = brute_coverage(stream, sub)
                tc = true_coverage(stream, sub)
                assert (tc.covered_count, tc.stream_length) == expected
                assert oracle(sub) == tc


@given(st.lists(st.sampled_from("abcdefgh"), min_size=1, max_size=80))
def test_estimate_identity(tokens):
    est = estimate_coverage(_sample(tokens))
    s = singleton_recount(tokens)
    assert est.singletons == s
    assert abs(est.estimate - (1 - s / len(tokens))) < 1e-12
    assert 0 <= est.singletons <= est.denominator


@given(
    st.lists(st.sampled_from("abcdef"), min_size=1, max_size=40),
    st.sets(st.sampled_from("abcdef")),
    st.sampled_from("abcdefg"),
)
def test_adding_a_label_never_lowers_coverage(stream, labels, extra):
    before = true_coverage(stream, labels).exact
    after = true_coverage(stream, labels | {extra}).exact
    assert after >= before
