import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ferryline.policies import POLICY_KEYS, AboveMean, AboveMedian, FixedThreshold, make_policy
from ferryline.world import percentile_nearest_rank

from . import oracles


def run(policy, stream):
    return [policy.decide(d) for d in stream]


def test_threshold_boundary():
    assert FixedThreshold(3000).decide(3000)
    assert not FixedThreshold(3000).decide(3001)


def test_mean_examples():
    p = AboveMean()
    assert p.decide(600) and p.mean == 600
    assert not p.decide(600)
    assert p.decide(480) and p.mean == 540


def test_median_examples():
    p = AboveMedian()
    assert p.decide(600) and p.median == 600 and p.accepted_count == 1
    assert p.decide(480) and p.accepted_count == 2 and p.median == 600
    assert p.decide(540) and p.accepted_count == 3 and p.median == 540


def test_make_policy():
    assert isinstance(make_policy("low", 1, 2), FixedThreshold)
    assert make_policy("high", 1, 2).tau == 2
    assert isinstance(make_policy("mean"), AboveMean)
    assert isinstance(make_policy("median"), AboveMedian)
    with pytest.raises(ValueError):
        make_policy("best")
    with pytest.raises(ValueError):
        make_policy("low")


def test_exhaustive_against_oracle():
    # all 3^10 streams over {1,2,3}; thresholds 1 and 2 stand in for low/high
    for stream in itertools.product((1, 2, 3), repeat=10):
        assert run(FixedThreshold(1), stream) == oracles.threshold_decisions(stream, 1)
        assert run(FixedThreshold(2), stream) == oracles.threshold_decisions(stream, 2)
        assert run(AboveMean(), stream) == oracles.mean_decisions(stream)
        assert run(AboveMedian(), stream) == oracles.median_decisions(stream)


streams = st.lists(st.integers(1, 5000), min_size=1, max_size=80)


@given(streams, st.randoms(use_true_random=False))
def test_threshold_memoryless(stream, rnd):
    shuffled = list(stream)
    rnd.shuffle(shuffled)
    tau = stream[0]
    acc = sorted(d for d in stream if FixedThreshold(tau).decide(d))
    acc2 = sorted(d for d in shuffled if FixedThreshold(tau).decide(d))
    assert acc == acc2


@given(streams)
def test_mean_is_exact_and_decreasing(stream):
    p = AboveMean()
    accepted, means = [], []
    for d in stream:
        before = p.mean
        if p.decide(d):
            if before is not None:
                assert d < before
            accepted.append(d)
            assert p.mean == Fraction(sum(accepted), len(accepted))
            means.append(p.mean)
    assert all(a > b for a, b in zip(means, means[1:]))


@given(streams)
def test_median_changes_only_at_odd_counts(stream):
    p = AboveMedian()
    medians = []
    for d in stream:
        before = p.median
        if p.decide(d) and p.accepted_count % 2 == 0:
            assert p.median == before
        medians.append(p.median)
    assert all(a >= b for a, b in zip(medians, medians[1:]))


def test_low_threshold_accepts_about_two_percent():
    rng = random.Random(11)
    delays = [rng.randint(60, 7200) for _ in range(20_000)]
    tau = percentile_nearest_rank(delays, 2)
    rate = sum(FixedThreshold(tau).decide(d) for d in delays) / len(delays)
    assert rate == pytest.approx(0.02, abs=0.002)


def test_policy_keys_order():
    assert POLICY_KEYS == ("low", "high", "mean", "median")
