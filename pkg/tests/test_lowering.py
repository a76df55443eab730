import math

import pytest
import sympy

from app.core.entropy import growth_estimate
from app.core.errors import (
    InadmissibleInput,
    NotMixing,
    SourceCapacityExceeded,
    SourceUnavailable,
    TargetOutOfRange,
    UncertifiedTail,
    ZeroEntropyAmbient,
)
from app.core.fan import FanSet
from app.core.lowering import (
    LoweringCertificate,
    PointSource,
    counterexample_partition,
    entropy_point_family,
    entropy_point_value,
    exceeds_exp,
    family_estimate,
    fan_estimate,
    fan_lower,
    floor_exp,
    full_capacity_family,
    hul_lower,
    lemma_good_lower,
    zero_entropy_infinite,
)
from app.core.subsets import FinitePointSet, StagedFamily, SubshiftSet, validate_staged
from app.core.symbolic import BiInfinitePoint, Subshift, separation_window

LOG2 = math.log(2)
X0 = BiInfinitePoint.constant(0)

# two groups of symbols visited alternately: entropy log 2, period 2
ALTERNATING = Subshift(4, frozenset({(a, b) for a in (0, 1) for b in (0, 1)} | {(a, b) for a in (2, 3) for b in (2, 3)}))


@pytest.fixture
def source(full2) -> PointSource:
    return PointSource(full2, X0, 2)


def test_floor_exp_is_exact():
    assert floor_exp(1, 0.2) == 1
    assert floor_exp(10, 0.2) == 7
    # the float nearest log(2)/2 sits just below it
    assert floor_exp(26, LOG2 / 2) == 8191
    assert exceeds_exp(8, 10, 0.2)
    assert not exceeds_exp(7, 10, 0.2)
    assert not exceeds_exp(0, 3, 0.1)


@pytest.mark.parametrize("l, h, exponent", [(901, 0.6, sympy.Rational(2703, 5)), (1601, 0.5, sympy.Rational(1601, 2))])
def test_floor_exp_with_hundreds_of_digits(l, h, exponent):
    value = floor_exp(l, h)
    assert value == int(sympy.exp(exponent).evalf(400))
    assert len(str(value)) == int(l * h / math.log(10)) + 1
    assert exceeds_exp(value + 1, l, h) and not exceeds_exp(value, l, h)


def test_point_source_preconditions(full2, golden):
    with pytest.raises(InadmissibleInput):
        PointSource(golden, BiInfinitePoint.constant(1), 2)
    with pytest.raises(NotMixing):
        PointSource(Subshift(2, frozenset({(0, 0), (1, 1)})), BiInfinitePoint.periodic((0, 1)), 2)
    with pytest.raises(ZeroEntropyAmbient):
        PointSource(Subshift(1), X0, 2)
    assert PointSource(golden, X0, 2).capacity == pytest.approx(0.481212, abs=1e-6)


def test_entropy_point_family(full2):
    src = entropy_point_family(full2, X0, 3)
    assert src.resolution == 3
    assert src.capacity == pytest.approx(LOG2, abs=1e-9)
    # blocks on [-2, 1] other than the limit's own
    assert src.available(-3, 1) == 15
    assert src.available(2, 2) == 0


def test_entropy_point_value(source):
    est = entropy_point_value(source)
    assert est.tag == "capacity"
    assert est.value == pytest.approx(LOG2, abs=1e-9)
    assert est.counts[:3] == (8, 16, 32)


@pytest.mark.parametrize("h", [0.2, LOG2 / 2, 0.6])
def test_lemma_certificate_holds(source, h):
    F, cert = lemma_good_lower(source, h)
    assert len(F.stages) >= 5
    assert cert.ok and cert.identity_ok
    assert cert.floors == tuple(floor_exp(l, h) for l in cert.lengths)
    for i, (floor_l, total) in enumerate(zip(cert.floors, cert.cumulative), start=1):
        assert total == floor_l + i
    for bound in cert.bounds:
        assert bound.lower <= bound.count <= bound.upper
    assert validate_staged(F).ok
    assert abs(family_estimate(F).value - h) <= 0.05


def test_lemma_stage_lengths(source):
    F, _ = lemma_good_lower(source, 0.2)
    assert F.lengths == [1, 3, 6, 10, 15, 22, 33, 48]
    assert F.horizon == 49
    assert F.open_tail


def test_lemma_counts_between_stages(source):
    F, cert = lemma_good_lower(source, 0.3, max_stages=5)
    for n, l_n in enumerate(F.lengths, start=1):
        s = F.window_count(separation_window(l_n, 2))
        assert cert.floors[n - 1] + n <= s <= cert.floors[n - 1] + n + 1


def test_lemma_in_the_golden_mean(golden):
    src = PointSource(golden, X0, 2)
    F, cert = lemma_good_lower(src, 0.3, max_stages=6)
    assert cert.ok
    assert abs(family_estimate(F).value - 0.3) <= 0.05


def test_lemma_target_range(source):
    with pytest.raises(TargetOutOfRange):
        lemma_good_lower(source, 0.0)
    with pytest.raises(SourceCapacityExceeded):
        lemma_good_lower(source, 0.7)


def test_full_capacity_family(source):
    F = full_capacity_family(source)
    assert F.lengths == [1, 96, 3136]
    assert family_estimate(F).value >= LOG2 - 0.05


def test_zero_entropy_infinite(source):
    F = zero_entropy_infinite(source, 0.6)
    assert F.open_tail and F.resolution == 5
    assert validate_staged(F).ok
    assert [r.level for r in F.certificate] == [1, 2, 3, 4]
    assert [r.resolution for r in F.certificate] == [2, 3, 4, 5]
    # each stored length sees exactly the representatives built so far
    for m in range(2, 6):
        counts = [F.window_count(separation_window(l, m)) for l in F.lengths]
        assert counts == [2, 3, 4, 5]
        assert all(math.log(s) / l <= 0.6 / k for k, (s, l) in enumerate(zip(counts, F.lengths), start=1))
        assert all(math.log(s) / l < 0.05 for s, l in zip(counts[1:], F.lengths[1:]))
        assert growth_estimate(F, m, 20).value < 0.05
    with pytest.raises(UncertifiedTail):
        F.window_count(separation_window(F.horizon + 5, 2))


def test_zero_entropy_needs_a_target_below_capacity(source):
    with pytest.raises(SourceCapacityExceeded):
        zero_entropy_infinite(source, 0.9)


def test_hul_lower_dispatch(full2):
    whole = SubshiftSet(full2)
    single = hul_lower(whole, 0.0, full2)
    assert isinstance(single, FinitePointSet) and len(single.points) == 1
    F = hul_lower(whole, 0.3, full2)
    assert isinstance(F, StagedFamily)
    assert isinstance(F.certificate, LoweringCertificate)
    assert abs(family_estimate(F).value - 0.3) <= 0.05
    top = hul_lower(whole, LOG2, full2)
    assert top.lengths == [1, 96, 3136]
    assert hul_lower(F, 0.3, full2) is F


def test_hul_lower_refusals(full2):
    whole = SubshiftSet(full2)
    with pytest.raises(TargetOutOfRange):
        hul_lower(whole, 0.8, full2)
    with pytest.raises(TargetOutOfRange):
        hul_lower(whole, -0.1, full2)
    finite = FinitePointSet(frozenset({X0}), full2)
    with pytest.raises(TargetOutOfRange):
        hul_lower(finite, 0.3, full2)
    F, _ = lemma_good_lower(PointSource(full2, X0, 2), 0.3)
    with pytest.raises(SourceUnavailable, match="a staged set offers no mixing source to lower from"):
        hul_lower(F, 0.1, full2)
    with pytest.raises(SourceUnavailable, match="is not mixing"):
        hul_lower(SubshiftSet(ALTERNATING), 0.3, ALTERNATING)


@pytest.mark.parametrize("h", [0.0, 0.3, 0.5, LOG2])
def test_fan_lower_hits_targets(h):
    lowered = fan_lower(FanSet.whole(), h)
    assert abs(fan_estimate(lowered).value - h) <= 0.05
    assert lowered.apex


def test_fan_lower_refuses_targets_above_log2():
    with pytest.raises(TargetOutOfRange):
        fan_lower(FanSet.whole(), 0.9)


def test_counterexample_partition(source):
    blocks, report = counterexample_partition(source, 0.3)
    assert len(blocks) == 8
    assert all(len(block.stages) == 1 for block in blocks)
    assert report.blocks_ok and report.thinned_ok and report.union_ok
    assert report.ok
    assert report.notes == ["finite-horizon evidence only"]
    with pytest.raises(TargetOutOfRange):
        counterexample_partition(source, 0.0)
