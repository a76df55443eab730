import math

import numpy as np
import pytest

from app.core import dimensional
from app.core.dimensional import (
    bridge_check,
    hB_bisect,
    hB_laws_check,
    language_tree,
    m_value,
    m_value_families,
    n_value,
    reblock_tree,
    single_branch,
    typical_tree,
    verify_nonuniform_mdp,
    verify_uniform_mdp,
)
from app.core.errors import (
    DepthMismatch,
    InadmissibleWord,
    KExceedsDepth,
    PreconditionError,
    SchemaError,
    ZeroMass,
)
from app.core.measures import ProductMeasure, binary_entropy
from app.core.subsets import CylinderTree, random_tree
from app.core.symbolic import Subshift

LOG2 = math.log(2)


def test_n_value(full2, golden):
    assert n_value(full2, (0, 1, 0)) == 3
    assert n_value(Subshift.full(3), (2, 2)) == 2
    # 2 must be followed by 0
    forced = Subshift(3, frozenset({(2, 1), (2, 2)}))
    assert n_value(forced, (2,)) == 2
    assert n_value(golden, (0, 1)) == 3
    with pytest.raises(InadmissibleWord):
        n_value(golden, (1, 1))


def test_m_value_closed_forms(full2):
    tree = language_tree(full2, 10)
    for k in (1, 5, 10):
        assert m_value(tree, LOG2, k) == pytest.approx(1.0)
    assert m_value(tree, LOG2 + 0.1, 10) == pytest.approx(math.exp(-1.0))
    branch = single_branch((0, 1, 1, 0, 1))
    assert m_value(branch, 0.3, 1) == pytest.approx(math.exp(-0.3 * 5))
    with pytest.raises(KExceedsDepth):
        m_value(branch, 0.3, 6)


def test_m_value_monotonicity_and_families(full2, rng):
    for _ in range(10):
        tree = random_tree(full2, 8, rng)
        for lam in (0.2, 0.5, 0.7):
            by_k = [m_value(tree, lam, k) for k in range(1, 9)]
            assert all(a <= b + 1e-12 for a, b in zip(by_k, by_k[1:]))
            assert m_value(tree, lam + 0.1, 3) <= m_value(tree, lam, 3) + 1e-12
            assert m_value(tree, lam, 3) == pytest.approx(m_value_families(tree, lam, 3), rel=1e-9)


def test_bisection_brackets(full2, golden):
    result = hB_bisect(language_tree(full2, 16))
    assert result.lambda_low <= result.lambda_high <= result.lambda_low + 1e-6
    assert result.lambda_low == pytest.approx(LOG2, abs=2e-6)
    assert [k for k, _, _ in result.k_trace] == [1, 8, 16]
    assert hB_bisect(single_branch((1, 0, 1, 1))).lambda_low == 0.0
    assert hB_bisect(language_tree(golden, 16)).lambda_low == pytest.approx(0.481212, abs=0.05)


def test_bisection_needs_positive_tolerance(full2):
    with pytest.raises(PreconditionError):
        hB_bisect(language_tree(full2, 4), tol=0.0)


def test_bridge_chain(full2, rng):
    for _ in range(20):
        assert bridge_check(random_tree(full2, 12, rng)).ok
    report = bridge_check(language_tree(full2, 12))
    assert report.hB_low == pytest.approx(LOG2, abs=2e-6)
    assert report.cover_slope == pytest.approx(LOG2, abs=1e-9)
    assert report.separated_slope == pytest.approx(LOG2, abs=1e-9)
    assert report.growth == pytest.approx(LOG2, abs=1e-9)
    singleton = bridge_check(single_branch((0,) * 6))
    assert (singleton.hB_low, singleton.cover_slope, singleton.separated_slope) == (0.0, 0.0, 0.0)
    # the bracket overshoots a crossing at the cover slope by its width only
    assert singleton.ok and 0.0 < singleton.hB_high <= 1e-6


def test_bridge_chain_catches_a_cover_slope_below_h_b(full2, monkeypatch):
    monkeypatch.setattr(dimensional, "cover_counts", lambda K, n_max: [1] * min(n_max, K.depth))
    report = bridge_check(language_tree(full2, 8))
    assert report.cover_slope == 0.0
    assert not report.ok


def test_union_law_holds_exactly_for_nested_parts(full2):
    whole = language_tree(full2, 12)
    report = hB_laws_check([whole, single_branch((0, 1) * 6, full2)], 2)
    assert report.union_ok and report.union_exact
    assert report.power_ok and report.power_exact
    assert report.power[0][0] == pytest.approx(2 * LOG2, abs=4e-6)


def test_union_law_on_disjoint_parts_bounds_below(full2):
    zeros = CylinderTree(0, 12, frozenset(w for w in full2.language(12) if w[0] == 0), full2)
    ones = single_branch((1,) * 12, full2)
    report = hB_laws_check([zeros, ones], 3)
    assert report.union_ok and report.power_ok
    assert report.union_excess >= 0.0
    assert report.parts[1] == 0.0


def test_laws_need_aligned_parts(full2):
    with pytest.raises(DepthMismatch):
        hB_laws_check([language_tree(full2, 6), language_tree(full2, 8)], 2)
    with pytest.raises(DepthMismatch):
        hB_laws_check([language_tree(full2, 7)], 2)


def test_reblocking(full2):
    tree = reblock_tree(language_tree(full2, 6), 3)
    assert tree.ambient.alphabet == 8
    assert tree.depth == 2
    assert len(tree.words) == 64


def test_uniform_mass_distribution(full2, rng):
    fair = ProductMeasure.bernoulli([0.5, 0.5])
    for _ in range(10):
        report = verify_uniform_mdp(fair, random_tree(full2, 10, rng), 1.0, LOG2)
        assert report.holds and report.ok
    biased = ProductMeasure.bernoulli([0.3, 0.7])
    ones = verify_uniform_mdp(biased, single_branch((1,) * 10, full2), 1.0, 0.36)
    assert ones.holds and ones.ok
    zeros = verify_uniform_mdp(biased, single_branch((0,) * 10, full2), 1.0, 0.36)
    assert not zeros.holds and zeros.ok is None
    assert zeros.witness == "0"


def test_nonuniform_mass_distribution(full2):
    fair = verify_nonuniform_mdp(ProductMeasure.bernoulli([0.5, 0.5]), language_tree(full2, 10), LOG2)
    assert fair.holds and fair.ok
    assert fair.constant == pytest.approx(1.0)
    typical = verify_nonuniform_mdp(ProductMeasure.bernoulli([0.7, 0.3]), typical_tree(0.3, 16, 0.05), 0.5)
    assert typical.ok
    assert binary_entropy(0.3) == pytest.approx(0.6109, abs=1e-4)
    branch = verify_nonuniform_mdp(ProductMeasure.bernoulli([0.5, 0.5]), single_branch((0,) * 10, full2), 0.1)
    assert branch.holds and not branch.ok
    assert branch.notes


def test_typical_tree_below_the_entropy_of_its_measure(full2):
    tree = typical_tree(0.3, 16, 0.05)
    # 4 or 5 ones out of 16: log(1820 + 4368) / 16 < 0.55 < H(0.3)
    assert len(tree.words) == 6188
    strict = verify_nonuniform_mdp(ProductMeasure.bernoulli([0.7, 0.3]), tree, 0.55)
    assert strict.holds and not strict.ok
    assert strict.estimate < math.log(6188) / 16 + 1e-6
    assert any(note.startswith("hypothesis holds but h^B < d") for note in strict.notes)


def test_zero_mass_tree(full2):
    certain = ProductMeasure.bernoulli([1.0, 0.0])
    with pytest.raises(ZeroMass):
        verify_nonuniform_mdp(certain, single_branch((1,) * 4, full2), 0.1)


def test_measures_validate():
    with pytest.raises(SchemaError):
        ProductMeasure.bernoulli([0.5, 0.6])
    chain = ProductMeasure.markov([[0.5, 0.5], [1.0, 0.0]])
    assert chain.mass((1, 1)) == 0.0
    assert np.isclose(chain.mass((0,)) + chain.mass((1,)), 1.0)
