"""
Tests for the core domain types, diversity constraints and scoring.

Covers:
- ActionVector / ConstraintSet / EliteSample validation
- NED and constraint construction, tau calibration
- Violation rate, top-K binarization, composite score
- Hyperparameters validation
"""

import numpy as np
import pytest
from pydantic import ValidationError

from core.diversity import build_constraints, ned, pairwise_ned, tau_for_count, violation_rate
from core.errors import DegenerateInputError, InvalidInputError
from core.scoring import binarize_top_k, composite_score
from core.types import ActionVector, ConstraintSet, EliteSample, FeatureMatrix, Hyperparameters, SamplerId


def test_action_vector_validation():
    """ActionVector holds exactly K binary entries"""
    print("\n" + "=" * 80)
    print("TEST 1: ActionVector Validation")
    print("=" * 80)

    a = ActionVector.from_indices(5, [0, 3])
    assert a.L == 5 and a.K == 2
    assert a.indices.tolist() == [0, 3]
    assert np.isclose(np.linalg.norm(a.normalized()), 1.0)
    assert a == ActionVector(np.array([1, 0, 0, 1, 0]))
    assert len({a, ActionVector.from_indices(5, [3, 0])}) == 1
    print("✅ Construction, equality and hashing")

    for bad in ([0, 0, 0], [1, 2, 0], [[1, 0]]):
        with pytest.raises(InvalidInputError):
            ActionVector(np.array(bad))
    with pytest.raises(InvalidInputError):
        ActionVector.from_indices(3, [0, 0])
    with pytest.raises(InvalidInputError):
        ActionVector.from_indices(3, [3])
    print("✅ Invalid vectors rejected")

    padded = a.normalized(pad_to=6)
    assert padded.shape == (6,) and padded[-1] == 0.0
    print("✅ Zero padding")


def test_ned_examples():
    """NED arithmetic on small vectors"""
    print("\n" + "=" * 80)
    print("TEST 2: NED Examples")
    print("=" * 80)

    assert ned([0.3, 0.7], [0.3, 0.7]) == 0.0
    assert ned([1, 0], [0, 1]) == pytest.approx(1.0)
    assert ned([0.5, 0.5], [0.1, 0.9]) == pytest.approx(0.4)
    print("✅ Identical, disjoint and mixed cases")

    with pytest.raises(DegenerateInputError):
        ned([0, 0], [0, 0])
    with pytest.raises(InvalidInputError):
        ned([1, 0], [1, 0, 0])
    print("✅ Degenerate and mismatched inputs rejected")

    rng = np.random.default_rng(3)
    F = FeatureMatrix(rng.uniform(size=(6, 3)))
    condensed = pairwise_ned(F)
    i, j = np.triu_indices(6, k=1)
    expected = [ned(F.rows[a], F.rows[b]) for a, b in zip(i, j)]
    assert np.allclose(condensed, expected)
    print("✅ Pairwise NED matches the scalar formula")


def test_build_constraints():
    """Constraint sets from a threshold"""
    print("\n" + "=" * 80)
    print("TEST 3: Constraint Construction")
    print("=" * 80)

    rng = np.random.default_rng(0)
    F = FeatureMatrix(rng.uniform(size=(20, 4)))
    assert build_constraints(F, 0.0).M == 0
    print("✅ tau = 0 gives no constraints")

    rows = np.array([[0.2, 0.4], [0.2, 0.4], [0.9, 0.1]])
    C = build_constraints(FeatureMatrix(rows), 0.1)
    assert (0, 1) in C.as_set()
    print("✅ Identical rows constrained")

    zero = FeatureMatrix(np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]))
    C = build_constraints(zero, 0.5)
    assert (0, 1) not in C.as_set()
    print("✅ Undefined NED pairs are skipped")

    with pytest.raises(InvalidInputError):
        build_constraints(F, 1.5)


def test_constraint_count_calibration():
    """tau_for_count reproduces a target constraint count"""
    print("\n" + "=" * 80)
    print("TEST 4: Constraint Count Calibration")
    print("=" * 80)

    for seed in range(3):
        rng = np.random.default_rng(seed)
        F = FeatureMatrix(rng.uniform(size=(300, 10)))
        tau = tau_for_count(F, 3962)
        C = build_constraints(F, tau)
        assert C.M == 3962, f"seed {seed}: {C.M}"
        print(f"✅ Seed {seed}: tau={tau:.4f} gives exactly 3962 constraints")

    rng = np.random.default_rng(11)
    F = FeatureMatrix(rng.uniform(size=(300, 10)))
    share = build_constraints(F, 0.5).M / (300 * 299 / 2)
    # mean NED of uniform rows is about 1/3, so tau = 0.5 constrains most pairs
    assert 0.85 < share < 0.995
    print(f"✅ tau = 0.5 constrains {share:.1%} of uniform pairs")


def test_violation_rate():
    """Fraction of forbidden pairs covered by an action"""
    print("\n" + "=" * 80)
    print("TEST 5: Violation Rate")
    print("=" * 80)

    C = ConstraintSet(L=5, pairs=np.array([[0, 1], [1, 2], [2, 3], [3, 4]]))
    assert violation_rate(ActionVector.from_indices(5, [0, 1]), C) == 0.25
    assert violation_rate(ActionVector.from_indices(5, [0, 2]), C) == 0.0
    i, j = np.triu_indices(4, k=1)
    full = ConstraintSet(L=4, pairs=np.stack([i, j], axis=1))
    assert violation_rate(ActionVector(np.ones(4)), full) == 1.0
    assert violation_rate(ActionVector.from_indices(5, [0, 1]), ConstraintSet(L=5)) == 0.0
    print("✅ 0.25 / 0 / 1.0 / empty set")

    with pytest.raises(InvalidInputError):
        violation_rate(ActionVector.from_indices(4, [0]), C)

    dup = ConstraintSet(L=3, pairs=np.array([[1, 0], [0, 1]]))
    assert dup.M == 1 and dup.as_set() == {(0, 1)}
    print("✅ Pairs are normalized and deduplicated")


def test_binarize_and_score():
    """Top-K binarization and composite score"""
    print("\n" + "=" * 80)
    print("TEST 6: Binarization and Composite Score")
    print("=" * 80)

    assert binarize_top_k([0.9, 0.1, 0.5, 0.7], 2).bits.tolist() == [1, 0, 0, 1]
    assert binarize_top_k([0.5, 0.5, 0.5], 2).bits.tolist() == [1, 1, 0]
    a = ActionVector.from_indices(6, [1, 4])
    assert binarize_top_k(a.bits, 2) == a
    with pytest.raises(InvalidInputError):
        binarize_top_k([0.1, 0.2], 3)
    print("✅ Top-K with lowest-index ties")

    assert composite_score(0.5, 0.02, 5.0) == pytest.approx(0.4)
    assert composite_score(0.5, 0.0, 5.0) == 0.5
    assert composite_score(0.5, 0.3, 0.0) == 0.5
    print("✅ U - lambda * c")


def test_hyperparameters_and_samples():
    """Hyperparameter ranges and elite sample checks"""
    print("\n" + "=" * 80)
    print("TEST 7: Hyperparameters")
    print("=" * 80)

    hp = Hyperparameters(**{"L": 10, "K": 3, "lambda": 2.0})
    assert hp.lam == 2.0
    for bad in ({"lambda": -1.0}, {"eps0": 0.5}, {"rho": 0.0}, {"f_in": 0}, {"L": 3, "K": 4}):
        with pytest.raises(ValidationError):
            Hyperparameters(**bad)
    print("✅ Out-of-range values rejected")

    with pytest.raises(InvalidInputError):
        EliteSample(ActionVector.from_indices(3, [0]), SamplerId.RANDOM, violation_rate=1.5)
    assert SamplerId.parse(" CEM ") is SamplerId.CEM
    with pytest.raises(InvalidInputError):
        SamplerId.parse("nope")
    print("✅ Elite samples and sampler ids")


def run_all_tests():
    """Run all tests"""
    print("\n" + "=" * 80)
    print("CORE TEST SUITE")
    print("=" * 80)

    try:
        test_action_vector_validation()
        test_ned_examples()
        test_build_constraints()
        test_constraint_count_calibration()
        test_violation_rate()
        test_binarize_and_score()
        test_hyperparameters_and_samples()

        print("\n" + "=" * 80)
        print("✅ ALL TESTS PASSED")
        print("=" * 80)
    except Exception as e:
        print(f"\n❌ TEST SUITE FAILED: {e}")
        raise


if __name__ == "__main__":
    run_all_tests()
