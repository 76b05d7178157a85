"""
Tests for the random and teacher-student samplers.

Covers:
- Uniform K-subsets
- Teacher and student moves on binary actions
- Best-in-history resubmission and re-scoring under a drifting surrogate
- TLBO over the round's pool
"""

import numpy as np
import pytest

from core.errors import ConfigurationError, InvalidInputError
from core.types import ActionVector, ConstraintSet, EliteSample, Hyperparameters, SamplerId
from samplers.context import RoundContext
from samplers.population_samplers import (
    BestInHistory,
    RandomSampler,
    TlboSampler,
    random_sample,
    tlbo_student_step,
    tlbo_teacher_step,
)


def _a(*bits) -> ActionVector:
    return ActionVector(np.array(bits))


def test_random_sample():
    """K distinct items, every item equally likely"""
    print("\n" + "=" * 80)
    print("TEST 1: Uniform K-Subsets")
    print("=" * 80)

    rng = np.random.default_rng(0)
    assert random_sample(5, 5, rng) == _a(1, 1, 1, 1, 1)
    counts = np.zeros(6)
    for _ in range(3000):
        a = random_sample(6, 2, rng)
        assert a.K == 2
        counts += a.bits
    assert np.allclose(counts / 3000, 2 / 6, atol=0.04)
    with pytest.raises(InvalidInputError):
        random_sample(3, 4, rng)
    print("✅ K = L selects everything; marginals near K/L")


def test_teacher_step():
    """B = A + rand * (T - A), binarized"""
    print("\n" + "=" * 80)
    print("TEST 2: Teacher Step")
    print("=" * 80)

    rng = np.random.default_rng(0)
    A, T = _a(1, 1, 0, 0), _a(0, 0, 1, 1)
    assert tlbo_teacher_step(A, T, rng, rand=0.0) == A
    assert tlbo_teacher_step(A, T, rng, rand=1.0) == T
    assert tlbo_teacher_step(A, T, rng, rand=0.5) == _a(1, 1, 0, 0)
    print("✅ rand 0 keeps A, rand 1 reaches T, ties go to the lower index")


def test_student_step():
    """Toward the better student, away from the worse one"""
    print("\n" + "=" * 80)
    print("TEST 3: Student Step")
    print("=" * 80)

    rng = np.random.default_rng(0)
    A, B = _a(1, 1, 0, 0), _a(0, 1, 1, 0)
    assert tlbo_student_step(A, B, 0.1, 0.9, rng, rand=1.0) == B
    assert tlbo_student_step(A, B, 0.9, 0.1, rng, rand=1.0) == A
    assert tlbo_student_step(A, B, 0.5, 0.5, rng, rand=0.5) == A
    print("✅ Moves follow the score comparison")


def test_best_in_history():
    """Only strict improvements replace the stored best"""
    print("\n" + "=" * 80)
    print("TEST 4: Best In History")
    print("=" * 80)

    history = BestInHistory()
    assert history.offer(_a(1, 0, 0), 0.2)
    assert not history.offer(_a(0, 1, 0), 0.2)
    assert history.offer(_a(0, 0, 1), 0.3)
    assert history.best == _a(0, 0, 1) and history.score == 0.3

    hp = Hyperparameters(L=6, K=2, lam=1.0)
    ctx = RoundContext(t=1, hparams=hp, constraints=ConstraintSet(L=6))
    sampler = RandomSampler(hp, np.random.default_rng(1))
    first = sampler.propose(ctx, 3)
    assert len(first) == 3 and all(s.sampler_id is SamplerId.RANDOM for s in first)
    pool = [
        EliteSample(_a(1, 1, 0, 0, 0, 0), SamplerId.CEM, surrogate_score=0.9, violation_rate=0.5),
        EliteSample(_a(0, 0, 0, 0, 1, 1), SamplerId.CEM, surrogate_score=0.6, violation_rate=0.0),
    ]
    sampler.observe_round(ctx, pool)
    assert sampler.history.best == pool[1].action
    assert sampler.propose(ctx, 3)[0].action == pool[1].action
    assert sampler.propose(ctx, 0) == []
    print("✅ Best composite score from the pool is resubmitted first")


def test_best_in_history_drift():
    """The stored best is re-scored under the current surrogate"""
    print("\n" + "=" * 80)
    print("TEST 5: Best In History Under Drift")
    print("=" * 80)

    A, B = _a(1, 1, 0, 0, 0, 0), _a(0, 0, 0, 0, 1, 1)

    class TableOracle:
        def __init__(self, table):
            self.table = table

        def __call__(self, actions):
            return np.array([self.table[a.key] for a in actions])

        def raw(self, X):
            return np.zeros(len(X))

    hp = Hyperparameters(L=6, K=2, lam=1.0)
    oracle = TableOracle({A.key: 5.0, B.key: 0.1})
    ctx = RoundContext(t=1, hparams=hp, constraints=ConstraintSet(L=6), oracle=oracle)
    sampler = RandomSampler(hp, np.random.default_rng(3))
    sampler.observe_round(ctx, [EliteSample(A, SamplerId.CEM, surrogate_score=5.0)])
    assert sampler.history.best == A and sampler.history.score == 5.0

    oracle.table = {A.key: 0.2, B.key: 1.0}
    ctx = RoundContext(t=2, hparams=hp, constraints=ConstraintSet(L=6), oracle=oracle)
    # B arrives with a score from before the drift; both are compared afresh
    sampler.observe_round(ctx, [EliteSample(B, SamplerId.CEM, surrogate_score=0.1)])
    assert sampler.history.best == B
    assert sampler.history.score == pytest.approx(1.0)
    print("✅ A stale high score does not pin the old best")

    oracle.table = {A.key: 0.2, B.key: -3.0}
    ctx = RoundContext(t=3, hparams=hp, constraints=ConstraintSet(L=6), oracle=oracle)
    submitted = sampler.propose(ctx, 2)
    assert submitted[0].action == B and submitted[0].surrogate_score == pytest.approx(-3.0)
    assert sampler.history.score == pytest.approx(-3.0)
    sampler.observe_round(ctx, [EliteSample(A, SamplerId.CEM, surrogate_score=0.2)])
    assert sampler.history.best == A
    print("✅ Re-scored before submission; the stored action stays authoritative")


def test_tlbo_sampler():
    """TLBO works on the pool and refuses standalone runs"""
    print("\n" + "=" * 80)
    print("TEST 6: TLBO Sampler")
    print("=" * 80)

    hp = Hyperparameters(L=6, K=2)
    sampler = TlboSampler(hp, np.random.default_rng(2))
    with pytest.raises(ConfigurationError):
        sampler.propose(RoundContext(t=1, hparams=hp, constraints=ConstraintSet(L=6)), 2)

    class ZeroOracle:
        def __call__(self, actions):
            return np.zeros(len(actions))

        def raw(self, X):
            return np.zeros(len(X))

    empty = RoundContext(t=1, hparams=hp, constraints=ConstraintSet(L=6), oracle=ZeroOracle())
    assert sampler.propose(empty, 3) == []

    single = (EliteSample(_a(1, 0, 1, 0, 0, 0), SamplerId.CEM, surrogate_score=0.4),)
    ctx = RoundContext(t=1, hparams=hp, constraints=ConstraintSet(L=6), oracle=ZeroOracle(), pool=single)
    samples = sampler.propose(ctx, 3)
    assert len(samples) == 3
    assert all(s.sampler_id is SamplerId.TLBO and s.action == single[0].action for s in samples)
    print("✅ A one-member pool maps onto itself")

    pool = single + (EliteSample(_a(0, 0, 0, 1, 1, 0), SamplerId.WOLPERTINGER, surrogate_score=0.8),)
    ctx = RoundContext(t=1, hparams=hp, constraints=ConstraintSet(L=6), oracle=ZeroOracle(), pool=pool)
    samples = sampler.propose(ctx, 4)
    assert len(samples) == 4 and all(s.action.K == 2 for s in samples)
    print("✅ Teacher and student moves keep K")


def run_all_tests():
    """Run all tests"""
    print("\n" + "=" * 80)
    print("POPULATION SAMPLER TEST SUITE")
    print("=" * 80)

    try:
        test_random_sample()
        test_teacher_step()
        test_student_step()
        test_best_in_history()
        test_best_in_history_drift()
        test_tlbo_sampler()

        print("\n" + "=" * 80)
        print("✅ ALL TESTS PASSED")
        print("=" * 80)
    except Exception as e:
        print(f"\n❌ TEST SUITE FAILED: {e}")
        raise


if __name__ == "__main__":
    run_all_tests()
