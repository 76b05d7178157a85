"""
Tests for gumbel top-K subset sampling and the attention samplers.

Covers:
- Unordered subset probability (exact enumeration and sampling frequencies)
- Two-stage attention properties (uniform attention, symmetry, equivariance)
- Attention-driven subset probabilities: enumeration and gradient checks
- REINFORCE updates for the attention sampler and the free-logit baseline
"""

import itertools
import math

import numpy as np
import pytest
import torch

from core.errors import InvalidInputError
from core.types import ActionVector, ConstraintSet, EliteSample, FeatureMatrix, Hyperparameters, SamplerId
from samplers.base import reset_parameters
from samplers.context import RoundContext
from samplers.g2anet_sampler import (
    G2ANetConfig,
    G2ANetSampler,
    GumbelTopKReinforceSampler,
    TwoStageAttention,
    feature_tensor,
    reinforce_update,
)
from samplers.gumbel import PROB_CLIP, SubsetDraw, orderings, sample_from_log_weights, subset_log_prob

WEIGHTS = np.array([0.4, 0.3, 0.2, 0.1])


def exact_subset_prob(w: np.ndarray, subset) -> float:
    """Sum of Plackett-Luce probabilities over every ordering of ``subset``"""
    total = 0.0
    for order in itertools.permutations(subset):
        remaining, p = w.sum(), 1.0
        for item in order:
            p *= w[item] / remaining
            remaining -= w[item]
        total += p
    return total


def _standalone_ctx(L: int, K: int) -> RoundContext:
    return RoundContext(t=1, hparams=Hyperparameters(L=L, K=K), constraints=ConstraintSet(L=L))


def test_subset_probability():
    """All orderings give the exact unordered probability"""
    print("\n" + "=" * 80)
    print("TEST 1: Subset Probability")
    print("=" * 80)

    log_w = torch.from_numpy(np.log(WEIGHTS))
    total = 0.0
    for subset in itertools.combinations(range(4), 2):
        perms = torch.from_numpy(orderings(np.array(subset), 2, np.random.default_rng(0)))
        assert perms.shape == (2, 2)
        value = math.exp(float(subset_log_prob(log_w, perms)))
        assert value == pytest.approx(exact_subset_prob(WEIGHTS, subset))
        total += value
    assert total == pytest.approx(1.0)
    print("✅ Exact for every pair; probabilities sum to one")

    assert orderings(np.arange(4), 24, np.random.default_rng(0)).shape == (24, 4)
    assert orderings(np.arange(4), 3, np.random.default_rng(0)).shape == (3, 4)
    print("✅ Full enumeration when m_perms >= K!, sampled orderings otherwise")


def test_sampling_frequencies():
    """Gumbel top-K draws follow the subset distribution"""
    print("\n" + "=" * 80)
    print("TEST 2: Sampling Frequencies")
    print("=" * 80)

    rng = np.random.default_rng(1)
    counts: dict[tuple, int] = {}
    n = 5000
    for _ in range(n):
        draw = sample_from_log_weights(np.log(WEIGHTS), 2, 2, rng)
        key = tuple(draw.action.indices.tolist())
        counts[key] = counts.get(key, 0) + 1
        assert draw.logprob <= 0.0
    for subset in itertools.combinations(range(4), 2):
        assert abs(counts.get(subset, 0) / n - exact_subset_prob(WEIGHTS, subset)) < 0.03
    print("✅ Empirical frequencies match")

    full = sample_from_log_weights(np.log(WEIGHTS), 4, 5, rng)
    assert full.logprob == 0.0 and full.action.K == 4
    with pytest.raises(InvalidInputError):
        sample_from_log_weights(np.log(WEIGHTS), 2, 0, rng)
    print("✅ K = L has probability one")


def test_attention_properties():
    """Zero gates, symmetric gates and permutation equivariance"""
    print("\n" + "=" * 80)
    print("TEST 3: Two-Stage Attention")
    print("=" * 80)

    torch.manual_seed(0)
    net = TwoStageAttention(d=3, hidden=8)
    F = torch.from_numpy(np.random.default_rng(2).uniform(size=(5, 3)))

    with torch.no_grad():
        out = net(F, gates=torch.zeros(5, 5))
        h = torch.tanh(net.encoder(F))
        uniform = torch.sigmoid(net.head(torch.cat([h, h.mean(dim=0).expand(5, -1)], dim=-1))).squeeze(-1)
        assert torch.allclose(out, uniform)
        print("✅ Closed gates give uniform soft attention")

        gates = net.hard_gates(h, None, 1.0)
        assert torch.equal(gates, gates.T)
        assert torch.allclose(gates, gates.round())
        print("✅ Hard gates are symmetric and binary")

        perm = torch.tensor([3, 0, 4, 1, 2])
        assert torch.allclose(net(F[perm]), net(F)[perm])
        print("✅ Permuting arms permutes the scores")

    eye = feature_tensor(None, 4)
    assert torch.equal(eye, torch.eye(4, dtype=torch.float64))
    assert feature_tensor(FeatureMatrix(np.ones((4, 2))), 4).shape == (4, 2)


def _attention_log_weights(net: TwoStageAttention, F: torch.Tensor, gates: torch.Tensor) -> torch.Tensor:
    out = torch.clamp(net(F, gates=gates), PROB_CLIP, 1.0 - PROB_CLIP)
    return torch.log(out)


def test_attention_subset_distribution():
    """Subset probabilities from attention scores match enumeration over ordered draws"""
    print("\n" + "=" * 80)
    print("TEST 4: Attention Subset Distribution")
    print("=" * 80)

    rng = np.random.default_rng(21)
    for trial in range(50):
        L = int(rng.integers(3, 7))
        K = int(rng.integers(1, min(L, 4) + 1))
        net = TwoStageAttention(d=3, hidden=4)
        reset_parameters(net, rng)
        F = torch.from_numpy(rng.uniform(size=(L, 3)))
        with torch.no_grad():
            h = torch.tanh(net.encoder(F))
            log_w = _attention_log_weights(net, F, net.hard_gates(h, torch.from_numpy(rng.gumbel(size=(L, L, 2))), 1.0))
        w = torch.exp(log_w).numpy()
        total = 0.0
        for subset in itertools.combinations(range(L), K):
            perms = torch.from_numpy(orderings(np.array(subset), math.factorial(K), rng))
            value = math.exp(float(subset_log_prob(log_w, perms)))
            assert abs(value - exact_subset_prob(w, subset)) < 1e-10
            total += value
        assert total == pytest.approx(1.0, abs=1e-10)
    print("✅ 50 score vectors (L <= 6, K <= 4): exact against enumeration, summing to one")


def test_attention_log_prob_gradient():
    """Autograd through the attention network and subset_log_prob against central differences"""
    print("\n" + "=" * 80)
    print("TEST 5: Attention Log-Probability Gradient")
    print("=" * 80)

    rng = np.random.default_rng(22)
    L, K, eps = 5, 2, 1e-6
    worst = 0.0
    for _ in range(100):
        net = TwoStageAttention(d=3, hidden=3)
        reset_parameters(net, rng)
        F = torch.from_numpy(rng.uniform(size=(L, 3)))
        # fixed gates: the straight-through stage is piecewise constant in its inputs
        gates = torch.from_numpy(rng.integers(0, 2, size=(L, L)).astype(np.float64))
        gates = torch.maximum(gates, gates.T)
        items = np.sort(rng.choice(L, K, replace=False))
        perms = torch.from_numpy(orderings(items, 2, rng))
        params = [p for p in net.parameters() if p is not None]

        value = subset_log_prob(_attention_log_weights(net, F, gates), perms)
        grads = torch.autograd.grad(value, params, allow_unused=True)
        analytic, numeric = [], []
        with torch.no_grad():
            for p, g in zip(params, grads):
                flat = p.view(-1)
                for i in range(flat.numel()):
                    old = float(flat[i])
                    flat[i] = old + eps
                    up = float(subset_log_prob(_attention_log_weights(net, F, gates), perms))
                    flat[i] = old - eps
                    down = float(subset_log_prob(_attention_log_weights(net, F, gates), perms))
                    flat[i] = old
                    numeric.append((up - down) / (2 * eps))
                    analytic.append(0.0 if g is None else float(g.view(-1)[i]))
        analytic, numeric = np.array(analytic), np.array(numeric)
        worst = max(worst, np.linalg.norm(analytic - numeric) / max(np.linalg.norm(analytic), 1e-12))
    assert worst < 1e-4
    print(f"✅ 100 networks, worst relative error {worst:.2e}")


def test_reinforce_baseline():
    """Free-logit REINFORCE moves mass toward the better subset"""
    print("\n" + "=" * 80)
    print("TEST 6: REINFORCE Baseline")
    print("=" * 80)

    L, K = 6, 2
    ctx = _standalone_ctx(L, K)
    sampler = GumbelTopKReinforceSampler(ctx.hparams, np.random.default_rng(0), m_perms=2, lr=0.5)
    rng = np.random.default_rng(0)

    def draw(items) -> SubsetDraw:
        return SubsetDraw(ActionVector.from_indices(L, items), 0.0, np.zeros(L), orderings(np.array(items), 2, rng))

    good, bad = draw([0, 1]), draw([2, 3])
    before = float(subset_log_prob(sampler.logits.detach(), torch.from_numpy(good.perms)))

    sampler._batch = [(good, 1.0)]
    sampler.train(ctx)
    assert torch.equal(sampler.logits.detach(), torch.zeros(L, dtype=torch.float64))
    print("✅ A single draw has zero advantage: no update")

    sampler._batch = [(good, 1.0), (bad, 0.0)]
    sampler.train(ctx)
    after = float(subset_log_prob(sampler.logits.detach(), torch.from_numpy(good.perms)))
    assert after > before
    assert sampler._batch == []
    print(f"✅ log p(good) {before:.4f} -> {after:.4f}")

    samples = sampler.propose(ctx, 3)
    assert len(samples) == 3 and all(s.sampler_id is SamplerId.GTKR for s in samples)


def test_reinforce_equal_feedback():
    """Identical feedback leaves parameters unchanged"""
    print("\n" + "=" * 80)
    print("TEST 7: Equal Feedback")
    print("=" * 80)

    w = torch.zeros(4, dtype=torch.float64, requires_grad=True)
    perms = torch.tensor([[0, 1], [1, 0]])
    logprobs = torch.stack([subset_log_prob(w, perms), subset_log_prob(w, perms.flip(1))])
    reinforce_update([w], logprobs, [0.7, 0.7], lr=1.0)
    assert torch.equal(w.detach(), torch.zeros(4, dtype=torch.float64))
    print("✅ Zero advantage, zero step")


def test_g2anet_sampler():
    """Propose, record and train on real feedback"""
    print("\n" + "=" * 80)
    print("TEST 8: Attention Sampler Round Trip")
    print("=" * 80)

    L, K = 8, 2
    ctx = _standalone_ctx(L, K)
    sampler = G2ANetSampler(ctx.hparams, np.random.default_rng(3), G2ANetConfig(hidden=8, imagined=0))
    samples = sampler.propose(ctx, 4)
    assert len(samples) == 4
    assert all(s.action.K == K and s.sampler_id is SamplerId.G2ANET for s in samples)

    distinct = {s.action.key: s for s in samples}
    rewarded = [
        EliteSample(s.action, s.sampler_id, surrogate_score=float(i), violation_rate=0.0)
        for i, s in enumerate(distinct.values())
    ]
    sampler.record(ctx, rewarded)
    before = [p.detach().clone() for p in sampler.network.parameters()]
    sampler.train(ctx)
    if len(rewarded) >= 2:
        assert sampler.temperature == pytest.approx(0.995)
        assert any(not torch.equal(a, b.detach()) for a, b in zip(before, sampler.network.parameters()))
    print(f"✅ Trained on {len(rewarded)} distinct draws")

    out = sampler.real_output(ctx)
    assert out.shape == (L,) and bool(((out > 0) & (out < 1)).all())
    assert sampler.demonstration_parameters()
    assert sampler.propose(ctx, 0) == []
    print("✅ Real-valued head in (0, 1)")


def run_all_tests():
    """Run all tests"""
    print("\n" + "=" * 80)
    print("GUMBEL / ATTENTION SAMPLER TEST SUITE")
    print("=" * 80)

    try:
        test_subset_probability()
        test_sampling_frequencies()
        test_attention_properties()
        test_attention_subset_distribution()
        test_attention_log_prob_gradient()
        test_reinforce_baseline()
        test_reinforce_equal_feedback()
        test_g2anet_sampler()

        print("\n" + "=" * 80)
        print("✅ ALL TESTS PASSED")
        print("=" * 80)
    except Exception as e:
        print(f"\n❌ TEST SUITE FAILED: {e}")
        raise


if __name__ == "__main__":
    run_all_tests()
