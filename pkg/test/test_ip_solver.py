"""
Tests for the constrained integer-program solver and the solver sampler.

Covers:
- Exact branch-and-bound against brute force on 100 instances (linear and quadratic)
- Infeasibility detection
- Heuristic search above the exact limit
- Surrogate extraction with linear terms and beta perturbations
"""

import itertools

import numpy as np
import pytest

from core.diversity import violation_rate
from core.errors import ConfigurationError, InfeasibleError, InvalidInputError
from core.types import ActionVector, ConstraintSet, Hyperparameters, SamplerId
from samplers.context import RoundContext
from samplers.ip_solver import LinearSurrogate, QuadraticSurrogate, greedy_independent_set, solve_ip
from samplers.solver_sampler import SolverSampler, beta_perturb, extract_first_order, extract_second_order


def _random_constraints(L: int, density: float, rng: np.random.Generator) -> ConstraintSet:
    i, j = np.triu_indices(L, k=1)
    keep = rng.random(i.size) < density
    return ConstraintSet(L=L, pairs=np.stack([i[keep], j[keep]], axis=1))


def _brute_force(objective, C: ConstraintSet, K: int) -> float:
    best = -np.inf
    forbidden = C.as_set()
    for combo in itertools.combinations(range(C.L), K):
        if any(pair in forbidden for pair in itertools.combinations(combo, 2)):
            continue
        best = max(best, objective.value(ActionVector.from_indices(C.L, combo).bits))
    return best


class LinearOracle:
    """U(x) = theta^T x"""

    def __init__(self, theta: np.ndarray):
        self.theta = theta

    def __call__(self, actions):
        return np.array([a.normalized() @ self.theta for a in actions])

    def raw(self, X):
        return np.atleast_2d(X) @ self.theta


def _check_against_brute_force(objective, C: ConstraintSet, K: int) -> float:
    expected = _brute_force(objective, C, K)
    if expected == -np.inf:
        with pytest.raises(InfeasibleError):
            solve_ip(objective, C, K)
        return expected
    result = solve_ip(objective, C, K)
    assert result.exact and result.action.K == K
    assert result.value == pytest.approx(expected, abs=1e-9)
    assert violation_rate(result.action, C) == 0.0
    return expected


def test_linear_exact():
    """Linear branch-and-bound matches exhaustive search on 50 instances"""
    print("\n" + "=" * 80)
    print("TEST 1: Exact Linear Solve")
    print("=" * 80)

    infeasible = 0
    for seed in range(50):
        rng = np.random.default_rng(seed)
        L = int(rng.integers(6, 21))
        K = int(rng.integers(1, 5))
        C = _random_constraints(L, rng.uniform(0.0, 0.4), rng)
        if _check_against_brute_force(LinearSurrogate(rng.normal(size=L)), C, K) == -np.inf:
            infeasible += 1
    print(f"✅ 50 instances (L <= 20, K <= 4), {infeasible} infeasible")


def test_quadratic_exact():
    """Quadratic branch-and-bound matches exhaustive search on 50 instances, negative entries included"""
    print("\n" + "=" * 80)
    print("TEST 2: Exact Quadratic Solve")
    print("=" * 80)

    infeasible = 0
    for seed in range(50):
        rng = np.random.default_rng(100 + seed)
        L = int(rng.integers(6, 21))
        K = int(rng.integers(1, 5))
        C = _random_constraints(L, rng.uniform(0.0, 0.4), rng)
        if _check_against_brute_force(QuadraticSurrogate(rng.normal(size=(L, L))), C, K) == -np.inf:
            infeasible += 1
    print(f"✅ 50 instances (L <= 20, K <= 4), {infeasible} infeasible")


def test_infeasible():
    """A complete conflict graph admits no pair"""
    print("\n" + "=" * 80)
    print("TEST 3: Infeasible Constraints")
    print("=" * 80)

    i, j = np.triu_indices(4, k=1)
    C = ConstraintSet(L=4, pairs=np.stack([i, j], axis=1))
    b = LinearSurrogate(np.ones(4))
    with pytest.raises(InfeasibleError):
        solve_ip(b, C, 2)
    with pytest.raises(InfeasibleError):
        solve_ip(b, C, 2, exact_limit=0)
    assert solve_ip(b, C, 1).action.K == 1
    print("✅ Exact and heuristic paths both report infeasibility")

    with pytest.raises(InvalidInputError):
        solve_ip(b, C, 5)
    with pytest.raises(InvalidInputError):
        solve_ip(LinearSurrogate(np.ones(3)), C, 1)


def test_heuristic():
    """Above the exact limit: feasible K-subsets, top-K when unconstrained"""
    print("\n" + "=" * 80)
    print("TEST 4: Heuristic Solve")
    print("=" * 80)

    rng = np.random.default_rng(7)
    b = rng.normal(size=50)
    result = solve_ip(LinearSurrogate(b), ConstraintSet(L=50), 5, exact_limit=10, rng=rng, restarts=2)
    assert not result.exact
    assert result.value == pytest.approx(np.sort(b)[-5:].sum())
    print("✅ Unconstrained linear heuristic finds the top 5")

    C = _random_constraints(50, 0.1, rng)
    Q = QuadraticSurrogate(rng.uniform(size=(50, 50)))
    result = solve_ip(Q, C, 5, exact_limit=10, rng=rng, restarts=2)
    assert result.action.K == 5 and violation_rate(result.action, C) == 0.0
    print("✅ Constrained quadratic heuristic stays feasible")

    adj = C.conflict_matrix
    mis = greedy_independent_set(adj)
    assert not adj[np.ix_(mis, mis)].any()
    print(f"✅ Greedy independent set of size {mis.size}")


def test_surrogate_extraction():
    """Exact recovery of quadratic oracles with a linear term"""
    print("\n" + "=" * 80)
    print("TEST 5: Surrogate Extraction")
    print("=" * 80)

    worst = 0.0
    for seed in range(20):
        rng = np.random.default_rng(300 + seed)
        L = int(rng.integers(2, 13))
        A = rng.normal(size=(L, L))
        Q = 0.5 * (A + A.T)
        d = rng.normal(size=L)
        e = float(rng.normal())

        def oracle(X, Q=Q, d=d, e=e):
            X = np.atleast_2d(X)
            return np.einsum("ij,jk,ik->i", X, Q, X) + X @ d + e

        b = extract_first_order(oracle, L)
        assert np.allclose(b.b, np.diag(Q) + d + e)
        recovered = extract_second_order(oracle, b)
        worst = max(worst, float(np.abs(recovered.Q - Q).max()))
        assert recovered.e0 == pytest.approx(e)
    assert worst <= 1e-9
    print(f"✅ 20 instances (L <= 12, d != 0): max-abs error {worst:.1e}")


def test_beta_perturb():
    """Perturbed copies keep K items"""
    print("\n" + "=" * 80)
    print("TEST 6: Beta Perturbations")
    print("=" * 80)

    elite = ActionVector.from_indices(10, [1, 4, 7])
    rng = np.random.default_rng(0)
    copies = beta_perturb(elite, 0.05, 20, rng)
    assert len(copies) == 20 and all(c.K == 3 for c in copies)
    assert sum(c == elite for c in copies) >= 5
    assert beta_perturb(elite, 0.05, 0, rng) == []
    with pytest.raises(InvalidInputError):
        beta_perturb(elite, 0.5, 3, rng)
    print("✅ K preserved, mostly near the elite, eps0 validated")


def test_solver_sampler():
    """Proposals from both programs plus perturbations"""
    print("\n" + "=" * 80)
    print("TEST 7: Solver Sampler")
    print("=" * 80)

    hp = Hyperparameters(L=8, K=2, eps0=0.05)
    theta = np.array([0.1, 0.9, 0.2, 0.8, 0.0, 0.3, 0.4, 0.5])
    ctx = RoundContext(t=1, hparams=hp, constraints=ConstraintSet(L=8), oracle=LinearOracle(theta))
    sampler = SolverSampler(hp, np.random.default_rng(0))
    samples = sampler.propose(ctx, 5)
    assert len(samples) == 5
    assert all(s.sampler_id is SamplerId.SOLVER and s.action.K == 2 for s in samples)
    assert samples[0].action == ActionVector.from_indices(8, [1, 3])
    assert samples[0].surrogate_score == pytest.approx(1.7 / np.sqrt(2))
    print("✅ Linear solution first, quota filled")

    # the programs are solved once per training interval; later rounds rescore the cached solutions
    shifted = np.array([0.9, 0.1, 0.8, 0.2, 0.0, 0.3, 0.4, 0.5])
    shifted_ctx = RoundContext(t=2, hparams=hp, constraints=ConstraintSet(L=8), oracle=LinearOracle(shifted))
    cached = sampler.propose(shifted_ctx, 2)
    assert cached[0].action == ActionVector.from_indices(8, [1, 3])
    assert cached[0].surrogate_score == pytest.approx(0.3 / np.sqrt(2))
    sampler.train(shifted_ctx)
    assert sampler._stale
    resolved = sampler.propose(shifted_ctx, 2)
    assert resolved[0].action == ActionVector.from_indices(8, [0, 2])
    assert resolved[0].surrogate_score == pytest.approx(1.7 / np.sqrt(2))
    print("✅ Solutions reused until the next training call, then re-solved")

    assert sampler.propose(ctx, 0) == []

    with pytest.raises(ConfigurationError):
        sampler.propose(RoundContext(t=1, hparams=hp, constraints=ConstraintSet(L=8)), 2)
    print("✅ Standalone use rejected")


def run_all_tests():
    """Run all tests"""
    print("\n" + "=" * 80)
    print("IP SOLVER TEST SUITE")
    print("=" * 80)

    try:
        test_linear_exact()
        test_quadratic_exact()
        test_infeasible()
        test_heuristic()
        test_surrogate_extraction()
        test_beta_perturb()
        test_solver_sampler()

        print("\n" + "=" * 80)
        print("✅ ALL TESTS PASSED")
        print("=" * 80)
    except Exception as e:
        print(f"\n❌ TEST SUITE FAILED: {e}")
        raise


if __name__ == "__main__":
    run_all_tests()
