"""
Tests for metrics, ground truth, export and replicate runs.

Covers:
- Adoption rate arr_t and its undefined windows
- Constrained optimum of the noiseless reward against brute force
- CSV export (header, empty series, streamed vs. final bytes) and plots
- Replicate aggregation
- Small end-to-end replicates in master-slave and standalone modes
- Reduced acceptance runs: violation bound, ordering against the random baseline, cascade
"""

import itertools

import numpy as np
import pandas as pd
import pytest

from config.settings import build_settings
from core.diversity import violation_rate
from core.errors import UndefinedWindowError
from core.types import ActionVector, ConstraintSet, SamplerId
from environments.synthetic import expected_reward, generate_synthetic_spec
from harness.export import (
    ARR_COLUMNS,
    SERIES_COLUMNS,
    SeriesCsvWriter,
    export_arr,
    export_csv,
    read_series_csv,
    render_plot,
)
from harness.ground_truth import ground_truth
from harness.metrics import MetricsSeries, compute_arr
from harness.report import chosen_shares, summarize_runs
from harness.runner import run_experiment, run_replicate
from master.state import RoundRecord

R, C = SamplerId.RANDOM, SamplerId.CEM


def _series(chosen, horizon: int = 0) -> MetricsSeries:
    series = MetricsSeries(exploration_horizon=horizon)
    for t, sid in enumerate(chosen, start=1):
        series.append(
            RoundRecord(
                t=t,
                action=ActionVector.from_indices(4, [t % 4]),
                reward=0.1 * t,
                violation=0.25 * (t % 2),
                sampler_id=sid,
                score=0.1 * t - 0.125,
                timings={sid: 0.5},
            )
        )
    return series


def test_arr():
    """Fraction of post-exploration rounds won by a sampler"""
    print("\n" + "=" * 80)
    print("TEST 1: Adoption Rate")
    print("=" * 80)

    chosen = [R, R, C, R]
    assert compute_arr(chosen, C, 3, 2) == 1.0
    assert compute_arr(chosen, R, 3, 2) == 0.0
    assert compute_arr(chosen, C, 4, 2) == 0.5
    with pytest.raises(UndefinedWindowError):
        compute_arr(chosen, C, 2, 2)
    with pytest.raises(UndefinedWindowError):
        compute_arr(chosen, C, 5, 2)
    print("✅ 1 / 0 / 0.5 and undefined windows")

    series = _series(chosen, horizon=2)
    assert series.arr_trajectory(C).tolist() == [1.0, 0.5]
    assert series.samplers_seen() == [C, R]
    assert series.timing_totals() == {R: 1.5, C: 0.5}
    assert series.cumulative_mean()[-1] == pytest.approx(0.25)


def test_ground_truth():
    """Exact optimum matches exhaustive search for every form"""
    print("\n" + "=" * 80)
    print("TEST 2: Ground Truth")
    print("=" * 80)

    L, K = 8, 3
    C = ConstraintSet(L=L, pairs=[[0, 1], [2, 5], [3, 4], [6, 7]])
    for form in ("linear", "cubic", "quadratic", "mixed"):
        spec = generate_synthetic_spec(L, form, np.random.default_rng(5), noise_sigma=0.0)
        feasible = [
            ActionVector.from_indices(L, combo)
            for combo in itertools.combinations(range(L), K)
            if violation_rate(ActionVector.from_indices(L, combo), C) == 0.0
        ]
        best = max(expected_reward(spec, a) for a in feasible)
        action, value, exact = ground_truth(spec, C, K)
        assert exact and value == pytest.approx(best)
        assert violation_rate(action, C) == 0.0
        print(f"✅ {form}: {value:.4f}")


def test_export(tmp_path):
    """Header, empty series and streamed/final byte identity"""
    print("\n" + "=" * 80)
    print("TEST 3: CSV Export")
    print("=" * 80)

    empty = export_csv(MetricsSeries(), tmp_path / "empty.csv")
    assert empty.read_text() == ",".join(SERIES_COLUMNS) + "\n"
    print("✅ Empty series writes the header only")

    series = _series([R, C, C, R, C])
    streamed = tmp_path / "streamed.csv"
    with SeriesCsvWriter(streamed) as writer:
        for t in range(len(series)):
            writer.write(t + 1, series.rewards[t], series.violations[t], series.chosen[t], series.scores[t])
    final = export_csv(series, tmp_path / "final.csv")
    assert streamed.read_bytes() == final.read_bytes()
    frame = read_series_csv(final)
    assert frame["chosen_sampler"].tolist() == ["random", "cem", "cem", "random", "cem"]
    print("✅ Row-by-row and final exports are byte-identical")

    arr = pd.read_csv(export_arr(_series([R, C, C, R], horizon=2), tmp_path / "arr.csv"))
    assert list(arr.columns) == ARR_COLUMNS
    assert arr[arr["sampler_id"] == "random"]["arr"].tolist() == [0.0, 0.5]
    assert arr["t"].tolist() == [3, 3, 4, 4]

    bad = tmp_path / "bad.csv"
    bad.write_text("t,reward\n1,0.5\n")
    with pytest.raises(ValueError, match="missing columns"):
        read_series_csv(bad)


def test_report_and_plot(tmp_path):
    """Replicate table with mean/std rows; deterministic SVG"""
    print("\n" + "=" * 80)
    print("TEST 4: Report and Plot")
    print("=" * 80)

    paths = [export_csv(_series([R, C, R]), tmp_path / "a.csv"), export_csv(_series([C, C, C, C]), tmp_path / "b.csv")]
    table = summarize_runs(paths, last_window=2)
    assert table["run"].tolist()[-2:] == ["mean", "std"]
    assert table["rounds"].tolist()[:2] == [3, 4]
    assert table.iloc[0]["reward_last"] == pytest.approx(0.25)
    assert table.iloc[2]["rounds"] == 3.5 and table.iloc[3]["rounds"] == 0.5
    assert summarize_runs([]).empty
    print("✅ Per-run rows plus mean and population std")

    shares = chosen_shares(paths)
    assert shares.loc[str(paths[1]), "cem"] == 1.0 and shares.loc[str(paths[1]), "random"] == 0.0

    frames = [read_series_csv(p) for p in paths]
    one = render_plot(frames, ["a", "b"], tmp_path / "one.svg")
    two = render_plot(frames, ["a", "b"], tmp_path / "two.svg")
    assert one.read_text().lstrip().startswith("<?xml")
    assert one.read_bytes() == two.read_bytes()
    print("✅ SVG rendered reproducibly")


def _tiny_settings(tmp_path, **extra):
    values = {
        "L": 12,
        "K": 2,
        "T": 12,
        "d": 3,
        "n_es": 4,
        "f_in": 4,
        "length_epoch": 4,
        "L2": 10,
        "cluster_count": 3,
        "exploration_rounds": 4,
        "ucb_width": 4,
        "ucb_steps": 2,
        "wolp_hidden": 8,
        "wolp_batch": 6,
        "wolp_train_steps": 1,
        "wolp_imagined": 4,
        "g2a_hidden": 4,
        "g2a_imagined": 4,
        "cem_N": 8,
        "cem_n": 4,
        "target_constraints": 6,
        "out_dir": str(tmp_path / "runs"),
        "seed": 3,
    }
    values.update(extra)
    return build_settings(values)


def test_replicates(tmp_path):
    """Master-slave and standalone replicates write their files deterministically"""
    print("\n" + "=" * 80)
    print("TEST 5: Replicate Runs")
    print("=" * 80)

    settings = _tiny_settings(tmp_path)
    result = run_replicate(settings, 0)
    assert len(result.series) == 12 and not result.stopped_early
    frame = read_series_csv(result.series_path)
    assert frame["t"].tolist() == list(range(1, 13))
    assert set(frame["chosen_sampler"].head(4)) == {"random"}
    assert result.ground_truth is not None
    first_bytes = result.series_path.read_bytes()
    print("✅ Master-slave replicate: 12 rounds, exploration by the random sampler")

    again = run_replicate(settings, 0)
    assert again.series_path.read_bytes() == first_bytes
    print("✅ Same seed, identical CSV")

    standalone = _tiny_settings(tmp_path, mode="standalone:cem", out_dir=str(tmp_path / "cem"))
    results = run_experiment(standalone)
    frame = read_series_csv(results[0].series_path)
    assert set(frame["chosen_sampler"]) == {"cem"}
    assert pd.read_csv(results[0].arr_path)["arr"].eq(1.0).all()
    print("✅ Standalone baseline plays its own samples")


def _composite(result, lam: float, window: int) -> float:
    rewards = np.asarray(result.series.rewards[-window:])
    violations = np.asarray(result.series.violations[-window:])
    return float(np.mean(rewards - lam * violations))


def test_reduced_end_to_end(tmp_path):
    """Master-slave keeps violations low and outscores the random baseline"""
    print("\n" + "=" * 80)
    print("TEST 6: Reduced End-to-End")
    print("=" * 80)

    lam, window = 10.0, 40
    master = _tiny_settings(tmp_path, T=80, **{"lambda": lam}, out_dir=str(tmp_path / "e2e"))
    baseline = _tiny_settings(tmp_path, T=80, mode="standalone:random", **{"lambda": lam}, out_dir=str(tmp_path / "e2e_random"))
    for index in range(2):
        ours = run_replicate(master, index)
        theirs = run_replicate(baseline, index)
        assert len(ours.series) == 80 and not ours.stopped_early
        after_exploration = ours.series.violations[ours.series.exploration_horizon :]
        assert np.mean(after_exploration) <= 0.1
        assert _composite(ours, lam, window) >= _composite(theirs, lam, window)
        print(
            f"✅ replicate {index}: violation rate {np.mean(after_exploration):.3f}, "
            f"composite {_composite(ours, lam, window):.3f} vs random {_composite(theirs, lam, window):.3f}"
        )


def test_cascade_run(tmp_path):
    """Master-slave runs end to end on a cascading environment"""
    print("\n" + "=" * 80)
    print("TEST 7: Cascade Run")
    print("=" * 80)

    settings = _tiny_settings(tmp_path, L=30, K=3, T=100, env="cascade", out_dir=str(tmp_path / "cascade"))
    result = run_replicate(settings, 0)
    assert len(result.series) == 100 and not result.stopped_early
    assert set(result.series.rewards) <= {0.0, 1.0}
    assert all(0.0 <= c <= 1.0 for c in result.series.violations)
    assert result.ground_truth is None
    frame = read_series_csv(result.series_path)
    assert frame["t"].tolist() == list(range(1, 101))
    print(f"✅ 100 cascade rounds, click rate {np.mean(result.series.rewards):.2f}")


def run_all_tests():
    """Run all tests"""
    import tempfile
    from pathlib import Path

    print("\n" + "=" * 80)
    print("HARNESS TEST SUITE")
    print("=" * 80)

    try:
        test_arr()
        test_ground_truth()
        with tempfile.TemporaryDirectory() as tmp:
            test_export(Path(tmp))
            test_report_and_plot(Path(tmp))
            test_replicates(Path(tmp))
            test_reduced_end_to_end(Path(tmp))
            test_cascade_run(Path(tmp))

        print("\n" + "=" * 80)
        print("✅ ALL TESTS PASSED")
        print("=" * 80)
    except Exception as e:
        print(f"\n❌ TEST SUITE FAILED: {e}")
        raise


if __name__ == "__main__":
    run_all_tests()
