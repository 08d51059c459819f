import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gwwindow import exact, simulate
from gwwindow.laws import RngStream, binary_law, geometric_law

BIN = binary_law()
GEO = geometric_law()


def test_trajectory_determinism():
    a = simulate.simulate_generations(GEO, 80, RngStream(3).generator())
    b = simulate.simulate_generations(GEO, 80, RngStream(3).generator())
    assert np.array_equal(a.sizes, b.sizes)
    assert a.extinct_at == b.extinct_at


def test_extinction_is_absorbing():
    traj = simulate.simulate_generations(BIN, 200, RngStream(4).generator())
    if traj.extinct_at is not None:
        assert np.all(traj.sizes[traj.extinct_at:] == 0)


def test_total_cap_censors():
    traj = simulate.simulate_generations(GEO, 10**6, RngStream(9).generator(),
                                         total_cap=50)
    assert traj.censored or traj.extinct_at is not None


def test_window_ops_hand_example():
    sizes = [1, 2, 1, 0, 0]
    assert list(simulate.window_sums(sizes, 2)) == [3, 3, 1, 0]
    assert simulate.window_max(sizes, 2) == 3
    assert simulate.window_max(sizes, 1) == 2
    assert simulate.window_max(sizes, 5) == 4
    with pytest.raises(ValueError):
        simulate.window_sums(sizes, 6)


@given(st.lists(st.integers(min_value=0, max_value=20), min_size=1,
                max_size=30), st.integers(min_value=1, max_value=30))
@settings(max_examples=60, deadline=None)
def test_window_sums_match_naive(sizes, j):
    if j > len(sizes):
        j = len(sizes)
    naive = [sum(sizes[k: k + j]) for k in range(len(sizes) - j + 1)]
    assert list(simulate.window_sums(sizes, j)) == naive


def test_window_max_monotone_in_j_and_m():
    traj = simulate.simulate_generations(GEO, 60, RngStream(6).generator())
    s = traj.sizes
    peaks = [simulate.window_max(s, j) for j in range(1, len(s) + 1)]
    assert peaks == sorted(peaks)
    j = 3
    by_horizon = [simulate.window_max(s[:m], j) for m in range(j, len(s) + 1)]
    assert by_horizon == sorted(by_horizon)


def test_martingale_mean():
    gen = RngStream(7).generator()
    z = np.ones(50_000, dtype=np.int64)
    for _ in range(100):
        z = BIN.offspring_sum(z, gen)
    se = z.std() / math.sqrt(len(z))
    assert abs(z.mean() - 1.0) < 4 * se


def test_survivor_mean_matches_inverse_survival():
    n = 100
    zs = simulate.conditioned_final_sizes(BIN, n, 5000, RngStream(8))
    q = exact.survival_probability(BIN, n)
    se = zs.std() / math.sqrt(len(zs))
    assert abs(zs.mean() - 1.0 / q) < 4 * se


def test_mean_window_max_full_horizon_identity():
    m = 200
    r = simulate.estimate_mean_window_max(BIN, m, m, 4000, RngStream(10))
    assert abs(r.estimate - m) < 4 * r.std_error
    assert r.censor_lo == r.estimate == r.censor_hi


def test_mean_window_max_matches_per_path_reference():
    m, j, n_samp = 40, 4, 30_000
    r = simulate.estimate_mean_window_max(GEO, m, j, n_samp, RngStream(11))
    gen = RngStream(12).generator()
    ref = np.array([simulate.window_max(
        simulate.simulate_generations(GEO, m - 1, gen).sizes, j)
        for _ in range(20_000)])
    se = math.hypot(r.std_error, ref.std(ddof=1) / math.sqrt(len(ref)))
    assert abs(r.estimate - ref.mean()) < 4 * se


@pytest.mark.parametrize("j,n", [(1, 2), (1, 3), (2, 3), (2, 4), (3, 5)])
def test_tail_estimate_brackets_enumeration(j, n):
    lo, hi = exact.window_tail_enum(BIN, j, n, budget=500_000)
    r = simulate.estimate_window_tail(BIN, j, n, 10**5, RngStream(13 + j + n))
    assert r.censor_lo - 4 * r.std_error <= hi
    assert r.censor_hi + 4 * r.std_error >= lo


def test_tail_estimate_trivial_level():
    r = simulate.estimate_window_tail(GEO, 3, 1, 100, RngStream(14))
    assert r.estimate == 1.0 and r.censor_hi == 1.0


def test_tail_finite_horizon_has_no_censoring():
    r = simulate.estimate_window_tail(GEO, 1, 4, 20_000, RngStream(15),
                                      horizon=3)
    assert r.censor_lo == r.censor_hi == r.estimate


def test_conditioned_trajectory_contract():
    traj = simulate.conditioned_trajectory(BIN, 50, RngStream(16).generator())
    assert traj.sizes[50] > 0


def test_conditioned_paths_shape_and_survival():
    paths = simulate.conditioned_paths(BIN, 60, 40, RngStream(17))
    assert paths.shape == (40, 61)
    assert np.all(paths[:, 0] == 1)
    assert np.all(paths[:, -1] > 0)
    # no resurrection inside any path
    dead = paths == 0
    assert not np.any(dead[:, :-1] & (paths[:, 1:] > 0))


def test_worker_count_does_not_change_result():
    r1 = simulate.estimate_window_tail(GEO, 2, 4, 50_000, RngStream(18),
                                       workers=1, batch=1 << 12)
    r2 = simulate.estimate_window_tail(GEO, 2, 4, 50_000, RngStream(18),
                                       workers=2, batch=1 << 12)
    assert r1.estimate == r2.estimate


def test_estimator_result_validates():
    with pytest.raises(ValueError):
        simulate.EstimatorResult(0.5, -1.0, 10, 0.4, 0.6)
    with pytest.raises(ValueError):
        simulate.EstimatorResult(0.9, 0.1, 10, 0.1, 0.2)
