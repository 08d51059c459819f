import math

import numpy as np
import pytest

from gwwindow import limit
from gwwindow.laws import RngStream, binary_law

BIN = binary_law()


class TestWindowFunctional:
    def test_constant_path(self):
        times = np.linspace(0, 3, 301)
        path = limit.LimitPathGrid(times, np.full(301, 2.5), "test")
        assert limit.vstar_of_path(path).vstar == pytest.approx(2.5)

    def test_zero_path(self):
        times = np.linspace(0, 2, 201)
        path = limit.LimitPathGrid(times, np.zeros(201), "test")
        assert limit.vstar_of_path(path).vstar == 0.0

    def test_grid_refinement_invariance_piecewise_constant(self):
        # step path: 1 on [0,1), 3 on [1,2]
        def build(steps):
            t = np.linspace(0, 2, 2 * steps + 1)
            v = np.where(t < 1.0, 1.0, 3.0)
            return limit.LimitPathGrid(t, v, "test")

        coarse = limit.vstar_of_path(build(100)).vstar
        fine = limit.vstar_of_path(build(1000)).vstar
        # trapezoid differs from the step integral only at the single jump cell
        assert coarse == pytest.approx(fine, abs=2e-2)
        assert fine == pytest.approx(3.0, abs=2e-3)

    def test_too_short_horizon_rejected(self):
        times = np.linspace(0, 0.5, 51)
        path = limit.LimitPathGrid(times, np.ones(51), "test")
        with pytest.raises(ValueError):
            limit.vstar_of_path(path)


class TestGwRoute:
    def test_path_contract(self):
        p = limit.gw_limit_path(BIN, 2.0, 200, RngStream(1).generator())
        assert p.times[0] == 0.0 and p.times[-1] == pytest.approx(2.0)
        assert p.values[200] > 0                     # conditioned to survive
        assert p.values.min() >= 0.0

    def test_peak_mean_nondecreasing_in_horizon(self):
        prof = limit.peak_mean_profile(BIN, [1, 2, 4], n_scale=300,
                                       n_paths=400, rng=RngStream(2))
        assert prof[1].estimate <= prof[2].estimate <= prof[4].estimate

    def test_phi_dominates_constant_term(self):
        r = limit.estimate_phi(BIN, 0.5, n_scale=300, n_paths=300,
                               rng=RngStream(3))
        assert r.estimate >= BIN.alpha / (2 * BIN.alpha + 1)

    def test_psi_bookkeeping_identity(self):
        p = limit.estimate_psi(BIN, 1.0, T_cutoff=4.0, n_scale=300,
                               n_paths=300, rng=RngStream(4))
        assert p.estimate == pytest.approx(p.term1 + p.term2 - p.term3)
        assert p.cutoff_bias > 0

    def test_psi_positive_and_monotone(self):
        vals = []
        for y in (0.5, 1.0, 2.0):
            p = limit.estimate_psi(BIN, y, T_cutoff=8.0, n_scale=500,
                                   n_paths=800, rng=RngStream(5))
            assert p.estimate > 0
            vals.append(p.estimate)
        assert vals == sorted(vals)


class TestCsbpRoute:
    def test_absorption(self):
        gen = RngStream(6).generator()
        assert limit.csbp_alpha1_transition(0.0, 1.0, gen) == 0.0

    def test_zero_probability(self):
        gen = RngStream(7).generator()
        x = limit.csbp_alpha1_transition(np.ones(100_000), 1.0, gen)
        p0 = (x == 0).mean()
        se = math.sqrt(p0 * (1 - p0) / len(x))
        assert abs(p0 - math.exp(-1)) < 4 * se

    def test_laplace_transform(self):
        gen = RngStream(8).generator()
        x = limit.csbp_alpha1_transition(np.ones(100_000), 1.0, gen)
        lap = np.exp(-x)
        se = lap.std() / math.sqrt(len(lap))
        assert abs(lap.mean() - math.exp(-0.5)) < 4 * se

    def test_paths_absorbed_stay_absorbed(self):
        paths = limit.csbp_alpha1_paths(3.0, 0.01, 300, RngStream(9).generator())
        unit = 100
        after = paths[:, unit:]
        dead = after == 0
        assert not np.any(dead[:, :-1] & (after[:, 1:] > 0))

    def test_conditioned_marginal_mean_one(self):
        paths = limit.csbp_alpha1_paths(1.0, 0.01, 20_000,
                                        RngStream(10).generator())
        v1 = paths[:, -1]
        assert np.all(v1 > 0)
        se = v1.std() / math.sqrt(len(v1))
        assert abs(v1.mean() - 1.0) < 4 * se
