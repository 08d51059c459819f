import math

import pytest

from gwwindow import bounds
from gwwindow.laws import RngStream, binary_law, geometric_law, stable_law

BIN = binary_law()
GEO = geometric_law()


class TestRightSides:
    def test_doob_examples(self):
        assert bounds.doob_rhs(BIN, 1, 2) == pytest.approx(0.5)
        assert bounds.doob_rhs(BIN, 1, 4) == pytest.approx(0.125)

    def test_doob_rejects_infinite_variance(self):
        with pytest.raises(ValueError):
            bounds.doob_rhs(stable_law(0.5, 0.3), 1, 4)

    def test_vah1_no_variance_term_two_implementations(self):
        # m=0 removes the truncated-variance term; compare against the
        # direct textbook evaluation
        direct = (1.0 + 0.5) / ((1.0 + 1.0) ** 4 - 1.0)
        assert bounds.vah1_rhs(BIN, 0, 4, 1.0, 2) == pytest.approx(direct)

    def test_vah1_binary_tail_term_vanishes(self):
        # support <= 2 means the m P(xi > R) add-on is zero for R >= 2
        small_k = bounds.vah1_rhs(BIN, 3, 2, 0.5, 2)
        huge_k = bounds.vah1_rhs(BIN, 3, 10**6, 0.5, 2)
        assert small_k > huge_k
        assert huge_k == pytest.approx(0.0, abs=1e-12)

    def test_vah1_large_k_limit_is_tail_term(self):
        val = bounds.vah1_rhs(GEO, 5, 10**7, 0.3, 4)
        assert val == pytest.approx(5 * float(GEO.tail(4)), rel=1e-6)

    def test_vah1_overflow_guarded(self):
        assert math.isinf(bounds.vah1_rhs(GEO, 10, 100, 50.0, 50))
        assert bounds.vah1_rhs(GEO, 10, 100, 8.0, 100) > 0


class TestY0:
    def test_outside_regime_is_none(self):
        # k/(m B_k) = 4/(4*1) = 1 <= e for the binary law
        assert bounds.default_y0(BIN, 4, 4) is None

    def test_inside_regime_positive(self):
        y0 = bounds.default_y0(BIN, 1, 64)
        assert y0 is not None and y0 > 0


class TestTruncatedVarianceComparison:
    def test_binary_equality(self):
        for R in (2, 5, 100):
            assert bounds.truncated_variance_bound_gap(BIN, R) == \
                pytest.approx(0.0, abs=1e-12)

    def test_holds_for_all_families(self):
        for law in (BIN, GEO, stable_law(0.5, 0.3)):
            for R in (2, 10, 200):
                assert bounds.truncated_variance_bound_gap(law, R) >= -1e-12


class TestGrid:
    def test_no_violations(self):
        for law in (BIN, GEO):
            reports = bounds.check_grid(law, RngStream(1), n_samples=30_000)
            assert all(r.verdict != "violated_beyond_3SE" for r in reports)

    def test_doob_tight_point(self):
        rep = bounds.check_bound("doob", BIN, 1, 2, 50_000, RngStream(2))
        assert rep.verdict == "holds"
        assert rep.mc_lhs.estimate == pytest.approx(0.5, abs=0.01)
        assert rep.rhs_value == pytest.approx(0.5)

    def test_unknown_bound_rejected(self):
        with pytest.raises(ValueError):
            bounds.check_bound("nope", BIN, 1, 2, 100, RngStream(3))


def test_running_max_scaling_bounded():
    diag = bounds.running_max_scaling(BIN, RngStream(4), n_samples=20_000)
    assert all(d["ratio"] <= 10.0 for d in diag)
