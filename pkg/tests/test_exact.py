import math

import numpy as np
import pytest

from gwwindow import exact
from gwwindow.laws import binary_law, geometric_law, stable_law

BIN = binary_law()
GEO = geometric_law()


class TestIterates:
    def test_binary_hand_values(self):
        it = exact.extinction_iterates(BIN, 2)
        assert it.Q_values[0] == 1.0
        assert it.Q_values[1] == pytest.approx(0.5, abs=1e-15)
        assert it.Q_values[2] == pytest.approx(0.375, abs=1e-15)

    def test_geometric_closed_forms(self):
        it = exact.extinction_iterates(GEO, 500)
        n = np.arange(501)
        assert np.abs(it.Q_values * (n + 1) - 1).max() < 1e-13
        assert np.abs(it.d_values[1:] * (n[1:] + 1) ** 2 / 4 - 1).max() < 1e-13

    def test_monotonicity(self):
        for law in (BIN, GEO, stable_law(0.5, 0.3)):
            it = exact.extinction_iterates(law, 200)
            assert np.all(np.diff(it.f0_values) > 0)
            assert np.all(np.diff(it.Q_values) < 0)
            assert np.all(np.diff(it.d_values[1:]) < 0)
            assert np.all(np.diff(it.a_values) > 0)

    def test_d_product_conventions(self):
        d = exact.derivative_products(BIN, 3)
        assert d[0] == 1.0                       # empty product
        assert d[1] == pytest.approx(0.5)        # f'(f_1(0)) = 1/2

    def test_restricted_means(self):
        a = exact.restricted_means(BIN, 2)
        assert a[0] == pytest.approx(0.5)
        assert a[1] == pytest.approx(0.875)

    def test_restricted_mean_below_full_mean(self):
        for law in (BIN, GEO):
            a = exact.restricted_means(law, 100)
            assert np.all(a <= np.arange(1, 101))


class TestTotalProgeny:
    def test_convolution_oracle_examples(self):
        assert exact.dwass_probability(BIN, 3) == pytest.approx(0.125)
        assert exact.dwass_probability(BIN, 2) == 0.0
        assert exact.dwass_probability(GEO, 1) == pytest.approx(0.5)
        assert exact.dwass_probability(GEO, 2) == pytest.approx(0.125)

    def test_series_matches_oracle(self):
        for law in (BIN, GEO, stable_law(0.6, 0.3)):
            series = exact.total_progeny_pmf(law, 300)
            oracle = exact.dwass_pmf(law, 300)
            assert np.abs(series.coeffs - oracle).max() < 1e-13

    def test_degree_one_is_p0(self):
        for law in (BIN, GEO, stable_law(0.5, 0.3)):
            assert exact.total_progeny_pmf(law, 10).coeffs[1] == \
                pytest.approx(law.pmf(0), abs=1e-14)

    def test_binary_tail_closed_form(self):
        series = exact.total_progeny_pmf(BIN, 400)
        for n in (2, 17, 100, 399):
            assert exact.binary_total_progeny_tail(n) == \
                pytest.approx(series.tail_probability(n), abs=1e-10)

    def test_residual_mass_tracked(self):
        s = exact.total_progeny_pmf(BIN, 50)
        assert s.coeffs.sum() + s.residual_mass == pytest.approx(1.0, abs=1e-9)
        assert s.residual_mass > 0


class TestBivariateSeries:
    def test_depth_one(self):
        s = exact.extinct_progeny_series(BIN, 1, 5)
        assert s.coeffs[0] == 0.0
        assert s.coeffs[1] == pytest.approx(0.5)
        assert s.coeffs[2:].max() == 0.0

    def test_value_at_one_is_extinction_probability(self):
        for law in (BIN, GEO):
            j = 20
            s = exact.extinct_progeny_series(law, j, 400)
            f_j0 = 1.0 - exact.survival_probability(law, j)
            assert s.coeffs.sum() + s.residual_mass == \
                pytest.approx(f_j0, abs=1e-9)

    def test_low_degrees_match_total_progeny(self):
        for law in (BIN, GEO):
            j = 50
            biv = exact.extinct_progeny_series(law, j, j).coeffs
            oracle = exact.dwass_pmf(law, j)
            assert np.abs(biv - oracle).max() < 1e-12


class TestWindowEnum:
    def test_hand_cases(self):
        lo, hi = exact.window_tail_enum(BIN, 1, 2)
        assert lo == pytest.approx(0.5, abs=1e-12) and hi - lo < 1e-12
        lo, hi = exact.window_tail_enum(BIN, 2, 3)
        assert lo == pytest.approx(0.5, abs=1e-10) and hi - lo < 1e-9
        assert exact.window_tail_enum(GEO, 1, 1) == (1.0, 1.0)

    def test_large_window_approaches_total_progeny(self):
        series = exact.total_progeny_pmf(BIN, 60)
        lo, hi = exact.window_tail_enum(BIN, 30, 7, budget=500_000)
        assert lo - 1e-9 <= series.tail_probability(7) <= hi + 1e-9

    def test_interval_never_wrong_under_tiny_budget(self):
        lo, hi = exact.window_tail_enum(GEO, 2, 5, budget=50)
        full_lo, full_hi = exact.window_tail_enum(GEO, 2, 5, budget=500_000)
        assert lo - 1e-12 <= full_lo and hi + 1e-12 >= full_hi


class TestAsymptotics:
    def test_survival_root_closed_forms(self):
        assert exact.survival_root(BIN, 50) == pytest.approx(2.0 / 50, rel=1e-9)
        assert exact.survival_root(GEO, 100) == pytest.approx(1.0 / 99, rel=1e-9)
        s = stable_law(0.5, 2.0 / 3.0)
        assert exact.survival_root(s, 30) == pytest.approx(9.0 / 30**2, rel=1e-9)

    def test_tail_constants(self):
        c = exact.tail_constants(1.0, 1.0)
        assert c["term2_constant"] == pytest.approx(1.0 / math.sqrt(math.pi))
        assert c["cor22_constant"] == pytest.approx(1.0 / math.sqrt(math.pi))
        assert exact.tail_constants(1.0, 4.0)["term2_constant"] == \
            pytest.approx(2.0 / math.sqrt(math.pi))

    def test_tail_constants_domain(self):
        with pytest.raises(ValueError):
            exact.tail_constants(1.5, 1.0)
        with pytest.raises(ValueError):
            exact.tail_constants(1.0, 0.0)


def test_truncated_series_rejects_negative():
    with pytest.raises(ValueError):
        exact.TruncatedSeries(np.array([0.5, -0.1]), 1)
