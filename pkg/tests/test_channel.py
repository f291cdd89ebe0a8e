import math

import numpy as np
import pytest

from nomasched.channel import linear_gain, noise_power_w, noma_rates, pathloss_db, sample_fading


class TestPathloss:
    def test_reference_distances(self):
        assert pathloss_db(1.0) == pytest.approx(128.1, abs=1e-12)
        assert pathloss_db(0.1) == pytest.approx(90.5, abs=1e-12)
        assert pathloss_db(0.01) == pytest.approx(52.9, abs=1e-12)

    @pytest.mark.parametrize("d", [0.0, -1.0])
    def test_nonpositive_distance_rejected(self, d):
        with pytest.raises(ValueError):
            pathloss_db(d)


class TestNoisePower:
    def test_10mhz(self):
        assert noise_power_w(-174.0, 10e6) == pytest.approx(10 ** (-13.4), rel=1e-12)

    def test_1hz(self):
        assert noise_power_w(-174.0, 1.0) == pytest.approx(10 ** (-20.4), rel=1e-12)

    def test_30mhz_dbm(self):
        # frozen from high-precision evaluation of -174 + 10*log10(3e7)
        w = noise_power_w(-174.0, 30e6)
        dbm = 10 * math.log10(w) + 30
        assert dbm == pytest.approx(-99.22878745280338, abs=1e-9)

    def test_zero_bandwidth_rejected(self):
        with pytest.raises(ValueError):
            noise_power_w(-174.0, 0.0)


class TestFading:
    def test_unit_mean_power(self, rng):
        draws = sample_fading(np.ones(100), 10_000, rng)
        assert draws.mean() == pytest.approx(1.0, abs=0.01)

    def test_beta_at_1km(self):
        assert linear_gain(pathloss_db(1.0)) == pytest.approx(10 ** (-12.81), rel=1e-12)

    def test_deterministic_under_seed(self):
        beta = np.array([1e-9, 1e-10, 1e-11])
        a = sample_fading(beta, 4, np.random.default_rng(99))
        b = sample_fading(beta, 4, np.random.default_rng(99))
        assert np.array_equal(a, b)

    def test_shape_and_scaling(self, rng):
        beta = np.array([1e-6, 1e-12])
        g = sample_fading(beta, 3, rng)
        assert g.shape == (2, 3)
        assert np.all(g >= 0)


class TestNomaRates:
    def test_single_unit_snr(self):
        rates = noma_rates([7], [1.0], [1.0], 1.0, 1e6)
        assert rates[7] == 1e6

    def test_single_matches_shannon_exactly(self, rng):
        for _ in range(50):
            g = rng.exponential(1e-9)
            p = rng.uniform(0.01, 1.0)
            n = rng.uniform(1e-15, 1e-12)
            w = rng.uniform(1e5, 3e7)
            got = noma_rates([3], [g], [p], n, w)[3]
            assert got == w * math.log2(1.0 + g * p / n)

    def test_two_ue_reference_case(self):
        # strong received power 3*noise, weak 1*noise
        rates = noma_rates([0, 1], [3.0, 1.0], [1.0, 1.0], 1.0, 1.0)
        assert rates[0] == pytest.approx(1.3219280948873623, rel=1e-12)
        assert rates[1] == pytest.approx(1.0, rel=1e-12)

    def test_zero_weak_gain_gives_clean_strong_rate(self):
        paired = noma_rates([0, 1], [2.5, 0.0], [0.1, 0.1], 1e-13, 1e7)
        alone = noma_rates([0], [2.5], [0.1], 1e-13, 1e7)
        assert paired[0] == alone[0]

    def test_order_of_inputs_is_irrelevant(self, rng):
        for _ in range(20):
            g = rng.exponential(1e-10, size=2)
            a = noma_rates([4, 9], list(g), [0.08, 0.08], 1e-14, 1e7)
            b = noma_rates([9, 4], [g[1], g[0]], [0.08, 0.08], 1e-14, 1e7)
            assert a == b

    def test_gain_tie_breaks_to_lower_id(self):
        rates = noma_rates([5, 2], [1.0, 1.0], [1.0, 1.0], 1.0, 1.0)
        # id 2 is the strong one: decoded under interference from id 5
        assert rates[2] == pytest.approx(math.log2(1.0 + 1.0 / 2.0))
        assert rates[5] == pytest.approx(1.0)

    def test_monotonicity(self, rng):
        noise = 1e-14
        for _ in range(50):
            gs = rng.exponential(1e-10) + 1e-12
            gw = rng.uniform(0, gs * 0.9)
            base = noma_rates([0, 1], [gs, gw], [0.1, 0.1], noise, 1e7)
            up = noma_rates([0, 1], [gs * 1.5, gw], [0.1, 0.1], noise, 1e7)
            worse_partner = noma_rates([0, 1], [gs, gw * 1.1], [0.1, 0.1], noise, 1e7)
            assert up[0] >= base[0]
            assert worse_partner[0] <= base[0]
            assert base[0] >= 0 and base[1] >= 0

    def test_occupancy_and_bandwidth_errors(self):
        with pytest.raises(ValueError):
            noma_rates([0, 1, 2], [1, 1, 1], [1, 1, 1], 1.0, 1e6)
        with pytest.raises(ValueError):
            noma_rates([0], [1.0], [1.0], 1.0, 0.0)
