import numpy as np
import pytest

from nomasched.config import IntentSetConfig, TrafficConfig
from nomasched.traffic import (
    Intent,
    Outcome,
    TaskSpec,
    compute_split,
    judge,
    remote_time,
    sample_arrival,
    sample_intent,
)


def _task(size=100, cycles=1000, deadline=5e-3, arrival=0):
    return TaskSpec(size_bits=size, cycles_per_bit=cycles, deadline_s=deadline,
                    arrival_slot=arrival)


def _intent(rth=1e6, deadline=5e-3):
    return Intent(deadline_s=deadline, reliability_eps=1e-3, rate_threshold_bps=rth)


class TestRemoteTime:
    def test_small_task(self):
        t = remote_time(_task(100, 1000), 1e6, 4e10)
        assert t == pytest.approx(1.025e-4, rel=1e-12)

    def test_infinite_compute_limit(self):
        t = remote_time(_task(100, 1000), 1e6, 1e30)
        assert t == pytest.approx(100 / 1e6, rel=1e-9)

    def test_heavy_task(self):
        t = remote_time(_task(500, 20_000), 2e6, 4e10)
        assert t == pytest.approx(5e-4, rel=1e-12)

    def test_zero_rate_or_share_rejected(self):
        with pytest.raises(ValueError):
            remote_time(_task(), 0.0, 1e9)
        with pytest.raises(ValueError):
            remote_time(_task(), 1e6, 0.0)

    def test_monotone(self, rng):
        for _ in range(30):
            task = _task(size=int(rng.integers(100, 501)), cycles=int(rng.integers(100, 20001)))
            r, f = rng.uniform(1e5, 1e8), rng.uniform(1e9, 1e12)
            assert remote_time(task, r * 2, f) < remote_time(task, r, f)
            assert remote_time(task, r, f * 2) < remote_time(task, r, f)
            bigger = _task(size=task.size_bits + 1, cycles=task.cycles_per_bit)
            assert remote_time(bigger, r, f) > remote_time(task, r, f)


class TestJudge:
    def test_rate_equal_to_threshold_is_outage(self):
        out = judge(_task(), 1e6, 1e12, _intent(rth=1e6), remaining_s=1.0)
        assert out is Outcome.OUTAGE

    def test_exact_deadline_boundary_succeeds(self):
        task = _task(size=100, cycles=1000)
        rate, f = 1e6, 4e10
        remaining = remote_time(task, rate, f)
        assert judge(task, rate, f, _intent(rth=1e3), remaining) is Outcome.SUCCESS

    def test_fast_rate_late_deadline_misses(self):
        out = judge(_task(size=500, cycles=20_000), 2e6, 4e10, _intent(rth=1e3),
                    remaining_s=4e-4)
        assert out is Outcome.DEADLINE_MISS


class TestComputeSplit:
    @pytest.mark.parametrize("n,expected", [(1, 120e9), (6, 20e9), (3, 40e9)])
    def test_equal_split(self, n, expected):
        assert compute_split(n, 120e9) == pytest.approx(expected, rel=1e-15)

    def test_zero_tasks_rejected(self):
        with pytest.raises(ValueError):
            compute_split(0, 120e9)


class TestArrivals:
    def test_never_arrives_at_zero_prob(self, rng):
        cfg = TrafficConfig(arrival_prob=0.0)
        assert all(
            sample_arrival(cfg, _intent(), 0, 1e-3, rng) is None for _ in range(1000)
        )

    def test_always_arrives_at_unit_prob(self, rng):
        cfg = TrafficConfig(arrival_prob=1.0)
        assert all(
            sample_arrival(cfg, _intent(), 3, 1e-3, rng) is not None for _ in range(1000)
        )

    def test_empirical_rate(self):
        cfg = TrafficConfig(arrival_prob=0.8)
        rng = np.random.default_rng(7)
        hits = sum(
            sample_arrival(cfg, _intent(), 0, 1e-3, rng) is not None for _ in range(100_000)
        )
        assert hits / 100_000 == pytest.approx(0.8, abs=0.01)

    def test_draw_ranges(self, rng):
        cfg = TrafficConfig(arrival_prob=1.0)
        for _ in range(500):
            task = sample_arrival(cfg, _intent(deadline=3e-3), 5, 1e-3, rng)
            assert 100 <= task.size_bits <= 500
            assert 100 <= task.cycles_per_bit <= 20_000
            # intent deadline caps the per-task draw
            assert 1e-3 <= task.deadline_s <= 3e-3 + 1e-12
            assert task.arrival_slot == 5

    def test_intent_sampled_from_menus(self, rng):
        cfg = IntentSetConfig(
            deadline_choices_s=(1e-3, 2e-3),
            rate_threshold_choices_bps=(5e5, 2e6),
            reliability_eps=1e-3,
        )
        seen_d, seen_r = set(), set()
        for _ in range(200):
            it = sample_intent(cfg, rng)
            assert it.deadline_s in cfg.deadline_choices_s
            assert it.rate_threshold_bps in cfg.rate_threshold_choices_bps
            assert it.reliability_eps == 1e-3
            seen_d.add(it.deadline_s)
            seen_r.add(it.rate_threshold_bps)
        assert seen_d == set(cfg.deadline_choices_s)
        assert seen_r == set(cfg.rate_threshold_choices_bps)
