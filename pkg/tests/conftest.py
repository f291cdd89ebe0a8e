import numpy as np
import pytest

from nomasched.config import (
    IntentSetConfig,
    SimConfig,
    SystemConfig,
    TrafficConfig,
)


def make_config(
    n_ues=8,
    n_channels=2,
    episode_len_slots=25,
    queue_capacity=50,
    arrival_prob=0.8,
    task_deadline_s=(1e-3, 5e-3),
    deadline_choices_s=(1e-3, 2e-3, 3e-3, 4e-3, 5e-3),
    rate_thresholds=(0.5e6, 1e6, 2e6),
    **system_overrides,
) -> SimConfig:
    cfg = SimConfig(
        system=SystemConfig(
            n_ues=n_ues,
            n_channels=n_channels,
            episode_len_slots=episode_len_slots,
            queue_capacity=queue_capacity,
            **system_overrides,
        ),
        traffic=TrafficConfig(arrival_prob=arrival_prob, deadline_s=task_deadline_s),
        intents=IntentSetConfig(
            deadline_choices_s=deadline_choices_s,
            rate_threshold_choices_bps=rate_thresholds,
        ),
    )
    cfg.validate()
    return cfg


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
