"""Task arrivals, remote-execution timing and the per-slot success test.

A task is a (size, cycles-per-bit, deadline) triple queued FIFO at its UE.
Offloading a task costs the uplink transmission time plus the execution
time at the base station, whose CPU budget is split equally among all
tasks served in the slot.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .config import IntentSetConfig, TrafficConfig


@dataclass(frozen=True)
class Intent:
    """A UE's requested QoS: deadline, reliability target and rate floor."""

    deadline_s: float
    reliability_eps: float
    rate_threshold_bps: float


@dataclass
class TaskSpec:
    size_bits: int
    cycles_per_bit: int
    deadline_s: float
    arrival_slot: int
    # reason of the most recent failed transmission, if any; used to
    # attribute the terminal failure when the task later expires
    last_failure: "Outcome | None" = None

    def remaining_s(self, slot: int, slot_duration_s: float) -> float:
        return self.deadline_s - (slot - self.arrival_slot) * slot_duration_s


class Outcome(enum.Enum):
    SUCCESS = "success"
    OUTAGE = "outage"
    DEADLINE_MISS = "deadline_miss"
    COLLISION = "collision"


def sample_intent(cfg: IntentSetConfig, rng: np.random.Generator) -> Intent:
    """Draw one intent from the configured finite menus."""
    return Intent(
        deadline_s=float(rng.choice(cfg.deadline_choices_s)),
        reliability_eps=cfg.reliability_eps,
        rate_threshold_bps=float(rng.choice(cfg.rate_threshold_choices_bps)),
    )


def sample_arrival(
    cfg: TrafficConfig,
    intent: Intent,
    slot: int,
    slot_duration_s: float,
    rng: np.random.Generator,
) -> TaskSpec | None:
    """Bernoulli(p) arrival of one task for the current slot, else None.

    Size and cycle count are uniform over their configured integer ranges.
    The per-task deadline is uniform over the slot-aligned grid between the
    configured minimum and the UE's intent deadline, so the intent bounds
    how tight this UE's tasks can be.
    """
    if rng.random() >= cfg.arrival_prob:
        return None
    size = int(rng.integers(cfg.size_bits[0], cfg.size_bits[1] + 1))
    cycles = int(rng.integers(cfg.cycles_per_bit[0], cfg.cycles_per_bit[1] + 1))
    lo = max(1, round(cfg.deadline_s[0] / slot_duration_s))
    hi = max(lo, round(min(cfg.deadline_s[1], intent.deadline_s) / slot_duration_s))
    deadline = int(rng.integers(lo, hi + 1)) * slot_duration_s
    return TaskSpec(size_bits=size, cycles_per_bit=cycles, deadline_s=deadline, arrival_slot=slot)


def remote_time(task: TaskSpec, rate_bps: float, f_share_hz: float) -> float:
    """Uplink transmission time plus remote execution time, in seconds."""
    if rate_bps <= 0:
        raise ValueError("rate must be > 0 (task is unschedulable)")
    if f_share_hz <= 0:
        raise ValueError("compute share must be > 0 (task is unschedulable)")
    return task.size_bits / rate_bps + task.size_bits * task.cycles_per_bit / f_share_hz


def judge(
    task: TaskSpec,
    rate_bps: float,
    f_share_hz: float,
    intent: Intent,
    remaining_s: float,
) -> Outcome:
    """Classify one scheduled transmission.

    Outage when the achieved rate does not exceed the intent's rate floor
    (the boundary rate == threshold counts as outage); otherwise success iff
    the remote completion time fits the remaining deadline, inclusively.
    """
    if rate_bps <= intent.rate_threshold_bps:
        return Outcome.OUTAGE
    if remote_time(task, rate_bps, f_share_hz) <= remaining_s:
        return Outcome.SUCCESS
    return Outcome.DEADLINE_MISS


def compute_split(n_scheduled_tasks: int, f_max_hz: float) -> float:
    """Equal CPU share per task when n tasks are served in one slot."""
    if n_scheduled_tasks < 1:
        raise ValueError("no tasks scheduled; no split requested")
    if not math.isfinite(f_max_hz) or f_max_hz <= 0:
        raise ValueError("f_max must be positive and finite")
    return f_max_hz / n_scheduled_tasks
