"""Slot-stepped uplink offloading environment.

One environment instance simulates one episode: N IIoT UEs dropped
uniformly in a square around a centre base station, each with a FIFO task
queue, a sampled QoS intent, and per-slot Rayleigh block fading on M
shared subcarriers. A step consumes an Allocation (at most two UEs per
subcarrier, each UE on at most one), decodes the resulting NOMA rates,
judges each scheduled head-of-line task, ages queues, evicts expired
tasks and draws new arrivals.

UE ids are assigned in order of decreasing path loss, so ids [0, N//2)
are the "far" group (path loss above the median) and the rest the "near"
group; ties at the boundary resolve toward far. An instance is
single-writer: only one caller may step it, but distinct instances are
fully independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import channel
from .config import SimConfig
from .traffic import Intent, Outcome, TaskSpec, compute_split, judge, sample_arrival, sample_intent

FEATURES_PER_UE = 4  # queue length + head-of-line (size, cycles, remaining slots)


@dataclass(frozen=True)
class Allocation:
    """Per-subcarrier groups of UE ids; the environment action."""

    per_channel: tuple[tuple[int, ...], ...]

    @property
    def scheduled(self) -> tuple[int, ...]:
        return tuple(u for group in self.per_channel for u in group)

    def validate(self, n_ues: int, n_channels: int) -> None:
        if len(self.per_channel) != n_channels:
            raise ValueError(
                f"allocation covers {len(self.per_channel)} channels, expected {n_channels}"
            )
        seen: set[int] = set()
        for group in self.per_channel:
            if len(group) > 2:
                raise ValueError(f"subcarrier occupancy {len(group)} exceeds 2")
            for u in group:
                if not 0 <= u < n_ues:
                    raise ValueError(f"unknown UE id {u}")
                if u in seen:
                    raise ValueError(f"UE {u} appears on more than one subcarrier")
                seen.add(u)


def empty_allocation(n_channels: int) -> Allocation:
    return Allocation(per_channel=((),) * n_channels)


def slot_reward(outcomes: dict[int, Outcome], rho: float) -> float:
    """+rho per successful scheduled task, -rho per failed one."""
    return rho * sum(1.0 if o is Outcome.SUCCESS else -1.0 for o in outcomes.values())


@dataclass
class EpisodeLog:
    """Per-episode counters; failure categories are terminal (once per task)."""

    arrivals: int = 0
    successes: int = 0
    dropped: int = 0
    failed_outage: int = 0
    failed_deadline: int = 0
    failed_collision: int = 0
    failed_evicted: int = 0
    attempts: int = 0
    collided_attempts: int = 0
    success_bits: int = 0
    reward_total: float = 0.0
    slots: int = 0
    residual: int = 0
    ue_transmissions: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    ue_outage_events: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def failed_total(self) -> int:
        return (self.failed_outage + self.failed_deadline + self.failed_collision
                + self.failed_evicted + self.dropped)


@dataclass
class StepResult:
    outcomes: dict[int, Outcome]
    reward: float
    observation: np.ndarray
    done: bool


class NomaEnv:
    """One seeded episode of the uplink offloading system."""

    def __init__(self, cfg: SimConfig, seed: int):
        cfg.validate()
        self.cfg = cfg
        sys = cfg.system
        if sys.n_ues < 2:
            raise ValueError("NOMA pairing needs at least 2 UEs")
        self.n_ues = sys.n_ues
        self.n_channels = sys.n_channels
        self._rng = np.random.default_rng(seed)
        self.seed = seed

        # uniform drop in the square, base station at the centre
        half = sys.area_side_m / 2.0
        raw_pos = self._rng.uniform(0.0, sys.area_side_m, size=(self.n_ues, 2))
        dist_m = np.maximum(
            np.hypot(raw_pos[:, 0] - half, raw_pos[:, 1] - half),
            cfg.channel.min_distance_m,
        )
        raw_pl = np.array([
            channel.pathloss_db(d / 1000.0, cfg.channel.pathloss_offset_db,
                                cfg.channel.pathloss_slope_db)
            for d in dist_m
        ])
        # relabel ids by decreasing path loss (stable, so placement order
        # breaks exact ties); far group = ids above the median path loss
        order = np.argsort(-raw_pl, kind="stable")
        self.positions_m = raw_pos[order]
        self.pathloss_db = raw_pl[order]
        self.beta = channel.linear_gain(self.pathloss_db)
        n_far = self.n_ues // 2
        self.far_ids: tuple[int, ...] = tuple(range(n_far))
        self.near_ids: tuple[int, ...] = tuple(range(n_far, self.n_ues))

        self.intents: list[Intent] = [sample_intent(cfg.intents, self._rng)
                                      for _ in range(self.n_ues)]
        self.noise_w = channel.noise_power_w(sys.noise_psd_dbm_hz, sys.bandwidth_per_channel_hz)
        self.powers_w = np.full(self.n_ues, sys.ue_tx_power_w)

        self.queues: list[list[TaskSpec]] = [[] for _ in range(self.n_ues)]
        self.log = EpisodeLog(
            ue_transmissions=np.zeros(self.n_ues, dtype=int),
            ue_outage_events=np.zeros(self.n_ues, dtype=int),
        )
        self.log.slots = sys.episode_len_slots
        self.slot = 0
        self.done = False

        self._draw_arrivals()
        self.gains_sq = channel.sample_fading(self.beta, self.n_channels, self._rng)
        self._frames: list[np.ndarray] = [
            np.zeros(self._frame_len()) for _ in range(sys.obs_history_len - 1)
        ]
        self._frames.append(self._build_frame())

    # ------------------------------------------------------------------
    # views used by schedulers and agents
    # ------------------------------------------------------------------
    def queue_lengths(self) -> np.ndarray:
        return np.array([len(q) for q in self.queues], dtype=int)

    def nonempty_mask(self) -> np.ndarray:
        return np.array([bool(q) for q in self.queues], dtype=bool)

    def hol_arrays(self) -> dict[str, np.ndarray]:
        """Head-of-line task features as vectors (zeros where queues are empty)."""
        present = np.zeros(self.n_ues, dtype=bool)
        size = np.zeros(self.n_ues)
        cycles = np.zeros(self.n_ues)
        remaining = np.zeros(self.n_ues)
        for u, q in enumerate(self.queues):
            if q:
                present[u] = True
                size[u] = q[0].size_bits
                cycles[u] = q[0].cycles_per_bit
                remaining[u] = q[0].remaining_s(self.slot, self.cfg.system.slot_duration_s)
        return {"present": present, "size_bits": size, "cycles_per_bit": cycles,
                "remaining_s": remaining}

    def observation(self) -> np.ndarray:
        return np.concatenate(self._frames)

    def observation_len(self) -> int:
        return self.cfg.system.obs_history_len * self._frame_len()

    def episode_log(self) -> EpisodeLog:
        self.log.residual = int(self.queue_lengths().sum())
        return self.log

    # ------------------------------------------------------------------
    # dynamics
    # ------------------------------------------------------------------
    def step(self, alloc: Allocation, collided: tuple[int, ...] = ()) -> StepResult:
        """Advance one slot under the given allocation.

        ``collided`` lists transmitters whose subcarrier carried more than
        two signals (random access only); they count as failed attempts and
        are never decoded. Tasks stay queued after a failed transmission and
        leave only on success or when their deadline expires.
        """
        if self.done:
            raise RuntimeError("cannot step a finished episode")
        alloc.validate(self.n_ues, self.n_channels)
        sys = self.cfg.system
        allocated = set(alloc.scheduled)
        seen_collided: set[int] = set()
        for u in collided:
            if not 0 <= u < self.n_ues:
                raise ValueError(f"unknown UE id {u} in collision list")
            if u in seen_collided:
                raise ValueError(f"UE {u} listed as collided twice")
            if u in allocated:
                raise ValueError(f"UE {u} both allocated and collided")
            if not self.queues[u]:
                raise ValueError(f"collided UE {u} has no task to transmit")
            seen_collided.add(u)

        outcomes: dict[int, Outcome] = {}
        for u in collided:
            self.queues[u][0].last_failure = Outcome.COLLISION
            outcomes[u] = Outcome.COLLISION
            self.log.attempts += 1
            self.log.collided_attempts += 1
            self.log.ue_transmissions[u] += 1

        # UEs assigned a subcarrier transmit only if they have a task
        transmitting = [tuple(u for u in group if self.queues[u])
                        for group in alloc.per_channel]
        n_tasks = sum(len(g) for g in transmitting)
        if n_tasks:
            f_share = compute_split(n_tasks, sys.bs_compute_hz)
            for m, group in enumerate(transmitting):
                if not group:
                    continue
                rates = channel.noma_rates(
                    group,
                    [self.gains_sq[u, m] for u in group],
                    [self.powers_w[u] for u in group],
                    self.noise_w,
                    sys.bandwidth_per_channel_hz,
                )
                for u in group:
                    task = self.queues[u][0]
                    remaining = task.remaining_s(self.slot, sys.slot_duration_s)
                    result = judge(task, rates[u], f_share, self.intents[u], remaining)
                    outcomes[u] = result
                    self.log.attempts += 1
                    self.log.ue_transmissions[u] += 1
                    if result is Outcome.SUCCESS:
                        self.queues[u].pop(0)
                        self.log.successes += 1
                        self.log.success_bits += task.size_bits
                    else:
                        task.last_failure = result
                        if result is Outcome.OUTAGE:
                            self.log.ue_outage_events[u] += 1

        reward = slot_reward(outcomes, sys.reward_magnitude)
        self.log.reward_total += reward

        self.slot += 1
        if self.slot >= sys.episode_len_slots:
            self.done = True
        else:
            self._evict_expired()
            self._draw_arrivals()
            self.gains_sq = channel.sample_fading(self.beta, self.n_channels, self._rng)

        if self.cfg.system.obs_history_len > 1:
            self._frames.pop(0)
            self._frames.append(self._build_frame())
        else:
            self._frames[0] = self._build_frame()
        return StepResult(outcomes=outcomes, reward=reward,
                          observation=self.observation(), done=self.done)

    def _evict_expired(self) -> None:
        T = self.cfg.system.slot_duration_s
        for u, q in enumerate(self.queues):
            kept: list[TaskSpec] = []
            for task in q:
                if task.remaining_s(self.slot, T) > 0:
                    kept.append(task)
                elif task.last_failure is Outcome.OUTAGE:
                    self.log.failed_outage += 1
                elif task.last_failure is Outcome.DEADLINE_MISS:
                    self.log.failed_deadline += 1
                elif task.last_failure is Outcome.COLLISION:
                    self.log.failed_collision += 1
                else:
                    self.log.failed_evicted += 1
            self.queues[u] = kept

    def _draw_arrivals(self) -> None:
        cfg = self.cfg
        for u in range(self.n_ues):
            task = sample_arrival(cfg.traffic, self.intents[u], self.slot,
                                  cfg.system.slot_duration_s, self._rng)
            if task is None:
                continue
            self.log.arrivals += 1
            if len(self.queues[u]) < cfg.system.queue_capacity:
                self.queues[u].append(task)
            else:
                self.log.dropped += 1

    # ------------------------------------------------------------------
    # observation encoding
    # ------------------------------------------------------------------
    def _frame_len(self) -> int:
        return self.n_ues * FEATURES_PER_UE + self.n_ues * self.n_channels

    def _build_frame(self) -> np.ndarray:
        """Scaled per-slot snapshot: per-UE queue/HOL features then gains.

        Everything is mapped to roughly [0, 1]: queue length over capacity,
        task size and cycles over their configured maxima, remaining
        deadline over the largest configured deadline, and |h|^2 via an
        affine map of its dB value.
        """
        sys = self.cfg.system
        tr = self.cfg.traffic
        feats = np.zeros((self.n_ues, FEATURES_PER_UE))
        max_slots = tr.deadline_s[1] / sys.slot_duration_s
        for u, q in enumerate(self.queues):
            feats[u, 0] = len(q) / sys.queue_capacity
            if q:
                hol = q[0]
                feats[u, 1] = hol.size_bits / tr.size_bits[1]
                feats[u, 2] = hol.cycles_per_bit / tr.cycles_per_bit[1]
                feats[u, 3] = hol.remaining_s(self.slot, sys.slot_duration_s) / (
                    max_slots * sys.slot_duration_s)
        gains_db = 10.0 * np.log10(self.gains_sq + 1e-30)
        gains_scaled = np.clip((gains_db + 120.0) / 110.0, 0.0, 2.0)
        return np.concatenate([feats.ravel(), gains_scaled.ravel()])
