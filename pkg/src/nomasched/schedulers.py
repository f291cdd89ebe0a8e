"""Benchmark scheduling policies.

Every policy consumes the environment read-only and emits a SlotDecision:
an Allocation plus, for random access, the transmitters lost to collisions
(more than two signals on one subcarrier). All policies except the
contention-based one are centralized and can never collide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .actions import (
    NO_UE,
    build_hypergraph,
    greedy_matching,
    matching_to_allocation,
    padded_groups,
)
from .env import Allocation, NomaEnv


@dataclass(frozen=True)
class SlotDecision:
    alloc: Allocation
    collided: tuple[int, ...] = ()


class Scheduler:
    name = "base"

    def begin_episode(self, env: NomaEnv) -> None:
        pass

    def decide(self, env: NomaEnv) -> SlotDecision:
        raise NotImplementedError


class ContentionBased(Scheduler):
    """Random access: each backlogged UE transmits with probability p on a
    uniformly random subcarrier; subcarriers with more than two
    transmitters lose all of them."""

    name = "contention_based"

    def __init__(self, p_transmit: float, seed: int):
        if not 0.0 <= p_transmit <= 1.0:
            raise ValueError("p_transmit must lie in [0, 1]")
        self.p_transmit = p_transmit
        self._rng = np.random.default_rng(seed)

    def decide(self, env: NomaEnv) -> SlotDecision:
        per_channel: list[list[int]] = [[] for _ in range(env.n_channels)]
        for u in range(env.n_ues):
            if env.queues[u] and self._rng.random() < self.p_transmit:
                per_channel[int(self._rng.integers(env.n_channels))].append(u)
        collided: list[int] = []
        groups: list[tuple[int, ...]] = []
        for chan in per_channel:
            if len(chan) > 2:
                collided.extend(chan)
                groups.append(())
            else:
                groups.append(tuple(chan))
        return SlotDecision(Allocation(per_channel=tuple(groups)), tuple(collided))


class ContentionFree(Scheduler):
    """Scheduling-request handshake: a backlogged UE sends a request, the
    base station grants up to 2M requesters one slot later (first come
    first served, far/near paired per subcarrier when possible), and the
    grantee transmits the slot after that."""

    name = "contention_free"

    def __init__(self):
        self._sr_queue: list[tuple[int, int]] = []  # (request_slot, ue), FCFS
        self._grants: dict[int, tuple[tuple[int, ...], ...]] = {}
        self._outstanding: set[int] = set()

    def begin_episode(self, env: NomaEnv) -> None:
        self._sr_queue = []
        self._grants = {}
        self._outstanding = set()

    def decide(self, env: NomaEnv) -> SlotDecision:
        t = env.slot
        groups = self._grants.pop(t, ((),) * env.n_channels)
        transmitting = {u for g in groups for u in g}
        self._outstanding -= transmitting

        # grant requests received in earlier slots for transmission at t+1
        if self._sr_queue:
            occupants: list[list[int]] = [[] for _ in range(env.n_channels)]
            is_far = set(env.far_ids)
            deferred: list[tuple[int, int]] = []
            granted = 0
            for stamp, u in self._sr_queue:
                slot_idx = self._place(occupants, u, is_far)
                if granted < 2 * env.n_channels and slot_idx is not None:
                    occupants[slot_idx].append(u)
                    granted += 1
                else:
                    deferred.append((stamp, u))
            self._sr_queue = deferred
            if granted:
                self._grants[t + 1] = tuple(tuple(g) for g in occupants)

        # new scheduling requests; one in flight per UE, and a UE that is
        # transmitting right now gets acknowledged instead of re-queued
        for u in range(env.n_ues):
            if env.queues[u] and u not in self._outstanding and u not in transmitting:
                self._sr_queue.append((t, u))
                self._outstanding.add(u)

        return SlotDecision(Allocation(per_channel=groups))

    @staticmethod
    def _place(occupants: list[list[int]], u: int, is_far: set[int]) -> int | None:
        ue_far = u in is_far
        for m, chan in enumerate(occupants):
            if len(chan) == 1 and ((chan[0] in is_far) != ue_far):
                return m
        for m, chan in enumerate(occupants):
            if not chan:
                return m
        for m, chan in enumerate(occupants):
            if len(chan) == 1:
                return m
        return None


class SemiStatic(Scheduler):
    """Pre-allocated frame built once per episode: far/near pairs cycle
    over the subcarriers with frame length ceil(N / 2M); assigned UEs with
    empty queues simply leave their position idle."""

    name = "semi_static"

    def __init__(self):
        self._frame: list[Allocation] = []

    def begin_episode(self, env: NomaEnv) -> None:
        far = list(env.far_ids)
        near = list(env.near_ids)
        pairs = [(far[i % len(far)] if far else None, near[i]) for i in range(len(near))]
        frame_len = math.ceil(env.n_ues / (2 * env.n_channels))
        self._frame = []
        for j in range(frame_len):
            groups: list[tuple[int, ...]] = []
            used: set[int] = set()
            for m in range(env.n_channels):
                f, r = pairs[(j * env.n_channels + m) % len(pairs)]
                members = tuple(u for u in (f, r) if u is not None and u not in used)
                used.update(members)
                groups.append(members)
            self._frame.append(Allocation(per_channel=tuple(groups)))

    def decide(self, env: NomaEnv) -> SlotDecision:
        return SlotDecision(self._frame[env.slot % len(self._frame)])


class RoundRobin(Scheduler):
    """Strict turn taking over the id ring, 2M UEs per slot regardless of
    buffer state; the window is paired farthest-with-nearest by large-scale
    gain (ids are path-loss ordered)."""

    name = "round_robin"

    def __init__(self):
        self._pointer = 0

    def begin_episode(self, env: NomaEnv) -> None:
        self._pointer = 0

    def decide(self, env: NomaEnv) -> SlotDecision:
        n, m = env.n_ues, env.n_channels
        window = min(2 * m, n)
        ids = sorted((self._pointer + k) % n for k in range(window))
        self._pointer = (self._pointer + 2 * m) % n
        groups: list[tuple[int, ...]] = []
        for c in range(m):
            a, b = c, len(ids) - 1 - c
            if a < b:
                groups.append((ids[a], ids[b]))
            elif a == b:
                groups.append((ids[a],))
            else:
                groups.append(())
        return SlotDecision(Allocation(per_channel=tuple(groups)))


class HeuristicGreedy(Scheduler):
    """Per-slot greedy maximum-weight hypergraph matching, edge weights
    being the number of head-of-line tasks the pair is predicted to finish
    under the current fading."""

    name = "heuristic"

    def __init__(self, seed: int):
        self._rng = np.random.default_rng(seed)

    def decide(self, env: NomaEnv) -> SlotDecision:
        eligible = [u for u in range(env.n_ues) if env.queues[u]]
        far_ext, near_ext = padded_groups(env.far_ids, env.near_ids,
                                          env.n_channels, eligible)
        grid = predicted_success_grid(env, far_ext, near_ext)
        h = build_hypergraph(env.far_ids, env.near_ids, env.n_channels,
                             eligible=eligible, weight_grid=grid)
        matching = greedy_matching(h, self._rng)
        return SlotDecision(matching_to_allocation(h, matching))


def predicted_success_grid(env: NomaEnv, far_ext: list[int], near_ext: list[int]) -> np.ndarray:
    """Predicted successful task count for every (far, near, subcarrier)
    edge, vectorized over the padded groups.

    The no-UE placeholder behaves as a zero-gain silent member, so single
    transmissions fall out of the same pairwise rate expressions. Execution
    time is predicted with the pessimistic full-load CPU split F_max / 2M.
    """
    sysc = env.cfg.system
    hol = env.hol_arrays()
    f_assumed = sysc.bs_compute_hz / (2 * sysc.n_channels)
    p = sysc.ue_tx_power_w
    noise = env.noise_w
    bw = sysc.bandwidth_per_channel_hz

    def member_arrays(ids: list[int]) -> dict[str, np.ndarray]:
        idx = np.array(ids)
        real = idx != NO_UE
        safe = np.where(real, idx, 0)
        return {
            "real": real,
            "present": np.where(real, hol["present"][safe], False),
            "size": hol["size_bits"][safe],
            "cycles": hol["cycles_per_bit"][safe],
            "remaining": hol["remaining_s"][safe],
            "rth": np.array([env.intents[u].rate_threshold_bps if u != NO_UE else 0.0
                             for u in ids]),
            "gain_rows": np.where(real[:, None], env.gains_sq[safe, :], 0.0),
            "ids": idx,
        }

    F = member_arrays(far_ext)
    R = member_arrays(near_ext)

    # broadcast everything to (n_far, n_near, n_channels) in one pass
    gf = F["gain_rows"][:, None, :]
    gr = R["gain_rows"][None, :, :]
    far_strong = (gf > gr) | ((gf == gr) & (F["ids"][:, None, None] < R["ids"][None, :, None]))
    rate_f = bw * np.log2(1.0 + gf * p / np.where(far_strong, noise + gr * p, noise))
    rate_r = bw * np.log2(1.0 + gr * p / np.where(far_strong, noise, noise + gf * p))

    def ok(member: dict[str, np.ndarray], rate: np.ndarray, axis: int) -> np.ndarray:
        shape = (-1, 1, 1) if axis == 0 else (1, -1, 1)
        size = member["size"].reshape(shape)
        cyc = member["cycles"].reshape(shape)
        rem = member["remaining"].reshape(shape)
        rth = member["rth"].reshape(shape)
        pres = member["present"].reshape(shape)
        t = np.where(rate > 0, size / np.maximum(rate, 1e-300) + size * cyc / f_assumed,
                     np.inf)
        return pres & (rate > rth) & (t <= rem)

    return ok(F, rate_f, 0).astype(float) + ok(R, rate_r, 1).astype(float)


def make_scheduler(name: str, cfg, seed: int) -> Scheduler:
    """Instantiate a baseline scheduler by its CLI name."""
    if name == "contention_based":
        return ContentionBased(cfg.scheduler.contention_p_transmit, seed)
    if name == "contention_free":
        return ContentionFree()
    if name == "semi_static":
        return SemiStatic()
    if name == "round_robin":
        return RoundRobin()
    if name == "heuristic":
        return HeuristicGreedy(seed)
    raise ValueError(f"unknown scheduler {name!r}")


BASELINE_NAMES = ("contention_based", "contention_free", "semi_static",
                  "round_robin", "heuristic")
