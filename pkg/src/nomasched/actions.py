"""Channel-assignment action spaces.

The raw action space assigns each of the M subcarriers an ordered choice
among all C = comb(N+1, 2) UE pairs (the extra pseudo-UE makes single-UE
pairs possible), giving P(C, M) actions. The reduced space builds a
3-uniform hypergraph whose edges combine one far-group UE, one near-group
UE and one subcarrier, and uses its size-M matchings as actions; with both
groups fully eligible that is P(F, M) * P(R, M) actions.

When a group has fewer eligible UEs than subcarriers, a virtual "no-UE"
placeholder (persisted as id -1) joins that group so subcarriers can carry
one or zero UEs; the placeholder never conflicts between edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .env import Allocation

NO_UE = -1


def count_full_actions(n_ues: int, n_channels: int) -> int:
    """Size of the unreduced action space: P(comb(N+1, 2), M)."""
    pairs = math.comb(n_ues + 1, 2)
    if n_channels > pairs:
        raise ValueError(f"{n_channels} subcarriers exceed the {pairs} available pair choices")
    return math.perm(pairs, n_channels)


@dataclass(frozen=True)
class Hypergraph:
    """3-uniform hypergraph stored as parallel arrays, grouped by channel.

    Edge i is (fars[i], nears[i], channels[i]); -1 marks the no-UE
    placeholder. Edges are ordered by (channel, far, near) with the
    placeholder sorting last inside its group, so indices are stable.
    """

    fars: np.ndarray
    nears: np.ndarray
    channels: np.ndarray
    weights: np.ndarray
    n_channels: int

    @property
    def n_edges(self) -> int:
        return len(self.fars)

    def edge(self, i: int) -> tuple[int | None, int | None, int]:
        f, r = int(self.fars[i]), int(self.nears[i])
        return (None if f == NO_UE else f, None if r == NO_UE else r, int(self.channels[i]))

    def channel_range(self, m: int) -> range:
        per = self.n_edges // self.n_channels if self.n_channels else 0
        return range(m * per, (m + 1) * per)


def padded_groups(
    far_ids: Sequence[int],
    near_ids: Sequence[int],
    n_channels: int,
    eligible: Iterable[int] | None = None,
) -> tuple[list[int], list[int]]:
    """Eligible members of each group, sorted by id, padded with the no-UE
    placeholder whenever a group is too short to cover every subcarrier."""
    if set(far_ids) & set(near_ids):
        raise ValueError("far and near groups must be disjoint")
    allowed = None if eligible is None else set(eligible)
    far = [u for u in sorted(far_ids) if allowed is None or u in allowed]
    near = [u for u in sorted(near_ids) if allowed is None or u in allowed]
    if len(far) < n_channels:
        far = far + [NO_UE]
    if len(near) < n_channels:
        near = near + [NO_UE]
    return far, near


def build_hypergraph(
    far_ids: Sequence[int],
    near_ids: Sequence[int],
    n_channels: int,
    eligible: Iterable[int] | None = None,
    weight_fn: Callable[[int | None, int | None, int], float] | None = None,
    weight_grid: np.ndarray | None = None,
) -> Hypergraph:
    """Construct the far x near x subcarrier hypergraph.

    ``eligible`` restricts each group to UEs that can actually transmit
    (non-empty queue); by default everyone is eligible. A group shorter
    than ``n_channels`` is padded with the no-UE placeholder so that
    size-M matchings always exist. Weights come from ``weight_fn`` (called
    per edge) or ``weight_grid`` indexed [far_pos, near_pos, channel] over
    the padded groups; default 0.
    """
    far, near = padded_groups(far_ids, near_ids, n_channels, eligible)

    far_arr = np.array(far, dtype=np.int64)
    near_arr = np.array(near, dtype=np.int64)
    nf, nr = len(far_arr), len(near_arr)
    per = nf * nr
    fars = np.tile(np.repeat(far_arr, nr), n_channels)
    nears = np.tile(near_arr, nf * n_channels)
    channels = np.repeat(np.arange(n_channels, dtype=np.int64), per)

    if weight_grid is not None:
        if weight_grid.shape != (nf, nr, n_channels):
            raise ValueError(
                f"weight_grid shape {weight_grid.shape} != {(nf, nr, n_channels)}"
            )
        weights = np.ascontiguousarray(np.transpose(weight_grid, (2, 0, 1))).ravel().astype(float)
    elif weight_fn is not None:
        weights = np.array([
            weight_fn(None if f == NO_UE else int(f), None if r == NO_UE else int(r), int(m))
            for f, r, m in zip(fars, nears, channels)
        ], dtype=float)
    else:
        weights = np.zeros(len(fars))
    return Hypergraph(fars=fars, nears=nears, channels=channels, weights=weights,
                      n_channels=n_channels)


def enumerate_matchings(h: Hypergraph, size: int) -> list[tuple[int, ...]]:
    """All matchings of exactly ``size`` pairwise-disjoint edges.

    Since every edge contains a subcarrier vertex and there are exactly
    ``size`` subcarriers when size == h.n_channels, such matchings use each
    subcarrier once; they are emitted in lexicographic edge order. The
    placeholder id never causes a conflict.
    """
    if size > h.n_channels:
        return []
    results: list[tuple[int, ...]] = []
    used: set[int] = set()
    picked: list[int] = []

    def recurse(channel: int) -> None:
        if len(picked) == size:
            results.append(tuple(picked))
            return
        if h.n_channels - channel < size - len(picked):
            return
        for i in h.channel_range(channel):
            f, r = int(h.fars[i]), int(h.nears[i])
            if (f != NO_UE and f in used) or (r != NO_UE and r in used):
                continue
            picked.append(i)
            if f != NO_UE:
                used.add(f)
            if r != NO_UE:
                used.add(r)
            recurse(channel + 1)
            picked.pop()
            used.discard(f)
            used.discard(r)
        # skipping this subcarrier keeps lexicographic emission order
        recurse(channel + 1)

    recurse(0)
    return results


def enumerate_reduced_actions(h: Hypergraph) -> list[tuple[int, ...]]:
    """The reduced action list: all matchings of size = number of subcarriers."""
    return enumerate_matchings(h, h.n_channels)


def greedy_matching(h: Hypergraph, rng: np.random.Generator) -> tuple[int, ...]:
    """Greedy per-subcarrier maximum-weight matching.

    Walks subcarriers in ascending order, picks the heaviest still-available
    edge on each (uniform random among exact ties), and discards everything
    that intersects it. Edges without positive weight are never taken: they
    cannot raise the matching weight, and claiming their UEs would only
    block heavier edges on later subcarriers. Linear in the edge count.
    """
    used: set[int] = set()
    picked: list[int] = []
    for m in range(h.n_channels):
        best_w = 0.0
        ties: list[int] = []
        for i in h.channel_range(m):
            f, r = int(h.fars[i]), int(h.nears[i])
            if (f != NO_UE and f in used) or (r != NO_UE and r in used):
                continue
            w = h.weights[i]
            if w > best_w:
                best_w = w
                ties = [i]
            elif w == best_w and ties:
                ties.append(i)
        if not ties:
            continue
        choice = ties[0] if len(ties) == 1 else ties[int(rng.integers(len(ties)))]
        picked.append(choice)
        f, r = int(h.fars[choice]), int(h.nears[choice])
        if f != NO_UE:
            used.add(f)
        if r != NO_UE:
            used.add(r)
    return tuple(picked)


def matching_weight(h: Hypergraph, matching: Sequence[int]) -> float:
    return float(sum(h.weights[i] for i in matching))


def matching_edges(h: Hypergraph, matching: Sequence[int]) -> list[tuple[int | None, int | None, int]]:
    return [h.edge(i) for i in matching]


def matching_to_allocation(h: Hypergraph, matching: Sequence[int]) -> Allocation:
    groups: list[tuple[int, ...]] = [() for _ in range(h.n_channels)]
    for i in matching:
        f, r, m = h.edge(i)
        groups[m] = tuple(u for u in (f, r) if u is not None)
    return Allocation(per_channel=tuple(groups))


def enumerate_full_actions(
    n_ues: int, n_channels: int, limit: int = 2_000_000
) -> tuple[list[Allocation], np.ndarray]:
    """Materialize the unreduced action space as Allocations.

    Every action places an ordered selection of M distinct UE pairs (single
    UEs via the pseudo-UE) onto the subcarriers. Pairs may overlap in a UE,
    which breaks the one-subcarrier-per-UE rule; the returned boolean mask
    flags the structurally valid actions.
    """
    total = count_full_actions(n_ues, n_channels)
    if total > limit:
        raise ValueError(f"full action space has {total} actions; refusing to enumerate")
    null = n_ues
    pairs = [(a, b) for a in range(n_ues + 1) for b in range(a + 1, n_ues + 1)]

    actions: list[Allocation] = []
    valid: list[bool] = []

    def recurse(chosen: list[int]) -> None:
        if len(chosen) == n_channels:
            groups = []
            seen: set[int] = set()
            ok = True
            for idx in chosen:
                a, b = pairs[idx]
                group = tuple(u for u in (a, b) if u != null)
                for u in group:
                    if u in seen:
                        ok = False
                    seen.add(u)
                groups.append(group)
            actions.append(Allocation(per_channel=tuple(groups)))
            valid.append(ok)
            return
        for idx in range(len(pairs)):
            if idx in chosen:
                continue
            chosen.append(idx)
            recurse(chosen)
            chosen.pop()

    recurse([])
    assert len(actions) == total
    return actions, np.array(valid, dtype=bool)
