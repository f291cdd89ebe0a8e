import itertools
import math

import numpy as np
import pytest

from nomasched.actions import (
    NO_UE,
    build_hypergraph,
    count_full_actions,
    enumerate_full_actions,
    enumerate_matchings,
    enumerate_reduced_actions,
    greedy_matching,
    matching_edges,
    matching_to_allocation,
    matching_weight,
)


def brute_force_matchings(h, size):
    """Independent oracle: filter all edge subsets for pairwise disjointness."""
    found = []
    for combo in itertools.combinations(range(h.n_edges), size):
        used = set()
        chans = set()
        ok = True
        for i in combo:
            f, r, m = h.edge(i)
            members = {x for x in (f, r) if x is not None}
            if members & used or m in chans:
                ok = False
                break
            used |= members
            chans.add(m)
        if ok:
            found.append(tuple(sorted(combo)))
    return found


def brute_force_best_weight(h):
    """Max total weight over matchings of any size, by exhaustive search."""
    best = 0.0
    for size in range(1, h.n_channels + 1):
        for matching in brute_force_matchings(h, size):
            best = max(best, matching_weight(h, matching))
    return best


class TestCountFullActions:
    def test_reference_values(self):
        assert count_full_actions(4, 2) == 90
        assert count_full_actions(4, 1) == 10
        assert count_full_actions(30, 3) == 99_896_880

    def test_too_many_channels_rejected(self):
        with pytest.raises(ValueError):
            count_full_actions(1, 2)


class TestBuildHypergraph:
    def test_full_cross_product(self):
        h = build_hypergraph((0, 1), (2, 3), 2)
        assert h.n_edges == 8
        assert not np.any(h.fars == NO_UE)

    def test_no_eligible_gives_idle_edges(self):
        h = build_hypergraph((0, 1), (2, 3), 2, eligible=())
        assert h.n_edges == 2
        assert np.all(h.fars == NO_UE)
        assert np.all(h.nears == NO_UE)

    def test_small_groups(self):
        h = build_hypergraph((0, 1), (2,), 1)
        assert h.n_edges == 2

    def test_scarce_group_padded(self):
        h = build_hypergraph((0, 1), (2,), 2)
        # near group shorter than channel count gains the placeholder
        assert h.n_edges == 2 * 2 * 2
        assert np.any(h.nears == NO_UE)

    def test_overlapping_groups_rejected(self):
        with pytest.raises(ValueError):
            build_hypergraph((0, 1), (1, 2), 1)

    def test_edge_order_is_stable(self):
        a = build_hypergraph((3, 1), (5, 4), 2)
        b = build_hypergraph((1, 3), (4, 5), 2)
        assert np.array_equal(a.fars, b.fars)
        assert np.array_equal(a.nears, b.nears)
        assert np.array_equal(a.channels, b.channels)


class TestEnumerateReducedActions:
    def test_four_ue_two_channel_reference_set(self):
        h = build_hypergraph((1, 2), (3, 4), 2)
        matchings = enumerate_reduced_actions(h)
        got = {frozenset(matching_edges(h, m)) for m in matchings}
        expected = {
            frozenset({(1, 3, 0), (2, 4, 1)}),
            frozenset({(2, 4, 0), (1, 3, 1)}),
            frozenset({(1, 4, 0), (2, 3, 1)}),
            frozenset({(2, 3, 0), (1, 4, 1)}),
        }
        assert got == expected

    def test_count_formula_three_by_three(self):
        h = build_hypergraph((0, 1, 2), (3, 4, 5), 2)
        matchings = enumerate_reduced_actions(h)
        assert len(matchings) == math.perm(3, 2) * math.perm(3, 2) == 36
        assert sorted(matchings) == sorted(brute_force_matchings(h, 2))

    def test_single_channel_count(self):
        h = build_hypergraph((0, 1, 2), (3, 4), 1)
        assert len(enumerate_reduced_actions(h)) == 6

    def test_idle_hypergraph_has_one_action(self):
        h = build_hypergraph((0, 1), (2, 3), 2, eligible=())
        matchings = enumerate_reduced_actions(h)
        assert len(matchings) == 1
        alloc = matching_to_allocation(h, matchings[0])
        assert alloc.per_channel == ((), ())

    def test_matches_brute_force_with_scarce_groups(self):
        for n_far, n_near, m in [(1, 3, 2), (0, 2, 2), (2, 2, 3), (1, 1, 2)]:
            far = tuple(range(n_far))
            near = tuple(range(10, 10 + n_near))
            h = build_hypergraph(far, near, m)
            got = enumerate_matchings(h, m)
            assert sorted(got) == sorted(brute_force_matchings(h, m))

    def test_all_matchings_map_to_valid_allocations(self):
        for f, r, m in itertools.product((1, 2, 3), (1, 2, 3), (1, 2)):
            far = tuple(range(f))
            near = tuple(range(10, 10 + r))
            h = build_hypergraph(far, near, m)
            for matching in enumerate_reduced_actions(h):
                alloc = matching_to_allocation(h, matching)
                alloc.validate(n_ues=20, n_channels=m)

    def test_enumeration_order_is_deterministic(self):
        h1 = build_hypergraph((0, 1, 2), (3, 4, 5), 2)
        h2 = build_hypergraph((2, 1, 0), (5, 4, 3), 2)
        assert enumerate_reduced_actions(h1) == enumerate_reduced_actions(h2)


class TestGreedyMatching:
    def test_picks_heaviest_edge(self):
        h = build_hypergraph((0,), (1, 2), 1,
                             weight_fn=lambda f, r, m: 5.0 if r == 2 else 3.0)
        picked = greedy_matching(h, np.random.default_rng(0))
        assert [h.edge(i) for i in picked] == [(0, 2, 0)]

    def test_deletion_of_intersecting_edges(self):
        weights = {(0, 2, 0): 9.0, (0, 3, 1): 5.0, (1, 3, 1): 1.0}
        h = build_hypergraph((0, 1), (2, 3), 2,
                             weight_fn=lambda f, r, m: weights.get((f, r, m), 0.0))
        picked = greedy_matching(h, np.random.default_rng(0))
        edges = matching_edges(h, picked)
        assert (0, 2, 0) in edges
        # channel 1's best edge shares UE 0 and must have been discarded
        assert (0, 3, 1) not in edges

    def test_equal_weights_yield_some_valid_matching(self):
        h = build_hypergraph((0, 1), (2, 3), 2, weight_fn=lambda f, r, m: 1.0)
        all_matchings = set(enumerate_reduced_actions(h))
        seen = set()
        for seed in range(20):
            picked = greedy_matching(h, np.random.default_rng(seed))
            assert tuple(sorted(picked)) in all_matchings
            seen.add(picked)
        assert len(seen) > 1  # tie-break actually randomizes

    def test_selected_edge_is_max_weight_among_available(self, rng):
        for trial in range(30):
            h = build_hypergraph((0, 1, 2), (3, 4, 5), 3,
                                 weight_grid=rng.integers(0, 3, size=(3, 3, 3)).astype(float))
            picked = greedy_matching(h, np.random.default_rng(trial))
            used = set()
            for i in picked:
                f, r, m = h.edge(i)
                best = max(
                    h.weights[j]
                    for j in h.channel_range(m)
                    if not ({x for x in h.edge(j)[:2] if x is not None} & used)
                )
                assert h.weights[i] == best
                used |= {x for x in (f, r) if x is not None}

    def test_greedy_is_deterministic_per_seed(self):
        h = build_hypergraph((0, 1), (2, 3), 2, weight_fn=lambda f, r, m: 1.0)
        a = greedy_matching(h, np.random.default_rng(42))
        b = greedy_matching(h, np.random.default_rng(42))
        assert a == b


class TestFullActionEnumeration:
    def test_matches_closed_form_count(self):
        actions, valid = enumerate_full_actions(4, 2)
        assert len(actions) == 90
        assert valid.shape == (90,)

    def test_valid_mask_matches_allocation_invariants(self):
        actions, valid = enumerate_full_actions(4, 2)
        for alloc, ok in zip(actions, valid):
            if ok:
                alloc.validate(4, 2)
            else:
                with pytest.raises(ValueError):
                    alloc.validate(4, 2)

    def test_refuses_huge_spaces(self):
        with pytest.raises(ValueError):
            enumerate_full_actions(30, 3)
