import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_betweenness, brute_force_disruption
from streakforge.collab import (
    StreakTypeLabel,
    build_local_net,
    classify_streak_type,
    disruption_index,
    focal_betweenness,
    has_big_project,
    is_dense_ties,
    is_new_topic,
    max_coauthor_freq,
    mean_team_size,
    most_frequent_topic,
    rank_within_groups,
    topic_diversity,
)


def lists_of_sizes(sizes, focal="F"):
    out = []
    for i, size in enumerate(sizes):
        authors = [focal] + [f"x{i}_{j}" for j in range(size - 1)]
        out.append(authors)
    return out


class TestMeanTeamSize:
    def test_constant(self):
        assert mean_team_size(lists_of_sizes([3, 3, 3, 3, 3])) == 3.0

    def test_mean(self):
        assert mean_team_size(lists_of_sizes([1, 2, 3, 4, 5])) == 3.0

    def test_handmean(self):
        assert mean_team_size(lists_of_sizes([2, 9, 9, 9, 9])) == pytest.approx(7.6)

    def test_requires_five(self):
        with pytest.raises(ValueError):
            mean_team_size(lists_of_sizes([1, 2]))


class TestHasBigProject:
    def test_boundary_at_ten(self):
        assert has_big_project(lists_of_sizes([2, 3, 10, 2, 2])) is True

    def test_all_nine(self):
        assert has_big_project(lists_of_sizes([9] * 5)) is False

    def test_huge_team(self):
        assert has_big_project(lists_of_sizes([1, 1, 1, 1, 100])) is True

    def test_custom_threshold(self):
        assert has_big_project(lists_of_sizes([9] * 5), threshold=9) is True


class TestMaxCoauthorFreq:
    def test_everywhere(self):
        lists = [["F", "B"]] * 5
        assert max_coauthor_freq(lists, "F") == 5

    def test_disjoint_teams(self):
        lists = [["F", f"b{i}"] for i in range(5)]
        assert max_coauthor_freq(lists, "F") == 1

    def test_hand_count(self):
        lists = [
            ["F", "B"],
            ["F", "B", "C"],
            ["F", "C"],
            ["F", "B"],
            ["F"],
        ]
        assert max_coauthor_freq(lists, "F") == 3

    def test_all_solo(self):
        assert max_coauthor_freq([["F"]] * 5, "F") == 0

    def test_focal_missing_errors(self):
        lists = [["F", "B"]] * 4 + [["B"]]
        with pytest.raises(ValueError, match="missing"):
            max_coauthor_freq(lists, "F")


class TestDenseTies:
    def test_boundary(self):
        lists = [["F", "B"]] * 3 + [["F"]] * 2
        assert is_dense_ties(lists, "F") is True

    def test_below(self):
        lists = [["F", "B"]] * 2 + [["F"]] * 3
        assert is_dense_ties(lists, "F") is False

    def test_all_solo(self):
        assert is_dense_ties([["F"]] * 5, "F") is False

    @given(st.lists(st.integers(min_value=1, max_value=4), min_size=5, max_size=5))
    @settings(max_examples=50, deadline=None)
    def test_definitional_equivalence(self, sizes):
        rng = np.random.default_rng(sum(sizes))
        lists = []
        for size in sizes:
            coauthors = [f"c{int(rng.integers(0, 3))}" for _ in range(size - 1)]
            lists.append(["F"] + list(dict.fromkeys(coauthors)))
        assert is_dense_ties(lists, "F") == (max_coauthor_freq(lists, "F") >= 3)


class TestFocalBetweenness:
    def test_star_two_leaves(self):
        net = build_local_net([["F", "A"], ["F", "B"], ["F"], ["F"], ["F"]], "F")
        assert focal_betweenness(net) == 1.0

    def test_triangle(self):
        net = build_local_net([["F", "A", "B"]] * 5, "F")
        assert focal_betweenness(net) == 0.0

    def test_bridge(self):
        net = build_local_net([["F", "A", "B"], ["F", "C", "D"], ["F"], ["F"], ["F"]], "F")
        assert focal_betweenness(net) == pytest.approx(4 / 6)

    def test_below_three_nodes(self):
        net = build_local_net([["F", "A"]] * 5, "F")
        assert focal_betweenness(net) == 0.0

    def test_brute_force_oracle(self):
        rng = np.random.default_rng(2024)
        for _ in range(200):
            n = int(rng.integers(3, 9))
            names = ["F"] + [f"v{i}" for i in range(n - 1)]
            adj = {u: set() for u in names}
            for i in range(n):
                for j in range(i + 1, n):
                    if rng.random() < 0.45:
                        adj[names[i]].add(names[j])
                        adj[names[j]].add(names[i])
            from streakforge.collab import CoauthorshipLocalNet

            edges = {}
            for u in names:
                for v in adj[u]:
                    if u < v:
                        edges[(u, v)] = 1
            net = CoauthorshipLocalNet(focal="F", nodes=tuple(names), edges=edges)
            assert focal_betweenness(net) == pytest.approx(
                brute_force_betweenness(adj, "F"), abs=1e-9
            )

    def test_weights_do_not_affect_paths(self):
        # a pair coauthoring twice still contributes one unweighted edge
        lists = [["F", "A"], ["F", "A"], ["A", "F"], ["F", "B"], ["F"]]
        net = build_local_net(lists, "F")
        assert net.edges[("A", "F")] == 3
        assert focal_betweenness(net) == 1.0


class TestTopicDiversity:
    def test_all_same(self):
        assert topic_diversity(["t"] * 5) == 1

    def test_all_distinct(self):
        assert topic_diversity(list(range(5))) == 5

    def test_some(self):
        assert topic_diversity(["t1", "t1", "t2", "t3", "t3"]) == 3

    @given(st.lists(st.integers(0, 4), min_size=5, max_size=5))
    @settings(max_examples=50, deadline=None)
    def test_permutation_invariant(self, ids):
        base = topic_diversity(ids)
        rng = np.random.default_rng(.0 or 1)
        for _ in range(5):
            perm = [ids[i] for i in rng.permutation(5)]
            assert topic_diversity(perm) == base


class TestNewTopic:
    def test_tie_breaks_by_first_occurrence(self):
        assert most_frequent_topic(["a", "a", "b", "b", "c"]) == "a"
        assert is_new_topic(["a", "a", "b", "b", "c"], {"b", "c"}) is True

    def test_seen_before(self):
        assert is_new_topic(["a", "a", "a", "b", "c"], {"a"}) is False

    def test_empty_prior(self):
        assert is_new_topic([1, 2, 3, 4, 5], set()) is True

    def test_tie_late_first_occurrence(self):
        assert most_frequent_topic(["b", "a", "a", "b", "c"]) == "b"


class TestClassifyStreakType:
    def test_dense_small(self):
        lists = [["F", "B", "C"]] * 4 + [["F", "Z"]]
        assert classify_streak_type(lists, "F") == StreakTypeLabel("dense", "small")

    def test_loose_large(self):
        lists = lists_of_sizes([2, 3, 2, 2, 50])
        assert classify_streak_type(lists, "F") == StreakTypeLabel("loose", "large")

    def test_dense_large_boundaries(self):
        lists = [["F", "B"]] * 3 + [["F"] + [f"m{i}" for i in range(9)], ["F"]]
        label = classify_streak_type(lists, "F")
        assert label == StreakTypeLabel("dense", "large")

    def test_four_labels_partition(self):
        rng = np.random.default_rng(8)
        counts = {}
        total = 200
        for _ in range(total):
            sizes = [int(rng.integers(1, 13)) for _ in range(5)]
            lists = []
            for i, size in enumerate(sizes):
                recur = ["R"] if rng.random() < 0.5 else []
                rest = [f"q{i}_{j}" for j in range(max(0, size - 1 - len(recur)))]
                lists.append(["F"] + recur + rest)
            label = classify_streak_type(lists, "F")
            counts[label.name] = counts.get(label.name, 0) + 1
        assert sum(counts.values()) == total
        assert set(counts) <= {
            "dense/small", "dense/large", "loose/small", "loose/large",
        }


class TestDisruptionIndex:
    def test_balanced(self):
        D = disruption_index("F", {"R"}, {"A": {"F"}, "B": {"F", "R"}, "C": {"R"}})
        assert D == 0.0

    def test_max_disruption(self):
        assert disruption_index("F", {"R"}, {"A": {"F"}}) == 1.0

    def test_max_consolidation(self):
        assert disruption_index("F", {"R"}, {"A": {"F", "R"}}) == -1.0

    def test_undefined(self):
        assert disruption_index("F", {"R"}, {}) is None
        assert disruption_index("F", {"R"}, {"A": set()}) is None

    def test_swapping_counts_negates(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            refs = {f"r{i}" for i in range(int(rng.integers(1, 4)))}
            citers = {}
            for c in range(int(rng.integers(1, 6))):
                cited = set()
                if rng.random() < 0.6:
                    cited.add("F")
                for r in refs:
                    if rng.random() < 0.4:
                        cited.add(r)
                citers[f"c{c}"] = cited
            d = disruption_index("F", refs, citers)
            if d is None:
                continue
            assert -1.0 <= d <= 1.0
            # swap the i and j roles: citers of focal-only become focal+ref etc.
            swapped = {}
            for name, cited in citers.items():
                cf = "F" in cited
                cr = bool(cited & refs)
                if cf and not cr:
                    swapped[name] = {"F", next(iter(refs))}
                elif cf and cr:
                    swapped[name] = {"F"}
                else:
                    swapped[name] = cited
            d2 = disruption_index("F", refs, swapped)
            assert d2 == pytest.approx(-d)

    def test_brute_force_oracle(self):
        rng = np.random.default_rng(77)
        for _ in range(200):
            refs = {f"r{i}" for i in range(int(rng.integers(0, 4)))}
            citers = {}
            for c in range(int(rng.integers(0, 5))):
                cited = set()
                if rng.random() < 0.5:
                    cited.add("F")
                for r in refs:
                    if rng.random() < 0.5:
                        cited.add(r)
                citers[f"c{c}"] = cited
            expected = brute_force_disruption("F", refs, citers)
            got = disruption_index("F", refs, citers)
            if expected is None:
                assert got is None
            else:
                assert got == pytest.approx(expected, abs=1e-9)


class TestRankWithinGroups:
    def test_three_values(self):
        assert rank_within_groups([("g", 1.0), ("g", 2.0), ("g", 3.0)]) == [0.0, 0.5, 1.0]

    def test_singleton(self):
        assert rank_within_groups([("g", 9.0)]) == [0.5]

    def test_all_equal(self):
        assert rank_within_groups([("g", 2.0)] * 4) == [0.5] * 4

    def test_groups_independent(self):
        items = [("a", 1.0), ("b", 5.0), ("a", 2.0), ("b", 1.0)]
        assert rank_within_groups(items) == [0.0, 1.0, 1.0, 0.0]

    def test_ranks_in_unit_interval(self):
        rng = np.random.default_rng(5)
        items = [
            (int(rng.integers(0, 3)), float(rng.integers(0, 5))) for _ in range(60)
        ]
        for r in rank_within_groups(items):
            assert 0.0 <= r <= 1.0
