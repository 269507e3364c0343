"""Tests for conflict graphs, schedules and independent-set enumeration"""

import json

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.errors import ConfigError, EnumerationCapError, InfeasibleScheduleError, InvalidGraphError
from src.network.conflict_graph import (
    GRID_MAXIMAL_SCHEDULES,
    ConflictGraph,
    GraphSpec,
    Schedule,
    build_graph,
    complete_graph,
    enumerate_independent_sets,
    from_links,
    is_independent,
    is_maximal,
    load_graph,
    path_graph,
    random_graph,
    star_graph,
)


class TestSchedule:
    """Tests for the bitmask schedule type"""

    def test_of_sets_one_based_bits(self):
        """Link l occupies bit l - 1"""
        schedule = Schedule.of(5, [1, 3])
        assert schedule.mask == 0b101
        assert schedule.links == (1, 3)
        assert 3 in schedule and 2 not in schedule
        assert len(schedule) == 2

    def test_array_roundtrip(self):
        schedule = Schedule.of(4, [2, 4])
        assert Schedule.from_array(schedule.to_array()) == schedule

    def test_rejects_unknown_link(self):
        with pytest.raises(InvalidGraphError):
            Schedule.of(3, [4])

    def test_ordering_is_by_mask(self):
        assert sorted([Schedule.of(3, [3]), Schedule.of(3, [1]), Schedule.empty(3)]) == [
            Schedule.empty(3),
            Schedule.of(3, [1]),
            Schedule.of(3, [3]),
        ]

    def test_symmetric_difference(self):
        assert Schedule.of(3, [1, 2]).symmetric_difference(Schedule.of(3, [2, 3])) == Schedule.of(3, [1, 3])


class TestConflictGraph:
    """Tests for graph construction and validation"""

    def test_asymmetric_adjacency_rejected(self):
        with pytest.raises(InvalidGraphError):
            ConflictGraph(2, {1: [2], 2: []})

    def test_self_loop_rejected(self):
        with pytest.raises(InvalidGraphError):
            ConflictGraph(2, {1: [1]})

    def test_unknown_neighbor_rejected(self):
        with pytest.raises(InvalidGraphError):
            ConflictGraph.from_edges(2, [(1, 3)])

    def test_neighbor_masks_and_adjacency_agree(self, path3):
        assert path3.neighbor_masks == (0b010, 0b101, 0b010)
        assert path3.adjacency.tolist() == [
            [False, True, False],
            [True, False, True],
            [False, True, False],
        ]
        assert not path3.adjacency.flags.writeable

    def test_networkx_roundtrip(self):
        graph = random_graph(7, 0.5, seed=3)
        assert ConflictGraph.from_networkx(graph.to_networkx()) == graph

    def test_star_hub_is_link_one(self):
        star = star_graph(3)
        assert star.neighbors(1) == frozenset({2, 3, 4})
        assert star.degree(2) == 1


class TestFromLinks:
    """Tests for the one-hop interference derivation"""

    def test_shared_node_conflicts(self):
        graph = from_links(3, [(1, 2), (2, 3)])
        assert graph.edges() == [(1, 2)]

    def test_disjoint_links_do_not_conflict(self):
        graph = from_links(4, [(1, 2), (3, 4)])
        assert graph.num_edges == 0

    def test_duplicate_link_rejected(self):
        with pytest.raises(InvalidGraphError, match="duplicates"):
            from_links(3, [(1, 2), (2, 1)])

    def test_dangling_endpoint_rejected(self):
        with pytest.raises(InvalidGraphError, match="dangling"):
            from_links(2, [(1, 3)])

    def test_matches_line_graph(self):
        """The derivation is the networkx line graph, relabelled"""
        endpoints = [(1, 2), (2, 3), (3, 4), (4, 1), (1, 3)]
        graph = from_links(4, endpoints)
        nodes = nx.Graph(endpoints)
        assert graph.num_edges == nx.line_graph(nodes).number_of_edges()


class TestGrid:
    """Tests for the 24-link grid"""

    def test_size(self, grid):
        assert grid.graph.num_links == 24
        assert len(grid.nodes) == 16
        assert grid.graph.num_edges == 52

    @pytest.mark.parametrize("label", sorted(GRID_MAXIMAL_SCHEDULES))
    def test_maximal_schedules(self, grid, label):
        schedule = grid.maximal_schedules[label]
        assert len(schedule) == 8
        assert is_independent(grid.graph, schedule)
        assert is_maximal(grid.graph, schedule)

    def test_link_numbering(self, grid):
        """Row-1 horizontals, then row 1 -> 2 verticals, ..."""
        assert grid.links[0] == ((1, 1), (1, 2))
        assert grid.links[3] == ((1, 1), (2, 1))
        assert grid.links[7] == ((2, 1), (2, 2))
        assert grid.links[23] == ((4, 3), (4, 4))

    def test_from_links_reproduces_grid(self, grid):
        ids = {node: i for i, node in enumerate(grid.nodes, start=1)}
        rebuilt = from_links(16, [(ids[u], ids[v]) for u, v in grid.links])
        assert rebuilt == grid.graph

    def test_independence_examples(self, grid):
        assert is_independent(grid.graph, Schedule.empty(24))
        assert not is_independent(grid.graph, Schedule.of(24, [1, 2]))
        assert not is_maximal(grid.graph, Schedule.empty(24))


class TestIndependence:
    def test_length_mismatch(self, k2):
        with pytest.raises(InvalidGraphError):
            is_independent(k2, Schedule.empty(3))

    def test_maximal_requires_independence(self, k2):
        with pytest.raises(InfeasibleScheduleError):
            is_maximal(k2, Schedule.of(2, [1, 2]))

    def test_path_maximal(self, path3):
        assert is_maximal(path3, Schedule.of(3, [1, 3]))
        assert not is_maximal(path3, Schedule.of(3, [1]))


class TestEnumeration:
    """Tests for enumerate_independent_sets"""

    def test_single_link(self, single_link):
        assert [s.mask for s in enumerate_independent_sets(single_link)] == [0, 1]

    def test_k2(self, k2):
        assert len(enumerate_independent_sets(k2)) == 3

    def test_path3_in_mask_order(self, path3):
        assert [s.links for s in enumerate_independent_sets(path3)] == [(), (1,), (2,), (3,), (1, 3)]

    def test_path_counts_are_fibonacci(self):
        fib = [1, 2]
        for _ in range(12):
            fib.append(fib[-1] + fib[-2])
        for n in range(1, 13):
            assert len(enumerate_independent_sets(path_graph(n))) == fib[n]

    def test_cap(self, grid):
        with pytest.raises(EnumerationCapError):
            enumerate_independent_sets(grid.graph)

    def test_cap_from_settings(self, monkeypatch):
        from src.config import get_settings

        monkeypatch.setenv("CSMA_ENUMERATION_CAP", "2")
        get_settings.cache_clear()
        with pytest.raises(EnumerationCapError):
            enumerate_independent_sets(complete_graph(3))

    @settings(max_examples=40, deadline=None)
    @given(n=st.integers(1, 9), p=st.floats(0.0, 1.0), seed=st.integers(0, 10_000))
    def test_members_exactly_the_independent_sets(self, n, p, seed):
        """Exhaustive check against every bitmask"""
        graph = random_graph(n, p, seed)
        members = {s.mask for s in enumerate_independent_sets(graph)}
        for mask in range(1 << n):
            assert (mask in members) == is_independent(graph, Schedule(mask=mask, num_links=n))


class TestGraphSpec:
    """Tests for graph spec documents"""

    def test_builtins(self):
        assert build_graph(GraphSpec(builtin="grid4x4")).num_links == 24
        assert build_graph(GraphSpec(builtin="K3")).num_edges == 3
        assert build_graph(GraphSpec(builtin="path5")).num_links == 5

    def test_unknown_builtin(self):
        with pytest.raises(ConfigError):
            build_graph(GraphSpec(builtin="hypercube"))

    def test_exactly_one_form(self):
        with pytest.raises(ValueError):
            GraphSpec(builtin="K2", num_links=2)
        with pytest.raises(ValueError):
            GraphSpec(nodes=3)

    def test_topology_form(self):
        graph = build_graph(GraphSpec(nodes=3, links=[(1, 2), (2, 3)]))
        assert graph.edges() == [(1, 2)]

    def test_load_graph(self, tmp_path):
        path = tmp_path / "graph.json"
        path.write_text(json.dumps({"num_links": 3, "conflicts": [[1, 2], [2, 3]]}))
        assert load_graph(path) == path_graph(3)

    def test_malformed_file_reports_position(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"builtin": "K2",\n  oops}')
        with pytest.raises(ConfigError, match=r"broken.json:2:"):
            load_graph(path)
