"""Conflict graphs, feasible schedules and independent-set enumeration.

Links are identified by integers 1..N. A Schedule stores its active links as a
bitmask where link ``l`` occupies bit ``l - 1``; numpy arrays indexed by link
use position ``l - 1`` as well.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import networkx as nx
import numpy as np
from pydantic import BaseModel, Field, model_validator

from src.config import get_settings
from src.errors import (
    ConfigError,
    EnumerationCapError,
    InfeasibleScheduleError,
    InvalidGraphError,
)


# ============================================================================
# Schedules
# ============================================================================

@dataclass(frozen=True, order=True)
class Schedule:
    """A set of simultaneously active links, stored as a bitmask over N links"""
    
    mask: int
    num_links: int = field(compare=False)
    
    def __post_init__(self) -> None:
        if self.num_links < 1:
            raise InvalidGraphError(f"Schedule needs at least one link, got N={self.num_links}")
        if self.mask < 0 or self.mask >> self.num_links:
            raise InvalidGraphError(
                f"Mask {self.mask:#x} has bits outside links 1..{self.num_links}"
            )
    
    @classmethod
    def of(cls, num_links: int, links: Iterable[int] = ()) -> Schedule:
        """Build a schedule from 1-based link ids"""
        mask = 0
        for link in links:
            if not 1 <= link <= num_links:
                raise InvalidGraphError(f"Link {link} outside 1..{num_links}")
            mask |= 1 << (link - 1)
        return cls(mask=mask, num_links=num_links)
    
    @classmethod
    def empty(cls, num_links: int) -> Schedule:
        return cls(mask=0, num_links=num_links)
    
    @classmethod
    def from_array(cls, active: np.ndarray) -> Schedule:
        """Build a schedule from a 0/1 (or boolean) vector indexed by link - 1"""
        mask = 0
        for index in np.flatnonzero(active):
            mask |= 1 << int(index)
        return cls(mask=mask, num_links=len(active))
    
    @property
    def links(self) -> tuple[int, ...]:
        """Active link ids in increasing order"""
        return tuple(l + 1 for l in range(self.num_links) if self.mask >> l & 1)
    
    def __contains__(self, link: object) -> bool:
        return isinstance(link, int) and 1 <= link <= self.num_links and bool(self.mask >> (link - 1) & 1)
    
    def __len__(self) -> int:
        return self.mask.bit_count()
    
    def __iter__(self) -> Iterator[int]:
        return iter(self.links)
    
    def to_array(self) -> np.ndarray:
        """Boolean vector indexed by link - 1"""
        return np.array([bool(self.mask >> l & 1) for l in range(self.num_links)], dtype=bool)
    
    def symmetric_difference(self, other: Schedule) -> Schedule:
        return Schedule(mask=self.mask ^ other.mask, num_links=self.num_links)
    
    def __repr__(self) -> str:
        return f"Schedule({set(self.links) or '{}'})"


# ============================================================================
# Conflict graph
# ============================================================================

class ConflictGraph:
    """
    Interference model over N links.
    
    ``neighbors(l)`` is the set of links that cannot transmit together with
    ``l``. Adjacency is symmetric and irreflexive; the object is immutable
    after construction and safe to share across concurrent runs.
    """
    
    def __init__(
        self,
        num_links: int,
        neighbors: Mapping[int, Iterable[int]],
        name: str = "",
    ):
        if num_links < 1:
            raise InvalidGraphError(f"A conflict graph needs at least one link, got {num_links}")
        
        sets: list[frozenset[int]] = []
        for link in range(1, num_links + 1):
            adjacent = frozenset(neighbors.get(link, ()))
            for other in adjacent:
                if not 1 <= other <= num_links:
                    raise InvalidGraphError(f"Link {link} lists unknown neighbor {other}")
                if other == link:
                    raise InvalidGraphError(f"Link {link} conflicts with itself")
            sets.append(adjacent)
        
        extra = set(neighbors) - set(range(1, num_links + 1))
        if extra:
            raise InvalidGraphError(f"Neighbor map has links outside 1..{num_links}: {sorted(extra)}")
        
        for link, adjacent in enumerate(sets, start=1):
            for other in adjacent:
                if link not in sets[other - 1]:
                    raise InvalidGraphError(f"Asymmetric conflict: {link}->{other} without {other}->{link}")
        
        self.num_links = num_links
        self.name = name
        self._neighbors = tuple(sets)
        self.neighbor_masks: tuple[int, ...] = tuple(
            sum(1 << (other - 1) for other in adjacent) for adjacent in sets
        )
        adjacency = np.zeros((num_links, num_links), dtype=bool)
        for link, adjacent in enumerate(sets):
            for other in adjacent:
                adjacency[link, other - 1] = True
        adjacency.setflags(write=False)
        self.adjacency = adjacency
    
    @classmethod
    def from_edges(cls, num_links: int, edges: Iterable[tuple[int, int]], name: str = "") -> ConflictGraph:
        """Build from an undirected list of conflicting link pairs"""
        neighbors: dict[int, set[int]] = {l: set() for l in range(1, num_links + 1)}
        for k, l in edges:
            if k not in neighbors or l not in neighbors:
                raise InvalidGraphError(f"Conflict ({k}, {l}) references a link outside 1..{num_links}")
            neighbors[k].add(l)
            neighbors[l].add(k)
        return cls(num_links, neighbors, name=name)
    
    @classmethod
    def from_networkx(cls, graph: nx.Graph, name: str = "") -> ConflictGraph:
        """Treat the vertices of ``graph`` as links; vertices are relabelled 1..N in sorted order"""
        order = {node: index for index, node in enumerate(sorted(graph.nodes), start=1)}
        edges = [(order[u], order[v]) for u, v in graph.edges]
        return cls.from_edges(len(order), edges, name=name)
    
    def neighbors(self, link: int) -> frozenset[int]:
        return self._neighbors[link - 1]
    
    def degree(self, link: int) -> int:
        return len(self._neighbors[link - 1])
    
    @property
    def links(self) -> range:
        return range(1, self.num_links + 1)
    
    def edges(self) -> list[tuple[int, int]]:
        """Conflict edges (k, l) with k < l, sorted"""
        return sorted(
            (k, l) for k in self.links for l in self._neighbors[k - 1] if k < l
        )
    
    @property
    def num_edges(self) -> int:
        return sum(len(adjacent) for adjacent in self._neighbors) // 2
    
    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(self.links)
        graph.add_edges_from(self.edges())
        return graph
    
    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConflictGraph):
            return NotImplemented
        return self.num_links == other.num_links and self._neighbors == other._neighbors
    
    def __hash__(self) -> int:
        return hash((self.num_links, self._neighbors))
    
    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"<ConflictGraph{label} N={self.num_links} edges={self.num_edges}>"


# ============================================================================
# Operations
# ============================================================================

def from_links(
    node_count: int,
    link_endpoints: Sequence[tuple[int, int]],
    name: str = "",
) -> ConflictGraph:
    """
    Derive the one-hop-interference conflict graph of a node-level topology.
    
    Nodes are 1..node_count and link ``i`` (1-based) joins ``link_endpoints[i-1]``.
    Two links conflict iff they share a node, i.e. the conflict graph is the
    line graph of the node graph.
    """
    node_graph = nx.Graph()
    node_graph.add_nodes_from(range(1, node_count + 1))
    
    for link_id, endpoints in enumerate(link_endpoints, start=1):
        u, v = (int(x) for x in endpoints)
        for endpoint in (u, v):
            if not 1 <= endpoint <= node_count:
                raise InvalidGraphError(f"Link {link_id} has dangling endpoint {endpoint}")
        if u == v:
            raise InvalidGraphError(f"Link {link_id} is a self-loop on node {u}")
        if node_graph.has_edge(u, v):
            duplicate = node_graph.edges[u, v]["link"]
            raise InvalidGraphError(f"Link {link_id} duplicates link {duplicate} ({u}-{v})")
        node_graph.add_edge(u, v, link=link_id)
    
    if not link_endpoints:
        raise InvalidGraphError("Topology has no links")
    
    conflicts = [
        (node_graph.edges[a]["link"], node_graph.edges[b]["link"])
        for a, b in nx.line_graph(node_graph).edges
    ]
    return ConflictGraph.from_edges(len(link_endpoints), conflicts, name=name)


def is_independent(graph: ConflictGraph, schedule: Schedule) -> bool:
    """True iff no two active links of ``schedule`` conflict"""
    if schedule.num_links != graph.num_links:
        raise InvalidGraphError(
            f"Schedule over {schedule.num_links} links used with a {graph.num_links}-link graph"
        )
    mask = schedule.mask
    return all(
        not (mask & graph.neighbor_masks[l]) for l in range(graph.num_links) if mask >> l & 1
    )


def require_independent(graph: ConflictGraph, schedule: Schedule, what: str = "schedule") -> None:
    if not is_independent(graph, schedule):
        raise InfeasibleScheduleError(f"{what} {schedule!r} is not an independent set")


def is_maximal(graph: ConflictGraph, schedule: Schedule) -> bool:
    """True iff no inactive link can join ``schedule`` while keeping it independent"""
    require_independent(graph, schedule)
    mask = schedule.mask
    return all(
        mask >> l & 1 or mask & graph.neighbor_masks[l] for l in range(graph.num_links)
    )


def enumerate_independent_sets(graph: ConflictGraph, cap: int | None = None) -> list[Schedule]:
    """
    All independent sets of ``graph``, each once, ordered by increasing bitmask.
    
    The order is the canonical state indexing shared by every exact chain
    computation.
    """
    cap = get_settings().enumeration_cap if cap is None else cap
    n = graph.num_links
    if n > cap:
        raise EnumerationCapError(f"Exact enumeration refused: N={n} exceeds the cap of {cap} links")
    
    masks: list[int] = []
    neighbor_masks = graph.neighbor_masks
    
    def extend(index: int, mask: int, blocked: int) -> None:
        if index == n:
            masks.append(mask)
            return
        extend(index + 1, mask, blocked)
        if not blocked >> index & 1:
            extend(index + 1, mask | 1 << index, blocked | neighbor_masks[index])
    
    extend(0, 0, 0)
    masks.sort()
    return [Schedule(mask=m, num_links=n) for m in masks]


# ============================================================================
# Grid network
# ============================================================================

@dataclass(frozen=True)
class GridNetwork:
    """The 4x4 grid topology with 24 links under one-hop interference"""
    
    nodes: tuple[tuple[int, int], ...]  # (row, column), 1-based, row-major
    links: tuple[tuple[tuple[int, int], tuple[int, int]], ...]  # link id - 1 -> endpoints
    graph: ConflictGraph
    maximal_schedules: dict[str, Schedule]


# The four maximal schedules used to build the arrival-rate vectors
GRID_MAXIMAL_SCHEDULES: dict[str, tuple[int, ...]] = {
    "M1": (1, 3, 8, 10, 15, 17, 22, 24),
    "M2": (4, 5, 6, 7, 18, 19, 20, 21),
    "M3": (1, 3, 9, 11, 14, 16, 22, 24),
    "M4": (2, 4, 7, 12, 13, 18, 21, 23),
}


def _grid_link_order(size: int) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """Row r horizontals, then the r -> r+1 verticals, for every row"""
    order = []
    for row in range(1, size + 1):
        order.extend(((row, col), (row, col + 1)) for col in range(1, size))
        if row < size:
            order.extend(((row, col), (row + 1, col)) for col in range(1, size + 1))
    return order


def build_grid_4x4() -> GridNetwork:
    """Build the canonical 24-link grid with its derived conflict graph"""
    lattice = nx.grid_2d_graph(4, 4)
    nodes = tuple(sorted((r + 1, c + 1) for r, c in lattice.nodes))
    node_ids = {node: index for index, node in enumerate(nodes, start=1)}
    
    links = _grid_link_order(4)
    lattice_edges = {frozenset(((r + 1, c + 1), (s + 1, d + 1))) for (r, c), (s, d) in lattice.edges}
    assert lattice_edges == {frozenset(link) for link in links}
    
    graph = from_links(
        len(nodes),
        [(node_ids[u], node_ids[v]) for u, v in links],
        name="grid4x4",
    )
    schedules = {
        label: Schedule.of(graph.num_links, members)
        for label, members in GRID_MAXIMAL_SCHEDULES.items()
    }
    return GridNetwork(
        nodes=nodes,
        links=tuple(links),
        graph=graph,
        maximal_schedules=schedules,
    )


# ============================================================================
# Small named graphs (test corpus and CLI builtins)
# ============================================================================

def path_graph(n: int) -> ConflictGraph:
    """Conflict graph that is a path over links 1..n"""
    return ConflictGraph.from_networkx(nx.path_graph(n), name=f"path{n}")


def cycle_graph(n: int) -> ConflictGraph:
    return ConflictGraph.from_networkx(nx.cycle_graph(n), name=f"cycle{n}")


def star_graph(leaves: int) -> ConflictGraph:
    """Link 1 is the hub"""
    return ConflictGraph.from_networkx(nx.star_graph(leaves), name=f"star{leaves}")


def complete_graph(n: int) -> ConflictGraph:
    return ConflictGraph.from_networkx(nx.complete_graph(n), name=f"K{n}")


def random_graph(n: int, p: float, seed: int) -> ConflictGraph:
    return ConflictGraph.from_networkx(nx.gnp_random_graph(n, p, seed=seed), name=f"gnp{n}")


# ============================================================================
# Graph spec files
# ============================================================================

class GraphSpec(BaseModel):
    """
    Graph spec document. Exactly one form must be given:
    
    - ``{"builtin": "grid4x4"}`` (or ``path<n>``, ``cycle<n>``, ``star<n>``, ``K<n>``)
    - ``{"nodes": 3, "links": [[1, 2], [2, 3]]}`` node topology, one-hop interference
    - ``{"num_links": 2, "conflicts": [[1, 2]]}`` conflict graph given directly
    """
    
    builtin: str | None = Field(default=None, description="Name of a built-in graph")
    nodes: int | None = Field(default=None, ge=1, description="Node count of a topology")
    links: list[tuple[int, int]] | None = Field(default=None, description="Link endpoints")
    num_links: int | None = Field(default=None, ge=1, description="Links of a direct conflict graph")
    conflicts: list[tuple[int, int]] | None = Field(default=None, description="Conflicting link pairs")
    
    @model_validator(mode="after")
    def exactly_one_form(self) -> GraphSpec:
        forms = [
            self.builtin is not None,
            self.nodes is not None or self.links is not None,
            self.num_links is not None or self.conflicts is not None,
        ]
        if sum(forms) != 1:
            raise ValueError("give exactly one of: builtin | nodes+links | num_links+conflicts")
        if forms[1] and (self.nodes is None or self.links is None):
            raise ValueError("a topology needs both 'nodes' and 'links'")
        if forms[2] and self.num_links is None:
            raise ValueError("a direct conflict graph needs 'num_links'")
        return self


def _builtin_graph(name: str) -> ConflictGraph:
    if name == "grid4x4":
        return build_grid_4x4().graph
    for prefix, factory in (
        ("path", path_graph),
        ("cycle", cycle_graph),
        ("star", star_graph),
        ("K", complete_graph),
    ):
        suffix = name[len(prefix):]
        if name.startswith(prefix) and suffix.isdigit() and int(suffix) >= 1:
            return factory(int(suffix))
    raise ConfigError(f"Unknown builtin graph {name!r}")


def build_graph(spec: GraphSpec) -> ConflictGraph:
    """Materialize a GraphSpec"""
    if spec.builtin is not None:
        return _builtin_graph(spec.builtin)
    if spec.nodes is not None:
        return from_links(spec.nodes, spec.links or [], name="topology")
    return ConflictGraph.from_edges(spec.num_links, spec.conflicts or [], name="conflicts")


def load_graph(path: str | Path) -> ConflictGraph:
    """Read a graph spec JSON file"""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
    try:
        spec = GraphSpec.model_validate(data)
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from e
    return build_graph(spec)
