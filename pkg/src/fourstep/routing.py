"""Shortest paths over the multimodal graph: single-source Dijkstra, path
tracing, and zone-to-zone cost skims."""
from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass

import numpy as np

from .distribution import DEFAULT_COST_FLOOR
from .network import MultimodalGraph

UNREACHABLE = math.inf


class RoutingError(ValueError):
    pass


@dataclass
class ShortestPathTree:
    source: int
    dist: list  # per-node accumulated impedance, inf when unreachable
    prev: list  # predecessor node index, -1 when undefined


@dataclass
class RoutePath:
    nodes: list  # node indices origin..destination
    modes: list  # per-leg mode labels, len(nodes) - 1
    total: float


def dijkstra(graph: MultimodalGraph, source: int) -> ShortestPathTree:
    """Exact single-source shortest paths with lazy-deletion binary heap.

    Equal priorities resolve by ascending node index, so the tree is
    deterministic for a fixed graph.
    """
    n = graph.n_nodes
    if not 0 <= source < n:
        raise RoutingError(f"unknown source node index {source}")
    dist = [UNREACHABLE] * n
    prev = [-1] * n
    dist[source] = 0.0
    heap = [(0.0, source)]
    done = [False] * n
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for v, _mode, w in graph.adjacency[u]:
            if w < 0:
                raise RoutingError(
                    f"negative edge weight {w} on {graph.nodes[u].id}->{graph.nodes[v].id}"
                )
            alt = d + w
            if alt < dist[v]:
                dist[v] = alt
                prev[v] = u
                heapq.heappush(heap, (alt, v))
    return ShortestPathTree(source=source, dist=dist, prev=prev)


def trace_path(tree: ShortestPathTree, target: int, graph: MultimodalGraph) -> RoutePath:
    """Reconstruct the origin->target path from the predecessor array."""
    if math.isinf(tree.dist[target]):
        raise RoutingError(
            f"node {graph.nodes[target].id} is unreachable from the source"
        )
    nodes = [target]
    while nodes[-1] != tree.source:
        nodes.append(tree.prev[nodes[-1]])
    nodes.reverse()
    modes = []
    for u, v in zip(nodes, nodes[1:]):
        leg = min(
            ((m, w) for t, m, w in graph.adjacency[u] if t == v),
            key=lambda mw: mw[1],
        )
        modes.append(leg[0])
    return RoutePath(nodes=nodes, modes=modes, total=tree.dist[target])


def cost_skim(
    graph: MultimodalGraph,
    zones: list,
    intrazonal: float = DEFAULT_COST_FLOOR,
) -> np.ndarray:
    """Zone-to-zone generalized cost matrix, one Dijkstra run per origin.

    The diagonal carries the intrazonal floor; unreachable pairs are inf.
    """
    anchors = []
    for z in zones:
        if z not in graph.zone_anchor:
            raise RoutingError(f"zone {z!r} has no anchor node")
        anchors.append(graph.zone_anchor[z])
    n = len(zones)
    skim = np.full((n, n), UNREACHABLE)
    for i, a in enumerate(anchors):
        tree = dijkstra(graph, a)
        for j, b in enumerate(anchors):
            skim[i, j] = tree.dist[b]
    np.fill_diagonal(skim, intrazonal)
    return skim


def write_skim(skim: np.ndarray, zones: list, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["origin_zone", "destination_zone", "seconds"])
        for i, zi in enumerate(zones):
            for j, zj in enumerate(zones):
                v = skim[i, j]
                w.writerow([zi, zj, "UNREACHABLE" if math.isinf(v) else repr(float(v))])


def load_skim(path, zones: list) -> np.ndarray:
    idx = {z: i for i, z in enumerate(zones)}
    n = len(zones)
    skim = np.full((n, n), UNREACHABLE)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            i = idx[row["origin_zone"]]
            j = idx[row["destination_zone"]]
            v = row["seconds"]
            skim[i, j] = UNREACHABLE if v == "UNREACHABLE" else float(v)
    return skim


def path_geometry(path: RoutePath, graph: MultimodalGraph) -> list:
    """Path as a (lon, lat) coordinate sequence."""
    return [[graph.nodes[i].lon, graph.nodes[i].lat] for i in path.nodes]


def path_geojson(path: RoutePath, graph: MultimodalGraph) -> dict:
    return {
        "type": "Feature",
        "geometry": {"type": "LineString", "coordinates": path_geometry(path, graph)},
        "properties": {
            "total_seconds": path.total,
            "modes": path.modes,
            "nodes": [graph.nodes[i].id for i in path.nodes],
        },
    }
