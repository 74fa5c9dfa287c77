"""Multimodal network assembly.

Reads a preprocessed road/walk edge list plus a GTFS static feed and builds
one directed graph whose edge weights are generalized impedance in seconds:
in-vehicle time, access/egress walking, and boarding penalty plus expected
wait (half the route's mean headway at the stop).
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import zipfile
from dataclasses import dataclass, field

MODES = ("walk", "drive", "transit", "board", "alight")

GRAPH_FORMAT_VERSION = 1

EARTH_RADIUS_M = 6371000.0


class NetworkError(ValueError):
    pass


def haversine_m(lat1, lon1, lat2, lon2) -> float:
    """Great-circle distance in meters."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(math.sqrt(a))


@dataclass
class NetworkNode:
    id: str
    lat: float
    lon: float
    kind: str  # road | stop | zone_centroid

    def __post_init__(self):
        if not -90 <= self.lat <= 90 or not -180 <= self.lon <= 180:
            raise NetworkError(f"node {self.id}: coordinates out of range")


@dataclass
class NetworkEdge:
    src: str
    dst: str
    mode: str
    impedance: float  # seconds

    def __post_init__(self):
        if self.mode not in MODES:
            raise NetworkError(f"unknown edge mode {self.mode!r}")
        if not math.isfinite(self.impedance) or self.impedance < 0:
            raise NetworkError(
                f"edge {self.src}->{self.dst}: impedance must be finite and >= 0"
            )


@dataclass
class TransitFeed:
    stops: dict  # stop_id -> (lat, lon)
    routes: dict  # route_id -> mode class
    trips: dict  # trip_id -> route_id
    stop_times: list  # (trip_id, stop_id, arrival_sec, departure_sec, sequence)


@dataclass
class BuildParams:
    walk_speed: float = 1.4  # m/s
    boarding_penalty: float = 30.0  # s
    stop_link_radius: float = 500.0  # m
    default_headway: float = 3600.0  # s, when a route has a single trip at a stop


@dataclass
class MultimodalGraph:
    """Immutable directed graph over indexed nodes."""

    nodes: list  # list[NetworkNode], index = node index
    adjacency: list  # per-node list of (target_index, mode, impedance)
    zone_anchor: dict  # zone_id -> node index
    index_of: dict = field(default_factory=dict)  # node id -> index

    def __post_init__(self):
        if not self.index_of:
            self.index_of = {n.id: i for i, n in enumerate(self.nodes)}

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def edges(self):
        for i, adj in enumerate(self.adjacency):
            for j, mode, w in adj:
                yield i, j, mode, w

    def save(self, path):
        doc = {
            "format_version": GRAPH_FORMAT_VERSION,
            "nodes": [[n.id, n.lat, n.lon, n.kind] for n in self.nodes],
            "edges": [
                [i, j, mode, w] for i, j, mode, w in self.edges()
            ],
            "zone_anchor": self.zone_anchor,
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "MultimodalGraph":
        with open(path) as fh:
            doc = json.load(fh)
        if doc.get("format_version") != GRAPH_FORMAT_VERSION:
            raise NetworkError(
                f"unsupported graph format version {doc.get('format_version')}"
            )
        nodes = [NetworkNode(nid, lat, lon, kind) for nid, lat, lon, kind in doc["nodes"]]
        adjacency = [[] for _ in nodes]
        for i, j, mode, w in doc["edges"]:
            adjacency[i].append((j, mode, w))
        return cls(nodes=nodes, adjacency=adjacency, zone_anchor=doc["zone_anchor"])


# ---------------------------------------------------------------------------
# GTFS


def parse_gtfs_time(text: str) -> int:
    """HH:MM:SS to seconds after midnight; hours beyond 24 are legal."""
    parts = text.strip().split(":")
    if len(parts) != 3:
        raise NetworkError(f"malformed GTFS time {text!r}")
    try:
        h, m, s = (int(p) for p in parts)
    except ValueError:
        raise NetworkError(f"malformed GTFS time {text!r}") from None
    if m < 0 or m > 59 or s < 0 or s > 59 or h < 0:
        raise NetworkError(f"malformed GTFS time {text!r}")
    return h * 3600 + m * 60 + s


def _gtfs_table(root, name):
    """Yield dict rows from <name>.txt in a GTFS directory or zip archive."""
    if os.path.isdir(root):
        path = os.path.join(root, name + ".txt")
        if not os.path.exists(path):
            raise NetworkError(f"missing required GTFS file {name}.txt in {root}")
        with open(path, newline="") as fh:
            yield from csv.DictReader(fh)
    else:
        with zipfile.ZipFile(root) as zf:
            if name + ".txt" not in zf.namelist():
                raise NetworkError(f"missing required GTFS file {name}.txt in {root}")
            with zf.open(name + ".txt") as fh:
                yield from csv.DictReader(io.TextIOWrapper(fh, "utf-8-sig"))


def load_gtfs(path) -> TransitFeed:
    """Parse the required GTFS static tables and validate referential
    integrity. Malformed rows are reported with their row number."""
    stops = {}
    for row in _gtfs_table(path, "stops"):
        stops[row["stop_id"]] = (float(row["stop_lat"]), float(row["stop_lon"]))
    routes = {}
    for row in _gtfs_table(path, "routes"):
        routes[row["route_id"]] = row.get("route_type", "")
    trips = {}
    for row in _gtfs_table(path, "trips"):
        if row["route_id"] not in routes:
            raise NetworkError(
                f"trips.txt: trip {row['trip_id']} references unknown route "
                f"{row['route_id']}"
            )
        trips[row["trip_id"]] = row["route_id"]

    stop_times = []
    for lineno, row in enumerate(_gtfs_table(path, "stop_times"), start=2):
        if row["trip_id"] not in trips:
            raise NetworkError(
                f"stop_times.txt row {lineno}: unknown trip id {row['trip_id']!r}"
            )
        if row["stop_id"] not in stops:
            raise NetworkError(
                f"stop_times.txt row {lineno}: unknown stop id {row['stop_id']!r}"
            )
        try:
            arr = parse_gtfs_time(row["arrival_time"])
            dep = parse_gtfs_time(row["departure_time"])
        except NetworkError as exc:
            raise NetworkError(f"stop_times.txt row {lineno}: {exc}") from None
        stop_times.append(
            (row["trip_id"], row["stop_id"], arr, dep, int(row["stop_sequence"]))
        )

    # per-trip ordering checks
    by_trip = {}
    for st in stop_times:
        by_trip.setdefault(st[0], []).append(st)
    for trip_id, sts in by_trip.items():
        sts.sort(key=lambda s: s[4])
        for prev, cur in zip(sts, sts[1:]):
            if cur[4] <= prev[4]:
                raise NetworkError(
                    f"trip {trip_id}: stop sequence not strictly increasing"
                )
            if cur[2] < prev[3]:
                raise NetworkError(f"trip {trip_id}: stop times decrease")

    return TransitFeed(stops=stops, routes=routes, trips=trips, stop_times=stop_times)


def empty_feed() -> TransitFeed:
    return TransitFeed(stops={}, routes={}, trips={}, stop_times=[])


# ---------------------------------------------------------------------------
# road network


def load_road_network(nodes_path, edges_path):
    """Read node (id, lat, lon) and edge (from, to, mode, length_m, speed_ms,
    impedance_s) files. Impedance wins when present, else length/speed.
    Walk edges are materialized in both directions."""
    nodes = {}
    with open(nodes_path, newline="") as fh:
        for row in csv.DictReader(fh):
            nodes[row["id"]] = NetworkNode(
                id=row["id"], lat=float(row["lat"]), lon=float(row["lon"]), kind="road"
            )
    edges = []
    with open(edges_path, newline="") as fh:
        for row in csv.DictReader(fh):
            src, dst, mode = row["from"], row["to"], row["mode"]
            for endpoint in (src, dst):
                if endpoint not in nodes:
                    raise NetworkError(f"edge references unknown node {endpoint!r}")
            imp = row.get("impedance_s", "").strip()
            if imp:
                seconds = float(imp)
            else:
                speed = float(row.get("speed_ms", "0") or 0)
                if speed <= 0:
                    raise NetworkError(
                        f"edge {src}->{dst}: non-positive speed and no impedance"
                    )
                seconds = float(row["length_m"]) / speed
            edges.append(NetworkEdge(src, dst, mode, seconds))
            if mode == "walk":
                edges.append(NetworkEdge(dst, src, mode, seconds))
    return nodes, edges


# ---------------------------------------------------------------------------
# graph assembly


def _nearest_road_node(road_nodes, lat, lon):
    best_id, best_d = None, math.inf
    for nid in sorted(road_nodes):
        n = road_nodes[nid]
        d = haversine_m(lat, lon, n.lat, n.lon)
        if d < best_d:
            best_id, best_d = nid, d
    return best_id, best_d


def build_graph(
    road_nodes: dict,
    road_edges: list,
    feed: TransitFeed,
    zones: dict,  # zone_id -> (lat, lon)
    params: BuildParams | None = None,
):
    """Assemble the multimodal graph.

    Each GTFS stop gets a street-side node (walk-linked to its nearest road
    node) and a platform node. Boarding crosses street -> platform at
    boarding penalty plus half the route's mean headway at that stop;
    alighting is free. Transit edges join consecutive stops of each trip,
    deduplicated per (stop pair, route) keeping the minimum scheduled time.
    Returns (graph, skipped_stop_count).
    """
    params = params or BuildParams()
    nodes: list[NetworkNode] = []
    index_of: dict[str, int] = {}

    def add_node(node: NetworkNode) -> int:
        if node.id in index_of:
            raise NetworkError(f"duplicate node id {node.id!r}")
        index_of[node.id] = len(nodes)
        nodes.append(node)
        return index_of[node.id]

    for nid in sorted(road_nodes):
        add_node(road_nodes[nid])

    edges: list[tuple[int, int, str, float]] = []
    for e in road_edges:
        edges.append((index_of[e.src], index_of[e.dst], e.mode, e.impedance))

    # departures per (route, stop) for headway estimation
    departures: dict[tuple, list] = {}
    for trip_id, stop_id, _arr, dep, _seq in feed.stop_times:
        departures.setdefault((feed.trips[trip_id], stop_id), []).append(dep)

    skipped = 0
    platform_idx: dict[str, int] = {}
    street_idx: dict[str, int] = {}
    for stop_id in sorted(feed.stops):
        lat, lon = feed.stops[stop_id]
        near_id, dist = _nearest_road_node(road_nodes, lat, lon)
        if near_id is None or dist > params.stop_link_radius:
            skipped += 1
            continue
        s_idx = add_node(NetworkNode(f"stop:{stop_id}:street", lat, lon, "stop"))
        p_idx = add_node(NetworkNode(f"stop:{stop_id}:platform", lat, lon, "stop"))
        street_idx[stop_id] = s_idx
        platform_idx[stop_id] = p_idx
        walk_s = dist / params.walk_speed
        r_idx = index_of[near_id]
        edges.append((r_idx, s_idx, "walk", walk_s))
        edges.append((s_idx, r_idx, "walk", walk_s))
        # board with expected wait; alight free
        route_waits = [
            _mean_headway(deps, params.default_headway) / 2.0
            for (route_id, sid), deps in sorted(departures.items())
            if sid == stop_id
        ]
        wait = min(route_waits) if route_waits else params.default_headway / 2.0
        edges.append((s_idx, p_idx, "board", params.boarding_penalty + wait))
        edges.append((p_idx, s_idx, "alight", 0.0))

    # transit edges: consecutive stops per trip, min per (stop pair, route)
    by_trip: dict[str, list] = {}
    for st in feed.stop_times:
        by_trip.setdefault(st[0], []).append(st)
    best: dict[tuple, float] = {}
    for trip_id in sorted(by_trip):
        sts = sorted(by_trip[trip_id], key=lambda s: s[4])
        route_id = feed.trips[trip_id]
        for prev, cur in zip(sts, sts[1:]):
            if prev[1] not in platform_idx or cur[1] not in platform_idx:
                continue
            key = (prev[1], cur[1], route_id)
            elapsed = float(cur[2] - prev[3])
            if key not in best or elapsed < best[key]:
                best[key] = elapsed
    for (from_stop, to_stop, _route), elapsed in sorted(best.items()):
        edges.append((platform_idx[from_stop], platform_idx[to_stop], "transit", elapsed))

    zone_anchor = {}
    for zone_id in sorted(zones):
        lat, lon = zones[zone_id]
        near_id, _ = _nearest_road_node(road_nodes, lat, lon)
        if near_id is None:
            raise NetworkError(f"zone {zone_id}: no road node to anchor to")
        zone_anchor[zone_id] = index_of[near_id]

    adjacency = [[] for _ in nodes]
    for i, j, mode, w in edges:
        if not math.isfinite(w) or w < 0:
            raise NetworkError(f"edge {nodes[i].id}->{nodes[j].id}: bad impedance {w}")
        adjacency[i].append((j, mode, w))

    graph = MultimodalGraph(
        nodes=nodes, adjacency=adjacency, zone_anchor=zone_anchor, index_of=index_of
    )
    return graph, skipped


def _mean_headway(departures: list, default: float) -> float:
    deps = sorted(departures)
    if len(deps) < 2:
        return default
    gaps = [b - a for a, b in zip(deps, deps[1:])]
    return sum(gaps) / len(gaps)


def load_zones(path) -> dict:
    """Zone registry: (zone_id, lat, lon[, name]) rows, insertion-ordered."""
    zones = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            zones[row["zone_id"]] = (float(row["lat"]), float(row["lon"]))
    return zones


def load_zone_names(path) -> dict:
    names = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            names[row["zone_id"]] = row.get("name", row["zone_id"])
    return names
