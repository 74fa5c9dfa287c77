"""End-to-end scenario runner: population synthesis, trip generation,
skimming, gravity distribution, route tracing, and mode-probability
aggregation into per-zone summaries, plus the naive-baseline evaluation."""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np
import yaml

from . import distribution, modechoice, network, routing, synthpop
from .tripgen import TripModel, fit_model
from .tripgen.models import load_training_data


class PipelineError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    zones: str
    marginals: str
    microdata: str
    trip_training: str
    mode_training: str
    jobs: str
    rng_seed: int
    road_nodes: str = ""
    road_edges: str = ""
    gtfs: str = ""
    graph: str = ""  # prebuilt graph bundle; wins over road/gtfs inputs
    deterrence: str = "exp:0.001"
    trip_period: str = "monthly"
    trip_model_kind: str = "random_forest"
    trip_hyperparams: dict = field(default_factory=dict)
    mode_alpha: float = 1.0
    modes: list = field(default_factory=lambda: list(modechoice.DEFAULT_MODES))
    tau: float = 0.2
    top_k: int = 5
    intrazonal_seconds: float = distribution.DEFAULT_COST_FLOOR
    mode_aggregation: str = "expected"  # or "argmax"
    network_params: dict = field(default_factory=dict)
    gravity_tol: float = 1e-8
    gravity_max_iter: int = 5000
    ipf_tol: float = 1e-8
    ipf_max_iter: int = 1000

    @classmethod
    def load(cls, path, seed_override=None) -> "ScenarioConfig":
        with open(path) as fh:
            raw = yaml.safe_load(fh)
        base = os.path.dirname(os.path.abspath(path))

        def resolve(p):
            return p if (not p or os.path.isabs(p)) else os.path.join(base, p)

        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise PipelineError(f"unknown scenario keys: {sorted(unknown)}")
        if "rng_seed" not in raw:
            raise PipelineError("scenario must declare rng_seed (reproducibility)")
        for key in (
            "zones", "marginals", "microdata", "trip_training", "mode_training",
            "jobs", "road_nodes", "road_edges", "gtfs", "graph",
        ):
            if key in raw and raw[key]:
                raw[key] = resolve(raw[key])
        cfg = cls(**raw)
        if seed_override is not None:
            cfg.rng_seed = int(seed_override)
        for key in ("zones", "marginals", "microdata", "trip_training",
                    "mode_training", "jobs"):
            p = getattr(cfg, key)
            if not p or not os.path.exists(p):
                raise PipelineError(f"scenario input {key} missing: {p!r}")
        return cfg


@dataclass
class ZoneSummary:
    zone_id: str
    population: int
    total_trips: float
    mode_volumes: dict  # mode -> expected trips
    top_destinations: list  # [(zone_id, share)] descending


@dataclass
class EvaluationReport:
    tau: float
    model_proportion: dict  # mode -> proportion of zones correct
    baseline_proportion: dict
    per_zone: list  # (zone, mode, predicted, baseline, truth)


# ---------------------------------------------------------------------------


def load_jobs(path) -> dict:
    jobs = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            jobs[row["zone_id"]] = float(row["jobs"])
    return jobs


def _fmt(x: float) -> str:
    return repr(float(x))


def run_pipeline(config: ScenarioConfig, out_dir: str) -> list:
    """Run the four steps for one scenario, persisting every intermediate
    artifact under out_dir. Deterministic for a fixed config.rng_seed."""
    os.makedirs(out_dir, exist_ok=True)
    zones_latlon = network.load_zones(config.zones)
    zone_ids = list(zones_latlon)
    if not zone_ids:
        raise PipelineError("step synthesize: zone registry is empty")
    # carry the registry into the output so the directory is a complete bundle
    with open(config.zones, newline="") as src, open(
        os.path.join(out_dir, "zones.csv"), "w", newline=""
    ) as dst:
        dst.write(src.read())

    # -- step 1: synthetic population
    try:
        marginals = synthpop.load_marginals(config.marginals)
        microdata = synthpop.load_microdata(config.microdata)
        persons = []
        for k, z in enumerate(zone_ids):
            if z not in marginals:
                raise synthpop.SynthesisError(f"zone {z} has no marginals")
            persons.extend(
                synthpop.synthesize_zone(
                    marginals[z], microdata, z,
                    rng_seed=config.rng_seed + k,
                    tol=config.ipf_tol, max_iter=config.ipf_max_iter,
                )
            )
    except synthpop.SynthesisError as exc:
        raise PipelineError(f"step synthesize: {exc}") from exc
    synthpop.write_persons(persons, os.path.join(out_dir, "persons.csv"))

    # -- step 2: trip generation -> productions
    try:
        X_train, y_train, _names = load_training_data(config.trip_training)
        trip_model = fit_model(
            config.trip_model_kind, X_train, y_train,
            hyperparams=config.trip_hyperparams, rng_seed=config.rng_seed,
        )
    except Exception as exc:
        raise PipelineError(f"step tripgen: {exc}") from exc
    trip_model.save(os.path.join(out_dir, "trip_model.json"))

    person_trips = np.array(
        [trip_model.predict_clamped(p.feature_vector()) for p in persons]
    )
    productions = {z: 0.0 for z in zone_ids}
    population = {z: 0 for z in zone_ids}
    for p, t in zip(persons, person_trips):
        productions[p.zone_id] += float(t)
        population[p.zone_id] += 1
    with open(os.path.join(out_dir, "productions.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["zone_id", "population", "trips"])
        for z in zone_ids:
            w.writerow([z, population[z], _fmt(productions[z])])

    # -- step 3a: network + skim
    try:
        if config.graph:
            graph = network.MultimodalGraph.load(config.graph)
        else:
            road_nodes, road_edges = network.load_road_network(
                config.road_nodes, config.road_edges
            )
            feed = (
                network.load_gtfs(config.gtfs) if config.gtfs else network.empty_feed()
            )
            params = network.BuildParams(**config.network_params)
            graph, _skipped = network.build_graph(
                road_nodes, road_edges, feed, zones_latlon, params
            )
        graph.save(os.path.join(out_dir, "graph.json"))
        skim = routing.cost_skim(graph, zone_ids, intrazonal=config.intrazonal_seconds)
    except (network.NetworkError, routing.RoutingError) as exc:
        raise PipelineError(f"step network: {exc}") from exc
    routing.write_skim(skim, zone_ids, os.path.join(out_dir, "skim.csv"))

    # -- step 3b: gravity distribution
    jobs = load_jobs(config.jobs)
    D_raw = np.array([jobs.get(z, 0.0) for z in zone_ids])
    O = np.array([productions[z] for z in zone_ids])
    total_o = O.sum()
    od = None
    if total_o > 0:
        try:
            det = distribution.Deterrence.parse(config.deterrence)
            det.cost_floor = config.intrazonal_seconds
            O_b, D_b = distribution.balance_attractions(O, D_raw)
            od = distribution.furness_balance(
                O_b, D_b, skim, det,
                tol=config.gravity_tol, max_iter=config.gravity_max_iter,
            )
            trips_matrix = od.trips
        except distribution.DistributionError as exc:
            raise PipelineError(f"step distribution: {exc}") from exc
    else:
        trips_matrix = np.zeros((len(zone_ids), len(zone_ids)))
    with open(os.path.join(out_dir, "od_matrix.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["origin_zone", "destination_zone", "trips"])
        for i, zi in enumerate(zone_ids):
            for j, zj in enumerate(zone_ids):
                w.writerow([zi, zj, _fmt(trips_matrix[i, j])])

    # -- step 3c: representative paths + all-or-nothing link loads
    link_loads: dict = {}
    with open(os.path.join(out_dir, "paths.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["origin_zone", "destination_zone", "trips", "seconds", "nodes"])
        for i, zi in enumerate(zone_ids):
            tree = routing.dijkstra(graph, graph.zone_anchor[zi])
            for j, zj in enumerate(zone_ids):
                if i == j or trips_matrix[i, j] <= 0:
                    continue
                anchor_j = graph.zone_anchor[zj]
                if np.isinf(tree.dist[anchor_j]):
                    continue
                path = routing.trace_path(tree, anchor_j, graph)
                w.writerow([
                    zi, zj, _fmt(trips_matrix[i, j]), _fmt(path.total),
                    "|".join(graph.nodes[k].id for k in path.nodes),
                ])
                for u, v in zip(path.nodes, path.nodes[1:]):
                    key = (graph.nodes[u].id, graph.nodes[v].id)
                    link_loads[key] = link_loads.get(key, 0.0) + trips_matrix[i, j]
    with open(os.path.join(out_dir, "link_loads.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["from_node", "to_node", "load_all_or_nothing"])
        for (u, v), load in sorted(link_loads.items()):
            w.writerow([u, v, _fmt(load)])

    # -- step 4: mode choice
    try:
        X_mode, labels = modechoice.load_mode_training(
            config.mode_training, synthpop.FEATURE_NAMES
        )
        nb = modechoice.fit_nb(
            X_mode, labels, modes=config.modes, alpha=config.mode_alpha
        )
    except modechoice.ModeChoiceError as exc:
        raise PipelineError(f"step modechoice: {exc}") from exc
    nb.save(os.path.join(out_dir, "mode_model.json"))

    mode_volumes = {z: np.zeros(len(config.modes)) for z in zone_ids}
    for p, t in zip(persons, person_trips):
        post = nb.posterior(p.feature_vector())
        if config.mode_aggregation == "argmax":
            hard = np.zeros(len(config.modes))
            hard[int(np.argmax(post))] = 1.0
            post = hard
        mode_volumes[p.zone_id] += t * post

    # -- summaries
    summaries = []
    for i, z in enumerate(zone_ids):
        row = trips_matrix[i]
        total = row.sum()
        if total > 0:
            shares = row / total
            order = np.argsort(-shares, kind="stable")[: config.top_k]
            top = [(zone_ids[j], float(shares[j])) for j in order if shares[j] > 0]
        else:
            top = []
        summaries.append(
            ZoneSummary(
                zone_id=z,
                population=population[z],
                total_trips=float(productions[z]),
                mode_volumes={
                    m: float(mode_volumes[z][k]) for k, m in enumerate(config.modes)
                },
                top_destinations=top,
            )
        )
    write_zone_summaries(
        summaries, config.modes, os.path.join(out_dir, "zone_summaries.csv")
    )

    report = {
        "rng_seed": config.rng_seed,
        "trip_period": config.trip_period,
        "deterrence": config.deterrence,
        "persons": len(persons),
        "total_productions": float(total_o),
        "total_distributed": float(trips_matrix.sum()),
        "gravity_converged": bool(od.converged) if od is not None else True,
        "mode_aggregation": config.mode_aggregation,
    }
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return summaries


def write_zone_summaries(summaries, modes, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(
            ["zone_id", "population", "total_trips"]
            + [f"trips_{m}" for m in modes]
            + ["top_destinations"]
        )
        for s in summaries:
            w.writerow(
                [s.zone_id, s.population, _fmt(s.total_trips)]
                + [_fmt(s.mode_volumes[m]) for m in modes]
                + ["|".join(f"{z}:{_fmt(share)}" for z, share in s.top_destinations)]
            )


def load_zone_summaries(path, modes) -> list:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            top = []
            if row["top_destinations"]:
                for part in row["top_destinations"].split("|"):
                    z, _, share = part.rpartition(":")
                    top.append((z, float(share)))
            out.append(
                ZoneSummary(
                    zone_id=row["zone_id"],
                    population=int(row["population"]),
                    total_trips=float(row["total_trips"]),
                    mode_volumes={m: float(row[f"trips_{m}"]) for m in modes},
                    top_destinations=top,
                )
            )
    return out


# ---------------------------------------------------------------------------
# validation against the naive population-proportion baseline


def baseline_shares(citywide_shares: dict, zone_populations: dict) -> dict:
    """Naive comparator: identical per-capita mode shares in every zone.

    volume(zone, mode) = population(zone) * citywide_share(mode).
    """
    total = sum(citywide_shares.values())
    if abs(total - 1.0) > 1e-9:
        raise PipelineError(f"citywide shares sum to {total}, expected 1")
    if any(p < 0 for p in zone_populations.values()):
        raise PipelineError("zone populations must be non-negative")
    return {
        z: {m: pop * s for m, s in citywide_shares.items()}
        for z, pop in zone_populations.items()
    }


def evaluate(predicted: dict, baseline: dict, truth: dict, tau: float) -> EvaluationReport:
    """Per-mode proportion of zones whose volume is within relative error tau.

    A zone counts as correct for a mode when
    |pred - truth| / max(truth, 1) <= tau.
    """
    zones = sorted(truth)
    if sorted(predicted) != zones or sorted(baseline) != zones:
        raise PipelineError("predicted/baseline/truth zone sets differ")
    modes = sorted(truth[zones[0]])
    for table in (predicted, baseline):
        for z in zones:
            if sorted(table[z]) != modes:
                raise PipelineError("predicted/baseline/truth mode sets differ")

    def correct(est):
        hits = {m: 0 for m in modes}
        for z in zones:
            for m in modes:
                t = truth[z][m]
                if abs(est[z][m] - t) / max(t, 1.0) <= tau:
                    hits[m] += 1
        return {m: hits[m] / len(zones) for m in modes}

    per_zone = [
        (z, m, predicted[z][m], baseline[z][m], truth[z][m])
        for z in zones
        for m in modes
    ]
    return EvaluationReport(
        tau=tau,
        model_proportion=correct(predicted),
        baseline_proportion=correct(baseline),
        per_zone=per_zone,
    )


def mode_volumes_table(summaries: list, modes) -> dict:
    return {s.zone_id: {m: s.mode_volumes[m] for m in modes} for s in summaries}


def load_od_matrix(path, zone_ids) -> np.ndarray:
    idx = {z: i for i, z in enumerate(zone_ids)}
    T = np.zeros((len(zone_ids), len(zone_ids)))
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            T[idx[row["origin_zone"]], idx[row["destination_zone"]]] = float(
                row["trips"]
            )
    return T


def load_truth(path, modes) -> dict:
    """Ground-truth per-zone per-mode volumes (zone_id + trips_<mode> cols)."""
    truth = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            truth[row["zone_id"]] = {m: float(row[f"trips_{m}"]) for m in modes}
    return truth
