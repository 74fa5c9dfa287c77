"""Command-line entry points for every stage of the model chain."""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import distribution, modechoice, network, pipeline, routing, synthpop
from .tripgen import TripModel, fit_model, shapley
from .tripgen.models import load_training_data


def _parse_features(text):
    return np.array([int(v) for v in text.split(",")], dtype=float)


def cmd_synthesize(args):
    marginals = synthpop.load_marginals(args.marginals)
    microdata = synthpop.load_microdata(args.microdata)
    persons = []
    for k, zone in enumerate(sorted(marginals)):
        persons.extend(
            synthpop.synthesize_zone(
                marginals[zone], microdata, zone,
                rng_seed=args.seed + k, tol=args.tol, max_iter=args.max_iter,
            )
        )
    synthpop.write_persons(persons, args.out)
    print(f"wrote {len(persons)} persons to {args.out}")


def cmd_tripgen_fit(args):
    X, y, _ = load_training_data(args.train)
    model = fit_model(args.kind, X, y, rng_seed=args.seed)
    model.save(args.out)
    print(f"fitted {args.kind} model on {len(y)} rows -> {args.out}")


def cmd_tripgen_predict(args):
    model = TripModel.load(args.model)
    x = _parse_features(args.features)
    print(repr(model.predict_clamped(x)))


def cmd_tripgen_explain(args):
    model = TripModel.load(args.model)
    x = _parse_features(args.features)
    X_bg, _, _ = load_training_data(args.background)
    att = shapley(model, x, X_bg)
    print(json.dumps(
        {"base_value": att.base_value, "phi": att.phi.tolist()}, sort_keys=True
    ))


def _load_zone_column(path, column):
    ids, values = [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            ids.append(row["zone_id"])
            values.append(float(row[column]))
    return ids, np.array(values)


def cmd_distribute(args):
    zones, O = _load_zone_column(args.productions, "trips")
    a_zones, D = _load_zone_column(args.attractions, "jobs")
    D = np.array([D[a_zones.index(z)] if z in a_zones else 0.0 for z in zones])
    skim = routing.load_skim(args.skim, zones)
    if args.target_mean_cost is not None:
        form = "exponential" if args.deterrence.startswith("exp") else "power"
        O_b, D_b = distribution.balance_attractions(O, D)
        det = distribution.calibrate_deterrence(
            O_b, D_b, skim, form, args.target_mean_cost
        )
        print(f"calibrated {det.form} parameter = {det.parameter!r}")
    else:
        det = distribution.Deterrence.parse(args.deterrence)
    O_b, D_b = distribution.balance_attractions(O, D)
    od = distribution.furness_balance(O_b, D_b, skim, det)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["origin_zone", "destination_zone", "trips"])
        for i, zi in enumerate(zones):
            for j, zj in enumerate(zones):
                w.writerow([zi, zj, repr(float(od.trips[i, j]))])
    print(f"distributed {od.trips.sum():.3f} trips -> {args.out} "
          f"(converged={od.converged})")


def cmd_network_build(args):
    road_nodes, road_edges = network.load_road_network(
        args.road_nodes, args.road_edges
    )
    feed = network.load_gtfs(args.gtfs) if args.gtfs else network.empty_feed()
    zones = network.load_zones(args.zones)
    params = network.BuildParams(
        walk_speed=args.walk_speed,
        boarding_penalty=args.board_penalty,
        stop_link_radius=args.link_radius,
    )
    graph, skipped = network.build_graph(road_nodes, road_edges, feed, zones, params)
    graph.save(args.out)
    print(f"built graph: {graph.n_nodes} nodes, "
          f"{sum(len(a) for a in graph.adjacency)} edges, "
          f"{skipped} stops skipped -> {args.out}")


def cmd_route_sssp(args):
    graph = network.MultimodalGraph.load(args.graph)
    src = graph.index_of[args.source]
    tree = routing.dijkstra(graph, src)
    for i, node in enumerate(graph.nodes):
        d = tree.dist[i]
        print(f"{node.id}\t{'UNREACHABLE' if np.isinf(d) else repr(d)}")


def cmd_route_skim(args):
    graph = network.MultimodalGraph.load(args.graph)
    zones = list(network.load_zones(args.zones))
    skim = routing.cost_skim(graph, zones)
    routing.write_skim(skim, zones, args.out)
    print(f"wrote {len(zones)}x{len(zones)} skim -> {args.out}")


def cmd_route_path(args):
    graph = network.MultimodalGraph.load(args.graph)
    tree = routing.dijkstra(graph, graph.zone_anchor[args.from_zone])
    path = routing.trace_path(tree, graph.zone_anchor[args.to_zone], graph)
    doc = {
        "type": "FeatureCollection",
        "features": [routing.path_geojson(path, graph)],
    }
    with open(args.geojson, "w") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")
    print(f"path {args.from_zone}->{args.to_zone}: {path.total!r} s -> {args.geojson}")


def cmd_modes_fit(args):
    X, labels = modechoice.load_mode_training(args.train, synthpop.FEATURE_NAMES)
    model = modechoice.fit_nb(X, labels, alpha=args.alpha)
    model.save(args.out)
    print(f"fitted mode model on {len(labels)} rows -> {args.out}")


def cmd_modes_posterior(args):
    model = modechoice.NBModel.load(args.model)
    x = np.array([int(v) for v in args.features.split(",")])
    post = model.posterior(x)
    print(json.dumps(
        {m: float(p) for m, p in zip(model.modes, post)}, sort_keys=True
    ))


def cmd_pipeline_run(args):
    config = pipeline.ScenarioConfig.load(args.config, seed_override=args.seed)
    summaries = pipeline.run_pipeline(config, args.out)
    total = sum(s.total_trips for s in summaries)
    print(f"pipeline complete: {len(summaries)} zones, "
          f"{total:.2f} trips/{config.trip_period} -> {args.out}")


def cmd_pipeline_evaluate(args):
    modes = args.modes.split(",")
    summaries = pipeline.load_zone_summaries(
        os.path.join(args.pred, "zone_summaries.csv"), modes
    )
    predicted = pipeline.mode_volumes_table(summaries, modes)
    truth = pipeline.load_truth(args.truth, modes)
    totals = {m: sum(truth[z][m] for z in truth) for m in modes}
    grand = sum(totals.values())
    shares = {m: (totals[m] / grand if grand > 0 else 1 / len(modes)) for m in modes}
    pops = {s.zone_id: s.population for s in summaries}
    baseline = pipeline.baseline_shares(shares, pops)
    report = pipeline.evaluate(predicted, baseline, truth, args.tau)
    print(json.dumps(
        {
            "tau": report.tau,
            "model_proportion_correct": report.model_proportion,
            "baseline_proportion_correct": report.baseline_proportion,
        },
        sort_keys=True, indent=2,
    ))


def cmd_serve(args):
    import uvicorn

    from .service import create_app

    port = int(os.environ.get("FOURSTEP_PORT", args.port))
    app = create_app(args.bundle)
    uvicorn.run(app, host=args.host, port=port)


def build_parser():
    p = argparse.ArgumentParser(prog="fourstep", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synthesize", help="IPF population synthesis")
    s.add_argument("--marginals", required=True)
    s.add_argument("--microdata", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--max-iter", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_synthesize)

    tg = sub.add_parser("tripgen", help="trip-count models").add_subparsers(
        dest="subcommand", required=True
    )
    s = tg.add_parser("fit")
    s.add_argument("--kind", required=True)
    s.add_argument("--train", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_tripgen_fit)
    s = tg.add_parser("predict")
    s.add_argument("--model", required=True)
    s.add_argument("--features", required=True)
    s.set_defaults(func=cmd_tripgen_predict)
    s = tg.add_parser("explain")
    s.add_argument("--model", required=True)
    s.add_argument("--features", required=True)
    s.add_argument("--background", required=True)
    s.set_defaults(func=cmd_tripgen_explain)

    s = sub.add_parser("distribute", help="gravity trip distribution")
    s.add_argument("--productions", required=True)
    s.add_argument("--attractions", required=True)
    s.add_argument("--skim", required=True)
    s.add_argument("--deterrence", default="exp:0.001")
    s.add_argument("--target-mean-cost", type=float, default=None,
                   help="calibrate the deterrence parameter to this mean cost")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_distribute)

    net = sub.add_parser("network", help="multimodal graph").add_subparsers(
        dest="subcommand", required=True
    )
    s = net.add_parser("build")
    s.add_argument("--gtfs", default="")
    s.add_argument("--road-nodes", required=True)
    s.add_argument("--road-edges", required=True)
    s.add_argument("--zones", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--walk-speed", type=float, default=1.4)
    s.add_argument("--board-penalty", type=float, default=30.0)
    s.add_argument("--link-radius", type=float, default=500.0)
    s.set_defaults(func=cmd_network_build)

    rt = sub.add_parser("route", help="shortest paths and skims").add_subparsers(
        dest="subcommand", required=True
    )
    s = rt.add_parser("sssp")
    s.add_argument("--graph", required=True)
    s.add_argument("--source", required=True)
    s.set_defaults(func=cmd_route_sssp)
    s = rt.add_parser("skim")
    s.add_argument("--graph", required=True)
    s.add_argument("--zones", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_route_skim)
    s = rt.add_parser("path")
    s.add_argument("--graph", required=True)
    s.add_argument("--from", dest="from_zone", required=True)
    s.add_argument("--to", dest="to_zone", required=True)
    s.add_argument("--geojson", required=True)
    s.set_defaults(func=cmd_route_path)

    md = sub.add_parser("modes", help="naive Bayes mode choice").add_subparsers(
        dest="subcommand", required=True
    )
    s = md.add_parser("fit")
    s.add_argument("--train", required=True)
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_modes_fit)
    s = md.add_parser("posterior")
    s.add_argument("--model", required=True)
    s.add_argument("--features", required=True)
    s.set_defaults(func=cmd_modes_posterior)

    pl = sub.add_parser("pipeline", help="end-to-end scenario").add_subparsers(
        dest="subcommand", required=True
    )
    s = pl.add_parser("run")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=None)
    s.set_defaults(func=cmd_pipeline_run)
    s = pl.add_parser("evaluate")
    s.add_argument("--pred", required=True)
    s.add_argument("--truth", required=True)
    s.add_argument("--tau", type=float, default=0.2)
    s.add_argument("--modes", default="transit,drive,walk")
    s.set_defaults(func=cmd_pipeline_evaluate)

    s = sub.add_parser("serve", help="prediction API")
    s.add_argument("--bundle", required=True)
    s.add_argument("--port", type=int, default=8000)
    s.add_argument("--host", default="127.0.0.1")
    s.set_defaults(func=cmd_serve)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
