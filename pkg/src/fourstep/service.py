"""JSON-over-HTTP prediction service for the planner UI.

Loads a pipeline output bundle once at startup into immutable AppState and
serves deterministic responses: trip volume, gravity destination shares with
traced route geometry, and Naive Bayes mode probabilities.
"""
from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import dataclass

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import Response

from . import pipeline, routing
from .modechoice import NBModel
from .network import MultimodalGraph
from .tripgen import TripModel


class BundleError(ValueError):
    pass


@dataclass
class AppState:
    trip_model: TripModel
    nb_model: NBModel
    graph: MultimodalGraph
    od_matrix: np.ndarray
    zone_ids: list
    zone_info: list  # [{zone_id, lat, lon, name}] registry order
    versions: dict

    @property
    def n_features(self) -> int:
        return self.trip_model.n_features


def _file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()[:12]


def load_bundle(bundle_dir: str) -> AppState:
    """Load a pipeline output directory into immutable service state."""
    required = [
        "trip_model.json", "mode_model.json", "graph.json",
        "od_matrix.csv", "zones.csv",
    ]
    for name in required:
        path = os.path.join(bundle_dir, name)
        if not os.path.exists(path):
            raise BundleError(f"bundle is missing {path}")

    trip_model = TripModel.load(os.path.join(bundle_dir, "trip_model.json"))
    nb_model = NBModel.load(os.path.join(bundle_dir, "mode_model.json"))
    if trip_model.n_features != nb_model.n_features:
        raise BundleError(
            f"feature arity mismatch: trip model has {trip_model.n_features}, "
            f"mode model has {nb_model.n_features}"
        )
    graph = MultimodalGraph.load(os.path.join(bundle_dir, "graph.json"))

    zone_info = []
    with open(os.path.join(bundle_dir, "zones.csv"), newline="") as fh:
        for row in csv.DictReader(fh):
            zone_info.append(
                {
                    "zone_id": row["zone_id"],
                    "lat": float(row["lat"]),
                    "lon": float(row["lon"]),
                    "name": row.get("name") or row["zone_id"],
                }
            )
    if not zone_info:
        raise BundleError("bundle zone registry is empty")
    zone_ids = [z["zone_id"] for z in zone_info]
    for z in zone_ids:
        if z not in graph.zone_anchor:
            raise BundleError(f"zone {z} has no anchor in the graph bundle")
    od = pipeline.load_od_matrix(os.path.join(bundle_dir, "od_matrix.csv"), zone_ids)

    versions = {
        "trip_model": _file_digest(os.path.join(bundle_dir, "trip_model.json")),
        "mode_model": _file_digest(os.path.join(bundle_dir, "mode_model.json")),
        "graph": _file_digest(os.path.join(bundle_dir, "graph.json")),
        "od_matrix": _file_digest(os.path.join(bundle_dir, "od_matrix.csv")),
    }
    return AppState(
        trip_model=trip_model,
        nb_model=nb_model,
        graph=graph,
        od_matrix=od,
        zone_ids=zone_ids,
        zone_info=zone_info,
        versions=versions,
    )


# ---------------------------------------------------------------------------
# handlers (pure functions of state + request, used directly in tests)


def predict_response(state: AppState, profile, origin_zone, top_k=5) -> dict:
    """Compose the prediction sequence end to end: trip volume, gravity
    destination shares, route trace, mode posterior."""
    if origin_zone not in state.zone_ids:
        raise KeyError(origin_zone)
    profile = [int(v) for v in profile]
    x = np.array(profile, dtype=float)
    monthly_trips = state.trip_model.predict_clamped(x)
    mode_post = state.nb_model.posterior(np.array(profile, dtype=int))
    mode_probs = {
        m: float(p) for m, p in zip(state.nb_model.modes, mode_post)
    }

    i = state.zone_ids.index(origin_zone)
    row = state.od_matrix[i]
    total = row.sum()
    shares = row / total if total > 0 else np.zeros_like(row)
    order = np.argsort(-shares, kind="stable")
    tree = routing.dijkstra(state.graph, state.graph.zone_anchor[origin_zone])

    destinations = []
    for j in order:
        if len(destinations) >= top_k:
            break
        if total > 0 and shares[j] <= 0:
            break
        dest_zone = state.zone_ids[j]
        anchor = state.graph.zone_anchor[dest_zone]
        if np.isinf(tree.dist[anchor]):
            continue
        path = routing.trace_path(tree, anchor, state.graph)
        destinations.append(
            {
                "zone_id": dest_zone,
                "share": float(shares[j]),
                "route": {
                    "type": "LineString",
                    "coordinates": routing.path_geometry(path, state.graph),
                },
                "travel_seconds": float(path.total),
                "mode_probabilities": mode_probs,
            }
        )
    return {
        "monthly_trips": float(monthly_trips),
        "destinations": destinations,
        "model_versions": state.versions,
    }


def zones_response(state: AppState) -> dict:
    return {"zones": state.zone_info}


def health_response(state: AppState) -> dict:
    return {"status": "ok", "versions": state.versions}


# ---------------------------------------------------------------------------
# FastAPI wiring


def _json(payload: dict, status_code: int = 200) -> Response:
    # canonical serialization so identical requests yield identical bytes
    return Response(
        content=json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n",
        media_type="application/json",
        status_code=status_code,
    )


def create_app(bundle_dir: str) -> FastAPI:
    state = load_bundle(bundle_dir)
    app = FastAPI(title="fourstep prediction service")
    app.state.model_state = state

    @app.get("/api/health")
    def health():
        return _json(health_response(state))

    @app.get("/api/zones")
    def zones():
        return _json(zones_response(state))

    @app.post("/api/predict")
    async def predict(request: Request):
        try:
            body = await request.json()
        except Exception:
            return _json({"error": "request body is not valid JSON"}, 400)
        errors = validate_predict_request(body, state)
        if errors:
            return _json({"error": "invalid request", "fields": errors}, 400)
        try:
            payload = predict_response(
                state,
                body["profile"],
                body["origin_zone"],
                int(body.get("top_k", 5)),
            )
        except KeyError:
            return _json({"error": f"unknown zone {body['origin_zone']}"}, 400)
        return _json(payload)

    return app


def validate_predict_request(body, state: AppState) -> dict:
    errors = {}
    if not isinstance(body, dict):
        return {"body": "must be a JSON object"}
    profile = body.get("profile")
    if (
        not isinstance(profile, list)
        or len(profile) != state.n_features
        or any(v not in (0, 1) for v in profile)
    ):
        errors["profile"] = f"must be a list of {state.n_features} 0/1 values"
    if not isinstance(body.get("origin_zone"), str):
        errors["origin_zone"] = "must be a zone id string"
    top_k = body.get("top_k", 5)
    if not isinstance(top_k, int) or top_k < 1:
        errors["top_k"] = "must be a positive integer"
    return errors
