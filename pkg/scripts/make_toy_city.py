"""Generate the bundled toy city: 9 zones on a 3x3 grid, a 5x5 road grid,
a one-route GTFS feed, marginals/microdata for population synthesis, and
training data for the trip and mode models. Fully deterministic."""
import csv
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from fourstep.synthpop import FEATURE_NAMES  # noqa: E402

OUT = os.path.join(os.path.dirname(__file__), "..", "data", "toy_city")

LAT0, LON0 = 47.60, -122.33
STEP = 0.005  # ~550 m between road nodes

rng = np.random.default_rng(20240811)


def write_csv(name, header, rows):
    os.makedirs(OUT, exist_ok=True)
    with open(os.path.join(OUT, name), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def main():
    # zones: 3x3, centroids sitting just off every second road node
    zones = []
    for a in range(3):
        for b in range(3):
            zid = f"Z{a * 3 + b + 1}"
            zones.append((zid, LAT0 + 2 * a * STEP + 0.0001,
                          LON0 + 2 * b * STEP + 0.0001, f"District {zid}"))
    write_csv("zones.csv", ["zone_id", "lat", "lon", "name"], zones)

    # road grid 5x5: drive both directions (13.9 m/s) + walk on every link
    nodes = []
    for i in range(5):
        for j in range(5):
            nodes.append((f"n{i}{j}", LAT0 + i * STEP, LON0 + j * STEP))
    write_csv("nodes.csv", ["id", "lat", "lon"], nodes)
    edges = []
    length = 550.0
    for i in range(5):
        for j in range(5):
            for di, dj in ((0, 1), (1, 0)):
                ni, nj = i + di, j + dj
                if ni > 4 or nj > 4:
                    continue
                a, b = f"n{i}{j}", f"n{ni}{nj}"
                edges.append((a, b, "drive", length, 13.9, ""))
                edges.append((b, a, "drive", length, 13.9, ""))
                edges.append((a, b, "walk", length, 1.4, ""))
    write_csv("edges.csv",
              ["from", "to", "mode", "length_m", "speed_ms", "impedance_s"], edges)

    # GTFS: one diagonal route, three trips at a 600 s headway
    gtfs = os.path.join(OUT, "gtfs")
    os.makedirs(gtfs, exist_ok=True)
    stop_pos = [(0, 0), (2, 2), (4, 4)]
    with open(os.path.join(gtfs, "stops.txt"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["stop_id", "stop_name", "stop_lat", "stop_lon"])
        for k, (i, j) in enumerate(stop_pos, 1):
            w.writerow([f"S{k}", f"Stop {k}",
                        LAT0 + i * STEP + 0.0002, LON0 + j * STEP + 0.0002])
    with open(os.path.join(gtfs, "routes.txt"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["route_id", "route_short_name", "route_type"])
        w.writerow(["R1", "1", "3"])
    with open(os.path.join(gtfs, "trips.txt"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["route_id", "service_id", "trip_id"])
        for t in range(3):
            w.writerow(["R1", "WEEK", f"T{t + 1}"])
    with open(os.path.join(gtfs, "calendar.txt"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["service_id", "monday", "tuesday", "wednesday", "thursday",
                    "friday", "saturday", "sunday", "start_date", "end_date"])
        w.writerow(["WEEK", 1, 1, 1, 1, 1, 0, 0, "20240101", "20241231"])
    with open(os.path.join(gtfs, "stop_times.txt"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trip_id", "arrival_time", "departure_time", "stop_id",
                    "stop_sequence"])
        for t in range(3):
            base = 8 * 3600 + t * 600
            for k in range(3):
                sec = base + k * 300
                hh, mm, ss = sec // 3600, (sec % 3600) // 60, sec % 60
                ts = f"{hh:02d}:{mm:02d}:{ss:02d}"
                w.writerow([f"T{t + 1}", ts, ts, f"S{k + 1}", k + 1])

    # marginals: heterogeneous feature fractions across zones
    rows = []
    base_fracs = np.array([0.65, 0.18, 0.35, 0.60, 0.45])
    for z_idx, (zid, _, _, _) in enumerate(zones):
        pop = int(rng.integers(22, 40))
        tilt = rng.uniform(-0.18, 0.18, size=5)
        fracs = np.clip(base_fracs + tilt, 0.05, 0.95)
        for d, name in enumerate(FEATURE_NAMES):
            ones = int(round(fracs[d] * pop))
            rows.append((zid, name, 1, ones))
            rows.append((zid, name, 0, pop - ones))
    write_csv("marginals.csv",
              ["zone_id", "dimension", "category", "target_count"], rows)

    # microdata: all 32 bundles, weights loosely tied to plausibility
    rows = []
    for combo in range(32):
        bits = [(combo >> (4 - d)) & 1 for d in range(5)]
        w = float(np.round(rng.uniform(0.5, 4.0), 3))
        rows.append(bits + [w])
    write_csv("microdata.csv", FEATURE_NAMES + ["weight"], rows)

    # trip training: monthly trips driven mainly by employment and car access
    rows = []
    for _ in range(240):
        x = (rng.random(5) < base_fracs).astype(int)
        y = (20.0 + 14.0 * x[3] + 9.0 * x[0] - 6.0 * x[1] + 3.0 * x[4]
             + rng.normal(0, 2.0))
        rows.append(list(x) + [round(max(y, 0.0), 3)])
    write_csv("trip_training.csv", FEATURE_NAMES + ["monthly_trips"], rows)

    # mode training: car -> drive, senior/no-car -> transit, college -> walk
    rows = []
    for _ in range(400):
        x = (rng.random(5) < base_fracs).astype(int)
        logits = {
            "drive": 0.4 + 2.2 * x[0] + 0.5 * x[2],
            "transit": 0.8 + 1.0 * x[1] + 0.9 * x[3] - 1.0 * x[0],
            "walk": 0.5 + 1.2 * x[4] - 0.6 * x[0],
        }
        vals = np.array(list(logits.values()))
        probs = np.exp(vals) / np.exp(vals).sum()
        mode = list(logits)[rng.choice(3, p=probs)]
        rows.append(list(x) + [mode])
    write_csv("mode_training.csv", FEATURE_NAMES + ["mode"], rows)

    # jobs per zone: center-heavy
    rows = []
    for z_idx, (zid, _, _, _) in enumerate(zones):
        centrality = 3 - abs(z_idx // 3 - 1) - abs(z_idx % 3 - 1)
        rows.append((zid, int(40 + 35 * centrality + rng.integers(0, 15))))
    write_csv("jobs.csv", ["zone_id", "jobs"], rows)

    with open(os.path.join(OUT, "scenario.yaml"), "w") as fh:
        fh.write(
            "zones: zones.csv\n"
            "marginals: marginals.csv\n"
            "microdata: microdata.csv\n"
            "trip_training: trip_training.csv\n"
            "mode_training: mode_training.csv\n"
            "jobs: jobs.csv\n"
            "road_nodes: nodes.csv\n"
            "road_edges: edges.csv\n"
            "gtfs: gtfs\n"
            "deterrence: exp:0.002\n"
            "trip_model_kind: random_forest\n"
            "rng_seed: 42\n"
            "tau: 0.2\n"
        )
    print(f"toy city written to {os.path.abspath(OUT)}")


if __name__ == "__main__":
    main()
