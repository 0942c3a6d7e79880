#!/usr/bin/env python3
"""Writes the small campus fixture under data/fixture.

Two street blocks with a water main along the south street, one main gap,
a manhole drawing symbol, a doubled valve, a stub ending in open ground,
a closed and a broken building outline, and three census blocks.
Coordinates are local projected metres.
"""

import json
import math
import os
import sys

out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "data", "fixture")
os.makedirs(out, exist_ok=True)


def line(fid, pts, **props):
    return {"type": "Feature", "id": fid, "properties": props,
            "geometry": {"type": "LineString", "coordinates": [list(p) for p in pts]}}


def point(fid, p, **props):
    return {"type": "Feature", "id": fid, "properties": props,
            "geometry": {"type": "Point", "coordinates": list(p)}}


def poly(fid, ring, **props):
    return {"type": "Feature", "id": fid, "properties": props,
            "geometry": {"type": "Polygon", "coordinates": [[list(p) for p in ring]]}}


def collection(features):
    return {"type": "FeatureCollection", "features": features}


streets = collection([
    line("st_south", [(0, 0), (150, 0), (300, 0)], name="South St"),
    line("st_north", [(0, 200), (150, 200), (300, 200)], name="North St"),
    line("st_west", [(0, 0), (0, 200)], name="West Ave"),
    line("st_mid", [(150, 0), (150, 200)], name="Mid Ave"),
    line("st_east", [(300, 0), (300, 200)], name="East Ave"),
])

cx, cy, r = 250.0, 2.0, 1.0
circle = [(round(cx + r * math.cos(2 * math.pi * k / 12), 9), round(cy + r * math.sin(2 * math.pi * k / 12), 9))
          for k in range(12)]
pipes = [
    line("pm1", [(0, 2), (120, 2)], material="cast_iron", installed="1962", _guides_period="1962"),
    # gap 120..140 is the missing main
    line("pm2", [(140, 2), circle[6]], material="cast_iron", installed="1962"),
    line("pm3", [circle[0], (300, 2)], material="ductile", installed="1998"),
    line("ps1", [circle[9], (250, -8)], material="pvc"),
    line("ps_bldg", [(35, 2), (35, 35)], material="copper"),
    line("ps_open", [(80, 2), (80, 30)], material="copper"),
    line("ps_valve", [(200, 2), (200, 20)], material="copper"),
    point("v1", (200, 20), kind="valve"),
    point("v1_dup", (200.004, 20.002), kind="valve"),
]
for k in range(12):
    pipes.append(line(f"mh{k}", [circle[k], circle[(k + 1) % 12]], symbol="manhole"))

buildings = collection([
    line("ba1", [(20, 20), (50, 20)]),
    line("ba2", [(50, 20), (50, 50)]),
    line("ba3", [(50, 50), (20, 50)]),
    line("ba4", [(20, 50), (20, 20)]),
    line("bb1", [(180, 40), (210, 40)]),
    line("bb2", [(210, 40), (210, 70)]),
    line("bb3", [(210, 70), (180, 70)]),
])

census = collection([
    poly("cb1", [(-10, -20), (100, -20), (100, 100), (-10, 100), (-10, -20)], low_income=100, geoid="170310001"),
    poly("cb2", [(100, -20), (200, -20), (200, 100), (100, 100), (100, -20)], low_income=250, geoid="170310002"),
    poly("cb3", [(200, -20), (310, -20), (310, 100), (200, 100), (200, -20)], low_income=400, geoid="170310003"),
])

layers = {
    "streets": (streets, "streets", "public"),
    "pipes": (collection(pipes), "pipes", "sensitive"),
    "buildings": (buildings, "buildings", "public"),
    "census": (census, "census", "public"),
}
for name, (fc, _, _) in layers.items():
    with open(os.path.join(out, f"{name}.geojson"), "w") as f:
        json.dump(fc, f, indent=1)
        f.write("\n")

pipeline = {
    "layers": [{"id": n, "path": f"{n}.geojson", "kind": k, "sensitivity": s} for n, (_, k, s) in layers.items()],
    "epsilon": 0.01,
    "inference": {"search_radius": 50, "corridor_half_width": 8},
    "output_dir": "out",
    "seed": 42,
    "synthetic": {"p": 0.2},
}
with open(os.path.join(out, "pipeline.json"), "w") as f:
    json.dump(pipeline, f, indent=2)
    f.write("\n")

square = lambda x0, y0, x1, y1: {"type": "Polygon",
                                 "coordinates": [[[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]]}
spatial = {
    "classes": [
        {"id": "State", "kind": "spatial"},
        {"id": "County", "kind": "spatial", "parent": "State"},
        {"id": "City", "kind": "spatial", "parent": "County"},
        {"id": "CensusBlock", "kind": "spatial", "parent": "City"},
        {"id": "Year", "kind": "temporal"},
        {"id": "Month", "kind": "temporal", "parent": "Year"},
        {"id": "Day", "kind": "temporal", "parent": "Month"},
    ],
    "instances": [
        {"id": "illinois", "class": "State", "label": "Illinois", "footprint": square(-5000, -5000, 5000, 5000)},
        {"id": "cook", "class": "County", "label": "Cook County", "footprint": square(-2000, -2000, 2000, 2000)},
        {"id": "campus", "class": "City", "label": "Campus", "footprint": square(-50, -50, 350, 250)},
        {"id": "block1", "class": "CensusBlock", "label": "CensusBlock 170310001", "footprint": "cb1"},
        {"id": "block2", "class": "CensusBlock", "label": "CensusBlock 170310002", "footprint": "cb2"},
        {"id": "block3", "class": "CensusBlock", "label": "CensusBlock 170310003", "footprint": "cb3"},
        {"id": "y1962", "class": "Year", "period": "1962"},
        {"id": "y1998", "class": "Year", "period": "1998"},
    ],
    "footprint_refs": {
        "cb1": square(-10, -20, 100, 100),
        "cb2": square(100, -20, 200, 100),
        "cb3": square(200, -20, 310, 100),
    },
}
domain = {
    "classes": [
        {"id": "WaterPipe", "kind": "domain"},
        {"id": "WaterMain", "kind": "domain", "parent": "WaterPipe"},
        {"id": "ServiceLine", "kind": "domain", "parent": "WaterPipe"},
    ],
    "instances": [
        {"id": "main_pm1", "class": "WaterMain", "payload": "pm1"},
        {"id": "main_pm2", "class": "WaterMain", "payload": "pm2"},
        {"id": "main_pm3", "class": "WaterMain", "payload": "pm3"},
        {"id": "svc_ps_bldg", "class": "ServiceLine", "payload": "ps_bldg"},
    ],
}
for name, doc in (("spatial_ontology.json", spatial), ("domain_ontology.json", domain)):
    with open(os.path.join(out, name), "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")

service = {
    "listen": "127.0.0.1:8080",
    "dataset": "out/network.json",
    "ledger": "out/ledger.json",
    "spatial_ontology": "spatial_ontology.json",
    "domain_ontology": "domain_ontology.json",
    "tokens": {"admin-token": "admin", "planner-token": "planner", "crew-token": "crew", "public-token": "public"},
    "area_cap_km2": 25,
    "persist": True,
}
with open(os.path.join(out, "service.json"), "w") as f:
    json.dump(service, f, indent=2)
    f.write("\n")
