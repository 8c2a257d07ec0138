# Copyright 2026 The MoveTok Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes the synthetic fixture corpus under tests/data.

Output is fully determined by the seed, so the files can be regenerated and
diffed against the checked-in copies.
"""

import argparse
import json
import math
import pathlib
import random

EARTH_RADIUS_M = 6371008.8
CELL_M = 500.0
ORIGIN = (35.60, 139.60)
GRID = 10
CATEGORIES = ["food", "cafe", "office", "residential", "retail", "transport",
              "education", "health", "sport", "entertainment"]
DAY = 86400
TZ = 9 * 3600
FIRST_DAY = 20454  # 2026-01-01


def cell_center(row, col):
    north = (row + 0.5) * CELL_M
    east = (col + 0.5) * CELL_M
    lat = ORIGIN[0] + math.degrees(north / EARTH_RADIUS_M)
    lon = ORIGIN[1] + math.degrees(east / (EARTH_RADIUS_M * math.cos(math.radians(ORIGIN[0]))))
    return lat, lon


def city():
    top = cell_center(GRID, GRID)
    return {
        "name": "synthetic",
        "origin_lat": ORIGIN[0],
        "origin_lon": ORIGIN[1],
        "bbox": [ORIGIN[0], top[0], ORIGIN[1], top[1]],
        "tz_offset_seconds": TZ,
    }


def profiles(rng, count):
    cells = rng.sample([(r, c) for r in range(GRID) for c in range(GRID)], count)
    out = []
    for i, (r, c) in enumerate(sorted(cells)):
        lat, lon = cell_center(r, c)
        kind = CATEGORIES[(r * 3 + c) % len(CATEGORIES)]
        pois = {kind: rng.randint(3, 40)}
        for extra in rng.sample(CATEGORIES, 2):
            pois[extra] = pois.get(extra, 0) + rng.randint(0, 5)
        out.append({
            "location_id": "L%03d" % i,
            "address": "%d-%d Synthetic Ward, Block %s" % (r + 1, c + 1, chr(65 + (r + c) % 26)),
            "center_lat": round(lat, 7),
            "center_lon": round(lon, 7),
            "osm_type": "way",
            "osm_id": 100000 + i,
            "poi_counts": dict(sorted(pois.items())),
        })
    return out


def visits(rng, locations, users, total):
    per_user = total // users
    out = []
    for u in range(users):
        home, work, *others = rng.sample(locations, 6)
        ts = []
        for k in range(per_user):
            day = FIRST_DAY + rng.randint(0, 13)
            hour = rng.choice([1, 3, 8, 9, 12, 13, 15, 18, 19, 21, 23])
            minute = rng.randint(0, 59)
            if hour < 7 or hour >= 21:
                loc = home
            elif 9 <= hour < 18 and rng.random() < 0.6:
                loc = work
            else:
                loc = rng.choice(others)
            ts.append((day * DAY + hour * 3600 + minute * 60 - TZ, loc))
        for t, loc in sorted(ts, key=lambda x: x[0]):
            out.append({
                "user_id": "u%02d" % u,
                "timestamp": t,
                "lat": loc["center_lat"],
                "lon": loc["center_lon"],
            })
    return out


PERIOD_FIRST_SLOTS = [44, 12, 24, 36]  # night, morning, afternoon, evening
EDIT_DAY = 20457  # a Sunday


def insertion_index(points, slot):
    i = 0
    while i < len(points) and points[i]["slot"] <= slot:
        i += 1
    return i


def apply_edit(points, kind, index, slot, cell):
    if kind == "add":
        points.insert(insertion_index(points, slot), {"slot": slot, "cell": cell})
        return
    del points[index]
    if kind == "modify":
        points.insert(insertion_index(points, slot), {"slot": slot, "cell": cell})


def day_record(user, points):
    weekday = (EDIT_DAY + 3) % 7
    return {
        "user_id": user,
        "window_start_day": EDIT_DAY,
        "city": "synthetic",
        "points": [{"weekday": weekday, "slot": p["slot"], "row": p["cell"][0], "col": p["cell"][1]}
                   for p in points],
    }


def edit_fixtures(rng, count):
    out = []
    for i in range(count):
        cells = [(k, k * 3 % 5) for k in range(rng.randint(2, 5))]
        base = sorted(({"slot": rng.randrange(48), "cell": rng.choice(cells)}
                       for _ in range(rng.randint(2, 6))), key=lambda p: p["slot"])
        alphabet = sorted(set(PERIOD_FIRST_SLOTS) | {p["slot"] for p in base})
        target = [dict(p) for p in base]
        edits = rng.randint(1, 3)
        for _ in range(edits):
            kind = rng.choice(["modify", "add", "delete"])
            if len(target) < 2:
                kind = "add"
            apply_edit(target, kind, rng.randrange(len(target)), rng.choice(alphabet), rng.choice(cells))
        out.append({
            "fixture": "edit_%02d" % i,
            "random_edits": edits,
            "locations": [list(c) for c in cells],
            "baseline": day_record("f%02d" % i, base),
            "target": day_record("f%02d" % i, target),
        })
    return out


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as f:
        for r in rows:
            f.write(json.dumps(r, separators=(",", ":")) + "\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "tests" / "data"))
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    locs = profiles(rng, 40)
    with open(out / "city.json", "w", encoding="utf-8") as f:
        json.dump(city(), f, indent=2)
        f.write("\n")
    write_jsonl(out / "profiles.jsonl", locs)
    write_jsonl(out / "visits.jsonl", visits(rng, locs, 8, 1000))
    write_jsonl(out / "edit_fixtures.jsonl", edit_fixtures(random.Random(args.seed + 1), 60))


if __name__ == "__main__":
    main()
