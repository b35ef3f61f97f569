#!/usr/bin/env python3
# Copyright 2026 The Pigeon Authors
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

"""Writes the bundled scene fixtures under data/scenes.

Output is deterministic; rerun after editing a layout.
"""

import argparse
import json
import random
from pathlib import Path

CELL = 0.5
RES = 0.1


def scene_doc(name, art, start, heading, goals, objects, max_steps=500):
    return {
        "version": "scene/1",
        "name": name,
        "resolution": RES,
        "cell_size": CELL,
        "map": ["".join(r) for r in art],
        "start": {"x": start[0], "y": start[1], "heading_deg": heading},
        "goal_categories": goals,
        "success_radius": 1.0,
        "max_steps": max_steps,
        "objects": objects,
    }


def blank(w, h):
    art = [["." for _ in range(w)] for _ in range(h)]
    for c in range(w):
        art[0][c] = "#"
        art[h - 1][c] = "#"
    for r in range(h):
        art[r][0] = "#"
        art[r][w - 1] = "#"
    return art


def world(art, col, row):
    """Centre of art cell (col, row). Art row 0 is the y = 0 edge."""
    del art
    return ((col + 0.5) * CELL, (row + 0.5) * CELL)


def obj(oid, category, pos, **extra):
    o = {"id": oid, "category": category, "x": round(pos[0], 3), "y": round(pos[1], 3)}
    o.update(extra)
    return o


def one_room():
    art = blank(14, 10)
    start = world(art, 3, 5)
    goal = world(art, 10, 5)
    return scene_doc("one-room", art, start, 0.0, ["chair"], [obj(1, "chair", goal, size=[0.5, 0.5])], 300)


def artwork_trap():
    # Corridor room with the artwork close to the start; the real plant sits
    # in a side room reached through a door.
    art = blank(22, 12)
    for r in range(1, 11):
        art[r][11] = "#"
    art[8][11] = "."
    art[9][11] = "."
    start = world(art, 3, 6)
    artwork = world(art, 8, 6)
    plant = world(art, 18, 3)
    objects = [
        obj(1, "painting", artwork, visual_label="potted plant", base_confidence=0.7, size=[0.4, 0.4]),
        obj(2, "potted plant", plant, base_confidence=0.85, size=[0.4, 0.4]),
    ]
    return scene_doc("artwork-trap", art, start, 0.0, ["potted plant"], objects, 500)


def unreachable():
    art = blank(16, 10)
    for c in range(9, 15):
        art[3][c] = "#"
        art[7][c] = "#"
    for r in range(3, 8):
        art[r][9] = "#"
        art[r][14] = "#"
    start = world(art, 3, 5)
    goal = world(art, 11, 5)
    return scene_doc("sealed-goal", art, start, 0.0, ["bed"], [obj(1, "bed", goal, size=[0.5, 0.5])], 300)


DECOYS = ["sofa", "table", "lamp", "sink", "shelf", "plant stand"]
GOALS = ["chair", "bed", "toilet", "tv", "potted plant"]


def hub_and_rooms(name, rng, rooms_per_side, room_w, far_goal):
    """Corridor with rooms on both sides; each room opens on the corridor.

    With far_goal the goal room is chosen from the half farthest from the
    start so that the nearest frontiers lead into decoy rooms.
    """
    top_rows, bot_rows = 4, 4
    w = 2 + rooms_per_side * (room_w + 1) - 1
    h = 1 + top_rows + 1 + 2 + 1 + bot_rows + 1
    art = blank(w, h)
    wall_top = 1 + top_rows
    corr0 = wall_top + 1
    wall_bot = corr0 + 2
    for c in range(w):
        art[wall_top][c] = "#"
        art[wall_bot][c] = "#"
    rooms = []
    for side in ("top", "bot"):
        for i in range(rooms_per_side):
            c0 = 1 + i * (room_w + 1)
            c1 = c0 + room_w - 1
            if i < rooms_per_side - 1:
                rows = range(1, wall_top) if side == "top" else range(wall_bot + 1, h - 1)
                for r in rows:
                    art[r][c1 + 1] = "#"
            door = c0 + rng.randrange(0, room_w - 1)
            wall = wall_top if side == "top" else wall_bot
            art[wall][door] = "."
            art[wall][door + 1] = "."
            rows = (1, wall_top - 1) if side == "top" else (wall_bot + 1, h - 2)
            rooms.append({"side": side, "c0": c0, "c1": c1, "r0": rows[0], "r1": rows[1], "door": door})

    start_col = rng.randrange(2, w - 2)
    start = world(art, start_col, corr0 + rng.randrange(0, 2))
    heading = rng.choice([0.0, 90.0, 180.0, 270.0])

    def room_dist(rm):
        return abs(rm["door"] + 0.5 - start_col)

    ordered = sorted(rooms, key=room_dist)
    if far_goal:
        pool = ordered[len(ordered) // 2:]
    else:
        pool = ordered
    goal_room = rng.choice(pool)
    goal_cat = rng.choice(GOALS)

    def inner_cell(rm):
        # Far wall of the room, away from the door, so the object is not
        # visible from the corridor.
        r = rm["r0"] if rm["side"] == "top" else rm["r1"]
        cols = [c for c in range(rm["c0"], rm["c1"] + 1) if abs(c - rm["door"] - 0.5) > 1.0]
        if not cols:
            cols = list(range(rm["c0"], rm["c1"] + 1))
        return world(art, rng.choice(cols), r)

    objects = [obj(1, goal_cat, inner_cell(goal_room), size=[0.4, 0.4], base_confidence=0.85)]
    oid = 2
    for rm in rooms:
        if rm is goal_room or rng.random() < 0.4:
            continue
        objects.append(obj(oid, rng.choice(DECOYS), inner_cell(rm), size=[0.4, 0.4], base_confidence=0.8))
        oid += 1
    return scene_doc(name, art, start, heading, [goal_cat], objects, 800)


def write(path, doc):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=1) + "\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data" / "scenes"))
    out = Path(ap.parse_args().out)

    write(out / "one-room.json", one_room())
    write(out / "artwork-trap.json", artwork_trap())
    write(out / "invalid" / "unreachable.json", unreachable())
    (out / "invalid").mkdir(parents=True, exist_ok=True)
    (out / "invalid" / "malformed.json").write_text('{"version": "scene/1", "name": "broken", "map": [\n')

    for i in range(10):
        rng = random.Random(1000 + i)
        doc = hub_and_rooms(f"suite-{i:02d}", rng, rng.choice([3, 4]), rng.choice([4, 5]), far_goal=False)
        write(out / "suite" / f"suite-{i:02d}.json", doc)

    for i in range(20):
        rng = random.Random(2000 + i)
        doc = hub_and_rooms(f"ablation-{i:02d}", rng, rng.choice([4, 5]), rng.choice([4, 5]), far_goal=True)
        write(out / "ablation" / f"ablation-{i:02d}.json", doc)


if __name__ == "__main__":
    main()
