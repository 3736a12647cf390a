#!/usr/bin/env python3
"""Regenerates the bundled scenes, grasp set and run configs under data/.

Units are meters. The robot base sits at the world origin; the target is a
5 x 5 x 12 cm box in every scene so one grasp set serves all of them.
"""
import json
import math
import pathlib

import numpy as np
from scipy.spatial.transform import Rotation

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"
HALF = np.array([0.025, 0.025, 0.06])  # target box half extents


def pose(t, rot=None):
    q = [1.0, 0.0, 0.0, 0.0]
    if rot is not None:
        x, y, z, w = Rotation.from_matrix(rot).as_quat()
        q = [w, x, y, z]
    return {"t": [round(float(v), 12) for v in t], "q": [round(float(v), 15) for v in q]}


def box(lo, hi):
    return {"type": "box", "min": list(map(float, lo)), "max": list(map(float, hi))}


def obstacle(name, lo, hi):
    return {"id": name, "shape": box(lo, hi)}


def target(center):
    return {"id": "target", "shape": box(-HALF, HALF), "pose": pose(center)}


def scene(name, obstacles, center, support_id, support_z):
    return {
        "format": "jist-scene",
        "version": 1,
        "name": name,
        "obstacles": obstacles,
        "target_object": target(center),
        "support_surfaces": [{"point": [float(center[0]), float(center[1]), support_z],
                              "normal": [0.0, 0.0, 1.0], "obstacle_id": support_id}],
    }


TABLE = obstacle("table", [0.3, -0.6, -0.05], [1.0, 0.6, 0.0])


def table_scene():
    c = np.array([0.6, 0.0, 0.06])
    gap = 0.057
    # Clutter behind and beside the target, leaving the robot-facing side
    # and the top open.
    obs = [
        TABLE,
        obstacle("can_back", [c[0] + HALF[0] + gap, -0.04, 0.0], [c[0] + HALF[0] + gap + 0.08, 0.04, 0.15]),
        obstacle("block_left", [c[0] + 0.02, c[1] + HALF[1] + gap + 0.03, 0.0],
                 [c[0] + 0.12, c[1] + HALF[1] + gap + 0.11, 0.10]),
        obstacle("block_right", [c[0] + 0.02, -(HALF[1] + gap + 0.11), 0.0],
                 [c[0] + 0.12, -(HALF[1] + gap + 0.03), 0.10]),
    ]
    return scene("table", obs, c, "table", 0.0)


def shelf_scene():
    c = np.array([0.7, 0.0, 0.30])
    front, back = 0.55, c[0] + HALF[0] + 0.022
    floor = c[2] - HALF[2]
    ceil = c[2] + HALF[2] + 0.08
    side = 0.16
    obs = [
        obstacle("shelf_bottom", [front, -side - 0.02, -0.05], [back + 0.02, side + 0.02, floor]),
        obstacle("shelf_top", [front, -side - 0.02, ceil], [back + 0.02, side + 0.02, ceil + 0.02]),
        obstacle("shelf_left", [front, side, floor], [back + 0.02, side + 0.02, ceil]),
        obstacle("shelf_right", [front, -side - 0.02, floor], [back + 0.02, -side, ceil]),
        obstacle("shelf_back", [back, -side, floor], [back + 0.02, side, ceil]),
    ]
    return scene("shelf", obs, c, "shelf_bottom", float(floor))


def cluttered_table_scene():
    c = np.array([0.65, 0.15, 0.06])
    obs = [TABLE]
    items = [
        ([0.45, -0.20, 0.0], [0.53, -0.12, 0.14]),
        ([0.62, -0.05, 0.0], [0.70, 0.03, 0.09]),
        ([0.78, 0.05, 0.0], [0.86, 0.25, 0.12]),
        ([0.55, 0.30, 0.0], [0.63, 0.38, 0.18]),
        ([0.80, -0.30, 0.0], [0.90, -0.18, 0.20]),
        ([0.40, 0.35, 0.0], [0.48, 0.45, 0.10]),
    ]
    for i, (lo, hi) in enumerate(items):
        obs.append(obstacle(f"item_{i}", lo, hi))
    obs.append({"id": "ball", "shape": {"type": "sphere", "center": [0.50, 0.05, 0.04], "radius": 0.04}})
    obs.append({"id": "bottle", "shape": {"type": "capsule", "p0": [0.72, 0.32, 0.03], "p1": [0.72, 0.32, 0.20],
                                          "radius": 0.03}})
    return scene("cluttered_table", obs, c, "table", 0.0)


def side_grasp(phi, dz, flip):
    # Approach along a horizontal direction phi; fingers (EE y) horizontal.
    z = np.array([math.cos(phi), math.sin(phi), 0.0])
    y = np.array([-math.sin(phi), math.cos(phi), 0.0]) * (-1 if flip else 1)
    x = np.cross(y, z)
    t = -0.05 * z + np.array([0.0, 0.0, dz])
    return {"pose": pose(t, np.column_stack([x, y, z])), "approach": [0.0, 0.0, 1.0]}


def top_grasp(psi):
    z = np.array([0.0, 0.0, -1.0])
    y = np.array([math.cos(psi), math.sin(psi), 0.0])
    x = np.cross(y, z)
    return {"pose": pose([0.0, 0.0, HALF[2] + 0.01], np.column_stack([x, y, z])), "approach": [0.0, 0.0, 1.0]}


def grasps():
    out = []
    for deg in range(-90, 91, 30):
        for dz in (-0.02, 0.0, 0.02):
            for flip in (False, True):
                out.append(side_grasp(math.radians(deg), dz, flip))
    for deg in range(0, 180, 30):
        out.append(top_grasp(math.radians(deg)))
    return {"object_id": "target", "grasps": out}


def write(path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2) + "\n")


def main():
    write(DATA / "scenes" / "table.json", table_scene())
    write(DATA / "scenes" / "shelf.json", shelf_scene())
    write(DATA / "scenes" / "cluttered_table.json", cluttered_table_scene())
    write(DATA / "grasps" / "box_grasps.json", grasps())
    write(DATA / "configs" / "start_7r.json", {"q": [0.0, 0.3, 0.0, -1.2, 0.0, 0.9, 0.0]})


if __name__ == "__main__":
    main()
