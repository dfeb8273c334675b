#!/usr/bin/env python3
"""Writes the reference simulator scenes into data/."""

import json
import math
import os
import sys

RATE = 10.0
DURATION = 30.0


def room_planes(half=10.0, height=3.0):
    return [
        {"name": "floor", "normal": [0, 0, 1], "d": 0.0, "material": 600},
        {"name": "ceiling", "normal": [0, 0, 1], "d": -height, "material": 500},
        {"name": "wall_east", "normal": [1, 0, 0], "d": -half, "material": 800},
        {"name": "wall_west", "normal": [1, 0, 0], "d": half, "material": 900},
        {"name": "wall_north", "normal": [0, 1, 0], "d": -half, "material": 700},
        {"name": "wall_south", "normal": [0, 1, 0], "d": half, "material": 850},
    ]


def box(name, lo, hi, material):
    return {"name": name, "min": list(lo), "max": list(hi), "material": material}


def wall_panels(half=10.0):
    """Posters and dark panels on the walls; their corners feed the odometry."""
    out = []
    layout = [(-7.5, 1.2, 1.4, 0.8), (-4.0, 0.6, 0.8, 1.6), (-1.0, 1.4, 1.6, 0.6),
              (2.5, 0.9, 1.0, 1.0), (6.0, 1.5, 1.2, 0.7), (8.2, 0.5, 0.6, 1.2)]
    materials = [3000, 250, 2500, 3500, 300, 2000]
    t = 0.05
    for wall in range(4):
        for k, (c, z0, w, h) in enumerate(layout):
            c = c if wall % 2 == 0 else -c
            m = materials[(k + wall) % len(materials)]
            if wall == 0:
                lo, hi = (half - t, c - w / 2, z0), (half, c + w / 2, z0 + h)
            elif wall == 1:
                lo, hi = (-half, c - w / 2, z0), (-half + t, c + w / 2, z0 + h)
            elif wall == 2:
                lo, hi = (c - w / 2, half - t, z0), (c + w / 2, half, z0 + h)
            else:
                lo, hi = (c - w / 2, -half, z0), (c + w / 2, -half + t, z0 + h)
            out.append(box(f"panel_{wall}_{k}", lo, hi, m))
    return out


def ceiling_lights():
    out = []
    for i, x in enumerate((-6.0, -2.0, 2.0, 6.0)):
        for j, y in enumerate((-5.0, 0.0, 5.0)):
            out.append(box(f"light_{i}_{j}", (x - 0.6, y - 0.15, 2.9), (x + 0.6, y + 0.15, 3.0), 5000))
    return out


def pillars():
    out = []
    for x in (-5.0, 5.0):
        for y in (-5.0, 5.0):
            out.append(box(f"pillar_{'w' if x < 0 else 'e'}{'s' if y < 0 else 'n'}",
                           (x - 0.25, y - 0.25, 0.0), (x + 0.25, y + 0.25, 3.0), 6000))
    return out


def loop_waypoints(corners, speed, start=0.0, phase=0.0):
    """Timed waypoints circulating a closed polygon at constant speed until DURATION."""
    pts = corners + [corners[0]]
    seg = [math.dist(pts[i], pts[i + 1]) for i in range(len(corners))]
    perimeter = sum(seg)
    # Advance along the loop by `phase` meters before t = 0.
    t = -phase / speed
    out = []
    i = 0
    while True:
        k = i % len(corners)
        out.append([round(t, 6), pts[k][0], pts[k][1]])
        if t > DURATION:
            break
        t += seg[k] / speed
        i += 1
    # Trim leading waypoints entirely before t = 0, keeping the one spanning it.
    while len(out) > 1 and out[1][0] <= 0.0:
        out.pop(0)
    assert out[0][0] <= 0.0 and out[-1][0] >= DURATION and perimeter > 0
    return out


def figure_eight(length, speed, cx=0.0, cy=0.0):
    """Lemniscate of Gerono scaled to the given arc length, sampled every frame."""

    def curve(a, s):
        return cx + a * math.sin(s), cy + 0.5 * a * math.sin(2 * s)

    def arc(a, n=20000):
        total = 0.0
        prev = curve(a, 0.0)
        for i in range(1, n + 1):
            p = curve(a, 2 * math.pi * i / n)
            total += math.dist(prev, p)
            prev = p
        return total

    a = length / arc(1.0)
    n = 20000
    table = [(0.0, 0.0)]
    prev = curve(a, 0.0)
    for i in range(1, n + 1):
        s = 2 * math.pi * i / n
        p = curve(a, s)
        table.append((table[-1][0] + math.dist(prev, p), s))
        prev = p

    def s_at(d):
        lo, hi = 0, len(table) - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if table[mid][0] < d:
                lo = mid + 1
            else:
                hi = mid
        return table[lo][1]

    frames = int(round(DURATION * RATE))
    out = []
    yaw_prev = None
    for i in range(frames + 1):
        t = i / RATE
        d = (speed * t) % table[-1][0]
        s = s_at(d)
        x, y = curve(a, s)
        dx, dy = a * math.cos(s), a * math.cos(2 * s)
        yaw = math.atan2(dy, dx)
        if yaw_prev is not None:
            while yaw - yaw_prev > math.pi:
                yaw -= 2 * math.pi
            while yaw - yaw_prev < -math.pi:
                yaw += 2 * math.pi
        yaw_prev = yaw
        out.append([round(t, 6), round(x, 6), round(y, 6), round(yaw, 6)])
    return out


def hall_3ped():
    actors = [
        {"name": "walker_loop", "size": [0.6, 0.6, 1.7], "material": 10000,
         "waypoints": loop_waypoints([(-4.0, -3.5), (4.0, -3.5), (4.0, 3.5), (-4.0, 3.5)], 1.0)},
        {"name": "walker_north", "size": [0.6, 0.6, 1.7], "material": 9000,
         "waypoints": loop_waypoints([(-6.0, 6.5), (6.0, 6.5), (6.0, 8.5), (-6.0, 8.5)], 1.4, phase=5.0)},
        {"name": "walker_east", "size": [0.6, 0.6, 1.7], "material": 11000,
         "waypoints": loop_waypoints([(6.5, -6.0), (8.5, -6.0), (8.5, 6.0), (6.5, 6.0)], 0.8, phase=3.0)},
    ]
    return {
        "name": "hall_3ped",
        "duration": DURATION,
        "seed": 2024,
        "sensor": {"width": 1024, "height": 64, "beta_up": math.pi / 4, "beta_fov": math.pi / 2, "rate_hz": RATE},
        "noise": {"range_sigma": 0.01, "intensity_sigma": 1.0},
        "ego": {"height": 0.8, "waypoints": figure_eight(15.0, 0.5)},
        "planes": room_planes(),
        "boxes": pillars() + wall_panels() + ceiling_lights(),
        "actors": actors,
    }


def empty_room():
    return {
        "name": "empty_room",
        "duration": 5.0,
        "seed": 7,
        "sensor": {"width": 1024, "height": 64, "beta_up": math.pi / 4, "beta_fov": math.pi / 2, "rate_hz": RATE},
        "noise": {"range_sigma": 0.01, "intensity_sigma": 1.0},
        "ego": {"height": 0.8, "waypoints": [[0.0, 0.0, 0.0, 0.0], [5.0, 0.0, 0.0, 0.0]]},
        "planes": room_planes()[:1] + room_planes()[2:],
        "boxes": [],
        "actors": [],
    }


def main():
    out_dir = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "data")
    os.makedirs(out_dir, exist_ok=True)
    for scene in (hall_3ped(), empty_room()):
        with open(os.path.join(out_dir, scene["name"] + ".json"), "w") as f:
            json.dump(scene, f, indent=1)
            f.write("\n")


if __name__ == "__main__":
    main()
