#!/usr/bin/env python3
"""Regenerates the bundled scenario files: python3 tools/make_scenarios.py scenarios"""
import json
import math
import sys


def ground_z(y, hill):
    # small ripple plus a hill
    return 0.05 + 0.03 * math.sin(4.0 * y) + 0.45 * math.exp(-((y - hill) / 0.22) ** 2)


def ground(hill=0.55, n_top=84, y0=-2.0, y1=2.0):
    verts = [[y0, -0.5], [y1, -0.5]]
    for k in range(n_top):
        y = y1 - (y1 - y0) * k / (n_top - 1)
        verts.append([round(y, 6), round(ground_z(y, hill), 6)])
    return {"type": "polygon", "plane": "yz", "vertices": verts}


def dive(v, depth, hold=15.0, start=(0.0, -0.5, 1.0)):
    x, y, z = start
    return [
        {"position": [x, y, depth], "speed": v, "dwell": hold},
        {"position": [x, y, z], "speed": v, "dwell": 5.0},
    ]


def rod(length, segs, stiff=False):
    return {
        "type": "rod", "length": length, "segment_count": segs,
        "start": [0.0, -length / 2, 1.0], "direction": [0.0, 1.0, 0.0],
        "radius": 0.01 if stiff else 0.005, "linear_density": 0.2,
        "youngs_modulus": 5e7 if stiff else 1e5, "torsion_modulus": 5e7 if stiff else 1e5,
    }


def rope(name, waypoints, assistant_z, stiff=False, duration=60.0):
    return {
        "name": name,
        "object": rod(1.4, 28, stiff),
        "obstacles": [ground()],
        "leader": {"held_body_index": 0, "initial_position": [0.0, -0.5, 1.0], "waypoints": waypoints},
        "agents": [{"id": "a1", "held_body_index": 27, "initial_position": [0.0, 0.5, assistant_z]}],
        "controller": {"k_p": 0.5, "u_max": 0.2, "d_offset": 0.05,
                       "default_pair_limits": {"d_min": 0.3, "d_max": 1.3}},
        "sim": {"num_substeps": 20, "damping": 2.0, "settle_time": 4.0},
        "run": {"duration": duration, "tick_rate": 50, "seed": 0},
    }


def rope_two(name, waypoints, hill, z1, z2):
    return {
        "name": name,
        "object": rod(2.2, 45),
        "obstacles": [ground(hill)],
        "leader": {"held_body_index": 0, "initial_position": [0.0, -0.8, 1.0], "waypoints": waypoints},
        "agents": [
            {"id": "a1", "held_body_index": 22, "initial_position": [0.0, 0.05, z1]},
            {"id": "a2", "held_body_index": 44, "initial_position": [0.0, 0.85, z2]},
        ],
        "controller": {"k_p": 0.5, "u_max": 0.2, "d_offset": 0.05,
                       # both assistants push on the same contact, so a gentler barrier keeps them from overshooting
                       "alpha": {"collision": {"slope_pos": 0.5, "slope_neg": 2.0}},
                       "default_pair_limits": {"d_min": 0.3, "d_max": 1.9}},
        "sim": {"num_substeps": 20, "damping": 2.0, "settle_time": 4.0},
        "run": {"duration": 60.0, "tick_rate": 50, "seed": 0},
    }


def fabric(name, waypoints):
    s = 0.6
    return {
        "name": name,
        "object": {
            "type": "cloth", "size": [s, s], "resolution": 15,
            "origin": [-s / 2, -s / 2, 1.0], "axis_u": [1.0, 0.0, 0.0], "axis_v": [0.0, 1.0, 0.0],
            "areal_density": 0.2, "stretching_compliance": 0.0, "bending_compliance": 1e-3,
        },
        "obstacles": [{"type": "box", "center": [0.0, 0.0, 0.35], "size": [0.25, 0.25, 0.3]}],
        "leader": {"held_body_index": 0, "initial_position": [-0.28, -0.28, 1.0], "waypoints": waypoints},
        "agents": [
            {"id": "a1", "held_body_index": 14, "initial_position": [0.28, -0.28, 1.0]},
            {"id": "a2", "held_body_index": 210, "initial_position": [-0.28, 0.28, 1.0]},
            {"id": "a3", "held_body_index": 224, "initial_position": [0.28, 0.28, 1.0]},
        ],
        "controller": {"k_p": 0.5, "u_max": 0.2, "d_offset": 0.1,
                       "pair_limits": [{"agents": ["leader", "a3"], "d_min": 0.3, "d_max": 0.82},
                                       {"agents": ["a1", "a2"], "d_min": 0.3, "d_max": 0.82}],
                       "default_pair_limits": {"d_min": 0.3, "d_max": 0.6}},
        "sim": {"num_substeps": 20, "damping": 2.0, "settle_time": 4.0},
        "run": {"duration": 60.0, "tick_rate": 50, "seed": 0},
    }


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "scenarios"
    scenarios = [
        rope("rope_single_assistant", dive(0.05, 0.65), 0.85),
        rope("rope_single_assistant_fast", dive(0.15, 0.5), 0.85, duration=30.0),
        rope("stiff_rod_single_assistant", dive(0.05, 0.66), 0.9, stiff=True),
        rope_two("rope_two_assistants", dive(0.05, 0.6, start=(0.0, -0.8, 1.0)), 0.55, 1.0, 1.0),
        fabric("fabric_three_assistants", dive(0.05, 0.7, start=(-0.28, -0.28, 1.0))),
    ]
    for cfg in scenarios:
        with open(f"{out}/{cfg['name']}.json", "w") as f:
            json.dump(cfg, f, indent=2)
            f.write("\n")


if __name__ == "__main__":
    main()
