#!/usr/bin/env python3
"""Writes the bundled model files into models/."""
import json
import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "models")

MOVES = {"up": (0, 1), "down": (0, -1), "left": (-1, 0), "right": (1, 0), "park": (0, 0)}
ACTIONS = ["up", "down", "left", "right", "park"]


def box(*ranges):
    return {"box": [list(r) for r in ranges]}


def move_dynamics(size):
    """Translate by the move when the target stays inside [0,size]^2, else stay put."""
    dyn = {}
    for a, (dx, dy) in MOVES.items():
        if (dx, dy) == (0, 0):
            pieces = [{"matrix": [[1, 0], [0, 1]], "offset": [0, 0]}]
        else:
            # Target inside the grid iff x+dx in [0,size] and y+dy in [0,size].
            guard = box([max(0, -dx), min(size, size - dx)], [max(0, -dy), min(size, size - dy)])
            pieces = [
                {"guard": guard, "matrix": [[1, 0], [0, 1]], "offset": [dx, dy]},
                {"guard": "otherwise", "matrix": [[1, 0], [0, 1]], "offset": [0, 0]},
            ]
        dyn[a] = {"components": [{"weight": 1.0, "pieces": pieces}]}
    return dyn


def trust_dynamics(locs, pers, available, suggested):
    rows = []
    top = len(locs)
    for tr in range(1, top + 1):
        for per in pers:
            for a in available(per):
                s = [str(tr), per]
                if a in suggested[per]:
                    rows.append([s, a, str(min(tr + 1, top)), 1.0])
                elif tr >= 2:
                    rows.append([s, a, str(tr - 1), 0.5])
                    rows.append([s, a, str(tr), 0.5])
                else:
                    rows.append([s, a, str(tr), 1.0])
    return rows


def grid_perception(size):
    regions = []
    for j in range(size):
        for i in range(size):
            regions.append({"polytope": box([i, i + 1], [j, j + 1]), "per": str(i + 1 + size * j)})
    return {"*": {"regions": regions}}


def carpark4(obstacle_penalty=None, name="carpark4_grid"):
    pers = [str(p) for p in range(1, 17)]
    table = {
        1: ["up", "right"], 2: ["up", "right"], 3: ["up"], 4: ["up", "left"],
        5: ["up", "right"], 6: ["up", "right"], 7: ["up"], 8: ["up", "left"],
        9: ["up", "right"], 10: ["up", "right"], 11: ["up"], 12: ["up", "left"],
        13: ["right"], 14: ["right"], 15: ["park"], 16: ["left"],
    }
    suggested = {str(k): v for k, v in table.items()}
    moves = ["up", "down", "left", "right"]
    available = lambda per: ACTIONS if per == "15" else moves
    locs = [str(t) for t in range(1, 6)]
    regions = [{"polytope": box([2, 3], [3, 4]), "value": 1000}]
    if obstacle_penalty is not None:
        regions.append({"polytope": box([1, 2], [1, 2]), "value": obstacle_penalty})
    return {
        "name": name,
        "locs": locs,
        "pers": pers,
        "actions": ACTIONS,
        "domain": box([0, 4], [0, 4]),
        "beta": 0.8,
        "available": [
            {"loc": "*", "per": "15", "actions": ACTIONS},
            {"loc": "*", "per": "*", "actions": moves},
        ],
        "delta_A": trust_dynamics(locs, pers, available, suggested),
        "env_dynamics": move_dynamics(4),
        "perception": grid_perception(4),
        "reward_state": {"default": 0, "regions": regions},
        "suggested": suggested,
    }


def carpark8():
    size = 8
    pers = [str(p) for p in range(1, 65)]
    suggested = {}
    for j in range(1, size + 1):
        for i in range(1, size + 1):
            per = str(i + size * (j - 1))
            if j == size and i >= 7:
                suggested[per] = ["park"]
            elif j < size:
                suggested[per] = ["up", "right"] if i < 7 else ["up"]
            else:
                suggested[per] = ["right"]
    moves = ["up", "down", "left", "right"]
    available = lambda per: ACTIONS if per in ("63", "64") else moves
    locs = [str(t) for t in range(1, 6)]
    obstacles = [([4, 5], [0, 1]), ([7, 8], [2, 3]), ([4, 5], [4, 5]), ([2, 4], [7, 8])]
    regions = [{"polytope": box([6, 8], [7, 8]), "value": 1000}]
    regions += [{"polytope": box(x, y), "value": -1000} for x, y in obstacles]
    return {
        "name": "carpark8_grid_obstacles",
        "locs": locs,
        "pers": pers,
        "actions": ACTIONS,
        "domain": box([0, 8], [0, 8]),
        "beta": 0.8,
        "available": [
            {"loc": "*", "per": ["63", "64"], "actions": ACTIONS},
            {"loc": "*", "per": "*", "actions": moves},
        ],
        "delta_A": trust_dynamics(locs, pers, available, suggested),
        "env_dynamics": move_dynamics(size),
        "perception": grid_perception(size),
        "reward_state": {"default": 0, "regions": regions},
        "suggested": suggested,
    }


def toy3d():
    """State (h, hdot, t); intruder climbs at 30 per step, ownship accelerates by a."""
    h_lim, v_lim, t_lim = 300.0, 20.0, 4.0
    accel = {"descend": -10.0, "level": 0.0, "climb": 10.0}
    domain = [[-1, 0, 0, h_lim], [1, 0, 0, h_lim], [0, -1, 0, v_lim], [0, 1, 0, v_lim],
              [0, 0, -1, 0], [0, 0, 1, t_lim]]
    dyn = {}
    for a, acc in accel.items():
        m = [[1, -1, 0], [0, 1, 0], [0, 0, 1]]
        c = [30.0 - 0.5 * acc, acc, -1.0]
        # Preimage of the domain: rows n.(Mx + c) <= b  ->  (n M).x <= b - n.c
        guard = []
        for row in domain:
            n, b = row[:3], row[3]
            nm = [sum(n[k] * m[k][j] for k in range(3)) for j in range(3)]
            guard.append(nm + [b - sum(n[k] * c[k] for k in range(3))])
        pieces = [
            {"guard": guard, "matrix": m, "offset": c},
            {"guard": "otherwise", "matrix": [[1, 0, 0], [0, 1, 0], [0, 0, 1]], "offset": [0, 0, 0]},
        ]
        dyn[a] = {"components": [{"weight": 1.0, "pieces": pieces}]}
    percepts = {
        "below": [[1, 0, 0, -100.0]],
        "near": [[-1, 0, 0, 100.0], [1, 0, 0, 100.0]],
        "above": [[-1, 0, 0, -100.0]],
    }
    regions = [{"polytope": domain + rows, "per": per} for per, rows in percepts.items()]
    locs = ["coc", "alert"]
    pers = list(percepts)
    delta = []
    for loc in locs:
        for per in pers:
            for a in accel:
                delta.append([[loc, per], a, "coc" if a == "level" else "alert", 1.0])
    collision = domain + [[0, 0, 1, 1.0], [-1, 0, 0, 100.0], [1, 0, 0, 100.0]]
    return {
        "name": "toy3d_vcas_like",
        "locs": locs,
        "pers": pers,
        "actions": list(accel),
        "domain": domain,
        "beta": 0.75,
        "available": [{"loc": "*", "per": "*", "actions": list(accel)}],
        "delta_A": delta,
        "env_dynamics": dyn,
        "perception": {"*": {"regions": regions}},
        "reward_action": {"descend": -1.0, "climb": -1.0},
        "reward_state": {"default": 0, "regions": [{"polytope": collision, "value": -1000}]},
    }


def demo_net(seed=2024, e=2, h=6, k=4):
    rng = random.Random(seed)
    g = lambda: round(rng.gauss(0.0, 1.0), 6)
    return {
        "e": e,
        "h": h,
        "W1": [[g() for _ in range(e)] for _ in range(h)],
        "b1": [g() for _ in range(h)],
        "W2": [[g() for _ in range(h)] for _ in range(k)],
        "b2": [g() for _ in range(k)],
        "labels": [str(c + 1) for c in range(k)],
    }


def write(name, obj):
    with open(os.path.join(OUT, name), "w", encoding="utf-8", newline="\n") as f:
        json.dump(obj, f, indent=1)
        f.write("\n")


def main():
    os.makedirs(OUT, exist_ok=True)
    write("carpark4_grid.json", carpark4())
    write("carpark4_grid_obstacle.json", carpark4(-1000, "carpark4_grid_obstacle"))
    write("carpark4_grid_obstacle_5000.json", carpark4(-5000, "carpark4_grid_obstacle_5000"))
    write("carpark8_grid_obstacles.json", carpark8())
    write("toy3d_vcas_like.json", toy3d())
    write("demo_net.json", demo_net())
    write("b0_carpark4.json", {"type": "particles", "agent_state": ["1", "3"], "points": [[2.5, 0.5]]})
    write("b0_carpark4_three.json", {"type": "particles", "agent_state": ["1", "1"],
                                     "points": [[0.2, 0.3], [0.5, 0.5], [0.8, 0.7]]})
    write("b0_carpark4_region.json", {"type": "region", "agent_state": ["1", "1"],
                                      "polytopes": [{"box": [[0, 1], [0, 1]]}], "densities": [1.0]})
    write("b0_carpark8.json", {"type": "particles", "agent_state": ["1", "1"],
                               "points": [[0.2, 0.3], [0.5, 0.5], [0.8, 0.7]]})
    write("b0_toy3d.json", {"type": "particles", "agent_state": ["coc", "below"],
                            "points": [[-180.0, 0.0, 3.5], [-150.0, 5.0, 3.5]]})


if __name__ == "__main__":
    main()
