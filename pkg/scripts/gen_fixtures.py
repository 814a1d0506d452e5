"""Regenerate the bundled house maps and example experiment configs.

The three houses share a rectangular loop corridor: outer walls with 45-degree
chamfered corners (no kinematic dead-end pockets for 1 m arcs), plus a hollow
inner block. They differ in where their semantic objects sit relative to the
path. The reference path repeats the loop enough times to cover the default
5000-step trial without wrapping logic.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
MAPS_DIR = ROOT / "src" / "corrlearn" / "maps"
CONFIGS_DIR = ROOT / "configs"

RES = 0.25
NX, NY = 64, 48  # 16 m x 12 m
BLOCK = (16, 16, 48, 32)  # cells -> meters [4,12] x [4,8]
CHAMFER = 9  # outer corner cut, in cells
LAPS = 145
WAYPOINT_SPACING = 1.25
CORNER_CUT = 1.25  # path corner chamfer, meters


def build_grid() -> list[str]:
    occ = [[False] * NX for _ in range(NY)]
    for i in range(NX):
        occ[0][i] = occ[NY - 1][i] = True
    for j in range(NY):
        occ[j][0] = occ[j][NX - 1] = True
    for j in range(NY):
        for i in range(NX):
            if (
                i + j < CHAMFER
                or (NX - 1 - i) + j < CHAMFER
                or i + (NY - 1 - j) < CHAMFER
                or (NX - 1 - i) + (NY - 1 - j) < CHAMFER
            ):
                occ[j][i] = True
    i0, j0, i1, j1 = BLOCK
    for i in range(i0, i1):
        occ[j0][i] = occ[j1 - 1][i] = True
    for j in range(j0, j1):
        occ[j][i0] = occ[j][i1 - 1] = True
    return ["".join("#" if c else "." for c in row) for row in occ]


def loop_waypoints() -> list[list[float]]:
    corners = [
        (2.125, 2.125),
        (13.875, 2.125),
        (13.875, 9.875),
        (2.125, 9.875),
    ]
    # cut each 90-degree corner with a 45-degree chamfer segment
    pts: list[tuple[float, float]] = []
    n = len(corners)
    for idx, c in enumerate(corners):
        prev = corners[(idx - 1) % n]
        nxt = corners[(idx + 1) % n]
        din = _unit(c[0] - prev[0], c[1] - prev[1])
        dout = _unit(nxt[0] - c[0], nxt[1] - c[1])
        pts.append((c[0] - CORNER_CUT * din[0], c[1] - CORNER_CUT * din[1]))
        pts.append((c[0] + CORNER_CUT * dout[0], c[1] + CORNER_CUT * dout[1]))
    # densify straight runs
    out: list[list[float]] = []
    for a, b in zip(pts, pts[1:] + pts[:1]):
        dx, dy = b[0] - a[0], b[1] - a[1]
        length = math.hypot(dx, dy)
        n_seg = max(1, round(length / WAYPOINT_SPACING))
        for s in range(n_seg):
            f = s / n_seg
            out.append([round(a[0] + f * dx, 6), round(a[1] + f * dy, 6)])
    return out


def _unit(x: float, y: float) -> tuple[float, float]:
    d = math.hypot(x, y)
    return (x / d, y / d)


def build_path() -> list[list[float]]:
    lap = loop_waypoints()
    # rotate so the path starts on the bottom straight, not inside a chamfer
    start_idx = min(
        range(len(lap)),
        key=lambda i: (abs(lap[i][1] - 2.125), lap[i][0]),
    )
    lap = lap[start_idx:] + lap[:start_idx]
    path = []
    for _ in range(LAPS):
        path.extend([list(p) for p in lap])
    path.append(list(lap[0]))
    return path


def make_map(doors, stairs, chairs) -> dict:
    path = build_path()
    start = [path[0][0], path[0][1], 0.0]
    return {
        "resolution": RES,
        "grid": build_grid(),
        "doors": doors,
        "stairs": stairs,
        "chairs": chairs,
        "path": path,
        "start": start,
    }


HOUSES = {
    # doors along the corridor walls, stairs/chairs tucked in the inner block
    "houseC": make_map(
        doors=[[5.0, 4.0], [8.0, 4.0], [11.0, 4.0], [12.0, 5.5], [12.0, 7.5],
               [9.0, 8.0], [5.0, 8.0], [15.75, 6.0]],
        stairs=[[6.0, 6.0], [10.0, 6.0]],
        chairs=[[8.0, 6.75], [7.0, 5.25]],
    ),
    # stairs on the corridor walls, everything else inside the block
    "houseA": make_map(
        doors=[[6.0, 6.0], [10.0, 6.0]],
        stairs=[[5.0, 4.0], [14.0, 7.0], [8.0, 8.0]],
        chairs=[[8.0, 6.75], [7.0, 5.25]],
    ),
    # stairs and chairs both near the path
    "houseB": make_map(
        doors=[[6.0, 6.0], [10.0, 6.0]],
        stairs=[[4.0, 2.5], [12.0, 8.5]],
        chairs=[[10.0, 4.0], [3.5, 8.0], [12.5, 2.5]],
    ),
}

# Path tracking dominates each teacher so its own preferred actions stay
# clear of walls; the semantic object weights flavor the ranking near objects.
TEACHERS = {
    "houseC": {
        "w_star": [1.8, 4.0, 0.0, 0.0, -5.0, -1.8, 0.0],
        "threshold": 1.0,
        "sigma": 0.0,
        "channel": "action",
        "seed": 0,
    },
    "houseA": {
        "w_star": [1.8, 0.0, 4.0, 0.0, -5.0, -1.8, 1.6],
        "threshold": 1.0,
        "sigma": 0.0,
        "channel": "action",
        "seed": 0,
    },
    "houseB": {
        "w_star": [1.8, 0.0, 3.2, 3.2, -5.0, -1.8, 0.0],
        "threshold": 1.0,
        "sigma": 0.0,
        "channel": "action",
        "seed": 0,
    },
}

CONFIG_NAMES = {
    "houseC": "houseC_avoid_doors",
    "houseA": "houseA_avoid_stairs_stay_right",
    "houseB": "houseB_avoid_stairs_chairs",
}


def main() -> None:
    MAPS_DIR.mkdir(parents=True, exist_ok=True)
    CONFIGS_DIR.mkdir(parents=True, exist_ok=True)
    for name, doc in HOUSES.items():
        out = MAPS_DIR / f"{name}.json"
        out.write_text(json.dumps(doc, separators=(",", ":")) + "\n")
        print(f"wrote {out}")
    for name, teacher in TEACHERS.items():
        cfg = {
            "map": name,
            "teacher": teacher,
            "steps": 5000,
            "trials": 10,
            "eta": 0.01,
            "k": 64,
            "seed": 0,
        }
        out = CONFIGS_DIR / f"{CONFIG_NAMES[name]}.json"
        out.write_text(json.dumps(cfg, indent=2) + "\n")
        print(f"wrote {out}")
    quick = {
        "map": "houseC",
        "teacher": TEACHERS["houseC"],
        "steps": 1000,
        "trials": 3,
        "eta": 0.01,
        "k": 64,
        "seed": 0,
    }
    (CONFIGS_DIR / "quick.json").write_text(json.dumps(quick, indent=2) + "\n")
    serve = {
        "map": "houseC",
        "teacher": TEACHERS["houseC"],
        "steps": 5000,
        "eta": 0.01,
        "k": 64,
        "seed": 0,
        "mode": "stepper",
    }
    (CONFIGS_DIR / "serve_demo.json").write_text(json.dumps(serve, indent=2) + "\n")
    print(f"wrote {CONFIGS_DIR / 'quick.json'} and {CONFIGS_DIR / 'serve_demo.json'}")


if __name__ == "__main__":
    main()
