"""2D kinematic navigation world.

Occupancy-grid maps with semantic point objects and a fixed reference path,
constant-curvature arc actions, feature extraction, collision masking, and
pose advancement with reset-on-unrecoverable handling.
"""

from __future__ import annotations

import functools
import json
import math
import threading
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

FEATURE_NAMES = (
    "obstacle_dist",
    "door_dist",
    "stair_dist",
    "chair_dist",
    "cross_track",
    "along_track",
    "lateral_disp",
)
FEATURE_DIM = len(FEATURE_NAMES)

DEFAULT_K = 64
DEFAULT_KAPPA_MAX = 1.0
DEFAULT_SAMPLES = 8
DEFAULT_CLIP = 3.0
ARC_LENGTH = 1.0

# How far ahead of the cursor the path projection scans, in segments.
_PROJECTION_WINDOW = 64


class MapError(ValueError):
    """Raised when a map document fails schema or invariant checks."""


def normalize_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    a = math.remainder(theta, math.tau)
    if a <= -math.pi:
        a += math.tau
    return a


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    heading: float

    def __post_init__(self):
        object.__setattr__(self, "heading", normalize_angle(self.heading))


@dataclass(frozen=True)
class Trajectory:
    """A constant-curvature arc rooted at some pose.

    samples holds (n, 3) rows of [x, y, heading] at arc lengths i*L/n for
    i = 1..n; the endpoint is the last sample.
    """

    index: int
    curvature: float
    samples: np.ndarray
    endpoint: Pose


@dataclass(frozen=True)
class FeatureVector:
    obstacle_dist: float
    door_dist: float
    stair_dist: float
    chair_dist: float
    cross_track: float
    along_track: float
    lateral_disp: float

    def to_array(self) -> np.ndarray:
        return np.array(
            [getattr(self, name) for name in FEATURE_NAMES], dtype=float
        )

    @classmethod
    def from_array(cls, arr) -> "FeatureVector":
        vals = [float(v) for v in arr]
        if len(vals) != FEATURE_DIM:
            raise ValueError(f"expected {FEATURE_DIM} features, got {len(vals)}")
        return cls(*vals)


class Map:
    """Immutable world map: occupancy grid, semantic points, reference path.

    Grid row 0 is the minimum-y row; cell (col i, row j) covers
    [i*res, (i+1)*res) x [j*res, (j+1)*res) in world meters. Points outside
    the grid are treated as occupied.
    """

    def __init__(self, resolution, occupancy, doors, stairs, chairs, path, start_pose):
        self.resolution = float(resolution)
        self.occupancy = np.asarray(occupancy, dtype=bool)
        self.doors = np.asarray(doors, dtype=float).reshape(-1, 2)
        self.stairs = np.asarray(stairs, dtype=float).reshape(-1, 2)
        self.chairs = np.asarray(chairs, dtype=float).reshape(-1, 2)
        self.path = np.asarray(path, dtype=float).reshape(-1, 2)
        self.start_pose = start_pose
        self._validate()
        self._build_caches()

    def _validate(self):
        if not (self.resolution > 0):
            raise MapError("resolution: must be > 0")
        if self.occupancy.ndim != 2 or self.occupancy.size == 0:
            raise MapError("grid: must be a non-empty 2D grid")
        if len(self.path) < 2:
            raise MapError("path: needs at least 2 waypoints")
        ny, nx = self.occupancy.shape
        w, h = nx * self.resolution, ny * self.resolution
        for name, pts in (("doors", self.doors), ("stairs", self.stairs), ("chairs", self.chairs)):
            if pts.size and not (
                (pts[:, 0] >= 0).all() and (pts[:, 0] <= w).all()
                and (pts[:, 1] >= 0).all() and (pts[:, 1] <= h).all()
            ):
                raise MapError(f"{name}: point outside grid bounds")
        if self.is_occupied(self.start_pose.x, self.start_pose.y):
            raise MapError("start: start pose lies in occupied space")

    def _build_caches(self):
        ny, nx = self.occupancy.shape
        res = self.resolution
        # distance queries only need occupied cells with a free 8-neighbor:
        # an interior occupied cell is never the nearest box to a free point
        padded = np.ones((ny + 2, nx + 2), dtype=bool)
        padded[1:-1, 1:-1] = self.occupancy
        interior = np.ones((ny, nx), dtype=bool)
        for dj in (-1, 0, 1):
            for di in (-1, 0, 1):
                interior &= padded[1 + dj : 1 + dj + ny, 1 + di : 1 + di + nx]
        jj, ii = np.nonzero(self.occupancy & ~interior)
        # occupied cell boxes as (C, 4): x0, y0, x1, y1
        self._boxes = np.stack(
            [ii * res, jj * res, (ii + 1) * res, (jj + 1) * res], axis=1
        ) if len(ii) else np.zeros((0, 4))
        self._box_centers = (
            self._boxes[:, :2] + self._boxes[:, 2:]
        ) / 2.0 if len(ii) else np.zeros((0, 2))
        self._box_half = res / 2.0
        seg = np.diff(self.path, axis=0)
        self._seg_len = np.hypot(seg[:, 0], seg[:, 1])
        if (self._seg_len <= 0).any():
            raise MapError("path: contains zero-length segment")
        self._seg_dir = seg / self._seg_len[:, None]
        self._cum_len = np.concatenate([[0.0], np.cumsum(self._seg_len)])
        self.path_length = float(self._cum_len[-1])

    def is_occupied(self, x: float, y: float) -> bool:
        """Occupancy test for a world point; out-of-bounds counts as occupied."""
        i = math.floor(x / self.resolution)
        j = math.floor(y / self.resolution)
        ny, nx = self.occupancy.shape
        if i < 0 or j < 0 or i >= nx or j >= ny:
            return True
        return bool(self.occupancy[j, i])

    def occupied_mask(self, xy: np.ndarray) -> np.ndarray:
        """Vectorized is_occupied over an (n, 2) array of world points."""
        ij = np.floor(xy / self.resolution).astype(int)
        ny, nx = self.occupancy.shape
        inside = (
            (ij[:, 0] >= 0) & (ij[:, 0] < nx) & (ij[:, 1] >= 0) & (ij[:, 1] < ny)
        )
        out = np.ones(len(xy), dtype=bool)
        ins = np.nonzero(inside)[0]
        out[ins] = self.occupancy[ij[ins, 1], ij[ins, 0]]
        return out

    def project_onto_path(self, x: float, y: float, min_segment: int = 0):
        """Project a point onto the path polyline, scanning a window of
        segments starting at min_segment. Returns (arc_length, segment)."""
        lo = max(0, min_segment)
        hi = min(len(self._seg_len), lo + _PROJECTION_WINDOW)
        p = np.array([x, y])
        rel = p - self.path[lo:hi]
        t = np.einsum("ij,ij->i", rel, self._seg_dir[lo:hi])
        t = np.clip(t, 0.0, self._seg_len[lo:hi])
        foot = self.path[lo:hi] + t[:, None] * self._seg_dir[lo:hi]
        d2 = np.einsum("ij,ij->i", foot - p, foot - p)
        best = int(np.argmin(d2))
        return float(self._cum_len[lo + best] + t[best]), lo + best

    def point_at(self, s: float):
        """Point and tangent at arc length s along the path (clamped)."""
        s = min(max(s, 0.0), self.path_length)
        seg = int(np.searchsorted(self._cum_len, s, side="right")) - 1
        seg = min(max(seg, 0), len(self._seg_len) - 1)
        local = s - self._cum_len[seg]
        pt = self.path[seg] + local * self._seg_dir[seg]
        return pt, self._seg_dir[seg]


@dataclass(frozen=True)
class WorldState:
    map: Map
    pose: Pose
    path_cursor: int
    step_count: int = 0
    reset_count: int = 0


def initial_state(world_map: Map) -> WorldState:
    s, _ = world_map.project_onto_path(world_map.start_pose.x, world_map.start_pose.y)
    cursor = _nearest_ahead_waypoint(world_map, s)
    return WorldState(map=world_map, pose=world_map.start_pose, path_cursor=cursor)


def _nearest_ahead_waypoint(world_map: Map, s: float) -> int:
    idx = int(np.searchsorted(world_map._cum_len, s - 1e-9, side="left"))
    return min(idx, len(world_map.path) - 1)


# ---------- map file io ----------

def parse_map(document: bytes | str) -> Map:
    """Parse and validate a JSON map document."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as e:
        raise MapError(f"document: invalid JSON ({e})") from e
    if not isinstance(doc, dict):
        raise MapError("document: expected a JSON object")

    def need(field, typ):
        if field not in doc:
            raise MapError(f"{field}: missing")
        val = doc[field]
        if not isinstance(val, typ):
            raise MapError(f"{field}: wrong type")
        return val

    resolution = need("resolution", (int, float))
    grid = need("grid", list)
    if not grid or not all(isinstance(r, str) for r in grid):
        raise MapError("grid: must be a list of strings")
    width = len(grid[0])
    if width == 0 or any(len(r) != width for r in grid):
        raise MapError("grid: rows must be non-empty and equal length")
    bad = set("".join(grid)) - {".", "#"}
    if bad:
        raise MapError(f"grid: invalid characters {sorted(bad)}")
    # row 0 of the document is the minimum-y row
    occupancy = np.array([[c == "#" for c in row] for row in grid], dtype=bool)

    def points(field):
        raw = doc.get(field, [])
        if not isinstance(raw, list):
            raise MapError(f"{field}: must be a list of [x, y] pairs")
        out = []
        for p in raw:
            if not (isinstance(p, list) and len(p) == 2):
                raise MapError(f"{field}: must be a list of [x, y] pairs")
            out.append([float(p[0]), float(p[1])])
        return np.array(out, dtype=float).reshape(-1, 2)

    path = points("path")
    if "path" not in doc or len(path) < 2:
        raise MapError("path: needs at least 2 waypoints")
    start = need("start", list)
    if len(start) != 3:
        raise MapError("start: expected [x, y, heading]")
    start_pose = Pose(float(start[0]), float(start[1]), float(start[2]))
    return Map(
        resolution=resolution,
        occupancy=occupancy,
        doors=points("doors"),
        stairs=points("stairs"),
        chairs=points("chairs"),
        path=path,
        start_pose=start_pose,
    )


def load_map(source: str | Path | bytes) -> Map:
    """Load a map from raw bytes, a filesystem path, or a bundled name.

    Bundled names resolve against the package's maps/ directory, so
    "houseA", "houseA.json", and "maps/houseA.json" all work when no such
    file exists on disk.
    """
    if isinstance(source, bytes):
        return parse_map(source)
    p = Path(source)
    if p.exists():
        return parse_map(p.read_bytes())
    name = p.name if p.name.endswith(".json") else p.name + ".json"
    ref = resources.files("corrlearn.maps").joinpath(name)
    if ref.is_file():
        return parse_map(ref.read_bytes())
    raise MapError(f"document: no such map file or bundled map: {source}")


def map_to_document(world_map: Map) -> dict:
    """Serialize a Map back to the JSON document schema."""
    grid = [
        "".join("#" if c else "." for c in row) for row in world_map.occupancy
    ]
    sp = world_map.start_pose
    return {
        "resolution": world_map.resolution,
        "grid": grid,
        "doors": [[float(x), float(y)] for x, y in world_map.doors],
        "stairs": [[float(x), float(y)] for x, y in world_map.stairs],
        "chairs": [[float(x), float(y)] for x, y in world_map.chairs],
        "path": [[float(x), float(y)] for x, y in world_map.path],
        "start": [sp.x, sp.y, sp.heading],
    }


# ---------- action generation ----------

@functools.lru_cache(maxsize=32)
def _local_arcs(k: int, kappa_max: float, n_samples: int, length: float):
    """Local-frame arc samples shared by every pose: (k,) curvatures and
    (k, n, 3) rows of [x, y, heading delta] at arc lengths i*L/n."""
    curvatures = np.linspace(-kappa_max, kappa_max, k)
    s = np.arange(1, n_samples + 1) * (length / n_samples)
    out = np.empty((k, n_samples, 3))
    for idx, kappa in enumerate(curvatures):
        if kappa == 0.0:
            out[idx, :, 0] = s
            out[idx, :, 1] = 0.0
            out[idx, :, 2] = 0.0
        else:
            out[idx, :, 0] = np.sin(kappa * s) / kappa
            out[idx, :, 1] = (1.0 - np.cos(kappa * s)) / kappa
            out[idx, :, 2] = kappa * s
    return curvatures, out


def generate_action_set(
    pose: Pose,
    k: int = DEFAULT_K,
    kappa_max: float = DEFAULT_KAPPA_MAX,
    n_samples: int = DEFAULT_SAMPLES,
    length: float = ARC_LENGTH,
) -> list[Trajectory]:
    """k constant-curvature arcs of the given length rooted at pose,
    curvatures evenly spaced on [-kappa_max, +kappa_max], indexed in
    curvature order."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if not kappa_max > 0:
        raise ValueError("kappa_max must be > 0")
    curvatures, local = _local_arcs(k, float(kappa_max), int(n_samples), float(length))
    c, sn = math.cos(pose.heading), math.sin(pose.heading)
    world = np.empty_like(local)
    world[:, :, 0] = pose.x + c * local[:, :, 0] - sn * local[:, :, 1]
    world[:, :, 1] = pose.y + sn * local[:, :, 0] + c * local[:, :, 1]
    # vectorized wrap into (-pi, pi]
    world[:, :, 2] = math.pi - np.remainder(math.pi - (local[:, :, 2] + pose.heading), math.tau)
    trajs = []
    for idx in range(k):
        samples = world[idx].copy()
        end = samples[-1]
        trajs.append(
            Trajectory(
                index=idx,
                curvature=float(curvatures[idx]),
                samples=samples,
                endpoint=Pose(float(end[0]), float(end[1]), float(end[2])),
            )
        )
    return trajs


# ---------- features ----------

def _min_dist_to_points(pts: np.ndarray, targets: np.ndarray, clip: float) -> np.ndarray:
    """Per-point distance to the nearest target point, clipped. Empty target
    sets saturate at clip."""
    if len(targets) == 0:
        return np.full(len(pts), clip)
    dx = pts[:, 0:1] - targets[None, :, 0]
    dy = pts[:, 1:2] - targets[None, :, 1]
    d = np.sqrt((dx * dx + dy * dy).min(axis=1))
    return np.minimum(d, clip)


_scratch = threading.local()


def _buffers(shape):
    pool = getattr(_scratch, "pool", None)
    if pool is None:
        pool = _scratch.pool = {}
    bufs = pool.get(shape)
    if bufs is None:
        bufs = pool[shape] = (np.empty(shape), np.empty(shape))
    return bufs


def _min_dist_to_cells(pts: np.ndarray, centers: np.ndarray, half: float, clip: float) -> np.ndarray:
    """Per-point distance to the nearest occupied grid cell (0 inside),
    clipped. Cells are axis-aligned squares of half-width `half`."""
    if len(centers) == 0:
        return np.full(len(pts), clip)
    dx, dy = _buffers((len(pts), len(centers)))
    np.subtract(pts[:, 0:1], centers[None, :, 0], out=dx)
    np.abs(dx, out=dx)
    dx -= half
    np.maximum(dx, 0.0, out=dx)
    dx *= dx
    np.subtract(pts[:, 1:2], centers[None, :, 1], out=dy)
    np.abs(dy, out=dy)
    dy -= half
    np.maximum(dy, 0.0, out=dy)
    dy *= dy
    dx += dy
    d = np.sqrt(dx.min(axis=1))
    return np.minimum(d, clip)


def _lateral_displacement(curvature: float, length: float = ARC_LENGTH) -> float:
    # robot frame x forward / y left; right-of-robot is positive
    if curvature == 0.0:
        return 0.0
    return -(1.0 - math.cos(curvature * length)) / curvature


def feature_matrix(
    world_map: Map, state: WorldState, trajs: list[Trajectory], clip: float = DEFAULT_CLIP
) -> np.ndarray:
    """(k, 7) feature rows for a candidate action set.

    Distance features sum per-sample clipped nearest distances; cross/along
    track sum per-sample offsets from the reference point 1 m ahead of the
    pose's path projection; lateral_disp is the signed endpoint offset in
    the robot frame (right positive).
    """
    if not clip > 0:
        raise ValueError("clip must be > 0")
    k = len(trajs)
    n = len(trajs[0].samples)
    pts = np.concatenate([t.samples[:, :2] for t in trajs], axis=0)

    obstacle = _min_dist_to_cells(
        pts, world_map._box_centers, world_map._box_half, clip
    ).reshape(k, n).sum(axis=1)
    door = _min_dist_to_points(pts, world_map.doors, clip).reshape(k, n).sum(axis=1)
    stair = _min_dist_to_points(pts, world_map.stairs, clip).reshape(k, n).sum(axis=1)
    chair = _min_dist_to_points(pts, world_map.chairs, clip).reshape(k, n).sum(axis=1)

    seg0 = max(0, state.path_cursor - 1)
    s0, _ = world_map.project_onto_path(state.pose.x, state.pose.y, min_segment=seg0)
    ref, tangent = world_map.point_at(s0 + 1.0)
    rel = pts - ref
    along = np.abs(rel @ tangent).reshape(k, n).sum(axis=1)
    cross = np.abs(rel[:, 0] * tangent[1] - rel[:, 1] * tangent[0]).reshape(k, n).sum(axis=1)

    lateral = np.array([_lateral_displacement(t.curvature) for t in trajs])

    return np.stack([obstacle, door, stair, chair, cross, along, lateral], axis=1)


def features(
    world_map: Map, state: WorldState, traj: Trajectory, clip: float = DEFAULT_CLIP
) -> FeatureVector:
    """Feature vector for a single trajectory."""
    row = feature_matrix(world_map, state, [traj], clip)[0]
    return FeatureVector.from_array(row)


# ---------- masking and stepping ----------

def mask_colliding(world_map: Map, actions: list[Trajectory]) -> list[int]:
    """Indices of actions whose every sample lies in free space, input order
    preserved. May be empty (unrecoverable state)."""
    if not actions:
        raise ValueError("actions must be non-empty")
    pts = np.concatenate([t.samples[:, :2] for t in actions], axis=0)
    occ = world_map.occupied_mask(pts).reshape(len(actions), -1)
    free = ~occ.any(axis=1)
    return [i for i, ok in enumerate(free) if ok]


def step(
    world: WorldState,
    traj: Trajectory,
    k: int = DEFAULT_K,
    kappa_max: float = DEFAULT_KAPPA_MAX,
    n_samples: int = DEFAULT_SAMPLES,
) -> WorldState:
    """Advance to the trajectory endpoint. If every action at the new pose is
    masked, reset to the start pose (weights live elsewhere and are untouched).
    """
    m = world.map
    pose = traj.endpoint
    s, _ = m.project_onto_path(pose.x, pose.y, min_segment=max(0, world.path_cursor - 1))
    cursor = max(world.path_cursor, _nearest_ahead_waypoint(m, s))
    nxt = replace(
        world, pose=pose, path_cursor=cursor, step_count=world.step_count + 1
    )
    candidates = generate_action_set(pose, k=k, kappa_max=kappa_max, n_samples=n_samples)
    if not mask_colliding(m, candidates):
        nxt = replace(
            nxt,
            pose=m.start_pose,
            path_cursor=0,
            reset_count=world.reset_count + 1,
        )
    return nxt
