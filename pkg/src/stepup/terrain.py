"""Procedural 1D terrain tiles and curriculum bookkeeping.

Six terrain families over a 6 m tile at 12 difficulty levels. The stair
family splits into a single-step section (levels 0-5) and five-step flights
(levels 6-11). Step-family tiles carry their exact edge positions so height
queries and contact geometry see crisp vertical faces instead of the 0.05 m
sampling ramp.
"""

import enum
from dataclasses import dataclass, field as dc_field

import numpy as np


class InvalidLevel(ValueError):
    pass


class OutOfBounds(ValueError):
    pass


class TerrainKind(enum.Enum):
    STEP = "step"
    STAIRS = "stairs"
    SMOOTH_SLOPE = "smooth_slope"
    DISCRETE_OBSTACLES = "discrete_obstacles"
    SMOOTH_PYRAMID = "smooth_pyramid"
    ROUGH_PYRAMID = "rough_pyramid"


STEP_FAMILY = (TerrainKind.STEP, TerrainKind.STAIRS)

# Column identifiers for the curriculum grid. A stairs-family column serves
# single steps on rows 0-5 and five-step flights on rows 6-11.
STAIRS_FAMILY_COLUMN = "stairs_family"
DEFAULT_COLUMNS = (
    STAIRS_FAMILY_COLUMN,
    STAIRS_FAMILY_COLUMN,
    "smooth_slope",
    "discrete_obstacles",
    "smooth_pyramid",
    "rough_pyramid",
)

EXTENT = 6.0
SPACING = 0.05
NUM_LEVELS = 12
HEIGHT_GRID_POINTS = 17
HEIGHT_GRID_SPAN = 1.6

_STEP_BASE = 0.05
_STEP_INCREMENT = 0.05
_TREAD_DEPTH = 0.30
_MAX_SLOPE = np.deg2rad(8.5)
_OBSTACLE_MAX = 0.10
_ROUGH_NOISE_MAX = 0.05
_SINGLE_STEP_EDGE = 3.0
_STAIRS_FIRST_EDGE = 2.0


@dataclass
class HeightField:
    """Sampled 1D elevation plus friction and difficulty metadata."""

    spacing: float
    samples: np.ndarray           # (S,) elevation at x = i * spacing
    friction: float
    kind: TerrainKind
    level: int
    edges_x: np.ndarray = dc_field(default_factory=lambda: np.empty(0))
    edges_rise: np.ndarray = dc_field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        self.edges_x = np.asarray(self.edges_x, dtype=float)
        self.edges_rise = np.asarray(self.edges_rise, dtype=float)
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("non-finite terrain samples")
        if not 0.1 <= self.friction <= 2.0:
            raise ValueError(f"friction {self.friction} outside [0.1, 2.0]")
        if not 0 <= self.level < NUM_LEVELS:
            raise InvalidLevel(f"level {self.level}")

    @property
    def extent(self) -> float:
        return (len(self.samples) - 1) * self.spacing

    @property
    def is_step_family(self) -> bool:
        return self.kind in STEP_FAMILY


def _grid(extent=EXTENT, spacing=SPACING) -> np.ndarray:
    return np.arange(round(extent / spacing) + 1) * spacing


def _step_profile(xs, edges_x, edges_rise):
    """Piecewise-constant elevation: sum of rises at x >= edge."""
    edges_x = np.asarray(edges_x, dtype=float)
    edges_rise = np.asarray(edges_rise, dtype=float)
    xq = np.asarray(xs, dtype=float)
    return (edges_rise * (xq[..., None] >= edges_x)).sum(axis=-1)


def single_step_field(height, edge_x=_SINGLE_STEP_EDGE, friction=0.75,
                      level=0, spacing=SPACING) -> HeightField:
    """One step of the given height with flat run-in/run-out."""
    xs = _grid(spacing=spacing)
    edges_x = np.array([edge_x])
    edges_rise = np.array([float(height)])
    return HeightField(spacing, _step_profile(xs, edges_x, edges_rise),
                       friction, TerrainKind.STEP, level, edges_x, edges_rise)


def generate_terrain(kind: TerrainKind, level: int, seed) -> HeightField:
    """Deterministic tile for (kind, level, seed).

    STEP is valid on levels 0-5 (heights 5-30 cm), STAIRS on levels 6-11
    (five steps of 5-30 cm each, 0.30 m tread); the remaining kinds accept
    any level 0-11.
    """
    if not isinstance(level, (int, np.integer)) or not 0 <= level < NUM_LEVELS:
        raise InvalidLevel(f"level {level}")
    rng = np.random.default_rng([int(seed) & 0xFFFFFFFF, _kind_tag(kind), int(level)])
    xs = _grid()
    friction = 0.75

    if kind is TerrainKind.STEP:
        if level > 5:
            raise InvalidLevel(f"single step defined for levels 0-5, got {level}")
        height = _STEP_BASE + _STEP_INCREMENT * level
        return single_step_field(height, level=level)

    if kind is TerrainKind.STAIRS:
        if level < 6:
            raise InvalidLevel(f"stair flights defined for levels 6-11, got {level}")
        height = _STEP_BASE + _STEP_INCREMENT * (level - 6)
        edges_x = _STAIRS_FIRST_EDGE + _TREAD_DEPTH * np.arange(5)
        edges_rise = np.full(5, height)
        return HeightField(SPACING, _step_profile(xs, edges_x, edges_rise),
                           friction, kind, level, edges_x, edges_rise)

    if kind is TerrainKind.SMOOTH_SLOPE:
        incline = _MAX_SLOPE * level / (NUM_LEVELS - 1)
        return HeightField(SPACING, np.tan(incline) * xs, friction, kind, level)

    if kind is TerrainKind.DISCRETE_OBSTACLES:
        samples = np.zeros_like(xs)
        max_height = _OBSTACLE_MAX * (level + 1) / NUM_LEVELS
        for _ in range(2):
            width = rng.uniform(1.0, 2.0)
            start = rng.uniform(0.5, EXTENT - 0.5 - width)
            height = rng.uniform(0.5, 1.0) * max_height
            samples[(xs >= start) & (xs < start + width)] += height
        return HeightField(SPACING, samples, friction, kind, level)

    if kind in (TerrainKind.SMOOTH_PYRAMID, TerrainKind.ROUGH_PYRAMID):
        incline = _MAX_SLOPE * level / (NUM_LEVELS - 1)
        platform_half = 0.75
        ramp = np.minimum(xs, EXTENT - xs)
        ramp = np.minimum(ramp, EXTENT / 2 - platform_half)
        samples = np.tan(incline) * ramp
        if kind is TerrainKind.ROUGH_PYRAMID:
            amp = _ROUGH_NOISE_MAX * level / (NUM_LEVELS - 1)
            samples = samples + rng.uniform(-amp, amp, size=xs.shape)
            samples -= samples[0]
        return HeightField(SPACING, samples, friction, kind, level)

    raise ValueError(f"unknown terrain kind {kind}")


def _kind_tag(kind: TerrainKind) -> int:
    return list(TerrainKind).index(kind)


def stairs_family_terrain(level: int, seed) -> HeightField:
    """Stairs-column tile: single step below level 6, a flight above."""
    kind = TerrainKind.STEP if level <= 5 else TerrainKind.STAIRS
    return generate_terrain(kind, level, seed)


def height_at(field: HeightField, x):
    """Elevation at x; exact step edges for the step family, else lerp.

    Raises OutOfBounds when x lies outside the tile.
    """
    xq = np.asarray(x, dtype=float)
    if np.any(xq < 0) or np.any(xq > field.extent):
        raise OutOfBounds(f"x={x} outside [0, {field.extent}]")
    return _height_clamped(field, xq)


def _height_clamped(field: HeightField, xq):
    xq = np.clip(np.asarray(xq, dtype=float), 0.0, field.extent)
    if field.is_step_family:
        return _step_profile(xq, field.edges_x, field.edges_rise)
    return np.interp(xq, _grid(field.extent, field.spacing), field.samples)


def sample_height_grid(field: HeightField, robot_x: float) -> np.ndarray:
    """17 absolute elevations spanning [-0.8, +0.8] m around the base.

    Queries beyond the tile border are padded with the edge value. The
    caller subtracts base height and applies the 5.0 packing coefficient.
    """
    offsets = np.linspace(-HEIGHT_GRID_SPAN / 2, HEIGHT_GRID_SPAN / 2,
                          HEIGHT_GRID_POINTS)
    return _height_clamped(field, robot_x + offsets)


def contact_polyline(field: HeightField, guard=1.0) -> np.ndarray:
    """Exact surface polyline (V, 2) for contact resolution.

    Step-family edges become true vertical segments via doubled vertices;
    the ends are extended flat by ``guard`` metres.
    """
    xs = _grid(field.extent, field.spacing)
    if field.is_step_family:
        verts_x, verts_z = [], []
        prev_h = 0.0
        for xi in xs:
            h = float(_step_profile(np.array(xi), field.edges_x, field.edges_rise))
            crossed = [(e, r) for e, r in zip(field.edges_x, field.edges_rise)
                       if (verts_x and verts_x[-1] < e <= xi) or (not verts_x and e <= xi)]
            for e, r in crossed:
                low = prev_h
                verts_x += [e, e]
                verts_z += [low, low + r]
                prev_h = low + r
            verts_x.append(float(xi))
            verts_z.append(h)
            prev_h = h
        xs_out = np.array(verts_x)
        zs_out = np.array(verts_z)
    else:
        xs_out = xs
        zs_out = field.samples.copy()
    xs_out = np.concatenate([[xs_out[0] - guard], xs_out, [xs_out[-1] + guard]])
    zs_out = np.concatenate([[zs_out[0]], zs_out, [zs_out[-1]]])
    return np.stack([xs_out, zs_out], axis=1)


def export_table(field: HeightField) -> str:
    """Plain-text (x, height) table of the exact surface."""
    poly = contact_polyline(field, guard=0.0)
    lines = ["# x_m\theight_m"]
    lines += [f"{x:.4f}\t{z:.5f}" for x, z in poly]
    return "\n".join(lines) + "\n"


class CurriculumGrid:
    """Row/column assignment of environments over the terrain grid.

    Rows are difficulty levels 0-11; columns are terrain slots (two of the
    six default columns are the stairs family). Promotion moves an env up a
    row when it finishes within ``promote_distance`` of its goal, demotion
    moves it down past ``demote_distance``; topping out rerolls the row
    uniformly to avoid catastrophic forgetting.
    """

    def __init__(self, num_envs: int, columns=DEFAULT_COLUMNS, levels=NUM_LEVELS,
                 start_level=0, promote_distance=0.20, demote_distance=0.50,
                 enabled=True):
        self.columns = tuple(columns)
        self.levels = levels
        self.promote_distance = promote_distance
        self.demote_distance = demote_distance
        self.enabled = enabled
        self.env_col = np.arange(num_envs) % len(self.columns)
        self.env_row = np.full(num_envs, start_level, dtype=int)

    def column_kind(self, col: int) -> str:
        return self.columns[col]

    def is_stairs_column(self, col) -> np.ndarray:
        return np.asarray(self.columns, dtype=object)[col] == STAIRS_FAMILY_COLUMN

    def update(self, env_id: int, final_distance: float, rng) -> tuple[int, int]:
        """Apply the promote/demote rule; returns the new (row, column)."""
        row = int(self.env_row[env_id])
        if self.enabled:
            if final_distance < self.promote_distance:
                if row >= self.levels - 1:
                    row = int(rng.integers(0, self.levels))
                else:
                    row += 1
            elif final_distance > self.demote_distance:
                row = max(0, row - 1)
        self.env_row[env_id] = row
        return row, int(self.env_col[env_id])

    def update_many(self, env_ids: np.ndarray, final_distances: np.ndarray, rng):
        for env_id, dist in zip(env_ids, final_distances):
            self.update(int(env_id), float(dist), rng)


def curriculum_update(grid: CurriculumGrid, env_id: int, final_distance: float,
                      rng) -> tuple[int, int]:
    return grid.update(env_id, final_distance, rng)


class TerrainPool:
    """All (column, row) tiles for one training run, with batched queries.

    Tiles are generated once per seed and shared by every env assigned to
    the cell, mirroring a fixed terrain grid. Arrays are padded to common
    shapes so height and contact queries vectorize across envs.
    """

    def __init__(self, columns=DEFAULT_COLUMNS, levels=NUM_LEVELS, seed=0,
                 fields=None):
        self.columns = tuple(columns)
        self.levels = levels
        if fields is not None:
            self.fields = fields
        else:
            self.fields = []
            for col, column in enumerate(self.columns):
                col_fields = []
                for row in range(levels):
                    cell_seed = np.random.SeedSequence([int(seed), col, row]).generate_state(1)[0]
                    if column == STAIRS_FAMILY_COLUMN:
                        f = stairs_family_terrain(row, cell_seed)
                    else:
                        f = generate_terrain(TerrainKind(column), row, cell_seed)
                    col_fields.append(f)
                self.fields.append(col_fields)
        self._build_arrays()

    @classmethod
    def from_fields(cls, fields_by_column):
        """Pool over explicit HeightFields (e.g. one fixed evaluation tile).

        fields_by_column: list of columns, each a list of HeightFields (all
        columns must share the row count).
        """
        columns = tuple(
            STAIRS_FAMILY_COLUMN if col[0].is_step_family else col[0].kind.value
            for col in fields_by_column)
        pool = cls.__new__(cls)
        pool.columns = columns
        pool.levels = len(fields_by_column[0])
        pool.fields = [list(col) for col in fields_by_column]
        pool._build_arrays()
        return pool

    def _build_arrays(self):
        flat = [f for col in self.fields for f in col]
        self.num_cells = len(flat)
        n_samples = len(flat[0].samples)
        self.spacing = flat[0].spacing
        self.extent = flat[0].extent
        self.samples = np.stack([f.samples for f in flat])
        self.is_step = np.array([f.is_step_family for f in flat])
        self.is_stairs_column = np.repeat(
            [c == STAIRS_FAMILY_COLUMN for c in self.columns], self.levels)

        max_edges = max(max((len(f.edges_x) for f in flat)), 1)
        self.edges_x = np.full((self.num_cells, max_edges), np.inf)
        self.edges_rise = np.zeros((self.num_cells, max_edges))
        self.first_edge = np.full(self.num_cells, np.nan)
        self.last_edge = np.full(self.num_cells, np.nan)
        self.top_height = np.zeros(self.num_cells)
        for i, f in enumerate(flat):
            if len(f.edges_x):
                self.edges_x[i, :len(f.edges_x)] = f.edges_x
                self.edges_rise[i, :len(f.edges_rise)] = f.edges_rise
                self.first_edge[i] = f.edges_x[0]
                self.last_edge[i] = f.edges_x[-1]
                self.top_height[i] = f.edges_rise.sum()

        polys = [contact_polyline(f) for f in flat]
        vmax = max(len(p) for p in polys)
        self.poly = np.zeros((self.num_cells, vmax, 2))
        for i, p in enumerate(polys):
            self.poly[i, :len(p)] = p
            self.poly[i, len(p):] = p[-1]   # degenerate tail segments

        xg = _grid(self.extent, self.spacing)
        self._grid_x0 = xg[0]
        self._grid_n = len(xg)

    def cell(self, col, row):
        return np.asarray(col) * self.levels + np.asarray(row)

    def field(self, col: int, row: int) -> HeightField:
        return self.fields[col][row]

    def height_at(self, cells: np.ndarray, xq: np.ndarray) -> np.ndarray:
        """Elevation for per-env cells at per-env x (any trailing shape).

        Out-of-tile queries clamp to the border (edge-value padding).
        """
        cells = np.asarray(cells)
        xq = np.clip(np.asarray(xq, dtype=float), 0.0, self.extent)
        flat_cells = np.broadcast_to(cells.reshape(cells.shape + (1,) * (xq.ndim - cells.ndim)), xq.shape)

        idx = np.clip((xq / self.spacing).astype(int), 0, self._grid_n - 2)
        frac = xq / self.spacing - idx
        s0 = self.samples[flat_cells, idx]
        s1 = self.samples[flat_cells, idx + 1]
        h_lerp = s0 * (1 - frac) + s1 * frac

        edges = self.edges_x[flat_cells]            # (..., E)
        rises = self.edges_rise[flat_cells]
        h_step = (rises * (xq[..., None] >= edges)).sum(axis=-1)

        return np.where(self.is_step[flat_cells], h_step, h_lerp)

    def height_grid(self, cells: np.ndarray, robot_x: np.ndarray) -> np.ndarray:
        """(N, 17) absolute elevations around each base."""
        offsets = np.linspace(-HEIGHT_GRID_SPAN / 2, HEIGHT_GRID_SPAN / 2,
                              HEIGHT_GRID_POINTS)
        return self.height_at(cells, np.asarray(robot_x)[:, None] + offsets)
