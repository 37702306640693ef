import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stepup import terrain as tr


class TestGeneration:
    def test_stairs_family_level0_is_single_5cm_step(self):
        f = tr.stairs_family_terrain(0, seed=3)
        assert f.kind is tr.TerrainKind.STEP
        assert len(f.edges_x) == 1
        assert f.edges_rise[0] == pytest.approx(0.05)
        assert tr.height_at(f, 0.5) == 0.0
        assert tr.height_at(f, 5.5) == pytest.approx(0.05)

    def test_stairs_family_level8_is_five_15cm_steps(self):
        f = tr.stairs_family_terrain(8, seed=3)
        assert f.kind is tr.TerrainKind.STAIRS
        assert len(f.edges_x) == 5
        np.testing.assert_allclose(f.edges_rise, 0.15)
        np.testing.assert_allclose(np.diff(f.edges_x), 0.30)
        assert tr.height_at(f, 5.5) == pytest.approx(0.75)

    def test_smooth_slope_level0_is_flat(self):
        f = tr.generate_terrain(tr.TerrainKind.SMOOTH_SLOPE, 0, seed=1)
        np.testing.assert_array_equal(f.samples, 0.0)

    def test_smooth_slope_top_level_is_8p5_degrees(self):
        f = tr.generate_terrain(tr.TerrainKind.SMOOTH_SLOPE, 11, seed=1)
        rise = f.samples[-1] - f.samples[0]
        assert np.arctan(rise / f.extent) == pytest.approx(np.deg2rad(8.5), rel=1e-9)

    def test_obstacles_height_capped_at_10cm(self):
        for level in (0, 5, 11):
            f = tr.generate_terrain(tr.TerrainKind.DISCRETE_OBSTACLES, level, seed=9)
            assert f.samples.max() <= 0.10 * 2 + 1e-12   # two bumps may overlap
            assert f.samples.min() >= 0.0

    def test_rough_pyramid_noise_bounded(self):
        smooth = tr.generate_terrain(tr.TerrainKind.SMOOTH_PYRAMID, 7, seed=5)
        rough = tr.generate_terrain(tr.TerrainKind.ROUGH_PYRAMID, 7, seed=5)
        amp = 0.05 * 7 / 11
        assert np.max(np.abs(rough.samples - (smooth.samples - smooth.samples[0]))) <= 2 * amp + 1e-12

    def test_determinism(self):
        for kind, level in [(tr.TerrainKind.DISCRETE_OBSTACLES, 4),
                            (tr.TerrainKind.ROUGH_PYRAMID, 9),
                            (tr.TerrainKind.STEP, 2)]:
            a = tr.generate_terrain(kind, level, seed=1234)
            b = tr.generate_terrain(kind, level, seed=1234)
            np.testing.assert_array_equal(a.samples, b.samples)

    def test_invalid_levels_raise(self):
        with pytest.raises(tr.InvalidLevel):
            tr.generate_terrain(tr.TerrainKind.STEP, 7, seed=0)
        with pytest.raises(tr.InvalidLevel):
            tr.generate_terrain(tr.TerrainKind.STAIRS, 3, seed=0)
        with pytest.raises(tr.InvalidLevel):
            tr.generate_terrain(tr.TerrainKind.SMOOTH_SLOPE, 12, seed=0)
        with pytest.raises(tr.InvalidLevel):
            tr.generate_terrain(tr.TerrainKind.SMOOTH_SLOPE, -1, seed=0)

    def test_monotone_step_heights(self):
        heights = []
        for level in range(12):
            f = tr.stairs_family_terrain(level, seed=0)
            heights.append(f.edges_rise[0])
        assert all(b >= a or level == 6
                   for level, (a, b) in enumerate(zip(heights, heights[1:]), start=1))
        # single-step section rises to 30 cm; flights restart at 5 cm
        assert heights[5] == pytest.approx(0.30)
        assert heights[6] == pytest.approx(0.05)
        assert heights[11] == pytest.approx(0.30)

    def test_monotone_slope_incline(self):
        inclines = [tr.generate_terrain(tr.TerrainKind.SMOOTH_SLOPE, lv, 0).samples[-1]
                    for lv in range(12)]
        assert np.all(np.diff(inclines) >= 0)


class TestHeightAt:
    def test_step_edge_is_exact(self):
        f = tr.single_step_field(0.15, edge_x=2.0)
        assert tr.height_at(f, 1.99) == 0.0
        assert tr.height_at(f, 2.0) == pytest.approx(0.15)
        assert tr.height_at(f, 2.01) == pytest.approx(0.15)

    def test_flat_is_zero_everywhere(self):
        f = tr.generate_terrain(tr.TerrainKind.SMOOTH_SLOPE, 0, seed=0)
        xs = np.linspace(0, 6, 37)
        np.testing.assert_array_equal(tr.height_at(f, xs), 0.0)

    def test_slope_matches_trigonometry(self):
        f = tr.generate_terrain(tr.TerrainKind.SMOOTH_SLOPE, 11, seed=0)
        assert tr.height_at(f, 1.0) == pytest.approx(np.tan(np.deg2rad(8.5)), rel=1e-6)

    def test_out_of_bounds_raises(self):
        f = tr.generate_terrain(tr.TerrainKind.SMOOTH_SLOPE, 3, seed=0)
        with pytest.raises(tr.OutOfBounds):
            tr.height_at(f, -0.1)
        with pytest.raises(tr.OutOfBounds):
            tr.height_at(f, 6.1)


class TestHeightGrid:
    def test_grid_spans_1p6_metres(self):
        f = tr.generate_terrain(tr.TerrainKind.SMOOTH_SLOPE, 11, seed=0)
        grid = tr.sample_height_grid(f, robot_x=3.0)
        assert grid.shape == (17,)
        slope = np.tan(np.deg2rad(8.5))
        assert grid[0] == pytest.approx(slope * (3.0 - 0.8), rel=1e-9)
        assert grid[-1] == pytest.approx(slope * (3.0 + 0.8), rel=1e-9)

    def test_flat_grid_absolute_heights_are_zero(self):
        f = tr.generate_terrain(tr.TerrainKind.SMOOTH_SLOPE, 0, seed=0)
        np.testing.assert_array_equal(tr.sample_height_grid(f, 3.0), 0.0)

    def test_step_ahead_raises_forward_samples_by_height(self):
        f = tr.single_step_field(0.15, edge_x=3.2)
        grid = tr.sample_height_grid(f, robot_x=3.0)
        xs = 3.0 + np.linspace(-0.8, 0.8, 17)
        behind = grid[xs < 3.2]
        ahead = grid[xs >= 3.2]
        np.testing.assert_array_equal(behind, 0.0)
        np.testing.assert_allclose(ahead, 0.15)

    def test_border_queries_pad_with_edge_value(self):
        f = tr.generate_terrain(tr.TerrainKind.SMOOTH_SLOPE, 11, seed=0)
        grid = tr.sample_height_grid(f, robot_x=0.1)
        assert grid[0] == pytest.approx(0.0)   # clamped to x=0


class TestCurriculum:
    def make(self, n=12):
        return tr.CurriculumGrid(num_envs=n)

    def test_promote_on_close_finish(self):
        grid = self.make()
        grid.env_row[3] = 3
        row, col = tr.curriculum_update(grid, 3, 0.15, np.random.default_rng(0))
        assert row == 4 and col == 3

    def test_demote_on_far_finish(self):
        grid = self.make()
        grid.env_row[3] = 3
        row, _ = tr.curriculum_update(grid, 3, 0.60, np.random.default_rng(0))
        assert row == 2

    def test_demote_clamps_at_zero(self):
        grid = self.make()
        row, _ = tr.curriculum_update(grid, 0, 0.60, np.random.default_rng(0))
        assert row == 0

    def test_neutral_zone_keeps_row(self):
        grid = self.make()
        grid.env_row[5] = 7
        row, _ = tr.curriculum_update(grid, 5, 0.35, np.random.default_rng(0))
        assert row == 7

    def test_top_level_success_rerolls_uniformly(self):
        grid = self.make()
        rng = np.random.default_rng(7)
        rows = set()
        for _ in range(300):
            grid.env_row[0] = 11
            row, _ = tr.curriculum_update(grid, 0, 0.05, rng)
            rows.add(row)
        assert rows == set(range(12))

    def test_column_never_changes(self):
        grid = self.make()
        rng = np.random.default_rng(1)
        col0 = grid.env_col.copy()
        for _ in range(50):
            tr.curriculum_update(grid, 4, rng.uniform(0, 1), rng)
        np.testing.assert_array_equal(grid.env_col, col0)

    @given(st.lists(st.floats(min_value=0.0, max_value=3.0), min_size=1, max_size=200))
    @settings(max_examples=200, deadline=None)
    def test_row_is_a_bounded_walk(self, distances):
        grid = tr.CurriculumGrid(num_envs=1)
        rng = np.random.default_rng(0)
        for d in distances:
            row, _ = tr.curriculum_update(grid, 0, d, rng)
            assert 0 <= row <= 11

    def test_default_grid_has_two_stairs_columns(self):
        grid = self.make()
        stairs = [c for c in grid.columns if c == tr.STAIRS_FAMILY_COLUMN]
        assert len(stairs) == 2 and len(grid.columns) == 6

    @pytest.mark.parametrize("n", [1024, 1000, 6, 13])
    def test_population_splits_evenly_across_columns(self, n):
        grid = tr.CurriculumGrid(num_envs=n)
        counts = np.bincount(grid.env_col, minlength=6)
        assert counts.max() - counts.min() <= 1


class TestPool:
    def test_batched_height_matches_reference_fields(self):
        pool = tr.TerrainPool(seed=11)
        rng = np.random.default_rng(0)
        cols = rng.integers(0, 6, size=40)
        rows = rng.integers(0, 12, size=40)
        xs = rng.uniform(0, 6, size=40)
        cells = pool.cell(cols, rows)
        batched = pool.height_at(cells, xs)
        for i in range(40):
            f = pool.field(cols[i], rows[i])
            assert batched[i] == pytest.approx(float(tr.height_at(f, xs[i])), abs=1e-12)

    def test_height_grid_shape_and_span(self):
        pool = tr.TerrainPool(seed=2)
        cells = pool.cell(np.array([2, 2]), np.array([11, 11]))
        grid = pool.height_grid(cells, np.array([3.0, 2.0]))
        assert grid.shape == (2, 17)
        slope = np.tan(np.deg2rad(8.5))
        assert grid[0, 0] == pytest.approx(slope * 2.2, rel=1e-9)

    def test_stairs_columns_flagged(self):
        pool = tr.TerrainPool(seed=2)
        assert pool.is_stairs_column[pool.cell(0, 3)]
        assert pool.is_stairs_column[pool.cell(1, 9)]
        assert not pool.is_stairs_column[pool.cell(2, 3)]


class TestExport:
    def test_export_table_round_trips_heights(self):
        f = tr.single_step_field(0.2, edge_x=3.0)
        text = tr.export_table(f)
        lines = [l for l in text.strip().split("\n") if not l.startswith("#")]
        xs, zs = zip(*(map(float, l.split("\t")) for l in lines))
        assert min(xs) == 0.0 and max(xs) == 6.0
        # the exact vertical face is present
        idx = [i for i, x in enumerate(xs) if x == 3.0]
        assert {zs[i] for i in idx} >= {0.0, 0.2}

    def test_contact_polyline_has_vertical_step_face(self):
        f = tr.single_step_field(0.15, edge_x=2.0)
        poly = tr.contact_polyline(f)
        at_edge = poly[poly[:, 0] == 2.0]
        assert {0.0, 0.15} <= set(at_edge[:, 1])
        assert np.all(np.diff(poly[:, 0]) >= 0)
