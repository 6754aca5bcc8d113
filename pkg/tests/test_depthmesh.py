import numpy as np
import pytest

from camcond.depthmesh import DepthRaster, build_mesh, fill_holes
from camcond.errors import DimensionMismatch, EmptyMesh, NoBoundaryData
from camcond.geom import CameraFrame, Extrinsics, Intrinsics, project


def cam(size):
    return CameraFrame(Intrinsics(float(size), float(size), size / 2, size / 2),
                       Extrinsics.identity(), size, size)


class TestBuildMesh:
    def test_constant_plane_quad(self):
        mesh = build_mesh(DepthRaster.from_array(np.full((2, 2), 2.0)), cam(2), 0.1)
        assert len(mesh.vertices) == 4
        assert mesh.num_triangles == 2

    def test_discontinuity_corner_dropped(self):
        d = np.full((2, 2), 2.0)
        d[0, 1] = 10.0  # off-diagonal corner: one triangle survives
        mesh = build_mesh(DepthRaster.from_array(d), cam(2), 0.1)
        assert mesh.num_triangles == 1

    def test_smooth_grid_triangle_count(self):
        rng = np.random.default_rng(11)
        d = 2.0 + 0.01 * rng.normal(size=(16, 16))
        mesh = build_mesh(DepthRaster.from_array(d), cam(16), 1e6)
        assert mesh.num_triangles == 2 * 15 * 15

    def test_vertices_reproject_to_pixel_centers(self):
        rng = np.random.default_rng(12)
        d = 2.0 + 0.2 * rng.random((16, 16))
        c = cam(16)
        mesh = build_mesh(DepthRaster.from_array(d), c, 1e6)
        for vert, (u, v) in zip(mesh.vertices, mesh.vertex_source):
            pu, pv, pd = project(c, vert)
            assert abs(pu - (u + 0.5)) < 1e-6
            assert abs(pv - (v + 0.5)) < 1e-6
            assert abs(pd - d[v, u]) < 1e-9

    def test_monotone_culling(self):
        rng = np.random.default_rng(13)
        d = 2.0 * np.exp(rng.normal(scale=0.2, size=(12, 12)))
        raster = DepthRaster.from_array(d)
        counts = [build_mesh(raster, cam(12), r).num_triangles
                  for r in (0.05, 0.1, 0.3, 1.0, 10.0)]
        assert counts == sorted(counts)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            build_mesh(DepthRaster.from_array(np.full((4, 4), 2.0)), cam(8), 0.1)

    def test_empty_mesh(self):
        d = np.array([[1.0, 100.0], [10000.0, 1.0]])
        with pytest.raises(EmptyMesh):
            build_mesh(DepthRaster.from_array(d), cam(2), 1e-6)

    def test_invalid_pixels_excluded(self):
        d = np.full((3, 3), 2.0)
        d[1, 1] = np.nan  # invalidates every quad through the center
        mesh = build_mesh(DepthRaster.from_array(d), cam(3), 0.1)
        assert mesh.num_triangles == 0 or all(
            (1, 1) != tuple(s) for s in mesh.vertex_source)


class TestFillHoles:
    def test_constant_preserved(self):
        d = np.full((8, 8), 3.0)
        hole = np.zeros((8, 8), dtype=bool)
        hole[2:5, 2:5] = True
        raster = DepthRaster(np.where(hole, 0.0, d), ~hole)
        out = fill_holes(raster, hole)
        np.testing.assert_array_equal(out.values, 3.0)
        assert out.valid.all()

    def test_symmetric_neighbor_average(self):
        vals = np.array([[1.0, 0.0, 3.0]])
        valid = np.array([[True, False, True]])
        hole = np.array([[False, True, False]])
        out = fill_holes(DepthRaster(vals, valid), hole)
        assert out.values[0, 1] == pytest.approx(2.0, abs=1e-12)

    def test_linear_ramp_recovered(self):
        ramp = np.tile(np.linspace(1.0, 3.0, 32), (32, 1))
        hole = np.zeros((32, 32), dtype=bool)
        hole[13:19, 13:19] = True
        raster = DepthRaster(np.where(hole, 0.0, ramp), ~hole)
        out = fill_holes(raster, hole)
        rel = np.abs(out.values - ramp)[hole] / ramp[hole]
        assert rel.max() < 0.05

    def test_outside_unchanged_bit_exactly(self):
        rng = np.random.default_rng(14)
        vals = 1.0 + rng.random((16, 16))
        hole = np.zeros((16, 16), dtype=bool)
        hole[4:9, 5:11] = True
        raster = DepthRaster(np.where(hole, 0.0, vals), ~hole)
        out = fill_holes(raster, hole)
        np.testing.assert_array_equal(out.values[~hole], vals[~hole])

    def test_idempotent_on_own_output(self):
        rng = np.random.default_rng(15)
        vals = 2.0 + rng.random((20, 20))
        hole = np.zeros((20, 20), dtype=bool)
        hole[6:13, 3:15] = True
        raster = DepthRaster(np.where(hole, 0.0, vals), ~hole)
        once = fill_holes(raster, hole)
        twice = fill_holes(once, hole)
        np.testing.assert_array_equal(once.values, twice.values)
        np.testing.assert_array_equal(once.valid, twice.valid)

    def test_no_boundary_data(self):
        hole = np.ones((4, 4), dtype=bool)
        raster = DepthRaster(np.zeros((4, 4)), ~hole)
        with pytest.raises(NoBoundaryData):
            fill_holes(raster, hole)
