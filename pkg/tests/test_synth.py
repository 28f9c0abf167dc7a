import math

import numpy as np
import pytest

from pointfill import synth


class TestShapes:
    @pytest.mark.parametrize("n", [1, 10, 1000])
    def test_sphere_radius(self, n):
        pts = synth.synth_shape("sphere", n, 3)
        assert np.abs(np.sqrt((pts * pts).sum(axis=1)) - 1).max() <= 1e-12

    def test_cuboid_on_faces(self):
        pts = synth.synth_shape("cuboid", 2000, 1)
        on_face = np.isclose(np.abs(pts), synth.CUBOID_HALF, rtol=0, atol=1e-15)
        assert on_face.any(axis=1).all()
        assert (np.abs(pts) <= synth.CUBOID_HALF + 1e-15).all()

    def test_cuboid_area_weighting(self):
        pts = synth.synth_shape("cuboid", 20000, 2)
        a, b, c = synth.CUBOID_HALF
        x_faces = np.isclose(np.abs(pts[:, 0]), a, rtol=0, atol=0).mean()
        assert x_faces == pytest.approx(b * c / (b * c + a * c + a * b), abs=0.02)

    def test_cylinder_surface(self):
        pts = synth.synth_shape("cylinder", 2000, 4)
        rad = np.hypot(pts[:, 0], pts[:, 1])
        on_side = np.isclose(rad, 1.0, atol=1e-12)
        on_cap = np.isclose(np.abs(pts[:, 2]), 1.0, atol=0) & (rad <= 1 + 1e-12)
        assert (on_side | on_cap).all()

    def test_torus_surface(self):
        pts = synth.synth_shape("torus", 2000, 5)
        ring = np.hypot(pts[:, 0], pts[:, 1]) - synth.TORUS_MAJOR
        np.testing.assert_allclose(np.hypot(ring, pts[:, 2]), synth.TORUS_MINOR, atol=1e-12)

    def test_seeded(self):
        assert np.array_equal(synth.synth_shape("torus", 50, 9), synth.synth_shape("torus", 50, 9))
        assert not np.array_equal(synth.synth_shape("torus", 50, 9), synth.synth_shape("torus", 50, 10))

    def test_unknown_shape(self):
        with pytest.raises(ValueError):
            synth.synth_shape("cone", 10)

    def test_fibonacci_unit(self):
        pts = synth.fibonacci_sphere(500)
        np.testing.assert_allclose(np.sqrt((pts * pts).sum(axis=1)), 1.0, atol=1e-12)


class TestCrop:
    def test_tiny_fraction_removes_nothing(self):
        pts = synth.synth_shape("sphere", 100, 0)
        partial, missing = synth.crop_viewpoint(pts, 0.005)
        assert np.array_equal(partial, pts) and len(missing) == 0

    def test_half_partition(self):
        pts = synth.synth_shape("sphere", 200, 0)
        partial, missing = synth.crop_viewpoint(pts, 0.5, seed=1)
        assert len(partial) == len(missing) == 100
        both = np.vstack([partial, missing])
        assert sorted(map(tuple, both)) == sorted(map(tuple, pts))

    def test_removed_are_nearest(self):
        pts = synth.synth_shape("cuboid", 300, 0)
        vp = synth.random_viewpoint(3)
        _, missing = synth.crop_viewpoint(pts, 0.3, seed=3)
        d = [(math.dist(p, vp), i) for i, p in enumerate(pts.tolist())]
        expect = sorted(i for _, i in sorted(d)[:90])
        assert np.array_equal(missing, pts[expect])

    @pytest.mark.parametrize("f", [0.0, 1.0, -0.2])
    def test_fraction_range(self, f):
        with pytest.raises(ValueError):
            synth.crop_viewpoint(np.zeros((4, 3)), f)
