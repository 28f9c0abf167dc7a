import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import ball_bruteforce, fps_bruteforce, knn_bruteforce, nn_dists_bruteforce, sort_by_comparator
from pointfill import geometry

coords = st.floats(-10, 10, allow_nan=False, width=32)
clouds = arrays(np.float64, st.tuples(st.integers(1, 40), st.just(3)), elements=coords)


class TestCanonicalSort:
    def test_lexicographic(self):
        assert geometry.canonical_sort([(1, 0, 0), (0, 0, 0)]).tolist() == [1, 0]

    def test_tie_by_index(self):
        assert geometry.canonical_sort([(0, 0, 0), (0, 0, 0)]).tolist() == [0, 1]

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="empty input"):
            geometry.canonical_sort(np.zeros((0, 3)))

    def test_matches_comparator_oracle(self, rng):
        pts = rng.integers(0, 4, size=(100, 3)).astype(float)  # many ties
        assert geometry.canonical_sort(pts).tolist() == sort_by_comparator(pts.tolist())


class TestFps:
    def test_farthest_from_start(self):
        pts = [(0, 0, 0), (0.1, 0, 0), (1, 0, 0)]
        assert geometry.fps(pts, 2).tolist() == [0, 2]

    def test_exhaustion(self, rng):
        pts = rng.normal(size=(30, 3))
        assert sorted(geometry.fps(pts, 30).tolist()) == list(range(30))

    def test_count_too_large(self):
        with pytest.raises(ValueError, match="sample larger than population"):
            geometry.fps(np.zeros((3, 3)), 4)

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_bruteforce(self, seed):
        r = np.random.default_rng(seed)
        pts = r.normal(size=(64, 3))
        assert geometry.fps(pts, 8).tolist() == fps_bruteforce(pts.tolist(), 8)

    def test_matches_bruteforce_with_ties(self, rng):
        pts = rng.integers(0, 3, size=(40, 3)).astype(float)
        assert geometry.fps(pts, 12).tolist() == fps_bruteforce(pts.tolist(), 12)

    @settings(max_examples=60, deadline=None)
    @given(clouds, st.randoms(use_true_random=False))
    def test_permutation_invariant(self, pts, rnd):
        count = min(len(pts), 5)
        perm = list(range(len(pts)))
        rnd.shuffle(perm)
        a = pts[geometry.fps(pts, count)]
        b = pts[perm][geometry.fps(pts[perm], count)]
        assert np.array_equal(a, b)


class TestKnn:
    def test_simple(self):
        assert geometry.knn([(0, 0, 0), (1, 0, 0), (2, 0, 0)], [(0, 0, 0)], 2).tolist() == [[0, 1]]

    def test_tie_lower_index(self):
        assert geometry.knn([(1, 0, 0), (-1, 0, 0)], [(0, 0, 0)], 1).tolist() == [[0]]

    def test_k_too_large(self):
        with pytest.raises(ValueError):
            geometry.knn(np.zeros((2, 3)), np.zeros((1, 3)), 3)

    @pytest.mark.parametrize("method", ["brute", "kdtree", "auto"])
    def test_matches_exhaustive_oracle(self, rng, method):
        cloud = rng.normal(size=(256, 3))
        q = rng.normal(size=(16, 3))
        got = geometry.knn(cloud, q, 8, method=method)
        assert np.array_equal(got, knn_bruteforce(cloud.tolist(), q.tolist(), 8))

    def test_kdtree_equals_brute_on_many_instances(self):
        r = np.random.default_rng(7)
        for _ in range(1000):
            n = int(r.integers(2, 60))
            # integer grids create exact distance ties
            cloud = r.integers(-3, 4, size=(n, 3)).astype(float) if r.random() < 0.5 else r.normal(size=(n, 3))
            q = r.integers(-3, 4, size=(5, 3)).astype(float)
            k = int(r.integers(1, n + 1))
            a = geometry.knn_with_dists(cloud, q, k, method="brute")
            b = geometry.knn_with_dists(cloud, q, k, method="kdtree")
            assert np.array_equal(a[0], b[0])
            assert np.array_equal(a[1], b[1])

    def test_large_auto_path_matches_brute(self, rng):
        cloud = rng.normal(size=(3000, 3))
        q = rng.normal(size=(200, 3))
        a = geometry.knn(cloud, q, 4, method="brute")
        assert np.array_equal(geometry.knn(cloud, q, 4), a)


class TestGroupNormalize:
    def test_single_point(self):
        g = geometry.group_normalize([(1, 2, 3)], [0], 1)
        assert g.local_offsets.tolist() == [[[0.0, 0.0, 0.0]]]

    def test_translation_invariant(self, rng):
        pts = rng.normal(size=(50, 3))
        c = geometry.fps(pts, 4)
        a = geometry.group_normalize(pts, c, 4)
        b = geometry.group_normalize(pts + np.array([0.25, -0.5, 2.0]), c, 4)
        np.testing.assert_allclose(a.local_offsets, b.local_offsets, atol=1e-14)

    def test_oracle(self, rng):
        pts = rng.normal(size=(40, 3))
        c = geometry.fps(pts, 4)
        g = geometry.group_normalize(pts, c, 4)
        nbr = knn_bruteforce(pts.tolist(), pts[c].tolist(), 4)
        for gi in range(4):
            for ki in range(4):
                expect = pts[nbr[gi, ki]] - pts[c[gi]]
                assert g.local_offsets[gi, ki].tolist() == expect.tolist()


class TestBallQuery:
    def test_simple(self):
        out = geometry.ball_query([(0, 0, 0), (1, 0, 0), (2, 0, 0)], [(0, 0, 0)], 1.5)
        assert out[0].tolist() == [0, 1]

    def test_empty_ball(self):
        out = geometry.ball_query([(1, 0, 0), (2, 0, 0)], [(0, 0, 0)], 0.5)
        assert out[0].tolist() == []

    def test_radius_must_be_positive(self):
        with pytest.raises(ValueError):
            geometry.ball_query([(0, 0, 0)], [(0, 0, 0)], 0.0)

    @pytest.mark.parametrize("n", [50, 6000])
    def test_oracle(self, rng, n):
        pts = rng.uniform(-1, 1, size=(n, 3))
        seeds = rng.uniform(-1, 1, size=(50, 3))
        out = geometry.ball_query(pts, seeds, 0.3)
        for s, got in zip(seeds, out):
            assert got.tolist() == ball_bruteforce(pts.tolist(), s.tolist(), 0.3)


class TestNearest:
    def test_identical(self, rng):
        a = rng.normal(size=(20, 3))
        assert (geometry.directed_nn_dists(a, a) == 0).all()

    def test_345(self):
        assert geometry.directed_nn_dists([(0, 0, 0)], [(3, 4, 0)]).tolist() == [5.0]

    def test_empty_b(self):
        with pytest.raises(ValueError):
            geometry.directed_nn_dists([(0, 0, 0)], np.zeros((0, 3)))

    def test_oracle(self, rng):
        a, b = rng.normal(size=(50, 3)), rng.normal(size=(70, 3))
        np.testing.assert_allclose(
            geometry.directed_nn_dists(a, b), nn_dists_bruteforce(a.tolist(), b.tolist()), rtol=1e-14
        )
