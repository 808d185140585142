import numpy as np
import pytest

from dustlab.cantor import generate_cantor
from dustlab.errors import ParameterError, RingUndeterminedError
from dustlab.john import (build_john_path, curve_half_width,
                          densify_polyline, distance_to_squares,
                          point_in_approximant, ring_clearance_bound,
                          ring_of_point, sample_ring_clearances, verify_john)


def dust_distance(points, alpha, depth):
    leaves = generate_cantor(alpha, depth)
    return distance_to_squares(np.atleast_2d(points), leaves.leaf_corners(), leaves.side)


class TestRingOfPoint:
    def test_unit_center_is_generation_zero(self):
        loc = ring_of_point((0.5, 0.5), 0.25, 3)
        assert loc.kind == "ring"
        assert loc.generation == 0
        assert loc.word == ()

    def test_far_point_is_exterior(self):
        assert ring_of_point((2.0, 2.0), 0.25, 3).kind == "exterior"

    def test_sw_child_center_is_generation_one(self):
        loc = ring_of_point((0.125, 0.125), 0.25, 3)
        assert loc.generation == 1
        assert len(loc.word) == 1

    def test_point_inside_approximant_square_rejected(self):
        with pytest.raises(RingUndeterminedError, match="generation-3"):
            ring_of_point((1e-9, 1e-9), 0.25, 3)

    def test_deeper_depth_refines(self):
        # a point inside a generation-3 guard curve resolves once allowed deeper
        z = (0.28, 0.002)
        shallow = ring_of_point(z, 0.25, 4)
        assert shallow.generation >= 1

    def test_curve_half_width_values(self):
        assert curve_half_width(0.25, 0) == 0.75
        assert curve_half_width(0.25, 1) == 0.25
        assert curve_half_width(0.25, 2) == pytest.approx(1 / 16)


class TestRingClearance:
    @pytest.mark.parametrize("alpha,depth", [(0.25, 3), (0.25, 4), (0.4, 4)])
    def test_sharp_quarter_gap_bound_holds(self, alpha, depth):
        # certify against the next-deeper approximant, which bounds the dust
        rows, _ = sample_ring_clearances(alpha, depth, 4000, seed=42,
                                         measure_depth=depth + 1)
        gen = rows[:, 2].astype(int)
        bound = np.array([ring_clearance_bound(alpha, g) for g in gen])
        assert np.all(rows[:, 3] > bound)

    def test_sharp_bound_is_sharp(self):
        # the limit point just outside a child-curve corner attains it
        alpha = 0.25
        rows, _ = sample_ring_clearances(alpha, 4, 4000, seed=1, measure_depth=5)
        gen = rows[:, 2].astype(int)
        bound = np.array([ring_clearance_bound(alpha, g) for g in gen])
        assert (rows[:, 3] / bound).min() < 1.25

    def test_doubled_constant_fails(self):
        # the doubled clearance constant is violated near ring inner corners
        rows, _ = sample_ring_clearances(0.25, 4, 4000, seed=42)
        gen = rows[:, 2].astype(int)
        doubled = 2.0 * np.array([ring_clearance_bound(0.25, g) for g in gen])
        assert int((rows[:, 3] <= doubled).sum()) > 0


class TestBuildPath:
    def test_center_source_keeps_quarter_clearance(self):
        path = build_john_path((0.5, 0.5), 0.25, 3)
        d = dust_distance(path.vertices, 0.25, 3)
        assert np.all(d >= 0.25 - 1e-12)

    def test_exterior_source_straight_segment(self):
        path = build_john_path((2.0, 2.0), 0.25, 3)
        assert path.ring_generation == -1
        assert len(path.vertices) == 2
        assert tuple(path.vertices[1]) == (1.25, 1.25)

    def test_generations_monotone_to_base(self):
        z = (0.51, 0.26)
        path = build_john_path(z, 0.25, 3)
        gens = [g for g, _ in path.landings]
        assert gens == sorted(gens, reverse=True)
        assert gens[-1] == 0

    def test_deep_ring_path_crosses_every_curve(self):
        # a source in a generation-2 ring lands on curves of generations 2, 1, 0
        z = (0.7296554464299441, 0.17565562060255901)
        loc = ring_of_point(z, 0.25, 4)
        assert loc.generation == 2
        path = build_john_path(z, 0.25, 4)
        assert [g for g, _ in path.landings] == [2, 1, 0]

    def test_vertices_distinct(self):
        rng = np.random.default_rng(6)
        for _ in range(200):
            z = tuple(rng.random(2))
            if point_in_approximant(z, 0.3, 3):
                continue
            try:
                path = build_john_path(z, 0.3, 3)
            except RingUndeterminedError:
                continue
            diffs = np.diff(path.vertices, axis=0)
            assert np.all(np.hypot(diffs[:, 0], diffs[:, 1]) > 0)

    def test_path_avoids_approximant(self):
        rng = np.random.default_rng(13)
        for alpha in (0.25, 0.45):
            for _ in range(60):
                z = tuple(rng.random(2))
                if point_in_approximant(z, alpha, 3):
                    continue
                try:
                    path = build_john_path(z, alpha, 3)
                except RingUndeterminedError:
                    continue
                dense = densify_polyline(path.vertices, alpha ** 3 / 8)
                assert np.all(dust_distance(dense, alpha, 3) > 0)


class TestVerify:
    def test_epsilon_positive_and_calibrated_floor(self):
        report = verify_john(0.25, 3, 200, seed=7)
        assert report.epsilon > 0
        # pilot calibration: the exhaustive coarse-grid minimum is ~0.319
        assert report.epsilon >= 0.25

    def test_depth_stability_within_factor_two(self):
        r3 = verify_john(0.25, 3, 150, seed=7)
        r4 = verify_john(0.25, 4, 150, seed=7)
        assert 0.5 <= r3.epsilon / r4.epsilon <= 2.0

    def test_narrow_gaps_give_smaller_epsilon(self):
        wide = verify_john(0.25, 3, 150, seed=7)
        narrow = verify_john(0.45, 3, 150, seed=7)
        assert narrow.epsilon < wide.epsilon

    def test_deterministic_given_seed(self):
        a = verify_john(0.3, 3, 80, seed=21)
        b = verify_john(0.3, 3, 80, seed=21)
        assert a.epsilon == b.epsilon
        assert np.array_equal(a.points, b.points)
        assert a.csv_lines() == b.csv_lines()

    def test_rejects_depth_zero_and_no_samples(self):
        with pytest.raises(ParameterError):
            verify_john(0.25, 0, 10, seed=1)
        with pytest.raises(ParameterError):
            verify_john(0.25, 3, 0, seed=1)

    def test_sources_avoid_approximant(self):
        report = verify_john(0.4, 2, 100, seed=3)
        for x, y in report.points:
            assert not point_in_approximant((x, y), 0.4, 2)

    def test_csv_shape(self):
        report = verify_john(0.25, 2, 10, seed=5)
        lines = report.csv_lines()
        assert lines[0] == "sample_x,sample_y,worst_ratio"
        assert len(lines) == 12
        assert lines[-1].startswith("epsilon,")

    def test_jobs_do_not_change_results(self):
        serial = verify_john(0.3, 2, 40, seed=11, jobs=1)
        threaded = verify_john(0.3, 2, 40, seed=11, jobs=4)
        assert serial.csv_lines() == threaded.csv_lines()
