""" Docstring for the test_occupancy_map.py file.

"""
import itertools
import math

import numpy as np
import pytest

from errors import MapBoundsError
from mapping.occupancy_map import (OccupancyOctree, OccupancyState, OctreeParams, RayTerminal, VoxelKey, logit)
from simulator.geometry import BoundingBox


def brute_force_voxels(octree: OccupancyOctree, origin, direction, length):
    """ Fine-step marching along the segment, deduplicated in order. """
    t = np.arange(0.0, length, 1e-6)
    keys = np.floor((origin + t[:, None] * direction - octree.origin) / octree.resolution).astype(np.int64)
    keys = keys[np.all((keys >= 0) & (keys < np.asarray(octree.shape)), axis=1)]
    changed = np.r_[True, np.any(keys[1:] != keys[:-1], axis=1)]
    return [VoxelKey(*(int(v) for v in key)) for key in keys[changed]]


def test_unstored_and_stored_probabilities(unit_octree):
    assert unit_octree.probability((1, 2, 3)) == 0.5
    unit_octree.set_log_odds((1, 2, 3), 0.0)
    assert unit_octree.probability((1, 2, 3)) == 0.5
    unit_octree.set_log_odds((4, 4, 4), logit(0.97))
    assert unit_octree.probability((4, 4, 4)) == pytest.approx(0.97)


def test_key_round_trip(unit_octree):
    for key in itertools.product(range(0, 10, 3), repeat=3):
        assert unit_octree.key_of(unit_octree.center_of(key)) == VoxelKey(*key)


def test_out_of_bounds_keys_are_rejected(unit_octree):
    assert unit_octree.key_of(np.array([10.5, 1.0, 1.0])) is None
    with pytest.raises(MapBoundsError):
        unit_octree.center_of((10, 0, 0))
    with pytest.raises(MapBoundsError):
        unit_octree.set_log_odds((-1, 0, 0), 1.0)


def test_three_state_classification(unit_octree):
    unit_octree.set_log_odds((0, 0, 0), logit(0.9))
    unit_octree.set_log_odds((1, 0, 0), logit(0.2))
    assert unit_octree.state((0, 0, 0)) is OccupancyState.OCCUPIED
    assert unit_octree.state((1, 0, 0)) is OccupancyState.FREE
    assert unit_octree.state((2, 0, 0)) is OccupancyState.UNKNOWN


def test_raycast_unobstructed_reaches_max_range(unit_octree):
    voxels, terminal = unit_octree.raycast(np.array([0.0, 0.5, 0.5]), np.array([1.0, 0.0, 0.0]), 10.0)
    assert len(voxels) == 10
    assert voxels[0] == VoxelKey(0, 0, 0)
    assert terminal is RayTerminal.MAX_RANGE


def test_raycast_short_range_stops_inside_the_map(unit_octree):
    voxels, terminal = unit_octree.raycast(np.array([0.5, 0.5, 0.5]), np.array([1.0, 0.0, 0.0]), 3.0)
    assert voxels == [VoxelKey(0, 0, 0), VoxelKey(1, 0, 0), VoxelKey(2, 0, 0), VoxelKey(3, 0, 0)]
    assert terminal is RayTerminal.MAX_RANGE


def test_raycast_from_a_voxel_boundary(unit_octree):
    voxels, _ = unit_octree.raycast(np.array([2.0, 0.5, 0.5]), np.array([1.0, 0.0, 0.0]), 3.0)
    assert voxels == [VoxelKey(2, 0, 0), VoxelKey(3, 0, 0), VoxelKey(4, 0, 0)]


def test_raycast_stops_at_first_occupied_voxel(unit_octree):
    unit_octree.set_log_odds((2, 0, 0), logit(0.97))
    unit_octree.set_log_odds((5, 0, 0), logit(0.97))
    voxels, terminal = unit_octree.raycast(np.array([0.5, 0.5, 0.5]), np.array([1.0, 0.0, 0.0]), 10.0)
    assert voxels == [VoxelKey(0, 0, 0), VoxelKey(1, 0, 0), VoxelKey(2, 0, 0)]
    assert terminal is RayTerminal.HIT


def test_raycast_reports_the_map_boundary(unit_octree):
    voxels, terminal = unit_octree.raycast(np.array([7.5, 0.5, 0.5]), np.array([1.0, 0.0, 0.0]), 50.0)
    assert len(voxels) == 3
    assert terminal is RayTerminal.BOUNDARY


def test_raycast_origin_outside(unit_octree):
    voxels, terminal = unit_octree.raycast(np.array([-1.0, 0.5, 0.5]), np.array([1.0, 0.0, 0.0]), 5.0)
    assert not voxels
    assert terminal is RayTerminal.INVALID_ORIGIN


def test_raycast_rejects_bad_arguments(unit_octree):
    with pytest.raises(ValueError):
        unit_octree.raycast(np.array([0.5, 0.5, 0.5]), np.array([2.0, 0.0, 0.0]), 5.0)
    with pytest.raises(ValueError):
        unit_octree.raycast(np.array([0.5, 0.5, 0.5]), np.array([1.0, 0.0, 0.0]), 0.0)


@pytest.mark.parametrize("seed", range(5))
def test_diagonal_raycast_matches_fine_marching(seed):
    octree = OccupancyOctree(BoundingBox((0.0, 0.0, 0.0), (2.0, 2.0, 2.0)), OctreeParams(resolution=0.1))
    rng = np.random.default_rng(seed)
    origin = rng.uniform(0.3, 1.7, 3)
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    length = 0.9

    voxels, _ = octree.raycast(origin, direction, length)
    expected = brute_force_voxels(octree, origin, direction, length)
    assert voxels == expected

    # no duplicates and consecutive voxels are neighbours
    assert len(set(voxels)) == len(voxels)
    for first, second in zip(voxels, voxels[1:]):
        assert max(abs(a - b) for a, b in zip(first, second)) == 1


def test_single_hit_sets_the_hit_probability(unit_octree):
    summary = unit_octree.insert_sweep(np.array([[5.5, 0.5, 0.5]]), np.array([0.5, 0.5, 0.5]))
    assert unit_octree.probability((5, 0, 0)) == pytest.approx(0.7)
    assert summary.hits == 1
    assert summary.misses == 5


def test_ray_of_ten_voxels_marks_nine_free_and_one_occupied(unit_octree):
    unit_octree.insert_sweep(np.array([[9.5, 0.5, 0.5]]), np.array([0.5, 0.5, 0.5]))
    probabilities = [unit_octree.probability((i, 0, 0)) for i in range(10)]
    assert all(p < 0.5 for p in probabilities[:9])
    assert probabilities[9] > 0.5


def test_repeated_insertion_converges_to_the_upper_clamp(unit_octree):
    for _ in range(30):
        unit_octree.insert_sweep(np.array([[5.5, 0.5, 0.5]]), np.array([0.5, 0.5, 0.5]))
    clamp = unit_octree.params.clamp_max
    assert unit_octree.probability((5, 0, 0)) == pytest.approx(1.0 / (1.0 + math.exp(-clamp)))
    assert unit_octree.log_odds[5, 0, 0] <= clamp


def test_updates_are_monotone(unit_octree):
    origin = np.array([0.5, 0.5, 0.5])
    before = unit_octree.probability((3, 0, 0))
    unit_octree.insert_sweep(np.array([[3.5, 0.5, 0.5]]), origin)
    after_hit = unit_octree.probability((3, 0, 0))
    unit_octree.insert_sweep(np.array([[6.5, 0.5, 0.5]]), origin)
    after_miss = unit_octree.probability((3, 0, 0))
    assert after_hit >= before
    assert after_miss <= after_hit


def test_hit_and_miss_order_does_not_matter():
    bounds = BoundingBox((0.0, 0.0, 0.0), (10.0, 1.0, 1.0))
    params = OctreeParams(resolution=1.0, clamp_min_prob=0.001, clamp_max_prob=0.999)
    origin = np.array([0.5, 0.5, 0.5])
    hit, miss = np.array([[4.5, 0.5, 0.5]]), np.array([[8.5, 0.5, 0.5]])

    first, second = OccupancyOctree(bounds, params), OccupancyOctree(bounds, params)
    for points in (hit, hit, miss):
        first.insert_sweep(points, origin)
    for points in (miss, hit, hit):
        second.insert_sweep(points, origin)
    assert first.log_odds[4, 0, 0] == pytest.approx(second.log_odds[4, 0, 0])
    assert first.log_odds[4, 0, 0] == pytest.approx(2 * params.hit_update + params.miss_update)


def test_each_voxel_is_updated_once_per_sweep(unit_octree):
    points = np.array([[5.5, 0.5, 0.5], [5.6, 0.6, 0.4], [7.5, 0.5, 0.5]])
    summary = unit_octree.insert_sweep(points, np.array([0.5, 0.5, 0.5]))
    assert summary.hits == 2
    # voxel 5 is a hit for two points and a miss for the third; hits win
    assert unit_octree.probability((5, 0, 0)) == pytest.approx(0.7)
    assert unit_octree.probability((6, 0, 0)) == pytest.approx(0.4)


def test_insert_skips_zero_length_and_outside_points(unit_octree):
    origin = np.array([0.5, 0.5, 0.5])
    summary = unit_octree.insert_sweep(np.array([[0.5, 0.5, 0.5], [20.0, 0.5, 0.5], [2.5, 0.5, 0.5]]), origin)
    assert summary.skipped_zero_length == 1
    assert summary.skipped_out_of_bounds == 1
    assert summary.hits == 1


def test_insert_rejects_bad_sweeps(unit_octree):
    with pytest.raises(MapBoundsError):
        unit_octree.insert_sweep(np.array([[1.5, 0.5, 0.5]]), np.array([-3.0, 0.5, 0.5]))
    with pytest.raises(ValueError):
        unit_octree.insert_sweep(np.empty((0, 3)), np.array([0.5, 0.5, 0.5]))


def test_dump_round_trip(unit_octree, tmp_path):
    unit_octree.insert_sweep(np.array([[5.5, 2.5, 0.5], [3.5, 7.5, 4.5]]), np.array([0.5, 0.5, 0.5]))
    path = tmp_path / "octree.txt"
    unit_octree.write_dump(str(path))

    header = path.read_text(encoding="utf-8").splitlines()[0].split()
    assert float(header[0]) == 1.0
    restored = OccupancyOctree.load_dump(str(path))
    assert restored.shape == unit_octree.shape
    np.testing.assert_array_equal(restored.stored, unit_octree.stored)
    np.testing.assert_allclose(restored.log_odds, unit_octree.log_odds)


def test_snapshot_is_read_only(unit_octree):
    frozen = unit_octree.snapshot()
    with pytest.raises(ValueError):
        frozen.log_odds[0, 0, 0] = 1.0
    unit_octree.set_log_odds((0, 0, 0), 1.0)
    assert frozen.probability((0, 0, 0)) == 0.5
