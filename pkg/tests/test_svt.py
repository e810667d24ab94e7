"""Per-brick summed volume tables: counting, shrinking, macro grids."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from voxelskip import Aabb, box_count, build_svt_grid, derive_macro_grid, shrink_to_occupied

from conftest import make_volume
from reference import random_bits, ref_box_count, ref_cell_boxes, ref_tight_box


def grid_of(bits):
    return build_svt_grid(make_volume(bits))


# -- table construction -------------------------------------------------------


def test_all_false_tables_are_zero():
    g = grid_of(np.zeros((40, 40, 40), dtype=bool))
    assert g.tables.max() == 0


def test_all_true_4cube_corner_is_64():
    g = build_svt_grid(make_volume(np.ones((4, 4, 4), dtype=bool)), brick_size=4)
    assert g.tables.shape == (1, 1, 1, 5, 5, 5)
    assert g.tables[0, 0, 0, 4, 4, 4] == 64
    assert g.tables[0, 0, 0, 0, 0, 0] == 0


def test_table_entries_are_prefix_counts(rng):
    bits = random_bits(rng, (40, 36, 33), density=0.2)
    g = build_svt_grid(make_volume(bits), brick_size=16)
    bs = g.brick_size
    for bc in [(0, 0, 0), (1, 1, 1), (2, 2, 2), (1, 0, 2)]:
        lo = tuple(c * bs for c in bc)
        for corner in [(0, 0, 0), (3, 5, 7), (16, 16, 16), (9, 16, 1)]:
            hi = tuple(min(l + c, d) for l, c, d in zip(lo, corner, bits.shape))
            want = ref_box_count(bits, lo, hi)
            assert int(g.tables[bc][corner]) == want


def test_tables_monotone_along_each_axis(rng):
    bits = random_bits(rng, (20, 20, 20), density=0.3)
    g = build_svt_grid(make_volume(bits), brick_size=8)
    for axis in (3, 4, 5):
        assert np.all(np.diff(g.tables.astype(np.int64), axis=axis) >= 0)


def test_corner_equals_brick_population(rng):
    bits = random_bits(rng, (64, 64, 64), density=0.05)
    g = grid_of(bits)
    corners = g.tables[:, :, :, -1, -1, -1]
    for bc in np.ndindex(g.bricks_dims):
        lo = tuple(c * g.brick_size for c in bc)
        hi = tuple(min(l + g.brick_size, d) for l, d in zip(lo, bits.shape))
        assert int(corners[bc]) == ref_box_count(bits, lo, hi)


def test_build_rejects_tiny_bricks():
    with pytest.raises(ValueError):
        build_svt_grid(make_volume(np.ones((4, 4, 4), dtype=bool)), brick_size=1)


# -- box_count ----------------------------------------------------------------


def test_count_empty_box_is_zero(rng):
    g = grid_of(random_bits(rng, (16, 16, 16)))
    assert box_count(g, Aabb((3, 3, 3), (3, 7, 7))) == 0


def test_count_all_true_subbox():
    g = grid_of(np.ones((8, 8, 8), dtype=bool))
    assert box_count(g, Aabb((1, 1, 1), (3, 3, 3))) == 8


def test_count_random_boxes_match_direct_scan(rng):
    bits = random_bits(rng, (64, 64, 64), density=0.15)
    g = grid_of(bits)
    for _ in range(100):
        lo = rng.integers(0, 64, size=3)
        hi = np.array([rng.integers(l, 65) for l in lo])
        box = Aabb(tuple(int(x) for x in lo), tuple(int(x) for x in hi))
        assert box_count(g, box) == ref_box_count(bits, box.lo, box.hi)


def test_count_spans_brick_boundaries(rng):
    bits = random_bits(rng, (70, 40, 40), density=0.3)  # 70 > 2 bricks of 32
    g = grid_of(bits)
    box = Aabb((20, 5, 5), (66, 38, 40))
    assert box_count(g, box) == ref_box_count(bits, box.lo, box.hi)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_count_additive_and_monotone(seed):
    rng = np.random.default_rng(seed)
    bits = random_bits(rng, (24, 24, 24), density=0.2)
    g = build_svt_grid(make_volume(bits), brick_size=8)
    lo = rng.integers(0, 23, size=3)
    hi = np.array([rng.integers(l + 1, 25) for l in lo])
    box = Aabb(tuple(int(x) for x in lo), tuple(int(x) for x in hi))
    axis = int(rng.integers(0, 3))
    cut = int(rng.integers(box.lo[axis], box.hi[axis] + 1))
    left_hi = list(box.hi)
    left_hi[axis] = cut
    right_lo = list(box.lo)
    right_lo[axis] = cut
    left = Aabb(box.lo, tuple(left_hi))
    right = Aabb(tuple(right_lo), box.hi)
    total = box_count(g, box)
    assert box_count(g, left) + box_count(g, right) == total
    assert box_count(g, left) <= total


# -- shrink_to_occupied -------------------------------------------------------


def test_shrink_empty_region_is_none(rng):
    bits = np.zeros((32, 32, 32), dtype=bool)
    bits[20, 20, 20] = True
    g = grid_of(bits)
    assert shrink_to_occupied(g, Aabb((0, 0, 0), (10, 10, 10))) is None


def test_shrink_single_voxel_to_unit_box():
    bits = np.zeros((16, 16, 16), dtype=bool)
    bits[5, 6, 7] = True
    g = grid_of(bits)
    got = shrink_to_occupied(g, Aabb((0, 0, 0), (16, 16, 16)))
    assert got == Aabb((5, 6, 7), (6, 7, 8))


def test_shrink_random_boxes_match_coordinate_extrema(rng):
    bits = random_bits(rng, (64, 64, 64), density=0.02)
    g = grid_of(bits)
    for _ in range(100):
        lo = rng.integers(0, 60, size=3)
        hi = np.array([rng.integers(l + 1, 65) for l in lo])
        box = Aabb(tuple(int(x) for x in lo), tuple(int(x) for x in hi))
        got = shrink_to_occupied(g, box)
        want = ref_tight_box(bits, box.lo, box.hi)
        if want is None:
            assert got is None
        else:
            assert (got.lo, got.hi) == want


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), density=st.floats(0.001, 0.3))
def test_shrink_idempotent_and_count_preserving(seed, density):
    rng = np.random.default_rng(seed)
    bits = random_bits(rng, (24, 24, 24), density=density)
    g = build_svt_grid(make_volume(bits), brick_size=8)
    box = Aabb((0, 0, 0), (24, 24, 24))
    shrunk = shrink_to_occupied(g, box)
    if shrunk is None:
        assert box_count(g, box) == 0
        return
    assert box_count(g, shrunk) == box_count(g, box)
    assert shrink_to_occupied(g, shrunk) == shrunk


# -- macro grid ---------------------------------------------------------------


def test_macro_grid_all_false_unoccupied():
    g = grid_of(np.zeros((32, 32, 32), dtype=bool))
    mg = derive_macro_grid(g, 16)
    assert mg.cells_dims == (2, 2, 2)
    assert not mg.occupied.any()


def test_macro_grid_single_voxel_single_cell():
    bits = np.zeros((48, 48, 48), dtype=bool)
    bits[33, 1, 47] = True
    mg = derive_macro_grid(grid_of(bits), 16)
    assert int(mg.occupied.sum()) == 1
    assert mg.occupied[2, 0, 2]


def test_macro_grid_matches_per_cell_scan(rng):
    bits = random_bits(rng, (64, 64, 64), density=0.01)
    mg = derive_macro_grid(grid_of(bits), 16)
    want = ref_cell_boxes(bits, 16)
    for cell, tight in want.items():
        assert bool(mg.occupied[cell]) == (tight is not None)


def test_macro_grid_from_binary_volume_equals_from_tables(rng):
    bits = random_bits(rng, (48, 40, 52), density=0.05)
    via_tables = derive_macro_grid(grid_of(bits), 16)
    via_bits = derive_macro_grid(make_volume(bits), 16)
    assert via_tables.cells_dims == via_bits.cells_dims
    assert np.array_equal(via_tables.occupied, via_bits.occupied)
    assert via_tables.dims == via_bits.dims == (48, 40, 52)


def test_macro_grid_clips_border_cells():
    bits = np.zeros((40, 40, 40), dtype=bool)
    bits[39, 39, 39] = True
    mg = derive_macro_grid(grid_of(bits), 16)
    assert mg.cells_dims == (3, 3, 3)
    assert mg.occupied[2, 2, 2]
    assert int(mg.occupied.sum()) == 1


def test_macro_grid_storage_is_packed(rng):
    bits = random_bits(rng, (64, 64, 64), density=0.5)
    mg = derive_macro_grid(grid_of(bits), 16)
    # 4x4x4 cells -> 64 flags fit in 8 bytes once bit-packed
    assert mg.storage_bytes() <= 16


def test_macro_grid_rejects_tiny_cells(rng):
    with pytest.raises(ValueError):
        derive_macro_grid(grid_of(random_bits(rng, (8, 8, 8))), 1)
