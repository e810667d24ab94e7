"""Shallow tree + macro grid combination."""

import numpy as np

from voxelskip import (
    BuildParams,
    TransferFunction,
    build_hybrid,
    build_kdtree,
    build_svt_grid,
    classify,
    gen_shell,
)

from conftest import make_volume
from reference import random_bits, ref_cell_boxes


def hybrid_of(bits):
    v = make_volume(bits)
    return build_hybrid(build_svt_grid(v), v)


def test_empty_volume_empty_tree_and_grid():
    h = hybrid_of(np.zeros((32, 32, 32), dtype=bool))
    assert h.tree.node_count == 0
    assert not h.grid.occupied.any()


def test_dense_volume_one_node_tree_all_occupied_grid():
    h = hybrid_of(np.ones((32, 32, 32), dtype=bool))
    assert h.tree.node_count == 1
    assert h.tree.height() == 1
    assert h.grid.occupied.all()
    assert h.grid.cell_size == 16


def test_single_cluster_marks_exactly_overlapping_cells():
    bits = np.zeros((64, 64, 64), dtype=bool)
    bits[14:20, 30:34, 0:3] = True  # straddles the x=16 and y=32 boundaries
    h = hybrid_of(bits)
    want = {c for c, tight in ref_cell_boxes(bits, 16).items() if tight is not None}
    got = set(map(tuple, np.argwhere(h.grid.occupied).tolist()))
    assert got == want == {(0, 1, 0), (0, 2, 0), (1, 1, 0), (1, 2, 0)}


def test_components_match_standalone_builds():
    v = gen_shell((48, 48, 48), radius=18.0, thickness=2.0)
    b = classify(v, TransferFunction.opaque(), dilate=True)
    g = build_svt_grid(b)
    h = build_hybrid(g, b)
    standalone = build_kdtree(g, BuildParams(mode="shallow"))
    for field in ("lo", "hi", "axis", "plane", "left", "right"):
        assert np.array_equal(getattr(h.tree, field), getattr(standalone, field))
    assert h.grid.dims == (48, 48, 48)


def test_every_set_flag_in_occupied_cell_and_some_leaf(rng):
    bits = random_bits(rng, (48, 48, 48), density=0.01)
    h = hybrid_of(bits)
    for p in np.argwhere(bits):
        cell = tuple(int(c) // 16 for c in p)
        assert h.grid.occupied[cell]
    covered = np.zeros_like(bits)
    for i in range(h.tree.node_count):
        if h.tree.is_leaf(i):
            box = h.tree.node_box(i)
            covered[box.lo[0] : box.hi[0], box.lo[1] : box.hi[1], box.lo[2] : box.hi[2]] = True
    assert np.all(covered[bits])


def test_grid_storage_within_one_bit_per_cell(rng):
    bits = random_bits(rng, (96, 96, 96), density=0.3)
    h = hybrid_of(bits)
    cells = int(np.prod(h.grid.cells_dims))
    assert h.grid.storage_bytes() <= cells // 8 + 8
