"""Shared fixtures.

``warm_kernels`` exists so timing-sensitive tests can force jit compilation
out of their measured region; everything else is cached test data.
"""

from __future__ import annotations

import numpy as np
import pytest

from voxelskip import (
    BinaryVolume,
    Camera,
    TransferFunction,
    build_hybrid,
    build_lbvh,
    build_svt_grid,
    classify,
    derive_macro_grid,
    flag_bricks,
    gen_shell,
    render_frame,
)


@pytest.fixture(scope="session")
def warm_kernels():
    """Render one tiny frame through every index kind so numba compilation
    is done before anything is timed."""
    from voxelskip import BuildParams, build_kdtree

    v = gen_shell((16, 16, 16), radius=6.0, thickness=2.0)
    tf = TransferFunction.opaque()
    b = classify(v, tf, dilate=True)
    g = build_svt_grid(b)
    cam = Camera.orbit(v.dims, 30.0, 20.0, width=16)
    indices = [
        None,
        derive_macro_grid(b, 16),
        build_lbvh(flag_bricks(b)),
        build_hybrid(g, b),
        build_kdtree(g, BuildParams(mode="shallow")),
        build_kdtree(g, BuildParams(mode="deep", max_leaf_size=8)),
        build_kdtree(g, BuildParams(mode="deep", builder="binned", max_leaf_size=8)),
    ]
    for index in indices:
        render_frame(v, tf, index, cam, dt=0.5)
    return True


@pytest.fixture(scope="session")
def shell_small():
    return gen_shell((32, 32, 32), radius=12.0, thickness=2.0)


@pytest.fixture(scope="session")
def shell_bits(shell_small):
    return classify(shell_small, TransferFunction.opaque(), dilate=True)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)


def make_volume(bits: np.ndarray) -> BinaryVolume:
    """BinaryVolume wrapper for raw flags produced by an oracle."""
    return BinaryVolume(bits=np.ascontiguousarray(bits))
