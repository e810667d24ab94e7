"""Coarse tree plus fine grid in one index.

A shallow kd-tree culls large empty regions with very few nodes; a global
grid of small macro cells recovers the fine-grained skipping the tree gave
up.  Rays walk the grid only inside tree leaves, so the two structures
compose without either needing to be deep or dense.
"""

from __future__ import annotations

from dataclasses import dataclass

from .kdtree import BuildParams, KdTree, build_kdtree
from .svt import MacroGrid, SvtGrid, derive_macro_grid
from .volume import BinaryVolume

DEFAULT_MACRO_CELL_SIZE = 16


@dataclass
class HybridGrid:
    tree: KdTree
    grid: MacroGrid


def build_hybrid(
    g: SvtGrid,
    b: BinaryVolume,
    cell_size: int = DEFAULT_MACRO_CELL_SIZE,
) -> HybridGrid:
    """Shallow tree from the tables, macro occupancy grid from the flags."""
    tree = build_kdtree(g, BuildParams(mode="shallow"))
    grid = derive_macro_grid(b, cell_size)
    return HybridGrid(tree=tree, grid=grid)
