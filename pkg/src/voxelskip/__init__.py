"""Empty-space-skipping spatial indices for scalar-volume ray marching.

Builds several interchangeable indices over a transfer-function-dependent
binary classification of a volume — a brick LBVH from Morton codes, k-d
trees cut by summed-table plane searches, a macro-cell grid, and a hybrid of
shallow tree plus grid — and renders them with a traversal-aware
ray marcher whose sampling lattice makes skipping exactly image-preserving.
"""

from .bench import (
    BenchConfig,
    BenchRecord,
    INDEX_KINDS,
    build_index,
    load_dataset,
    load_tf,
    report_stats,
    run_benchmark,
)
from .hybrid import HybridGrid, build_hybrid
from .kdtree import (
    BuildParams,
    CellBoxList,
    KdTree,
    SplitPlane,
    binned_best_plane,
    build_kdtree,
    precompute_cell_boxes,
    sweep_best_plane,
)
from .lbvh import BrickSet, Lbvh, build_lbvh, flag_bricks, morton_decode, morton_encode
from .render import (
    Camera,
    Frame,
    Ray,
    RaySegmentList,
    SpatialIndex,
    index_kind,
    integrate,
    render_frame,
    sample_count_of,
    traverse_grid,
    traverse_hybrid,
    traverse_kd,
    traverse_lbvh,
    traverse_naive,
)
from .service import Reply, Session, handle_message, serve
from .svt import (
    MacroGrid,
    SvtGrid,
    box_count,
    build_svt_grid,
    derive_macro_grid,
    shrink_to_occupied,
)
from .volume import (
    Aabb,
    BinaryVolume,
    TransferFunction,
    Volume,
    classify,
    gen_blobs,
    gen_menger,
    gen_shell,
    load_raw,
    occupancy,
    quantize_scalar,
    save_raw,
)

__version__ = "0.1.0"
