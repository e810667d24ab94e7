"""Benchmark driver: dataset specs, stats reporting, CSV emission, CLI."""

import csv
import io
import json

import numpy as np
import pytest

from voxelskip import (
    BenchConfig,
    BuildParams,
    INDEX_KINDS,
    TransferFunction,
    build_index,
    build_kdtree,
    build_lbvh,
    build_svt_grid,
    classify,
    flag_bricks,
    gen_shell,
    load_dataset,
    load_tf,
    report_stats,
    run_benchmark,
)
from voxelskip.bench import CSV_HEADER, parse_dims, to_csv
from voxelskip.cli import main

from conftest import make_volume


# -- dataset spec parsing -----------------------------------------------------


def test_parse_dims_cube_and_triple():
    assert parse_dims("64") == (64, 64, 64)
    assert parse_dims("4x8x12") == (4, 8, 12)
    with pytest.raises(ValueError):
        parse_dims("4x8")


def test_load_dataset_generators():
    assert load_dataset("menger:level=2").dims == (9, 9, 9)
    assert load_dataset("gen:menger:level=1").dims == (3, 3, 3)
    shell = load_dataset("shell:dims=32,radius=12,thickness=2")
    assert shell.dims == (32, 32, 32)
    assert shell.data.any()
    blobs = load_dataset("blobs:dims=16x16x20,n=3,seed=5")
    assert blobs.dims == (16, 16, 20)


def test_load_dataset_raw_file(tmp_path, rng):
    from voxelskip import Volume, save_raw

    v = Volume(rng.random((6, 6, 6), dtype=np.float32))
    path = tmp_path / "v.raw"
    save_raw(v, path)
    back = load_dataset(str(path))
    assert back.dims == (6, 6, 6)


def test_load_dataset_rejects_malformed_generator_args():
    with pytest.raises(ValueError):
        load_dataset("menger:level")


def test_load_tf_presets_and_json(tmp_path):
    assert np.array_equal(load_tf(None).lut, TransferFunction.ramp().lut)
    assert np.array_equal(load_tf("opaque").lut, TransferFunction.opaque().lut)
    path = tmp_path / "tf.json"
    TransferFunction.constant(0.1, 0.2, 0.3, 0.4).to_json(path)
    assert load_tf(str(path)).lut[50].tolist() == pytest.approx([0.1, 0.2, 0.3, 0.4])


def test_config_validation():
    with pytest.raises(ValueError):
        BenchConfig(dataset="menger:level=1", frames=0)
    with pytest.raises(ValueError):
        BenchConfig(dataset="menger:level=1", viewport=8)
    with pytest.raises(ValueError):
        BenchConfig(dataset="menger:level=1", kinds=("octree",))


# -- stats --------------------------------------------------------------------


def test_stats_single_leaf_tree_is_one_one():
    tree = build_kdtree(build_svt_grid(make_volume(np.ones((8, 8, 8), dtype=bool))))
    assert report_stats(tree) == {"node_count": 1, "height": 1}


def test_stats_lbvh_four_bricks_is_seven_three():
    bits = np.zeros((16, 16, 8), dtype=bool)
    for bx, by in [(0, 0), (1, 0), (0, 1), (1, 1)]:
        bits[bx * 8, by * 8, 0] = True
    idx = build_lbvh(flag_bricks(make_volume(bits)))
    assert report_stats(idx) == {"node_count": 7, "height": 3}


def test_stats_empty_and_treeless_indices_are_zero_zero():
    empty_tree = build_kdtree(build_svt_grid(make_volume(np.zeros((8, 8, 8), dtype=bool))))
    assert report_stats(empty_tree) == {"node_count": 0, "height": 0}
    assert report_stats(None) == {"node_count": 0, "height": 0}
    bits = make_volume(np.ones((8, 8, 8), dtype=bool))
    assert report_stats(build_index("grid", bits)) == {"node_count": 0, "height": 0}


def test_stats_hybrid_reports_its_tree():
    b = classify(gen_shell((32, 32, 32), radius=12.0, thickness=2.0),
                 TransferFunction.opaque(), dilate=True)
    h = build_index("hybrid", b)
    assert report_stats(h) == report_stats(h.tree)


def test_build_index_covers_every_kind():
    b = classify(gen_shell((32, 32, 32), radius=12.0, thickness=2.0),
                 TransferFunction.opaque(), dilate=True)
    for kind in INDEX_KINDS:
        index = build_index(kind, b)
        if kind == "naive":
            assert index is None
    with pytest.raises(ValueError):
        build_index("octree", b)


def test_deep_mls32_caps_leaf_extent():
    b = classify(gen_shell((96, 96, 96), radius=36.0, thickness=2.0),
                 TransferFunction.opaque(), dilate=True)
    tree = build_index("kd-deep-mls32", b)
    for i in range(tree.node_count):
        if tree.is_leaf(i):
            assert max(tree.node_box(i).extent()) <= 32


# -- benchmark runs -----------------------------------------------------------


def small_cfg(**kw):
    defaults = dict(
        dataset="shell:dims=32,radius=12,thickness=2",
        kinds=("naive",),
        frames=2,
        viewport=16,
        reps=1,
    )
    defaults.update(kw)
    return BenchConfig(**defaults)


def test_naive_run_yields_one_zeroed_record(warm_kernels):
    records = run_benchmark(small_cfg())
    assert len(records) == 1
    rec = records[0]
    assert rec.index == "naive"
    assert rec.nodes == 0 and rec.height == 0
    assert rec.fps > 0
    assert rec.samples > 0
    assert 0 < rec.occupancy_pct < 100


def test_menger_run_reports_known_occupancy(warm_kernels):
    records = run_benchmark(
        small_cfg(dataset="menger:level=3", kinds=("lbvh", "kd-deep-mls32"))
    )
    assert [r.index for r in records] == ["lbvh", "kd-deep-mls32"]
    for rec in records:
        assert rec.occupancy_pct == pytest.approx(100.0 * 8000 / 19683, abs=1e-9)
        assert abs(rec.occupancy_pct - 40.7) < 0.5
        assert rec.nodes > 0 and rec.height > 0


def test_rerun_reproduces_structural_columns(warm_kernels):
    cfg = small_cfg(kinds=("grid", "lbvh", "hybrid"))
    a = run_benchmark(cfg)
    b = run_benchmark(cfg)
    key = lambda r: (r.dataset, r.index, r.occupancy_pct, r.nodes, r.height, r.samples)
    assert [key(r) for r in a] == [key(r) for r in b]


def test_csv_shape_and_quoting(warm_kernels, tmp_path):
    out = tmp_path / "bench.csv"
    cfg = small_cfg(kinds=("naive", "grid"), output=str(out))
    records = run_benchmark(cfg)
    text = out.read_text()
    lines = text.strip().split("\n")
    assert lines[0] == CSV_HEADER
    assert len(lines) == 3
    # dataset specs contain commas; csv must round-trip them as one field
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[1][0] == cfg.dataset
    assert rows[1][1] == "naive"
    assert [len(r) for r in rows] == [8, 8, 8]
    assert to_csv(records) == text


# -- command line -------------------------------------------------------------


def test_cli_bench_writes_csv_to_stdout(warm_kernels, capsys):
    code = main(
        [
            "bench",
            "--dataset", "menger:level=2",
            "--index", "naive,lbvh",
            "--frames", "1",
            "--viewport", "16",
            "--reps", "1",
        ]
    )
    out = capsys.readouterr().out
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == CSV_HEADER
    assert len(lines) == 3


def test_cli_bench_writes_csv_file(warm_kernels, tmp_path, capsys):
    out = tmp_path / "r.csv"
    code = main(
        [
            "bench",
            "--dataset", "menger:level=1",
            "--index", "naive",
            "--frames", "1",
            "--viewport", "16",
            "--reps", "1",
            "--csv", str(out),
        ]
    )
    assert code == 0
    assert capsys.readouterr().out == ""
    assert out.read_text().startswith(CSV_HEADER)


def test_cli_rejects_unknown_index_kind():
    with pytest.raises(ValueError):
        main(["bench", "--dataset", "menger:level=1", "--index", "octree"])
