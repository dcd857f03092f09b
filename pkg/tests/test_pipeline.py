import numpy as np
import pytest

from guided_depth.formats import DepthEncoding, write_color, write_depth
from guided_depth.imagecore import DepthMap, DimensionError
from guided_depth.pipeline import (
    BenchResult,
    DegradeSpec,
    center_crop,
    degrade,
    edge_contrast,
    format_table,
    make_synthetic_scene,
    read_report,
    rmse,
    run_benchmark,
    stripe_correlation,
    texture_pattern,
)
from guided_depth.solver import SolverConfig


def test_degrade_identity():
    gt = DepthMap(np.random.default_rng(0).uniform(0, 1, (6, 6)))
    assert np.array_equal(degrade(gt, DegradeSpec(1, 0.0)).values, gt.values)


def test_degrade_constant_block_average():
    out = degrade(DepthMap(np.full((16, 16), 0.5)), DegradeSpec(4, 0.0))
    assert out.shape == (4, 4) and np.all(out.values == 0.5)


def test_degrade_noise_level():
    out = degrade(DepthMap(np.full((256, 256), 0.5)), DegradeSpec(1, 5 / 255, 42))
    assert abs(out.values.std(ddof=1) / (5 / 255) - 1) < 0.1


def test_degrade_is_seeded():
    gt = DepthMap(np.full((32, 32), 0.5))
    a = degrade(gt, DegradeSpec(2, 0.02, 7)).values
    assert np.array_equal(a, degrade(gt, DegradeSpec(2, 0.02, 7)).values)
    assert not np.array_equal(a, degrade(gt, DegradeSpec(2, 0.02, 8)).values)


def test_degrade_requires_divisible_size():
    with pytest.raises(DimensionError):
        degrade(DepthMap(np.zeros((10, 10))), DegradeSpec(4, 0.0))
    assert center_crop(np.zeros((10, 11)), 4).shape == (8, 8)


def test_rmse_examples():
    a = DepthMap(np.full((4, 4), 0.2))
    assert rmse(a, a) == 0.0
    b = DepthMap(np.full((4, 4), 0.2 + 1 / 255))
    assert abs(rmse(a, b) - 1.0) < 1e-12
    assert abs(rmse(a, b, "millimeters", 255.0) - 1.0) < 1e-12
    with pytest.raises(DimensionError):
        rmse(a, DepthMap(np.zeros((2, 2))))
    with pytest.raises(ValueError):
        rmse(a, b, "millimeters")


def test_reference_points_print_in_table_format():
    rows = [BenchResult("Art", 8, "mrf", 2.51), BenchResult("Art", 8, "ours", 1.89),
            BenchResult("Books", 8, "ours", None, rmse_mm=12.58)]
    table = format_table(rows)
    assert "1.89" in table and "2.51" in table and "8x" in table
    assert "12.58" in format_table(rows, "rmse_mm")


def test_synthetic_scene_construction():
    gt, img = make_synthetic_scene(64, color_noise=0.0)
    assert abs(np.ptp(gt.values) - 50 / 255) < 1e-15
    dcol = np.flatnonzero(np.diff(gt.values[0]))
    ccol = np.flatnonzero(np.diff(img.values[0, :, 0]))
    assert dcol.tolist() == ccol.tolist() == [31]
    gt, img = make_synthetic_scene(64, edge_offset_px=6, color_noise=0.0)
    assert np.flatnonzero(np.diff(img.values[0, :, 0])).tolist() == [37]
    with pytest.raises(ValueError):
        make_synthetic_scene(64, edge_offset_px=16)


def test_texture_probe_has_guidance_edges_without_depth_edges():
    gt, img = make_synthetic_scene(64, depth_step=0.0, texture="stripes", color_noise=0.0)
    assert np.ptp(gt.values) == 0
    assert np.count_nonzero(np.diff(img.values[0, :, 0])) > 10
    pat = texture_pattern((64, 64), "stripes", 4)
    assert stripe_correlation(DepthMap(np.full((64, 64), 0.3)), pat) == 0.0
    assert stripe_correlation(DepthMap(0.5 + 0.1 * pat), pat) == pytest.approx(1.0)
    assert texture_pattern((4, 4), "checker", 1)[0, :2].tolist() == [-1.0, 1.0]


def test_edge_contrast():
    gt, _ = make_synthetic_scene(32)
    assert edge_contrast(gt, 16) == pytest.approx(50 / 255)


def test_empty_dataset(tmp_path, caplog):
    assert run_benchmark(tmp_path, [4]) == []
    assert "no scene" in caplog.text


def test_missing_directory(tmp_path):
    with pytest.raises(NotADirectoryError):
        run_benchmark(tmp_path / "missing", [4])


def _write_scene(root, name, gt, img):
    d = root / name
    d.mkdir()
    write_depth(gt, d / "depth.pgm", DepthEncoding("gray16"))
    write_color(img, d / "color.ppm")


def test_one_scene_three_methods(tmp_path):
    gt, img = make_synthetic_scene(64)
    _write_scene(tmp_path, "step", gt, img)
    rows = run_benchmark(tmp_path, [4], ["bicubic", "mrf", "ours"], report_path=tmp_path / "r.jsonl",
                         table_path=tmp_path / "t.txt")
    assert [r.method for r in rows] == ["bicubic", "mrf", "ours"]
    by = {r.method: r for r in rows}
    assert by["ours"].rmse_255 < by["bicubic"].rmse_255
    assert all(r.rmse_255 >= 0 for r in rows)
    assert read_report(tmp_path / "r.jsonl") == rows
    assert "ours" in (tmp_path / "t.txt").read_text()


def test_bad_scene_is_recorded_and_run_continues(tmp_path):
    gt, img = make_synthetic_scene(32)
    _write_scene(tmp_path, "good", gt, img)
    (tmp_path / "broken").mkdir()
    (tmp_path / "broken" / "depth.pgm").write_bytes(b"junk")
    rows = run_benchmark(tmp_path, [2], ["bicubic"])
    errors = [r for r in rows if r.error]
    assert len(errors) == 1 and errors[0].scene == "broken"
    assert any(r.scene == "good" and r.error is None for r in rows)
    assert "! broken" in format_table(rows)


def test_results_sorted_and_report_deterministic(tmp_path):
    scenes = {"b": make_synthetic_scene(32, seed=1), "a": make_synthetic_scene(32, seed=2)}
    kw = dict(scenes=scenes, timing=False)
    run_benchmark(None, [4, 2], ["bicubic", "mrf"], report_path=tmp_path / "1.jsonl", **kw)
    rows = run_benchmark(None, [4, 2], ["bicubic", "mrf"], report_path=tmp_path / "2.jsonl", **kw)
    assert [(r.scene, r.factor) for r in rows] == sorted((r.scene, r.factor) for r in rows)
    assert (tmp_path / "1.jsonl").read_bytes() == (tmp_path / "2.jsonl").read_bytes()


def test_every_method_sees_the_same_input():
    scenes = {"s": make_synthetic_scene(32)}
    cfg = SolverConfig(max_iters=1)
    a = run_benchmark(None, [4], ["bicubic"], cfg, scenes=scenes, timing=False)
    b = run_benchmark(None, [4], ["mrf", "bicubic"], cfg, scenes=scenes, timing=False)
    assert a[0].rmse_255 == [r for r in b if r.method == "bicubic"][0].rmse_255
