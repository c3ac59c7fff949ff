import json

import numpy as np
import pytest

from weaklabel.cli import main
from weaklabel.formats import dump_json, load_json
from weaklabel.tensorio import write_wlt1


def _run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def _peak_tensor(path):
    m = np.zeros((8, 8), dtype=np.float32)
    m[2, 2] = 1.0
    m[6, 7] = 0.55
    write_wlt1(path, m)


def test_peaks_single_file(tmp_path, capsys):
    tensor = tmp_path / "t.wlt1"
    _peak_tensor(tensor)
    out = tmp_path / "peaks.json"
    code, _, err = _run(
        capsys,
        ["peaks", "--tensor", str(tensor), "--image-w", "8", "--image-h", "8",
         "--kernel", "4", "--tau", "0.9", "--out", str(out)],
    )
    assert code == 0, err
    peaks = load_json(out)
    assert peaks == [{"col": 2, "map_index": 0, "row": 2, "value": 1.0}]


def test_peaks_single_requires_image_size(tmp_path, capsys):
    tensor = tmp_path / "t.wlt1"
    _peak_tensor(tensor)
    code, _, err = _run(capsys, ["peaks", "--tensor", str(tensor)])
    assert code == 2
    assert "--image-w" in err


def test_peaks_stdout_when_no_out(tmp_path, capsys):
    tensor = tmp_path / "t.wlt1"
    _peak_tensor(tensor)
    code, out, _ = _run(
        capsys,
        ["peaks", "--tensor", str(tensor), "--image-w", "8", "--image-h", "8",
         "--kernel", "4", "--tau", "0.9"],
    )
    assert code == 0
    assert json.loads(out)[0]["value"] == 1.0


def test_prompts_single_file(tmp_path, capsys):
    semantic = tmp_path / "sem.json"
    instance = tmp_path / "inst.json"
    dump_json(semantic, [{"map_index": 0, "row": 4, "col": 6, "value": 0.95}])
    dump_json(
        instance,
        [
            {"map_index": 0, "row": 10, "col": 10, "value": 0.99},
            {"map_index": 0, "row": 11, "col": 10, "value": 0.93},
        ],
    )
    out = tmp_path / "prompts.json"
    code, _, err = _run(
        capsys,
        ["prompts", "--peaks-semantic", str(semantic), "--peaks-instance", str(instance),
         "--grid-s", "2", "--image-w", "64", "--image-h", "64",
         "--cluster-radius", "4", "--out", str(out)],
    )
    assert code == 0, err
    prompts = load_json(out)
    kinds = [p["kind"] for p in prompts]
    assert kinds == ["spatial"] * 4 + ["semantic", "instance"]
    assert {"kind": "instance", "value": 0.99, "x": 10.0, "y": 10.0} in prompts


def test_pgt_single_file_with_flags(tmp_path, capsys):
    boxes = tmp_path / "boxes.json"
    dump_json(
        boxes,
        [
            {"label": 1, "x1": 0, "y1": 0, "x2": 20, "y2": 20, "score": 0.9},
            {"label": 1, "x1": 0.5, "y1": 0.5, "x2": 20.5, "y2": 20.5, "score": 0.6},
            {"label": 1, "x1": 100, "y1": 100, "x2": 110, "y2": 110, "score": 0.1},
        ],
    )
    out = tmp_path / "pgt.json"
    code, _, _ = _run(capsys, ["pgt", "--boxes", str(boxes), "--labels", "1", "--out", str(out)])
    assert code == 0
    got = load_json(out)
    assert len(got) == 1 and got[0]["fallback"] is True

    code, _, _ = _run(
        capsys,
        ["pgt", "--boxes", str(boxes), "--labels", "1", "--no-fallback", "--out", str(out)],
    )
    assert code == 0
    assert load_json(out) == []

    code, _, _ = _run(
        capsys, ["pgt", "--boxes", str(boxes), "--labels", "1", "--top1", "--out", str(out)]
    )
    assert code == 0
    got = load_json(out)
    assert len(got) == 1 and got[0]["x1"] == 0 and got[0]["normalized_score"] == 1.0


def test_dropmask_roi_single(tmp_path, capsys):
    records = tmp_path / "records.json"
    dump_json(
        records,
        [
            {"cls_loss": 0.5, "reg_loss": 0.2, "is_positive": True},
            {"cls_loss": 5.0, "reg_loss": 0.2, "is_positive": True},
            {"cls_loss": 1.0, "reg_loss": 3.0, "is_positive": False},
        ],
    )
    code, out, _ = _run(capsys, ["dropmask-roi", "--records", str(records)])
    assert code == 0
    got = json.loads(out)
    assert got["mask"] == [1, 0, 0]
    assert got["masked_loss"] == pytest.approx(0.5 + 0.2)


def test_dropmask_query_single(tmp_path, capsys):
    records = tmp_path / "records.json"
    dump_json(
        records,
        [
            {"cls_loss": float(v), "is_foreground": True, "box_loss": 1.0, "iou_loss": 1.0}
            for v in range(1, 11)
        ],
    )
    code, out, _ = _run(
        capsys, ["dropmask-query", "--records", str(records), "--percentile", "90"]
    )
    assert code == 0
    got = json.loads(out)
    assert got["mask"] == [1] * 9 + [0]
    assert got["kept"] == 9


def test_loss_stats_single_with_explicit_flags(tmp_path, capsys):
    records = tmp_path / "records.json"
    dump_json(
        records,
        [
            {"cls_loss": 0.0, "error": False},
            {"cls_loss": 1.0, "error": True},
        ],
    )
    code, out, _ = _run(
        capsys, ["loss-stats", "--records", str(records), "--field", "cls", "--bins", "2"]
    )
    assert code == 0
    got = json.loads(out)
    assert [b["count"] for b in got["bins"]] == [1, 1]
    assert got["bins"][1]["error_rate"] == 1.0


def test_loss_stats_single_with_pgt_matching(tmp_path, capsys):
    records = tmp_path / "records.json"
    gt = tmp_path / "gt.json"
    dump_json(
        records,
        [
            {"cls_loss": 0.1, "pgt": {"label": 0, "x1": 0, "y1": 0, "x2": 10, "y2": 10}},
            {"cls_loss": 2.0, "pgt": {"label": 0, "x1": 50, "y1": 50, "x2": 60, "y2": 60}},
        ],
    )
    dump_json(gt, [{"label": 0, "x1": 0, "y1": 0, "x2": 10, "y2": 10}])
    code, out, _ = _run(
        capsys,
        ["loss-stats", "--records", str(records), "--field", "cls", "--bins", "2",
         "--gt", str(gt), "--iou-thresh", "0.7"],
    )
    assert code == 0
    got = json.loads(out)
    assert got["bins"][0]["error_rate"] == 0.0
    assert got["bins"][1]["error_rate"] == 1.0


def test_eval_subcommands(tmp_path, capsys):
    gt = tmp_path / "gt.json"
    dump_json(gt, {"img": [{"label": 0, "x1": 0, "y1": 0, "x2": 10, "y2": 10}]})
    props = tmp_path / "props.json"
    dump_json(props, {"img": [{"x1": 0, "y1": 0, "x2": 10, "y2": 10}]})
    code, out, _ = _run(
        capsys, ["eval-recall", "--proposals", str(props), "--gt", str(gt), "--iou", "0.5,0.9"]
    )
    assert code == 0
    reports = json.loads(out)
    assert [r["recall"] for r in reports] == [1.0, 1.0]
    assert reports[0]["avg_proposals_per_image"] == 1.0

    dets = tmp_path / "dets.json"
    dump_json(dets, {"img": [{"label": 0, "x1": 0, "y1": 0, "x2": 10, "y2": 10, "score": 0.9}]})
    code, out, _ = _run(capsys, ["eval-corloc", "--dets", str(dets), "--gt", str(gt)])
    assert code == 0
    assert json.loads(out)["corloc"] == 1.0

    pgt = tmp_path / "pgt.json"
    dump_json(pgt, {"img": [{"label": 0, "x1": 0, "y1": 0, "x2": 10, "y2": 10}]})
    code, out, _ = _run(capsys, ["eval-pgt", "--pgt", str(pgt), "--gt", str(gt), "--iou", "0.7"])
    assert code == 0
    assert json.loads(out) == {"error_rate": 0.0, "total": 1}


def test_sim_single(tmp_path, capsys):
    feats = tmp_path / "feats.wlt1"
    rng = np.random.default_rng(0)
    write_wlt1(feats, rng.standard_normal((30, 6)).astype(np.float32))
    code, out, _ = _run(
        capsys, ["sim", "--features", str(feats), "--sample", "10", "--seed", "0"]
    )
    assert code == 0
    got = json.loads(out)
    assert got["sample_size"] == 10
    assert sum(got["histogram"]["counts"]) == 90
    assert "matrix" not in got

    code, out, _ = _run(
        capsys,
        ["sim", "--features", str(feats), "--sample", "5", "--seed", "0",
         "--include-matrix"],
    )
    assert code == 0
    matrix = json.loads(out)["matrix"]
    assert len(matrix) == 5 and all(len(row) == 5 for row in matrix)
    assert all(matrix[i][i] == 1.0 for i in range(5))


def test_config_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "config.json"
    dump_json(cfg, {"tau_o": 1.5})
    code, _, err = _run(capsys, ["pgt", "--boxes", "x.json", "--config", str(cfg)])
    assert code == 2
    assert "tau_o" in err


def test_missing_required_input_exit_code(tmp_path, capsys):
    code, _, err = _run(capsys, ["pgt"])
    assert code == 2
    assert "--boxes" in err


def test_missing_file_is_reported(tmp_path, capsys):
    code, _, err = _run(capsys, ["pgt", "--boxes", str(tmp_path / "nope.json")])
    assert code == 1
    assert "error" in err


def test_config_file_plus_flag_override(tmp_path, capsys):
    tensor = tmp_path / "t.wlt1"
    _peak_tensor(tensor)
    cfg = tmp_path / "config.json"
    dump_json(cfg, {"kernel": 4, "tau": 0.99})
    out = tmp_path / "peaks.json"
    # flag --tau 0.5 overrides config tau 0.99; kernel 4 comes from the file
    code, _, _ = _run(
        capsys,
        ["peaks", "--tensor", str(tensor), "--image-w", "8", "--image-h", "8",
         "--config", str(cfg), "--tau", "0.5", "--out", str(out)],
    )
    assert code == 0
    values = [p["value"] for p in load_json(out)]
    assert values == [1.0, float(np.float32(0.55))]
