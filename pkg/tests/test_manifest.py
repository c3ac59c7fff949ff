import pytest

from weaklabel.formats import dump_json
from weaklabel.manifest import Manifest, ManifestError, load_manifest


def _write(tmp_path, entries):
    path = tmp_path / "manifest.json"
    dump_json(path, {"entries": entries})
    return path


def test_load_valid_manifest(tmp_path):
    path = _write(
        tmp_path,
        [
            {
                "image_id": "a",
                "image_width": 100,
                "image_height": 80,
                "tensor_paths": {"coarse_cam": "a/cam.wlt1"},
                "gt_path": "a/gt.json",
                "labels": [0, 2],
            },
            {"image_id": "b", "image_width": 64, "image_height": 64},
        ],
    )
    m = load_manifest(path)
    assert isinstance(m, Manifest)
    assert [e.image_id for e in m.entries] == ["a", "b"]
    # relative paths resolve against the manifest directory
    assert m.entries[0].tensor_paths["coarse_cam"] == (tmp_path / "a/cam.wlt1").resolve()
    assert m.entries[0].labels == (0, 2)
    assert m.entries[1].gt_path is None


def test_duplicate_image_ids_rejected(tmp_path):
    path = _write(
        tmp_path,
        [
            {"image_id": "a", "image_width": 10, "image_height": 10},
            {"image_id": "a", "image_width": 10, "image_height": 10},
        ],
    )
    with pytest.raises(ManifestError, match="duplicate"):
        load_manifest(path)


def test_bad_dimensions_rejected(tmp_path):
    path = _write(tmp_path, [{"image_id": "a", "image_width": 0, "image_height": 10}])
    with pytest.raises(ManifestError, match="image_width"):
        load_manifest(path)


def test_unknown_tensor_kind_rejected(tmp_path):
    path = _write(
        tmp_path,
        [
            {
                "image_id": "a",
                "image_width": 4,
                "image_height": 4,
                "tensor_paths": {"mystery": "x.wlt1"},
            }
        ],
    )
    with pytest.raises(ManifestError, match="mystery"):
        load_manifest(path)


def test_errors_are_collected_not_fail_fast(tmp_path):
    path = _write(
        tmp_path,
        [
            {"image_id": "a", "image_width": -1, "image_height": 10},
            {"image_id": "b", "image_width": 10, "image_height": 10, "labels": ["x"]},
        ],
    )
    with pytest.raises(ManifestError) as exc:
        load_manifest(path)
    message = str(exc.value)
    assert "image_width" in message and "labels" in message


def test_empty_manifest_is_valid(tmp_path):
    m = load_manifest(_write(tmp_path, []))
    assert m.entries == ()


def test_not_an_object_rejected(tmp_path):
    path = tmp_path / "bad.json"
    dump_json(path, [1, 2, 3])
    with pytest.raises(ManifestError, match="entries"):
        load_manifest(path)
