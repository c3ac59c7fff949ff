from weaklabel.config import RunConfig, validate_config


def test_empty_config_yields_defaults():
    cfg, errors = validate_config({}, {})
    assert errors == []
    assert cfg.kernel == 128
    assert cfg.tau == 0.9
    assert cfg.grid_s == 32
    assert cfg.tau_s == 0.3
    assert cfg.tau_o == 0.85
    assert cfg.tau_cls == 4.0
    assert cfg.tau_reg == 1.0
    assert cfg.percentile == 90.0
    assert cfg.lam == 1.0
    assert cfg.iou_thresholds == (0.5, 0.75, 0.9)
    assert cfg.effective_cluster_radius == 64.0
    assert all(v == "default" for v in cfg.provenance.values())


def test_out_of_range_collects_errors():
    cfg, errors = validate_config({"tau_o": 1.5, "kernel": 0, "percentile": 0}, {})
    fields = {e.split(":")[0] for e in errors}
    assert fields == {"tau_o", "kernel", "percentile"}
    # invalid values fall back to defaults so the config stays usable
    assert cfg.tau_o == 0.85 and cfg.kernel == 128


def test_flag_overrides_config_file():
    cfg, errors = validate_config({"kernel": 64, "tau": 0.8}, {"kernel": 32})
    assert errors == []
    assert cfg.kernel == 32
    assert cfg.tau == 0.8
    assert cfg.provenance["kernel"] == "flag"
    assert cfg.provenance["tau"] == "config-file"
    assert cfg.provenance["grid_s"] == "default"


def test_unknown_field_reported():
    _, errors = validate_config({"kernell": 12}, {})
    assert any("kernell" in e for e in errors)


def test_dashed_keys_and_lambda_alias():
    cfg, errors = validate_config({"tau-s": 0.2, "lambda": 0.5, "grid-s": 16}, {})
    assert errors == []
    assert cfg.tau_s == 0.2
    assert cfg.lam == 0.5
    assert cfg.grid_s == 16


def test_integer_like_floats_coerced():
    cfg, errors = validate_config({"kernel": 64.0, "bins": 10.0}, {})
    assert errors == []
    assert cfg.kernel == 64 and isinstance(cfg.kernel, int)
    assert cfg.bins == 10


def test_cluster_radius_derived_from_kernel():
    cfg, _ = validate_config({"kernel": 32}, {})
    assert cfg.cluster_radius is None
    assert cfg.effective_cluster_radius == 16.0
    cfg, _ = validate_config({"kernel": 32, "cluster_radius": 5.0}, {})
    assert cfg.effective_cluster_radius == 5.0


def test_none_flags_do_not_override():
    cfg, _ = validate_config({"tau": 0.7}, {"tau": None})
    assert cfg.tau == 0.7


def test_to_dict_is_json_friendly():
    cfg, _ = validate_config({}, {})
    d = cfg.to_dict()
    assert d["iou_thresholds"] == [0.5, 0.75, 0.9]
    assert "provenance" not in d


def test_runconfig_direct_defaults_match():
    assert RunConfig().kernel == 128
