"""Experiment driver tests: sampling, row bookkeeping, serialization."""

import csv
import importlib.resources
import json
from pathlib import Path

import numpy as np
import pytest

import passense as ps
from passense import baselines, experiments, fim, optimize
from passense.errors import ConfigurationError
from passense.experiments import ExperimentConfig, dbm_to_watts


def test_dbm_conversion_exact_reference_points():
    assert dbm_to_watts(20.0) == 0.1
    assert dbm_to_watts(-80.0) == 1e-11
    assert dbm_to_watts(0.0) == 1e-3
    assert abs(dbm_to_watts(3.0) - 10 ** 0.3 / 1000) < 1e-18


def test_config_defaults_and_power_properties():
    config = ExperimentConfig()
    assert config.methods == ("pass-pso", "pass-fixed", "mimo-4x4")
    assert config.transmit_power_w == 0.1
    assert config.noise_power_w == 1e-11
    assert config.error_grid_m == (-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0)
    assert config.error_axes == ("x", "y")
    assert config.n_scenes == 200
    assert config.timing is False


def test_config_roundtrip(tmp_path):
    config = ExperimentConfig(seed=9, n_scenes=7, methods=("pass-fixed",))
    data = config.to_dict()
    clone = ExperimentConfig.from_dict(data)
    assert clone.seed == 9
    assert clone.n_scenes == 7
    assert clone.methods == ("pass-fixed",)
    assert clone.region_m == config.region_m
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data))
    again = ExperimentConfig.from_json(str(path))
    assert again.to_dict() == data


def test_config_rejects_unknown_and_invalid_keys(tmp_path):
    with pytest.raises(ConfigurationError, match="bogus"):
        ExperimentConfig.from_dict({"bogus": 1})
    with pytest.raises(ConfigurationError, match="n_waveguides"):
        ExperimentConfig.from_dict({"n_waveguides": "five"})
    with pytest.raises(ConfigurationError, match="methods"):
        ExperimentConfig.from_dict({"methods": ["warp-drive"]})
    missing = tmp_path / "nope.json"
    with pytest.raises(ConfigurationError, match="not found"):
        ExperimentConfig.from_json(str(missing))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigurationError, match="JSON"):
        ExperimentConfig.from_json(str(bad))
    as_list = tmp_path / "list.json"
    as_list.write_text("[1, 2]")
    with pytest.raises(ConfigurationError, match="object"):
        ExperimentConfig.from_json(str(as_list))


def test_parse_method():
    assert experiments.parse_method("pass-pso") == ("pass-pso", None)
    assert experiments.parse_method("pass-fixed") == ("pass-fixed", None)
    assert experiments.parse_method("mimo-2x2") == ("mimo", 2.0)
    assert experiments.parse_method("mimo-1.5x1.5") == ("mimo", 1.5)
    with pytest.raises(ConfigurationError):
        experiments.parse_method("mimo-2x3")
    with pytest.raises(ConfigurationError):
        experiments.parse_method("holography")


def test_build_geometry_tracks():
    config = ExperimentConfig()
    g = experiments.build_geometry(config)
    assert np.allclose(g.tx_y, [4.5, 9.5, 14.5, 19.5, 24.5])
    assert np.allclose(g.rx_y, [5.5, 10.5, 15.5, 20.5, 25.5])
    assert g.noise_power == 1e-11
    custom = ExperimentConfig(
        n_waveguides=2, tx_y_m=(1.0, 2.0), rx_y_m=(3.0, 4.0)
    )
    g2 = experiments.build_geometry(custom)
    assert np.array_equal(g2.tx_y, [1.0, 2.0])
    assert np.array_equal(g2.rx_y, [3.0, 4.0])
    with pytest.raises(ConfigurationError):
        ExperimentConfig(n_waveguides=3, tx_y_m=(1.0, 2.0))


def test_build_power_model_kinds():
    equal = experiments.build_power_model(ExperimentConfig())
    assert equal.kind == "equal"
    prop = experiments.build_power_model(ExperimentConfig(power_model="proportional"))
    assert prop.kind == "proportional"
    assert prop.n_pas == 4


def test_sample_scenes_determinism_and_constraints():
    config = ExperimentConfig(n_scenes=50)
    a = experiments.sample_scenes(config, 5)
    b = experiments.sample_scenes(config, 5)
    c = experiments.sample_scenes(config, 6)
    assert len(a) == 50
    for sa, sb in zip(a, b):
        assert np.array_equal(sa.positions, sb.positions)
        assert np.array_equal(sa.reflections, sb.reflections)
    assert not np.array_equal(a[0].positions, c[0].positions)
    for scene in a:
        assert np.all(scene.positions >= 0.0) and np.all(scene.positions <= 30.0)
        assert np.allclose(np.abs(scene.reflections), 1.0, rtol=0, atol=1e-13)
        gap = np.linalg.norm(scene.positions[0] - scene.positions[1])
        assert gap >= config.min_target_separation_m


def test_sample_scenes_statistics():
    config = ExperimentConfig(n_scenes=5000, n_targets=2)
    scenes = experiments.sample_scenes(config, 123)
    pts = np.concatenate([s.positions for s in scenes])
    assert abs(pts.mean() - 15.0) < 0.5


def test_result_row_formatting():
    row = experiments.ResultRow(
        method="pass-fixed",
        scene_id=3,
        seed=42,
        peb_m=np.float64(0.001953125),
        stage1_trace=1.5e-5,
        stage2_trace=None,
    )
    values = row.to_csv_values()
    assert values[0] == "pass-fixed"
    assert values[1] == "3"
    assert values[5] == "0.001953125"
    assert values[6] == "1.5e-05"
    assert values[7] == ""
    assert values[8] == "0.0"
    assert values[9] == "ok"
    assert len(values) == len(experiments.CSV_COLUMNS)


def _tiny_config(**overrides):
    params = dict(
        n_scenes=2,
        methods=("pass-fixed", "mimo-1x1"),
        seed=3,
        pso_particles=6,
        pso_iterations=5,
    )
    params.update(overrides)
    return ExperimentConfig(**params)


def test_cdf_rows_order_and_determinism():
    config = _tiny_config()
    rows = experiments.run_cdf_experiment(config)
    again = experiments.run_cdf_experiment(config)
    assert [r.to_csv_values() for r in rows] == [r.to_csv_values() for r in again]
    assert [(r.scene_id, r.method) for r in rows] == [
        (0, "pass-fixed"),
        (0, "mimo-1x1"),
        (1, "pass-fixed"),
        (1, "mimo-1x1"),
    ]
    for row in rows:
        assert row.status == "ok"
        assert row.peb_m > 0
        assert row.stage1_trace > 0
        assert row.stage2_trace > 0
        assert row.wall_s == 0.0
        assert row.axis == ""
        assert row.offset_m is None
    # row seeds derive from (seed, scene, method) keys
    assert rows[0].seed == experiments._row_seed(3, 2000, 0, 0)
    assert rows[3].seed == experiments._row_seed(3, 2000, 1, 1)


def test_cdf_fixed_method_matches_direct_evaluation():
    config = _tiny_config(methods=("pass-fixed",), n_scenes=1)
    rows = experiments.run_cdf_experiment(config)
    geometry = experiments.build_geometry(config)
    power = experiments.build_power_model(config)
    scene = experiments.sample_scenes(config, config.seed)[0]
    layout = baselines.fixed_uniform_layout(geometry)
    engine = fim.pass_engine(geometry, power, layout, scene, config.snapshots)
    iso = (config.transmit_power_w / 5) * np.eye(5, dtype=complex)
    assert rows[0].peb_m == engine.report(iso).peb_m
    assert rows[0].stage1_trace == engine.trace_objective(iso)
    assert rows[0].stage2_trace == rows[0].stage1_trace


def test_cdf_marks_unidentifiable_rows_and_conserves_rows():
    config = ExperimentConfig(
        n_waveguides=1,
        n_pas_per_waveguide=1,
        n_targets=1,
        n_scenes=3,
        methods=("pass-fixed",),
    )
    rows = experiments.run_cdf_experiment(config)
    assert len(rows) == 3
    for row in rows:
        assert row.status == "unidentifiable"
        assert row.peb_m is None
        assert row.to_csv_values()[5] == ""


def test_cdf_larger_aperture_does_not_hurt():
    config = _tiny_config(methods=("mimo-1x1", "mimo-4x4"), n_scenes=3)
    rows = experiments.run_cdf_experiment(config)
    small = [r.peb_m for r in rows if r.method == "mimo-1x1"]
    large = [r.peb_m for r in rows if r.method == "mimo-4x4"]
    assert np.median(large) <= np.median(small)


def test_timing_flag_populates_wall_clock():
    config = _tiny_config(methods=("pass-fixed",), n_scenes=1, timing=True)
    rows = experiments.run_cdf_experiment(config)
    assert rows[0].wall_s > 0.0


def test_robustness_rows_and_zero_offset_consistency():
    config = _tiny_config(
        methods=("pass-fixed",),
        error_grid_m=(-0.5, 0.0, 0.5),
        error_axes=("x",),
    )
    rows = experiments.run_robustness_experiment(config)
    assert [(r.axis, r.offset_m) for r in rows] == [
        ("x", -0.5),
        ("x", 0.0),
        ("x", 0.5),
    ]
    # a fixed design never reacts to the assumed scene, so the bound on the
    # true scene is flat across offsets
    pebs = [r.peb_m for r in rows]
    assert pebs[0] == pebs[1] == pebs[2]
    # zero offset equals a direct evaluation on the true scene
    geometry = experiments.build_geometry(config)
    power = experiments.build_power_model(config)
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 3000]))
    targets = np.asarray(config.robustness_targets_m)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=2)
    scene = ps.TargetScene(targets, np.exp(1j * phases))
    layout = baselines.fixed_uniform_layout(geometry)
    engine = fim.pass_engine(geometry, power, layout, scene, config.snapshots)
    iso = (config.transmit_power_w / 5) * np.eye(5, dtype=complex)
    assert rows[1].peb_m == engine.report(iso).peb_m


def test_robustness_pso_rows_share_one_design_across_axes():
    config = _tiny_config(
        methods=("pass-pso",),
        error_grid_m=(0.0, 1.0),
        error_axes=("x", "y"),
    )
    rows = experiments.run_robustness_experiment(config)
    by_key = {(r.axis, r.offset_m): r for r in rows}
    # the optimizer seed is fixed per method, so the two zero-offset rows
    # describe the same unperturbed design
    assert by_key[("x", 0.0)].peb_m == by_key[("y", 0.0)].peb_m
    # positions-only semantics: zero offset equals a direct swarm run on the
    # true scene evaluated under the isotropic waveform
    geometry = experiments.build_geometry(config)
    power_model = experiments.build_power_model(config)
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 3000]))
    targets = np.asarray(config.robustness_targets_m)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=2)
    scene = ps.TargetScene(targets, np.exp(1j * phases))
    seed = experiments._row_seed(config.seed, 4000, 0)
    layout = optimize.pso_optimize_positions(
        geometry,
        power_model,
        scene,
        experiments._pso_config(config, seed),
        config.transmit_power_w,
        config.snapshots,
    )
    engine = fim.pass_engine(geometry, power_model, layout, scene, config.snapshots)
    iso = (config.transmit_power_w / 5) * np.eye(5, dtype=complex)
    assert by_key[("x", 0.0)].peb_m == engine.report(iso).peb_m
    assert by_key[("x", 0.0)].stage1_trace == by_key[("x", 0.0)].stage2_trace


def test_robustness_determinism():
    config = _tiny_config(
        methods=("pass-fixed", "mimo-1x1"),
        error_grid_m=(0.0, 1.0),
        error_axes=("y",),
    )
    a = experiments.run_robustness_experiment(config)
    b = experiments.run_robustness_experiment(config)
    assert [r.to_csv_values() for r in a] == [r.to_csv_values() for r in b]
    assert len(a) == 4


def test_row_seed_keying_is_stable_and_distinct():
    s = experiments._row_seed(7, 2000, 0, 0)
    assert s == experiments._row_seed(7, 2000, 0, 0)
    others = {
        experiments._row_seed(7, 2000, 0, 1),
        experiments._row_seed(7, 2000, 1, 0),
        experiments._row_seed(8, 2000, 0, 0),
        experiments._row_seed(7, 4000, 0, 0),
    }
    assert s not in others
    assert len(others) == 4


def test_csv_and_manifest_writing(tmp_path):
    config = _tiny_config(methods=("pass-fixed",), n_scenes=2)
    rows = experiments.run_cdf_experiment(config)
    csv_path = tmp_path / "rows.csv"
    experiments.write_rows_csv(rows, str(csv_path))
    with open(csv_path, newline="") as fh:
        parsed = list(csv.reader(fh))
    assert parsed[0] == experiments.CSV_COLUMNS
    assert len(parsed) == 3
    assert parsed[1][0] == "pass-fixed"
    assert float(parsed[1][5]) == rows[0].peb_m
    manifest_path = tmp_path / "run_manifest.json"
    experiments.write_manifest(
        str(manifest_path), "cdf", config, "rows.csv", len(rows)
    )
    manifest = json.loads(manifest_path.read_text())
    assert manifest["experiment"] == "cdf"
    assert manifest["csv"] == "rows.csv"
    assert manifest["n_rows"] == 2
    assert manifest["methods"] == ["pass-fixed"]
    assert ExperimentConfig.from_dict(manifest["config"]).seed == config.seed


def test_docs_config_example_and_schema_in_sync():
    # the committed example must stay loadable and equal to the defaults,
    # and the docs copy of the schema must match the packaged one
    docs = Path(__file__).resolve().parent.parent / "docs"
    example = json.loads((docs / "default_config.json").read_text())
    assert ExperimentConfig.from_dict(example) == ExperimentConfig()
    packaged = (
        importlib.resources.files("passense.schemas")
        .joinpath("config.schema.json")
        .read_text()
    )
    assert (docs / "config.schema.json").read_text() == packaged
