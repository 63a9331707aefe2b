import dataclasses

import numpy as np
import pandas as pd
import pytest

import pipeline.stages as stages
from config.profiles import PROFILES, PipelineConfig, deep_merge
from core.dataset_io import _load_json, read_manifest as read_dataset_manifest
from core.errors import MissingArtifactError
from core.rng import Rng
from core.types import DeformationMode, MechanicalProps
from neuralnet.regressor import Normalizer
from pipeline.manifest import is_cached, read_manifest, write_manifest
from pipeline.report import build_report, matched_fraction
from run import main

TINY = {
    "seed": 11,
    "phasefield": {"n_initial_conditions": 2, "n_snapshots": 3, "snapshot_interval": 5, "grid_size": 8},
    "cpfem": {"n_images": 6, "strain_increment": 1.0e-3, "max_strain": 3.0e-3},
    "gan": {"iterations": 12, "batch_size": 2, "cycle": 3, "checkpoint_every": 6},
    "cnn": {"iterations": 6, "split": [2, 2, 2], "hidden": 4},
    "search": {"n_iter": 20, "heatmap_resolution": 3, "compare_n_grid": [4, 9], "compare_repeats": 2,
               "reference_points": 30},
}


def tiny_config(out, **overrides):
    data = deep_merge(deep_merge(PROFILES["desk"], TINY), overrides)
    data["out"] = str(out)
    return PipelineConfig.from_dict(data, profile="desk")


@pytest.fixture(autouse=True)
def serial(monkeypatch):
    monkeypatch.setattr(stages, "MICROFORGE_THREADS", 1)


# --- Manifests ---

def test_manifest_cache_rules(tmp_path):
    (tmp_path / "a.txt").write_text("alpha")
    manifest = write_manifest(tmp_path, "demo", "h1", {"up": "x"}, ["a.txt", "absent.txt"], 0.5)
    assert [o["file"] for o in manifest.outputs] == ["a.txt"]
    assert is_cached(tmp_path, "h1", {"up": "x"}) is not None
    assert is_cached(tmp_path, "h2", {"up": "x"}) is None
    assert is_cached(tmp_path, "h1", {"up": "y"}) is None
    (tmp_path / "a.txt").write_text("changed")
    assert is_cached(tmp_path, "h1", {"up": "x"}) is None


def test_manifest_with_failures_is_never_cached(tmp_path):
    write_manifest(tmp_path, "demo", "h", {}, [], 0.0, failures=[{"ic": 1}])
    assert is_cached(tmp_path, "h", {}) is None


def test_downstream_stage_needs_upstream_manifest(tmp_path):
    with pytest.raises(MissingArtifactError):
        stages.run_fem_batch(tiny_config(tmp_path))


# --- Small helpers ---

def test_fem_subset():
    assert stages.fem_subset(5, 8, Rng(0)) == [0, 1, 2, 3, 4]
    subset = stages.fem_subset(50, 10, Rng(4).substream("fem/subset"))
    assert subset == sorted(set(subset)) and len(subset) == 10
    assert subset == stages.fem_subset(50, 10, Rng(4).substream("fem/subset"))


def test_labeled_images_require_every_mode():
    props = pd.DataFrame({"image_index": [0, 0, 1, 2, 2], "mode_code": [0, 2, 0, 0, 2]})
    modes = [DeformationMode.TensileX, DeformationMode.ShearX]
    assert stages.labeled_images(props, modes) == [0, 2]


def test_trace_slope():
    trace = pd.DataFrame({"iteration": np.arange(100), "loss": 5.0 - 0.1 * np.arange(100),
                          "phase": ["critic"] * 100})
    assert stages.trace_slope(trace) == pytest.approx(-0.1)
    assert np.isnan(stages.trace_slope(trace.iloc[:1]))


def test_compare_props_identical_results():
    norm = Normalizer(DeformationMode.TensileX, np.array([100.0, 0.05]), np.array([900.0, 0.4]))
    props = MechanicalProps(650.0, 0.21, DeformationMode.TensileX)
    table, limited = stages.compare_props(props, props, norm)
    assert not limited
    assert table["quantity"].tolist() == ["sigma_max_MPa", "eps_lim", "score"]
    assert table["rel_error"].tolist() == [0.0, 0.0, 0.0]


def test_compare_props_without_necking_checks_stress_only():
    norm = Normalizer(DeformationMode.ShearY, np.array([100.0, 0.05]), np.array([900.0, 0.4]))
    cnn = MechanicalProps(550.0, 0.2, DeformationMode.ShearY)
    fem = MechanicalProps(500.0, 0.6, DeformationMode.ShearY, necking_detected=False)
    table, limited = stages.compare_props(cnn, fem, norm)
    assert limited
    assert table["rel_error"].iloc[0] == pytest.approx(0.1)
    assert table["rel_error"].iloc[1:].isna().all()


def test_matched_fraction():
    fractions = pd.DataFrame({"image_index": [0, 1, 2, 3, 4],
                              "martensite_fraction": [0.10, 0.12, 0.50, 0.14, 0.095]})
    matched = matched_fraction(fractions, 0.11, tol=0.02)
    assert matched["image_index"].tolist() == [0, 1, 4]
    assert matched["fraction_gap"].max() <= 0.02
    assert matched_fraction(fractions.iloc[:0], 0.3).empty


def test_report_skeleton_on_empty_output(tmp_path):
    cfg = tiny_config(tmp_path)
    files, missing = build_report(cfg, tmp_path / "report")
    assert files == ["report.md"]
    assert "gen-dataset/fractions.csv" in missing and "verify/verify.csv" in missing
    text = (tmp_path / "report" / "report.md").read_text()
    assert text.startswith("# microforge report")
    assert "report is partial" in text


# --- Stages ---

def test_gen_dataset_and_cache(tmp_path):
    cfg = tiny_config(tmp_path)
    result = stages.run_gen_dataset(cfg)
    assert not result.cached
    assert result.summary == {"images": 6, "failed_ics": 0}
    manifest = read_dataset_manifest(result.stage_dir)
    assert manifest["count"] == 6 and len(manifest["images"]) == 6
    assert manifest["grid"] == {"width": 8, "height": 8}
    fractions = pd.read_csv(result.stage_dir / stages.FRACTIONS_FILE)
    assert fractions["snapshot"].tolist() == [1, 2, 3, 1, 2, 3]

    again = stages.run_gen_dataset(cfg)
    assert again.cached
    assert again.manifest.outputs == result.manifest.outputs


def test_fem_batch_resume_matches_full_run(tmp_path):
    cfg = tiny_config(tmp_path, cpfem={"modes": ["TensileX", "ShearY"], "n_images": 3}, cnn={"split": [1, 1, 1]})
    stages.run_gen_dataset(cfg)
    full = stages.run_fem_batch(cfg)
    props_path = full.stage_dir / "props.csv"
    reference = props_path.read_bytes()
    props = pd.read_csv(props_path)
    assert len(props) == 6
    assert props["mode"].tolist()[:2] == ["TensileX", "ShearY"]

    # drop the last pair and the table as an interrupted run would
    last = props.iloc[-1]
    (full.stage_dir / "pairs" / f"pair_{int(last.image_index):05d}_{last['mode']}.json").unlink()
    props_path.unlink()
    resumed = stages.run_fem_batch(cfg, resume=True)
    assert not resumed.cached
    assert props_path.read_bytes() == reference


def test_fem_batch_resume_reruns_truncated_pair(tmp_path):
    cfg = tiny_config(tmp_path, cpfem={"modes": ["TensileX", "ShearY"], "n_images": 3}, cnn={"split": [1, 1, 1]})
    stages.run_gen_dataset(cfg)
    full = stages.run_fem_batch(cfg)
    props_path = full.stage_dir / "props.csv"
    reference = props_path.read_bytes()

    pair = sorted((full.stage_dir / "pairs").glob("pair_*.json"))[0]
    pair.write_text(pair.read_text()[:40])
    assert _load_json(pair) is None
    resumed = stages.run_fem_batch(cfg, resume=True)
    assert not resumed.manifest.failures
    assert props_path.read_bytes() == reference
    assert _load_json(pair)["image_index"] >= 0
    assert not list((full.stage_dir / "pairs").glob("*.tmp"))


def run_through_search(cfg):
    for name in ("gen-dataset", "fem-batch", "train-gan", "train-cnn", "search"):
        stages.STAGES[name](cfg)


@pytest.mark.parametrize("necking", [True, False])
def test_verify_relative_errors_against_fem(tmp_path, monkeypatch, necking):
    cfg = tiny_config(tmp_path)
    run_through_search(cfg)
    predicted = {}

    def capture_predictions(image, models):
        props = real_predict(image, models)
        predicted.update(props)
        return props

    def fem_from_predictions(image, mode, materials, control):
        out = real_simulate(image, mode, materials, control)
        cnn = predicted[mode]
        if necking:
            return dataclasses.replace(out, props=cnn)
        return dataclasses.replace(out, props=MechanicalProps(cnn.sigma_max * 1.05, cnn.eps_lim * 3, mode, False))

    real_predict, real_simulate = stages.predicted_props, stages.simulate
    monkeypatch.setattr(stages, "predicted_props", capture_predictions)
    monkeypatch.setattr(stages, "simulate", fem_from_predictions)
    result = stages.run_verify(cfg)

    table = pd.read_csv(result.stage_dir / stages.VERIFY_FILE).set_index("quantity")
    assert result.summary["necking_detected"] is necking
    report = (result.stage_dir / "verify_report.md").read_text()
    if necking:
        assert table["rel_error"].fillna(0.0).max() <= 0.1
        assert "Necking was not detected" not in report
    else:
        assert table.loc["sigma_max_MPa", "rel_error"] == pytest.approx(0.05 / 1.05)
        assert table.loc[["eps_lim", "score"], "rel_error"].isna().all()
        assert "Necking was not detected" in report


def run_everything(out):
    cfg = tiny_config(out)
    return cfg, [fn(cfg) for fn in stages.STAGES.values()]


def test_tiny_pipeline_end_to_end(tmp_path):
    cfg, results = run_everything(tmp_path / "a")
    assert [r.stage for r in results] == list(stages.STAGES)
    assert not any(r.manifest.failures for r in results)

    cnn_dir = stages.stage_dir(cfg, "train-cnn")
    split = _load_json(cnn_dir / stages.SPLIT_FILE)
    assert sorted(split["train"] + split["val"] + split["test"]) == list(range(6))
    for mode in DeformationMode:
        assert (cnn_dir / f"regressor_{mode.name}.mfnn").exists()

    summary = _load_json(stages.stage_dir(cfg, "search") / stages.SUMMARY_FILE)
    assert set(summary["predicted"]) == {m.name for m in DeformationMode}
    assert "sigma_max" in (stages.stage_dir(cfg, "search") / "search_report.md").read_text()

    verify = pd.read_csv(stages.stage_dir(cfg, "verify") / stages.VERIFY_FILE)
    assert verify["quantity"].tolist() == ["sigma_max_MPa", "eps_lim", "score"]

    report = results[-1]
    assert report.summary["missing"] == []
    report_dir = report.stage_dir
    for mode in DeformationMode:
        assert (report_dir / f"scatter_{mode.name}.csv").exists()
    assert (report_dir / "matched.csv").exists() and (report_dir / "latent_fraction.csv").exists()

    # every stage is a cache hit on rerun
    assert all(fn(cfg).cached for fn in stages.STAGES.values())


@pytest.mark.slow
def test_tiny_pipeline_is_deterministic(tmp_path):
    _, first = run_everything(tmp_path / "a")
    _, second = run_everything(tmp_path / "b")
    for a, b in zip(first, second):
        assert a.manifest.outputs == b.manifest.outputs, a.stage


def test_train_gan_resume_finishes_schedule(tmp_path):
    cfg = tiny_config(tmp_path)
    stages.run_gen_dataset(cfg)
    short = tiny_config(tmp_path, gan={"iterations": 6})
    stages.run_train_gan(short)
    resumed = stages.run_train_gan(cfg, resume=True)
    trace = pd.read_csv(resumed.stage_dir / stages.GAN_TRACE_FILE)
    assert trace["iteration"].tolist() == list(range(12))
    assert resumed.summary["iterations"] == 12


# --- CLI ---

def test_cli_exit_codes(tmp_path, capsys):
    assert main(["train-gan", "--out", str(tmp_path)]) == 4
    assert "[ERROR] MissingArtifactError" in capsys.readouterr().out
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2")
    assert main(["gen-dataset", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert main(["search", "--config", str(tmp_path / "nope.json")]) == 4


def test_cli_report_on_empty_output(tmp_path, capsys):
    assert main(["report", "--out", str(tmp_path), "--seed", "5"]) == 0
    out = capsys.readouterr().out
    assert "[OK] report" in out
    assert (tmp_path / "report" / "report.md").exists()
    assert read_manifest(tmp_path / "report").stage == "report"
