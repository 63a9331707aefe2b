"""
Pipeline stages. Each stage reads its upstream stage directories, writes its
own directory under the output root and finishes with run_manifest.json.

    gen-dataset      -> dataset/   phase-field snapshots in dataset format
    fem-batch        -> fem/       props.csv, per-pair curves (resumable)
    train-gan        -> gan/       generator / critic checkpoints, loss trace
    train-cnn        -> cnn/       one regressor per mode, predictions, R^2
    search           -> search/    random-search trace, best image, heatmaps
    verify           -> verify/    FEM check of the search winner
    compare-sampling -> compare/   random vs space-filling errors
    report           -> report/    markdown + CSV + figures over whatever exists
"""
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from config.profiles import config_hash
from config.settings import (
    CHECKPOINT_SUFFIX, COMPARE_FILE, DATASET_MANIFEST, DOMAIN_LENGTH_UM, IMAGE_SIZE,
    MICROFORGE_THREADS, PROPS_FILE, SEARCH_TRACE_FILE,
)
from core.dataset_io import _load_json, _save_json, image_filename, read_dataset, write_dataset, write_ppm
from core.errors import DivergenceError, MicroforgeError, MissingArtifactError, UndefinedMetricError
from core.labeling import martensite_fraction, one_hot
from core.rng import Rng
from core.types import DeformationMode
from cpfem.material import load_materials
from cpfem.solver import SimulationControl, simulate
from neuralnet.checkpoint import load_checkpoint, save_checkpoint
from neuralnet.regressor import CnnConfig, predict_batch, r_squared, split_indices, train_cnn
from neuralnet.wgan import WganConfig, save_wgan, train_wgan
from phasefield.params import PhaseFieldParams
from phasefield.solver import make_initial_conditions, run_trajectory
from pipeline.manifest import is_cached, read_manifest, require_manifest, write_manifest
from search.random_search import random_search
from search.sampling import compare_sampling, heatmap_scores
from search.scoring import load_models, predicted_props, regressor_filename, score

logger = logging.getLogger(__name__)

STAGE_DIRS = {
    "gen-dataset": "dataset",
    "fem-batch": "fem",
    "train-gan": "gan",
    "train-cnn": "cnn",
    "search": "search",
    "verify": "verify",
    "compare-sampling": "compare",
    "report": "report",
}

FRACTIONS_FILE = "fractions.csv"
TRAJECTORY_FILE = "trajectories.csv"
SUBSET_FILE = "subset.csv"
GAN_TRACE_FILE = "gan_trace.csv"
SPLIT_FILE = "split.json"
R2_FILE = "r2.csv"
SUMMARY_FILE = "search_summary.json"
VERIFY_FILE = "verify.csv"

FRACTION_COLUMNS = ["image_index", "ic", "snapshot", "martensite_fraction"]
PROPS_COLUMNS = ["image_index", "mode_code", "mode", "sigma_max_MPa", "eps_lim", "necking_detected",
                 "n_steps", "n_cutbacks", "martensite_fraction"]
PREDICTION_COLUMNS = ["split", "image_index", "sigma_max_fem", "eps_lim_fem", "sigma_max_cnn", "eps_lim_cnn"]
VERIFY_COLUMNS = ["quantity", "cnn", "fem", "rel_error"]


@dataclass
class StageResult:
    stage: str
    stage_dir: Path
    cached: bool
    manifest: object
    summary: dict = field(default_factory=dict)


# --- Helpers ---

def stage_dir(cfg, stage):
    return cfg.out_dir / STAGE_DIRS[stage]


def _upstream_hash(cfg, stage):
    return require_manifest(stage_dir(cfg, stage), stage).output_hash()


def _check_cache(stage, directory, cfg_hash, inputs, force):
    if force:
        return None
    manifest = is_cached(directory, cfg_hash, inputs)
    if manifest is not None:
        logger.info("%s: cache hit (%s)", stage, cfg_hash[:12])
        return StageResult(stage, directory, True, manifest, dict(manifest.extra))
    return None


def _imap(fn, jobs):
    """Yield fn(job) in job order; fans out to a process pool when allowed."""
    jobs = list(jobs)
    workers = min(MICROFORGE_THREADS, len(jobs))
    if workers <= 1:
        for job in jobs:
            yield fn(job)
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(fn, jobs)


def _domain_length(grid_size):
    return DOMAIN_LENGTH_UM * grid_size / IMAGE_SIZE


def phasefield_params(cfg):
    pf = cfg.phasefield
    return PhaseFieldParams(eps_a=pf.eps_a, eps_b=pf.eps_b, grid_size=pf.grid_size,
                            domain_length_um=_domain_length(pf.grid_size))


def simulation_control(cfg):
    fem = cfg.cpfem
    return SimulationControl(strain_increment=fem.strain_increment, max_strain=fem.max_strain,
                             field_interval=fem.field_interval,
                             domain_length_um=_domain_length(cfg.phasefield.grid_size))


def _write_csv(df, path):
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False)
    return path


# --- gen-dataset ---

def _phasefield_job(job):
    ic, params, n_snapshots, interval = job
    try:
        run = run_trajectory(ic, params, n_snapshots, interval)
    except DivergenceError as exc:
        return ic.index, [], None, str(exc)
    return ic.index, run.images, run.trajectory, None


def run_gen_dataset(cfg, resume=False, force=False):
    stage = "gen-dataset"
    directory = stage_dir(cfg, stage)
    cfg_hash = config_hash(cfg.stage_dict("phasefield"))
    cached = _check_cache(stage, directory, cfg_hash, {}, force)
    if cached:
        return cached

    start = time.time()
    pf = cfg.phasefield
    params = phasefield_params(cfg)
    ics = make_initial_conditions(pf.n_initial_conditions, Rng(cfg.seed).substream("dataset"), pf.grid_size)
    jobs = [(ic, params, pf.n_snapshots, pf.snapshot_interval) for ic in ics]

    images, rows, trajectories, failures = [], [], [], []
    for index, snapshots, trajectory, error in _imap(_phasefield_job, jobs):
        if error:
            logger.warning("IC %d diverged: %s", index, error)
            failures.append({"ic": index, "error": error})
            continue
        for k, image in enumerate(snapshots):
            rows.append((len(images), index, k + 1, martensite_fraction(image)))
            images.append(image)
        trajectories.append(trajectory.assign(ic=index))
        logger.info("IC %d/%d done", index + 1, len(ics))

    write_dataset(directory, images, cfg.seed, extra={
        "initial_conditions": [ic.to_dict() for ic in ics],
        "n_snapshots": pf.n_snapshots,
        "snapshot_interval": pf.snapshot_interval,
        "failures": failures,
    })
    _write_csv(pd.DataFrame(rows, columns=FRACTION_COLUMNS), directory / FRACTIONS_FILE)
    if trajectories:
        _write_csv(pd.concat(trajectories, ignore_index=True), directory / TRAJECTORY_FILE)

    files = [image_filename(i) for i in range(len(images))]
    files += [DATASET_MANIFEST, FRACTIONS_FILE, TRAJECTORY_FILE]
    summary = {"images": len(images), "failed_ics": len(failures)}
    manifest = write_manifest(directory, stage, cfg_hash, {}, files, time.time() - start,
                              failures, extra={"seed": cfg.seed, **summary})
    return StageResult(stage, directory, False, manifest, summary)


# --- fem-batch ---

def fem_subset(n_total, n_images, rng):
    """Seeded subsample of dataset indices labelled by FEM (sorted)."""
    if n_images >= n_total:
        return list(range(n_total))
    return sorted(int(i) for i in rng.permutation(n_total)[:n_images])


def _pair_stem(index, mode):
    return f"{index:05d}_{DeformationMode.parse(mode).name}"


def _fem_job(job):
    index, image, mode, overrides, control = job
    try:
        out = simulate(image, mode, load_materials(overrides), control)
    except MicroforgeError as exc:
        return index, int(mode), None, str(exc)
    return index, int(mode), {
        "props": out.props.as_row(),
        "n_steps": out.n_steps,
        "n_cutbacks": out.n_cutbacks,
        "curve": out.curve,
        "phase_stress": out.phase_stress,
        "fields": out.fields,
    }, None


def _store_pair(directory, index, mode, result, fraction):
    stem = _pair_stem(index, mode)
    _write_csv(result["curve"], directory / "curves" / f"curve_{stem}.csv")
    _write_csv(result["phase_stress"], directory / "curves" / f"phase_stress_{stem}.csv")
    files = [f"curves/curve_{stem}.csv", f"curves/phase_stress_{stem}.csv"]
    if result["fields"] is not None:
        np.save(directory / "curves" / f"fields_{stem}.npy", result["fields"])
        files.append(f"curves/fields_{stem}.npy")
    row = dict(result["props"], image_index=index, mode=DeformationMode(mode).name,
               n_steps=result["n_steps"], n_cutbacks=result["n_cutbacks"],
               martensite_fraction=fraction, files=files)
    _save_json(directory / "pairs" / f"pair_{stem}.json", row)
    return row


def run_fem_batch(cfg, resume=False, force=False):
    stage = "fem-batch"
    directory = stage_dir(cfg, stage)
    cfg_hash = config_hash(cfg.stage_dict("cpfem", "phasefield"))
    inputs = {"gen-dataset": _upstream_hash(cfg, "gen-dataset")}
    cached = _check_cache(stage, directory, cfg_hash, inputs, force)
    if cached:
        return cached

    start = time.time()
    images = read_dataset(stage_dir(cfg, "gen-dataset"))
    subset = fem_subset(len(images), cfg.cpfem.n_images, Rng(cfg.seed).substream("fem/subset"))
    _write_csv(pd.DataFrame({"image_index": subset}), directory / SUBSET_FILE)
    control = simulation_control(cfg)
    modes = cfg.cpfem.mode_list

    rows, jobs = [], []
    for index in subset:
        for mode in modes:
            pair = directory / "pairs" / f"pair_{_pair_stem(index, mode)}.json"
            done = _load_json(pair) if resume else None
            if done is not None:
                rows.append(done)
                continue
            jobs.append((index, images[index], mode, cfg.cpfem.materials, control))
    if rows:
        logger.info("resuming: %d pairs already done, %d to run", len(rows), len(jobs))

    failures = []
    for index, mode, result, error in _imap(_fem_job, jobs):
        name = DeformationMode(mode).name
        if error:
            logger.warning("image %d %s failed: %s", index, name, error)
            failures.append({"image_index": index, "mode": name, "error": error})
            continue
        rows.append(_store_pair(directory, index, mode, result, martensite_fraction(images[index])))
        logger.info("image %d %s: sigma_max %.1f MPa, eps_lim %.4f", index, name,
                    result["props"]["sigma_max_MPa"], result["props"]["eps_lim"])

    props = pd.DataFrame(rows)
    if props.empty:
        props = pd.DataFrame(columns=PROPS_COLUMNS)
    props = props.sort_values(["image_index", "mode_code"])[PROPS_COLUMNS].reset_index(drop=True)
    _write_csv(props, directory / PROPS_FILE)

    files = [PROPS_FILE, SUBSET_FILE]
    for row in rows:
        files += row["files"]
        files.append(f"pairs/pair_{_pair_stem(row['image_index'], row['mode_code'])}.json")
    summary = {"pairs": len(props), "failed_pairs": len(failures),
               "no_necking": int((~props["necking_detected"].astype(bool)).sum())}
    manifest = write_manifest(directory, stage, cfg_hash, inputs, files, time.time() - start,
                              failures, extra=summary)
    return StageResult(stage, directory, False, manifest, summary)


# --- train-gan ---

def wgan_config(cfg):
    gan = cfg.gan
    return WganConfig(iterations=gan.iterations, batch_size=gan.batch_size, cycle=gan.cycle,
                      clip=gan.clip, learning_rate=gan.learning_rate,
                      checkpoint_every=gan.checkpoint_every)


def trace_slope(trace, phase="critic", tail=0.2):
    """Least-squares slope of the loss over the last `tail` fraction of `phase` rows."""
    rows = trace[trace["phase"] == phase]
    rows = rows.iloc[int(len(rows) * (1.0 - tail)):]
    if len(rows) < 2:
        return float("nan")
    return float(np.polyfit(rows["iteration"].to_numpy(float), rows["loss"].to_numpy(float), 1)[0])


def run_train_gan(cfg, resume=False, force=False):
    stage = "train-gan"
    directory = stage_dir(cfg, stage)
    cfg_hash = config_hash(cfg.stage_dict("gan"))
    inputs = {"gen-dataset": _upstream_hash(cfg, "gen-dataset")}
    cached = _check_cache(stage, directory, cfg_hash, inputs, force)
    if cached:
        return cached

    start = time.time()
    images = read_dataset(stage_dir(cfg, "gen-dataset"))
    if not images:
        raise MissingArtifactError("dataset is empty; nothing to train the GAN on")
    data = np.stack([one_hot(im) for im in images])
    config = wgan_config(cfg)
    kwargs, previous = {}, None
    gen_path = directory / f"generator{CHECKPOINT_SUFFIX}"
    if resume and gen_path.exists():
        gen = load_checkpoint(gen_path)
        critic = load_checkpoint(directory / f"critic{CHECKPOINT_SUFFIX}")
        done = int(gen.extra.get("iteration", 0))
        if done < config.iterations:
            logger.info("resuming GAN at iteration %d", done)
            kwargs = dict(generator=gen.network, critic=critic.network, start_iteration=done,
                          optimizers=(gen.optimizer, critic.optimizer))
            if (directory / GAN_TRACE_FILE).exists():
                previous = pd.read_csv(directory / GAN_TRACE_FILE)
                previous = previous[previous["iteration"] < done]

    result = train_wgan(data, config, Rng(cfg.seed).substream("gan"), checkpoint_dir=directory, **kwargs)
    save_wgan(directory, result.generator, result.critic, result.generator_optimizer,
              result.critic_optimizer, config.iterations)
    trace = result.trace if previous is None else pd.concat([previous, result.trace], ignore_index=True)
    _write_csv(trace, directory / GAN_TRACE_FILE)

    summary = {"iterations": config.iterations, "critic_slope_last20": trace_slope(trace)}
    files = [f"generator{CHECKPOINT_SUFFIX}", f"critic{CHECKPOINT_SUFFIX}", GAN_TRACE_FILE]
    manifest = write_manifest(directory, stage, cfg_hash, inputs, files, time.time() - start, extra=summary)
    return StageResult(stage, directory, False, manifest, summary)


# --- train-cnn ---

def cnn_config(cfg):
    cnn = cfg.cnn
    return CnnConfig(iterations=cnn.iterations, learning_rate=cnn.learning_rate, split=tuple(cnn.split),
                     batch_tensile=cnn.batch_tensile, batch_shear=cnn.batch_shear, hidden=cnn.hidden)


def labeled_images(props, modes):
    """Image indices that have FEM properties for every mode, sorted."""
    have = props[props["mode_code"].isin([int(m) for m in modes])]
    counts = have.groupby("image_index")["mode_code"].nunique()
    return sorted(int(i) for i in counts[counts == len(modes)].index)


def mode_targets(props, mode, indices):
    rows = props[props["mode_code"] == int(mode)].set_index("image_index").loc[indices]
    return rows[["sigma_max_MPa", "eps_lim"]].to_numpy(float)


def _cnn_job(job):
    mode, x, targets, config, rng, split = job
    return mode, train_cnn(x, targets, mode, config, rng, split)


def run_train_cnn(cfg, resume=False, force=False):
    stage = "train-cnn"
    directory = stage_dir(cfg, stage)
    cfg_hash = config_hash(cfg.stage_dict("cnn"))
    inputs = {s: _upstream_hash(cfg, s) for s in ("gen-dataset", "fem-batch")}
    cached = _check_cache(stage, directory, cfg_hash, inputs, force)
    if cached:
        return cached

    start = time.time()
    images = read_dataset(stage_dir(cfg, "gen-dataset"))
    props = pd.read_csv(stage_dir(cfg, "fem-batch") / PROPS_FILE)
    modes = cfg.cpfem.mode_list
    indices = labeled_images(props, modes)
    config = cnn_config(cfg)
    split = split_indices(len(indices), config.split, Rng(cfg.seed).substream("cnn/split"))
    _save_json(directory / SPLIT_FILE, {k: [indices[i] for i in v] for k, v in split.items()})

    x = np.stack([one_hot(images[i]) for i in indices])
    root = Rng(cfg.seed)
    jobs = [(mode, x, mode_targets(props, mode, indices), config, root.substream(f"cnn/{mode.name}"), split)
            for mode in modes]

    files = [SPLIT_FILE, R2_FILE]
    r2_rows = []
    for mode, result in _imap(_cnn_job, jobs):
        name = mode.name
        save_checkpoint(directory / regressor_filename(mode), result.regressor, result.optimizer,
                        result.normalizer.to_dict(), {"mode": name, "iterations": config.iterations})
        _write_csv(result.trace, directory / f"cnn_trace_{name}.csv")

        targets = mode_targets(props, mode, indices)
        pred = predict_batch(result.regressor, result.normalizer, x)
        rows = []
        for part in ("train", "val", "test"):
            for i in split[part]:
                rows.append((part, indices[i], *targets[i], *pred[i]))
        _write_csv(pd.DataFrame(rows, columns=PREDICTION_COLUMNS), directory / f"predictions_{name}.csv")

        test = split["test"]
        r2 = []
        for q in range(2):
            try:
                r2.append(r_squared(pred[test, q], targets[test, q]))
            except UndefinedMetricError as exc:
                logger.warning("%s: %s", name, exc)
                r2.append(float("nan"))
        r2_rows.append((name, int(mode), *r2))
        logger.info("%s: test R^2 sigma_max %.3f, eps_lim %.3f", name, *r2)
        files += [regressor_filename(mode), f"cnn_trace_{name}.csv", f"predictions_{name}.csv"]

    r2_table = pd.DataFrame(r2_rows, columns=["mode", "mode_code", "r2_sigma_max", "r2_eps_lim"])
    _write_csv(r2_table, directory / R2_FILE)
    summary = {"images": len(indices), "modes": [m.name for m in modes],
               "r2": {row[0]: [row[2], row[3]] for row in r2_rows}}
    manifest = write_manifest(directory, stage, cfg_hash, inputs, files, time.time() - start, extra=summary)
    return StageResult(stage, directory, False, manifest, summary)


# --- search ---

def _models(cfg):
    return load_models(stage_dir(cfg, "train-gan") / f"generator{CHECKPOINT_SUFFIX}", stage_dir(cfg, "train-cnn"))


def run_search(cfg, resume=False, force=False):
    from pipeline.report import render_search_report

    stage = "search"
    directory = stage_dir(cfg, stage)
    cfg_hash = config_hash(cfg.stage_dict("search"))
    inputs = {s: _upstream_hash(cfg, s) for s in ("train-gan", "train-cnn")}
    cached = _check_cache(stage, directory, cfg_hash, inputs, force)
    if cached:
        return cached

    start = time.time()
    models = _models(cfg)
    result = random_search(cfg.search.n_iter, models, Rng(cfg.seed).substream("search"))
    _write_csv(result.trace, directory / SEARCH_TRACE_FILE)
    write_dataset(directory / "best", [result.best_image], cfg.seed)
    write_ppm(directory / "best.ppm", result.best_image)

    files = [SEARCH_TRACE_FILE, "best/" + image_filename(0), "best/" + DATASET_MANIFEST, "best.ppm",
             SUMMARY_FILE, "search_report.md"]
    for mode, table in heatmap_scores(models, cfg.search.heatmap_resolution).items():
        _write_csv(table, directory / f"heatmap_{mode.name}.csv")
        files.append(f"heatmap_{mode.name}.csv")

    predicted = predicted_props(result.best_image, models)
    summary = dict(result.summary(), martensite_fraction=martensite_fraction(result.best_image))
    summary["predicted"] = {
        mode.name: {"sigma_max_MPa": p.sigma_max, "eps_lim": p.eps_lim,
                    "score": score(p, models.normalizers[mode])}
        for mode, p in predicted.items()
    }
    _save_json(directory / SUMMARY_FILE, summary)
    render_search_report(directory / "search_report.md", summary)

    manifest = write_manifest(directory, stage, cfg_hash, inputs, files, time.time() - start,
                              extra={k: summary[k] for k in ("best_mode", "best_score", "best_z")})
    return StageResult(stage, directory, False, manifest, summary)


# --- verify ---

def _rel_error(a, b):
    return abs(a - b) / abs(b) if b != 0 else float("nan")


def compare_props(cnn, fem, normalizer):
    """CNN vs FEM rows (quantity, cnn, fem, rel_error). Without necking only sigma_max is compared."""
    cnn_score = score(cnn, normalizer)
    fem_score = score(fem, normalizer)
    rows = [("sigma_max_MPa", cnn.sigma_max, fem.sigma_max, _rel_error(cnn.sigma_max, fem.sigma_max))]
    limited = not fem.necking_detected
    rows.append(("eps_lim", cnn.eps_lim, fem.eps_lim,
                 float("nan") if limited else _rel_error(cnn.eps_lim, fem.eps_lim)))
    rows.append(("score", cnn_score, fem_score,
                 float("nan") if limited else _rel_error(cnn_score, fem_score)))
    return pd.DataFrame(rows, columns=VERIFY_COLUMNS), limited


def run_verify(cfg, resume=False, force=False):
    from pipeline.report import render_verify_report

    stage = "verify"
    directory = stage_dir(cfg, stage)
    cfg_hash = config_hash(cfg.stage_dict("cpfem", "phasefield"))
    inputs = {s: _upstream_hash(cfg, s) for s in ("search", "train-cnn")}
    cached = _check_cache(stage, directory, cfg_hash, inputs, force)
    if cached:
        return cached

    start = time.time()
    search_dir = stage_dir(cfg, "search")
    summary = _load_json(search_dir / SUMMARY_FILE)
    if summary is None:
        raise MissingArtifactError(f"search summary missing in {search_dir}")
    image = read_dataset(search_dir / "best")[0]
    mode = DeformationMode.parse(summary["best_mode"])

    models = _models(cfg)
    cnn = predicted_props(image, models)[mode]
    fem = simulate(image, mode, load_materials(cfg.cpfem.materials), simulation_control(cfg))
    table, limited = compare_props(cnn, fem.props, models.normalizers[mode])
    if limited:
        logger.warning("no necking in the verification run; comparison limited to sigma_max")

    _write_csv(table, directory / VERIFY_FILE)
    _write_csv(fem.curve, directory / "verify_curve.csv")
    result = {"mode": mode.name, "necking_detected": not limited,
              "rows": table.to_dict(orient="records")}
    render_verify_report(directory / "verify_report.md", result)

    files = [VERIFY_FILE, "verify_curve.csv", "verify_report.md"]
    extra = {"mode": mode.name, "necking_detected": not limited,
             "rel_errors": dict(zip(table["quantity"], table["rel_error"]))}
    manifest = write_manifest(directory, stage, cfg_hash, inputs, files, time.time() - start, extra=extra)
    return StageResult(stage, directory, False, manifest, extra)


# --- compare-sampling ---

def run_compare_sampling(cfg, resume=False, force=False):
    stage = "compare-sampling"
    directory = stage_dir(cfg, stage)
    cfg_hash = config_hash(cfg.stage_dict("search"))
    inputs = {s: _upstream_hash(cfg, s) for s in ("train-gan", "train-cnn")}
    cached = _check_cache(stage, directory, cfg_hash, inputs, force)
    if cached:
        return cached

    start = time.time()
    s = cfg.search
    table = compare_sampling(_models(cfg), Rng(cfg.seed).substream("compare"), tuple(s.compare_n_grid),
                             s.compare_repeats, s.reference_points)
    _write_csv(table, directory / COMPARE_FILE)
    summary = {"rows": len(table)}
    manifest = write_manifest(directory, stage, cfg_hash, inputs, [COMPARE_FILE], time.time() - start,
                              extra=summary)
    return StageResult(stage, directory, False, manifest, summary)


# --- report ---

def run_report(cfg, resume=False, force=False):
    from pipeline.report import build_report

    stage = "report"
    directory = stage_dir(cfg, stage)
    inputs = {}
    for upstream in STAGE_DIRS:
        if upstream == stage:
            continue
        manifest = read_manifest(stage_dir(cfg, upstream))
        if manifest is not None:
            inputs[upstream] = manifest.output_hash()
    cfg_hash = config_hash(cfg.stage_dict("search"))
    cached = _check_cache(stage, directory, cfg_hash, inputs, force)
    if cached:
        return cached

    start = time.time()
    files, missing = build_report(cfg, directory)
    summary = {"files": len(files), "missing": missing}
    manifest = write_manifest(directory, stage, cfg_hash, inputs, files, time.time() - start, extra=summary)
    return StageResult(stage, directory, False, manifest, summary)


STAGES = {
    "gen-dataset": run_gen_dataset,
    "fem-batch": run_fem_batch,
    "train-gan": run_train_gan,
    "train-cnn": run_train_cnn,
    "search": run_search,
    "verify": run_verify,
    "compare-sampling": run_compare_sampling,
    "report": run_report,
}


def describe(result):
    return json.dumps(result.summary, sort_keys=True, default=str)
