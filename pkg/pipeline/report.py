"""
Markdown / CSV / PNG reporting over whatever stage outputs exist.

Templates live in pipeline/templates. Figures use the Agg backend and are saved
without the Software tag so reruns produce identical bytes.
"""
import logging
import math
import sys
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd
from jinja2 import Environment, FileSystemLoader
from scipy.stats import spearmanr

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from config.settings import (
    CHECKPOINT_SUFFIX, COMPARE_FILE, MATCHED_FRACTION_TOLERANCE, PROPS_FILE, SEARCH_TRACE_FILE, TOOL_VERSION,
)
from core.dataset_io import _load_json
from core.types import DeformationMode
from neuralnet.checkpoint import load_checkpoint
from neuralnet.wgan import latent_fraction_map
from pipeline.manifest import read_manifest

logger = logging.getLogger(__name__)

TEMPLATE_DIR = Path(__file__).resolve().parent / "templates"
SCATTER_COLUMNS = ["image_index", "martensite_fraction", "sigma_max_MPa", "eps_lim", "necking_detected"]
MATCHED_COLUMNS = ["image_index", "martensite_fraction", "fraction_gap"]
LATENT_RESOLUTION = 21


# --- Rendering ---

def _fmt(value, digits=4):
    if value is None:
        return "n/a"
    if isinstance(value, float):
        if math.isnan(value):
            return "n/a"
        return f"{value:.{digits}g}"
    return str(value)


def _pct(value):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "n/a"
    return f"{100.0 * value:.2f}%"


_env = Environment(
    loader=FileSystemLoader(str(TEMPLATE_DIR)),
    trim_blocks=True,
    lstrip_blocks=True,
    keep_trailing_newline=True,
)
_env.filters["fmt"] = _fmt
_env.filters["pct"] = _pct


def render(template, path, **context):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = _env.get_template(template).render(tool_version=TOOL_VERSION, **context)
    path.write_text(text)
    return path


def render_search_report(path, summary):
    return render("search_report.md.j2", path, summary=summary)


def render_verify_report(path, result):
    return render("verify_report.md.j2", path, result=result)


# --- Figures ---

def _figure(width=6.0):
    golden = (math.sqrt(5) - 1.0) / 2.0
    fig, ax = plt.subplots(figsize=(width, width * golden), facecolor="w")
    return fig, ax


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_scatter(table, mode, path):
    fig, ax = _figure()
    points = ax.scatter(table["eps_lim"], table["sigma_max_MPa"], c=table["martensite_fraction"],
                        cmap="viridis", vmin=0.0, vmax=1.0, s=18)
    fig.colorbar(points, ax=ax, label="martensite fraction")
    ax.set_xlabel("limit strain")
    ax.set_ylabel("max stress (MPa)")
    ax.set_title(DeformationMode.parse(mode).name)
    return _save(fig, path)


def plot_history(trace, path):
    fig, ax = _figure()
    ax.plot(trace["iteration"], trace["best_so_far"], color="k", lw=1.2)
    ax.set_xscale("log")
    ax.set_xlabel("iteration")
    ax.set_ylabel("best score")
    return _save(fig, path)


def plot_heatmap(table, mode, path):
    n = int(round(math.sqrt(len(table))))
    grid = table["score"].to_numpy().reshape(n, n)
    fig, ax = _figure()
    image = ax.imshow(grid.T, origin="lower", extent=(0, 100, 0, 100), cmap="magma", aspect="auto")
    fig.colorbar(image, ax=ax, label="score")
    ax.set_xlabel("z1")
    ax.set_ylabel("z2")
    ax.set_title(DeformationMode.parse(mode).name)
    return _save(fig, path)


def plot_compare(table, path):
    fig, ax = _figure()
    for strategy, style in (("random", "o-"), ("space_filling", "s--")):
        rows = table[table["strategy"] == strategy]
        ax.errorbar(rows["n_points"], rows["mean_error"], yerr=rows["std_error"], fmt=style,
                    capsize=3, label=strategy.replace("_", " "))
    ax.set_xlabel("points evaluated")
    ax.set_ylabel("score error")
    ax.legend(frameon=False)
    return _save(fig, path)


# --- Tables ---

def matched_fraction(fractions, target, tol=MATCHED_FRACTION_TOLERANCE):
    """Dataset images whose martensite fraction lies within +-tol of target."""
    fractions = pd.DataFrame(fractions)
    if fractions.empty:
        return pd.DataFrame(columns=MATCHED_COLUMNS)
    gap = (fractions["martensite_fraction"] - float(target)).abs()
    out = fractions.assign(fraction_gap=gap)[gap <= tol + 1e-12]
    return out[MATCHED_COLUMNS].sort_values("image_index").reset_index(drop=True)


def scatter_table(props, mode):
    rows = props[props["mode_code"] == int(mode)]
    return rows[SCATTER_COLUMNS].reset_index(drop=True)


def trend(table):
    """Spearman rank correlations of sigma_max and eps_lim against fraction."""
    if len(table) < 3 or table["martensite_fraction"].nunique() < 2:
        return {"sigma_max": float("nan"), "eps_lim": float("nan")}
    f = table["martensite_fraction"]
    return {
        "sigma_max": float(spearmanr(f, table["sigma_max_MPa"])[0]),
        "eps_lim": float(spearmanr(f, table["eps_lim"])[0]),
    }


def _read_csv(path):
    return pd.read_csv(path) if Path(path).exists() else None


# --- Report ---

def build_report(cfg, directory):
    """Write report.md plus CSV/PNG companions. Returns (files, missing artifacts)."""
    from pipeline.stages import FRACTIONS_FILE, R2_FILE, STAGE_DIRS, SUMMARY_FILE, VERIFY_FILE, stage_dir

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files, missing = [], []
    ctx = {"seed": cfg.seed, "profile": cfg.profile, "stages": [], "modes": []}

    for stage in STAGE_DIRS:
        if stage == "report":
            continue
        manifest = read_manifest(stage_dir(cfg, stage))
        ctx["stages"].append({"stage": stage, "present": manifest is not None,
                              "failures": len(manifest.failures) if manifest else 0})

    def need(path, label):
        if not Path(path).exists():
            missing.append(label)
            return False
        return True

    fractions = None
    frac_path = stage_dir(cfg, "gen-dataset") / FRACTIONS_FILE
    if need(frac_path, f"gen-dataset/{FRACTIONS_FILE}"):
        fractions = pd.read_csv(frac_path)
        f = fractions["martensite_fraction"]
        ctx["dataset"] = {"images": len(fractions), "fraction_min": float(f.min()) if len(f) else None,
                          "fraction_max": float(f.max()) if len(f) else None,
                          "fraction_mean": float(f.mean()) if len(f) else None}

    props_path = stage_dir(cfg, "fem-batch") / PROPS_FILE
    props = pd.read_csv(props_path) if need(props_path, f"fem-batch/{PROPS_FILE}") else None
    if props is not None:
        for mode in cfg.cpfem.mode_list:
            table = scatter_table(props, mode)
            name = f"scatter_{mode.name}"
            table.to_csv(directory / f"{name}.csv", index=False)
            files.append(f"{name}.csv")
            if len(table):
                plot_scatter(table, mode, directory / f"{name}.png")
                files.append(f"{name}.png")
            ctx["modes"].append({"mode": mode.name, "pairs": len(table), "trend": trend(table)})

    r2 = _read_csv(stage_dir(cfg, "train-cnn") / R2_FILE)
    if r2 is None:
        missing.append(f"train-cnn/{R2_FILE}")
    else:
        ctx["r2"] = r2.to_dict(orient="records")

    gen_path = stage_dir(cfg, "train-gan") / f"generator{CHECKPOINT_SUFFIX}"
    if need(gen_path, f"train-gan/generator{CHECKPOINT_SUFFIX}"):
        atlas = latent_fraction_map(load_checkpoint(gen_path).network, LATENT_RESOLUTION)
        atlas.to_csv(directory / "latent_fraction.csv", index=False)
        files.append("latent_fraction.csv")
        gan_manifest = read_manifest(stage_dir(cfg, "train-gan"))
        ctx["gan"] = dict(gan_manifest.extra) if gan_manifest else {}

    search_dir = stage_dir(cfg, "search")
    summary = _load_json(search_dir / SUMMARY_FILE)
    if summary is None:
        missing.append(f"search/{SUMMARY_FILE}")
    else:
        ctx["search"] = summary
        trace = _read_csv(search_dir / SEARCH_TRACE_FILE)
        if trace is not None and len(trace):
            plot_history(trace, directory / "search_history.png")
            files.append("search_history.png")
        for mode in DeformationMode:
            heat = _read_csv(search_dir / f"heatmap_{mode.name}.csv")
            if heat is not None and len(heat):
                plot_heatmap(heat, mode, directory / f"heatmap_{mode.name}.png")
                files.append(f"heatmap_{mode.name}.png")
        if fractions is not None:
            matched = matched_fraction(fractions, summary["martensite_fraction"])
            if props is not None:
                best = props[props["mode_code"] == summary["best_mode_code"]]
                matched = matched.merge(best[["image_index", "sigma_max_MPa", "eps_lim"]],
                                        on="image_index", how="left")
            matched.to_csv(directory / "matched.csv", index=False)
            files.append("matched.csv")
            ctx["matched"] = matched.to_dict(orient="records")

    verify = _read_csv(stage_dir(cfg, "verify") / VERIFY_FILE)
    if verify is None:
        missing.append(f"verify/{VERIFY_FILE}")
    else:
        ctx["verify"] = verify.to_dict(orient="records")

    compare = _read_csv(stage_dir(cfg, "compare-sampling") / COMPARE_FILE)
    if compare is None:
        missing.append(f"compare-sampling/{COMPARE_FILE}")
    else:
        ctx["compare"] = compare.to_dict(orient="records")
        if len(compare):
            plot_compare(compare, directory / "compare.png")
            files.append("compare.png")

    if missing:
        logger.warning("report is partial; missing: %s", ", ".join(missing))
    render("report.md.j2", directory / "report.md", missing=missing, **ctx)
    files.append("report.md")
    return files, missing
