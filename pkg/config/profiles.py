"""
Pipeline presets and JSON config loading.

    paper : full-scale campaign (170 ICs x 10 snapshots, 1e6 GAN iterations)
    desk  : CI-scale campaign that exercises every stage

A JSON file is deep-merged over the chosen preset, then --seed / --out
overrides are applied and the result is validated into a PipelineConfig.
"""
import copy
import hashlib
import json
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from config.settings import (
    CNN_BATCH_SHEAR, CNN_BATCH_TENSILE, CNN_ITERATIONS, CNN_LEARNING_RATE, CNN_N_IMAGES, CNN_SPLIT,
    COMPARE_N_GRID, COMPARE_REFERENCE_POINTS, COMPARE_REPEATS, FEM_MAX_STRAIN, FEM_STRAIN_INCREMENT,
    GAN_BATCH_SIZE, GAN_CHECKPOINT_EVERY, GAN_CLIP, GAN_CYCLE, GAN_ITERATIONS, GAN_LEARNING_RATE,
    HEATMAP_RESOLUTION, IMAGE_SIZE, MICROFORGE_OUT, MICROFORGE_SEED, PF_EIGENSTRAIN_A,
    PF_EIGENSTRAIN_B, PF_N_INITIAL_CONDITIONS, PF_N_SNAPSHOTS, PF_SNAPSHOT_INTERVAL, SEARCH_ITERATIONS,
)
from core.errors import ConfigError, MissingArtifactError
from core.types import DeformationMode

# --- Presets ---
PAPER = {
    "seed": MICROFORGE_SEED,
    "phasefield": {
        "n_initial_conditions": PF_N_INITIAL_CONDITIONS,
        "n_snapshots": PF_N_SNAPSHOTS,
        "snapshot_interval": PF_SNAPSHOT_INTERVAL,
        "grid_size": IMAGE_SIZE,
        "eps_a": PF_EIGENSTRAIN_A,
        "eps_b": PF_EIGENSTRAIN_B,
    },
    "cpfem": {
        "modes": [m.name for m in DeformationMode],
        "n_images": CNN_N_IMAGES,
        "strain_increment": FEM_STRAIN_INCREMENT,
        "max_strain": FEM_MAX_STRAIN,
        "field_interval": 0,
        "materials": {},
    },
    "gan": {
        "iterations": GAN_ITERATIONS,
        "batch_size": GAN_BATCH_SIZE,
        "cycle": GAN_CYCLE,
        "clip": GAN_CLIP,
        "learning_rate": GAN_LEARNING_RATE,
        "checkpoint_every": GAN_CHECKPOINT_EVERY,
    },
    "cnn": {
        "iterations": CNN_ITERATIONS,
        "learning_rate": CNN_LEARNING_RATE,
        "split": list(CNN_SPLIT),
        "batch_tensile": CNN_BATCH_TENSILE,
        "batch_shear": CNN_BATCH_SHEAR,
        "hidden": 64,
    },
    "search": {
        "n_iter": SEARCH_ITERATIONS,
        "heatmap_resolution": HEATMAP_RESOLUTION,
        "compare_n_grid": list(COMPARE_N_GRID),
        "compare_repeats": COMPARE_REPEATS,
        "reference_points": COMPARE_REFERENCE_POINTS,
    },
}

DESK_OVERRIDES = {
    "phasefield": {"n_initial_conditions": 20, "n_snapshots": 5},
    "cpfem": {"n_images": 100, "strain_increment": 2.0e-3},
    "gan": {"iterations": 5000, "checkpoint_every": 1000},
    "cnn": {"split": [80, 10, 10]},
    "search": {"n_iter": 2000, "heatmap_resolution": 41},
}


def deep_merge(base, override):
    """Recursive dict merge; override wins, base is not modified."""
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


PROFILES = {
    "paper": PAPER,
    "desk": deep_merge(PAPER, DESK_OVERRIDES),
}


# --- Typed sections ---

@dataclass(frozen=True)
class PhaseFieldSection:
    n_initial_conditions: int
    n_snapshots: int
    snapshot_interval: int
    grid_size: int
    eps_a: float
    eps_b: float

    def validate(self):
        if self.n_initial_conditions < 1 or self.n_snapshots < 1:
            raise ConfigError("phasefield needs at least one IC and one snapshot")
        if self.snapshot_interval < 0:
            raise ConfigError("phasefield.snapshot_interval must be >= 0")
        if self.grid_size < 4 or self.grid_size & (self.grid_size - 1):
            raise ConfigError("phasefield.grid_size must be a power of two >= 4")

    @property
    def n_images(self):
        return self.n_initial_conditions * self.n_snapshots


@dataclass(frozen=True)
class CpfemSection:
    modes: tuple
    n_images: int
    strain_increment: float
    max_strain: float
    field_interval: int
    materials: dict

    def validate(self):
        if not self.modes:
            raise ConfigError("cpfem.modes is empty")
        for m in self.modes:
            DeformationMode.parse(m)
        if self.n_images < 1:
            raise ConfigError("cpfem.n_images must be >= 1")
        if not 0 < self.strain_increment < self.max_strain:
            raise ConfigError("need 0 < cpfem.strain_increment < cpfem.max_strain")
        unknown = set(self.materials) - {"ferrite", "martensite"}
        if unknown:
            raise ConfigError(f"unknown phases in cpfem.materials: {sorted(unknown)}")

    @property
    def mode_list(self):
        return [DeformationMode.parse(m) for m in self.modes]


@dataclass(frozen=True)
class GanSection:
    iterations: int
    batch_size: int
    cycle: int
    clip: float
    learning_rate: float
    checkpoint_every: int

    def validate(self):
        if self.iterations < 1 or self.batch_size < 1 or self.cycle < 2:
            raise ConfigError("gan: iterations, batch_size >= 1 and cycle >= 2 required")
        if not self.clip > 0 or not self.learning_rate > 0:
            raise ConfigError("gan: clip and learning_rate must be positive")


@dataclass(frozen=True)
class CnnSection:
    iterations: int
    learning_rate: float
    split: tuple
    batch_tensile: int
    batch_shear: int
    hidden: int

    def validate(self):
        if len(self.split) != 3 or min(self.split) < 1:
            raise ConfigError(f"cnn.split needs three positive sizes, got {list(self.split)}")
        if self.iterations < 1 or self.batch_tensile < 1 or self.batch_shear < 1:
            raise ConfigError("cnn: iterations and batch sizes must be >= 1")


@dataclass(frozen=True)
class SearchSection:
    n_iter: int
    heatmap_resolution: int
    compare_n_grid: tuple
    compare_repeats: int
    reference_points: int

    def validate(self):
        if self.n_iter < 1:
            raise ConfigError("search.n_iter must be >= 1")
        if self.heatmap_resolution < 2:
            raise ConfigError("search.heatmap_resolution must be >= 2")
        if not self.compare_n_grid or min(self.compare_n_grid) < 1 or self.compare_repeats < 1:
            raise ConfigError("search: compare grid and repeats must be positive")


SECTIONS = {
    "phasefield": PhaseFieldSection,
    "cpfem": CpfemSection,
    "gan": GanSection,
    "cnn": CnnSection,
    "search": SearchSection,
}


def _section(cls, name, data):
    if not isinstance(data, dict):
        raise ConfigError(f"config section '{name}' must be an object")
    expected = {f.name for f in fields(cls)}
    unknown = set(data) - expected
    missing = expected - set(data)
    if unknown:
        raise ConfigError(f"unknown keys in '{name}': {sorted(unknown)}")
    if missing:
        raise ConfigError(f"missing keys in '{name}': {sorted(missing)}")
    values = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
    try:
        section = cls(**values)
    except TypeError as exc:
        raise ConfigError(f"invalid '{name}' section: {exc}") from None
    section.validate()
    return section


@dataclass(frozen=True)
class PipelineConfig:
    seed: int
    out: str
    phasefield: PhaseFieldSection
    cpfem: CpfemSection
    gan: GanSection
    cnn: CnnSection
    search: SearchSection
    profile: str = "custom"

    @classmethod
    def from_dict(cls, data, profile="custom"):
        unknown = set(data) - set(SECTIONS) - {"seed", "out"}
        if unknown:
            raise ConfigError(f"unknown top-level config keys: {sorted(unknown)}")
        try:
            seed = int(data["seed"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError("config needs an integer 'seed'") from None
        if seed < 0:
            raise ConfigError("seed must be non-negative")
        sections = {name: _section(cls_, name, data.get(name)) for name, cls_ in SECTIONS.items()}
        cfg = cls(seed=seed, out=str(data.get("out") or MICROFORGE_OUT), profile=profile, **sections)
        if cfg.cpfem.n_images > cfg.phasefield.n_images:
            raise ConfigError(
                f"cpfem.n_images ({cfg.cpfem.n_images}) exceeds the dataset size ({cfg.phasefield.n_images})"
            )
        if sum(cfg.cnn.split) > cfg.cpfem.n_images:
            raise ConfigError(f"cnn.split {list(cfg.cnn.split)} needs more than {cfg.cpfem.n_images} labeled images")
        return cfg

    def to_dict(self):
        data = asdict(self)
        data.pop("profile")
        return json.loads(json.dumps(data))

    def stage_dict(self, *names):
        """Sub-config that a stage's cache key depends on."""
        data = self.to_dict()
        return {"seed": data["seed"], **{n: data[n] for n in names}}

    @property
    def out_dir(self):
        return Path(self.out)


def canonical_json(data):
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def config_hash(data):
    """SHA-256 of the canonical JSON form (output root excluded)."""
    if isinstance(data, PipelineConfig):
        data = data.to_dict()
    data = {k: v for k, v in data.items() if k != "out"}
    return hashlib.sha256(canonical_json(data).encode("utf-8")).hexdigest()


def load_config(path=None, profile="desk", seed=None, out=None):
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile '{profile}' (choose from {', '.join(PROFILES)})")
    data = copy.deepcopy(PROFILES[profile])
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise MissingArtifactError(f"config file not found: {path}")
        try:
            user = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path.name}: invalid JSON ({exc})") from None
        if not isinstance(user, dict):
            raise ConfigError(f"{path.name}: top level must be an object")
        data = deep_merge(data, user)
    if seed is not None:
        data["seed"] = seed
    if out is not None:
        data["out"] = str(out)
    return PipelineConfig.from_dict(data, profile=profile)


def save_config(cfg, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
    return path
