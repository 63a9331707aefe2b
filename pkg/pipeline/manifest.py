"""
Per-stage run manifests and cache checks.

Every stage directory holds run_manifest.json:
    stage, config_hash, inputs {name: sha256}, outputs [{file, sha256}],
    failures, wall_time_s, tool_version, created_at
A stage whose config hash and input hashes match, and whose listed outputs
still verify, is skipped.
"""
import hashlib
import logging
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from config.settings import RUN_MANIFEST, TOOL_VERSION
from core.dataset_io import _load_json, _save_json, sha256_file
from core.errors import MissingArtifactError

logger = logging.getLogger(__name__)


@dataclass
class RunManifest:
    stage: str
    config_hash: str
    inputs: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    wall_time_s: float = 0.0
    tool_version: str = TOOL_VERSION
    created_at: str = ""
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data):
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data}
        return cls(**known)

    def output_hash(self):
        """Combined digest of the stage's outputs (used as a downstream input hash)."""
        h = hashlib.sha256()
        for entry in sorted(self.outputs, key=lambda e: e["file"]):
            h.update(f"{entry['file']}:{entry['sha256']}\n".encode("utf-8"))
        return h.hexdigest()


def manifest_path(stage_dir):
    return Path(stage_dir) / RUN_MANIFEST


def read_manifest(stage_dir):
    data = _load_json(manifest_path(stage_dir))
    return RunManifest.from_dict(data) if data else None


def require_manifest(stage_dir, stage):
    manifest = read_manifest(stage_dir)
    if manifest is None:
        raise MissingArtifactError(f"stage '{stage}' has no run manifest in {stage_dir} (run it first)")
    return manifest


def hash_outputs(stage_dir, files):
    stage_dir = Path(stage_dir)
    out = []
    for name in sorted(set(files)):
        path = stage_dir / name
        if path.exists():
            out.append({"file": name, "sha256": sha256_file(path)})
    return out


def outputs_verify(stage_dir, manifest):
    stage_dir = Path(stage_dir)
    for entry in manifest.outputs:
        path = stage_dir / entry["file"]
        if not path.exists() or sha256_file(path) != entry["sha256"]:
            return False
    return True


def is_cached(stage_dir, cfg_hash, inputs):
    manifest = read_manifest(stage_dir)
    if manifest is None:
        return None
    if manifest.config_hash != cfg_hash or manifest.inputs != inputs:
        return None
    if manifest.failures or not outputs_verify(stage_dir, manifest):
        return None
    return manifest


def write_manifest(stage_dir, stage, cfg_hash, inputs, files, wall_time_s, failures=None, extra=None):
    stage_dir = Path(stage_dir)
    manifest = RunManifest(
        stage=stage,
        config_hash=cfg_hash,
        inputs=dict(inputs),
        outputs=hash_outputs(stage_dir, files),
        failures=list(failures or []),
        wall_time_s=round(float(wall_time_s), 3),
        created_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        extra=dict(extra or {}),
    )
    _save_json(manifest_path(stage_dir), asdict(manifest))
    logger.debug("%s: manifest with %d outputs", stage, len(manifest.outputs))
    return manifest
