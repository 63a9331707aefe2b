"""
Microstructure dataset directory I/O.

Layout:
    <dir>/manifest.json       schema version, grid size, label legend, seed
    <dir>/img_00000.lbl       raw uint8 labels, row-major, one per image
"""
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from config.settings import DATASET_MANIFEST, DATASET_SCHEMA_VERSION
from core.errors import CheckpointError, MissingArtifactError
from core.labeling import to_rgb
from core.types import LABEL_LEGEND, MicrostructureImage

logger = logging.getLogger(__name__)


def image_filename(index):
    return f"img_{index:05d}.lbl"


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _load_json(filepath, default=None):
    if filepath.exists():
        try:
            with open(filepath) as f:
                return json.load(f)
        except (json.JSONDecodeError, IOError) as e:
            logger.warning("unreadable JSON %s: %s", filepath, e)
            return default
    return default


def _save_json(filepath, data):
    filepath.parent.mkdir(parents=True, exist_ok=True)
    tmp = filepath.with_suffix(filepath.suffix + ".tmp")
    with open(tmp, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True, default=str)
        f.write("\n")
    os.replace(tmp, filepath)


def write_dataset(directory, images, seed, extra=None):
    """
    Write images in dataset format. Returns the manifest dict.
    `extra` is merged into the manifest (e.g. snapshot interval, IC table).
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if images:
        height, width = images[0].height, images[0].width
    else:
        height = width = 0

    files = []
    for index, image in enumerate(images):
        if (image.height, image.width) != (height, width):
            raise CheckpointError(f"image {index} is {image.height}x{image.width}, dataset is {height}x{width}")
        name = image_filename(index)
        path = directory / name
        path.write_bytes(np.ascontiguousarray(image.labels, dtype="<u1").tobytes())
        files.append({"file": name, "sha256": sha256_file(path)})

    manifest = {
        "schema_version": DATASET_SCHEMA_VERSION,
        "grid": {"width": width, "height": height},
        "label_legend": {str(k): v for k, v in LABEL_LEGEND.items()},
        "provenance_seed": int(seed),
        "count": len(images),
        "images": files,
    }
    if extra:
        manifest.update(extra)
    _save_json(directory / DATASET_MANIFEST, manifest)
    return manifest


def read_manifest(directory):
    path = Path(directory) / DATASET_MANIFEST
    manifest = _load_json(path)
    if manifest is None:
        raise MissingArtifactError(f"dataset manifest not found: {path}")
    if manifest.get("schema_version") != DATASET_SCHEMA_VERSION:
        raise CheckpointError(f"unsupported dataset schema {manifest.get('schema_version')}")
    return manifest


def read_dataset(directory):
    """Load every image listed in the manifest, in index order."""
    directory = Path(directory)
    manifest = read_manifest(directory)
    height = manifest["grid"]["height"]
    width = manifest["grid"]["width"]
    images = []
    for entry in manifest["images"]:
        path = directory / entry["file"]
        if not path.exists():
            raise MissingArtifactError(f"dataset image missing: {path}")
        raw = np.frombuffer(path.read_bytes(), dtype="<u1")
        if raw.size != height * width:
            raise CheckpointError(f"{path.name}: expected {height * width} bytes, got {raw.size}")
        images.append(MicrostructureImage(raw.reshape(height, width)))
    return images


def write_ppm(path, image, scale=8):
    """Binary PPM preview (P6), each pixel drawn as a scale x scale block."""
    rgb = to_rgb(image)
    if scale > 1:
        rgb = np.repeat(np.repeat(rgb, scale, axis=0), scale, axis=1)
    h, w, _ = rgb.shape
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(rgb.tobytes())
